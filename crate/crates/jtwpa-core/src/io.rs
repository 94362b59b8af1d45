//! JSON interchange for graphs and Gaussian states, plus a deterministic
//! serializer that prints every float with 17 significant digits so that
//! exported values re-ingest bit-exactly.

use crate::cluster::{ClusterGraph, GaussianState};
use crate::error::{Error, Result};
use crate::linalg::{RMat, RVec};
use serde::{Deserialize, Serialize};

/// Wire form of a cluster graph: `{"n": .., "edges": [[v, w, weight], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&ClusterGraph> for GraphJson {
    fn from(g: &ClusterGraph) -> Self {
        Self { n: g.n(), edges: g.edges() }
    }
}

impl GraphJson {
    pub fn to_graph(&self) -> Result<ClusterGraph> {
        ClusterGraph::from_edges(self.n, &self.edges)
    }
}

pub fn parse_graph_json(text: &str) -> Result<ClusterGraph> {
    let parsed: GraphJson =
        serde_json::from_str(text).map_err(|e| Error::GraphIo(e.to_string()))?;
    parsed.to_graph()
}

pub fn graph_to_json_string(g: &ClusterGraph) -> String {
    to_json_string(&GraphJson::from(g)).expect("graph serialization cannot fail")
}

/// Wire form of a Gaussian state with its nullifier variances:
/// mean, row-major covariance, and one variance per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianStateJson {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    pub nullifier_variances: Vec<f64>,
}

impl GaussianStateJson {
    pub fn new(state: &GaussianState, nullifier_variances: Vec<f64>) -> Self {
        let dim = state.mean.len();
        let mut cov = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                cov.push(state.cov[(i, j)]);
            }
        }
        Self { mean: state.mean.as_slice().to_vec(), cov, nullifier_variances }
    }

    pub fn to_state(&self) -> Result<GaussianState> {
        let dim = self.mean.len();
        if self.cov.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "covariance has {} entries, expected {}",
                self.cov.len(),
                dim * dim
            )));
        }
        let cov = RMat::from_fn(dim, dim, |i, j| self.cov[i * dim + j]);
        GaussianState::try_new(RVec::from_vec(self.mean.clone()), cov)
    }
}

pub fn parse_gaussian_state_json(text: &str) -> Result<GaussianStateJson> {
    serde_json::from_str(text).map_err(|e| Error::GraphIo(e.to_string()))
}

/// serde_json formatter that writes every f64 as `{:.16e}` (17 significant
/// digits), enough to round-trip any double exactly.
pub struct Float17Formatter;

impl serde_json::ser::Formatter for Float17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if !value.is_finite() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "non-finite float in JSON export",
            ));
        }
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with 17-significant-digit floats and stable field order.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Float17Formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Numerical(format!("JSON serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Numerical(format!("non-utf8 JSON: {e}")))
}
