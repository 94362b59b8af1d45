//! Dissipative preparation of continuous-variable cluster states.
//!
//! A cluster state over a weighted graph `A` is the joint null state of the
//! nullifiers `y_v - sum_w a_vw x_w`. When the graph is bicolorable and
//! self-inverse (`A^2 = I`), a multimode squeezed bath drives `n` bosonic
//! modes into a Gaussian steady state whose nullifier variances shrink as
//! `e^{-2r}` with the source squeezing `r`.
//!
//! Conventions: quadratures are ordered `(x_1..x_n, y_1..y_n)` with
//! `x = (c + c+)/sqrt(2)`, `y = -i(c - c+)/sqrt(2)`, vacuum variance 1/2,
//! and symplectic form `[[0, I], [-I, 0]]`. For Lindblad operators that are
//! linear in the quadratures, `L_j = w_j^T R`, the covariance obeys
//! `sigma' = A sigma + sigma A^T + D` with `A = -Omega Im(C)`,
//! `D = Omega Re(C) Omega^T`, `C = sum_j w_j w_j^dagger`; the steady state
//! solves the continuous Lyapunov equation.

use crate::error::{Error, Result};
use crate::linalg::{c, lyapunov, max_real_eigenvalue, CMat, CVec, C64, RMat, RVec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Weighted simple graph with |weights| <= 1 and zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGraph {
    adjacency: RMat,
}

impl ClusterGraph {
    pub fn try_new(adjacency: RMat) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n || n == 0 {
            return Err(Error::Dimension("adjacency must be square and non-empty".into()));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "adjacency diagonal must vanish, a[{i}][{i}] = {}",
                    adjacency[(i, i)]
                )));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if !a.is_finite() || a.abs() > 1.0 + 1e-14 {
                    return Err(Error::InvalidParameter(format!(
                        "edge weights must lie in [-1, 1], a[{i}][{j}] = {a}"
                    )));
                }
                if (a - adjacency[(j, i)]).abs() > 1e-14 {
                    return Err(Error::InvalidParameter(format!(
                        "adjacency must be symmetric, mismatch at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = RMat::zeros(n, n);
        for &(v, w, weight) in edges {
            if v >= n || w >= n {
                return Err(Error::Dimension(format!(
                    "edge ({v}, {w}) out of range for {n} vertices"
                )));
            }
            if v == w {
                return Err(Error::InvalidParameter(format!("self-loop on vertex {v}")));
            }
            m[(v, w)] = weight;
            m[(w, v)] = weight;
        }
        Self::try_new(m)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &RMat {
        &self.adjacency
    }

    /// Sorted (v, w, weight) list with v < w over nonzero weights.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for v in 0..n {
            for w in (v + 1)..n {
                let a = self.adjacency[(v, w)];
                if a != 0.0 {
                    out.push((v, w, a));
                }
            }
        }
        out
    }
}

/// Validation summary: two-coloring, self-inverseness, and the two-path sums
/// it is equivalent to (`d_v` diagonal, `d_ww` off-diagonal of A^2).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphValidation {
    pub bicolorable: bool,
    pub self_inverse: bool,
    pub d_v: Vec<f64>,
    pub d_ww: RMat,
    pub coloring: Option<Vec<u8>>,
}

const SELF_INVERSE_TOL: f64 = 1e-10;

/// Check bicolorability and self-inverseness. The latter is computed two
/// ways, from the two-path sums and from `A^2 = I` directly; the routine
/// asserts both agree.
pub fn validate_graph(g: &ClusterGraph) -> GraphValidation {
    let n = g.n();
    let a = g.adjacency();

    // two-path sums
    let mut d_v = vec![0.0; n];
    let mut d_ww = RMat::zeros(n, n);
    for v in 0..n {
        for w in 0..n {
            d_v[v] += a[(v, w)] * a[(v, w)];
        }
    }
    for w in 0..n {
        for w2 in 0..n {
            if w == w2 {
                continue;
            }
            let mut s = 0.0;
            for v in 0..n {
                s += a[(v, w)] * a[(v, w2)];
            }
            d_ww[(w, w2)] = s;
        }
    }
    let by_sums = d_v.iter().all(|&x| (x - 1.0).abs() <= SELF_INVERSE_TOL)
        && (0..n).all(|w| {
            (0..n).all(|w2| w == w2 || d_ww[(w, w2)].abs() <= SELF_INVERSE_TOL)
        });

    // direct square
    let a2 = a * a;
    let by_square = {
        let mut ok = true;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                if (a2[(i, j)] - target).abs() > SELF_INVERSE_TOL {
                    ok = false;
                }
            }
        }
        ok
    };
    debug_assert_eq!(by_sums, by_square, "two-path sums disagree with A^2");
    let self_inverse = by_sums && by_square;

    let coloring = two_coloring(g);
    GraphValidation { bicolorable: coloring.is_some(), self_inverse, d_v, d_ww, coloring }
}

/// BFS two-coloring over nonzero edges; None when an odd cycle exists.
fn two_coloring(g: &ClusterGraph) -> Option<Vec<u8>> {
    let n = g.n();
    let a = g.adjacency();
    let mut color = vec![u8::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if color[start] != u8::MAX {
            continue;
        }
        color[start] = 0;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if a[(v, w)] == 0.0 {
                    continue;
                }
                if color[w] == u8::MAX {
                    color[w] = 1 - color[v];
                    queue.push_back(w);
                } else if color[w] == color[v] {
                    return None;
                }
            }
        }
    }
    Some(color)
}

/// Frequency-comb layout: `2 d` broadband sources feed `2 d` identical
/// multimode resonators whose modes sit at `omega0 + m delta`. Source `s`
/// is pumped at `omega0 + index_s delta / 2`, pairing mode frequencies with
/// `m + n = index_s`. `periodic` wraps the pairing modulo `n_freqs`, which
/// closes finite demos into exactly self-inverse rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacronodeLayout {
    pub d: usize,
    pub n_freqs: usize,
    pub omega0: f64,
    pub delta: f64,
    /// Pump index per source, addressed as (source, index).
    pub pumps: Vec<(usize, i64)>,
    #[serde(default)]
    pub periodic: bool,
}

impl MacronodeLayout {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
        }
        if self.n_freqs < 2 {
            return Err(Error::InvalidParameter("need at least two frequencies".into()));
        }
        if !(self.omega0 > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidParameter("omega0 and delta must be > 0".into()));
        }
        if self.pumps.len() != 2 * self.d {
            return Err(Error::InvalidParameter(format!(
                "expected {} pump entries (2 d), got {}",
                2 * self.d,
                self.pumps.len()
            )));
        }
        let mut seen = vec![false; 2 * self.d];
        for &(s, _) in &self.pumps {
            if s >= 2 * self.d || seen[s] {
                return Err(Error::InvalidParameter(format!(
                    "pump list must address each source 0..{} exactly once",
                    2 * self.d - 1
                )));
            }
            seen[s] = true;
        }
        Ok(())
    }

    pub fn n_sources(&self) -> usize {
        2 * self.d
    }

    pub fn n_modes(&self) -> usize {
        self.n_sources() * self.n_freqs
    }

    /// Lowest frequency index carried by each resonator.
    pub fn m_min(&self) -> i64 {
        1 - (self.n_freqs as i64) / 2
    }

    /// Macronode index of frequency index m: `(-1)^m m`.
    pub fn macronode_index(&self, m: i64) -> i64 {
        if m.rem_euclid(2) == 0 {
            m
        } else {
            -m
        }
    }

    /// Mode angular frequency (rad/s).
    pub fn mode_frequency(&self, m: i64) -> f64 {
        self.omega0 + m as f64 * self.delta
    }

    /// Pump angular frequency of a pump index (rad/s).
    pub fn pump_frequency(&self, index: i64) -> f64 {
        self.omega0 + index as f64 * self.delta / 2.0
    }

    /// Vertex id of (source, frequency index m).
    pub fn vertex(&self, source: usize, m: i64) -> usize {
        source * self.n_freqs + (m - self.m_min()) as usize
    }

    fn freq_range(&self) -> std::ops::RangeInclusive<i64> {
        self.m_min()..=(self.m_min() + self.n_freqs as i64 - 1)
    }

    /// Partner of `m` under `m + n = index`, folded into range when periodic.
    fn partner(&self, index: i64, m: i64) -> Option<i64> {
        let raw = index - m;
        if self.periodic {
            let span = self.n_freqs as i64;
            let n = self.m_min() + (raw - self.m_min()).rem_euclid(span);
            Some(n)
        } else if self.freq_range().contains(&raw) {
            Some(raw)
        } else {
            None
        }
    }

    /// Vertex ids grouped by macronode (all sources at one frequency index),
    /// in ascending frequency order.
    pub fn macronodes(&self) -> Vec<Vec<usize>> {
        self.freq_range()
            .map(|m| (0..self.n_sources()).map(|s| self.vertex(s, m)).collect())
            .collect()
    }
}

/// Disjoint-pair graph generated by pumping each source individually:
/// weight-one edges between frequency pairs `m + n = index` inside each
/// source, no cross-source edges. `m_magnitude` is the flat squeezing
/// magnitude the unit weights are normalized by; it must be positive.
pub fn build_pair_graph(layout: &MacronodeLayout, m_magnitude: f64) -> Result<ClusterGraph> {
    layout.validate()?;
    if !(m_magnitude > 0.0) {
        return Err(Error::InvalidParameter("squeezing magnitude must be > 0".into()));
    }
    let mut edges = Vec::new();
    for &(source, index) in &layout.pumps {
        let mut found = 0usize;
        for m in layout.freq_range() {
            if let Some(n) = layout.partner(index, m) {
                if n == m || n < m {
                    continue; // degenerate pair or already counted
                }
                edges.push((layout.vertex(source, m), layout.vertex(source, n), 1.0));
                found += 1;
            }
        }
        if found == 0 {
            return Err(Error::NoPairForPump { source_index: source, pump_index: index });
        }
    }
    ClusterGraph::from_edges(layout.n_modes(), &edges)
}

/// Block-diagonal macronode interferometer, one `H^{(x) d}` Hadamard block
/// per macronode, applied as a graph congruence `A -> R A R^T`.
///
/// Only d = 1 and d = 2 blocks are shipped; the transform refuses layouts
/// whose input graph pairs vertices inside a macronode, since the congruence
/// would then create self-loops.
pub fn hadamard_transform(g: &ClusterGraph, layout: &MacronodeLayout) -> Result<ClusterGraph> {
    layout.validate()?;
    if g.n() != layout.n_modes() {
        return Err(Error::Dimension(format!(
            "graph has {} vertices, layout describes {}",
            g.n(),
            layout.n_modes()
        )));
    }
    if layout.d > 2 {
        return Err(Error::InvalidParameter(
            "macronode Hadamard blocks are shipped for d <= 2 only".into(),
        ));
    }
    let block = hadamard_block(layout.d);
    let n = g.n();
    let mut r = RMat::zeros(n, n);
    for nodes in layout.macronodes() {
        for (bi, &vi) in nodes.iter().enumerate() {
            for (bj, &vj) in nodes.iter().enumerate() {
                r[(vi, vj)] = block[(bi, bj)];
            }
        }
    }
    let transformed = &r * g.adjacency() * r.transpose();
    for v in 0..n {
        if transformed[(v, v)].abs() > 1e-10 {
            return Err(Error::SelfLoop { vertex: v });
        }
    }
    // clean roundoff so exported weights stay crisp
    let mut sym = RMat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut avg = 0.5 * (transformed[(i, j)] + transformed[(j, i)]);
            if avg.abs() < 1e-14 {
                avg = 0.0;
            }
            sym[(i, j)] = avg;
            sym[(j, i)] = avg;
        }
    }
    ClusterGraph::try_new(sym)
}

fn hadamard_block(d: usize) -> RMat {
    let h = RMat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]).scale(1.0 / 2f64.sqrt());
    match d {
        1 => h,
        2 => h.kronecker(&h),
        _ => unreachable!("guarded by caller"),
    }
}

/// Squeezing strength of the engineered bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeParam {
    /// Regularization of the quadrature-form operators,
    /// `L_v = y_v - sum a_vw x_w - i eps x_v`; smaller is more squeezed.
    Epsilon(f64),
    /// Squeezing rate of the Bogoliubov-form operators,
    /// `L_v = cosh(r) c_v - i sinh(r) sum a_vw c_w+`.
    Rate(f64),
}

impl SqueezeParam {
    /// Map between the two parametrizations: `|M| = 1/(2 eps)`,
    /// `N = sinh^2 r`, `|M| = sqrt(N(N+1))`.
    pub fn rate_for_epsilon(eps: f64) -> f64 {
        let m = 1.0 / (2.0 * eps);
        let n = (m * m + 0.25).sqrt() - 0.5;
        n.sqrt().asinh()
    }
}

/// Coefficient matrices of linear Lindblad operators,
/// `L_v = sum_j alpha[v][j] c_j + beta[v][j] c_j+`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOps {
    pub alpha: CMat,
    pub beta: CMat,
}

/// Build the bath's Lindblad operators for a graph.
///
/// The Bogoliubov (`Rate`) form requires a valid graph (bicolorable and
/// self-inverse); the quadrature (`Epsilon`) form accepts any graph.
pub fn lindblad_operators(g: &ClusterGraph, squeeze: SqueezeParam) -> Result<LindbladOps> {
    let n = g.n();
    let a = g.adjacency();
    match squeeze {
        SqueezeParam::Rate(r) => {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter("squeezing rate must be >= 0".into()));
            }
            let v = validate_graph(g);
            if !(v.self_inverse && v.bicolorable) {
                return Err(Error::Regime(
                    "Bogoliubov-form operators need a bicolorable self-inverse graph".into(),
                ));
            }
            let alpha = CMat::identity(n, n).map(|x| x * c(r.cosh()));
            let beta = CMat::from_fn(n, n, |i, j| C64::new(0.0, -r.sinh() * a[(i, j)]));
            Ok(LindbladOps { alpha, beta })
        }
        SqueezeParam::Epsilon(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter("epsilon must be > 0".into()));
            }
            let s = 1.0 / 2f64.sqrt();
            let alpha = CMat::from_fn(n, n, |v, j| {
                let diag = if v == j { C64::new(0.0, -(1.0 + eps)) } else { C64::new(0.0, 0.0) };
                (diag - c(a[(v, j)])) * c(s)
            });
            let beta = CMat::from_fn(n, n, |v, j| {
                let diag = if v == j { C64::new(0.0, 1.0 - eps) } else { C64::new(0.0, 0.0) };
                (diag - c(a[(v, j)])) * c(s)
            });
            Ok(LindbladOps { alpha, beta })
        }
    }
}

/// Symplectic form in the (x.., y..) ordering.
pub fn symplectic_form(n_modes: usize) -> RMat {
    let n = n_modes;
    let mut o = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        o[(i, n + i)] = 1.0;
        o[(n + i, i)] = -1.0;
    }
    o
}

/// Drift and diffusion matrices of the covariance flow generated by the
/// Lindblad operators, scaled by the overall rate `kappa`.
pub fn drift_diffusion(ops: &LindbladOps, kappa: f64) -> Result<(RMat, RMat)> {
    let n = ops.alpha.nrows();
    if ops.alpha.ncols() != n || ops.beta.nrows() != n || ops.beta.ncols() != n {
        return Err(Error::Dimension("coefficient matrices must be square and matching".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("kappa must be > 0".into()));
    }
    let sqrt2_inv = 1.0 / 2f64.sqrt();
    let mut cmat = CMat::zeros(2 * n, 2 * n);
    for v in 0..n {
        let mut w = CVec::zeros(2 * n);
        for j in 0..n {
            let al = ops.alpha[(v, j)];
            let be = ops.beta[(v, j)];
            w[j] = (al + be) * c(sqrt2_inv);
            w[n + j] = (al - be) * C64::new(0.0, sqrt2_inv);
        }
        cmat += &w * w.adjoint();
    }
    let omega = symplectic_form(n);
    let im_c = cmat.map(|z| z.im);
    let re_c = cmat.map(|z| z.re);
    let drift = (-&omega * im_c).scale(kappa);
    let diffusion = (&omega * re_c * omega.transpose()).scale(kappa);
    Ok((drift, diffusion))
}

/// Gaussian state: mean vector and covariance in the (x.., y..) ordering,
/// vacuum variance 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: RVec,
    pub cov: RMat,
}

impl GaussianState {
    pub fn try_new(mean: RVec, cov: RMat) -> Result<Self> {
        let dim = mean.len();
        if dim % 2 != 0 || cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension("mean and covariance sizes are inconsistent".into()));
        }
        if (&cov - cov.transpose()).norm() > 1e-12 * cov.norm().max(1.0) {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        let state = Self { mean, cov };
        let min_eig = state.uncertainty_margin();
        if min_eig < -1e-9 {
            return Err(Error::InvalidParameter(format!(
                "covariance violates the uncertainty relation, margin {min_eig:.3e}"
            )));
        }
        Ok(state)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self { mean: RVec::zeros(2 * n_modes), cov: RMat::identity(2 * n_modes, 2 * n_modes).scale(0.5) }
    }

    /// Smallest eigenvalue of `sigma + (i/2) Omega`; physical states are
    /// nonnegative up to roundoff.
    pub fn uncertainty_margin(&self) -> f64 {
        let n = self.n_modes();
        let omega = symplectic_form(n);
        let m = CMat::from_fn(2 * n, 2 * n, |i, j| {
            C64::new(self.cov[(i, j)], 0.5 * omega[(i, j)])
        });
        crate::linalg::hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Steady state of the dissipative flow: zero mean, covariance from the
/// Lyapunov equation. Fails when the drift is not Hurwitz (for instance at
/// epsilon = 0, the infinite-squeezing limit).
pub fn gaussian_steady_state(ops: &LindbladOps, kappa: f64) -> Result<GaussianState> {
    let (a, d) = drift_diffusion(ops, kappa)?;
    let max_re = max_real_eigenvalue(&a)?;
    if max_re >= -1e-12 * a.norm().max(1.0) {
        return Err(Error::Unstable(format!("max Re eigenvalue = {max_re:.3e}")));
    }
    let cov = lyapunov(&a, &d)?;
    GaussianState::try_new(RVec::zeros(a.nrows()), cov)
}

/// RK4 integration of the covariance flow `sigma' = A sigma + sigma A^T + D`
/// from `sigma0` to time `t_final`.
pub fn integrate_covariance(
    a: &RMat,
    d: &RMat,
    sigma0: &RMat,
    t_final: f64,
    steps: usize,
) -> RMat {
    let h = t_final / steps as f64;
    let f = |s: &RMat| a * s + s * a.transpose() + d;
    let mut s = sigma0.clone();
    for _ in 0..steps {
        let k1 = f(&s);
        let k2 = f(&(&s + &k1 * (h / 2.0)));
        let k3 = f(&(&s + &k2 * (h / 2.0)));
        let k4 = f(&(&s + &k3 * h));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    s
}

/// Variances of the nullifiers `y_v - sum_w a_vw x_w` in a Gaussian state.
pub fn nullifier_variances(g: &ClusterGraph, state: &GaussianState) -> Result<Vec<f64>> {
    let n = g.n();
    if state.n_modes() != n {
        return Err(Error::Dimension(format!(
            "graph has {n} vertices but the state has {} modes",
            state.n_modes()
        )));
    }
    let a = g.adjacency();
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        let mut f = RVec::zeros(2 * n);
        f[n + v] = 1.0;
        for w in 0..n {
            f[w] -= a[(v, w)];
        }
        out.push((f.transpose() * &state.cov * &f)[(0, 0)]);
    }
    Ok(out)
}

/// Second moments of one broadband squeezing source: thermal number and
/// (real, positive) squeezing magnitude over its flat band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceMoments {
    pub n: f64,
    pub m: f64,
}

/// One two-port beam splitter acting on a pair of source lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub ports: (usize, usize),
    /// Real 2x2 block, must be orthogonal.
    pub matrix: [[f64; 2]; 2],
}

/// Correlated bath second moments after an interferometer: the thermal
/// matrix `N[j][i]` and one squeezing matrix `M^k[j][i]` per pump `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathMoments {
    pub n: RMat,
    pub m: BTreeMap<usize, RMat>,
}

/// Propagate per-source moments through a beam-splitter network. Each block
/// acts by congruence, `N -> R N R^T` and `M^k -> R M^k R^T`.
pub fn bath_from_interferometer(
    sources: &[SourceMoments],
    network: &[BeamSplitter],
) -> Result<BathMoments> {
    let ns = sources.len();
    if ns == 0 {
        return Err(Error::InvalidParameter("need at least one source".into()));
    }
    for s in sources {
        if !(s.n >= 0.0 && s.m >= 0.0) {
            return Err(Error::InvalidParameter("source moments must be nonnegative".into()));
        }
    }
    let mut r_total = RMat::identity(ns, ns);
    for bs in network {
        let (p, q) = bs.ports;
        if p >= ns || q >= ns || p == q {
            return Err(Error::Dimension(format!("beam splitter ports ({p}, {q}) invalid")));
        }
        let m = bs.matrix;
        // closure of a lossless two-port: rows orthonormal
        let dot = m[0][0] * m[1][0] + m[0][1] * m[1][1];
        let n0 = m[0][0] * m[0][0] + m[0][1] * m[0][1];
        let n1 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
        if dot.abs() > 1e-12 || (n0 - 1.0).abs() > 1e-12 || (n1 - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitary(format!(
                "block on ports ({p}, {q}) is not orthogonal"
            )));
        }
        let mut r = RMat::identity(ns, ns);
        r[(p, p)] = m[0][0];
        r[(p, q)] = m[0][1];
        r[(q, p)] = m[1][0];
        r[(q, q)] = m[1][1];
        r_total = r * r_total;
    }
    let n0 = RMat::from_fn(ns, ns, |i, j| if i == j { sources[i].n } else { 0.0 });
    let n = &r_total * n0 * r_total.transpose();
    let mut m = BTreeMap::new();
    for (k, s) in sources.iter().enumerate() {
        let mut mk = RMat::zeros(ns, ns);
        mk[(k, k)] = s.m;
        m.insert(k, &r_total * mk * r_total.transpose());
    }
    Ok(BathMoments { n, m })
}

/// Mode-level squeezing matrix of the resonator modes: vertex pair (v, w)
/// receives `M^k[source(v)][source(w)]` from every pump `k` whose index
/// matches `m_v + m_w`. This is the rotating-wave reduction that turns
/// correlated bath moments into graph edge weights.
pub fn mode_squeeze_matrix(layout: &MacronodeLayout, moments: &BathMoments) -> Result<RMat> {
    layout.validate()?;
    let ns = layout.n_sources();
    if moments.n.nrows() != ns {
        return Err(Error::Dimension(format!(
            "moments describe {} sources, layout has {ns}",
            moments.n.nrows()
        )));
    }
    let nm = layout.n_modes();
    let mut out = RMat::zeros(nm, nm);
    let pump_index: BTreeMap<usize, i64> = layout.pumps.iter().copied().collect();
    for (&k, mk) in &moments.m {
        let Some(&index) = pump_index.get(&k) else {
            return Err(Error::InvalidParameter(format!("moments carry unknown pump {k}")));
        };
        for sv in 0..ns {
            for sw in 0..ns {
                if mk[(sv, sw)] == 0.0 {
                    continue;
                }
                for mv in layout.freq_range() {
                    if let Some(mw) = layout.partner(index, mv) {
                        if mw == mv {
                            continue;
                        }
                        let v = layout.vertex(sv, mv);
                        let w = layout.vertex(sw, mw);
                        out[(v, w)] += 0.5 * mk[(sv, sw)];
                        out[(w, v)] += 0.5 * mk[(sv, sw)];
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_graph2() -> ClusterGraph {
        ClusterGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    fn ring_layout_d1(n_freqs: usize) -> MacronodeLayout {
        MacronodeLayout {
            d: 1,
            n_freqs,
            omega0: 2.0 * std::f64::consts::PI * 5.0e9,
            delta: 2.0 * std::f64::consts::PI * 50.0e6,
            pumps: vec![(0, 1), (1, -1)],
            periodic: true,
        }
    }

    #[test]
    fn two_vertex_pair_is_valid() {
        let v = validate_graph(&pair_graph2());
        assert!(v.bicolorable && v.self_inverse);
        assert!((v.d_v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_is_invalid() {
        let g = ClusterGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let v = validate_graph(&g);
        assert!(!v.bicolorable && !v.self_inverse);
    }

    #[test]
    fn disjoint_pairs_graph_is_valid() {
        let g = ClusterGraph::from_edges(6, &[(0, 3, 1.0), (1, 4, 1.0), (2, 5, 1.0)]).unwrap();
        let v = validate_graph(&g);
        assert!(v.bicolorable && v.self_inverse);
    }

    #[test]
    fn graph_rejects_asymmetry_and_loops() {
        let mut m = RMat::zeros(2, 2);
        m[(0, 1)] = 0.5;
        assert!(ClusterGraph::try_new(m).is_err());
        let mut m = RMat::zeros(2, 2);
        m[(0, 0)] = 0.1;
        assert!(ClusterGraph::try_new(m).is_err());
    }

    #[test]
    fn single_source_two_freqs_single_edge() {
        let layout = MacronodeLayout {
            d: 1,
            n_freqs: 2,
            omega0: 1.0e10,
            delta: 1.0e8,
            pumps: vec![(0, 1), (1, 1)],
            periodic: false,
        };
        let g = build_pair_graph(&layout, 1.0).unwrap();
        // each source pairs m=0 with m=1
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edges()[0], (0, 1, 1.0));
    }

    #[test]
    fn pump_without_pairs_is_rejected() {
        let layout = MacronodeLayout {
            d: 1,
            n_freqs: 2,
            omega0: 1.0e10,
            delta: 1.0e8,
            pumps: vec![(0, 1), (1, 7)],
            periodic: false,
        };
        match build_pair_graph(&layout, 1.0) {
            Err(Error::NoPairForPump { source_index: 1, pump_index: 7 }) => {}
            other => panic!("expected no-pair error, got {other:?}"),
        }
    }

    #[test]
    fn d1_ring_has_disjoint_matching_and_chain_after_hadamard() {
        let layout = ring_layout_d1(4);
        let g0 = build_pair_graph(&layout, 1.0).unwrap();
        assert_eq!(g0.edges().len(), 4); // 8 modes, perfect matching
        let v0 = validate_graph(&g0);
        assert!(v0.bicolorable && v0.self_inverse);

        let g = hadamard_transform(&g0, &layout).unwrap();
        let v = validate_graph(&g);
        assert!(v.self_inverse, "orthogonal congruence preserves self-inverseness");
        // weights become +-1/2 on the macronode chain
        for (_, _, w) in g.edges() {
            assert!((w.abs() - 0.5).abs() < 1e-12);
        }
        assert_eq!(g.edges().len(), 16); // 4 macronode pairs x K22
    }

    #[test]
    fn hadamard_transform_is_involutive() {
        let layout = ring_layout_d1(4);
        let g0 = build_pair_graph(&layout, 1.0).unwrap();
        let g1 = hadamard_transform(&g0, &layout).unwrap();
        let g2 = hadamard_transform(&g1, &layout).unwrap();
        assert!((g2.adjacency() - g0.adjacency()).norm() < 1e-12);
    }

    #[test]
    fn intra_macronode_edge_is_rejected() {
        // hand-built: the two modes of one macronode connected directly
        let layout = MacronodeLayout {
            d: 1,
            n_freqs: 2,
            omega0: 1.0e10,
            delta: 1.0e8,
            pumps: vec![(0, 1), (1, 1)],
            periodic: false,
        };
        // vertices 0 = (s0, m=0), 2 = (s1, m=0) share macronode 0
        let g = ClusterGraph::from_edges(4, &[(0, 2, 1.0), (1, 3, 1.0)]).unwrap();
        match hadamard_transform(&g, &layout) {
            Err(Error::SelfLoop { .. }) => {}
            other => panic!("expected self-loop rejection, got {other:?}"),
        }
    }

    #[test]
    fn d2_ladder_has_two_edges_per_macronode_pair() {
        let layout = MacronodeLayout {
            d: 2,
            n_freqs: 8,
            omega0: 2.0 * std::f64::consts::PI * 5.0e9,
            delta: 2.0 * std::f64::consts::PI * 50.0e6,
            pumps: vec![(0, 1), (1, -1), (2, 1), (3, -1)],
            periodic: true,
        };
        let g0 = build_pair_graph(&layout, 1.0).unwrap();
        assert_eq!(g0.n(), 32);
        assert_eq!(g0.edges().len(), 16); // perfect matching on 32 modes
        // sources 0 and 2 produce parallel edges: count per macronode pair
        let mut pair_count: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        for (v, w, _) in g0.edges() {
            let mv = layout.m_min() + (v % 8) as i64;
            let mw = layout.m_min() + (w % 8) as i64;
            let a = layout.macronode_index(mv);
            let b = layout.macronode_index(mw);
            let key = (a.min(b), a.max(b));
            *pair_count.entry(key).or_default() += 1;
        }
        assert!(pair_count.values().all(|&c| c == 2), "{pair_count:?}");
        let v0 = validate_graph(&g0);
        assert!(v0.self_inverse && v0.bicolorable);
        let g = hadamard_transform(&g0, &layout).unwrap();
        assert!(validate_graph(&g).self_inverse);
    }

    #[test]
    fn vacuum_lindblad_gives_vacuum_state() {
        let g = pair_graph2();
        let ops = lindblad_operators(&g, SqueezeParam::Rate(0.0)).unwrap();
        assert!((ops.alpha.clone() - CMat::identity(2, 2)).norm() < 1e-15);
        assert!(ops.beta.norm() < 1e-15);
        let state = gaussian_steady_state(&ops, 1.0).unwrap();
        assert!((state.cov.clone() - RMat::identity(4, 4).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn two_mode_pair_nullifier_variance_is_exp_minus_2r() {
        let g = pair_graph2();
        for r in [0.5, 1.0, 2.0] {
            let ops = lindblad_operators(&g, SqueezeParam::Rate(r)).unwrap();
            let state = gaussian_steady_state(&ops, 1.0).unwrap();
            let nv = nullifier_variances(&g, &state).unwrap();
            for v in nv {
                assert!((v - (-2.0 * r).exp()).abs() < 1e-10, "r = {r}, var = {v}");
            }
        }
    }

    #[test]
    fn epsilon_and_rate_forms_agree_on_nullifiers() {
        let g = pair_graph2();
        let eps = 1e-3;
        let r = SqueezeParam::rate_for_epsilon(eps);
        let se = gaussian_steady_state(
            &lindblad_operators(&g, SqueezeParam::Epsilon(eps)).unwrap(),
            1.0,
        )
        .unwrap();
        let sr = gaussian_steady_state(
            &lindblad_operators(&g, SqueezeParam::Rate(r)).unwrap(),
            1.0,
        )
        .unwrap();
        let nve = nullifier_variances(&g, &se).unwrap();
        let nvr = nullifier_variances(&g, &sr).unwrap();
        for (a, b) in nve.iter().zip(&nvr) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn rate_form_requires_valid_graph() {
        let g = ClusterGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert!(matches!(
            lindblad_operators(&g, SqueezeParam::Rate(1.0)),
            Err(Error::Regime(_))
        ));
        // epsilon form still works and is stable
        let ops = lindblad_operators(&g, SqueezeParam::Epsilon(1e-2)).unwrap();
        gaussian_steady_state(&ops, 1.0).unwrap();
    }

    #[test]
    fn infinite_squeezing_is_unstable() {
        // epsilon -> 0 exactly: drift acquires a zero mode
        let g = pair_graph2();
        let n = g.n();
        let a = g.adjacency();
        let s = 1.0 / 2f64.sqrt();
        let alpha = CMat::from_fn(n, n, |v, j| {
            let diag = if v == j { C64::new(0.0, -1.0) } else { C64::new(0.0, 0.0) };
            (diag - c(a[(v, j)])) * c(s)
        });
        let beta = CMat::from_fn(n, n, |v, j| {
            let diag = if v == j { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
            (diag - c(a[(v, j)])) * c(s)
        });
        let ops = LindbladOps { alpha, beta };
        assert!(matches!(gaussian_steady_state(&ops, 1.0), Err(Error::Unstable(_))));
    }

    #[test]
    fn lyapunov_agrees_with_time_integration() {
        let g = pair_graph2();
        let ops = lindblad_operators(&g, SqueezeParam::Rate(1.0)).unwrap();
        let (a, d) = drift_diffusion(&ops, 1.0).unwrap();
        let direct = lyapunov(&a, &d).unwrap();
        let flowed = integrate_covariance(&a, &d, &GaussianState::vacuum(2).cov, 25.0, 20_000);
        assert!((direct - flowed).norm() < 1e-8);
    }

    #[test]
    fn uncertainty_margin_nonnegative() {
        let g = pair_graph2();
        let ops = lindblad_operators(&g, SqueezeParam::Rate(2.5)).unwrap();
        let state = gaussian_steady_state(&ops, 1.0).unwrap();
        assert!(state.uncertainty_margin() > -1e-9);
    }

    #[test]
    fn vacuum_nullifiers_on_empty_graph() {
        let g = ClusterGraph::try_new(RMat::zeros(3, 3)).unwrap();
        let nv = nullifier_variances(&g, &GaussianState::vacuum(3)).unwrap();
        for v in nv {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_network_keeps_moments() {
        let sources = vec![SourceMoments { n: 1.0, m: 1.2 }, SourceMoments { n: 2.0, m: 0.5 }];
        let bm = bath_from_interferometer(&sources, &[]).unwrap();
        assert!((bm.n[(0, 0)] - 1.0).abs() < 1e-15 && (bm.n[(1, 1)] - 2.0).abs() < 1e-15);
        assert!((bm.m[&0][(0, 0)] - 1.2).abs() < 1e-15);
        assert!((bm.m[&1][(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_orthogonal_block_rejected() {
        let sources = vec![SourceMoments { n: 0.0, m: 1.0 }; 2];
        let bad = BeamSplitter { ports: (0, 1), matrix: [[1.0, 1.0], [1.0, -1.0]] };
        assert!(matches!(
            bath_from_interferometer(&sources, &[bad]),
            Err(Error::NonUnitary(_))
        ));
    }

    #[test]
    fn hadamard_network_matches_graph_transform() {
        let layout = ring_layout_d1(4);
        let m_mag = 2.0;
        let sources = vec![SourceMoments { n: 1.0, m: m_mag }; 2];
        let h = 1.0 / 2f64.sqrt();
        let bs = BeamSplitter { ports: (0, 1), matrix: [[h, h], [h, -h]] };
        let bm = bath_from_interferometer(&sources, &[bs]).unwrap();
        // isotropic thermal part is preserved
        assert!((bm.n.clone() - RMat::identity(2, 2).scale(1.0)).norm() < 1e-12);
        let mode_m = mode_squeeze_matrix(&layout, &bm).unwrap();
        let g0 = build_pair_graph(&layout, m_mag).unwrap();
        let g = hadamard_transform(&g0, &layout).unwrap();
        let expected = g.adjacency().scale(m_mag);
        assert!((mode_m - expected).norm() < 1e-12);
    }

    #[test]
    fn random_orthogonal_network_preserves_isotropic_thermal() {
        let sources = vec![SourceMoments { n: 1.5, m: 1.0 }; 4];
        let h = 1.0 / 2f64.sqrt();
        let net = vec![
            BeamSplitter { ports: (0, 1), matrix: [[h, h], [h, -h]] },
            BeamSplitter { ports: (2, 3), matrix: [[0.6, 0.8], [-0.8, 0.6]] },
            BeamSplitter { ports: (1, 2), matrix: [[0.28, 0.96], [0.96, -0.28]] },
        ];
        let bm = bath_from_interferometer(&sources, &net).unwrap();
        assert!((bm.n.clone() - RMat::identity(4, 4).scale(1.5)).norm() < 1e-12);
    }
}
