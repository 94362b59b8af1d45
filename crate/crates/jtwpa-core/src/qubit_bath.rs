//! Two qubits immersed in a two-mode squeezed traveling field.
//!
//! Both qubits sit at the squeezing source's output, with frequencies
//! symmetric about the pump (w1 + w2 = 2 W_p). The reduced dynamics is a
//! Lindblad master equation whose dissipators carry the field's thermal
//! occupations and whose squeezing line correlates the two qubits. Basis
//! ordering is {ee, eg, ge, gg} with qubit 1 as the left tensor factor;
//! superoperators act on column-stacked density matrices.

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigenvalues, hermitian_eigenvalues, hermitian_sqrt, null_vector, CMat, CVec, C64,
};
use serde::{Deserialize, Serialize};

/// Bath moments seen by the qubit pair. `n1`, `n2` and `m` are the thermal
/// photon numbers and squeezing parameter carried by each directional field;
/// in reflection mode both directions carry them, otherwise the counter-
/// propagating field is vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitBath {
    /// Qubit decay rates (rad/s).
    pub gamma1: f64,
    pub gamma2: f64,
    /// Thermal photon number at each qubit frequency, per directional field.
    pub n1: f64,
    pub n2: f64,
    /// Squeezing parameter, the average of the field's squeezing at the two
    /// qubit frequencies.
    pub m_re: f64,
    pub m_im: f64,
    /// Whether the qubit pair is tuned to the squeezing interaction
    /// (w1 + w2 = 2 W_p). When false the squeezing line is dropped.
    pub resonant: bool,
    /// Both directions squeezed (mirror-terminated line). Doubles the
    /// effective thermal and squeezing moments.
    pub reflection_mode: bool,
}

impl TwoQubitBath {
    pub fn m(&self) -> C64 {
        C64::new(self.m_re, self.m_im)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) {
            return Err(Error::InvalidParameter("decay rates must be > 0".into()));
        }
        if !(self.n1 >= 0.0 && self.n2 >= 0.0) {
            return Err(Error::InvalidParameter("thermal occupations must be >= 0".into()));
        }
        let n_bar = 0.5 * (self.n1 + self.n2);
        let bound = (n_bar * (n_bar + 1.0)).sqrt();
        if self.m().norm() > bound * (1.0 + 1e-9) + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "|m| = {} exceeds the physical bound sqrt(n(n+1)) = {bound}",
                self.m().norm()
            )));
        }
        Ok(())
    }
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)])
}

fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Lowering operator of qubit `which` (0 or 1) in the two-qubit space.
pub fn lowering(which: usize) -> CMat {
    let sm = sigma_minus();
    match which {
        0 => kron(&sm, &eye(2)),
        1 => kron(&eye(2), &sm),
        _ => panic!("qubit index must be 0 or 1"),
    }
}

/// Pauli operator on one qubit of the pair: axis 0=x, 1=y, 2=z.
pub fn pauli(which: usize, axis: usize) -> CMat {
    let m = match axis {
        0 => CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        1 => CMat::from_row_slice(2, 2, &[c(0.0), -C64::new(0.0, 1.0), C64::new(0.0, 1.0), c(0.0)]),
        2 => CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
        _ => panic!("axis must be 0, 1 or 2"),
    };
    match which {
        0 => kron(&m, &eye(2)),
        1 => kron(&eye(2), &m),
        _ => panic!("qubit index must be 0 or 1"),
    }
}

/// Column-stacked superoperator for the dissipator
/// `D[A] rho = A rho A+ - {A+A, rho}/2`.
pub fn dissipator_superop(a: &CMat) -> CMat {
    let n = a.nrows();
    let id = eye(n);
    let ada = a.adjoint() * a;
    kron(&a.conjugate(), a) - kron(&id, &ada).scale(0.5) - kron(&ada.transpose(), &id).scale(0.5)
}

/// Column-stacked superoperator for the squeezing coupler
/// `S_M[A,B] rho = M (A rho B + B rho A - {AB, rho}) + H.c.`.
pub fn squeeze_superop(m: C64, a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let id = eye(n);
    let ab = a * b;
    let direct = kron(&b.transpose(), a) + kron(&a.transpose(), b)
        - kron(&id, &ab)
        - kron(&ab.transpose(), &id);
    let ad = a.adjoint();
    let bd = b.adjoint();
    let bdad = &bd * &ad;
    let conj_part = kron(&a.conjugate(), &bd) + kron(&b.conjugate(), &ad)
        - kron(&id, &bdad)
        - kron(&bdad.transpose(), &id);
    direct.map(|x| m * x) + conj_part.map(|x| m.conj() * x)
}

/// A 16x16 generator acting on column-stacked two-qubit density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian16(pub CMat);

impl Liouvillian16 {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }
}

/// Assemble the two-qubit generator from the bath moments.
pub fn build_liouvillian(bath: &TwoQubitBath) -> Result<Liouvillian16> {
    bath.validate()?;
    // Sum the left- and right-moving contributions: each direction carries
    // (n, m) in reflection mode, otherwise only the right-moving one does.
    let directions = if bath.reflection_mode { 2.0 } else { 1.0 };
    let sm1 = lowering(0);
    let sm2 = lowering(1);
    let sp1 = sm1.adjoint();
    let sp2 = sm2.adjoint();
    let mut l = CMat::zeros(16, 16);
    for (gamma, n, down, up) in
        [(bath.gamma1, bath.n1, &sm1, &sp1), (bath.gamma2, bath.n2, &sm2, &sp2)]
    {
        let n_down = directions * n + 2.0; // sum of (n_dir + 1) over both directions
        let n_up = directions * n;
        l += dissipator_superop(down).map(|x| c(gamma / 2.0 * n_down) * x);
        l += dissipator_superop(up).map(|x| c(gamma / 2.0 * n_up) * x);
    }
    if bath.resonant {
        let m_eff = bath.m() * directions;
        let coupling = (bath.gamma1 * bath.gamma2).sqrt() / 2.0;
        l -= squeeze_superop(m_eff, &sp1, &sp2).map(|x| c(coupling) * x);
    }
    Ok(Liouvillian16(l))
}

/// A validated two-qubit density matrix in the {ee, eg, ge, gg} basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(CMat);

impl DensityMatrix4 {
    pub fn try_new(m: CMat) -> Result<Self> {
        if m.nrows() != 4 || m.ncols() != 4 {
            return Err(Error::Dimension("density matrix must be 4x4".into()));
        }
        let herm_dev = (&m - m.adjoint()).norm();
        if herm_dev > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian, deviation {herm_dev:.3e}"
            )));
        }
        let tr = m.trace();
        if (tr - c(1.0)).norm() > 1e-12 {
            return Err(Error::InvalidParameter(format!("trace is {tr}, expected 1")));
        }
        let min_eig =
            hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not positive semidefinite, min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn from_pure(psi: &CVec) -> Result<Self> {
        if psi.len() != 4 {
            return Err(Error::Dimension("pure state must have 4 amplitudes".into()));
        }
        let norm = psi.norm();
        let psi = psi.map(|x| x / c(norm));
        let rho = CMat::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
        Self::try_new(rho)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Overlap with a pure state, `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, psi: &CVec) -> f64 {
        let norm2 = psi.norm_squared();
        ((psi.adjoint() * &self.0 * psi)[(0, 0)] / c(norm2)).re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.0 - &other.0;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Steady state from the 16x16 kernel. Uniqueness is checked on the spectrum:
/// the smallest-|eigenvalue| mode must be separated from the next by
/// 1e-8 times the spectral radius.
pub fn steady_state_numeric(liouv: &Liouvillian16) -> Result<DensityMatrix4> {
    let ev = eigenvalues(&liouv.0)?;
    let radius = ev.iter().map(|l| l.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut mags: Vec<f64> = ev.iter().map(|l| l.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let kernel_dim = mags.iter().filter(|&&m| m <= 1e-8 * radius).count();
    if kernel_dim != 1 {
        return Err(Error::DegenerateKernel { dim: kernel_dim });
    }
    let (v, _) = null_vector(&liouv.0)?;
    let mut rho = CMat::from_fn(4, 4, |i, j| v[i + 4 * j]); // column stacking
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::Numerical("kernel vector has zero trace".into()));
    }
    rho = rho.map(|x| x / tr);
    rho = (rho.clone() + rho.adjoint()).scale(0.5);
    DensityMatrix4::try_new(rho)
}

/// Closed-form steady state for the resonant, one-sided configuration
/// (right-moving squeezed field, left-moving vacuum):
///
/// ```text
///   A = 4 (n1+1)(n2+1)
///   B = g1 (n1+1) + g2 (n2+1)
///   W = B^2 - 4 g1 g2 |m|^2
///   C = 4 g1 g2 |m|^2 / (A W)
///   diag  = (n1 n2/A + C, n1(n2+2)/A - C, (n1+2)n2/A - C, (n1+2)(n2+2)/A + C)
///   rho_ee,gg = 4 sqrt(g1 g2) B m / (A W)
/// ```
pub fn steady_state_analytic(bath: &TwoQubitBath) -> Result<DensityMatrix4> {
    bath.validate()?;
    if !bath.resonant || bath.reflection_mode {
        return Err(Error::Regime(
            "closed-form steady state requires the resonant one-sided configuration".into(),
        ));
    }
    let (g1, g2, n1, n2, m) = (bath.gamma1, bath.gamma2, bath.n1, bath.n2, bath.m());
    let a = 4.0 * (n1 + 1.0) * (n2 + 1.0);
    let b = g1 * (n1 + 1.0) + g2 * (n2 + 1.0);
    let w = b * b - 4.0 * g1 * g2 * m.norm_sqr();
    if w.abs() < 1e-12 * b * b {
        return Err(Error::Numerical(
            "steady state singular: squeezing saturates the stability bound".into(),
        ));
    }
    let cc = 4.0 * g1 * g2 * m.norm_sqr() / (a * w);
    let x = m * (4.0 * (g1 * g2).sqrt() * b / (a * w));
    let mut rho = CMat::zeros(4, 4);
    rho[(0, 0)] = c(n1 * n2 / a + cc);
    rho[(1, 1)] = c(n1 * (n2 + 2.0) / a - cc);
    rho[(2, 2)] = c((n1 + 2.0) * n2 / a - cc);
    rho[(3, 3)] = c((n1 + 2.0) * (n2 + 2.0) / a + cc);
    rho[(0, 3)] = x;
    rho[(3, 0)] = x.conj();
    DensityMatrix4::try_new(rho)
}

/// Steady-state qubit correlators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub sz1: f64,
    pub sz2: f64,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

pub fn correlators(rho: &DensityMatrix4) -> Correlators {
    let expect = |op: &CMat| (op * rho.matrix()).trace().re;
    Correlators {
        sz1: expect(&pauli(0, 2)),
        sz2: expect(&pauli(1, 2)),
        xx: expect(&(pauli(0, 0) * pauli(1, 0))),
        yy: expect(&(pauli(0, 1) * pauli(1, 1))),
        xy: expect(&(pauli(0, 0) * pauli(1, 1))),
    }
}

/// Two-qubit concurrence (spin-flip construction). The flip eigenvalues are
/// computed as singular values of `sqrt(rho) (sy x sy) conj(sqrt(rho))`,
/// which avoids squaring and keeps near-pure states accurate.
pub fn concurrence(rho: &DensityMatrix4) -> f64 {
    let yy = pauli(0, 1) * pauli(1, 1);
    let sr = hermitian_sqrt(rho.matrix());
    let b = &sr * &yy * sr.conjugate();
    let svd = b.svd(false, false);
    let mut lam: Vec<f64> = svd.singular_values.as_slice().to_vec();
    lam.sort_by(f64::total_cmp);
    (lam[3] - lam[2] - lam[1] - lam[0]).max(0.0)
}

/// Smallest |Re| over the nonzero part of the spectrum: the inverse
/// relaxation time toward steady state.
pub fn spectral_gap(liouv: &Liouvillian16) -> Result<f64> {
    let ev = eigenvalues(&liouv.0)?;
    let radius = ev.iter().map(|l| l.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok(ev
        .iter()
        .filter(|l| l.norm() > 1e-10 * radius)
        .map(|l| l.re.abs())
        .fold(f64::INFINITY, f64::min))
}

/// Base-2 entanglement entropy of a pure two-qubit state, from the reduced
/// state of qubit 1. Mixed inputs are rejected.
pub fn entanglement_entropy(rho: &DensityMatrix4) -> Result<f64> {
    let purity = rho.purity();
    if purity < 1.0 - 1e-10 {
        return Err(Error::NotPure { purity });
    }
    let m = rho.matrix();
    let mut r1 = CMat::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            r1[(a, b)] = m[(2 * a, 2 * b)] + m[(2 * a + 1, 2 * b + 1)];
        }
    }
    let mut e = 0.0;
    for lam in hermitian_eigenvalues(&r1) {
        let p = lam.clamp(0.0, 1.0);
        if p > 0.0 {
            e -= p * p.log2();
        }
    }
    Ok(e)
}

/// The pure steady state reached by a quantum-limited symmetric squeezed
/// bath: `(sqrt(n+1)|gg> + e^{i theta} sqrt(n)|ee>) / sqrt(2n+1)`.
pub fn quantum_limited_pure_state(n: f64, theta: f64) -> CVec {
    let norm = (2.0 * n + 1.0).sqrt();
    let mut psi = CVec::zeros(4);
    psi[0] = C64::from_polar(n.sqrt() / norm, theta);
    psi[3] = c((n + 1.0).sqrt() / norm);
    psi
}
