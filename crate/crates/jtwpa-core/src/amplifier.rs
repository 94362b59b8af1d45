//! Parametric gain and squeezing spectra under a monochromatic classical pump.
//!
//! The pump is treated as undepleted; four-wave mixing couples each signal
//! frequency `w` to its idler `2*W_p - w`. The coupled pair has the closed
//! form solution
//!
//! ```text
//!   u = cosh(g z) - i (dk/2g) sinh(g z)
//!   v = (lambda/g) sinh(g z)
//!   g = sqrt(lambda^2 - (dk/2)^2)        (imaginary g allowed)
//! ```
//!
//! with `lambda = beta^2 sqrt(k_w k_idler)` and the phase mismatch `dk`
//! including the cross/self-phase-modulation correction. Output moments for
//! a vacuum input are `N = |v|^2`, `M = i u v e^{i dk z}`, and the two-mode
//! squeezing spectrum is `S = 2N + 1 - 2|M|` (vacuum level 1).

use crate::dispersion::{find_root, JtwpaDevice};
use crate::error::{Error, Result};
use crate::linalg::{C64, I_C};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Classical monochromatic pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    /// Pump angular frequency (rad/s).
    pub omega_pump: f64,
    /// Dimensionless amplitude, pump current over four times the critical current.
    pub beta: f64,
    /// Optional pump current (A); must equal `4 beta i_c` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_pump: Option<f64>,
}

impl PumpConfig {
    pub fn new(omega_pump: f64, beta: f64) -> Result<Self> {
        let p = Self { omega_pump, beta, i_pump: None };
        p.validate()?;
        Ok(p)
    }

    pub fn from_current(omega_pump: f64, i_pump: f64, i_c: f64) -> Result<Self> {
        if !(i_c > 0.0) {
            return Err(Error::InvalidParameter("i_c must be > 0".into()));
        }
        let p = Self { omega_pump, beta: i_pump / (4.0 * i_c), i_pump: Some(i_pump) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_pump.is_finite() && self.omega_pump > 0.0) {
            return Err(Error::InvalidParameter("pump frequency must be > 0".into()));
        }
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Check the optional pump current against a device's critical current.
    pub fn validate_for(&self, device: &JtwpaDevice) -> Result<()> {
        self.validate()?;
        if let Some(ip) = self.i_pump {
            let implied = ip / (4.0 * device.line.i_c);
            let scale = self.beta.abs().max(implied.abs()).max(f64::MIN_POSITIVE);
            if (implied - self.beta).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!(
                    "i_pump = {ip} A implies beta = {implied}, but beta = {}",
                    self.beta
                )));
            }
        }
        Ok(())
    }
}

/// Output transmittance, a beam splitter after the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossModel {
    /// Frequency-independent transmittance in (0, 1].
    Flat { eta: f64 },
    /// Tabulated transmittance, linearly interpolated over an ascending grid.
    Table { omega: Vec<f64>, eta: Vec<f64> },
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            LossModel::Flat { eta } => {
                if !(*eta > 0.0 && *eta <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "eta must lie in (0, 1], got {eta}"
                    )));
                }
            }
            LossModel::Table { omega, eta } => {
                if omega.len() != eta.len() || omega.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "loss table needs matching omega/eta arrays with >= 2 entries".into(),
                    ));
                }
                for pair in omega.windows(2) {
                    if pair[1] <= pair[0] {
                        return Err(Error::InvalidParameter("loss table grid must ascend".into()));
                    }
                }
                for &e in eta {
                    if !(e > 0.0 && e <= 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "eta must lie in (0, 1], got {e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Transmittance at `omega`; tables clamp outside their range.
    pub fn eta(&self, omega: f64) -> f64 {
        match self {
            LossModel::Flat { eta } => *eta,
            LossModel::Table { omega: xs, eta: ys } => {
                if omega <= xs[0] {
                    return ys[0];
                }
                if omega >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let i = xs.partition_point(|&x| x < omega).saturating_sub(1);
                let t = (omega - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
        }
    }
}

/// Phase mismatch between the pump pair and a signal/idler pair, including
/// the self/cross-phase-modulation correction (rad/m).
pub fn phase_mismatch(device: &JtwpaDevice, pump: &PumpConfig, omega: f64) -> Result<f64> {
    pump.validate_for(device)?;
    let idler = idler_of(pump, omega)?;
    let k_p = device.traveling_wavevector(pump.omega_pump)?;
    let k_s = device.traveling_wavevector(omega)?;
    let k_i = device.traveling_wavevector(idler)?;
    let b2 = pump.beta * pump.beta;
    Ok((2.0 * k_p - k_s - k_i) + 2.0 * b2 * (k_p - k_s - k_i))
}

fn idler_of(pump: &PumpConfig, omega: f64) -> Result<f64> {
    let idler = 2.0 * pump.omega_pump - omega;
    if !(omega > 0.0 && idler > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "signal {omega} rad/s has no positive idler for pump {} rad/s",
            pump.omega_pump
        )));
    }
    Ok(idler)
}

/// Closed-form pair amplitudes from the raw coupling and mismatch.
/// `g z -> 0` is evaluated by its analytic limit.
fn uv_from_mismatch(lambda: f64, delta_k: f64, z: f64) -> (C64, C64, C64) {
    let g2 = C64::new(lambda * lambda - 0.25 * delta_k * delta_k, 0.0);
    let g = g2.sqrt();
    let gz = g * z;
    if gz.norm() < 1e-8 {
        let u = C64::new(1.0, -0.5 * delta_k * z);
        let v = C64::new(lambda * z, 0.0);
        return (u, v, g);
    }
    let u = gz.cosh() - I_C * (0.5 * delta_k / g) * gz.sinh();
    let v = (lambda / g) * gz.sinh();
    (u, v, g)
}

/// Signal/idler pair amplitudes `(u, v, g)` after a propagation length `z`.
pub fn uv_amplitudes(
    device: &JtwpaDevice,
    pump: &PumpConfig,
    omega: f64,
    z: f64,
) -> Result<(C64, C64, C64)> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InvalidParameter(format!("z must be > 0, got {z}")));
    }
    let idler = idler_of(pump, omega)?;
    let k_s = device.traveling_wavevector(omega)?;
    let k_i = device.traveling_wavevector(idler)?;
    let lambda = pump.beta * pump.beta * (k_s * k_i).sqrt();
    let dk = phase_mismatch(device, pump, omega)?;
    Ok(uv_from_mismatch(lambda, dk, z))
}

/// One row of a squeezing spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub gain: f64,
    pub n_thermal: f64,
    pub m_squeeze: C64,
    pub s_quad: f64,
    pub delta_k: f64,
    pub gap: bool,
}

/// Gain, output moments and squeezing over a frequency grid.
///
/// Grid points whose signal or idler falls inside a bandgap are flagged and
/// carry vacuum-passthrough placeholders (gain 1, N = M = 0, S = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeSpectrum {
    pub omega_pump: f64,
    pub omega: Vec<f64>,
    pub gain: Vec<f64>,
    pub n_thermal: Vec<f64>,
    pub m_squeeze: Vec<C64>,
    pub s_quad: Vec<f64>,
    pub delta_k: Vec<f64>,
    pub gap: Vec<bool>,
    /// True when a loss model was folded into the moments.
    pub lossy: bool,
}

impl SqueezeSpectrum {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn point(&self, i: usize) -> SpectrumPoint {
        SpectrumPoint {
            omega: self.omega[i],
            gain: self.gain[i],
            n_thermal: self.n_thermal[i],
            m_squeeze: self.m_squeeze[i],
            s_quad: self.s_quad[i],
            delta_k: self.delta_k[i],
            gap: self.gap[i],
        }
    }

    /// Index of the non-gap point with the largest gain, if any.
    pub fn peak_gain_index(&self) -> Option<usize> {
        (0..self.len())
            .filter(|&i| !self.gap[i])
            .max_by(|&i, &j| self.gain[i].total_cmp(&self.gain[j]))
    }
}

/// Maximum relative deviation of `|M|^2` from `N(N+1)` over non-gap points.
/// Only meaningful for lossless spectra, where the bound is saturated.
pub fn heisenberg_check(spectrum: &SqueezeSpectrum) -> Result<f64> {
    if spectrum.lossy {
        return Err(Error::Regime(
            "heisenberg check applies to lossless spectra only".into(),
        ));
    }
    let mut worst = 0.0f64;
    for i in 0..spectrum.len() {
        if spectrum.gap[i] {
            continue;
        }
        let n = spectrum.n_thermal[i];
        let m2 = spectrum.m_squeeze[i].norm_sqr();
        let dev = (m2 - n * (n + 1.0)).abs() / (n * (n + 1.0) + 1.0);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Compute the squeezing spectrum over an ascending grid.
pub fn spectrum(
    device: &JtwpaDevice,
    pump: &PumpConfig,
    grid: &[f64],
    loss: Option<&LossModel>,
) -> Result<SqueezeSpectrum> {
    pump.validate_for(device)?;
    if let Some(l) = loss {
        l.validate()?;
    }
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("spectrum grid needs at least 2 points".into()));
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter("spectrum grid must ascend".into()));
        }
    }
    if grid[0] <= 0.0 || grid[grid.len() - 1] >= 2.0 * pump.omega_pump {
        return Err(Error::InvalidParameter(
            "spectrum grid must satisfy 0 < omega < 2 * pump frequency".into(),
        ));
    }
    // The pump itself must propagate.
    device.traveling_wavevector(pump.omega_pump)?;

    let z = device.line.length();
    let rows: Vec<(f64, f64, C64, f64, f64, bool)> = grid
        .par_iter()
        .map(|&w| -> Result<(f64, f64, C64, f64, f64, bool)> {
            let idler = idler_of(pump, w)?;
            let s_trav = device.wavevector(w)?;
            let i_trav = device.wavevector(idler)?;
            let in_gap = s_trav.evanescent || i_trav.evanescent;
            if in_gap {
                return Ok((1.0, 0.0, C64::new(0.0, 0.0), 1.0, 0.0, true));
            }
            let k_s = s_trav.k.re;
            let k_i = i_trav.k.re;
            let k_p = device.traveling_wavevector(pump.omega_pump)?;
            let b2 = pump.beta * pump.beta;
            let dk = (2.0 * k_p - k_s - k_i) + 2.0 * b2 * (k_p - k_s - k_i);
            let lambda = b2 * (k_s * k_i).sqrt();
            let (u, v, _) = uv_from_mismatch(lambda, dk, z);
            let m_lossless = I_C * u * v * C64::new(0.0, dk * z).exp();
            let (eta_s, eta_i) = match loss {
                Some(l) => (l.eta(w), l.eta(idler)),
                None => (1.0, 1.0),
            };
            let gain = eta_s * u.norm_sqr();
            let n = eta_s * v.norm_sqr();
            let m = (eta_s * eta_i).sqrt() * m_lossless;
            let s = 2.0 * n + 1.0 - 2.0 * m.norm();
            Ok((gain, n, m, s, dk, false))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = SqueezeSpectrum {
        omega_pump: pump.omega_pump,
        omega: grid.to_vec(),
        gain: Vec::with_capacity(grid.len()),
        n_thermal: Vec::with_capacity(grid.len()),
        m_squeeze: Vec::with_capacity(grid.len()),
        s_quad: Vec::with_capacity(grid.len()),
        delta_k: Vec::with_capacity(grid.len()),
        gap: Vec::with_capacity(grid.len()),
        lossy: loss.is_some(),
    };
    for (gain, n, m, s, dk, gap) in rows {
        out.gain.push(gain);
        out.n_thermal.push(n);
        out.m_squeeze.push(m);
        out.s_quad.push(s);
        out.delta_k.push(dk);
        out.gap.push(gap);
    }
    Ok(out)
}

/// Sorted union of a grid with its mirror image about the pump frequency.
/// Nearly coincident points (1e-9 relative) are merged.
pub fn symmetrized_grid(grid: &[f64], omega_pump: f64) -> Vec<f64> {
    let mut all: Vec<f64> = grid
        .iter()
        .copied()
        .chain(grid.iter().map(|&w| 2.0 * omega_pump - w))
        .filter(|&w| w > 0.0)
        .collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for w in all {
        if let Some(&last) = out.last() {
            if (w - last).abs() <= 1e-9 * w.abs() {
                continue;
            }
        }
        out.push(w);
    }
    out
}

/// Variance of the filtered symmetric two-mode quadrature around `omega0`,
/// for a normalized top-hat filter of the given half-width. Reduces to the
/// pointwise spectrum as the half-width shrinks.
pub fn filtered_two_mode_variance(
    spectrum: &SqueezeSpectrum,
    omega0: f64,
    halfwidth: f64,
) -> Result<f64> {
    if !(halfwidth > 0.0) {
        return Err(Error::InvalidParameter("filter halfwidth must be > 0".into()));
    }
    let mirror = 2.0 * spectrum.omega_pump - omega0;
    let a = window_mean(spectrum, omega0 - halfwidth, omega0 + halfwidth)?;
    let b = window_mean(spectrum, mirror - halfwidth, mirror + halfwidth)?;
    Ok(0.5 * (a + b))
}

/// Trapezoid mean of S over [lo, hi] with linearly interpolated endpoints.
fn window_mean(spec: &SqueezeSpectrum, lo: f64, hi: f64) -> Result<f64> {
    let omega = &spec.omega;
    let n = omega.len();
    if lo < omega[0] || hi > omega[n - 1] {
        return Err(Error::InvalidParameter(format!(
            "filter window [{lo:.6e}, {hi:.6e}] exceeds the spectrum grid"
        )));
    }
    let s_at = |x: f64, i: usize| -> f64 {
        // linear interpolation on segment [i, i+1]
        let t = (x - omega[i]) / (omega[i + 1] - omega[i]);
        spec.s_quad[i] + t * (spec.s_quad[i + 1] - spec.s_quad[i])
    };
    let seg_lo = omega.partition_point(|&w| w <= lo) - 1;
    let seg_hi = omega.partition_point(|&w| w < hi) - 1;
    for i in seg_lo..=(seg_hi + 1).min(n - 1) {
        if spec.gap[i] {
            let run_lo = omega[(0..=i).rev().take_while(|&j| spec.gap[j]).last().unwrap()];
            let run_hi = omega[(i..n).take_while(|&j| spec.gap[j]).last().unwrap()];
            return Err(Error::Bandgap { omega: omega[i], lo: run_lo, hi: run_hi });
        }
    }
    if seg_lo == seg_hi {
        return Ok(0.5 * (s_at(lo, seg_lo) + s_at(hi, seg_lo)));
    }
    let mut acc = 0.0;
    // partial first segment
    acc += 0.5 * (s_at(lo, seg_lo) + spec.s_quad[seg_lo + 1]) * (omega[seg_lo + 1] - lo);
    // full interior segments
    for i in (seg_lo + 1)..seg_hi {
        acc += 0.5 * (spec.s_quad[i] + spec.s_quad[i + 1]) * (omega[i + 1] - omega[i]);
    }
    // partial last segment
    acc += 0.5 * (spec.s_quad[seg_hi] + s_at(hi, seg_hi)) * (hi - omega[seg_hi]);
    Ok(acc / (hi - lo))
}

/// Which knob a tuning problem adjusts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneKnob {
    PumpFrequency,
    /// Bare resonance of the lowest-frequency resonator branch; its
    /// inductance is rescaled to place the resonance at the knob value.
    ResonatorFrequency,
}

/// Solve `delta_k(target_omega) = 0` for the requested knob by bracketed
/// root finding (bisection refined by secant steps).
///
/// Returns the tuned knob value in rad/s. The residual satisfies
/// `|delta_k| < 1e-6 k(target)`.
pub fn tune_operating_point(
    device: &JtwpaDevice,
    pump: &PumpConfig,
    target_omega: f64,
    knob: TuneKnob,
    bracket: (f64, f64),
) -> Result<f64> {
    pump.validate_for(device)?;
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
        return Err(Error::InvalidParameter("tuning bracket must be positive and ordered".into()));
    }
    if knob == TuneKnob::ResonatorFrequency && device.resonators.is_empty() {
        return Err(Error::InvalidParameter(
            "resonator_frequency knob needs at least one resonator".into(),
        ));
    }
    let mismatch_at = |x: f64| -> Result<f64> {
        match knob {
            TuneKnob::PumpFrequency => {
                let p = PumpConfig { omega_pump: x, ..pump.clone() };
                phase_mismatch(device, &p, target_omega)
            }
            TuneKnob::ResonatorFrequency => {
                let mut d = device.clone();
                let r = &mut d.resonators[0];
                r.l_r = 1.0 / (x * x * r.c_r);
                let d = JtwpaDevice::new(d.line, d.resonators)?;
                phase_mismatch(&d, pump, target_omega)
            }
        }
    };
    let f_tol = 1e-6 * device.traveling_wavevector(target_omega)?;
    let knob_value = find_root(mismatch_at, bracket.0, bracket.1, 1e-10, f_tol)?;
    let residual = mismatch_at(knob_value)?;
    if residual.abs() > f_tol {
        return Err(Error::Numerical(format!(
            "tuner converged on the knob but |delta_k| = {residual:.3e} exceeds {f_tol:.3e} rad/m"
        )));
    }
    Ok(knob_value)
}

/// Power gain in dB.
pub fn gain_db(gain: f64) -> f64 {
    10.0 * gain.log10()
}

/// Squeezing in dB below vacuum (positive when squeezed).
pub fn squeezing_db(s: f64) -> f64 {
    -10.0 * s.log10()
}
