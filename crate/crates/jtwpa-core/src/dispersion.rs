//! Engineered dispersion of a Josephson nonlinear transmission line.
//!
//! The line is a chain of identical cells: a Josephson junction in series,
//! a shunt element to ground per cell. In the continuum limit the wavevector
//! obeys
//!
//! ```text
//!   k(w)^2 = -i w [Y(w)/a] l / (1 - w^2/w_P^2)
//! ```
//!
//! where `Y(w)` is the (lossless, purely imaginary) shunt admittance per
//! cell, `a` the cell length, `l` the inductance per unit length and `w_P`
//! the junction plasma frequency. A bare capacitive shunt gives the usual
//! linear dispersion with a plasma-frequency correction; adding LC resonator
//! branches opens bandgaps around their dressed resonances, which is the
//! handle used for resonant phase matching.

use crate::error::{Error, Result};
use crate::linalg::C64;
use serde::{Deserialize, Serialize};

/// Relative tolerance used when validating derived quantities.
pub const DERIVED_TOL: f64 = 1e-12;

/// Continuum parameters of the bare nonlinear line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineParams {
    /// Number of unit cells.
    pub n_cells: u32,
    /// Length per unit cell (m).
    pub a: f64,
    /// Capacitance to ground per unit length (F/m).
    pub c: f64,
    /// Inductance per unit length (H/m).
    pub l: f64,
    /// Junction plasma angular frequency (rad/s).
    pub omega_p: f64,
    /// Junction critical current (A).
    pub i_c: f64,
}

impl LineParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a", self.a),
            ("c", self.c),
            ("l", self.l),
            ("omega_p", self.omega_p),
            ("i_c", self.i_c),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "line.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.n_cells == 0 {
            return Err(Error::InvalidParameter("line.n_cells must be >= 1".into()));
        }
        Ok(())
    }

    /// Characteristic impedance sqrt(l/c) (Ohm).
    pub fn z0(&self) -> f64 {
        (self.l / self.c).sqrt()
    }

    /// Physical length of the nonlinear section, n_cells * a (m).
    pub fn length(&self) -> f64 {
        f64::from(self.n_cells) * self.a
    }

    /// Phase velocity of the bare line, 1/sqrt(l c) (m/s).
    pub fn velocity(&self) -> f64 {
        1.0 / (self.l * self.c).sqrt()
    }
}

/// One LC resonator shunt branch: a coupling capacitor `c_c` in series with
/// a parallel `l_r || c_r` tank, all per unit cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    /// Coupling capacitance per cell (F).
    pub c_c: f64,
    /// Resonator capacitance per cell (F).
    pub c_r: f64,
    /// Resonator inductance per cell (H).
    pub l_r: f64,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_c", self.c_c), ("c_r", self.c_r), ("l_r", self.l_r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "resonator.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Bare tank resonance 1/sqrt(l_r c_r) (rad/s).
    pub fn omega_r(&self) -> f64 {
        1.0 / (self.l_r * self.c_r).sqrt()
    }

    /// Frequency of the branch admittance pole, 1/sqrt(l_r (c_r + c_c)).
    /// This is the lower edge of the bandgap the branch opens.
    pub fn omega_pole(&self) -> f64 {
        1.0 / (self.l_r * (self.c_r + self.c_c)).sqrt()
    }

    /// Branch admittance (S). Purely imaginary for real omega.
    ///
    /// Algebraically regularized so the bare tank resonance (where the branch
    /// admittance vanishes) is harmless; the only true pole is the dressed
    /// series resonance, reported as an on-resonance error.
    pub fn admittance(&self, omega: f64) -> Result<C64> {
        let d = 1.0 - omega * omega * self.l_r * self.c_r;
        let s = omega * omega * self.l_r * self.c_c;
        let den = d - s;
        // den is a difference of O(1) terms, so the cancellation floor
        // scales with them rather than with den itself
        let scale = 1.0 + omega * omega * self.l_r * (self.c_r + self.c_c);
        if den.abs() < 1e-13 * scale {
            return Err(Error::OnResonance { omega });
        }
        Ok(C64::new(0.0, omega * self.c_c * d / den))
    }
}

/// A dispersion-engineered device: the bare line plus its resonator branches,
/// sorted by bare resonance frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JtwpaDevice {
    pub line: LineParams,
    #[serde(default)]
    pub resonators: Vec<ResonatorSpec>,
}

impl JtwpaDevice {
    pub fn new(line: LineParams, mut resonators: Vec<ResonatorSpec>) -> Result<Self> {
        line.validate()?;
        for r in &resonators {
            r.validate()?;
        }
        resonators.sort_by(|a, b| a.omega_r().total_cmp(&b.omega_r()));
        for pair in resonators.windows(2) {
            let (lo, hi) = (pair[0].omega_r(), pair[1].omega_r());
            if hi <= lo * (1.0 + DERIVED_TOL) {
                return Err(Error::InvalidParameter(format!(
                    "resonator frequencies must be strictly increasing, got {lo} and {hi} rad/s"
                )));
            }
        }
        Ok(Self { line, resonators })
    }

    /// Validate a deserialized device (sorting order included).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.line.clone(), self.resonators.clone()).map(|_| ())
    }

    /// Shunt admittance to ground per cell, `Y(w) = i w C + sum of branches`
    /// with `C = c a`. Purely imaginary for all real omega (lossless).
    pub fn shunt_admittance_per_cell(&self, omega: f64) -> Result<C64> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be finite and > 0, got {omega}"
            )));
        }
        let mut y = C64::new(0.0, omega * self.line.c * self.line.a);
        for r in &self.resonators {
            y += r.admittance(omega)?;
        }
        Ok(y)
    }

    /// Square of the wavevector (rad^2/m^2); negative inside a bandgap.
    pub fn k_squared(&self, omega: f64) -> Result<f64> {
        let wp = self.line.omega_p;
        if (omega - wp).abs() < 1e-12 * wp {
            return Err(Error::InvalidParameter(
                "omega coincides with the junction plasma frequency".into(),
            ));
        }
        let y = self.shunt_admittance_per_cell(omega)?;
        // -i w (Y/a) l / (1 - w^2/wp^2); Y is purely imaginary so this is real.
        let denom = 1.0 - (omega / wp) * (omega / wp);
        Ok(omega * y.im * self.line.l / (self.line.a * denom))
    }

    /// Wavevector k(w). Branch cut: traveling solutions have Re k >= 0 and
    /// Im k = 0; inside a bandgap the result is evanescent with k = i|k|.
    pub fn wavevector(&self, omega: f64) -> Result<Wavevector> {
        let k2 = self.k_squared(omega)?;
        if k2 >= 0.0 {
            Ok(Wavevector { k: C64::new(k2.sqrt(), 0.0), evanescent: false })
        } else {
            Ok(Wavevector { k: C64::new(0.0, (-k2).sqrt()), evanescent: true })
        }
    }

    /// Real traveling-wave wavevector, or a bandgap error naming the gap
    /// interval around `omega`.
    pub fn traveling_wavevector(&self, omega: f64) -> Result<f64> {
        let w = self.wavevector(omega)?;
        if w.evanescent {
            let (lo, hi) = self.locate_gap(omega);
            return Err(Error::Bandgap { omega, lo, hi });
        }
        Ok(w.k.re)
    }

    /// Bisect outward from an in-gap frequency to the gap edges.
    fn locate_gap(&self, omega: f64) -> (f64, f64) {
        let in_gap = |w: f64| self.k_squared(w).map(|k2| k2 <= 0.0).unwrap_or(true);
        let edge = |mut inside: f64, mut outside: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if in_gap(mid) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            0.5 * (inside + outside)
        };
        // expand geometrically until a traveling frequency is found on each side
        let mut lo = omega;
        let mut step = omega * 1e-9;
        while in_gap(lo) && lo > omega * 0.5 {
            lo -= step;
            step *= 2.0;
        }
        let mut hi = omega;
        step = omega * 1e-9;
        while in_gap(hi) && hi < omega * 2.0 {
            hi += step;
            step *= 2.0;
        }
        (edge(omega, lo), edge(omega, hi))
    }

    /// Scan an ascending frequency grid and report contiguous runs with
    /// k^2 <= 0 as bandgap intervals. Grid points sitting exactly on an
    /// admittance pole count as gap members.
    pub fn scan_bandgaps(&self, omega_grid: &[f64]) -> Result<BandgapReport> {
        if omega_grid.is_empty() {
            return Ok(BandgapReport { gaps: vec![] });
        }
        for pair in omega_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidParameter("bandgap scan grid must be ascending".into()));
            }
        }
        if omega_grid[0] <= 0.0 {
            return Err(Error::InvalidParameter("bandgap scan grid must be positive".into()));
        }
        let mut gaps = Vec::new();
        let mut run_start: Option<usize> = None;
        for (i, &w) in omega_grid.iter().enumerate() {
            let in_gap = match self.k_squared(w) {
                Ok(k2) => k2 <= 0.0,
                Err(Error::OnResonance { .. }) => true,
                Err(e) => return Err(e),
            };
            match (in_gap, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    gaps.push((omega_grid[s], omega_grid[i - 1]));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            gaps.push((omega_grid[s], omega_grid[omega_grid.len() - 1]));
        }
        Ok(BandgapReport { gaps })
    }
}

/// Wavevector with the evanescent (in-gap) flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    pub k: C64,
    pub evanescent: bool,
}

/// Bandgap intervals found by a grid scan, as (omega_lo, omega_hi) in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandgapReport {
    pub gaps: Vec<(f64, f64)>,
}

impl BandgapReport {
    /// Number of gaps intersecting the closed interval [lo, hi].
    pub fn count_intersecting(&self, lo: f64, hi: f64) -> usize {
        self.gaps.iter().filter(|(a, b)| *b >= lo && *a <= hi).count()
    }
}

/// Default grid size for bandgap scans when a caller has no better choice.
pub const DEFAULT_SCAN_POINTS: usize = 10_001;

/// Uniform inclusive grid in rad/s.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    let step = (hi - lo) / (points as f64 - 1.0);
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Bracketed scalar root finder: bisection with a secant refinement step.
///
/// `f` must change sign over `[lo, hi]` unless an endpoint already satisfies
/// `|f| <= f_tol`, in which case that endpoint is returned. Iterates until
/// the bracket width shrinks below `rel_tol` relative to the knob magnitude.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, f_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f_lo = f(lo)?;
    if f_lo.abs() <= f_tol {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi.abs() <= f_tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Untunable { lo, hi, f_lo, f_hi });
    }
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    // bisection carries the bracket down to the knob tolerance
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // bracket exhausted at f64 resolution
        }
        let fm = f(mid)?;
        if fm.abs() <= f_tol {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
        if (b - a) <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    // secant refinement inside the final bracket
    let secant = |a: f64, b: f64, fa: f64, fb: f64| {
        if fb != fa {
            let x = b - fb * (b - a) / (fb - fa);
            if x >= a && x <= b {
                return x;
            }
        }
        0.5 * (a + b)
    };
    let mut x = secant(a, b, fa, fb);
    for _ in 0..3 {
        let fx = f(x)?;
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        x = secant(a, b, fa, fb);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bare_line() -> LineParams {
        LineParams {
            n_cells: 2000,
            a: 16e-6,
            c: 3.0e-9,
            l: 7.5e-6,
            omega_p: 2.0 * std::f64::consts::PI * 72.935e9,
            i_c: 2.75e-6,
        }
    }

    fn rpm_resonator() -> ResonatorSpec {
        ResonatorSpec { c_c: 10e-15, c_r: 7.0e-12, l_r: 100e-12 }
    }

    #[test]
    fn derived_line_quantities() {
        let line = bare_line();
        assert!((line.z0() - 50.0).abs() < 1e-12 * 50.0);
        assert!((line.length() - 0.032).abs() < 1e-15);
    }

    #[test]
    fn admittance_without_resonators_is_iwc() {
        let dev = JtwpaDevice::new(bare_line(), vec![]).unwrap();
        let w = 2.0 * std::f64::consts::PI * 5e9;
        let y = dev.shunt_admittance_per_cell(w).unwrap();
        assert_eq!(y.re, 0.0);
        assert!((y.im - w * dev.line.c * dev.line.a).abs() < 1e-20);
    }

    #[test]
    fn tank_resonance_is_six_ghz() {
        let r = rpm_resonator();
        let f_r = r.omega_r() / (2.0 * std::f64::consts::PI);
        assert!((f_r - 6.0e9).abs() / 6.0e9 < 5e-3, "got {f_r}");
    }

    #[test]
    fn branch_admittance_matches_series_parallel_reduction() {
        // independent reduction: Z = 1/(i w c_c) + (i w l_r || 1/(i w c_r))
        let r = rpm_resonator();
        let w = 2.0 * std::f64::consts::PI * 1e9;
        let z_c = C64::new(0.0, -1.0 / (w * r.c_c));
        let z_l = C64::new(0.0, w * r.l_r);
        let z_cr = C64::new(0.0, -1.0 / (w * r.c_r));
        let z_tank = z_l * z_cr / (z_l + z_cr);
        let expected = (z_c + z_tank).inv();
        let got = r.admittance(w).unwrap();
        assert!((got - expected).norm() < 1e-12 * expected.norm());
        assert!(got.re.abs() < 1e-14);
    }

    #[test]
    fn branch_admittance_vanishes_at_bare_tank_resonance() {
        let r = rpm_resonator();
        let y = r.admittance(r.omega_r()).unwrap();
        assert!(y.norm() < 1e-18);
    }

    #[test]
    fn branch_pole_is_signaled() {
        let r = rpm_resonator();
        match r.admittance(r.omega_pole()) {
            Err(Error::OnResonance { .. }) => {}
            other => panic!("expected on-resonance error, got {other:?}"),
        }
    }

    #[test]
    fn low_frequency_dispersion_is_linear() {
        let dev = JtwpaDevice::new(bare_line(), vec![]).unwrap();
        let w = 2.0 * std::f64::consts::PI * 1e6;
        let k = dev.traveling_wavevector(w).unwrap();
        let k_lin = w * (dev.line.l * dev.line.c).sqrt();
        assert!((k - k_lin).abs() / k_lin < 1e-9);
    }

    #[test]
    fn resonator_free_wavevector_closed_form() {
        let dev = JtwpaDevice::new(bare_line(), vec![]).unwrap();
        let wp = dev.line.omega_p;
        for f_ghz in [1.0, 4.0, 8.0, 20.0] {
            let w = 2.0 * std::f64::consts::PI * f_ghz * 1e9;
            let k = dev.traveling_wavevector(w).unwrap();
            let expected = w / dev.line.velocity() / (1.0 - (w / wp).powi(2)).sqrt();
            assert!((k - expected).abs() <= 1e-12 * expected, "f = {f_ghz} GHz");
        }
    }

    #[test]
    fn no_gaps_below_plasma_without_resonators() {
        let dev = JtwpaDevice::new(bare_line(), vec![]).unwrap();
        let grid = linspace(1e9, 0.5 * dev.line.omega_p, 1001);
        let report = dev.scan_bandgaps(&grid).unwrap();
        assert!(report.gaps.is_empty());
    }

    #[test]
    fn single_resonator_opens_one_gap_near_six_ghz() {
        let dev = JtwpaDevice::new(bare_line(), vec![rpm_resonator()]).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = linspace(two_pi * 4e9, two_pi * 8e9, DEFAULT_SCAN_POINTS);
        let report = dev.scan_bandgaps(&grid).unwrap();
        assert_eq!(report.gaps.len(), 1);
        let (lo, hi) = report.gaps[0];
        assert!(lo < hi);
        assert!(report.count_intersecting(two_pi * 5.5e9, two_pi * 6.5e9) == 1);
        // the gap hugs the dressed pole from above
        let pole = rpm_resonator().omega_pole();
        assert!(lo <= pole * (1.0 + 2e-4) && hi >= pole * (1.0 - 2e-4));
    }

    #[test]
    fn evanescent_flagged_inside_gap() {
        let dev = JtwpaDevice::new(bare_line(), vec![rpm_resonator()]).unwrap();
        let r = rpm_resonator();
        let w = 0.5 * (r.omega_pole() + 1.0 / (r.l_r * (r.c_r + 0.5 * r.c_c)).sqrt());
        // midway between pole and bare resonance side; find an in-gap point by scan
        let grid = linspace(r.omega_pole() * 0.9999, r.omega_r() * 1.0001, 4001);
        let report = dev.scan_bandgaps(&grid).unwrap();
        assert!(!report.gaps.is_empty());
        let (lo, hi) = report.gaps[0];
        let mid = 0.5 * (lo + hi);
        let wav = dev.wavevector(mid).unwrap();
        assert!(wav.evanescent);
        assert!(wav.k.im > 0.0 && wav.k.re == 0.0);
        match dev.traveling_wavevector(mid) {
            Err(Error::Bandgap { lo: glo, hi: ghi, .. }) => {
                assert!(glo < mid && mid < ghi);
            }
            other => panic!("expected bandgap error, got {other:?}"),
        }
        let _ = w;
    }

    #[test]
    fn gap_widens_with_coupling_capacitance() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = linspace(two_pi * 5.9e9, two_pi * 6.1e9, 200_001);
        let mut widths = Vec::new();
        for scale in [1.0, 1.5, 2.0, 3.0] {
            let mut r = rpm_resonator();
            r.c_c *= scale;
            let dev = JtwpaDevice::new(bare_line(), vec![r]).unwrap();
            let report = dev.scan_bandgaps(&grid).unwrap();
            assert_eq!(report.gaps.len(), 1);
            let (lo, hi) = report.gaps[0];
            widths.push(hi - lo);
        }
        for pair in widths.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn resonator_list_sorted_and_strictly_increasing() {
        let r1 = rpm_resonator();
        let mut r2 = rpm_resonator();
        r2.l_r = 50e-12; // higher resonance
        let dev = JtwpaDevice::new(bare_line(), vec![r2.clone(), r1.clone()]).unwrap();
        assert!(dev.resonators[0].omega_r() < dev.resonators[1].omega_r());
        let dup = JtwpaDevice::new(bare_line(), vec![r1.clone(), r1]);
        assert!(dup.is_err());
    }

    #[test]
    fn losslessness_over_band() {
        let dev = JtwpaDevice::new(bare_line(), vec![rpm_resonator()]).unwrap();
        for w in linspace(2.0e9, 6.0e10, 997) {
            if let Ok(y) = dev.shunt_admittance_per_cell(w) {
                assert!(y.re.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn find_root_bisects_cubic() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let x = find_root(f, 0.0, 2.0, 1e-12, 0.0).unwrap();
        assert!((x - 2.0f64.powf(1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn find_root_reports_untunable() {
        let f = |x: f64| Ok(x * x + 1.0);
        match find_root(f, -1.0, 1.0, 1e-12, 1e-30) {
            Err(Error::Untunable { .. }) => {}
            other => panic!("expected untunable, got {other:?}"),
        }
    }
}
