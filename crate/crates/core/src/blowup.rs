//! Initial data that refocuses into a cusp at rational times.
//!
//! The datum is a truncation of `u₀ = Σ_{gcd(j,k)=1} c_{jk} W(-j/k) φ` with
//! `φ(x) = e^{-b|x|}`. At `t = j/k` the term `c_{jk} φ` reappears unchanged
//! and carries the gradient jump of `φ` at the origin.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{inverse_transform, Grid3, RealField, SpectralField};
use crate::multiplier::apply_propagator;

/// Samples beyond this magnitude at the box face indicate periodization error.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Decay rate `b` of `φ_b(x) = e^{-b|x|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub b: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { b: 2.0 }
    }
}

impl ProfileSpec {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("decay rate must be positive, got {b}")));
        }
        Ok(Self { b })
    }

    pub fn value(&self, x: f64, y1: f64, y2: f64) -> f64 {
        (-self.b * (x * x + y1 * y1 + y2 * y2).sqrt()).exp()
    }

    /// Continuum transform `8πb / (b² + |ξ|²)²`.
    pub fn transform(&self, xi_sqr: f64) -> f64 {
        let b = self.b;
        8.0 * std::f64::consts::PI * b / (b * b + xi_sqr).powi(2)
    }

    /// `‖φ_b‖₂² = π / b³`.
    pub fn l2_norm_sqr(&self) -> f64 {
        std::f64::consts::PI / self.b.powi(3)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// The profile is not negligible on the box boundary.
    Periodization { boundary_magnitude: f64 },
}

/// Pointwise samples of the profile plus any periodization warning.
#[derive(Clone, Debug)]
pub struct SampledProfile {
    pub field: RealField,
    pub boundary_magnitude: f64,
    pub warnings: Vec<Warning>,
}

pub fn sample_profile(spec: ProfileSpec, grid: &Grid3) -> SampledProfile {
    let field = RealField::from_fn(grid, |x, y1, y2| spec.value(x, y1, y2));
    // nearest boundary point sits on an axis at distance L/2
    let boundary_magnitude = (-spec.b * 0.5 * grid.box_len()).exp();
    let mut warnings = Vec::new();
    if boundary_magnitude > BOUNDARY_TOLERANCE {
        warnings.push(Warning::Periodization { boundary_magnitude });
    }
    SampledProfile {
        field,
        boundary_magnitude,
        warnings,
    }
}

/// Fourier coefficients of the periodized profile: the continuum transform
/// evaluated on the lattice. Free of the aliasing that point samples of the
/// cusp carry into every mode.
pub fn profile_spectrum(spec: ProfileSpec, grid: &Grid3) -> SpectralField {
    let k = grid.wavenumbers();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let [a, b, c] = grid.unflat(idx);
            Complex64::new(spec.transform(k[a] * k[a] + k[b] * k[b] + k[c] * k[c]), 0.0)
        })
        .collect();
    SpectralField::from_vec_unchecked(grid, coeffs)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All `(j, k)` with `1 ≤ j ≤ j_max`, `1 ≤ k ≤ k_max`, `gcd(j, k) = 1`,
/// ordered by `k` then `j`.
pub fn coprime_pairs(j_max: u32, k_max: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for k in 1..=k_max {
        for j in 1..=j_max {
            if gcd(j as u64, k as u64) == 1 {
                out.push((j, k));
            }
        }
    }
    out
}

/// A blow-up coefficient and whether it is invisible next to the leading one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    /// Below `f64::EPSILON · c₁₁`: adding the term cannot change the datum.
    pub negligible: bool,
}

/// `c_{jk} = e^{-e^k} e^{-j²}`, evaluated as a single exponential of the summed exponent.
pub fn coefficient(j: u32, k: u32) -> Coefficient {
    let value = double_exponential(j, k);
    Coefficient {
        value,
        negligible: value < f64::EPSILON * double_exponential(1, 1),
    }
}

fn double_exponential(j: u32, k: u32) -> f64 {
    let exponent = (k as f64).exp() + (j as f64) * (j as f64);
    (-exponent).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `e^{-e^k} e^{-j²}`
    DoubleExponential,
    /// Explicit `(j, k) → c` table; pairs missing from the table are skipped.
    Custom { table: Vec<(u32, u32, f64)> },
}

impl CoefficientRule {
    /// Custom table `c_{jk} = base^{-(j+k)}` over the coprime pairs.
    pub fn geometric(j_max: u32, k_max: u32, base: f64) -> Self {
        let table = coprime_pairs(j_max, k_max)
            .into_iter()
            .map(|(j, k)| (j, k, base.powi(-((j + k) as i32))))
            .collect();
        CoefficientRule::Custom { table }
    }
}

/// Closed time interval restricting which rationals `j/k` are retained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub min: f64,
    pub max: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: f64::INFINITY,
        }
    }
}

impl TimeWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.min && t <= self.max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSpec {
    pub j_max: u32,
    pub k_max: u32,
    pub profile: ProfileSpec,
    pub rule: CoefficientRule,
    #[serde(default)]
    pub window: TimeWindow,
}

impl Default for BlowupSpec {
    fn default() -> Self {
        Self {
            j_max: 3,
            k_max: 2,
            profile: ProfileSpec::default(),
            rule: CoefficientRule::DoubleExponential,
            window: TimeWindow::default(),
        }
    }
}

impl BlowupSpec {
    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 || self.k_max == 0 {
            return Err(invalid("j_max/k_max", "truncation bounds must be at least 1"));
        }
        ProfileSpec::new(self.profile.b)?;
        if !(self.window.min <= self.window.max) {
            return Err(invalid("window", "min must not exceed max"));
        }
        if let CoefficientRule::Custom { table } = &self.rule {
            for &(j, k, c) in table {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("rule", format!("coefficient for ({j},{k}) must be positive")));
                }
                if gcd(j as u64, k as u64) != 1 {
                    return Err(invalid("rule", format!("pair ({j},{k}) is not coprime")));
                }
            }
        }
        Ok(())
    }

    /// Retained `(j, k, c_{jk})` terms: coprime, inside the window, and not negligible.
    pub fn terms(&self) -> Vec<SingularTime> {
        let custom: Option<BTreeMap<(u32, u32), f64>> = match &self.rule {
            CoefficientRule::DoubleExponential => None,
            CoefficientRule::Custom { table } => {
                Some(table.iter().map(|&(j, k, c)| ((j, k), c)).collect())
            }
        };
        coprime_pairs(self.j_max, self.k_max)
            .into_iter()
            .filter_map(|(j, k)| {
                let time = j as f64 / k as f64;
                if !self.window.contains(time) {
                    return None;
                }
                let coefficient = match &custom {
                    None => {
                        let c = coefficient(j, k);
                        if c.negligible {
                            return None;
                        }
                        c.value
                    }
                    Some(table) => *table.get(&(j, k))?,
                };
                Some(SingularTime {
                    j,
                    k,
                    time,
                    coefficient,
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularTime {
    pub j: u32,
    pub k: u32,
    pub time: f64,
    pub coefficient: f64,
}

/// The reduced rationals `j/k` carried by a truncated datum.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularTimeSet {
    pub entries: Vec<SingularTime>,
}

impl SingularTimeSet {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.time).collect()
    }

    pub fn find(&self, t: f64, tol: f64) -> Option<&SingularTime> {
        self.entries.iter().find(|e| (e.time - t).abs() <= tol)
    }

    pub fn contains(&self, t: f64, tol: f64) -> bool {
        self.find(t, tol).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct BlowupDatum {
    pub field: RealField,
    pub spectrum: SpectralField,
    pub singular_times: SingularTimeSet,
    pub warnings: Vec<Warning>,
}

/// Sums the retained terms `c_{jk} W(-j/k) φ_b` in spectral space.
pub fn build_u0(spec: &BlowupSpec, grid: &Grid3) -> Result<BlowupDatum> {
    spec.validate()?;
    let profile = sample_profile(spec.profile, grid);
    let phi_hat = profile_spectrum(spec.profile, grid);
    let terms = spec.terms();
    let mut acc = vec![Complex64::default(); grid.len()];
    for term in &terms {
        let evolved = apply_propagator(&phi_hat, -term.time);
        for (a, c) in acc.iter_mut().zip(evolved.coeffs()) {
            *a += c * term.coefficient;
        }
    }
    let spectrum = SpectralField::new(grid, acc)?;
    let field = inverse_transform(&spectrum);
    Ok(BlowupDatum {
        field,
        spectrum,
        singular_times: SingularTimeSet { entries: terms },
        warnings: profile.warnings,
    })
}

/// Finite-range evidence for genericity of `gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityProbe {
    pub gamma: f64,
    pub bound: u64,
}

impl GenericityProbe {
    pub fn new(gamma: f64, bound: u64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(invalid("gamma", "must be finite"));
        }
        if bound < 2 {
            return Err(invalid("bound", "search bound must be at least 2"));
        }
        Ok(Self { gamma, bound })
    }
}

fn margin_term(k1: i64, k2: i64, gamma: f64) -> f64 {
    let size = (k1.abs() + k2.abs()) as f64;
    (k1 as f64 + k2 as f64 * gamma).abs() * size * (size + 1.0).ln()
}

/// `min |k₁ + k₂γ| (|k₁|+|k₂|) ln(|k₁|+|k₂|+1)` over `|k₂| ≥ 1`, `|k₁|+|k₂| ≤ K`.
///
/// For fixed `k₂` the log of the term is concave in `k₁` between `0` and
/// `-k₂γ` and increasing outside, so the minimum sits at `k₁ = 0`, at the
/// integers next to `-k₂γ`, or at the end of the admissible range.
/// Sign flips of `(k₁, k₂)` leave the term unchanged.
pub fn genericity_margin(probe: GenericityProbe) -> f64 {
    let big_k = probe.bound as i64;
    let gamma = probe.gamma;
    let mut best = f64::INFINITY;
    for k2 in 1..=big_k {
        let room = big_k - k2;
        let centre = -(k2 as f64) * gamma;
        let lo = centre.floor() as i64;
        for k1 in [0, lo, lo + 1, -room, room] {
            let k1 = k1.clamp(-room, room);
            best = best.min(margin_term(k1, k2, gamma));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{forward_transform, make_grid};
    use crate::norms::lebesgue_norm;

    #[test]
    fn coprime_examples() {
        assert_eq!(coprime_pairs(3, 2), vec![(1, 1), (2, 1), (3, 1), (1, 2), (3, 2)]);
        assert_eq!(coprime_pairs(1, 1), vec![(1, 1)]);
    }

    #[test]
    fn coprime_matches_brute_force_scan() {
        fn brute(j_max: u32, k_max: u32) -> usize {
            let mut count = 0;
            for j in 1..=j_max {
                for k in 1..=k_max {
                    let g = (1..=j.min(k)).filter(|d| j % d == 0 && k % d == 0).max().unwrap();
                    if g == 1 {
                        count += 1;
                    }
                }
            }
            count
        }
        assert_eq!(coprime_pairs(10, 10).len(), brute(10, 10));
        for j in (1..=50).step_by(7) {
            for k in (1..=50).step_by(5) {
                assert_eq!(coprime_pairs(j, k).len(), brute(j, k), "({j},{k})");
            }
        }
    }

    #[test]
    fn coefficient_values() {
        // 40-digit reference values of e^{-e^k - j^2}
        let c11 = coefficient(1, 1);
        assert!((c11.value - 0.024_275_641_750_774_68).abs() < 1e-17);
        assert!(!c11.negligible);
        assert!((coefficient(2, 1).value - 1.208_613_035_519_591_4e-3).abs() < 1e-18);
        let c15 = coefficient(1, 5);
        assert!(c15.negligible);
        assert!(c15.value < 1e-60);
    }

    #[test]
    fn coefficients_decrease_in_each_index() {
        for j in 1..6 {
            for k in 1..5 {
                assert!(coefficient(j + 1, k).value < coefficient(j, k).value);
                assert!(coefficient(j, k + 1).value < coefficient(j, k).value);
            }
        }
    }

    #[test]
    fn default_singular_times() {
        let spec = BlowupSpec::default();
        let terms = spec.terms();
        let times: Vec<f64> = terms.iter().map(|t| t.time).collect();
        assert_eq!(times, vec![1.0, 2.0, 3.0, 0.5, 1.5]);
        for t in &terms {
            assert_eq!(t.coefficient, coefficient(t.j, t.k).value);
        }
    }

    #[test]
    fn window_restricts_terms() {
        let spec = BlowupSpec {
            window: TimeWindow { min: 0.0, max: 1.2 },
            ..BlowupSpec::default()
        };
        let times: Vec<f64> = spec.terms().iter().map(|t| t.time).collect();
        assert_eq!(times, vec![1.0, 0.5]);
    }

    #[test]
    fn profile_peak_and_warning() {
        let g = make_grid(16, 8.0).unwrap();
        let p = sample_profile(ProfileSpec::default(), &g);
        assert_eq!(p.field.at(8, 8, 8), 1.0);
        assert!(!p.warnings.is_empty());
        let wide = make_grid(16, 30.0).unwrap();
        assert!(sample_profile(ProfileSpec::default(), &wide).warnings.is_empty());
    }

    #[test]
    fn lattice_spectrum_matches_samples() {
        // Aliasing separates the two only at high modes.
        let g = make_grid(64, 30.0).unwrap();
        let p = ProfileSpec::default();
        let exact = profile_spectrum(p, &g);
        let sampled = forward_transform(&sample_profile(p, &g).field);
        assert!((exact.coeff([0, 0, 0]).re - std::f64::consts::PI).abs() < 1e-12);
        for m in [[1, 0, 0], [2, 1, 0], [3, 3, 3]] {
            let (a, b) = (exact.coeff(m), sampled.coeff(m));
            assert!((a - b).norm() < 2e-2 * a.norm(), "{m:?} {a} {b}");
        }
        assert!(exact.hermitian_defect() == 0.0);
    }

    #[test]
    fn single_term_refocuses() {
        let g = make_grid(32, 16.0).unwrap();
        let spec = BlowupSpec {
            j_max: 1,
            k_max: 1,
            ..BlowupSpec::default()
        };
        let datum = build_u0(&spec, &g).unwrap();
        let back = inverse_transform(&apply_propagator(&datum.spectrum, 1.0));
        let phi = inverse_transform(&profile_spectrum(spec.profile, &g));
        let c = coefficient(1, 1).value;
        for (a, b) in back.samples().iter().zip(phi.samples()) {
            assert!((a - c * b).abs() < 1e-13);
        }
    }

    #[test]
    fn datum_obeys_triangle_inequality() {
        let g = make_grid(32, 20.0).unwrap();
        let spec = BlowupSpec::default();
        let datum = build_u0(&spec, &g).unwrap();
        let phi = inverse_transform(&profile_spectrum(spec.profile, &g));
        let bound: f64 = spec.terms().iter().map(|t| t.coefficient).sum::<f64>() * lebesgue_norm(&phi, 2.0);
        assert!(lebesgue_norm(&datum.field, 2.0) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn genericity_rational_vanishes() {
        let m = genericity_margin(GenericityProbe::new(0.5, 50).unwrap());
        assert_eq!(m, 0.0);
    }

    fn brute_margin(gamma: f64, big_k: i64) -> f64 {
        let mut best = f64::INFINITY;
        for k2 in -big_k..=big_k {
            if k2 == 0 {
                continue;
            }
            let room = big_k - k2.abs();
            for k1 in -room..=room {
                best = best.min(margin_term(k1, k2, gamma));
            }
        }
        best
    }

    #[test]
    fn genericity_matches_brute_force() {
        for gamma in [(1.0 + 5f64.sqrt()) / 2.0, 2f64.sqrt(), std::f64::consts::PI, 0.5, 0.37] {
            for k in [2, 3, 17, 200] {
                let fast = genericity_margin(GenericityProbe::new(gamma, k).unwrap());
                let slow = brute_margin(gamma, k as i64);
                assert!((fast - slow).abs() <= 1e-12 * slow.max(1e-300), "γ={gamma} K={k}");
            }
        }
    }

    #[test]
    fn genericity_golden_and_sqrt2() {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let a = genericity_margin(GenericityProbe::new(golden, 10_000).unwrap());
        let b = genericity_margin(GenericityProbe::new(golden, 20_000).unwrap());
        assert!(a > 0.0 && b > 0.0);
        assert!(a / b < 2.0 && b / a < 2.0);
        assert!(genericity_margin(GenericityProbe::new(2f64.sqrt(), 10_000).unwrap()) > 0.0);
        assert!(GenericityProbe::new(golden, 1).is_err());
    }
}
