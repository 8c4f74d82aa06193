//! Numerical audits of the linear estimates, the weighted commutator, the
//! weighted decay rate, the singular-time sweep and nonlinear smoothing.
//!
//! A `≲` inequality carries an unknown constant, so an audit checks that the
//! ratio of its two sides stays bounded over an ensemble and does not drift
//! under grid refinement.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::{build_u0, genericity_margin, sample_profile, BlowupSpec, GenericityProbe, ProfileSpec, SingularTimeSet};
use crate::error::{invalid, Error, Result};
use crate::grid::{forward_transform, inverse_transform, inverse_transform_pair, Grid3, RealField, SpectralField};
use crate::multiplier::{apply_fractional, apply_partial_multi, apply_propagator, apply_weighted_propagator, Axis, Multiplier, WeightRate};
use crate::norms::{
    exp_weighted_field, least_squares_slope, lebesgue_norm, sobolev_norm_of, spatial_mixed_norm, trapezoid_weights,
    MixedNormAccumulator, MixedNormSpec, SobolevSpec,
};
use crate::solver::{evolve_to_times, integrate, SolverConfig};

/// Time samples per audit trajectory.
pub const TIME_SAMPLES: usize = 65;

/// Default bound on the sup-ratio change under grid doubling.
pub const REFINEMENT_BOUND: f64 = 2.0;

/// The estimate being audited.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateId {
    /// `‖D_x^γ W(t)f‖_{L²_T L^∞_{xy}} ≲ ‖f‖_{H^β}` for `0 < γ < β`.
    Strichartz { gamma: f64, beta: f64 },
    /// `‖∇W(t)f‖_{L^∞_x L²_{yT}} ≲ ‖f‖₂` on `[-T, T]`.
    KatoForward,
    /// `sup_t ‖∇∫₀ᵗ W(-t')g(t')dt'‖₂ ≲ ‖g‖_{L¹_x L²_{yT}}` on `[-T, T]`.
    KatoDual,
    /// `‖W(t)f‖_{L²_x L^∞_{yT}} ≲ ‖f‖_{H^s}` for `s > 1`, `T < 1`.
    Maximal { s: f64 },
    /// `‖|x_d|^r W(t)f − W(t)(|x_d|^r f)‖₂ ≲ (1+|t|)‖f‖_{H^s}`.
    WeightedCommutator { r: f64, axis: Axis, s: f64 },
    /// `‖∂^α e^{a(x+y)}W(t)φ‖₂ ≲ t^{-|α|/2} e^{3a³t}` (see [`weighted_decay_scaling`]).
    WeightedDecay { a: f64, alpha: [u32; 3] },
    /// Diophantine margin of the sweep baseline (see [`genericity_margin`]).
    Genericity,
}

impl EstimateId {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimateId::Strichartz { gamma, beta } => {
                if !(gamma > 0.0 && gamma < beta && beta.is_finite()) {
                    return Err(invalid("estimate", format!("Strichartz needs 0 < γ < β, got γ = {gamma}, β = {beta}")));
                }
            }
            EstimateId::Maximal { s } => {
                if !(s > 1.0 && s.is_finite()) {
                    return Err(invalid("estimate", format!("maximal estimate needs s > 1, got {s}")));
                }
            }
            EstimateId::WeightedCommutator { r, s, .. } => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(invalid("estimate", format!("commutator weight needs r in (0, 1), got {r}")));
                }
                if !(s >= 2.0 * r) {
                    return Err(invalid("estimate", format!("commutator needs s ≥ 2r, got s = {s}")));
                }
            }
            EstimateId::WeightedDecay { a, alpha } => {
                WeightRate::new(a)?;
                if alpha.iter().sum::<u32>() > 2 {
                    return Err(invalid("estimate", "weighted decay needs |α| ≤ 2"));
                }
            }
            EstimateId::KatoForward | EstimateId::KatoDual | EstimateId::Genericity => {}
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match *self {
            EstimateId::Strichartz { gamma, beta } => format!("strichartz(gamma={gamma}, beta={beta})"),
            EstimateId::KatoForward => "kato_forward".into(),
            EstimateId::KatoDual => "kato_dual".into(),
            EstimateId::Maximal { s } => format!("maximal(s={s})"),
            EstimateId::WeightedCommutator { r, axis, s } => {
                format!("weighted_commutator(r={r}, axis={axis:?}, s={s})")
            }
            EstimateId::WeightedDecay { a, alpha } => format!("weighted_decay(a={a}, alpha={alpha:?})"),
            EstimateId::Genericity => "genericity".into(),
        }
    }
}

/// How ensemble members are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Random Fourier coefficients on the modes with `|ζ| ≤ cutoff`.
    BandLimited { cutoff: f64 },
    /// Modulated Gaussians with random width, center, wave vector and phase.
    DecayingEnvelope,
    /// Fixed list of smooth probes, cycled with growing width.
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub count: usize,
    pub seed: u64,
}

impl Ensemble {
    pub fn new(kind: EnsembleKind, count: usize, seed: u64) -> Self {
        Self { kind, count, seed }
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Member `index`; the same physical function on every grid of the same box.
    pub fn member(&self, index: usize, grid: &Grid3) -> RealField {
        let mut rng = self.rng(index);
        match self.kind {
            EnsembleKind::BandLimited { cutoff } => band_limited(grid, cutoff, &mut rng),
            EnsembleKind::DecayingEnvelope => {
                let sigma = rng.random_range(0.8..1.6);
                let c: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let k: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let phase = rng.random_range(0.0..2.0 * PI);
                RealField::from_fn(grid, |x, y1, y2| {
                    let d2 = (x - c[0]).powi(2) + (y1 - c[1]).powi(2) + (y2 - c[2]).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp() * (k[0] * x + k[1] * y1 + k[2] * y2 + phase).cos()
                })
            }
            EnsembleKind::Probe => {
                let width = 1.0 + 0.25 * (index / 4) as f64;
                let w2 = width * width;
                RealField::from_fn(grid, move |x, y1, y2| {
                    let r2 = x * x + y1 * y1 + y2 * y2;
                    match index % 4 {
                        0 => (-r2 / (2.0 * w2)).exp(),
                        1 => x * (-r2 / (2.0 * w2)).exp(),
                        2 => (2.0 * x).cos() * (-r2 / (2.0 * w2)).exp(),
                        _ => (-(x * x / 4.0 + y1 * y1 + 2.0 * y2 * y2) / (2.0 * w2)).exp(),
                    }
                })
            }
        }
    }
}

fn band_limited(grid: &Grid3, cutoff: f64, rng: &mut ChaCha8Rng) -> RealField {
    let l = grid.box_len();
    let dk = 2.0 * PI / l;
    let m_max = (cutoff / dk).floor() as i64;
    let half = grid.n() as i64 / 2;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    let slot = |m: [i64; 3]| grid.flat(grid.slot_of(m[0]), grid.slot_of(m[1]), grid.slot_of(m[2]));
    // Canonical order over the physical modes keeps members grid-independent.
    for a in -m_max..=m_max {
        for b in -m_max..=m_max {
            for c in -m_max..=m_max {
                let m = [a, b, c];
                let canonical = m.iter().find(|&&v| v != 0).is_none_or(|&v| v > 0);
                if !canonical || ((a * a + b * b + c * c) as f64).sqrt() * dk > cutoff {
                    continue;
                }
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = if m == [0, 0, 0] { 0.0 } else { rng.random_range(-1.0..1.0) };
                if m.iter().any(|v| v.abs() >= half) {
                    continue;
                }
                let v = Complex64::new(re, im) * l.powi(3) / (m_max as f64 + 1.0).powf(1.5);
                coeffs[slot(m)] = v;
                coeffs[slot([-a, -b, -c])] = v.conj();
            }
        }
    }
    inverse_transform(&SpectralField::from_vec_unchecked(grid, coeffs))
}

/// Fraction of spectral energy beyond two thirds of the Nyquist wavenumber.
pub fn high_band_fraction(spec: &SpectralField) -> f64 {
    let g = spec.grid();
    let n = g.n();
    let k = g.wavenumbers();
    let edge = 2.0 * g.nyquist() / 3.0;
    let (mut hi, mut all) = (0.0, 0.0);
    for (idx, c) in spec.coeffs().iter().enumerate() {
        let (a, b, d) = (idx / (n * n), (idx / n) % n, idx % n);
        let e = c.norm_sqr();
        all += e;
        if k[a].abs().max(k[b].abs()).max(k[d].abs()) > edge {
            hi += e;
        }
    }
    if all > 0.0 {
        hi / all
    } else {
        0.0
    }
}

/// Members whose high-band energy fraction exceeds this are flagged unresolved.
pub const UNRESOLVED_FRACTION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub estimate: String,
    pub horizon: f64,
    pub n: usize,
    pub n_refined: usize,
    /// `None` for members with a vanishing right side.
    pub ratios: Vec<Option<f64>>,
    pub ratios_refined: Vec<Option<f64>>,
    pub sup: f64,
    pub sup_refined: f64,
    /// `sup_refined / sup`.
    pub growth: f64,
    pub bound: f64,
    /// Members with energy near the edge of the resolved band.
    pub unresolved: Vec<usize>,
    pub verdict: Verdict,
}

fn sup_of(ratios: &[Option<f64>]) -> f64 {
    ratios.iter().flatten().fold(0.0, |m: f64, &r| if r.is_nan() { f64::NAN } else { m.max(r) })
}

/// Audits `id` over the ensemble on `grid` and on its refinement.
pub fn run_audit(id: EstimateId, ens: &Ensemble, grid: &Grid3, horizon: f64) -> Result<AuditReport> {
    id.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("T", "horizon must be positive"));
    }
    if matches!(id, EstimateId::Maximal { .. }) && horizon >= 1.0 {
        return Err(invalid("T", "maximal estimate is stated for T < 1"));
    }
    if matches!(id, EstimateId::WeightedDecay { .. } | EstimateId::Genericity) {
        return Err(invalid("estimate", "audited by weighted_decay_scaling / genericity_margin instead"));
    }
    let fine = grid.refined()?;
    let mut unresolved = Vec::new();
    let mut ratios = Vec::with_capacity(ens.count);
    let mut ratios_refined = Vec::with_capacity(ens.count);
    for i in 0..ens.count {
        let coarse = ens.member(i, grid);
        if high_band_fraction(&forward_transform(&coarse)) > UNRESOLVED_FRACTION {
            unresolved.push(i);
        }
        ratios.push(audit_ratio(id, &coarse, horizon, i)?);
        ratios_refined.push(audit_ratio(id, &ens.member(i, &fine), horizon, i)?);
    }
    let sup = sup_of(&ratios);
    let sup_refined = sup_of(&ratios_refined);
    let growth = sup_refined / sup;
    let ok = sup.is_finite()
        && sup_refined.is_finite()
        && growth.is_finite()
        && growth < REFINEMENT_BOUND
        && 1.0 / growth < REFINEMENT_BOUND;
    Ok(AuditReport {
        estimate: id.label(),
        horizon,
        n: grid.n(),
        n_refined: fine.n(),
        ratios,
        ratios_refined,
        sup,
        sup_refined,
        growth,
        bound: REFINEMENT_BOUND,
        unresolved,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}

fn sample_times(horizon: f64, symmetric: bool) -> Vec<f64> {
    let start = if symmetric { -horizon } else { 0.0 };
    let step = (horizon - start) / (TIME_SAMPLES - 1) as f64;
    (0..TIME_SAMPLES).map(|i| start + i as f64 * step).collect()
}

/// `W(t)u` on the uniform samples `times`, by phase recurrence.
struct PropagatorStream {
    current: SpectralField,
    step: Vec<Complex64>,
}

impl PropagatorStream {
    fn new(spec: &SpectralField, times: &[f64]) -> Self {
        let h = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        let step = spec.grid().omega_table().iter().map(|&w| Complex64::from_polar(1.0, h * w)).collect();
        Self {
            current: apply_propagator(spec, times.first().copied().unwrap_or(0.0)),
            step,
        }
    }

    /// Returns the current sample and moves to the next one.
    fn advance(&mut self) -> SpectralField {
        let out = self.current.clone();
        for (c, s) in self.current.coeffs_mut().iter_mut().zip(&self.step) {
            *c *= s;
        }
        out
    }
}

/// Streams `W(t)u` over the sample times into a mixed norm.
/// Consecutive times share one complex transform.
fn stream_norm(spec: &SpectralField, times: &[f64], norm: &MixedNormSpec) -> Result<f64> {
    let weights = trapezoid_weights(times)?;
    let mut acc = MixedNormAccumulator::new(spec.grid(), norm)?;
    let mut stream = PropagatorStream::new(spec, times);
    for pair in weights.chunks(2) {
        let first = stream.advance();
        if let [w] = pair {
            acc.push(&inverse_transform(&first), *w);
            continue;
        }
        let (a, b) = inverse_transform_pair(&first, &stream.advance())?;
        acc.push(&a, pair[0]);
        acc.push(&b, pair[1]);
    }
    acc.finish()
}

/// `sup_x ‖∇W(t)u‖_{L²_{yT}}` over the sample times.
///
/// Parseval in `y` reduces the inner norm to a sum over `η` of the partial
/// inverse transform in `x`, so only one-dimensional transforms are needed.
fn kato_forward_lhs(spec: &SpectralField, times: &[f64]) -> Result<f64> {
    let g = spec.grid();
    let n = g.n();
    let ko = g.odd_wavenumbers();
    let fft = g.fft();
    let norm = g.box_len().powi(-4);
    let weights = trapezoid_weights(times)?;
    let mut stream = PropagatorStream::new(spec, times);
    let mut sums = vec![0.0_f64; n];
    let mut plain = vec![Complex64::default(); n * n];
    let mut dx = vec![Complex64::default(); n * n];
    for w in weights {
        let u = stream.advance();
        let c = u.coeffs();
        for i1 in 0..n {
            // Rows indexed by i2, contiguous in i0; the sign recenters x on the box.
            for i0 in 0..n {
                let sign = if i0 % 2 == 0 { 1.0 } else { -1.0 };
                let base = (i0 * n + i1) * n;
                for i2 in 0..n {
                    let v = c[base + i2] * sign;
                    plain[i2 * n + i0] = v;
                    dx[i2 * n + i0] = v * Complex64::new(0.0, ko[i0]);
                }
            }
            fft.inverse_rows(&mut plain);
            fft.inverse_rows(&mut dx);
            for i2 in 0..n {
                let eta2 = ko[i1] * ko[i1] + ko[i2] * ko[i2];
                let row = i2 * n..(i2 + 1) * n;
                for ((s, p), d) in sums.iter_mut().zip(&plain[row.clone()]).zip(&dx[row]) {
                    *s += w * norm * (d.norm_sqr() + eta2 * p.norm_sqr());
                }
            }
        }
    }
    Ok(sums.iter().fold(0.0_f64, |m, s| m.max(s.sqrt())))
}

/// Ratio of the two sides of `id` for one member; `None` when the right side vanishes.
pub fn audit_ratio(id: EstimateId, f: &RealField, horizon: f64, member: usize) -> Result<Option<f64>> {
    let spec = forward_transform(f);
    let (lhs, rhs) = match id {
        EstimateId::Strichartz { gamma, beta } => {
            let times = sample_times(horizon, false);
            let dg = apply_fractional(&spec, Multiplier::Dx, gamma)?.field;
            let lhs = stream_norm(&dg, &times, &"L2_T Linf_xy".parse()?)?;
            (lhs, sobolev_norm_of(&spec, SobolevSpec::h(beta)).value)
        }
        EstimateId::KatoForward => {
            let times = sample_times(horizon, true);
            (kato_forward_lhs(&spec, &times)?, lebesgue_norm(f, 2.0))
        }
        EstimateId::KatoDual => kato_dual_sides(&spec, f, horizon, member)?,
        EstimateId::Maximal { s } => {
            let times = sample_times(horizon, false);
            let lhs = stream_norm(&spec, &times, &"L2_x Linf_yT".parse()?)?;
            (lhs, sobolev_norm_of(&spec, SobolevSpec::h(s)).value)
        }
        EstimateId::WeightedCommutator { r, axis, s } => {
            if f.max_abs() == 0.0 {
                return Ok(None);
            }
            return Ok(Some(weighted_commutator_residual(f, r, axis, horizon, s)?));
        }
        EstimateId::WeightedDecay { .. } | EstimateId::Genericity => {
            return Err(invalid("estimate", "not a ratio audit"));
        }
    };
    Ok(if rhs > 0.0 { Some(lhs / rhs) } else { None })
}

/// `(e^{iλt} − 1)/(iλ)` given `e^{iλt}`.
fn phase_primitive(lambda: f64, t: f64, e: Complex64) -> Complex64 {
    if (lambda * t).abs() < 1e-12 {
        Complex64::new(t, 0.0)
    } else {
        (e - 1.0) / Complex64::new(0.0, lambda)
    }
}

/// `∫₀ᵗ e^{-iωs} cos(νs + θ) ds` with `rot = e^{iθ}`, `e = e^{-iωt}` and `en = e^{iνt}` supplied.
fn damped_cosine_from(omega: f64, nu: f64, rot: Complex64, t: f64, e: Complex64, en: Complex64) -> Complex64 {
    let plus = phase_primitive(nu - omega, t, en * e);
    let minus = phase_primitive(-nu - omega, t, en.conj() * e);
    0.5 * (rot * plus + rot.conj() * minus)
}

/// Dual smoothing sides for `g(t, x) = cos(νt + θ) f(x)`, time integral in closed form.
fn kato_dual_sides(spec: &SpectralField, f: &RealField, horizon: f64, member: usize) -> Result<(f64, f64)> {
    let nu = 1.0 + (member % 3) as f64;
    let theta = 0.37 * member as f64;
    let rot = Complex64::from_polar(1.0, theta);
    let g = spec.grid();
    let n = g.n();
    let k = g.wavenumbers();
    let omega = g.omega_table();
    let times = sample_times(horizon, true);
    let h = times[1] - times[0];
    let nu_phase: Vec<Complex64> = times.iter().map(|&t| Complex64::from_polar(1.0, nu * t)).collect();
    let mut sums = vec![0.0_f64; times.len()];
    for (idx, c) in spec.coeffs().iter().enumerate() {
        let (a, b, d) = (idx / (n * n), (idx / n) % n, idx % n);
        let z2 = k[a] * k[a] + k[b] * k[b] + k[d] * k[d];
        let weight = z2 * c.norm_sqr();
        if weight == 0.0 {
            continue;
        }
        let w = omega[idx];
        let step = Complex64::from_polar(1.0, -w * h);
        let mut e = Complex64::from_polar(1.0, -w * times[0]);
        for ((sum, &t), &en) in sums.iter_mut().zip(&times).zip(&nu_phase) {
            *sum += weight * damped_cosine_from(w, nu, rot, t, e, en).norm_sqr();
            e *= step;
        }
    }
    let lhs = sums.iter().fold(0.0_f64, |m, s| m.max((s / g.volume()).sqrt()));
    let w = trapezoid_weights(&times)?;
    let time_l2 = times
        .iter()
        .zip(&w)
        .map(|(t, w)| w * (nu * t + theta).cos().powi(2))
        .sum::<f64>()
        .sqrt();
    let rhs = time_l2 * spatial_mixed_norm(f, &"L1_x L2_y".parse()?)?;
    Ok((lhs, rhs))
}

/// Fraction of `‖f‖²` on cells within 5% of the box faces.
fn face_energy_fraction(f: &RealField) -> f64 {
    let g = f.grid();
    let limit = 0.45 * g.box_len();
    let (mut face, mut all) = (0.0, 0.0);
    for (idx, v) in f.samples().iter().enumerate() {
        let [a, b, c] = g.unflat(idx);
        let e = v * v;
        all += e;
        if [a, b, c].iter().any(|&i| g.coordinate(i).abs() > limit) {
            face += e;
        }
    }
    if all > 0.0 {
        face / all
    } else {
        0.0
    }
}

/// Energy fraction of `u₀` on the box faces beyond which `|x_d|^r u₀` is not a decaying field.
pub const FACE_ENERGY_LIMIT: f64 = 1e-6;

/// `‖|x_d|^r W(t)u₀ − W(t)(|x_d|^r u₀)‖₂ / ((1+|t|)‖u₀‖_{H^s})`.
///
/// Both sides are evolved on the periodic box; only the datum has to decay.
pub fn weighted_commutator_residual(u0: &RealField, r: f64, axis: Axis, t: f64, s: f64) -> Result<f64> {
    EstimateId::WeightedCommutator { r, axis, s }.validate()?;
    if !t.is_finite() {
        return Err(invalid("t", "must be finite"));
    }
    let frac = face_energy_fraction(u0);
    if frac > FACE_ENERGY_LIMIT {
        return Err(invalid(
            "u0",
            format!("carries {frac:.2e} of its energy at the box faces; weight not representable"),
        ));
    }
    // W(0) is the identity, so both sides are the same samples.
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = axis.index();
    let weight = |x: f64, y1: f64, y2: f64| [x, y1, y2][d].abs().powf(r);
    let spec = forward_transform(u0);
    let evolved = inverse_transform(&apply_propagator(&spec, t));
    let left = evolved.weighted(weight);
    let right = inverse_transform(&apply_propagator(&forward_transform(&u0.weighted(weight)), t));
    let num = lebesgue_norm(&left.sub(&right)?, 2.0);
    let den = (1.0 + t.abs()) * sobolev_norm_of(&spec, SobolevSpec::h(s)).value;
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    /// `(t, ‖∂^α e^{a(x+y)}W(t)φ‖₂)` per sample.
    pub samples: Vec<(f64, f64)>,
}

/// Slope of `log(N(t) e^{-3a³t})` against `log t` with
/// `N(t) = ‖∂^α e^{a(x+y₁+y₂)} W(t)φ‖₂` evolved by the weighted propagator.
pub fn weighted_decay_scaling(
    profile: ProfileSpec,
    grid: &Grid3,
    a: f64,
    alpha: [u32; 3],
    t_samples: &[f64],
) -> Result<DecayFit> {
    EstimateId::WeightedDecay { a, alpha }.validate()?;
    let rate = WeightRate::new(a)?;
    if !rate.admits_decay(profile.b) {
        return Err(invalid("a", format!("a·√3 must stay below the decay rate b = {}", profile.b)));
    }
    if t_samples.len() < 2 || t_samples.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(invalid("t_samples", "need at least two times in (0, 1]"));
    }
    let phi = sample_profile(profile, grid).field;
    let w0 = forward_transform(&exp_weighted_field(&phi, a)?);
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let wt = apply_weighted_propagator(&w0, t, rate)?;
        let value = apply_partial_multi(&wt, alpha).l2_norm();
        if !(value.is_finite() && value > 0.0) {
            return Err(invalid("a", format!("weighted norm left the floating range at t = {t}")));
        }
        samples.push((t, value));
    }
    let xs: Vec<f64> = samples.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(t, v)| v.ln() - 3.0 * a.powi(3) * t).collect();
    Ok(DecayFit {
        slope: least_squares_slope(&xs, &ys),
        samples,
    })
}

/// `max_d |∂_d f(δe_d) − ∂_d f(−δe_d)|` with spectral derivatives evaluated
/// off-grid by trigonometric interpolation.
pub fn gradient_oscillation(f: &RealField, delta: f64) -> Result<f64> {
    gradient_oscillation_of(&forward_transform(f), delta)
}

pub fn gradient_oscillation_of(spec: &SpectralField, delta: f64) -> Result<f64> {
    let g = spec.grid();
    if !(delta >= 2.0 * g.spacing()) {
        return Err(invalid(
            "delta",
            format!("{delta} is below twice the grid spacing {}", g.spacing()),
        ));
    }
    let n = g.n();
    let k = g.wavenumbers();
    let ko = g.odd_wavenumbers();
    let mut best = 0.0_f64;
    for axis in 0..3 {
        let mut line = vec![Complex64::default(); n];
        for (idx, c) in spec.coeffs().iter().enumerate() {
            line[[idx / (n * n), (idx / n) % n, idx % n][axis]] += c;
        }
        let deriv_at = |x: f64| -> f64 {
            line.iter()
                .enumerate()
                .map(|(i, c)| (Complex64::new(0.0, ko[i]) * c * Complex64::from_polar(1.0, k[i] * x)).re)
                .sum::<f64>()
                / g.volume()
        };
        best = best.max((deriv_at(delta) - deriv_at(-delta)).abs());
    }
    Ok(best)
}

/// Field whose regularity a sweep probes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSource {
    /// `W(t)u₀`
    Linear,
    /// `u(t)` from data `ε u₀`
    Nonlinear { eps: f64, solver: SolverConfig },
    /// `u(t) − W(t)(ε u₀)`
    Duhamel { eps: f64, solver: SolverConfig },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub score: f64,
    pub is_armed_rational: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityEvidence {
    pub t: f64,
    pub margin: f64,
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub delta: f64,
    pub rows: Vec<SweepRow>,
    pub armed: SingularTimeSet,
    /// Largest score over the non-armed times.
    pub baseline: f64,
    /// Smallest armed score divided by the baseline.
    pub min_spike_ratio: f64,
    /// Armed times not present among the sweep times.
    pub missing_armed: Vec<f64>,
    pub genericity: Vec<GenericityEvidence>,
}

impl SweepReport {
    /// Times whose score exceeds `factor` times the baseline.
    pub fn spikes(&self, factor: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.score > factor * self.baseline)
            .map(|r| r.t)
            .collect()
    }

    /// Spike set at `factor` equals the armed set and no armed time is missing.
    pub fn spike_set_matches(&self, factor: f64) -> bool {
        self.missing_armed.is_empty()
            && self
                .rows
                .iter()
                .all(|r| (r.score > factor * self.baseline) == r.is_armed_rational)
    }
}

pub const ARMED_TOLERANCE: f64 = 1e-9;

/// Golden ratio.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Default oscillation scale: four grid spacings.
pub fn default_delta(grid: &Grid3) -> f64 {
    4.0 * grid.spacing()
}

/// Golden-ratio multiples inside `(0, t_max]` and the window.
pub fn golden_baseline_times(spec: &BlowupSpec, t_max: f64) -> Vec<f64> {
    [GOLDEN / 4.0, GOLDEN / 2.0, GOLDEN, GOLDEN * GOLDEN]
        .into_iter()
        .filter(|&t| t <= t_max && spec.window.contains(t))
        .collect()
}

/// Armed times followed by the golden baseline, ascending.
pub fn default_sweep_times(spec: &BlowupSpec) -> Vec<f64> {
    let armed: Vec<f64> = spec.terms().iter().map(|t| t.time).collect();
    let t_max = armed.iter().cloned().fold(0.0, f64::max);
    let mut times = armed;
    times.extend(golden_baseline_times(spec, t_max));
    times.sort_by(f64::total_cmp);
    times
}

/// Search bound used for the genericity evidence attached to sweeps.
pub const GENERICITY_BOUND: u64 = 2000;

pub fn blowup_sweep(
    spec: &BlowupSpec,
    grid: &Grid3,
    times: &[f64],
    delta: f64,
    source: FieldSource,
) -> Result<SweepReport> {
    let datum = build_u0(spec, grid)?;
    let armed = datum.singular_times.clone();
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    if sorted.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("times", "sweep times must be non-negative"));
    }
    let fields: Vec<SpectralField> = match source {
        FieldSource::Linear => sorted.iter().map(|&t| apply_propagator(&datum.spectrum, t)).collect(),
        FieldSource::Nonlinear { eps, solver } | FieldSource::Duhamel { eps, solver } => {
            let u0 = datum.field.scaled(eps);
            let states = evolve_to_times(&u0, &solver, &sorted)?;
            if let FieldSource::Duhamel { .. } = source {
                let base = datum.spectrum.scaled(eps);
                states
                    .iter()
                    .zip(&sorted)
                    .map(|(u, &t)| u.sub(&apply_propagator(&base, t)))
                    .collect::<Result<Vec<_>>>()?
            } else {
                states
            }
        }
    };
    let mut rows = vec![
        SweepRow {
            t: 0.0,
            score: 0.0,
            is_armed_rational: false
        };
        times.len()
    ];
    for (field, &i) in fields.iter().zip(&order) {
        rows[i] = SweepRow {
            t: times[i],
            score: gradient_oscillation_of(field, delta)?,
            is_armed_rational: armed.contains(times[i], ARMED_TOLERANCE),
        };
    }
    let baseline = rows
        .iter()
        .filter(|r| !r.is_armed_rational)
        .map(|r| r.score)
        .fold(0.0, f64::max);
    let min_armed = rows
        .iter()
        .filter(|r| r.is_armed_rational)
        .map(|r| r.score)
        .fold(f64::INFINITY, f64::min);
    let missing_armed = armed
        .times()
        .into_iter()
        .filter(|a| !times.iter().any(|t| (t - a).abs() <= ARMED_TOLERANCE))
        .collect();
    let genericity = rows
        .iter()
        .filter(|r| !r.is_armed_rational)
        .map(|r| {
            Ok(GenericityEvidence {
                t: r.t,
                margin: genericity_margin(GenericityProbe::new(r.t, GENERICITY_BOUND)?),
                bound: GENERICITY_BOUND,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        delta,
        rows,
        armed,
        baseline,
        min_spike_ratio: min_armed / baseline,
        missing_armed,
        genericity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub n: usize,
    pub dt: f64,
    /// `‖J^s W(t)u₀‖₂`
    pub g_lin: f64,
    /// `‖J^s z(t)‖₂`
    pub g_duh: f64,
    /// Share of `‖J^s z‖²` in the outer tenth of the dealiased band.
    pub edge_fraction: f64,
    pub under_resolved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SmoothingVerdict {
    Smoothing,
    NoSmoothing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub s_probe: f64,
    pub t: f64,
    pub rows: Vec<SmoothingRow>,
    /// `G(n_{i+1}) / G(n_i)` for consecutive grids.
    pub lin_growth: Vec<f64>,
    pub duh_growth: Vec<f64>,
    pub margin: f64,
    pub verdict: SmoothingVerdict,
}

/// Share of `‖J^s z‖²` beyond which a run is flagged under-resolved.
pub const EDGE_FRACTION_LIMIT: f64 = 0.1;

fn growth(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        b / a
    }
}

/// Regularity gain of the Duhamel term at time `t`. The step on grid `i` is
/// `cfg.dt · n₀/nᵢ`. The verdict is SMOOTHING when every Duhamel growth
/// factor times `margin` stays at or below the linear one.
pub fn smoothing_report(
    data: &dyn Fn(&Grid3) -> RealField,
    cfg: &SolverConfig,
    s_probe: f64,
    grids: &[Grid3],
    t: f64,
    margin: f64,
) -> Result<SmoothingReport> {
    if grids.len() < 2 {
        return Err(invalid("grids", "need at least two nested grids"));
    }
    for w in grids.windows(2) {
        if w[1].n() != 2 * w[0].n() || w[1].box_len() != w[0].box_len() {
            return Err(invalid("grids", "grids must double n on a fixed box"));
        }
    }
    let n0 = grids[0].n() as f64;
    let js = SobolevSpec::h(s_probe);
    let mut rows = Vec::with_capacity(grids.len());
    for g in grids {
        let dt = cfg.dt * n0 / g.n() as f64;
        let run = SolverConfig {
            dt,
            t_end: t,
            snapshot_stride: SolverConfig { dt, t_end: t, ..*cfg }.steps().max(1),
            ..*cfg
        };
        let u0 = data(g);
        let traj = integrate(&u0, &run)?;
        let (_, ut) = traj.last().ok_or(Error::EmptyTrajectory)?;
        let lin = apply_propagator(&forward_transform(&u0), t);
        let z = forward_transform(ut).sub(&lin)?;
        let g_lin = sobolev_norm_of(&lin, js).value;
        let g_duh = sobolev_norm_of(&z, js).value;
        let edge_fraction = edge_energy_fraction(&z, s_probe, cfg.dealias_fraction);
        rows.push(SmoothingRow {
            n: g.n(),
            dt,
            g_lin,
            g_duh,
            edge_fraction,
            under_resolved: edge_fraction > EDGE_FRACTION_LIMIT,
        });
    }
    let lin_growth: Vec<f64> = rows.windows(2).map(|w| growth(w[0].g_lin, w[1].g_lin)).collect();
    // A Duhamel norm at roundoff level relative to the linear one counts as zero.
    let floor = |r: &SmoothingRow| if r.g_duh <= 1e-12 * r.g_lin { 0.0 } else { r.g_duh };
    let duh_growth: Vec<f64> = rows.windows(2).map(|w| growth(floor(&w[0]), floor(&w[1]))).collect();
    let smooth = lin_growth.iter().zip(&duh_growth).all(|(l, d)| d * margin <= *l);
    Ok(SmoothingReport {
        s_probe,
        t,
        rows,
        lin_growth,
        duh_growth,
        margin,
        verdict: if smooth {
            SmoothingVerdict::Smoothing
        } else {
            SmoothingVerdict::NoSmoothing
        },
    })
}

fn edge_energy_fraction(z: &SpectralField, s: f64, fraction: f64) -> f64 {
    let g = z.grid();
    let n = g.n();
    let k = g.wavenumbers();
    let cut = fraction * g.nyquist();
    let (mut edge, mut all) = (0.0, 0.0);
    for (idx, c) in z.coeffs().iter().enumerate() {
        let (a, b, d) = (idx / (n * n), (idx / n) % n, idx % n);
        let kmax = k[a].abs().max(k[b].abs()).max(k[d].abs());
        let w = (1.0 + k[a] * k[a] + k[b] * k[b] + k[d] * k[d]).powf(s) * c.norm_sqr();
        all += w;
        if kmax > 0.9 * cut {
            edge += w;
        }
    }
    if all > 0.0 {
        edge / all
    } else {
        0.0
    }
}
