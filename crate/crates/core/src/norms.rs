//! Lebesgue, Sobolev, weighted and space-time mixed norms on grid data.
//!
//! Sup-norms over continuum variables are grid maxima. Weights use centered
//! box coordinates without periodic wrap.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{forward_transform, inverse_transform, inverse_transform_pair, Grid3, RealField, SpectralField};
use crate::multiplier::{apply_partial_multi, Axis, Multiplier};
use crate::solver::Trajectory;

/// `(Σ|f|^p h³)^{1/p}`, or the grid maximum for `p = ∞`.
///
/// # Panics
/// If `p < 1` or `p` is NaN.
pub fn lebesgue_norm(f: &RealField, p: f64) -> f64 {
    assert!(p >= 1.0, "Lebesgue exponent must lie in [1, ∞], got {p}");
    if p.is_infinite() {
        return f.max_abs();
    }
    let h3 = f.grid().cell_volume();
    if p == 2.0 {
        return (f.samples().iter().map(|v| v * v).sum::<f64>() * h3).sqrt();
    }
    (f.samples().iter().map(|v| v.abs().powf(p)).sum::<f64>() * h3).powf(1.0 / p)
}

/// Regularity index together with the multiplier defining the norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevSpec {
    pub s: f64,
    pub variant: Multiplier,
}

impl SobolevSpec {
    pub fn new(s: f64, variant: Multiplier) -> Result<Self> {
        if !s.is_finite() {
            return Err(invalid("s", "regularity must be finite"));
        }
        if matches!(variant, Multiplier::Partial(_)) {
            return Err(invalid("variant", "classical partials do not define a Sobolev scale"));
        }
        Ok(Self { s, variant })
    }

    /// Inhomogeneous `H^s`.
    pub fn h(s: f64) -> Self {
        Self {
            s,
            variant: Multiplier::J,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevNorm {
    pub value: f64,
    /// A homogeneous negative-order symbol met the zero frequency; those
    /// coefficients were left out of the sum.
    pub zero_mode_dropped: bool,
}

pub fn sobolev_norm(f: &RealField, spec: SobolevSpec) -> f64 {
    sobolev_norm_of(&forward_transform(f), spec).value
}

/// Parseval-side norm `(L⁻³ Σ |σ(k)|² |f̂(k)|²)^{1/2}`.
pub fn sobolev_norm_of(f: &SpectralField, spec: SobolevSpec) -> SobolevNorm {
    let g = f.grid();
    let n = g.n();
    let k = g.wavenumbers();
    let mut dropped = false;
    let mut acc = 0.0;
    for (idx, c) in f.coeffs().iter().enumerate() {
        let (i0, i1, i2) = (idx / (n * n), (idx / n) % n, idx % n);
        let sym = spec
            .variant
            .even_symbol(k[i0], k[i1], k[i2], spec.s)
            .unwrap_or(1.0);
        if !sym.is_finite() {
            dropped = true;
            continue;
        }
        acc += sym * sym * c.norm_sqr();
    }
    SobolevNorm {
        value: (acc / g.volume()).sqrt(),
        zero_mode_dropped: dropped,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bracket {
    /// `|x|^r`
    Homogeneous,
    /// `⟨x⟩^r = (1 + x²)^{r/2}`
    Japanese,
}

impl Bracket {
    fn weight(self, dist_sqr: f64, r: f64) -> f64 {
        match self {
            Bracket::Homogeneous => dist_sqr.powf(0.5 * r),
            Bracket::Japanese => (1.0 + dist_sqr).powf(0.5 * r),
        }
    }
}

/// Polynomial weight exponents for the `x` and `y = (y₁, y₂)` directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub r1: f64,
    pub r2: f64,
    pub bracket: Bracket,
}

impl WeightSpec {
    /// Accepts any positive exponents; see [`WeightSpec::in_local_theory_range`].
    pub fn new(r1: f64, r2: f64, bracket: Bracket) -> Result<Self> {
        for (name, r) in [("r1", r1), ("r2", r2)] {
            if !(r.is_finite() && r > 0.0) {
                return Err(invalid(name, format!("weight exponent must be positive, got {r}")));
            }
        }
        Ok(Self { r1, r2, bracket })
    }

    /// Both exponents in `(0, 1)`.
    pub fn in_local_theory_range(&self) -> bool {
        self.r1 < 1.0 && self.r2 < 1.0
    }

    pub fn x_weighted(&self, f: &RealField) -> f64 {
        let (r, b) = (self.r1, self.bracket);
        lebesgue_norm(&f.weighted(|x, _, _| b.weight(x * x, r)), 2.0)
    }

    pub fn y_weighted(&self, f: &RealField) -> f64 {
        let (r, b) = (self.r2, self.bracket);
        lebesgue_norm(&f.weighted(|_, y1, y2| b.weight(y1 * y1 + y2 * y2, r)), 2.0)
    }
}

/// `‖f‖_{H^s} + ‖|x|^{r₁} f‖₂ + ‖|y|^{r₂} f‖₂`.
pub fn weighted_z_norm(f: &RealField, s: f64, w: WeightSpec) -> f64 {
    sobolev_norm(f, SobolevSpec::h(s)) + w.x_weighted(f) + w.y_weighted(f)
}

/// Largest exponent `a(x + y₁ + y₂)` the weight may reach before `exp` overflows.
const MAX_WEIGHT_EXPONENT: f64 = 700.0;

/// The weighted field must be at most this fraction of its peak on the box faces.
const FACE_RATIO_LIMIT: f64 = 0.1;

/// `e^{a(x+y₁+y₂)} f`, refused when the weight overflows or the weighted
/// field does not decay towards the box faces.
pub fn exp_weighted_field(f: &RealField, a: f64) -> Result<RealField> {
    if !a.is_finite() {
        return Err(invalid("a", "weight rate must be finite"));
    }
    let g = f.grid();
    let max_exponent = a.abs() * 1.5 * g.box_len();
    if max_exponent > MAX_WEIGHT_EXPONENT {
        return Err(Error::WeightOverflow { max_exponent });
    }
    if a == 0.0 {
        return Ok(f.clone());
    }
    let w = f.weighted(|x, y1, y2| (a * (x + y1 + y2)).exp());
    let n = g.n();
    let mut peak = 0.0_f64;
    let mut face = 0.0_f64;
    for (idx, v) in w.samples().iter().enumerate() {
        let [i0, i1, i2] = g.unflat(idx);
        peak = peak.max(v.abs());
        if [i0, i1, i2].iter().any(|&i| i == 0 || i == n - 1) {
            face = face.max(v.abs());
        }
    }
    if !(face <= FACE_RATIO_LIMIT * peak) {
        return Err(Error::WeightOverflow { max_exponent });
    }
    Ok(w)
}

/// `‖∂^α (e^{a(x+y₁+y₂)} f)‖₂`, weighting in physical space and
/// differentiating spectrally.
pub fn exp_weighted_sobolev(f: &RealField, a: f64, alpha: [u32; 3]) -> Result<f64> {
    if alpha.iter().sum::<u32>() > 3 {
        return Err(invalid("alpha", "order |α| must be at most 3"));
    }
    let weighted = exp_weighted_field(f, a)?;
    Ok(apply_partial_multi(&forward_transform(&weighted), alpha).l2_norm())
}

/// Integration variable of a mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y1,
    Y2,
    T,
}

impl Var {
    fn bit(self) -> u8 {
        match self {
            Var::X => 1,
            Var::Y1 => 2,
            Var::Y2 => 4,
            Var::T => 8,
        }
    }
}

/// One `L^p` factor acting on a group of variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormFactor {
    mask: u8,
    pub exponent: f64,
}

impl NormFactor {
    pub fn new(vars: &[Var], exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0) {
            return Err(invalid("exponent", format!("must lie in [1, ∞], got {exponent}")));
        }
        let mask = vars.iter().fold(0, |m, v| m | v.bit());
        if mask == 0 {
            return Err(invalid("vars", "empty variable group"));
        }
        Ok(Self { mask, exponent })
    }

    pub fn contains(&self, v: Var) -> bool {
        self.mask & v.bit() != 0
    }

    fn spatial(&self) -> u8 {
        self.mask & 7
    }
}

/// Ordered product of `L^p` factors, outermost first.
///
/// Parses from text such as `"L2_x Linf_yT"`: each token is `L<p>_<vars>`
/// with `p` a number or `inf` and vars drawn from `x`, `y` (both transverse
/// axes), `y1`, `y2`, `t`/`T`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedNormSpec {
    factors: Vec<NormFactor>,
    /// Time runs over `[-T, T]` rather than `[0, T]`.
    pub symmetric: bool,
}

impl MixedNormSpec {
    pub fn new(factors: Vec<NormFactor>, symmetric: bool) -> Result<Self> {
        let mut seen = 0u8;
        for f in &factors {
            if seen & f.mask != 0 {
                return Err(invalid("factors", "a variable appears in two groups"));
            }
            seen |= f.mask;
        }
        if seen & 7 != 7 {
            return Err(invalid("factors", "every spatial variable must be integrated"));
        }
        Ok(Self { factors, symmetric })
    }

    pub fn factors(&self) -> &[NormFactor] {
        &self.factors
    }

    pub fn has_time(&self) -> bool {
        self.factors.iter().any(|f| f.contains(Var::T))
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }
}

impl FromStr for MixedNormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for tok in s.split_whitespace() {
            let bad = || invalid("spec", format!("cannot parse factor `{tok}`"));
            let body = tok.strip_prefix('L').ok_or_else(bad)?;
            let (p, vars) = body.split_once('_').ok_or_else(bad)?;
            let p = match p.trim_start_matches('^') {
                "inf" | "∞" => f64::INFINITY,
                num => num.parse::<f64>().map_err(|_| bad())?,
            };
            let mut list = Vec::new();
            let mut chars = vars.chars().peekable();
            while let Some(c) = chars.next() {
                match c {
                    'x' => list.push(Var::X),
                    't' | 'T' => list.push(Var::T),
                    'y' => match chars.peek() {
                        Some('1') => {
                            chars.next();
                            list.push(Var::Y1);
                        }
                        Some('2') => {
                            chars.next();
                            list.push(Var::Y2);
                        }
                        _ => list.extend([Var::Y1, Var::Y2]),
                    },
                    _ => return Err(bad()),
                }
            }
            factors.push(NormFactor::new(&list, p)?);
        }
        MixedNormSpec::new(factors, false)
    }
}

impl fmt::Display for MixedNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if fac.exponent.is_infinite() {
                f.write_str("Linf_")?;
            } else {
                write!(f, "L{}_", fac.exponent)?;
            }
            let ys = fac.mask & 6;
            if fac.contains(Var::X) {
                f.write_str("x")?;
            }
            match ys {
                6 => f.write_str("y")?,
                2 => f.write_str("y1")?,
                4 => f.write_str("y2")?,
                _ => {}
            }
            if fac.contains(Var::T) {
                f.write_str("T")?;
            }
        }
        Ok(())
    }
}

/// Array over a subset of the spatial axes, stored row-major in axis order.
struct Partial {
    axes: u8,
    data: Vec<f64>,
}

fn reduce(arr: &Partial, remove: u8, p: f64, n: usize, h: f64) -> Partial {
    let keep = arr.axes & !remove;
    let present: Vec<usize> = (0..3).filter(|a| arr.axes & (1 << a) != 0).collect();
    let out_len = n.pow(keep.count_ones());
    let mut out = vec![0.0_f64; out_len];
    let mut idx = vec![0usize; present.len()];
    for &v in &arr.data {
        let mut o = 0;
        for (pos, &ax) in present.iter().enumerate() {
            if keep & (1 << ax) != 0 {
                o = o * n + idx[pos];
            }
        }
        let v = v.abs();
        if p.is_infinite() {
            out[o] = out[o].max(v);
        } else if p == 2.0 {
            out[o] += v * v;
        } else if p == 1.0 {
            out[o] += v;
        } else {
            out[o] += v.powf(p);
        }
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    if p.is_finite() {
        let hw = h.powi((arr.axes & remove).count_ones() as i32);
        for v in &mut out {
            *v = (*v * hw).powf(1.0 / p);
        }
    }
    Partial { axes: keep, data: out }
}

/// Streaming evaluator of a mixed norm: snapshots are pushed one at a time
/// with their time-quadrature weights, so no trajectory is stored.
pub struct MixedNormAccumulator {
    n: usize,
    h: f64,
    /// Factors inside the time factor, innermost first.
    inner: Vec<NormFactor>,
    time: NormFactor,
    /// Factors outside the time factor, innermost first.
    outer: Vec<NormFactor>,
    acc: Option<Vec<f64>>,
    acc_axes: u8,
    pushes: usize,
}

impl MixedNormAccumulator {
    pub fn new(grid: &Grid3, spec: &MixedNormSpec) -> Result<Self> {
        let pos = spec
            .factors
            .iter()
            .position(|f| f.contains(Var::T))
            .ok_or_else(|| invalid("spec", "space-time norm needs a time factor"))?;
        let mut inner = spec.factors[pos + 1..].to_vec();
        inner.reverse();
        let mut outer = spec.factors[..pos].to_vec();
        outer.reverse();
        Ok(Self {
            n: grid.n(),
            h: grid.spacing(),
            inner,
            time: spec.factors[pos],
            outer,
            acc: None,
            acc_axes: 0,
            pushes: 0,
        })
    }

    /// Adds one snapshot carrying time weight `weight` (ignored for a sup in time).
    pub fn push(&mut self, field: &RealField, weight: f64) {
        debug_assert_eq!(field.grid().n(), self.n);
        let mut arr = Partial {
            axes: 7,
            data: field.samples().to_vec(),
        };
        for f in &self.inner {
            arr = reduce(&arr, f.spatial(), f.exponent, self.n, self.h);
        }
        let q = self.time.exponent;
        let s = self.time.spatial();
        // Same reduction as the factor itself but left un-rooted so time can be summed.
        let contrib = if q.is_infinite() {
            reduce(&arr, s, q, self.n, self.h)
        } else {
            let mut r = reduce(&arr, s, q, self.n, self.h);
            for v in &mut r.data {
                *v = v.powf(q) * weight;
            }
            r
        };
        self.acc_axes = contrib.axes;
        match &mut self.acc {
            None => self.acc = Some(contrib.data),
            Some(acc) => {
                for (a, c) in acc.iter_mut().zip(contrib.data) {
                    if q.is_infinite() {
                        *a = a.max(c);
                    } else {
                        *a += c;
                    }
                }
            }
        }
        self.pushes += 1;
    }

    pub fn pushes(&self) -> usize {
        self.pushes
    }

    pub fn finish(self) -> Result<f64> {
        let mut data = self.acc.ok_or(Error::EmptyTrajectory)?;
        let q = self.time.exponent;
        if q.is_finite() {
            for v in &mut data {
                *v = v.max(0.0).powf(1.0 / q);
            }
        }
        let mut arr = Partial {
            axes: self.acc_axes,
            data,
        };
        for f in &self.outer {
            arr = reduce(&arr, f.spatial(), f.exponent, self.n, self.h);
        }
        debug_assert_eq!(arr.data.len(), 1);
        Ok(arr.data[0])
    }
}

/// Spatial mixed norm of a single field; the spec must not involve time.
pub fn spatial_mixed_norm(f: &RealField, spec: &MixedNormSpec) -> Result<f64> {
    if spec.has_time() {
        return Err(invalid("spec", "spatial norm cannot integrate over time"));
    }
    let g = f.grid();
    let mut arr = Partial {
        axes: 7,
        data: f.samples().to_vec(),
    };
    for fac in spec.factors.iter().rev() {
        arr = reduce(&arr, fac.spatial(), fac.exponent, g.n(), g.spacing());
    }
    Ok(arr.data[0])
}

/// Trapezoid weights for uniformly spaced sample times.
pub fn trapezoid_weights(times: &[f64]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if times.len() == 1 {
        return Ok(vec![0.0]);
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(invalid("times", "snapshot times must increase"));
    }
    for (i, &t) in times.iter().enumerate() {
        if (t - (times[0] + i as f64 * dt)).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(invalid("times", "snapshots must be uniformly spaced"));
        }
    }
    let mut w = vec![dt; times.len()];
    w[0] *= 0.5;
    *w.last_mut().unwrap() *= 0.5;
    Ok(w)
}

fn check_interval(times: &[f64], symmetric: bool) -> Result<()> {
    let (first, last) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * last.abs().max(1.0);
    let ok = if symmetric {
        (first + last).abs() <= tol
    } else {
        first.abs() <= tol
    };
    if ok {
        Ok(())
    } else {
        let want = if symmetric { "[-T, T]" } else { "[0, T]" };
        Err(invalid("times", format!("trajectory does not cover {want}")))
    }
}

/// Nested quadrature of `|u(t, x, y)|` in the declared order, trapezoid in time.
pub fn mixed_norm(traj: &Trajectory, spec: &MixedNormSpec) -> Result<f64> {
    if traj.snapshots.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_interval(&traj.times, spec.symmetric)?;
    let time_exp = spec
        .factors
        .iter()
        .find(|f| f.contains(Var::T))
        .map(|f| f.exponent)
        .ok_or_else(|| invalid("spec", "space-time norm needs a time factor"))?;
    if traj.snapshots.len() == 1 && time_exp.is_finite() {
        return Err(invalid("trajectory", "a finite time exponent needs at least two snapshots"));
    }
    let weights = trapezoid_weights(&traj.times)?;
    let mut acc = MixedNormAccumulator::new(traj.snapshots[0].grid(), spec)?;
    for (u, w) in traj.snapshots.iter().zip(weights) {
        acc.push(u, w);
    }
    acc.finish()
}

/// Regularity and weights of the local-theory work space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XtParams {
    pub s: f64,
    pub weight: WeightSpec,
    pub symmetric: bool,
}

impl XtParams {
    pub fn new(s: f64, weight: WeightSpec) -> Result<Self> {
        if !(s > 2.0 && s < 3.0) {
            return Err(invalid("s", format!("work-space regularity must lie in (2, 3), got {s}")));
        }
        Ok(Self {
            s,
            weight,
            symmetric: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTerm {
    pub label: String,
    pub value: f64,
}

/// Every term of the work-space norm, their sum, and diagnostics kept out of the sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XTNormReport {
    pub terms: Vec<NormTerm>,
    pub total: f64,
    pub diagnostics: Vec<NormTerm>,
}

impl XTNormReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.terms
            .iter()
            .chain(&self.diagnostics)
            .find(|t| t.label == label)
            .map(|t| t.value)
    }
}

/// Exponent of the `⟨x⟩^{3/2+}` weight reported as a diagnostic.
pub const STRONG_X_WEIGHT: f64 = 1.55;

type Chain = Vec<(Multiplier, f64)>;

struct MixedTerm {
    label: String,
    chain: Chain,
    acc: MixedNormAccumulator,
}

/// Streaming evaluator of the work-space norm.
pub struct XtAccumulator {
    grid: Grid3,
    params: XtParams,
    sup_hs: f64,
    sup_x: f64,
    sup_y: f64,
    sup_strong_x: f64,
    mixed: Vec<MixedTerm>,
    pushes: usize,
}

fn pd(axis: Axis) -> (Multiplier, f64) {
    (Multiplier::Partial(axis), 1.0)
}

fn chain_symbol(chain: &Chain, k: [f64; 3], ko: [f64; 3]) -> Complex64 {
    let mut c = Complex64::new(1.0, 0.0);
    for &(m, s) in chain {
        match m {
            Multiplier::Partial(a) => c *= Complex64::new(0.0, ko[a.index()]),
            _ => c *= m.even_symbol(k[0], k[1], k[2], s).unwrap_or(1.0),
        }
    }
    c
}

impl XtAccumulator {
    pub fn new(grid: &Grid3, params: XtParams) -> Result<Self> {
        use Axis::{X, Y1, Y2};
        let s = params.s;
        let sym = params.symmetric;
        let spec = |text: &str| -> Result<MixedNormSpec> {
            let mut m: MixedNormSpec = text.parse()?;
            m.symmetric = sym;
            Ok(m)
        };
        let strichartz = spec("L2_T Linf_xy")?;
        let maximal = spec("L2_x Linf_yT")?;
        let smoothing = spec("Linf_x L2_yT")?;
        let dy = |a: Axis, r: f64| (Multiplier::DyAxis(a), r);
        let mut rows: Vec<(String, Chain, &MixedNormSpec)> = vec![
            ("u_x L2_T Linf_xy".into(), vec![pd(X)], &strichartz),
            ("u_xx L2_T Linf_xy".into(), vec![pd(X), pd(X)], &strichartz),
            ("D_x^(s-1) u L2_T Linf_xy".into(), vec![(Multiplier::Dx, s - 1.0)], &strichartz),
        ];
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("D_y{j}^(s-2) u_x L2_T Linf_xy"), vec![dy(a, s - 2.0), pd(X)], &strichartz));
        }
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("u_xy{j} L2_T Linf_xy"), vec![pd(X), pd(a)], &strichartz));
        }
        rows.push(("u L2_x Linf_yT".into(), vec![], &maximal));
        rows.push(("u_x L2_x Linf_yT".into(), vec![pd(X)], &maximal));
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("u_y{j} L2_x Linf_yT"), vec![pd(a)], &maximal));
        }
        rows.push(("D_x^(s-2) u L2_x Linf_yT".into(), vec![(Multiplier::Dx, s - 2.0)], &maximal));
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("D_y{j}^(s-2) u L2_x Linf_yT"), vec![dy(a, s - 2.0)], &maximal));
        }
        rows.push(("D_x^s u_x Linf_x L2_yT".into(), vec![(Multiplier::Dx, s), pd(X)], &smoothing));
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("D_y{j}^s u_x Linf_x L2_yT"), vec![dy(a, s), pd(X)], &smoothing));
        }
        rows.push(("u_xxx Linf_x L2_yT".into(), vec![pd(X), pd(X), pd(X)], &smoothing));
        for (a, j) in [(Y1, 1), (Y2, 2)] {
            rows.push((format!("D_y{j}^2 u_x Linf_x L2_yT"), vec![dy(a, 2.0), pd(X)], &smoothing));
        }
        let mixed = rows
            .into_iter()
            .map(|(label, chain, spec)| {
                Ok(MixedTerm {
                    label,
                    chain,
                    acc: MixedNormAccumulator::new(grid, spec)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            params,
            sup_hs: 0.0,
            sup_x: 0.0,
            sup_y: 0.0,
            sup_strong_x: 0.0,
            mixed,
            pushes: 0,
        })
    }

    pub fn push(&mut self, u: &SpectralField, weight: f64) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let g = &self.grid;
        let phys = inverse_transform(u);
        let w = self.params.weight;
        self.sup_hs = self
            .sup_hs
            .max(sobolev_norm_of(u, SobolevSpec::h(self.params.s)).value);
        self.sup_x = self.sup_x.max(w.x_weighted(&phys));
        self.sup_y = self.sup_y.max(w.y_weighted(&phys));
        let strong = phys.weighted(|x, _, _| (1.0 + x * x).powf(0.5 * STRONG_X_WEIGHT));
        self.sup_strong_x = self.sup_strong_x.max(lebesgue_norm(&strong, 2.0));

        let k = g.wavenumbers();
        let ko = g.odd_wavenumbers();
        let derived: Vec<SpectralField> = self
            .mixed
            .iter()
            .map(|t| {
                u.map_slots(|i0, i1, i2| {
                    chain_symbol(&t.chain, [k[i0], k[i1], k[i2]], [ko[i0], ko[i1], ko[i2]])
                })
            })
            .collect();
        let mut fields = Vec::with_capacity(derived.len());
        for pair in derived.chunks(2) {
            if let [a, b] = pair {
                let (fa, fb) = inverse_transform_pair(a, b)?;
                fields.push(fa);
                fields.push(fb);
            } else {
                fields.push(inverse_transform(&pair[0]));
            }
        }
        for (t, f) in self.mixed.iter_mut().zip(&fields) {
            t.acc.push(f, weight);
        }
        self.pushes += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<XTNormReport> {
        if self.pushes == 0 {
            return Err(Error::EmptyTrajectory);
        }
        let w = self.params.weight;
        let mut terms = vec![
            NormTerm {
                label: "u Linf_T H^s".into(),
                value: self.sup_hs,
            },
            NormTerm {
                label: format!("|x|^{} u Linf_T L2", w.r1),
                value: self.sup_x,
            },
            NormTerm {
                label: format!("|y|^{} u Linf_T L2", w.r2),
                value: self.sup_y,
            },
        ];
        for t in self.mixed {
            terms.push(NormTerm {
                label: t.label,
                value: t.acc.finish()?,
            });
        }
        let total = terms.iter().map(|t| t.value).sum();
        Ok(XTNormReport {
            terms,
            total,
            diagnostics: vec![NormTerm {
                label: format!("<x>^{STRONG_X_WEIGHT} u Linf_T L2"),
                value: self.sup_strong_x,
            }],
        })
    }
}

/// Work-space norm of a stored trajectory.
pub fn xt_norm(traj: &Trajectory, params: XtParams) -> Result<XTNormReport> {
    if traj.snapshots.len() < 2 {
        return Err(invalid("trajectory", "time integrals need at least two snapshots"));
    }
    check_interval(&traj.times, params.symmetric)?;
    let weights = trapezoid_weights(&traj.times)?;
    let mut acc = XtAccumulator::new(traj.snapshots[0].grid(), params)?;
    for (u, w) in traj.snapshots.iter().zip(weights) {
        acc.push(&forward_transform(u), w)?;
    }
    acc.finish()
}

/// Radial energy distribution over shells of width `2π/L`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellSpectrum {
    pub width: f64,
    /// Shell centers.
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
}

pub fn shell_spectrum(f: &RealField) -> ShellSpectrum {
    shell_spectrum_of(&forward_transform(f))
}

pub fn shell_spectrum_of(spec: &SpectralField) -> ShellSpectrum {
    let g = spec.grid();
    let n = g.n();
    let width = 2.0 * std::f64::consts::PI / g.box_len();
    let k = g.wavenumbers();
    let count = (3.0_f64.sqrt() * n as f64 / 2.0).ceil() as usize + 1;
    let mut energies = vec![0.0; count];
    for (idx, c) in spec.coeffs().iter().enumerate() {
        let (i0, i1, i2) = (idx / (n * n), (idx / n) % n, idx % n);
        let r = (k[i0] * k[i0] + k[i1] * k[i1] + k[i2] * k[i2]).sqrt();
        let shell = ((r / width) + 1e-9).floor() as usize;
        energies[shell.min(count - 1)] += c.norm_sqr();
    }
    let radii = (0..count).map(|i| (i as f64 + 0.5) * width).collect();
    ShellSpectrum {
        width,
        radii,
        energies,
    }
}


/// Wavenumber interval for power-law fits of the shell spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub k_min: f64,
    pub k_max: f64,
}

impl FitWindow {
    pub fn new(k_min: f64, k_max: f64) -> Self {
        Self { k_min, k_max }
    }

    /// `[κ_N/3, 2κ_N/3]` with `κ_N` the Nyquist wavenumber.
    pub fn middle_third(grid: &Grid3) -> Self {
        let kn = grid.nyquist();
        Self::new(kn / 3.0, 2.0 * kn / 3.0)
    }
}

pub const MIN_FIT_SHELLS: usize = 8;

/// Least-squares slope of `log E` against `log κ` over shells centered in the window.
pub fn tail_exponent(f: &RealField, window: FitWindow) -> Result<f64> {
    let kn = f.grid().nyquist();
    if !(window.k_min > 0.0 && window.k_min < window.k_max) {
        return Err(Error::FitWindow(format!(
            "need 0 < k_min < k_max, got [{}, {}]",
            window.k_min, window.k_max
        )));
    }
    if window.k_max > kn {
        return Err(Error::FitWindow(format!(
            "k_max = {} exceeds the resolved band (Nyquist {kn})",
            window.k_max
        )));
    }
    let sp = shell_spectrum(f);
    let pts: Vec<(f64, f64)> = sp
        .radii
        .iter()
        .zip(&sp.energies)
        .filter(|(r, _)| **r >= window.k_min && **r <= window.k_max)
        .map(|(r, e)| (*r, *e))
        .collect();
    if pts.len() < MIN_FIT_SHELLS {
        return Err(Error::FitWindow(format!(
            "{} shells in window, need at least {MIN_FIT_SHELLS}",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, e)| !(*e > 0.0)) {
        return Err(Error::FitWindow("empty shell inside the window".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{sample_profile, ProfileSpec};
    use crate::grid::make_grid;
    use crate::multiplier::{apply_fractional, apply_propagator};
    use crate::solver::Provenance;
    use std::f64::consts::PI;

    fn traj_of(times: Vec<f64>, snapshots: Vec<RealField>) -> Trajectory {
        Trajectory::new(times, snapshots, Provenance::Linear)
    }

    #[test]
    fn lebesgue_of_constant() {
        let g = make_grid(8, 3.0).unwrap();
        let f = RealField::from_fn(&g, |_, _, _| 2.0);
        for p in [1.0, 2.0, 3.5] {
            let want = 2.0 * 27f64.powf(1.0 / p);
            assert!((lebesgue_norm(&f, p) - want).abs() < 1e-12 * want);
        }
        assert_eq!(lebesgue_norm(&f, f64::INFINITY), 2.0);
    }

    #[test]
    fn profile_norms() {
        let g = make_grid(96, 12.0).unwrap();
        let phi = sample_profile(ProfileSpec::default(), &g).field;
        assert!((lebesgue_norm(&phi, f64::INFINITY) - 1.0).abs() < 1e-15);
        // The cusp at the origin limits quadrature accuracy on this grid.
        let l2 = lebesgue_norm(&phi, 2.0);
        assert!((l2 / (PI / 8.0).sqrt() - 1.0).abs() < 1e-2, "{l2}");
    }

    #[test]
    fn sobolev_zero_order_is_l2() {
        let g = make_grid(16, 10.0).unwrap();
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x * x + 2.0 * y1 * y1 + y2 * y2)).exp() * (1.0 + x));
        let a = sobolev_norm(&f, SobolevSpec::h(0.0));
        assert!((a - lebesgue_norm(&f, 2.0)).abs() < 1e-12 * a);
    }

    #[test]
    fn sobolev_single_mode() {
        let l = 8.0;
        let g = make_grid(16, l).unwrap();
        let k = 2.0 * PI / l;
        let amp = 0.7;
        let f = RealField::from_fn(&g, |x, _, _| amp * (k * x).cos());
        // ‖A cos(kx)‖₂ = A L^{3/2}/√2; J² multiplies by 1 + k².
        let want = amp * l.powf(1.5) / 2f64.sqrt() * (1.0 + k * k);
        let got = sobolev_norm(&f, SobolevSpec::h(2.0));
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sobolev_agrees_with_fractional_operator() {
        let g = make_grid(16, 10.0).unwrap();
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x * x + y1 * y1 + y2 * y2) / 2.0).exp() * y1);
        let spec = forward_transform(&f);
        for kind in [Multiplier::J, Multiplier::D, Multiplier::Jx, Multiplier::DyAxis(Axis::Y2)] {
            let a = sobolev_norm(&f, SobolevSpec::new(1.3, kind).unwrap());
            let b = apply_fractional(&spec, kind, 1.3).unwrap().field.l2_norm();
            assert!((a - b).abs() < 1e-12 * b, "{kind:?}");
        }
    }

    #[test]
    fn homogeneous_negative_order_flags_zero_mode() {
        let g = make_grid(8, 6.0).unwrap();
        let f = RealField::from_fn(&g, |_, _, _| 1.0);
        let r = sobolev_norm_of(&forward_transform(&f), SobolevSpec::new(-0.5, Multiplier::D).unwrap());
        assert!(r.zero_mode_dropped);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn sobolev_spec_rejects() {
        assert!(SobolevSpec::new(f64::NAN, Multiplier::J).is_err());
        assert!(SobolevSpec::new(1.0, Multiplier::Partial(Axis::X)).is_err());
    }

    #[test]
    fn profile_regularity_threshold() {
        let p = ProfileSpec::default();
        let coarse = sample_profile(p, &make_grid(64, 30.0).unwrap()).field;
        let fine = sample_profile(p, &make_grid(128, 30.0).unwrap()).field;
        let below = |f: &RealField| sobolev_norm(f, SobolevSpec::h(2.4));
        let above = |f: &RealField| sobolev_norm(f, SobolevSpec::h(2.6));
        assert!((below(&fine) / below(&coarse) - 1.0).abs() < 0.05);
        assert!(above(&fine) / above(&coarse) > below(&fine) / below(&coarse));
        assert!(above(&fine) > 1.05 * above(&coarse));
    }

    #[test]
    fn weighted_z_basics() {
        let g = make_grid(16, 10.0).unwrap();
        let w = WeightSpec::new(0.5, 0.5, Bracket::Homogeneous).unwrap();
        assert_eq!(weighted_z_norm(&RealField::zeros(&g), 2.0, w), 0.0);
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x * x + y1 * y1 + y2 * y2)).exp());
        let one = weighted_z_norm(&f, 1.0, w);
        let two = weighted_z_norm(&f.scaled(2.0), 1.0, w);
        assert!((two - 2.0 * one).abs() < 1e-12 * two);
        assert!(WeightSpec::new(0.0, 0.5, Bracket::Japanese).is_err());
        assert!(!WeightSpec::new(1.5, 0.5, Bracket::Japanese).unwrap().in_local_theory_range());
    }

    #[test]
    fn weighted_z_stable_under_box_growth() {
        let w = WeightSpec::new(0.5, 0.5, Bracket::Homogeneous).unwrap();
        let p = ProfileSpec::default();
        let a = weighted_z_norm(&sample_profile(p, &make_grid(48, 30.0).unwrap()).field, 2.0, w);
        let b = weighted_z_norm(&sample_profile(p, &make_grid(64, 40.0).unwrap()).field, 2.0, w);
        assert!(a.is_finite() && (b / a - 1.0).abs() < 0.02, "{a} {b}");
    }

    #[test]
    fn weighted_radial_oracle() {
        // ∫ |x|^{2r} e^{-4ρ} over ℝ³ for the x-weight, r = 1/2: by symmetry
        // ∫|x| e^{-4ρ} = 2π ∫ρ³ e^{-4ρ} dρ ∫₀^π |cos θ| sin θ dθ = 2π · 6/4⁴ · 1.
        let w = WeightSpec::new(0.5, 0.5, Bracket::Homogeneous).unwrap();
        let phi = sample_profile(ProfileSpec::default(), &make_grid(128, 16.0).unwrap()).field;
        let want = (2.0 * PI * 6.0 / 256.0_f64).sqrt();
        let got = w.x_weighted(&phi);
        assert!((got / want - 1.0).abs() < 1e-2, "{got} {want}");
    }

    #[test]
    fn exp_weight_zero_rate_is_plain_derivative() {
        let g = make_grid(16, 10.0).unwrap();
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x * x + y1 * y1 + y2 * y2)).exp());
        let plain = apply_partial_multi(&forward_transform(&f), [1, 1, 0]).l2_norm();
        assert!((exp_weighted_sobolev(&f, 0.0, [1, 1, 0]).unwrap() - plain).abs() < 1e-14);
    }

    #[test]
    fn exp_weight_matches_closed_form() {
        // ‖e^{x+y₁+y₂} e^{-2ρ}‖₂² = 2π after rotating x+y₁+y₂ onto one axis.
        let phi = sample_profile(ProfileSpec::default(), &make_grid(96, 36.0).unwrap()).field;
        let got = exp_weighted_sobolev(&phi, 1.0, [0, 0, 0]).unwrap();
        let want = (2.0 * PI).sqrt();
        assert!((got / want - 1.0).abs() < 1e-2, "{got} {want}");
    }

    #[test]
    fn exp_weight_rejects_insufficient_decay() {
        let phi = sample_profile(ProfileSpec::default(), &make_grid(32, 30.0).unwrap()).field;
        assert!(matches!(
            exp_weighted_sobolev(&phi, 2.0, [0, 0, 0]),
            Err(Error::WeightOverflow { .. })
        ));
        assert!(exp_weighted_sobolev(&phi, 1.0, [2, 1, 1]).is_err());
    }

    #[test]
    fn spec_parsing_round_trip() {
        let s: MixedNormSpec = "L2_x Linf_yT".parse().unwrap();
        assert_eq!(s.factors().len(), 2);
        assert!(s.factors()[1].contains(Var::Y2) && s.factors()[1].contains(Var::T));
        assert_eq!(s.to_string(), "L2_x Linf_yT");
        let t: MixedNormSpec = "L3_y1 L2_xy2 Linf_t".parse().unwrap();
        assert_eq!(t.to_string(), "L3_y1 L2_xy2 Linf_T");
        assert!("L2_x".parse::<MixedNormSpec>().is_err());
        assert!("L2_xy L2_xT".parse::<MixedNormSpec>().is_err());
        assert!("L0.5_xyT".parse::<MixedNormSpec>().is_err());
        assert!("Q2_xyT".parse::<MixedNormSpec>().is_err());
    }

    #[test]
    fn mixed_norm_of_constant() {
        let (l, t_end, c) = (4.0, 2.0, 1.5);
        let g = make_grid(8, l).unwrap();
        let times: Vec<f64> = (0..5).map(|i| i as f64 * t_end / 4.0).collect();
        let snaps = vec![RealField::from_fn(&g, |_, _, _| c); 5];
        let traj = traj_of(times, snaps);
        let v = mixed_norm(&traj, &"Linf_x L2_yT".parse().unwrap()).unwrap();
        assert!((v - c * (l * l * t_end).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mixed_norm_fubini() {
        let g = make_grid(8, 6.0).unwrap();
        let times: Vec<f64> = (0..7).map(|i| 0.25 * i as f64).collect();
        let snaps: Vec<RealField> = times
            .iter()
            .map(|&t| RealField::from_fn(&g, |x, y1, y2| (-(x * x + y1 * y1) - (y2 - t).powi(2)).exp()))
            .collect();
        let w = trapezoid_weights(&times).unwrap();
        let flat: f64 = snaps
            .iter()
            .zip(&w)
            .map(|(u, w)| w * lebesgue_norm(u, 2.0).powi(2))
            .sum::<f64>()
            .sqrt();
        let traj = traj_of(times, snaps);
        for text in ["L2_xyT", "L2_x L2_yT", "L2_T L2_y1 L2_xy2", "L2_y L2_T L2_x"] {
            let v = mixed_norm(&traj, &text.parse().unwrap()).unwrap();
            assert!((v - flat).abs() < 1e-10 * flat, "{text}");
        }
    }

    #[test]
    fn single_snapshot_sup_in_time_is_spatial() {
        let g = make_grid(8, 6.0).unwrap();
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x * x + 0.5 * y1 * y1 + y2 * y2)).exp() * (x + 0.3));
        let traj = traj_of(vec![0.0], vec![f.clone()]);
        let spatial = spatial_mixed_norm(&f, &"L2_x Linf_y".parse().unwrap()).unwrap();
        let st = mixed_norm(&traj, &"L2_x Linf_yT".parse().unwrap()).unwrap();
        assert!((spatial - st).abs() < 1e-15);
        assert!(mixed_norm(&traj, &"L2_x L2_yT".parse().unwrap()).is_err());
    }

    #[test]
    fn mixed_norm_order_matters() {
        // Minkowski: ‖·‖_{L²_x L^∞_y} ≤ ‖·‖_{L^∞_y L²_x}.
        let g = make_grid(8, 6.0).unwrap();
        let f = RealField::from_fn(&g, |x, y1, y2| (-(x - y1).powi(2) - y2 * y2).exp());
        let a = spatial_mixed_norm(&f, &"L2_x Linf_y".parse().unwrap()).unwrap();
        let b = spatial_mixed_norm(&f, &"Linf_y L2_x".parse().unwrap()).unwrap();
        assert!(a >= b * (1.0 - 1e-12) && a > 1.1 * b);
    }

    #[test]
    fn mixed_norm_errors() {
        let g = make_grid(8, 6.0).unwrap();
        let empty = traj_of(vec![], vec![]);
        assert!(matches!(
            mixed_norm(&empty, &"L2_xyT".parse().unwrap()),
            Err(Error::EmptyTrajectory)
        ));
        let f = RealField::zeros(&g);
        let uneven = traj_of(vec![0.0, 0.1, 0.3], vec![f.clone(), f.clone(), f.clone()]);
        assert!(mixed_norm(&uneven, &"L2_xyT".parse().unwrap()).is_err());
        let shifted = traj_of(vec![0.5, 1.0], vec![f.clone(), f.clone()]);
        assert!(mixed_norm(&shifted, &"L2_xyT".parse().unwrap()).is_err());
        let sym = traj_of(vec![-1.0, 0.0, 1.0], vec![f.clone(), f.clone(), f]);
        let spec: MixedNormSpec = "L2_xyT".parse().unwrap();
        assert!(mixed_norm(&sym, &spec).is_err());
        assert!(mixed_norm(&sym, &spec.symmetric()).is_ok());
    }

    fn linear_traj(g: &Grid3, steps: usize, t_end: f64) -> Trajectory {
        let phi = forward_transform(&sample_profile(ProfileSpec::default(), g).field);
        let times: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        let snaps = times
            .iter()
            .map(|&t| inverse_transform(&apply_propagator(&phi, t)))
            .collect();
        traj_of(times, snaps)
    }

    fn xt_params() -> XtParams {
        XtParams::new(2.25, WeightSpec::new(0.5, 0.5, Bracket::Homogeneous).unwrap()).unwrap()
    }

    #[test]
    fn xt_norm_zero_and_homogeneity() {
        let g = make_grid(16, 12.0).unwrap();
        let zero = traj_of(vec![0.0, 0.5], vec![RealField::zeros(&g), RealField::zeros(&g)]);
        let r = xt_norm(&zero, xt_params()).unwrap();
        assert!(r.terms.iter().all(|t| t.value == 0.0));
        assert_eq!(r.terms.len(), 23);

        let traj = linear_traj(&g, 4, 0.5);
        let scaled = traj_of(
            traj.times.clone(),
            traj.snapshots.iter().map(|u| u.scaled(-3.0)).collect(),
        );
        let a = xt_norm(&traj, xt_params()).unwrap();
        let b = xt_norm(&scaled, xt_params()).unwrap();
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!((3.0 * x.value - y.value).abs() <= 1e-10 * y.value.max(1e-300), "{}", x.label);
        }
        let sum: f64 = a.terms.iter().map(|t| t.value).sum();
        assert!((a.total - sum).abs() < 1e-12 * sum);
        assert!(a.get("u_xxx Linf_x L2_yT").is_some());
        assert!(XtParams::new(3.0, xt_params().weight).is_err());
    }

    #[test]
    fn xt_norm_stable_under_step_halving() {
        let g = make_grid(32, 24.0).unwrap();
        let a = xt_norm(&linear_traj(&g, 16, 1.0), xt_params()).unwrap();
        let b = xt_norm(&linear_traj(&g, 32, 1.0), xt_params()).unwrap();
        for (x, y) in a.terms.iter().zip(&b.terms) {
            assert!(x.value.is_finite() && x.value > 0.0, "{}", x.label);
            assert!((x.value / y.value - 1.0).abs() < 0.1, "{} {} {}", x.label, x.value, y.value);
        }
    }

    #[test]
    fn shells_of_single_mode() {
        let l = 10.0;
        let g = make_grid(16, l).unwrap();
        let k = 2.0 * PI / l * 3.0;
        let f = RealField::from_fn(&g, |x, _, _| (k * x).cos());
        let sp = shell_spectrum(&f);
        let nonzero: Vec<usize> = (0..sp.energies.len())
            .filter(|&i| sp.energies[i] > 1e-20 * sp.energies.iter().sum::<f64>())
            .collect();
        assert_eq!(nonzero, vec![3]);
    }

    #[test]
    fn tail_exponent_of_profile_and_gaussian() {
        // Window kept below a third of Nyquist so aliased images of the
        // |ξ|⁻⁴ tail stay small, and above 4b so the asymptotic regime holds.
        let g = make_grid(192, 16.0).unwrap();
        let window = FitWindow::new(8.0, 12.5);
        let phi = sample_profile(ProfileSpec::default(), &g).field;
        let slope = tail_exponent(&phi, window).unwrap();
        assert!((slope + 6.0).abs() < 0.5, "{slope}");
        let gauss = RealField::from_fn(&g, |x, y1, y2| (-(x * x + y1 * y1 + y2 * y2)).exp());
        assert!(tail_exponent(&gauss, window).unwrap() < -12.0);
    }

    #[test]
    fn tail_window_errors() {
        let g = make_grid(16, 10.0).unwrap();
        let f = RealField::from_fn(&g, |x, _, _| (-x * x).exp());
        assert!(matches!(tail_exponent(&f, FitWindow::new(1.0, 100.0)), Err(Error::FitWindow(_))));
        assert!(matches!(tail_exponent(&f, FitWindow::new(2.0, 3.0)), Err(Error::FitWindow(_))));
        assert!(tail_exponent(&f, FitWindow::new(3.0, 2.0)).is_err());
        let mt = FitWindow::middle_third(&g);
        assert!((mt.k_max - 2.0 * mt.k_min).abs() < 1e-12);
    }
}
