//! Fourier multipliers: the dispersion relation, the free propagator `W(t)`,
//! the exponentially weighted propagator and fractional derivatives.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::SpectralField;

/// A point `(ξ, η₁, η₂)` of frequency space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub xi: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl Mode {
    pub const fn new(xi: f64, eta1: f64, eta2: f64) -> Self {
        Self { xi, eta1, eta2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.xi * self.xi + self.eta1 * self.eta1 + self.eta2 * self.eta2
    }
}

impl std::ops::Neg for Mode {
    type Output = Mode;
    fn neg(self) -> Mode {
        Mode::new(-self.xi, -self.eta1, -self.eta2)
    }
}

/// Rate `a > 0` of the weight `e^{a(x + y₁ + y₂)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightRate(f64);

impl WeightRate {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", format!("weight rate must be positive, got {a}")));
        }
        Ok(Self(a))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Whether `e^{a(x+y₁+y₂)} e^{-b|x|}` stays square integrable.
    pub fn admits_decay(self, b: f64) -> bool {
        self.0 * 3f64.sqrt() < b
    }
}

/// `ω(ξ, η) = ξ(ξ² + η₁² + η₂²)`.
pub fn dispersion_symbol(m: Mode) -> f64 {
    m.xi * m.norm_sqr()
}

/// Multiplies every coefficient by `e^{i t ω}`.
pub fn apply_propagator(spec: &SpectralField, t: f64) -> SpectralField {
    if t == 0.0 {
        return spec.clone();
    }
    let omega = spec.grid().omega_table();
    let mut out = spec.clone();
    for (c, &w) in out.coeffs_mut().iter_mut().zip(omega) {
        *c *= Complex64::from_polar(1.0, t * w);
    }
    out
}

/// Symbol `m_a` of the conjugated linear flow `w = e^{a(x+y₁+y₂)} W(t) v`,
/// i.e. `ŵ(t) = e^{t m_a} ŵ₀`.
///
/// Conjugating `∂_t v + ∂_x Δ v = 0` by the weight turns every `∂_j` into
/// `∂_j - a`, so `m_a = (a - iξ) Σ_j (i ζ_j - a)²` with `ζ = (ξ, η₁, η₂)`:
///
/// * `Re m_a = -a [ξ² + (ξ+η₁)² + (ξ+η₂)²] + 3a³`
/// * `Im m_a = ξ(ξ² + |η|²) - 3a²ξ - 2a²(ξ + η₁ + η₂)`
pub fn weighted_propagator_symbol(m: Mode, a: WeightRate) -> Complex64 {
    weighted_symbol_split(m.xi, m.eta1, m.eta2, m.xi, m.eta1, m.eta2, a.get())
}

/// `m_a` with separate even (squared) and odd (linear) frequency values, so
/// the Nyquist slot can enter odd terms as zero.
fn weighted_symbol_split(
    xe: f64,
    e1e: f64,
    e2e: f64,
    xo: f64,
    e1o: f64,
    e2o: f64,
    a: f64,
) -> Complex64 {
    let sq = xe * xe + e1e * e1e + e2e * e2e;
    let cross = 2.0 * xo * (e1o + e2o);
    let re = -a * (3.0 * xe * xe + e1e * e1e + e2e * e2e + cross) + 3.0 * a * a * a;
    let im = xo * sq - 3.0 * a * a * xo - 2.0 * a * a * (xo + e1o + e2o);
    Complex64::new(re, im)
}

/// Evolves the weighted field: multiplies by `e^{t m_a}` for `t ≥ 0`.
///
/// Negative times are refused: the symbol's real part then grows without
/// bound and the caller must switch to the weight `e^{-a(x+y₁+y₂)}`.
pub fn apply_weighted_propagator(
    w0: &SpectralField,
    t: f64,
    a: WeightRate,
) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(Error::NegativeWeightedTime { t });
    }
    let g = w0.grid();
    let k = g.wavenumbers();
    let ko = g.odd_wavenumbers();
    let a = a.get();
    Ok(w0.map_slots(|i0, i1, i2| {
        let m = weighted_symbol_split(k[i0], k[i1], k[i2], ko[i0], ko[i1], ko[i2], a);
        (m * t).exp()
    }))
}

/// Spatial axis selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y1,
    Y2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y1, Axis::Y2];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y1 => 1,
            Axis::Y2 => 2,
        }
    }
}

/// Fourier multipliers of the derivative family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// `(ξ² + |η|²)^{s/2}`
    D,
    /// `(1 + ξ² + |η|²)^{s/2}`
    J,
    /// `|ξ|^s`
    Dx,
    /// `|η_j|^s` for the chosen transverse axis
    DyAxis(Axis),
    /// `|η|^s`
    Dy,
    /// `(1 + ξ²)^{s/2}`
    Jx,
    /// `(1 + |η|²)^{s/2}`
    Jy,
    /// `i ζ_j`, the classical partial derivative (order argument ignored)
    Partial(Axis),
}

impl Multiplier {
    pub(crate) fn is_homogeneous(self) -> bool {
        matches!(
            self,
            Multiplier::D | Multiplier::Dx | Multiplier::DyAxis(_) | Multiplier::Dy
        )
    }

    /// Real symbol value for the even members; `None` for `Partial`.
    pub(crate) fn even_symbol(self, xi: f64, e1: f64, e2: f64, s: f64) -> Option<f64> {
        let half = 0.5 * s;
        let v = match self {
            Multiplier::D => (xi * xi + e1 * e1 + e2 * e2).powf(half),
            Multiplier::J => (1.0 + xi * xi + e1 * e1 + e2 * e2).powf(half),
            Multiplier::Dx => xi.abs().powf(s),
            Multiplier::DyAxis(Axis::X) => xi.abs().powf(s),
            Multiplier::DyAxis(Axis::Y1) => e1.abs().powf(s),
            Multiplier::DyAxis(Axis::Y2) => e2.abs().powf(s),
            Multiplier::Dy => (e1 * e1 + e2 * e2).powf(half),
            Multiplier::Jx => (1.0 + xi * xi).powf(half),
            Multiplier::Jy => (1.0 + e1 * e1 + e2 * e2).powf(half),
            Multiplier::Partial(_) => return None,
        };
        Some(v)
    }
}

/// Result of a fractional multiplier application.
#[derive(Clone, Debug)]
pub struct FractionalOutput {
    pub field: SpectralField,
    /// Set when a homogeneous symbol with negative order met a zero frequency
    /// and the affected coefficients were zeroed.
    pub zeroed_singular_modes: bool,
}

pub fn apply_fractional(spec: &SpectralField, kind: Multiplier, s: f64) -> Result<FractionalOutput> {
    if !s.is_finite() {
        return Err(invalid("s", "order must be finite"));
    }
    let g = spec.grid();
    let k = g.wavenumbers();
    let ko = g.odd_wavenumbers();
    let mut zeroed = false;
    let field = spec.map_slots(|i0, i1, i2| {
        if let Multiplier::Partial(axis) = kind {
            let kk = [ko[i0], ko[i1], ko[i2]][axis.index()];
            return Complex64::new(0.0, kk);
        }
        let v = kind
            .even_symbol(k[i0], k[i1], k[i2], s)
            .unwrap_or_default();
        if kind.is_homogeneous() && s < 0.0 && !v.is_finite() {
            zeroed = true;
            return Complex64::default();
        }
        Complex64::new(v, 0.0)
    });
    Ok(FractionalOutput {
        field,
        zeroed_singular_modes: zeroed,
    })
}

/// `∂^α` with the multi-index `α = (α_x, α_y1, α_y2)`.
pub fn apply_partial_multi(spec: &SpectralField, alpha: [u32; 3]) -> SpectralField {
    if alpha == [0, 0, 0] {
        return spec.clone();
    }
    let g = spec.grid();
    let ko = g.odd_wavenumbers();
    spec.map_slots(|i0, i1, i2| {
        let mut c = Complex64::new(1.0, 0.0);
        for (kk, &p) in [ko[i0], ko[i1], ko[i2]].iter().zip(&alpha) {
            c *= Complex64::new(0.0, *kk).powu(p);
        }
        c
    })
}
