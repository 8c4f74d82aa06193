//! Periodic computational box, frequency lattice and the physical/spectral
//! transform pair.
//!
//! Spectral coefficients approximate the continuum transform
//! `f̂(ξ) = ∫ f(x) e^{-i x·ξ} dx` on the centered box `[-L/2, L/2)³`:
//! the forward map carries the cell volume `h³` and the centering phase,
//! the inverse carries `1/L³`. With this normalization Parseval reads
//! `h³ Σ |f|² = L⁻³ Σ |f̂|²`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fft::Fft3;

struct Shared {
    fft: Fft3,
    omega: OnceLock<Vec<f64>>,
}

/// Uniform periodic grid with `n` samples per axis on a cube of side `box_len`.
#[derive(Clone)]
pub struct Grid3 {
    n: usize,
    box_len: f64,
    shared: Arc<Shared>,
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3")
            .field("n", &self.n)
            .field("box_len", &self.box_len)
            .finish()
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_len == other.box_len
    }
}

impl Grid3 {
    pub fn new(n: usize, box_len: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_axis must be even and at least 8, got {n}"
            )));
        }
        if !(box_len > 0.0 && box_len.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box_len must be positive and finite, got {box_len}"
            )));
        }
        Ok(Self {
            n,
            box_len,
            shared: Arc::new(Shared {
                fft: Fft3::new(n),
                omega: OnceLock::new(),
            }),
        })
    }

    /// Same box, twice the samples per axis.
    pub fn refined(&self) -> Result<Self> {
        Self::new(2 * self.n, self.box_len)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(3)
    }

    /// Physical coordinate of sample `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_len + i as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(i)).collect()
    }

    /// Signed lattice index `m ∈ [-n/2, n/2)` of FFT slot `i`.
    pub fn mode_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT slot holding lattice index `m` (taken modulo `n`).
    pub fn slot_of(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode_index(i) as f64 / self.box_len
    }

    /// Wavenumber used in odd symbols: the Nyquist slot is mapped to zero so
    /// odd multipliers keep real fields real.
    pub fn odd_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// The per-axis frequency lattice `{2πm/L : m = -n/2, …, n/2-1}` in increasing order.
    pub fn lattice(&self) -> Vec<f64> {
        let half = self.n as i64 / 2;
        (-half..half)
            .map(|m| 2.0 * PI * m as f64 / self.box_len)
            .collect()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.odd_wavenumber(i)).collect()
    }

    /// Largest resolved wavenumber magnitude per axis, `π n / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.box_len
    }

    #[inline]
    pub fn flat(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Slot of the mode `-m` for the mode stored at `idx`.
    pub fn conjugate_slot(&self, idx: usize) -> usize {
        let n = self.n;
        let [a, b, c] = self.unflat(idx);
        self.flat((n - a) % n, (n - b) % n, (n - c) % n)
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.shared.fft
    }

    /// Dispersion symbol `ω = ξ(ξ² + |η|²)` on every lattice mode, cached per grid.
    pub(crate) fn omega_table(&self) -> &[f64] {
        self.shared.omega.get_or_init(|| {
            let k = self.wavenumbers();
            let ko = self.odd_wavenumbers();
            let mut out = Vec::with_capacity(self.len());
            for i0 in 0..self.n {
                for i1 in 0..self.n {
                    for i2 in 0..self.n {
                        out.push(ko[i0] * (k[i0] * k[i0] + k[i1] * k[i1] + k[i2] * k[i2]));
                    }
                }
            }
            out
        })
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Convenience constructor mirroring [`Grid3::new`].
pub fn make_grid(n_axis: usize, box_len: f64) -> Result<Grid3> {
    Grid3::new(n_axis, box_len)
}

/// Real samples of one scalar field, indexed `(x, y₁, y₂)` row-major.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Grid3,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Grid3, samples: Vec<f64>) -> Result<Self> {
        grid.check(samples.len())?;
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid("samples", format!("non-finite value at index {i}")));
        }
        Ok(Self {
            grid: grid.clone(),
            samples,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid3, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self {
            grid: grid.clone(),
            samples,
        }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::from_vec_unchecked(grid, vec![0.0; grid.len()])
    }

    /// Samples `f(x, y₁, y₂)` at the centered grid points.
    pub fn from_fn(grid: &Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let xs = grid.coordinates();
        let mut samples = Vec::with_capacity(grid.len());
        for &x in &xs {
            for &y1 in &xs {
                for &y2 in &xs {
                    samples.push(f(x, y1, y2));
                }
            }
        }
        Self::from_vec_unchecked(grid, samples)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn at(&self, i0: usize, i1: usize, i2: usize) -> f64 {
        self.samples[self.grid.flat(i0, i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_vec_unchecked(
            &self.grid,
            self.samples.iter().map(|v| v * factor).collect(),
        )
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &RealField, factor: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &RealField) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Pointwise multiplication by `w(x, y₁, y₂)`.
    pub fn weighted(&self, w: impl Fn(f64, f64, f64) -> f64) -> Self {
        let weight = RealField::from_fn(&self.grid, w);
        Self::from_vec_unchecked(
            &self.grid,
            self.samples
                .iter()
                .zip(&weight.samples)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Complex Fourier coefficients on the lattice, same slot layout as the samples.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid3,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid3, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check(coeffs.len())?;
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid3, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::from_vec_unchecked(grid, vec![Complex64::default(); grid.len()])
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of lattice mode `m = (m_x, m_y1, m_y2)`, indices taken modulo `n`.
    pub fn coeff(&self, m: [i64; 3]) -> Complex64 {
        let g = &self.grid;
        self.coeffs[g.flat(g.slot_of(m[0]), g.slot_of(m[1]), g.slot_of(m[2]))]
    }

    /// `max |c(m) - conj c(-m)|` relative to `max |c|`; zero for real-representing fields.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.coeffs.len()).fold(0.0_f64, |m, i| {
            let j = self.grid.conjugate_slot(i);
            m.max((self.coeffs[i] - self.coeffs[j].conj()).norm())
        });
        worst / scale
    }

    /// Physical `L²` norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum / self.grid.volume()).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_vec_unchecked(
            &self.grid,
            self.coeffs.iter().map(|c| c * factor).collect(),
        )
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &SpectralField, factor: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + factor * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// Multiplies every coefficient by `symbol(i_x, i_y1, i_y2)`.
    pub fn map_slots(&self, mut symbol: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut out = self.coeffs.clone();
        let mut idx = 0;
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    out[idx] *= symbol(i0, i1, i2);
                    idx += 1;
                }
            }
        }
        Self::from_vec_unchecked(&self.grid, out)
    }
}

#[inline]
fn centering_sign(grid: &Grid3, idx: usize) -> f64 {
    let [a, b, c] = grid.unflat(idx);
    if (a + b + c) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn forward_transform(f: &RealField) -> SpectralField {
    let grid = f.grid();
    let mut data: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft().forward(&mut data);
    let h3 = grid.cell_volume();
    for (idx, c) in data.iter_mut().enumerate() {
        *c *= h3 * centering_sign(grid, idx);
    }
    SpectralField::from_vec_unchecked(grid, data)
}

fn inverse_complex(spec: &SpectralField) -> Vec<Complex64> {
    let grid = spec.grid();
    let scale = 1.0 / grid.volume();
    let mut data: Vec<Complex64> = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| c * (scale * centering_sign(grid, idx)))
        .collect();
    grid.fft().inverse(&mut data);
    data
}

/// Inverse transform, keeping the real part.
pub fn inverse_transform(spec: &SpectralField) -> RealField {
    let data = inverse_complex(spec);
    RealField::from_vec_unchecked(spec.grid(), data.into_iter().map(|c| c.re).collect())
}

/// Inverse transform that also reports `max |Im|` of the physical result.
pub fn inverse_transform_checked(spec: &SpectralField) -> (RealField, f64) {
    let data = inverse_complex(spec);
    let residue = data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    let field =
        RealField::from_vec_unchecked(spec.grid(), data.into_iter().map(|c| c.re).collect());
    (field, residue)
}

/// Inverts two real-representing spectra with a single complex transform.
pub fn inverse_transform_pair(a: &SpectralField, b: &SpectralField) -> Result<(RealField, RealField)> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let packed = a.add_scaled(b, Complex64::i())?;
    let data = inverse_complex(&packed);
    let re = data.iter().map(|c| c.re).collect();
    let im = data.iter().map(|c| c.im).collect();
    Ok((
        RealField::from_vec_unchecked(a.grid(), re),
        RealField::from_vec_unchecked(a.grid(), im),
    ))
}

/// 0/1 multiplier keeping modes with every `|m| ≤ fraction · n/2`.
#[derive(Clone, Debug)]
pub struct DealiasMask {
    keep_axis: Vec<bool>,
    n: usize,
}

impl DealiasMask {
    pub fn keeps(&self, i0: usize, i1: usize, i2: usize) -> bool {
        self.keep_axis[i0] && self.keep_axis[i1] && self.keep_axis[i2]
    }

    /// Largest kept `|m|` per axis.
    pub fn cutoff(&self) -> i64 {
        let n = self.n as i64;
        (0..self.n)
            .filter(|&i| self.keep_axis[i])
            .map(|i| {
                let i = i as i64;
                if i < n / 2 {
                    i
                } else {
                    n - i
                }
            })
            .max()
            .unwrap_or(0)
    }

    pub fn multiplier(&self, idx: usize) -> f64 {
        let n = self.n;
        let (a, b, c) = (idx / (n * n), (idx / n) % n, idx % n);
        if self.keeps(a, b, c) {
            1.0
        } else {
            0.0
        }
    }

    pub fn apply(&self, spec: &mut SpectralField) {
        let n = self.n;
        let mut idx = 0;
        for i0 in 0..n {
            for i1 in 0..n {
                let row = self.keep_axis[i0] && self.keep_axis[i1];
                for i2 in 0..n {
                    if !(row && self.keep_axis[i2]) {
                        spec.coeffs[idx] = Complex64::default();
                    }
                    idx += 1;
                }
            }
        }
    }
}

pub fn dealias_mask(grid: &Grid3, fraction: f64) -> Result<DealiasMask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid("fraction", format!("must lie in (0, 1], got {fraction}")));
    }
    let limit = fraction * grid.n() as f64 / 2.0 + 1e-9;
    let keep_axis = (0..grid.n())
        .map(|i| (grid.mode_index(i).abs() as f64) <= limit)
        .collect();
    Ok(DealiasMask {
        keep_axis,
        n: grid.n(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid3, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        RealField::new(grid, samples).unwrap()
    }

    #[test]
    fn grid_basics() {
        let g = make_grid(8, 16.0).unwrap();
        assert_eq!(g.spacing(), 2.0);
        assert_eq!(g.coordinate(0), -8.0);
        assert_eq!(g.coordinate(4), 0.0);
        let lat = g.lattice();
        assert_eq!(lat.len(), 8);
        for (j, m) in (-4..4).enumerate() {
            assert!((lat[j] - 2.0 * PI * m as f64 / 16.0).abs() < 1e-15);
        }
        assert_eq!(make_grid(64, 30.0).unwrap().spacing(), 0.46875);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(7, 16.0).is_err());
        assert!(make_grid(6, 16.0).is_err());
        assert!(make_grid(8, 0.0).is_err());
        assert!(make_grid(8, -1.0).is_err());
    }

    #[test]
    fn plane_wave_has_two_modes() {
        let g = make_grid(16, 10.0).unwrap();
        let l = g.box_len();
        let f = RealField::from_fn(&g, |x, _, _| (2.0 * PI * x / l).cos());
        let spec = forward_transform(&f);
        let peak = spec.coeff([1, 0, 0]).norm();
        assert!((peak - spec.coeff([-1, 0, 0]).norm()).abs() < 1e-12 * peak);
        let others = spec
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let [a, b, c] = g.unflat(*i);
                !(b == 0 && c == 0 && (a == 1 || a == g.n() - 1))
            })
            .fold(0.0_f64, |m, (_, c)| m.max(c.norm()));
        assert!(others < 1e-12 * peak);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = make_grid(16, 7.0).unwrap();
        let f = random_field(&g, 3);
        let spec = forward_transform(&f);
        let back = inverse_transform(&spec);
        let num: f64 = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = f.samples().iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() < 1e-12);
        let phys = (den * g.cell_volume()).sqrt();
        assert!((phys - spec.l2_norm()).abs() < 1e-12 * phys);
        assert!(spec.hermitian_defect() < 1e-12);
    }

    #[test]
    fn transform_rejects_wrong_size() {
        let g = make_grid(8, 1.0).unwrap();
        assert!(matches!(
            RealField::new(&g, vec![0.0; 10]),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn pair_inverse_matches_single() {
        let g = make_grid(8, 3.0).unwrap();
        let a = forward_transform(&random_field(&g, 1));
        let b = forward_transform(&random_field(&g, 2));
        let (fa, fb) = inverse_transform_pair(&a, &b).unwrap();
        let ra = inverse_transform(&a);
        let rb = inverse_transform(&b);
        for i in 0..g.len() {
            assert!((fa.samples()[i] - ra.samples()[i]).abs() < 1e-12);
            assert!((fb.samples()[i] - rb.samples()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_rules() {
        let g = make_grid(12, 1.0).unwrap();
        let all = dealias_mask(&g, 1.0).unwrap();
        assert!((0..g.len()).all(|i| all.multiplier(i) == 1.0));
        let m = dealias_mask(&g, 2.0 / 3.0).unwrap();
        assert_eq!(m.cutoff(), 4);
        assert!(m.keeps(g.slot_of(-4), 0, g.slot_of(4)));
        assert!(!m.keeps(g.slot_of(5), 0, 0));
        assert!(!m.keeps(0, g.slot_of(-5), 0));
        assert!(dealias_mask(&g, 0.0).is_err());
        assert!(dealias_mask(&g, 1.5).is_err());

        let mut spec = forward_transform(&random_field(&g, 9));
        m.apply(&mut spec);
        for (i, c) in spec.coeffs().iter().enumerate() {
            let [a, b, cc] = g.unflat(i);
            if !m.keeps(a, b, cc) {
                assert_eq!(*c, Complex64::default());
            }
        }
    }
}
