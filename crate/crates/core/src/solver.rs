//! Integrating-factor RK4 for `u_t + ∂_xΔu + u^k u_x = 0`, Duhamel
//! extraction, conserved quantities and Picard iteration of the integral
//! equation.
//!
//! In Fourier variables the flow is `û_t = iωû − (u^k u_x)^` with
//! `ω = ξ(ξ² + |η|²)`, so the linear part is the propagator `W(t)` and the
//! mild form reads `u(t) = W(t)u₀ − ∫₀ᵗ W(t−t')(u^k u_x)(t') dt'`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{
    dealias_mask, forward_transform, inverse_transform, inverse_transform_pair, DealiasMask, Grid3, RealField,
    SpectralField,
};
use crate::multiplier::apply_propagator;
use crate::norms::{sobolev_norm_of, SobolevSpec};

/// Origin of the snapshots in a [`Trajectory`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Nonlinear,
    Linear,
    Duhamel,
}

/// Snapshots of one evolution at increasing, uniformly spaced times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<RealField>,
    pub provenance: Provenance,
}

impl Trajectory {
    /// Unchecked constructor; see [`Trajectory::validate`].
    pub fn new(times: Vec<f64>, snapshots: Vec<RealField>, provenance: Provenance) -> Self {
        Self {
            times,
            snapshots,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid3> {
        self.snapshots.first().map(|s| s.grid())
    }

    pub fn last(&self) -> Option<(f64, &RealField)> {
        Some((*self.times.last()?, self.snapshots.last()?))
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if self.times.len() != self.snapshots.len() {
            return Err(Error::SizeMismatch {
                expected: self.times.len(),
                got: self.snapshots.len(),
            });
        }
        let g = self.snapshots[0].grid();
        if self.snapshots.iter().any(|s| s.grid() != g) {
            return Err(Error::GridMismatch);
        }
        if self.snapshots.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snapshots", "non-finite sample"));
        }
        crate::norms::trapezoid_weights(&self.times).map(|_| ())
    }
}

/// `W(t)u₀` at the given times.
pub fn linear_trajectory(u0: &RealField, times: &[f64]) -> Trajectory {
    let spec = forward_transform(u0);
    let snapshots = times
        .iter()
        .map(|&t| inverse_transform(&apply_propagator(&spec, t)))
        .collect();
    Trajectory::new(times.to_vec(), snapshots, Provenance::Linear)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Degree of the nonlinearity `u^k u_x`.
    pub k: u32,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    /// Store every `snapshot_stride`-th step; must divide the step count.
    pub snapshot_stride: usize,
    /// `C` in the stability bound `dt ≤ C / (max(‖u‖∞, ‖u‖∞^k) · k_max)`.
    pub cfl_constant: f64,
    /// When false only the dispersive part is evolved.
    pub nonlinear: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 1,
            dt: 0.01,
            t_end: 1.0,
            dealias_fraction: 2.0 / 3.0,
            snapshot_stride: 1,
            cfl_constant: 1.0,
            nonlinear: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "nonlinearity degree must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride", "must be at least 1"));
        }
        if !(self.cfl_constant > 0.0) {
            return Err(invalid("cfl_constant", "must be positive"));
        }
        let steps = self.steps();
        if steps % self.snapshot_stride != 0 {
            return Err(invalid(
                "snapshot_stride",
                format!("{} does not divide the step count {steps}", self.snapshot_stride),
            ));
        }
        Ok(())
    }

    /// Number of steps; `dt` is shrunk so that they land exactly on `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        match self.steps() {
            0 => 0.0,
            s => self.t_end / s as f64,
        }
    }

    /// Largest admissible step for data of sup-norm `sup` on `grid`.
    pub fn stability_bound(&self, grid: &Grid3, sup: f64) -> Result<f64> {
        let mask = dealias_mask(grid, self.dealias_fraction)?;
        let k_max = mask.cutoff() as f64 * 2.0 * std::f64::consts::PI / grid.box_len();
        let speed = sup.max(sup.powi(self.k as i32)) * k_max;
        Ok(if speed > 0.0 {
            self.cfl_constant / speed
        } else {
            f64::INFINITY
        })
    }
}

/// Conserved quantities of the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    /// `∫u²`
    pub mass: f64,
    /// `∫u`
    pub mean: f64,
    /// `∫ ½|∇u|² − u^{k+2}/((k+1)(k+2))`
    pub hamiltonian: f64,
}

pub fn invariants(f: &RealField, k: u32) -> Invariants {
    let g = f.grid();
    let h3 = g.cell_volume();
    let mass = f.samples().iter().map(|v| v * v).sum::<f64>() * h3;
    let mean = f.samples().iter().sum::<f64>() * h3;
    let spec = forward_transform(f);
    let n = g.n();
    let kk = g.wavenumbers();
    let grad: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (a, b, d) = (idx / (n * n), (idx / n) % n, idx % n);
            (kk[a] * kk[a] + kk[b] * kk[b] + kk[d] * kk[d]) * c.norm_sqr()
        })
        .sum::<f64>()
        / g.volume();
    let p = (k + 2) as i32;
    let potential = f.samples().iter().map(|v| v.powi(p)).sum::<f64>() * h3 / ((k + 1) * (k + 2)) as f64;
    Invariants {
        mass,
        mean,
        hamiltonian: 0.5 * grad - potential,
    }
}

/// Pseudo-spectral evaluator of `−(u^k u_x)^` with the product dealiased.
pub(crate) struct Nonlinearity {
    k: u32,
    mask: DealiasMask,
    kx: Vec<f64>,
}

impl Nonlinearity {
    pub(crate) fn new(grid: &Grid3, k: u32, fraction: f64) -> Result<Self> {
        Ok(Self {
            k,
            mask: dealias_mask(grid, fraction)?,
            kx: grid.odd_wavenumbers(),
        })
    }

    pub(crate) fn eval(&self, u: &SpectralField) -> Result<SpectralField> {
        let ux = u.map_slots(|i0, _, _| Complex64::new(0.0, self.kx[i0]));
        let (phys, dphys) = inverse_transform_pair(u, &ux)?;
        let k = self.k as i32;
        let prod: Vec<f64> = phys
            .samples()
            .iter()
            .zip(dphys.samples())
            .map(|(v, d)| -v.powi(k) * d)
            .collect();
        let mut out = forward_transform(&RealField::from_vec_unchecked(u.grid(), prod));
        self.mask.apply(&mut out);
        Ok(out)
    }
}

fn phase_table(grid: &Grid3, tau: f64) -> Vec<Complex64> {
    grid.omega_table()
        .iter()
        .map(|w| Complex64::from_polar(1.0, tau * w))
        .collect()
}

fn mul(table: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    table.iter().zip(v).map(|(a, b)| a * b).collect()
}

fn axpy(x: &mut [Complex64], a: f64, y: &[Complex64]) {
    for (xi, yi) in x.iter_mut().zip(y) {
        *xi += a * yi;
    }
}

/// Time stepper holding the precomputed phase tables.
pub struct Integrator {
    grid: Grid3,
    cfg: SolverConfig,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    nl: Nonlinearity,
}

impl Integrator {
    pub fn new(grid: &Grid3, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let dt = cfg.effective_dt();
        Ok(Self {
            grid: grid.clone(),
            cfg,
            dt,
            half: phase_table(grid, 0.5 * dt),
            full: phase_table(grid, dt),
            nl: Nonlinearity::new(grid, cfg.k, cfg.dealias_fraction)?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn wrap(&self, v: Vec<Complex64>) -> SpectralField {
        SpectralField::from_vec_unchecked(&self.grid, v)
    }

    /// One step of size `dt` from `u`.
    pub fn step(&self, u: &SpectralField) -> Result<SpectralField> {
        let h = self.dt;
        let eu_half = mul(&self.half, u.coeffs());
        let eu_full = mul(&self.full, u.coeffs());
        if !self.cfg.nonlinear {
            return Ok(self.wrap(eu_full));
        }
        let a = self.nl.eval(u)?;
        let mut ua = u.coeffs().to_vec();
        axpy(&mut ua, 0.5 * h, a.coeffs());
        let ua = mul(&self.half, &ua);
        let b = self.nl.eval(&self.wrap(ua))?;
        let mut ub = eu_half.clone();
        axpy(&mut ub, 0.5 * h, b.coeffs());
        let c = self.nl.eval(&self.wrap(ub))?;
        let mut uc = eu_full.clone();
        axpy(&mut uc, h, &mul(&self.half, c.coeffs()));
        let d = self.nl.eval(&self.wrap(uc))?;

        let mut bc = b.into_coeffs();
        axpy(&mut bc, 1.0, c.coeffs());
        let mut out = eu_full;
        axpy(&mut out, h / 6.0, &mul(&self.full, a.coeffs()));
        axpy(&mut out, h / 3.0, &mul(&self.half, &bc));
        axpy(&mut out, h / 6.0, d.coeffs());
        Ok(self.wrap(out))
    }

    /// Runs to `t_end`, handing every stored snapshot to `observe`. Returns
    /// the final state.
    pub fn run(
        &self,
        u0: &SpectralField,
        mut observe: impl FnMut(f64, &SpectralField) -> Result<()>,
    ) -> Result<SpectralField> {
        if u0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let steps = self.cfg.steps();
        let mut u = u0.clone();
        observe(0.0, &u)?;
        for step in 1..=steps {
            let next = self.step(&u)?;
            let t = step as f64 * self.dt;
            if next.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::SolverAbort {
                    last_valid_time: t - self.dt,
                    reason: "non-finite state (blow-up or instability)".into(),
                });
            }
            u = next;
            if step % self.cfg.snapshot_stride == 0 {
                observe(t, &u)?;
            }
        }
        Ok(u)
    }
}

fn check_start(u0: &RealField, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(invalid("u0", "initial data must be finite"));
    }
    if cfg.nonlinear {
        let bound = cfg.stability_bound(u0.grid(), u0.max_abs())?;
        let dt = cfg.effective_dt();
        if dt > bound {
            return Err(Error::Cfl { dt, bound });
        }
    }
    Ok(())
}

/// Streams snapshots of the flow from `u0` to `observe` without storing them.
pub fn integrate_observed(
    u0: &RealField,
    cfg: &SolverConfig,
    observe: impl FnMut(f64, &SpectralField) -> Result<()>,
) -> Result<SpectralField> {
    check_start(u0, cfg)?;
    Integrator::new(u0.grid(), *cfg)?.run(&forward_transform(u0), observe)
}

pub fn integrate(u0: &RealField, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    integrate_observed(u0, cfg, |t, u| {
        times.push(t);
        snapshots.push(inverse_transform(u));
        Ok(())
    })?;
    let provenance = if cfg.nonlinear {
        Provenance::Nonlinear
    } else {
        Provenance::Linear
    };
    Ok(Trajectory::new(times, snapshots, provenance))
}

/// States of the flow from `u0` at arbitrary increasing `times ≥ 0`. Each gap
/// is covered by whole steps no longer than `cfg.dt`.
pub fn evolve_to_times(u0: &RealField, cfg: &SolverConfig, times: &[f64]) -> Result<Vec<SpectralField>> {
    let probe = SolverConfig {
        t_end: cfg.dt,
        snapshot_stride: 1,
        ..*cfg
    };
    check_start(u0, &probe)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("times", "must be non-negative and increasing"));
    }
    let mut u = forward_transform(u0);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let gap = t - now;
        if gap > 0.0 {
            let leg = SolverConfig {
                t_end: gap,
                dt: cfg.dt.min(gap),
                snapshot_stride: 1,
                ..*cfg
            };
            u = Integrator::new(u0.grid(), leg)?
                .run(&u, |_, _| Ok(()))
                .map_err(|e| match e {
                    Error::SolverAbort {
                        last_valid_time,
                        reason,
                    } => Error::SolverAbort {
                        last_valid_time: now + last_valid_time,
                        reason,
                    },
                    other => other,
                })?;
            now = t;
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// `z(t_i) = u(t_i) − W(t_i)u₀` for every snapshot.
pub fn duhamel_split(traj: &Trajectory, u0: &RealField) -> Result<Trajectory> {
    traj.validate()?;
    if traj.snapshots[0].grid() != u0.grid() {
        return Err(Error::GridMismatch);
    }
    let spec = forward_transform(u0);
    let snapshots = traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, u)| u.sub(&inverse_transform(&apply_propagator(&spec, t))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(traj.times.clone(), snapshots, Provenance::Duhamel))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub t_end: f64,
    pub n_iters: usize,
    /// Trapezoid nodes on `[0, T]`, endpoints included.
    pub quad_points: usize,
    pub k: u32,
    pub dealias_fraction: f64,
}

impl PicardConfig {
    pub fn new(t_end: f64, n_iters: usize, quad_points: usize) -> Self {
        Self {
            t_end,
            n_iters,
            quad_points,
            k: 1,
            dealias_fraction: 2.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    /// `d_n = max_j ‖u^{n+1}(t_j) − u^n(t_j)‖_{H²}`.
    pub distances: Vec<f64>,
    /// Three consecutive increases of `d_n` were seen.
    pub diverged: bool,
    pub times: Vec<f64>,
    /// Last iterate at `t = T`.
    pub final_state: SpectralField,
}

/// Iterates `u ↦ W(t)u₀ − ∫₀ᵗ W(t−t')(u^k u_x)(t') dt'` from `u⁰ = W(t)u₀`.
pub fn picard_iterate(u0: &RealField, cfg: &PicardConfig) -> Result<PicardReport> {
    if cfg.quad_points < 2 {
        return Err(invalid("quad_points", "need at least two quadrature nodes"));
    }
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(invalid("t_end", "horizon must be positive"));
    }
    if cfg.k == 0 {
        return Err(invalid("k", "nonlinearity degree must be at least 1"));
    }
    let g = u0.grid();
    let q = cfg.quad_points;
    let dt = cfg.t_end / (q - 1) as f64;
    let times: Vec<f64> = (0..q).map(|j| j as f64 * dt).collect();
    let nl = Nonlinearity::new(g, cfg.k, cfg.dealias_fraction)?;
    let spec0 = forward_transform(u0);
    let free: Vec<SpectralField> = times.iter().map(|&t| apply_propagator(&spec0, t)).collect();
    let mut iterate = free.clone();
    let mut distances = Vec::with_capacity(cfg.n_iters);
    let mut rising = 0;
    let mut diverged = false;
    let h2 = SobolevSpec::h(2.0);
    for _ in 0..cfg.n_iters {
        // W(t_j) ∫₀^{t_j} W(−t') N(t') dt' by cumulative trapezoid.
        let mut next = Vec::with_capacity(q);
        let mut running = SpectralField::zeros(g);
        let mut prev: Option<SpectralField> = None;
        for (j, &t) in times.iter().enumerate() {
            let pulled = apply_propagator(&nl.eval(&iterate[j])?, -t);
            if let Some(p) = &prev {
                running = running
                    .add_scaled(p, Complex64::new(0.5 * dt, 0.0))?
                    .add_scaled(&pulled, Complex64::new(0.5 * dt, 0.0))?;
            }
            // The nonlinearity already carries the minus sign of the mild form.
            next.push(free[j].add_scaled(&apply_propagator(&running, t), Complex64::new(1.0, 0.0))?);
            prev = Some(pulled);
        }
        let mut d = 0.0_f64;
        for (a, b) in next.iter().zip(&iterate) {
            d = d.max(sobolev_norm_of(&a.sub(b)?, h2).value);
        }
        if let Some(&last) = distances.last() {
            if d > last {
                rising += 1;
                if rising >= 3 {
                    diverged = true;
                }
            } else {
                rising = 0;
            }
        }
        distances.push(d);
        iterate = next;
    }
    Ok(PicardReport {
        distances,
        diverged,
        final_state: iterate.pop().expect("at least two nodes"),
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{sample_profile, ProfileSpec};
    use crate::grid::make_grid;
    use crate::norms::lebesgue_norm;

    fn bump(g: &Grid3, amp: f64) -> RealField {
        RealField::from_fn(g, |x, y1, y2| amp * (-(x * x + y1 * y1 + y2 * y2) / 2.0).exp())
    }

    fn masked(f: &RealField) -> RealField {
        let mut s = forward_transform(f);
        dealias_mask(f.grid(), 2.0 / 3.0).unwrap().apply(&mut s);
        inverse_transform(&s)
    }

    fn cfg(k: u32, dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig {
            k,
            dt,
            t_end,
            ..Default::default()
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = make_grid(16, 20.0).unwrap();
        let traj = integrate(&RealField::zeros(&g), &cfg(1, 0.1, 0.5)).unwrap();
        assert_eq!(traj.len(), 6);
        assert!(traj.snapshots.iter().all(|s| s.max_abs() == 0.0));
        assert_eq!(traj.provenance, Provenance::Nonlinear);
    }

    #[test]
    fn linear_mode_matches_propagator() {
        let g = make_grid(16, 20.0).unwrap();
        let u0 = bump(&g, 1.0);
        let c = SolverConfig {
            nonlinear: false,
            snapshot_stride: 2,
            ..cfg(1, 0.05, 1.0)
        };
        let traj = integrate(&u0, &c).unwrap();
        let spec = forward_transform(&u0);
        for (t, u) in traj.times.iter().zip(&traj.snapshots) {
            let want = inverse_transform(&apply_propagator(&spec, *t));
            assert!(u.sub(&want).unwrap().max_abs() < 1e-10);
        }
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn config_rejects() {
        let g = make_grid(16, 20.0).unwrap();
        let u0 = bump(&g, 1.0);
        assert!(integrate(&u0, &cfg(0, 0.1, 1.0)).is_err());
        assert!(integrate(&u0, &cfg(1, -0.1, 1.0)).is_err());
        let bad_stride = SolverConfig {
            snapshot_stride: 3,
            ..cfg(1, 0.1, 1.0)
        };
        assert!(integrate(&u0, &bad_stride).is_err());
        let big = bump(&g, 50.0);
        assert!(matches!(integrate(&big, &cfg(1, 0.1, 1.0)), Err(Error::Cfl { .. })));
    }

    #[test]
    fn steps_land_on_horizon() {
        let c = cfg(1, 0.3, 1.0);
        assert_eq!(c.steps(), 4);
        assert!((c.effective_dt() - 0.25).abs() < 1e-15);
        assert_eq!(cfg(1, 0.1, 1.0).steps(), 10);
    }

    #[test]
    fn conservation_on_small_data() {
        let g = make_grid(32, 20.0).unwrap();
        let u0 = masked(&bump(&g, 0.1));
        let c = SolverConfig {
            snapshot_stride: 20,
            ..cfg(1, 0.05, 1.0)
        };
        let traj = integrate(&u0, &c).unwrap();
        let i0 = invariants(&u0, 1);
        let i1 = invariants(&traj.snapshots.last().unwrap(), 1);
        assert!(((i1.mass - i0.mass) / i0.mass).abs() < 1e-8);
        assert!(((i1.hamiltonian - i0.hamiltonian) / i0.hamiltonian).abs() < 1e-6);
        assert!((i1.mean - i0.mean).abs() < 1e-10 * i0.mean.abs());
    }

    #[test]
    fn hamiltonian_sign_is_the_conserved_one() {
        // With the potential sign flipped the functional drifts visibly.
        let g = make_grid(32, 20.0).unwrap();
        let u0 = masked(&bump(&g, 0.6));
        let c = SolverConfig {
            snapshot_stride: 10,
            ..cfg(1, 0.02, 0.2)
        };
        let traj = integrate(&u0, &c).unwrap();
        let u1 = traj.snapshots.last().unwrap();
        let potential = |f: &RealField| f.samples().iter().map(|v| v.powi(3)).sum::<f64>() * g.cell_volume() / 2.0;
        let (a, b) = (invariants(&u0, 1).hamiltonian, invariants(u1, 1).hamiltonian);
        let good = (b - a).abs();
        let wrong = ((b + 2.0 * potential(u1)) - (a + 2.0 * potential(&u0))).abs();
        assert!(good < 1e-3 * wrong, "{good} {wrong}");
    }

    #[test]
    fn invariants_basics() {
        let g = make_grid(16, 10.0).unwrap();
        let z = invariants(&RealField::zeros(&g), 2);
        assert_eq!((z.mass, z.mean, z.hamiltonian), (0.0, 0.0, 0.0));
        let f = bump(&g, 1.0);
        let m1 = invariants(&f, 1).mass;
        let m2 = invariants(&f.scaled(3.0), 1).mass;
        assert!((m2 - 9.0 * m1).abs() < 1e-12 * m2);
        assert!((m1 - lebesgue_norm(&f, 2.0).powi(2)).abs() < 1e-12 * m1);
    }

    #[test]
    fn fourth_order_in_time() {
        let g = make_grid(32, 20.0).unwrap();
        let u0 = masked(&bump(&g, 0.1));
        let end = |dt: f64| {
            let t = integrate(&u0, &SolverConfig { snapshot_stride: (1.0 / dt).round() as usize, ..cfg(1, dt, 1.0) }).unwrap();
            t.snapshots.last().unwrap().clone()
        };
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let e1 = lebesgue_norm(&a.sub(&b).unwrap(), 2.0);
        let e2 = lebesgue_norm(&b.sub(&c).unwrap(), 2.0);
        assert!((e1 / e2).log2() >= 3.5, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn duhamel_gap_is_quadratic_in_amplitude() {
        let g = make_grid(32, 20.0).unwrap();
        let gap = |eps: f64| {
            let u0 = masked(&bump(&g, eps));
            let traj = integrate(&u0, &SolverConfig { snapshot_stride: 5, ..cfg(1, 0.05, 1.0) }).unwrap();
            let z = duhamel_split(&traj, &u0).unwrap();
            z.snapshots.iter().map(|s| lebesgue_norm(s, 2.0)).fold(0.0, f64::max)
        };
        let ratio = gap(0.1) / gap(0.05);
        assert!((ratio / 4.0 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn duhamel_of_linear_is_zero() {
        let g = make_grid(16, 20.0).unwrap();
        let u0 = bump(&g, 1.0);
        let lin = linear_trajectory(&u0, &[0.0, 0.25, 0.5]);
        let z = duhamel_split(&lin, &u0).unwrap();
        assert_eq!(z.snapshots[0].max_abs(), 0.0);
        assert!(z.snapshots.iter().all(|s| s.max_abs() < 1e-12));
        assert_eq!(z.provenance, Provenance::Duhamel);
        let other = make_grid(8, 20.0).unwrap();
        assert!(matches!(duhamel_split(&lin, &bump(&other, 1.0)), Err(Error::GridMismatch)));
    }

    #[test]
    fn duhamel_matches_integral_quadrature() {
        let g = make_grid(32, 20.0).unwrap();
        let u0 = masked(&bump(&g, 0.5));
        let t_end = 0.1;
        let traj = integrate(&u0, &cfg(1, 0.005, t_end)).unwrap();
        let z = duhamel_split(&traj, &u0).unwrap();
        // −∫₀ᵗ W(t−t')(u u_x)(t') dt' by trapezoid on the stored snapshots.
        let nl = Nonlinearity::new(&g, 1, 2.0 / 3.0).unwrap();
        let dt = traj.times[1];
        let m = traj.len() - 1;
        let mut acc = SpectralField::zeros(&g);
        for (j, (t, u)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
            let w = if j == 0 || j == m { 0.5 * dt } else { dt };
            let term = apply_propagator(&nl.eval(&forward_transform(u)).unwrap(), t_end - t);
            acc = acc.add_scaled(&term, Complex64::new(w, 0.0)).unwrap();
        }
        let quad = inverse_transform(&acc);
        let zt = z.snapshots.last().unwrap();
        let rel = lebesgue_norm(&zt.sub(&quad).unwrap(), 2.0) / lebesgue_norm(&quad, 2.0);
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn evolve_to_times_matches_integrate() {
        let g = make_grid(16, 20.0).unwrap();
        let u0 = masked(&bump(&g, 0.3));
        let traj = integrate(&u0, &cfg(1, 0.05, 0.5)).unwrap();
        let states = evolve_to_times(&u0, &cfg(1, 0.05, 0.5), &[0.0, 0.25, 0.5]).unwrap();
        assert!(inverse_transform(&states[0]).sub(&traj.snapshots[0]).unwrap().max_abs() < 1e-15);
        for (s, i) in states[1..].iter().zip([5, 10]) {
            assert!(inverse_transform(s).sub(&traj.snapshots[i]).unwrap().max_abs() < 1e-12);
        }
        assert!(evolve_to_times(&u0, &cfg(1, 0.05, 0.5), &[0.3, 0.2]).is_err());
    }

    #[test]
    fn picard_zero_data() {
        let g = make_grid(16, 20.0).unwrap();
        let r = picard_iterate(&RealField::zeros(&g), &PicardConfig::new(0.25, 4, 9)).unwrap();
        assert!(r.distances.iter().all(|&d| d == 0.0));
        assert!(!r.diverged);
    }

    #[test]
    fn picard_contracts_on_small_profile() {
        let g = make_grid(32, 20.0).unwrap();
        let u0 = sample_profile(ProfileSpec::default(), &g).field.scaled(0.05);
        let r = picard_iterate(&u0, &PicardConfig::new(0.25, 6, 17)).unwrap();
        let d = &r.distances;
        for n in 2..d.len() - 1 {
            if d[n] < 1e-13 * d[0] {
                break;
            }
            assert!(d[n + 1] / d[n] <= 0.5, "{d:?}");
        }
        assert!(!r.diverged);
    }

    #[test]
    fn solver_aborts_with_last_valid_time() {
        let g = make_grid(16, 20.0).unwrap();
        let u0 = bump(&g, 1.0);
        let c = SolverConfig {
            cfl_constant: 1e6,
            k: 4,
            ..cfg(4, 0.5, 40.0)
        };
        let big = u0.scaled(6.0);
        match integrate(&big, &c) {
            Err(Error::SolverAbort { last_valid_time, .. }) => assert!(last_valid_time < 40.0),
            other => panic!("expected abort, got {:?}", other.map(|t| t.len())),
        }
    }
}
