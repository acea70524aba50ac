//! The remainder equation and the recombined dynamics.
//!
//! The remainder v solves dv = -(L+1) v dt + Psi(Y, v) dt in mild form, with
//! Psi(Y, v) = -sum_{j=0}^n binom(n, j) v^j Y^{:n-j:} and Y^{:0:} = 1. The
//! default integrator is an exponential Euler step, exact on the linear part:
//! per eigenmode
//!
//!   vhat <- e^{-(1+lam) dt} vhat + (1 - e^{-(1+lam) dt})/(1+lam) Psihat,
//!
//! with the nonlinearity evaluated pointwise on vertices (exact at a fixed
//! discretization; the paraproduct module is a verification tool, not part
//! of the time loop).

use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm_dyadic, default_j_max, BesovParams};
use crate::calculus::dirichlet_energy;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::gaussian::{
    counterterm, hermite, ou_step, stationary_sigma, Counterterm, OuInit, WickBundle,
};
use crate::rng::CounterRng;
use crate::special::fit_line;
use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExponentialEuler,
    Picard,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Nonlinearity degree; odd.
    pub n: u32,
    /// Mollification scale for the Wick bundle.
    pub epsilon: f64,
    pub dt: f64,
    pub t_horizon: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Even integer 2p: diagnostics track the L^{2p} norm.
    pub monitor_p: u32,
    /// 0 switches the noise off (deterministic flow).
    pub noise_amplitude: f64,
    /// Sup-norm ceiling distinguishing local-solution breakdown from float
    /// overflow.
    pub blowup_ceiling: f64,
    /// Besov index for diagnostics; None picks a regime-informed default.
    pub besov_gamma: Option<f64>,
    /// Record a field snapshot every this many steps (0 = auto).
    pub snapshot_cadence: usize,
    /// Record diagnostics every this many steps (0 = auto).
    pub diag_cadence: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 3,
            epsilon: 0.05,
            dt: 1e-3,
            t_horizon: 1.0,
            scheme: Scheme::ExponentialEuler,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            monitor_p: 2,
            noise_amplitude: 1.0,
            blowup_ceiling: 1e8,
            besov_gamma: None,
            snapshot_cadence: 0,
            diag_cadence: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n % 2 == 0 {
            return Err(Error::Domain(format!("nonlinearity degree n = {} must be odd", self.n)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Domain("dt must be positive".into()));
        }
        if self.t_horizon < self.dt {
            return Err(Error::Domain("horizon must be at least one step".into()));
        }
        if self.monitor_p % 2 != 0 || self.monitor_p == 0 {
            return Err(Error::Domain("monitor_p must be a positive even integer".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_horizon / self.dt).round().max(1.0) as usize
    }

    fn field_cadence(&self, steps: usize) -> usize {
        if self.snapshot_cadence > 0 {
            self.snapshot_cadence
        } else {
            (steps / 256).max(1)
        }
    }

    fn diag_cadence(&self, steps: usize) -> usize {
        if self.diag_cadence > 0 {
            self.diag_cadence
        } else {
            (steps / 2048).max(1)
        }
    }

    /// Diagnostics Besov index: inside the regime window when possible.
    fn gamma(&self, spec: &crate::space::FractalSpec) -> f64 {
        if let Some(g) = self.besov_gamma {
            return g;
        }
        let alpha0 = (spec.d_h - spec.d_w) / 2.0;
        let alpha = if alpha0 > 0.0 { 1.05 * alpha0 } else { 0.1 };
        let n = self.n as f64;
        let hi = (spec.d_w - alpha * n).min(spec.theta);
        let lo = alpha * (n - 1.0);
        if hi > lo {
            0.5 * (lo + hi)
        } else {
            0.5 * spec.theta
        }
    }
}

/// One recorded diagnostics row.
#[derive(Debug, Clone, Serialize)]
pub struct DiagRow {
    pub t: f64,
    /// |v|_{L^{2p}} with 2p = monitor_p.
    pub l2p_norm: f64,
    pub l2_norm: f64,
    pub besov_gamma: f64,
    pub energy: f64,
    /// Eigen-coefficients of the tracked low modes (of phi for the full
    /// dynamics, of v for the remainder alone).
    pub mode_coeffs: Vec<f64>,
}

/// A time-indexed trajectory with per-time diagnostics and (sparser) fields.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    pub diagnostics: Vec<DiagRow>,
    pub field_times: Vec<f64>,
    pub fields: Vec<Field>,
}

impl TrajectorySample {
    pub fn final_field(&self) -> &Field {
        self.fields.last().expect("trajectory records at least t = 0")
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("t,l2p_norm,besov_gamma,energy\n");
        for d in &self.diagnostics {
            out.push_str(&format!(
                "{},{},{},{}\n",
                d.t, d.l2p_norm, d.besov_gamma, d.energy
            ));
        }
        out
    }
}

struct ModeStepper {
    decay: Vec<f64>,
    phi1w: Vec<f64>,
}

impl ModeStepper {
    fn new(sd: &SpectralDecomposition, dt: f64) -> Self {
        let m = sd.mode_count();
        let mut decay = Vec::with_capacity(m);
        let mut phi1w = Vec::with_capacity(m);
        for k in 0..m {
            let rate = 1.0 + sd.eigenvalue(k);
            let e = (-rate * dt).exp();
            decay.push(e);
            phi1w.push((1.0 - e) / rate);
        }
        ModeStepper { decay, phi1w }
    }

    fn step(&self, vhat: &mut [f64], psihat: &[f64]) {
        for ((v, p), (d, w)) in vhat
            .iter_mut()
            .zip(psihat)
            .zip(self.decay.iter().zip(&self.phi1w))
        {
            *v = d * *v + w * p;
        }
    }
}

fn binomials(n: u32) -> Vec<f64> {
    let mut row = vec![1.0; n as usize + 1];
    for i in 1..=n as usize {
        row[i] = row[i - 1] * (n as usize - i + 1) as f64 / i as f64;
    }
    row
}

/// Psi(Y, v)(x) = -sum_j binom(n, j) v(x)^j Y^{:n-j:}(x), with the bundle
/// slice supplied per vertex. wick[k-1] is Y^{:k:}; Y^{:0:} = 1.
fn eval_psi(n: u32, binom: &[f64], v: &[f64], wick_at: impl Fn(usize, usize) -> f64, out: &mut [f64]) {
    let deg = n as usize;
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut vpow = 1.0;
        for j in 0..=deg {
            let y = if deg - j == 0 { 1.0 } else { wick_at(deg - j, x) };
            acc += binom[j] * vpow * y;
            vpow *= v[x];
        }
        *o = -acc;
    }
}

struct DiagCtx {
    gamma: f64,
    j_max: usize,
    monitor_p: f64,
    track: Vec<usize>,
}

fn diag_row(
    sd: &SpectralDecomposition,
    ctx: &DiagCtx,
    t: f64,
    v: &Field,
    vhat: &[f64],
    mode_offset: Option<&[f64]>,
) -> DiagRow {
    let g = sd.graph();
    let besov = besov_norm_dyadic(sd, v, &BesovParams::sup(ctx.gamma, 2), ctx.j_max)
        .map(|r| r.total)
        .unwrap_or(f64::NAN);
    let mode_coeffs = ctx
        .track
        .iter()
        .map(|&k| vhat[k] + mode_offset.map_or(0.0, |o| o[k]))
        .collect();
    DiagRow {
        t,
        l2p_norm: g.lp_norm(&v.values, ctx.monitor_p),
        l2_norm: g.lp_norm(&v.values, 2.0),
        besov_gamma: besov,
        energy: dirichlet_energy(g, v, v),
        mode_coeffs,
    }
}

/// Integrate the remainder equation against a pre-sampled Wick bundle.
///
/// The bundle grid must match the solver grid (dt equal, horizon covered).
pub fn solve_remainder(
    sd: &SpectralDecomposition,
    bundle: &WickBundle,
    v0: &Field,
    cfg: &SolverConfig,
) -> Result<TrajectorySample> {
    cfg.validate()?;
    v0.check(sd.graph())?;
    if bundle.n_max < cfg.n as usize {
        return Err(Error::Domain(format!(
            "bundle holds powers up to {} but the nonlinearity needs {}",
            bundle.n_max, cfg.n
        )));
    }
    let steps = cfg.steps();
    if bundle.times.len() < steps + 1 {
        return Err(Error::Domain(format!(
            "bundle covers {} steps, solver needs {steps}",
            bundle.times.len().saturating_sub(1)
        )));
    }
    let bdt = bundle.times[1] - bundle.times[0];
    if ((bdt - cfg.dt) / cfg.dt).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "bundle step {bdt} does not match solver dt {}",
            cfg.dt
        )));
    }
    match cfg.scheme {
        Scheme::ExponentialEuler => solve_remainder_euler(sd, bundle, v0, cfg, steps),
        Scheme::Picard => solve_remainder_picard(sd, bundle, v0, cfg, steps),
    }
}

fn solve_remainder_euler(
    sd: &SpectralDecomposition,
    bundle: &WickBundle,
    v0: &Field,
    cfg: &SolverConfig,
    steps: usize,
) -> Result<TrajectorySample> {
    let stepper = ModeStepper::new(sd, cfg.dt);
    let binom = binomials(cfg.n);
    let n_vert = sd.graph().vertex_count();
    let ctx = DiagCtx {
        gamma: cfg.gamma(sd.spec()),
        j_max: default_j_max(sd.graph()),
        monitor_p: cfg.monitor_p as f64,
        track: sd.lowest_modes(8),
    };
    let cadence = cfg.field_cadence(steps);
    let diag_every = cfg.diag_cadence(steps);

    let mut vhat = sd.to_coeffs(v0);
    let mut v = v0.clone();
    let mut psi = vec![0.0; n_vert];
    let mut out = TrajectorySample {
        times: vec![0.0],
        diagnostics: vec![diag_row(sd, &ctx, 0.0, &v, &vhat, None)],
        field_times: vec![0.0],
        fields: vec![v.clone()],
    };
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        eval_psi(
            cfg.n,
            &binom,
            &v.values,
            |k, x| bundle.powers[k - 1][step].values[x],
            &mut psi,
        );
        let psihat = sd.to_coeffs(&Field::new(psi.clone()));
        stepper.step(&mut vhat, &psihat);
        v = sd.from_coeffs(&vhat);
        let sup = v.sup_norm();
        if !sup.is_finite() || sup > cfg.blowup_ceiling {
            return Err(Error::BlowUp {
                t: t + cfg.dt,
                sup_norm: sup,
                ceiling: cfg.blowup_ceiling,
            });
        }
        let t_next = (step + 1) as f64 * cfg.dt;
        if (step + 1) % diag_every == 0 || step + 1 == steps {
            out.times.push(t_next);
            out.diagnostics
                .push(diag_row(sd, &ctx, t_next, &v, &vhat, None));
        }
        if (step + 1) % cadence == 0 || step + 1 == steps {
            out.field_times.push(t_next);
            out.fields.push(v.clone());
        }
    }
    Ok(out)
}

/// Picard iteration of the mild integral on the full grid: the linear
/// propagation pass is repeated with the nonlinearity frozen from the
/// previous iterate, exhibiting the fixed-point construction at small T.
fn solve_remainder_picard(
    sd: &SpectralDecomposition,
    bundle: &WickBundle,
    v0: &Field,
    cfg: &SolverConfig,
    steps: usize,
) -> Result<TrajectorySample> {
    let stepper = ModeStepper::new(sd, cfg.dt);
    let binom = binomials(cfg.n);
    let n_vert = sd.graph().vertex_count();
    let vhat0 = sd.to_coeffs(v0);

    // Iterate entire coefficient paths.
    let mut path: Vec<Vec<f64>> = vec![vhat0.clone(); steps + 1];
    let mut psi = vec![0.0; n_vert];
    for iter in 0..=cfg.picard_max_iter {
        let mut next = Vec::with_capacity(steps + 1);
        next.push(vhat0.clone());
        let mut vhat = vhat0.clone();
        let mut delta: f64 = 0.0;
        for step in 0..steps {
            let v_prev = sd.from_coeffs(&path[step]);
            eval_psi(
                cfg.n,
                &binom,
                &v_prev.values,
                |k, x| bundle.powers[k - 1][step].values[x],
                &mut psi,
            );
            let psihat = sd.to_coeffs(&Field::new(psi.clone()));
            stepper.step(&mut vhat, &psihat);
            let sup = vhat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !sup.is_finite() || sup > cfg.blowup_ceiling {
                return Err(Error::BlowUp {
                    t: (step + 1) as f64 * cfg.dt,
                    sup_norm: sup,
                    ceiling: cfg.blowup_ceiling,
                });
            }
            for (a, b) in vhat.iter().zip(&path[step + 1]) {
                delta = delta.max((a - b).abs());
            }
            next.push(vhat.clone());
        }
        path = next;
        if delta < cfg.picard_tol {
            break;
        }
        if iter == cfg.picard_max_iter {
            return Err(Error::Domain(format!(
                "Picard iteration did not reach tol {} in {} sweeps (last delta {delta:.3e}); \
                 shrink the horizon",
                cfg.picard_tol, cfg.picard_max_iter
            )));
        }
    }

    let ctx = DiagCtx {
        gamma: cfg.gamma(sd.spec()),
        j_max: default_j_max(sd.graph()),
        monitor_p: cfg.monitor_p as f64,
        track: sd.lowest_modes(8),
    };
    let cadence = cfg.field_cadence(steps);
    let diag_every = cfg.diag_cadence(steps);
    let mut out = TrajectorySample {
        times: Vec::new(),
        diagnostics: Vec::new(),
        field_times: Vec::new(),
        fields: Vec::new(),
    };
    for (step, vhat) in path.iter().enumerate() {
        let t = step as f64 * cfg.dt;
        if !(step == 0 || step % diag_every == 0 || step == steps) {
            continue;
        }
        let v = sd.from_coeffs(vhat);
        out.times.push(t);
        out.diagnostics.push(diag_row(sd, &ctx, t, &v, vhat, None));
        if step == 0 || step % cadence == 0 || step == steps {
            out.field_times.push(t);
            out.fields.push(v);
        }
    }
    Ok(out)
}

/// Initial condition for the full dynamics: a vertex field or eigenbasis
/// coefficients (the natural encoding for distributional data).
#[derive(Debug, Clone)]
pub enum PhiInit {
    Field(Field),
    Modes(Vec<f64>),
}

impl PhiInit {
    fn into_coeffs(self, sd: &SpectralDecomposition) -> Result<Vec<f64>> {
        match self {
            PhiInit::Field(f) => {
                f.check(sd.graph())?;
                Ok(sd.to_coeffs(&f))
            }
            PhiInit::Modes(c) => {
                if c.len() != sd.mode_count() {
                    return Err(Error::Domain(format!(
                        "{} coefficients for {} modes",
                        c.len(),
                        sd.mode_count()
                    )));
                }
                Ok(c)
            }
        }
    }
}

/// Result of the recombined run: phi = Y + v diagnostics plus the remainder
/// trajectory.
#[derive(Debug, Clone)]
pub struct PhiTrajectory {
    pub phi: TrajectorySample,
    pub v: TrajectorySample,
}

/// Solve the full dynamics from phi_0: split phi_0 = Y_0 + v_0 (by default
/// Y_0 is a stationary draw), run the Gaussian field and the remainder on
/// shared noise, and recombine.
///
/// Noise is generated streamingly: memory stays O(vertices) regardless of
/// the horizon, and the draws are keyed by (seed, replica, mode, step).
pub fn solve_phi(
    sd: &SpectralDecomposition,
    phi0: PhiInit,
    cfg: &SolverConfig,
    seed: u64,
    replica: u64,
) -> Result<PhiTrajectory> {
    solve_phi_with_split(sd, phi0, None, cfg, seed, replica)
}

/// As `solve_phi` with an explicit Y_0 (for split-invariance experiments).
pub fn solve_phi_with_split(
    sd: &SpectralDecomposition,
    phi0: PhiInit,
    y0: Option<Field>,
    cfg: &SolverConfig,
    seed: u64,
    replica: u64,
) -> Result<PhiTrajectory> {
    cfg.validate()?;
    let phihat0 = phi0.into_coeffs(sd)?;
    let modes = sd.mode_count();
    let n_vert = sd.graph().vertex_count();
    let noisy = cfg.noise_amplitude != 0.0;
    let rng = CounterRng::new(seed, replica);

    // Split.
    let mut yhat: Vec<f64> = match (&y0, noisy) {
        (Some(f), _) => {
            f.check(sd.graph())?;
            sd.to_coeffs(f)
        }
        (None, true) => (0..modes)
            .map(|m| {
                cfg.noise_amplitude * stationary_sigma(sd.eigenvalue(m)) * rng.normal(m as u64, 0, 0)
            })
            .collect(),
        (None, false) => vec![0.0; modes],
    };
    let mut vhat: Vec<f64> = phihat0.iter().zip(&yhat).map(|(p, y)| p - y).collect();

    let ct = if noisy {
        counterterm(sd, cfg.epsilon)?
    } else {
        Counterterm {
            epsilon: cfg.epsilon,
            values: vec![0.0; n_vert],
        }
    };
    let moll: Vec<f64> = (0..modes)
        .map(|m| (-cfg.epsilon * sd.eigenvalue(m)).exp())
        .collect();

    let steps = cfg.steps();
    let stepper = ModeStepper::new(sd, cfg.dt);
    let binom = binomials(cfg.n);
    let deg = cfg.n as usize;
    let ctx = DiagCtx {
        gamma: cfg.gamma(sd.spec()),
        j_max: default_j_max(sd.graph()),
        monitor_p: cfg.monitor_p as f64,
        track: sd.lowest_modes(8),
    };
    let cadence = cfg.field_cadence(steps);
    let diag_every = cfg.diag_cadence(steps);

    let mut v = sd.from_coeffs(&vhat);
    let mut psi = vec![0.0; n_vert];
    let mut wick = vec![vec![0.0; n_vert]; deg];
    let record_phi = |vhat: &[f64], yhat: &[f64]| -> Field {
        let phihat: Vec<f64> = vhat.iter().zip(yhat).map(|(a, b)| a + b).collect();
        sd.from_coeffs(&phihat)
    };

    let mut phi_traj = TrajectorySample {
        times: vec![0.0],
        diagnostics: Vec::new(),
        field_times: vec![0.0],
        fields: vec![record_phi(&vhat, &yhat)],
    };
    let mut v_traj = TrajectorySample {
        times: vec![0.0],
        diagnostics: vec![diag_row(sd, &ctx, 0.0, &v, &vhat, None)],
        field_times: vec![0.0],
        fields: vec![v.clone()],
    };
    phi_traj
        .diagnostics
        .push(diag_row(sd, &ctx, 0.0, &v, &vhat, Some(&yhat)));

    for step in 0..steps {
        // Wick powers of the current mollified Gaussian slice.
        if noisy {
            let mut yeps_hat = yhat.clone();
            for (c, m) in yeps_hat.iter_mut().zip(&moll) {
                *c *= m;
            }
            let yeps = sd.from_coeffs(&yeps_hat);
            for (k, w) in wick.iter_mut().enumerate() {
                for x in 0..n_vert {
                    w[x] = hermite(k + 1, yeps.values[x], ct.values[x]);
                }
            }
        }
        eval_psi(cfg.n, &binom, &v.values, |k, x| wick[k - 1][x], &mut psi);
        let psihat = sd.to_coeffs(&Field::new(psi.clone()));
        stepper.step(&mut vhat, &psihat);
        // Advance the Gaussian field with the exact AR(1) transition.
        if noisy {
            for (m, y) in yhat.iter_mut().enumerate() {
                let lam = sd.eigenvalue(m);
                let g = cfg.noise_amplitude * rng.normal(m as u64, (step + 1) as u64, 0);
                *y = ou_step(*y, lam, cfg.dt, g);
            }
        }
        v = sd.from_coeffs(&vhat);
        let sup = v.sup_norm();
        if !sup.is_finite() || sup > cfg.blowup_ceiling {
            return Err(Error::BlowUp {
                t: (step + 1) as f64 * cfg.dt,
                sup_norm: sup,
                ceiling: cfg.blowup_ceiling,
            });
        }
        let t_next = (step + 1) as f64 * cfg.dt;
        if (step + 1) % diag_every == 0 || step + 1 == steps {
            phi_traj.times.push(t_next);
            v_traj.times.push(t_next);
            v_traj
                .diagnostics
                .push(diag_row(sd, &ctx, t_next, &v, &vhat, None));
            phi_traj
                .diagnostics
                .push(diag_row(sd, &ctx, t_next, &v, &vhat, Some(&yhat)));
        }
        if (step + 1) % cadence == 0 || step + 1 == steps {
            phi_traj.field_times.push(t_next);
            phi_traj.fields.push(record_phi(&vhat, &yhat));
            v_traj.field_times.push(t_next);
            v_traj.fields.push(v.clone());
        }
    }
    Ok(PhiTrajectory {
        phi: phi_traj,
        v: v_traj,
    })
}

/// Sample the Wick bundle needed by `solve_remainder` over [0, T] on the
/// solver grid, from a stationary start.
pub fn sample_bundle(
    sd: &SpectralDecomposition,
    cfg: &SolverConfig,
    seed: u64,
    replica: u64,
) -> Result<WickBundle> {
    cfg.validate()?;
    let steps = cfg.steps();
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt).collect();
    if cfg.noise_amplitude == 0.0 {
        return Ok(WickBundle::zeros(sd, &times, cfg.epsilon, cfg.n as usize));
    }
    let path = crate::gaussian::sample_ou_path(sd, seed, replica, &times, OuInit::Stationary)?;
    crate::gaussian::wick_powers(sd, &path, cfg.epsilon, cfg.n as usize)
}

/// Coming-down-from-infinity report.
#[derive(Debug, Clone, Serialize)]
pub struct CdiReport {
    pub initial_scales: Vec<f64>,
    /// Fitted envelope constants K_c = sup_t |v(t)|_{2p} / (1 + t^{-1/(n-1)}).
    pub envelope_constants: Vec<f64>,
    /// max K / min K over the scales.
    pub constant_spread: f64,
    /// Fitted decay exponent of sup_c |v_c(t)| on the early-time window;
    /// compare with 1/(n-1).
    pub exponent_fit: f64,
    pub fit_window: (f64, f64),
    pub pass: bool,
}

/// Run the remainder solver from v_0 = c * 1 across initial scales and fit
/// the envelope K (1 + t^{-1/(n-1)}).
///
/// Each scale uses a per-run constant step small enough for the explicit
/// scheme to traverse the c-transient: dt_c = min(cfg.dt, 1/(2 n c^{n-1})).
pub fn cdi_check(
    sd: &SpectralDecomposition,
    cfg: &SolverConfig,
    initial_scales: &[f64],
    seed: u64,
) -> Result<CdiReport> {
    cfg.validate()?;
    if initial_scales.is_empty() {
        return Err(Error::Domain("no initial scales supplied".into()));
    }
    let n = cfg.n as f64;
    let results: Vec<Result<TrajectorySample>> = {
        use rayon::prelude::*;
        initial_scales
            .par_iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut cfg_c = cfg.clone();
                let cap = 0.5 / (n * c.abs().powf(n - 1.0).max(1.0));
                if cap < cfg.dt {
                    // Keep the horizon on an integer number of steps.
                    let steps = (cfg.t_horizon / cap).ceil();
                    cfg_c.dt = cfg.t_horizon / steps;
                }
                cfg_c.blowup_ceiling = cfg.blowup_ceiling.max(10.0 * c.abs().powf(n));
                // Streaming split: Y_0 stationary (or zero), v_0 = c * 1.
                let rng = CounterRng::new(seed, i as u64);
                let y0hat: Vec<f64> = (0..sd.mode_count())
                    .map(|m| {
                        cfg_c.noise_amplitude
                            * stationary_sigma(sd.eigenvalue(m))
                            * rng.normal(m as u64, u64::MAX, 0)
                    })
                    .collect();
                let y0 = sd.from_coeffs(&y0hat);
                let phi0 = Field::new(y0.values.iter().map(|y| y + c).collect());
                let run = solve_phi_with_split(
                    sd,
                    PhiInit::Field(phi0),
                    Some(y0),
                    &cfg_c,
                    seed,
                    i as u64,
                )?;
                Ok(run.v)
            })
            .collect()
    };
    let mut trajs = Vec::with_capacity(results.len());
    for r in results {
        trajs.push(r?);
    }

    // Envelope constants per scale over t in (t0, T].
    let t0 = 20.0 * cfg.dt;
    let mut envelope_constants = Vec::new();
    for traj in &trajs {
        let mut k: f64 = 0.0;
        for d in &traj.diagnostics {
            if d.t >= t0 {
                k = k.max(d.l2p_norm / (1.0 + d.t.powf(-1.0 / (n - 1.0))));
            }
        }
        envelope_constants.push(k);
    }
    let kmax = envelope_constants.iter().cloned().fold(0.0, f64::max);
    let kmin = envelope_constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let constant_spread = if kmin > 0.0 { kmax / kmin } else { f64::INFINITY };

    // Early-time exponent of the collapsed envelope sup_c |v_c(t)|.
    let fit_window = (5e-3, 0.1f64.min(cfg.t_horizon / 2.0));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let rows = trajs[0].diagnostics.len();
    // Sample log-uniformly over the window using the densest trajectory grid.
    let mut t_probe = fit_window.0;
    while t_probe <= fit_window.1 * (1.0 + 1e-12) {
        let mut env: f64 = 0.0;
        for traj in &trajs {
            // Nearest recorded diagnostic at or after t_probe.
            let idx = traj
                .diagnostics
                .binary_search_by(|d| d.t.total_cmp(&t_probe))
                .unwrap_or_else(|i| i.min(traj.diagnostics.len() - 1));
            env = env.max(traj.diagnostics[idx].l2p_norm);
        }
        if env > 0.0 {
            xs.push(t_probe.ln());
            ys.push(env.ln());
        }
        t_probe *= (fit_window.1 / fit_window.0).powf(1.0 / 15.0);
    }
    let _ = rows;
    let exponent_fit = if xs.len() >= 2 { -fit_line(&xs, &ys).0 } else { f64::NAN };

    Ok(CdiReport {
        initial_scales: initial_scales.to_vec(),
        envelope_constants,
        constant_spread,
        exponent_fit,
        fit_window,
        pass: constant_spread <= 2.0,
    })
}
