//! The Gaussian reference field and its Wick-renormalized powers.
//!
//! The linear equation dY = -(L+1) Y dt + dW diagonalizes: every eigenmode is
//! an independent scalar OU process with stationary variance 1/(2(1+lambda)).
//! Sampling is therefore exact (per-mode AR(1), no time-discretization error),
//! and the Wick counterterm is the exact stationary second moment of the
//! P_eps-mollified field,
//!
//!   C_eps(x) = sum_k e^{-2 eps lam_k} phi_k(x)^2 / (2 (1 + lam_k)),
//!
//! which is what makes E[H_n(Y_eps, C_eps)] = 0 an identity rather than an
//! approximation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::rng::CounterRng;
use crate::spectral::SpectralDecomposition;

/// Hermite polynomial with variance parameter: H_0 = 1, H_1 = x and
/// H_n(x, s) = x H_{n-1}(x, s) - s (n-1) H_{n-2}(x, s).
pub fn hermite(n: usize, x: f64, var: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let mut prev = 1.0;
            let mut cur = x;
            for m in 2..=n {
                let next = x * cur - var * (m as f64 - 1.0) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// The Wick counterterm: per-vertex stationary variance of the mollified
/// field. Strictly positive, exact per-mode sum.
#[derive(Debug, Clone)]
pub struct Counterterm {
    pub epsilon: f64,
    pub values: Vec<f64>,
}

fn counterterm_multiplier(epsilon: f64) -> impl Fn(f64) -> f64 {
    move |lam: f64| (-2.0 * epsilon * lam).exp() / (2.0 * (1.0 + lam))
}

/// Counterterm at every vertex.
pub fn counterterm(sd: &SpectralDecomposition, epsilon: f64) -> Result<Counterterm> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "counterterm needs epsilon > 0, got {epsilon}"
        )));
    }
    let n = sd.graph().vertex_count();
    let g = counterterm_multiplier(epsilon);
    let values: Vec<f64> = (0..n as u32)
        .into_par_iter()
        .map(|x| sd.mode_sum_at(x, &g))
        .collect();
    Ok(Counterterm { epsilon, values })
}

/// Counterterm sampled at selected vertices; the Kronecker-friendly path for
/// counterterm-scaling sweeps on large product graphs.
pub fn counterterm_at(sd: &SpectralDecomposition, epsilon: f64, vertices: &[u32]) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "counterterm needs epsilon > 0, got {epsilon}"
        )));
    }
    let g = counterterm_multiplier(epsilon);
    Ok(vertices
        .par_iter()
        .map(|&x| sd.mode_sum_at(x, &g))
        .collect())
}

/// Space-time covariance of the stationary mollified field:
/// K_eps(t1, t2, x, y) = sum_k e^{-(1+lam)|t1-t2|} e^{-2 eps lam}
///   phi_k(x) phi_k(y) / (2 (1+lam)).
pub fn covariance_k(
    sd: &SpectralDecomposition,
    epsilon: f64,
    t1: f64,
    t2: f64,
    x: u32,
    y: u32,
) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(Error::Domain("covariance needs epsilon >= 0".into()));
    }
    let dt = (t1 - t2).abs();
    Ok(sd.mode_pair_sum(x, y, |lam| {
        (-(1.0 + lam) * dt).exp() * (-2.0 * epsilon * lam).exp() / (2.0 * (1.0 + lam))
    }))
}

/// One exact AR(1) step of a scalar OU mode: mean part plus the noise
/// increment with the exact transition variance.
#[inline]
pub(crate) fn ou_step(y: f64, lam: f64, delta: f64, gauss: f64) -> f64 {
    let rate = 1.0 + lam;
    let decay = (-rate * delta).exp();
    let var = -(-2.0 * rate * delta).exp_m1() / (2.0 * rate);
    decay * y + var.sqrt() * gauss
}

pub(crate) fn stationary_sigma(lam: f64) -> f64 {
    (0.5 / (1.0 + lam)).sqrt()
}

/// Initial condition for the Gaussian field.
#[derive(Debug, Clone)]
pub enum OuInit {
    /// Draw Y(t_0) from the stationary law, per mode.
    Stationary,
    /// Start from a given vertex field.
    Field(Field),
}

/// Eigenbasis trajectory of the Gaussian field, exact in distribution.
#[derive(Debug, Clone)]
pub struct OuPath {
    pub times: Vec<f64>,
    /// modes[i] are the eigen-coefficients at times[i].
    pub modes: Vec<Vec<f64>>,
    pub seed: u64,
    pub replica: u64,
}

/// Sample the Gaussian field on a strictly increasing time grid.
///
/// Reproducible: each normal draw is a pure function of
/// (seed, replica, mode, step), so identical inputs give identical paths.
pub fn sample_ou_path(
    sd: &SpectralDecomposition,
    seed: u64,
    replica: u64,
    times: &[f64],
    init: OuInit,
) -> Result<OuPath> {
    if times.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    let modes = sd.mode_count();
    let rng = CounterRng::new(seed, replica);
    let mut current: Vec<f64> = match init {
        OuInit::Stationary => (0..modes)
            .map(|m| stationary_sigma(sd.eigenvalue(m)) * rng.normal(m as u64, 0, 0))
            .collect(),
        OuInit::Field(f) => {
            f.check(sd.graph())?;
            sd.to_coeffs(&f)
        }
    };
    let mut out = Vec::with_capacity(times.len());
    out.push(current.clone());
    for step in 1..times.len() {
        let delta = times[step] - times[step - 1];
        for (m, y) in current.iter_mut().enumerate() {
            *y = ou_step(
                *y,
                sd.eigenvalue(m),
                delta,
                rng.normal(m as u64, step as u64, 0),
            );
        }
        out.push(current.clone());
    }
    Ok(OuPath {
        times: times.to_vec(),
        modes: out,
        seed,
        replica,
    })
}

/// The tuple (Y_eps, Y_eps^{:2:}, ..., Y_eps^{:n:}) on a time grid.
#[derive(Debug, Clone)]
pub struct WickBundle {
    pub epsilon: f64,
    pub n_max: usize,
    pub times: Vec<f64>,
    /// powers[k-1][i] = Y_eps^{:k:} at times[i], as a vertex field.
    pub powers: Vec<Vec<Field>>,
    pub counterterm: Counterterm,
}

impl WickBundle {
    /// Y_eps^{:k:} at time index i; k = 0 is the constant 1.
    pub fn power(&self, k: usize, i: usize) -> Option<&Field> {
        if k == 0 || k > self.n_max {
            return None;
        }
        Some(&self.powers[k - 1][i])
    }

    /// All-zero bundle (the deterministic, noise-free dynamics).
    pub fn zeros(sd: &SpectralDecomposition, times: &[f64], epsilon: f64, n_max: usize) -> Self {
        let n = sd.graph().vertex_count();
        WickBundle {
            epsilon,
            n_max,
            times: times.to_vec(),
            powers: vec![vec![Field::zeros(n); times.len()]; n_max],
            counterterm: Counterterm {
                epsilon,
                values: vec![0.0; n],
            },
        }
    }

    /// max_k sup_t of the dyadic B^{-alpha k}_inf norm of Y^{:k:}: the
    /// bundle norm controlling the local solution horizon.
    pub fn bundle_norm(&self, sd: &SpectralDecomposition, alpha: f64) -> Result<f64> {
        let j_max = crate::besov::default_j_max(sd.graph());
        let mut worst: f64 = 0.0;
        for k in 1..=self.n_max {
            let params = crate::besov::BesovParams::sup(-alpha * k as f64, 2);
            for f in &self.powers[k - 1] {
                worst = worst.max(crate::besov::besov_norm_dyadic(sd, f, &params, j_max)?.total);
            }
        }
        Ok(worst)
    }
}

/// Mollify the sampled field with P_eps and evaluate the first n_max Wick
/// powers pointwise: Y^{:k:} = H_k(Y_eps(t, x), C_eps(x)).
pub fn wick_powers(
    sd: &SpectralDecomposition,
    ou: &OuPath,
    epsilon: f64,
    n_max: usize,
) -> Result<WickBundle> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be >= 1".into()));
    }
    let ct = counterterm(sd, epsilon)?;
    let n = sd.graph().vertex_count();
    let mut powers = vec![Vec::with_capacity(ou.times.len()); n_max];
    for coeffs in &ou.modes {
        let mut mollified = coeffs.clone();
        sd.scale_coeffs(&mut mollified, &|lam| (-epsilon * lam).exp());
        let y_eps = sd.from_coeffs(&mollified);
        for (k, slot) in powers.iter_mut().enumerate() {
            let mut vals = Vec::with_capacity(n);
            for x in 0..n {
                vals.push(hermite(k + 1, y_eps.values[x], ct.values[x]));
            }
            slot.push(Field::new(vals));
        }
    }
    Ok(WickBundle {
        epsilon,
        n_max,
        times: ou.times.clone(),
        powers,
        counterterm: ct,
    })
}
