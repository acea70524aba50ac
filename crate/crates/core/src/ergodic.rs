//! Long-horizon time averaging and stationarity diagnostics.
//!
//! The invariant measure is probed the way it is constructed: Cesaro time
//! averages of observables along a single long run started from phi_0 = 0.
//! The post-burn-in horizon is split into windows; agreement of window means
//! within combined Monte Carlo errors is the stationarity verdict.

use serde::Serialize;

use crate::dpd::{solve_phi, PhiInit, SolverConfig};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::spectral::SpectralDecomposition;

#[derive(Debug, Clone, Serialize)]
pub struct ObservableReport {
    pub name: String,
    pub window_means: Vec<f64>,
    /// Batch-means standard error per window.
    pub window_stderr: Vec<f64>,
    /// Differences of consecutive window means.
    pub window_diffs: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub horizon: f64,
    pub burnin: f64,
    pub windows: usize,
    pub observables: Vec<ObservableReport>,
    /// sup over windows of the (t^{q/(n-1)} and 1)-weighted L^{2p} moment of
    /// the remainder, one value per window; finiteness and stability are the
    /// positive-time moment-bound surrogate.
    pub weighted_moment_sup: Vec<f64>,
    pub pass: bool,
}

impl InvariantReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("observable,window,mean,stderr,diff_to_next\n");
        for ob in &self.observables {
            for (w, m) in ob.window_means.iter().enumerate() {
                let diff = ob.window_diffs.get(w).copied().unwrap_or(f64::NAN);
                out.push_str(&format!(
                    "{},{w},{m},{},{diff}\n",
                    ob.name, ob.window_stderr[w]
                ));
            }
        }
        out
    }
}

fn batch_stderr(samples: &[f64]) -> f64 {
    // Batch means with 16 batches absorb short-range autocorrelation.
    let nb = 16.min(samples.len().max(1));
    let bs = (samples.len() / nb).max(1);
    let means: Vec<f64> = samples
        .chunks(bs)
        .filter(|c| c.len() == bs)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    if means.len() < 2 {
        return 0.0;
    }
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        / (means.len() as f64 - 1.0);
    (var / means.len() as f64).sqrt()
}

/// Run the full dynamics from phi_0 = 0 and compare windowed time averages.
///
/// Observables: pairings of phi with the 8 lowest eigenmodes plus the L^2
/// and L^{2p} norms of the remainder. Pass iff every consecutive window diff
/// is within 3 combined standard errors.
pub fn run_invariant_estimate(
    sd: &SpectralDecomposition,
    cfg: &SolverConfig,
    horizon: f64,
    windows: usize,
    seed: u64,
) -> Result<InvariantReport> {
    if windows < 2 {
        return Err(Error::Parameter("need at least 2 windows".into()));
    }
    let burnin = horizon / 4.0;
    if horizon < 2.0 * burnin {
        return Err(Error::Parameter("horizon must be at least twice the burn-in".into()));
    }
    let mut cfg = cfg.clone();
    cfg.t_horizon = horizon;
    cfg.diag_cadence = 1;
    cfg.snapshot_cadence = usize::MAX;
    cfg.validate()?;

    let phi0 = Field::zeros(sd.graph().vertex_count());
    let run = solve_phi(sd, PhiInit::Field(phi0), &cfg, seed, 0)?;

    let n_modes = run
        .phi
        .diagnostics
        .first()
        .map(|d| d.mode_coeffs.len())
        .unwrap_or(0);
    let mut names: Vec<String> = (0..n_modes).map(|j| format!("pair_mode_{j}")).collect();
    names.push("v_l2".into());
    names.push(format!("v_l{}", cfg.monitor_p));

    // Post-burn-in diagnostic indices.
    let post: Vec<usize> = (0..run.phi.diagnostics.len())
        .filter(|&i| run.phi.diagnostics[i].t > burnin)
        .collect();

    // Window partition of the post-burn-in indices.
    let per = post.len() / windows;
    if per < 4 {
        return Err(Error::Parameter(
            "horizon too short for the requested window count".into(),
        ));
    }

    let mut observables = Vec::new();
    let mut all_pass = true;
    for (obs, name) in names.iter().enumerate() {
        let value = |i: usize| -> f64 {
            let dphi = &run.phi.diagnostics[i];
            let dv = &run.v.diagnostics[i];
            if obs < n_modes {
                dphi.mode_coeffs[obs]
            } else if obs == n_modes {
                dv.l2_norm
            } else {
                dv.l2p_norm
            }
        };
        let mut window_means = Vec::new();
        let mut window_stderr = Vec::new();
        for w in 0..windows {
            let idx = &post[w * per..(w + 1) * per];
            let vals: Vec<f64> = idx.iter().map(|&i| value(i)).collect();
            window_means.push(vals.iter().sum::<f64>() / vals.len() as f64);
            window_stderr.push(batch_stderr(&vals));
        }
        let mut window_diffs = Vec::new();
        let mut pass = true;
        for w in 0..windows - 1 {
            let diff = window_means[w + 1] - window_means[w];
            window_diffs.push(diff);
            let tol = 3.0
                * (window_stderr[w].powi(2) + window_stderr[w + 1].powi(2))
                    .sqrt();
            if diff.abs() > tol && diff.abs() > 1e-12 {
                pass = false;
            }
        }
        all_pass &= pass;
        observables.push(ObservableReport {
            name: name.clone(),
            window_means,
            window_stderr,
            window_diffs,
            pass,
        });
    }

    // Positive-time moment-bound surrogate: sup over each window of
    // (t^{q/(n-1)} and 1) |v_t|_{L^{2p}} with q = 1.
    let q = 1.0;
    let nn = cfg.n as f64;
    let mut weighted_moment_sup = Vec::new();
    for w in 0..windows {
        let idx = &post[w * per..(w + 1) * per];
        let sup = idx
            .iter()
            .map(|&i| {
                let d = &run.v.diagnostics[i];
                d.t.powf(q / (nn - 1.0)).min(1.0) * d.l2p_norm
            })
            .fold(0.0, f64::max);
        weighted_moment_sup.push(sup);
    }

    Ok(InvariantReport {
        horizon,
        burnin,
        windows,
        observables,
        weighted_moment_sup,
        pass: all_pass,
    })
}
