//! Exact spectral calculus on a graph approximation.
//!
//! Everything downstream (Besov norms, paraproducts, the Gaussian field, the
//! remainder solver) is driven by spectral multipliers m(lambda) applied in
//! the eigenbasis of the renormalized generator L. Graphs below the dense
//! budget get a full symmetric eigendecomposition; product graphs keep their
//! Kronecker factors and never materialize the product spectrum.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{FractalSpec, GraphApproximation};
use crate::special::fit_line;

/// Default dense-eigensolver budget (vertex count).
pub const DEFAULT_DENSE_BUDGET: usize = 4096;

#[derive(Debug)]
enum Repr {
    Dense {
        eigenvalues: Vec<f64>,
        /// Columns are eigenvectors, orthonormal in the mu-weighted inner
        /// product.
        basis: DMatrix<f64>,
        /// basis with rows scaled by mu, so coeffs = weighted^T f.
        weighted: DMatrix<f64>,
    },
    Kronecker {
        left: Arc<SpectralDecomposition>,
        right: Arc<SpectralDecomposition>,
    },
}

#[derive(Debug)]
pub struct SpectralDecomposition {
    graph: Arc<GraphApproximation>,
    repr: Repr,
}

/// Eigendecomposition of the renormalized Laplacian of `graph`.
///
/// Deterministic up to eigenvector sign; the sign is fixed by making the
/// largest-magnitude entry of each eigenvector positive.
pub fn decompose(graph: Arc<GraphApproximation>) -> Result<SpectralDecomposition> {
    decompose_with_budget(graph, DEFAULT_DENSE_BUDGET)
}

pub fn decompose_with_budget(
    graph: Arc<GraphApproximation>,
    dense_budget: usize,
) -> Result<SpectralDecomposition> {
    if let Some((a, b)) = graph.factors.clone() {
        let left = Arc::new(decompose_with_budget(a.clone(), dense_budget)?);
        let right = if Arc::ptr_eq(&a, &b) {
            left.clone()
        } else {
            Arc::new(decompose_with_budget(b, dense_budget)?)
        };
        return Ok(SpectralDecomposition {
            graph,
            repr: Repr::Kronecker { left, right },
        });
    }
    let n = graph.vertex_count();
    if n > dense_budget {
        return Err(Error::Resource(format!(
            "{n} vertices exceed the dense eigensolver budget {dense_budget} \
             and no Kronecker structure is available"
        )));
    }

    // Similarity transform: A = D^{-1/2} C D^{-1/2} with C the conductance
    // Laplacian and D = diag(mu). A shares eigenvalues with L = D^{-1} C.
    let sqrt_mu: Vec<f64> = graph.vertex_measure.iter().map(|m| m.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(u, v, c) in &graph.edges {
        let (u, v) = (u as usize, v as usize);
        a[(u, u)] += c / (sqrt_mu[u] * sqrt_mu[u]);
        a[(v, v)] += c / (sqrt_mu[v] * sqrt_mu[v]);
        let off = -c / (sqrt_mu[u] * sqrt_mu[v]);
        a[(u, v)] += off;
        a[(v, u)] += off;
    }
    let sym_err = (&a - a.transpose()).abs().max();
    if sym_err > 1e-12 {
        return Err(Error::Construction(format!(
            "operator not symmetric (residual {sym_err:.2e})"
        )));
    }

    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut basis = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        if lam < -1e-9 * (1.0 + eig.eigenvalues[order[n - 1]].abs()) {
            return Err(Error::Construction(format!(
                "negative eigenvalue {lam:.3e} from a conductance Laplacian"
            )));
        }
        eigenvalues.push(lam.max(0.0));
        let col = eig.eigenvectors.column(i);
        // phi = D^{-1/2} u, sign-fixed on the largest-magnitude entry.
        let mut phi: Vec<f64> = col.iter().zip(&sqrt_mu).map(|(u, s)| u / s).collect();
        let lead = phi
            .iter()
            .cloned()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        basis.set_column(k, &DVector::from_vec(phi));
    }
    let mut weighted = basis.clone();
    for (mut row, m) in weighted.row_iter_mut().zip(&graph.vertex_measure) {
        row *= *m;
    }
    Ok(SpectralDecomposition {
        graph,
        repr: Repr::Dense {
            eigenvalues,
            basis,
            weighted,
        },
    })
}

impl SpectralDecomposition {
    pub fn graph(&self) -> &Arc<GraphApproximation> {
        &self.graph
    }

    pub fn spec(&self) -> &FractalSpec {
        &self.graph.spec
    }

    pub fn mode_count(&self) -> usize {
        match &self.repr {
            Repr::Dense { eigenvalues, .. } => eigenvalues.len(),
            Repr::Kronecker { left, right } => left.mode_count() * right.mode_count(),
        }
    }

    pub fn is_kronecker(&self) -> bool {
        matches!(self.repr, Repr::Kronecker { .. })
    }

    pub fn kronecker_factors(
        &self,
    ) -> Option<(&Arc<SpectralDecomposition>, &Arc<SpectralDecomposition>)> {
        match &self.repr {
            Repr::Kronecker { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// Eigenvalue of mode k. Kronecker modes are ordered (i, j) -> i*m2 + j
    /// and are lazy pairwise sums, not a materialized sorted spectrum.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        match &self.repr {
            Repr::Dense { eigenvalues, .. } => eigenvalues[k],
            Repr::Kronecker { left, right } => {
                let m2 = right.mode_count();
                left.eigenvalue(k / m2) + right.eigenvalue(k % m2)
            }
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.mode_count()).map(|k| self.eigenvalue(k)).collect()
    }

    pub fn lambda_max(&self) -> f64 {
        match &self.repr {
            Repr::Dense { eigenvalues, .. } => *eigenvalues.last().unwrap(),
            Repr::Kronecker { left, right } => left.lambda_max() + right.lambda_max(),
        }
    }

    /// Indices of the k smallest eigenvalues (ascending).
    pub fn lowest_modes(&self, k: usize) -> Vec<usize> {
        let k = k.min(self.mode_count());
        match &self.repr {
            Repr::Dense { .. } => (0..k).collect(),
            Repr::Kronecker { .. } => {
                let mut idx: Vec<usize> = (0..self.mode_count()).collect();
                idx.sort_by(|&i, &j| self.eigenvalue(i).total_cmp(&self.eigenvalue(j)));
                idx.truncate(k);
                idx
            }
        }
    }

    /// Coefficients of f in the eigenbasis: c_k = <f, phi_k>_mu.
    pub fn to_coeffs(&self, f: &Field) -> Vec<f64> {
        match &self.repr {
            Repr::Dense { weighted, .. } => {
                let v = DVector::from_column_slice(&f.values);
                (weighted.transpose() * v).data.into()
            }
            Repr::Kronecker { left, right } => {
                let (n1, n2) = (left.graph.vertex_count(), right.graph.vertex_count());
                let (m1, m2) = (left.mode_count(), right.mode_count());
                // Transform rows by the right factor, then columns by the left.
                let mut rows = vec![0.0; n1 * m2];
                let mut buf = Field::zeros(n2);
                for x in 0..n1 {
                    buf.values.copy_from_slice(&f.values[x * n2..(x + 1) * n2]);
                    rows[x * m2..(x + 1) * m2].copy_from_slice(&right.to_coeffs(&buf));
                }
                let mut out = vec![0.0; m1 * m2];
                let mut col = Field::zeros(n1);
                for j in 0..m2 {
                    for x in 0..n1 {
                        col.values[x] = rows[x * m2 + j];
                    }
                    for (i, c) in left.to_coeffs(&col).into_iter().enumerate() {
                        out[i * m2 + j] = c;
                    }
                }
                out
            }
        }
    }

    pub fn from_coeffs(&self, coeffs: &[f64]) -> Field {
        match &self.repr {
            Repr::Dense { basis, .. } => {
                let v = DVector::from_column_slice(coeffs);
                Field::new((basis * v).data.into())
            }
            Repr::Kronecker { left, right } => {
                let (n1, n2) = (left.graph.vertex_count(), right.graph.vertex_count());
                let (m1, m2) = (left.mode_count(), right.mode_count());
                let mut cols = vec![0.0; n1 * m2];
                let mut cbuf = vec![0.0; m1];
                for j in 0..m2 {
                    for i in 0..m1 {
                        cbuf[i] = coeffs[i * m2 + j];
                    }
                    let col = left.from_coeffs(&cbuf);
                    for x in 0..n1 {
                        cols[x * m2 + j] = col.values[x];
                    }
                }
                let mut out = vec![0.0; n1 * n2];
                let mut rbuf = vec![0.0; m2];
                for x in 0..n1 {
                    rbuf.copy_from_slice(&cols[x * m2..(x + 1) * m2]);
                    out[x * n2..(x + 1) * n2].copy_from_slice(&right.from_coeffs(&rbuf).values);
                }
                Field::new(out)
            }
        }
    }

    /// Apply the spectral multiplier m(lambda) to a field.
    pub fn apply_multiplier(&self, f: &Field, m: impl Fn(f64) -> f64) -> Field {
        let mut coeffs = self.to_coeffs(f);
        self.scale_coeffs(&mut coeffs, &m);
        self.from_coeffs(&coeffs)
    }

    pub fn scale_coeffs(&self, coeffs: &mut [f64], m: &impl Fn(f64) -> f64) {
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= m(self.eigenvalue(k));
        }
    }

    /// Apply the generator L spectrally.
    pub fn apply_generator(&self, f: &Field) -> Field {
        self.apply_multiplier(f, |lam| lam)
    }

    /// (lambda_k, phi_k(x)) for every mode, in mode order.
    pub fn mode_amplitudes(&self, x: u32) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Dense {
                eigenvalues, basis, ..
            } => eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &lam)| (lam, basis[(x as usize, k)]))
                .collect(),
            Repr::Kronecker { left, right } => {
                let n2 = right.graph.vertex_count() as u32;
                let la = left.mode_amplitudes(x / n2);
                let rb = right.mode_amplitudes(x % n2);
                let mut out = Vec::with_capacity(la.len() * rb.len());
                for &(l1, a1) in &la {
                    for &(l2, a2) in &rb {
                        out.push((l1 + l2, a1 * a2));
                    }
                }
                out
            }
        }
    }

    /// sum_k g(lambda_k) phi_k(x)^2, evaluated lazily on products.
    pub fn mode_sum_at(&self, x: u32, g: impl Fn(f64) -> f64) -> f64 {
        match &self.repr {
            Repr::Dense {
                eigenvalues, basis, ..
            } => eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &lam)| {
                    let a = basis[(x as usize, k)];
                    g(lam) * a * a
                })
                .sum(),
            Repr::Kronecker { left, right } => {
                let n2 = right.graph.vertex_count() as u32;
                let la = left.mode_amplitudes(x / n2);
                let rb = right.mode_amplitudes(x % n2);
                let mut acc = 0.0;
                for &(l1, a1) in &la {
                    let w1 = a1 * a1;
                    for &(l2, a2) in &rb {
                        acc += g(l1 + l2) * w1 * a2 * a2;
                    }
                }
                acc
            }
        }
    }

    /// sum_k g(lambda_k) phi_k(x) phi_k(y).
    pub fn mode_pair_sum(&self, x: u32, y: u32, g: impl Fn(f64) -> f64) -> f64 {
        match &self.repr {
            Repr::Dense {
                eigenvalues, basis, ..
            } => eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &lam)| g(lam) * basis[(x as usize, k)] * basis[(y as usize, k)])
                .sum(),
            Repr::Kronecker { left, right } => {
                let n2 = right.graph.vertex_count() as u32;
                let lx = left.mode_amplitudes(x / n2);
                let ly = left.mode_amplitudes(y / n2);
                let rx = right.mode_amplitudes(x % n2);
                let ry = right.mode_amplitudes(y % n2);
                let mut acc = 0.0;
                for i in 0..lx.len() {
                    let (l1, ax) = lx[i];
                    let ay = ly[i].1;
                    let w1 = ax * ay;
                    for j in 0..rx.len() {
                        acc += g(l1 + rx[j].0) * w1 * rx[j].1 * ry[j].1;
                    }
                }
                acc
            }
        }
    }

    /// Eigenfunction phi_k as a field.
    pub fn eigenfield(&self, k: usize) -> Field {
        match &self.repr {
            Repr::Dense { basis, .. } => Field::new(basis.column(k).iter().cloned().collect()),
            Repr::Kronecker { left, right } => {
                let m2 = right.mode_count();
                let a = left.eigenfield(k / m2);
                let b = right.eigenfield(k % m2);
                let mut out = Vec::with_capacity(a.len() * b.len());
                for &av in &a.values {
                    for &bv in &b.values {
                        out.push(av * bv);
                    }
                }
                Field::new(out)
            }
        }
    }

    /// Heat kernel p_t(x, y) = sum_k e^{-t lam_k} phi_k(x) phi_k(y).
    /// Factorizes exactly on Kronecker products.
    pub fn heat_kernel(&self, t: f64, x: u32, y: u32) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        Ok(self.heat_kernel_unchecked(t, x, y))
    }

    fn heat_kernel_unchecked(&self, t: f64, x: u32, y: u32) -> f64 {
        match &self.repr {
            Repr::Dense { .. } => self.mode_pair_sum(x, y, |lam| (-t * lam).exp()),
            Repr::Kronecker { left, right } => {
                let n2 = right.graph.vertex_count() as u32;
                left.heat_kernel_unchecked(t, x / n2, y / n2)
                    * right.heat_kernel_unchecked(t, x % n2, y % n2)
            }
        }
    }

    /// The kernel row p_t(x, .) as a field over y.
    pub fn heat_kernel_row(&self, t: f64, x: u32) -> Result<Field> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
        }
        let mut delta = Field::zeros(self.graph.vertex_count());
        delta.values[x as usize] = 1.0 / self.graph.vertex_measure[x as usize];
        Ok(self.apply_multiplier(&delta, |lam| (-t * lam).exp()))
    }

    /// Measure-averaged on-diagonal kernel: sum_x mu(x) p_t(x,x) / mu(M)
    /// = partition function sum_k e^{-t lam_k} (since mu(M) = 1).
    pub fn ondiag_average(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Dense { eigenvalues, .. } => {
                eigenvalues.iter().map(|&lam| (-t * lam).exp()).sum()
            }
            Repr::Kronecker { left, right } => left.ondiag_average(t) * right.ondiag_average(t),
        }
    }
}

/// Semigroup operator family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemigroupOp {
    /// P_t = e^{-tL}.
    P,
    /// Q_t^{(k)} = (tL)^k e^{-tL}, k >= 1.
    Q,
    /// P_t^{(k)} = sum_{m<k} (tL)^m / m! e^{-tL}, k >= 1; completes Q in
    /// Calderon's reproducing formula and tends to the identity as t -> 0.
    PSum,
}

/// Scalar multiplier for the operator family at eigenvalue `lam`.
pub fn semigroup_multiplier(kind: SemigroupOp, t: f64, k: usize, lam: f64) -> f64 {
    let u = t * lam;
    match kind {
        SemigroupOp::P => (-u).exp(),
        SemigroupOp::Q => u.powi(k as i32) * (-u).exp(),
        SemigroupOp::PSum => {
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..k {
                term *= u / m as f64;
                sum += term;
            }
            sum * (-u).exp()
        }
    }
}

/// Apply P_t, Q_t^{(k)} or P_t^{(k)} to a field.
pub fn apply_semigroup_op(
    sd: &SpectralDecomposition,
    kind: SemigroupOp,
    t: f64,
    k: usize,
    f: &Field,
) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("semigroup operators need t > 0, got {t}")));
    }
    if matches!(kind, SemigroupOp::Q | SemigroupOp::PSum) && k == 0 {
        return Err(Error::Domain("operator order k must be >= 1".into()));
    }
    f.check(sd.graph())?;
    Ok(sd.apply_multiplier(f, |lam| semigroup_multiplier(kind, t, k, lam)))
}

/// Numerical checks of the standing heat-kernel assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct HeatDiagnostics {
    pub completeness_residual: f64,
    pub symmetry_residual: f64,
    pub ondiag_slope: f64,
    pub ondiag_window: (f64, f64),
    /// Raw (t, averaged on-diagonal) series behind the slope fit.
    pub ondiag_series: Vec<(f64, f64)>,
    pub holder_theta_fit: f64,
    pub holder_window: (f64, f64),
    pub lower_bound_ok: bool,
    /// Smallest sampled ratio p_t(x,y) / (t^{-d_h/d_w} Phi(d/t^{1/d_w})).
    pub lower_bound_min_ratio: f64,
}

/// Run stochastic-completeness, symmetry, on-diagonal-decay and Hoelder
/// checks over a time window inside (0, 1].
pub fn heat_diagnostics(
    sd: &SpectralDecomposition,
    spec: &FractalSpec,
    t_window: (f64, f64),
    sample_count: usize,
) -> Result<HeatDiagnostics> {
    let (t_min, t_max) = t_window;
    if !(t_min > 0.0 && t_min < t_max && t_max <= 1.0) {
        return Err(Error::Parameter(format!(
            "window ({t_min}, {t_max}) must lie inside (0, 1]"
        )));
    }
    let graph = sd.graph();
    let mesh_scale = graph.mesh().powf(spec.d_w);
    if t_min < mesh_scale {
        return Err(Error::Diagnostics(format!(
            "t_min = {t_min:.3e} is below the mesh scale {mesh_scale:.3e}; \
             build a finer level or raise the window"
        )));
    }
    let n = graph.vertex_count();
    let samples = sample_count.clamp(2, n);
    let sample_vertices: Vec<u32> = (0..samples)
        .map(|i| ((i * n) / samples) as u32)
        .collect();

    // Stochastic completeness: P_t 1 = 1 exactly, so the residual is pure
    // spectral roundoff.
    let ones = Field::constant(n, 1.0);
    let mut completeness_residual: f64 = 0.0;
    for t in [t_min, (t_min * t_max).sqrt(), t_max] {
        let pt1 = sd.apply_multiplier(&ones, |lam| (-t * lam).exp());
        for v in &pt1.values {
            completeness_residual = completeness_residual.max((v - 1.0).abs());
        }
    }

    // Symmetry of the kernel on sampled pairs.
    let mut symmetry_residual: f64 = 0.0;
    let tm = (t_min * t_max).sqrt();
    for (i, &x) in sample_vertices.iter().enumerate() {
        let y = sample_vertices[(i + 1) % sample_vertices.len()];
        let pxy = sd.heat_kernel(tm, x, y)?;
        let pyx = sd.heat_kernel(tm, y, x)?;
        symmetry_residual = symmetry_residual.max((pxy - pyx).abs());
    }

    // On-diagonal decay: slope of log <p_t(x,x)>_mu against log t,
    // 32 points per decade over the window. Expected -d_h/d_w.
    let decades = (t_max / t_min).log10();
    let pts = ((decades * 32.0).ceil() as usize).max(4);
    let mut ondiag_series = Vec::with_capacity(pts);
    for i in 0..pts {
        let t = t_min * (t_max / t_min).powf(i as f64 / (pts - 1) as f64);
        ondiag_series.push((t, sd.ondiag_average(t)));
    }
    let xs: Vec<f64> = ondiag_series.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = ondiag_series.iter().map(|(_, p)| p.ln()).collect();
    let (ondiag_slope, _) = fit_line(&xs, &ys);

    // Spatial Hoelder exponent: fit of sup_y |p_t(x,y) - p_t(x',y)| scaled by
    // t^{d_h/d_w} against d(x,x') / t^{1/d_w}, over pairs at several hop
    // distances (single-hop pairs alone see lattice smoothness, not Theta).
    let mesh = graph.mesh();
    let mut hx = Vec::new();
    let mut hy = Vec::new();
    let t_lo = (4.0 * mesh_scale).max(t_min);
    for &x in sample_vertices.iter().take(samples.min(6)) {
        let hops = graph.bfs_hops(x);
        for target in [1u32, 2, 4, 8] {
            let Some(x2) = hops.iter().position(|&h| h == target) else {
                continue;
            };
            let d = target as f64 * mesh;
            for i in 0..6 {
                let t = t_lo * (t_max / t_lo).powf(i as f64 / 5.0);
                if d > t.powf(1.0 / spec.d_w) {
                    continue;
                }
                let row_a = sd.heat_kernel_row(t, x)?;
                let row_b = sd.heat_kernel_row(t, x2 as u32)?;
                let diff = row_a.sub(&row_b).sup_norm();
                if diff > 0.0 {
                    hx.push((d / t.powf(1.0 / spec.d_w)).ln());
                    hy.push((diff * t.powf(spec.d_h / spec.d_w)).ln());
                }
            }
        }
    }
    let holder_theta_fit = if hx.len() >= 2 { fit_line(&hx, &hy).0 } else { f64::NAN };

    // Two-sided bound spot check: positivity of the kernel at sampled scales
    // against the sub-Gaussian profile Phi(u) = exp(-u^{d_w/(d_w-1)}).
    let mut min_ratio = f64::INFINITY;
    for &x in sample_vertices.iter().take(samples.min(4)) {
        let dist = graph.metric_row(x);
        for i in 0..4 {
            let t = t_min * (t_max / t_min).powf(i as f64 / 3.0);
            let row = sd.heat_kernel_row(t, x)?;
            for &y in &sample_vertices {
                let d = dist[y as usize];
                let profile =
                    t.powf(-spec.d_h / spec.d_w) * (-(d / t.powf(1.0 / spec.d_w)).powf(spec.d_w / (spec.d_w - 1.0))).exp();
                if profile > 1e-300 {
                    min_ratio = min_ratio.min(row.values[y as usize] / profile);
                }
            }
        }
    }

    Ok(HeatDiagnostics {
        completeness_residual,
        symmetry_residual,
        ondiag_slope,
        ondiag_window: t_window,
        ondiag_series,
        holder_theta_fit,
        holder_window: (t_lo, t_max),
        lower_bound_ok: min_ratio.is_finite() && min_ratio > 0.0,
        lower_bound_min_ratio: min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, catalog_lookup};
    use crate::testutil::{random_field, two_vertex};
    use approx::assert_relative_eq;

    fn sg_sd(level: u32) -> SpectralDecomposition {
        crate::testutil::catalog_sd("sg", level)
    }

    #[test]
    fn two_vertex_closed_form() {
        let sd = decompose(two_vertex()).unwrap();
        assert_relative_eq!(sd.eigenvalue(0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(sd.eigenvalue(1), 2.0, epsilon = 1e-14);
        let inv_sqrt2 = 0.5f64.sqrt();
        let phi0 = sd.eigenfield(0);
        let phi1 = sd.eigenfield(1);
        assert_relative_eq!(phi0.values[0], inv_sqrt2, epsilon = 1e-12);
        assert_relative_eq!(phi0.values[1], inv_sqrt2, epsilon = 1e-12);
        assert_relative_eq!(phi1.values[0].abs(), inv_sqrt2, epsilon = 1e-12);
        assert_relative_eq!(phi1.values[1].abs(), inv_sqrt2, epsilon = 1e-12);
        assert_relative_eq!(phi1.values[0] * phi1.values[1], -0.5, epsilon = 1e-12);

        // p_t(x, x) = (1 + e^{-2t}) / 2.
        for t in [0.1, 0.7, 2.0] {
            assert_relative_eq!(
                sd.heat_kernel(t, 0, 0).unwrap(),
                (1.0 + (-2.0 * t).exp()) / 2.0,
                epsilon = 1e-13
            );
        }
        assert!(sd.heat_kernel(0.0, 0, 0).is_err());
    }

    #[test]
    fn kernel_mode_is_constant() {
        for level in [1u32, 2] {
            let sd = sg_sd(level);
            assert!(sd.eigenvalue(0).abs() < 1e-10);
            let phi0 = sd.eigenfield(0);
            let spread = phi0.values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            assert!(spread.1 - spread.0 < 1e-10, "phi_0 not constant: {spread:?}");
        }
    }

    #[test]
    fn orthonormality_and_reconstruction() {
        let sd = sg_sd(2);
        let g = sd.graph();
        let n = sd.mode_count();
        for i in (0..n).step_by(3) {
            let fi = sd.eigenfield(i);
            for j in (0..n).step_by(4) {
                let fj = sd.eigenfield(j);
                let ip = g.inner(&fi.values, &fj.values);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "<phi_{i}, phi_{j}> = {ip}");
            }
            // L phi_k = lambda_k phi_k through the graph stencil.
            let lf = g.apply_generator(&fi.values);
            let lam = sd.eigenvalue(i);
            for (a, b) in lf.iter().zip(&fi.values) {
                assert!(
                    (a - lam * b).abs() <= 1e-8 * (1.0 + lam),
                    "reconstruction failed at lambda = {lam}"
                );
            }
        }
    }

    #[test]
    fn coeff_roundtrip_dense_and_kron() {
        let sd = sg_sd(2);
        let f = random_field(&sd, 5);
        let back = sd.from_coeffs(&sd.to_coeffs(&f));
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-10);
        }

        let t = build_space(&catalog_lookup("torus2d").unwrap(), 3).unwrap();
        let sd = decompose(Arc::new(t)).unwrap();
        assert!(sd.is_kronecker());
        let f = random_field(&sd, 6);
        let back = sd.from_coeffs(&sd.to_coeffs(&f));
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_law() {
        let sd = sg_sd(2);
        let f = random_field(&sd, 7);
        let (s, t) = (0.13, 0.41);
        let a = apply_semigroup_op(&sd, SemigroupOp::P, s, 0, &f).unwrap();
        let ab = apply_semigroup_op(&sd, SemigroupOp::P, t, 0, &a).unwrap();
        let c = apply_semigroup_op(&sd, SemigroupOp::P, s + t, 0, &f).unwrap();
        assert!(ab.sub(&c).sup_norm() < 1e-10);
    }

    #[test]
    fn q_annihilates_constants_and_eigenfunctions_scale() {
        let sd = sg_sd(2);
        let c = Field::constant(sd.graph().vertex_count(), 3.25);
        let q = apply_semigroup_op(&sd, SemigroupOp::Q, 0.3, 1, &c).unwrap();
        assert!(q.sup_norm() < 1e-12);

        let k = 5;
        let lam = sd.eigenvalue(k);
        let phi = sd.eigenfield(k);
        let t = 0.2;
        let p = apply_semigroup_op(&sd, SemigroupOp::P, t, 0, &phi).unwrap();
        assert!(p.sub(&phi.scaled((-t * lam).exp())).sup_norm() < 1e-12);
        for kk in 1..=3usize {
            let q = apply_semigroup_op(&sd, SemigroupOp::Q, t, kk, &phi).unwrap();
            let expect = (t * lam).powi(kk as i32) * (-t * lam).exp();
            assert!(q.sub(&phi.scaled(expect)).sup_norm() < 1e-11);
        }
        assert!(apply_semigroup_op(&sd, SemigroupOp::Q, t, 0, &phi).is_err());
    }

    #[test]
    fn psum_completes_calderon_at_t1() {
        // e^{-lam} sum_{m<k} lam^m/m! + P(k, lam) = 1 per eigenvalue.
        let sd = sg_sd(2);
        for k in 2..=4usize {
            for mode in 0..sd.mode_count() {
                let lam = sd.eigenvalue(mode);
                let psum = semigroup_multiplier(SemigroupOp::PSum, 1.0, k, lam);
                let p_reg = crate::special::reg_lower_gamma(k as f64, lam.max(0.0));
                assert!(
                    (psum + p_reg - 1.0).abs() < 1e-12,
                    "lam = {lam}, k = {k}: {}",
                    psum + p_reg - 1.0
                );
            }
        }
    }

    #[test]
    fn almost_orthogonality_ratio() {
        let sd = sg_sd(2);
        let f = random_field(&sd, 11);
        for (s, t, k1, k2) in [(0.05, 0.3, 1usize, 2usize), (0.4, 0.1, 2, 1), (0.2, 0.2, 1, 1)] {
            let qt = apply_semigroup_op(&sd, SemigroupOp::Q, t, k2, &f).unwrap();
            let qsqt = apply_semigroup_op(&sd, SemigroupOp::Q, s, k1, &qt).unwrap();
            let bound_field =
                apply_semigroup_op(&sd, SemigroupOp::Q, s.max(t), k1 + k2, &f).unwrap();
            let factor = ((t / s).powi(k2 as i32)).min((s / t).powi(k1 as i32));
            let lhs = sd.graph().lp_norm(&qsqt.values, f64::INFINITY);
            let rhs = factor * sd.graph().lp_norm(&bound_field.values, f64::INFINITY);
            assert!(lhs <= rhs * (1.0 + 1e-8), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn long_time_contraction_on_mean_zero() {
        let sd = sg_sd(2);
        let g = sd.graph().clone();
        let mut f = random_field(&sd, 13);
        let mean = g.inner(&f.values, &vec![1.0; f.len()]);
        for v in f.values.iter_mut() {
            *v -= mean; // total measure is 1
        }
        let a = 0.02;
        let mut c_a = f64::INFINITY;
        for x in 0..g.vertex_count() as u32 {
            let row = sd.heat_kernel_row(a, x).unwrap();
            c_a = c_a.min(row.values.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        assert!(c_a > 0.0 && c_a < 1.0, "c_a = {c_a}");
        let norm0 = f.sup_norm();
        for t in [0.1f64, 0.2, 0.4] {
            let pt = apply_semigroup_op(&sd, SemigroupOp::P, t, 0, &f).unwrap();
            let bound = (1.0 - c_a).powi((t / a).floor() as i32) * norm0;
            // The roundoff floor matters once the field has decayed ~16 digits.
            assert!(
                pt.sup_norm() <= bound * (1.0 + 1e-10) + 1e-14 * norm0,
                "t = {t}: {} > {bound}",
                pt.sup_norm()
            );
        }
    }

    #[test]
    fn product_kernel_factorizes() {
        let t2 = build_space(&catalog_lookup("torus2d").unwrap(), 2).unwrap();
        let sd = decompose(Arc::new(t2)).unwrap();
        let (lf, rf) = sd.kronecker_factors().unwrap();
        let n2 = rf.graph().vertex_count() as u32;
        let (x, y) = (5u32, 9u32);
        let direct = sd.heat_kernel(0.3, x, y).unwrap();
        let split = lf.heat_kernel(0.3, x / n2, y / n2).unwrap()
            * rf.heat_kernel(0.3, x % n2, y % n2).unwrap();
        assert_relative_eq!(direct, split, epsilon = 1e-13);

        // Completeness through the product structure.
        let ones = Field::constant(sd.graph().vertex_count(), 1.0);
        let p = sd.apply_multiplier(&ones, |lam| (-0.2 * lam).exp());
        for v in &p.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagnostics_window_validation() {
        let sd = sg_sd(2);
        let spec = sd.spec().clone();
        let err = heat_diagnostics(&sd, &spec, (1e-9, 0.1), 8).unwrap_err();
        assert!(matches!(err, Error::Diagnostics(_)));
        let err = heat_diagnostics(&sd, &spec, (0.5, 0.1), 8).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn torus_ondiag_slope() {
        let t = build_space(&catalog_lookup("torus2d").unwrap(), 5).unwrap();
        let sd = decompose(Arc::new(t)).unwrap();
        let spec = sd.spec().clone();
        let d = heat_diagnostics(&sd, &spec, (2e-3, 2e-2), 12).unwrap();
        assert!(d.completeness_residual < 1e-12, "{}", d.completeness_residual);
        assert!(d.symmetry_residual < 1e-12);
        assert!(
            (d.ondiag_slope - (-1.0)).abs() < 0.05,
            "slope = {}",
            d.ondiag_slope
        );
        assert!(d.lower_bound_ok);
    }
}
