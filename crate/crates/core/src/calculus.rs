//! Discrete energy measure, paraproducts, and the resolution operator.
//!
//! The product of two fields splits into two paraproducts, a resonant term
//! carried by the energy measure, and a low-frequency tail:
//!
//!   f g = Pi_g(f) + Pi_f(g) + Pi(f, g) + Delta_{-1}(f, g),
//!
//! an exact pointwise identity on a finite graph once the dt/t integrals are
//! resolved; the only error is quadrature.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::TGrid;
use crate::space::GraphApproximation;
use crate::special::{reg_lower_gamma, reg_lower_gamma_int};
use crate::spectral::{semigroup_multiplier, SemigroupOp, SpectralDecomposition};

/// Signed density of the energy measure Gamma(u, v) with respect to mu.
#[derive(Debug, Clone)]
pub struct EnergyMeasure {
    pub density: Vec<f64>,
}

impl EnergyMeasure {
    /// integral of g dGamma(u, v) = sum_x g(x) density(x) mu(x).
    pub fn integrate_against(&self, graph: &GraphApproximation, g: &[f64]) -> f64 {
        self.density
            .iter()
            .zip(g)
            .zip(&graph.vertex_measure)
            .map(|((d, g), m)| d * g * m)
            .sum()
    }

    /// Total mass, which equals the Dirichlet form E(u, v).
    pub fn total(&self, graph: &GraphApproximation) -> f64 {
        self.density
            .iter()
            .zip(&graph.vertex_measure)
            .map(|(d, m)| d * m)
            .sum()
    }
}

/// Carre-du-champ density Gamma(u,v) = (u Lv + v Lu - L(uv)) / 2, exact on
/// the graph stencil.
pub fn energy_measure(graph: &GraphApproximation, u: &Field, v: &Field) -> Result<EnergyMeasure> {
    u.check(graph)?;
    v.check(graph)?;
    let lu = graph.apply_generator(&u.values);
    let lv = graph.apply_generator(&v.values);
    let uv: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a * b).collect();
    let luv = graph.apply_generator(&uv);
    let density = (0..graph.vertex_count())
        .map(|i| 0.5 * (u.values[i] * lv[i] + v.values[i] * lu[i] - luv[i]))
        .collect();
    Ok(EnergyMeasure { density })
}

/// Dirichlet form via the conductance sum over edges:
/// E(u, v) = sum_{xy} c_xy (u(x)-u(y)) (v(x)-v(y)).
pub fn dirichlet_energy(graph: &GraphApproximation, u: &Field, v: &Field) -> f64 {
    graph
        .edges
        .iter()
        .map(|&(x, y, c)| {
            c * (u.values[x as usize] - u.values[y as usize])
                * (v.values[x as usize] - v.values[y as usize])
        })
        .sum()
}

/// The four pieces of the product decomposition of f * g.
#[derive(Debug, Clone)]
pub struct ParaproductParts {
    /// Pi_g^{(b)}(f): f carried at high frequency.
    pub pi_g_f: Field,
    /// Pi_f^{(b)}(g): g carried at high frequency.
    pub pi_f_g: Field,
    /// The resonant term, carrying the energy measure.
    pub resonant: Field,
    /// Low-frequency tail P_1^{(b)}(P_1^{(b)} f * P_1^{(b)} g).
    pub tail: Field,
    pub b: usize,
    pub quadrature: String,
}

impl ParaproductParts {
    pub fn reconstruction(&self) -> Field {
        self.pi_g_f
            .add(&self.pi_f_g)
            .add(&self.resonant)
            .add(&self.tail)
    }

    /// CSV rows keyed by vertex.
    pub fn csv(&self) -> String {
        let mut out = String::from("vertex,pi_g_f,pi_f_g,resonant,tail,sum\n");
        for i in 0..self.pi_g_f.len() {
            let sum =
                self.pi_g_f[i] + self.pi_f_g[i] + self.resonant[i] + self.tail[i];
            out.push_str(&format!(
                "{i},{},{},{},{},{sum}\n",
                self.pi_g_f[i], self.pi_f_g[i], self.resonant[i], self.tail[i]
            ));
        }
        out
    }
}

/// gamma_k = (k-1)!, the Calderon normalization.
pub fn calderon_gamma(k: usize) -> f64 {
    (1..k).map(|m| m as f64).product()
}

/// Largest residual of the per-eigenvalue Calderon identity
/// (1/gamma_k) int_0^1 (t lam)^k e^{-t lam} dt/t + e^{-lam} sum_{m<k} lam^m/m! = 1,
/// with the integral evaluated in closed form (regularized incomplete gamma).
pub fn calderon_residual(sd: &SpectralDecomposition, k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for mode in 0..sd.mode_count() {
        let lam = sd.eigenvalue(mode);
        let tail = semigroup_multiplier(SemigroupOp::PSum, 1.0, k, lam);
        let head = reg_lower_gamma(k as f64, lam.max(0.0));
        worst = worst.max((head + tail - 1.0).abs());
    }
    worst
}

/// Paraproduct decomposition of the pointwise product f * g.
///
/// Pi_g^{(b)}(f) = (1/gamma_b) int_0^1 [ tL P_t^{(b)}(Q_t^{(b-1)} f * P_t^{(b)} g)
///   + Q_t^{(b-1)}(tL P_t^{(b)} f * P_t^{(b)} g) ] dt/t, and the resonant term
/// collects the energy-measure pieces left over from the Leibniz exchange.
pub fn paraproduct(
    sd: &SpectralDecomposition,
    f: &Field,
    g: &Field,
    b: usize,
    t_grid: &TGrid,
) -> Result<ParaproductParts> {
    if b < 2 {
        return Err(Error::Parameter(format!("paraproduct needs b >= 2, got {b}")));
    }
    let graph = sd.graph();
    f.check(graph)?;
    g.check(graph)?;
    if t_grid.is_empty() {
        return Err(Error::Parameter("empty t-grid".into()));
    }
    // Build-time self-check of the gamma_b = (b-1)! normalization.
    let residual = calderon_residual(sd, b);
    if residual > 1e-10 {
        return Err(Error::Construction(format!(
            "Calderon normalization residual {residual:.2e} exceeds 1e-10"
        )));
    }
    let gamma_b = calderon_gamma(b);
    let n = graph.vertex_count();

    let apply = |x: &Field, m: &dyn Fn(f64) -> f64| -> Field {
        let mut c = sd.to_coeffs(x);
        for (k, v) in c.iter_mut().enumerate() {
            *v *= m(sd.eigenvalue(k));
        }
        sd.from_coeffs(&c)
    };

    let mut pi_g_f = Field::zeros(n);
    let mut pi_f_g = Field::zeros(n);
    let mut resonant = Field::zeros(n);

    for &(t, w) in &t_grid.nodes {
        let q = |x: &Field| apply(x, &|lam| semigroup_multiplier(SemigroupOp::Q, t, b - 1, lam));
        let p = |x: &Field| apply(x, &|lam| semigroup_multiplier(SemigroupOp::PSum, t, b, lam));
        let tlp = |x: &Field| {
            apply(x, &|lam| {
                t * lam * semigroup_multiplier(SemigroupOp::PSum, t, b, lam)
            })
        };
        let qf = q(f);
        let qg = q(g);
        let pf = p(f);
        let pg = p(g);
        let tlpf = tlp(f);
        let tlpg = tlp(g);

        // Pi_g(f) integrand: A_g(f) + B_g(f).
        let a_gf = tlp(&qf.mul_pointwise(&pg));
        let b_gf = q(&tlpf.mul_pointwise(&pg));
        // Pi_f(g) integrand.
        let a_fg = tlp(&qg.mul_pointwise(&pf));
        let b_fg = q(&tlpg.mul_pointwise(&pf));

        // Resonant integrand: S(f,g) + S(g,f) + R(f,g).
        let gamma_qf_pg = energy_measure(graph, &qf, &pg)?;
        let gamma_qg_pf = energy_measure(graph, &qg, &pf)?;
        let gamma_pf_pg = energy_measure(graph, &pf, &pg)?;
        let s_fg = p(&Field::new(gamma_qf_pg.density))
            .scaled(2.0 * t)
            .sub(&p(&qf.mul_pointwise(&tlpg)));
        let s_gf = p(&Field::new(gamma_qg_pf.density))
            .scaled(2.0 * t)
            .sub(&p(&qg.mul_pointwise(&tlpf)));
        let r = q(&Field::new(gamma_pf_pg.density)).scaled(-2.0 * t);

        let wg = w / gamma_b;
        for i in 0..n {
            pi_g_f.values[i] += wg * (a_gf[i] + b_gf[i]);
            pi_f_g.values[i] += wg * (a_fg[i] + b_fg[i]);
            resonant.values[i] += wg * (s_fg[i] + s_gf[i] + r[i]);
        }
    }

    // Low-frequency tail, evaluated exactly (no quadrature).
    let p1 = |x: &Field| apply(x, &|lam| semigroup_multiplier(SemigroupOp::PSum, 1.0, b, lam));
    let tail = p1(&p1(f).mul_pointwise(&p1(g)));

    Ok(ParaproductParts {
        pi_g_f,
        pi_f_g,
        resonant,
        tail,
        b,
        quadrature: t_grid.id.clone(),
    })
}

/// Resolution operator R^{(k)}(v)_t = int_0^t P^{(k)}_{t-s} v(s) ds evaluated
/// per eigenmode on the piecewise-constant interpolant of the path.
///
/// Returns the resolved field at each input time.
pub fn resolution(
    sd: &SpectralDecomposition,
    times: &[f64],
    values: &[Field],
    k: usize,
) -> Result<Vec<Field>> {
    if times.is_empty() || values.is_empty() {
        return Err(Error::Domain("empty path".into()));
    }
    if times.len() != values.len() {
        return Err(Error::Domain("times and values lengths differ".into()));
    }
    if k == 0 {
        return Err(Error::Domain("resolution order k must be >= 1".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("times must be strictly increasing".into()));
    }
    let modes = sd.mode_count();
    let coeff_path: Vec<Vec<f64>> = values.iter().map(|v| sd.to_coeffs(v)).collect();
    let lams: Vec<f64> = (0..modes).map(|m| sd.eigenvalue(m)).collect();

    // Per mode, track I_m(t) = int_0^t ((t-s) lam)^m e^{-(t-s) lam} vhat(s) ds
    // for m < k; stepping t -> t + dt mixes the registers through the
    // binomial expansion of ((t + dt - s) lam)^m.
    let mut registers = vec![vec![0.0f64; k]; modes];
    let mut out = Vec::with_capacity(times.len());
    out.push(sd.from_coeffs(&vec![0.0; modes]));

    let binom: Vec<Vec<f64>> = (0..k)
        .map(|m| {
            let mut row = vec![1.0; m + 1];
            for i in 1..=m {
                row[i] = row[i - 1] * (m - i + 1) as f64 / i as f64;
            }
            row
        })
        .collect();

    let mut scratch = vec![0.0f64; k];
    for step in 1..times.len() {
        let dt = times[step] - times[step - 1];
        for (mode, lam) in lams.iter().enumerate() {
            let vhat = coeff_path[step - 1][mode];
            let regs = &mut registers[mode];
            if *lam <= 0.0 {
                // Only the m = 0 register survives: plain time integral.
                regs[0] += vhat * dt;
                for r in regs.iter_mut().skip(1) {
                    *r = 0.0;
                }
                continue;
            }
            let u = dt * lam;
            let decay = (-u).exp();
            for m in 0..k {
                let mut acc = 0.0;
                let mut upow = 1.0; // (dt lam)^{m-i}
                for i in (0..=m).rev() {
                    acc += binom[m][i] * upow * regs[i];
                    upow *= u;
                }
                // local contribution: vhat * (m!/lam) P(m+1, u)
                let m_fact: f64 = (1..=m).map(|x| x as f64).product();
                scratch[m] = decay * acc + vhat * (m_fact / lam) * reg_lower_gamma_int(m + 1, u);
            }
            regs.copy_from_slice(&scratch);
        }
        let coeffs: Vec<f64> = (0..modes)
            .map(|mode| {
                let mut mf = 1.0;
                let mut acc = registers[mode][0];
                for m in 1..k {
                    mf *= m as f64;
                    acc += registers[mode][m] / mf;
                }
                acc
            })
            .collect();
        out.push(sd.from_coeffs(&coeffs));
    }
    Ok(out)
}

/// Summary statistics used by the CLI calculus subcommand.
#[derive(Debug, Serialize)]
pub struct ParaproductReport {
    pub b: usize,
    pub quadrature: String,
    pub reconstruction_error: f64,
    pub calderon_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{catalog_sd, random_field, smooth_field, two_vertex};
    use approx::assert_relative_eq;

    #[test]
    fn gamma_of_constant_vanishes() {
        let sd = catalog_sd("sg", 2);
        let g = sd.graph();
        let one = Field::constant(g.vertex_count(), 1.0);
        let v = random_field(&sd, 2);
        let em = energy_measure(g, &one, &v).unwrap();
        assert!(em.density.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn gamma_diagonal_integrates_to_eigenvalue() {
        let sd = catalog_sd("sg", 2);
        let g = sd.graph();
        for k in [1usize, 4, 9] {
            let phi = sd.eigenfield(k);
            let em = energy_measure(g, &phi, &phi).unwrap();
            // All diagonal densities are nonnegative on a graph.
            assert!(em.density.iter().all(|&d| d > -1e-12));
            assert_relative_eq!(em.total(g), sd.eigenvalue(k), epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn cauchy_schwarz_for_energy_measures() {
        let sd = catalog_sd("sg", 2);
        let g = sd.graph();
        for seed in 0..5u64 {
            let u = random_field(&sd, seed);
            let v = random_field(&sd, seed + 50);
            let f = random_field(&sd, seed + 100);
            let h = random_field(&sd, seed + 150);
            let guv = energy_measure(g, &u, &v).unwrap();
            let guu = energy_measure(g, &u, &u).unwrap();
            let gvv = energy_measure(g, &v, &v).unwrap();
            let f2: Vec<f64> = f.values.iter().map(|x| x * x).collect();
            let h2: Vec<f64> = h.values.iter().map(|x| x * x).collect();
            let fg: Vec<f64> = f
                .values
                .iter()
                .zip(&h.values)
                .map(|(a, b)| a * b)
                .collect();
            let lhs = guv.integrate_against(g, &fg).abs();
            let rhs = guu.integrate_against(g, &f2).sqrt() * gvv.integrate_against(g, &h2).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-10), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn dirichlet_energy_cases() {
        let sd = catalog_sd("sg", 2);
        let g = sd.graph();
        let one = Field::constant(g.vertex_count(), 1.0);
        assert!(dirichlet_energy(g, &one, &one).abs() < 1e-14);

        for (i, j) in [(1usize, 1usize), (2, 5), (3, 3)] {
            let e = dirichlet_energy(g, &sd.eigenfield(i), &sd.eigenfield(j));
            let expect = if i == j { sd.eigenvalue(i) } else { 0.0 };
            assert_relative_eq!(e, expect, epsilon = 1e-8, max_relative = 1e-8);
        }

        // 2-vertex unit-conductance graph, u = (1, 0): E = 1.
        let two = two_vertex();
        let u = Field::new(vec![1.0, 0.0]);
        assert_relative_eq!(dirichlet_energy(&two, &u, &u), 1.0, epsilon = 1e-14);
        // Agreement of the edge form with <Lu, v>_mu.
        let lu = two.apply_generator(&u.values);
        assert_relative_eq!(two.inner(&lu, &u.values), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn calderon_normalization_self_check() {
        let sd = catalog_sd("sg", 2);
        for k in 2..=4 {
            let r = calderon_residual(&sd, k);
            assert!(r < 1e-12, "k = {k}: residual {r}");
        }
    }

    #[test]
    fn paraproduct_of_one_reconstructs_partner() {
        let sd = catalog_sd("sg", 2);
        let n = sd.graph().vertex_count();
        let one = Field::constant(n, 1.0);
        let g = smooth_field(&sd, 4, 0.02);
        let grid = TGrid::paraproduct_default(sd.lambda_max());
        let parts = paraproduct(&sd, &one, &g, 2, &grid).unwrap();
        // Pi_g(1) = 0: Q^{(b-1)} 1 = 0 and tL P^{(b)} 1 = 0.
        assert!(parts.pi_g_f.sup_norm() < 1e-12);
        let recon = parts.reconstruction();
        assert!(recon.sub(&g).sup_norm() < 1e-8, "{}", recon.sub(&g).sup_norm());
    }

    #[test]
    fn paraproduct_reconstructs_products() {
        let sd = catalog_sd("sg", 3);
        let grid = TGrid::paraproduct_default(sd.lambda_max());
        for seed in 0..3u64 {
            let f = smooth_field(&sd, seed, 0.02);
            let g = smooth_field(&sd, seed + 40, 0.02);
            let parts = paraproduct(&sd, &f, &g, 2, &grid).unwrap();
            let err = parts.reconstruction().sub(&f.mul_pointwise(&g)).sup_norm();
            assert!(err <= 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn paraproduct_rejects_small_b() {
        let sd = catalog_sd("sg", 1);
        let f = random_field(&sd, 1);
        let grid = TGrid::paraproduct_default(sd.lambda_max());
        assert!(paraproduct(&sd, &f, &f, 1, &grid).is_err());
    }

    #[test]
    fn product_estimate_ratio_recorded() {
        // |f g|_{B^{alpha and beta}} / (|f|_{B^alpha} |g|_{B^beta}) stays
        // bounded for alpha > 0, beta in (-Theta, Theta), alpha + beta > 0.
        use crate::besov::{besov_norm_dyadic, default_j_max, BesovParams};
        let sd = catalog_sd("sg", 3);
        let theta = sd.spec().theta;
        let (alpha, beta) = (0.6, 0.5 * theta);
        let j_max = default_j_max(sd.graph());
        let mut worst: f64 = 0.0;
        for seed in 0..10u64 {
            let f = smooth_field(&sd, seed, 0.03);
            let g = smooth_field(&sd, seed + 70, 0.03);
            let nf = besov_norm_dyadic(&sd, &f, &BesovParams::sup(alpha, 2), j_max)
                .unwrap()
                .total;
            let ng = besov_norm_dyadic(&sd, &g, &BesovParams::sup(beta, 2), j_max)
                .unwrap()
                .total;
            let nfg = besov_norm_dyadic(
                &sd,
                &f.mul_pointwise(&g),
                &BesovParams::sup(alpha.min(beta), 2),
                j_max,
            )
            .unwrap()
            .total;
            worst = worst.max(nfg / (nf * ng));
        }
        assert!(worst.is_finite() && worst > 0.0);
        assert!(worst < 10.0, "product-estimate ratio {worst}");
    }

    #[test]
    fn resolution_zero_and_eigenmode() {
        let sd = catalog_sd("sg", 2);
        let n = sd.graph().vertex_count();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let zeros: Vec<Field> = times.iter().map(|_| Field::zeros(n)).collect();
        let r = resolution(&sd, &times, &zeros, 2).unwrap();
        assert!(r.iter().all(|f| f.sup_norm() == 0.0));

        // Constant-in-time eigenmode input: per-mode scalar integral oracle
        // via fine Simpson quadrature of the P^{(k)} multiplier.
        let k = 3usize;
        let mode = 5usize;
        let lam = sd.eigenvalue(mode);
        let phi = sd.eigenfield(mode);
        let path: Vec<Field> = times.iter().map(|_| phi.clone()).collect();
        let r = resolution(&sd, &times, &path, k).unwrap();
        let t_end = *times.last().unwrap();
        let mult = |u: f64| -> f64 {
            let x = u * lam;
            (0..k)
                .map(|m| {
                    let mf: f64 = (1..=m).map(|i| i as f64).product();
                    x.powi(m as i32) / mf
                })
                .sum::<f64>()
                * (-x).exp()
        };
        // Simpson on [0, t_end] with 20000 intervals.
        let m = 20000;
        let h = t_end / m as f64;
        let mut oracle = mult(0.0) + mult(t_end);
        for i in 1..m {
            oracle += mult(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        oracle *= h / 3.0;
        let got = sd.graph().inner(&r.last().unwrap().values, &phi.values);
        assert_relative_eq!(got, oracle, epsilon = 1e-9, max_relative = 1e-9);

        assert!(resolution(&sd, &[], &[], 2).is_err());
        assert!(resolution(&sd, &[0.0, 0.0], &zeros[0..2].to_vec(), 2).is_err());
    }

    #[test]
    fn schauder_ratio_recorded() {
        // |R^{(k)}(v)_t|_{B^{beta + d_w/eta}} <= C (t + t^{(eta-1)/eta})
        //   sup_s |v(s)|_{B^beta}; record C over random paths.
        use crate::besov::{besov_norm_dyadic, default_j_max, BesovParams};
        let sd = catalog_sd("sg", 2);
        let d_w = sd.spec().d_w;
        let beta = 0.4;
        let j_max = default_j_max(sd.graph());
        let times: Vec<f64> = (0..=16).map(|i| i as f64 * 0.05).collect();
        let mut worst: f64 = 0.0;
        for seed in 0..4u64 {
            let path: Vec<Field> = (0..times.len())
                .map(|i| smooth_field(&sd, seed * 100 + i as u64, 0.02))
                .collect();
            let sup_v = path
                .iter()
                .map(|f| {
                    besov_norm_dyadic(&sd, f, &BesovParams::sup(beta, 2), j_max)
                        .unwrap()
                        .total
                })
                .fold(0.0, f64::max);
            for eta in [1.0f64, 2.0] {
                let k = 3usize;
                let r = resolution(&sd, &times, &path, k).unwrap();
                for (i, t) in times.iter().enumerate().skip(4).step_by(4) {
                    let nr = besov_norm_dyadic(
                        &sd,
                        &r[i],
                        &BesovParams::sup(beta + d_w / eta, k + 2),
                        j_max,
                    )
                    .unwrap()
                    .total;
                    let envelope = (t + t.powf((eta - 1.0) / eta)) * sup_v;
                    worst = worst.max(nr / envelope);
                }
            }
        }
        assert!(worst.is_finite());
        assert!(worst < 20.0, "Schauder ratio {worst}");
    }

    #[test]
    fn gamma_smoothing_ratio_recorded() {
        // t |P_t Gamma(P_t f, P_t f)|_inf / (t^{2 alpha/d_w} |f|^2_{B^alpha})
        // bounded on spaces with d_h + 2 Theta - d_w > 0, alpha < Theta.
        use crate::besov::{besov_norm_dyadic, default_j_max, BesovParams};
        let sd = catalog_sd("sg", 3);
        let spec = sd.spec().clone();
        assert!(spec.d_h + 2.0 * spec.theta - spec.d_w > 0.0);
        let alpha = 0.8 * spec.theta;
        let j_max = default_j_max(sd.graph());
        let mut worst: f64 = 0.0;
        for seed in 0..6u64 {
            let f = smooth_field(&sd, seed, 0.01);
            let nf = besov_norm_dyadic(&sd, &f, &BesovParams::sup(alpha, 2), j_max)
                .unwrap()
                .total;
            for i in 0..8 {
                let t = 1e-3 * (1.0f64 / 1e-3).powf(i as f64 / 7.0);
                let ptf = sd.apply_multiplier(&f, |lam| (-t * lam).exp());
                let gamma = energy_measure(sd.graph(), &ptf, &ptf).unwrap();
                let pt_gamma = sd.apply_multiplier(&Field::new(gamma.density), |lam| (-t * lam).exp());
                let ratio = t * pt_gamma.sup_norm()
                    / (t.powf(2.0 * alpha / spec.d_w) * nf * nf);
                worst = worst.max(ratio);
            }
        }
        assert!(worst.is_finite());
        assert!(worst < 100.0, "Gamma-smoothing ratio {worst}");
    }

    #[test]
    fn leibniz_residual_decreases_with_level() {
        // Discrete forms are not strongly local; the Leibniz defect
        // |Gamma(uv, w) - u Gamma(v, w) - v Gamma(u, w)|_{L^1} must decrease
        // as the level refines (up to 10% slack).
        let mut residuals = Vec::new();
        for level in [2u32, 3, 4] {
            let sd = catalog_sd("sg", level);
            let g = sd.graph();
            // Smooth comparable fields from embedding coordinates.
            let coord = |dim: usize| -> Field {
                Field::new(
                    g.positions
                        .iter()
                        .map(|p| (2.0 * std::f64::consts::PI * p[dim]).sin())
                        .collect(),
                )
            };
            let s = 0.01;
            let u = sd.apply_multiplier(&coord(0), |lam| (-s * lam).exp());
            let v = sd.apply_multiplier(&coord(1), |lam| (-s * lam).exp());
            let w = sd.apply_multiplier(&coord(0).mul_pointwise(&coord(1)), |lam| (-s * lam).exp());
            let guvw = energy_measure(g, &u.mul_pointwise(&v), &w).unwrap();
            let gvw = energy_measure(g, &v, &w).unwrap();
            let guw = energy_measure(g, &u, &w).unwrap();
            let defect: Vec<f64> = (0..g.vertex_count())
                .map(|i| guvw.density[i] - u[i] * gvw.density[i] - v[i] * guw.density[i])
                .collect();
            residuals.push(g.lp_norm(&defect, 1.0));
        }
        assert!(
            residuals[1] <= residuals[0] * 1.1 && residuals[2] <= residuals[1] * 1.1,
            "Leibniz residuals {residuals:?}"
        );
        assert!(residuals[2] < residuals[0], "no overall decrease: {residuals:?}");
    }

    #[test]
    fn hls_constant_stable() {
        // |f|_{L^q} <= C (sqrt(E(f,f)) + |f|_{L^2}) below the critical
        // exponent 2 d_s / (d_s - 2); constants recorded across two levels.
        let mut constants = Vec::new();
        for level in [2u32, 3] {
            let sd = catalog_sd("sg2", level);
            let d_s = sd.spec().d_s();
            assert!(d_s > 2.0);
            let q = (2.0 * d_s / (d_s - 2.0) - 1.0).min(4.0);
            let g = sd.graph();
            let mut c: f64 = 0.0;
            for seed in 0..6u64 {
                let f = smooth_field(&sd, seed, 0.02);
                let lq = g.lp_norm(&f.values, q);
                let e = dirichlet_energy(g, &f, &f).sqrt();
                let l2 = g.lp_norm(&f.values, 2.0);
                c = c.max(lq / (e + l2));
            }
            constants.push(c);
        }
        let ratio = constants[1] / constants[0];
        assert!((0.5..=2.0).contains(&ratio), "HLS constants {constants:?}");
    }

    #[test]
    fn chain_rule_workaround_recorded() {
        // |f^{n+2p-2}|_{B^{d_w/2}_{1,inf}} <= C |f^{2p+2n-4}|_{L^1}^{1/2}
        //   E(f^p, f^p)^{1/2} for positive fields, small odd p.
        use crate::besov::{besov_norm_dyadic, default_j_max, BesovParams, NormExp};
        let sd = catalog_sd("sg", 3);
        let g = sd.graph();
        let d_w = sd.spec().d_w;
        let j_max = default_j_max(g);
        let (n, p) = (3i32, 1i32);
        let mut worst: f64 = 0.0;
        for seed in 0..6u64 {
            let base = smooth_field(&sd, seed, 0.02);
            let f = Field::new(base.values.iter().map(|v| 0.5 + v.abs()).collect());
            let pow = |e: i32| Field::new(f.values.iter().map(|v| v.powi(e)).collect());
            let lhs = besov_norm_dyadic(
                &sd,
                &pow(n + 2 * p - 2),
                &BesovParams::new(d_w / 2.0, NormExp::Finite(1.0), NormExp::Infinity, 2),
                j_max,
            )
            .unwrap()
            .semi_part;
            let fp = pow(p);
            let rhs = g.lp_norm(&pow(2 * p + 2 * n - 4).values, 1.0).sqrt()
                * dirichlet_energy(g, &fp, &fp).sqrt();
            worst = worst.max(lhs / rhs);
        }
        assert!(worst.is_finite());
        assert!(worst < 10.0, "chain-rule ratio {worst}");
    }
}
