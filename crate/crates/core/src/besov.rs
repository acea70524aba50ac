//! Heat-semigroup Besov norms.
//!
//! The regularity of a field is read off the decay of Q_t^{(k)} f = (tL)^k
//! e^{-tL} f as t -> 0: the B^alpha_{p,q} norm is the L^q(dt/t) average of
//! t^{-alpha/d_w} |Q_t^{(k)} f|_p over (0,1], plus the low-frequency part
//! |P_1 f|_p. A dyadic form samples t_j = 2^{-d_w j} instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::TGrid;
use crate::space::GraphApproximation;
use crate::spectral::SpectralDecomposition;

/// A norm exponent in [1, infinity]. Infinity is a tagged value, not a float
/// sentinel; sums become suprema under it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormExp {
    Finite(f64),
    Infinity,
}

impl NormExp {
    pub fn validate(self) -> Result<()> {
        match self {
            NormExp::Finite(p) if p >= 1.0 && p.is_finite() => Ok(()),
            NormExp::Infinity => Ok(()),
            NormExp::Finite(p) => Err(Error::Parameter(format!("exponent {p} must be >= 1"))),
        }
    }

    /// The value passed to L^p evaluation (f64::INFINITY for sup).
    pub fn lp(self) -> f64 {
        match self {
            NormExp::Finite(p) => p,
            NormExp::Infinity => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for NormExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormExp::Finite(p) => write!(f, "{p}"),
            NormExp::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesovParams {
    /// Regularity index alpha (any real).
    pub alpha: f64,
    pub p: NormExp,
    pub q: NormExp,
    /// Operator order; must satisfy k > alpha / d_w.
    pub k: usize,
}

impl BesovParams {
    pub fn new(alpha: f64, p: NormExp, q: NormExp, k: usize) -> Self {
        BesovParams { alpha, p, q, k }
    }

    /// B^alpha_{inf, inf} parameters.
    pub fn sup(alpha: f64, k: usize) -> Self {
        BesovParams::new(alpha, NormExp::Infinity, NormExp::Infinity, k)
    }

    fn validate(&self, d_w: f64) -> Result<()> {
        self.p.validate()?;
        self.q.validate()?;
        if (self.k as f64) <= self.alpha / d_w {
            return Err(Error::Parameter(format!(
                "operator order k = {} must exceed alpha/d_w = {}",
                self.k,
                self.alpha / d_w
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormResult {
    pub total: f64,
    /// |P_1 f|_{L^p}.
    pub p1_part: f64,
    /// The homogeneous seminorm.
    pub semi_part: f64,
    /// Grid descriptor, enough to reproduce the value bit-for-bit.
    pub quadrature: String,
}

fn q_multiplier(t: f64, k: usize, lam: f64) -> f64 {
    crate::spectral::semigroup_multiplier(crate::spectral::SemigroupOp::Q, t, k, lam)
}

/// Largest dyadic block index resolvable at this mesh: t_j >= mesh^{d_w}.
pub fn default_j_max(graph: &GraphApproximation) -> usize {
    (1.0 / graph.mesh()).log2().floor() as usize
}

/// Dyadic-form Besov norm: |P_1 f|_p plus the l^q aggregate of
/// 2^{j alpha} |A_j f|_p with A_j = (t_j L)^k P_{t_j}, t_j = 2^{-d_w j}.
pub fn besov_norm_dyadic(
    sd: &SpectralDecomposition,
    f: &Field,
    params: &BesovParams,
    j_max: usize,
) -> Result<NormResult> {
    let graph = sd.graph();
    f.check(graph)?;
    let d_w = sd.spec().d_w;
    params.validate(d_w)?;
    if 2f64.powf(-d_w * j_max as f64) < graph.mesh().powf(d_w) * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!(
            "j_max = {j_max} probes below the mesh scale; at this level use j_max <= {}",
            default_j_max(graph)
        )));
    }
    let coeffs = sd.to_coeffs(f);
    let p = params.p.lp();
    let mut blocks = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let tj = 2f64.powf(-d_w * j as f64);
        let mut c = coeffs.clone();
        sd.scale_coeffs(&mut c, &|lam| q_multiplier(tj, params.k, lam));
        let aj = sd.from_coeffs(&c);
        blocks.push(2f64.powf(params.alpha * j as f64) * graph.lp_norm(&aj.values, p));
    }
    let semi_part = aggregate(&blocks, params.q);
    let mut c = coeffs;
    sd.scale_coeffs(&mut c, &|lam| (-lam).exp());
    let p1_part = graph.lp_norm(&sd.from_coeffs(&c).values, p);
    Ok(NormResult {
        total: p1_part + semi_part,
        p1_part,
        semi_part,
        quadrature: format!("dyadic:k{}:j0-{j_max}", params.k),
    })
}

/// Integral-form Besov norm over the supplied t-grid (log-quadrature of the
/// defining dt/t integral; supremum over the grid when q = infinity).
pub fn besov_norm_integral(
    sd: &SpectralDecomposition,
    f: &Field,
    params: &BesovParams,
    t_grid: &TGrid,
) -> Result<NormResult> {
    let graph = sd.graph();
    f.check(graph)?;
    let d_w = sd.spec().d_w;
    params.validate(d_w)?;
    if t_grid.is_empty() {
        return Err(Error::Parameter("empty t-grid".into()));
    }
    let coeffs = sd.to_coeffs(f);
    let p = params.p.lp();
    let evaluate = |t: f64| -> f64 {
        let mut c = coeffs.clone();
        sd.scale_coeffs(&mut c, &|lam| q_multiplier(t, params.k, lam));
        t.powf(-params.alpha / d_w) * graph.lp_norm(&sd.from_coeffs(&c).values, p)
    };
    let semi_part = match params.q {
        NormExp::Infinity => t_grid
            .nodes
            .iter()
            .map(|&(t, _)| evaluate(t))
            .fold(0.0, f64::max),
        NormExp::Finite(q) => t_grid
            .nodes
            .iter()
            .map(|&(t, w)| w * evaluate(t).powf(q))
            .sum::<f64>()
            .powf(1.0 / q),
    };
    let mut c = coeffs;
    sd.scale_coeffs(&mut c, &|lam| (-lam).exp());
    let p1_part = graph.lp_norm(&sd.from_coeffs(&c).values, p);
    Ok(NormResult {
        total: p1_part + semi_part,
        p1_part,
        semi_part,
        quadrature: t_grid.id.clone(),
    })
}

fn aggregate(blocks: &[f64], q: NormExp) -> f64 {
    match q {
        NormExp::Infinity => blocks.iter().cloned().fold(0.0, f64::max),
        NormExp::Finite(q) => blocks.iter().map(|b| b.powf(q)).sum::<f64>().powf(1.0 / q),
    }
}

/// Hoelder norm |f|_C + sup_{0 < d(x,y) <= 1} |f(x)-f(y)| / d(x,y)^sigma,
/// maximized exhaustively over vertex pairs.
pub fn holder_norm(graph: &GraphApproximation, f: &Field, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Domain(format!("sigma = {sigma} outside (0, 1]")));
    }
    f.check(graph)?;
    let n = graph.vertex_count();
    let mut quot: f64 = 0.0;
    for x in 0..n {
        let row = graph.metric_row(x as u32);
        for y in (x + 1)..n {
            let d = row[y];
            if d > 0.0 && d <= 1.0 {
                quot = quot.max((f.values[x] - f.values[y]).abs() / d.powf(sigma));
            }
        }
    }
    Ok(f.sup_norm() + quot)
}
