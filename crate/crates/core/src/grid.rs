//! Quadrature grids for the dt/t integrals.
//!
//! Every grid carries nodes (t_i, w_i) such that
//! integral_{t_min}^{t_max} F(t) dt/t ~ sum_i w_i F(t_i),
//! i.e. the weights already absorb the logarithmic measure. Grids also carry
//! an id string so norm results are reproducible bit-for-bit given the grid.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct TGrid {
    pub id: String,
    pub t_min: f64,
    pub t_max: f64,
    /// (t, weight) pairs for the dt/t measure.
    pub nodes: Vec<(f64, f64)>,
}

impl TGrid {
    /// Log-spaced trapezoid grid with `per_decade` points per decade.
    pub fn geometric(t_min: f64, t_max: f64, per_decade: usize) -> Result<TGrid> {
        if !(t_min > 0.0 && t_max > t_min && t_max <= 1.0) {
            return Err(Error::Parameter(format!(
                "geometric grid needs 0 < t_min < t_max <= 1, got [{t_min}, {t_max}]"
            )));
        }
        if per_decade == 0 {
            return Err(Error::Parameter("empty grid".into()));
        }
        let decades = (t_max / t_min).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(2);
        let (a, b) = (t_min.ln(), t_max.ln());
        let h = (b - a) / (n - 1) as f64;
        let nodes = (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
                ((a + h * i as f64).exp(), w)
            })
            .collect();
        Ok(TGrid {
            id: format!("geo{per_decade}:{t_min:.3e}-{t_max:.3e}"),
            t_min,
            t_max,
            nodes,
        })
    }

    /// Composite 4-point Gauss-Legendre panels on the log axis. High order:
    /// integrands analytic in log t are resolved to near machine precision.
    pub fn gauss_log(t_min: f64, t_max: f64, panels: usize) -> Result<TGrid> {
        if !(t_min > 0.0 && t_max > t_min && t_max <= 1.0) {
            return Err(Error::Parameter(format!(
                "gauss grid needs 0 < t_min < t_max <= 1, got [{t_min}, {t_max}]"
            )));
        }
        if panels == 0 {
            return Err(Error::Parameter("empty grid".into()));
        }
        const X: [f64; 4] = [
            -0.8611363115940526,
            -0.3399810435848563,
            0.3399810435848563,
            0.8611363115940526,
        ];
        const W: [f64; 4] = [
            0.3478548451374538,
            0.6521451548625461,
            0.6521451548625461,
            0.3478548451374538,
        ];
        let (a, b) = (t_min.ln(), t_max.ln());
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(4 * panels);
        for p in 0..panels {
            let mid = a + h * (p as f64 + 0.5);
            for (x, w) in X.iter().zip(W) {
                nodes.push(((mid + 0.5 * h * x).exp(), 0.5 * h * w));
            }
        }
        Ok(TGrid {
            id: format!("gl4x{panels}:{t_min:.3e}-{t_max:.3e}"),
            t_min,
            t_max,
            nodes,
        })
    }

    /// Default Besov quadrature: 64 log-spaced points per decade on
    /// (mesh^{d_w}, 1].
    pub fn besov_default(mesh: f64, d_w: f64) -> Result<TGrid> {
        let t_min = mesh.powf(d_w).min(0.5);
        TGrid::geometric(t_min, 1.0, 64)
    }

    /// Default paraproduct grid: 512 nodes (128 GL panels), reaching far
    /// enough below the finest spectral scale that truncating at t_floor is
    /// harmless (integrands vanish like a positive power of t lambda_max).
    pub fn paraproduct_default(lambda_max: f64) -> TGrid {
        let t_floor = (1e-8f64).min(1e-4 / lambda_max.max(1.0));
        TGrid::gauss_log(t_floor, 1.0, 128).expect("static bounds")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of a scalar function against dt/t.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().map(|&(t, w)| w * f(t)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_power_laws() {
        // int_a^1 t^2 dt/t = (1 - a^2) / 2
        let g = TGrid::gauss_log(1e-6, 1.0, 64).unwrap();
        assert_relative_eq!(g.integrate(|t| t * t), 0.5, epsilon = 1e-12);
        // Trapezoid in log t is second order: ~1e-3 at 64 points per decade.
        let g = TGrid::geometric(1e-4, 1.0, 64).unwrap();
        assert_relative_eq!(g.integrate(|t| t * t), 0.5, epsilon = 1e-2);
    }

    #[test]
    fn calderon_scalar_integral() {
        // (1/(k-1)!) int_0^1 (t lam)^k e^{-t lam} dt/t = P(k, lam)
        let g = TGrid::gauss_log(1e-10, 1.0, 128).unwrap();
        for (k, lam) in [(2usize, 3.0f64), (3, 11.0), (4, 0.7)] {
            let quad = g.integrate(|t| (t * lam).powi(k as i32) * (-t * lam).exp());
            let gamma_k: f64 = (1..k).map(|m| m as f64).product();
            assert_relative_eq!(
                quad / gamma_k,
                crate::special::reg_lower_gamma(k as f64, lam),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(TGrid::geometric(0.0, 1.0, 8).is_err());
        assert!(TGrid::geometric(0.5, 0.1, 8).is_err());
        assert!(TGrid::gauss_log(1e-3, 1.0, 0).is_err());
    }
}
