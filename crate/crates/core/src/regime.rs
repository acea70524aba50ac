//! Admissibility of (d_h, d_w, Theta, n).
//!
//! Local theory: n < (1/2) (d_h + d_w)/(d_h - d_w) and n < 2 Theta/(d_h - d_w) + 1.
//! Global theory additionally needs odd n >= 3 and n < d_w/(d_h - d_w).
//! The convention a/0 = infinity (a > 0) makes every ratio a tagged value,
//! never a float sentinel; the first ratio depends on the geometry only
//! through the spectral dimension: (d_h + d_w)/(d_h - d_w) = (d_s + 2)/(d_s - 2).

use serde::Serialize;

use crate::error::{Error, Result};

/// A threshold ratio with explicit infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(x) => s.serialize_f64(*x),
            Ratio::Infinite => s.serialize_str("inf"),
        }
    }
}

impl Ratio {
    fn over(num: f64, den: f64) -> Ratio {
        // a/0 = infinity for a > 0; a negative denominator (subcritical
        // geometry) also imposes no constraint on n.
        if den <= 0.0 {
            Ratio::Infinite
        } else {
            Ratio::Finite(num / den)
        }
    }

    /// Strict comparison n < ratio; infinity admits every n.
    pub fn admits(self, n: f64) -> bool {
        match self {
            Ratio::Infinite => true,
            Ratio::Finite(x) => n < x,
        }
    }

    /// Exact equality with n: the boundary of a strict inequality.
    fn on_boundary(self, n: f64) -> bool {
        matches!(self, Ratio::Finite(x) if x == n)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Ratio::Finite(x) => x,
            Ratio::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Finite(x) => write!(f, "{x}"),
            Ratio::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub d_h: f64,
    pub d_w: f64,
    pub theta: f64,
    pub n: u32,
    /// (d_h + d_w) / (d_h - d_w); the local scaling condition is n < ratio_a/2.
    pub ratio_a: Ratio,
    /// 2 Theta / (d_h - d_w) + 1; the local Hoelder condition is n < ratio_b.
    pub ratio_b: Ratio,
    /// d_w / (d_h - d_w); the global condition is n < ratio_global.
    pub ratio_global: Ratio,
    /// Theta / (d_h - d_w), the benchmark quantity quoted for Phi^4.
    pub holder_ratio: Ratio,
    pub d_s: f64,
    /// alpha_0 = (d_h - d_w)/2, the regularity loss of the Gaussian field.
    pub alpha0: f64,
    /// Largest admissible Wick order: max { n : n < d_h/(d_h - d_w) };
    /// None when unbounded (d_h <= d_w).
    pub n0: Option<u32>,
    pub verdict_local: bool,
    pub verdict_global: bool,
    /// d_s >= 2: renormalization is unavoidable.
    pub singular: bool,
    pub subcritical: bool,
    /// Some comparison held with exact equality; strict verdicts report false.
    pub boundary: bool,
}

fn classify_clamped(d_h: f64, d_w: f64, theta: f64, n: u32) -> RegimeReport {
    let den = d_h - d_w;
    let ratio_a = Ratio::over(d_h + d_w, den);
    let ratio_b = match Ratio::over(2.0 * theta, den) {
        Ratio::Infinite => Ratio::Infinite,
        Ratio::Finite(x) => Ratio::Finite(x + 1.0),
    };
    let ratio_global = Ratio::over(d_w, den);
    let holder_ratio = Ratio::over(theta, den);
    let d_s = 2.0 * d_h / d_w;
    let nf = n as f64;

    let half_a = match ratio_a {
        Ratio::Infinite => Ratio::Infinite,
        Ratio::Finite(x) => Ratio::Finite(0.5 * x),
    };
    let verdict_local = half_a.admits(nf) && ratio_b.admits(nf);
    let verdict_global = verdict_local && n % 2 == 1 && n >= 3 && ratio_global.admits(nf);
    let boundary =
        half_a.on_boundary(nf) || ratio_b.on_boundary(nf) || ratio_global.on_boundary(nf);

    let n0 = if den <= 0.0 {
        None
    } else {
        let threshold = d_h / den;
        let below = if threshold == threshold.floor() {
            threshold - 1.0
        } else {
            threshold.floor()
        };
        Some(below.max(0.0) as u32)
    };

    RegimeReport {
        d_h,
        d_w,
        theta,
        n,
        ratio_a,
        ratio_b,
        ratio_global,
        holder_ratio,
        d_s,
        alpha0: (d_h - d_w) / 2.0,
        n0,
        verdict_local,
        verdict_global,
        singular: d_s >= 2.0,
        subcritical: d_s < 2.0,
        boundary,
    }
}

/// Evaluate the admissibility inequalities for (d_h, d_w, Theta, n).
pub fn classify(d_h: f64, d_w: f64, theta: f64, n: u32) -> Result<RegimeReport> {
    if !(d_h > 0.0 && d_w > 0.0) {
        return Err(Error::Domain(format!(
            "dimensions must be positive, got d_h = {d_h}, d_w = {d_w}"
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, 1]")));
    }
    if n == 0 {
        return Err(Error::Domain("nonlinearity degree n must be >= 1".into()));
    }
    Ok(classify_clamped(d_h, d_w, theta, n))
}

/// d_h thresholds placing the Phi^4 equation (n = 3) in the regime at the
/// given walk dimension and Hoelder exponent.
#[derive(Debug, Clone, Serialize)]
pub struct Phi4Benchmark {
    pub d_w: f64,
    pub theta: f64,
    /// Scaling line d_h < (7/5) d_w.
    pub d_h_scaling: f64,
    /// Hoelder line d_h < d_w + theta.
    pub d_h_holder: f64,
    /// The binding threshold, min of the two.
    pub d_h_threshold: f64,
}

pub fn phi4_benchmark(d_w: f64, theta: f64) -> Result<Phi4Benchmark> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, 1]")));
    }
    if !(d_w >= 2.0) {
        return Err(Error::Domain(format!("d_w = {d_w} must be >= 2")));
    }
    let d_h_scaling = 1.4 * d_w;
    let d_h_holder = d_w + theta;
    Ok(Phi4Benchmark {
        d_w,
        theta,
        d_h_scaling,
        d_h_holder,
        d_h_threshold: d_h_scaling.min(d_h_holder),
    })
}

/// How Theta is assigned across a (d_w, d_h) grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum ThetaPolicy {
    /// The benchmark panel: a fixed Hoelder exponent (typically 1).
    Fixed(f64),
    /// The product-construction panel M = X x X: the minimal exponent
    /// Theta = d_w - d_h/2 of the single factor, clamped into [0, 1].
    ProductMinimal,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub d_w: f64,
    pub d_h: f64,
    pub theta: f64,
    pub n: u32,
    pub d_s: f64,
    pub ratio_a: Ratio,
    pub ratio_b: Ratio,
    pub ratio_global: Ratio,
    pub local: bool,
    pub global: bool,
    pub subcritical: bool,
    pub boundary: bool,
}

/// Verdicts over a rectangular (d_w, d_h) grid; the data behind the two
/// admissible-region panels.
pub fn region_grid(
    d_w_range: (f64, f64),
    d_h_range: (f64, f64),
    theta_policy: ThetaPolicy,
    n: u32,
    resolution: usize,
) -> Result<Vec<GridRow>> {
    if resolution < 2 {
        return Err(Error::Parameter("resolution must be >= 2".into()));
    }
    if !(d_w_range.0 > 0.0 && d_h_range.0 > 0.0) {
        return Err(Error::Parameter("ranges must be positive".into()));
    }
    let mut rows = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let d_w = d_w_range.0
            + (d_w_range.1 - d_w_range.0) * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let d_h = d_h_range.0
                + (d_h_range.1 - d_h_range.0) * j as f64 / (resolution - 1) as f64;
            let theta = match theta_policy {
                ThetaPolicy::Fixed(t) => t,
                // A vanished Hoelder window (theta <= 0) empties the local
                // condition: ratio_b = 1 excludes every n >= 1.
                ThetaPolicy::ProductMinimal => (d_w - d_h / 2.0).clamp(0.0, 1.0),
            };
            let r = classify_clamped(d_h, d_w, theta, n);
            rows.push(GridRow {
                d_w,
                d_h,
                theta,
                n,
                d_s: r.d_s,
                ratio_a: r.ratio_a,
                ratio_b: r.ratio_b,
                ratio_global: r.ratio_global,
                local: r.verdict_local,
                global: r.verdict_global,
                subcritical: r.subcritical,
                boundary: r.boundary,
            });
        }
    }
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out =
        String::from("d_w,d_h,theta,n,ds,ratio_a,ratio_b,ratio_global,local,global,subcritical,boundary\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.d_w,
            r.d_h,
            r.theta,
            r.n,
            r.d_s,
            r.ratio_a,
            r.ratio_b,
            r.ratio_global,
            r.local,
            r.global,
            r.subcritical,
            r.boundary
        ));
    }
    out
}
