//! Finite weighted-graph approximations of catalog fractals.
//!
//! Each catalog entry carries the scaling exponents (d_h, d_w, Theta) and the
//! per-level renormalization factors that make the graph Laplacian approximate
//! the fractal diffusion: conductances scale by time_renorm/measure_renorm per
//! level, cell measures by 1/measure_renorm. All graphs are normalized to
//! unit diameter and unit total measure.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub const LN2: f64 = std::f64::consts::LN_2;

/// Scaling exponents and per-level renormalization factors of a fractal.
#[derive(Debug, Clone, Serialize)]
pub struct FractalSpec {
    pub name: String,
    /// Hausdorff dimension.
    pub d_h: f64,
    /// Walk dimension (2 = Gaussian diffusion, > 2 sub-Gaussian).
    pub d_w: f64,
    /// Heat-kernel spatial Hoelder exponent, in (0, 1].
    pub theta: f64,
    /// Laplacian time-scaling factor per refinement level.
    pub time_renorm: f64,
    /// Cell-measure factor per refinement level.
    pub measure_renorm: f64,
}

impl FractalSpec {
    /// Spectral dimension d_s = 2 d_h / d_w; derived, never stored.
    pub fn d_s(&self) -> f64 {
        2.0 * self.d_h / self.d_w
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Construction(format!(
                "theta = {} outside (0, 1]",
                self.theta
            )));
        }
        if !(2.0 <= self.d_w && self.d_w <= self.d_h + 1.0 + 1e-12) {
            return Err(Error::Construction(format!(
                "exponents ({}, {}) violate 2 <= d_w <= 1 + d_h",
                self.d_h, self.d_w
            )));
        }
        Ok(())
    }
}

fn spec_sg() -> FractalSpec {
    let d_h = 3f64.ln() / LN2;
    let d_w = 5f64.ln() / LN2;
    FractalSpec {
        name: "sg".into(),
        d_h,
        d_w,
        theta: d_w - d_h,
        time_renorm: 5.0,
        measure_renorm: 3.0,
    }
}

fn spec_vicsek() -> FractalSpec {
    let r = 5f64.ln() / 3f64.ln();
    FractalSpec {
        name: "vicsek".into(),
        d_h: r,
        d_w: r + 1.0,
        theta: 1.0,
        time_renorm: 15.0,
        measure_renorm: 5.0,
    }
}

fn spec_torus2d() -> FractalSpec {
    FractalSpec {
        name: "torus2d".into(),
        d_h: 2.0,
        d_w: 2.0,
        theta: 1.0,
        time_renorm: 4.0,
        measure_renorm: 4.0,
    }
}

fn spec_interval() -> FractalSpec {
    FractalSpec {
        name: "interval".into(),
        d_h: 1.0,
        d_w: 2.0,
        theta: 1.0,
        time_renorm: 4.0,
        measure_renorm: 2.0,
    }
}

fn spec_circle() -> FractalSpec {
    FractalSpec {
        name: "circle".into(),
        ..spec_interval()
    }
}

fn product_spec(a: &FractalSpec, b: &FractalSpec, name: Option<&str>) -> FractalSpec {
    FractalSpec {
        name: name
            .map(str::to_owned)
            .unwrap_or_else(|| format!("{}x{}", a.name, b.name)),
        d_h: a.d_h + b.d_h,
        d_w: a.d_w,
        theta: a.theta.min(b.theta),
        time_renorm: a.time_renorm,
        measure_renorm: a.measure_renorm * b.measure_renorm,
    }
}

pub const CATALOG_NAMES: [&str; 6] = ["sg", "vicsek", "torus2d", "interval", "sg2", "vicsek2"];

/// Look up a catalog fractal (or registered product) by name.
pub fn catalog_lookup(name: &str) -> Result<FractalSpec> {
    let spec = match name {
        "sg" => spec_sg(),
        "vicsek" => spec_vicsek(),
        "torus2d" => spec_torus2d(),
        "interval" => spec_interval(),
        "sg2" => product_spec(&spec_sg(), &spec_sg(), Some("sg2")),
        "vicsek2" => product_spec(&spec_vicsek(), &spec_vicsek(), Some("vicsek2")),
        _ => {
            return Err(Error::Catalog {
                name: name.into(),
                known: CATALOG_NAMES.join(", "),
            })
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Level-`level` weighted graph approximating a catalog fractal.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug)]
pub struct GraphApproximation {
    pub spec: FractalSpec,
    pub level: u32,
    /// Undirected edges (u, v, conductance), each stored once.
    pub edges: Vec<(u32, u32, f64)>,
    pub vertex_measure: Vec<f64>,
    /// Embedding coordinates; only used to build smooth test fields.
    pub positions: Vec<Vec<f64>>,
    /// time_renorm^level, the Laplacian pre-scaling already folded into the
    /// conductances and measures.
    pub laplacian_scale: f64,
    /// Graph diameter in hops; one hop has metric length 1/hop_diameter.
    pub hop_diameter: u32,
    /// Kronecker factors for product spaces.
    pub factors: Option<(Arc<GraphApproximation>, Arc<GraphApproximation>)>,
    adjacency: Vec<Vec<(u32, f64)>>,
}

impl GraphApproximation {
    pub(crate) fn assemble(
        spec: FractalSpec,
        level: u32,
        edges: Vec<(u32, u32, f64)>,
        vertex_measure: Vec<f64>,
        positions: Vec<Vec<f64>>,
        factors: Option<(Arc<GraphApproximation>, Arc<GraphApproximation>)>,
        hop_diameter: Option<u32>,
    ) -> Result<Self> {
        let n = vertex_measure.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v, c) in &edges {
            if u as usize >= n || v as usize >= n || u == v {
                return Err(Error::Construction(format!("bad edge ({u}, {v})")));
            }
            if !(c > 0.0) {
                return Err(Error::Construction(format!(
                    "nonpositive conductance on edge ({u}, {v})"
                )));
            }
            adjacency[u as usize].push((v, c));
            adjacency[v as usize].push((u, c));
        }
        if vertex_measure.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::Construction("nonpositive vertex measure".into()));
        }
        let mut g = GraphApproximation {
            laplacian_scale: spec.time_renorm.powi(level as i32),
            spec,
            level,
            edges,
            vertex_measure,
            positions,
            hop_diameter: 0,
            factors,
            adjacency,
        };
        let hops = g.bfs_hops(0);
        if hops.iter().any(|&h| h == u32::MAX) {
            return Err(Error::Construction("graph is not connected".into()));
        }
        g.hop_diameter = match hop_diameter {
            Some(d) => d,
            // Two BFS sweeps give the exact diameter on these self-similar
            // graphs (verified against all-pairs at low levels in tests).
            None => {
                let far = hops.iter().enumerate().max_by_key(|(_, &h)| h).unwrap().0;
                *g.bfs_hops(far as u32).iter().max().unwrap()
            }
        };
        if g.hop_diameter == 0 {
            return Err(Error::Construction("graph has a single vertex".into()));
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_measure.len()
    }

    pub fn total_measure(&self) -> f64 {
        self.vertex_measure.iter().sum()
    }

    /// Mesh size: the metric length of one hop after unit-diameter rescaling.
    pub fn mesh(&self) -> f64 {
        1.0 / self.hop_diameter as f64
    }

    pub fn neighbors(&self, x: u32) -> &[(u32, f64)] {
        &self.adjacency[x as usize]
    }

    /// Hop counts from `from` to every vertex (u32::MAX = unreachable).
    pub fn bfs_hops(&self, from: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[from as usize] = 0;
        queue.push_back(from);
        while let Some(x) = queue.pop_front() {
            let d = dist[x as usize];
            for &(y, _) in &self.adjacency[x as usize] {
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = d + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Shortest-path distances from `from`, rescaled to unit diameter.
    pub fn metric_row(&self, from: u32) -> Vec<f64> {
        let mesh = self.mesh();
        self.bfs_hops(from)
            .into_iter()
            .map(|h| h as f64 * mesh)
            .collect()
    }

    pub fn metric(&self, x: u32, y: u32) -> f64 {
        self.bfs_hops(x)[y as usize] as f64 * self.mesh()
    }

    /// Conductance Laplacian: (C f)(x) = sum_y c_xy (f(x) - f(y)).
    pub fn apply_conductance_laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_count()];
        for (x, row) in self.adjacency.iter().enumerate() {
            let mut acc = 0.0;
            for &(y, c) in row {
                acc += c * (f[x] - f[y as usize]);
            }
            out[x] = acc;
        }
        out
    }

    /// Generator L = (1/mu) C, nonnegative and self-adjoint in the
    /// measure-weighted inner product.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.apply_conductance_laplacian(f);
        for (o, m) in out.iter_mut().zip(&self.vertex_measure) {
            *o /= m;
        }
        out
    }

    /// Measure-weighted inner product <f, g>_mu.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.vertex_measure)
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    /// L^p norm with respect to mu; p = infinity is the sup norm.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            f.iter().fold(0.0, |acc, v| acc.max(v.abs()))
        } else {
            self.vertex_measure
                .iter()
                .zip(f)
                .map(|(m, v)| v.abs().powf(p) * m)
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }

    /// Human-readable adjacency dump.
    pub fn adjacency_dump(&self) -> GraphDump {
        GraphDump {
            name: self.spec.name.clone(),
            level: self.level,
            vertex_count: self.vertex_count(),
            hop_diameter: self.hop_diameter,
            laplacian_scale: self.laplacian_scale,
            vertex_measure: self.vertex_measure.clone(),
            edges: self.edges.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GraphDump {
    pub name: String,
    pub level: u32,
    pub vertex_count: usize,
    pub hop_diameter: u32,
    pub laplacian_scale: f64,
    pub vertex_measure: Vec<f64>,
    pub edges: Vec<(u32, u32, f64)>,
}

fn max_level_for(name: &str) -> u32 {
    match name {
        "sg" => 8,
        "vicsek" => 6,
        "torus2d" => 8,
        "interval" | "circle" => 16,
        "sg2" => 7,
        "vicsek2" => 5,
        _ => 6,
    }
}

/// Build the level-`level` approximating graph for a catalog fractal.
pub fn build_space(spec: &FractalSpec, level: u32) -> Result<GraphApproximation> {
    let max = max_level_for(&spec.name);
    if level > max {
        return Err(Error::Resource(format!(
            "level {level} exceeds maximum {max} for {:?}",
            spec.name
        )));
    }
    match spec.name.as_str() {
        "sg" => build_sg(level),
        "vicsek" => build_vicsek(level),
        "interval" => build_interval(level),
        "circle" => build_circle(level),
        "torus2d" => {
            if level == 0 {
                return Err(Error::Construction(
                    "torus2d needs level >= 1 (two points per direction)".into(),
                ));
            }
            let c = Arc::new(build_circle(level)?);
            let mut g = product_space_arc(c.clone(), c)?;
            g.spec = spec_torus2d();
            Ok(g)
        }
        "sg2" => {
            let f = Arc::new(build_sg(level)?);
            let mut g = product_space_arc(f.clone(), f)?;
            g.spec = catalog_lookup("sg2")?;
            Ok(g)
        }
        "vicsek2" => {
            let f = Arc::new(build_vicsek(level)?);
            let mut g = product_space_arc(f.clone(), f)?;
            g.spec = catalog_lookup("vicsek2")?;
            Ok(g)
        }
        other => Err(Error::Catalog {
            name: other.into(),
            known: CATALOG_NAMES.join(", "),
        }),
    }
}

/// Cartesian product with Kronecker-sum Laplacian.
pub fn product_space(a: GraphApproximation, b: GraphApproximation) -> Result<GraphApproximation> {
    product_space_arc(Arc::new(a), Arc::new(b))
}

pub fn product_space_arc(
    a: Arc<GraphApproximation>,
    b: Arc<GraphApproximation>,
) -> Result<GraphApproximation> {
    if (a.spec.time_renorm - b.spec.time_renorm).abs() > 1e-12 || a.level != b.level {
        return Err(Error::Construction(format!(
            "incompatible scaling: ({}, level {}) vs ({}, level {})",
            a.spec.name, a.level, b.spec.name, b.level
        )));
    }
    if (a.spec.d_w - b.spec.d_w).abs() > 1e-12 {
        return Err(Error::Construction(
            "product factors must share the walk dimension".into(),
        ));
    }
    let (na, nb) = (a.vertex_count(), b.vertex_count());
    let idx = |x: usize, y: usize| (x * nb + y) as u32;

    let mut measure = Vec::with_capacity(na * nb);
    let mut positions = Vec::with_capacity(na * nb);
    for x in 0..na {
        for y in 0..nb {
            measure.push(a.vertex_measure[x] * b.vertex_measure[y]);
            let mut p = a.positions[x].clone();
            p.extend_from_slice(&b.positions[y]);
            positions.push(p);
        }
    }
    // Conductances are weighted by the complementary factor's vertex measure
    // so that the conductance form divided by the product measure realizes
    // L_a (x) I + I (x) L_b.
    let mut edges = Vec::with_capacity(a.edges.len() * nb + b.edges.len() * na);
    for &(u, v, c) in &a.edges {
        for y in 0..nb {
            edges.push((idx(u as usize, y), idx(v as usize, y), c * b.vertex_measure[y]));
        }
    }
    for &(w, z, c) in &b.edges {
        for x in 0..na {
            edges.push((idx(x, w as usize), idx(x, z as usize), c * a.vertex_measure[x]));
        }
    }
    let spec = product_spec(&a.spec, &b.spec, None);
    let level = a.level;
    let hop_diameter = a.hop_diameter + b.hop_diameter;
    GraphApproximation::assemble(
        spec,
        level,
        edges,
        measure,
        positions,
        Some((a, b)),
        Some(hop_diameter),
    )
}

// ---------------------------------------------------------------------------
// Sierpinski gasket: level-m triangle graph. Lattice coordinates (i, j) count
// steps along the directions (1, 0) and (1/2, sqrt(3)/2), scaled by 2^m.
// ---------------------------------------------------------------------------

fn build_sg(level: u32) -> Result<GraphApproximation> {
    let scale = 1i64 << level;
    let mut cells = vec![[(0i64, 0i64), (scale, 0), (0, scale)]];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cells.len() * 3);
        for [a, b, c] in cells {
            let mab = ((a.0 + b.0) / 2, (a.1 + b.1) / 2);
            let mac = ((a.0 + c.0) / 2, (a.1 + c.1) / 2);
            let mbc = ((b.0 + c.0) / 2, (b.1 + c.1) / 2);
            next.push([a, mab, mac]);
            next.push([mab, b, mbc]);
            next.push([mac, mbc, c]);
        }
        cells = next;
    }
    finish_cell_graph(spec_sg(), level, &cells, scale, (5f64 / 3.0).powi(level as i32))
}

// ---------------------------------------------------------------------------
// Vicsek fractal: 5-map cross IFS. Integer coordinates with a level-m cell
// spanning 2*3^m units; corners sit on even coordinates, centers on odd.
// ---------------------------------------------------------------------------

fn build_vicsek(level: u32) -> Result<GraphApproximation> {
    let mut size = 2i64;
    for _ in 0..level {
        size *= 3;
    }
    let mut cells = vec![((0i64, 0i64), size)];
    while cells[0].1 > 2 {
        let mut next = Vec::with_capacity(cells.len() * 5);
        for ((ox, oy), s) in cells {
            let c = s / 3;
            let far = s - c;
            for (dx, dy) in [(0, 0), (far, 0), (0, far), (far, far), (far / 2, far / 2)] {
                next.push(((ox + dx, oy + dy), c));
            }
        }
        cells = next;
    }
    // A base cell is a 4-edge star: center (o+1, o+1) joined to 4 corners.
    let star: Vec<[(i64, i64); 2]> = cells
        .iter()
        .flat_map(|&((ox, oy), _)| {
            let ctr = (ox + 1, oy + 1);
            [
                [ctr, (ox, oy)],
                [ctr, (ox + 2, oy)],
                [ctr, (ox, oy + 2)],
                [ctr, (ox + 2, oy + 2)],
            ]
        })
        .collect();
    let conductance = 3f64.powi(level as i32);
    let cell_measure = 5f64.powi(-(level as i32)) / 5.0;

    let mut index: HashMap<(i64, i64), u32> = HashMap::new();
    let mut measure = Vec::new();
    let mut positions = Vec::new();
    let mut edges = Vec::new();
    let intern = |p: (i64, i64), index: &mut HashMap<(i64, i64), u32>,
                  measure: &mut Vec<f64>,
                  positions: &mut Vec<Vec<f64>>| {
        *index.entry(p).or_insert_with(|| {
            measure.push(0.0);
            positions.push(vec![p.0 as f64 / size as f64, p.1 as f64 / size as f64]);
            (measure.len() - 1) as u32
        })
    };
    for [a, b] in star {
        let ia = intern(a, &mut index, &mut measure, &mut positions);
        let ib = intern(b, &mut index, &mut measure, &mut positions);
        edges.push((ia, ib, conductance));
    }
    // Each cell splits its mass evenly over its five vertices.
    for &((ox, oy), _) in &cells {
        for p in [
            (ox, oy),
            (ox + 2, oy),
            (ox, oy + 2),
            (ox + 2, oy + 2),
            (ox + 1, oy + 1),
        ] {
            measure[index[&p] as usize] += cell_measure;
        }
    }
    GraphApproximation::assemble(spec_vicsek(), level, edges, measure, positions, None, None)
}

fn finish_cell_graph(
    spec: FractalSpec,
    level: u32,
    cells: &[[(i64, i64); 3]],
    scale: i64,
    conductance: f64,
) -> Result<GraphApproximation> {
    let cell_measure = (spec.measure_renorm.powi(level as i32)).recip() / 3.0;
    let mut index: HashMap<(i64, i64), u32> = HashMap::new();
    let mut measure = Vec::new();
    let mut positions = Vec::new();
    let mut edges = Vec::new();
    for cell in cells {
        let mut ids = [0u32; 3];
        for (k, &p) in cell.iter().enumerate() {
            let id = *index.entry(p).or_insert_with(|| {
                measure.push(0.0);
                // Straighten lattice coordinates into the plane.
                positions.push(vec![
                    (p.0 as f64 + 0.5 * p.1 as f64) / scale as f64,
                    (3f64.sqrt() / 2.0) * p.1 as f64 / scale as f64,
                ]);
                (measure.len() - 1) as u32
            });
            ids[k] = id;
            measure[id as usize] += cell_measure;
        }
        edges.push((ids[0], ids[1], conductance));
        edges.push((ids[0], ids[2], conductance));
        edges.push((ids[1], ids[2], conductance));
    }
    GraphApproximation::assemble(spec, level, edges, measure, positions, None, None)
}

// ---------------------------------------------------------------------------
// Interval and circle: 1-d second-difference graphs, N = 2^level segments.
// ---------------------------------------------------------------------------

fn build_interval(level: u32) -> Result<GraphApproximation> {
    let n = 1usize << level;
    let c = n as f64;
    let edges = (0..n).map(|i| (i as u32, i as u32 + 1, c)).collect();
    let mut measure = vec![1.0 / n as f64; n + 1];
    measure[0] /= 2.0;
    measure[n] /= 2.0;
    let positions = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
    GraphApproximation::assemble(spec_interval(), level, edges, measure, positions, None, None)
}

fn build_circle(level: u32) -> Result<GraphApproximation> {
    let n = 1usize << level;
    if n < 2 {
        return Err(Error::Construction("circle needs level >= 1".into()));
    }
    let c = n as f64;
    let edges: Vec<(u32, u32, f64)> = if n == 2 {
        // Two parallel edges collapse into one of twice the conductance.
        vec![(0, 1, 2.0 * c)]
    } else {
        (0..n)
            .map(|i| (i as u32, ((i + 1) % n) as u32, c))
            .collect()
    };
    let measure = vec![1.0 / n as f64; n];
    let positions = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
    GraphApproximation::assemble(spec_circle(), level, edges, measure, positions, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn catalog_values_match_known_exponents() {
        let v = catalog_lookup("vicsek").unwrap();
        assert_relative_eq!(v.d_h, 1.4649735, epsilon = 1e-6);
        assert_relative_eq!(v.d_w, 2.4649735, epsilon = 1e-6);
        assert_eq!(v.theta, 1.0);

        let s = catalog_lookup("sg").unwrap();
        assert_relative_eq!(s.d_h, 1.5849625, epsilon = 1e-6);
        assert_relative_eq!(s.d_w, 2.3219281, epsilon = 1e-6);
        assert_relative_eq!(s.theta, 0.7369656, epsilon = 1e-6);

        let t = catalog_lookup("torus2d").unwrap();
        assert_eq!((t.d_h, t.d_w, t.theta), (2.0, 2.0, 1.0));

        let err = catalog_lookup("koch").unwrap_err();
        assert!(err.to_string().contains("vicsek"));
    }

    #[test]
    fn sg_counts_match_combinatorial_oracle() {
        // |V_m| = 3 (3^m + 1) / 2, |E_m| = 3^{m+1}.
        for m in 0..=4u32 {
            let g = build_space(&catalog_lookup("sg").unwrap(), m).unwrap();
            let expect_v = 3 * (3usize.pow(m) + 1) / 2;
            assert_eq!(g.vertex_count(), expect_v, "level {m}");
            assert_eq!(g.edges.len(), 3usize.pow(m + 1), "level {m}");
        }
    }

    #[test]
    fn vicsek_counts() {
        for m in 0..=3u32 {
            let g = build_space(&catalog_lookup("vicsek").unwrap(), m).unwrap();
            assert_eq!(g.vertex_count(), 4 * 5usize.pow(m) + 1, "level {m}");
            assert_eq!(g.edges.len(), 4 * 5usize.pow(m), "level {m}");
        }
    }

    #[test]
    fn torus_grid_combinatorics() {
        let g = build_space(&catalog_lookup("torus2d").unwrap(), 4).unwrap();
        assert_eq!(g.vertex_count(), 256);
        assert_eq!(g.edges.len(), 512);
        assert!(g.factors.is_some());
    }

    #[test]
    fn measure_normalization_and_kernel() {
        for name in CATALOG_NAMES {
            let level = if name == "torus2d" { 2 } else { 1 };
            let g = build_space(&catalog_lookup(name).unwrap(), level).unwrap();
            assert!(g.total_measure() >= 1.0 - 1e-12, "{name}");
            assert_relative_eq!(g.total_measure(), 1.0, epsilon = 1e-12);
            // Constant vector in the kernel of the conductance Laplacian.
            let ones = vec![1.0; g.vertex_count()];
            let lap = g.apply_conductance_laplacian(&ones);
            for v in lap {
                assert!(v.abs() < 1e-12, "{name}: row sum {v}");
            }
        }
    }

    #[test]
    fn unit_diameter_normalization() {
        let g = build_space(&catalog_lookup("sg").unwrap(), 3).unwrap();
        assert_eq!(g.hop_diameter, 8);
        let row = g.metric_row(0);
        let max = row.iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(max, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_spec_exponents() {
        let s2 = catalog_lookup("sg2").unwrap();
        assert_relative_eq!(s2.d_h, 3.1699250, epsilon = 1e-6);
        assert_relative_eq!(s2.d_w, 2.3219281, epsilon = 1e-6);
        assert_relative_eq!(s2.theta, 0.7369656, epsilon = 1e-6);

        let a = build_space(&catalog_lookup("sg").unwrap(), 1).unwrap();
        let b = build_space(&catalog_lookup("sg").unwrap(), 1).unwrap();
        let p = product_space(a, b).unwrap();
        assert_eq!(p.vertex_count(), 36);
    }

    #[test]
    fn incompatible_products_rejected() {
        let a = build_space(&catalog_lookup("sg").unwrap(), 1).unwrap();
        let b = build_space(&catalog_lookup("vicsek").unwrap(), 1).unwrap();
        assert!(product_space(a, b).is_err());

        let a = build_space(&catalog_lookup("sg").unwrap(), 1).unwrap();
        let b = build_space(&catalog_lookup("sg").unwrap(), 2).unwrap();
        assert!(product_space(a, b).is_err());
    }

    #[test]
    fn level_guard() {
        let err = build_space(&catalog_lookup("sg").unwrap(), 40).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
