//! Nystrom quadrature mesh built from a chart atlas.

pub mod cheb;
pub mod polar;

use crate::geometry::{chart_eval, GeometryError, GeometryPoint, Surface};
use cheb::ChebTables;
use nalgebra::Vector3;
use sha2::{Digest, Sha256};

/// One tensor-product Chebyshev patch of a chart.
#[derive(Clone, Debug)]
pub struct Patch {
    pub id: usize,
    pub chart: usize,
    pub component: usize,
    /// Parameter sub-rectangle [u0, u1, v0, v1].
    pub rect: [f64; 4],
    /// Global index of the first of the q*q nodes of this patch.
    pub node_base: usize,
    pub center: Vector3<f64>,
    pub diameter: f64,
}

/// A quadrature node: geometry, area-weighted quadrature weight, ownership.
#[derive(Clone, Debug)]
pub struct QuadNode {
    pub geom: GeometryPoint,
    pub weight: f64,
    pub patch: usize,
    pub uv: (f64, f64),
}

/// How patches are distributed over the charts.
#[derive(Clone, Debug)]
pub enum PatchCounts {
    /// Same (n_u, n_v) split on every chart.
    Uniform(usize, usize),
    /// One (n_u, n_v) pair per chart.
    PerChart(Vec<(usize, usize)>),
}

/// Mesh grading knobs; breakpoints are drawn from the equal-mass partition of
/// the density 1 + sc * |H|/max|H| + ss * d_min/d, sampled along each chart
/// direction (d is the distance to `source`). Zero strengths mean uniform.
#[derive(Clone, Debug, Default)]
pub struct GradingLaw {
    pub strength_curvature: f64,
    pub strength_source: f64,
    pub source: Option<Vector3<f64>>,
}

#[derive(Clone, Debug)]
pub struct MeshConfig {
    pub q: usize,
    pub patches: PatchCounts,
    pub grading: Option<GradingLaw>,
}

/// Quadrature mesh: deterministic node ordering for a given config.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub surface: Surface,
    pub q: usize,
    pub cheb: ChebTables,
    pub patches: Vec<Patch>,
    pub nodes: Vec<QuadNode>,
    /// Node index ranges per connected component.
    pub component_ranges: Vec<std::ops::Range<usize>>,
    /// Achieved max patch diameter.
    pub h_max: f64,
    pub resolution: String,
    pub fingerprint: u64,
}

pub fn build_mesh(surface: &Surface, config: &MeshConfig) -> Result<SurfaceMesh, GeometryError> {
    assert!(config.q >= 4, "q >= 4 required");
    let cheb = ChebTables::new(config.q);
    let q = config.q;
    let counts: Vec<(usize, usize)> = match &config.patches {
        PatchCounts::Uniform(nu, nv) => vec![(*nu, *nv); surface.charts.len()],
        PatchCounts::PerChart(v) => {
            assert_eq!(v.len(), surface.charts.len(), "one patch count per chart");
            v.clone()
        }
    };
    assert!(counts.iter().all(|&(a, b)| a >= 1 && b >= 1));

    let mut patches = Vec::new();
    let mut nodes = Vec::new();

    for (chart_idx, chart) in surface.charts.iter().enumerate() {
        let (nu, nv) = counts[chart_idx];
        let [u0, u1, v0, v1] = chart.rect;
        let ub = breakpoints(surface, chart_idx, u0, u1, nu, config.grading.as_ref(), true);
        let vb = breakpoints(surface, chart_idx, v0, v1, nv, config.grading.as_ref(), false);
        for iu in 0..nu {
            for iv in 0..nv {
                let rect = [ub[iu], ub[iu + 1], vb[iv], vb[iv + 1]];
                let node_base = nodes.len();
                let (hu, hv) = (0.5 * (rect[1] - rect[0]), 0.5 * (rect[3] - rect[2]));
                let (cu, cv) = (0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]));
                for i in 0..q {
                    let u = cu + hu * cheb.nodes[i];
                    for j in 0..q {
                        let v = cv + hv * cheb.nodes[j];
                        let geom = chart_eval(surface, chart_idx, u, v)?;
                        let weight = cheb.weights[i] * hu * cheb.weights[j] * hv * geom.jacobian;
                        nodes.push(QuadNode {
                            geom,
                            weight,
                            patch: patches.len(),
                            uv: (u, v),
                        });
                    }
                }
                let mut extent: Vec<Vector3<f64>> =
                    nodes[node_base..].iter().map(|n| n.geom.position).collect();
                for &(eu, ev) in &[
                    (rect[0], rect[2]),
                    (rect[0], rect[3]),
                    (rect[1], rect[2]),
                    (rect[1], rect[3]),
                    (cu, rect[2]),
                    (cu, rect[3]),
                    (rect[0], cv),
                    (rect[1], cv),
                ] {
                    extent.push(chart_eval(surface, chart_idx, eu, ev)?.position);
                }
                let center = extent.iter().sum::<Vector3<f64>>() / extent.len() as f64;
                let mut diameter: f64 = 0.0;
                for a in 0..extent.len() {
                    for b in a + 1..extent.len() {
                        diameter = diameter.max((extent[a] - extent[b]).norm());
                    }
                }
                patches.push(Patch {
                    id: patches.len(),
                    chart: chart_idx,
                    component: chart.component,
                    rect,
                    node_base,
                    center,
                    diameter,
                });
            }
        }
    }

    // Component ranges from the (component-sorted) chart ordering.
    let mut ranges = Vec::new();
    for c in 0..surface.n_components {
        let lo = nodes
            .iter()
            .position(|n| patches[n.patch].component == c)
            .expect("component without nodes");
        let hi = nodes.len()
            - nodes
                .iter()
                .rev()
                .position(|n| patches[n.patch].component == c)
                .unwrap();
        ranges.push(lo..hi);
    }

    let h_max = patches.iter().map(|p| p.diameter).fold(0.0, f64::max);
    let resolution = format!(
        "q={q};patches={:?};grading={}",
        counts,
        config.grading.as_ref().map_or("none".to_string(), |g| format!(
            "sc={},ss={}",
            g.strength_curvature, g.strength_source
        ))
    );

    let mut hasher = Sha256::new();
    hasher.update(q.to_le_bytes());
    for n in &nodes {
        for c in 0..3 {
            hasher.update(n.geom.position[c].to_le_bytes());
        }
        hasher.update(n.weight.to_le_bytes());
    }
    let digest = hasher.finalize();
    let fingerprint = u64::from_le_bytes(digest[..8].try_into().unwrap());

    Ok(SurfaceMesh {
        surface: surface.clone(),
        q,
        cheb,
        patches,
        nodes,
        component_ranges: ranges,
        h_max,
        resolution,
        fingerprint,
    })
}

/// Equal-mass breakpoints of the grading density along one chart direction.
fn breakpoints(
    surface: &Surface,
    chart: usize,
    t0: f64,
    t1: f64,
    n: usize,
    grading: Option<&GradingLaw>,
    along_u: bool,
) -> Vec<f64> {
    let uniform = |n: usize| -> Vec<f64> {
        (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect()
    };
    let Some(g) = grading else { return uniform(n) };
    if g.strength_curvature == 0.0 && g.strength_source == 0.0 {
        return uniform(n);
    }
    let rect = surface.charts[chart].rect;
    let mid = if along_u { 0.5 * (rect[2] + rect[3]) } else { 0.5 * (rect[0] + rect[1]) };
    let m = 256;
    let samples: Vec<GeometryPoint> = (0..=m)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / m as f64;
            let (u, v) = if along_u { (t, mid) } else { (mid, t) };
            chart_eval(surface, chart, u, v).expect("grading sample")
        })
        .collect();
    let hmax = samples.iter().map(|p| p.mean_curvature.abs()).fold(0.0, f64::max);
    let dmin = g
        .source
        .map(|s| samples.iter().map(|p| (p.position - s).norm()).fold(f64::INFINITY, f64::min))
        .unwrap_or(1.0);
    let density: Vec<f64> = samples
        .iter()
        .map(|p| {
            let mut d = 1.0;
            if hmax > 0.0 {
                d += g.strength_curvature * p.mean_curvature.abs() / hmax;
            }
            if let Some(s) = g.source {
                d += g.strength_source * dmin / (p.position - s).norm();
            }
            d
        })
        .collect();
    // cumulative trapezoid mass, then inverse CDF at equal quantiles
    let mut cum = vec![0.0; m + 1];
    for i in 1..=m {
        cum[i] = cum[i - 1] + 0.5 * (density[i] + density[i - 1]);
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n + 1);
    out.push(t0);
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        let idx = cum.partition_point(|&c| c < target).min(m);
        let (c0, c1) = (cum[idx - 1], cum[idx]);
        let frac = (target - c0) / (c1 - c0);
        out.push(t0 + (t1 - t0) * ((idx - 1) as f64 + frac) / m as f64);
    }
    out.push(t1);
    out
}

impl SurfaceMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn total_area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Component index of a node.
    pub fn node_component(&self, node: usize) -> usize {
        self.patches[self.nodes[node].patch].component
    }

    /// Area-weighted centroid of the sampled surface points of one component.
    pub fn component_centroid(&self, component: usize) -> Vector3<f64> {
        let r = &self.component_ranges[component];
        let mut num = Vector3::zeros();
        let mut den = 0.0;
        for n in &self.nodes[r.clone()] {
            num += n.geom.position * n.weight;
            den += n.weight;
        }
        num / den
    }

    /// Patches whose distance to the target is below factor * diameter.
    pub fn near_panels(&self, target: &Vector3<f64>, factor: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for p in &self.patches {
            let coarse = (target - p.center).norm();
            if coarse > (factor + 1.0) * p.diameter {
                continue;
            }
            let q2 = self.q * self.q;
            let mut dmin = f64::INFINITY;
            for n in &self.nodes[p.node_base..p.node_base + q2] {
                dmin = dmin.min((target - n.geom.position).norm());
            }
            if dmin < factor * p.diameter {
                out.push(p.id);
            }
        }
        out
    }
}

/// Per-target lists of panels needing near-singular treatment.
pub fn nearfield_targets(
    mesh: &SurfaceMesh,
    targets: &[Vector3<f64>],
    radius_factor: f64,
) -> Vec<Vec<usize>> {
    assert!(radius_factor > 0.0);
    targets.iter().map(|t| mesh.near_panels(t, radius_factor)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SurfaceKind;
    use crate::kernels::{PairGeom, RadialParts};

    fn sphere_mesh(n: usize, q: usize) -> SurfaceMesh {
        let s = Surface::new(SurfaceKind::UnitSphere { radius: 1.0 }).unwrap();
        build_mesh(&s, &MeshConfig { q, patches: PatchCounts::Uniform(n, n), grading: None })
            .unwrap()
    }

    #[test]
    fn sphere_area_and_vector_moments() {
        let mesh = sphere_mesh(2, 8);
        let area = mesh.total_area();
        assert!((area - 4.0 * std::f64::consts::PI).abs() < 1e-8, "area {area}");
        // closed surface: integral of nu vanishes
        let mut nsum = Vector3::zeros();
        let mut moment = nalgebra::Matrix3::zeros();
        for n in &mesh.nodes {
            nsum += n.geom.normal * n.weight;
            moment += n.geom.normal * n.geom.normal.transpose() * n.weight;
        }
        assert!(nsum.norm() < 1e-8);
        // integral of nu nu^T = 4 pi / 3 I on the unit sphere
        let expect = nalgebra::Matrix3::identity() * (4.0 * std::f64::consts::PI / 3.0);
        assert!((moment - expect).norm() < 1e-7);
    }

    #[test]
    fn torus_area() {
        let s = Surface::new(SurfaceKind::Torus { major: 1.0, minor: 0.5 }).unwrap();
        let mesh = build_mesh(
            &s,
            &MeshConfig { q: 8, patches: PatchCounts::Uniform(8, 4), grading: None },
        )
        .unwrap();
        let area = mesh.total_area();
        let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((area - exact).abs() < 1e-6, "area {area} vs {exact}");
        let mut nsum = Vector3::zeros();
        for n in &mesh.nodes {
            nsum += n.geom.normal * n.weight;
        }
        assert!(nsum.norm() < 1e-8);
    }

    #[test]
    fn discrete_gauss_identity_marks_interior_points() {
        // integral of dG0/dnu(y) over a closed component is -1 seen from inside,
        // 0 seen from outside; also validates chart orientation.
        for (kind, nu, nv, tol) in [
            (SurfaceKind::UnitSphere { radius: 1.0 }, 2, 2, 1e-8),
            (SurfaceKind::Torus { major: 1.0, minor: 0.5 }, 8, 4, 1e-6),
            (SurfaceKind::Bean, 3, 3, 1e-6),
            (SurfaceKind::Flower, 3, 3, 1e-6),
        ] {
            let s = Surface::new(kind.clone()).unwrap();
            let mesh = build_mesh(
                &s,
                &MeshConfig { q: 8, patches: PatchCounts::Uniform(nu, nv), grading: None },
            )
            .unwrap();
            let inside = s.interior_candidates[0];
            let gauss = |x: &Vector3<f64>| -> f64 {
                mesh.nodes
                    .iter()
                    .map(|n| {
                        let p = PairGeom::new(x, &n.geom.position);
                        let rad = RadialParts::new(0.0, p.r);
                        rad.dnu_y(&p, &n.geom.normal).re * n.weight
                    })
                    .sum()
            };
            let gi = gauss(&inside);
            assert!((gi + 1.0).abs() < tol, "{kind:?}: interior gauss {gi}");
            let go = gauss(&Vector3::new(9.0, 4.0, 7.0));
            assert!(go.abs() < 1e-10, "{kind:?}: exterior gauss {go}");
        }
    }

    #[test]
    fn meshes_are_deterministic() {
        let a = sphere_mesh(2, 6);
        let b = sphere_mesh(2, 6);
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_eq!(a.h_max, b.h_max);
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            assert_eq!(x.geom.position, y.geom.position);
            assert_eq!(x.weight, y.weight);
        }
    }

    #[test]
    fn weights_positive_and_patch_ownership() {
        let mesh = sphere_mesh(3, 5);
        assert!(mesh.nodes.iter().all(|n| n.weight > 0.0));
        for (i, p) in mesh.patches.iter().enumerate() {
            for n in &mesh.nodes[p.node_base..p.node_base + 25] {
                assert_eq!(n.patch, i);
            }
        }
        assert_eq!(mesh.component_ranges, vec![0..mesh.n_nodes()]);
    }

    #[test]
    fn nearfield_lists() {
        let mesh = sphere_mesh(2, 6);
        let far = nearfield_targets(&mesh, &[Vector3::new(10.0, 0.0, 0.0)], 1.5);
        assert!(far[0].is_empty());
        // slightly above the north pole
        let p = mesh
            .nodes
            .iter()
            .max_by(|a, b| a.geom.position.z.total_cmp(&b.geom.position.z))
            .unwrap();
        let t = p.geom.position + p.geom.normal * 1e-3;
        let near = nearfield_targets(&mesh, &[t], 1.5);
        assert!(near[0].contains(&p.patch));
        // radius-5 evaluation sphere is entirely far
        for k in 0..100 {
            let dir = Vector3::new(
                (k as f64).sin(),
                (k as f64 * 1.7).cos(),
                (k as f64 * 0.3).sin(),
            )
            .normalize();
            assert!(mesh.near_panels(&(dir * 5.0), 1.5).is_empty());
        }
    }

    #[test]
    fn grading_concentrates_patches() {
        let s = Surface::new(SurfaceKind::Torus { major: 1.0, minor: 0.5 }).unwrap();
        let graded = build_mesh(
            &s,
            &MeshConfig {
                q: 5,
                patches: PatchCounts::Uniform(8, 4),
                grading: Some(GradingLaw {
                    strength_curvature: 1.5,
                    strength_source: 1.5,
                    source: Some(Vector3::new(1.0, 0.0, 0.0)),
                }),
            },
        )
        .unwrap();
        let area = graded.total_area();
        let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((area - exact).abs() < 1e-5, "graded area {area}");
        // patches near the source (u ~ 0) must be narrower in u than opposite
        let w_near = graded.patches[0].rect[1] - graded.patches[0].rect[0];
        let mid = graded
            .patches
            .iter()
            .find(|p| p.rect[0] <= std::f64::consts::PI && std::f64::consts::PI < p.rect[1])
            .unwrap();
        let w_far = mid.rect[1] - mid.rect[0];
        assert!(w_near < w_far, "grading had no effect: {w_near} vs {w_far}");
    }
}
