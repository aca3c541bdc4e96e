//! Operator application: the Maue-form hypersingular action, the
//! principal-value commutator, and off-surface potential evaluation.

use super::{
    OperatorCache, OperatorError, OperatorKind, PnuT0Commutator, QuadOptions,
};
use crate::geometry::ops::surface_gradient;
use crate::geometry::point_from_jets;
use crate::kernels::{PairGeom, RadialParts};
use crate::linalg::Mat;
use crate::mesh::polar::{closest_param, param_scale, PolarRule};
use crate::mesh::SurfaceMesh;
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("target {0} lies on the surface; use trace formulas instead")]
    TargetOnSurface(usize),
}

/// The dense operators one formulation needs on a given (mesh, k) pair.
#[derive(Clone, Default)]
pub struct OperatorSet {
    pub k: f64,
    pub s: Option<Arc<Mat>>,
    pub k_dl: Option<Arc<Mat>>,
    pub kp: Option<Arc<Mat>>,
    pub tdiff: Option<Arc<Mat>>,
    pub s0: Option<Arc<Mat>>,
    pub k0: Option<Arc<Mat>>,
    pub k0p: Option<Arc<Mat>>,
    pub maue0: Option<[Arc<Mat>; 3]>,
    pub pcomm: Option<PnuT0Commutator>,
}

#[derive(Copy, Clone, Debug, Default)]
pub struct OperatorNeeds {
    pub s: bool,
    pub k: bool,
    pub kp: bool,
    pub tdiff: bool,
    pub s0: bool,
    pub k0: bool,
    pub k0p: bool,
    pub maue0: bool,
    pub pcomm: bool,
}

impl OperatorNeeds {
    pub fn all_helmholtz() -> Self {
        OperatorNeeds { s: true, k: true, kp: true, tdiff: true, ..Default::default() }
    }
}

impl OperatorSet {
    pub fn build(
        cache: &mut OperatorCache,
        mesh: &SurfaceMesh,
        k: f64,
        needs: OperatorNeeds,
        quad: &QuadOptions,
    ) -> Result<Self, OperatorError> {
        let mut kinds = Vec::new();
        if needs.s {
            kinds.push(OperatorKind::SingleLayer);
        }
        if needs.k {
            kinds.push(OperatorKind::DoubleLayer);
        }
        if needs.kp {
            kinds.push(OperatorKind::AdjDoubleLayer);
        }
        if needs.tdiff {
            kinds.push(OperatorKind::HyperDiff);
        }
        if needs.s0 {
            kinds.push(OperatorKind::SingleLayer0);
        }
        if needs.k0 {
            kinds.push(OperatorKind::DoubleLayer0);
        }
        if needs.k0p {
            kinds.push(OperatorKind::AdjDoubleLayer0);
        }
        if needs.maue0 {
            for a in 0..3 {
                kinds.push(OperatorKind::MaueCurl0(a));
            }
        }
        let ops = cache.get_batch(mesh, k, &kinds, quad)?;
        let find = |kk: OperatorKind| -> Option<Arc<Mat>> {
            ops.iter().find(|o| o.kind == kk).map(|o| o.mat.clone())
        };
        let maue0 = if needs.maue0 {
            Some([
                find(OperatorKind::MaueCurl0(0)).unwrap(),
                find(OperatorKind::MaueCurl0(1)).unwrap(),
                find(OperatorKind::MaueCurl0(2)).unwrap(),
            ])
        } else {
            None
        };
        Ok(OperatorSet {
            k,
            s: find(OperatorKind::SingleLayer),
            k_dl: find(OperatorKind::DoubleLayer),
            kp: find(OperatorKind::AdjDoubleLayer),
            tdiff: find(OperatorKind::HyperDiff),
            s0: find(OperatorKind::SingleLayer0),
            k0: find(OperatorKind::DoubleLayer0),
            k0p: find(OperatorKind::AdjDoubleLayer0),
            maue0,
            pcomm: if needs.pcomm { Some(cache.get_pcomm(mesh, quad)) } else { None },
        })
    }
}

/// Laplace hypersingular action by the Maue identity:
/// T0 phi = PV int nu(x).(grad_x G0 x (nu x grad_G phi)); no finite part.
pub fn apply_t0_scalar(mesh: &SurfaceMesh, maue0: &[Arc<Mat>; 3], phi: &[C64]) -> Vec<C64> {
    let n = mesh.n_nodes();
    debug_assert_eq!(phi.len(), n);
    let grad = surface_gradient(mesh, phi);
    // t = nu x grad_G phi
    let mut t = vec![[C64::new(0.0, 0.0); 3]; n];
    for (i, node) in mesh.nodes.iter().enumerate() {
        let nv = node.geom.normal;
        let g = &grad[i];
        t[i] = [
            g[2] * nv[1] - g[1] * nv[2],
            g[0] * nv[2] - g[2] * nv[0],
            g[1] * nv[0] - g[0] * nv[1],
        ];
    }
    // The assembled Maue kernel is nu(x) x grad_x G0; the integrand
    // nu(x).(grad G0 x t) equals (nu(x) x grad G0).t.
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut comp = vec![C64::new(0.0, 0.0); n];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    for a in 0..3 {
        for i in 0..n {
            comp[i] = t[i][a];
        }
        maue0[a].matvec(&comp, &mut tmp);
        for i in 0..n {
            out[i] += tmp[i];
        }
    }
    out
}

/// Full hypersingular action T = T0 + (T - T0) on a scalar nodal density.
pub fn apply_t_scalar(mesh: &SurfaceMesh, set: &OperatorSet, phi: &[C64]) -> Vec<C64> {
    let maue0 = set.maue0.as_ref().expect("Maue pieces required for apply_t");
    let mut out = apply_t0_scalar(mesh, maue0, phi);
    if let Some(tdiff) = &set.tdiff {
        let mut tmp = vec![C64::new(0.0, 0.0); phi.len()];
        tdiff.matvec(phi, &mut tmp);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += t;
        }
    }
    out
}

/// Componentwise application of a scalar operator matrix to a 3N density.
pub fn apply_blockwise(mat: &Mat, v: &[C64]) -> Vec<C64> {
    let n = mat.n_rows();
    debug_assert_eq!(v.len(), 3 * n);
    let mut out = vec![C64::new(0.0, 0.0); 3 * n];
    for c in 0..3 {
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        mat.matvec(&v[c * n..(c + 1) * n], &mut tmp);
        out[c * n..(c + 1) * n].copy_from_slice(&tmp);
    }
    out
}

/// The commutator [P_nu, T] applied to a 3N density, through the split
/// [P_nu, T - T0] + [P_nu, T0]; both pieces have integrable kernels.
pub fn commutator_pnu_t(mesh: &SurfaceMesh, set: &OperatorSet, phi: &[C64]) -> Vec<C64> {
    let n = mesh.n_nodes();
    debug_assert_eq!(phi.len(), 3 * n);
    let pcomm = set.pcomm.as_ref().expect("PV commutator required");
    let mut out = pcomm.apply(mesh, phi);
    if let Some(tdiff) = &set.tdiff {
        // [P_nu, Tdiff] = P_nu Tdiff - Tdiff P_nu from the dense matrix
        let tphi = apply_blockwise(tdiff, phi);
        let pnu_tphi = project_nu(mesh, &tphi);
        let pnu_phi = project_nu(mesh, phi);
        let t_pnuphi = apply_blockwise(tdiff, &pnu_phi);
        for i in 0..3 * n {
            out[i] += pnu_tphi[i] - t_pnuphi[i];
        }
    }
    out
}

/// P_nu v = (nu . v) nu nodewise on a 3N density.
pub fn project_nu(mesh: &SurfaceMesh, v: &[C64]) -> Vec<C64> {
    let n = mesh.n_nodes();
    let mut out = vec![C64::new(0.0, 0.0); 3 * n];
    for (i, node) in mesh.nodes.iter().enumerate() {
        let nv = node.geom.normal;
        let dot = v[i] * nv[0] + v[n + i] * nv[1] + v[2 * n + i] * nv[2];
        for c in 0..3 {
            out[c * n + i] = dot * nv[c];
        }
    }
    out
}

/// P_t v = v - P_nu v.
pub fn project_t(mesh: &SurfaceMesh, v: &[C64]) -> Vec<C64> {
    let pn = project_nu(mesh, v);
    v.iter().zip(pn).map(|(a, b)| a - b).collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Single,
    Double,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PotentialMode {
    /// Componentwise potential values (vector).
    Value,
    /// div of the vector potential (scalar).
    Divergence,
    /// grad div of the vector potential (vector).
    GradDiv,
    /// curl of the vector potential (vector).
    Curl,
}

/// Evaluate a layer potential of a 3N density at off-surface targets.
/// Vector modes fill three entries per target; Divergence fills one.
pub fn eval_potential(
    mesh: &SurfaceMesh,
    kind: PotentialKind,
    mode: PotentialMode,
    k: f64,
    density: &[C64],
    targets: &[Vector3<f64>],
    quad: &QuadOptions,
) -> Result<Vec<Vector3<C64>>, PotentialError> {
    let n = mesh.n_nodes();
    debug_assert_eq!(density.len(), 3 * n);
    let q = mesh.q;
    let q2 = q * q;
    let results: Vec<Result<Vector3<C64>, PotentialError>> = targets
        .par_iter()
        .enumerate()
        .map(|(ti, x)| {
            let near = mesh.near_panels(x, quad.radius_factor);
            let mut is_near = vec![false; mesh.patches.len()];
            for &p in &near {
                is_near[p] = true;
            }
            let mut acc = Vector3::from_element(C64::new(0.0, 0.0));
            let add = |acc: &mut Vector3<C64>,
                       pair: &PairGeom,
                       rad: &RadialParts,
                       nu_y: &Vector3<f64>,
                       rho: &[C64; 3],
                       w: f64| {
                match (kind, mode) {
                    (PotentialKind::Single, PotentialMode::Value) => {
                        let g = rad.g_value() * w;
                        for c in 0..3 {
                            acc[c] += g * rho[c];
                        }
                    }
                    (PotentialKind::Double, PotentialMode::Value) => {
                        let g = rad.dnu_y(pair, nu_y) * w;
                        for c in 0..3 {
                            acc[c] += g * rho[c];
                        }
                    }
                    (PotentialKind::Single, PotentialMode::Divergence) => {
                        let g = rad.grad_x(pair);
                        acc[0] += (g[0] * rho[0] + g[1] * rho[1] + g[2] * rho[2]) * w;
                    }
                    (PotentialKind::Double, PotentialMode::Divergence) => {
                        let g = rad.grad_x_dnu_y(pair, nu_y);
                        acc[0] += (g[0] * rho[0] + g[1] * rho[1] + g[2] * rho[2]) * w;
                    }
                    (PotentialKind::Single, PotentialMode::GradDiv) => {
                        let h = rad.hess_x(pair);
                        for r in 0..3 {
                            acc[r] +=
                                (h[(r, 0)] * rho[0] + h[(r, 1)] * rho[1] + h[(r, 2)] * rho[2])
                                    * w;
                        }
                    }
                    (PotentialKind::Double, PotentialMode::GradDiv) => {
                        let h = rad.hess_x_dnu_y(pair, nu_y);
                        for r in 0..3 {
                            acc[r] +=
                                (h[(r, 0)] * rho[0] + h[(r, 1)] * rho[1] + h[(r, 2)] * rho[2])
                                    * w;
                        }
                    }
                    (PotentialKind::Single, PotentialMode::Curl) => {
                        let g = rad.grad_x(pair);
                        acc[0] += (g[1] * rho[2] - g[2] * rho[1]) * w;
                        acc[1] += (g[2] * rho[0] - g[0] * rho[2]) * w;
                        acc[2] += (g[0] * rho[1] - g[1] * rho[0]) * w;
                    }
                    (PotentialKind::Double, PotentialMode::Curl) => {
                        let g = rad.grad_x_dnu_y(pair, nu_y);
                        acc[0] += (g[1] * rho[2] - g[2] * rho[1]) * w;
                        acc[1] += (g[2] * rho[0] - g[0] * rho[2]) * w;
                        acc[2] += (g[0] * rho[1] - g[1] * rho[0]) * w;
                    }
                }
            };
            // far nodes
            for (j, src) in mesh.nodes.iter().enumerate() {
                if is_near[src.patch] {
                    continue;
                }
                let pair = PairGeom::new(x, &src.geom.position);
                let rad = RadialParts::new(k, pair.r);
                let rho = [density[j], density[n + j], density[2 * n + j]];
                add(&mut acc, &pair, &rad, &src.geom.normal, &rho, src.weight);
            }
            // near panels via polar rules
            let mut card_u = vec![0.0; q];
            let mut card_v = vec![0.0; q];
            for &panel in &near {
                let p = &mesh.patches[panel];
                let (cu, cv, delta) = closest_param(mesh, panel, x);
                if delta < 1e-12 * p.diameter {
                    return Err(PotentialError::TargetOnSurface(ti));
                }
                let delta_param = delta / param_scale(mesh, panel, cu, cv);
                let rule = PolarRule::build(p.rect, cu, cv, delta_param);
                let chart = &mesh.surface.charts[p.chart];
                let (hu, hv) = (0.5 * (p.rect[1] - p.rect[0]), 0.5 * (p.rect[3] - p.rect[2]));
                let (mu, mv) = (0.5 * (p.rect[0] + p.rect[1]), 0.5 * (p.rect[2] + p.rect[3]));
                for ring in &rule.rings {
                    for pt in ring {
                        let jets = crate::geometry::chart_jets(chart, pt.u, pt.v);
                        let Some(g) = point_from_jets(&jets) else { continue };
                        let pair = PairGeom::new(x, &g.position);
                        if pair.r < 1e-15 {
                            continue;
                        }
                        let rad = RadialParts::new(k, pair.r);
                        mesh.cheb.cardinal((pt.u - mu) / hu, &mut card_u);
                        mesh.cheb.cardinal((pt.v - mv) / hv, &mut card_v);
                        let mut rho = [C64::new(0.0, 0.0); 3];
                        for a in 0..q {
                            if card_u[a] == 0.0 {
                                continue;
                            }
                            for b in 0..q {
                                let l = card_u[a] * card_v[b];
                                if l == 0.0 {
                                    continue;
                                }
                                let idx = p.node_base + a * q + b;
                                debug_assert!(idx < p.node_base + q2);
                                rho[0] += density[idx] * l;
                                rho[1] += density[n + idx] * l;
                                rho[2] += density[2 * n + idx] * l;
                            }
                        }
                        add(&mut acc, &pair, &rad, &g.normal, &rho, pt.w * g.jacobian);
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    results.into_iter().collect()
}
