//! Surface differential operators on patchwise-interpolated nodal data.
//!
//! Values are differentiated per patch through the tensor Chebyshev
//! interpolant in parameters, then mapped by the inverse metric; nodes at
//! patch boundaries are owned by the evaluating patch (no stitching).

use crate::mesh::SurfaceMesh;
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceOpError {
    #[error("input field is not tangential: max |nu . v| = {0:.3e}")]
    NotTangential(f64),
}

pub const TANGENCY_TOL: f64 = 1e-10;

/// Parameter derivatives (f_u, f_v) of a nodal scalar field, per node.
fn param_derivatives(mesh: &SurfaceMesh, samples: &[C64]) -> Vec<(C64, C64)> {
    let q = mesh.q;
    let d = &mesh.cheb.diff;
    let mut out = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); samples.len()];
    for p in &mesh.patches {
        let base = p.node_base;
        let (su, sv) = (2.0 / (p.rect[1] - p.rect[0]), 2.0 / (p.rect[3] - p.rect[2]));
        for i in 0..q {
            for j in 0..q {
                let mut fu = C64::new(0.0, 0.0);
                let mut fv = C64::new(0.0, 0.0);
                for m in 0..q {
                    fu += samples[base + m * q + j] * d[i * q + m];
                    fv += samples[base + i * q + m] * d[j * q + m];
                }
                out[base + i * q + j] = (fu * su, fv * sv);
            }
        }
    }
    out
}

/// Surface gradient of a nodal scalar field; tangent to the surface exactly.
pub fn surface_gradient(mesh: &SurfaceMesh, samples: &[C64]) -> Vec<Vector3<C64>> {
    assert_eq!(samples.len(), mesh.n_nodes());
    let derivs = param_derivatives(mesh, samples);
    mesh.nodes
        .iter()
        .zip(derivs)
        .map(|(n, (fu, fv))| {
            let (d1, d2) = n.geom.dual_basis();
            Vector3::from_fn(|c, _| fu * d1[c] + fv * d2[c])
        })
        .collect()
}

/// Surface divergence of a nodal tangent field.
pub fn surface_divergence(
    mesh: &SurfaceMesh,
    samples: &[Vector3<C64>],
) -> Result<Vec<C64>, SurfaceOpError> {
    assert_eq!(samples.len(), mesh.n_nodes());
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (n, s) in mesh.nodes.iter().zip(samples) {
        let nv = n.geom.normal;
        let dot = s[0] * nv[0] + s[1] * nv[1] + s[2] * nv[2];
        worst = worst.max(dot.norm());
        scale = scale.max(s.iter().map(|c| c.norm()).sum());
    }
    if worst > TANGENCY_TOL * scale.max(1.0) {
        return Err(SurfaceOpError::NotTangential(worst));
    }
    // contravariant components scaled by the area element:
    // div = (d_u(sqrt(g) V^1) + d_v(sqrt(g) V^2)) / sqrt(g)
    let n_nodes = mesh.n_nodes();
    let mut su = vec![C64::new(0.0, 0.0); n_nodes];
    let mut sv = vec![C64::new(0.0, 0.0); n_nodes];
    for (idx, (n, s)) in mesh.nodes.iter().zip(samples).enumerate() {
        let (d1, d2) = n.geom.dual_basis();
        let v1 = s[0] * d1[0] + s[1] * d1[1] + s[2] * d1[2];
        let v2 = s[0] * d2[0] + s[1] * d2[1] + s[2] * d2[2];
        su[idx] = v1 * n.geom.jacobian;
        sv[idx] = v2 * n.geom.jacobian;
    }
    let du = param_derivatives(mesh, &su);
    let dv = param_derivatives(mesh, &sv);
    Ok((0..n_nodes)
        .map(|i| (du[i].0 + dv[i].1) / mesh.nodes[i].geom.jacobian)
        .collect())
}

/// Residual of the Neumann-trace identity for an analytic vector field:
/// dnu F - {grad_G(nu.F) - R F - nu x curl F}
///       - {div F - div_G(P_t F) - 2 H (nu.F)} nu,
/// evaluated nodewise; returns the max norm over nodes.
pub fn neumann_trace_residual(
    mesh: &SurfaceMesh,
    field: impl Fn(&Vector3<f64>) -> Vector3<C64>,
    dnu_field: impl Fn(&Vector3<f64>, &Vector3<f64>) -> Vector3<C64>,
    curl_field: impl Fn(&Vector3<f64>) -> Vector3<C64>,
    div_field: impl Fn(&Vector3<f64>) -> C64,
) -> f64 {
    let n_nodes = mesh.n_nodes();
    let mut f_vals = Vec::with_capacity(n_nodes);
    let mut nu_dot_f = Vec::with_capacity(n_nodes);
    let mut pt_f: Vec<Vector3<C64>> = Vec::with_capacity(n_nodes);
    for n in &mesh.nodes {
        let f = field(&n.geom.position);
        let nv = n.geom.normal;
        let nf = f[0] * nv[0] + f[1] * nv[1] + f[2] * nv[2];
        nu_dot_f.push(nf);
        pt_f.push(Vector3::from_fn(|c, _| f[c] - nf * nv[c]));
        f_vals.push(f);
    }
    let grad_nf = surface_gradient(mesh, &nu_dot_f);
    let div_pt = surface_divergence(mesh, &pt_f).expect("P_t F is tangential");
    let mut worst: f64 = 0.0;
    for (i, n) in mesh.nodes.iter().enumerate() {
        let x = n.geom.position;
        let nv = n.geom.normal;
        let f = f_vals[i];
        let dnu = dnu_field(&x, &nv);
        let curl = curl_field(&x);
        let rf = {
            let r = n.geom.curvature_op;
            Vector3::from_fn(|c, _| f[0] * r[(c, 0)] + f[1] * r[(c, 1)] + f[2] * r[(c, 2)])
        };
        let nu_x_curl = Vector3::new(
            curl[2] * nv[1] - curl[1] * nv[2],
            curl[0] * nv[2] - curl[2] * nv[0],
            curl[1] * nv[0] - curl[0] * nv[1],
        );
        let tan_part = Vector3::from_fn(|c, _| grad_nf[i][c] - rf[c] - nu_x_curl[c]);
        let nor_scalar =
            div_field(&x) - div_pt[i] - nu_dot_f[i] * (2.0 * n.geom.mean_curvature);
        let mut res: f64 = 0.0;
        for c in 0..3 {
            res += (dnu[c] - tan_part[c] - nor_scalar * nv[c]).norm_sqr();
        }
        worst = worst.max(res.sqrt());
    }
    worst
}
