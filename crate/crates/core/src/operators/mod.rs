//! Dense discrete boundary operators on componentwise scalar densities.
//!
//! All kinds for one (mesh, wavenumber) pair are assembled in a single sweep:
//! regular node pairs share the kernel radial factors, and self/near panel
//! interactions share one polar rule and one interpolation-basis evaluation
//! per quadrature point. The full hypersingular operator is never assembled;
//! only the weakly singular difference T - T0, the Maue curl pieces for T0,
//! and the principal-value commutator [P_nu, T0] appear.

pub mod apply;

use crate::geometry::point_from_jets;
use crate::kernels::{PairGeom, RadialParts};
use crate::linalg::{CMat, Mat, RMat};
use crate::mesh::polar::{closest_param, param_scale, PolarRule};
use crate::mesh::SurfaceMesh;
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator kind {0:?} requires k > 0")]
    NeedsPositiveK(OperatorKind),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad operator file: {0}")]
    BadFile(String),
}

/// Assembled operator kinds. Laplace-family kinds are stored as real
/// matrices; Helmholtz kinds at the sweep wavenumber as complex ones.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// S at the sweep wavenumber.
    SingleLayer,
    /// K at the sweep wavenumber.
    DoubleLayer,
    /// K' at the sweep wavenumber.
    AdjDoubleLayer,
    /// T - T0 (weakly singular difference kernel).
    HyperDiff,
    /// Laplace S0.
    SingleLayer0,
    /// Laplace K0.
    DoubleLayer0,
    /// Laplace K0'.
    AdjDoubleLayer0,
    /// Component a of the Maue curl kernel nu(x) x grad_x G0.
    MaueCurl0(usize),
}

impl OperatorKind {
    pub fn is_real(&self) -> bool {
        matches!(
            self,
            OperatorKind::SingleLayer0
                | OperatorKind::DoubleLayer0
                | OperatorKind::AdjDoubleLayer0
                | OperatorKind::MaueCurl0(_)
        )
    }

    fn tag(&self) -> u8 {
        match self {
            OperatorKind::SingleLayer => 0,
            OperatorKind::DoubleLayer => 1,
            OperatorKind::AdjDoubleLayer => 2,
            OperatorKind::HyperDiff => 3,
            OperatorKind::SingleLayer0 => 4,
            OperatorKind::DoubleLayer0 => 5,
            OperatorKind::AdjDoubleLayer0 => 6,
            OperatorKind::MaueCurl0(a) => 7 + *a as u8,
        }
    }

    fn from_tag(t: u8) -> Option<Self> {
        Some(match t {
            0 => OperatorKind::SingleLayer,
            1 => OperatorKind::DoubleLayer,
            2 => OperatorKind::AdjDoubleLayer,
            3 => OperatorKind::HyperDiff,
            4 => OperatorKind::SingleLayer0,
            5 => OperatorKind::DoubleLayer0,
            6 => OperatorKind::AdjDoubleLayer0,
            7..=9 => OperatorKind::MaueCurl0((t - 7) as usize),
            _ => return None,
        })
    }
}

/// A dense discrete operator with provenance metadata.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub kind: OperatorKind,
    pub k: f64,
    pub mesh_fingerprint: u64,
    pub mat: Arc<Mat>,
}

#[derive(Copy, Clone, Debug)]
pub struct QuadOptions {
    /// Panels closer than radius_factor * diameter get singular treatment.
    pub radius_factor: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { radius_factor: 1.5 }
    }
}

fn kernel_value(
    kind: OperatorKind,
    pair: &PairGeom,
    rad_k: Option<&RadialParts>,
    rad_0: &RadialParts,
    nu_x: &Vector3<f64>,
    nu_y: &Vector3<f64>,
) -> C64 {
    match kind {
        OperatorKind::SingleLayer => rad_k.unwrap().g_value(),
        OperatorKind::DoubleLayer => rad_k.unwrap().dnu_y(pair, nu_y),
        OperatorKind::AdjDoubleLayer => rad_k.unwrap().dnu_x(pair, nu_x),
        OperatorKind::HyperDiff => rad_k.unwrap().d2_nux_nuy_diff(pair, nu_x, nu_y),
        OperatorKind::SingleLayer0 => rad_0.g_value(),
        OperatorKind::DoubleLayer0 => rad_0.dnu_y(pair, nu_y),
        OperatorKind::AdjDoubleLayer0 => rad_0.dnu_x(pair, nu_x),
        OperatorKind::MaueCurl0(a) => {
            // (nu(x) x grad_x G0)_a
            let g = rad_0.gp.re;
            let c = nu_x.cross(&pair.rhat) * g;
            C64::new(c[a], 0.0)
        }
    }
}

/// Disjoint-row writer shared across the rayon sweep.
struct RowTable {
    ptr: *mut u8,
    n_cols: usize,
    real: bool,
}
unsafe impl Send for RowTable {}
unsafe impl Sync for RowTable {}

impl RowTable {
    /// Safety: each row index is written by exactly one rayon task.
    unsafe fn set(&self, row: usize, col: usize, v: C64) {
        if self.real {
            let p = (self.ptr as *mut f64).add(row * self.n_cols + col);
            *p = v.re;
        } else {
            let p = (self.ptr as *mut C64).add(row * self.n_cols + col);
            *p = v;
        }
    }
}

/// Assemble every requested kind in one sweep over target rows.
pub fn assemble_batch(
    mesh: &SurfaceMesh,
    k: f64,
    kinds: &[OperatorKind],
    quad: &QuadOptions,
) -> Result<Vec<DiscreteOperator>, OperatorError> {
    let needs_k = kinds.iter().any(|kk| !kk.is_real());
    if needs_k && k <= 0.0 {
        let kk = kinds.iter().find(|kk| !kk.is_real()).unwrap();
        return Err(OperatorError::NeedsPositiveK(*kk));
    }
    let n = mesh.n_nodes();
    let mut mats: Vec<Mat> = kinds
        .iter()
        .map(|kk| {
            if kk.is_real() {
                Mat::Real(RMat::zeros(n, n))
            } else {
                Mat::Complex(CMat::zeros(n, n))
            }
        })
        .collect();
    let tables: Vec<RowTable> = mats
        .iter_mut()
        .map(|m| match m {
            Mat::Real(r) => RowTable { ptr: r.data.as_mut_ptr() as *mut u8, n_cols: n, real: true },
            Mat::Complex(c) => {
                RowTable { ptr: c.data.as_mut_ptr() as *mut u8, n_cols: n, real: false }
            }
        })
        .collect();

    let q = mesh.q;
    let q2 = q * q;
    (0..n).into_par_iter().for_each(|i| {
        let tgt = &mesh.nodes[i];
        let x = tgt.geom.position;
        let nu_x = tgt.geom.normal;
        let mut near = mesh.near_panels(&x, quad.radius_factor);
        if !near.contains(&tgt.patch) {
            near.push(tgt.patch);
        }
        let mut is_near = vec![false; mesh.patches.len()];
        for &p in &near {
            is_near[p] = true;
        }
        // regular far-node entries
        for (j, src) in mesh.nodes.iter().enumerate() {
            if is_near[src.patch] {
                continue;
            }
            let pair = PairGeom::new(&x, &src.geom.position);
            let rad_0 = RadialParts::new(0.0, pair.r);
            let rad_k = if needs_k { Some(RadialParts::new(k, pair.r)) } else { None };
            for (kk, table) in kinds.iter().zip(&tables) {
                let v = kernel_value(*kk, &pair, rad_k.as_ref(), &rad_0, &nu_x, &src.geom.normal);
                unsafe { table.set(i, j, v * src.weight) };
            }
        }
        // singular / near-singular panels via polar rules
        let mut card_u = vec![0.0; q];
        let mut card_v = vec![0.0; q];
        for &panel in &near {
            let p = &mesh.patches[panel];
            let (cu, cv, delta) = if panel == tgt.patch {
                (tgt.uv.0, tgt.uv.1, 0.0)
            } else {
                let (u, v, d) = closest_param(mesh, panel, &x);
                (u, v, d / param_scale(mesh, panel, u, v))
            };
            let rule = PolarRule::build(p.rect, cu, cv, delta);
            let chart = &mesh.surface.charts[p.chart];
            let (hu, hv) = (0.5 * (p.rect[1] - p.rect[0]), 0.5 * (p.rect[3] - p.rect[2]));
            let (mu, mv) = (0.5 * (p.rect[0] + p.rect[1]), 0.5 * (p.rect[2] + p.rect[3]));
            let mut acc: Vec<C64> = vec![C64::new(0.0, 0.0); kinds.len() * q2];
            for ring in &rule.rings {
                for pt in ring {
                    let jets = crate::geometry::chart_jets(chart, pt.u, pt.v);
                    let Some(g) = point_from_jets(&jets) else { continue };
                    let pair = PairGeom::new(&x, &g.position);
                    if pair.r < 1e-15 {
                        continue;
                    }
                    let rad_0 = RadialParts::new(0.0, pair.r);
                    let rad_k = if needs_k { Some(RadialParts::new(k, pair.r)) } else { None };
                    mesh.cheb.cardinal((pt.u - mu) / hu, &mut card_u);
                    mesh.cheb.cardinal((pt.v - mv) / hv, &mut card_v);
                    let w_geom = pt.w * g.jacobian;
                    for (kidx, kk) in kinds.iter().enumerate() {
                        let kv = kernel_value(
                            *kk,
                            &pair,
                            rad_k.as_ref(),
                            &rad_0,
                            &nu_x,
                            &g.normal,
                        ) * w_geom;
                        if kv.norm_sqr() == 0.0 {
                            continue;
                        }
                        let slot = &mut acc[kidx * q2..(kidx + 1) * q2];
                        for a in 0..q {
                            if card_u[a] == 0.0 {
                                continue;
                            }
                            let kva = kv * card_u[a];
                            for b in 0..q {
                                slot[a * q + b] += kva * card_v[b];
                            }
                        }
                    }
                }
            }
            for (kidx, table) in tables.iter().enumerate() {
                for m in 0..q2 {
                    unsafe { table.set(i, p.node_base + m, acc[kidx * q2 + m]) };
                }
            }
        }
    });

    Ok(kinds
        .iter()
        .zip(mats)
        .map(|(kk, mat)| DiscreteOperator {
            kind: *kk,
            k: if kk.is_real() { 0.0 } else { k },
            mesh_fingerprint: mesh.fingerprint,
            mat: Arc::new(mat),
        })
        .collect())
}

/// The principal-value commutator [P_nu, T0]: a far-field scalar matrix plus
/// sparse 3x3 near-panel blocks carrying the PV product kernel.
#[derive(Clone, Debug)]
pub struct PnuT0Commutator {
    /// Laplace hypersingular kernel entries for far pairs, zero on near pairs.
    pub far: Arc<RMat>,
    /// Per-row sparse correction blocks (column, 3x3 row-major block).
    pub near: Arc<Vec<Vec<(u32, [f64; 9])>>>,
    pub mesh_fingerprint: u64,
}

pub fn assemble_pnu_t0_commutator(mesh: &SurfaceMesh, quad: &QuadOptions) -> PnuT0Commutator {
    let n = mesh.n_nodes();
    let q = mesh.q;
    let q2 = q * q;
    let mut far = RMat::zeros(n, n);
    let rows: Vec<Vec<(u32, [f64; 9])>> = {
        let far_table =
            RowTable { ptr: far.data.as_mut_ptr() as *mut u8, n_cols: n, real: true };
        (0..n)
            .into_par_iter()
            .map(|i| {
                let tgt = &mesh.nodes[i];
                let x = tgt.geom.position;
                let nu_x = tgt.geom.normal;
                let nxx = nu_x * nu_x.transpose();
                let mut near = mesh.near_panels(&x, quad.radius_factor);
                if !near.contains(&tgt.patch) {
                    near.push(tgt.patch);
                }
                let mut is_near = vec![false; mesh.patches.len()];
                for &p in &near {
                    is_near[p] = true;
                }
                for (j, src) in mesh.nodes.iter().enumerate() {
                    if is_near[src.patch] {
                        continue;
                    }
                    let pair = PairGeom::new(&x, &src.geom.position);
                    let rad_0 = RadialParts::new(0.0, pair.r);
                    let p_val = rad_0.d2_nux_nuy(&pair, &nu_x, &src.geom.normal).re;
                    unsafe { far_table.set(i, j, C64::new(p_val * src.weight, 0.0)) };
                }
                let mut card_u = vec![0.0; q];
                let mut card_v = vec![0.0; q];
                let mut blocks: Vec<(u32, [f64; 9])> = Vec::new();
                for &panel in &near {
                    let p = &mesh.patches[panel];
                    let (cu, cv, delta) = if panel == tgt.patch {
                        (tgt.uv.0, tgt.uv.1, 0.0)
                    } else {
                        let (u, v, d) = closest_param(mesh, panel, &x);
                        (u, v, d / param_scale(mesh, panel, u, v))
                    };
                    let rule = PolarRule::build(p.rect, cu, cv, delta);
                    let chart = &mesh.surface.charts[p.chart];
                    let (hu, hv) =
                        (0.5 * (p.rect[1] - p.rect[0]), 0.5 * (p.rect[3] - p.rect[2]));
                    let (mu, mv) =
                        (0.5 * (p.rect[0] + p.rect[1]), 0.5 * (p.rect[2] + p.rect[3]));
                    let mut acc = vec![[0.0f64; 9]; q2];
                    for ring in &rule.rings {
                        for pt in ring {
                            let jets = crate::geometry::chart_jets(chart, pt.u, pt.v);
                            let Some(g) = point_from_jets(&jets) else { continue };
                            let pair = PairGeom::new(&x, &g.position);
                            if pair.r < 1e-15 {
                                continue;
                            }
                            let rad_0 = RadialParts::new(0.0, pair.r);
                            let p_val = rad_0.d2_nux_nuy(&pair, &nu_x, &g.normal).re;
                            // q(x,y) = nu(x) nu(x)^T - nu(y) nu(y)^T vanishes
                            // at the diagonal, taming the O(r^-3) kernel
                            let nyy = g.normal * g.normal.transpose();
                            let w_geom = pt.w * g.jacobian * p_val;
                            mesh.cheb.cardinal((pt.u - mu) / hu, &mut card_u);
                            mesh.cheb.cardinal((pt.v - mv) / hv, &mut card_v);
                            for a in 0..q {
                                if card_u[a] == 0.0 {
                                    continue;
                                }
                                for b in 0..q {
                                    let wl = w_geom * card_u[a] * card_v[b];
                                    if wl == 0.0 {
                                        continue;
                                    }
                                    let slot = &mut acc[a * q + b];
                                    for r in 0..3 {
                                        for c in 0..3 {
                                            slot[3 * r + c] +=
                                                wl * (nxx[(r, c)] - nyy[(r, c)]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                    for m in 0..q2 {
                        blocks.push(((p.node_base + m) as u32, acc[m]));
                    }
                }
                blocks
            })
            .collect()
    };
    PnuT0Commutator {
        far: Arc::new(far),
        near: Arc::new(rows),
        mesh_fingerprint: mesh.fingerprint,
    }
}

impl PnuT0Commutator {
    /// Apply to a componentwise vector density stored as [x block; y; z].
    pub fn apply(&self, mesh: &SurfaceMesh, phi: &[C64]) -> Vec<C64> {
        let n = mesh.n_nodes();
        debug_assert_eq!(phi.len(), 3 * n);
        // P_nu (FAR phi) - FAR (P_nu phi) componentwise
        let mut pnu_phi = vec![C64::new(0.0, 0.0); 3 * n];
        for (i, node) in mesh.nodes.iter().enumerate() {
            let nv = node.geom.normal;
            let dot = phi[i] * nv[0] + phi[n + i] * nv[1] + phi[2 * n + i] * nv[2];
            for c in 0..3 {
                pnu_phi[c * n + i] = dot * nv[c];
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); 3 * n];
        let mut tmp_in = vec![C64::new(0.0, 0.0); n];
        let mut tmp_out = vec![C64::new(0.0, 0.0); n];
        for c in 0..3 {
            tmp_in.copy_from_slice(&phi[c * n..(c + 1) * n]);
            self.far.matvec(&tmp_in, &mut tmp_out);
            // P_nu applied after
            for (i, node) in mesh.nodes.iter().enumerate() {
                let nv = node.geom.normal;
                for r in 0..3 {
                    out[r * n + i] += tmp_out[i] * (nv[r] * nv[c]);
                }
            }
            tmp_in.copy_from_slice(&pnu_phi[c * n..(c + 1) * n]);
            self.far.matvec(&tmp_in, &mut tmp_out);
            for i in 0..n {
                out[c * n + i] -= tmp_out[i];
            }
        }
        // sparse PV blocks
        let near = self.near.as_ref();
        for (i, blocks) in near.iter().enumerate() {
            for (col, b) in blocks {
                let j = *col as usize;
                let pj = [phi[j], phi[n + j], phi[2 * n + j]];
                for r in 0..3 {
                    out[r * n + i] += pj[0] * b[3 * r] + pj[1] * b[3 * r + 1] + pj[2] * b[3 * r + 2];
                }
            }
        }
        out
    }
}

/// In-memory operator cache keyed by (kind, wavenumber bits, mesh fingerprint).
#[derive(Default)]
pub struct OperatorCache {
    map: HashMap<(OperatorKind, u64, u64), DiscreteOperator>,
    pcomm: HashMap<u64, PnuT0Commutator>,
}

impl OperatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fetch the requested kinds, assembling any misses in one batch sweep.
    pub fn get_batch(
        &mut self,
        mesh: &SurfaceMesh,
        k: f64,
        kinds: &[OperatorKind],
        quad: &QuadOptions,
    ) -> Result<Vec<DiscreteOperator>, OperatorError> {
        let key_k = |kk: &OperatorKind| if kk.is_real() { 0u64 } else { k.to_bits() };
        let missing: Vec<OperatorKind> = kinds
            .iter()
            .filter(|kk| !self.map.contains_key(&(**kk, key_k(kk), mesh.fingerprint)))
            .copied()
            .collect();
        if !missing.is_empty() {
            for op in assemble_batch(mesh, k, &missing, quad)? {
                self.map.insert((op.kind, key_k(&op.kind), mesh.fingerprint), op);
            }
        }
        Ok(kinds
            .iter()
            .map(|kk| self.map[&(*kk, key_k(kk), mesh.fingerprint)].clone())
            .collect())
    }

    pub fn get_pcomm(&mut self, mesh: &SurfaceMesh, quad: &QuadOptions) -> PnuT0Commutator {
        self.pcomm
            .entry(mesh.fingerprint)
            .or_insert_with(|| assemble_pnu_t0_commutator(mesh, quad))
            .clone()
    }

    /// Drop everything assembled on the given mesh.
    pub fn evict_mesh(&mut self, fingerprint: u64) {
        self.map.retain(|k, _| k.2 != fingerprint);
        self.pcomm.remove(&fingerprint);
    }

    pub fn clear(&mut self) {
        self.map.clear();
        self.pcomm.clear();
    }
}

const DUMP_MAGIC: &[u8; 8] = b"FOBIEOP1";

/// Versioned binary dump: kind, k, mesh fingerprint, N, then the row-major
/// complex-double payload.
pub fn dump_operator(op: &DiscreteOperator, w: &mut impl Write) -> Result<(), OperatorError> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&[op.kind.tag()])?;
    w.write_all(&op.k.to_le_bytes())?;
    w.write_all(&op.mesh_fingerprint.to_le_bytes())?;
    let n = op.mat.n_rows() as u64;
    w.write_all(&n.to_le_bytes())?;
    let n = n as usize;
    for i in 0..n {
        for j in 0..n {
            let v = op.mat.entry(i, j);
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_operator(r: &mut impl Read) -> Result<DiscreteOperator, OperatorError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(OperatorError::BadFile("bad magic".into()));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let kind = OperatorKind::from_tag(b1[0])
        .ok_or_else(|| OperatorError::BadFile(format!("unknown kind tag {}", b1[0])))?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let k = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let mesh_fingerprint = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut payload = vec![0u8; 16 * n * n];
    r.read_exact(&mut payload)?;
    let mat = if kind.is_real() {
        let mut m = RMat::zeros(n, n);
        for (idx, chunk) in payload.chunks_exact(16).enumerate() {
            m.data[idx] = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        }
        Mat::Real(m)
    } else {
        let mut m = CMat::zeros(n, n);
        for (idx, chunk) in payload.chunks_exact(16).enumerate() {
            m.data[idx] = C64::new(
                f64::from_le_bytes(chunk[..8].try_into().unwrap()),
                f64::from_le_bytes(chunk[8..].try_into().unwrap()),
            );
        }
        Mat::Complex(m)
    };
    Ok(DiscreteOperator { kind, k, mesh_fingerprint, mat: Arc::new(mat) })
}
