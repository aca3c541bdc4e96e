//! Free-space Helmholtz and Laplace kernels and their derivative combinations.
//!
//! All operators in this crate reduce to pointwise evaluations collected here.
//! Every kind is available at k = 0 (the Laplace family) and the difference
//! kinds (G - G0 and the hypersingular difference) are evaluated in
//! cancellation-safe form: a power series is used for kr below the switchover
//! since naive subtraction of the O(r^-3) terms loses all digits near the
//! diagonal.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Switchover between series and direct evaluation of difference kernels.
pub const DIFF_SERIES_SWITCH: f64 = 1e-2;

/// Pairs closer than this are refused by pointwise evaluation; callers must
/// route them through singular quadrature.
pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel evaluated at |x-y| = {r:.3e}, below the singularity floor {floor:.3e}")]
    Singular { r: f64, floor: f64 },
}

/// Wavenumber of the exterior medium; k = 0 selects the Laplace family.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Wavenumber {
    pub k: f64,
}

impl Wavenumber {
    pub fn new(k: f64) -> Self {
        assert!(k.is_finite() && k >= 0.0, "wavenumber must be finite and >= 0");
        Wavenumber { k }
    }

    /// Angular frequency for the given material constants (k = omega sqrt(eps mu)).
    pub fn omega(&self, eps: f64, mu: f64) -> f64 {
        self.k / (eps * mu).sqrt()
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }
}

/// Kernel derivative combination selector.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// G(x,y) = exp(ik|x-y|)/(4 pi |x-y|)
    G,
    /// grad_x G
    GradXG,
    /// dG/dnu(y)
    DNuYG,
    /// dG/dnu(x)
    DNuXG,
    /// d^2 G / dnu(x) dnu(y)
    D2NuXNuYG,
    /// Hessian of G in x
    HessXG,
    /// G_k - G_0 (cancellation-safe)
    GDiff,
    /// d^2 (G_k - G_0) / dnu(x) dnu(y) (cancellation-safe)
    D2NuXNuYGDiff,
}

/// A single evaluation request, mirroring the pointwise contract.
#[derive(Copy, Clone, Debug)]
pub struct KernelRequest {
    pub which: KernelKind,
    pub k: Wavenumber,
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub nu_x: Vector3<f64>,
    pub nu_y: Vector3<f64>,
}

/// Evaluation output; the shape depends on the request kind.
#[derive(Clone, Debug)]
pub enum KernelValue {
    Scalar(C64),
    Vector(Vector3<C64>),
    Matrix(Matrix3<C64>),
}

/// Geometry shared by every kernel kind for one (x, y) pair.
#[derive(Copy, Clone, Debug)]
pub struct PairGeom {
    pub dx: Vector3<f64>,
    pub r: f64,
    pub rhat: Vector3<f64>,
}

impl PairGeom {
    pub fn new(x: &Vector3<f64>, y: &Vector3<f64>) -> Self {
        let dx = x - y;
        let r = dx.norm();
        PairGeom { dx, r, rhat: dx / r }
    }
}

/// Radial factors of G and its derivatives at one distance, shared across kinds.
#[derive(Copy, Clone, Debug)]
pub struct RadialParts {
    pub k: f64,
    pub r: f64,
    /// exp(ikr)
    pub eikr: C64,
    /// G(r)
    pub g: C64,
    /// G'(r)
    pub gp: C64,
    /// A = G'' - G'/r (coefficient of rhat rhat^T in the Hessian)
    pub a: C64,
    /// B = G'/r (coefficient of I in the Hessian); note B' = A/r
    pub b: C64,
    /// A' = G''' - G''/r + G'/r^2
    pub ap: C64,
    /// W(ikr) = e^z - 1 - z e^z, the difference-kernel core
    pub w: C64,
    /// e^{ikr} - 1 evaluated without cancellation
    pub e1: C64,
}

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

impl RadialParts {
    pub fn new(k: f64, r: f64) -> Self {
        let kr = k * r;
        let (s, c) = kr.sin_cos();
        let eikr = C64::new(c, s);
        // e^{ikr} - 1 = -2 sin^2(kr/2) + i sin(kr), exact to machine precision
        let half = (0.5 * kr).sin();
        let e1 = C64::new(-2.0 * half * half, s);
        let g = eikr / (FOUR_PI * r);
        let ik = C64::new(0.0, k);
        let inv_r = 1.0 / r;
        let gp = (ik - inv_r) * g;
        let gpp = (-k * k - 2.0 * (ik * inv_r) + 2.0 * inv_r * inv_r) * g;
        let gppp = (C64::new(0.0, -k * k * k)
            + 3.0 * k * k * inv_r
            + 6.0 * ik * inv_r * inv_r
            - 6.0 * inv_r * inv_r * inv_r)
            * g;
        let a = gpp - gp * inv_r;
        let b = gp * inv_r;
        let ap = gppp - gpp * inv_r + gp * inv_r * inv_r;
        let w = if kr.abs() < DIFF_SERIES_SWITCH {
            // W(z) = sum_{n>=2} z^n (1-n)/n!
            let z = C64::new(0.0, kr);
            let mut term = z * z; // z^2
            let mut acc = C64::new(0.0, 0.0);
            let mut fact = 2.0; // n!
            for n in 2..12 {
                acc += term * ((1.0 - n as f64) / fact);
                term *= z;
                fact *= (n + 1) as f64;
            }
            acc
        } else {
            e1 - C64::new(0.0, kr) * eikr
        };
        RadialParts { k, r, eikr, g, gp, a, b, ap, w, e1 }
    }

    pub fn g_value(&self) -> C64 {
        self.g
    }

    /// G_k - G_0
    pub fn g_diff(&self) -> C64 {
        self.e1 / (FOUR_PI * self.r)
    }

    pub fn grad_x(&self, p: &PairGeom) -> Vector3<C64> {
        p.rhat.map(|c| self.gp * c)
    }

    pub fn dnu_y(&self, p: &PairGeom, nu_y: &Vector3<f64>) -> C64 {
        -self.gp * p.rhat.dot(nu_y)
    }

    pub fn dnu_x(&self, p: &PairGeom, nu_x: &Vector3<f64>) -> C64 {
        self.gp * p.rhat.dot(nu_x)
    }

    /// Full hypersingular kernel d^2 G/dnu(x) dnu(y); O(r^-3) at the diagonal.
    pub fn d2_nux_nuy(&self, p: &PairGeom, nu_x: &Vector3<f64>, nu_y: &Vector3<f64>) -> C64 {
        -(self.a * (p.rhat.dot(nu_x) * p.rhat.dot(nu_y)) + self.b * nu_x.dot(nu_y))
    }

    /// Difference kernel d^2 (G_k - G_0)/dnu(x) dnu(y); only O(r^-1) at the diagonal.
    pub fn d2_nux_nuy_diff(
        &self,
        p: &PairGeom,
        nu_x: &Vector3<f64>,
        nu_y: &Vector3<f64>,
    ) -> C64 {
        let r = self.r;
        let r2 = r * r;
        let a_diff = (-(self.k * self.k) * self.eikr + 3.0 * self.w / r2) / (FOUR_PI * r);
        let b_diff = -self.w / (FOUR_PI * r * r2);
        -(a_diff * (p.rhat.dot(nu_x) * p.rhat.dot(nu_y)) + b_diff * nu_x.dot(nu_y))
    }

    pub fn hess_x(&self, p: &PairGeom) -> Matrix3<C64> {
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = self.a * (p.rhat[i] * p.rhat[j])
                    + if i == j { self.b } else { C64::new(0.0, 0.0) };
            }
        }
        m
    }

    /// grad_x of dG/dnu(y) = -Hess(G) nu(y)
    pub fn grad_x_dnu_y(&self, p: &PairGeom, nu_y: &Vector3<f64>) -> Vector3<C64> {
        let rn = p.rhat.dot(nu_y);
        Vector3::from_fn(|i, _| -(self.a * rn * p.rhat[i] + self.b * nu_y[i]))
    }

    /// Hessian in x of dG/dnu(y): -D^3 G contracted with nu(y).
    pub fn hess_x_dnu_y(&self, p: &PairGeom, nu_y: &Vector3<f64>) -> Matrix3<C64> {
        let rn = p.rhat.dot(nu_y);
        let aor = self.a / self.r;
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let rr = p.rhat[i] * p.rhat[j];
                let sym = nu_y[i] * p.rhat[j] + nu_y[j] * p.rhat[i];
                let diag = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = -(self.ap * rn * rr + aor * (sym + diag * rn - 2.0 * rn * rr));
            }
        }
        m
    }

    /// D^3 G contracted with two vectors: sum_bc D3_{abc} b_b c_c.
    pub fn d3_contract(
        &self,
        p: &PairGeom,
        bv: &Vector3<f64>,
        cv: &Vector3<f64>,
    ) -> Vector3<C64> {
        let rb = p.rhat.dot(bv);
        let rc = p.rhat.dot(cv);
        let bc = bv.dot(cv);
        let aor = self.a / self.r;
        Vector3::from_fn(|i, _| {
            self.ap * rb * rc * p.rhat[i]
                + aor * (rb * cv[i] + rc * bv[i] + bc * p.rhat[i] - 2.0 * rb * rc * p.rhat[i])
        })
    }
}

/// Pointwise kernel evaluation with the singularity-floor contract.
pub fn kernel_eval(req: &KernelRequest) -> Result<KernelValue, KernelError> {
    kernel_eval_floor(req, DEFAULT_SINGULARITY_FLOOR)
}

pub fn kernel_eval_floor(req: &KernelRequest, floor: f64) -> Result<KernelValue, KernelError> {
    let p = PairGeom::new(&req.x, &req.y);
    if p.r <= floor {
        return Err(KernelError::Singular { r: p.r, floor });
    }
    let rad = RadialParts::new(req.k.k, p.r);
    Ok(match req.which {
        KernelKind::G => KernelValue::Scalar(rad.g_value()),
        KernelKind::GDiff => KernelValue::Scalar(rad.g_diff()),
        KernelKind::GradXG => KernelValue::Vector(rad.grad_x(&p)),
        KernelKind::DNuYG => KernelValue::Scalar(rad.dnu_y(&p, &req.nu_y)),
        KernelKind::DNuXG => KernelValue::Scalar(rad.dnu_x(&p, &req.nu_x)),
        KernelKind::D2NuXNuYG => KernelValue::Scalar(rad.d2_nux_nuy(&p, &req.nu_x, &req.nu_y)),
        KernelKind::D2NuXNuYGDiff => {
            KernelValue::Scalar(rad.d2_nux_nuy_diff(&p, &req.nu_x, &req.nu_y))
        }
        KernelKind::HessXG => KernelValue::Matrix(rad.hess_x(&p)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(req: &KernelRequest) -> C64 {
        match kernel_eval(req).unwrap() {
            KernelValue::Scalar(s) => s,
            _ => panic!("expected scalar"),
        }
    }

    fn req(which: KernelKind, k: f64, x: Vector3<f64>, y: Vector3<f64>) -> KernelRequest {
        KernelRequest {
            which,
            k: Wavenumber::new(k),
            x,
            y,
            nu_x: Vector3::z(),
            nu_y: Vector3::z(),
        }
    }

    #[test]
    fn green_function_reference_values() {
        // k = pi, r = 1: e^{i pi}/(4 pi) = -1/(4 pi)
        let g = scalar(&req(
            KernelKind::G,
            std::f64::consts::PI,
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::zeros(),
        ));
        assert!((g.re + 1.0 / FOUR_PI).abs() < 1e-15);
        assert!(g.im.abs() < 1e-15);

        // k = 0, r = 2: 1/(8 pi)
        let g0 = scalar(&req(
            KernelKind::G,
            0.0,
            Vector3::new(0.0, 0.0, 2.0),
            Vector3::zeros(),
        ));
        assert!((g0.re - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-16);

        // Laplace hypersingular kernel along the normal: 1/(4 pi) - 3/(4 pi) = -1/(2 pi)
        let t0 = scalar(&req(
            KernelKind::D2NuXNuYG,
            0.0,
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::zeros(),
        ));
        assert!((t0.re + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(t0.im.abs() < 1e-16);
    }

    #[test]
    fn symmetry_in_x_and_y() {
        let k = Wavenumber::new(1.3);
        let x = Vector3::new(0.3, -0.8, 1.1);
        let y = Vector3::new(-0.5, 0.2, 0.4);
        let nx = Vector3::new(0.1, 0.9, -0.4).normalize();
        let ny = Vector3::new(-0.7, 0.2, 0.7).normalize();
        let fwd = KernelRequest { which: KernelKind::G, k, x, y, nu_x: nx, nu_y: ny };
        let bwd = KernelRequest { which: KernelKind::G, k, x: y, y: x, nu_x: ny, nu_y: nx };
        assert_eq!(scalar(&fwd), scalar(&bwd));
        let fwd2 = KernelRequest { which: KernelKind::D2NuXNuYG, ..fwd };
        let bwd2 = KernelRequest { which: KernelKind::D2NuXNuYG, ..bwd };
        assert!((scalar(&fwd2) - scalar(&bwd2)).norm() < 1e-15 * scalar(&fwd2).norm());
    }

    #[test]
    fn helmholtz_residual_by_finite_differences() {
        let k = 2.1;
        let y = Vector3::zeros();
        let x = Vector3::new(0.8, 0.5, 0.9); // |x-y| > 1
        let h = 1e-4;
        let g = |p: Vector3<f64>| scalar(&req(KernelKind::G, k, p, y));
        let mut lap = C64::new(0.0, 0.0);
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            lap += (g(x + e) - 2.0 * g(x) + g(x - e)) / (h * h);
        }
        let resid = (lap + k * k * g(x)).norm() / g(x).norm();
        assert!(resid < 1e-5, "residual {resid}");
    }

    #[test]
    fn limit_consistency_with_laplace() {
        // |G_k - G_0| <= k/(4 pi) since |e^{ikr} - 1| <= kr
        for &k in &[1e-8, 1e-3, 0.5, 4.0] {
            for &r in &[1e-3, 0.3, 2.0, 17.0] {
                let rad = RadialParts::new(k, r);
                assert!(rad.g_diff().norm() <= k / FOUR_PI + 1e-18);
            }
        }
    }

    #[test]
    fn difference_kernel_matches_direct_subtraction() {
        let nx = Vector3::new(0.3, -0.2, 0.93).normalize();
        let ny = Vector3::new(-0.1, 0.99, 0.1).normalize();
        let x = Vector3::new(0.7, 0.1, -0.2);
        let y = Vector3::new(-0.4, 0.5, 0.3);
        let p = PairGeom::new(&x, &y);
        // Moderate kr: direct subtraction is safe and must agree.
        let k = 0.8;
        let rk = RadialParts::new(k, p.r);
        let r0 = RadialParts::new(0.0, p.r);
        let direct = rk.d2_nux_nuy(&p, &nx, &ny) - r0.d2_nux_nuy(&p, &nx, &ny);
        let diff = rk.d2_nux_nuy_diff(&p, &nx, &ny);
        assert!((direct - diff).norm() < 1e-12 * diff.norm().max(1e-30));
        // Continuity across the series switchover.
        for &kr in &[0.99e-2, 1.01e-2] {
            let kk = kr / p.r;
            let rk = RadialParts::new(kk, p.r);
            let series_like = rk.d2_nux_nuy_diff(&p, &nx, &ny);
            let direct = RadialParts::new(kk, p.r).d2_nux_nuy(&p, &nx, &ny)
                - r0.d2_nux_nuy(&p, &nx, &ny);
            assert!((series_like - direct).norm() < 1e-8 * series_like.norm());
        }
    }

    #[test]
    fn third_derivative_contraction_is_symmetric_and_matches_fd() {
        let k = 1.7;
        let y = Vector3::zeros();
        let x = Vector3::new(0.9, -0.3, 0.6);
        let p = PairGeom::new(&x, &y);
        let rad = RadialParts::new(k, p.r);
        let b = Vector3::new(0.2, 0.5, -0.8);
        let c = Vector3::new(-0.6, 0.1, 0.4);
        let d1 = rad.d3_contract(&p, &b, &c);
        let d2 = rad.d3_contract(&p, &c, &b);
        assert!((d1 - d2).norm() < 1e-14 * d1.norm());
        // FD check of Hess against grad
        let h = 1e-5;
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            let gp = RadialParts::new(k, (x + e - y).norm());
            let gm = RadialParts::new(k, (x - e - y).norm());
            let fd = (gp.grad_x(&PairGeom::new(&(x + e), &y))
                - gm.grad_x(&PairGeom::new(&(x - e), &y)))
                * C64::new(0.5 / h, 0.0);
            let hess = rad.hess_x(&p);
            for j in 0..3 {
                assert!((hess[(j, i)] - fd[j]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn singularity_floor_is_enforced() {
        let r = req(KernelKind::G, 1.0, Vector3::zeros(), Vector3::zeros());
        assert!(matches!(kernel_eval(&r), Err(KernelError::Singular { .. })));
    }
}
