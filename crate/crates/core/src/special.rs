//! Spherical Bessel/Hankel functions and Legendre-type angular factors.
//!
//! The Mie reference and the sphere eigenvalue oracles own their numerics:
//! j_n uses downward (Miller) recurrence with j_0 normalization, y_n uses the
//! stable upward recurrence, and small arguments switch to the power series.

use num_complex::Complex64 as C64;

/// j_0..j_n at x > 0.
pub fn sph_jn(n_max: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0 && x.is_finite());
    let mut j = vec![0.0; n_max + 1];
    if x < 0.25 {
        // series j_n = x^n/(2n+1)!! sum_m (-x^2/2)^m / (m! (2n+3)(2n+5)...(2n+1+2m))
        let mut lead = 1.0; // x^n / (2n+1)!!
        for (n, jn) in j.iter_mut().enumerate() {
            if n > 0 {
                lead *= x / (2.0 * n as f64 + 1.0);
            } else {
                lead = 1.0;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            let mut m = 1.0;
            loop {
                term *= -0.5 * x * x / (m * (2.0 * n as f64 + 1.0 + 2.0 * m));
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
                m += 1.0;
            }
            *jn = lead * sum;
        }
        return j;
    }
    let start = n_max + 16 + x as usize;
    let mut fp = 0.0f64;
    let mut fc = 1e-280f64;
    for m in (0..=start).rev() {
        let fm = (2.0 * m as f64 + 3.0) / x * fc - fp;
        fp = fc;
        fc = fm;
        if m <= n_max {
            j[m] = fm;
        }
        if fc.abs() > 1e270 {
            let s = 1e-280;
            fp *= s;
            fc *= s;
            for v in j.iter_mut() {
                *v *= s;
            }
        }
    }
    let scale = (x.sin() / x) / j[0];
    for v in j.iter_mut() {
        *v *= scale;
    }
    j
}

/// y_0..y_n at x > 0 (upward recurrence; magnitudes grow with n).
pub fn sph_yn(n_max: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0 && x.is_finite());
    let mut y = vec![0.0; n_max + 1];
    y[0] = -x.cos() / x;
    if n_max == 0 {
        return y;
    }
    y[1] = -x.cos() / (x * x) - x.sin() / x;
    for n in 1..n_max {
        y[n + 1] = (2.0 * n as f64 + 1.0) / x * y[n] - y[n - 1];
        if !y[n + 1].is_finite() {
            // saturate; callers truncate series well before this matters
            y[n + 1] = y[n].signum() * f64::MAX / 2.0;
        }
    }
    y
}

/// Derivative from the standard recurrence f_n' = f_{n-1} - (n+1)/x f_n.
pub fn sph_derivative(f: &[f64], n: usize, x: f64) -> f64 {
    if n == 0 {
        // j0' = -j1-type relation needs f[1]; use f' = -f1 when available
        if f.len() > 1 {
            return -f[1];
        }
        unreachable!("need at least two orders for the derivative");
    }
    f[n - 1] - (n as f64 + 1.0) / x * f[n]
}

/// h_n^(1) = j_n + i y_n for n = 0..n_max, plus derivatives.
pub struct SphericalHankel {
    pub j: Vec<f64>,
    pub y: Vec<f64>,
}

impl SphericalHankel {
    pub fn new(n_max: usize, x: f64) -> Self {
        SphericalHankel { j: sph_jn(n_max, x), y: sph_yn(n_max, x) }
    }

    pub fn h(&self, n: usize) -> C64 {
        C64::new(self.j[n], self.y[n])
    }

    pub fn h_deriv(&self, n: usize, x: f64) -> C64 {
        C64::new(sph_derivative(&self.j, n, x), sph_derivative(&self.y, n, x))
    }

    pub fn j_deriv(&self, n: usize, x: f64) -> f64 {
        sph_derivative(&self.j, n, x)
    }
}

/// Angular functions pi_n = P_n^1/sin(theta) and tau_n = dP_n^1/dtheta used
/// by the Mie series, for n = 1..n_max.
pub fn mie_angular(n_max: usize, cos_theta: f64) -> (Vec<f64>, Vec<f64>) {
    let mu = cos_theta;
    let mut pi = vec![0.0; n_max + 1];
    let mut tau = vec![0.0; n_max + 1];
    if n_max >= 1 {
        pi[1] = 1.0;
        tau[1] = mu;
    }
    for n in 2..=n_max {
        pi[n] = ((2 * n - 1) as f64 * mu * pi[n - 1] - n as f64 * pi[n - 2])
            / (n as f64 - 1.0);
        tau[n] = n as f64 * mu * pi[n] - (n as f64 + 1.0) * pi[n - 1];
    }
    (pi, tau)
}

/// Associated Legendre P_n^m(x) without Condon-Shortley phase removed
/// (standard physics definition including (-1)^m).
pub fn assoc_legendre(n: usize, m: usize, x: f64) -> f64 {
    assert!(m <= n);
    let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pmm = 1.0;
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= -fact * somx2;
        fact += 2.0;
    }
    if n == m {
        return pmm;
    }
    let mut pmmp1 = x * (2.0 * m as f64 + 1.0) * pmm;
    if n == m + 1 {
        return pmmp1;
    }
    let mut pnn = 0.0;
    for nn in (m + 2)..=n {
        pnn = (x * (2.0 * nn as f64 - 1.0) * pmmp1 - (nn + m - 1) as f64 * pmm)
            / (nn - m) as f64;
        pmm = pmmp1;
        pmmp1 = pnn;
    }
    pnn
}

/// Real orthonormal spherical harmonic sample: m >= 0 uses cos(m phi),
/// m < 0 uses sin(|m| phi).
pub fn real_sph_harmonic(n: usize, m: i32, theta: f64, phi: f64) -> f64 {
    let ma = m.unsigned_abs() as usize;
    let mut ln_ratio = 0.0;
    for i in (n - ma + 1)..=(n + ma) {
        ln_ratio += (i as f64).ln();
    }
    let norm = ((2.0 * n as f64 + 1.0) / (4.0 * std::f64::consts::PI) * (-ln_ratio).exp()).sqrt();
    let p = assoc_legendre(n, ma, theta.cos());
    if m == 0 {
        norm * p
    } else if m > 0 {
        2.0f64.sqrt() * norm * p * (ma as f64 * phi).cos()
    } else {
        2.0f64.sqrt() * norm * p * (ma as f64 * phi).sin()
    }
}
