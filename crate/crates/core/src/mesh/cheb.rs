//! Chebyshev node, quadrature, interpolation, and differentiation tables.
//!
//! Patches carry q x q tensor grids of first-kind Chebyshev points, so nodes
//! never sit on patch boundaries and the interpolant of a sampled
//! degree-(q-1) polynomial is exact.

/// 1D tables shared by every patch of a mesh.
#[derive(Clone, Debug)]
pub struct ChebTables {
    pub q: usize,
    /// First-kind Chebyshev points on [-1, 1], descending.
    pub nodes: Vec<f64>,
    /// Fejer-1 quadrature weights on [-1, 1].
    pub weights: Vec<f64>,
    /// Barycentric weights for the nodes.
    pub bary: Vec<f64>,
    /// Differentiation matrix, row-major q x q: (Df)_i = sum_j d[i*q+j] f_j.
    pub diff: Vec<f64>,
}

impl ChebTables {
    pub fn new(q: usize) -> Self {
        assert!(q >= 2, "need at least two nodes per patch edge");
        let mut nodes = Vec::with_capacity(q);
        let mut weights = Vec::with_capacity(q);
        let mut bary = Vec::with_capacity(q);
        for j in 0..q {
            let theta = (2 * j + 1) as f64 * std::f64::consts::PI / (2 * q) as f64;
            nodes.push(theta.cos());
            let mut w = 1.0;
            let mut m = 1;
            while 2 * m <= q - 1 {
                w -= 2.0 * (2.0 * m as f64 * theta).cos() / ((4 * m * m - 1) as f64);
                m += 1;
            }
            weights.push(2.0 * w / q as f64);
            bary.push(if j % 2 == 0 { theta.sin() } else { -theta.sin() });
        }
        let mut diff = vec![0.0; q * q];
        for i in 0..q {
            let mut row_sum = 0.0;
            for j in 0..q {
                if i != j {
                    let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    diff[i * q + j] = d;
                    row_sum += d;
                }
            }
            diff[i * q + i] = -row_sum;
        }
        ChebTables { q, nodes, weights, bary, diff }
    }

    /// Cardinal (Lagrange) function values at coordinate x in [-1, 1].
    pub fn cardinal(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.q);
        for (j, &xj) in self.nodes.iter().enumerate() {
            if (x - xj).abs() < 1e-14 {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for j in 0..self.q {
            let t = self.bary[j] / (x - self.nodes[j]);
            out[j] = t;
            denom += t;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, 0.0);
        for j in 0..n {
            let p2 = p1;
            p1 = p0;
            p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
        }
        let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_weights_integrate_polynomials() {
        for q in [4, 7, 8, 12] {
            let t = ChebTables::new(q);
            // integral of x^p on [-1,1]
            for p in 0..q {
                let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
                let got: f64 =
                    t.nodes.iter().zip(&t.weights).map(|(x, w)| x.powi(p as i32) * w).sum();
                assert!((got - exact).abs() < 1e-13, "q={q} p={p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn interpolation_is_exact_for_sampled_polynomials() {
        let q = 9;
        let t = ChebTables::new(q);
        let f = |x: f64| 3.0 - x + 0.5 * x.powi(5) - 2.0 * x.powi(8);
        let vals: Vec<f64> = t.nodes.iter().map(|&x| f(x)).collect();
        let mut card = vec![0.0; q];
        for &x in &[-0.97, -0.33, 0.0, 0.512, 0.99] {
            t.cardinal(x, &mut card);
            let got: f64 = card.iter().zip(&vals).map(|(c, v)| c * v).sum();
            assert!((got - f(x)).abs() < 1e-12);
        }
        // exactly at a node
        t.cardinal(t.nodes[3], &mut card);
        let got: f64 = card.iter().zip(&vals).map(|(c, v)| c * v).sum();
        assert!((got - vals[3]).abs() < 1e-14);
    }

    #[test]
    fn differentiation_matrix_differentiates_polynomials() {
        let q = 8;
        let t = ChebTables::new(q);
        let vals: Vec<f64> = t.nodes.iter().map(|&x| x.powi(5) - 2.0 * x * x).collect();
        for i in 0..q {
            let got: f64 = (0..q).map(|j| t.diff[i * q + j] * vals[j]).sum();
            let x = t.nodes[i];
            assert!((got - (5.0 * x.powi(4) - 4.0 * x)).abs() < 1e-11);
        }
    }

    #[test]
    fn gauss_legendre_rules() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(18) * w).sum();
        assert!((int - 2.0 / 19.0).abs() < 1e-14);
    }
}
