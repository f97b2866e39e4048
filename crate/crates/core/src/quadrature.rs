//! Gauss–Hermite rules for integrals of the form ∫ e^{-x²} f(x) dx.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Hermite rule, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Eigenvalues of the Jacobi matrix as starting points, then Newton polishing on
    /// the orthonormal Hermite recurrence. Stable well past 200 nodes.
    pub fn new(n: usize) -> Self {
        let pim4 = libm::pow(PI, -0.25);
        let mut nodes = jacobi_eigenvalues(n);
        nodes.sort_by(f64::total_cmp);
        let weights = nodes
            .iter_mut()
            .map(|z| {
                for _ in 0..4 {
                    let (p, d) = orthonormal_hermite(n, *z, pim4);
                    if d == 0.0 {
                        break;
                    }
                    *z -= p / d;
                }
                let (_, d) = orthonormal_hermite(n, *z, pim4);
                2.0 / (d * d)
            })
            .collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Eigenvalues of the symmetric tridiagonal Hermite Jacobi matrix (implicit QL).
fn jacobi_eigenvalues(n: usize) -> Vec<f64> {
    let mut d = alloc::vec![0.0; n];
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { libm::sqrt((i + 1) as f64 / 2.0) } else { 0.0 }).collect();
    for l in 0..n {
        for _ in 0..200 {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

/// Value of the normalised Hermite function of degree `n` (without the Gaussian) and its derivative.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
    }
    (p1, libm::sqrt(2.0 * n as f64) * p2)
}
