//! L²-orthonormal hierarchical bases of `P_p` on the reference triangle.
//!
//! Basis functions are linear combinations of monomials centered at the
//! reference centroid, orthonormalized in degree order (Gram–Schmidt through a
//! Cholesky factor of the exact Gram matrix). The first `dim(P_q)` functions
//! span `P_q` for every `q <= p`. Second derivatives are exact.

use std::sync::{Arc, OnceLock};

use crate::quadrature::triangle_rule;

/// Highest polynomial degree supported by [`LocalBasis`].
pub const MAX_DEGREE: usize = 8;

const CENTER: f64 = 1.0 / 3.0;

/// Number of basis functions of `P_p` in two variables.
pub const fn dimension(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

#[derive(Debug, Clone)]
pub struct LocalBasis {
    degree: usize,
    /// Monomial exponents `(a, b)` of `(x - 1/3)^a (y - 1/3)^b`, graded by total degree.
    exponents: Vec<(usize, usize)>,
    /// Row-major lower-triangular coefficients: `phi_i = sum_j coeffs[i][j] m_j`.
    coeffs: Vec<f64>,
}

/// Values and reference derivatives of every basis function at one point.
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    /// `(d_xx, d_xy, d_yy)` in reference coordinates.
    pub hessians: Vec<[f64; 3]>,
}

impl LocalBasis {
    fn build(degree: usize) -> Self {
        let exponents: Vec<(usize, usize)> = (0..=degree)
            .flat_map(|total| (0..=total).map(move |b| (total - b, b)))
            .collect();
        let n = exponents.len();
        let rule = triangle_rule(2 * degree).expect("degree below quadrature table limit");

        let mut gram = vec![0.0; n * n];
        let mut mono = vec![0.0; n];
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            eval_monomials(&exponents, degree, *pt, &mut mono);
            for i in 0..n {
                for j in 0..=i {
                    gram[i * n + j] += w * mono[i] * mono[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                gram[j * n + i] = gram[i * n + j];
            }
        }

        // Cholesky G = L L^T, then coeffs = L^{-1}.
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = gram[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    assert!(s > 0.0, "monomial Gram matrix lost positive definiteness");
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        let mut coeffs = vec![0.0; n * n];
        for col in 0..n {
            for i in col..n {
                let mut s = if i == col { 1.0 } else { 0.0 };
                for k in col..i {
                    s -= l[i * n + k] * coeffs[k * n + col];
                }
                coeffs[i * n + col] = s / l[i * n + i];
            }
        }

        Self {
            degree,
            exponents,
            coeffs,
        }
    }

    /// Shared basis of degree `p`. Panics if `p > MAX_DEGREE`.
    pub fn of_degree(p: usize) -> Arc<LocalBasis> {
        static CACHE: OnceLock<Vec<OnceLock<Arc<LocalBasis>>>> = OnceLock::new();
        assert!(
            p <= MAX_DEGREE,
            "polynomial degree {p} exceeds {MAX_DEGREE}"
        );
        let cache = CACHE.get_or_init(|| (0..=MAX_DEGREE).map(|_| OnceLock::new()).collect());
        cache[p].get_or_init(|| Arc::new(Self::build(p))).clone()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Basis values at a reference point.
    pub fn values(&self, xi: [f64; 2], out: &mut [f64]) {
        let n = self.len();
        let mut mono = vec![0.0; n];
        eval_monomials(&self.exponents, self.degree, xi, &mut mono);
        for i in 0..n {
            out[i] = (0..=i).map(|j| self.coeffs[i * n + j] * mono[j]).sum();
        }
    }

    /// Values, reference gradients and reference Hessians at a reference point.
    pub fn evaluate(&self, xi: [f64; 2], out: &mut BasisValues) {
        let n = self.len();
        let p = self.degree;
        out.values.resize(n, 0.0);
        out.grads.resize(n, [0.0; 2]);
        out.hessians.resize(n, [0.0; 3]);

        let s = xi[0] - CENTER;
        let t = xi[1] - CENTER;
        let mut ps = vec![1.0; p + 1];
        let mut pt = vec![1.0; p + 1];
        for k in 1..=p {
            ps[k] = ps[k - 1] * s;
            pt[k] = pt[k - 1] * t;
        }
        let pow = |v: &[f64], e: isize| if e < 0 { 0.0 } else { v[e as usize] };

        let mut m = vec![0.0; n];
        let mut mx = vec![0.0; n];
        let mut my = vec![0.0; n];
        let mut mxx = vec![0.0; n];
        let mut mxy = vec![0.0; n];
        let mut myy = vec![0.0; n];
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let (ai, bi) = (a as isize, b as isize);
            let (af, bf) = (a as f64, b as f64);
            m[j] = ps[a] * pt[b];
            mx[j] = af * pow(&ps, ai - 1) * pt[b];
            my[j] = bf * ps[a] * pow(&pt, bi - 1);
            mxx[j] = af * (af - 1.0) * pow(&ps, ai - 2) * pt[b];
            mxy[j] = af * bf * pow(&ps, ai - 1) * pow(&pt, bi - 1);
            myy[j] = bf * (bf - 1.0) * ps[a] * pow(&pt, bi - 2);
        }
        for i in 0..n {
            let row = &self.coeffs[i * n..i * n + i + 1];
            let dot = |v: &[f64]| row.iter().zip(v).map(|(c, x)| c * x).sum::<f64>();
            out.values[i] = dot(&m);
            out.grads[i] = [dot(&mx), dot(&my)];
            out.hessians[i] = [dot(&mxx), dot(&mxy), dot(&myy)];
        }
    }
}

fn eval_monomials(exponents: &[(usize, usize)], p: usize, xi: [f64; 2], out: &mut [f64]) {
    let s = xi[0] - CENTER;
    let t = xi[1] - CENTER;
    let mut ps = [1.0; MAX_DEGREE * 2 + 1];
    let mut pt = [1.0; MAX_DEGREE * 2 + 1];
    for k in 1..=p {
        ps[k] = ps[k - 1] * s;
        pt[k] = pt[k - 1] * t;
    }
    for (o, &(a, b)) in out.iter_mut().zip(exponents) {
        *o = ps[a] * pt[b];
    }
}

/// Values of the first `p + 1` L²(0,1)-orthonormal shifted Legendre polynomials at `t`.
pub fn legendre_values(p: usize, t: f64, out: &mut [f64]) {
    let x = 2.0 * t - 1.0;
    let mut p0 = 1.0;
    let mut p1 = x;
    for (k, o) in out.iter_mut().enumerate().take(p + 1) {
        let raw = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        *o = raw * (2.0 * k as f64 + 1.0).sqrt();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::edge_rule;

    #[test]
    fn dimensions() {
        for p in 0..=MAX_DEGREE {
            assert_eq!(LocalBasis::of_degree(p).len(), dimension(p));
        }
    }

    #[test]
    fn degree_zero_is_constant() {
        let b = LocalBasis::of_degree(0);
        let mut v = BasisValues::default();
        b.evaluate([0.2, 0.3], &mut v);
        assert!((v.values[0] - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(v.grads[0], [0.0, 0.0]);
    }

    #[test]
    fn orthonormal_up_to_degree_six() {
        for p in 0..=6 {
            let b = LocalBasis::of_degree(p);
            let n = b.len();
            let rule = triangle_rule(2 * p).unwrap();
            let mut gram = vec![0.0; n * n];
            let mut vals = vec![0.0; n];
            for (pt, w) in rule.points.iter().zip(&rule.weights) {
                b.values(*pt, &mut vals);
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] += w * vals[i] * vals[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[i * n + j] - e).abs() < 1e-10, "p={p} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn hierarchical() {
        let b2 = LocalBasis::of_degree(2);
        let b4 = LocalBasis::of_degree(4);
        let (mut v2, mut v4) = (vec![0.0; 6], vec![0.0; 15]);
        b2.values([0.1, 0.7], &mut v2);
        b4.values([0.1, 0.7], &mut v4);
        for i in 0..6 {
            assert!((v2[i] - v4[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn legendre_orthonormal() {
        let p = 6;
        let rule = edge_rule(2 * p).unwrap();
        let mut g = vec![0.0; (p + 1) * (p + 1)];
        let mut v = vec![0.0; p + 1];
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            legendre_values(p, *t, &mut v);
            for i in 0..=p {
                for j in 0..=p {
                    g[i * (p + 1) + j] += w * v[i] * v[j];
                }
            }
        }
        for i in 0..=p {
            for j in 0..=p {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * (p + 1) + j] - e).abs() < 1e-12);
            }
        }
    }
}
