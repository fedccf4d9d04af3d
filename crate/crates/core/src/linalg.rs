//! Small dense linear algebra for N <= 4 Hilbert spaces.
//!
//! Everything here operates on `ndarray` matrices of `Complex64`. The
//! matrices are tiny, so the implementations favor robustness over
//! asymptotic cleverness: the Hermitian eigensolver is a cyclic Jacobi
//! iteration, which converges quadratically and keeps eigenvectors
//! orthonormal to machine precision.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diag().sum()
}

/// Max absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Max deviation of `u` from unitarity, max |(U† U - 1)_ij|.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&dagger(u).dot(u), &identity(n))
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues ascending and
/// eigenvectors as the corresponding columns. The input is assumed
/// Hermitian; only its Hermitian part enters the result.
pub fn hermitian_eig(a: &CMatrix) -> (Array1<f64>, CMatrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eig needs a square matrix");
    // Work on the explicit Hermitian part to wash out roundoff asymmetry.
    let mut m = (a + &dagger(a)).mapv(|z| z * 0.5);
    let mut v = identity(n);

    let off = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += m[[p, q]].norm_sqr();
                }
            }
        }
        s
    };

    let scale: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..64 {
        if off(&m).sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let tau = (m[[q, q]].re - m[[p, p]].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary rotation in the (p, q) plane zeroing m[p, q]:
                //   col_p' =  c col_p - s e^{-i phi} col_q
                //   col_q' =  s e^{i phi} col_p + c col_q
                let cc = Complex64::new(c, 0.0);
                let sp = phase * s;
                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = cc * mip - sp.conj() * miq;
                    m[[i, q]] = sp * mip + cc * miq;
                }
                for j in 0..n {
                    let mpj = m[[p, j]];
                    let mqj = m[[q, j]];
                    m[[p, j]] = cc * mpj - sp * mqj;
                    m[[q, j]] = sp.conj() * mpj + cc * mqj;
                }
                m[[p, q]] = Complex64::new(0.0, 0.0);
                m[[q, p]] = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = cc * vip - sp.conj() * viq;
                    v[[i, q]] = sp * vip + cc * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let mut w = Array1::zeros(n);
    let mut vecs = Array2::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        w[k] = evals[i];
        for row in 0..n {
            vecs[[row, k]] = v[[row, i]];
        }
    }
    (w, vecs)
}

/// `exp(-i H)` for Hermitian `H`, via eigendecomposition.
///
/// The result is a product `V diag(e^{-i w}) V†` of exactly unitary
/// factors, so unitarity holds to roundoff regardless of `||H||`.
pub fn exp_neg_i_hermitian(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let (w, v) = hermitian_eig(h);
    let mut d = Array2::zeros((n, n));
    for k in 0..n {
        d[[k, k]] = Complex64::new(0.0, -w[k]).exp();
    }
    v.dot(&d).dot(&dagger(&v))
}

/// Trapezoid weights for a (possibly non-uniform) strictly increasing grid.
pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let half = 0.5 * (t[k + 1] - t[k]);
        w[k] += half;
        w[k + 1] += half;
    }
    w
}

/// Trapezoid integral of real samples over the grid.
pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    assert_eq!(t.len(), f.len());
    trapezoid_weights(t)
        .iter()
        .zip(f.iter())
        .map(|(w, y)| w * y)
        .sum()
}

/// Cumulative trapezoid integral, same length as the input, starting at 0.
pub fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), f.len());
    let mut out = vec![0.0; t.len()];
    for k in 1..t.len() {
        out[k] = out[k - 1] + 0.5 * (f[k] + f[k - 1]) * (t[k] - t[k - 1]);
    }
    out
}

/// Kahan-compensated sum.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
