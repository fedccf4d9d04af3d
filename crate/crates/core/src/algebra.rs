//! su(N) generator bases, structure constants, and adjoint representations.
//!
//! Conventions, fixed here and relied on everywhere else:
//!
//! * generators are trace-orthonormalized as `tr(s_i s_j) = 2 delta_ij`
//!   (standard Pauli and Gell-Mann matrices);
//! * structure constants are real and defined through
//!   `[s_i, s_j] = i sum_k f_ijk s_k`, so `f_123 = 2` for both bases;
//! * `adjoint_of` extracts the rotation `R` defined by
//!   `U (x . s) U† = (R x) . s`, which with the trace normalization above
//!   reads `R_ij = tr(s_i U s_j U†) / 2` for every N;
//! * `adjoint_generator(i)` returns the real matrix `L_i` with
//!   `exp(t L_i) = adjoint_of(exp(-i t s_i / 2))`, i.e.
//!   `[L_i]_jk = f_ikj / 2`.

use std::sync::Arc;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dagger, trace, unitarity_deviation, CMatrix};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ordered traceless Hermitian generators of su(N) plus their structure
/// constants. Immutable after construction; share it through an `Arc`.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<CMatrix>,
    structure: Array3<f64>,
}

impl GeneratorBasis {
    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, N^2 - 1.
    pub fn adjoint_dim(&self) -> usize {
        self.dim * self.dim - 1
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &CMatrix {
        &self.generators[i]
    }

    /// Structure constants f_ijk with `[s_i, s_j] = i sum_k f_ijk s_k`.
    pub fn structure_constants(&self) -> &Array3<f64> {
        &self.structure
    }

    /// Expand a coefficient vector against the generators: `h . s`.
    pub fn expand(&self, coeffs: &Array1<f64>) -> Result<CMatrix> {
        if coeffs.len() != self.adjoint_dim() {
            return Err(Error::Dimension(format!(
                "coefficient vector has length {}, basis needs {}",
                coeffs.len(),
                self.adjoint_dim()
            )));
        }
        let mut m = Array2::zeros((self.dim, self.dim));
        for (h, g) in coeffs.iter().zip(self.generators.iter()) {
            if *h != 0.0 {
                m = m + g.mapv(|z| z * c(*h, 0.0));
            }
        }
        Ok(m)
    }

    /// Project a Hermitian matrix onto the generators: `x_i = tr(s_i A) / 2`.
    pub fn project(&self, a: &CMatrix) -> Array1<f64> {
        Array1::from_iter(
            self.generators
                .iter()
                .map(|g| (trace(&g.dot(a)) * 0.5).re),
        )
    }

    fn from_generators(dim: usize, generators: Vec<CMatrix>) -> Self {
        let d = generators.len();
        let mut structure = Array3::zeros((d, d, d));
        for i in 0..d {
            for j in 0..d {
                let comm = generators[i].dot(&generators[j]) - generators[j].dot(&generators[i]);
                for k in 0..d {
                    // f_ijk = tr([s_i, s_j] s_k) / (2 i)
                    let v = trace(&comm.dot(&generators[k])) / c(0.0, 2.0);
                    structure[[i, j, k]] = v.re;
                }
            }
        }
        Self {
            dim,
            generators,
            structure,
        }
    }

    /// Pauli basis for N = 2: (sigma_x, sigma_y, sigma_z).
    pub fn pauli() -> Arc<Self> {
        let sx = ndarray::array![[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]];
        let sy = ndarray::array![[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]];
        let sz = ndarray::array![[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]];
        Arc::new(Self::from_generators(2, vec![sx, sy, sz]))
    }

    /// Gell-Mann basis for N = 3, standard order.
    pub fn gell_mann() -> Arc<Self> {
        let z = c(0., 0.);
        let o = c(1., 0.);
        let i = c(0., 1.);
        let mi = c(0., -1.);
        let s3 = 1.0 / 3.0f64.sqrt();
        let gens = vec![
            ndarray::array![[z, o, z], [o, z, z], [z, z, z]],
            ndarray::array![[z, mi, z], [i, z, z], [z, z, z]],
            ndarray::array![[o, z, z], [z, -o, z], [z, z, z]],
            ndarray::array![[z, z, o], [z, z, z], [o, z, z]],
            ndarray::array![[z, z, mi], [z, z, z], [i, z, z]],
            ndarray::array![[z, z, z], [z, z, o], [z, o, z]],
            ndarray::array![[z, z, z], [z, z, mi], [z, i, z]],
            ndarray::array![
                [c(s3, 0.), z, z],
                [z, c(s3, 0.), z],
                [z, z, c(-2.0 * s3, 0.)]
            ],
        ];
        Arc::new(Self::from_generators(3, gens))
    }
}

/// Adjoint representation of a unitary: the real orthogonal matrix `R`
/// with `U (x . s) U† = (R x) . s`.
///
/// Rejects inputs that deviate from unitarity by more than 1e-10.
pub fn adjoint_of(u: &CMatrix, basis: &GeneratorBasis) -> Result<Array2<f64>> {
    if u.nrows() != basis.dim() || u.ncols() != basis.dim() {
        return Err(Error::Dimension(format!(
            "unitary is {}x{}, basis dimension is {}",
            u.nrows(),
            u.ncols(),
            basis.dim()
        )));
    }
    let dev = unitarity_deviation(u);
    if dev > 1e-10 {
        return Err(Error::Numerical(format!(
            "adjoint_of: input deviates from unitarity by {dev:.3e}"
        )));
    }
    Ok(adjoint_of_unchecked(u, basis))
}

/// Same as [`adjoint_of`] without the unitarity check; used in propagation
/// loops where every factor is an exact exponential by construction.
pub(crate) fn adjoint_of_unchecked(u: &CMatrix, basis: &GeneratorBasis) -> Array2<f64> {
    let d = basis.adjoint_dim();
    let udag = dagger(u);
    let mut r = Array2::zeros((d, d));
    for j in 0..d {
        let a = u.dot(basis.generator(j)).dot(&udag);
        for i in 0..d {
            r[[i, j]] = (trace(&basis.generator(i).dot(&a)) * 0.5).re;
        }
    }
    r
}

/// Adjoint representation of a generator: the real antisymmetric matrix
/// `L_i` with `[L_i]_jk = f_ikj / 2`, normalized so that
/// `exp(t L_i) = adjoint_of(exp(-i t s_i / 2))`.
pub fn adjoint_generator(index: usize, basis: &GeneratorBasis) -> Result<Array2<f64>> {
    let d = basis.adjoint_dim();
    if index >= d {
        return Err(Error::Dimension(format!(
            "generator index {index} out of range (basis has {d})"
        )));
    }
    let f = basis.structure_constants();
    let mut l = Array2::zeros((d, d));
    for j in 0..d {
        for k in 0..d {
            l[[j, k]] = f[[index, k, j]] / 2.0;
        }
    }
    Ok(l)
}

/// `exp(a L)` for a real antisymmetric `L`, via the Hermitian eigensolver
/// applied to `i L`.
pub fn exp_real_antisymmetric(l: &Array2<f64>, a: f64) -> Array2<f64> {
    let d = l.nrows();
    let herm = l.mapv(|x| c(0.0, x)); // i L is Hermitian
    let (w, v) = crate::linalg::hermitian_eig(&herm);
    // exp(a L) = exp(-i a (iL)) = V diag(e^{-i a w}) V†
    let mut out = Array2::zeros((d, d));
    for p in 0..d {
        for q in 0..d {
            let mut s = c(0.0, 0.0);
            for k in 0..d {
                s += v[[p, k]] * c(0.0, -a * w[k]).exp() * v[[q, k]].conj();
            }
            out[[p, q]] = s;
        }
    }
    out.mapv(|z| z.re)
}
