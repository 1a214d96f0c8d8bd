//! Dense complex linear algebra on `ndarray` matrices: LU, inverses,
//! determinants, the matrix exponential and a Hermitian eigenvalue floor.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Cx, Real};

/// Dense complex matrix.
pub type CMatrix<T> = Array2<Cx<T>>;
/// Dense complex vector.
pub type CVector<T> = Array1<Cx<T>>;

pub fn eye<T: Real>(n: usize) -> CMatrix<T> {
    Array2::from_diag_elem(n, Cx::one())
}

pub fn zeros<T: Real>(rows: usize, cols: usize) -> CMatrix<T> {
    Array2::zeros((rows, cols))
}

pub fn dagger<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.t().mapv(|z| z.conj())
}

pub fn conj<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.mapv(|z| z.conj())
}

pub fn transpose<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.t().to_owned()
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: ArrayView2<'_, Cx<T>>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).norm()))
}

/// Maximum-column-sum norm.
pub fn norm1<T: Real>(m: &CMatrix<T>) -> T {
    m.axis_iter(Axis(1))
        .map(|col| col.iter().fold(T::zero(), |acc, z| acc + z.norm()))
        .fold(T::zero(), T::max)
}

/// `max |M^dagger M - I|`; zero for an exactly unitary matrix.
pub fn unitarity_deviation<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() != m.ncols() {
        return T::infinity();
    }
    max_abs_diff(&dagger(m).dot(m), &eye(m.nrows()))
}

pub fn hermiticity_deviation<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() != m.ncols() {
        return T::infinity();
    }
    max_abs_diff(m, &dagger(m))
}

/// Validates that `m` is unitary within `tol`.
pub fn check_unitary<T: Real>(m: &CMatrix<T>, tol: T) -> Result<()> {
    let deviation = unitarity_deviation(m);
    if deviation <= tol {
        Ok(())
    } else {
        Err(Error::NotUnitary {
            deviation: deviation.to_f64().unwrap_or(f64::INFINITY),
        })
    }
}

/// Assembles `[[a, b], [c, d]]`.
pub fn block2<T: Real>(
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    c: &CMatrix<T>,
    d: &CMatrix<T>,
) -> CMatrix<T> {
    let (p, q) = (a.nrows(), a.ncols());
    assert_eq!(b.nrows(), p);
    assert_eq!(c.ncols(), q);
    assert_eq!(d.nrows(), c.nrows());
    assert_eq!(d.ncols(), b.ncols());
    let mut out = zeros(p + c.nrows(), q + b.ncols());
    out.slice_mut(s![..p, ..q]).assign(a);
    out.slice_mut(s![..p, q..]).assign(b);
    out.slice_mut(s![p.., ..q]).assign(c);
    out.slice_mut(s![p.., q..]).assign(d);
    out
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    block2(
        a,
        &zeros(a.nrows(), b.ncols()),
        &zeros(b.nrows(), a.ncols()),
        b,
    )
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    odd: bool,
}

impl<T: Real> Lu<T> {
    pub fn factor(a: &CMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[[i, k]].norm()))
                    .fold(
                        (k, -T::one()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let d = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / d;
                lu[[i, k]] = f;
                if f != Cx::zero() {
                    for j in k + 1..n {
                        let u = lu[[k, j]];
                        lu[[i, j]] = lu[[i, j]] - f * u;
                    }
                }
            }
        }
        Ok(Lu { lu, perm, odd })
    }

    pub fn det(&self) -> Cx<T> {
        let d = self.lu.diag().iter().fold(Cx::<T>::one(), |acc, z| acc * z);
        if self.odd {
            -d
        } else {
            d
        }
    }

    /// Solves `A X = B` for a matrix right-hand side.
    pub fn solve(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n, "LU solve: row mismatch");
        let mut x = zeros(n, b.ncols());
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).assign(&b.row(p));
        }
        for c in 0..b.ncols() {
            for i in 0..n {
                let mut acc = x[[i, c]];
                for k in 0..i {
                    acc = acc - self.lu[[i, k]] * x[[k, c]];
                }
                x[[i, c]] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[[i, c]];
                for k in i + 1..n {
                    acc = acc - self.lu[[i, k]] * x[[k, c]];
                }
                x[[i, c]] = acc / self.lu[[i, i]];
            }
        }
        x
    }

    pub fn inverse(&self) -> CMatrix<T> {
        self.solve(&eye(self.lu.nrows()))
    }
}

pub fn det<T: Real>(a: &CMatrix<T>) -> Cx<T> {
    if a.nrows() == 0 {
        return Cx::one();
    }
    Lu::factor(a)
        .map(|lu| lu.det())
        .unwrap_or_else(|_| Cx::zero())
}

pub fn inverse<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    Ok(Lu::factor(a)?.inverse())
}

/// Inverse together with the 1-norm condition number `|A|_1 |A^-1|_1`.
pub fn inverse_with_cond<T: Real>(a: &CMatrix<T>) -> Result<(CMatrix<T>, T)> {
    if a.nrows() == 0 {
        return Ok((a.clone(), T::one()));
    }
    let inv = inverse(a)?;
    let cond = norm1(a) * norm1(&inv);
    Ok((
        inv,
        if cond.is_finite() {
            cond
        } else {
            T::infinity()
        },
    ))
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm of a non-square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = norm1(a);
    let half: T = lit(0.5);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > half {
        scale = scale * half;
        squarings += 1;
    }
    let scaled = a.mapv(|z| z * scale);
    let mut result = eye::<T>(n);
    let mut term = eye::<T>(n);
    for k in 1..=40usize {
        term = term.dot(&scaled).mapv(|z| z / from_usize::<T>(k));
        result = result + &term;
        if max_abs(term.view()) <= T::epsilon() * lit(1e-2) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Smallest eigenvalue of a Hermitian matrix.
///
/// The matrix is embedded as the real symmetric `[[Re, -Im], [Im, Re]]`,
/// whose spectrum is the Hermitian spectrum with every value doubled, and
/// diagonalised by cyclic Jacobi rotations.
pub fn hermitian_min_eigenvalue<T: Real>(h: &CMatrix<T>) -> T {
    let n = h.nrows();
    let m = 2 * n;
    let mut a = Array2::<T>::zeros((m, m));
    for i in 0..n {
        for j in 0..n {
            let z = h[[i, j]];
            a[[i, j]] = z.re;
            a[[i + n, j + n]] = z.re;
            a[[i, j + n]] = -z.im;
            a[[i + n, j]] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: T = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a[[i, j]] * a[[i, j]]);
        let total: T = a.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        if off <= total * T::epsilon() * T::epsilon() || off == T::zero() {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - sn * akq;
                    a[[k, q]] = sn * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - sn * aqk;
                    a[[q, k]] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[[i, i]]).fold(T::infinity(), T::min)
}

/// Orthonormalises the columns of a square matrix by modified Gram-Schmidt.
///
/// Applied to a matrix of i.i.d. complex Gaussians this yields a Haar-random
/// unitary, since the implied triangular factor has a positive diagonal.
pub fn gram_schmidt<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let mut q = m.clone();
    let n = q.ncols();
    for j in 0..n {
        for k in 0..j {
            let proj: Cx<T> = (0..q.nrows()).map(|i| q[[i, k]].conj() * q[[i, j]]).sum();
            for i in 0..q.nrows() {
                let v = q[[i, k]];
                q[[i, j]] = q[[i, j]] - proj * v;
            }
        }
        let norm = (0..q.nrows())
            .map(|i| q[[i, j]].norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        for i in 0..q.nrows() {
            q[[i, j]] = q[[i, j]] / norm;
        }
    }
    q
}

/// One step of a Givens factorisation of a unitary: a two-mode rotation
/// `[[e^{i chi} c, -e^{i(chi - phi)} s], [e^{i(phi - chi)} s, e^{-i chi} c]]`
/// acting on modes `(p, q)`, with `c = cos theta`, `s = sin theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Givens<T: Real> {
    pub p: usize,
    pub q: usize,
    pub theta: T,
    pub phi: T,
    pub chi: T,
}

/// Factorises a unitary as `U = G_1 G_2 ... G_k D`, where each `G` is a
/// [`Givens`] rotation on adjacent modes and `D` is a diagonal of phases.
pub fn givens_factorisation<T: Real>(u: &CMatrix<T>) -> (Vec<Givens<T>>, Vec<T>) {
    let n = u.nrows();
    let mut w = u.clone();
    let mut rotations = Vec::new();
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let a = w[[i - 1, j]];
            let b = w[[i, j]];
            if b.norm() == T::zero() {
                continue;
            }
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            // G = [[a*, b*], [-b, a]] / rho zeroes row i; its inverse is stored.
            let (ga, gb) = (a / rho, b / rho);
            for col in 0..n {
                let x = w[[i - 1, col]];
                let y = w[[i, col]];
                w[[i - 1, col]] = ga.conj() * x + gb.conj() * y;
                w[[i, col]] = -gb * x + ga * y;
            }
            // G^dagger = [[ga, -gb*], [gb, ga*]] in SU(2).
            let chi = ga.arg();
            rotations.push(Givens {
                p: i - 1,
                q: i,
                theta: gb.norm().atan2(ga.norm()),
                phi: gb.arg() + chi,
                chi,
            });
        }
    }
    let phases = (0..n).map(|k| w[[k, k]].arg()).collect();
    (rotations, phases)
}

impl<T: Real> Givens<T> {
    /// The 2x2 mode matrix of this rotation.
    pub fn matrix(&self) -> [[Cx<T>; 2]; 2] {
        let (c, sn) = (self.theta.cos(), self.theta.sin());
        let e = |x: T| Complex::from_polar(T::one(), x);
        [
            [e(self.chi) * c, -e(self.chi - self.phi) * sn],
            [e(self.phi - self.chi) * sn, e(-self.chi) * c],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn sample() -> CMatrix<f64> {
        ndarray::arr2(&[
            [cx(1.0, 0.5), cx(-0.3, 0.2), cx(0.0, 1.0)],
            [cx(0.4, -0.1), cx(2.0, 0.0), cx(0.7, 0.3)],
            [cx(-1.0, 0.0), cx(0.2, 0.9), cx(1.5, -0.5)],
        ])
    }

    #[test]
    fn lu_inverse_and_det() {
        let a = sample();
        let inv = inverse(&a).unwrap();
        assert!(max_abs_diff(&a.dot(&inv), &eye(3)) < 1e-13);
        // det via cofactor expansion
        let d = a[[0, 0]] * (a[[1, 1]] * a[[2, 2]] - a[[1, 2]] * a[[2, 1]])
            - a[[0, 1]] * (a[[1, 0]] * a[[2, 2]] - a[[1, 2]] * a[[2, 0]])
            + a[[0, 2]] * (a[[1, 0]] * a[[2, 1]] - a[[1, 1]] * a[[2, 0]]);
        assert!((det(&a) - d).norm() < 1e-13);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a: CMatrix<f64> =
            ndarray::arr2(&[[cx(1.0, 0.0), cx(2.0, 0.0)], [cx(2.0, 0.0), cx(4.0, 0.0)]]);
        assert!(matches!(inverse(&a), Err(Error::Singular(_))));
        assert_eq!(det(&a), Cx::zero());
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7f64;
        let g: CMatrix<f64> =
            ndarray::arr2(&[[cx(0.0, 0.0), cx(-t, 0.0)], [cx(t, 0.0), cx(0.0, 0.0)]]);
        let e = expm(&g);
        let expect: CMatrix<f64> = ndarray::arr2(&[
            [cx(t.cos(), 0.0), cx(-t.sin(), 0.0)],
            [cx(t.sin(), 0.0), cx(t.cos(), 0.0)],
        ]);
        assert!(max_abs_diff(&e, &expect) < 1e-14);
        let big = g.mapv(|z| z * 40.0);
        assert!(unitarity_deviation(&expm(&big)) < 1e-12);
    }

    #[test]
    fn hermitian_spectrum_floor() {
        // eigenvalues of [[2, i], [-i, 2]] are 1 and 3
        let h: CMatrix<f64> =
            ndarray::arr2(&[[cx(2.0, 0.0), cx(0.0, 1.0)], [cx(0.0, -1.0), cx(2.0, 0.0)]]);
        assert!((hermitian_min_eigenvalue(&h) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn givens_reconstructs_unitary() {
        let u = gram_schmidt(&sample());
        assert!(unitarity_deviation(&u) < 1e-13);
        let (rots, phases) = givens_factorisation(&u);
        let mut acc = eye::<f64>(3);
        for g in &rots {
            let m = g.matrix();
            let mut full = eye::<f64>(3);
            full[[g.p, g.p]] = m[0][0];
            full[[g.p, g.q]] = m[0][1];
            full[[g.q, g.p]] = m[1][0];
            full[[g.q, g.q]] = m[1][1];
            acc = acc.dot(&full);
        }
        let d = Array2::from_diag(&Array1::from_iter(
            phases.iter().map(|&p| Complex::from_polar(1.0, p)),
        ));
        assert!(max_abs_diff(&acc.dot(&d), &u) < 1e-13);
    }
}
