//! Block scattering and transfer matrices of the linear dual network, the
//! Redheffer star product, and the symplectic identities of transfer matrices.
//!
//! Signal light runs left to right and idler light right to left. A
//! scattering matrix maps the inputs `(a_s, a_i)` (left signal, right idler)
//! to the outputs `(a_s', a_i')`; a transfer matrix maps the left-side pair
//! `(a_s, a_i')` to the right-side pair `(a_s', a_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{Cx, Real};

/// Default bound on the condition number of a cavity feedback matrix.
pub const DEFAULT_COND_BOUND: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix<T: Real> {
    pub ss: CMatrix<T>,
    pub si: CMatrix<T>,
    pub is: CMatrix<T>,
    pub ii: CMatrix<T>,
}

/// Which path family a linear network acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    S,
    I,
}

impl<T: Real> ScatteringMatrix<T> {
    pub fn from_blocks(
        ss: CMatrix<T>,
        si: CMatrix<T>,
        is: CMatrix<T>,
        ii: CMatrix<T>,
    ) -> Result<Self> {
        let (n_s, n_i) = (ss.nrows(), ii.nrows());
        if ss.ncols() != n_s
            || ii.ncols() != n_i
            || si.dim() != (n_s, n_i)
            || is.dim() != (n_i, n_s)
        {
            return Err(Error::DimensionMismatch(format!(
                "blocks ss {:?}, si {:?}, is {:?}, ii {:?} do not tile a square matrix",
                ss.dim(),
                si.dim(),
                is.dim(),
                ii.dim()
            )));
        }
        Ok(ScatteringMatrix { ss, si, is, ii })
    }

    /// Splits a full `(n_s + n_i)` square matrix after the first `n_s` rows and columns.
    pub fn from_full(m: &CMatrix<T>, n_s: usize) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || n_s > n {
            return Err(Error::DimensionMismatch(format!(
                "cannot split a {:?} matrix at {n_s}",
                m.dim()
            )));
        }
        let b = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m.slice(ndarray::s![r0..r1, c0..c1]).to_owned()
        };
        Ok(ScatteringMatrix {
            ss: b(0, n_s, 0, n_s),
            si: b(0, n_s, n_s, n),
            is: b(n_s, n, 0, n_s),
            ii: b(n_s, n, n_s, n),
        })
    }

    pub fn identity(n_s: usize, n_i: usize) -> Self {
        ScatteringMatrix {
            ss: linalg::eye(n_s),
            si: linalg::zeros(n_s, n_i),
            is: linalg::zeros(n_i, n_s),
            ii: linalg::eye(n_i),
        }
    }

    pub fn n_s(&self) -> usize {
        self.ss.nrows()
    }

    pub fn n_i(&self) -> usize {
        self.ii.nrows()
    }

    /// `[[ss, si], [is, ii]]`
    pub fn full(&self) -> CMatrix<T> {
        linalg::block2(&self.ss, &self.si, &self.is, &self.ii)
    }

    pub fn unitarity_deviation(&self) -> T {
        linalg::unitarity_deviation(&self.full())
    }

    /// Entry `U_{s_k, i_l}`, the idler-to-signal coupling.
    pub fn si_entry(&self, k: usize, l: usize) -> Cx<T> {
        self.si[[k, l]]
    }
}

/// Hypothetical beamsplitter replacing a PDC of gain `r` on `(s_path, i_path)`:
/// transmittance `sech r` on the two paths, `+tanh r` from idler to signal
/// and `-tanh r` from signal to idler.
pub fn hypothetical_bs<T: Real>(
    r: T,
    s_path: usize,
    i_path: usize,
    n_s: usize,
    n_i: usize,
) -> Result<ScatteringMatrix<T>> {
    if !(r.is_finite() && r >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "gain must be finite and >= 0, got {r}"
        )));
    }
    if s_path >= n_s || i_path >= n_i {
        return Err(Error::InvalidArgument(format!(
            "paths (s{s_path}, i{i_path}) outside {n_s}+{n_i}"
        )));
    }
    let (t, refl) = (T::one() / r.cosh(), r.tanh());
    let mut m = ScatteringMatrix::identity(n_s, n_i);
    m.ss[[s_path, s_path]] = Cx::new(t, T::zero());
    m.ii[[i_path, i_path]] = Cx::new(t, T::zero());
    m.si[[s_path, i_path]] = Cx::new(refl, T::zero());
    m.is[[i_path, s_path]] = Cx::new(-refl, T::zero());
    Ok(m)
}

/// Linear network on one family as a scattering matrix; idler networks enter
/// transposed. `other` is the number of paths of the untouched family.
pub fn embed_linear<T: Real>(
    l: &CMatrix<T>,
    side: Side,
    other: usize,
) -> Result<ScatteringMatrix<T>> {
    linalg::check_unitary(l, T::validation_tol())?;
    Ok(match side {
        Side::S => ScatteringMatrix {
            ss: l.clone(),
            ..ScatteringMatrix::identity(l.nrows(), other)
        },
        Side::I => ScatteringMatrix {
            ii: linalg::transpose(l),
            ..ScatteringMatrix::identity(other, l.nrows())
        },
    })
}

/// `diag(L_s, L_i^T)`; `None` stands for the identity.
pub fn embed_linear_pair<T: Real>(
    ls: Option<&CMatrix<T>>,
    li: Option<&CMatrix<T>>,
    n_s: usize,
    n_i: usize,
) -> Result<ScatteringMatrix<T>> {
    let mut m = ScatteringMatrix::identity(n_s, n_i);
    if let Some(l) = ls {
        m.ss = embed_linear(l, Side::S, n_i)?.ss;
    }
    if let Some(l) = li {
        m.ii = embed_linear(l, Side::I, n_s)?.ii;
    }
    if m.ss.nrows() != n_s || m.ii.nrows() != n_i {
        return Err(Error::DimensionMismatch(format!(
            "linear networks do not fit {n_s}+{n_i} paths"
        )));
    }
    Ok(m)
}

fn feedback_inverse<T: Real>(m: &CMatrix<T>, bound: f64) -> Result<CMatrix<T>> {
    let singular = |cond: f64| Error::SingularCavity { cond, bound };
    match linalg::inverse_with_cond(m) {
        Ok((inv, cond)) => {
            let cond = cond.to_f64().unwrap_or(f64::INFINITY);
            if cond.is_finite() && cond <= bound {
                Ok(inv)
            } else {
                Err(singular(cond))
            }
        }
        Err(_) => Err(singular(f64::INFINITY)),
    }
}

/// Redheffer star product: signal light passes `first`, then `second`, with
/// multiple reflections between them summed.
pub fn star<T: Real>(
    first: &ScatteringMatrix<T>,
    second: &ScatteringMatrix<T>,
) -> Result<ScatteringMatrix<T>> {
    star_with_bound(first, second, DEFAULT_COND_BOUND)
}

pub fn star_with_bound<T: Real>(
    a: &ScatteringMatrix<T>,
    b: &ScatteringMatrix<T>,
    bound: f64,
) -> Result<ScatteringMatrix<T>> {
    if a.n_s() != b.n_s() || a.n_i() != b.n_i() {
        return Err(Error::DimensionMismatch(format!(
            "star of {}+{} and {}+{} networks",
            a.n_s(),
            a.n_i(),
            b.n_s(),
            b.n_i()
        )));
    }
    let m = linalg::eye::<T>(a.n_s()) - a.si.dot(&b.is);
    let n = linalg::eye::<T>(a.n_i()) - b.is.dot(&a.si);
    let mi = feedback_inverse(&m, bound)?;
    let ni = feedback_inverse(&n, bound)?;
    let bm = b.ss.dot(&mi);
    let an = a.ii.dot(&ni);
    Ok(ScatteringMatrix {
        ss: bm.dot(&a.ss),
        si: &b.si + &bm.dot(&a.si).dot(&b.ii),
        is: &a.is + &an.dot(&b.is).dot(&a.ss),
        ii: an.dot(&b.ii),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T: Real> {
    pub ss: CMatrix<T>,
    pub si: CMatrix<T>,
    pub is: CMatrix<T>,
    pub ii: CMatrix<T>,
}

impl<T: Real> TransferMatrix<T> {
    pub fn identity(n_s: usize, n_i: usize) -> Self {
        let s = ScatteringMatrix::identity(n_s, n_i);
        TransferMatrix {
            ss: s.ss,
            si: s.si,
            is: s.is,
            ii: s.ii,
        }
    }

    pub fn n_s(&self) -> usize {
        self.ss.nrows()
    }

    pub fn n_i(&self) -> usize {
        self.ii.nrows()
    }

    pub fn full(&self) -> CMatrix<T> {
        linalg::block2(&self.ss, &self.si, &self.is, &self.ii)
    }

    pub fn from_full(m: &CMatrix<T>, n_s: usize) -> Result<Self> {
        let s = ScatteringMatrix::from_full(m, n_s)?;
        Ok(TransferMatrix {
            ss: s.ss,
            si: s.si,
            is: s.is,
            ii: s.ii,
        })
    }

    /// `self` after `earlier` (left to right): the product `self * earlier`.
    pub fn then_after(&self, earlier: &TransferMatrix<T>) -> TransferMatrix<T> {
        let m = self.full().dot(&earlier.full());
        TransferMatrix::from_full(&m, self.n_s()).expect("square product")
    }

    fn z(&self) -> CMatrix<T> {
        let mut z = linalg::eye::<T>(self.n_s() + self.n_i());
        for k in self.n_s()..z.nrows() {
            z[[k, k]] = -z[[k, k]];
        }
        z
    }

    /// `max(|T Z T^dag - Z|, |T^dag Z T - Z|)` with `Z = diag(I, -I)`.
    pub fn symplectic_residual(&self) -> T {
        let (t, z) = (self.full(), self.z());
        let td = linalg::dagger(&t);
        let a = linalg::max_abs_diff(&t.dot(&z).dot(&td), &z);
        let b = linalg::max_abs_diff(&td.dot(&z).dot(&t), &z);
        a.max(b)
    }

    /// The eight block relations implied by the symplectic condition, each
    /// as a max-entry residual.
    pub fn block_relation_residuals(&self) -> [T; 8] {
        let d = linalg::dagger::<T>;
        let (ss, si, is, ii) = (&self.ss, &self.si, &self.is, &self.ii);
        let (is_, ii_) = (linalg::eye::<T>(self.n_s()), linalg::eye::<T>(self.n_i()));
        let zsi = linalg::zeros::<T>(self.n_s(), self.n_i());
        let zis = linalg::zeros::<T>(self.n_i(), self.n_s());
        let r = |m: CMatrix<T>, want: &CMatrix<T>| linalg::max_abs_diff(&m, want);
        [
            r(ss.dot(&d(ss)) - si.dot(&d(si)), &is_),
            r(ii.dot(&d(ii)) - is.dot(&d(is)), &ii_),
            r(ss.dot(&d(is)) - si.dot(&d(ii)), &zsi),
            r(is.dot(&d(ss)) - ii.dot(&d(si)), &zis),
            r(d(ss).dot(ss) - d(is).dot(is), &is_),
            r(d(ii).dot(ii) - d(si).dot(si), &ii_),
            r(d(ss).dot(si) - d(is).dot(ii), &zsi),
            r(d(si).dot(ss) - d(ii).dot(is), &zis),
        ]
    }

    /// `|det T|`
    pub fn det_modulus(&self) -> T {
        linalg::det(&self.full()).norm()
    }
}

fn invert_block<T: Real>(m: &CMatrix<T>, what: &str) -> Result<CMatrix<T>> {
    linalg::inverse(m).map_err(|_| Error::Singular(format!("{what} block is singular")))
}

pub fn scattering_to_transfer<T: Real>(s: &ScatteringMatrix<T>) -> Result<TransferMatrix<T>> {
    let ii_inv = invert_block(&s.ii, "scattering ii")?;
    let si_ii = s.si.dot(&ii_inv);
    Ok(TransferMatrix {
        ss: &s.ss - &si_ii.dot(&s.is),
        si: si_ii,
        is: -ii_inv.dot(&s.is),
        ii: ii_inv,
    })
}

pub fn transfer_to_scattering<T: Real>(t: &TransferMatrix<T>) -> Result<ScatteringMatrix<T>> {
    let ii = invert_block(&t.ii, "transfer ii")?;
    let si = t.si.dot(&ii);
    Ok(ScatteringMatrix {
        ss: &t.ss - &si.dot(&t.is),
        si,
        is: -ii.dot(&t.is),
        ii,
    })
}

/// `V = [[I, -T_si T_ii^-1], [0, -T_ii^-1]]`
pub fn v_matrix<T: Real>(t: &TransferMatrix<T>) -> Result<CMatrix<T>> {
    let ii_inv = invert_block(&t.ii, "transfer ii")?;
    Ok(linalg::block2(
        &linalg::eye(t.n_s()),
        &-t.si.dot(&ii_inv),
        &linalg::zeros(t.n_i(), t.n_s()),
        &-ii_inv,
    ))
}

/// `max |((T T^dag + I) / 2)^-1 - V^dag V|`
pub fn inverse_identity_residual<T: Real>(t: &TransferMatrix<T>) -> Result<T> {
    let v = v_matrix(t)?;
    let full = t.full();
    let n = full.nrows();
    let two = T::one() + T::one();
    let m = (full.dot(&linalg::dagger(&full)) + linalg::eye::<T>(n)).mapv(|x| x / two);
    let lhs = linalg::inverse(&m)?;
    Ok(linalg::max_abs_diff(&lhs, &linalg::dagger(&v).dot(&v)))
}
