//! The partially time-reversed (PTR) linear network of a nonlinear circuit:
//! every PDC becomes a hypothetical beamsplitter with `R = tanh r`, idler
//! networks enter transposed, and the stages are chained with the star
//! product. The normalisation coefficient collects the beamsplitter
//! transmittances and one cavity factor per PDC.

use crate::circuit::{Circuit, Element, Stage};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::{Cx, Real};
use crate::scatter::{embed_linear_pair, hypothetical_bs, star, ScatteringMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PtrSetup<T: Real> {
    pub scattering: ScatteringMatrix<T>,
    pub nc: Cx<T>,
    /// One cavity factor per nonzero-gain PDC, in circuit order.
    pub beta_factors: Vec<Cx<T>>,
    /// Product of all beamsplitter transmittances `sech r`.
    pub t_product: T,
}

impl<T: Real> PtrSetup<T> {
    pub fn n_s(&self) -> usize {
        self.scattering.n_s()
    }

    pub fn n_i(&self) -> usize {
        self.scattering.n_i()
    }
}

/// Scattering matrix of each stage of the circuit, in order.
pub fn stage_matrices<T: Real>(circuit: &Circuit<T>) -> Result<Vec<ScatteringMatrix<T>>> {
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    circuit
        .stages()
        .iter()
        .map(|st| match st {
            Stage::Pdc { s, i, r } => hypothetical_bs(*r, *s, *i, n_s, n_i),
            Stage::Linear { s, i } => embed_linear_pair(s.as_ref(), i.as_ref(), n_s, n_i),
        })
        .collect()
}

pub fn build_ptr<T: Real>(circuit: &Circuit<T>) -> Result<PtrSetup<T>> {
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    let one = Cx::new(T::one(), T::zero());
    let mut acc = ScatteringMatrix::identity(n_s, n_i);
    let mut betas = Vec::new();
    let mut t_product = T::one();
    for (st, m) in circuit.stages().iter().zip(stage_matrices(circuit)?) {
        if let Stage::Pdc { r, .. } = st {
            let feedback = linalg::eye::<T>(n_s) - acc.si.dot(&m.is);
            let d = linalg::det(&feedback);
            if d.norm() == T::zero() || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::SingularCavity {
                    cond: f64::INFINITY,
                    bound: crate::scatter::DEFAULT_COND_BOUND,
                });
            }
            betas.push(one / d);
            t_product = t_product / r.cosh();
        }
        acc = star(&acc, &m)?;
    }
    let nc = betas.iter().fold(one * t_product, |a, b| a * *b);
    Ok(PtrSetup {
        scattering: acc,
        nc,
        beta_factors: betas,
        t_product,
    })
}

/// `sum_{n < terms} (-R u)^n`: the light looping `n` times inside a cavity
/// formed by a beamsplitter of reflectance `R` and a preceding network with
/// idler-to-signal entry `u`.
pub fn looping_series<T: Real>(refl: T, u: Cx<T>, terms: usize) -> Cx<T> {
    let x = -u * refl;
    let mut term = Cx::new(T::one(), T::zero());
    let mut sum = Cx::new(T::zero(), T::zero());
    for _ in 0..terms {
        sum = sum + term;
        term = term * x;
    }
    sum
}

/// Phase-plate circuit of two equal PDCs on one path pair: the nonlinear
/// interferometer with phases `phi_s` and `phi_i` between the crystals.
pub fn su11_circuit<T: Real>(r: T, phi_s: T, phi_i: T) -> Result<Circuit<T>> {
    Circuit::new(1, 1)?
        .pdc(0, 0, r)?
        .phase_s(0, phi_s)?
        .phase_i(0, phi_i)?
        .pdc(0, 0, r)
}

/// Expected network and coefficient of [`su11_circuit`].
pub fn su11_expected<T: Real>(r: T, phi_s: T, phi_i: T) -> (CMatrix<T>, Cx<T>) {
    let (t, refl) = (T::one() / r.cosh(), r.tanh());
    let phi = phi_s + phi_i;
    let two = T::one() + T::one();
    let beta = Cx::new(T::one(), T::zero())
        / (Cx::new(T::one(), T::zero()) + crate::scalar::phase(phi) * refl * refl);
    let off = beta * crate::scalar::phase(phi / two) * (two * refl * (phi / two).cos());
    let m = ndarray::arr2(&[
        [beta * crate::scalar::phase(phi_s) * (t * t), off],
        [-off, beta * crate::scalar::phase(phi_i) * (t * t)],
    ]);
    (m, beta * (t * t))
}

/// Gains for the two-signal-path cancellation: `r` solves
/// `cosh r tanh r2 = tanh r1`, which needs `r1 > r2`.
pub fn cancellation_gain<T: Real>(r1: T, r2: T) -> Result<T> {
    if !(r1 > r2 && r2 > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "cancellation needs r1 > r2 > 0, got r1 = {r1}, r2 = {r2}"
        )));
    }
    Ok((r1.tanh() / r2.tanh()).acosh())
}

/// PDC `r1` on (s1, i), a pi phase on s1, PDC `r` on (s2, i), then PDC `r2`
/// on (s1, i), with `r` from [`cancellation_gain`].
pub fn cancellation_circuit<T: Real>(r1: T, r2: T) -> Result<Circuit<T>> {
    let r = cancellation_gain(r1, r2)?;
    Circuit::new(2, 1)?
        .pdc(0, 0, r1)?
        .phase_s(0, T::PI())?
        .pdc(1, 0, r)?
        .pdc(0, 0, r2)
}

/// The network of [`cancellation_circuit`] in closed form (order s1, s2, i)
/// and its coefficient `T1 T / T2`.
pub fn cancellation_expected<T: Real>(r1: T, r2: T) -> Result<(CMatrix<T>, Cx<T>)> {
    let r = cancellation_gain(r1, r2)?;
    let (t1, t2, t) = (
        T::one() / r1.cosh(),
        T::one() / r2.cosh(),
        T::one() / r.cosh(),
    );
    let (q1, q2, q) = (r1.tanh(), r2.tanh(), r.tanh());
    let c = |x: T| Cx::new(x / (t2 * t2), T::zero());
    let m = ndarray::arr2(&[
        [c(-t1 * t2), c(q * q1 * t2), c(T::zero())],
        [c(q * q2 * t1), c(t * t1 * t1), c(q * t2)],
        [c(-q * q * q1), c(-q * t1), c(t * t1 * t2)],
    ]);
    Ok((m, Cx::new(t1 * t / t2, T::zero())))
}

#[derive(Debug, Clone)]
pub struct CancellationReport<T: Real> {
    pub r1: T,
    pub r2: T,
    pub r: T,
    pub built: CMatrix<T>,
    pub expected: CMatrix<T>,
    /// Largest entry difference between `built` and `expected`.
    pub matrix_residual: T,
    /// `|U_{s1, i}|` of the built network.
    pub s1_i_coupling: T,
    pub nc: Cx<T>,
    pub nc_expected: Cx<T>,
}

/// Builds the two-signal-path network and compares it with its closed form.
pub fn verify_special_cancellation<T: Real>(r1: T, r2: T) -> Result<CancellationReport<T>> {
    let r = cancellation_gain(r1, r2)?;
    let setup = build_ptr(&cancellation_circuit(r1, r2)?)?;
    let (expected, nc_expected) = cancellation_expected(r1, r2)?;
    let built = setup.scattering.full();
    Ok(CancellationReport {
        r1,
        r2,
        r,
        matrix_residual: linalg::max_abs_diff(&built, &expected),
        s1_i_coupling: built[[0, 2]].norm(),
        built,
        expected,
        nc: setup.nc,
        nc_expected,
    })
}

/// Product of the determinants of all signal-side linear elements.
pub fn signal_linear_det<T: Real>(circuit: &Circuit<T>) -> Cx<T> {
    circuit
        .elements()
        .iter()
        .fold(Cx::new(T::one(), T::zero()), |acc, e| match e {
            Element::LinearS(u) => acc * linalg::det(u),
            Element::PhaseS { phi, .. } => acc * crate::scalar::phase(*phi),
            _ => acc,
        })
}
