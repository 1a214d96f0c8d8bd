//! Gaussian states of the signal and idler modes, the symplectic maps of
//! nonlinear circuits, and Husimi Q-functions.
//!
//! Vectors use the `(alpha, alpha^*)` ordering: the N mode amplitudes (signal
//! paths, then idler paths) followed by their conjugates. The covariance is
//! `sigma_jk = <{d xi_j, d xi_k^dag}> / 2` with `xi = (a, a^dag)`, so the
//! vacuum has `sigma = I / 2`.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::ptr::build_ptr;
use crate::scalar::{from_usize, lit, Cx, Real};
use crate::scatter::{scattering_to_transfer, TransferMatrix};

/// Smallest eigenvalue accepted for `sigma + I/2`.
pub const PD_FLOOR: f64 = 1e-12;

fn half<T: Real>() -> T {
    T::one() / (T::one() + T::one())
}

/// `[[0, I], [I, 0]]`
fn half_swap<T: Real>(n: usize) -> CMatrix<T> {
    let mut x = linalg::zeros::<T>(2 * n, 2 * n);
    for k in 0..n {
        x[[k, n + k]] = Cx::new(T::one(), T::zero());
        x[[n + k, k]] = Cx::new(T::one(), T::zero());
    }
    x
}

/// `diag(I, -I)`
fn k_metric<T: Real>(n: usize) -> CMatrix<T> {
    let mut k = linalg::eye::<T>(2 * n);
    for j in n..2 * n {
        k[[j, j]] = -k[[j, j]];
    }
    k
}

/// `(v, v^*)`
pub fn doubled<T: Real>(v: &[Cx<T>]) -> CVector<T> {
    v.iter()
        .copied()
        .chain(v.iter().map(|z| z.conj()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    displacement: CVector<T>,
    covariance: CMatrix<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn new(displacement: CVector<T>, covariance: CMatrix<T>) -> Result<Self> {
        let s = GaussianState {
            displacement,
            covariance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuum(modes: usize) -> Self {
        GaussianState {
            displacement: Array1::zeros(2 * modes),
            covariance: linalg::eye::<T>(2 * modes).mapv(|x| x * half::<T>()),
        }
    }

    /// Multimode coherent state with the given amplitudes.
    pub fn coherent(alphas: &[Cx<T>]) -> Self {
        GaussianState {
            displacement: doubled(alphas),
            ..GaussianState::vacuum(alphas.len())
        }
    }

    pub fn modes(&self) -> usize {
        self.displacement.len() / 2
    }

    pub fn displacement(&self) -> &CVector<T> {
        &self.displacement
    }

    pub fn covariance(&self) -> &CMatrix<T> {
        &self.covariance
    }

    /// `sigma + I / 2`
    pub fn q_covariance(&self) -> CMatrix<T> {
        &self.covariance + &linalg::eye::<T>(self.covariance.nrows()).mapv(|x| x * half::<T>())
    }

    /// `<a_k^dag a_k>`
    pub fn mean_photon_number(&self, k: usize) -> T {
        self.covariance[[k, k]].re - half::<T>() + self.displacement[k].norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        let n2 = self.displacement.len();
        if !n2.is_multiple_of(2) || self.covariance.dim() != (n2, n2) {
            return Err(Error::DimensionMismatch(format!(
                "displacement of length {n2} with a {:?} covariance",
                self.covariance.dim()
            )));
        }
        let n = n2 / 2;
        let tol = lit::<T>(1e-12).max(T::epsilon() * from_usize::<T>(64));
        for k in 0..n {
            if (self.displacement[n + k] - self.displacement[k].conj()).norm() > tol {
                return Err(Error::InvalidArgument(format!(
                    "displacement entry {} is not the conjugate of {k}",
                    n + k
                )));
            }
        }
        let deviation = linalg::hermiticity_deviation(&self.covariance);
        if deviation > tol {
            return Err(Error::NotHermitian {
                deviation: deviation.to_f64().unwrap_or(f64::NAN),
            });
        }
        let x = half_swap::<T>(n);
        let mirrored = x.dot(&linalg::conj(&self.covariance)).dot(&x);
        let deviation = linalg::max_abs_diff(&mirrored, &self.covariance);
        if deviation > tol {
            return Err(Error::InvalidArgument(format!(
                "covariance lacks the conjugate block structure ({deviation})"
            )));
        }
        let min_eig = linalg::hermitian_min_eigenvalue(&self.q_covariance());
        if !(min_eig > lit::<T>(PD_FLOOR)) {
            return Err(Error::NotPositiveDefinite {
                min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }
}

/// Linear map `xi -> F xi` of the mode operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap<T: Real> {
    matrix: CMatrix<T>,
}

impl<T: Real> SymplecticMap<T> {
    /// Validates the conjugate structure and `F K F^dag = K`.
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        let m = SymplecticMap { matrix };
        let tol = lit::<T>(1e-10).max(T::validation_tol());
        let residual = m.residual();
        if !(residual <= tol) {
            return Err(Error::NotSymplectic {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(m)
    }

    pub fn identity(modes: usize) -> Self {
        SymplecticMap {
            matrix: linalg::eye(2 * modes),
        }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Largest of the conjugate-structure and metric residuals.
    pub fn residual(&self) -> T {
        let n2 = self.matrix.nrows();
        if !n2.is_multiple_of(2) || self.matrix.ncols() != n2 {
            return T::infinity();
        }
        let (x, k) = (half_swap::<T>(n2 / 2), k_metric::<T>(n2 / 2));
        let a = linalg::max_abs_diff(&self.matrix.dot(&x), &x.dot(&linalg::conj(&self.matrix)));
        let b = linalg::max_abs_diff(&self.matrix.dot(&k).dot(&linalg::dagger(&self.matrix)), &k);
        a.max(b)
    }

    /// The map of a circuit whose dual network has transfer matrix `t`.
    pub fn from_transfer(t: &TransferMatrix<T>) -> Result<Self> {
        let (n_s, n_i) = (t.n_s(), t.n_i());
        let n = n_s + n_i;
        let mut f = linalg::zeros::<T>(2 * n, 2 * n);
        let mut put = |r0: usize, c0: usize, b: &CMatrix<T>| {
            f.slice_mut(ndarray::s![r0..r0 + b.nrows(), c0..c0 + b.ncols()])
                .assign(b);
        };
        // rows and columns: alpha_s, alpha_i, alpha_s^*, alpha_i^*
        let (s, i, sc, ic) = (0, n_s, n, n + n_s);
        put(s, s, &t.ss);
        put(s, ic, &t.si);
        put(i, i, &linalg::conj(&t.ii));
        put(i, sc, &linalg::conj(&t.is));
        put(sc, i, &linalg::conj(&t.si));
        put(sc, sc, &linalg::conj(&t.ss));
        put(ic, s, &t.is);
        put(ic, ic, &t.ii);
        SymplecticMap::new(f)
    }

    pub fn from_circuit(circuit: &Circuit<T>) -> Result<Self> {
        SymplecticMap::from_transfer(&scattering_to_transfer(&build_ptr(circuit)?.scattering)?)
    }

    /// `self` applied after `earlier`.
    pub fn compose(&self, earlier: &SymplecticMap<T>) -> SymplecticMap<T> {
        SymplecticMap {
            matrix: self.matrix.dot(&earlier.matrix),
        }
    }
}

/// `sigma' = F sigma F^dag`, `a' = F a`.
pub fn evolve<T: Real>(f: &SymplecticMap<T>, state: &GaussianState<T>) -> Result<GaussianState<T>> {
    if f.modes() != state.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{}-mode map on a {}-mode state",
            f.modes(),
            state.modes()
        )));
    }
    let m = f.matrix();
    Ok(GaussianState {
        displacement: m.dot(&state.displacement),
        covariance: m.dot(&state.covariance).dot(&linalg::dagger(m)),
    })
}

/// Normalised Husimi function at the coherent amplitudes `beta` (signal
/// paths, then idler paths):
/// `exp(-(b - a)^dag sigma_Q^-1 (b - a) / 2) / (pi^N sqrt(det sigma_Q))`.
pub fn q_function<T: Real>(state: &GaussianState<T>, beta: &[Cx<T>]) -> Result<T> {
    let n = state.modes();
    if beta.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {n} modes",
            beta.len()
        )));
    }
    let sq = state.q_covariance();
    let min_eig = linalg::hermitian_min_eigenvalue(&sq);
    if !(min_eig > lit::<T>(PD_FLOOR)) {
        return Err(Error::NotPositiveDefinite {
            min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
        });
    }
    let lu = linalg::Lu::factor(&sq)?;
    let d = &doubled(beta) - &state.displacement;
    let col = d.clone().into_shape((2 * n, 1)).expect("column");
    let solved = lu.solve(&col);
    let quad = d
        .iter()
        .zip(solved.iter())
        .fold(Cx::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * *y)
        .re;
    let det = lu.det().re;
    Ok((-quad * half()).exp() / (T::PI().powi(n as i32) * det.sqrt()))
}

/// Monte-Carlo estimate of `int Q d^2N beta` over the box
/// `|Re beta_k|, |Im beta_k| <= half_width`, with uniform seeded samples.
pub fn q_normalization_mc<T: Real>(
    state: &GaussianState<T>,
    half_width: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = state.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    let mut beta = vec![Cx::new(T::zero(), T::zero()); n];
    for _ in 0..samples {
        for b in beta.iter_mut() {
            *b = Cx::new(
                lit(rng.gen_range(-half_width..half_width)),
                lit(rng.gen_range(-half_width..half_width)),
            );
        }
        acc += q_function(state, &beta)?.to_f64().unwrap_or(f64::NAN);
    }
    Ok(acc / samples as f64 * (2.0 * half_width).powi(2 * n as i32))
}

/// Both sides of the coherent-state Q-function duality of a circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDuality<T: Real> {
    /// `Q(beta_s, beta_i)` of the evolved coherent state.
    pub q_nonlinear: T,
    /// `|nc|^2 Q_PTR(beta_s, alpha_i^*)` from the linear network.
    pub q_ptr: T,
    pub rel_residual: T,
    pub nc_abs: T,
    pub det_uii_abs: T,
}

impl<T: Real> QDuality<T> {
    /// `| |nc| - |det U_ii| |`
    pub fn nc_residual(&self) -> T {
        (self.nc_abs - self.det_uii_abs).abs()
    }
}

fn rel_diff<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    (a - b).abs() / scale
}

/// Coherent input `(alpha_s, alpha_i)`, Q-function at `(beta_s, beta_i)`:
/// the Gaussian evolution against `|nc|^2 exp(-|(beta_s, alpha_i^*) -
/// U (alpha_s, beta_i^*)|^2) / pi^N` from the dual network.
pub fn q_duality_residual<T: Real>(
    circuit: &Circuit<T>,
    alpha_s: &[Cx<T>],
    alpha_i: &[Cx<T>],
    beta_s: &[Cx<T>],
    beta_i: &[Cx<T>],
) -> Result<QDuality<T>> {
    let (n_s, n_i) = (circuit.n_s(), circuit.n_i());
    if alpha_s.len() != n_s || beta_s.len() != n_s || alpha_i.len() != n_i || beta_i.len() != n_i {
        return Err(Error::DimensionMismatch(format!(
            "coherent amplitudes do not match {n_s}+{n_i} paths"
        )));
    }
    let ptr = build_ptr(circuit)?;
    let f = SymplecticMap::from_transfer(&scattering_to_transfer(&ptr.scattering)?)?;
    let input: Vec<Cx<T>> = alpha_s.iter().chain(alpha_i).copied().collect();
    let out = evolve(&f, &GaussianState::coherent(&input))?;
    let beta: Vec<Cx<T>> = beta_s.iter().chain(beta_i).copied().collect();
    let q_nonlinear = q_function(&out, &beta)?;

    let lin_in: CVector<T> = alpha_s
        .iter()
        .copied()
        .chain(beta_i.iter().map(|z| z.conj()))
        .collect();
    let target: CVector<T> = beta_s
        .iter()
        .copied()
        .chain(alpha_i.iter().map(|z| z.conj()))
        .collect();
    let diff = &target - &ptr.scattering.full().dot(&lin_in);
    let dist = diff.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let nc_abs = ptr.nc.norm();
    let q_ptr = nc_abs * nc_abs * (-dist).exp() / T::PI().powi((n_s + n_i) as i32);
    Ok(QDuality {
        q_nonlinear,
        q_ptr,
        rel_residual: rel_diff(q_nonlinear, q_ptr),
        nc_abs,
        det_uii_abs: linalg::det(&ptr.scattering.ii).norm(),
    })
}

/// The single-mode squeezer `exp[r (a^dag2 - a^2) / 2]` as a map.
pub fn single_mode_squeezer<T: Real>(r: T) -> SymplecticMap<T> {
    let (c, s) = (Cx::new(r.cosh(), T::zero()), Cx::new(r.sinh(), T::zero()));
    SymplecticMap {
        matrix: ndarray::arr2(&[[c, s], [s, c]]),
    }
}

/// `|<beta| S(r) |alpha>|^2` from the Gaussian route against
/// `|det U_ii| |<beta/sqrt2; alpha^*/sqrt2| U |alpha/sqrt2; beta^*/sqrt2>|^2`
/// for the same-wavelength beamsplitter `U = [[T, R], [-R, T]]`. Returns the
/// relative residual.
pub fn sms_coherent_duality_residual<T: Real>(r: T, alpha: Cx<T>, beta: Cx<T>) -> Result<T> {
    if !(r.is_finite() && r >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "gain must be finite and >= 0, got {r}"
        )));
    }
    let out = evolve(&single_mode_squeezer(r), &GaussianState::coherent(&[alpha]))?;
    let lhs = q_function(&out, &[beta])? * T::PI();
    let (t, refl) = (T::one() / r.cosh(), r.tanh());
    let root2 = (T::one() + T::one()).sqrt();
    let (a, b) = (alpha / root2, beta / root2);
    let u = [[t, refl], [-refl, t]];
    let (x, y) = (a, b.conj());
    let out0 = x * u[0][0] + y * u[0][1];
    let out1 = x * u[1][0] + y * u[1][1];
    let dist = (b - out0).norm_sqr() + (a.conj() - out1).norm_sqr();
    let rhs = t * (-dist).exp();
    Ok(rel_diff(lhs, rhs))
}

/// Squeezed-vacuum Q-function `sech r exp(-|beta|^2 + tanh r Re beta^2) / pi`.
pub fn squeezed_vacuum_q<T: Real>(r: T, beta: Cx<T>) -> T {
    (-beta.norm_sqr() + r.tanh() * (beta * beta).re).exp() / (r.cosh() * T::PI())
}

/// Builds a state from a displacement in `(alpha, alpha^*)` ordering given
/// only by its first half.
pub fn displaced<T: Real>(state: &GaussianState<T>, alphas: &[Cx<T>]) -> Result<GaussianState<T>> {
    if alphas.len() != state.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {} modes",
            alphas.len(),
            state.modes()
        )));
    }
    GaussianState::new(
        &state.displacement + &doubled(alphas),
        state.covariance.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_observable_expectation, FamilyState, FockSpace, Observable};
    use crate::scatter::{hypothetical_bs, v_matrix};
    use ndarray::Array2;

    fn haar(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
        let g = Array2::from_shape_fn((n, n), |_| {
            Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        linalg::gram_schmidt(&g)
    }

    fn random_circuit(seed: u64, n_s: usize, n_i: usize, pdcs: usize) -> Circuit<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Circuit::new(n_s, n_i).unwrap();
        for _ in 0..pdcs {
            c = c
                .linear_s(haar(&mut rng, n_s))
                .unwrap()
                .linear_i(haar(&mut rng, n_i))
                .unwrap();
            c = c
                .pdc(
                    rng.gen_range(0..n_s),
                    rng.gen_range(0..n_i),
                    rng.gen_range(0.0..1.0),
                )
                .unwrap();
        }
        c.linear_s(haar(&mut rng, n_s))
            .unwrap()
            .linear_i(haar(&mut rng, n_i))
            .unwrap()
    }

    fn rand_cx(rng: &mut ChaCha8Rng, n: usize) -> Vec<Cx<f64>> {
        (0..n)
            .map(|_| Cx::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
            .collect()
    }

    #[test]
    fn identity_and_vacuum() {
        let v = GaussianState::<f64>::vacuum(2);
        assert_eq!(evolve(&SymplecticMap::identity(2), &v).unwrap(), v);
        let q = q_function(&v, &[Cx::new(0.0, 0.0); 2]).unwrap();
        assert!((q - 1.0 / std::f64::consts::PI.powi(2)).abs() < 1e-15);
        let t = TransferMatrix::<f64>::identity(1, 2);
        assert_eq!(
            SymplecticMap::from_transfer(&t).unwrap(),
            SymplecticMap::identity(3)
        );
    }

    #[test]
    fn single_pdc_map_and_photon_numbers() {
        let r = 0.6f64;
        let f = SymplecticMap::from_circuit(&Circuit::new(1, 1).unwrap().pdc(0, 0, r).unwrap())
            .unwrap();
        let m = f.matrix();
        assert!((m[[0, 0]].re - r.cosh()).abs() < 1e-14);
        assert!((m[[0, 3]].re - r.sinh()).abs() < 1e-14);
        assert!((m[[1, 2]].re - r.sinh()).abs() < 1e-14);
        assert_eq!(m[[0, 1]], Cx::new(0.0, 0.0));
        assert_eq!(m[[0, 2]], Cx::new(0.0, 0.0));
        let out = evolve(&f, &GaussianState::vacuum(2)).unwrap();
        out.validate().unwrap();
        assert!((out.mean_photon_number(0) - r.sinh().powi(2)).abs() < 1e-14);
        assert!((out.mean_photon_number(1) - r.sinh().powi(2)).abs() < 1e-14);
        // against the Fock simulation
        let c = Circuit::new(1, 1).unwrap().pdc(0, 0, r).unwrap();
        let vac = FamilyState::fock(&[0]).unwrap();
        let n = apply_observable_expectation(
            &c,
            &Observable::Number(0),
            &Observable::Identity,
            &vac,
            &vac,
            &FockSpace::new(1, 1, 80).unwrap(),
        )
        .unwrap();
        assert!((n - out.mean_photon_number(0)).abs() < 1e-10);
    }

    #[test]
    fn linear_map_rotates_displacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar(&mut rng, 2);
        let c = Circuit::new(2, 1).unwrap().linear_s(u.clone()).unwrap();
        let f = SymplecticMap::from_circuit(&c).unwrap();
        let alpha = rand_cx(&mut rng, 3);
        let out = evolve(&f, &GaussianState::coherent(&alpha)).unwrap();
        let want = u.dot(&ndarray::arr1(&alpha[..2]));
        for k in 0..2 {
            assert!((out.displacement()[k] - want[k]).norm() < 1e-14);
        }
        assert!((out.displacement()[2] - alpha[2]).norm() < 1e-14);
    }

    #[test]
    fn composition_is_a_homomorphism() {
        let (a, b) = (random_circuit(1, 2, 2, 2), random_circuit(2, 2, 2, 2));
        let mut ab = a.clone();
        for e in b.elements() {
            ab.push(e.clone()).unwrap();
        }
        let (fa, fb, fab) = (
            SymplecticMap::from_circuit(&a).unwrap(),
            SymplecticMap::from_circuit(&b).unwrap(),
            SymplecticMap::from_circuit(&ab).unwrap(),
        );
        let composed = fb.compose(&fa);
        assert!(linalg::max_abs_diff(composed.matrix(), fab.matrix()) < 1e-10);
        assert!(composed.residual() < 1e-10);
    }

    #[test]
    fn squeezed_vacuum_closed_form() {
        for r in [0.3f64, 0.8] {
            let out = evolve(&single_mode_squeezer(r), &GaussianState::vacuum(1)).unwrap();
            for k in 0..25 {
                let beta = Cx::new(-1.0 + 0.5 * (k % 5) as f64, -1.0 + 0.5 * (k / 5) as f64);
                let q = q_function(&out, &[beta]).unwrap();
                let want = squeezed_vacuum_q(r, beta);
                assert!((q - want).abs() / want < 1e-10);
                assert!(sms_coherent_duality_residual(r, Cx::new(0.0, 0.0), beta).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn sms_duality_on_random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(
            sms_coherent_duality_residual(0.0f64, Cx::new(0.3, 0.2), Cx::new(0.3, 0.2)).unwrap(),
            0.0
        );
        for _ in 0..50 {
            let r = rng.gen_range(0.0..1.5f64);
            let (a, b) = (rand_cx(&mut rng, 1)[0], rand_cx(&mut rng, 1)[0]);
            assert!(sms_coherent_duality_residual(r, a, b).unwrap() < 1e-9);
        }
    }

    #[test]
    fn q_duality_on_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = Circuit::new(1, 1).unwrap().pdc(0, 0, 0.6f64).unwrap();
        for _ in 0..10 {
            let (a, b) = (rand_cx(&mut rng, 2), rand_cx(&mut rng, 2));
            let d = q_duality_residual(&c, &a[..1], &a[1..], &b[..1], &b[1..]).unwrap();
            assert!(d.rel_residual < 1e-9);
        }
        let c = random_circuit(3, 2, 2, 3);
        for _ in 0..50 {
            let (a, b) = (rand_cx(&mut rng, 4), rand_cx(&mut rng, 4));
            let d = q_duality_residual(&c, &a[..2], &a[2..], &b[..2], &b[2..]).unwrap();
            assert!(d.rel_residual < 1e-8, "{}", d.rel_residual);
            assert!(d.nc_residual() < 1e-8);
        }
        let lin = Circuit::new(2, 1)
            .unwrap()
            .linear_s(haar(&mut rng, 2))
            .unwrap();
        let z = [Cx::new(0.0, 0.0); 2];
        let d = q_duality_residual(&lin, &z, &z[..1], &z, &z[..1]).unwrap();
        assert!(d.rel_residual < 1e-15);
    }

    #[test]
    fn vacuum_q_covariance_follows_the_dual_network() {
        for seed in 0..10 {
            let c = random_circuit(seed, 2, 3, 3);
            let ptr = build_ptr(&c).unwrap();
            let t = scattering_to_transfer(&ptr.scattering).unwrap();
            let out = evolve(
                &SymplecticMap::from_transfer(&t).unwrap(),
                &GaussianState::vacuum(5),
            )
            .unwrap();
            let det = linalg::det(&out.q_covariance()).re;
            let uii = linalg::det(&ptr.scattering.ii).norm();
            assert!((1.0 / det.sqrt() - uii * uii).abs() < 1e-9);
            // exponent identity on a random point
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (rand_cx(&mut rng, 5), rand_cx(&mut rng, 5));
            let coh = evolve(
                &SymplecticMap::from_transfer(&t).unwrap(),
                &GaussianState::coherent(&a),
            )
            .unwrap();
            let q = q_function(&coh, &b).unwrap() * std::f64::consts::PI.powi(5) * det.sqrt();
            let x: CVector<f64> = a[..2]
                .iter()
                .copied()
                .chain(b[2..].iter().map(|z| z.conj()))
                .collect();
            let y: CVector<f64> = b[..2]
                .iter()
                .copied()
                .chain(a[2..].iter().map(|z| z.conj()))
                .collect();
            let dist = (&y - &ptr.scattering.full().dot(&x))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
            assert!((q.ln() + dist).abs() < 1e-9);
            assert!(v_matrix(&t).is_ok());
        }
    }

    #[test]
    fn monte_carlo_normalisation() {
        let out = evolve(
            &single_mode_squeezer(0.5f64),
            &GaussianState::coherent(&[Cx::new(0.3, -0.2)]),
        )
        .unwrap();
        let z = q_normalization_mc(&out, 6.0, 200_000, 1).unwrap();
        assert!((z - 1.0).abs() < 0.01, "{z}");
    }

    #[test]
    fn invalid_states_are_rejected() {
        let bad = GaussianState::<f64>::new(
            ndarray::arr1(&[Cx::new(1.0, 0.0), Cx::new(0.0, 1.0)]),
            linalg::eye(2).mapv(|x| x * 0.5),
        );
        assert!(bad.is_err());
        let squeezed_too_far =
            GaussianState::<f64>::new(Array1::zeros(2), linalg::eye(2).mapv(|x| x * -0.6));
        assert!(matches!(
            squeezed_too_far,
            Err(Error::NotPositiveDefinite { .. }) | Err(Error::InvalidArgument(_))
        ));
        let not_symplectic = SymplecticMap::new(linalg::eye::<f64>(2).mapv(|x| x * 2.0));
        assert!(matches!(not_symplectic, Err(Error::NotSymplectic { .. })));
        assert!(SymplecticMap::from_transfer(
            &scattering_to_transfer(&hypothetical_bs(0.4f64, 0, 0, 1, 1).unwrap()).unwrap()
        )
        .is_ok());
    }
}
