//! Multiphoton amplitudes of linear networks through matrix permanents, and
//! the comparison of nonlinear amplitudes with their linear duals.

use ndarray::Array2;
use num_traits::Num;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::fock::{
    transition_amplitudes, CapChoice, FamilyState, FockSpace, Observable, Occupation,
    TruncationPolicy,
};
use crate::linalg::{self, CMatrix};
use crate::ptr::{build_ptr, PtrSetup};
use crate::scalar::{factorial, lit, Cx, Real};
use crate::scatter::ScatteringMatrix;

/// Largest matrix accepted by the permanent routines.
pub const MAX_PERMANENT_SIZE: usize = 20;

fn check_square<N>(m: &Array2<N>) -> Result<usize> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "permanent of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n > MAX_PERMANENT_SIZE {
        return Err(Error::PermanentTooLarge {
            size: n,
            limit: MAX_PERMANENT_SIZE,
        });
    }
    Ok(n)
}

/// Ryser's formula over subsets in Gray-code order, `O(2^n n)`.
pub fn permanent<N: Num + Copy>(m: &Array2<N>) -> Result<N> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(N::one());
    }
    let mut sums = vec![N::zero(); n];
    let mut total = N::zero();
    let mut gray = 0u32;
    for k in 1..(1u32 << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << col) != 0;
        for (i, s) in sums.iter_mut().enumerate() {
            *s = if added {
                *s + m[[i, col]]
            } else {
                *s - m[[i, col]]
            };
        }
        gray = next;
        let prod = sums.iter().fold(N::one(), |a, &b| a * b);
        // sign (-1)^(n - |S|)
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total = total + prod;
        } else {
            total = total - prod;
        }
    }
    Ok(total)
}

/// Glynn's formula with Gray-code sign flips, `O(2^(n-1) n)`.
pub fn permanent_glynn<N: Num + Copy>(m: &Array2<N>) -> Result<N> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(N::one());
    }
    let two = N::one() + N::one();
    // column sums with every delta = +1
    let mut sums: Vec<N> = (0..n)
        .map(|j| (0..n).fold(N::zero(), |a, i| a + m[[i, j]]))
        .collect();
    let mut total = sums.iter().fold(N::one(), |a, &b| a * b);
    let mut negative = 0u32;
    let mut sign_odd = false;
    for k in 1..(1u32 << (n - 1)) {
        let next = k ^ (k >> 1);
        let bit = (negative ^ next).trailing_zeros() as usize;
        let row = bit + 1;
        let flipping_down = next & (1 << bit) != 0;
        for (j, s) in sums.iter_mut().enumerate() {
            let d = two * m[[row, j]];
            *s = if flipping_down { *s - d } else { *s + d };
        }
        negative = next;
        sign_odd = !sign_odd;
        let prod = sums.iter().fold(N::one(), |a, &b| a * b);
        total = if sign_odd { total - prod } else { total + prod };
    }
    let scale = (1..n).fold(N::one(), |a, _| a * two);
    Ok(total / scale)
}

/// Sum over all permutations, `O(n! n)`; a reference for small matrices.
pub fn permanent_naive<N: Num + Copy>(m: &Array2<N>) -> Result<N> {
    let n = check_square(m)?;
    fn rec<N: Num + Copy>(m: &Array2<N>, row: usize, used: &mut Vec<bool>) -> N {
        if row == m.nrows() {
            return N::one();
        }
        let mut acc = N::zero();
        for j in 0..m.ncols() {
            if !used[j] {
                used[j] = true;
                acc = acc + m[[row, j]] * rec(m, row + 1, used);
                used[j] = false;
            }
        }
        acc
    }
    Ok(rec(m, 0, &mut vec![false; n]))
}

fn repeated(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c))
        .collect()
}

/// `<output| U |input>` for the linear network mapping `a_j^dag` to
/// `sum_k U_kj a_k^dag`, with photon counts per mode. Zero when the totals
/// differ.
pub fn linear_amplitude<T: Real>(
    u: &CMatrix<T>,
    input: &[usize],
    output: &[usize],
) -> Result<Cx<T>> {
    if input.len() != u.ncols() || output.len() != u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{}+{} occupations for a {}x{} network",
            input.len(),
            output.len(),
            u.nrows(),
            u.ncols()
        )));
    }
    let (cols, rows) = (repeated(input), repeated(output));
    if cols.len() != rows.len() {
        return Ok(Cx::new(T::zero(), T::zero()));
    }
    let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| u[[rows[a], cols[b]]]);
    let norm = input
        .iter()
        .chain(output)
        .fold(T::one(), |a, &c| a * factorial::<T>(c))
        .sqrt();
    Ok(permanent(&sub)? / norm)
}

/// [`linear_amplitude`] on a block scattering matrix; the occupations list
/// signal counts first, then idler counts.
pub fn linear_fock_amplitude<T: Real>(
    s: &ScatteringMatrix<T>,
    input: &Occupation,
    output: &Occupation,
) -> Result<Cx<T>> {
    for o in [input, output] {
        if o.s.len() != s.n_s() || o.i.len() != s.n_i() {
            return Err(Error::DimensionMismatch(format!(
                "occupation on {}+{} paths for a {}+{} network",
                o.s.len(),
                o.i.len(),
                s.n_s(),
                s.n_i()
            )));
        }
    }
    linear_amplitude(&s.full(), &input.modes(), &output.modes())
}

/// `nc {m | U | n}`: the linear network receives `m_s` on the signal inputs
/// and `n_i` on the idler inputs, and is postselected on `n_s` and `m_i`.
pub fn ptr_postselection_amplitude<T: Real>(
    ptr: &PtrSetup<T>,
    m_s: &[usize],
    m_i: &[usize],
    n_s: &[usize],
    n_i: &[usize],
) -> Result<Cx<T>> {
    let input = Occupation::new(m_s.to_vec(), n_i.to_vec());
    let output = Occupation::new(n_s.to_vec(), m_i.to_vec());
    Ok(ptr.nc * linear_fock_amplitude(&ptr.scattering, &input, &output)?)
}

/// The dual of `<output| U |input>` for nonlinear occupations.
pub fn ptr_transition<T: Real>(
    ptr: &PtrSetup<T>,
    input: &Occupation,
    output: &Occupation,
) -> Result<Cx<T>> {
    ptr_postselection_amplitude(ptr, &input.s, &input.i, &output.s, &output.i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeComparison<T: Real> {
    pub nonlinear: Cx<T>,
    /// Linear amplitude without the coefficient.
    pub ptr_linear: Cx<T>,
    pub nc: Cx<T>,
    pub abs_residual: T,
    pub rel_residual: T,
    pub cap_used: usize,
}

impl<T: Real> AmplitudeComparison<T> {
    pub fn new(nonlinear: Cx<T>, ptr_linear: Cx<T>, nc: Cx<T>, cap_used: usize) -> Self {
        let dual = nc * ptr_linear;
        let abs_residual = (nonlinear - dual).norm();
        let floor = lit::<T>(1e-300).max(T::min_positive_value());
        let rel_residual = abs_residual / nonlinear.norm().max(dual.norm()).max(floor);
        AmplitudeComparison {
            nonlinear,
            ptr_linear,
            nc,
            abs_residual,
            rel_residual,
            cap_used,
        }
    }

    /// Residual relative to the larger amplitude, but never to less than
    /// `floor`: amplitudes that vanish exactly are judged on the absolute
    /// scale.
    pub fn scaled_residual(&self, floor: T) -> T {
        self.abs_residual
            / self
                .nonlinear
                .norm()
                .max((self.nc * self.ptr_linear).norm())
                .max(floor)
    }
}

/// Settings for [`verify_duality`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityConfig {
    /// Largest total photon number on the input and on the output side.
    pub budget: usize,
    /// Compare a seeded subset of this many pairs instead of all of them.
    pub samples: Option<usize>,
    pub seed: u64,
    pub cap: CapChoice,
    pub policy: TruncationPolicy,
    /// Amplitude scale below which residuals are measured absolutely (see
    /// [`AmplitudeComparison::scaled_residual`]).
    pub noise_floor: f64,
}

impl Default for DualityConfig {
    fn default() -> Self {
        DualityConfig {
            budget: 4,
            samples: None,
            seed: 0,
            cap: CapChoice::Auto,
            policy: TruncationPolicy::default(),
            noise_floor: 1e-5,
        }
    }
}

/// Largest photon budget [`verify_duality`] accepts.
pub const MAX_BUDGET: usize = 5;

#[derive(Debug, Clone)]
pub struct DualityCase<T: Real> {
    pub input: Occupation,
    pub output: Occupation,
    pub comparison: AmplitudeComparison<T>,
}

#[derive(Debug, Clone)]
pub struct DualityReport<T: Real> {
    pub cases: Vec<DualityCase<T>>,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    /// Largest [`AmplitudeComparison::scaled_residual`] at the configured floor.
    pub max_scaled_residual: f64,
    pub cap_used: usize,
    pub leak: f64,
    pub nc: Cx<T>,
}

/// Occupation pairs with at most `budget` photons on each side and equal
/// photon difference, ordered by input then output in basis order.
pub fn conserving_pairs(
    n_s: usize,
    n_i: usize,
    budget: usize,
) -> Result<Vec<(Occupation, Occupation)>> {
    let states: Vec<Occupation> = FockSpace::new(n_s, n_i, budget)?.iter().collect();
    Ok(states
        .iter()
        .flat_map(|a| {
            states
                .iter()
                .filter(|b| b.difference() == a.difference())
                .map(move |b| (a.clone(), b.clone()))
        })
        .collect())
}

/// Compares brute-force nonlinear amplitudes with `nc` times the PTR linear
/// amplitudes on every (or a seeded sample of) conserving occupation pair.
pub fn verify_duality<T: Real>(
    circuit: &Circuit<T>,
    config: &DualityConfig,
) -> Result<DualityReport<T>> {
    if config.budget > MAX_BUDGET {
        return Err(Error::InvalidArgument(format!(
            "photon budget {} above {MAX_BUDGET}",
            config.budget
        )));
    }
    let ptr = build_ptr(circuit)?;
    let mut pairs = conserving_pairs(circuit.n_s(), circuit.n_i(), config.budget)?;
    if let Some(k) = config.samples.filter(|&k| k < pairs.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut keep = rand::seq::index::sample(&mut rng, pairs.len(), k).into_vec();
        keep.sort_unstable();
        pairs = keep.into_iter().map(|j| pairs[j].clone()).collect();
    }
    let mut inputs: Vec<Occupation> = pairs.iter().map(|p| p.0.clone()).collect();
    let mut outputs: Vec<Occupation> = pairs.iter().map(|p| p.1.clone()).collect();
    inputs.dedup();
    outputs.sort_by_key(|a| a.modes());
    outputs.dedup();
    let brute = transition_amplitudes(circuit, &inputs, &outputs, config.cap, &config.policy)?;
    let index = |list: &[Occupation], o: &Occupation| {
        list.iter().position(|x| x == o).expect("listed occupation")
    };
    let mut cases = Vec::with_capacity(pairs.len());
    let (mut max_abs, mut max_rel, mut max_scaled) = (0.0f64, 0.0f64, 0.0f64);
    let floor = lit::<T>(config.noise_floor);
    for (input, output) in pairs {
        let nonlinear = brute.get(index(&outputs, &output), index(&inputs, &input));
        let linear = linear_fock_amplitude(
            &ptr.scattering,
            &Occupation::new(input.s.clone(), output.i.clone()),
            &Occupation::new(output.s.clone(), input.i.clone()),
        )?;
        let comparison = AmplitudeComparison::new(nonlinear, linear, ptr.nc, brute.cap);
        max_abs = max_abs.max(comparison.abs_residual.to_f64().unwrap_or(f64::INFINITY));
        max_rel = max_rel.max(comparison.rel_residual.to_f64().unwrap_or(f64::INFINITY));
        max_scaled = max_scaled.max(
            comparison
                .scaled_residual(floor)
                .to_f64()
                .unwrap_or(f64::INFINITY),
        );
        cases.push(DualityCase {
            input,
            output,
            comparison,
        });
    }
    Ok(DualityReport {
        cases,
        max_abs_residual: max_abs,
        max_rel_residual: max_rel,
        max_scaled_residual: max_scaled,
        cap_used: brute.cap,
        leak: brute.leak,
        nc: ptr.nc,
    })
}

/// Two photons on signal paths `s_pair` and two on idler paths `i_pair`,
/// from pair emission into an empty network: products of idler-to-signal
/// entries of the PTR network (without the coefficient).
pub fn four_photon_awp_amplitude<T: Real>(
    ptr: &PtrSetup<T>,
    s_pair: (usize, usize),
    i_pair: (usize, usize),
) -> Result<Cx<T>> {
    let (n_s, n_i) = (ptr.n_s(), ptr.n_i());
    if s_pair.0 >= n_s || s_pair.1 >= n_s || i_pair.0 >= n_i || i_pair.1 >= n_i {
        return Err(Error::InvalidArgument(format!(
            "paths {s_pair:?}, {i_pair:?} outside {n_s}+{n_i}"
        )));
    }
    let u = |s: usize, i: usize| ptr.scattering.si[[s, i]];
    let (s1, s2) = s_pair;
    let (i1, i2) = i_pair;
    let root2 = (T::one() + T::one()).sqrt();
    Ok(match (s1 == s2, i1 == i2) {
        (false, false) => u(s1, i1) * u(s2, i2) + u(s2, i1) * u(s1, i2),
        (true, false) => u(s1, i1) * u(s1, i2) * root2,
        (false, true) => u(s1, i1) * u(s2, i1) * root2,
        (true, true) => u(s1, i1) * u(s1, i1),
    })
}

/// Output occupation of [`four_photon_awp_amplitude`].
pub fn four_photon_occupation(
    n_s: usize,
    n_i: usize,
    s_pair: (usize, usize),
    i_pair: (usize, usize),
) -> Occupation {
    let mut o = Occupation::vacuum(n_s, n_i);
    o.s[s_pair.0] += 1;
    o.s[s_pair.1] += 1;
    o.i[i_pair.0] += 1;
    o.i[i_pair.1] += 1;
    o
}

fn family_operator<T: Real>(
    o: &Observable<T>,
    modes: usize,
) -> Result<&crate::fock::FamilyOperator<T>> {
    match o {
        Observable::Operator(op) if op.basis().n_s() == modes => Ok(op),
        Observable::Operator(op) => Err(Error::DimensionMismatch(format!(
            "observable acts on {} paths, family has {modes}",
            op.basis().n_s()
        ))),
        _ => Err(Error::InvalidArgument(
            "the linear side needs observables given as finite matrices".into(),
        )),
    }
}

/// `<psi_s0; psi_i0| U^dag (O_s x O_i) U |psi_s0; psi_i0>` from the PTR
/// network alone: `Tr(O_s A O_i^T A^dag)` with the dual amplitude matrix
/// `A[n_s, n_i] = sum psi_s0[m_s] psi_i0[m_i] nc {m | U | n}` on the
/// observables' bases.
pub fn ptr_observable_expectation<T: Real>(
    ptr: &PtrSetup<T>,
    o_s: &Observable<T>,
    o_i: &Observable<T>,
    input_s: &FamilyState<T>,
    input_i: &FamilyState<T>,
) -> Result<T> {
    let (bs, bi) = (
        family_operator(o_s, ptr.n_s())?,
        family_operator(o_i, ptr.n_i())?,
    );
    if input_s.modes() != ptr.n_s() || input_i.modes() != ptr.n_i() {
        return Err(Error::DimensionMismatch(
            "input states do not match the network".into(),
        ));
    }
    let (ts, ti) = (input_s.terms(), input_i.terms());
    let (ds, di) = (bs.basis().dim(), bi.basis().dim());
    let mut a = linalg::zeros::<T>(ds, di);
    for ks in 0..ds {
        let n_s = bs.basis().decode(ks).s;
        for ki in 0..di {
            let n_i = bi.basis().decode(ki).s;
            let mut acc = Cx::new(T::zero(), T::zero());
            for (m_s, x) in &ts {
                for (m_i, y) in &ti {
                    let total_in: usize = m_s.iter().chain(&n_i).sum();
                    let total_out: usize = n_s.iter().chain(m_i).sum();
                    if total_in != total_out {
                        continue;
                    }
                    acc = acc + *x * *y * ptr_postselection_amplitude(ptr, m_s, m_i, &n_s, &n_i)?;
                }
            }
            a[[ks, ki]] = acc;
        }
    }
    let e = bs
        .matrix()
        .dot(&a)
        .dot(&linalg::transpose(bi.matrix()))
        .dot(&linalg::dagger(&a));
    Ok((0..ds).fold(T::zero(), |acc, k| acc + e[[k, k]].re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        apply_observable_expectation, bs_fock_amplitude, pdc_fock_amplitude_closed, FamilyOperator,
    };
    use ndarray::arr2;
    use num_complex::Complex;
    use rand::Rng;

    fn haar(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
        let g = Array2::from_shape_fn((n, n), |_| {
            Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        linalg::gram_schmidt(&g)
    }

    fn random_circuit(seed: u64, n_s: usize, n_i: usize, pdcs: usize, max_r: f64) -> Circuit<f64> {
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
                    rng.gen_range(0.0..max_r),
                )
                .unwrap();
        }
        c.linear_s(haar(&mut rng, n_s))
            .unwrap()
            .linear_i(haar(&mut rng, n_i))
            .unwrap()
    }

    fn int_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<Complex<i64>> {
        Array2::from_shape_fn((n, n), |_| {
            Complex::new(rng.gen_range(-3..=3), rng.gen_range(-3..=3))
        })
    }

    #[test]
    fn permanent_small_cases() {
        let e: Array2<f64> = Array2::zeros((0, 0));
        assert_eq!(permanent(&e).unwrap(), 1.0);
        assert_eq!(permanent_glynn(&e).unwrap(), 1.0);
        assert_eq!(permanent(&Array2::<f64>::eye(5)).unwrap(), 1.0);
        let m = arr2(&[[2i64, 3], [5, 7]]);
        assert_eq!(permanent(&m).unwrap(), 2 * 7 + 3 * 5);
        assert_eq!(permanent_glynn(&m).unwrap(), 29);
        for n in 1..=10usize {
            let ones = Array2::<i64>::ones((n, n));
            let fact: i64 = (1..=n as i64).product();
            assert_eq!(permanent(&ones).unwrap(), fact);
            assert_eq!(permanent_glynn(&ones).unwrap(), fact);
        }
        assert!(matches!(
            permanent(&Array2::<f64>::zeros((21, 21))),
            Err(Error::PermanentTooLarge { .. })
        ));
    }

    #[test]
    fn permanent_algorithms_agree_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 0..=6 {
            for _ in 0..5 {
                let m = int_matrix(&mut rng, n);
                let naive = permanent_naive(&m).unwrap();
                assert_eq!(permanent(&m).unwrap(), naive);
                assert_eq!(permanent_glynn(&m).unwrap(), naive);
            }
        }
    }

    #[test]
    fn permanent_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=8 {
            let m = haar(&mut rng, n);
            let p = permanent(&m).unwrap();
            assert!((permanent(&m.t().to_owned()).unwrap() - p).norm() < 1e-12);
            let mut rows: Vec<usize> = (0..n).collect();
            let mut cols: Vec<usize> = (0..n).collect();
            rows.rotate_left(1);
            cols.reverse();
            let q = Array2::from_shape_fn((n, n), |(a, b)| m[[rows[a], cols[b]]]);
            assert!((permanent(&q).unwrap() - p).norm() < 1e-12);
            assert!((permanent_glynn(&m).unwrap() - p).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_amplitudes_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar(&mut rng, 3);
        assert_eq!(
            linear_amplitude(&u, &[0, 0, 0], &[0, 0, 0]).unwrap(),
            Cx::new(1.0, 0.0)
        );
        assert_eq!(
            linear_amplitude(&u, &[0, 1, 0], &[0, 0, 2]).unwrap(),
            Cx::new(0.0, 0.0)
        );
        for j in 0..3 {
            for k in 0..3 {
                let (mut a, mut b) = ([0; 3], [0; 3]);
                a[j] = 1;
                b[k] = 1;
                assert_eq!(linear_amplitude(&u, &a, &b).unwrap(), u[[k, j]]);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bs = arr2(&[
            [Cx::new(h, 0.0), Cx::new(h, 0.0)],
            [Cx::new(-h, 0.0), Cx::new(h, 0.0)],
        ]);
        assert!(linear_amplitude(&bs, &[1, 1], &[1, 1]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn linear_amplitudes_match_fock_evolution() {
        // a linear-only circuit on signal paths simulated in Fock space
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = haar(&mut rng, 4);
        let c = Circuit::new(4, 1).unwrap().linear_s(u.clone()).unwrap();
        let space = FockSpace::new(4, 1, 3).unwrap();
        let states: Vec<Occupation> = space.iter().filter(|o| o.i[0] == 0).collect();
        let t = transition_amplitudes(
            &c,
            &states,
            &states,
            CapChoice::Fixed(12),
            &TruncationPolicy::default(),
        )
        .unwrap();
        for (ki, a) in states.iter().enumerate() {
            for (ko, b) in states.iter().enumerate() {
                let l = linear_amplitude(&u, &a.s, &b.s).unwrap();
                assert!((t.get(ko, ki) - l).norm() < 1e-9, "{a} -> {b}");
            }
        }
    }

    #[test]
    fn single_pdc_dual_reproduces_closed_form() {
        let r = 0.8f64;
        let ptr = build_ptr(&Circuit::new(1, 1).unwrap().pdc(0, 0, r).unwrap()).unwrap();
        for ms in 0..=4 {
            for mi in 0..=4 {
                for ns in 0..=4 {
                    for ni in 0..=4 {
                        let a =
                            ptr_postselection_amplitude(&ptr, &[ms], &[mi], &[ns], &[ni]).unwrap();
                        let b = pdc_fock_amplitude_closed(r, ms, mi, ns, ni);
                        assert!((a - b).norm() < 1e-13, "{ms} {mi} {ns} {ni}");
                    }
                }
            }
        }
    }

    #[test]
    fn binomial_column_of_dual() {
        let r = 0.6f64;
        let ptr = build_ptr(&Circuit::new(1, 1).unwrap().pdc(0, 0, r).unwrap()).unwrap();
        let (t, q) = (1.0 / r.cosh(), r.tanh());
        for d in 0..4usize {
            for n in 0..4usize {
                // {d + n, n | B | d, 0} = sqrt((d+n)! / (d! n!)) T^d (-R)^n
                let a =
                    ptr_postselection_amplitude(&ptr, &[d + n], &[n], &[d], &[0]).unwrap() / ptr.nc;
                let binom =
                    (factorial::<f64>(d + n) / (factorial::<f64>(d) * factorial::<f64>(n))).sqrt();
                assert!((a.re - binom * t.powi(d as i32) * (-q).powi(n as i32)).abs() < 1e-13);
                assert!((a.re - bs_fock_amplitude(t, q, d + n, 0, d, n).re).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn biphoton_amplitude_is_a_matrix_element() {
        let c = random_circuit(3, 2, 2, 2, 0.5);
        let ptr = build_ptr(&c).unwrap();
        for k in 0..2 {
            for j in 0..2 {
                let mut o = Occupation::vacuum(2, 2);
                o.s[k] = 1;
                o.i[j] = 1;
                let a = ptr_transition(&ptr, &Occupation::vacuum(2, 2), &o).unwrap();
                assert!((a - ptr.nc * ptr.scattering.si[[k, j]]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn duality_on_single_pdc_and_su11() {
        let c = Circuit::new(1, 1).unwrap().pdc(0, 0, 0.5f64).unwrap();
        let rep = verify_duality(&c, &DualityConfig::default()).unwrap();
        assert!(rep.max_rel_residual < 1e-8, "{}", rep.max_rel_residual);
        assert_eq!(rep.cases.len(), conserving_pairs(1, 1, 4).unwrap().len());
        let c = crate::ptr::su11_circuit(0.6f64, std::f64::consts::PI, 0.0).unwrap();
        let rep = verify_duality(&c, &DualityConfig::default()).unwrap();
        assert!(
            rep.max_scaled_residual < 1e-8,
            "{}",
            rep.max_scaled_residual
        );
        assert!(rep.max_abs_residual < 1e-12);
        for case in &rep.cases {
            let expected = if case.input == case.output { 1.0 } else { 0.0 };
            assert!((case.comparison.nonlinear.norm() - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn duality_on_random_circuit_sampled() {
        let c = random_circuit(21, 2, 2, 3, 0.6);
        let cfg = DualityConfig {
            samples: Some(200),
            seed: 5,
            ..Default::default()
        };
        let rep = verify_duality(&c, &cfg).unwrap();
        assert_eq!(rep.cases.len(), 200);
        assert!(rep.max_rel_residual < 1e-6, "{}", rep.max_rel_residual);
        let again = verify_duality(&c, &cfg).unwrap();
        let same = rep
            .cases
            .iter()
            .zip(&again.cases)
            .all(|(a, b)| a.input == b.input && a.output == b.output);
        assert!(same);
        assert!(verify_duality(
            &c,
            &DualityConfig {
                budget: 6,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn four_photon_closed_form_is_a_permanent() {
        let c = random_circuit(6, 3, 3, 2, 0.5);
        let ptr = build_ptr(&c).unwrap();
        for s_pair in [(0, 1), (2, 2), (1, 0)] {
            for i_pair in [(0, 2), (1, 1)] {
                let o = four_photon_occupation(3, 3, s_pair, i_pair);
                let lin = ptr_transition(&ptr, &Occupation::vacuum(3, 3), &o).unwrap() / ptr.nc;
                let awp = four_photon_awp_amplitude(&ptr, s_pair, i_pair).unwrap();
                assert!((lin - awp).norm() < 1e-14, "{s_pair:?} {i_pair:?}");
            }
        }
        let d = build_ptr(
            &Circuit::new(2, 2)
                .unwrap()
                .pdc(0, 0, 0.3f64)
                .unwrap()
                .pdc(1, 1, 0.2)
                .unwrap(),
        )
        .unwrap();
        let a = four_photon_awp_amplitude(&d, (0, 1), (0, 1)).unwrap();
        assert!((a - d.scattering.si[[0, 0]] * d.scattering.si[[1, 1]]).norm() < 1e-16);
        assert!(four_photon_awp_amplitude(&d, (0, 2), (0, 1)).is_err());
    }

    #[test]
    fn expectation_duality_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = random_circuit(2, 2, 1, 2, 0.4);
        let ptr = build_ptr(&c).unwrap();
        let psi_s = FamilyState::new(
            2,
            1,
            ndarray::arr1(&[Cx::new(0.6, 0.0), Cx::new(0.0, 0.8), Cx::new(0.0, 0.0)]),
        )
        .unwrap();
        let psi_i = FamilyState::fock(&[1]).unwrap();
        let herm = |rng: &mut ChaCha8Rng, n: usize| {
            let g = Array2::from_shape_fn((n, n), |_| {
                Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            &g + &linalg::dagger(&g)
        };
        let o_s = Observable::Operator(FamilyOperator::new(2, 2, herm(&mut rng, 6)).unwrap());
        let o_i = Observable::Operator(FamilyOperator::new(1, 3, herm(&mut rng, 4)).unwrap());
        let lin = ptr_observable_expectation(&ptr, &o_s, &o_i, &psi_s, &psi_i).unwrap();
        let space = FockSpace::new(2, 1, 30).unwrap();
        let brute = apply_observable_expectation(&c, &o_s, &o_i, &psi_s, &psi_i, &space).unwrap();
        assert!(
            (lin - brute).abs() < 1e-7 * brute.abs().max(1e-3),
            "{lin} vs {brute}"
        );
        assert!(
            ptr_observable_expectation(&ptr, &Observable::Identity, &o_i, &psi_s, &psi_i).is_err()
        );
    }
}
