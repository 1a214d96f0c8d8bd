//! Truncated Fock-space simulation of nonlinear circuits.

mod closed;
mod engine;
mod space;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub use closed::{bs_fock_amplitude, pdc_fock_amplitude_closed, DeviceParams};
pub use space::{FockSpace, Occupation, DEFAULT_DIM_LIMIT, MAX_CAP, MAX_MODES};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scalar::{from_usize, Cx, Real};
use engine::{compile, Op, Propagator};

/// Largest basis for which [`nonlinear_operator`] builds a dense matrix.
pub const DENSE_OPERATOR_LIMIT: usize = 8192;

/// How the photon cap of a simulation is chosen and checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Largest tolerated deviation of a requested column's norm caused by
    /// weight reaching the top photon band.
    pub leak_threshold: f64,
    pub dim_limit: usize,
    /// Floor for the photon cap.
    pub min_cap: usize,
    /// Safety margin multiplier `k` in `cap >= photons + k * ceil(g cosh g)`.
    pub margin_factor: usize,
    pub max_cap: usize,
    /// With [`CapChoice::Auto`], also accept a cap once the requested
    /// amplitudes move by at most this much from the previous cap.
    pub convergence_tol: Option<f64>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            leak_threshold: 1e-10,
            dim_limit: 1_500_000,
            min_cap: 12,
            margin_factor: 4,
            max_cap: MAX_CAP,
            convergence_tol: None,
        }
    }
}

impl TruncationPolicy {
    /// Smallest cap the margin rule accepts for `photons` requested photons
    /// and a total squeezing gain `gain`.
    pub fn required_cap(&self, photons: usize, gain: f64) -> usize {
        let margin = (gain * gain.cosh()).ceil().max(0.0) as usize;
        self.min_cap.max(photons + self.margin_factor * margin)
    }
}

/// Photon cap selection for a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapChoice {
    /// Start from the margin rule and grow until the measured leak passes.
    Auto,
    /// Use exactly this cap; fail if the margin rule or the leak check fails.
    Fixed(usize),
}

/// Column-norm deviation implied by top-band weight `w`: `1 - sqrt(1 - w)`.
fn leak_from_weight(w: f64) -> f64 {
    let w = w.clamp(0.0, 1.0);
    w / (1.0 + (1.0 - w).sqrt())
}

fn check_shape<T: Real>(circuit: &Circuit<T>, n_s: usize, n_i: usize) -> Result<()> {
    if circuit.n_s() != n_s || circuit.n_i() != n_i {
        return Err(Error::DimensionMismatch(format!(
            "circuit has {}+{} paths but the Fock data has {n_s}+{n_i}",
            circuit.n_s(),
            circuit.n_i()
        )));
    }
    Ok(())
}

/// The circuit operator `U = U_N ... U_1` on a truncated space.
///
/// Each element is exponentiated chain by chain inside the truncation, so the
/// result is exactly unitary; columns near the cap differ from the
/// untruncated operator, which callers control through the cap.
pub fn nonlinear_operator<T: Real>(circuit: &Circuit<T>, space: &FockSpace) -> Result<CMatrix<T>> {
    check_shape(circuit, space.n_s(), space.n_i())?;
    if space.dim() > DENSE_OPERATOR_LIMIT {
        return Err(Error::DimensionOverflow {
            dim: space.dim(),
            limit: DENSE_OPERATOR_LIMIT,
        });
    }
    let mut m = linalg::eye::<T>(space.dim());
    Propagator::new(space).run(&compile(circuit), &mut m);
    Ok(m)
}

/// A state vector on a (possibly sector-restricted) Fock space.
#[derive(Debug, Clone)]
pub struct FockState<T: Real> {
    space: FockSpace,
    amps: CVector<T>,
}

impl<T: Real> FockState<T> {
    pub fn new(space: FockSpace, amps: CVector<T>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a basis of {}",
                amps.len(),
                space.dim()
            )));
        }
        Ok(FockState { space, amps })
    }

    /// Superposition of basis states; repeated occupations add up.
    pub fn from_occupations(space: FockSpace, terms: &[(Occupation, Cx<T>)]) -> Result<Self> {
        let mut amps = Array1::from_elem(space.dim(), Cx::new(T::zero(), T::zero()));
        for (o, a) in terms {
            let k = space.encode(o).ok_or(Error::CapTooSmall {
                cap: space.cap(),
                required: o.total(),
            })?;
            amps[k] = amps[k] + *a;
        }
        Ok(FockState { space, amps })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amps
    }

    /// Amplitude of one basis state (zero outside the space).
    pub fn amplitude(&self, o: &Occupation) -> Cx<T> {
        self.space
            .encode(o)
            .map_or(Cx::new(T::zero(), T::zero()), |k| self.amps[k])
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |a, x| a + x.norm_sqr())
            .sqrt()
    }
}

/// Result of propagating a state.
#[derive(Debug, Clone)]
pub struct Evolved<T: Real> {
    pub state: FockState<T>,
    pub leak: f64,
}

/// Propagates a state through the circuit on its own space. Fails with
/// [`Error::TruncationLeak`] when the measured leak exceeds `threshold`.
pub fn evolve<T: Real>(
    circuit: &Circuit<T>,
    state: &FockState<T>,
    threshold: f64,
) -> Result<Evolved<T>> {
    let space = &state.space;
    check_shape(circuit, space.n_s(), space.n_i())?;
    let mut m = state
        .amps
        .clone()
        .into_shape((space.dim(), 1))
        .expect("column reshape");
    let w = Propagator::new(space).run(&compile(circuit), &mut m);
    let leak = leak_from_weight(w);
    if leak > threshold {
        return Err(Error::TruncationLeak {
            leak,
            threshold,
            cap: space.cap(),
        });
    }
    let amps = m.into_shape(space.dim()).expect("column reshape");
    Ok(Evolved {
        state: FockState {
            space: space.clone(),
            amps,
        },
        leak,
    })
}

/// Transition amplitudes `<output|U|input>` for lists of occupations.
#[derive(Debug, Clone)]
pub struct Transitions<T: Real> {
    pub inputs: Vec<Occupation>,
    pub outputs: Vec<Occupation>,
    /// `amplitudes[[o, i]] = <outputs[o]| U |inputs[i]>`
    pub amplitudes: CMatrix<T>,
    /// Largest photon cap used over all difference sectors.
    pub cap: usize,
    pub leak: f64,
    /// Largest amplitude change between the last two caps tried, when the
    /// convergence test was needed.
    pub change: Option<f64>,
}

impl<T: Real> Transitions<T> {
    pub fn get(&self, output: usize, input: usize) -> Cx<T> {
        self.amplitudes[[output, input]]
    }
}

/// Brute-force transition amplitudes between every input and output.
///
/// Each photon-difference sector is simulated separately; the inputs are
/// propagated through the first part of the circuit and the outputs through
/// the adjoint of the rest, with the split chosen to balance squeezing gain.
pub fn transition_amplitudes<T: Real>(
    circuit: &Circuit<T>,
    inputs: &[Occupation],
    outputs: &[Occupation],
    cap: CapChoice,
    policy: &TruncationPolicy,
) -> Result<Transitions<T>> {
    for o in inputs.iter().chain(outputs) {
        check_shape(circuit, o.s.len(), o.i.len())?;
    }
    let (forward, backward) = balanced_halves(compile(circuit));
    let gain = |ops: &[Op<T>]| {
        ops.iter()
            .fold(0.0, |a, op| a + op.gain().to_f64().unwrap_or(0.0))
    };
    let (g1, g2) = (gain(&forward), gain(&backward));

    let mut sectors: BTreeMap<i64, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (k, o) in inputs.iter().enumerate() {
        sectors.entry(o.difference()).or_default().0.push(k);
    }
    for (k, o) in outputs.iter().enumerate() {
        sectors.entry(o.difference()).or_default().1.push(k);
    }
    let mut amplitudes = linalg::zeros::<T>(outputs.len(), inputs.len());
    let (mut cap_used, mut leak_max) = (0usize, 0.0f64);
    let mut change_max: Option<f64> = None;
    for (d, (ins, outs)) in sectors {
        if ins.is_empty() || outs.is_empty() {
            continue;
        }
        let requested = ins
            .iter()
            .map(|&k| inputs[k].total())
            .chain(outs.iter().map(|&k| outputs[k].total()))
            .max()
            .unwrap_or(0);
        let mut c = match cap {
            CapChoice::Fixed(c) => {
                let required = policy.required_cap(requested, g1 + g2);
                if c < required {
                    return Err(Error::CapTooSmall { cap: c, required });
                }
                c
            }
            CapChoice::Auto => policy
                .required_cap(requested, g1.max(g2))
                .min(policy.max_cap),
        };
        let mut leaks = Growth::default();
        let mut changes = Growth::default();
        let mut previous: Option<CMatrix<T>> = None;
        loop {
            let space =
                FockSpace::with_limit(circuit.n_s(), circuit.n_i(), c, Some(d), policy.dim_limit)?;
            let prop = Propagator::new(&space);
            let column = |occ: &[Occupation], idx: &[usize]| {
                let mut m = linalg::zeros::<T>(space.dim(), idx.len());
                for (j, &k) in idx.iter().enumerate() {
                    m[[
                        space
                            .encode(&occ[k])
                            .expect("requested state inside the cap"),
                        j,
                    ]] = Cx::new(T::one(), T::zero());
                }
                m
            };
            let mut f = column(inputs, &ins);
            let mut b = column(outputs, &outs);
            let w = prop.run(&forward, &mut f) + prop.run(&backward, &mut b);
            let leak = leak_from_weight(w);
            let overlaps = linalg::dagger(&b).dot(&f);
            let change = previous.as_ref().map(|p| {
                linalg::max_abs_diff(p, &overlaps)
                    .to_f64()
                    .unwrap_or(f64::INFINITY)
            });
            let converged =
                matches!((change, policy.convergence_tol), (Some(x), Some(tol)) if x <= tol);
            if leak > policy.leak_threshold && !converged {
                if cap == CapChoice::Auto {
                    let mut next = leaks.next(c, leak, policy.leak_threshold);
                    if let (Some(x), Some(tol)) = (change, policy.convergence_tol) {
                        next = next.min(changes.next(c, x, tol));
                    }
                    let mut next = next.min(policy.max_cap);
                    while next > c
                        && FockSpace::count(circuit.n_s(), circuit.n_i(), next, Some(d))
                            > policy.dim_limit
                    {
                        next -= 1;
                    }
                    if next > c {
                        c = next;
                        previous = Some(overlaps);
                        continue;
                    }
                }
                return Err(Error::TruncationLeak {
                    leak,
                    threshold: policy.leak_threshold,
                    cap: c,
                });
            }
            for (jo, &ko) in outs.iter().enumerate() {
                for (ji, &ki) in ins.iter().enumerate() {
                    amplitudes[[ko, ki]] = overlaps[[jo, ji]];
                }
            }
            cap_used = cap_used.max(c);
            leak_max = leak_max.max(leak);
            if converged {
                change_max = Some(change_max.unwrap_or(0.0f64).max(change.unwrap_or(0.0)));
            }
            break;
        }
    }
    Ok(Transitions {
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
        amplitudes,
        cap: cap_used,
        leak: leak_max,
        change: change_max,
    })
}

/// Extrapolates a quantity that decays geometrically with the cap.
#[derive(Default)]
struct Growth {
    last: Option<(usize, f64)>,
}

impl Growth {
    /// Next cap to try after seeing `value` at cap `c`, aiming for `target`:
    /// grows by at least two and at most double.
    fn next(&mut self, c: usize, value: f64, target: f64) -> usize {
        let mut step = (c / 8).max(2);
        if let Some((c0, v0)) = self.last {
            let rate = (v0 / value).ln() / (c - c0) as f64;
            if rate.is_finite() && rate > 0.0 {
                let needed = (value / target).ln() / rate;
                step = (needed * 1.1).ceil().max(2.0).min(c as f64) as usize;
            }
        }
        self.last = Some((c, value));
        c + step
    }
}

/// Splits `ops` into a forward half and the adjoint of the remainder
/// (in application order), cutting one squeezer in two if needed so both
/// halves carry the same gain.
fn balanced_halves<T: Real>(ops: Vec<Op<T>>) -> (Vec<Op<T>>, Vec<Op<T>>) {
    let half = ops.iter().fold(T::zero(), |a, op| a + op.gain()) / (T::one() + T::one());
    let mut forward = Vec::new();
    let mut rest = Vec::new();
    let mut acc = T::zero();
    for op in ops {
        if acc >= half || half == T::zero() {
            rest.push(op);
            continue;
        }
        match op {
            Op::Squeeze { a, b, r } if acc + r > half => {
                let first = half - acc;
                forward.push(Op::Squeeze { a, b, r: first });
                rest.push(Op::Squeeze { a, b, r: r - first });
                acc = half;
            }
            op => {
                acc = acc + op.gain();
                forward.push(op);
            }
        }
    }
    let backward = rest.iter().rev().map(Op::adjoint).collect();
    (forward, backward)
}

/// `<output| U |input>` with the cap of `space` (margin rule and leak
/// threshold from the default policy).
pub fn nonlinear_postselection_amplitude<T: Real>(
    circuit: &Circuit<T>,
    input: &Occupation,
    output: &Occupation,
    space: &FockSpace,
) -> Result<Cx<T>> {
    check_shape(circuit, space.n_s(), space.n_i())?;
    let t = transition_amplitudes(
        circuit,
        std::slice::from_ref(input),
        std::slice::from_ref(output),
        CapChoice::Fixed(space.cap()),
        &TruncationPolicy::default(),
    )?;
    Ok(t.get(0, 0))
}

/// Pure state of one path family (all signal or all idler paths) on the
/// basis `FockSpace::single_family(modes, cap)`.
#[derive(Debug, Clone)]
pub struct FamilyState<T: Real> {
    basis: FockSpace,
    amps: CVector<T>,
}

impl<T: Real> FamilyState<T> {
    pub fn new(modes: usize, cap: usize, amps: CVector<T>) -> Result<Self> {
        let basis = FockSpace::single_family(modes, cap)?;
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a basis of {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(FamilyState { basis, amps })
    }

    /// The Fock state with the given photon counts.
    pub fn fock(counts: &[usize]) -> Result<Self> {
        let cap = counts.iter().sum();
        let basis = FockSpace::single_family(counts.len(), cap)?;
        let mut amps = Array1::from_elem(basis.dim(), Cx::new(T::zero(), T::zero()));
        let k = basis
            .encode(&Occupation::new(counts.to_vec(), vec![]))
            .expect("state within its own cap");
        amps[k] = Cx::new(T::one(), T::zero());
        Ok(FamilyState { basis, amps })
    }

    pub fn basis(&self) -> &FockSpace {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amps
    }

    pub fn modes(&self) -> usize {
        self.basis.n_s()
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |a, x| a + x.norm_sqr())
            .sqrt()
    }

    /// Nonzero terms as (photon counts, amplitude).
    pub fn terms(&self) -> Vec<(Vec<usize>, Cx<T>)> {
        (0..self.basis.dim())
            .filter(|&k| self.amps[k] != Cx::new(T::zero(), T::zero()))
            .map(|k| (self.basis.decode(k).s, self.amps[k]))
            .collect()
    }
}

/// Hermitian operator on one path family, given on
/// `FockSpace::single_family(modes, cap)` and zero outside it.
#[derive(Debug, Clone)]
pub struct FamilyOperator<T: Real> {
    basis: FockSpace,
    matrix: CMatrix<T>,
}

impl<T: Real> FamilyOperator<T> {
    pub fn new(modes: usize, cap: usize, matrix: CMatrix<T>) -> Result<Self> {
        let basis = FockSpace::single_family(modes, cap)?;
        if matrix.dim() != (basis.dim(), basis.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "observable is {}x{}, basis has {} states",
                matrix.nrows(),
                matrix.ncols(),
                basis.dim()
            )));
        }
        let deviation = linalg::hermiticity_deviation(&matrix);
        if deviation > T::validation_tol() {
            return Err(Error::NotHermitian {
                deviation: deviation.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(FamilyOperator { basis, matrix })
    }

    /// `|psi><psi|`
    pub fn projector(psi: &FamilyState<T>) -> Self {
        let v = psi.amplitudes();
        let n = v.len();
        let matrix = Array2::from_shape_fn((n, n), |(a, b)| v[a] * v[b].conj());
        FamilyOperator {
            basis: psi.basis.clone(),
            matrix,
        }
    }

    pub fn basis(&self) -> &FockSpace {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

/// Observable on one path family.
#[derive(Debug, Clone)]
pub enum Observable<T: Real> {
    Identity,
    /// Photon number on one path.
    Number(usize),
    Operator(FamilyOperator<T>),
}

impl<T: Real> Observable<T> {
    /// Nonzero entries `(row counts, value)` of the column labelled `counts`.
    pub fn column(&self, counts: &[usize]) -> Vec<(Vec<usize>, Cx<T>)> {
        let one = Cx::new(T::one(), T::zero());
        match self {
            Observable::Identity => vec![(counts.to_vec(), one)],
            Observable::Number(m) => {
                if counts[*m] == 0 {
                    vec![]
                } else {
                    vec![(counts.to_vec(), one * from_usize::<T>(counts[*m]))]
                }
            }
            Observable::Operator(op) => {
                let Some(col) = op.basis.encode(&Occupation::new(counts.to_vec(), vec![])) else {
                    return vec![];
                };
                (0..op.basis.dim())
                    .filter(|&row| op.matrix[[row, col]] != Cx::new(T::zero(), T::zero()))
                    .map(|row| (op.basis.decode(row).s, op.matrix[[row, col]]))
                    .collect()
            }
        }
    }

    fn check_modes(&self, modes: usize) -> Result<()> {
        match self {
            Observable::Number(m) if *m >= modes => Err(Error::InvalidArgument(format!(
                "number operator on path {m} of {modes}"
            ))),
            Observable::Operator(op) if op.basis.n_s() != modes => {
                Err(Error::DimensionMismatch(format!(
                    "observable acts on {} paths, family has {modes}",
                    op.basis.n_s()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// `<psi_s0; psi_i0| U^dag (O_s x O_i) U |psi_s0; psi_i0>` on the truncated
/// space `space`.
pub fn apply_observable_expectation<T: Real>(
    circuit: &Circuit<T>,
    o_s: &Observable<T>,
    o_i: &Observable<T>,
    input_s: &FamilyState<T>,
    input_i: &FamilyState<T>,
    space: &FockSpace,
) -> Result<T> {
    check_shape(circuit, space.n_s(), space.n_i())?;
    check_shape(circuit, input_s.modes(), input_i.modes())?;
    o_s.check_modes(circuit.n_s())?;
    o_i.check_modes(circuit.n_i())?;
    if space.difference().is_some() {
        return Err(Error::InvalidArgument(
            "expectation values need an unrestricted space".into(),
        ));
    }
    let tol = lit_tol::<T>();
    for (name, psi) in [("signal", input_s), ("idler", input_i)] {
        if (psi.norm() - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "{name} input is not normalised (norm {})",
                psi.norm()
            )));
        }
    }
    let mut terms = Vec::new();
    for (s, a) in input_s.terms() {
        for (i, b) in input_i.terms() {
            terms.push((Occupation::new(s.clone(), i), a * b));
        }
    }
    let state = FockState::from_occupations(space.clone(), &terms)?;
    let out = evolve(circuit, &state, TruncationPolicy::default().leak_threshold)?.state;
    Ok(separable_expectation(&out, o_s, o_i))
}

fn lit_tol<T: Real>() -> T {
    T::validation_tol().max(T::epsilon() * from_usize::<T>(64))
}

/// `<psi| O_s x O_i |psi>` for a state on an unrestricted space.
pub fn separable_expectation<T: Real>(
    psi: &FockState<T>,
    o_s: &Observable<T>,
    o_i: &Observable<T>,
) -> T {
    let space = psi.space();
    let mut acc = Cx::new(T::zero(), T::zero());
    for k in 0..space.dim() {
        let x = psi.amps[k];
        if x == Cx::new(T::zero(), T::zero()) {
            continue;
        }
        let occ = space.decode(k);
        let cs = o_s.column(&occ.s);
        if cs.is_empty() {
            continue;
        }
        let ci = o_i.column(&occ.i);
        for (rs, vs) in &cs {
            for (ri, vi) in &ci {
                let target = Occupation::new(rs.clone(), ri.clone());
                if let Some(j) = space.encode(&target) {
                    acc = acc + psi.amps[j].conj() * *vs * *vi * x;
                }
            }
        }
    }
    acc.re
}
