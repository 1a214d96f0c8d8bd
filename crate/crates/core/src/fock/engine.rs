//! Chain-decomposed propagation of Fock-space states through a circuit.
//!
//! Every element acts on at most two modes and conserves a simple quantity
//! (photon difference for a PDC, photon sum for a two-mode rotation), so the
//! truncated basis splits into short one-dimensional chains on which the
//! element is a small dense exponential.

use std::collections::HashMap;

use ndarray::Array2;

use super::space::{unit_key, FockSpace};
use crate::circuit::{Circuit, Element};
use crate::linalg::{self, CMatrix};
use crate::scalar::{from_usize, phase, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Op<T: Real> {
    /// `exp[r (a_a^dag a_b^dag - a_a a_b)]`
    Squeeze { a: usize, b: usize, r: T },
    /// `exp[theta (e^{i phi} a_q^dag a_p - e^{-i phi} a_p^dag a_q)]`
    Mix {
        p: usize,
        q: usize,
        theta: T,
        phi: T,
    },
    /// `exp(i sum_m phi_m n_m)`
    Phases(Vec<T>),
}

impl<T: Real> Op<T> {
    pub(crate) fn adjoint(&self) -> Op<T> {
        match self {
            Op::Squeeze { a, b, r } => Op::Squeeze {
                a: *a,
                b: *b,
                r: -*r,
            },
            Op::Mix { p, q, theta, phi } => Op::Mix {
                p: *p,
                q: *q,
                theta: -*theta,
                phi: *phi,
            },
            Op::Phases(v) => Op::Phases(v.iter().map(|x| -*x).collect()),
        }
    }

    pub(crate) fn gain(&self) -> T {
        match self {
            Op::Squeeze { r, .. } => r.abs(),
            _ => T::zero(),
        }
    }
}

/// Lowers a circuit to elementary operations in application order. Linear
/// networks are factorised into adjacent two-mode rotations and phases.
pub(crate) fn compile<T: Real>(circuit: &Circuit<T>) -> Vec<Op<T>> {
    let n_s = circuit.n_s();
    let modes = n_s + circuit.n_i();
    let mut ops = Vec::new();
    for e in circuit.elements() {
        match e {
            Element::Pdc { s, i, r } => {
                if *r != T::zero() {
                    ops.push(Op::Squeeze {
                        a: *s,
                        b: n_s + i,
                        r: *r,
                    });
                }
            }
            Element::LinearS(u) => push_linear(&mut ops, u, 0, modes),
            Element::LinearI(u) => push_linear(&mut ops, u, n_s, modes),
            Element::PhaseS { path, phi } => push_phase(&mut ops, modes, *path, *phi),
            Element::PhaseI { path, phi } => push_phase(&mut ops, modes, n_s + path, *phi),
        }
    }
    ops
}

fn push_phase<T: Real>(ops: &mut Vec<Op<T>>, modes: usize, mode: usize, phi: T) {
    if phi == T::zero() {
        return;
    }
    if let Some(Op::Phases(v)) = ops.last_mut() {
        v[mode] = v[mode] + phi;
        return;
    }
    let mut v = vec![T::zero(); modes];
    v[mode] = phi;
    ops.push(Op::Phases(v));
}

fn push_linear<T: Real>(ops: &mut Vec<Op<T>>, u: &CMatrix<T>, offset: usize, modes: usize) {
    // U = G_1 ... G_k D acts on a state as D first, then G_k, ..., G_1.
    let (rotations, phases) = linalg::givens_factorisation(u);
    for (k, phi) in phases.into_iter().enumerate() {
        push_phase(ops, modes, offset + k, phi);
    }
    for g in rotations.iter().rev() {
        if g.theta != T::zero() {
            ops.push(Op::Mix {
                p: offset + g.p,
                q: offset + g.q,
                theta: g.theta,
                phi: g.phi,
            });
        }
        push_phase(ops, modes, offset + g.p, g.chi);
        push_phase(ops, modes, offset + g.q, -g.chi);
    }
}

/// Basis indices grouped into chains, stored flat.
struct Chains {
    idx: Vec<usize>,
    /// (offset into `idx`, length, matrix key)
    spans: Vec<(usize, usize, usize)>,
}

/// Chains whose lowest state holds more than `support` photons carry no
/// amplitude and are left out.
fn squeeze_chains(space: &FockSpace, a: usize, b: usize, support: usize) -> Chains {
    let step = unit_key(a) + unit_key(b);
    let mut idx = Vec::with_capacity(space.dim());
    let mut spans = Vec::new();
    for k in 0..space.dim() {
        let c = space.counts(k);
        let (na, nb) = (c[a] as usize, c[b] as usize);
        if (na != 0 && nb != 0) || space.total(k) > support {
            continue;
        }
        let start = idx.len();
        let mut key = space.packed(k);
        let mut cur = Some(k);
        while let Some(j) = cur {
            idx.push(j);
            key += step;
            cur = space.lookup_packed(key);
        }
        spans.push((start, idx.len() - start, na.abs_diff(nb)));
    }
    Chains { idx, spans }
}

fn mix_chains(space: &FockSpace, p: usize, q: usize, support: usize) -> Chains {
    let mut idx = Vec::with_capacity(space.dim());
    let mut spans = Vec::new();
    for k in 0..space.dim() {
        let c = space.counts(k);
        if c[p] != 0 || space.total(k) > support {
            continue;
        }
        let n = c[q] as usize;
        let start = idx.len();
        let mut key = space.packed(k);
        idx.push(k);
        for _ in 0..n {
            key = key + unit_key(p) - unit_key(q);
            idx.push(
                space
                    .lookup_packed(key)
                    .expect("photon-sum chain stays inside the cap"),
            );
        }
        spans.push((start, n + 1, n));
    }
    Chains { idx, spans }
}

/// `exp(r K)` on a PDC chain of length `len` whose first state has
/// `|n_a - n_b| = d` and `min(n_a, n_b) = 0`.
fn squeeze_block<T: Real>(r: T, d: usize, len: usize) -> CMatrix<T> {
    let mut k = linalg::zeros::<T>(len, len);
    for j in 0..len.saturating_sub(1) {
        let g = (from_usize::<T>(j + 1) * from_usize::<T>(j + 1 + d)).sqrt() * r;
        k[[j + 1, j]] = Cx::new(g, T::zero());
        k[[j, j + 1]] = Cx::new(-g, T::zero());
    }
    linalg::expm(&k)
}

/// Two-mode rotation on the chain `n_p + n_q = n`, indexed by `n_p`.
fn mix_block<T: Real>(theta: T, phi: T, n: usize) -> CMatrix<T> {
    let mut x = linalg::zeros::<T>(n + 1, n + 1);
    for k in 1..=n {
        let g = (from_usize::<T>(k) * from_usize::<T>(n - k + 1)).sqrt() * theta;
        x[[k - 1, k]] = phase(phi) * g;
        x[[k, k - 1]] = -phase(-phi) * g;
    }
    linalg::expm(&x)
}

/// Propagates batches of column vectors (`dim x ncols`, row-major) through
/// elementary operations on a fixed space.
pub(crate) struct Propagator<'a> {
    space: &'a FockSpace,
    top: Vec<bool>,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(space: &'a FockSpace) -> Self {
        let band = space.cap().saturating_sub(1);
        let top = (0..space.dim()).map(|k| space.total(k) >= band).collect();
        Propagator { space, top }
    }

    /// Applies `ops` in order. Returns the top-band weight (largest over
    /// columns) seen right after each squeezing step, summed over steps.
    pub(crate) fn run<T: Real>(&self, ops: &[Op<T>], state: &mut Array2<Cx<T>>) -> f64 {
        let mut weight = 0.0;
        // largest photon number carrying amplitude
        let mut support = state
            .outer_iter()
            .enumerate()
            .filter(|(_, row)| row.iter().any(|x| x.re != T::zero() || x.im != T::zero()))
            .map(|(k, _)| self.space.total(k))
            .max()
            .unwrap_or(0);
        for op in ops {
            match op {
                Op::Squeeze { a, b, r } => {
                    let chains = squeeze_chains(self.space, *a, *b, support);
                    let blocks = build_blocks(&chains, |d, len| squeeze_block(*r, d, len));
                    apply_chains(&chains, &blocks, state);
                    weight += self.top_weight(state);
                    support = self.space.cap();
                }
                Op::Mix { p, q, theta, phi } => {
                    let chains = mix_chains(self.space, *p, *q, support);
                    let blocks = build_blocks(&chains, |n, _| mix_block(*theta, *phi, n));
                    apply_chains(&chains, &blocks, state);
                }
                Op::Phases(phis) => self.apply_phases(phis, state),
            }
        }
        weight
    }

    fn apply_phases<T: Real>(&self, phis: &[T], state: &mut Array2<Cx<T>>) {
        for k in 0..self.space.dim() {
            let arg = self
                .space
                .counts(k)
                .iter()
                .zip(phis)
                .fold(T::zero(), |acc, (&n, &phi)| {
                    acc + phi * from_usize::<T>(n as usize)
                });
            if arg == T::zero() {
                continue;
            }
            let f = phase(arg);
            state.row_mut(k).mapv_inplace(|x| x * f);
        }
    }

    fn top_weight<T: Real>(&self, state: &Array2<Cx<T>>) -> f64 {
        let mut per_col = vec![0.0f64; state.ncols()];
        for (k, row) in state.outer_iter().enumerate() {
            if self.top[k] {
                for (w, x) in per_col.iter_mut().zip(row.iter()) {
                    *w += x.norm_sqr().to_f64().unwrap_or(f64::INFINITY);
                }
            }
        }
        per_col.into_iter().fold(0.0, f64::max)
    }
}

fn build_blocks<T: Real, F>(chains: &Chains, block: F) -> HashMap<(usize, usize), CMatrix<T>>
where
    F: Fn(usize, usize) -> CMatrix<T>,
{
    let mut blocks = HashMap::new();
    for &(_, len, key) in &chains.spans {
        if len > 1 {
            blocks.entry((key, len)).or_insert_with(|| block(key, len));
        }
    }
    blocks
}

fn apply_chains<T: Real>(
    chains: &Chains,
    blocks: &HashMap<(usize, usize), CMatrix<T>>,
    state: &mut Array2<Cx<T>>,
) {
    let nc = state.ncols();
    let mut buf: Vec<Cx<T>> = Vec::new();
    let mut out: Vec<Cx<T>> = Vec::new();
    let data = state.as_slice_mut().expect("state arrays are contiguous");
    for &(start, len, key) in &chains.spans {
        if len == 1 {
            continue;
        }
        let m = &blocks[&(key, len)];
        let rows = &chains.idx[start..start + len];
        buf.clear();
        for &r in rows {
            buf.extend_from_slice(&data[r * nc..(r + 1) * nc]);
        }
        out.clear();
        out.resize(len * nc, Cx::new(T::zero(), T::zero()));
        for j in 0..len {
            let o = &mut out[j * nc..(j + 1) * nc];
            for k in 0..len {
                let mjk = m[[j, k]];
                if mjk.re == T::zero() && mjk.im == T::zero() {
                    continue;
                }
                let b = &buf[k * nc..(k + 1) * nc];
                for (x, y) in o.iter_mut().zip(b) {
                    *x = *x + mjk * *y;
                }
            }
        }
        for (j, &r) in rows.iter().enumerate() {
            data[r * nc..(r + 1) * nc].copy_from_slice(&out[j * nc..(j + 1) * nc]);
        }
    }
}
