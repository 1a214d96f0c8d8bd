//! Nonlinear circuits: ordered PDC and linear elements on signal and idler
//! paths.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::scalar::Real;

/// One optical element. Elements act in list order (the first element is
/// applied to the input state first).
#[derive(Debug, Clone, PartialEq)]
pub enum Element<T: Real> {
    /// Nondegenerate PDC `exp[r (a_s^dag a_i^dag - a_s a_i)]` on one signal
    /// and one idler path.
    Pdc {
        s: usize,
        i: usize,
        r: T,
    },
    /// Lossless linear network on all signal paths (`a_j^dag -> sum_k L_kj a_k^dag`).
    LinearS(CMatrix<T>),
    /// Lossless linear network on all idler paths.
    LinearI(CMatrix<T>),
    PhaseS {
        path: usize,
        phi: T,
    },
    PhaseI {
        path: usize,
        phi: T,
    },
}

impl<T: Real> Element<T> {
    pub fn is_pdc(&self) -> bool {
        matches!(self, Element::Pdc { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T: Real> {
    n_s: usize,
    n_i: usize,
    elements: Vec<Element<T>>,
}

impl<T: Real> Circuit<T> {
    /// Empty circuit (the identity) on the given path counts.
    pub fn new(n_s: usize, n_i: usize) -> Result<Self> {
        if n_s == 0 || n_i == 0 {
            return Err(Error::InvalidCircuit(
                "a circuit needs at least one signal and one idler path".into(),
            ));
        }
        Ok(Circuit {
            n_s,
            n_i,
            elements: Vec::new(),
        })
    }

    pub fn from_elements(n_s: usize, n_i: usize, elements: Vec<Element<T>>) -> Result<Self> {
        let mut c = Circuit::new(n_s, n_i)?;
        for e in elements {
            c.push(e)?;
        }
        Ok(c)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn elements(&self) -> &[Element<T>] {
        &self.elements
    }

    /// Appends an element after validating it against the path counts.
    pub fn push(&mut self, element: Element<T>) -> Result<()> {
        self.check(&element)?;
        self.elements.push(element);
        Ok(())
    }

    pub fn pdc(mut self, s: usize, i: usize, r: T) -> Result<Self> {
        self.push(Element::Pdc { s, i, r })?;
        Ok(self)
    }

    pub fn linear_s(mut self, u: CMatrix<T>) -> Result<Self> {
        self.push(Element::LinearS(u))?;
        Ok(self)
    }

    pub fn linear_i(mut self, u: CMatrix<T>) -> Result<Self> {
        self.push(Element::LinearI(u))?;
        Ok(self)
    }

    pub fn phase_s(mut self, path: usize, phi: T) -> Result<Self> {
        self.push(Element::PhaseS { path, phi })?;
        Ok(self)
    }

    pub fn phase_i(mut self, path: usize, phi: T) -> Result<Self> {
        self.push(Element::PhaseI { path, phi })?;
        Ok(self)
    }

    /// Sum of all PDC gains.
    pub fn total_gain(&self) -> T {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Pdc { r, .. } => Some(*r),
                _ => None,
            })
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn pdc_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_pdc()).count()
    }

    fn check(&self, e: &Element<T>) -> Result<()> {
        match e {
            Element::Pdc { s, i, r } => {
                if *s >= self.n_s || *i >= self.n_i {
                    return Err(Error::InvalidCircuit(format!(
                        "PDC on (s{s}, i{i}) outside {} signal / {} idler paths",
                        self.n_s, self.n_i
                    )));
                }
                if !(r.is_finite() && *r >= T::zero()) {
                    return Err(Error::InvalidCircuit(format!(
                        "PDC gain must be finite and >= 0, got {r}"
                    )));
                }
            }
            Element::LinearS(u) | Element::LinearI(u) => {
                let n = if matches!(e, Element::LinearS(_)) {
                    self.n_s
                } else {
                    self.n_i
                };
                if u.dim() != (n, n) {
                    return Err(Error::InvalidCircuit(format!(
                        "linear element is {}x{}, expected {n}x{n}",
                        u.nrows(),
                        u.ncols()
                    )));
                }
                linalg::check_unitary(u, T::validation_tol())?;
            }
            Element::PhaseS { path, phi } | Element::PhaseI { path, phi } => {
                let n = if matches!(e, Element::PhaseS { .. }) {
                    self.n_s
                } else {
                    self.n_i
                };
                if *path >= n {
                    return Err(Error::InvalidCircuit(format!(
                        "phase plate on path {path} of {n}"
                    )));
                }
                if !phi.is_finite() {
                    return Err(Error::InvalidCircuit("phase must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Re-validates every element.
    pub fn validate(&self) -> Result<()> {
        self.elements.iter().try_for_each(|e| self.check(e))
    }

    /// Groups the element list into stages: runs of linear elements are
    /// merged into one unitary per side, and zero-gain PDCs are dropped.
    pub fn stages(&self) -> Vec<Stage<T>> {
        let mut out = Vec::new();
        let mut ls: Option<CMatrix<T>> = None;
        let mut li: Option<CMatrix<T>> = None;
        let flush =
            |out: &mut Vec<Stage<T>>, ls: &mut Option<CMatrix<T>>, li: &mut Option<CMatrix<T>>| {
                if ls.is_some() || li.is_some() {
                    out.push(Stage::Linear {
                        s: ls.take(),
                        i: li.take(),
                    });
                }
            };
        for e in &self.elements {
            match e {
                Element::Pdc { s, i, r } => {
                    if *r == T::zero() {
                        continue;
                    }
                    flush(&mut out, &mut ls, &mut li);
                    out.push(Stage::Pdc {
                        s: *s,
                        i: *i,
                        r: *r,
                    });
                }
                Element::LinearS(u) => compose_into(&mut ls, u),
                Element::LinearI(u) => compose_into(&mut li, u),
                Element::PhaseS { path, phi } => {
                    compose_into(&mut ls, &phase_matrix(self.n_s, *path, *phi))
                }
                Element::PhaseI { path, phi } => {
                    compose_into(&mut li, &phase_matrix(self.n_i, *path, *phi))
                }
            }
        }
        flush(&mut out, &mut ls, &mut li);
        out
    }
}

/// Grouped view of a circuit used by the PTR fold.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T: Real> {
    Pdc {
        s: usize,
        i: usize,
        r: T,
    },
    /// Merged linear networks; `None` means the identity on that side.
    Linear {
        s: Option<CMatrix<T>>,
        i: Option<CMatrix<T>>,
    },
}

fn compose_into<T: Real>(acc: &mut Option<CMatrix<T>>, later: &CMatrix<T>) {
    *acc = Some(match acc.take() {
        Some(earlier) => later.dot(&earlier),
        None => later.clone(),
    });
}

/// Diagonal unitary with `e^{i phi}` on one path.
pub fn phase_matrix<T: Real>(n: usize, path: usize, phi: T) -> CMatrix<T> {
    let mut m = linalg::eye(n);
    m[[path, path]] = crate::scalar::phase(phi);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::lit;

    #[test]
    fn rejects_bad_elements() {
        let c = Circuit::<f64>::new(2, 1).unwrap();
        assert!(c.clone().pdc(2, 0, 0.1).is_err());
        assert!(c.clone().pdc(0, 0, -0.1).is_err());
        assert!(c.clone().phase_i(1, 0.3).is_err());
        let mut bad = linalg::eye::<f64>(2);
        bad[[0, 0]] = crate::scalar::cx(1.1, 0.0);
        assert!(matches!(
            c.clone().linear_s(bad),
            Err(Error::NotUnitary { .. })
        ));
        assert!(Circuit::<f64>::new(0, 1).is_err());
    }

    #[test]
    fn stage_grouping_merges_linear_runs() {
        let c = Circuit::<f64>::new(1, 1)
            .unwrap()
            .phase_s(0, 0.2)
            .unwrap()
            .phase_s(0, 0.3)
            .unwrap()
            .pdc(0, 0, 0.0)
            .unwrap()
            .phase_i(0, 0.1)
            .unwrap()
            .pdc(0, 0, 0.4)
            .unwrap();
        let stages = c.stages();
        assert_eq!(stages.len(), 2);
        match &stages[0] {
            Stage::Linear {
                s: Some(s),
                i: Some(i),
            } => {
                assert!((s[[0, 0]].arg() - 0.5).abs() < 1e-15);
                assert!((i[[0, 0]].arg() - 0.1).abs() < 1e-15);
            }
            other => panic!("unexpected stage {other:?}"),
        }
        assert_eq!(
            stages[1],
            Stage::Pdc {
                s: 0,
                i: 0,
                r: lit(0.4)
            }
        );
    }
}
