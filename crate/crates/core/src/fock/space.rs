use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of modes (signal plus idler paths) a [`FockSpace`] supports.
pub const MAX_MODES: usize = 8;
/// Largest photon cap a [`FockSpace`] supports.
pub const MAX_CAP: usize = 254;
/// Default dimension limit for truncated spaces.
pub const DEFAULT_DIM_LIMIT: usize = 4_000_000;

/// Photon counts per signal path and per idler path, `|n_s; n_i>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occupation {
    pub s: Vec<usize>,
    pub i: Vec<usize>,
}

impl Occupation {
    pub fn new(s: Vec<usize>, i: Vec<usize>) -> Self {
        Occupation { s, i }
    }

    pub fn vacuum(n_s: usize, n_i: usize) -> Self {
        Occupation {
            s: vec![0; n_s],
            i: vec![0; n_i],
        }
    }

    /// `e_{s k}`: one photon on signal path `k`.
    pub fn unit_s(n_s: usize, n_i: usize, k: usize) -> Self {
        let mut o = Self::vacuum(n_s, n_i);
        o.s[k] = 1;
        o
    }

    /// `e_{i k}`: one photon on idler path `k`.
    pub fn unit_i(n_s: usize, n_i: usize, k: usize) -> Self {
        let mut o = Self::vacuum(n_s, n_i);
        o.i[k] = 1;
        o
    }

    pub fn total_s(&self) -> usize {
        self.s.iter().sum()
    }

    pub fn total_i(&self) -> usize {
        self.i.iter().sum()
    }

    pub fn total(&self) -> usize {
        self.total_s() + self.total_i()
    }

    /// `|n_s| - |n_i|`, conserved by every circuit element.
    pub fn difference(&self) -> i64 {
        self.total_s() as i64 - self.total_i() as i64
    }

    /// Concatenated `s || i` counts (mode order used by every basis).
    pub fn modes(&self) -> Vec<usize> {
        self.s.iter().chain(self.i.iter()).copied().collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.s.len(), self.i.len())
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{};{}", join(&self.s), join(&self.i))
    }
}

impl FromStr for Occupation {
    type Err = Error;

    /// Parses `"1,0;2"` as `s = [1, 0]`, `i = [2]`.
    fn from_str(text: &str) -> Result<Self> {
        let (s, i) = text.split_once(';').ok_or_else(|| {
            Error::InvalidArgument(format!("occupation `{text}` must look like `1,0;0,1`"))
        })?;
        let parse = |part: &str| -> Result<Vec<usize>> {
            part.split(',')
                .map(|x| {
                    x.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidArgument(format!("bad photon count `{x}` in `{text}`"))
                    })
                })
                .collect()
        };
        Ok(Occupation {
            s: parse(s)?,
            i: parse(i)?,
        })
    }
}

/// Truncated multimode Fock basis with a single global photon cap.
///
/// States are ordered lexicographically on the concatenated `s || i`
/// counts. A space may be restricted to one photon-number-difference sector.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n_s: usize,
    n_i: usize,
    cap: usize,
    difference: Option<i64>,
    occ: Vec<u8>,
    totals: Vec<u16>,
    index: HashMap<u64, usize>,
}

impl FockSpace {
    /// All states of `n_s + n_i` modes with at most `cap` photons in total.
    pub fn new(n_s: usize, n_i: usize, cap: usize) -> Result<Self> {
        Self::build(n_s, n_i, cap, None, DEFAULT_DIM_LIMIT)
    }

    /// States with at most `cap` photons and `|n_s| - |n_i| = difference`.
    pub fn sector(n_s: usize, n_i: usize, cap: usize, difference: i64) -> Result<Self> {
        Self::build(n_s, n_i, cap, Some(difference), DEFAULT_DIM_LIMIT)
    }

    pub fn with_limit(
        n_s: usize,
        n_i: usize,
        cap: usize,
        difference: Option<i64>,
        limit: usize,
    ) -> Result<Self> {
        Self::build(n_s, n_i, cap, difference, limit)
    }

    /// Basis of a single family of `modes` paths (used for observables and
    /// states that live on the signal or idler side only).
    pub fn single_family(modes: usize, cap: usize) -> Result<Self> {
        Self::build(modes, 0, cap, None, DEFAULT_DIM_LIMIT)
    }

    fn build(
        n_s: usize,
        n_i: usize,
        cap: usize,
        difference: Option<i64>,
        limit: usize,
    ) -> Result<Self> {
        let modes = n_s + n_i;
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::InvalidArgument(format!(
                "mode count {modes} outside 1..={MAX_MODES}"
            )));
        }
        if cap > MAX_CAP {
            return Err(Error::InvalidArgument(format!(
                "photon cap {cap} exceeds {MAX_CAP}"
            )));
        }
        let dim = Self::count(n_s, n_i, cap, difference);
        if dim > limit {
            return Err(Error::DimensionOverflow { dim, limit });
        }
        let mut space = FockSpace {
            n_s,
            n_i,
            cap,
            difference,
            occ: Vec::with_capacity(dim * modes),
            totals: Vec::with_capacity(dim),
            index: HashMap::with_capacity(dim),
        };
        let mut current = vec![0u8; modes];
        space.enumerate(0, 0, &mut current);
        debug_assert_eq!(space.dim(), dim);
        Ok(space)
    }

    fn enumerate(&mut self, mode: usize, used: usize, current: &mut [u8]) {
        let modes = self.n_s + self.n_i;
        if mode == modes {
            if let Some(d) = self.difference {
                let ts: usize = current[..self.n_s].iter().map(|&x| x as usize).sum();
                if ts as i64 - (used - ts) as i64 != d {
                    return;
                }
            }
            let idx = self.totals.len();
            self.index.insert(pack(current), idx);
            self.occ.extend_from_slice(current);
            self.totals.push(used as u16);
            return;
        }
        let mut hi = self.cap - used;
        if let (Some(d), true) = (self.difference, mode >= self.n_s) {
            // idler part must reach exactly |n_s| - d photons
            let ts: usize = current[..self.n_s].iter().map(|&x| x as usize).sum();
            let target = ts as i64 - d;
            if target < 0 {
                return;
            }
            let have = used - ts;
            let need = target as usize;
            if have > need {
                return;
            }
            hi = hi.min(need - have);
            if mode == modes - 1 {
                if need - have > self.cap - used {
                    return;
                }
                current[mode] = (need - have) as u8;
                self.enumerate(mode + 1, used + need - have, current);
                current[mode] = 0;
                return;
            }
        }
        for n in 0..=hi {
            current[mode] = n as u8;
            self.enumerate(mode + 1, used + n, current);
        }
        current[mode] = 0;
    }

    /// Number of basis states, without enumerating them.
    pub fn count(n_s: usize, n_i: usize, cap: usize, difference: Option<i64>) -> usize {
        match difference {
            None => binomial(cap + n_s + n_i, n_s + n_i),
            Some(d) => (0..=cap)
                .filter_map(|ts| {
                    let ti = ts as i64 - d;
                    (ti >= 0 && ts + ti as usize <= cap)
                        .then(|| compositions(ts, n_s) * compositions(ti as usize, n_i))
                })
                .sum(),
        }
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn modes(&self) -> usize {
        self.n_s + self.n_i
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn difference(&self) -> Option<i64> {
        self.difference
    }

    pub fn dim(&self) -> usize {
        self.totals.len()
    }

    /// Index of an occupation, if it lies in this space.
    pub fn encode(&self, v: &Occupation) -> Option<usize> {
        if v.s.len() != self.n_s || v.i.len() != self.n_i {
            return None;
        }
        let modes = v.modes();
        if modes.iter().any(|&n| n > self.cap) {
            return None;
        }
        let packed: Vec<u8> = modes.iter().map(|&n| n as u8).collect();
        self.index.get(&pack(&packed)).copied()
    }

    pub fn decode(&self, index: usize) -> Occupation {
        let m = self.modes();
        let row = &self.occ[index * m..(index + 1) * m];
        Occupation {
            s: row[..self.n_s].iter().map(|&x| x as usize).collect(),
            i: row[self.n_s..].iter().map(|&x| x as usize).collect(),
        }
    }

    /// Raw counts of basis state `index` in `s || i` mode order.
    pub(crate) fn counts(&self, index: usize) -> &[u8] {
        let m = self.modes();
        &self.occ[index * m..(index + 1) * m]
    }

    pub(crate) fn total(&self, index: usize) -> usize {
        self.totals[index] as usize
    }

    pub(crate) fn lookup_packed(&self, key: u64) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub(crate) fn packed(&self, index: usize) -> u64 {
        pack(self.counts(index))
    }

    pub fn iter(&self) -> impl Iterator<Item = Occupation> + '_ {
        (0..self.dim()).map(move |k| self.decode(k))
    }
}

/// Packs per-mode counts into a `u64` key, eight bits per mode.
pub(crate) fn pack(counts: &[u8]) -> u64 {
    counts
        .iter()
        .enumerate()
        .fold(0u64, |acc, (k, &n)| acc | ((n as u64) << (8 * k)))
}

/// Key increment that adds one photon to `mode`.
pub(crate) fn unit_key(mode: usize) -> u64 {
    1u64 << (8 * mode)
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, j| acc * (n - j) / (j + 1))
}

/// Ways to place `n` photons in `modes` modes.
fn compositions(n: usize, modes: usize) -> usize {
    if modes == 0 {
        usize::from(n == 0)
    } else {
        binomial(n + modes - 1, modes - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bases() {
        let sp = FockSpace::new(1, 1, 1).unwrap();
        let states: Vec<String> = sp.iter().map(|o| o.to_string()).collect();
        assert_eq!(states, vec!["0;0", "0;1", "1;0"]);
        assert_eq!(FockSpace::new(1, 1, 0).unwrap().dim(), 1);
    }

    fn brute_count(n_s: usize, n_i: usize, cap: usize, diff: Option<i64>) -> usize {
        let m = n_s + n_i;
        let mut count = 0;
        let total = (cap + 1).pow(m as u32);
        for mut code in 0..total {
            let mut v = Vec::with_capacity(m);
            for _ in 0..m {
                v.push(code % (cap + 1));
                code /= cap + 1;
            }
            let sum: usize = v.iter().sum();
            let d = v[..n_s].iter().sum::<usize>() as i64 - v[n_s..].iter().sum::<usize>() as i64;
            if sum <= cap && diff.is_none_or(|x| x == d) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn dimension_matches_enumeration() {
        for &(ns, ni, cap) in &[(2usize, 2usize, 4usize), (1, 2, 5), (3, 1, 3)] {
            let sp = FockSpace::new(ns, ni, cap).unwrap();
            assert_eq!(sp.dim(), brute_count(ns, ni, cap, None));
            for d in -3..=3 {
                let sec = FockSpace::sector(ns, ni, cap, d).unwrap();
                assert_eq!(
                    sec.dim(),
                    brute_count(ns, ni, cap, Some(d)),
                    "({ns},{ni},{cap}) d={d}"
                );
                assert!(sec.iter().all(|o| o.difference() == d));
            }
        }
        assert_eq!(FockSpace::new(2, 2, 4).unwrap().dim(), 70);
    }

    #[test]
    fn encode_decode_bijection_and_order() {
        let sp = FockSpace::new(2, 2, 4).unwrap();
        let all: Vec<Occupation> = sp.iter().collect();
        for (k, o) in all.iter().enumerate() {
            assert_eq!(sp.encode(o), Some(k));
        }
        let mut sorted = all.clone();
        sorted.sort_by_key(|o| o.modes());
        assert_eq!(sorted, all);
        assert_eq!(sp.encode(&Occupation::new(vec![3, 2], vec![0, 0])), None);
    }

    #[test]
    fn dimension_limit_is_enforced() {
        let err = FockSpace::with_limit(3, 3, 20, None, 1000).unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow { limit: 1000, .. }));
    }

    #[test]
    fn occupation_text_round_trip() {
        let o: Occupation = "1,0;2".parse().unwrap();
        assert_eq!(o, Occupation::new(vec![1, 0], vec![2]));
        assert_eq!(o.to_string(), "1,0;2");
        assert_eq!(o.difference(), -1);
        assert!("1,0".parse::<Occupation>().is_err());
    }
}
