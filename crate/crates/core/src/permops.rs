//! Symmetric-group combinatorics and the permutation operators `P_N(π)` that
//! reorder `t` tensor factors of `C^N`.

use std::fmt;

use nalgebra::DVector;
use num_bigint::BigUint;
use num_complex::Complex64;

use crate::error::{dim_err, domain_err, Error, Result};
use crate::qlinalg::Operator;

/// Largest `t` accepted by [`enumerate_symmetric_group`].
pub const MAX_GROUP_ORDER: usize = 8;

/// Above this side length `permutation_operator` refuses to go dense; use
/// [`PermutationAction`] instead.
pub const DENSE_PERMUTATION_LIMIT: usize = 4096;

/// A bijection of `{1..t}`. The public API is 1-indexed, storage is 0-indexed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(t: usize) -> Self {
        Permutation {
            image: (0..t).collect(),
        }
    }

    /// Builds a permutation from its one-line form `[π(1), …, π(t)]`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let t = images.len();
        let mut seen = vec![false; t];
        let mut image = Vec::with_capacity(t);
        for &v in images {
            if v == 0 || v > t || seen[v - 1] {
                return domain_err(format!("{images:?} is not a permutation of 1..{t}"));
            }
            seen[v - 1] = true;
            image.push(v - 1);
        }
        Ok(Permutation { image })
    }

    /// Builds a permutation of `{1..t}` from disjoint cycles, e.g. `&[&[1, 2, 3]]`.
    pub fn from_cycles(t: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut image: Vec<usize> = (0..t).collect();
        let mut touched = vec![false; t];
        for cycle in cycles {
            for (pos, &v) in cycle.iter().enumerate() {
                if v == 0 || v > t || touched[v - 1] {
                    return domain_err(format!("bad cycle {cycle:?} for size {t}"));
                }
                touched[v - 1] = true;
                let next = cycle[(pos + 1) % cycle.len()];
                if next == 0 || next > t {
                    return domain_err(format!("bad cycle {cycle:?} for size {t}"));
                }
                image[v - 1] = next - 1;
            }
        }
        Ok(Permutation { image })
    }

    pub fn transposition(t: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_cycles(t, &[&[a, b]])
    }

    pub(crate) fn from_zero_based(image: Vec<usize>) -> Self {
        debug_assert!({
            let mut s = image.clone();
            s.sort_unstable();
            s.iter().enumerate().all(|(i, &v)| i == v)
        });
        Permutation { image }
    }

    pub fn size(&self) -> usize {
        self.image.len()
    }

    /// `π(i)` for 1-indexed `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.image[i - 1] + 1
    }

    /// One-line form, 1-indexed.
    pub fn images(&self) -> Vec<usize> {
        self.image.iter().map(|v| v + 1).collect()
    }

    pub(crate) fn zero_based(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.size()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { image: inv }
    }

    /// Disjoint cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.size()];
        let mut count = 0;
        for start in 0..self.size() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.image[i];
            }
        }
        count
    }

    /// Position of this permutation in the lexicographic listing of `Sym_t`
    /// (Lehmer code).
    pub fn lex_rank(&self) -> usize {
        let t = self.size();
        let mut rank = 0;
        for i in 0..t {
            let smaller = self.image[i + 1..]
                .iter()
                .filter(|&&v| v < self.image[i])
                .count();
            rank = rank * (t - i) + smaller;
        }
        rank
    }

    /// Embeds `self ⊕ other` acting on `1..s` and `s+1..s+r`.
    pub fn direct_sum(&self, other: &Permutation) -> Permutation {
        let s = self.size();
        let mut image = self.image.clone();
        image.extend(other.image.iter().map(|v| v + s));
        Permutation { image }
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{}", self)
    }
}

/// Cycle notation with fixed points omitted; the identity prints as `()`.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut seen = vec![false; self.size()];
        let mut wrote = false;
        for start in 0..self.size() {
            if seen[start] || self.image[start] == start {
                continue;
            }
            write!(f, "(")?;
            let mut i = start;
            let mut first = true;
            while !seen[i] {
                seen[i] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
                i = self.image[i];
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// `(p ∘ q)(i) = p(q(i))`.
pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation> {
    if p.size() != q.size() {
        return dim_err(format!("compose: sizes {} and {}", p.size(), q.size()));
    }
    Ok(Permutation {
        image: q.image.iter().map(|&i| p.image[i]).collect(),
    })
}

pub fn inverse(p: &Permutation) -> Permutation {
    p.inverse()
}

pub fn cycle_count(p: &Permutation) -> usize {
    p.cycle_count()
}

/// All of `Sym_t` in lexicographic order of the one-line form; the identity
/// comes first.
pub fn enumerate_symmetric_group(t: usize) -> Result<Vec<Permutation>> {
    if t == 0 || t > MAX_GROUP_ORDER {
        return Err(Error::SizeLimit {
            what: format!("Sym_{t}"),
            requested: t as u128,
            limit: MAX_GROUP_ORDER as u128,
        });
    }
    let mut current: Vec<usize> = (0..t).collect();
    let mut out = vec![Permutation {
        image: current.clone(),
    }];
    // classic next-permutation
    loop {
        let Some(i) = (0..t - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..t).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
        out.push(Permutation {
            image: current.clone(),
        });
    }
    Ok(out)
}

/// Basis-index map of `P_N(π)` on `[N]^t`: entry `x` holds the index of
/// `P_N(π)|x⟩`. Digits are big-endian (register 1 most significant).
pub fn basis_map(n: usize, p: &Permutation) -> Result<Vec<usize>> {
    let t = p.size();
    let dim = checked_pow(n, t)?;
    let mut strides = vec![1usize; t];
    for i in (0..t.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * n;
    }
    // digit j of the input lands in position π(j)
    let out_stride: Vec<usize> = (0..t).map(|j| strides[p.image[j]]).collect();
    let mut map = Vec::with_capacity(dim);
    let mut digits = vec![0usize; t];
    let mut target = 0usize;
    for _ in 0..dim {
        map.push(target);
        for j in (0..t).rev() {
            digits[j] += 1;
            target += out_stride[j];
            if digits[j] < n {
                break;
            }
            digits[j] = 0;
            target -= n * out_stride[j];
        }
    }
    Ok(map)
}

pub(crate) fn checked_pow(n: usize, t: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..t {
        acc = acc.checked_mul(n).ok_or_else(|| Error::SizeLimit {
            what: format!("{n}^{t}"),
            requested: u128::MAX,
            limit: usize::MAX as u128,
        })?;
    }
    Ok(acc)
}

/// Dense `P_N(π)` with subsystem dims `[N; t]`.
pub fn permutation_operator(n: usize, p: &Permutation) -> Result<Operator> {
    if n < 1 {
        return domain_err("permutation_operator needs N >= 1");
    }
    let dim = checked_pow(n, p.size())?;
    if dim > DENSE_PERMUTATION_LIMIT {
        return Err(Error::SizeLimit {
            what: format!("dense P_{n}(π) on {} registers", p.size()),
            requested: (dim as u128) * (dim as u128),
            limit: (DENSE_PERMUTATION_LIMIT as u128).pow(2),
        });
    }
    let map = basis_map(n, p)?;
    let mut op = Operator::zeros(vec![n; p.size()])?;
    for (x, &y) in map.iter().enumerate() {
        op.set(y, x, Complex64::new(1.0, 0.0));
    }
    Ok(op)
}

/// Implicit `P_N(π)`: only the basis-index map is stored.
#[derive(Clone, Debug)]
pub struct PermutationAction {
    n: usize,
    perm: Permutation,
    map: Vec<usize>,
}

impl PermutationAction {
    pub fn new(n: usize, perm: &Permutation) -> Result<Self> {
        Ok(PermutationAction {
            n,
            perm: perm.clone(),
            map: basis_map(n, perm)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Index of `P|x⟩`.
    pub fn map_index(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn apply_to_vec(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return dim_err(format!("vector of length {} vs {}", v.len(), self.dim()));
        }
        let mut out = DVector::zeros(v.len());
        for (x, &y) in self.map.iter().enumerate() {
            out[y] = v[x];
        }
        Ok(out)
    }
}

/// `N^{↓t} = N (N−1) ⋯ (N−t+1)`, exact.
pub fn falling_factorial(n: u64, t: u64) -> Result<BigUint> {
    if t > n {
        return domain_err(format!("falling factorial needs t <= N, got N={n}, t={t}"));
    }
    let mut acc = BigUint::from(1u32);
    for i in 0..t {
        acc *= BigUint::from(n - i);
    }
    Ok(acc)
}

pub(crate) fn falling_factorial_f64(n: usize, t: usize) -> f64 {
    (0..t).map(|i| n as f64 - i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(t: usize, cycles: &[&[usize]]) -> Permutation {
        Permutation::from_cycles(t, cycles).unwrap()
    }

    #[test]
    fn group_sizes_and_order() {
        assert_eq!(enumerate_symmetric_group(1).unwrap().len(), 1);
        assert_eq!(enumerate_symmetric_group(3).unwrap().len(), 6);
        let s4 = enumerate_symmetric_group(4).unwrap();
        assert_eq!(s4.len(), 24);
        assert!(s4[0].is_identity());
        for (i, p) in s4.iter().enumerate() {
            assert_eq!(p.lex_rank(), i);
        }
        let mut sorted = s4.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
        assert!(enumerate_symmetric_group(0).is_err());
        assert!(matches!(
            enumerate_symmetric_group(9),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn composition_examples() {
        let id = Permutation::identity(3);
        let c = cyc(3, &[&[1, 2, 3]]);
        assert_eq!(compose(&id, &c).unwrap(), c);
        let s = cyc(2, &[&[1, 2]]);
        assert!(compose(&s, &s).unwrap().is_identity());
        assert_eq!(compose(&c, &c).unwrap(), cyc(3, &[&[1, 3, 2]]));
        assert_eq!(c.inverse(), cyc(3, &[&[1, 3, 2]]));
        assert!(compose(&s, &c).is_err());
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(Permutation::identity(3).cycle_count(), 3);
        assert_eq!(cyc(2, &[&[1, 2]]).cycle_count(), 1);
        assert_eq!(cyc(4, &[&[1, 2], &[3, 4]]).cycle_count(), 2);
    }

    #[test]
    fn display_is_cycle_notation() {
        assert_eq!(cyc(4, &[&[1, 2], &[3, 4]]).to_string(), "(1 2)(3 4)");
        assert_eq!(Permutation::identity(2).to_string(), "()");
    }

    #[test]
    fn swap_operator() {
        let p = permutation_operator(2, &cyc(2, &[&[1, 2]])).unwrap();
        let order = [0, 2, 1, 3];
        for (x, &y) in order.iter().enumerate() {
            assert_eq!(p.get(y, x), Complex64::new(1.0, 0.0));
        }
        let id = permutation_operator(2, &Permutation::identity(2)).unwrap();
        assert_eq!(id.matrix(), Operator::identity(vec![2, 2]).unwrap().matrix());
    }

    #[test]
    fn three_cycle_against_brute_force() {
        // Displayed action: output position i holds input digit π⁻¹(i).
        let p = cyc(3, &[&[1, 2, 3]]);
        let pinv = p.inverse();
        let op = permutation_operator(3, &p).unwrap();
        for x in 0..27usize {
            let d = [x / 9, (x / 3) % 3, x % 3];
            let out: Vec<usize> = (1..=3).map(|i| d[pinv.apply(i) - 1]).collect();
            let y = out[0] * 9 + out[1] * 3 + out[2];
            assert_eq!(op.get(y, x).re, 1.0);
        }
        // the worked example: (0,1,2) goes to (2,0,1)
        assert_eq!(op.get(2 * 9 + 1, 5).re, 1.0);
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial(5, 2).unwrap(), BigUint::from(20u32));
        assert_eq!(falling_factorial(4, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(falling_factorial(7, 7).unwrap(), BigUint::from(5040u32));
        assert!(matches!(falling_factorial(2, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn implicit_matches_dense() {
        let p = cyc(3, &[&[1, 3]]);
        let dense = permutation_operator(2, &p).unwrap();
        let act = PermutationAction::new(2, &p).unwrap();
        let v = DVector::from_fn(8, |i, _| Complex64::new(i as f64, -(i as f64) / 2.0));
        let a = act.apply_to_vec(&v).unwrap();
        let b = dense.matrix() * &v;
        assert!((a - b).norm() == 0.0);
    }

    #[test]
    fn dense_limit_enforced() {
        let p = Permutation::identity(3);
        assert!(matches!(
            permutation_operator(17, &p),
            Err(Error::SizeLimit { .. })
        ));
        assert_eq!(PermutationAction::new(17, &p).unwrap().dim(), 4913);
    }
}
