//! Sparse simulation of the path-recording oracle.
//!
//! States live in the basis `|registers⟩|L⟩|R⟩` where `L` and `R` are
//! relation states. Relation states of distinct multisets are orthonormal, so
//! a relation is stored as its sorted pair list and every isometry acts
//! directly on these labels.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{dim_err, domain_err, Error, Result};
use crate::qlinalg::{c, CMatrix, CVector, Operator, C64};
use crate::seeds::task_rng;

/// Amplitudes below this modulus are dropped after every application.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest oracle dimension accepted by [`simulate_queries`].
pub const MAX_ORACLE_DIM: usize = 64;
/// Largest number of oracle queries accepted by [`simulate_queries`].
pub const MAX_QUERIES: usize = 4;

/// Multiset of pairs `(x, y)`, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pairs: Vec<(u16, u16)>,
}

impl Relation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let mut out = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            if x > u16::MAX as usize || y > u16::MAX as usize {
                return domain_err(format!("pair ({x}, {y}) out of range"));
            }
            out.push((x as u16, y as u16));
        }
        out.sort_unstable();
        Ok(Self { pairs: out })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u16, u16)] {
        &self.pairs
    }

    pub fn domain(&self) -> BTreeSet<u16> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn image(&self) -> BTreeSet<u16> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Multiplicity of `(x, y)`.
    pub fn num(&self, x: usize, y: usize) -> usize {
        self.pairs
            .iter()
            .filter(|&&(a, b)| a as usize == x && b as usize == y)
            .count()
    }

    pub fn with_pair(&self, x: u16, y: u16) -> Self {
        let mut pairs = self.pairs.clone();
        let at = pairs.partition_point(|&p| p <= (x, y));
        pairs.insert(at, (x, y));
        Self { pairs }
    }

    /// Removes one copy of `(x, y)`; `None` if absent.
    pub fn without_pair(&self, x: u16, y: u16) -> Option<Self> {
        let at = self.pairs.binary_search(&(x, y)).ok()?;
        let mut pairs = self.pairs.clone();
        pairs.remove(at);
        Some(Self { pairs })
    }

    /// Multiset sum.
    pub fn union(&self, other: &Relation) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        pairs.sort_unstable();
        Self { pairs }
    }

    /// `√(t! · Π num(R,(x,y))!)`, the normalizer of the symmetrized state.
    pub fn norm_factor(&self) -> f64 {
        let mut log = ln_factorial(self.pairs.len());
        let mut i = 0;
        while i < self.pairs.len() {
            let mut j = i;
            while j < self.pairs.len() && self.pairs[j] == self.pairs[i] {
                j += 1;
            }
            log += ln_factorial(j - i);
            i = j;
        }
        (0.5 * log).exp()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

pub fn relation_state_norm_factor(r: &Relation) -> f64 {
    r.norm_factor()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub registers: Vec<u16>,
    pub left: Relation,
    pub right: Relation,
}

/// Sparse vector over `|registers⟩|L⟩|R⟩`.
#[derive(Clone, Debug)]
pub struct PurifiedState {
    n: usize,
    dims: Vec<usize>,
    amps: BTreeMap<BasisLabel, C64>,
}

/// Values that `Ṽ^L` must avoid in addition to `Im(L ∪ R)`.
#[derive(Clone, Debug)]
pub enum Blocked {
    /// Current values of these registers, read per basis label.
    Registers(Vec<usize>),
    Values(Vec<usize>),
}

impl PurifiedState {
    /// `|ψ⟩|∅⟩|∅⟩` for a dense `ψ` over registers of dimensions `dims`
    /// (big-endian). `n` is the oracle dimension.
    pub fn from_vector(n: usize, dims: Vec<usize>, psi: &CVector) -> Result<Self> {
        if n == 0 || n > u16::MAX as usize {
            return domain_err(format!("oracle dimension {n} out of range"));
        }
        if dims.iter().any(|&d| d == 0 || d > u16::MAX as usize + 1) {
            return dim_err(format!("bad register dimensions {dims:?}"));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Dimension("register space overflows".into()))?;
        if psi.len() != total {
            return dim_err(format!("vector of length {} for dims {dims:?}", psi.len()));
        }
        let mut amps = BTreeMap::new();
        for (i, &a) in psi.iter().enumerate() {
            if a.norm() > PRUNE_TOL {
                amps.insert(
                    BasisLabel {
                        registers: unflatten(i, &dims),
                        left: Relation::empty(),
                        right: Relation::empty(),
                    },
                    a,
                );
            }
        }
        Ok(Self { n, dims, amps })
    }

    /// Single basis label with amplitude one.
    pub fn basis(n: usize, dims: Vec<usize>, registers: &[usize]) -> Result<Self> {
        if registers.len() != dims.len() || registers.iter().zip(&dims).any(|(&v, &d)| v >= d) {
            return dim_err(format!("basis {registers:?} invalid for dims {dims:?}"));
        }
        let idx = flatten(registers, &dims);
        let total: usize = dims.iter().product();
        let mut psi = CVector::zeros(total);
        psi[idx] = c(1.0, 0.0);
        Self::from_vector(n, dims, &psi)
    }

    fn with_amps(&self, amps: BTreeMap<BasisLabel, C64>) -> Self {
        let amps = amps.into_iter().filter(|(_, a)| a.norm() > PRUNE_TOL).collect();
        Self { n: self.n, dims: self.dims.clone(), amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &BTreeMap<BasisLabel, C64> {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn add(&self, other: &PurifiedState) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &PurifiedState) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &PurifiedState, sign: f64) -> Result<Self> {
        if self.n != other.n || self.dims != other.dims {
            return dim_err("purified states with different layouts");
        }
        let mut amps = self.amps.clone();
        for (k, &v) in &other.amps {
            *amps.entry(k.clone()).or_insert(c(0.0, 0.0)) += v * sign;
        }
        Ok(self.with_amps(amps))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.with_amps(self.amps.iter().map(|(k, &v)| (k.clone(), v * s)).collect())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &PurifiedState) -> Result<f64> {
        Ok(self.sub(other)?.norm_sqr().sqrt())
    }

    fn check_query_register(&self, reg: usize) -> Result<()> {
        match self.dims.get(reg) {
            Some(&d) if d == self.n => Ok(()),
            Some(&d) => dim_err(format!("register {reg} has dimension {d}, oracle needs {}", self.n)),
            None => Err(Error::Index(format!("register {reg} of {}", self.dims.len()))),
        }
    }

    fn map_labels<F>(&self, f: F) -> Self
    where
        F: Fn(&BasisLabel, &mut Vec<(BasisLabel, f64)>),
    {
        let mut out: BTreeMap<BasisLabel, C64> = BTreeMap::new();
        let mut buf = Vec::new();
        for (label, &amp) in &self.amps {
            buf.clear();
            f(label, &mut buf);
            for (l, w) in buf.drain(..) {
                *out.entry(l).or_insert(c(0.0, 0.0)) += amp * w;
            }
        }
        self.with_amps(out)
    }

    fn left_isometry(&self, reg: usize, blocked: Option<&Blocked>) -> Self {
        let n = self.n;
        self.map_labels(|lab, out| {
            let x = lab.registers[reg];
            let mut avoid = lab.left.image();
            avoid.extend(lab.right.image());
            match blocked {
                Some(Blocked::Registers(regs)) => avoid.extend(regs.iter().map(|&r| lab.registers[r])),
                Some(Blocked::Values(vals)) => avoid.extend(vals.iter().map(|&v| v as u16)),
                None => {}
            }
            let avoid: BTreeSet<u16> = avoid.into_iter().filter(|&v| (v as usize) < n).collect();
            let free = n - avoid.len();
            if free == 0 {
                return;
            }
            let w = 1.0 / (free as f64).sqrt();
            for y in 0..n as u16 {
                if !avoid.contains(&y) {
                    let mut registers = lab.registers.clone();
                    registers[reg] = y;
                    out.push((
                        BasisLabel { registers, left: lab.left.with_pair(x, y), right: lab.right.clone() },
                        w,
                    ));
                }
            }
        })
    }

    fn right_isometry(&self, reg: usize, constant_factor: bool) -> Self {
        let n = self.n;
        self.map_labels(|lab, out| {
            let y = lab.registers[reg];
            let mut avoid = lab.left.domain();
            avoid.extend(lab.right.domain());
            let free = n - avoid.len();
            if free == 0 {
                return;
            }
            let w = if constant_factor { 1.0 / (n as f64).sqrt() } else { 1.0 / (free as f64).sqrt() };
            for x in 0..n as u16 {
                if !avoid.contains(&x) {
                    let mut registers = lab.registers.clone();
                    registers[reg] = x;
                    out.push((
                        BasisLabel { registers, left: lab.left.clone(), right: lab.right.with_pair(x, y) },
                        w,
                    ));
                }
            }
        })
    }

    fn left_adjoint(&self, reg: usize) -> Self {
        let n = self.n;
        self.map_labels(|lab, out| {
            let y = lab.registers[reg];
            if lab.right.image().contains(&y) {
                return;
            }
            let mut hits = lab.left.pairs().iter().filter(|p| p.1 == y);
            let (Some(&(x, _)), None) = (hits.next(), hits.next()) else {
                return;
            };
            let left = lab.left.without_pair(x, y).expect("pair present");
            let mut im = left.image();
            im.extend(lab.right.image());
            let w = 1.0 / ((n - im.len()) as f64).sqrt();
            let mut registers = lab.registers.clone();
            registers[reg] = x;
            out.push((BasisLabel { registers, left, right: lab.right.clone() }, w));
        })
    }

    fn right_adjoint(&self, reg: usize) -> Self {
        let n = self.n;
        self.map_labels(|lab, out| {
            let x = lab.registers[reg];
            if lab.left.domain().contains(&x) {
                return;
            }
            let mut hits = lab.right.pairs().iter().filter(|p| p.0 == x);
            let (Some(&(_, y)), None) = (hits.next(), hits.next()) else {
                return;
            };
            let right = lab.right.without_pair(x, y).expect("pair present");
            let mut dom = right.domain();
            dom.extend(lab.left.domain());
            let w = 1.0 / ((n - dom.len()) as f64).sqrt();
            let mut registers = lab.registers.clone();
            registers[reg] = y;
            out.push((BasisLabel { registers, left: lab.left.clone(), right }, w));
        })
    }

    /// Dense unitary (or any matrix) on the listed registers, big-endian in
    /// the listed order.
    pub fn apply_local(&self, op: &CMatrix, regs: &[usize]) -> Result<Self> {
        let sub_dims: Vec<usize> = regs
            .iter()
            .map(|&r| self.dims.get(r).copied().ok_or_else(|| Error::Index(format!("register {r}"))))
            .collect::<Result<_>>()?;
        let mut seen = BTreeSet::new();
        if !regs.iter().all(|r| seen.insert(*r)) {
            return dim_err(format!("repeated register in {regs:?}"));
        }
        let d: usize = sub_dims.iter().product();
        if op.nrows() != d || op.ncols() != d {
            return dim_err(format!("{}x{} local operator on dimension {d}", op.nrows(), op.ncols()));
        }
        let mut out: BTreeMap<BasisLabel, C64> = BTreeMap::new();
        for (lab, &amp) in &self.amps {
            let vals: Vec<usize> = regs.iter().map(|&r| lab.registers[r] as usize).collect();
            let col = flatten(&vals, &sub_dims);
            for row in 0..d {
                let m = op[(row, col)];
                if m.norm() == 0.0 {
                    continue;
                }
                let new_vals = unflatten(row, &sub_dims);
                let mut registers = lab.registers.clone();
                for (&r, &v) in regs.iter().zip(&new_vals) {
                    registers[r] = v;
                }
                let key = BasisLabel { registers, left: lab.left.clone(), right: lab.right.clone() };
                *out.entry(key).or_insert(c(0.0, 0.0)) += amp * m;
            }
        }
        Ok(self.with_amps(out))
    }

    /// `Tr_{LR} |s⟩⟨s|` over the registers.
    pub fn reduced_state(&self) -> Result<Operator> {
        let total = self
            .dims
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Dimension("register space overflows".into()))?;
        let mut mat = Operator::zeros(self.dims.clone())?.into_matrix();
        let mut groups: BTreeMap<(&Relation, &Relation), Vec<(usize, C64)>> = BTreeMap::new();
        for (lab, &amp) in &self.amps {
            groups
                .entry((&lab.left, &lab.right))
                .or_default()
                .push((flatten_u16(&lab.registers, &self.dims), amp));
        }
        for entries in groups.values() {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    mat[(i, j)] += a * b.conj();
                }
            }
        }
        debug_assert_eq!(mat.nrows(), total);
        Operator::new(self.dims.clone(), mat)
    }
}

fn flatten(vals: &[usize], dims: &[usize]) -> usize {
    vals.iter().zip(dims).fold(0, |acc, (&v, &d)| acc * d + v)
}

fn flatten_u16(vals: &[u16], dims: &[usize]) -> usize {
    vals.iter().zip(dims).fold(0, |acc, (&v, &d)| acc * d + v as usize)
}

fn unflatten(mut i: usize, dims: &[usize]) -> Vec<u16> {
    let mut out = vec![0u16; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = (i % d) as u16;
        i /= d;
    }
    out
}

pub fn vl_apply(s: &PurifiedState, reg: usize) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    Ok(s.left_isometry(reg, None))
}

pub fn vr_apply(s: &PurifiedState, reg: usize) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    Ok(s.right_isometry(reg, false))
}

pub fn vl_dagger_apply(s: &PurifiedState, reg: usize) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    Ok(s.left_adjoint(reg))
}

pub fn vr_dagger_apply(s: &PurifiedState, reg: usize) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    Ok(s.right_adjoint(reg))
}

/// `V^L` whose fresh output value also avoids `blocked`.
pub fn vl_tilde_apply(s: &PurifiedState, reg: usize, blocked: &Blocked) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    if let Blocked::Registers(regs) = blocked {
        if let Some(&r) = regs.iter().find(|&&r| r >= s.dims.len()) {
            return Err(Error::Index(format!("blocked register {r}")));
        }
    }
    Ok(s.left_isometry(reg, Some(blocked)))
}

/// `V^R` with the constant factor `1/√N`; output is subnormalized.
pub fn vr_tilde_apply(s: &PurifiedState, reg: usize) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    Ok(s.right_isometry(reg, true))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// The path-recording oracle `V` (forward) or `V†` (inverse) on `reg`.
pub fn v_apply(s: &PurifiedState, reg: usize, direction: Direction) -> Result<PurifiedState> {
    s.check_query_register(reg)?;
    match direction {
        Direction::Forward => {
            // V = V^L (id − V^R V^{R†}) + (id − V^L V^{L†}) V^{R†}
            let rd = s.right_adjoint(reg);
            let first = s.sub(&rd.right_isometry(reg, false))?.left_isometry(reg, None);
            let second = rd.sub(&rd.left_adjoint(reg).left_isometry(reg, None))?;
            first.add(&second)
        }
        Direction::Inverse => {
            // V† = V^R (id − V^L V^{L†}) + (id − V^R V^{R†}) V^{L†}
            let ld = s.left_adjoint(reg);
            let first = s.sub(&ld.left_isometry(reg, None))?.right_isometry(reg, false);
            let second = ld.sub(&ld.right_adjoint(reg).right_isometry(reg, false))?;
            first.add(&second)
        }
    }
}

#[derive(Clone, Debug)]
pub enum Step {
    Forward(usize),
    Inverse(usize),
    Local { op: CMatrix, registers: Vec<usize> },
}

/// Straight-line query program: an input vector over `dims`, then steps.
#[derive(Clone, Debug)]
pub struct QueryScript {
    pub dims: Vec<usize>,
    pub input: CVector,
    pub steps: Vec<Step>,
}

impl QueryScript {
    pub fn query_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Forward(_) | Step::Inverse(_)))
            .count()
    }
}

/// Runs the script against the path-recording oracle and returns the final
/// purified state.
pub fn run_script(script: &QueryScript, n: usize) -> Result<PurifiedState> {
    let mut s = PurifiedState::from_vector(n, script.dims.clone(), &script.input)?;
    for step in &script.steps {
        s = match step {
            Step::Forward(r) => v_apply(&s, *r, Direction::Forward)?,
            Step::Inverse(r) => v_apply(&s, *r, Direction::Inverse)?,
            Step::Local { op, registers } => s.apply_local(op, registers)?,
        };
    }
    Ok(s)
}

/// Reduced state of the script's registers after `t` oracle queries.
pub fn simulate_queries(script: &QueryScript, n: usize, t: usize) -> Result<Operator> {
    if n > MAX_ORACLE_DIM {
        return Err(Error::SizeLimit {
            what: "path-recording oracle dimension".into(),
            requested: n as u128,
            limit: MAX_ORACLE_DIM as u128,
        });
    }
    if t > MAX_QUERIES {
        return Err(Error::SizeLimit {
            what: "path-recording query count".into(),
            requested: t as u128,
            limit: MAX_QUERIES as u128,
        });
    }
    if script.query_count() != t {
        return domain_err(format!("script makes {} queries, expected {t}", script.query_count()));
    }
    run_script(script, n)?.reduced_state()
}

/// `|P⟩` purifying the approximate mixed twirl. `psi` lives on registers
/// `A_1..A_k, B_1..B_k` of dimension `n` followed by one ancilla of
/// dimension `ancilla_dim`.
pub fn approx_mixed_purification(psi: &CVector, k: usize, n: usize, ancilla_dim: usize) -> Result<PurifiedState> {
    if k == 0 || k > 3 {
        return domain_err(format!("purification order {k} outside 1..=3"));
    }
    let mut dims = vec![n; 2 * k];
    dims.push(ancilla_dim);
    let base = PurifiedState::from_vector(n, dims.clone(), psi)?;
    let fresh = crate::permops::checked_pow(n, k)?;
    let k_fact: f64 = (1..=k).map(|i| i as f64).product();
    let scale = 1.0 / ((n as f64).powi(k as i32) * k_fact);
    let mut amps: BTreeMap<BasisLabel, C64> = BTreeMap::new();
    for (lab, &amp) in base.amplitudes() {
        let xs = &lab.registers[..k];
        let ys = &lab.registers[k..2 * k];
        let anc = lab.registers[2 * k];
        for zi in 0..fresh {
            let zs = unflatten(zi, &vec![n; k]);
            let left = Relation {
                pairs: sorted(xs.iter().zip(&zs).map(|(&x, &z)| (x, z))),
            };
            for wi in 0..fresh {
                let ws = unflatten(wi, &vec![n; k]);
                let right = Relation {
                    pairs: sorted(ws.iter().zip(ys).map(|(&w, &y)| (w, y))),
                };
                let w = scale * left.norm_factor() * right.norm_factor();
                let mut registers = zs.clone();
                registers.extend_from_slice(&ws);
                registers.push(anc);
                *amps.entry(BasisLabel { registers, left: left.clone(), right }).or_insert(c(0.0, 0.0)) +=
                    amp * w;
            }
        }
    }
    Ok(base.with_amps(amps))
}

fn sorted(it: impl Iterator<Item = (u16, u16)>) -> Vec<(u16, u16)> {
    let mut v: Vec<_> = it.collect();
    v.sort_unstable();
    v
}

/// Sum of `terms` random basis states with random complex weights,
/// normalized. Used as hybrid probe inputs.
pub fn probe_input(dims: &[usize], terms: usize, seed: u64) -> CVector {
    let total: usize = dims.iter().product();
    let mut rng = task_rng(seed, "pathrec/probe", 0);
    let mut v = CVector::zeros(total);
    for _ in 0..terms.max(1) {
        let i = rng.random_range(0..total);
        v[i] += c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    let nrm = v.norm();
    if nrm == 0.0 {
        v[0] = c(1.0, 0.0);
        return v;
    }
    v / c(nrm, 0.0)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct HybridProbe {
    pub n: usize,
    pub t: usize,
    /// `‖|A^{V^L,V†}⟩ − |A^{Ṽ^L,V†}⟩‖`
    pub left_gap: f64,
    /// `‖|A^{V^L,V^R}⟩ − |A^{V^L,Ṽ^R}⟩‖`
    pub right_gap: f64,
    /// `4t²/(N−t)`
    pub bound: f64,
    /// `t·√(2t/(N−2t))`, the square root of the per-query squared-norm
    /// estimate summed over `t` queries
    pub sqrt_bound: f64,
}

/// Cap on `N^{2t}` for [`hybrid_probe`]; the sparse state grows like it.
pub const MAX_PROBE_BRANCHES: usize = 1 << 18;

/// Exact hybrid distances for `t` forward queries on registers `A_1..A_t`
/// followed by `t` inverse queries on `B_1..B_t`, with a seeded input.
pub fn hybrid_probe(n: usize, t: usize, seed: u64) -> Result<HybridProbe> {
    if t == 0 || n <= t || t > 3 {
        return domain_err(format!("hybrid probe needs 1 <= t <= 3 and N > 2t, got N={n}, t={t}"));
    }
    if n <= 2 * t {
        return domain_err(format!("hybrid probe needs N > 2t, got N={n}, t={t}"));
    }
    let branches = crate::permops::checked_pow(n, 2 * t)?;
    if branches > MAX_PROBE_BRANCHES {
        return Err(Error::SizeLimit {
            what: "hybrid probe branches N^(2t)".into(),
            requested: branches as u128,
            limit: MAX_PROBE_BRANCHES as u128,
        });
    }
    let dims = vec![n; 2 * t];
    let psi = probe_input(&dims, 3, seed);
    let start = PurifiedState::from_vector(n, dims, &psi)?;
    let b_regs: Vec<usize> = (t..2 * t).collect();

    let mut plain = start.clone();
    let mut blocked = start.clone();
    for a in 0..t {
        plain = vl_apply(&plain, a)?;
        blocked = vl_tilde_apply(&blocked, a, &Blocked::Registers(b_regs.clone()))?;
    }
    let after_a = plain.clone();
    // B queries run in the order B_1, ..., B_t
    for &b in &b_regs {
        plain = v_apply(&plain, b, Direction::Inverse)?;
        blocked = v_apply(&blocked, b, Direction::Inverse)?;
    }
    let left_gap = plain.distance(&blocked)?;

    let mut exact = after_a.clone();
    let mut constant = after_a;
    for &b in &b_regs {
        exact = vr_apply(&exact, b)?;
        constant = vr_tilde_apply(&constant, b)?;
    }
    let right_gap = exact.distance(&constant)?;
    let bound = 4.0 * (t * t) as f64 / (n - t) as f64;
    let sqrt_bound = t as f64 * (2.0 * t as f64 / (n - 2 * t) as f64).sqrt();
    Ok(HybridProbe { n, t, left_gap, right_gap, bound, sqrt_bound })
}

/// Trace distance between the reduced state after one forward query on
/// `|0⟩` and `I/N`.
pub fn single_query_gap(n: usize) -> Result<f64> {
    let script = QueryScript { dims: vec![n], input: crate::qlinalg::basis_vector(n, 0), steps: vec![Step::Forward(0)] };
    let rho = simulate_queries(&script, n, 1)?;
    let mixed = Operator::identity(vec![n])?.scale(1.0 / n as f64);
    crate::qlinalg::trace_distance(&rho, &mixed)
}

/// Trace distance to the exact 2-fold twirl after forward queries on both
/// registers of a seeded input over `[N, N]`.
pub fn two_query_gap(n: usize, seed: u64) -> Result<f64> {
    let input = probe_input(&[n, n], 4, seed);
    let script = QueryScript { dims: vec![n, n], input: input.clone(), steps: vec![Step::Forward(0), Step::Forward(1)] };
    let rho = simulate_queries(&script, n, 2)?;
    let exact = crate::weingarten::exact_twirl(&Operator::from_ket(vec![n, n], &input)?, 2, n)?;
    crate::qlinalg::trace_distance(&rho, &exact)
}

/// Largest entry deviation between the traced `k = 1` purification and the
/// approximate mixed twirl, on a seeded input over `[N, N, 2]`.
pub fn purification_gap(n: usize, seed: u64) -> Result<f64> {
    let dims = vec![n, n, 2];
    let psi = probe_input(&dims, 5, seed);
    let reduced = approx_mixed_purification(&psi, 1, n, 2)?.reduced_state()?;
    let approx = crate::weingarten::approx_mixed_twirl(&Operator::from_ket(dims, &psi)?, 1, n)?;
    reduced.max_abs_diff(&approx)
}
