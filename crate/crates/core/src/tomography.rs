//! Black-box unitary reconstruction, a toy key agreement built on a short
//! oracle, the eavesdropper that breaks it, and small finite-distribution
//! inequalities used along the way.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{dim_err, domain_err, Error, Result};
use crate::qlinalg::{
    basis_vector, c, diamond_distance_bounds, haar_unitary, random_unitary_near, unitary_diamond_distance, Channel,
    CMatrix, CVector, Operator, C64,
};
use crate::seeds::{par_chunks, task_rng};

pub const MAX_TOMOGRAPHY_DIM: usize = 16;
pub const MIN_SHOTS_PER_SETTING: u64 = 100;

/// Hidden unitary reachable only through measured queries.
pub struct BlackBox {
    hidden: CMatrix,
    queries: u64,
}

impl BlackBox {
    pub fn new(hidden: CMatrix) -> Result<Self> {
        if hidden.nrows() != hidden.ncols() || hidden.nrows() == 0 {
            return dim_err("black box needs a square unitary");
        }
        Ok(Self { hidden, queries: 0 })
    }

    pub fn dimension(&self) -> usize {
        self.hidden.nrows()
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    fn outcome_probabilities(&self, input: &CVector, basis: &CMatrix) -> Result<Vec<f64>> {
        let d = self.dimension();
        if input.len() != d || basis.nrows() != d || basis.ncols() != d {
            return dim_err(format!("black box of dimension {d} got mismatched input or basis"));
        }
        let amps = basis.adjoint() * (&self.hidden * input);
        let mut probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(probs)
    }

    /// Applies the hidden unitary to `shots` copies of `input` and measures
    /// each in the orthonormal basis given by the columns of `basis`.
    pub fn measure_counts<R: Rng + ?Sized>(
        &mut self,
        input: &CVector,
        basis: &CMatrix,
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<u64>> {
        let probs = self.outcome_probabilities(input, basis)?;
        self.queries += shots;
        Ok(multinomial(shots, &probs, rng))
    }

    /// Infinite-statistics limit: exact outcome probabilities. Counted as a
    /// single query.
    pub fn measure_exact(&mut self, input: &CVector, basis: &CMatrix) -> Result<Vec<f64>> {
        self.queries += 1;
        self.outcome_probabilities(input, basis)
    }
}

/// Conditional-binomial multinomial draw.
pub fn multinomial<R: Rng + ?Sized>(shots: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0u64; probs.len()];
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q).expect("probability in [0,1]").sample(rng);
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Statistics {
    Shots(u64),
    Exact,
}

fn frequencies<R: Rng + ?Sized>(
    oracle: &mut BlackBox,
    input: &CVector,
    basis: &CMatrix,
    stats: Statistics,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match stats {
        Statistics::Exact => oracle.measure_exact(input, basis),
        Statistics::Shots(s) => {
            let counts = oracle.measure_counts(input, basis, s, rng)?;
            Ok(counts.iter().map(|&k| k as f64 / s as f64).collect())
        }
    }
}

/// Basis that replaces `e_r, e_x` by `(e_r ± phase·e_x)/√2`.
fn pair_basis(d: usize, r: usize, x: usize, phase: C64) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut b = CMatrix::identity(d, d);
    b[(r, r)] = c(s, 0.0);
    b[(x, r)] = phase * s;
    b[(r, x)] = c(s, 0.0);
    b[(x, x)] = -phase * s;
    b
}

/// Pure output state `U|input⟩` up to global phase: populations from the
/// computational basis, then real and imaginary interference of every
/// component with the largest one.
fn pure_state_tomography<R: Rng + ?Sized>(
    oracle: &mut BlackBox,
    input: &CVector,
    stats: Statistics,
    rng: &mut R,
) -> Result<CVector> {
    let d = oracle.dimension();
    let pops = frequencies(oracle, input, &CMatrix::identity(d, d), stats, rng)?;
    let r = pops
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > pops[best] { i } else { best });
    let anchor = pops[r].sqrt();
    let mut psi = CVector::zeros(d);
    psi[r] = c(anchor, 0.0);
    for x in (0..d).filter(|&x| x != r) {
        let fx = frequencies(oracle, input, &pair_basis(d, r, x, c(1.0, 0.0)), stats, rng)?;
        let fy = frequencies(oracle, input, &pair_basis(d, r, x, c(0.0, 1.0)), stats, rng)?;
        let re = fx[r] - fx[x];
        let im = fy[r] - fy[x];
        psi[x] = c(re, im) / (2.0 * anchor);
    }
    let norm = psi.norm();
    Ok(psi / c(norm, 0.0))
}

/// Nearest unitary in Frobenius norm: `W V†` from the SVD `W Σ V†`.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(w), Some(vt)) => Ok(w * vt),
        _ => Err(Error::Domain("SVD failed".into())),
    }
}

#[derive(Clone, Debug)]
pub struct TomographyResult {
    pub estimate: CMatrix,
    pub queries: u64,
}

/// Column-by-column reconstruction of the hidden unitary. Relative column
/// phases are fixed with the inputs `(|0⟩+|j⟩)/√2` and `(|0⟩+i|j⟩)/√2`; the
/// result is projected to the nearest unitary.
pub fn process_tomography<R: Rng + ?Sized>(
    oracle: &mut BlackBox,
    d: usize,
    stats: Statistics,
    rng: &mut R,
) -> Result<TomographyResult> {
    if d != oracle.dimension() {
        return dim_err(format!("oracle has dimension {}, not {d}", oracle.dimension()));
    }
    if d > MAX_TOMOGRAPHY_DIM {
        return Err(Error::SizeLimit {
            what: "tomography dimension".into(),
            requested: d as u128,
            limit: MAX_TOMOGRAPHY_DIM as u128,
        });
    }
    if let Statistics::Shots(s) = stats {
        if s < MIN_SHOTS_PER_SETTING {
            return domain_err(format!("need at least {MIN_SHOTS_PER_SETTING} shots per setting"));
        }
    }
    let start = oracle.queries();
    let mut columns: Vec<CVector> = Vec::with_capacity(d);
    for j in 0..d {
        columns.push(pure_state_tomography(oracle, &basis_vector(d, j), stats, rng)?);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 1..d {
        let mut phase = c(0.0, 0.0);
        for rel in [c(1.0, 0.0), c(0.0, 1.0)] {
            let mut input = basis_vector(d, 0) * c(s, 0.0);
            input[j] += rel * s;
            let out = pure_state_tomography(oracle, &input, stats, rng)?;
            let on_first = columns[0].dotc(&out);
            let on_j = columns[j].dotc(&out);
            if on_first.norm() > 1e-12 {
                phase += on_j / on_first / rel;
            }
        }
        if phase.norm() > 1e-12 {
            let unit = phase / phase.norm();
            columns[j] *= unit;
        }
    }
    let raw = CMatrix::from_columns(&columns);
    Ok(TomographyResult { estimate: polar_unitary(&raw)?, queries: oracle.queries() - start })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReconstructionError {
    /// `(1/d)‖J_est − J_true‖₁`
    pub choi_lower: f64,
    pub choi_upper: f64,
    /// exact diamond distance between the two unitary channels
    pub diamond: f64,
}

pub fn reconstruction_error(estimate: &CMatrix, truth: &CMatrix) -> Result<ReconstructionError> {
    let d = truth.nrows();
    let ce = Channel::unitary(&Operator::new(vec![d], estimate.clone())?)?;
    let ct = Channel::unitary(&Operator::new(vec![d], truth.clone())?)?;
    let (choi_lower, choi_upper) = diamond_distance_bounds(&ce, &ct)?;
    Ok(ReconstructionError { choi_lower, choi_upper, diamond: unitary_diamond_distance(estimate, truth)? })
}

// ---------------------------------------------------------------------------
// Toy key agreement

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Estimation {
    Queries(u64),
    Exact,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToyProtocolTranscript {
    /// Public messages. Only the label of the agreed input state.
    pub messages: Vec<String>,
    pub queries_a: u64,
    pub queries_b: u64,
    pub key_a: u8,
    pub key_b: u8,
}

fn argmax_first(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

/// Honest key derivation: parity of the most likely outcome of `U|0⟩`.
fn honest_key<R: Rng + ?Sized>(oracle: &mut BlackBox, est: Estimation, rng: &mut R) -> Result<u8> {
    let d = oracle.dimension();
    let id = CMatrix::identity(d, d);
    let freqs = match est {
        Estimation::Exact => oracle.measure_exact(&basis_vector(d, 0), &id)?,
        Estimation::Queries(q) => {
            let counts = oracle.measure_counts(&basis_vector(d, 0), &id, q, rng)?;
            counts.iter().map(|&k| k as f64).collect()
        }
    };
    Ok((argmax_first(&freqs) % 2) as u8)
}

/// Both parties estimate `argmax_x |⟨x|U|0⟩|²` on their own copy of the
/// oracle and keep its parity. They share no quantum state.
pub fn toy_key_agreement<R: Rng + ?Sized>(u: &CMatrix, est: Estimation, rng: &mut R) -> Result<ToyProtocolTranscript> {
    let n = u.nrows();
    if n != 4 && n != 8 {
        return domain_err("toy key agreement is defined for N in {4, 8}");
    }
    if est == Estimation::Queries(0) {
        return domain_err("estimation needs at least one query");
    }
    let mut oa = BlackBox::new(u.clone())?;
    let mut ob = BlackBox::new(u.clone())?;
    let key_a = honest_key(&mut oa, est, rng)?;
    let key_b = honest_key(&mut ob, est, rng)?;
    Ok(ToyProtocolTranscript {
        messages: vec!["input:0".into()],
        queries_a: oa.queries(),
        queries_b: ob.queries(),
        key_a,
        key_b,
    })
}

/// Tomographs the oracle and re-runs the honest key derivation on the
/// reconstruction. With no tomography budget it guesses a fair coin.
pub fn eavesdropper_attack<R: Rng + ?Sized>(
    transcript: &ToyProtocolTranscript,
    oracle: &mut BlackBox,
    stats: Option<Statistics>,
    rng: &mut R,
) -> Result<u8> {
    if transcript.messages.first().map(String::as_str) != Some("input:0") {
        return Err(Error::Protocol("unexpected transcript".into()));
    }
    let Some(stats) = stats else {
        return Ok(rng.random_range(0..2u8));
    };
    let d = oracle.dimension();
    let est = process_tomography(oracle, d, stats, rng)?.estimate;
    let probs: Vec<f64> = est.column(0).iter().map(|a| a.norm_sqr()).collect();
    Ok((argmax_first(&probs) % 2) as u8)
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub n: usize,
    pub runs: usize,
    pub estimation_queries: u64,
    pub tomography_shots: u64,
    pub agreement_rate: f64,
    pub guess_rate: f64,
    pub guess_stderr: f64,
    pub mean_tomography_queries: f64,
    pub pass: bool,
}

/// Runs the protocol and the attack on fresh Haar oracles. Passes when the
/// eavesdropper matches `k_B` at least as often as the parties agree, less
/// 0.05.
pub fn tomography_attack_experiment(
    n: usize,
    estimation_queries: u64,
    tomography_shots: u64,
    runs: usize,
    seed: u64,
) -> Result<AttackReport> {
    if runs == 0 {
        return domain_err("runs must be positive");
    }
    let stats = (tomography_shots > 0).then_some(Statistics::Shots(tomography_shots));
    let chunks = par_chunks(runs, 16, |range| -> Result<(u64, u64, u64)> {
        let (mut agree, mut hit, mut tq) = (0u64, 0u64, 0u64);
        for i in range {
            let mut rng = task_rng(seed, "tomography/run", i as u64);
            let u = haar_unitary(n, &mut rng);
            let tr = toy_key_agreement(&u, Estimation::Queries(estimation_queries), &mut rng)?;
            let mut erng = task_rng(seed, "tomography/eve", i as u64);
            let mut oracle = BlackBox::new(u)?;
            let guess = eavesdropper_attack(&tr, &mut oracle, stats, &mut erng)?;
            agree += (tr.key_a == tr.key_b) as u64;
            hit += (guess == tr.key_b) as u64;
            tq += oracle.queries();
        }
        Ok((agree, hit, tq))
    });
    let (mut agree, mut hit, mut tq) = (0u64, 0u64, 0u64);
    for ch in chunks {
        let (a, h, q) = ch?;
        agree += a;
        hit += h;
        tq += q;
    }
    let r = runs as f64;
    let agreement_rate = agree as f64 / r;
    let guess_rate = hit as f64 / r;
    Ok(AttackReport {
        n,
        runs,
        estimation_queries,
        tomography_shots,
        agreement_rate,
        guess_rate,
        guess_stderr: (guess_rate * (1.0 - guess_rate) / r).sqrt(),
        mean_tomography_queries: tq as f64 / r,
        pass: guess_rate >= agreement_rate - 0.05,
    })
}

// ---------------------------------------------------------------------------
// Finite-distribution inequalities

/// Joint distribution over `(bit, transcript)`: `mass[τ][b]`.
#[derive(Clone, Debug)]
pub struct BitTranscriptDist {
    pub mass: Vec<[f64; 2]>,
}

impl BitTranscriptDist {
    pub fn new(mass: Vec<[f64; 2]>) -> Result<Self> {
        if mass.iter().flatten().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
            return domain_err("masses must be finite and non-negative");
        }
        let total: f64 = mass.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain_err(format!("distribution sums to {total}, not 1"));
        }
        Ok(Self { mass })
    }

    pub fn statistical_distance(&self, other: &Self) -> Result<f64> {
        if self.mass.len() != other.mass.len() {
            return dim_err("distributions live on different transcript sets");
        }
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs())
                .sum::<f64>())
    }

    /// Probability that the guess is 0 when guessing the more likely bit
    /// given `τ`. A tie or an empty transcript gives a fair coin.
    fn guess_zero(&self, tau: usize) -> f64 {
        let [p0, p1] = self.mass[tau];
        if p0 > p1 {
            1.0
        } else if p1 > p0 {
            0.0
        } else {
            0.5
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SdGuessReport {
    pub exp0: f64,
    pub exp1: f64,
    pub sd: f64,
    /// `exp1 − (exp0 − 3·SD)`
    pub slack: f64,
}

/// Exp.0 guesses with `P`'s own posterior, Exp.1 with `Q`'s; both are
/// scored on samples from `P`.
pub fn sd_guess_experiments(p: &BitTranscriptDist, q: &BitTranscriptDist) -> Result<SdGuessReport> {
    let sd = p.statistical_distance(q)?;
    let score = |guesser: &BitTranscriptDist| -> f64 {
        p.mass
            .iter()
            .enumerate()
            .map(|(tau, m)| {
                let g0 = guesser.guess_zero(tau);
                g0 * m[0] + (1.0 - g0) * m[1]
            })
            .sum()
    };
    let exp0 = score(p);
    let exp1 = score(q);
    Ok(SdGuessReport { exp0, exp1, sd, slack: exp1 - (exp0 - 3.0 * sd) })
}

fn random_distribution<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            // occasional exact zeros exercise the empty-support branches
            if rng.random::<f64>() < 0.15 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

fn random_joint<R: Rng + ?Sized>(transcripts: usize, rng: &mut R) -> BitTranscriptDist {
    let flat = random_distribution(2 * transcripts, rng);
    BitTranscriptDist { mass: flat.chunks(2).map(|ch| [ch[0], ch[1]]).collect() }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InequalityReport {
    pub instances: usize,
    pub min_slack: f64,
    pub pass: bool,
}

/// SD-guessing inequality on random pairs of joint distributions, half of
/// them close perturbations.
pub fn check_sd_lemma(instances: usize, seed: u64) -> Result<InequalityReport> {
    let mut min_slack = f64::INFINITY;
    for i in 0..instances {
        let mut rng = task_rng(seed, "tomography/sd-lemma", i as u64);
        let taus = rng.random_range(1..8usize);
        let p = random_joint(taus, &mut rng);
        let q = if i % 2 == 0 {
            random_joint(taus, &mut rng)
        } else {
            let noise = random_joint(taus, &mut rng);
            let w = rng.random::<f64>() * 0.2;
            BitTranscriptDist {
                mass: p
                    .mass
                    .iter()
                    .zip(&noise.mass)
                    .map(|(a, b)| [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1]])
                    .collect(),
            }
        };
        min_slack = min_slack.min(sd_guess_experiments(&p, &q)?.slack);
    }
    Ok(InequalityReport { instances, min_slack, pass: min_slack >= -1e-12 })
}

/// `Σ_b E_{D_b}[f_b] + 2·SD(D_0, D_1) − Σ_b E_{D_{1−b}}[f_b]` minimized over
/// random instances with `f_b` valued in `[0, 1]`.
pub fn check_expectation_lemma(instances: usize, seed: u64) -> Result<InequalityReport> {
    let mut min_slack = f64::INFINITY;
    for i in 0..instances {
        let mut rng = task_rng(seed, "tomography/expectation", i as u64);
        let size = rng.random_range(1..12usize);
        let d = [random_distribution(size, &mut rng), random_distribution(size, &mut rng)];
        let f: [Vec<f64>; 2] = [
            (0..size).map(|_| rng.random::<f64>()).collect(),
            (0..size).map(|_| rng.random::<f64>()).collect(),
        ];
        let expect = |dist: &[f64], g: &[f64]| dist.iter().zip(g).map(|(p, v)| p * v).sum::<f64>();
        let sd = 0.5 * d[0].iter().zip(&d[1]).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let matched = expect(&d[0], &f[0]) + expect(&d[1], &f[1]);
        let crossed = expect(&d[1], &f[0]) + expect(&d[0], &f[1]);
        min_slack = min_slack.min(matched + 2.0 * sd - crossed);
    }
    Ok(InequalityReport { instances, min_slack, pass: min_slack >= -1e-12 })
}

/// `|2p−1|/2 + (q+r)/2 − (pq + (1−p)r − ½)` minimized over a
/// `steps³` grid on `[0,1]³`.
pub fn check_tradeoff_grid(steps: usize) -> Result<InequalityReport> {
    if steps < 2 {
        return domain_err("grid needs at least 2 points per axis");
    }
    let h = 1.0 / (steps - 1) as f64;
    let min_slack = (0..steps)
        .map(|i| {
            let p = i as f64 * h;
            let mut worst = f64::INFINITY;
            for j in 0..steps {
                let q = j as f64 * h;
                for k in 0..steps {
                    let r = k as f64 * h;
                    let lhs = (2.0 * p - 1.0).abs() / 2.0 + (q + r) / 2.0;
                    let rhs = p * q + (1.0 - p) * r - 0.5;
                    worst = worst.min(lhs - rhs);
                }
            }
            worst
        })
        .fold(f64::INFINITY, f64::min);
    Ok(InequalityReport { instances: steps * steps * steps, min_slack, pass: min_slack >= -1e-12 })
}

// ---------------------------------------------------------------------------
// Lipschitz continuity and concentration

/// Fixed `t`-query circuit `A_t U ⋯ A_1 U |0⟩` accepted by a projector.
#[derive(Clone, Debug)]
pub struct QueryCircuit {
    pub n: usize,
    pub interleaved: Vec<CMatrix>,
    pub accept: Vec<usize>,
}

impl QueryCircuit {
    /// Single query, accepting on the first half of the basis.
    pub fn half_space(n: usize) -> Self {
        Self { n, interleaved: vec![CMatrix::identity(n, n)], accept: (0..n / 2).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Self {
        let interleaved = (0..t).map(|_| haar_unitary(n, rng)).collect();
        let accept = (0..n).filter(|_| rng.random::<bool>()).collect();
        Self { n, interleaved, accept }
    }

    pub fn queries(&self) -> usize {
        self.interleaved.len()
    }

    pub fn acceptance(&self, u: &CMatrix) -> f64 {
        let mut psi = basis_vector(self.n, 0);
        for a in &self.interleaved {
            psi = a * (u * psi);
        }
        self.accept.iter().map(|&x| psi[x].norm_sqr()).sum()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzReport {
    pub trials: usize,
    /// `min (4t‖U−V‖_F − |f(U) − f(V)|)`
    pub min_slack: f64,
    pub pass: bool,
}

/// Random circuits and pairs, alternating independent Haar pairs with
/// nearby ones, at `N` cycling over `ns`.
pub fn lipschitz_probe(ns: &[usize], max_queries: usize, trials: usize, seed: u64) -> Result<LipschitzReport> {
    if ns.is_empty() || max_queries == 0 {
        return domain_err("need dimensions and at least one query");
    }
    let mut min_slack = f64::INFINITY;
    for i in 0..trials {
        let mut rng = task_rng(seed, "tomography/lipschitz", i as u64);
        let n = ns[i % ns.len()];
        let t = 1 + i % max_queries;
        let circuit = QueryCircuit::random(n, t, &mut rng);
        let u = haar_unitary(n, &mut rng);
        let v = if i % 2 == 0 {
            haar_unitary(n, &mut rng)
        } else {
            random_unitary_near(&u, 0.05, &mut rng)
        };
        let gap = (circuit.acceptance(&u) - circuit.acceptance(&v)).abs();
        let frob = (&u - &v).norm();
        min_slack = min_slack.min(4.0 * t as f64 * frob - gap);
    }
    Ok(LipschitzReport { trials, min_slack, pass: min_slack >= -1e-9 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConcentrationReport {
    pub n_small: usize,
    pub n_large: usize,
    pub samples: usize,
    pub std_small: f64,
    pub std_large: f64,
    pub ratio: f64,
    pub pass: bool,
}

fn sample_std(n: usize, samples: usize, seed: u64) -> f64 {
    let circuit = QueryCircuit::half_space(n);
    let vals: Vec<f64> = par_chunks(samples, 64, |range| {
        range
            .map(|i| {
                let mut rng = task_rng(seed, &format!("tomography/concentration/{n}"), i as u64);
                circuit.acceptance(&haar_unitary(n, &mut rng))
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
}

/// Spread of the half-space acceptance probability of `U|0⟩`; passes when
/// the std at `n_large` is at most 0.6 times the one at `n_small`.
pub fn concentration_check(n_small: usize, n_large: usize, samples: usize, seed: u64) -> Result<ConcentrationReport> {
    if samples < 2 || n_small < 2 || n_large < 2 {
        return domain_err("need at least two samples and N >= 2");
    }
    let std_small = sample_std(n_small, samples, seed);
    let std_large = sample_std(n_large, samples, seed);
    let ratio = std_large / std_small;
    Ok(ConcentrationReport { n_small, n_large, samples, std_small, std_large, ratio, pass: ratio <= 0.6 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    #[test]
    fn identity_and_hadamard_reconstruct() {
        let mut rng = task_rng(1, "t", 0);
        let mut bb = BlackBox::new(CMatrix::identity(2, 2)).unwrap();
        let r = process_tomography(&mut bb, 2, Statistics::Shots(10_000), &mut rng).unwrap();
        let e = reconstruction_error(&r.estimate, &CMatrix::identity(2, 2)).unwrap();
        assert!(e.choi_lower <= 0.05, "{e:?}");
        assert_eq!(r.queries, bb.queries());
        let mut bb = BlackBox::new(hadamard()).unwrap();
        let r = process_tomography(&mut bb, 2, Statistics::Shots(100_000), &mut rng).unwrap();
        let e = reconstruction_error(&r.estimate, &hadamard()).unwrap();
        assert!(e.choi_lower <= 0.05, "{e:?}");
    }

    #[test]
    fn exact_statistics_recover_up_to_phase() {
        let mut rng = task_rng(2, "t", 0);
        for d in [2, 3, 5, 8] {
            let u = haar_unitary(d, &mut rng);
            let mut bb = BlackBox::new(u.clone()).unwrap();
            let r = process_tomography(&mut bb, d, Statistics::Exact, &mut rng).unwrap();
            let e = reconstruction_error(&r.estimate, &u).unwrap();
            assert!(e.choi_lower <= 1e-9, "d={d} {e:?}");
        }
    }

    #[test]
    fn tomography_preconditions() {
        let mut rng = task_rng(3, "t", 0);
        let mut bb = BlackBox::new(CMatrix::identity(2, 2)).unwrap();
        assert!(process_tomography(&mut bb, 2, Statistics::Shots(10), &mut rng).is_err());
        assert!(process_tomography(&mut bb, 3, Statistics::Exact, &mut rng).is_err());
        let mut big = BlackBox::new(CMatrix::identity(17, 17)).unwrap();
        assert!(matches!(
            process_tomography(&mut big, 17, Statistics::Exact, &mut rng),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn multinomial_totals() {
        let mut rng = task_rng(4, "t", 0);
        let counts = multinomial(1000, &[0.2, 0.0, 0.5, 0.3], &mut rng);
        assert_eq!(counts.iter().sum::<u64>(), 1000);
        assert_eq!(counts[1], 0);
    }

    #[test]
    fn exact_keys_agree_and_exact_attack_wins() {
        let mut rng = task_rng(5, "t", 0);
        for _ in 0..20 {
            let u = haar_unitary(4, &mut rng);
            let tr = toy_key_agreement(&u, Estimation::Exact, &mut rng).unwrap();
            assert_eq!(tr.key_a, tr.key_b);
            let mut bb = BlackBox::new(u).unwrap();
            let g = eavesdropper_attack(&tr, &mut bb, Some(Statistics::Exact), &mut rng).unwrap();
            assert_eq!(g, tr.key_b);
        }
        assert!(toy_key_agreement(&haar_unitary(3, &mut rng), Estimation::Exact, &mut rng).is_err());
    }

    #[test]
    fn zero_budget_attacker_is_a_coin() {
        let r = tomography_attack_experiment(4, 50, 0, 2000, 6).unwrap();
        assert!((r.guess_rate - 0.5).abs() <= 3.0 * r.guess_stderr.max(0.5 / (2000f64).sqrt()), "{r:?}");
    }

    #[test]
    fn sd_lemma_examples() {
        let p = BitTranscriptDist::new(vec![[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let same = sd_guess_experiments(&p, &p).unwrap();
        assert_eq!(same.exp0, same.exp1);
        let q = BitTranscriptDist::new(vec![[0.25, 0.25], [0.25, 0.25]]).unwrap();
        let r = sd_guess_experiments(&p, &q).unwrap();
        assert_eq!((r.exp0, r.exp1), (1.0, 0.5));
        assert!(r.sd >= 1.0 / 6.0);
        // Q has no mass on the second transcript: coin there
        let q = BitTranscriptDist::new(vec![[0.6, 0.4], [0.0, 0.0]]).unwrap();
        let r = sd_guess_experiments(&p, &q).unwrap();
        assert!((r.exp1 - 0.75).abs() < 1e-15);
        assert!(BitTranscriptDist::new(vec![[0.5, 0.4]]).is_err());
    }

    #[test]
    fn inequality_suites() {
        assert!(check_sd_lemma(1000, 7).unwrap().pass);
        assert!(check_expectation_lemma(1000, 7).unwrap().pass);
        let g = check_tradeoff_grid(41).unwrap();
        assert!(g.pass, "{g:?}");
    }

    #[test]
    fn lipschitz_and_concentration() {
        let l = lipschitz_probe(&[2, 4], 3, 200, 8).unwrap();
        assert!(l.pass, "{l:?}");
        let c = concentration_check(16, 64, 500, 9).unwrap();
        assert!(c.ratio < 0.75, "{c:?}");
    }
}
