//! Distinguishing games between a shared Haar unitary and two independent
//! ones, played by two parties that only exchange classical bit strings.
//!
//! Parties are state machines. Each holds its own [`LocalState`] and
//! reaches its oracle only through an [`OracleHandle`], which enforces the
//! rules of the game being played.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::lp_closed_form;
use crate::error::{dim_err, domain_err, Error, Result};
use crate::qlinalg::{apply_to_register, c, haar_unitary, omega, CMatrix, CVector, Operator};
use crate::seeds::{par_chunks, task_rng, TaskRng};
use crate::weingarten::{approx_twirl_with_ancilla, exact_twirl_with_ancilla};

pub const DEFAULT_MAX_ROUNDS: usize = 64;
const SHOT_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    /// Adaptive forward queries, any number of classical rounds.
    Hud,
    /// Forward and inverse queries, all made before the first message.
    NaInvHud,
    /// Forward and inverse queries, a single message from A to B.
    NiInvHud,
}

impl GameKind {
    fn allows_inverse(self) -> bool {
        !matches!(self, GameKind::Hud)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameConfig {
    pub game: GameKind,
    pub n: usize,
    /// Forward queries per party; also inverse queries where allowed.
    pub t: usize,
    /// Message bits (single-message game only).
    pub m: usize,
    pub shots: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl GameConfig {
    pub fn new(game: GameKind, n: usize, t: usize, shots: usize, seed: u64) -> Self {
        Self { game, n, t, m: 0, shots, seed, max_rounds: DEFAULT_MAX_ROUNDS }
    }

    pub fn with_message_bits(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if self.game == GameKind::NiInvHud && self.m == 0 {
            return Err(Error::Config("the single-message game needs m >= 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }

    /// `(2t)²/N`
    pub fn epsilon(&self) -> f64 {
        (4 * self.t * self.t) as f64 / self.n as f64
    }

    /// Reference value for the success probability: the LP optimum for the
    /// adaptive game, and the bare scaling terms `t²/N^{1/8}` and
    /// `√(t²(m + log₂N)/N)` for the other two.
    pub fn bound(&self) -> f64 {
        let (n, t) = (self.n as f64, self.t as f64);
        match self.game {
            GameKind::Hud => lp_closed_form(self.epsilon()).unwrap_or(f64::NAN),
            GameKind::NaInvHud => t * t / n.powf(0.125),
            GameKind::NiInvHud => (t * t * (self.m as f64 + n.log2()) / n).sqrt(),
        }
    }
}

/// Classical message: a bit string.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Big-endian fixed-width encoding of each value.
    pub fn from_values(values: &[usize], width: usize) -> Self {
        let mut bits = Vec::with_capacity(values.len() * width);
        for &v in values {
            for b in (0..width).rev() {
                bits.push((v >> b) & 1 == 1);
            }
        }
        Self { bits }
    }

    pub fn values(&self, width: usize) -> Vec<usize> {
        if width == 0 {
            return vec![];
        }
        self.bits
            .chunks(width)
            .map(|ch| ch.iter().fold(0usize, |acc, &b| acc * 2 + b as usize))
            .collect()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Bits needed to write a value in `0..n`.
pub fn value_width(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as usize
}

/// A party's private pure state.
#[derive(Clone, Debug)]
pub struct LocalState {
    dims: Vec<usize>,
    amps: CVector,
}

impl LocalState {
    /// `|0…0⟩` over registers of the given dimensions.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let d = dims.iter().try_fold(1usize, |a, &x| a.checked_mul(x)).ok_or_else(|| {
            Error::Dimension(format!("local state {dims:?} overflows"))
        })?;
        if d == 0 {
            return dim_err("zero-dimensional register");
        }
        let mut amps = CVector::zeros(d);
        amps[0] = c(1.0, 0.0);
        Ok(Self { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn apply(&mut self, reg: usize, u: &CMatrix) -> Result<()> {
        self.amps = apply_to_register(&self.amps, &self.dims, reg, u)?;
        Ok(())
    }

    /// Computational-basis measurement of one register; the state collapses.
    pub fn measure<R: Rng + ?Sized>(&mut self, reg: usize, rng: &mut R) -> Result<usize> {
        let d = *self.dims.get(reg).ok_or_else(|| Error::Index(format!("register {reg}")))?;
        let inner: usize = self.dims[reg + 1..].iter().product();
        let mut probs = vec![0.0; d];
        for (i, a) in self.amps.iter().enumerate() {
            probs[(i / inner) % d] += a.norm_sqr();
        }
        let total: f64 = probs.iter().sum();
        let mut r = rng.random::<f64>() * total;
        let mut outcome = d - 1;
        for (v, &p) in probs.iter().enumerate() {
            if r < p {
                outcome = v;
                break;
            }
            r -= p;
        }
        let scale = 1.0 / probs[outcome].sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i / inner) % d == outcome {
                *a *= scale;
            } else {
                *a = c(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    /// Sets register `reg` back to `|0⟩` after a measurement left it in a
    /// basis state.
    pub fn reset(&mut self, reg: usize, current: usize) -> Result<()> {
        let d = self.dims[reg];
        if current == 0 {
            return Ok(());
        }
        let mut x = CMatrix::identity(d, d);
        x[(0, 0)] = c(0.0, 0.0);
        x[(current, current)] = c(0.0, 0.0);
        x[(0, current)] = c(1.0, 0.0);
        x[(current, 0)] = c(1.0, 0.0);
        self.apply(reg, &x)
    }
}

/// A party's only route to its oracle.
pub struct OracleHandle<'a> {
    unitary: &'a CMatrix,
    adjoint: &'a CMatrix,
    n: usize,
    budget: usize,
    inverse_allowed: bool,
    forward_used: usize,
    inverse_used: usize,
    closed: bool,
}

impl<'a> OracleHandle<'a> {
    fn new(unitary: &'a CMatrix, adjoint: &'a CMatrix, cfg: &GameConfig) -> Self {
        Self {
            unitary,
            adjoint,
            n: cfg.n,
            budget: cfg.t,
            inverse_allowed: cfg.game.allows_inverse(),
            forward_used: 0,
            inverse_used: 0,
            closed: false,
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn forward_remaining(&self) -> usize {
        self.budget - self.forward_used
    }

    pub fn inverse_remaining(&self) -> usize {
        if self.inverse_allowed {
            self.budget - self.inverse_used
        } else {
            0
        }
    }

    fn check_open(&self) -> Result<()> {
        if self.closed {
            return Err(Error::Protocol("oracle query after the query phase ended".into()));
        }
        Ok(())
    }

    pub fn forward(&mut self, state: &mut LocalState, reg: usize) -> Result<()> {
        self.check_open()?;
        if self.forward_used >= self.budget {
            return Err(Error::Protocol(format!("more than {} forward queries", self.budget)));
        }
        self.forward_used += 1;
        state.apply(reg, self.unitary)
    }

    pub fn inverse(&mut self, state: &mut LocalState, reg: usize) -> Result<()> {
        self.check_open()?;
        if !self.inverse_allowed {
            return Err(Error::Protocol("inverse queries are not part of this game".into()));
        }
        if self.inverse_used >= self.budget {
            return Err(Error::Protocol(format!("more than {} inverse queries", self.budget)));
        }
        self.inverse_used += 1;
        state.apply(reg, self.adjoint)
    }
}

pub enum Turn {
    Send(Message),
    Output(u8),
}

/// One side of an LOCC strategy. `prepare` runs before any communication;
/// turns then alternate starting with party A, until one party outputs.
pub trait Party {
    fn prepare(&mut self, _oracle: &mut OracleHandle<'_>, _rng: &mut TaskRng) -> Result<()> {
        Ok(())
    }

    fn turn(
        &mut self,
        oracle: &mut OracleHandle<'_>,
        incoming: Option<&Message>,
        rng: &mut TaskRng,
    ) -> Result<Turn>;
}

pub trait Strategy: Sync {
    fn name(&self) -> String;

    /// Fresh, independent parties for one shot.
    fn parties(&self, cfg: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)>;

    /// Explicit operator form used by [`exact_strategy_value`].
    fn selective_form(&self, _cfg: &GameConfig) -> Result<SelectiveForm> {
        Err(Error::Unsupported(format!("{} has no explicit operator form", self.name())))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GameResult {
    pub game: GameKind,
    pub strategy: String,
    pub n: usize,
    pub t: usize,
    pub m: usize,
    pub shots: usize,
    /// `p[b][b']`: probability of guessing `b'` when the challenge is `b`
    pub p: [[f64; 2]; 2],
    /// standard error of `p[b][0]` (equal to that of `p[b][1]`)
    pub stderr: [f64; 2],
    pub success: f64,
    pub success_stderr: f64,
    pub bound: f64,
    pub epsilon: f64,
}

fn play_shot(strategy: &dyn Strategy, cfg: &GameConfig, shot: usize) -> Result<(usize, u8)> {
    let b = shot % 2;
    let mut oracle_rng = task_rng(cfg.seed, "games/oracle", shot as u64);
    let u = haar_unitary(cfg.n, &mut oracle_rng);
    let v = haar_unitary(cfg.n, &mut oracle_rng);
    let u_dag = u.adjoint();
    let v_dag = v.adjoint();
    let (ub, ub_dag) = if b == 0 { (&u, &u_dag) } else { (&v, &v_dag) };
    let mut oa = OracleHandle::new(&u, &u_dag, cfg);
    let mut ob = OracleHandle::new(ub, ub_dag, cfg);
    let mut ra = task_rng(cfg.seed, "games/party-a", shot as u64);
    let mut rb = task_rng(cfg.seed, "games/party-b", shot as u64);
    let (mut pa, mut pb) = strategy.parties(cfg)?;
    pa.prepare(&mut oa, &mut ra)?;
    pb.prepare(&mut ob, &mut rb)?;

    let mut incoming: Option<Message> = None;
    let mut messages = 0usize;
    for round in 0..cfg.max_rounds {
        let a_turn = round % 2 == 0;
        let turn = if a_turn {
            pa.turn(&mut oa, incoming.as_ref(), &mut ra)?
        } else {
            pb.turn(&mut ob, incoming.as_ref(), &mut rb)?
        };
        match turn {
            Turn::Send(msg) => {
                messages += 1;
                if cfg.game == GameKind::NiInvHud {
                    if !a_turn || messages > 1 {
                        return Err(Error::Protocol("only one message, from A to B, is allowed".into()));
                    }
                    if msg.len() > cfg.m {
                        return Err(Error::Protocol(format!(
                            "message of {} bits exceeds m = {}",
                            msg.len(),
                            cfg.m
                        )));
                    }
                }
                if cfg.game == GameKind::NaInvHud {
                    oa.closed = true;
                    ob.closed = true;
                }
                incoming = Some(msg);
            }
            Turn::Output(bit) => {
                if bit > 1 {
                    return Err(Error::Protocol(format!("output {bit} is not a bit")));
                }
                if cfg.game == GameKind::NiInvHud && (a_turn || messages != 1) {
                    return Err(Error::Protocol("B must answer after exactly one message".into()));
                }
                return Ok((b, bit));
            }
        }
    }
    Err(Error::Protocol(format!("no output within {} rounds", cfg.max_rounds)))
}

fn run_game(strategy: &dyn Strategy, cfg: &GameConfig, kind: GameKind) -> Result<GameResult> {
    cfg.validate()?;
    if cfg.game != kind {
        return Err(Error::Config(format!("config is for {:?}, not {kind:?}", cfg.game)));
    }
    let chunks = par_chunks(cfg.shots, SHOT_CHUNK, |range| -> Result<[[u64; 2]; 2]> {
        let mut counts = [[0u64; 2]; 2];
        for shot in range {
            let (b, guess) = play_shot(strategy, cfg, shot)?;
            counts[b][guess as usize] += 1;
        }
        Ok(counts)
    });
    let mut counts = [[0u64; 2]; 2];
    for ch in chunks {
        let ch = ch?;
        for b in 0..2 {
            for g in 0..2 {
                counts[b][g] += ch[b][g];
            }
        }
    }
    let mut p = [[0.0; 2]; 2];
    let mut stderr = [0.0; 2];
    for b in 0..2 {
        let total = (counts[b][0] + counts[b][1]) as f64;
        if total == 0.0 {
            // one shot only: the b = 1 half is empty
            p[b] = [f64::NAN, f64::NAN];
            stderr[b] = f64::NAN;
            continue;
        }
        p[b][0] = counts[b][0] as f64 / total;
        p[b][1] = counts[b][1] as f64 / total;
        stderr[b] = (p[b][0] * p[b][1] / total).sqrt();
    }
    Ok(GameResult {
        game: cfg.game,
        strategy: strategy.name(),
        n: cfg.n,
        t: cfg.t,
        m: cfg.m,
        shots: cfg.shots,
        p,
        stderr,
        success: (p[0][0] + p[1][1]) / 2.0,
        success_stderr: 0.5 * (stderr[0].powi(2) + stderr[1].powi(2)).sqrt(),
        bound: cfg.bound(),
        epsilon: cfg.epsilon(),
    })
}

/// Monte Carlo estimate for the adaptive forward-query game. The challenge
/// alternates `b = shot mod 2`; every shot draws fresh `U` and `V`.
pub fn run_hud(strategy: &dyn Strategy, cfg: &GameConfig) -> Result<GameResult> {
    run_game(strategy, cfg, GameKind::Hud)
}

pub fn run_na_inv_hud(strategy: &dyn Strategy, cfg: &GameConfig) -> Result<GameResult> {
    run_game(strategy, cfg, GameKind::NaInvHud)
}

pub fn run_ni_inv_hud(strategy: &dyn Strategy, cfg: &GameConfig) -> Result<GameResult> {
    run_game(strategy, cfg, GameKind::NiInvHud)
}

// ---------------------------------------------------------------------------
// Exact evaluation

/// One group of branches sharing the same pre-query states.
#[derive(Clone, Debug)]
pub struct SelectiveBlock {
    pub rho: Operator,
    pub sigma: Operator,
    /// `(M^{b'}, N^{b'})` for `b' = 0, 1`, one entry per transcript.
    pub effects: Vec<[(Operator, Operator); 2]>,
}

/// `p_{b'|0} = Σ E_U Tr((U^{⊗t}ρU^{†⊗t} ⊗ U^{⊗t}σU^{†⊗t)(M^{b'} ⊗ N^{b'}))` and
/// the product form for `b = 1`. The oracle acts on `a_twirled` of A's
/// registers and `b_twirled` of B's.
#[derive(Clone, Debug)]
pub struct SelectiveForm {
    pub a_twirled: Vec<usize>,
    pub b_twirled: Vec<usize>,
    pub blocks: Vec<SelectiveBlock>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactGameValue {
    pub n: usize,
    pub t: usize,
    /// `p[b][b']`
    pub p: [[f64; 2]; 2],
    /// same with the Haar twirls replaced by the approximate twirl
    pub q: [[f64; 2]; 2],
    pub success: f64,
    pub epsilon: f64,
    /// `max_b |p_{0|b} + p_{1|b} − 1|`
    pub normalization_defect: f64,
    /// `(1+ε)²/(1−ε) · p_{b'|0} ≥ p_{b'|1}`; `None` when `ε ≥ 1`
    pub lp_dominance: Option<bool>,
    /// `q_{b'|0} ≥ q_{b'|1}` for both `b'`
    pub q_ordered: bool,
    /// `p` lies within the multiplicative bands around `q`; `None` when the
    /// relevant `ε` exceeds 1
    pub bands_hold: Option<bool>,
}

fn twirl(op: &Operator, regs: &[usize], n: usize, exact: bool) -> Result<Operator> {
    if regs.is_empty() {
        return Ok(op.clone());
    }
    if exact {
        exact_twirl_with_ancilla(op, regs, regs.len(), n)
    } else {
        approx_twirl_with_ancilla(op, regs, regs.len(), n)
    }
}

fn evaluate_form(form: &SelectiveForm, n: usize, exact: bool) -> Result<[[f64; 2]; 2]> {
    let mut p = [[0.0; 2]; 2];
    for block in &form.blocks {
        let shift = block.rho.dims().len();
        let mut joint_regs = form.a_twirled.clone();
        joint_regs.extend(form.b_twirled.iter().map(|r| r + shift));
        let joint = twirl(&block.rho.tensor(&block.sigma)?, &joint_regs, n, exact)?;
        let ta = twirl(&block.rho, &form.a_twirled, n, exact)?;
        let tb = twirl(&block.sigma, &form.b_twirled, n, exact)?;
        for eff in &block.effects {
            for (g, (m, nb)) in eff.iter().enumerate() {
                p[0][g] += joint.trace_product(&m.tensor(nb)?)?.re;
                p[1][g] += ta.trace_product(m)?.re * tb.trace_product(nb)?.re;
            }
        }
    }
    Ok(p)
}

/// Exact `p_{b'|b}` (and the approximate-twirl `q_{b'|b}`) for a strategy
/// in the adaptive forward-query game.
pub fn exact_strategy_value(strategy: &dyn Strategy, cfg: &GameConfig) -> Result<ExactGameValue> {
    if cfg.game != GameKind::Hud {
        return Err(Error::Unsupported("exact evaluation covers the forward-query game only".into()));
    }
    let form = strategy.selective_form(cfg)?;
    if form.a_twirled.len() > cfg.t || form.b_twirled.len() > cfg.t {
        return Err(Error::Protocol("operator form uses more queries than allowed".into()));
    }
    let p = evaluate_form(&form, cfg.n, true)?;
    let q = evaluate_form(&form, cfg.n, false)?;
    let eps = cfg.epsilon();
    let normalization_defect = (0..2).map(|b| (p[b][0] + p[b][1] - 1.0).abs()).fold(0.0, f64::max);
    let lp_dominance = (eps < 1.0).then(|| {
        let coef = (1.0 + eps).powi(2) / (1.0 - eps);
        (0..2).all(|g| coef * p[0][g] >= p[1][g] - 1e-9)
    });
    let q_ordered = (0..2).all(|g| q[0][g] >= q[1][g] - 1e-12);
    let single = (cfg.t * cfg.t) as f64 / cfg.n as f64;
    let bands_hold = (eps <= 1.0).then(|| {
        let tol = 1e-10;
        (0..2).all(|g| {
            let joint = (1.0 - eps) * q[0][g] - tol <= p[0][g] && p[0][g] <= (1.0 + eps) * q[0][g] + tol;
            let prod = (1.0 - single).powi(2) * q[1][g] - tol <= p[1][g]
                && p[1][g] <= (1.0 + single).powi(2) * q[1][g] + tol;
            joint && prod
        })
    });
    Ok(ExactGameValue {
        n: cfg.n,
        t: cfg.t,
        p,
        q,
        success: (p[0][0] + p[1][1]) / 2.0,
        epsilon: eps,
        normalization_defect,
        lp_dominance,
        q_ordered,
        bands_hold,
    })
}

/// Gate-teleported form of one party's adaptive sequence
/// `U A_t ⋯ U A_1 |init⟩` followed by the effect `effect`.
///
/// Registers are `W, X_1, Y_1, …, X_t, Y_t`. The state is
/// `|init⟩⟨init|_W ⊗ ⊗_i (id ⊗ A_i)|Ω⟩⟨Ω|_{X_i Y_i}(id ⊗ A_i†)` and the
/// effect is `|Ω⟩⟨Ω|_{W X_1} ⊗ |Ω⟩⟨Ω|_{Y_1 X_2} ⊗ ⋯ ⊗ effect_{Y_t}`. The
/// oracle acts on the `Y_i`.
#[derive(Clone, Debug)]
pub struct FlatParty {
    pub state: Operator,
    pub effect: Operator,
    pub twirled: Vec<usize>,
}

pub fn flatten_adaptive(n: usize, init: &CVector, ops: &[CMatrix], effect: &Operator) -> Result<FlatParty> {
    let t = ops.len();
    if t == 0 {
        return domain_err("flattening needs at least one query");
    }
    if init.len() != n || effect.dim() != n || ops.iter().any(|a| a.nrows() != n || a.ncols() != n) {
        return dim_err(format!("flattening expects dimension {n} throughout"));
    }
    let om = omega(n);
    let mut state = Operator::from_ket(vec![n], init)?;
    for a in ops {
        let v = crate::qlinalg::apply_to_register(&om, &[n, n], 1, a)?;
        state = state.tensor(&Operator::from_ket(vec![n, n], &v)?)?;
    }
    let link = Operator::from_ket(vec![n, n], &om)?;
    let mut eff = link.clone();
    for _ in 1..t {
        eff = eff.tensor(&link)?;
    }
    eff = eff.tensor(effect)?;
    let twirled = (1..=t).map(|i| 2 * i).collect();
    Ok(FlatParty { state, effect: eff, twirled })
}

// ---------------------------------------------------------------------------
// Strategies

fn projector(dims: Vec<usize>, index: usize) -> Operator {
    Operator::basis_projector(dims, index).expect("index in range")
}

/// Ignores the oracle; A sends one zero bit and B outputs `guess`.
#[derive(Clone, Debug)]
pub struct ConstantStrategy {
    pub guess: u8,
}

struct Silent;

impl Party for Silent {
    fn turn(&mut self, _: &mut OracleHandle<'_>, _: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
        Ok(Turn::Send(Message::from_bits(vec![false])))
    }
}

struct Fixed(u8);

impl Party for Fixed {
    fn turn(&mut self, _: &mut OracleHandle<'_>, _: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
        Ok(Turn::Output(self.0))
    }
}

impl Strategy for ConstantStrategy {
    fn name(&self) -> String {
        format!("constant-{}", self.guess)
    }

    fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
        Ok((Box::new(Silent), Box::new(Fixed(self.guess))))
    }

    fn selective_form(&self, _: &GameConfig) -> Result<SelectiveForm> {
        let one = Operator::identity(vec![1])?;
        let zero = Operator::zeros(vec![1])?;
        let (m0, m1) = if self.guess == 0 { (one.clone(), zero) } else { (zero, one.clone()) };
        Ok(SelectiveForm {
            a_twirled: vec![],
            b_twirled: vec![],
            blocks: vec![SelectiveBlock {
                rho: one.clone(),
                sigma: one.clone(),
                effects: vec![[(m0, one.clone()), (m1, one)]],
            }],
        })
    }
}

/// Ignores the oracle; B outputs a fair coin.
#[derive(Clone, Debug)]
pub struct CoinStrategy;

struct Coin;

impl Party for Coin {
    fn turn(&mut self, _: &mut OracleHandle<'_>, _: Option<&Message>, rng: &mut TaskRng) -> Result<Turn> {
        Ok(Turn::Output(rng.random_range(0..2u8)))
    }
}

impl Strategy for CoinStrategy {
    fn name(&self) -> String {
        "coin".into()
    }

    fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
        Ok((Box::new(Silent), Box::new(Coin)))
    }

    fn selective_form(&self, _: &GameConfig) -> Result<SelectiveForm> {
        let one = Operator::identity(vec![1])?;
        let half = one.scale(0.5);
        Ok(SelectiveForm {
            a_twirled: vec![],
            b_twirled: vec![],
            blocks: vec![SelectiveBlock {
                rho: one.clone(),
                sigma: one.clone(),
                effects: vec![[(one.clone(), half.clone()), (one, half)]],
            }],
        })
    }
}

/// Each party measures `U|0⟩` (and `U†|0⟩` when `inverse`) `t` times in the
/// computational basis. A sends its outcomes; B outputs 0 iff some outcome
/// of the same kind appears on both sides.
#[derive(Clone, Debug)]
pub struct CollisionStrategy {
    pub t: usize,
    pub inverse: bool,
}

pub fn collision_strategy(t: usize) -> Result<CollisionStrategy> {
    if t == 0 {
        return domain_err("collision strategy needs t >= 1");
    }
    Ok(CollisionStrategy { t, inverse: false })
}

/// Collision strategy over both the `U` and the `U†` branch.
pub fn inverse_collision_strategy(t: usize) -> Result<CollisionStrategy> {
    if t == 0 {
        return domain_err("collision strategy needs t >= 1");
    }
    Ok(CollisionStrategy { t, inverse: true })
}

struct CollisionParty {
    t: usize,
    inverse: bool,
    forward: Vec<usize>,
    backward: Vec<usize>,
    is_a: bool,
}

impl CollisionParty {
    fn sample(&mut self, oracle: &mut OracleHandle<'_>, rng: &mut TaskRng) -> Result<()> {
        let n = oracle.dimension();
        for _ in 0..self.t {
            let mut s = LocalState::new(vec![n])?;
            oracle.forward(&mut s, 0)?;
            self.forward.push(s.measure(0, rng)?);
            if self.inverse {
                let mut s = LocalState::new(vec![n])?;
                oracle.inverse(&mut s, 0)?;
                self.backward.push(s.measure(0, rng)?);
            }
        }
        Ok(())
    }
}

impl Party for CollisionParty {
    fn prepare(&mut self, oracle: &mut OracleHandle<'_>, rng: &mut TaskRng) -> Result<()> {
        self.sample(oracle, rng)
    }

    fn turn(&mut self, oracle: &mut OracleHandle<'_>, incoming: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
        let width = value_width(oracle.dimension());
        if self.is_a {
            let mut values = self.forward.clone();
            values.extend_from_slice(&self.backward);
            return Ok(Turn::Send(Message::from_values(&values, width)));
        }
        let msg = incoming.ok_or_else(|| Error::Protocol("B expected a message".into()))?;
        let theirs = msg.values(width);
        let (tf, tb) = theirs.split_at(self.t.min(theirs.len()));
        let hit = self.forward.iter().any(|x| tf.contains(x)) || self.backward.iter().any(|x| tb.contains(x));
        Ok(Turn::Output(if hit { 0 } else { 1 }))
    }
}

impl Strategy for CollisionStrategy {
    fn name(&self) -> String {
        if self.inverse {
            format!("inverse-collision-{}", self.t)
        } else {
            format!("collision-{}", self.t)
        }
    }

    fn parties(&self, cfg: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
        if self.t > cfg.t {
            return Err(Error::Protocol(format!("strategy needs {} queries, game allows {}", self.t, cfg.t)));
        }
        let make = |is_a| CollisionParty {
            t: self.t,
            inverse: self.inverse,
            forward: Vec::new(),
            backward: Vec::new(),
            is_a,
        };
        Ok((Box::new(make(true)), Box::new(make(false))))
    }

    /// Outcomes `x⃗` of A index the branches: `M_x⃗ = |x⃗⟩⟨x⃗|` and `N^0_x⃗`
    /// projects onto the `y⃗` sharing a value with `x⃗`.
    fn selective_form(&self, cfg: &GameConfig) -> Result<SelectiveForm> {
        if self.inverse {
            return Err(Error::Unsupported("inverse queries have no forward-only operator form".into()));
        }
        let (n, t) = (cfg.n, self.t);
        let dims = vec![n; t];
        let side = crate::permops::checked_pow(n, t)?;
        let digits = |mut v: usize| {
            let mut d = vec![0usize; t];
            for slot in d.iter_mut().rev() {
                *slot = v % n;
                v /= n;
            }
            d
        };
        let start = projector(dims.clone(), 0);
        let mut effects = Vec::with_capacity(side);
        for x in 0..side {
            let xd = digits(x);
            let m = projector(dims.clone(), x);
            let mut hit = Operator::zeros(dims.clone())?;
            for y in 0..side {
                if digits(y).iter().any(|v| xd.contains(v)) {
                    hit.set(y, y, c(1.0, 0.0));
                }
            }
            let miss = Operator::identity(dims.clone())?.sub(&hit)?;
            effects.push([(m.clone(), hit), (m, miss)]);
        }
        Ok(SelectiveForm {
            a_twirled: (0..t).collect(),
            b_twirled: (0..t).collect(),
            blocks: vec![SelectiveBlock { rho: start.clone(), sigma: start, effects }],
        })
    }
}

/// Each party prepares `|0⟩`, queries, applies `local`, queries again and
/// measures. A sends the outcome; B outputs 0 iff the outcomes agree.
#[derive(Clone, Debug)]
pub struct InterleavedStrategy {
    pub local: CMatrix,
}

/// `F_{jk} = ω^{jk}/√N`.
pub fn fourier_matrix(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, k| {
        num_complex::Complex64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k % n) as f64 / n as f64)
    })
}

struct InterleavedParty {
    local: CMatrix,
    outcome: usize,
    is_a: bool,
}

impl Party for InterleavedParty {
    fn prepare(&mut self, oracle: &mut OracleHandle<'_>, rng: &mut TaskRng) -> Result<()> {
        let mut s = LocalState::new(vec![oracle.dimension()])?;
        oracle.forward(&mut s, 0)?;
        s.apply(0, &self.local)?;
        oracle.forward(&mut s, 0)?;
        self.outcome = s.measure(0, rng)?;
        Ok(())
    }

    fn turn(&mut self, oracle: &mut OracleHandle<'_>, incoming: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
        let width = value_width(oracle.dimension());
        if self.is_a {
            return Ok(Turn::Send(Message::from_values(&[self.outcome], width)));
        }
        let msg = incoming.ok_or_else(|| Error::Protocol("B expected a message".into()))?;
        Ok(Turn::Output(if msg.values(width).first() == Some(&self.outcome) { 0 } else { 1 }))
    }
}

impl Strategy for InterleavedStrategy {
    fn name(&self) -> String {
        "interleaved".into()
    }

    fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
        let make = |is_a| InterleavedParty { local: self.local.clone(), outcome: 0, is_a };
        Ok((Box::new(make(true)), Box::new(make(false))))
    }

    /// Gate-teleported form with `A_1 = id`, `A_2 = local`; branches are
    /// indexed by A's outcome.
    fn selective_form(&self, cfg: &GameConfig) -> Result<SelectiveForm> {
        let n = cfg.n;
        if self.local.nrows() != n {
            return dim_err("local operator dimension differs from N");
        }
        let init = crate::qlinalg::basis_vector(n, 0);
        let ops = [CMatrix::identity(n, n), self.local.clone()];
        let mut effects = Vec::with_capacity(n);
        let mut shared = None;
        for x in 0..n {
            let hit = flatten_adaptive(n, &init, &ops, &projector(vec![n], x))?;
            let miss_effect = Operator::identity(vec![n])?.sub(&projector(vec![n], x))?;
            let miss = flatten_adaptive(n, &init, &ops, &miss_effect)?;
            effects.push([(hit.effect.clone(), hit.effect.clone()), (hit.effect.clone(), miss.effect)]);
            shared.get_or_insert((hit.state, hit.twirled));
        }
        let (state, twirled) = shared.expect("n >= 1");
        Ok(SelectiveForm {
            a_twirled: twirled.clone(),
            b_twirled: twirled,
            blocks: vec![SelectiveBlock { rho: state.clone(), sigma: state, effects }],
        })
    }
}

/// Each party measures `U|0⟩` `samples` times and keeps the most frequent
/// outcome (smallest on ties). A sends it; B outputs 0 iff it matches.
#[derive(Clone, Debug)]
pub struct ArgmaxStrategy {
    pub samples: usize,
}

struct ArgmaxParty {
    samples: usize,
    estimate: usize,
    is_a: bool,
}

impl Party for ArgmaxParty {
    fn prepare(&mut self, oracle: &mut OracleHandle<'_>, rng: &mut TaskRng) -> Result<()> {
        let n = oracle.dimension();
        let mut counts = vec![0usize; n];
        for _ in 0..self.samples {
            let mut s = LocalState::new(vec![n])?;
            oracle.forward(&mut s, 0)?;
            counts[s.measure(0, rng)?] += 1;
        }
        let best = counts.iter().copied().max().unwrap_or(0);
        self.estimate = counts.iter().position(|&c| c == best).unwrap_or(0);
        Ok(())
    }

    fn turn(&mut self, oracle: &mut OracleHandle<'_>, incoming: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
        let width = value_width(oracle.dimension());
        if self.is_a {
            return Ok(Turn::Send(Message::from_values(&[self.estimate], width)));
        }
        let msg = incoming.ok_or_else(|| Error::Protocol("B expected a message".into()))?;
        Ok(Turn::Output(if msg.values(width).first() == Some(&self.estimate) { 0 } else { 1 }))
    }
}

impl Strategy for ArgmaxStrategy {
    fn name(&self) -> String {
        format!("argmax-{}", self.samples)
    }

    fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
        let make = |is_a| ArgmaxParty { samples: self.samples, estimate: 0, is_a };
        Ok((Box::new(make(true)), Box::new(make(false))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn hud(n: usize, t: usize, shots: usize, seed: u64) -> GameConfig {
        GameConfig::new(GameKind::Hud, n, t, shots, seed)
    }

    #[test]
    fn message_roundtrip() {
        let m = Message::from_values(&[5, 0, 3], 3);
        assert_eq!(m.len(), 9);
        assert_eq!(m.values(3), vec![5, 0, 3]);
        assert_eq!(value_width(2), 1);
        assert_eq!(value_width(8), 3);
        assert_eq!(value_width(9), 4);
        assert_eq!(value_width(1), 1);
    }

    #[test]
    fn constant_strategy_is_exactly_half() {
        let r = run_hud(&ConstantStrategy { guess: 0 }, &hud(4, 1, 100, 1)).unwrap();
        assert_eq!(r.success, 0.5);
        let e = exact_strategy_value(&ConstantStrategy { guess: 1 }, &hud(4, 1, 1, 1)).unwrap();
        assert_eq!(e.success, 0.5);
        let e = exact_strategy_value(&CoinStrategy, &hud(4, 1, 1, 1)).unwrap();
        assert_eq!(e.p, [[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn collision_exact_values_at_two() {
        let s = collision_strategy(1).unwrap();
        let e = exact_strategy_value(&s, &hud(2, 1, 1, 0)).unwrap();
        assert!((e.p[0][0] - 2.0 / 3.0).abs() < 1e-12, "{:?}", e.p);
        assert!((e.p[1][0] - 0.5).abs() < 1e-12);
        assert!(e.normalization_defect < 1e-10);
        assert!(collision_strategy(0).is_err());
    }

    #[test]
    fn collision_mc_matches_exact() {
        let s = collision_strategy(1).unwrap();
        let cfg = hud(2, 1, 20_000, 5);
        let r = run_hud(&s, &cfg).unwrap();
        let e = exact_strategy_value(&s, &cfg).unwrap();
        assert!((r.success - e.success).abs() <= 3.0 * r.success_stderr, "{} vs {}", r.success, e.success);
    }

    #[test]
    fn lp_dominance_and_q_order() {
        for (n, t) in [(8usize, 1usize), (16, 1), (32, 1)] {
            let e = exact_strategy_value(&collision_strategy(t).unwrap(), &hud(n, t, 1, 0)).unwrap();
            assert!(e.normalization_defect < 1e-10);
            assert!(e.q_ordered, "{e:?}");
            if let Some(d) = e.lp_dominance {
                assert!(d, "{e:?}");
            }
            if let Some(b) = e.bands_hold {
                assert!(b, "{e:?}");
            }
        }
    }

    #[test]
    fn flattening_reproduces_sequential_value() {
        let n = 3;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary(n, &mut rng);
        let ops: Vec<CMatrix> = (0..2).map(|_| haar_unitary(n, &mut rng)).collect();
        let init = crate::qlinalg::random_pure_state(n, &mut rng);
        let effect = crate::qlinalg::random_density(&[n], &mut rng).unwrap();
        // direct: U A_2 U A_1 |init⟩
        let v = &u * &ops[1] * &u * &ops[0] * &init;
        let direct = (v.adjoint() * effect.matrix() * &v)[(0, 0)].re;
        let flat = flatten_adaptive(n, &init, &ops, &effect).unwrap();
        let mut evolved = flat.state.clone();
        for &r in &flat.twirled {
            evolved = evolved.conjugate_subsystem(r, &u).unwrap();
        }
        let value = evolved.trace_product(&flat.effect).unwrap().re;
        assert!((value - direct).abs() < 1e-12, "{value} vs {direct}");
    }

    #[test]
    fn interleaved_exact_matches_mc() {
        let s = InterleavedStrategy { local: fourier_matrix(2) };
        let cfg = hud(2, 2, 20_000, 9);
        let e = exact_strategy_value(&s, &cfg).unwrap();
        assert!(e.normalization_defect < 1e-10, "{e:?}");
        let r = run_hud(&s, &cfg).unwrap();
        for b in 0..2 {
            assert!((r.p[b][0] - e.p[b][0]).abs() <= 3.5 * r.stderr[b], "{:?} vs {:?}", r.p, e.p);
        }
    }

    struct Greedy;
    struct GreedyParty;

    impl Party for GreedyParty {
        fn prepare(&mut self, oracle: &mut OracleHandle<'_>, _: &mut TaskRng) -> Result<()> {
            let mut s = LocalState::new(vec![oracle.dimension()])?;
            loop {
                oracle.forward(&mut s, 0)?;
            }
        }
        fn turn(&mut self, _: &mut OracleHandle<'_>, _: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
            Ok(Turn::Output(0))
        }
    }

    impl Strategy for Greedy {
        fn name(&self) -> String {
            "greedy".into()
        }
        fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
            Ok((Box::new(GreedyParty), Box::new(GreedyParty)))
        }
    }

    #[test]
    fn rule_violations() {
        assert!(matches!(run_hud(&Greedy, &hud(2, 3, 4, 0)), Err(Error::Protocol(_))));
        // inverse queries in the forward-only game
        let inv = inverse_collision_strategy(1).unwrap();
        assert!(matches!(run_hud(&inv, &hud(2, 1, 4, 0)), Err(Error::Protocol(_))));
        // NI: message longer than m
        let cfg = GameConfig::new(GameKind::NiInvHud, 8, 2, 4, 0).with_message_bits(3);
        assert!(matches!(run_ni_inv_hud(&collision_strategy(2).unwrap(), &cfg), Err(Error::Protocol(_))));
        // NI: m = 0 rejected at validation
        let cfg = GameConfig::new(GameKind::NiInvHud, 8, 2, 4, 0);
        assert!(matches!(run_ni_inv_hud(&ConstantStrategy { guess: 0 }, &cfg), Err(Error::Config(_))));
        // wrong runner
        assert!(run_na_inv_hud(&CoinStrategy, &hud(2, 1, 4, 0)).is_err());
    }

    struct LateQuery;
    struct LateA;

    impl Party for LateA {
        fn turn(&mut self, oracle: &mut OracleHandle<'_>, incoming: Option<&Message>, _: &mut TaskRng) -> Result<Turn> {
            if incoming.is_some() {
                let mut s = LocalState::new(vec![oracle.dimension()])?;
                oracle.forward(&mut s, 0)?;
                return Ok(Turn::Output(0));
            }
            Ok(Turn::Send(Message::from_bits(vec![true])))
        }
    }

    impl Strategy for LateQuery {
        fn name(&self) -> String {
            "late".into()
        }
        fn parties(&self, _: &GameConfig) -> Result<(Box<dyn Party>, Box<dyn Party>)> {
            Ok((Box::new(LateA), Box::new(Silent)))
        }
    }

    #[test]
    fn non_adaptive_game_closes_oracle_after_first_message() {
        let na = GameConfig::new(GameKind::NaInvHud, 2, 1, 2, 0);
        assert!(matches!(run_na_inv_hud(&LateQuery, &na), Err(Error::Protocol(_))));
        assert!(run_hud(&LateQuery, &hud(2, 1, 2, 0)).is_ok());
    }

    #[test]
    fn forward_strategy_same_under_both_rule_sets() {
        let s = collision_strategy(1).unwrap();
        let a = run_hud(&s, &hud(4, 1, 2000, 3)).unwrap();
        let b = run_na_inv_hud(&s, &GameConfig::new(GameKind::NaInvHud, 4, 1, 2000, 3)).unwrap();
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn results_independent_of_pool_size() {
        let s = inverse_collision_strategy(1).unwrap();
        let cfg = GameConfig::new(GameKind::NaInvHud, 8, 1, 3000, 4);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_na_inv_hud(&s, &cfg).unwrap().p)
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn argmax_beats_half_at_two() {
        let cfg = GameConfig::new(GameKind::NiInvHud, 2, 32, 4000, 2).with_message_bits(1);
        let r = run_ni_inv_hud(&ArgmaxStrategy { samples: 32 }, &cfg).unwrap();
        assert!(r.success > 0.5 + 3.0 * r.success_stderr, "{r:?}");
        let constant = run_ni_inv_hud(&ConstantStrategy { guess: 0 }, &cfg).unwrap();
        assert_eq!(constant.success, 0.5);
    }

    #[test]
    fn measurement_statistics() {
        let mut rng = task_rng(1, "t", 0);
        let mut s = LocalState::new(vec![2, 3]).unwrap();
        s.apply(1, &fourier_matrix(3)).unwrap();
        let x = s.measure(1, &mut rng).unwrap();
        assert!(x < 3);
        s.reset(1, x).unwrap();
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }
}
