//! The game: key distribution, private commitments, the equality check,
//! arbitration, payments and utilities. Also parameter selection and payoff
//! matrices over a strategy library.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitration::{arbitrate, Agent, Branch, Context, Transcript, Verdict};
use crate::commitment::{commit_any, Commitment, CostError, CostSchedule, C_QUERY};
use crate::machine::{run_tableau, Dims, MachineError, MachineSpec, Tableau};
use crate::merkle::{gen_key_stream, HashAlgorithm, HashScheme, MerkleError};
use crate::strategies::{Prover, Strategy, StrategyError, StrategyKind};

/// Constant in the lower bound on `n`.
pub const N_MARGIN: f64 = 15.0;
pub const DEFAULT_EPSILON: f64 = 1.0 / 1024.0;
pub const DEFAULT_DELTA: f64 = 1.0 / 1024.0;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParamError {
    #[error("n = {n} does not exceed 2*log2(M_c + M_ap) + 15 = {bound:.3}")]
    EmptyInterval { n: u32, bound: f64 },
    #[error("b = {b} is outside ({lower:.3}, {upper:.3})")]
    InvalidChoice { b: i64, lower: f64, upper: f64 },
    #[error("epsilon must be in (0, 1) and delta in (0, 1/2)")]
    InvalidProbability,
    #[error("parameter inequality violated: {0}")]
    Violated(&'static str),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GameError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Merkle(#[from] MerkleError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Payment rule and the bounds it was chosen under. Amounts are cost units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaymentParams {
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
    pub m_c: u64,
    pub m_ap: u64,
    pub b: i64,
    pub d2: i64,
    /// Open interval `b` was drawn from.
    pub lower: f64,
    pub upper: f64,
}

impl PaymentParams {
    pub fn m_star(&self) -> u64 {
        self.m_c + self.m_ap
    }

    /// `d1(t) = M(t) + b`, given `M(t)`.
    pub fn d1(&self, m_t: u64) -> i64 {
        m_t as i64 + self.b
    }

    /// Re-checks every inequality the parameters must satisfy.
    pub fn check(&self) -> Result<(), ParamError> {
        let m_star = self.m_star() as f64;
        let (b, d2) = (self.b as f64, self.d2 as f64);
        let lower = (2.0 * self.delta * m_star + self.epsilon * self.m_c as f64 / (1.0 - self.epsilon))
            / (1.0 - 2.0 * self.delta);
        let upper = (self.zeta - 2.0 * m_star) / 2.0;
        if !(lower > 0.0) {
            return Err(ParamError::Violated("lower bound > 0"));
        }
        if !(lower < b && b < upper) {
            return Err(ParamError::Violated("lower < b < upper"));
        }
        if self.d2 != 2 * self.m_star() as i64 + 2 * self.b {
            return Err(ParamError::Violated("d2 = 2(M_c + M_ap) + 2b"));
        }
        if !(self.zeta > d2) {
            return Err(ParamError::Violated("zeta > d2"));
        }
        if self.d2 < 2 * self.d1(self.m_c) {
            return Err(ParamError::Violated("d2 >= 2 d1(T)"));
        }
        if !(b > self.delta * d2 + self.epsilon * self.m_c as f64 / (1.0 - self.epsilon)) {
            return Err(ParamError::Violated("b > delta d2 + eps M_c / (1 - eps)"));
        }
        Ok(())
    }
}

/// Smallest integer `n` accepted for `M_c + M_ap = m_star`.
pub fn min_security_parameter(m_star: u64) -> u32 {
    let bound = 2.0 * libm::log2(m_star as f64) + N_MARGIN;
    libm::floor(bound) as u32 + 1
}

/// Picks payments for the given costs. `b` defaults to the geometric mean of
/// the interval ends, rounded and kept strictly inside.
pub fn select_params(
    m_c: u64,
    m_ap: u64,
    epsilon: f64,
    delta: f64,
    n: u32,
    b: Option<i64>,
) -> Result<PaymentParams, ParamError> {
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 0.5) {
        return Err(ParamError::InvalidProbability);
    }
    let m_star = m_c + m_ap;
    let bound = 2.0 * libm::log2(m_star as f64) + N_MARGIN;
    if n as f64 <= bound {
        return Err(ParamError::EmptyInterval { n, bound });
    }
    let zeta = libm::exp2((n as f64 - N_MARGIN) / 2.0);
    let lower = (2.0 * delta * m_star as f64 + epsilon * m_c as f64 / (1.0 - epsilon)) / (1.0 - 2.0 * delta);
    let upper = (zeta - 2.0 * m_star as f64) / 2.0;
    let lo_int = libm::floor(lower) as i64 + 1;
    let hi_int = libm::ceil(upper) as i64 - 1;
    if lo_int > hi_int {
        return Err(ParamError::EmptyInterval { n, bound });
    }
    let b = match b {
        Some(b) if (b as f64) > lower && (b as f64) < upper => b,
        Some(b) => return Err(ParamError::InvalidChoice { b, lower, upper }),
        None => (libm::round(libm::sqrt(lower * upper)) as i64).clamp(lo_int, hi_int),
    };
    let params = PaymentParams {
        n,
        epsilon,
        delta,
        zeta,
        m_c,
        m_ap,
        b,
        d2: 2 * m_star as i64 + 2 * b,
        lower,
        upper,
    };
    params.check()?;
    Ok(params)
}

/// Outcome classes of a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    /// Agree, both truthful.
    O,
    /// Agree on the correct commitment; B spent less than a truthful commit.
    A1,
    /// Agree on the correct commitment; A spent less.
    A2,
    /// Agree on the correct commitment; both spent less.
    A3,
    /// Agree on a wrong commitment.
    B,
    /// A wins arbitration with a wrong commitment.
    C,
    /// A wins arbitration with the correct commitment.
    D,
    /// B wins arbitration with a wrong commitment.
    E,
    /// B wins arbitration with the correct commitment.
    F,
    /// Both lose arbitration.
    G,
    /// Both win; only A committed correctly.
    H1,
    /// Both win; only B committed correctly.
    H2,
    /// Both win; neither committed correctly.
    H3,
}

impl Outcome {
    pub const ALL: [Outcome; 13] = [
        Outcome::O,
        Outcome::A1,
        Outcome::A2,
        Outcome::A3,
        Outcome::B,
        Outcome::C,
        Outcome::D,
        Outcome::E,
        Outcome::F,
        Outcome::G,
        Outcome::H1,
        Outcome::H2,
        Outcome::H3,
    ];
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Classifies a game. `commit_efforts` are the agents' efforts in the
/// computation stage and `tau_c` the effort of a truthful commitment.
pub fn classify_outcome(
    ca: &Commitment,
    cb: &Commitment,
    truth: &Commitment,
    commit_efforts: [u64; 2],
    tau_c: u64,
    verdict: Option<Verdict>,
) -> Outcome {
    let (ok_a, ok_b) = (ca == truth, cb == truth);
    if ca == cb {
        if !ok_a {
            return Outcome::B;
        }
        return match (commit_efforts[0] < tau_c, commit_efforts[1] < tau_c) {
            (false, false) => Outcome::O,
            (false, true) => Outcome::A1,
            (true, false) => Outcome::A2,
            (true, true) => Outcome::A3,
        };
    }
    let v = verdict.unwrap_or(Verdict::new(false, false));
    match (v.winner_a, v.winner_b) {
        (true, false) if ok_a => Outcome::D,
        (true, false) => Outcome::C,
        (false, true) if ok_b => Outcome::F,
        (false, true) => Outcome::E,
        (false, false) => Outcome::G,
        (true, true) if ok_a => Outcome::H1,
        (true, true) if ok_b => Outcome::H2,
        (true, true) => Outcome::H3,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResult {
    pub strategy: StrategyKind,
    pub commitment: Commitment,
    pub payment: i64,
    /// Effort spent before arbitration.
    pub commit_effort: u64,
    /// Total effort, arbitration included.
    pub effort: u64,
    pub queries: u64,
    pub utility: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameResult {
    pub a: AgentResult,
    pub b: AgentResult,
    pub arbitration_used: bool,
    pub verdict: Option<Verdict>,
    pub branch: Option<Branch>,
    pub outcome: Outcome,
    pub truth: Commitment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Transcript>,
}

impl GameResult {
    pub fn agent(&self, agent: Agent) -> &AgentResult {
        match agent {
            Agent::A => &self.a,
            Agent::B => &self.b,
        }
    }

    pub fn queries(&self) -> usize {
        self.transcript.as_ref().map_or(0, Transcript::queries)
    }
}

/// One program on one input: the honest run and its cost schedule.
#[derive(Clone, Debug)]
pub struct Mechanism {
    spec: MachineSpec,
    input: alloc::string::String,
    dims: Dims,
    algorithm: HashAlgorithm,
    tableau: Tableau,
    schedule: CostSchedule,
}

impl Mechanism {
    pub fn new(spec: &MachineSpec, input: &str, dims: Dims, algorithm: HashAlgorithm) -> Result<Self, GameError> {
        let tableau = run_tableau(spec, input, dims)?;
        let schedule = CostSchedule::from_tableau(&tableau);
        Ok(Self {
            spec: spec.clone(),
            input: input.into(),
            dims,
            algorithm,
            tableau,
            schedule,
        })
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn input(&self) -> &str {
        &self.input
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.algorithm
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    pub fn schedule(&self) -> &CostSchedule {
        &self.schedule
    }

    /// Honest running time `t`.
    pub fn time(&self) -> u32 {
        self.tableau.time()
    }

    /// `M_c = M(T)`.
    pub fn m_c(&self) -> u64 {
        self.schedule.m_c()
    }

    /// Effort of a truthful commitment, `M(t)`.
    pub fn tau_c(&self) -> u64 {
        self.schedule.m(self.time()).expect("t <= T")
    }

    /// Library with standard parameters for this run.
    pub fn library(&self) -> Vec<StrategyKind> {
        StrategyKind::library()
            .into_iter()
            .map(|k| k.resolve(self.time()))
            .collect()
    }

    /// Key for trial `trial` of a session seeded with `seed`.
    pub fn key(&self, n: u32, seed: u64, trial: u32) -> Result<HashScheme, GameError> {
        Ok(gen_key_stream(n, seed, trial as u64, self.algorithm)?)
    }

    /// `f_H` of the honest run under `scheme`.
    pub fn truth(&self, scheme: &HashScheme) -> Commitment {
        let tree = commit_any(scheme, self.tableau.trace(), &mut ());
        Commitment {
            a: self.tableau.output().into(),
            t: self.time(),
            r: tree.root(),
        }
    }

    pub fn context<'a>(&'a self, scheme: &'a HashScheme) -> Context<'a> {
        Context {
            spec: &self.spec,
            input: &self.input,
            dims: self.dims,
            scheme,
        }
    }

    pub fn prover(&self, kind: StrategyKind) -> Prover {
        Prover::new(kind.resolve(self.time()), &self.spec, &self.input, self.dims)
    }

    /// Largest truthful response effort seen with τ facing each library
    /// deviant, on either side, over `keys` keys.
    pub fn measure_m_ap(&self, seed: u64, keys: u32) -> Result<u64, GameError> {
        let mut worst = 0u64;
        for trial in 0..keys.max(1) {
            let scheme = self.key(256, seed, trial)?;
            for kind in self.library() {
                if kind.commits_truthfully() {
                    continue;
                }
                for tau_side in Agent::BOTH {
                    let mut tau = self.prover(StrategyKind::Tau);
                    let mut dev = self.prover(kind);
                    let (a, b): (&mut dyn Strategy, &mut dyn Strategy) = match tau_side {
                        Agent::A => (&mut tau, &mut dev),
                        Agent::B => (&mut dev, &mut tau),
                    };
                    let ca = a.commit(&scheme)?;
                    let cb = b.commit(&scheme)?;
                    if ca != cb {
                        arbitrate(self.context(&scheme), &ca, &cb, a, b).expect("commitments differ");
                    }
                    worst = worst.max(tau.effort().queries * C_QUERY);
                }
            }
        }
        Ok(worst)
    }

    /// Parameters for this run: measures `M_ap`, then selects payments.
    /// `n` defaults to the smallest accepted value plus eight.
    pub fn calibrate(
        &self,
        n: Option<u32>,
        epsilon: f64,
        delta: f64,
        b: Option<i64>,
        seed: u64,
    ) -> Result<PaymentParams, GameError> {
        let m_ap = self.measure_m_ap(seed, 4)?;
        let m_c = self.m_c();
        let n = n.unwrap_or_else(|| min_security_parameter(m_c + m_ap) + 8);
        Ok(select_params(m_c, m_ap, epsilon, delta, n, b)?)
    }

    /// Plays one game between two prepared strategies.
    pub fn play(
        &self,
        a: &mut dyn Strategy,
        b: &mut dyn Strategy,
        params: &PaymentParams,
        scheme: &HashScheme,
    ) -> Result<GameResult, GameError> {
        let ca = a.commit(scheme)?;
        let cb = b.commit(scheme)?;
        let commit_efforts = [a.effort().total(), b.effort().total()];
        let truth = self.truth(scheme);

        let (payments, verdict, branch, transcript) = if ca == cb {
            // Paid on agreement alone; a commitment no honest run could have
            // (t outside 1..=T) earns nothing.
            let pay = self.schedule.m(ca.t).map_or(0, |m| params.d1(m));
            ([pay, pay], None, None, None)
        } else {
            let res = arbitrate(self.context(scheme), &ca, &cb, a, b).expect("commitments differ");
            let pay = |w: bool| if w { params.d2 } else { 0 };
            (
                [pay(res.verdict.winner_a), pay(res.verdict.winner_b)],
                Some(res.verdict),
                Some(res.branch),
                Some(res.transcript),
            )
        };

        let outcome = classify_outcome(&ca, &cb, &truth, commit_efforts, self.tau_c(), verdict);
        let agent = |s: &dyn Strategy, c: Commitment, pay: i64, commit_effort: u64| {
            let e = s.effort();
            AgentResult {
                strategy: s.kind(),
                commitment: c,
                payment: pay,
                commit_effort,
                effort: e.total(),
                queries: e.queries,
                utility: pay - e.total() as i64,
            }
        };
        Ok(GameResult {
            a: agent(a, ca, payments[0], commit_efforts[0]),
            b: agent(b, cb, payments[1], commit_efforts[1]),
            arbitration_used: verdict.is_some(),
            verdict,
            branch,
            outcome,
            truth,
            transcript,
        })
    }

    /// Plays `kind_a` against `kind_b` with fresh provers.
    pub fn run_game(
        &self,
        kind_a: StrategyKind,
        kind_b: StrategyKind,
        params: &PaymentParams,
        scheme: &HashScheme,
    ) -> Result<GameResult, GameError> {
        let mut a = self.prover(kind_a);
        let mut b = self.prover(kind_b);
        self.play(&mut a, &mut b, params, scheme)
    }
}

/// Worst verifier cost over a set of games.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierCost {
    pub arbitrations: u32,
    pub max_queries: usize,
    pub max_hash_calls: u64,
    pub max_response_bytes: u64,
}

/// Runs every ordered pair of `strategies` under `keys` keys and records the
/// verifier's worst query count and hash work over the arbitrations.
pub fn verifier_cost(
    mech: &Mechanism,
    strategies: &[StrategyKind],
    keys: u32,
    seed: u64,
) -> Result<VerifierCost, GameError> {
    let mut cost = VerifierCost::default();
    for trial in 0..keys {
        let scheme = mech.key(256, seed, trial)?;
        for &ka in strategies {
            for &kb in strategies {
                let mut a = mech.prover(ka);
                let mut b = mech.prover(kb);
                let ca = a.commit(&scheme)?;
                let cb = b.commit(&scheme)?;
                if ca == cb {
                    continue;
                }
                let res = arbitrate(mech.context(&scheme), &ca, &cb, &mut a, &mut b).expect("commitments differ");
                cost.arbitrations += 1;
                cost.max_queries = cost.max_queries.max(res.transcript.queries());
                cost.max_hash_calls = cost.max_hash_calls.max(res.verifier_hashes.calls);
                cost.max_response_bytes = cost.max_response_bytes.max(res.transcript.bytes);
            }
        }
    }
    Ok(cost)
}

/// Aggregate over the trials of one strategy profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffCell {
    pub a: StrategyKind,
    pub b: StrategyKind,
    pub trials: u32,
    pub sum_a: i64,
    pub sum_b: i64,
    pub outcomes: BTreeMap<Outcome, u32>,
    pub arbitrations: u32,
    pub max_queries: usize,
}

impl PayoffCell {
    pub fn mean_a(&self) -> f64 {
        self.sum_a as f64 / self.trials as f64
    }

    pub fn mean_b(&self) -> f64 {
        self.sum_b as f64 / self.trials as f64
    }

    pub fn sum(&self, agent: Agent) -> i64 {
        match agent {
            Agent::A => self.sum_a,
            Agent::B => self.sum_b,
        }
    }
}

/// Plays `trials` games of one profile, trial `k` under key `(seed, k)`.
pub fn play_cell(
    mech: &Mechanism,
    params: &PaymentParams,
    a: StrategyKind,
    b: StrategyKind,
    trials: u32,
    seed: u64,
) -> Result<PayoffCell, GameError> {
    let mut cell = PayoffCell {
        a,
        b,
        trials,
        sum_a: 0,
        sum_b: 0,
        outcomes: BTreeMap::new(),
        arbitrations: 0,
        max_queries: 0,
    };
    for trial in 0..trials {
        let scheme = mech.key(params.n, seed, trial)?;
        let g = mech.run_game(a, b, params, &scheme)?;
        cell.sum_a += g.a.utility;
        cell.sum_b += g.b.utility;
        *cell.outcomes.entry(g.outcome).or_default() += 1;
        cell.arbitrations += g.arbitration_used as u32;
        cell.max_queries = cell.max_queries.max(g.queries());
    }
    Ok(cell)
}

/// A unilateral switch that raises the switching agent's utility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub agent: Agent,
    pub to: StrategyKind,
    /// Gain in summed utility over the cell's trials.
    pub gain: i64,
}

/// Square matrix of profiles; row = A's strategy, column = B's.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub strategies: Vec<StrategyKind>,
    pub cells: Vec<PayoffCell>,
}

impl PayoffMatrix {
    /// Assembles a matrix from row-major cells.
    pub fn new(strategies: Vec<StrategyKind>, cells: Vec<PayoffCell>) -> Self {
        assert_eq!(cells.len(), strategies.len() * strategies.len());
        Self { strategies, cells }
    }

    /// Sequentially plays every profile.
    pub fn compute(
        mech: &Mechanism,
        params: &PaymentParams,
        strategies: &[StrategyKind],
        trials: u32,
        seed: u64,
    ) -> Result<Self, GameError> {
        let mut cells = Vec::with_capacity(strategies.len() * strategies.len());
        for &a in strategies {
            for &b in strategies {
                cells.push(play_cell(mech, params, a, b, trials, seed)?);
            }
        }
        Ok(Self::new(strategies.to_vec(), cells))
    }

    pub fn size(&self) -> usize {
        self.strategies.len()
    }

    pub fn cell(&self, i: usize, j: usize) -> &PayoffCell {
        &self.cells[i * self.size() + j]
    }

    pub fn index_of(&self, kind: StrategyKind) -> Option<usize> {
        self.strategies.iter().position(|&k| k == kind)
    }

    /// Every profitable unilateral deviation from profile `(i, j)`.
    pub fn deviations(&self, i: usize, j: usize) -> Vec<Deviation> {
        let here = self.cell(i, j);
        let mut out = Vec::new();
        for k in 0..self.size() {
            let gain = self.cell(k, j).sum_a - here.sum_a;
            if k != i && gain > 0 {
                out.push(Deviation { agent: Agent::A, to: self.strategies[k], gain });
            }
            let gain = self.cell(i, k).sum_b - here.sum_b;
            if k != j && gain > 0 {
                out.push(Deviation { agent: Agent::B, to: self.strategies[k], gain });
            }
        }
        out
    }

    /// Profiles with no profitable unilateral deviation.
    pub fn equilibria(&self) -> Vec<(StrategyKind, StrategyKind)> {
        let n = self.size();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.deviations(i, j).is_empty())
            .map(|(i, j)| (self.strategies[i], self.strategies[j]))
            .collect()
    }
}
