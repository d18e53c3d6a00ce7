//! Prover strategies: how an agent commits and how it answers the verifier.
//!
//! Every strategy is a [`Prover`] parameterised by a [`StrategyKind`]. Effort
//! is charged to the prover's own [`EffortMeter`]: machine steps and hashes
//! at commit time, one query unit per response. Responses are read from data
//! kept at commit time, so answering costs no further hashing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::arbitration::{answer_from_tree, ProverOracle, Query, Response};
use crate::commitment::{commit, commit_any, Commitment, EffortMeter};
use crate::machine::{
    output_of_block, run_prefix, Dims, MachineError, MachineSpec, Row, Trace,
};
use crate::mechanism::{GameError, Mechanism, PaymentParams};
use crate::merkle::{Digest, HashScheme, RowCache, TableauTree};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("unknown strategy `{0}`")]
    Unknown(String),
    #[error("bad parameter in `{0}`")]
    BadParameter(String),
    #[error("{kind}: parameter {value} is out of range for a run of {t} rows")]
    OutOfRange { kind: String, value: u32, t: u32 },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// A library entry. `None` parameters are filled in from the honest running
/// time by [`StrategyKind::resolve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    /// Absolutely truthful.
    Tau,
    /// Computes `i` rows and commits to them as if row `i` were the last.
    Lazy(Option<u32>),
    /// Computes `i` rows, then writes a halting row `i + 1` by hand.
    LazyHalt(Option<u32>),
    /// Computes everything, changes the output symbol in row `t` and rebuilds
    /// a consistent tree over the altered tableau.
    Flip,
    /// Honest tree, reports `t + Δ`.
    Inflate(Option<u32>),
    /// Fixed fabricated commitment, no computation.
    Collude,
    /// Honest commitment, lies in its `k`-th response.
    ApLiar(Option<u32>),
    /// Same construction as `LazyHalt`, used one row past a lazy opponent.
    Overclaim(Option<u32>),
}

impl StrategyKind {
    /// The eight-strategy library with standard parameters.
    pub fn library() -> Vec<StrategyKind> {
        use StrategyKind::*;
        alloc::vec![
            Tau,
            Lazy(None),
            LazyHalt(None),
            Flip,
            Inflate(None),
            Collude,
            ApLiar(None),
            Overclaim(None)
        ]
    }

    /// Standard parameters for a run of `t` rows: `i = (t-1)/2`, `Δ = 1`,
    /// `k = 1`, and `overclaim` at `i + 1`.
    pub fn resolve(self, t: u32) -> StrategyKind {
        use StrategyKind::*;
        let i = ((t.saturating_sub(1)) / 2).max(1);
        match self {
            Lazy(None) => Lazy(Some(i)),
            LazyHalt(None) => LazyHalt(Some(i)),
            Inflate(None) => Inflate(Some(1)),
            ApLiar(None) => ApLiar(Some(1)),
            Overclaim(None) => Overclaim(Some(i + 1)),
            k => k,
        }
    }

    /// Whether the strategy commits `f_H` (the truthful set).
    pub fn commits_truthfully(self) -> bool {
        matches!(self, StrategyKind::Tau | StrategyKind::ApLiar(_))
    }

    pub fn base(self) -> &'static str {
        use StrategyKind::*;
        match self {
            Tau => "tau",
            Lazy(_) => "lazy",
            LazyHalt(_) => "lazyhalt",
            Flip => "flip",
            Inflate(_) => "inflate",
            Collude => "collude",
            ApLiar(_) => "apliar",
            Overclaim(_) => "overclaim",
        }
    }

    fn param(self) -> Option<u32> {
        use StrategyKind::*;
        match self {
            Lazy(p) | LazyHalt(p) | Inflate(p) | ApLiar(p) | Overclaim(p) => p,
            Tau | Flip | Collude => None,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}:{p}", self.base()),
            None => f.write_str(self.base()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use StrategyKind::*;
        let (base, param) = match s.split_once(':') {
            Some((b, p)) => {
                let p: u32 = p
                    .parse()
                    .map_err(|_| StrategyError::BadParameter(s.into()))?;
                (b, Some(p))
            }
            None => (s, None),
        };
        let kind = match base {
            "tau" => Tau,
            "lazy" => Lazy(param),
            "lazyhalt" => LazyHalt(param),
            "flip" => Flip,
            "inflate" => Inflate(param),
            "collude" => Collude,
            "apliar" => ApLiar(param),
            "overclaim" => Overclaim(param),
            _ => return Err(StrategyError::Unknown(s.into())),
        };
        if param.is_some() && kind.param().is_none() {
            return Err(StrategyError::BadParameter(s.into()));
        }
        if param == Some(0) && !matches!(kind, Inflate(_)) {
            return Err(StrategyError::BadParameter(s.into()));
        }
        Ok(kind)
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An agent: commits once, then answers queries.
pub trait Strategy: ProverOracle {
    fn kind(&self) -> StrategyKind;
    fn commit(&mut self, scheme: &HashScheme) -> Result<Commitment, StrategyError>;
    fn effort(&self) -> EffortMeter;
}

/// Preimage of the colluders' fixed root.
pub const COLLUDE_TAG: &[u8] = b"collude";

#[derive(Clone, Debug)]
pub struct Prover {
    kind: StrategyKind,
    spec: MachineSpec,
    input: String,
    dims: Dims,
    scheme: Option<HashScheme>,
    held: Option<(Trace, TableauTree)>,
    cache: RowCache,
    meter: EffortMeter,
}

impl Prover {
    pub fn new(kind: StrategyKind, spec: &MachineSpec, input: &str, dims: Dims) -> Self {
        Self {
            kind,
            spec: spec.clone(),
            input: input.into(),
            dims,
            scheme: None,
            held: None,
            cache: RowCache::default(),
            meter: EffortMeter::default(),
        }
    }

    /// The trace the prover answers from, once committed.
    pub fn trace(&self) -> Option<&Trace> {
        self.held.as_ref().map(|(t, _)| t)
    }

    fn out_of_range(&self, value: u32, t: u32) -> StrategyError {
        StrategyError::OutOfRange {
            kind: self.kind.to_string(),
            value,
            t,
        }
    }

    /// Rows `1..=i` computed honestly; fails unless the run is still going at row `i`.
    fn prefix(&mut self, i: u32) -> Result<Vec<Row>, StrategyError> {
        let rows = run_prefix(&self.spec, &self.input, self.dims, i)?;
        self.meter.add_steps(rows.len() as u64 - 1);
        let last = rows.last().expect("row 1");
        let halted = last
            .head()?
            .is_some_and(|(_, q)| self.spec.is_halting(q));
        if (rows.len() as u32) < i || halted || i == 0 {
            return Err(self.out_of_range(i, rows.len() as u32));
        }
        Ok(rows)
    }

    fn commit_rows(&mut self, scheme: &HashScheme, rows: Vec<Row>) -> Commitment {
        let trace = Trace::new(&self.spec, self.dims, rows);
        let tree = commit_any(scheme, &trace, &mut self.meter);
        let last = trace.row(trace.len());
        let c = Commitment {
            a: output_of_block(&self.spec, last.block(1, self.dims.lambda)),
            t: trace.len(),
            r: tree.root(),
        };
        self.held = Some((trace, tree));
        c
    }

    /// Row `i` with its head replaced by a halting head on cell 1.
    fn forge_halt(&self, row: &Row) -> Row {
        let mut forged = row.clone();
        for c in forged.cells_mut() {
            c.head = None;
        }
        let q = self.spec.halting_states().next().expect("a halting state");
        forged.cells_mut()[0].head = Some(q);
        forged
    }

    fn lie(&self, resp: Response) -> Response {
        match resp {
            Response::Digest { value } => Response::Digest {
                value: value.flip_bit(0),
            },
            Response::Children { left, right } => Response::Children {
                left: left.flip_bit(0),
                right,
            },
            Response::Block { mut bytes } => {
                bytes[0] = (bytes[0] + 1) % self.spec.symbols().len() as u8;
                Response::Block { bytes }
            }
            Response::Blocks { mut blocks } => {
                if let Some(b) = blocks.first_mut() {
                    b[0] = (b[0] + 1) % self.spec.symbols().len() as u8;
                }
                Response::Blocks { blocks }
            }
            Response::Absent => Response::Absent,
        }
    }

    fn blank_block(&self) -> Vec<u8> {
        let blank = self.spec.blank_cell().encode();
        blank.repeat(self.dims.lambda as usize)
    }
}

/// Symbol that replaces output symbol `s`: `0` and `1` swap; otherwise the
/// next non-blank symbol of the alphabet, or blank when there is none.
fn flipped_symbol(spec: &MachineSpec, s: u8) -> u8 {
    let c = spec.symbol_char(s);
    let swap = match c {
        '0' => spec.symbol_id('1'),
        '1' => spec.symbol_id('0'),
        _ => None,
    };
    if let Some(x) = swap {
        return x;
    }
    let n = spec.symbols().len() as u8;
    (1..n)
        .map(|d| (s + d) % n)
        .find(|&x| x != spec.blank())
        .filter(|&x| x != s)
        .unwrap_or(spec.blank())
}

impl ProverOracle for Prover {
    fn answer(&mut self, query: &Query, history: &[Query]) -> Response {
        self.meter.add_query();
        if self.kind == StrategyKind::Collude {
            return match query {
                Query::Block { .. } => Response::Block {
                    bytes: self.blank_block(),
                },
                Query::RowRoot { .. } => Response::Digest { value: Digest::ZERO },
                Query::Children { .. } => Response::Children {
                    left: Digest::ZERO,
                    right: Digest::ZERO,
                },
                Query::LastRowBlocks { rows } => Response::Blocks {
                    blocks: rows.iter().map(|_| self.blank_block()).collect(),
                },
            };
        }
        let (Some(scheme), Some((trace, tree))) = (&self.scheme, &self.held) else {
            return Response::Absent;
        };
        let honest = answer_from_tree(scheme, trace, tree, &mut self.cache, query);
        match self.kind {
            StrategyKind::ApLiar(Some(k)) if history.len() as u32 + 1 == k => self.lie(honest),
            _ => honest,
        }
    }
}

impl Strategy for Prover {
    fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn commit(&mut self, scheme: &HashScheme) -> Result<Commitment, StrategyError> {
        use StrategyKind::*;
        self.scheme = Some(scheme.clone());
        self.cache = RowCache::default();
        let lambda = self.dims.lambda;
        match self.kind {
            Tau | ApLiar(_) | Inflate(_) => {
                let (mut c, tree, tab) = commit(&self.spec, &self.input, self.dims, scheme, &mut self.meter)?;
                if let Inflate(d) = self.kind {
                    let d = d.unwrap_or(1);
                    if c.t + d > self.dims.rows {
                        return Err(self.out_of_range(d, c.t));
                    }
                    c.t += d;
                }
                self.held = Some((tab.into_trace(), tree));
                Ok(c)
            }
            Flip => {
                let (_, _, tab) = commit(&self.spec, &self.input, self.dims, scheme, &mut self.meter)?;
                let t = tab.time();
                let mut rows = tab.into_trace().rows().to_vec();
                let cell = &mut rows[t as usize - 1].cells_mut()[0];
                cell.symbol = flipped_symbol(&self.spec, cell.symbol);
                Ok(self.commit_rows(scheme, rows))
            }
            Lazy(i) => {
                let i = i.ok_or_else(|| StrategyError::BadParameter("lazy".into()))?;
                let rows = self.prefix(i)?;
                Ok(self.commit_rows(scheme, rows))
            }
            LazyHalt(i) | Overclaim(i) => {
                let i = i.ok_or_else(|| StrategyError::BadParameter(self.kind.base().into()))?;
                if i + 1 > self.dims.rows {
                    return Err(self.out_of_range(i, self.dims.rows));
                }
                let mut rows = self.prefix(i)?;
                let forged = self.forge_halt(rows.last().expect("row i"));
                rows.push(forged);
                let c = self.commit_rows(scheme, rows);
                debug_assert!(c.a.chars().count() <= lambda as usize);
                Ok(c)
            }
            Collude => Ok(Commitment {
                a: String::new(),
                t: self.dims.rows,
                r: scheme.leaf_hash(COLLUDE_TAG, &mut self.meter),
            }),
        }
    }

    fn effort(&self) -> EffortMeter {
        self.meter
    }
}

/// Mean utility of each candidate against a fixed opponent, and the
/// candidates attaining the maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub opponent: StrategyKind,
    pub utilities: Vec<(StrategyKind, f64)>,
    pub best: Vec<StrategyKind>,
}

/// Plays every candidate (as agent A) against `opponent` (as agent B) for
/// `trials` keys and reports the maximisers.
pub fn best_response_check(
    mech: &Mechanism,
    params: &PaymentParams,
    opponent: StrategyKind,
    candidates: &[StrategyKind],
    trials: u32,
    seed: u64,
) -> Result<BestResponse, GameError> {
    let mut utilities = Vec::with_capacity(candidates.len());
    for &cand in candidates {
        let mut sum = 0i64;
        for trial in 0..trials {
            let scheme = mech.key(params.n, seed, trial)?;
            sum += mech.run_game(cand, opponent, params, &scheme)?.a.utility;
        }
        utilities.push((cand, sum as f64 / trials.max(1) as f64));
    }
    let top = utilities
        .iter()
        .map(|&(_, u)| u)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = utilities
        .iter()
        .filter(|&&(_, u)| u == top)
        .map(|&(k, _)| k)
        .collect();
    Ok(BestResponse {
        opponent,
        utilities,
        best,
    })
}
