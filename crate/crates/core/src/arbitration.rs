//! The verifier's arbitration process and the bisection that locates the
//! first block on which two provers disagree.
//!
//! The verifier never sees a prover's tree; it asks questions through
//! [`ProverOracle`] and checks hash relations on the answers. Every exchange
//! is appended to a [`Transcript`]. A prover that sends a malformed answer
//! (wrong kind, wrong length, undecodable block) or no answer loses.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commitment::Commitment;
use crate::machine::{
    decode_cells, encode_cells, initial_row, local_transition, output_of_block, Cell, Dims,
    MachineError, MachineSpec, Trace,
};
use crate::merkle::{
    check_consistent_path, Digest, Grid, HashCounter, HashScheme, Link, NodeAddress, PathBundle,
    RowCache, TableauTree,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Agent {
    A,
    B,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::A, Agent::B];

    pub fn index(self) -> usize {
        match self {
            Agent::A => 0,
            Agent::B => 1,
        }
    }

    pub fn other(self) -> Agent {
        match self {
            Agent::A => Agent::B,
            Agent::B => Agent::A,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    /// Data block `b_ij`.
    Block { i: u32, j: u32 },
    /// Row root `r_i`.
    RowRoot { i: u32 },
    /// Both children of an internal node.
    Children { node: NodeAddress },
    /// Block 1 of each listed row.
    LastRowBlocks { rows: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Block {
        #[serde(with = "crate::merkle::hex_bytes")]
        bytes: Vec<u8>,
    },
    Digest {
        value: Digest,
    },
    Children {
        left: Digest,
        right: Digest,
    },
    Blocks {
        #[serde(with = "hex_list")]
        blocks: Vec<Vec<u8>>,
    },
    Absent,
}

impl Response {
    fn payload_len(&self) -> usize {
        match self {
            Response::Block { bytes } => bytes.len(),
            Response::Digest { .. } => 32,
            Response::Children { .. } => 64,
            Response::Blocks { blocks } => blocks.iter().map(Vec::len).sum(),
            Response::Absent => 0,
        }
    }
}

mod hex_list {
    use alloc::string::String;
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(blocks: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = blocks.iter().map(hex::encode).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.into_iter()
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// One exchange. A side that was not asked has no response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u32,
    pub query: Query,
    pub a_response: Option<Response>,
    pub b_response: Option<Response>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<Record>,
    /// Response payload bytes from both agents.
    pub bytes: u64,
}

impl Transcript {
    pub fn queries(&self) -> usize {
        self.records.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub winner_a: bool,
    pub winner_b: bool,
}

impl Verdict {
    pub fn new(winner_a: bool, winner_b: bool) -> Self {
        Self { winner_a, winner_b }
    }

    pub fn winner(&self, agent: Agent) -> bool {
        match agent {
            Agent::A => self.winner_a,
            Agent::B => self.winner_b,
        }
    }

    fn from_pair(ok: [bool; 2]) -> Self {
        Self::new(ok[0], ok[1])
    }

    /// `agent` wins, the other loses.
    fn only(agent: Agent) -> Self {
        Self::new(agent == Agent::A, agent == Agent::B)
    }
}

/// Where the arbitration was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// A commitment was out of range before any query.
    MalformedCommitment,
    /// An agent answered with the wrong kind or size of value, or not at all.
    Forfeit,
    /// A last-row block failed its path check against `r`.
    LastRowPath,
    /// The smaller reported last row has no halting state.
    ShortRowNotHalting,
    /// The larger reporter halts early or not at its reported row.
    LongRowMisplacedHalt,
    /// Row roots agree; decided on the row-root-to-block path and output.
    RowRootPath,
    /// Row roots differ; decided on the root-to-row-root path.
    UpperPath,
    /// The bisection caught one or both agents hashing inconsistently.
    Liars,
    /// The first divergent block is in row 1 and was checked against the input.
    InputCheck,
    /// The predecessor window agreed; checked by recomputing the block.
    Transition,
    /// The predecessor window disagreed; decided on that block's path.
    PredecessorPath,
    /// The agreed predecessor window is not a valid configuration.
    InvalidPredecessor,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ArbitrationError {
    #[error("commitments are identical; arbitration is not needed")]
    IdenticalCommitments,
}

/// A prover as seen by the verifier.
pub trait ProverOracle {
    /// Answers `query`; `history` holds the queries this prover was sent before.
    fn answer(&mut self, query: &Query, history: &[Query]) -> Response;
}

impl<T: ProverOracle + ?Sized> ProverOracle for &mut T {
    fn answer(&mut self, query: &Query, history: &[Query]) -> Response {
        (**self).answer(query, history)
    }
}

/// Truthful answer from a tree and the trace it was built over.
pub fn answer_from_tree(
    scheme: &HashScheme,
    trace: &Trace,
    tree: &TableauTree,
    cache: &mut RowCache,
    query: &Query,
) -> Response {
    let dims = trace.dims();
    let in_grid = |i: u32, j: u32| (1..=dims.rows).contains(&i) && (1..=dims.blocks()).contains(&j);
    match query {
        Query::Block { i, j } if in_grid(*i, *j) => Response::Block {
            bytes: trace.block_bytes(*i, *j),
        },
        Query::RowRoot { i } if in_grid(*i, 1) => Response::Digest {
            value: tree.row_root(*i),
        },
        Query::Children { node } if node.len() < Grid::new(dims).depth() => Response::Children {
            left: cache.node(scheme, trace, tree, &node.left()),
            right: cache.node(scheme, trace, tree, &node.right()),
        },
        Query::LastRowBlocks { rows } if rows.iter().all(|&i| in_grid(i, 1)) => Response::Blocks {
            blocks: rows.iter().map(|&i| trace.block_bytes(i, 1)).collect(),
        },
        _ => Response::Absent,
    }
}

/// An honest prover over borrowed data.
#[derive(Debug)]
pub struct TreeOracle<'a> {
    scheme: &'a HashScheme,
    trace: &'a Trace,
    tree: &'a TableauTree,
    cache: RowCache,
}

impl<'a> TreeOracle<'a> {
    pub fn new(scheme: &'a HashScheme, trace: &'a Trace, tree: &'a TableauTree) -> Self {
        Self {
            scheme,
            trace,
            tree,
            cache: RowCache::default(),
        }
    }
}

impl ProverOracle for TreeOracle<'_> {
    fn answer(&mut self, query: &Query, _history: &[Query]) -> Response {
        answer_from_tree(self.scheme, self.trace, self.tree, &mut self.cache, query)
    }
}

/// What the verifier knows: the program, its input, the tableau shape and the key.
#[derive(Clone, Copy, Debug)]
pub struct Context<'a> {
    pub spec: &'a MachineSpec,
    pub input: &'a str,
    pub dims: Dims,
    pub scheme: &'a HashScheme,
}

impl Context<'_> {
    fn grid(&self) -> Grid {
        Grid::new(self.dims)
    }

    fn depth(&self) -> u32 {
        self.grid().depth()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arbitration {
    pub verdict: Verdict,
    pub branch: Branch,
    pub transcript: Transcript,
    /// Hash evaluations made by the verifier.
    pub verifier_hashes: HashCounter,
    /// Agents that broke the response format or the commitment format.
    pub violations: Vec<Agent>,
}

/// Outcome of the bisection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Divergence {
    /// Agents whose answers were hash-inconsistent or malformed.
    Liars(Vec<Agent>),
    /// First block on which the agents disagree, with both versions.
    Block {
        i: u32,
        j: u32,
        a: Vec<u8>,
        b: Vec<u8>,
    },
}

struct Session<'c, 'o> {
    ctx: Context<'c>,
    oracles: [&'o mut dyn ProverOracle; 2],
    history: [Vec<Query>; 2],
    transcript: Transcript,
    hashes: HashCounter,
    violations: Vec<Agent>,
}

impl<'c, 'o> Session<'c, 'o> {
    fn new(ctx: Context<'c>, a: &'o mut dyn ProverOracle, b: &'o mut dyn ProverOracle) -> Self {
        Self {
            ctx,
            oracles: [a, b],
            history: [Vec::new(), Vec::new()],
            transcript: Transcript::default(),
            hashes: HashCounter::default(),
            violations: Vec::new(),
        }
    }

    /// Sends `query` to the listed agents and records the exchange.
    fn ask(&mut self, to: &[Agent], query: Query) -> [Option<Response>; 2] {
        let mut out = [None, None];
        for &agent in to {
            let k = agent.index();
            let resp = self.oracles[k].answer(&query, &self.history[k]);
            self.history[k].push(query.clone());
            self.transcript.bytes += resp.payload_len() as u64;
            out[k] = Some(resp);
        }
        self.transcript.records.push(Record {
            seq: self.transcript.records.len() as u32,
            query,
            a_response: out[0].clone(),
            b_response: out[1].clone(),
        });
        out
    }

    fn violation(&mut self, agent: Agent) {
        if !self.violations.contains(&agent) {
            self.violations.push(agent);
        }
    }

    fn block_of(&self, resp: Option<Response>) -> Option<Vec<u8>> {
        match resp? {
            Response::Block { bytes } if self.valid_block(&bytes) => Some(bytes),
            _ => None,
        }
    }

    fn valid_block(&self, bytes: &[u8]) -> bool {
        bytes.len() == self.ctx.dims.block_bytes() && decode_cells(self.ctx.spec, bytes).is_ok()
    }

    fn digest_of(resp: Option<Response>) -> Option<Digest> {
        match resp? {
            Response::Digest { value } => Some(value),
            _ => None,
        }
    }

    fn children_of(resp: Option<Response>) -> Option<(Digest, Digest)> {
        match resp? {
            Response::Children { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// Checks the path `u → v` for each listed agent. `tops` are the values the
    /// agents gave for `u`; `blocks` optionally supplies data blocks already
    /// received for a block address `v`. Malformed answers fail the check.
    fn check_paths(
        &mut self,
        to: &[Agent],
        u: NodeAddress,
        v: NodeAddress,
        tops: [Digest; 2],
        blocks: [Option<Vec<u8>>; 2],
        bottoms: [Option<Digest>; 2],
    ) -> [bool; 2] {
        let depth = self.ctx.depth();
        let grid = self.ctx.grid();
        let mut links: [Vec<Link>; 2] = [Vec::new(), Vec::new()];
        let mut broken = [false; 2];
        let mut active: Vec<Agent> = to.to_vec();
        for len in u.len()..=v.len().min(depth) {
            if active.is_empty() {
                break;
            }
            let w = v.prefix(len);
            if len < depth {
                let resp = self.ask(&active, Query::Children { node: w });
                for agent in active.clone() {
                    let k = agent.index();
                    match Self::children_of(resp[k].clone()) {
                        Some((l, r)) => links[k].push(Link::Node(l, r)),
                        None => broken[k] = true,
                    }
                }
            } else {
                let (i, j) = grid.coords_of(&w).expect("leaf depth");
                let need: Vec<Agent> = active
                    .iter()
                    .copied()
                    .filter(|a| blocks[a.index()].is_none())
                    .collect();
                let resp = if need.is_empty() {
                    [None, None]
                } else {
                    self.ask(&need, Query::Block { i, j })
                };
                for agent in active.clone() {
                    let k = agent.index();
                    let bytes = match &blocks[k] {
                        Some(b) => Some(b.clone()),
                        None => self.block_of(resp[k].clone()),
                    };
                    match bytes {
                        Some(b) => links[k].push(Link::Block(b)),
                        None => broken[k] = true,
                    }
                }
            }
            for agent in active.clone() {
                if broken[agent.index()] {
                    self.violation(agent);
                }
            }
            active.retain(|a| !broken[a.index()]);
        }

        let mut ok = [false; 2];
        for &agent in to {
            let k = agent.index();
            if broken[k] {
                continue;
            }
            // The path must also arrive at the value the agent claimed for `v`.
            if let Some(want) = bottoms[k] {
                let at_v = v
                    .len()
                    .checked_sub(u.len() + 1)
                    .and_then(|ix| links[k].get(ix as usize))
                    .map(|link| match link {
                        Link::Node(l, r) => Some(if v.bit(v.len() - 1) { *r } else { *l }),
                        Link::Block(_) => None,
                    });
                let got = if v == u { Some(Some(tops[k])) } else { at_v };
                if got != Some(Some(want)) {
                    continue;
                }
            }
            let bundle = PathBundle {
                top: tops[k],
                links: core::mem::take(&mut links[k]),
            };
            ok[k] = check_consistent_path(self.ctx.scheme, &bundle, &u, &v, depth, &mut self.hashes)
                .unwrap_or(false);
        }
        ok
    }

    fn finish(self, verdict: Verdict, branch: Branch) -> Arbitration {
        Arbitration {
            verdict,
            branch,
            transcript: self.transcript,
            verifier_hashes: self.hashes,
            violations: self.violations,
        }
    }

    /// Ends the game if any listed response is unusable: the offenders lose.
    fn forfeit<T>(&mut self, parsed: &[Option<T>; 2], asked: &[Agent]) -> Option<Verdict> {
        let bad: Vec<Agent> = asked
            .iter()
            .copied()
            .filter(|a| parsed[a.index()].is_none())
            .collect();
        if bad.is_empty() {
            return None;
        }
        for &a in &bad {
            self.violation(a);
        }
        Some(Verdict::new(!bad.contains(&Agent::A), !bad.contains(&Agent::B)))
    }

    fn first_divergence(&mut self, va: Digest, vb: Digest, v: NodeAddress) -> Divergence {
        let depth = self.ctx.depth();
        let grid = self.ctx.grid();
        let mut values = [va, vb];
        let mut node = v;
        loop {
            if node.len() == depth {
                let (i, j) = grid.coords_of(&node).expect("leaf depth");
                let resp = self.ask(&Agent::BOTH, Query::Block { i, j });
                let blocks = [
                    self.block_of(resp[0].clone()),
                    self.block_of(resp[1].clone()),
                ];
                let mut liars = Vec::new();
                for agent in Agent::BOTH {
                    let k = agent.index();
                    let ok = match &blocks[k] {
                        Some(b) => self.ctx.scheme.leaf_hash(b, &mut self.hashes) == values[k],
                        None => {
                            self.violation(agent);
                            false
                        }
                    };
                    if !ok {
                        liars.push(agent);
                    }
                }
                if !liars.is_empty() {
                    return Divergence::Liars(liars);
                }
                let [Some(a), Some(b)] = blocks else {
                    unreachable!("both blocks parsed")
                };
                return Divergence::Block { i, j, a, b };
            }

            let resp = self.ask(&Agent::BOTH, Query::Children { node });
            let kids = [
                Self::children_of(resp[0].clone()),
                Self::children_of(resp[1].clone()),
            ];
            let mut liars = Vec::new();
            for agent in Agent::BOTH {
                let k = agent.index();
                let ok = match kids[k] {
                    Some((l, r)) => self.ctx.scheme.node_hash(&l, &r, &mut self.hashes) == values[k],
                    None => {
                        self.violation(agent);
                        false
                    }
                };
                if !ok {
                    liars.push(agent);
                }
            }
            if !liars.is_empty() {
                return Divergence::Liars(liars);
            }
            let [Some((la, ra)), Some((lb, rb))] = kids else {
                unreachable!("both children parsed")
            };
            if la != lb {
                node = node.left();
                values = [la, lb];
            } else if ra != rb {
                node = node.right();
                values = [ra, rb];
            } else {
                // Equal children under different parents: only a hash
                // collision gets here.
                return Divergence::Liars(Agent::BOTH.to_vec());
            }
        }
    }
}

/// True iff some cell of the block carries a halting state.
pub fn check_halting_block(spec: &MachineSpec, bytes: &[u8]) -> Result<bool, MachineError> {
    Ok(decode_cells(spec, bytes)?
        .iter()
        .any(|c| c.head.is_some_and(|q| spec.is_halting(q))))
}

/// True iff `bytes` is block `j` of the canonical first row for `input`.
pub fn verify_input_block(spec: &MachineSpec, input: &str, j: u32, bytes: &[u8], dims: Dims) -> bool {
    let Ok(symbols) = spec.encode_input(input) else {
        return false;
    };
    let Ok(row) = initial_row(spec, &symbols, dims.cols) else {
        return false;
    };
    j >= 1 && j <= dims.blocks() && row.block_bytes(j, dims.lambda) == bytes
}

/// True iff the block is an output block for `a`: halting head on cell 1 and
/// the symbols spell `a` followed by blanks.
pub fn check_output_block(spec: &MachineSpec, bytes: &[u8], a: &str) -> bool {
    let Ok(cells) = decode_cells(spec, bytes) else {
        return false;
    };
    let head_ok = cells
        .first()
        .and_then(|c| c.head)
        .is_some_and(|q| spec.is_halting(q))
        && cells[1..].iter().all(|c| c.head.is_none());
    head_ok && output_of_block(spec, &cells) == a
}

/// Range check made before any query: `t ∈ [1, T]` and `a` fits in one block
/// over the machine's alphabet.
pub fn commitment_is_well_formed(spec: &MachineSpec, dims: Dims, c: &Commitment) -> bool {
    (1..=dims.rows).contains(&c.t)
        && c.a.chars().count() <= dims.lambda as usize
        && c.a.chars().all(|ch| spec.symbol_id(ch).is_some())
}

/// Runs the bisection alone, starting from node `v` with values `va ≠ vb`.
pub fn first_divergence(
    ctx: Context<'_>,
    oracle_a: &mut dyn ProverOracle,
    oracle_b: &mut dyn ProverOracle,
    va: Digest,
    vb: Digest,
    v: NodeAddress,
) -> (Divergence, Transcript) {
    let mut s = Session::new(ctx, oracle_a, oracle_b);
    let d = s.first_divergence(va, vb, v);
    (d, s.transcript)
}

/// Settles a disagreement between two commitments.
pub fn arbitrate(
    ctx: Context<'_>,
    commit_a: &Commitment,
    commit_b: &Commitment,
    oracle_a: &mut dyn ProverOracle,
    oracle_b: &mut dyn ProverOracle,
) -> Result<Arbitration, ArbitrationError> {
    if commit_a == commit_b {
        return Err(ArbitrationError::IdenticalCommitments);
    }
    let mut s = Session::new(ctx, oracle_a, oracle_b);
    let commits = [commit_a, commit_b];

    let sane = [
        commitment_is_well_formed(ctx.spec, ctx.dims, commit_a),
        commitment_is_well_formed(ctx.spec, ctx.dims, commit_b),
    ];
    if sane != [true, true] {
        for agent in Agent::BOTH {
            if !sane[agent.index()] {
                s.violation(agent);
            }
        }
        return Ok(s.finish(Verdict::from_pair(sane), Branch::MalformedCommitment));
    }

    let (verdict, branch) = if commit_a.r == commit_b.r {
        same_root(&mut s, commits)
    } else {
        diverging(&mut s, commits)
    };
    Ok(s.finish(verdict, branch))
}

fn same_root(s: &mut Session<'_, '_>, c: [&Commitment; 2]) -> (Verdict, Branch) {
    let ctx = s.ctx;
    let grid = ctx.grid();
    let root = c[0].r;
    let t = if c[0].t != c[1].t {
        let (long, short) = if c[0].t > c[1].t {
            (Agent::A, Agent::B)
        } else {
            (Agent::B, Agent::A)
        };
        let (t_small, t_big) = (c[short.index()].t, c[long.index()].t);
        let resp = s.ask(
            &Agent::BOTH,
            Query::LastRowBlocks {
                rows: vec![t_small, t_big],
            },
        );
        let parsed: [Option<Vec<Vec<u8>>>; 2] = [0, 1].map(|k| match resp[k].clone() {
            Some(Response::Blocks { blocks })
                if blocks.len() == 2 && blocks.iter().all(|b| s.valid_block(b)) =>
            {
                Some(blocks)
            }
            _ => None,
        });
        if let Some(v) = s.forfeit(&parsed, &Agent::BOTH) {
            return (v, Branch::Forfeit);
        }
        let [Some(pa), Some(pb)] = parsed else { unreachable!() };
        let blocks = [pa, pb];

        // Every block the decision rests on is proven against r first.
        let v_small = grid.block_address(t_small, 1).expect("t in range");
        let ok_small = s.check_paths(
            &Agent::BOTH,
            NodeAddress::ROOT,
            v_small,
            [root, root],
            [Some(blocks[0][0].clone()), Some(blocks[1][0].clone())],
            [None, None],
        );
        let mut ok = ok_small;
        if ok[long.index()] {
            let v_big = grid.block_address(t_big, 1).expect("t in range");
            let mut supplied = [None, None];
            supplied[long.index()] = Some(blocks[long.index()][1].clone());
            let ok_big =
                s.check_paths(&[long], NodeAddress::ROOT, v_big, [root, root], supplied, [None, None]);
            ok[long.index()] = ok_big[long.index()];
        }
        if ok != [true, true] {
            return (Verdict::from_pair(ok), Branch::LastRowPath);
        }

        let halts = |b: &[u8]| check_halting_block(ctx.spec, b).unwrap_or(false);
        if !halts(&blocks[short.index()][0]) {
            return (Verdict::only(long), Branch::ShortRowNotHalting);
        }
        let lb = &blocks[long.index()];
        if halts(&lb[0]) || !halts(&lb[1]) {
            return (Verdict::only(short), Branch::LongRowMisplacedHalt);
        }
        t_small
    } else {
        c[0].t
    };

    let resp = s.ask(&Agent::BOTH, Query::RowRoot { i: t });
    let roots = [
        Session::digest_of(resp[0].clone()),
        Session::digest_of(resp[1].clone()),
    ];
    if let Some(v) = s.forfeit(&roots, &Agent::BOTH) {
        return (v, Branch::Forfeit);
    }
    let [Some(ra), Some(rb)] = roots else { unreachable!() };
    let row = grid.row_address(t).expect("t in range");

    if ra == rb {
        let leaf_block = grid.block_address(t, 1).expect("t in range");
        let mut ok = s.check_paths(&Agent::BOTH, row, leaf_block, [ra, rb], [None, None], [None, None]);
        // The block proven under r_t must be an output row spelling a.
        let block_resp: Vec<Option<Vec<u8>>> = s
            .transcript
            .records
            .last()
            .filter(|r| matches!(r.query, Query::Block { .. }))
            .map(|r| {
                vec![
                    s.block_of(r.a_response.clone()),
                    s.block_of(r.b_response.clone()),
                ]
            })
            .unwrap_or_default();
        for agent in Agent::BOTH {
            let k = agent.index();
            if ok[k] && c[k].t == t {
                let spelled = block_resp
                    .get(k)
                    .cloned()
                    .flatten()
                    .is_some_and(|b| check_output_block(ctx.spec, &b, &c[k].a));
                ok[k] = spelled;
            }
        }
        (Verdict::from_pair(ok), Branch::RowRootPath)
    } else {
        let ok = s.check_paths(
            &Agent::BOTH,
            NodeAddress::ROOT,
            row,
            [root, root],
            [None, None],
            [Some(ra), Some(rb)],
        );
        (Verdict::from_pair(ok), Branch::UpperPath)
    }
}

fn diverging(s: &mut Session<'_, '_>, c: [&Commitment; 2]) -> (Verdict, Branch) {
    let ctx = s.ctx;
    let (i, j, blocks) = match s.first_divergence(c[0].r, c[1].r, NodeAddress::ROOT) {
        Divergence::Liars(liars) => {
            let v = Verdict::new(!liars.contains(&Agent::A), !liars.contains(&Agent::B));
            return (v, Branch::Liars);
        }
        Divergence::Block { i, j, a, b } => (i, j, [a, b]),
    };

    if i == 1 {
        let ok = blocks
            .clone()
            .map(|b| verify_input_block(ctx.spec, ctx.input, j, &b, ctx.dims));
        return (Verdict::from_pair(ok), Branch::InputCheck);
    }

    let blocks_per_row = ctx.dims.blocks();
    let cols: Vec<u32> = (j.saturating_sub(1).max(1)..=(j + 1).min(blocks_per_row)).collect();
    let mut window: [Vec<Vec<u8>>; 2] = [Vec::new(), Vec::new()];
    for &col in &cols {
        let resp = s.ask(&Agent::BOTH, Query::Block { i: i - 1, j: col });
        let parsed = [s.block_of(resp[0].clone()), s.block_of(resp[1].clone())];
        if let Some(v) = s.forfeit(&parsed, &Agent::BOTH) {
            return (v, Branch::Forfeit);
        }
        let [Some(a), Some(b)] = parsed else { unreachable!() };
        window[0].push(a);
        window[1].push(b);
    }

    if let Some(k) = (0..cols.len()).find(|&k| window[0][k] != window[1][k]) {
        let col = cols[k];
        let v = ctx.grid().block_address(i - 1, col).expect("in range");
        let ok = s.check_paths(
            &Agent::BOTH,
            NodeAddress::ROOT,
            v,
            [c[0].r, c[1].r],
            [Some(window[0][k].clone()), Some(window[1][k].clone())],
            [None, None],
        );
        return (Verdict::from_pair(ok), Branch::PredecessorPath);
    }

    let cells: Vec<Vec<Cell>> = window[0]
        .iter()
        .map(|b| decode_cells(ctx.spec, b).expect("validated"))
        .collect();
    let at = |col: u32| cols.iter().position(|&x| x == col).map(|k| cells[k].as_slice());
    let view = [
        if j > 1 { at(j - 1) } else { None },
        at(j),
        if j < blocks_per_row { at(j + 1) } else { None },
    ];
    match local_transition(ctx.spec, view, j, blocks_per_row) {
        Ok(expected) => {
            let expected = encode_cells(&expected);
            let ok = blocks.map(|b| b == expected);
            (Verdict::from_pair(ok), Branch::Transition)
        }
        Err(_) => (Verdict::new(false, false), Branch::InvalidPredecessor),
    }
}

/// Human-readable one-liner for a query.
pub fn describe(query: &Query) -> String {
    match query {
        Query::Block { i, j } => alloc::format!("block({i},{j})"),
        Query::RowRoot { i } => alloc::format!("row_root({i})"),
        Query::Children { node } => alloc::format!("children('{node}')"),
        Query::LastRowBlocks { rows } => alloc::format!("last_row_blocks({rows:?})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitment::{commit, commit_any, EffortMeter};
    use crate::fixtures::{self, Fixture};
    use crate::machine::{run_tableau, Row, Tableau};
    use crate::merkle::{gen_key, HashAlgorithm};

    struct Setup {
        spec: MachineSpec,
        fx: Fixture,
        scheme: HashScheme,
        tab: Tableau,
    }

    fn setup(fx: Fixture, seed: u64) -> Setup {
        let spec = fx.spec();
        let tab = run_tableau(&spec, fx.input(), fx.dims()).unwrap();
        Setup {
            spec,
            fx,
            scheme: gen_key(32, seed, HashAlgorithm::Sha256).unwrap(),
            tab,
        }
    }

    impl Setup {
        fn ctx(&self) -> Context<'_> {
            Context {
                spec: &self.spec,
                input: self.fx.input(),
                dims: self.fx.dims(),
                scheme: &self.scheme,
            }
        }

        fn trace_with(&self, f: impl FnOnce(&mut Vec<Row>)) -> Trace {
            let mut rows = self.tab.trace().rows().to_vec();
            f(&mut rows);
            Trace::new(&self.spec, self.fx.dims(), rows)
        }

        fn tree(&self, trace: &Trace) -> TableauTree {
            commit_any(&self.scheme, trace, &mut ())
        }

        fn bound(&self) -> usize {
            6 * Grid::new(self.fx.dims()).depth() as usize + 12
        }
    }

    /// Honest answers except where `tamper` rewrites them.
    struct Tampered<'a, F: FnMut(&Query, Response) -> Response> {
        inner: TreeOracle<'a>,
        tamper: F,
    }

    impl<F: FnMut(&Query, Response) -> Response> ProverOracle for Tampered<'_, F> {
        fn answer(&mut self, query: &Query, history: &[Query]) -> Response {
            let r = self.inner.answer(query, history);
            (self.tamper)(query, r)
        }
    }

    fn flip_output(spec: &MachineSpec, rows: &mut [Row], t: u32) {
        let row = &mut rows[t as usize - 1];
        let c = &mut row.cells_mut()[0];
        c.symbol = (c.symbol + 1) % spec.symbols().len() as u8;
    }

    #[test]
    fn honest_beats_consistent_wrong_output() {
        for fx in fixtures::all() {
            let st = setup(fx, 1);
            let t = st.tab.time();
            let bad = st.trace_with(|rows| flip_output(&st.spec, rows, t));
            let good_tree = st.tree(st.tab.trace());
            let bad_tree = st.tree(&bad);
            let ca = Commitment { a: st.tab.output().into(), t, r: good_tree.root() };
            let block = bad.row(t).block(1, fx.dims().lambda).to_vec();
            let cb = Commitment { a: output_of_block(&st.spec, &block), t, r: bad_tree.root() };
            let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
            let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
            let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
            assert_eq!(res.verdict, Verdict::new(true, false), "{}", fx.name());
            assert_eq!(res.branch, Branch::Transition);
            assert!(res.transcript.queries() <= st.bound());
            // Sides swapped.
            let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
            let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
            let res = arbitrate(st.ctx(), &cb, &ca, &mut ob, &mut oa).unwrap();
            assert_eq!(res.verdict, Verdict::new(false, true));
        }
    }

    #[test]
    fn identical_commitments_are_rejected() {
        let st = setup(fixtures::unary_increment(), 2);
        let tree = st.tree(st.tab.trace());
        let c = Commitment { a: "1111".into(), t: 5, r: tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        assert_eq!(
            arbitrate(st.ctx(), &c, &c, &mut oa, &mut ob),
            Err(ArbitrationError::IdenticalCommitments)
        );
    }

    #[test]
    fn inflated_time_loses_at_misplaced_halt() {
        for fx in fixtures::all() {
            let st = setup(fx, 3);
            let tree = st.tree(st.tab.trace());
            let t = st.tab.time();
            let a = st.tab.output().to_string();
            let ca = Commitment { a: a.clone(), t: t + 2, r: tree.root() };
            let cb = Commitment { a, t, r: tree.root() };
            let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
            let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
            let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
            assert_eq!(res.verdict, Verdict::new(false, true));
            assert_eq!(res.branch, Branch::LongRowMisplacedHalt);
            assert!(res.transcript.queries() <= st.bound());
        }
    }

    #[test]
    fn deflated_time_loses_on_short_row() {
        let st = setup(fixtures::binary_add(), 4);
        let tree = st.tree(st.tab.trace());
        let t = st.tab.time();
        let ca = Commitment { a: st.tab.output().into(), t, r: tree.root() };
        let cb = Commitment { a: st.tab.output().into(), t: t - 3, r: tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::ShortRowNotHalting));
    }

    #[test]
    fn wrong_output_with_honest_tree_loses_on_output_check() {
        let st = setup(fixtures::palindrome_check(), 5);
        let tree = st.tree(st.tab.trace());
        let t = st.tab.time();
        let ca = Commitment { a: "1".into(), t, r: tree.root() };
        let cb = Commitment { a: "0".into(), t, r: tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::RowRootPath));
    }

    #[test]
    fn lying_about_the_row_root_loses_on_upper_path() {
        let st = setup(fixtures::palindrome_check(), 6);
        let tree = st.tree(st.tab.trace());
        let t = st.tab.time();
        let ca = Commitment { a: "1".into(), t, r: tree.root() };
        let cb = Commitment { a: "0".into(), t, r: tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = Tampered {
            inner: TreeOracle::new(&st.scheme, st.tab.trace(), &tree),
            tamper: |q: &Query, r: Response| match (q, r) {
                (Query::RowRoot { .. }, Response::Digest { value }) => Response::Digest { value: value.flip_bit(3) },
                (_, r) => r,
            },
        };
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::UpperPath));
    }

    #[test]
    fn forged_root_is_caught_at_the_top() {
        let st = setup(fixtures::unary_increment(), 7);
        let tree = st.tree(st.tab.trace());
        let ca = Commitment { a: "1111".into(), t: 5, r: tree.root() };
        let cb = Commitment { a: "1111".into(), t: 5, r: tree.root().flip_bit(0) };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::Liars));
        assert_eq!(res.transcript.queries(), 1);
    }

    #[test]
    fn bad_input_row_is_caught() {
        let st = setup(fixtures::binary_add(), 8);
        let bad = st.trace_with(|rows| rows[0].cells_mut()[2].symbol = st.spec.symbol_id('1').unwrap());
        // Only row 1 is altered; every later row is kept from the honest run.
        let good_tree = st.tree(st.tab.trace());
        let bad_tree = st.tree(&bad);
        let c = Commitment { a: st.tab.output().into(), t: st.tab.time(), r: good_tree.root() };
        let cb = Commitment { r: bad_tree.root(), ..c.clone() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
        let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
        let res = arbitrate(st.ctx(), &c, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::InputCheck));
    }

    #[test]
    fn lying_about_predecessor_loses_on_its_path() {
        let st = setup(fixtures::palindrome_check(), 9);
        let t = st.tab.time();
        let bad = st.trace_with(|rows| flip_output(&st.spec, rows, t));
        let good_tree = st.tree(st.tab.trace());
        let bad_tree = st.tree(&bad);
        let ca = Commitment { a: "1".into(), t, r: good_tree.root() };
        let cb = Commitment { a: "0".into(), t, r: bad_tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
        // B rewrites the predecessor window so its own block looks right.
        let mut ob = Tampered {
            inner: TreeOracle::new(&st.scheme, &bad, &bad_tree),
            tamper: move |q: &Query, r: Response| match (q, r) {
                (Query::Block { i, .. }, Response::Block { mut bytes }) if *i == t - 1 => {
                    bytes[2] ^= 1;
                    Response::Block { bytes }
                }
                (_, r) => r,
            },
        };
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::PredecessorPath));
        assert!(res.transcript.queries() <= st.bound());
    }

    #[test]
    fn malformed_and_absent_answers_forfeit() {
        let st = setup(fixtures::unary_increment(), 10);
        let t = st.tab.time();
        let bad = st.trace_with(|rows| flip_output(&st.spec, rows, t));
        let good_tree = st.tree(st.tab.trace());
        let bad_tree = st.tree(&bad);
        let ca = Commitment { a: "1111".into(), t, r: good_tree.root() };
        let cb = Commitment { a: "_111".into(), t, r: bad_tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
        let mut ob = Tampered {
            inner: TreeOracle::new(&st.scheme, &bad, &bad_tree),
            tamper: |_: &Query, _: Response| Response::Absent,
        };
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!(res.verdict, Verdict::new(true, false));
        assert_eq!(res.violations, vec![Agent::B]);

        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
        let mut ob = Tampered {
            inner: TreeOracle::new(&st.scheme, &bad, &bad_tree),
            tamper: |_: &Query, r: Response| match r {
                Response::Block { mut bytes } => {
                    bytes.push(0);
                    Response::Block { bytes }
                }
                r => r,
            },
        };
        let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
        assert_eq!(res.verdict, Verdict::new(true, false));
        assert_eq!(res.violations, vec![Agent::B]);
    }

    #[test]
    fn out_of_range_commitment_loses_without_queries() {
        let st = setup(fixtures::unary_increment(), 11);
        let tree = st.tree(st.tab.trace());
        let ca = Commitment { a: "1111".into(), t: 5, r: tree.root() };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        for cb in [
            Commitment { t: 0, ..ca.clone() },
            Commitment { t: 17, ..ca.clone() },
            Commitment { a: "111111111".into(), ..ca.clone() },
            Commitment { a: "11x".into(), ..ca.clone() },
        ] {
            let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
            assert_eq!((res.verdict, res.branch), (Verdict::new(true, false), Branch::MalformedCommitment));
            assert_eq!(res.transcript.queries(), 0);
        }
    }

    #[test]
    fn halting_and_input_block_checks() {
        let st = setup(fixtures::palindrome_check(), 12);
        let dims = st.fx.dims();
        let t = st.tab.time();
        assert!(check_halting_block(&st.spec, &st.tab.trace().block_bytes(t, 1)).unwrap());
        assert!(!check_halting_block(&st.spec, &st.tab.trace().block_bytes(t + 1, 1)).unwrap());
        assert!(!check_halting_block(&st.spec, &st.tab.trace().block_bytes(t - 1, 1)).unwrap());
        assert!(check_halting_block(&st.spec, &[0xff; 16]).is_err());

        let honest = st.tab.trace().block_bytes(1, 1);
        assert!(verify_input_block(&st.spec, "abba", 1, &honest, dims));
        assert!(verify_input_block(&st.spec, "abba", 2, &st.tab.trace().block_bytes(1, 2), dims));
        let mut altered = honest.clone();
        altered[2] = st.spec.symbol_id('a').unwrap();
        assert!(!verify_input_block(&st.spec, "abba", 1, &altered, dims));
        let mut moved = honest.clone();
        moved[3] = moved[1];
        moved[1] = 0;
        assert!(!verify_input_block(&st.spec, "abba", 1, &moved, dims));
        assert!(check_output_block(&st.spec, &st.tab.trace().block_bytes(t, 1), "1"));
        assert!(!check_output_block(&st.spec, &st.tab.trace().block_bytes(t, 1), "0"));
    }

    /// Row-major scan for the first block on which two traces differ.
    fn linear_scan(a: &Trace, b: &Trace) -> Option<(u32, u32)> {
        let dims = a.dims();
        (1..=dims.rows)
            .flat_map(|i| (1..=dims.blocks()).map(move |j| (i, j)))
            .find(|&(i, j)| a.block_bytes(i, j) != b.block_bytes(i, j))
    }

    #[test]
    fn first_divergence_matches_linear_scan() {
        for fx in fixtures::all() {
            let st = setup(fx, 13);
            let dims = fx.dims();
            let good_tree = st.tree(st.tab.trace());
            for (i, j) in [(5, 2), (1, 1), (dims.rows, dims.blocks()), (2, 1)] {
                let bad = st.trace_with(|rows| {
                    rows.resize(dims.rows as usize, Row::blank(&st.spec, dims.cols));
                    let k = (j as usize - 1) * dims.lambda as usize;
                    let c = &mut rows[i as usize - 1].cells_mut()[k];
                    c.symbol = (c.symbol + 1) % st.spec.symbols().len() as u8;
                });
                let bad_tree = st.tree(&bad);
                let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
                let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
                let (d, tr) = first_divergence(st.ctx(), &mut oa, &mut ob, good_tree.root(), bad_tree.root(), NodeAddress::ROOT);
                let Divergence::Block { i: fi, j: fj, .. } = d else { panic!("{d:?}") };
                assert_eq!(Some((fi, fj)), linear_scan(st.tab.trace(), &bad));
                assert_eq!((fi, fj), (i, j));
                assert_eq!(tr.queries() as u32, Grid::new(dims).depth() + 1);
            }
        }
    }

    #[test]
    fn first_divergence_names_inconsistent_agents() {
        let st = setup(fixtures::binary_add(), 14);
        let tree = st.tree(st.tab.trace());
        let bad = st.trace_with(|rows| flip_output(&st.spec, rows, st.tab.time()));
        let bad_tree = st.tree(&bad);
        let skew = |q: &Query, r: Response| match (q, r) {
            (Query::Children { node }, Response::Children { left, right }) if node.len() == 3 => {
                Response::Children { left: left.flip_bit(9), right }
            }
            (_, r) => r,
        };
        let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &tree);
        let mut ob = Tampered { inner: TreeOracle::new(&st.scheme, &bad, &bad_tree), tamper: skew };
        let (d, _) = first_divergence(st.ctx(), &mut oa, &mut ob, tree.root(), bad_tree.root(), NodeAddress::ROOT);
        assert_eq!(d, Divergence::Liars(vec![Agent::B]));

        let mut oa = Tampered { inner: TreeOracle::new(&st.scheme, st.tab.trace(), &tree), tamper: skew };
        let mut ob = Tampered { inner: TreeOracle::new(&st.scheme, &bad, &bad_tree), tamper: skew };
        let (d, tr) = first_divergence(st.ctx(), &mut oa, &mut ob, tree.root(), bad_tree.root(), NodeAddress::ROOT);
        assert_eq!(d, Divergence::Liars(vec![Agent::A, Agent::B]));
        assert_eq!(tr.queries(), 4);

        let both_bad = |q: &Query, r: Response| match (q, r) {
            (Query::Children { node }, Response::Children { left, right }) if node.is_root() => {
                Response::Children { left, right: right.flip_bit(1) }
            }
            (_, r) => r,
        };
        let mut oa = Tampered { inner: TreeOracle::new(&st.scheme, st.tab.trace(), &tree), tamper: both_bad };
        let mut ob = Tampered { inner: TreeOracle::new(&st.scheme, &bad, &bad_tree), tamper: both_bad };
        let (d, _) = first_divergence(st.ctx(), &mut oa, &mut ob, tree.root(), bad_tree.root(), NodeAddress::ROOT);
        assert_eq!(d, Divergence::Liars(vec![Agent::A, Agent::B]));
    }

    #[test]
    fn replay_is_byte_identical() {
        let st = setup(fixtures::palindrome_check(), 15);
        let t = st.tab.time();
        let bad = st.trace_with(|rows| flip_output(&st.spec, rows, t));
        let run = || {
            let good_tree = st.tree(st.tab.trace());
            let bad_tree = st.tree(&bad);
            let ca = Commitment { a: "1".into(), t, r: good_tree.root() };
            let cb = Commitment { a: "0".into(), t, r: bad_tree.root() };
            let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
            let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
            let res = arbitrate(st.ctx(), &ca, &cb, &mut oa, &mut ob).unwrap();
            serde_json::to_string(&res.transcript.records).unwrap()
        };
        assert_eq!(run(), run());
        let json = run();
        assert!(json.starts_with("[{\"seq\":0,\"query\":{\"kind\":\"children\",\"node\":\"\"}"));
        let back: Vec<Record> = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn commit_oracle_matches_batch_tree() {
        let fx = fixtures::binary_add();
        let spec = fx.spec();
        let scheme = gen_key(32, 16, HashAlgorithm::Sha256).unwrap();
        let (c, tree, tab) = commit(&spec, fx.input(), fx.dims(), &scheme, &mut EffortMeter::default()).unwrap();
        let mut o = TreeOracle::new(&scheme, tab.trace(), &tree);
        let Response::Children { left, right } = o.answer(&Query::Children { node: NodeAddress::ROOT }, &[]) else {
            panic!()
        };
        assert_eq!(scheme.node_hash(&left, &right, &mut ()), c.r);
        assert_eq!(o.answer(&Query::Children { node: Grid::new(fx.dims()).address_of(1, 1).unwrap() }, &[]), Response::Absent);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            /// Any tableau that differs from the honest one loses against it,
            /// whichever side it is on, when both answer from their own trees.
            #[test]
            fn honest_side_wins_against_corrupted_tableaus(
                fx_ix in 0usize..3,
                edits in proptest::collection::vec((any::<u32>(), any::<u32>(), any::<u8>()), 1..4),
                swap in any::<bool>(),
                seed in 0u64..1000,
            ) {
                let fx = fixtures::all()[fx_ix];
                let st = setup(fx, seed);
                let dims = fx.dims();
                let t = st.tab.time();
                let bad = st.trace_with(|rows| {
                    for &(r, c, s) in &edits {
                        let i = (r % t) as usize;
                        let k = (c % dims.cols) as usize;
                        let cell = &mut rows[i].cells_mut()[k];
                        cell.symbol = (cell.symbol + 1 + s % 3) % st.spec.symbols().len() as u8;
                    }
                });
                prop_assume!(&bad != st.tab.trace());
                let good_tree = st.tree(st.tab.trace());
                let bad_tree = st.tree(&bad);
                let good = Commitment { a: st.tab.output().into(), t, r: good_tree.root() };
                let last = bad.row(t).block(1, dims.lambda).to_vec();
                let forged = Commitment { a: output_of_block(&st.spec, &last), t, r: bad_tree.root() };
                let mut oa = TreeOracle::new(&st.scheme, st.tab.trace(), &good_tree);
                let mut ob = TreeOracle::new(&st.scheme, &bad, &bad_tree);
                let res = if swap {
                    arbitrate(st.ctx(), &forged, &good, &mut ob, &mut oa).unwrap()
                } else {
                    arbitrate(st.ctx(), &good, &forged, &mut oa, &mut ob).unwrap()
                };
                let honest = if swap { Agent::B } else { Agent::A };
                prop_assert!(res.verdict.winner(honest));
                prop_assert!(res.transcript.queries() <= st.bound());
            }
        }
    }
}
