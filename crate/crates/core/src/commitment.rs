//! The commitment `(a, t, r)` of a computation, effort metering and the cost
//! schedule `M(·)`.
//!
//! Effort is measured in cost units: one per machine transition, four per
//! 64-byte unit of hash input, one per arbitration response.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{active_block_window, run_tableau, Dims, MachineError, MachineSpec, Tableau, Trace};
use crate::merkle::{
    changed_blocks, hash_units, incremental_row_root, Digest, HashMeter, HashScheme, RowTree,
    TableauTree, DIGEST_LEN,
};

pub const C_STEP: u64 = 1;
pub const C_HASH: u64 = 4;
pub const C_QUERY: u64 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("row index {i} outside 1..={rows}")]
    OutOfRange { i: u32, rows: u32 },
}

/// What an agent reports in the computation stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment {
    pub a: String,
    pub t: u32,
    pub r: Digest,
}

/// Per-agent effort counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffortMeter {
    pub steps: u64,
    pub hash_calls: u64,
    pub hash_units: u64,
    pub queries: u64,
}

impl EffortMeter {
    pub fn total(&self) -> u64 {
        C_STEP * self.steps + C_HASH * self.hash_units + C_QUERY * self.queries
    }

    pub fn add_steps(&mut self, n: u64) {
        self.steps += n;
    }

    pub fn add_query(&mut self) {
        self.queries += 1;
    }
}

impl HashMeter for EffortMeter {
    fn on_hash(&mut self, units: u64) {
        self.hash_calls += 1;
        self.hash_units += units;
    }
}

fn block_units(dims: Dims) -> u64 {
    hash_units(dims.block_bytes())
}

fn node_units() -> u64 {
    hash_units(2 * DIGEST_LEN)
}

/// Hash units of the parts of a commitment that do not depend on `i`:
/// the first-row tree, the shared blank-row tree and the upper tree.
fn fixed_units(dims: Dims) -> u64 {
    let b = dims.blocks() as u64;
    let row_tree = b * block_units(dims) + (b - 1) * node_units();
    2 * row_tree + (dims.rows as u64 - 1) * node_units()
}

/// Hash units of one leaf-to-row-root path refresh.
fn path_units(dims: Dims) -> u64 {
    block_units(dims) + dims.log_blocks() as u64 * node_units()
}

/// Closed form `M(i)` for a run in which every step changes exactly one block.
pub fn cost_m(i: u32, dims: Dims) -> Result<u64, CostError> {
    if i == 0 || i > dims.rows {
        return Err(CostError::OutOfRange { i, rows: dims.rows });
    }
    let updates = (i - 1) as u64;
    Ok(C_STEP * updates + C_HASH * (fixed_units(dims) + updates * path_units(dims)))
}

/// `M(i)` for one program: like [`cost_m`], but a step that moves the head
/// across a block boundary refreshes two leaf paths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostSchedule {
    dims: Dims,
    /// `updates[k]`: path refreshes needed for rows `2..=k+1`, for `k < t`.
    updates: Vec<u64>,
}

impl CostSchedule {
    /// Schedule assuming one block changes per step.
    pub fn closed_form(dims: Dims) -> Self {
        Self {
            dims,
            updates: alloc::vec![0],
        }
    }

    /// Schedule of the honest run behind `tableau`.
    pub fn from_tableau(tableau: &Tableau) -> Self {
        let trace = tableau.trace();
        let mut updates = Vec::with_capacity(tableau.time() as usize);
        let mut total = 0u64;
        updates.push(0);
        for i in 2..=tableau.time() {
            total += trace.changed_blocks(i) as u64;
            updates.push(total);
        }
        Self {
            dims: tableau.dims(),
            updates,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    fn updates_at(&self, i: u32) -> u64 {
        let k = i as usize - 1;
        match self.updates.get(k) {
            Some(&u) => u,
            None => {
                let last = self.updates.len() - 1;
                self.updates[last] + (k - last) as u64
            }
        }
    }

    /// Effort of an honest commitment whose run has `i` rows.
    pub fn m(&self, i: u32) -> Result<u64, CostError> {
        let dims = self.dims;
        if i == 0 || i > dims.rows {
            return Err(CostError::OutOfRange { i, rows: dims.rows });
        }
        let steps = (i - 1) as u64;
        Ok(C_STEP * steps + C_HASH * (fixed_units(dims) + self.updates_at(i) * path_units(dims)))
    }

    /// `M_c = M(T)`.
    pub fn m_c(&self) -> u64 {
        self.m(self.dims.rows).expect("T is in range")
    }
}

/// Commits to an arbitrary trace: the first row's tree in full, then one
/// path refresh per changed block of each later row, the blank-row tree once,
/// and the upper tree. `window` restricts where changes may occur.
pub fn commit_trace(
    scheme: &HashScheme,
    trace: &Trace,
    meter: &mut impl HashMeter,
    mut window: impl FnMut(u32) -> core::ops::RangeInclusive<u32>,
) -> Result<TableauTree, crate::merkle::MerkleError> {
    let dims = trace.dims();
    let lambda = dims.lambda;
    let mut roots = Vec::with_capacity(trace.len() as usize);
    if !trace.is_empty() {
        let mut tree = RowTree::build(scheme, trace.row(1), lambda, meter);
        roots.push(tree.root());
        for i in 2..=trace.len() {
            tree = incremental_row_root(
                scheme,
                &tree,
                trace.row(i - 1),
                trace.row(i),
                window(i),
                lambda,
                meter,
            )?;
            roots.push(tree.root());
        }
    }
    let blank = RowTree::build(scheme, trace.blank_row(), lambda, meter).root();
    Ok(TableauTree::assemble(scheme, dims, roots, blank, meter))
}

/// [`commit_trace`] with no restriction on where rows change.
pub fn commit_any(scheme: &HashScheme, trace: &Trace, meter: &mut impl HashMeter) -> TableauTree {
    let blocks = trace.dims().blocks();
    commit_trace(scheme, trace, meter, |_| 1..=blocks).expect("unrestricted window")
}

/// Runs the machine and commits to its tableau using incremental row updates
/// around the head.
pub fn commit(
    spec: &MachineSpec,
    input: &str,
    dims: Dims,
    scheme: &HashScheme,
    meter: &mut EffortMeter,
) -> Result<(Commitment, TableauTree, Tableau), MachineError> {
    let tableau = run_tableau(spec, input, dims)?;
    meter.add_steps(tableau.time() as u64 - 1);
    let trace = tableau.trace();
    let tree = commit_trace(scheme, trace, meter, |i| {
        let (j, _) = active_block_window(trace.row(i - 1), dims.lambda).expect("rows before t have a head");
        j.saturating_sub(1).max(1)..=(j + 1).min(dims.blocks())
    })
    .expect("a step only changes blocks around the head");
    let c = Commitment {
        a: tableau.output().into(),
        t: tableau.time(),
        r: tree.root(),
    };
    Ok((c, tree, tableau))
}

/// Changed-block count of every row transition, for diagnostics.
pub fn block_changes(trace: &Trace) -> Vec<usize> {
    let lambda = trace.dims().lambda;
    (2..=trace.len())
        .map(|i| changed_blocks(trace.row(i - 1), trace.row(i), lambda).len())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::merkle::{gen_key, HashAlgorithm};

    fn scheme(seed: u64) -> HashScheme {
        gen_key(32, seed, HashAlgorithm::Sha256).unwrap()
    }

    /// Closed form evaluated term by term from the cost-model constants.
    fn oracle_m(i: u64, t: u64, s: u64, lambda: u64) -> u64 {
        let b = s / lambda;
        let log_b = b.trailing_zeros() as u64;
        let h_b = (2 * lambda).div_ceil(64).max(1);
        let h_n = 1;
        let first = b * h_b + (b - 1) * h_n;
        let blank = first;
        let upper = (t - 1) * h_n;
        let updates = (i - 1) * (h_b + log_b * h_n);
        (i - 1) + 4 * (first + blank + updates + upper)
    }

    #[test]
    fn unary_commit() {
        let fx = fixtures::unary_increment();
        let spec = fx.spec();
        let s = scheme(1);
        let mut meter = EffortMeter::default();
        let (c, tree, tab) = commit(&spec, fx.input(), fx.dims(), &s, &mut meter).unwrap();
        assert_eq!((c.a.as_str(), c.t), ("1111", 5));
        let rebuilt = TableauTree::build(&s, tab.trace(), &mut ());
        assert_eq!(c.r, rebuilt.root());
        assert_eq!(tree, rebuilt);
        assert_eq!(meter.total(), cost_m(5, fx.dims()).unwrap());
        assert_eq!(meter.total(), oracle_m(5, 16, 16, 8));
        let mut again = EffortMeter::default();
        assert_eq!(commit(&spec, fx.input(), fx.dims(), &s, &mut again).unwrap().0, c);
    }

    #[test]
    fn closed_form_terms() {
        let dims = Dims::new(16, 16, 8).unwrap();
        // First-row tree 3, blank tree 3, upper tree 15 hashes of one unit.
        assert_eq!(cost_m(1, dims).unwrap(), 4 * (3 + 3 + 15));
        for i in 1..16 {
            let step = cost_m(i + 1, dims).unwrap() - cost_m(i, dims).unwrap();
            assert_eq!(step, 1 + 4 * (dims.log_blocks() as u64 + 1));
        }
        assert!(cost_m(0, dims).is_err());
        assert!(cost_m(17, dims).is_err());
        for (t, s, l) in [(1024u32, 128u32, 8u32), (64, 64, 4), (8, 8, 8), (4, 1024, 64)] {
            let d = Dims::new(t, s, l).unwrap();
            for i in [1, 2, t / 2, t] {
                assert_eq!(cost_m(i, d).unwrap(), oracle_m(i as u64, t as u64, s as u64, l as u64));
            }
        }
    }

    #[test]
    fn metered_commit_matches_schedule_on_every_fixture() {
        for fx in fixtures::all() {
            let spec = fx.spec();
            let s = scheme(2);
            let mut meter = EffortMeter::default();
            let (c, _, tab) = commit(&spec, fx.input(), fx.dims(), &s, &mut meter).unwrap();
            let schedule = CostSchedule::from_tableau(&tab);
            assert_eq!(meter.total(), schedule.m(c.t).unwrap(), "{}", fx.name());
            assert_eq!(meter.steps, c.t as u64 - 1);
            let crossings = block_changes(tab.trace()).iter().filter(|&&n| n == 2).count() as u64;
            let closed = cost_m(c.t, fx.dims()).unwrap();
            assert_eq!(meter.total(), closed + 4 * crossings * (1 + fx.dims().log_blocks() as u64));
        }
    }

    #[test]
    fn schedule_is_strictly_increasing() {
        for fx in fixtures::all() {
            let tab = run_tableau(&fx.spec(), fx.input(), fx.dims()).unwrap();
            let sched = CostSchedule::from_tableau(&tab);
            let mut prev = 0;
            for i in 1..=fx.dims().rows {
                let m = sched.m(i).unwrap();
                assert!(m > prev);
                prev = m;
            }
            assert_eq!(sched.m_c(), sched.m(fx.dims().rows).unwrap());
        }
        let closed = CostSchedule::closed_form(Dims::new(64, 16, 8).unwrap());
        for i in 1..=64 {
            assert_eq!(closed.m(i).unwrap(), cost_m(i, closed.dims()).unwrap());
        }
    }

    #[test]
    fn large_metered_run_matches_formula() {
        // Unary increment never crosses a block boundary on the way to cell
        // |input|+1 within block 1, so the closed form is exact here.
        let spec = fixtures::unary_increment().spec();
        let dims = Dims::new(1024, 128, 8).unwrap();
        let mut meter = EffortMeter::default();
        let (c, _, _) = commit(&spec, "1111111", dims, &scheme(3), &mut meter).unwrap();
        assert_eq!(meter.total(), cost_m(c.t, dims).unwrap());
        assert_eq!(meter.total(), oracle_m(c.t as u64, 1024, 128, 8));
    }
}
