//! Text artifacts: payoff CSV, Nash report, bench table, and atomic writes.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use mrm_core::mechanism::{PayoffMatrix, VerifierCost};
use mrm_core::{Agent, Dims, PaymentParams, StrategyKind};
use serde::Serialize;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Strategy id usable in a file name.
pub fn file_id(kind: StrategyKind) -> String {
    kind.to_string().replace(':', "-")
}

/// `sum / trials`, exact when it divides, else to two decimals.
pub fn mean(sum: i64, trials: u32) -> String {
    let t = trials as i64;
    if sum % t == 0 {
        (sum / t).to_string()
    } else {
        format!("{:.2}", sum as f64 / t as f64)
    }
}

/// Rows are A's strategy, columns B's; each cell is `uA|uB`.
pub fn payoff_csv(m: &PayoffMatrix) -> String {
    let mut s = String::from("A\\B");
    for k in &m.strategies {
        write!(s, ",{k}").unwrap();
    }
    s.push('\n');
    for i in 0..m.size() {
        s.push_str(&m.strategies[i].to_string());
        for j in 0..m.size() {
            let c = m.cell(i, j);
            write!(s, ",{}|{}", mean(c.sum_a, c.trials), mean(c.sum_b, c.trials)).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Lists every profile with a profitable unilateral deviation, then the
/// deviation-free profiles.
pub fn nash_report(m: &PayoffMatrix, params: &PaymentParams, d1_t: i64) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "params: n={} b={} d1(t)={} d2={} M_c={} M_ap={}",
        params.n, params.b, d1_t, params.d2, params.m_c, params.m_ap
    )
    .unwrap();
    let trials = m.cells.first().map_or(1, |c| c.trials);
    writeln!(s, "trials per profile: {trials}").unwrap();
    writeln!(s).unwrap();
    writeln!(s, "unstable profiles:").unwrap();
    for i in 0..m.size() {
        for j in 0..m.size() {
            let devs = m.deviations(i, j);
            if devs.is_empty() {
                continue;
            }
            let list: Vec<String> = devs
                .iter()
                .map(|d| {
                    let who = match d.agent {
                        Agent::A => "A",
                        Agent::B => "B",
                    };
                    format!("{who}->{} (+{})", d.to, mean(d.gain, trials))
                })
                .collect();
            writeln!(s, "  ({}, {}): {}", m.strategies[i], m.strategies[j], list.join(", ")).unwrap();
        }
    }
    let eq = m.equilibria();
    writeln!(s).unwrap();
    write!(s, "deviation-free profiles:").unwrap();
    if eq.is_empty() {
        write!(s, " none").unwrap();
    }
    for (a, b) in &eq {
        write!(s, " ({a}, {b})").unwrap();
    }
    writeln!(s).unwrap();
    if let Some(k) = m.index_of(StrategyKind::Tau) {
        let free = m.deviations(k, k).is_empty();
        writeln!(s, "(tau, tau) deviation-free: {}", if free { "yes" } else { "no" }).unwrap();
    }
    s
}

/// One row of the verifier-cost table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub dims: Dims,
    pub t: u32,
    pub bound: usize,
    pub cost: VerifierCost,
}

/// The verifier's query bound for `dims`.
pub fn query_bound(dims: Dims) -> usize {
    6 * (dims.log_rows() + dims.log_blocks()) as usize + 12
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("T,S,B,t,max_queries,bound,max_hash_calls,max_response_bytes,arbitrations\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.dims.rows,
            r.dims.cols,
            r.dims.blocks(),
            r.t,
            r.cost.max_queries,
            r.bound,
            r.cost.max_hash_calls,
            r.cost.max_response_bytes,
            r.cost.arbitrations
        )
        .unwrap();
    }
    s
}
