//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use mrm_core::arbitration::{
    arbitrate, first_divergence, Agent, Divergence, ProverOracle, Query, Response, TreeOracle,
};
use mrm_core::commitment::{commit, commit_any, EffortMeter};
use mrm_core::fixtures::{self, Fixture};
use mrm_core::machine::{run_tableau, Dims, Row, Trace};
use mrm_core::mechanism::{
    min_security_parameter, select_params, verifier_cost, Mechanism, ParamError, PayoffMatrix,
    DEFAULT_DELTA, DEFAULT_EPSILON,
};
use mrm_core::merkle::{
    check_consistent_path, gen_key, Grid, HashAlgorithm, Link, NodeAddress, PathBundle, TreeReader,
};
use mrm_core::strategies::{Strategy, StrategyKind};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const KEYS_C1: u64 = 100;
const TRIALS_C3: u32 = 50;
const RUNTIME_C1_SECS: f64 = 60.0;
const RATIO_C7: f64 = 2.3;
const CORRUPTIONS_C8: usize = 200;
const SAMPLED_PATHS_C9: usize = 50;

type Check = Result<String, String>;

fn mechanism(fx: &Fixture) -> Mechanism {
    Mechanism::new(&fx.spec(), fx.input(), fx.dims(), HashAlgorithm::Sha256).unwrap()
}

fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    rng.next_u64() % n
}

fn honest_victory() -> Check {
    let start = Instant::now();
    let mut arbitrations = 0;
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        for seed in 0..KEYS_C1 {
            let scheme = gen_key(32, seed, HashAlgorithm::Sha256).unwrap();
            for kind in mech.library().into_iter().skip(1) {
                for tau_side in Agent::BOTH {
                    let mut tau = mech.prover(StrategyKind::Tau);
                    let mut dev = mech.prover(kind);
                    let ct = tau.commit(&scheme).unwrap();
                    let cd = dev.commit(&scheme).unwrap();
                    if ct == cd {
                        continue;
                    }
                    arbitrations += 1;
                    let ctx = mech.context(&scheme);
                    let res = match tau_side {
                        Agent::A => arbitrate(ctx, &ct, &cd, &mut tau, &mut dev),
                        Agent::B => arbitrate(ctx, &cd, &ct, &mut dev, &mut tau),
                    }
                    .unwrap();
                    if !res.verdict.winner(tau_side) {
                        return Err(format!("{kind} beat tau on {} (seed {seed})", fx.name()));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= RUNTIME_C1_SECS {
        return Err(format!("{arbitrations} arbitrations took {secs:.1}s"));
    }
    Ok(format!("{arbitrations} arbitrations, tau won all, {secs:.1}s"))
}

fn truthful_payoff() -> Check {
    let mut shown = Vec::new();
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        let params = mech.calibrate(None, DEFAULT_EPSILON, DEFAULT_DELTA, None, 1).unwrap();
        for trial in 0..5 {
            let scheme = mech.key(params.n, 11, trial).unwrap();
            let g = mech.run_game(StrategyKind::Tau, StrategyKind::Tau, &params, &scheme).unwrap();
            if g.arbitration_used || g.a.utility != params.b || g.b.utility != params.b {
                return Err(format!("{}: ({}, {}) with b = {}", fx.name(), g.a.utility, g.b.utility, params.b));
            }
        }
        shown.push(format!("{} b={}", fx.name(), params.b));
    }
    Ok(shown.join(", "))
}

fn family_nash() -> Check {
    let mut notes = Vec::new();
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        let params = mech.calibrate(None, DEFAULT_EPSILON, DEFAULT_DELTA, None, 2).unwrap();
        let lib = mech.library();
        let m = PayoffMatrix::compute(&mech, &params, &lib, TRIALS_C3, 3).unwrap();
        let tau = m.index_of(StrategyKind::Tau).unwrap();
        let base = m.cell(tau, tau);
        let mut margin = i64::MAX;
        for (k, s) in lib.iter().enumerate() {
            if s.commits_truthfully() {
                continue;
            }
            let ga = base.sum_a - m.cell(k, tau).sum_a;
            let gb = base.sum_b - m.cell(tau, k).sum_b;
            margin = margin.min(ga.min(gb));
            if ga <= 0 || gb <= 0 {
                return Err(format!("{}: {s} against tau is not worse ({ga}, {gb})", fx.name()));
            }
        }
        for i in 0..lib.len() {
            for j in 0..lib.len() {
                let in_t = lib[i].commits_truthfully() && lib[j].commits_truthfully();
                if !in_t && m.deviations(i, j).is_empty() {
                    return Err(format!("{}: ({}, {}) has no profitable deviation", fx.name(), lib[i], lib[j]));
                }
            }
        }
        if !m.deviations(tau, tau).is_empty() {
            return Err(format!("{}: (tau, tau) is not an equilibrium", fx.name()));
        }
        let per_trial = margin as f64 / TRIALS_C3 as f64;
        notes.push(format!("{} margin {per_trial:.1}", fx.name()));
    }
    Ok(notes.join(", "))
}

fn non_dominance() -> Check {
    let mut notes = Vec::new();
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        let params = mech.calibrate(None, DEFAULT_EPSILON, DEFAULT_DELTA, None, 4).unwrap();
        let t = mech.time();
        let StrategyKind::LazyHalt(Some(i)) = StrategyKind::LazyHalt(None).resolve(t) else {
            unreachable!()
        };
        let opponent = StrategyKind::LazyHalt(Some(i));
        let over = StrategyKind::Overclaim(Some(i + 1));
        let (mut u_over, mut u_tau) = (0i64, 0i64);
        for trial in 0..20 {
            let scheme = mech.key(params.n, 5, trial).unwrap();
            u_over += mech.run_game(over, opponent, &params, &scheme).unwrap().a.utility;
            u_tau += mech.run_game(StrategyKind::Tau, opponent, &params, &scheme).unwrap().a.utility;
        }
        if u_over <= u_tau {
            return Err(format!("{}: {over} {u_over} vs tau {u_tau}", fx.name()));
        }
        notes.push(format!("{} +{}", fx.name(), (u_over - u_tau) / 20));
    }
    Ok(notes.join(", "))
}

fn individual_rationality() -> Check {
    let mut worst = i64::MAX;
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        let params = mech.calibrate(None, DEFAULT_EPSILON, DEFAULT_DELTA, None, 6).unwrap();
        for kind in mech.library() {
            for trial in 0..10 {
                let scheme = mech.key(params.n, 7, trial).unwrap();
                let ua = mech.run_game(StrategyKind::Tau, kind, &params, &scheme).unwrap().a.utility;
                let ub = mech.run_game(kind, StrategyKind::Tau, &params, &scheme).unwrap().b.utility;
                worst = worst.min(ua.min(ub));
                if ua <= 0 || ub <= 0 {
                    return Err(format!("{}: tau earns {} against {kind}", fx.name(), ua.min(ub)));
                }
            }
        }
    }
    Ok(format!("min tau utility {worst}"))
}

fn bound(dims: Dims) -> usize {
    6 * (dims.log_rows() + dims.log_blocks()) as usize + 12
}

fn max_queries(dims: Dims) -> Result<usize, String> {
    let (input, _) = fixtures::sized_palindrome(dims, dims.rows / 2).ok_or("no input fits")?;
    let spec = fixtures::palindrome_check().spec();
    let mech = Mechanism::new(&spec, &input, dims, HashAlgorithm::Sha256).unwrap();
    let cost = verifier_cost(&mech, &mech.library(), 2, 8).unwrap();
    if cost.max_queries > bound(dims) {
        return Err(format!("T={} S={}: {} queries > {}", dims.rows, dims.cols, cost.max_queries, bound(dims)));
    }
    Ok(cost.max_queries)
}

fn logarithmic_cost() -> Check {
    let mut by_t = Vec::new();
    for log_t in [6, 8, 10, 12] {
        by_t.push(max_queries(Dims::new(1 << log_t, 1 << 7, 8).unwrap())?);
    }
    let mut by_s = Vec::new();
    for log_s in [5, 7, 9, 10] {
        by_s.push(max_queries(Dims::new(1 << 8, 1 << log_s, 8).unwrap())?);
    }
    // T grows 4x per step: two doublings, each adding at most a constant.
    for w in by_t.windows(2) {
        if w[1] > w[0] + 2 * 6 {
            return Err(format!("query growth over T not additive: {by_t:?}"));
        }
    }
    let big = *by_t.iter().chain(&by_s).max().unwrap();
    Ok(format!("T sweep {by_t:?}, S sweep {by_s:?}, max {big} <= {}", bound(Dims::new(1 << 12, 1 << 10, 8).unwrap())))
}

fn commitment_scaling() -> Check {
    let scheme = gen_key(32, 9, HashAlgorithm::Sha256).unwrap();
    let spec = fixtures::palindrome_check().spec();
    let mut costs = Vec::new();
    for log_t in 6..=12 {
        let dims = Dims::new(1 << log_t, 64, 8).unwrap();
        let (input, _) = fixtures::sized_palindrome(dims, dims.rows / 2).ok_or("no input fits")?;
        let mut meter = EffortMeter::default();
        let (c, _, tab) = commit(&spec, &input, dims, &scheme, &mut meter).unwrap();
        let expect = mrm_core::CostSchedule::from_tableau(&tab).m(c.t).unwrap();
        if meter.total() != expect {
            return Err(format!("T={}: metered {} != M(t) {}", dims.rows, meter.total(), expect));
        }
        costs.push((dims.rows, c.t, meter.total()));
    }
    let mut worst: f64 = 0.0;
    for w in costs.windows(2) {
        let ratio = w[1].2 as f64 / w[0].2 as f64;
        worst = worst.max(ratio);
        if ratio > RATIO_C7 {
            return Err(format!("cost ratio {ratio:.3} at T={} -> {}", w[0].0, w[1].0));
        }
    }
    let ts: Vec<u32> = costs.iter().map(|c| c.1).collect();
    Ok(format!("t {ts:?}, max ratio {worst:.3}"))
}

/// Honest oracle that flips the left child in its `k`-th children answer.
struct SkewedAt<'a> {
    inner: TreeOracle<'a>,
    k: usize,
    seen: usize,
}

impl ProverOracle for SkewedAt<'_> {
    fn answer(&mut self, query: &Query, history: &[Query]) -> Response {
        let r = self.inner.answer(query, history);
        match r {
            Response::Children { left, right } => {
                self.seen += 1;
                if self.seen == self.k {
                    return Response::Children { left: left.flip_bit(5), right };
                }
                Response::Children { left, right }
            }
            r => r,
        }
    }
}

fn linear_scan(a: &Trace, b: &Trace) -> Option<(u32, u32)> {
    let dims = a.dims();
    (1..=dims.rows)
        .flat_map(|i| (1..=dims.blocks()).map(move |j| (i, j)))
        .find(|&(i, j)| a.block_bytes(i, j) != b.block_bytes(i, j))
}

fn divergence_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut blocks, mut liars) = (0, 0);
    let fxs = fixtures::all();
    for n in 0..CORRUPTIONS_C8 {
        let fx = fxs[n % fxs.len()];
        let spec = fx.spec();
        let dims = fx.dims();
        let scheme = gen_key(32, n as u64, HashAlgorithm::Sha256).unwrap();
        let tab = run_tableau(&spec, fx.input(), dims).unwrap();
        let tree = commit_any(&scheme, tab.trace(), &mut ());

        // Edits that cancel each other out leave nothing to find; draw again.
        let bad = loop {
            let mut rows: Vec<Row> = tab.trace().rows().to_vec();
            rows.resize(dims.rows as usize, Row::blank(&spec, dims.cols));
            let symbols = spec.symbols().len() as u64;
            for _ in 0..1 + below(&mut rng, 4) {
                let i = below(&mut rng, dims.rows as u64) as usize;
                let k = below(&mut rng, dims.cols as u64) as usize;
                let cell = &mut rows[i].cells_mut()[k];
                cell.symbol = ((cell.symbol as u64 + 1 + below(&mut rng, symbols - 1)) % symbols) as u8;
            }
            let bad = Trace::new(&spec, dims, rows);
            if linear_scan(tab.trace(), &bad).is_some() {
                break bad;
            }
        };
        let bad_tree = commit_any(&scheme, &bad, &mut ());
        let ctx = mrm_core::arbitration::Context { spec: &spec, input: fx.input(), dims, scheme: &scheme };
        let mut oa = TreeOracle::new(&scheme, tab.trace(), &tree);

        if n % 4 == 3 {
            // Inject a hash inconsistency into B's answers at a random level.
            let depth = Grid::new(dims).depth() as u64;
            let k = 1 + below(&mut rng, depth) as usize;
            let mut ob = SkewedAt { inner: TreeOracle::new(&scheme, &bad, &bad_tree), k, seen: 0 };
            let (d, _) = first_divergence(ctx, &mut oa, &mut ob, tree.root(), bad_tree.root(), NodeAddress::ROOT);
            // The descent may reach the block before level k when the trees
            // agree below; then the ordinary answer applies.
            match d {
                Divergence::Liars(l) if l == [Agent::B] => liars += 1,
                Divergence::Block { i, j, .. } if Some((i, j)) == linear_scan(tab.trace(), &bad) && ob.seen < k => {
                    blocks += 1
                }
                other => return Err(format!("injection at level {k} on {}: {other:?}", fx.name())),
            }
            continue;
        }

        let mut ob = TreeOracle::new(&scheme, &bad, &bad_tree);
        let expect = linear_scan(tab.trace(), &bad);
        let (d, _) = first_divergence(ctx, &mut oa, &mut ob, tree.root(), bad_tree.root(), NodeAddress::ROOT);
        match (d, expect) {
            (Divergence::Block { i, j, .. }, Some(e)) if (i, j) == e => blocks += 1,
            (d, e) => return Err(format!("{}: got {d:?}, scan says {e:?}", fx.name())),
        }
    }
    Ok(format!("{blocks} blocks located, {liars} liars named"))
}

fn corruptions(bundle: &PathBundle) -> Vec<PathBundle> {
    let mut out = Vec::new();
    for bit in [0, 77, 255] {
        let mut b = bundle.clone();
        b.top = b.top.flip_bit(bit);
        out.push(b);
    }
    for k in 0..bundle.links.len() {
        match &bundle.links[k] {
            Link::Node(l, r) => {
                for bit in [0, 77, 255] {
                    let mut b = bundle.clone();
                    b.links[k] = Link::Node(l.flip_bit(bit), *r);
                    out.push(b);
                    let mut b = bundle.clone();
                    b.links[k] = Link::Node(*l, r.flip_bit(bit));
                    out.push(b);
                }
            }
            Link::Block(bytes) => {
                for pos in 0..bytes.len() {
                    let mut b = bundle.clone();
                    let mut v = bytes.clone();
                    v[pos] = v[pos].wrapping_add(1);
                    b.links[k] = Link::Block(v);
                    out.push(b);
                }
            }
        }
    }
    out
}

fn merkle_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for fx in fixtures::all() {
        let spec = fx.spec();
        let dims = fx.dims();
        let scheme = gen_key(32, 12, HashAlgorithm::Sha256).unwrap();
        let tab = run_tableau(&spec, fx.input(), dims).unwrap();
        let tree = commit_any(&scheme, tab.trace(), &mut ());
        let grid = Grid::new(dims);
        let mut reader = TreeReader::new(&scheme, tab.trace(), &tree);
        let mut targets = vec![(tab.time(), 1)];
        for _ in 0..SAMPLED_PATHS_C9 {
            targets.push((1 + below(&mut rng, dims.rows as u64) as u32, 1 + below(&mut rng, dims.blocks() as u64) as u32));
        }
        for (n, &(i, j)) in targets.iter().enumerate() {
            let v = grid.block_address(i, j).unwrap();
            let bundle = reader.path_bundle(&NodeAddress::ROOT, &v).unwrap();
            let check = |b: &PathBundle| check_consistent_path(&scheme, b, &NodeAddress::ROOT, &v, grid.depth(), &mut ());
            if check(&bundle) != Ok(true) || bundle.top != tree.root() {
                return Err(format!("{}: honest path to ({i},{j}) rejected", fx.name()));
            }
            let all = corruptions(&bundle);
            // One path is swept exhaustively; the others get one corruption each.
            let picks: Vec<&PathBundle> = if n == 0 {
                all.iter().collect()
            } else {
                vec![&all[below(&mut rng, all.len() as u64) as usize]]
            };
            for b in picks {
                checked += 1;
                if check(b) == Ok(true) {
                    return Err(format!("{}: corruption on path to ({i},{j}) accepted", fx.name()));
                }
            }
        }
    }
    Ok(format!("{checked} corrupted bundles rejected"))
}

fn parameter_validity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut emitted = 0;
    for _ in 0..2000 {
        let m_c = 1 + below(&mut rng, 10_000_000);
        let m_ap = below(&mut rng, 100_000);
        let eps = 2f64.powi(-(2 + below(&mut rng, 30) as i32));
        let delta = 2f64.powi(-(2 + below(&mut rng, 30) as i32));
        let n = min_security_parameter(m_c + m_ap) + below(&mut rng, 40) as u32;
        if let Ok(p) = select_params(m_c, m_ap, eps, delta, n, None) {
            emitted += 1;
            if p.check().is_err() || p.d2 < 2 * p.d1(m_c) || p.zeta <= p.d2 as f64 {
                return Err(format!("inequality fails for {p:?}"));
            }
        }
    }
    for fx in fixtures::all() {
        let mech = mechanism(&fx);
        let p = mech.calibrate(None, DEFAULT_EPSILON, DEFAULT_DELTA, None, 14).unwrap();
        if p.check().is_err() || p.d2 < 2 * p.d1(mech.m_c()) {
            return Err(format!("{}: calibrated params fail", fx.name()));
        }
        emitted += 1;
    }
    // M_c + M_ap = 1024: the boundary is 2*10 + 15 = 35.
    match select_params(1000, 24, DEFAULT_EPSILON, DEFAULT_DELTA, 35, None) {
        Err(ParamError::EmptyInterval { .. }) => {}
        other => return Err(format!("boundary accepted: {other:?}")),
    }
    Ok(format!("{emitted} parameter sets valid, boundary rejected"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("honest victory", honest_victory),
        ("truthful payoff identity", truthful_payoff),
        ("family Nash", family_nash),
        ("non-dominance witness", non_dominance),
        ("individual rationality", individual_rationality),
        ("verifier logarithmic cost", logarithmic_cost),
        ("commitment cost scaling", commitment_scaling),
        ("first-divergence oracle equivalence", divergence_equivalence),
        ("merkle soundness", merkle_soundness),
        ("parameter validity", parameter_validity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2} {name}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {label}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
