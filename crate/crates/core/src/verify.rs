//! Desk-scale experiments built on the other modules: local-to-global
//! measurement, ping-pong, slim-triangle certificates, the trichotomy probe,
//! translation spectra and decompositions of long local geodesics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{enum_cap, LabError, Result, MAX_ENUM_SET};
use crate::groups::{shortlex_cmp, GroupDescriptor, Kind, Letter, MarkedGroup, Word};
use crate::morse::{
    exact_translation, extract_periodic_morse_candidate, morse_gauge_estimate, morse_limited_probe,
    translation_length, MorseGaugeTable, ProbeOutcome,
};
use crate::paths::{
    concat_geodesics, for_each_geodesic_word, hausdorff, normal_geodesic, LocalParams, PathInGraph,
    QGParams,
};
use crate::rat::{format_rat, rat, Rat};
use crate::relhyp::{check_decomposition, relevant_decomposition, RelHypConstants};

pub const SCHEMA_VERSION: u32 = 1;

/// A measured constant with the symbol it estimates and the module that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub symbol: String,
    pub module: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// A plotting table; rendered as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub group: GroupDescriptor,
    pub parameters: Value,
    pub measured: Vec<Measured>,
    pub invariants: Vec<Invariant>,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub seed: Option<u64>,
    /// Wall-clock time; the only field allowed to differ between reruns.
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, g: &MarkedGroup, parameters: Value, seed: Option<u64>) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            group: g.descriptor().clone(),
            parameters,
            measured: Vec::new(),
            invariants: Vec::new(),
            flags: Vec::new(),
            table: None,
            seed,
            runtime_ms: 0,
        }
    }

    pub fn measure(&mut self, symbol: &str, module: &str, value: impl Serialize) {
        self.measured.push(Measured {
            symbol: symbol.to_string(),
            module: module.to_string(),
            value: serde_json::to_value(value).expect("measured values serialize"),
        });
    }

    pub fn invariant(&mut self, name: &str, passed: bool, detail: Option<String>) {
        self.invariants.push(Invariant {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn flag(&mut self, f: impl Into<String>) {
        self.flags.push(f.into());
    }

    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }

    pub fn value(&self, symbol: &str) -> Option<&Value> {
        self.measured
            .iter()
            .find(|m| m.symbol == symbol)
            .map(|m| &m.value)
    }

    pub fn invariant_passed(&self, name: &str) -> Option<bool> {
        self.invariants
            .iter()
            .find(|i| i.name == name)
            .map(|i| i.passed)
    }

    fn finish(mut self, started: Instant) -> Self {
        self.runtime_ms = started.elapsed().as_millis() as u64;
        self
    }

    /// The report with its runtime zeroed, for determinism comparisons.
    pub fn canonical(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["runtime_ms"] = json!(0);
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn words_json(g: &MarkedGroup, ws: &[Word]) -> Vec<String> {
    ws.iter().map(|w| g.format_word(w)).collect()
}

// ----- local-to-global -----

/// One row of the L-trend.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtgRow {
    #[serde(rename = "L")]
    pub scale: usize,
    pub samples: usize,
    pub max_length: usize,
    #[serde(with = "crate::rat")]
    pub lambda_prime: Rat,
    /// Least additive constant at λ′; absent without samples.
    #[serde(with = "crate::rat::option")]
    pub epsilon_prime: Option<Rat>,
    /// Largest Hausdorff distance from a sample to the normal geodesic between its ends.
    #[serde(rename = "N")]
    pub n_bound: Option<usize>,
    pub non_geodesic: usize,
}

/// Least ε with every pair satisfying gap/λ − ε ≤ d; edge paths always meet
/// the other inequality.
fn additive_excess(g: &MarkedGroup, p: &PathInGraph, lambda: Rat) -> Rat {
    let mut best = rat(0);
    if p.is_geodesic(g) && lambda >= rat(1) {
        return best;
    }
    for s in 0..p.len() {
        let mut acc = g.identity_acc();
        for t in s + 1..=p.len() {
            g.push(&mut acc, p.labels[t - 1]);
            let e = rat((t - s) as i64) / lambda - rat(acc.len() as i64);
            best = best.max(e);
        }
    }
    best
}

struct RowAcc {
    scale: usize,
    lambda: Rat,
    samples: usize,
    max_length: usize,
    eps: Option<Rat>,
    n: Option<usize>,
    non_geodesic: usize,
}

impl RowAcc {
    fn new(scale: usize, lambda: Rat) -> Self {
        RowAcc {
            scale,
            lambda,
            samples: 0,
            max_length: 0,
            eps: None,
            n: None,
            non_geodesic: 0,
        }
    }

    fn add(&mut self, g: &MarkedGroup, p: &PathInGraph) {
        self.samples += 1;
        self.max_length = self.max_length.max(p.len());
        let e = additive_excess(g, p, self.lambda);
        self.eps = Some(self.eps.map_or(e, |x| x.max(e)));
        let geodesic = p.is_geodesic(g);
        if !geodesic {
            self.non_geodesic += 1;
        }
        let h = if geodesic && g.family() == crate::groups::FamilyKind::Free {
            0
        } else {
            hausdorff(g, p, &normal_geodesic(g, &p.start, &p.end(g)))
        };
        self.n = Some(self.n.map_or(h, |x| x.max(h)));
    }

    fn row(self) -> LtgRow {
        LtgRow {
            scale: self.scale,
            samples: self.samples,
            max_length: self.max_length,
            lambda_prime: self.lambda,
            epsilon_prime: self.eps,
            n_bound: self.n,
            non_geodesic: self.non_geodesic,
        }
    }
}

fn ltg_report(
    name: &str,
    g: &MarkedGroup,
    params: Value,
    seed: Option<u64>,
    rows: Vec<LtgRow>,
    started: Instant,
) -> ExperimentReport {
    let mut r = ExperimentReport::new(name, g, params, seed);
    let by_l = |f: &dyn Fn(&LtgRow) -> Value| -> BTreeMap<String, Value> {
        rows.iter()
            .map(|row| (row.scale.to_string(), f(row)))
            .collect()
    };
    r.measure(
        "lambda_prime",
        "verify",
        by_l(&|row| json!(format_rat(&row.lambda_prime))),
    );
    r.measure(
        "epsilon_prime",
        "verify",
        by_l(&|row| json!(row.epsilon_prime.map(|e| format_rat(&e)))),
    );
    r.measure("N_table", "verify", by_l(&|row| json!(row.n_bound)));
    r.measure("samples", "verify", by_l(&|row| json!(row.samples)));
    let populated: Vec<&LtgRow> = rows.iter().filter(|row| row.samples > 0).collect();
    let monotone = populated.windows(2).all(|w| {
        w[0].scale > w[1].scale
            || (w[1].epsilon_prime <= w[0].epsilon_prime && w[1].n_bound <= w[0].n_bound)
    });
    r.invariant("monotone_in_scale", monotone, None);
    for row in rows.iter().filter(|row| row.samples == 0) {
        r.flag(format!("empty sample set at L={}", row.scale));
    }
    let mut t = Table::new(&[
        "L",
        "samples",
        "max_length",
        "lambda_prime",
        "epsilon_prime",
        "N",
        "non_geodesic",
    ]);
    for row in &rows {
        t.rows.push(vec![
            row.scale.to_string(),
            row.samples.to_string(),
            row.max_length.to_string(),
            format_rat(&row.lambda_prime),
            row.epsilon_prime
                .map(|e| format_rat(&e))
                .unwrap_or_default(),
            row.n_bound.map(|n| n.to_string()).unwrap_or_default(),
            row.non_geodesic.to_string(),
        ]);
    }
    r.table = Some(t);
    r.finish(started)
}

fn sorted_grid(l_grid: &[usize]) -> Result<Vec<usize>> {
    if l_grid.contains(&0) {
        return Err(LabError::malformed(
            "scales in the L grid must be at least 1",
        ));
    }
    let mut v = l_grid.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn random_geodesic(g: &MarkedGroup, target: &[Letter], rng: &mut ChaCha8Rng) -> Word {
    let mut found: Vec<Word> = Vec::new();
    for_each_geodesic_word(g, target, &mut |w| {
        found.push(w.to_vec());
        found.len() < 32
    });
    let k = rng.gen_range(0..found.len());
    found.swap_remove(k)
}

/// Seeded concatenations of random geodesic segments whose measured gauges
/// are within `gauge`, filtered per scale by the concatenation hypothesis.
/// The same pool serves every L, so the fitted constants can only shrink
/// as L grows.
pub fn local_to_global_experiment(
    g: &MarkedGroup,
    gauge: &MorseGaugeTable,
    q: &QGParams,
    l_grid: &[usize],
    samples: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let grid = sorted_grid(l_grid)?;
    let params = json!({
        "gauge": gauge,
        "qg": q,
        "L_grid": grid,
        "samples": samples,
    });
    let Some(&lmax) = grid.last() else {
        return Ok(ltg_report(
            "ltg-experiment",
            g,
            params,
            Some(seed),
            Vec::new(),
            started,
        ));
    };
    let cells: Vec<QGParams> = gauge.grid.iter().map(|c| c.qg).collect();
    let cap = enum_cap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moves = g.moves();
    let mut verdicts: HashMap<Word, bool> = HashMap::new();
    let mut pool: Vec<Vec<PathInGraph>> = Vec::new();
    let mut gauge_rejections = 0usize;
    let mut attempts = 0usize;
    while pool.len() < samples && attempts < samples * 20 {
        attempts += 1;
        let count = rng.gen_range(2..=4);
        let mut segs: Vec<PathInGraph> = Vec::with_capacity(count);
        let mut at: Word = Vec::new();
        for _ in 0..count {
            let len = rng.gen_range(1..=lmax + 1);
            let raw: Word = (0..len)
                .map(|_| moves[rng.gen_range(0..moves.len())])
                .collect();
            let target = g.nf(&raw);
            if target.is_empty() {
                continue;
            }
            let labels = random_geodesic(g, &target, &mut rng);
            let ok = match verdicts.get(&labels) {
                Some(&v) => v,
                None => {
                    let est =
                        morse_gauge_estimate(g, &PathInGraph::from_word(g, &labels)?, &cells, cap)?;
                    let v = est.within(gauge) && est.grid.iter().all(|c| !c.capped);
                    verdicts.insert(labels.clone(), v);
                    v
                }
            };
            if !ok {
                gauge_rejections += 1;
                continue;
            }
            let seg = PathInGraph {
                start: at.clone(),
                labels,
            };
            at = seg.end(g);
            segs.push(seg);
        }
        if segs.len() >= 2 {
            pool.push(segs);
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &l in &grid {
        let lp = LocalParams::new(l, *q)?;
        let mut acc = RowAcc::new(l, q.lambda);
        for segs in &pool {
            let c = concat_geodesics(g, segs, &lp)?;
            if c.lemma_hypothesis_met {
                acc.add(g, &c.path);
            }
        }
        rows.push(acc.row());
    }
    let mut r = ltg_report("ltg-experiment", g, params, Some(seed), rows, started);
    r.measure("pool_size", "verify", pool.len());
    r.measure("gauge_rejections", "verify", gauge_rejections);
    if pool.is_empty() {
        r.flag("generation failure: no segment met the gauge");
    }
    Ok(r)
}

/// Every (L; q)-local quasi-geodesic from e of length at most `max_len`,
/// enumerated by pruned DFS, in place of random samples.
pub fn local_to_global_exhaustive(
    g: &MarkedGroup,
    q: &QGParams,
    l_grid: &[usize],
    max_len: usize,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let grid = sorted_grid(l_grid)?;
    let cap = enum_cap();
    if max_len > cap {
        return Err(LabError::cap("enumeration length", max_len, cap));
    }
    let params = json!({ "qg": q, "L_grid": grid, "max_length": max_len, "mode": "exhaustive" });
    let moves = g.moves();
    let mut rows = Vec::with_capacity(grid.len());
    for &l in &grid {
        let mut acc = RowAcc::new(l, q.lambda);
        let mut labels: Word = Vec::new();
        let mut prefixes = vec![g.identity_acc()];
        let mut count = 0usize;
        exhaustive_dfs(
            g,
            q,
            l,
            max_len,
            &moves,
            &mut labels,
            &mut prefixes,
            &mut acc,
            &mut count,
        )?;
        rows.push(acc.row());
    }
    Ok(ltg_report("ltg-exhaustive", g, params, None, rows, started))
}

#[allow(clippy::too_many_arguments)]
fn exhaustive_dfs(
    g: &MarkedGroup,
    q: &QGParams,
    l: usize,
    max_len: usize,
    moves: &[Letter],
    labels: &mut Word,
    prefixes: &mut Vec<crate::groups::Acc>,
    acc: &mut RowAcc,
    count: &mut usize,
) -> Result<()> {
    if labels.len() == max_len {
        return Ok(());
    }
    for &m in moves {
        labels.push(m);
        let n = labels.len();
        // Only windows ending at the new point are new.
        let mut fits = true;
        for s in (n.saturating_sub(l)..n).rev() {
            if q.margin(n - s, g.word_length(&labels[s..n])) > rat(0) {
                fits = false;
                break;
            }
        }
        if fits {
            *count += 1;
            if *count > MAX_ENUM_SET {
                return Err(LabError::cap(
                    "enumerated local paths",
                    *count,
                    MAX_ENUM_SET,
                ));
            }
            let mut top = prefixes.last().expect("root prefix").clone();
            g.push(&mut top, m);
            let path = PathInGraph {
                start: Vec::new(),
                labels: labels.clone(),
            };
            if top.len() == n {
                acc.samples += 1;
                acc.max_length = acc.max_length.max(n);
                acc.eps = Some(acc.eps.unwrap_or(rat(0)));
                acc.n = Some(acc.n.unwrap_or(0).max(geodesic_spread(g, &path)));
            } else {
                acc.add(g, &path);
            }
            prefixes.push(top);
            exhaustive_dfs(g, q, l, max_len, moves, labels, prefixes, acc, count)?;
            prefixes.pop();
        }
        labels.pop();
    }
    Ok(())
}

/// Hausdorff distance from a geodesic to the normal geodesic with the same ends.
fn geodesic_spread(g: &MarkedGroup, p: &PathInGraph) -> usize {
    if g.family() == crate::groups::FamilyKind::Free {
        return 0;
    }
    let nf = normal_geodesic(g, &p.start, &p.end(g));
    if nf.labels == p.labels {
        0
    } else {
        hausdorff(g, p, &nf)
    }
}

// ----- ping-pong -----

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PingPong {
    pub maxlen: usize,
    /// Alternating factors whose product is trivial; None when consistent.
    pub witness: Option<Vec<Word>>,
    /// Sizes of the enumerated P, Q and I pieces.
    pub sizes: [usize; 3],
    /// Coset representatives used as inner factors, per side.
    pub representatives: [usize; 2],
    pub products: u64,
}

impl PingPong {
    pub fn consistent(&self) -> bool {
        self.witness.is_none()
    }

    pub fn to_json(&self, g: &MarkedGroup) -> Value {
        json!({
            "verdict": if self.consistent() { "consistent" } else { "collapse" },
            "maxlen": self.maxlen,
            "witness": self.witness.as_ref().map(|w| words_json(g, w)),
            "witness_word": self.witness.as_ref().map(|w| g.format_word(&w.concat())),
            "sizes": {"P": self.sizes[0], "Q": self.sizes[1], "I": self.sizes[2]},
            "representatives": {"P": self.representatives[0], "Q": self.representatives[1]},
            "products": self.products,
        })
    }
}

/// Elements reachable from e by right multiplication with the generators
/// and their inverses, never leaving G-length `maxlen`; ShortLex sorted.
pub fn subgroup_ball(g: &MarkedGroup, gens: &[Word], maxlen: usize) -> Result<Vec<Word>> {
    let mut steps: Vec<Word> = Vec::new();
    for w in gens {
        g.check_word(w)?;
        for s in [g.nf(w), g.nf(&g.inverse(w))] {
            if !s.is_empty() && !steps.contains(&s) {
                steps.push(s);
            }
        }
    }
    let mut seen: HashSet<Word> = HashSet::new();
    seen.insert(Vec::new());
    let mut frontier = vec![Vec::new()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &steps {
                let y = g.multiply(x, s);
                if y.len() <= maxlen && !seen.contains(&y) {
                    seen.insert(y.clone());
                    next.push(y);
                }
            }
        }
        if seen.len() > MAX_ENUM_SET {
            return Err(LabError::cap(
                "subgroup enumeration size",
                seen.len(),
                MAX_ENUM_SET,
            ));
        }
        frontier = next;
    }
    let mut out: Vec<Word> = seen.into_iter().collect();
    out.sort_by(|a, b| shortlex_cmp(a, b));
    Ok(out)
}

/// ShortLex-least member of each class x·I met inside `set`, skipping I itself.
fn coset_representatives(g: &MarkedGroup, set: &[Word], inner: &[Word]) -> Vec<Word> {
    let index: HashMap<&Word, usize> = set.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut parent: Vec<usize> = (0..set.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (i, x) in set.iter().enumerate() {
        for h in inner.iter().filter(|h| !h.is_empty()) {
            if let Some(&j) = index.get(&g.multiply(x, h)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                // Keep the smaller index, which is the ShortLex-least word.
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let identity = find(&mut parent, 0);
    (0..set.len())
        .filter(|&i| find(&mut parent, i) == i && i != identity)
        .map(|i| set[i].clone())
        .collect()
}

/// Searches for a trivial alternating product p₁q₁p₂… with factors outside I
/// and total G-length at most `maxlen`; consistent means none exists.
/// Inner factors range over coset representatives of I; the closing factor
/// is any member of the side outside I. Among witnesses the fewest factors
/// win, then DFS order.
pub fn pingpong_check(
    g: &MarkedGroup,
    p_gens: &[Word],
    q_gens: &[Word],
    i_gens: &[Word],
    maxlen: usize,
) -> Result<PingPong> {
    let cap = enum_cap();
    if maxlen > cap {
        return Err(LabError::cap("ping-pong length", maxlen, cap));
    }
    // A factor of a trivial product is the inverse of the others, so no
    // factor of a witness is longer than half the total.
    let reach = i_gens
        .iter()
        .map(|h| g.word_length(h))
        .max()
        .unwrap_or(0)
        .max(maxlen / 2);
    let sp = subgroup_ball(g, p_gens, reach)?;
    let sq = subgroup_ball(g, q_gens, reach)?;
    let si = subgroup_ball(g, i_gens, reach)?;
    let member = |s: &[Word]| -> HashSet<Word> { s.iter().cloned().collect() };
    let (mp, mq, mi) = (member(&sp), member(&sq), member(&si));
    for h in i_gens {
        let h = g.nf(h);
        for (name, m) in [("P", &mp), ("Q", &mq)] {
            if !m.contains(&h) {
                return Err(LabError::precondition(format!(
                    "I generator {} not found in <{name}> within length {maxlen}",
                    g.format_word(&h)
                )));
            }
        }
    }
    let reps = [
        coset_representatives(g, &sp, &si),
        coset_representatives(g, &sq, &si),
    ];
    let closing: [HashSet<Word>; 2] = [
        mp.iter().filter(|w| !mi.contains(*w)).cloned().collect(),
        mq.iter().filter(|w| !mi.contains(*w)).cloned().collect(),
    ];
    let moves = g.moves();
    let slot: HashMap<Letter, usize> = moves.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let masks = moves.len() <= 64;
    let start_mask = |r: &Word| -> u64 {
        moves
            .iter()
            .enumerate()
            .filter(|(_, &m)| g.word_length(&g.multiply(&[g.inverse_letter(m)], r)) < r.len())
            .fold(0, |acc, (i, _)| acc | 1 << i)
    };
    let starts = if masks {
        [
            reps[0].iter().map(start_mask).collect(),
            reps[1].iter().map(start_mask).collect(),
        ]
    } else {
        [Vec::new(), Vec::new()]
    };
    let mut search = Search {
        g,
        maxlen,
        reps: &reps,
        starts: &starts,
        moves: &moves,
        slot: &slot,
        closing: &closing,
        chosen: Vec::new(),
        best: None,
        products: 0,
    };
    for side in 0..2 {
        search.dfs(side, &[], 0);
    }
    Ok(PingPong {
        maxlen,
        witness: search.best,
        sizes: [sp.len(), sq.len(), si.len()],
        representatives: [reps[0].len(), reps[1].len()],
        products: search.products,
    })
}

struct Search<'a> {
    g: &'a MarkedGroup,
    maxlen: usize,
    reps: &'a [Vec<Word>; 2],
    /// Per representative, the letters it can start with; empty without masks.
    starts: &'a [Vec<u64>; 2],
    moves: &'a [Letter],
    slot: &'a HashMap<Letter, usize>,
    closing: &'a [HashSet<Word>; 2],
    chosen: Vec<Word>,
    best: Option<Vec<Word>>,
    products: u64,
}

impl Search<'_> {
    /// `side` is the side of the next factor, `x` the product so far.
    fn dfs(&mut self, side: usize, x: &[Letter], sum: usize) {
        let k = self.chosen.len();
        let limit = self.best.as_ref().map_or(usize::MAX, |b| b.len());
        if k + 1 >= limit {
            return;
        }
        if k >= 1 {
            let close = self.g.inverse(x);
            let close = self.g.nf(&close);
            if sum + close.len() <= self.maxlen
                && 2 * close.len() <= self.maxlen
                && self.closing[side].contains(&close)
            {
                let mut w = self.chosen.clone();
                w.push(close);
                self.best = Some(w);
                return;
            }
        }
        if k + 2 >= limit {
            return;
        }
        // Inverses of the letters x can end with. Lengths add unless one of
        // them starts r; this holds in every family here, none of which has
        // braid relations.
        let ends: Option<u64> = (!self.starts[side].is_empty()).then(|| {
            self.moves
                .iter()
                .filter(|&&m| {
                    self.g
                        .word_length(&self.g.multiply(x, &[self.g.inverse_letter(m)]))
                        < x.len()
                })
                .fold(0, |acc, &m| acc | 1 << self.slot[&self.g.inverse_letter(m)])
        });
        for (ri, r) in self.reps[side].iter().enumerate() {
            if let Some(e) = ends {
                if e & self.starts[side][ri] == 0 && sum + 2 * r.len() + x.len() > self.maxlen {
                    if 2 * r.len() > self.maxlen {
                        break;
                    }
                    continue;
                }
            }
            // The product has length at least |r| − |x| and the closing
            // factor costs that much again.
            if sum + 2 * r.len() > self.maxlen + x.len() || 2 * r.len() > self.maxlen {
                break;
            }
            let y = self.g.multiply(x, r);
            self.products += 1;
            let s2 = sum + r.len();
            if s2 + y.len().max(1) > self.maxlen {
                continue;
            }
            self.chosen.push(r.clone());
            self.dfs(1 - side, &y, s2);
            self.chosen.pop();
            if self.best.as_ref().is_some_and(|b| b.len() <= k + 2) {
                return;
            }
        }
    }
}

// ----- slim triangles -----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlimnessResult {
    #[serde(rename = "R")]
    pub radius: usize,
    pub delta_min: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_triangle: Option<[Word; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub delta: usize,
    pub verdict: bool,
    pub slimness: SlimnessResult,
    pub triangles: usize,
}

impl Certificate {
    pub fn to_json(&self, g: &MarkedGroup) -> Value {
        json!({
            "verdict": if self.verdict { "pass" } else { "fail" },
            "R": self.slimness.radius,
            "delta": self.delta,
            "delta_min": self.slimness.delta_min,
            "witness_triangle": self.slimness.witness_triangle.as_ref().map(|t| words_json(g, t)),
            "triangles": self.triangles,
        })
    }
}

/// All geodesics between two vertices, as point lists, plus the points
/// shared by all of them.
struct Side {
    geodesics: Vec<Vec<Word>>,
    common: HashSet<Word>,
}

impl Side {
    fn new(g: &MarkedGroup, u: &[Letter], v: &[Letter]) -> Side {
        let start = g.nf(u);
        let z = g.multiply(&g.inverse(u), v);
        let mut geodesics = Vec::new();
        for_each_geodesic_word(g, &z, &mut |w| {
            let mut pts = Vec::with_capacity(w.len() + 1);
            let mut acc = g.acc_from_word(&start);
            pts.push(start.clone());
            for &l in w {
                g.push(&mut acc, l);
                pts.push(g.acc_word(&acc));
            }
            geodesics.push(pts);
            true
        });
        let mut common: HashSet<Word> = geodesics[0].iter().cloned().collect();
        for gd in &geodesics[1..] {
            let here: HashSet<&Word> = gd.iter().collect();
            common.retain(|p| here.contains(p));
        }
        Side { geodesics, common }
    }

    /// Worst case over geodesics of this side of the distance from p.
    fn far(&self, g: &MarkedGroup, p: &[Letter]) -> usize {
        if self.common.contains(p) {
            return 0;
        }
        self.geodesics
            .iter()
            .map(|gd| gd.iter().map(|q| g.dist(p, q)).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// Contribution of one side: worst point over all its geodesics, each
/// point charged the nearer of the two other sides at their worst choice.
fn side_slimness(g: &MarkedGroup, s: &Side, o1: &Side, o2: &Side) -> usize {
    let mut worst = 0;
    for gd in &s.geodesics {
        for p in gd {
            if o1.common.contains(p) || o2.common.contains(p) {
                continue;
            }
            let a = o1.far(g, p);
            if a <= worst {
                continue;
            }
            worst = worst.max(a.min(o2.far(g, p)));
        }
    }
    worst
}

fn slimness_of(g: &MarkedGroup, xy: &Side, yz: &Side, zx: &Side) -> usize {
    side_slimness(g, xy, yz, zx)
        .max(side_slimness(g, yz, zx, xy))
        .max(side_slimness(g, zx, xy, yz))
}

/// Slimness of the worst geodesic triangle on the given vertices.
pub fn triangle_slimness(
    g: &MarkedGroup,
    x: &[Letter],
    y: &[Letter],
    z: &[Letter],
) -> Result<usize> {
    for w in [x, y, z] {
        g.check_word(w)?;
    }
    let cap = enum_cap();
    for (u, v) in [(x, y), (y, z), (z, x)] {
        let d = g.dist(u, v);
        if d > cap {
            return Err(LabError::cap("triangle side length", d, cap));
        }
    }
    Ok(slimness_of(
        g,
        &Side::new(g, x, y),
        &Side::new(g, y, z),
        &Side::new(g, z, x),
    ))
}

/// Exhaustive over vertex triples of ball(e, R), up to order and including
/// degenerate ones, and over every choice of geodesic sides.
pub fn local_hyperbolicity_certificate(
    g: &MarkedGroup,
    radius: usize,
    delta: usize,
) -> Result<Certificate> {
    let big = g.ball(&[], 2 * radius)?;
    let verts: Vec<Word> = big
        .within(radius)
        .map(|i| big.vertices[i].clone())
        .collect();
    let n = verts.len();
    let mut sides: HashMap<(usize, usize), Rc<Side>> = HashMap::new();
    let mut side = |i: usize, j: usize| -> Rc<Side> {
        let key = (i.min(j), i.max(j));
        sides
            .entry(key)
            .or_insert_with(|| Rc::new(Side::new(g, &verts[key.0], &verts[key.1])))
            .clone()
    };
    let mut best: Option<(usize, [usize; 3])> = None;
    let mut triangles = 0;
    for i in 0..n {
        for j in i..n {
            let ij = side(i, j);
            for k in j..n {
                triangles += 1;
                let s = slimness_of(g, &ij, &side(j, k), &side(k, i));
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, [i, j, k]));
                }
            }
        }
    }
    let (delta_min, at) = best.expect("the ball holds e");
    Ok(Certificate {
        delta,
        verdict: delta_min <= delta,
        slimness: SlimnessResult {
            radius,
            delta_min,
            witness_triangle: (delta_min > 0).then(|| at.map(|i| verts[i].clone())),
        },
        triangles,
    })
}

/// Survey of triangles (e, x, y) with x, y in ball(e, R).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointedSurvey {
    #[serde(rename = "R")]
    pub radius: usize,
    pub triangles: usize,
    pub max_slimness: usize,
}

/// Exact slimness of every triangle (e, x, y) with x, y in ball(e, R).
pub fn pointed_slimness(g: &MarkedGroup, radius: usize) -> Result<PointedSurvey> {
    pointed_survey(g, radius)
}

/// Outcome of the gauge-weighted slimness check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaugeSlimness {
    #[serde(rename = "R")]
    pub radius: usize,
    pub cell: QGParams,
    /// Measured gauge of each one-letter geodesic.
    pub letter_gauges: Vec<usize>,
    /// Smallest letter gauge: a lower bound for the gauge of every nontrivial side.
    pub m_floor: usize,
    pub bound: usize,
    /// Unordered vertex triples of ball(e, R), degenerate ones included.
    pub triangles: u128,
    pub certified_by_length: bool,
    pub computed: usize,
    pub max_computed: usize,
    pub exceptions: usize,
}

/// Checks that triangles with vertices in ball(e, R) are (4m+2)-slim, where
/// m bounds the gauges of two sides at `cell`. A subsegment's gauge never
/// exceeds its geodesic's, so every nontrivial side has gauge at least the
/// smallest letter gauge m₀. Sides have length at most 2R and their points
/// lie within R of an endpoint shared with another side, so R ≤ 4m₀+2
/// settles every triangle; otherwise the triangles (e, x, y) with a long
/// side are computed exactly.
pub fn gauge_slimness_check(
    g: &MarkedGroup,
    radius: usize,
    cell: &QGParams,
) -> Result<GaugeSlimness> {
    let cap = enum_cap();
    let mut letter_gauges = Vec::new();
    for m in g.moves() {
        let p = PathInGraph::from_word(g, &[m])?;
        let est = morse_gauge_estimate(g, &p, &[*cell], cap)?;
        if est.grid[0].capped {
            return Err(LabError::cap(
                "letter gauge enumeration",
                cell.max_length(1),
                cap,
            ));
        }
        letter_gauges.push(est.grid[0].bound);
    }
    let m_floor = letter_gauges.iter().copied().min().unwrap_or(0);
    let bound = 4 * m_floor + 2;
    let ball = g.ball(&[], radius)?;
    let n = ball.len() as u128;
    let mut out = GaugeSlimness {
        radius,
        cell: *cell,
        letter_gauges,
        m_floor,
        bound,
        triangles: (n + 2) * (n + 1) * n / 6,
        certified_by_length: radius <= bound,
        computed: 0,
        max_computed: 0,
        exceptions: 0,
    };
    if out.certified_by_length {
        return Ok(out);
    }
    if 2 * radius > cap {
        return Err(LabError::cap("triangle side length", 2 * radius, cap));
    }
    let verts = &ball.vertices;
    let from_e: Vec<Side> = verts.iter().map(|v| Side::new(g, &[], v)).collect();
    for i in 0..verts.len() {
        for j in i..verts.len() {
            let d = g.dist(&verts[i], &verts[j]);
            if d / 2 <= bound {
                continue;
            }
            let xy = Side::new(g, &verts[i], &verts[j]);
            let s = slimness_of(g, &from_e[i], &xy, &from_e[j]);
            out.computed += 1;
            out.max_computed = out.max_computed.max(s);
            if s > bound {
                out.exceptions += 1;
            }
        }
    }
    Ok(out)
}

fn pointed_survey(g: &MarkedGroup, radius: usize) -> Result<PointedSurvey> {
    let cap = enum_cap();
    if 2 * radius > cap {
        return Err(LabError::cap("triangle side length", 2 * radius, cap));
    }
    let ball = g.ball(&[], radius)?;
    let verts = &ball.vertices;
    let from_e: Vec<Side> = verts.iter().map(|v| Side::new(g, &[], v)).collect();
    let mut out = PointedSurvey {
        radius,
        triangles: 0,
        max_slimness: 0,
    };
    for i in 0..verts.len() {
        for j in i..verts.len() {
            out.triangles += 1;
            let xy = Side::new(g, &verts[i], &verts[j]);
            let s = slimness_of(g, &from_e[i], &xy, &from_e[j]);
            out.max_slimness = out.max_slimness.max(s);
        }
    }
    Ok(out)
}

// ----- long local geodesics in free products -----

/// Labels of an L-local geodesic in a free product of free and free abelian
/// factors, as `syllables` alternating syllables of random length at most
/// `max_syllable`. Abelian syllables never use a letter whose inverse
/// occurred in the previous L letters; free syllables are reduced.
pub fn free_product_local_geodesic(
    g: &MarkedGroup,
    scale: usize,
    syllables: usize,
    max_syllable: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Word> {
    let Kind::FreeProduct(fs) = &g.kind else {
        return Err(LabError::precondition(
            "local geodesic generation needs a free product",
        ));
    };
    if fs
        .iter()
        .any(|f| !matches!(f.group.kind, Kind::Free | Kind::Abelian { .. }))
    {
        return Err(LabError::precondition(
            "factors must be free or free abelian",
        ));
    }
    if scale == 0 || max_syllable == 0 {
        return Err(LabError::malformed(
            "scale and syllable length must be at least 1",
        ));
    }
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for _ in 0..syllables {
        let f = loop {
            let f = rng.gen_range(0..fs.len());
            if Some(f) != prev {
                break f;
            }
        };
        prev = Some(f);
        let factor = &fs[f];
        let moves = factor.group.moves();
        let len = rng.gen_range(1..=max_syllable);
        // Position of the latest use of each local letter.
        let mut last: HashMap<Letter, usize> = HashMap::new();
        let abelian = matches!(factor.group.kind, Kind::Abelian { .. });
        let mut prev_letter: Option<Letter> = None;
        for pos in 0..len {
            let allowed: Vec<Letter> = moves
                .iter()
                .copied()
                .filter(|&m| {
                    let inv = factor.group.inverse_letter(m);
                    if abelian {
                        last.get(&inv).is_none_or(|&p| pos - p > scale)
                    } else {
                        prev_letter != Some(inv)
                    }
                })
                .collect();
            let m = allowed[rng.gen_range(0..allowed.len())];
            last.insert(m, pos);
            prev_letter = Some(m);
            out.push(Letter::new(m.gen + factor.offset, m.inv));
        }
    }
    Ok(out)
}

/// Cuts [0, n) into geodesic pieces for the concatenation lemma: every
/// piece has length at most L and consecutive pieces sum to more than L.
fn cut_points(n: usize, scale: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < n {
        let rest = n - at;
        let piece = if rest <= scale {
            rest
        } else if rest <= 2 * scale {
            scale
        } else {
            rng.gen_range(scale / 2 + 1..=scale)
        };
        out.push((at, at + piece));
        at += piece;
    }
    out
}

/// Builds seeded L-local geodesics by concatenating geodesic pieces at
/// L = 12θ, decomposes each with B = 2θ+1 and checks every invariant.
pub fn decomposition_experiment(
    g: &MarkedGroup,
    c: &RelHypConstants,
    samples: usize,
    syllables: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    c.check()?;
    let scale = 12 * c.theta;
    let b = 2 * c.theta + 1;
    let q = QGParams::geodesic();
    let lp = LocalParams::new(scale, q)?;
    let params = json!({"L": scale, "B": b, "samples": samples, "syllables": syllables, "constants": c.to_json()});
    let mut r = ExperimentReport::new("decomposition", g, params, Some(seed));
    let names = [
        "concatenation_hypothesis",
        "segments_tile",
        "alpha_near_peripheral",
        "sigma_projection_bounded",
        "deep_components_separated",
        "adjacent_peripherals_distinct",
    ];
    let mut failures: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    let (mut alphas, mut total_len, mut worst_alpha, mut worst_sigma) =
        (0usize, 0usize, 0usize, 0usize);
    let mut sigma_bound = rat(0);
    for i in 0..samples {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64));
        let labels = loop {
            let w = free_product_local_geodesic(g, scale, syllables, scale / 2, &mut rng)?;
            if w.len() > scale {
                break w;
            }
        };
        let pieces: Vec<PathInGraph> = {
            let whole = PathInGraph {
                start: Vec::new(),
                labels,
            };
            let cuts = cut_points(whole.len(), scale, &mut rng);
            let mut at: Word = Vec::new();
            let mut v = Vec::with_capacity(cuts.len());
            for (s, t) in cuts {
                let seg = PathInGraph {
                    start: at,
                    labels: whole.labels[s..t].to_vec(),
                };
                at = seg.end(g);
                v.push(seg);
            }
            v
        };
        let cat = concat_geodesics(g, &pieces, &lp)?;
        total_len += cat.path.len();
        let mut fail = |k: usize, ok: bool| {
            if !ok {
                failures[k].push(i);
            }
        };
        fail(0, cat.lemma_hypothesis_met);
        let d = relevant_decomposition(g, &cat.path, scale, b, c, &q)?;
        let chk = check_decomposition(g, &cat.path, &d)?;
        alphas += d.alphas().count();
        worst_alpha = worst_alpha.max(chk.alpha_max_distance);
        worst_sigma = worst_sigma.max(chk.sigma_projection);
        sigma_bound = chk.sigma_bound;
        fail(1, chk.segments_tile);
        fail(2, chk.alpha_near);
        fail(3, chk.sigma_bounded);
        fail(4, chk.deep_components_separated);
        fail(5, chk.adjacent_distinct);
    }
    for (name, f) in names.iter().zip(&failures) {
        let detail = f
            .first()
            .map(|i| format!("{} failures, first at sample {i}", f.len()));
        r.invariant(name, f.is_empty(), detail);
    }
    r.measure("theta", "relhyp", c.theta);
    r.measure("alpha_count", "verify", alphas);
    r.measure("mean_length", "verify", total_len / samples.max(1));
    r.measure("alpha_max_distance", "relhyp", worst_alpha);
    r.measure("sigma_projection", "relhyp", worst_sigma);
    r.measure("sigma_bound", "relhyp", format_rat(&sigma_bound));
    Ok(r.finish(started))
}

// ----- trichotomy -----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrichotomyCase {
    /// Morse-limited: gauged quasi-geodesics have bounded length.
    MorseLimited,
    VirtuallyCyclic,
    /// A rank-two free subgroup passed the ping-pong sweep.
    FreeSubgroup,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrichotomyEvidence {
    pub probe: ProbeOutcome,
    pub ball_sizes: Vec<usize>,
    pub linear_growth: bool,
    /// Primitive period of the extracted candidate.
    pub candidate: Option<Word>,
    pub candidate_periodic: bool,
    pub conjugator: Option<Word>,
    pub pingpong: Option<PingPong>,
    pub case: TrichotomyCase,
}

impl TrichotomyEvidence {
    pub fn to_report(&self, g: &MarkedGroup, maxlen: usize, started: Instant) -> ExperimentReport {
        let mut r = ExperimentReport::new("trichotomy", g, json!({"maxlen": maxlen}), None);
        r.measure("probe", "morse", self.probe);
        r.measure("ball_sizes", "groups", &self.ball_sizes);
        r.measure("linear_growth", "verify", self.linear_growth);
        r.measure(
            "candidate",
            "morse",
            self.candidate.as_ref().map(|w| g.format_word(w)),
        );
        r.measure(
            "candidate_periodic_local_geodesic",
            "morse",
            self.candidate_periodic,
        );
        r.measure(
            "conjugator",
            "verify",
            self.conjugator.as_ref().map(|w| g.format_word(w)),
        );
        r.measure(
            "pingpong",
            "verify",
            self.pingpong.as_ref().map(|p| p.to_json(g)),
        );
        r.measure("case", "verify", self.case);
        if self.case == TrichotomyCase::Inconclusive {
            r.flag("inconclusive evidence");
        }
        r.finish(started)
    }
}

fn primitive_root(w: &[Letter]) -> Word {
    let n = w.len();
    (1..=n)
        .find(|&d| n.is_multiple_of(d) && (0..n).all(|i| w[i] == w[i % d]))
        .map_or_else(Vec::new, |d| w[..d].to_vec())
}

/// First word of length at most 2, in ShortLex order, whose sixth power is
/// spelled geodesically.
fn axis_word(g: &MarkedGroup) -> Option<Word> {
    let moves = g.moves();
    let mut words: Vec<Word> = moves.iter().map(|&m| vec![m]).collect();
    for &a in &moves {
        for &b in &moves {
            words.push(vec![a, b]);
        }
    }
    words.into_iter().find(|u| {
        let p = u.repeat(6);
        g.word_length(&p) == p.len()
    })
}

/// Evidence for the three cases, checked in order: affine growth, then a
/// bounded probe, then ping-pong on ⟨g⟩ and ⟨hgh⁻¹⟩.
pub fn trichotomy_probe(g: &MarkedGroup, maxlen: usize) -> Result<TrichotomyEvidence> {
    if maxlen < 2 {
        return Err(LabError::malformed("trichotomy probe needs maxlen >= 2"));
    }
    let gauge = MorseGaugeTable::supplied(&[(QGParams::geodesic(), 1)])?;
    let probe = morse_limited_probe(g, &gauge, &QGParams::geodesic(), maxlen.min(enum_cap()))?;
    let radius = maxlen.min(crate::error::ball_cap());
    let ball_sizes: Vec<usize> = {
        let b = g.ball(&[], radius)?;
        let spheres = b.sphere_sizes();
        spheres
            .iter()
            .scan(0, |s, &x| {
                *s += x;
                Some(*s)
            })
            .collect()
    };
    let linear_growth =
        ball_sizes.len() >= 3 && ball_sizes.windows(3).all(|w| w[2] + w[0] == 2 * w[1]);
    let mut ev = TrichotomyEvidence {
        probe,
        ball_sizes,
        linear_growth,
        candidate: None,
        candidate_periodic: false,
        conjugator: None,
        pingpong: None,
        case: TrichotomyCase::Inconclusive,
    };
    if let Some(u) = axis_word(g) {
        let seg = PathInGraph::from_word(g, &u.repeat(6))?;
        if let Ok(m) = extract_periodic_morse_candidate(g, &seg, u.len()) {
            let root = primitive_root(&m.candidate);
            ev.candidate_periodic = m.periodic_local_geodesic;
            let h = g.moves().into_iter().find(|l| l.gen != root[0].gen);
            if let Some(h) = h {
                let conj = g.multiply(&g.multiply(&[h], &root), &[g.inverse_letter(h)]);
                ev.pingpong = Some(pingpong_check(
                    g,
                    std::slice::from_ref(&root),
                    &[conj],
                    &[],
                    maxlen.min(enum_cap()),
                )?);
                ev.conjugator = Some(vec![h]);
            }
            ev.candidate = Some(root);
        }
    }
    ev.case = if linear_growth {
        TrichotomyCase::VirtuallyCyclic
    } else if matches!(probe, ProbeOutcome::Bound(n) if n < maxlen) {
        TrichotomyCase::MorseLimited
    } else if ev.pingpong.as_ref().is_some_and(|p| p.consistent()) {
        TrichotomyCase::FreeSubgroup
    } else {
        TrichotomyCase::Inconclusive
    };
    Ok(ev)
}

// ----- translation spectrum -----

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumClass {
    /// ShortLex-least shortest element found in the class.
    pub representative: Word,
    pub tau: Rat,
    pub exact: bool,
    /// The conjugation search hit its size cap.
    pub approximate: bool,
    /// Number of shortest members found.
    pub shortest: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub maxlen: usize,
    pub values: Vec<Rat>,
    pub classes: Vec<SpectrumClass>,
    pub filtered_out: usize,
    pub min_gap: Option<Rat>,
}

impl Spectrum {
    pub fn to_report(
        &self,
        g: &MarkedGroup,
        gauge_cap: Option<&MorseGaugeTable>,
        started: Instant,
    ) -> ExperimentReport {
        let mut r = ExperimentReport::new(
            "spectrum",
            g,
            json!({"maxlen": self.maxlen, "gauge_cap": gauge_cap}),
            None,
        );
        r.measure(
            "tau_values",
            "morse",
            self.values.iter().map(format_rat).collect::<Vec<_>>(),
        );
        r.measure("min_gap", "verify", self.min_gap.map(|x| format_rat(&x)));
        r.measure("classes", "verify", self.classes.len());
        r.measure("filtered_out", "verify", self.filtered_out);
        let approx = self.classes.iter().filter(|c| c.approximate).count();
        if approx > 0 {
            r.flag(format!("{approx} classes flagged approximate"));
        }
        let mut t = Table::new(&["class", "tau", "exact", "approximate"]);
        for c in &self.classes {
            t.rows.push(vec![
                g.format_word(&c.representative),
                format_rat(&c.tau),
                c.exact.to_string(),
                c.approximate.to_string(),
            ]);
        }
        r.table = Some(t);
        r.finish(started)
    }
}

const CLASS_SEARCH_CAP: usize = 20_000;

/// Conjugates of w by generators, iterated within length |w|+2; returns the
/// shortest members found and whether the search was cut off.
fn conjugacy_search(g: &MarkedGroup, w: &[Letter]) -> (Vec<Word>, bool) {
    let start = g.nf(w);
    let budget = start.len() + 2;
    let moves = g.moves();
    let mut seen: HashSet<Word> = HashSet::new();
    seen.insert(start.clone());
    let mut queue = vec![start];
    let mut cut = false;
    while let Some(x) = queue.pop() {
        for &m in &moves {
            let y = g.multiply(&g.multiply(&[g.inverse_letter(m)], &x), &[m]);
            if y.len() <= budget && !seen.contains(&y) {
                if seen.len() >= CLASS_SEARCH_CAP {
                    cut = true;
                    break;
                }
                seen.insert(y.clone());
                queue.push(y);
            }
        }
        if cut {
            break;
        }
    }
    let min = seen.iter().map(|x| x.len()).min().unwrap_or(0);
    let mut shortest: Vec<Word> = seen.into_iter().filter(|x| x.len() == min).collect();
    shortest.sort_by(|a, b| shortlex_cmp(a, b));
    (shortest, cut)
}

/// τ over conjugacy classes meeting ball(e, maxlen). With a gauge cap, a
/// class is kept only if the normal geodesics of all its shortest members
/// measure within the cap.
pub fn translation_spectrum(
    g: &MarkedGroup,
    maxlen: usize,
    gauge_cap: Option<&MorseGaugeTable>,
) -> Result<Spectrum> {
    let ball = g.ball(&[], maxlen)?;
    let mut classes: BTreeMap<Word, SpectrumClass> = BTreeMap::new();
    let mut rejected: HashSet<Word> = HashSet::new();
    let mut done: HashSet<Word> = HashSet::new();
    let cap = enum_cap();
    for v in &ball.vertices {
        if done.contains(v) {
            continue;
        }
        let (shortest, cut) = conjugacy_search(g, v);
        let rep = shortest[0].clone();
        if !cut {
            done.extend(shortest.iter().cloned());
        }
        if classes.contains_key(&rep) || rejected.contains(&rep) {
            continue;
        }
        if let Some(capt) = gauge_cap {
            let cells: Vec<QGParams> = capt.grid.iter().map(|c| c.qg).collect();
            let mut ok = true;
            for s in &shortest {
                let est = morse_gauge_estimate(g, &PathInGraph::from_word(g, s)?, &cells, cap)?;
                if !est.within(capt) || est.grid.iter().any(|c| c.capped) {
                    ok = false;
                    break;
                }
            }
            if !ok {
                rejected.insert(rep);
                continue;
            }
        }
        let (tau, exact) = match exact_translation(g, &rep) {
            Some(t) => (t, true),
            None => (translation_length(g, &rep, 4 * maxlen.max(1))?.upper, false),
        };
        classes.insert(
            rep.clone(),
            SpectrumClass {
                representative: rep,
                tau,
                exact,
                approximate: cut,
                shortest: shortest.len(),
            },
        );
    }
    let mut list: Vec<SpectrumClass> = classes.into_values().collect();
    list.sort_by(|a, b| shortlex_cmp(&a.representative, &b.representative));
    let mut values: Vec<Rat> = list.iter().map(|c| c.tau).collect();
    values.sort();
    values.dedup();
    let min_gap = values.windows(2).map(|w| w[1] - w[0]).min();
    Ok(Spectrum {
        maxlen,
        values,
        classes: list,
        filtered_out: rejected.len(),
        min_gap,
    })
}
