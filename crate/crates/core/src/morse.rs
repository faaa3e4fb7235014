//! Morse gauges as measured tables, contraction, Morse-limited probes,
//! quasi-axes, translation lengths and periodic Morse candidates.

use serde::{Deserialize, Serialize};

use crate::error::{enum_cap, LabError, Result};
use crate::groups::{Acc, Ball, Kind, Letter, MarkedGroup, Word};
use crate::paths::{hausdorff_points, is_local_quasi_geodesic, LocalParams, PathInGraph, QGParams};
use crate::rat::{rat, Rat};

/// Depth-first search over edge paths from the identity whose every pair of
/// points satisfies the quasi-geodesic inequalities.
struct QgSearch<'a> {
    g: &'a MarkedGroup,
    moves: Vec<Letter>,
    q: QGParams,
    target: Option<Word>,
    max_len: usize,
    labels: Vec<Letter>,
    /// rows[t][i] holds p_i⁻¹ p_t for i ≤ t.
    rows: Vec<Vec<Acc>>,
}

impl<'a> QgSearch<'a> {
    fn new(g: &'a MarkedGroup, q: QGParams, target: Option<Word>, max_len: usize) -> Self {
        QgSearch {
            g,
            moves: g.moves(),
            q,
            target,
            max_len,
            labels: Vec::new(),
            rows: vec![vec![g.identity_acc()]],
        }
    }

    fn remaining(&self, here: &Acc) -> Option<usize> {
        self.target.as_ref().map(|z| {
            let mut w = self.g.inverse(&self.g.acc_word(here));
            w.extend_from_slice(z);
            self.g.word_length(&w)
        })
    }

    fn run(&mut self, f: &mut dyn FnMut(&[Letter]) -> bool) {
        self.step(f);
    }

    fn step(&mut self, f: &mut dyn FnMut(&[Letter]) -> bool) -> bool {
        let t = self.labels.len();
        let here = self.rows[t][0].clone();
        let visit = match self.remaining(&here) {
            Some(d) => d == 0,
            None => t == self.max_len,
        };
        if visit && !f(&self.labels) {
            return false;
        }
        if t == self.max_len {
            return true;
        }
        let geodesic = self.q.is_geodesic();
        for mi in 0..self.moves.len() {
            let m = self.moves[mi];
            let mut row: Vec<Acc> = Vec::with_capacity(t + 2);
            let mut ok = true;
            if geodesic {
                let mut a = here.clone();
                self.g.push(&mut a, m);
                ok = a.len() == t + 1;
                row.push(a);
            } else {
                for i in 0..=t {
                    let mut a = self.rows[t][i].clone();
                    self.g.push(&mut a, m);
                    if self.q.margin(t + 1 - i, a.len()) > rat(0) {
                        ok = false;
                        break;
                    }
                    row.push(a);
                }
                row.push(self.g.identity_acc());
            }
            if !ok {
                continue;
            }
            if let Some(d) = self.remaining(&row[0]) {
                if d > self.max_len - (t + 1) {
                    continue;
                }
            }
            self.labels.push(m);
            self.rows.push(row);
            let keep = self.step(f);
            self.rows.pop();
            self.labels.pop();
            if !keep {
                return false;
            }
        }
        true
    }
}

/// Visits the labels of every (λ,ε)-quasi-geodesic from e to `z` of
/// parametrized length at most `max_len`.
pub fn for_each_quasi_geodesic(
    g: &MarkedGroup,
    z: &[Letter],
    q: &QGParams,
    max_len: usize,
    f: &mut dyn FnMut(&[Letter]) -> bool,
) {
    QgSearch::new(g, *q, Some(g.nf(z)), max_len).run(f);
}

/// Visits the labels of every (λ,ε)-quasi-geodesic from e of length exactly `len`.
pub fn for_each_quasi_geodesic_of_length(
    g: &MarkedGroup,
    q: &QGParams,
    len: usize,
    f: &mut dyn FnMut(&[Letter]) -> bool,
) {
    QgSearch::new(g, *q, None, len).run(f);
}

/// All (λ,ε)-quasi-geodesic edge paths from u to v of length at most
/// ⌊λ·d(u,v)+ε⌋, in DFS order.
pub fn enumerate_quasi_geodesics(
    g: &MarkedGroup,
    u: &[Letter],
    v: &[Letter],
    q: &QGParams,
    len_cap: usize,
) -> Result<Vec<PathInGraph>> {
    g.check_word(u)?;
    g.check_word(v)?;
    let limit = enum_cap();
    if len_cap > limit {
        return Err(LabError::cap("enumeration length cap", len_cap, limit));
    }
    let d = g.dist(u, v);
    let max_len = q.max_length(d);
    if max_len > len_cap {
        return Err(LabError::cap(
            "quasi-geodesic length bound",
            max_len,
            len_cap,
        ));
    }
    let start = g.nf(u);
    let z = g.multiply(&g.inverse(u), v);
    let mut out = Vec::new();
    for_each_quasi_geodesic(g, &z, q, max_len, &mut |w| {
        out.push(PathInGraph {
            start: start.clone(),
            labels: w.to_vec(),
        });
        true
    });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Measured,
    Supplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaugeCell {
    pub qg: QGParams,
    pub bound: usize,
    /// Some pairs were skipped because enumeration would exceed the cap.
    #[serde(default)]
    pub capped: bool,
}

/// A Morse gauge sampled on a finite grid of (λ,ε).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseGaugeTable {
    pub grid: Vec<GaugeCell>,
    pub provenance: Provenance,
}

impl MorseGaugeTable {
    pub fn default_grid() -> Vec<QGParams> {
        [(1, 0), (1, 2), (2, 0), (3, 0), (5, 0)]
            .iter()
            .map(|&(l, e)| QGParams::int(l, e))
            .collect()
    }

    pub fn supplied(cells: &[(QGParams, usize)]) -> Result<Self> {
        if cells.is_empty() {
            return Err(LabError::malformed("a gauge table needs at least one cell"));
        }
        Ok(MorseGaugeTable {
            grid: cells
                .iter()
                .map(|&(qg, bound)| GaugeCell {
                    qg,
                    bound,
                    capped: false,
                })
                .collect(),
            provenance: Provenance::Supplied,
        })
    }

    pub fn cell(&self, q: &QGParams) -> Option<&GaugeCell> {
        self.grid.iter().find(|c| c.qg == *q)
    }

    pub fn bound(&self, q: &QGParams) -> Option<usize> {
        self.cell(q).map(|c| c.bound)
    }

    /// Pointwise comparison on the cells of `cap`; cells absent here fail.
    pub fn within(&self, cap: &MorseGaugeTable) -> bool {
        cap.grid
            .iter()
            .all(|c| self.bound(&c.qg).is_some_and(|b| b <= c.bound))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,epsilon,bound,capped\n");
        for c in &self.grid {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::rat::format_rat(&c.qg.lambda),
                crate::rat::format_rat(&c.qg.epsilon),
                c.bound,
                c.capped
            ));
        }
        out
    }
}

/// Worst Hausdorff distance between the segment with labels `seg` (from e)
/// and the (λ,ε)-quasi-geodesics sharing its endpoints, or None if the
/// enumeration bound exceeds `cap`.
fn segment_gauge(g: &MarkedGroup, seg: &[Letter], q: &QGParams, cap: usize) -> Option<usize> {
    let z = g.nf(seg);
    let max_len = q.max_length(z.len());
    if max_len > cap {
        return None;
    }
    let base = PathInGraph {
        start: Vec::new(),
        labels: seg.to_vec(),
    }
    .points(g);
    let mut worst = 0;
    for_each_quasi_geodesic(g, &z, q, max_len, &mut |w| {
        if w != seg {
            let other = PathInGraph {
                start: Vec::new(),
                labels: w.to_vec(),
            }
            .points(g);
            worst = worst.max(hausdorff_points(g, &base, &other));
        }
        true
    });
    Some(worst)
}

/// Measured gauge of a geodesic: for every cell and every subsegment, the
/// largest Hausdorff distance to a quasi-geodesic with the same endpoints.
pub fn morse_gauge_estimate(
    g: &MarkedGroup,
    geodesic: &PathInGraph,
    grid: &[QGParams],
    len_cap: usize,
) -> Result<MorseGaugeTable> {
    if !geodesic.is_geodesic(g) {
        return Err(LabError::precondition(
            "gauge estimation needs a geodesic input",
        ));
    }
    if grid.is_empty() {
        return Err(LabError::malformed("empty gauge grid"));
    }
    let cap = len_cap.min(enum_cap());
    let labels = &geodesic.labels;
    let n = labels.len();
    let mut cells = Vec::with_capacity(grid.len());
    for q in grid {
        let mut bound = 0;
        let mut capped = false;
        let mut seen = std::collections::HashSet::new();
        for s in 0..n {
            for t in s + 1..=n {
                // Translation invariance: only the label subword matters.
                if !seen.insert(&labels[s..t]) {
                    continue;
                }
                match segment_gauge(g, &labels[s..t], q, cap) {
                    Some(b) => bound = bound.max(b),
                    None => capped = true,
                }
            }
        }
        cells.push(GaugeCell {
            qg: *q,
            bound,
            capped,
        });
    }
    Ok(MorseGaugeTable {
        grid: cells,
        provenance: Provenance::Measured,
    })
}

/// Smallest D such that ball points x, y with d(x,y) < d(x,γ) have
/// projections at most D apart; projections are ShortLex-least closest points.
pub fn contraction_constant(g: &MarkedGroup, geodesic: &PathInGraph, ball: &Ball) -> Result<usize> {
    let gamma = geodesic.points(g);
    if let Some(p) = gamma.iter().find(|p| !ball.contains(p)) {
        return Err(LabError::precondition(format!(
            "geodesic point {} lies outside the ball",
            g.format_word(p)
        )));
    }
    let mut sorted = gamma.clone();
    sorted.sort_by(|a, b| crate::groups::shortlex_cmp(a, b));
    sorted.dedup();
    let proj: Vec<(usize, usize)> = ball
        .vertices
        .iter()
        .map(|x| {
            let (mut best, mut bd) = (0, usize::MAX);
            for (i, p) in sorted.iter().enumerate() {
                let d = g.dist(x, p);
                if d < bd {
                    best = i;
                    bd = d;
                }
            }
            (best, bd)
        })
        .collect();
    let mut worst = 0;
    for (i, x) in ball.vertices.iter().enumerate() {
        let (px, dx) = proj[i];
        for (j, y) in ball.vertices.iter().enumerate() {
            let py = proj[j].0;
            if px == py || g.dist(x, y) >= dx {
                continue;
            }
            worst = worst.max(g.dist(&sorted[px], &sorted[py]));
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    Bound(usize),
    UnboundedUpTo(usize),
}

/// Largest n ≤ maxlen such that every (λ,ε)-quasi-geodesic from e of
/// length at most n is dominated by `gauge`. Lengths are tried in order
/// and the first failure ends the probe.
pub fn morse_limited_probe(
    g: &MarkedGroup,
    gauge: &MorseGaugeTable,
    q: &QGParams,
    maxlen: usize,
) -> Result<ProbeOutcome> {
    if maxlen == 0 {
        return Ok(ProbeOutcome::Bound(0));
    }
    let cap = enum_cap();
    for n in 1..=maxlen {
        let mut fails = false;
        let mut err = None;
        for_each_quasi_geodesic_of_length(g, q, n, &mut |alpha| {
            let z = g.nf(alpha);
            for cell in &gauge.grid {
                let max_len = cell.qg.max_length(z.len());
                if max_len > cap {
                    err = Some(LabError::cap("quasi-geodesic length bound", max_len, cap));
                    return false;
                }
                let base = PathInGraph {
                    start: Vec::new(),
                    labels: alpha.to_vec(),
                }
                .points(g);
                let mut over = false;
                for_each_quasi_geodesic(g, &z, &cell.qg, max_len, &mut |w| {
                    if w == alpha {
                        return true;
                    }
                    let other = PathInGraph {
                        start: Vec::new(),
                        labels: w.to_vec(),
                    }
                    .points(g);
                    over = hausdorff_points(g, &base, &other) > cell.bound;
                    !over
                });
                if over {
                    fails = true;
                    return false;
                }
            }
            true
        });
        if let Some(e) = err {
            return Err(e);
        }
        if fails {
            return Ok(ProbeOutcome::Bound(n - 1));
        }
    }
    Ok(ProbeOutcome::UnboundedUpTo(maxlen))
}

#[derive(Clone, Debug)]
pub struct QuasiAxis {
    pub base: PathInGraph,
    pub periods: (i64, i64),
    pub path: PathInGraph,
}

/// Concatenation of the translates gⁿ·α for n in [−periods, periods).
pub fn quasi_axis(
    g: &MarkedGroup,
    elem: &[Letter],
    alpha: &PathInGraph,
    periods: usize,
) -> Result<QuasiAxis> {
    g.check_word(elem)?;
    let target = g.nf(elem);
    if target.is_empty() {
        return Err(LabError::precondition("quasi-axis of the identity"));
    }
    if !alpha.start.is_empty() || alpha.end(g) != target {
        return Err(LabError::precondition("alpha must run from e to g"));
    }
    if !alpha.is_geodesic(g) {
        return Err(LabError::precondition("alpha is not a geodesic"));
    }
    let k = periods as i64;
    let mut labels = Vec::with_capacity(2 * periods * alpha.len());
    for _ in 0..2 * periods {
        labels.extend_from_slice(&alpha.labels);
    }
    Ok(QuasiAxis {
        base: alpha.clone(),
        periods: (-k, k),
        path: PathInGraph {
            start: g.power(&target, -k),
            labels,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationEstimate {
    #[serde(with = "crate::rat")]
    pub upper: Rat,
    #[serde(with = "crate::rat::option")]
    pub exact: Option<Rat>,
    pub n_max: usize,
}

/// min over n ≤ n_max of |gⁿ|/n, plus the exact value where a closed form exists.
pub fn translation_length(
    g: &MarkedGroup,
    elem: &[Letter],
    n_max: usize,
) -> Result<TranslationEstimate> {
    g.check_word(elem)?;
    if n_max == 0 {
        return Err(LabError::malformed("n_max must be at least 1"));
    }
    let base = g.nf(elem);
    let mut acc = g.identity_acc();
    let mut upper: Option<Rat> = None;
    for n in 1..=n_max {
        for &l in &base {
            g.push(&mut acc, l);
        }
        let v = Rat::new(acc.len() as i64, n as i64);
        upper = Some(upper.map_or(v, |u: Rat| u.min(v)));
    }
    Ok(TranslationEstimate {
        upper: upper.expect("n_max >= 1"),
        exact: exact_translation(g, &base),
        n_max,
    })
}

/// Closed-form translation length; None for right-angled Coxeter groups.
pub fn exact_translation(g: &MarkedGroup, elem: &[Letter]) -> Option<Rat> {
    let w = g.nf(elem);
    if w.is_empty() {
        return Some(rat(0));
    }
    match &g.kind {
        Kind::Free => Some(rat(cyclic_reduction_free(g, &w).len() as i64)),
        Kind::Abelian { .. } => Some(rat(w.len() as i64)),
        Kind::Racg { .. } => None,
        Kind::Direct(fs) => {
            let mut total = rat(0);
            for (i, f) in fs.iter().enumerate() {
                let local: Word = w
                    .iter()
                    .filter(|l| g.factor_of(l.gen).0 == i)
                    .map(|l| Letter::new(l.gen - f.offset, l.inv))
                    .collect();
                total += exact_translation(&f.group, &local)?;
            }
            Some(total)
        }
        Kind::FreeProduct(fs) => {
            let mut syl = syllables(g, &w);
            // Conjugate the last syllable to the front while the ends share a factor.
            while syl.len() >= 2 && syl[0].0 == syl[syl.len() - 1].0 {
                let (f, last) = syl.pop().expect("len >= 2");
                let mut merged = last;
                merged.extend_from_slice(&syl[0].1);
                let merged = fs[f].group.nf(&merged);
                if merged.is_empty() {
                    syl.remove(0);
                } else {
                    syl[0].1 = merged;
                }
            }
            match syl.len() {
                0 => Some(rat(0)),
                1 => exact_translation(&fs[syl[0].0].group, &syl[0].1),
                _ => Some(rat(syl.iter().map(|s| s.1.len() as i64).sum())),
            }
        }
    }
}

/// Maximal same-factor runs of a free-product normal form, in local letters.
pub fn syllables(g: &MarkedGroup, w: &[Letter]) -> Vec<(usize, Word)> {
    let mut out: Vec<(usize, Word)> = Vec::new();
    for &l in w {
        let (f, local) = g.factor_of(l.gen);
        let ll = Letter::new(local, l.inv);
        match out.last_mut() {
            Some((lf, s)) if *lf == f => s.push(ll),
            _ => out.push((f, vec![ll])),
        }
    }
    out
}

fn cyclic_reduction_free(g: &MarkedGroup, w: &[Letter]) -> Word {
    let mut lo = 0;
    let mut hi = w.len();
    while hi - lo >= 2 && w[lo] == g.inverse_letter(w[hi - 1]) {
        lo += 1;
        hi -= 1;
    }
    w[lo..hi].to_vec()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorseCandidate {
    pub w1: Word,
    pub w2: Word,
    pub candidate: Word,
    /// Block indices m < n with equal blocks.
    pub blocks: (usize, usize),
    /// The periodic path spelled by three copies of the candidate is a local
    /// geodesic at scale L.
    pub periodic_local_geodesic: bool,
}

/// Pigeonhole on the 2L-blocks of a long geodesic: find equal blocks at
/// indices m < n with n − m ≥ 2 and return w1 = the block, w2 = the labels
/// strictly between, candidate = w1·w2.
pub fn extract_periodic_morse_candidate(
    g: &MarkedGroup,
    segment: &PathInGraph,
    scale: usize,
) -> Result<MorseCandidate> {
    if scale == 0 {
        return Err(LabError::malformed("scale L must be at least 1"));
    }
    if !segment.is_geodesic(g) {
        return Err(LabError::precondition("segment is not a geodesic"));
    }
    let b = 2 * scale;
    let labels = &segment.labels;
    let count = labels.len() / b;
    let block = |k: usize| &labels[k * b..(k + 1) * b];
    for n in 2..count {
        for m in 0..n - 1 {
            if block(m) == block(n) {
                let w1 = block(m).to_vec();
                let w2 = labels[(m + 1) * b..n * b].to_vec();
                let mut candidate = w1.clone();
                candidate.extend_from_slice(&w2);
                let periodic = PathInGraph {
                    start: Vec::new(),
                    labels: candidate.repeat(3),
                };
                let lp = LocalParams::new(scale, QGParams::geodesic())?;
                let ok = is_local_quasi_geodesic(g, &periodic, &lp).verdict;
                return Ok(MorseCandidate {
                    w1,
                    w2,
                    candidate,
                    blocks: (m, n),
                    periodic_local_geodesic: ok,
                });
            }
        }
    }
    Err(LabError::precondition(format!(
        "no repeated {b}-block at distance >= 2 in a segment of length {}; supply a longer segment",
        labels.len()
    )))
}
