//! Edge paths in Cayley graphs and the quasi-geodesic predicates on them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::groups::{Letter, MarkedGroup, Word};
use crate::rat::{rat, Rat};

/// Multiplicative and additive quasi-geodesic constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QGParams {
    #[serde(with = "crate::rat")]
    pub lambda: Rat,
    #[serde(with = "crate::rat")]
    pub epsilon: Rat,
}

impl QGParams {
    pub fn new(lambda: Rat, epsilon: Rat) -> Result<Self> {
        if lambda < rat(1) || epsilon < rat(0) {
            return Err(LabError::malformed(format!(
                "need lambda >= 1 and epsilon >= 0, got ({lambda}, {epsilon})"
            )));
        }
        Ok(QGParams { lambda, epsilon })
    }

    /// Integer constants; panics on out-of-range values (test and table use).
    pub fn int(lambda: i64, epsilon: i64) -> Self {
        Self::new(rat(lambda), rat(epsilon)).expect("valid integer constants")
    }

    pub fn geodesic() -> Self {
        Self::int(1, 0)
    }

    pub fn is_geodesic(&self) -> bool {
        self.lambda == rat(1) && self.epsilon == rat(0)
    }

    /// Largest admissible parametrized length for endpoints at distance `d`.
    pub fn max_length(&self, d: usize) -> usize {
        (self.lambda * rat(d as i64) + self.epsilon)
            .floor()
            .to_integer() as usize
    }

    /// Violation margin of one pair at parameter gap `gap` and distance `d`;
    /// positive exactly when one of the two inequalities fails.
    pub fn margin(&self, gap: usize, d: usize) -> Rat {
        let gap = rat(gap as i64);
        let d = rat(d as i64);
        let lower = gap / self.lambda - self.epsilon - d;
        let upper = d - self.lambda * gap - self.epsilon;
        lower.max(upper)
    }

    pub fn label(&self) -> String {
        format!(
            "({},{})",
            crate::rat::format_rat(&self.lambda),
            crate::rat::format_rat(&self.epsilon)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalParams {
    pub scale: usize,
    pub qg: QGParams,
}

impl LocalParams {
    pub fn new(scale: usize, qg: QGParams) -> Result<Self> {
        if scale == 0 {
            return Err(LabError::malformed("scale L must be at least 1"));
        }
        Ok(LocalParams { scale, qg })
    }
}

/// A unit-step edge path: a start vertex and the generator labels of its
/// edges. Point t is start · labels[..t].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathInGraph {
    pub start: Word,
    pub labels: Vec<Letter>,
}

impl PathInGraph {
    pub fn new(g: &MarkedGroup, start: &[Letter], labels: Vec<Letter>) -> Result<Self> {
        g.check_word(start)?;
        g.check_word(&labels)?;
        let labels = labels.into_iter().map(|l| g.letter(l.gen, l.inv)).collect();
        Ok(PathInGraph {
            start: g.nf(start),
            labels,
        })
    }

    /// Path from the identity spelling `word` letter by letter.
    pub fn from_word(g: &MarkedGroup, word: &[Letter]) -> Result<Self> {
        Self::new(g, &[], word.to_vec())
    }

    pub fn point_path(g: &MarkedGroup, at: &[Letter]) -> Result<Self> {
        Self::new(g, at, Vec::new())
    }

    /// Rebuilds the edge labels from a list of points; consecutive points
    /// must be adjacent in the Cayley graph.
    pub fn from_points(g: &MarkedGroup, points: &[Word]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| LabError::malformed("a path needs at least one point"))?;
        g.check_word(first)?;
        let mut labels = Vec::with_capacity(points.len() - 1);
        let moves = g.moves();
        for (i, pair) in points.windows(2).enumerate() {
            g.check_word(&pair[1])?;
            let step = g.multiply(&g.inverse(&pair[0]), &pair[1]);
            let l = moves
                .iter()
                .copied()
                .find(|&m| step == [m])
                .ok_or_else(|| {
                    LabError::malformed(format!("points {i} and {} are not adjacent", i + 1))
                })?;
            labels.push(l);
        }
        Ok(PathInGraph {
            start: g.nf(first),
            labels,
        })
    }

    /// Parametrized length n (the path has n + 1 points).
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn points(&self, g: &MarkedGroup) -> Vec<Word> {
        let mut acc = g.acc_from_word(&self.start);
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(g.acc_word(&acc));
        for &l in &self.labels {
            g.push(&mut acc, l);
            out.push(g.acc_word(&acc));
        }
        out
    }

    pub fn point(&self, g: &MarkedGroup, t: usize) -> Word {
        g.multiply(&self.start, &self.labels[..t])
    }

    pub fn end(&self, g: &MarkedGroup) -> Word {
        self.point(g, self.len())
    }

    pub fn subpath(&self, g: &MarkedGroup, s: usize, t: usize) -> PathInGraph {
        PathInGraph {
            start: self.point(g, s),
            labels: self.labels[s..t].to_vec(),
        }
    }

    pub fn reversed(&self, g: &MarkedGroup) -> PathInGraph {
        PathInGraph {
            start: self.end(g),
            labels: g.inverse(&self.labels),
        }
    }

    /// The left translate h · path.
    pub fn translate(&self, g: &MarkedGroup, h: &[Letter]) -> PathInGraph {
        PathInGraph {
            start: g.multiply(h, &self.start),
            labels: self.labels.clone(),
        }
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn concat(&self, g: &MarkedGroup, other: &PathInGraph) -> Result<PathInGraph> {
        if self.end(g) != other.start {
            return Err(LabError::precondition("path endpoints do not chain"));
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(PathInGraph {
            start: self.start.clone(),
            labels,
        })
    }

    pub fn is_geodesic(&self, g: &MarkedGroup) -> bool {
        g.is_geodesic_word(&self.labels)
    }

    pub fn to_strings(&self, g: &MarkedGroup) -> Vec<String> {
        self.points(g).iter().map(|w| g.format_word(w)).collect()
    }

    /// JSON form: an array of word strings, one per point.
    pub fn to_json(&self, g: &MarkedGroup) -> serde_json::Value {
        serde_json::Value::from(self.to_strings(g))
    }

    pub fn from_json(g: &MarkedGroup, text: &str) -> Result<PathInGraph> {
        let raw: Vec<String> = serde_json::from_str(text)
            .map_err(|e| LabError::malformed(format!("path must be an array of words: {e}")))?;
        let points = raw
            .iter()
            .map(|s| g.parse_word(s))
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(g, &points)
    }
}

/// Word-metric distance.
pub fn dist(g: &MarkedGroup, u: &[Letter], v: &[Letter]) -> usize {
    g.dist(u, v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QgVerdict {
    pub verdict: bool,
    /// Pair of indices with the largest violation margin (lexicographically
    /// least among ties); absent for single-point paths.
    pub worst_pair: Option<(usize, usize)>,
    #[serde(with = "crate::rat::option")]
    pub margin: Option<Rat>,
}

/// Exact all-pairs quasi-geodesic check.
pub fn is_quasi_geodesic(g: &MarkedGroup, p: &PathInGraph, q: &QGParams) -> QgVerdict {
    let n = p.len();
    if n == 0 {
        return QgVerdict {
            verdict: true,
            worst_pair: None,
            margin: None,
        };
    }
    if p.is_geodesic(g) {
        // Every pair sits at distance equal to its gap; the margin is largest at gap 1.
        let m = q.margin(1, 1);
        return QgVerdict {
            verdict: m <= rat(0),
            worst_pair: Some((0, 1)),
            margin: Some(m),
        };
    }
    let mut best: Option<(Rat, usize, usize)> = None;
    for s in 0..n {
        let mut acc = g.identity_acc();
        for t in s + 1..=n {
            g.push(&mut acc, p.labels[t - 1]);
            let m = q.margin(t - s, acc.len());
            if best.as_ref().is_none_or(|b| m > b.0) {
                best = Some((m, s, t));
            }
        }
    }
    let (m, s, t) = best.expect("n >= 1");
    QgVerdict {
        verdict: m <= rat(0),
        worst_pair: Some((s, t)),
        margin: Some(m),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalVerdict {
    pub verdict: bool,
    /// First window [s, min(s+L, n)] that fails.
    pub worst_window: Option<(usize, usize)>,
}

/// Checks every window of width at most L. Windows start at every index s
/// and cover [s, min(s+L, n)]; the first failing one is reported.
pub fn is_local_quasi_geodesic(g: &MarkedGroup, p: &PathInGraph, lp: &LocalParams) -> LocalVerdict {
    let n = p.len();
    let big_l = lp.scale;
    let window = |s: usize| (s, (s + big_l).min(n));
    let first_fail = if lp.qg.is_geodesic() {
        // A window fails iff it holds a cancelling pair of labels.
        g.cancel_links(&p.labels)
            .iter()
            .enumerate()
            .filter_map(|(k, c)| {
                c.filter(|&m| k - m < big_l)
                    .map(|_| (k + 1).saturating_sub(big_l))
            })
            .min()
    } else {
        let mut found: Option<usize> = None;
        for s in 0..n {
            let mut acc = g.identity_acc();
            for t in s + 1..=(s + big_l).min(n) {
                g.push(&mut acc, p.labels[t - 1]);
                if lp.qg.margin(t - s, acc.len()) > rat(0) {
                    let w = t.saturating_sub(big_l);
                    found = Some(found.map_or(w, |f| f.min(w)));
                }
            }
        }
        found
    };
    LocalVerdict {
        verdict: first_fail.is_none(),
        worst_window: first_fail.map(window),
    }
}

#[derive(Clone, Debug)]
pub struct ConcatResult {
    pub path: PathInGraph,
    pub lemma_hypothesis_met: bool,
}

/// Concatenates geodesic segments and reports whether the concatenation
/// meets the local-geodesic lemma's hypothesis: consecutive pairs of
/// segments jointly longer than L, and local quasi-geodesic at `lp`.
pub fn concat_geodesics(
    g: &MarkedGroup,
    segments: &[PathInGraph],
    lp: &LocalParams,
) -> Result<ConcatResult> {
    let first = segments
        .first()
        .ok_or_else(|| LabError::precondition("no segments to concatenate"))?;
    let mut path = first.clone();
    for (i, seg) in segments.iter().enumerate() {
        if !seg.is_geodesic(g) {
            return Err(LabError::precondition(format!(
                "segment {i} is not a geodesic"
            )));
        }
        if i > 0 {
            path = path.concat(g, seg).map_err(|_| {
                LabError::precondition(format!(
                    "segment {i} does not start where segment {} ends",
                    i - 1
                ))
            })?;
        }
    }
    let long_enough = if segments.len() == 1 {
        first.len() > lp.scale
    } else {
        segments
            .windows(2)
            .all(|w| w[0].len() + w[1].len() > lp.scale)
    };
    let met = long_enough && is_local_quasi_geodesic(g, &path, lp).verdict;
    Ok(ConcatResult {
        path,
        lemma_hypothesis_met: met,
    })
}

fn directed(g: &MarkedGroup, from: &[Word], to: &[Word]) -> usize {
    from.iter()
        .map(|x| to.iter().map(|y| g.dist(x, y)).min().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// Hausdorff distance between finite point sets.
pub fn hausdorff_points(g: &MarkedGroup, a: &[Word], b: &[Word]) -> usize {
    let dedup = |v: &[Word]| -> Vec<Word> {
        let mut seen = HashSet::new();
        v.iter()
            .filter(|w| seen.insert((*w).clone()))
            .cloned()
            .collect()
    };
    let (a, b) = (dedup(a), dedup(b));
    directed(g, &a, &b).max(directed(g, &b, &a))
}

/// Hausdorff distance between path images.
pub fn hausdorff(g: &MarkedGroup, p: &PathInGraph, q: &PathInGraph) -> usize {
    hausdorff_points(g, &p.points(g), &q.points(g))
}

/// Calls `f` on the label word of every geodesic from the identity to `z`,
/// in DFS order over generator moves. Stops early when `f` returns false.
pub fn for_each_geodesic_word(g: &MarkedGroup, z: &[Letter], f: &mut dyn FnMut(&[Letter]) -> bool) {
    fn go(
        g: &MarkedGroup,
        moves: &[Letter],
        rest: Word,
        prefix: &mut Word,
        f: &mut dyn FnMut(&[Letter]) -> bool,
    ) -> bool {
        if rest.is_empty() {
            return f(prefix);
        }
        let n = rest.len();
        for &m in moves {
            let mut w = vec![g.inverse_letter(m)];
            w.extend_from_slice(&rest);
            let next = g.nf(&w);
            if next.len() + 1 == n {
                prefix.push(m);
                let keep = go(g, moves, next, prefix, f);
                prefix.pop();
                if !keep {
                    return false;
                }
            }
        }
        true
    }
    let moves = g.moves();
    go(g, &moves, g.nf(z), &mut Vec::new(), f);
}

/// All geodesic edge paths from u to v.
pub fn geodesics_between(
    g: &MarkedGroup,
    u: &[Letter],
    v: &[Letter],
    cap: usize,
) -> Result<Vec<PathInGraph>> {
    g.check_word(u)?;
    g.check_word(v)?;
    let d = g.dist(u, v);
    if d > cap {
        return Err(LabError::cap("geodesic length", d, cap));
    }
    let start = g.nf(u);
    let z = g.multiply(&g.inverse(u), v);
    let mut out = Vec::new();
    for_each_geodesic_word(g, &z, &mut |w| {
        out.push(PathInGraph {
            start: start.clone(),
            labels: w.to_vec(),
        });
        true
    });
    Ok(out)
}

/// The canonical geodesic from u to v: it spells the normal form of u⁻¹v.
pub fn normal_geodesic(g: &MarkedGroup, u: &[Letter], v: &[Letter]) -> PathInGraph {
    PathInGraph {
        start: g.nf(u),
        labels: g.multiply(&g.inverse(u), v),
    }
}
