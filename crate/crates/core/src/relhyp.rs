//! Free-factor cosets of a free product as peripheral subsets: projections,
//! coned-off distances, measured constants, deep points and the relevant
//! decomposition of a local quasi-geodesic.
//!
//! Everything here leans on one fact about free products: a coset gA_i is
//! gated. Every path from a point outside gA_i into it enters through the
//! same point, the projection. Distances to cosets and projections are
//! therefore exact closed forms read off normal forms.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::groups::{fold, mix, Acc, Ball, Factor, FamilyKind, Kind, Letter, MarkedGroup, Word};
use crate::morse::for_each_quasi_geodesic;
use crate::paths::{
    geodesics_between, is_local_quasi_geodesic, LocalParams, PathInGraph, QGParams,
};
use crate::rat::{format_rat, rat, Rat};

fn product_factors(g: &MarkedGroup) -> Result<&[Factor]> {
    match &g.kind {
        Kind::FreeProduct(fs) => Ok(fs),
        _ => Err(LabError::precondition(format!(
            "peripheral structure needs a free product, got {:?}",
            g.family()
        ))),
    }
}

fn check_factor(fs: &[Factor], factor: usize) -> Result<()> {
    if factor >= fs.len() {
        return Err(LabError::malformed(format!(
            "factor index {factor} out of range for {} factors",
            fs.len()
        )));
    }
    Ok(())
}

fn syllables_of(g: &MarkedGroup, x: &[Letter]) -> Vec<(usize, Acc)> {
    match g.acc_from_word(x) {
        Acc::Product { syllables, .. } => syllables,
        _ => unreachable!("checked free product"),
    }
}

fn word_of(g: &MarkedGroup, syllables: &[(usize, Acc)]) -> Word {
    let len = syllables.iter().map(|(_, a)| a.len()).sum();
    g.acc_word(&Acc::Product {
        syllables: syllables.to_vec(),
        len,
    })
}

// ----- cosets -----

/// A left coset g·A_i of a free factor. The representative is the normal
/// form of g with any trailing A_i syllable removed, which makes it the
/// unique shortest element of the coset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeripheralCoset {
    pub representative: Word,
    pub factor: usize,
}

impl PeripheralCoset {
    /// Validates a (representative, factor) pair.
    pub fn new(g: &MarkedGroup, representative: &[Letter], factor: usize) -> Result<Self> {
        let fs = product_factors(g)?;
        check_factor(fs, factor)?;
        g.check_word(representative)?;
        let syl = syllables_of(g, representative);
        if syl.last().is_some_and(|(f, _)| *f == factor) {
            return Err(LabError::malformed(
                "coset representative ends in a syllable of its own factor",
            ));
        }
        Ok(PeripheralCoset {
            representative: word_of(g, &syl),
            factor,
        })
    }

    /// The coset of `factor` through the point x.
    pub fn containing(g: &MarkedGroup, x: &[Letter], factor: usize) -> Result<Self> {
        let fs = product_factors(g)?;
        check_factor(fs, factor)?;
        g.check_word(x)?;
        let mut syl = syllables_of(g, x);
        if syl.last().is_some_and(|(f, _)| *f == factor) {
            syl.pop();
        }
        Ok(PeripheralCoset {
            representative: word_of(g, &syl),
            factor,
        })
    }

    pub fn contains(&self, g: &MarkedGroup, x: &[Letter]) -> Result<bool> {
        Ok(Self::containing(g, x, self.factor)? == *self)
    }

    /// Stable 128-bit identity used by the streaming code paths.
    pub fn fingerprint(&self, g: &MarkedGroup) -> Result<u128> {
        let fs = product_factors(g)?;
        let mut c = Cursor::new(g, fs);
        for &l in &self.representative {
            c.push(l);
        }
        Ok(c.coset_hash(self.factor))
    }

    pub fn label(&self, g: &MarkedGroup) -> String {
        let rep = if self.representative.is_empty() {
            "e".to_string()
        } else {
            g.format_word(&self.representative)
        };
        format!("{rep}·A{}", self.factor)
    }

    pub fn to_json(&self, g: &MarkedGroup) -> serde_json::Value {
        serde_json::json!({"rep": g.format_word(&self.representative), "factor": self.factor})
    }

    pub fn from_json(g: &MarkedGroup, v: &serde_json::Value) -> Result<Self> {
        let rep = v
            .get("rep")
            .and_then(|r| r.as_str())
            .ok_or_else(|| LabError::malformed("coset needs a string field \"rep\""))?;
        let factor = v
            .get("factor")
            .and_then(|f| f.as_u64())
            .ok_or_else(|| LabError::malformed("coset needs an integer field \"factor\""))?;
        Self::new(g, &g.parse_word(rep)?, factor as usize)
    }
}

/// Decomposes rep⁻¹x into (leading A_i syllable, length of the rest).
fn split_at_coset(
    g: &MarkedGroup,
    p: &PeripheralCoset,
    x: &[Letter],
) -> Result<(Option<Acc>, usize)> {
    let fs = product_factors(g)?;
    check_factor(fs, p.factor)?;
    g.check_word(x)?;
    let mut w = g.inverse(&p.representative);
    w.extend_from_slice(x);
    let syl = syllables_of(g, &w);
    let total: usize = syl.iter().map(|(_, a)| a.len()).sum();
    match syl.into_iter().next() {
        Some((f, a)) if f == p.factor => {
            let rest = total - a.len();
            Ok((Some(a), rest))
        }
        _ => Ok((None, total)),
    }
}

/// Gate projection onto P: the point where every path from x enters P.
pub fn peripheral_projection(g: &MarkedGroup, p: &PeripheralCoset, x: &[Letter]) -> Result<Word> {
    let (head, _) = split_at_coset(g, p, x)?;
    Ok(match head {
        Some(a) => {
            let fs = product_factors(g)?;
            let local = fs[p.factor].group.acc_word(&a);
            g.multiply(&p.representative, &g.lift_factor(p.factor, &local))
        }
        None => p.representative.clone(),
    })
}

/// Exact d(x, P). In a free product d(x, π_P(x)) = d(x, P), so no proxy
/// slack is needed.
pub fn coset_distance(g: &MarkedGroup, p: &PeripheralCoset, x: &[Letter]) -> Result<usize> {
    Ok(split_at_coset(g, p, x)?.1)
}

/// d(x, P ∩ ball) by brute force over the ball's vertices.
pub fn coset_distance_in_ball(
    g: &MarkedGroup,
    ball: &Ball,
    p: &PeripheralCoset,
    x: &[Letter],
) -> Result<usize> {
    let x = g.normal_form(x)?;
    if !ball.contains(&x) {
        return Err(LabError::precondition(format!(
            "{} lies outside the radius-{} ball",
            g.format_word(&x),
            ball.radius
        )));
    }
    let mut best = None;
    for v in &ball.vertices {
        if p.contains(g, v)? {
            let d = g.dist(&x, v);
            best = Some(best.map_or(d, |b: usize| b.min(d)));
        }
    }
    best.ok_or_else(|| LabError::precondition(format!("{} does not meet the ball", p.label(g))))
}

// ----- streaming normal forms -----

const CURSOR_SEED: u128 = 0x6a09_e667_f3bc_c908_b2fb_1366_ea95_7d3e;
const COSET_TAG: u64 = 0x9e37_79b9_7f4a_7c15;

/// Right-multiplication normal form over a free product that keeps the hash
/// of every completed syllable prefix, so coset identities cost O(1) per
/// step even on very long paths.
#[derive(Clone)]
struct Cursor<'a> {
    g: &'a MarkedGroup,
    fs: &'a [Factor],
    syllables: Vec<(usize, Acc)>,
    /// prefix[k] hashes syllables[..k].
    prefix: Vec<u128>,
    len: usize,
    /// Emptied syllables kept for reuse; a popped syllable is the identity.
    spare: Vec<Option<Acc>>,
}

impl<'a> Cursor<'a> {
    fn new(g: &'a MarkedGroup, fs: &'a [Factor]) -> Self {
        Cursor {
            g,
            fs,
            syllables: Vec::new(),
            prefix: Vec::new(),
            len: 0,
            spare: vec![None; fs.len()],
        }
    }

    fn at(g: &'a MarkedGroup, fs: &'a [Factor], x: &[Letter]) -> Self {
        let mut c = Self::new(g, fs);
        for &l in x {
            c.push(l);
        }
        c
    }

    fn push(&mut self, l: Letter) {
        let (f, local) = self.g.factor_of(l.gen);
        let ll = Letter::new(local, l.inv);
        let fg = &self.fs[f].group;
        if let Some((tf, top)) = self.syllables.last_mut() {
            if *tf == f {
                let before = top.len();
                fg.push(top, ll);
                let after = top.len();
                self.len = self.len + after - before;
                if after == 0 {
                    if let Some((f, a)) = self.syllables.pop() {
                        self.spare[f] = Some(a);
                    }
                    self.prefix.pop();
                }
                return;
            }
        }
        let h = self.full_hash();
        let mut a = self.spare[f].take().unwrap_or_else(|| fg.identity_acc());
        fg.push(&mut a, ll);
        self.len += a.len();
        self.prefix.push(h);
        self.syllables.push((f, a));
    }

    fn full_hash(&self) -> u128 {
        match self.syllables.last() {
            None => CURSOR_SEED,
            Some((f, a)) => {
                let k = self.syllables.len() - 1;
                mix(
                    mix(self.prefix[k], *f as u64),
                    fold(self.fs[*f].group.fingerprint(a)),
                )
            }
        }
    }

    fn coset_hash(&self, factor: usize) -> u128 {
        let base = match self.syllables.last() {
            Some((f, _)) if *f == factor => self.prefix[self.syllables.len() - 1],
            _ => self.full_hash(),
        };
        mix(base, COSET_TAG ^ factor as u64)
    }

    /// The trailing syllable when it belongs to `factor`.
    fn tail(&self, factor: usize) -> Option<&Acc> {
        match self.syllables.last() {
            Some((f, a)) if *f == factor => Some(a),
            _ => None,
        }
    }

    /// Distance from the current element to the factor coset through e.
    fn distance_to_base(&self, factor: usize) -> usize {
        match self.syllables.first() {
            Some((f, a)) if *f == factor => self.len - a.len(),
            _ => self.len,
        }
    }

    fn word(&self) -> Word {
        word_of(self.g, &self.syllables)
    }

    fn coset(&self, factor: usize) -> PeripheralCoset {
        let keep = if self.tail(factor).is_some() {
            self.syllables.len() - 1
        } else {
            self.syllables.len()
        };
        PeripheralCoset {
            representative: word_of(self.g, &self.syllables[..keep]),
            factor,
        }
    }
}

/// Offsets z with |z| ≤ radius as freely reduced label words.
fn offsets(g: &MarkedGroup, radius: usize) -> Vec<Word> {
    let moves = g.moves();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for &m in &moves {
                if w.last().is_some_and(|&l: &Letter| g.inverse_letter(l) == m) {
                    continue;
                }
                let mut v: Word = w.clone();
                v.push(m);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// For every coset within `radius` of some path point: the sorted times of
/// the points within `radius`, plus a recipe (time, offset) that re-derives
/// the coset. Cosets are numbered in order of discovery.
struct NearIndex {
    keys: Vec<u128>,
    factor: Vec<usize>,
    recipe: Vec<(usize, usize)>,
    /// times of coset i are flat[start[i]..start[i + 1]].
    start: Vec<usize>,
    flat: Vec<usize>,
    offsets: Vec<Word>,
}

impl NearIndex {
    fn build(g: &MarkedGroup, fs: &[Factor], p: &PathInGraph, radius: usize) -> Self {
        let offs = offsets(g, radius);
        let mut ids: FxHashMap<u128, usize> = FxHashMap::default();
        let (mut keys, mut factor, mut recipe, mut last) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut events: Vec<(usize, usize)> = Vec::new();
        let mut c = Cursor::at(g, fs, &p.start);
        for t in 0..=p.len() {
            if t > 0 {
                c.push(p.labels[t - 1]);
            }
            for (k, z) in offs.iter().enumerate() {
                for &l in z {
                    c.push(l);
                }
                for f in 0..fs.len() {
                    // A trailing f-letter does not change the f-coset.
                    if z.last().is_some_and(|l| g.factor_of(l.gen).0 == f) {
                        continue;
                    }
                    let h = c.coset_hash(f);
                    let id = *ids.entry(h).or_insert_with(|| {
                        keys.push(h);
                        factor.push(f);
                        recipe.push((t, k));
                        last.push(usize::MAX);
                        keys.len() - 1
                    });
                    if last[id] != t {
                        last[id] = t;
                        events.push((id, t));
                    }
                }
                for &l in z.iter().rev() {
                    c.push(g.inverse_letter(l));
                }
            }
        }
        // Counting sort by coset keeps each coset's times ascending.
        let mut start = vec![0; keys.len() + 1];
        for &(id, _) in &events {
            start[id + 1] += 1;
        }
        for i in 0..keys.len() {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut flat = vec![0; events.len()];
        for (id, t) in events {
            flat[fill[id]] = t;
            fill[id] += 1;
        }
        NearIndex {
            keys,
            factor,
            recipe,
            start,
            flat,
            offsets: offs,
        }
    }

    fn len(&self) -> usize {
        self.keys.len()
    }

    fn times(&self, id: usize) -> &[usize] {
        &self.flat[self.start[id]..self.start[id + 1]]
    }

    fn materialize(
        &self,
        g: &MarkedGroup,
        fs: &[Factor],
        p: &PathInGraph,
        id: usize,
    ) -> PeripheralCoset {
        let (t, k) = self.recipe[id];
        let mut c = Cursor::at(g, fs, &p.start);
        for &l in &p.labels[..t] {
            c.push(l);
        }
        for &l in &self.offsets[k] {
            c.push(l);
        }
        c.coset(self.factor[id])
    }
}

/// Every coset g·A_i within `radius` of some point of the path, sorted.
pub fn peripheral_cosets_near(
    g: &MarkedGroup,
    p: &PathInGraph,
    radius: usize,
) -> Result<Vec<PeripheralCoset>> {
    let fs = product_factors(g)?;
    g.check_word(&p.start)?;
    g.check_word(&p.labels)?;
    let index = NearIndex::build(g, fs, p, radius);
    let mut out: Vec<PeripheralCoset> = (0..index.len())
        .map(|id| index.materialize(g, fs, p, id))
        .collect();
    out.sort_by(|a, b| {
        a.factor
            .cmp(&b.factor)
            .then_with(|| crate::groups::shortlex_cmp(&a.representative, &b.representative))
    });
    Ok(out)
}

// ----- coned-off graph -----

/// The ball with one cone vertex per coset meeting it, joined by unit edges
/// to the coset's members.
pub struct ConedGraph<'a> {
    ball: &'a Ball,
    cone_members: Vec<Vec<usize>>,
    cones_of: Vec<Vec<usize>>,
}

impl<'a> ConedGraph<'a> {
    pub fn new(g: &MarkedGroup, ball: &'a Ball) -> Result<Self> {
        let fs = product_factors(g)?;
        let mut ids: HashMap<u128, usize> = HashMap::new();
        let mut cone_members: Vec<Vec<usize>> = Vec::new();
        let mut cones_of = vec![Vec::new(); ball.len()];
        for (i, v) in ball.vertices.iter().enumerate() {
            let c = Cursor::at(g, fs, v);
            for f in 0..fs.len() {
                let next = ids.len();
                let id = *ids.entry(c.coset_hash(f)).or_insert(next);
                if id == cone_members.len() {
                    cone_members.push(Vec::new());
                }
                cone_members[id].push(i);
                cones_of[i].push(id);
            }
        }
        Ok(ConedGraph {
            ball,
            cone_members,
            cones_of,
        })
    }

    pub fn cone_count(&self) -> usize {
        self.cone_members.len()
    }

    fn inner_index(&self, g: &MarkedGroup, x: &[Letter]) -> Result<usize> {
        let x = g.normal_form(x)?;
        let limit = self.ball.radius.saturating_sub(2);
        match self.ball.index.get(&x) {
            Some(&i) if self.ball.dist[i] as usize <= limit => Ok(i),
            _ => Err(LabError::precondition(format!(
                "{} is outside the inner radius {limit} of the ball",
                g.format_word(&x)
            ))),
        }
    }

    /// Breadth-first distance between two inner-region points.
    pub fn distance(&self, g: &MarkedGroup, u: &[Letter], v: &[Letter]) -> Result<usize> {
        let s = self.inner_index(g, u)?;
        let t = self.inner_index(g, v)?;
        if s == t {
            return Ok(0);
        }
        let n = self.ball.len();
        let mut dist = vec![u32::MAX; n + self.cone_members.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x] + 1;
            let mut visit = |y: usize, queue: &mut VecDeque<usize>| {
                if dist[y] == u32::MAX {
                    dist[y] = d;
                    queue.push_back(y);
                }
            };
            if x < n {
                for &(_, y) in &self.ball.adjacency[x] {
                    visit(y, &mut queue);
                }
                for &c in &self.cones_of[x] {
                    visit(n + c, &mut queue);
                }
            } else {
                for &y in &self.cone_members[x - n] {
                    visit(y, &mut queue);
                }
            }
            if dist[t] != u32::MAX {
                return Ok(dist[t] as usize);
            }
        }
        Err(LabError::precondition(
            "points are not connected inside the ball",
        ))
    }
}

/// Coned-off distance by breadth-first search in the ball's coned graph.
pub fn coned_distance(g: &MarkedGroup, ball: &Ball, u: &[Letter], v: &[Letter]) -> Result<usize> {
    ConedGraph::new(g, ball)?.distance(g, u, v)
}

/// Closed form of the coned-off distance: consecutive syllable cosets of
/// u⁻¹v meet in cut points, and inside one coset the cheaper of walking and
/// coning wins, so the distance is the sum of min(|s|, 2) over syllables.
pub fn coned_distance_formula(g: &MarkedGroup, u: &[Letter], v: &[Letter]) -> Result<usize> {
    product_factors(g)?;
    g.check_word(u)?;
    g.check_word(v)?;
    let mut w = g.inverse(u);
    w.extend_from_slice(v);
    Ok(syllables_of(g, &w)
        .iter()
        .map(|(_, a)| a.len().min(2))
        .sum())
}

// ----- constants -----

/// Measured constants of the peripheral structure and the derived θ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelHypConstants {
    pub mu: usize,
    #[serde(rename = "F_table")]
    pub f_table: BTreeMap<usize, usize>,
    #[serde(with = "crate::rat")]
    pub r: Rat,
    #[serde(rename = "R")]
    pub big_r: usize,
    #[serde(rename = "Q_bgi")]
    pub q_bgi: usize,
    pub qg: QGParams,
    pub theta: usize,
    /// Measurements at two radii disagreed; θ is the larger of the two.
    #[serde(default)]
    pub unstable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_alternative: Option<usize>,
}

impl RelHypConstants {
    /// Builds a constant block and derives θ from the formula.
    pub fn new(
        mu: usize,
        f_table: BTreeMap<usize, usize>,
        r: Rat,
        big_r: usize,
        q_bgi: usize,
        qg: QGParams,
    ) -> Result<Self> {
        let mut c = RelHypConstants {
            mu,
            f_table,
            r,
            big_r,
            q_bgi,
            qg,
            theta: 0,
            unstable: false,
            theta_alternative: None,
        };
        c.theta = c.formula_theta()?;
        Ok(c)
    }

    /// ⌈rR⌉, the integer neighbourhood radius used for witnesses.
    pub fn rho(&self) -> usize {
        ceil_rat(self.r * rat(self.big_r as i64))
    }

    fn f_index(&self) -> usize {
        ceil_rat(rat(2) * self.r * rat(self.big_r as i64))
    }

    /// θ = ⌈100λμ(λ + ε + μ + F(2rR) + r + R + rR + Q + 1)⌉.
    pub fn formula_theta(&self) -> Result<usize> {
        if self.r < rat(1) {
            return Err(LabError::malformed("r must be at least 1"));
        }
        let mut prev = 0;
        for &v in self.f_table.values() {
            if v < prev {
                return Err(LabError::malformed("F_table must be nondecreasing"));
            }
            prev = v;
        }
        let k = self.f_index();
        let f = *self
            .f_table
            .get(&k)
            .ok_or_else(|| LabError::malformed(format!("F_table has no entry for K = {k}")))?;
        let (l, e) = (self.qg.lambda, self.qg.epsilon);
        let mu = rat(self.mu as i64);
        let rr = rat(self.big_r as i64);
        let inner = l
            + e
            + mu
            + rat(f as i64)
            + self.r
            + rr
            + self.r * rr
            + rat(self.q_bgi as i64)
            + rat(1);
        Ok(ceil_rat(rat(100) * l * mu * inner))
    }

    /// Stored θ agrees with the formula.
    pub fn check(&self) -> Result<()> {
        let t = self.formula_theta()?;
        if t != self.theta {
            return Err(LabError::malformed(format!(
                "theta {} does not match the formula value {t}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RelHypConstants = serde_json::from_str(text)
            .map_err(|e| LabError::malformed(format!("constants: {e}")))?;
        c.check()?;
        Ok(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("constants serialize")
    }
}

fn ceil_rat(r: Rat) -> usize {
    r.ceil().to_integer().max(0) as usize
}

/// Exhaustive check of the projection lemma's four clauses on a ball’s
/// cosets through the centre, plus sampled Lipschitz pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSuite {
    pub radius: usize,
    pub points: usize,
    /// π_P(x) = x for x ∈ P.
    pub idempotence_violations: usize,
    /// d(x, π_P(x)) ≤ d(x, P) + 1 against the closest-point oracle.
    pub near_closest_violations: usize,
    /// Largest diam π_P(U ∩ ball) over cosets U ≠ P.
    pub cross_coset_diameter: usize,
    /// Largest diam π_P(γ) over geodesics γ from x to π_P(x).
    pub geodesic_image_diameter: usize,
    /// Smallest integer μ with d(πx, πy) ≤ μ·d(x, y) + μ on all checked pairs.
    pub lipschitz: usize,
    pub geodesics_checked: usize,
    pub mu: usize,
}

/// Runs the four projection clauses over every ball point and each factor
/// coset through the centre (every coset is a translate of one of these).
pub fn projection_lemma_suite(
    g: &MarkedGroup,
    ball: &Ball,
    samples: usize,
    seed: u64,
) -> Result<ProjectionSuite> {
    suite_within(g, ball, ball.radius, samples, seed)
}

fn suite_within(
    g: &MarkedGroup,
    ball: &Ball,
    radius: usize,
    samples: usize,
    seed: u64,
) -> Result<ProjectionSuite> {
    let fs = product_factors(g)?;
    let pts: Vec<usize> = ball.within(radius).collect();
    let mut suite = ProjectionSuite {
        radius,
        points: pts.len(),
        idempotence_violations: 0,
        near_closest_violations: 0,
        cross_coset_diameter: 0,
        geodesic_image_diameter: 0,
        lipschitz: 0,
        geodesics_checked: 0,
        mu: 0,
    };
    for &i in &pts {
        let x = &ball.vertices[i];
        for f in 0..fs.len() {
            let own = PeripheralCoset::containing(g, x, f)?;
            if peripheral_projection(g, &own, x)? != *x {
                suite.idempotence_violations += 1;
            }
        }
    }
    for (f, factor) in fs.iter().enumerate() {
        let base = PeripheralCoset::new(g, &[], f)?;
        let proj: Vec<Word> = pts
            .iter()
            .map(|&i| peripheral_projection(g, &base, &ball.vertices[i]))
            .collect::<Result<_>>()?;
        // Closest-point oracle: the nearest point of P to x has length at
        // most 2|x|, so the factor ball of radius 2·radius suffices.
        let members: Vec<Word> = Ball::build(&factor.group, &[], 2 * radius, 2 * radius)?
            .vertices
            .iter()
            .map(|w| g.lift_factor(f, w))
            .collect();
        for (k, &i) in pts.iter().enumerate() {
            let x = &ball.vertices[i];
            let oracle = members
                .iter()
                .map(|a| g.dist(x, a))
                .min()
                .unwrap_or(usize::MAX);
            if g.dist(x, &proj[k]) > oracle + 1 {
                suite.near_closest_violations += 1;
            }
        }
        let mut images: HashMap<u128, Vec<usize>> = HashMap::new();
        let base_hash = base.fingerprint(g)?;
        for (k, &i) in pts.iter().enumerate() {
            let c = Cursor::at(g, fs, &ball.vertices[i]);
            for f2 in 0..fs.len() {
                let h = c.coset_hash(f2);
                if h != base_hash {
                    let list = images.entry(h).or_default();
                    if !list.iter().any(|&j| proj[j] == proj[k]) {
                        list.push(k);
                    }
                }
            }
        }
        for list in images.values() {
            for (a, &j) in list.iter().enumerate() {
                for &k in &list[a + 1..] {
                    suite.cross_coset_diameter =
                        suite.cross_coset_diameter.max(g.dist(&proj[j], &proj[k]));
                }
            }
        }
        for (k, &i) in pts.iter().enumerate() {
            let x = &ball.vertices[i];
            let d = g.dist(x, &proj[k]);
            for gamma in geodesics_between(g, x, &proj[k], d.max(1))? {
                suite.geodesics_checked += 1;
                let images: Vec<Word> = gamma
                    .points(g)
                    .iter()
                    .map(|y| peripheral_projection(g, &base, y))
                    .collect::<Result<_>>()?;
                for y in &images {
                    suite.geodesic_image_diameter =
                        suite.geodesic_image_diameter.max(g.dist(&proj[k], y));
                }
            }
        }
        let mut lip = |x: &Word, px: &Word, y: &Word, py: &Word| {
            let num = g.dist(px, py);
            let den = g.dist(x, y) + 1;
            suite.lipschitz = suite.lipschitz.max(num.div_ceil(den));
        };
        for (k, &i) in pts.iter().enumerate() {
            for &(_, j) in &ball.adjacency[i] {
                if ball.dist[j] as usize <= radius {
                    let pj = peripheral_projection(g, &base, &ball.vertices[j])?;
                    lip(&ball.vertices[i], &proj[k], &ball.vertices[j], &pj);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ f as u64);
        for _ in 0..samples {
            let a = rng.gen_range(0..pts.len());
            let b = rng.gen_range(0..pts.len());
            lip(
                &ball.vertices[pts[a]],
                &proj[a],
                &ball.vertices[pts[b]],
                &proj[b],
            );
        }
    }
    suite.mu = 1
        .max(suite.cross_coset_diameter)
        .max(suite.geodesic_image_diameter)
        .max(suite.lipschitz);
    Ok(suite)
}

/// F(K): largest observed diam(N_K(P) ∩ N_K(U)) over distinct cosets.
/// By translation P runs over the factor cosets through the centre.
fn isolation_table(
    g: &MarkedGroup,
    ball: &Ball,
    radius: usize,
    k_max: usize,
) -> Result<BTreeMap<usize, usize>> {
    let fs = product_factors(g)?;
    let mut table = BTreeMap::new();
    let mut running = 0;
    for k in 0..=k_max {
        let offs = offsets(g, k);
        let mut best = 0;
        for f in 0..fs.len() {
            let base = PeripheralCoset::new(g, &[], f)?;
            let base_hash = base.fingerprint(g)?;
            let mut groups: HashMap<u128, HashSet<usize>> = HashMap::new();
            for i in ball.within(radius) {
                let x = &ball.vertices[i];
                if coset_distance(g, &base, x)? > k {
                    continue;
                }
                let mut c = Cursor::at(g, fs, x);
                for z in &offs {
                    for &l in z {
                        c.push(l);
                    }
                    for f2 in 0..fs.len() {
                        let h = c.coset_hash(f2);
                        if h != base_hash {
                            groups.entry(h).or_default().insert(i);
                        }
                    }
                    for &l in z.iter().rev() {
                        c.push(g.inverse_letter(l));
                    }
                }
            }
            for members in groups.values() {
                let m: Vec<&Word> = members.iter().map(|&i| &ball.vertices[i]).collect();
                for a in 0..m.len() {
                    for b in a + 1..m.len() {
                        best = best.max(g.dist(m[a], m[b]));
                    }
                }
            }
        }
        running = running.max(best);
        table.insert(k, running);
    }
    Ok(table)
}

fn sample_pairs(pts: &[usize], samples: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    (0..samples)
        .map(|_| {
            (
                pts[rng.gen_range(0..pts.len())],
                pts[rng.gen_range(0..pts.len())],
            )
        })
        .collect()
}

/// Points of the quasi-geodesics from x to y, one list per path.
fn quasi_geodesic_points(
    g: &MarkedGroup,
    x: &[Letter],
    y: &[Letter],
    q: &QGParams,
) -> Option<Vec<Vec<Word>>> {
    let z = g.multiply(&g.inverse(x), y);
    let max_len = q.max_length(z.len());
    if max_len > crate::error::enum_cap() {
        return None;
    }
    let mut out = Vec::new();
    for_each_quasi_geodesic(g, &z, q, max_len, &mut |w| {
        out.push(
            PathInGraph {
                start: x.to_vec(),
                labels: w.to_vec(),
            }
            .points(g),
        );
        true
    });
    Some(out)
}

/// Excursion ratio r: quasi-geodesics with endpoints in N_K(P) stay in
/// N_{rK}(P).
fn excursion_ratio(
    g: &MarkedGroup,
    ball: &Ball,
    radius: usize,
    q: &QGParams,
    samples: usize,
) -> Result<Rat> {
    let fs = product_factors(g)?;
    let mut r = rat(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for f in 0..fs.len() {
        let base = PeripheralCoset::new(g, &[], f)?;
        for k in 1..=2usize {
            let near: Vec<usize> = ball
                .within(radius)
                .filter(|&i| coset_distance(g, &base, &ball.vertices[i]).is_ok_and(|d| d <= k))
                .collect();
            if near.is_empty() {
                continue;
            }
            for (a, b) in sample_pairs(&near, samples, &mut rng) {
                let Some(paths) = quasi_geodesic_points(g, &ball.vertices[a], &ball.vertices[b], q)
                else {
                    continue;
                };
                for pts in paths {
                    for y in &pts {
                        let d = coset_distance(g, &base, y)?;
                        r = r.max(Rat::new(d as i64, k as i64));
                    }
                }
            }
        }
    }
    Ok(r)
}

/// Smallest (Q, R) with R ≥ 1 and Q ≥ 1 (minimising Q + R, then Q) such
/// that every sampled pair with d(π_P x, π_P y) ≥ Q has all its
/// quasi-geodesics meeting N_R(π_P x) and N_R(π_P y).
fn bgi_constants(
    g: &MarkedGroup,
    ball: &Ball,
    radius: usize,
    q: &QGParams,
    samples: usize,
) -> Result<(usize, usize)> {
    let fs = product_factors(g)?;
    let pts: Vec<usize> = ball.within(radius).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    // need[D] = largest R any pair with projection distance D requires.
    let mut need: BTreeMap<usize, usize> = BTreeMap::new();
    for f in 0..fs.len() {
        let base = PeripheralCoset::new(g, &[], f)?;
        for (a, b) in sample_pairs(&pts, samples, &mut rng) {
            let (x, y) = (&ball.vertices[a], &ball.vertices[b]);
            let (px, py) = (
                peripheral_projection(g, &base, x)?,
                peripheral_projection(g, &base, y)?,
            );
            let d = g.dist(&px, &py);
            if d == 0 {
                continue;
            }
            let Some(paths) = quasi_geodesic_points(g, x, y, q) else {
                continue;
            };
            let mut worst = 0;
            for pts in paths {
                let dx = pts.iter().map(|z| g.dist(z, &px)).min().unwrap_or(0);
                let dy = pts.iter().map(|z| g.dist(z, &py)).min().unwrap_or(0);
                worst = worst.max(dx).max(dy);
            }
            let e = need.entry(d).or_insert(0);
            *e = (*e).max(worst);
        }
    }
    let q_max = need.keys().next_back().copied().unwrap_or(1);
    let mut best = (1, 1.max(need.values().copied().max().unwrap_or(0)));
    for qq in 1..=q_max.max(1) {
        let rr = need.range(qq..).map(|(_, &v)| v).max().unwrap_or(0).max(1);
        if qq + rr < best.0 + best.1 {
            best = (qq, rr);
        }
    }
    Ok(best)
}

fn measure_constants(
    g: &MarkedGroup,
    ball: &Ball,
    radius: usize,
    q: &QGParams,
    samples: usize,
) -> Result<RelHypConstants> {
    let suite = suite_within(g, ball, radius, samples, 0x5eed_0003)?;
    let r = excursion_ratio(g, ball, radius, q, samples)?;
    let (q_bgi, big_r) = bgi_constants(g, ball, radius, q, samples)?;
    let k_max = ceil_rat(rat(2) * r * rat(big_r as i64));
    let f_table = isolation_table(g, ball, radius, k_max)?;
    RelHypConstants::new(suite.mu, f_table, r, big_r, q_bgi, *q)
}

/// Measures μ, F, r, (Q, R) on the ball and derives θ. The measurement is
/// repeated one radius smaller; disagreement flags the block unstable and
/// the block with the larger θ is kept.
pub fn estimate_relhyp_constants(
    g: &MarkedGroup,
    ball: &Ball,
    q: &QGParams,
    samples: usize,
) -> Result<RelHypConstants> {
    product_factors(g)?;
    if ball.radius < 2 {
        return Err(LabError::precondition(
            "constant estimation needs a ball of radius at least 2",
        ));
    }
    let full = measure_constants(g, ball, ball.radius, q, samples)?;
    let small = measure_constants(g, ball, ball.radius - 1, q, samples)?;
    if same_measurement(&full, &small) {
        return Ok(full);
    }
    let (mut keep, other) = if small.theta > full.theta {
        (small, full)
    } else {
        (full, small)
    };
    keep.unstable = true;
    keep.theta_alternative = Some(other.theta);
    Ok(keep)
}

fn same_measurement(a: &RelHypConstants, b: &RelHypConstants) -> bool {
    a.mu == b.mu && a.r == b.r && a.big_r == b.big_r && a.q_bgi == b.q_bgi && a.f_table == b.f_table
}

// ----- projections along paths -----

#[derive(Clone, Debug)]
enum Coord {
    Lattice(Vec<i64>),
    Word(Word),
}

fn coord(fg: &MarkedGroup, a: Option<&Acc>) -> Coord {
    let rank = fg.generator_count();
    match a {
        None if matches!(fg.kind, Kind::Abelian { .. })
            || (fg.family() == FamilyKind::Free && rank == 1) =>
        {
            Coord::Lattice(vec![0; rank])
        }
        None => Coord::Word(Vec::new()),
        Some(Acc::Abelian { exps, .. }) => Coord::Lattice(exps.clone()),
        Some(Acc::Free(f)) if rank == 1 => {
            let n = f.letters().len() as i64;
            Coord::Lattice(vec![if f.letters().first().is_some_and(|l| l.inv) {
                -n
            } else {
                n
            }])
        }
        Some(a) => Coord::Word(fg.acc_word(a)),
    }
}

/// The points of one coset visited by a path, in time order.
#[derive(Clone, Debug)]
struct Track {
    factor: usize,
    points: Vec<(usize, Coord)>,
}

/// Tracks of every coset the path moves inside. Outside P the projection
/// to P is constant (P is gated), so only these points move projections.
fn tracks(
    g: &MarkedGroup,
    fs: &[Factor],
    p: &PathInGraph,
    only: Option<&HashSet<u128>>,
) -> FxHashMap<u128, Track> {
    let mut out: FxHashMap<u128, Track> = FxHashMap::default();
    let mut c = Cursor::at(g, fs, &p.start);
    for (s, &l) in p.labels.iter().enumerate() {
        let f = g.factor_of(l.gen).0;
        let before = coord(&fs[f].group, c.tail(f));
        c.push(l);
        let h = c.coset_hash(f);
        if only.is_some_and(|set| !set.contains(&h)) {
            continue;
        }
        let after = coord(&fs[f].group, c.tail(f));
        let t = out.entry(h).or_insert_with(|| Track {
            factor: f,
            points: Vec::new(),
        });
        if t.points.last().map(|(u, _)| *u) != Some(s) {
            t.points.push((s, before));
        }
        t.points.push((s + 1, after));
    }
    out
}

/// Largest distance between track points at most `width` apart in time.
fn window_diameter(fg: &MarkedGroup, pts: &[(usize, Coord)], width: usize) -> usize {
    if pts.len() < 2 {
        return 0;
    }
    if let Coord::Lattice(first) = &pts[0].1 {
        let rank = first.len();
        let mut best = 0i64;
        for mask in 0..(1u32 << rank) {
            let val = |c: &Coord| match c {
                Coord::Lattice(v) => v
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x })
                    .sum::<i64>(),
                Coord::Word(_) => unreachable!("one coordinate kind per factor"),
            };
            let mut window: VecDeque<(usize, i64)> = VecDeque::new();
            for (t, c) in pts {
                let v = val(c);
                while window.front().is_some_and(|&(u, _)| t - u > width) {
                    window.pop_front();
                }
                if let Some(&(_, m)) = window.front() {
                    best = best.max(v - m);
                }
                while window.back().is_some_and(|&(_, m)| m >= v) {
                    window.pop_back();
                }
                window.push_back((*t, v));
            }
        }
        return best as usize;
    }
    let mut best = 0;
    for (i, (t, a)) in pts.iter().enumerate() {
        for (u, b) in &pts[i + 1..] {
            if u - t > width {
                break;
            }
            if let (Coord::Word(a), Coord::Word(b)) = (a, b) {
                best = best.max(fg.dist(a, b));
            }
        }
    }
    best
}

fn restricted(track: &Track, lo: usize, hi: usize) -> &[(usize, Coord)] {
    let a = track.points.partition_point(|(t, _)| *t < lo);
    let b = track.points.partition_point(|(t, _)| *t <= hi);
    &track.points[a..b]
}

/// Smallest D such that every subpath of length ≤ L has diam π_P ≤ D for
/// each listed coset.
pub fn bounded_projection_bound(
    g: &MarkedGroup,
    p: &PathInGraph,
    scale: usize,
    cosets: &[PeripheralCoset],
) -> Result<usize> {
    let fs = product_factors(g)?;
    g.check_word(&p.labels)?;
    if cosets.is_empty() {
        return Ok(0);
    }
    let wanted: HashSet<u128> = cosets
        .iter()
        .map(|c| c.fingerprint(g))
        .collect::<Result<_>>()?;
    let tr = tracks(g, fs, p, Some(&wanted));
    Ok(tr
        .values()
        .map(|t| window_diameter(&fs[t.factor].group, &t.points, scale))
        .max()
        .unwrap_or(0))
}

// ----- deep points -----

/// Deep points of a path relative to one coset, stored as maximal closed
/// intervals of indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepSet {
    #[serde(skip)]
    pub coset: Option<PeripheralCoset>,
    pub components: Vec<(usize, usize)>,
    /// Times whose points lie within ⌈rR⌉ of the coset.
    #[serde(skip)]
    pub near: Vec<usize>,
    pub theta: usize,
    pub quarter: usize,
    pub path_len: usize,
}

impl DeepSet {
    fn from_near(
        coset: Option<PeripheralCoset>,
        near: Vec<usize>,
        theta: usize,
        quarter: usize,
        n: usize,
    ) -> Self {
        let components = deep_components(&near, n, theta.max(1), quarter);
        DeepSet {
            coset,
            components,
            near,
            theta,
            quarter,
            path_len: n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        let k = self.components.partition_point(|&(_, b)| b < t);
        self.components.get(k).is_some_and(|&(a, _)| a <= t)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().flat_map(|&(a, b)| a..=b)
    }

    pub fn len(&self) -> usize {
        self.components.iter().map(|&(a, b)| b - a + 1).sum()
    }

    /// Latest left witness and earliest right witness of t.
    pub fn witnesses(&self, t: usize) -> Option<(usize, usize)> {
        let th = self.theta.max(1);
        if t < th {
            return None;
        }
        let k = self.near.partition_point(|&s| s <= t - th);
        let s1 = *self.near[..k].last()?;
        let k = self.near.partition_point(|&s| s < t + th);
        let s2 = *self.near.get(k)?;
        (t - s1 <= self.quarter && s2 - t <= self.quarter).then_some((s1, s2))
    }

    /// Distinct components are more than L/4 apart.
    pub fn components_separated(&self) -> bool {
        self.components
            .windows(2)
            .all(|w| w[1].0 - w[0].1 > self.quarter)
    }
}

fn merge(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    v.sort();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn deep_components(near: &[usize], n: usize, theta: usize, quarter: usize) -> Vec<(usize, usize)> {
    if quarter < theta || near.is_empty() || near[near.len() - 1] - near[0] < 2 * theta {
        return Vec::new();
    }
    let left = merge(
        near.iter()
            .filter(|&&s| s + theta <= n)
            .map(|&s| (s + theta, (s + quarter).min(n)))
            .collect(),
    );
    let right = merge(
        near.iter()
            .filter(|&&s| s >= theta)
            .map(|&s| (s.saturating_sub(quarter), s - theta))
            .collect(),
    );
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < left.len() && j < right.len() {
        let a = left[i].0.max(right[j].0);
        let b = left[i].1.min(right[j].1);
        if a <= b {
            out.push((a, b));
        }
        if left[i].1 < right[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    merge(out)
}

fn check_scale(scale: usize, c: &RelHypConstants) -> Result<()> {
    c.check()?;
    if scale < 12 * c.theta {
        return Err(LabError::precondition(format!(
            "scale L = {scale} is below 12·θ = {} (standing hypothesis L ≥ 12θ)",
            12 * c.theta
        )));
    }
    Ok(())
}

/// Indices t with witnesses s1 < t < s2, θ ≤ |s_i − t| ≤ ⌊L/4⌋ and
/// d(γ(s_i), P) ≤ ⌈rR⌉.
pub fn deep_set(
    g: &MarkedGroup,
    p: &PathInGraph,
    coset: &PeripheralCoset,
    scale: usize,
    c: &RelHypConstants,
) -> Result<DeepSet> {
    let fs = product_factors(g)?;
    check_factor(fs, coset.factor)?;
    check_scale(scale, c)?;
    let rho = c.rho();
    let mut rel = Cursor::at(g, fs, &g.inverse(&coset.representative));
    for &l in &p.start {
        rel.push(l);
    }
    let mut near = Vec::new();
    for t in 0..=p.len() {
        if t > 0 {
            rel.push(p.labels[t - 1]);
        }
        if rel.distance_to_base(coset.factor) <= rho {
            near.push(t);
        }
    }
    Ok(DeepSet::from_near(
        Some(coset.clone()),
        near,
        c.theta,
        scale / 4,
        p.len(),
    ))
}

// ----- relevant decomposition -----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Sigma,
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub range: (usize, usize),
    pub peripheral: Option<PeripheralCoset>,
}

/// σ0 α1 σ1 … αn σn with consecutive segments sharing endpoints.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub segments: Vec<Segment>,
    pub scale: usize,
    pub b: usize,
    pub constants: RelHypConstants,
    pub qg: QGParams,
    /// Every non-empty deep set found for the candidate cosets.
    pub deep_sets: Vec<DeepSet>,
}

impl Decomposition {
    pub fn alphas(&self) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Alpha)
    }

    pub fn sigmas(&self) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Sigma)
    }

    pub fn relevant_peripherals(&self) -> Vec<&PeripheralCoset> {
        self.alphas()
            .filter_map(|s| s.peripheral.as_ref())
            .collect()
    }

    pub fn to_json(&self, g: &MarkedGroup) -> serde_json::Value {
        let segments: Vec<serde_json::Value> = self
            .segments
            .iter()
            .map(|s| {
                let mut v = serde_json::json!({
                    "kind": s.kind,
                    "range": [s.range.0, s.range.1],
                });
                if let Some(p) = &s.peripheral {
                    v["peripheral"] = p.to_json(g);
                }
                v
            })
            .collect();
        serde_json::json!({
            "segments": segments,
            "L": self.scale,
            "B": self.b,
            "qg": self.qg,
            "constants": self.constants.to_json(),
        })
    }
}

/// Splits a verified local quasi-geodesic into B-relevant pieces α_i (deep
/// components of length at least B, each with its unique peripheral) and
/// the complementary pieces σ_i.
pub fn relevant_decomposition(
    g: &MarkedGroup,
    p: &PathInGraph,
    scale: usize,
    b: usize,
    c: &RelHypConstants,
    q: &QGParams,
) -> Result<Decomposition> {
    let fs = product_factors(g)?;
    g.check_word(&p.start)?;
    g.check_word(&p.labels)?;
    check_scale(scale, c)?;
    if b <= 2 * c.theta {
        return Err(LabError::precondition(format!(
            "B = {b} must exceed 2·θ = {}",
            2 * c.theta
        )));
    }
    let local = is_local_quasi_geodesic(g, p, &LocalParams::new(scale, *q)?);
    if !local.verdict {
        let (s, t) = local.worst_window.unwrap_or((0, 0));
        return Err(LabError::precondition(format!(
            "path is not an (L; {})-local quasi-geodesic: window [{s}, {t}] fails",
            q.label()
        )));
    }
    let n = p.len();
    let quarter = scale / 4;
    let index = NearIndex::build(g, fs, p, c.rho());
    let mut deep: Vec<(usize, DeepSet)> = Vec::new();
    for id in 0..index.len() {
        let times = index.times(id);
        if times.len() < 2 || times[times.len() - 1] - times[0] < 2 * c.theta.max(1) {
            continue;
        }
        let d = DeepSet::from_near(None, times.to_vec(), c.theta, quarter, n);
        if !d.is_empty() {
            deep.push((id, d));
        }
    }
    // Hash order makes the numbering independent of discovery order.
    deep.sort_by_key(|(id, _)| index.keys[*id]);
    let mut all: Vec<(usize, usize, usize)> = deep
        .iter()
        .enumerate()
        .flat_map(|(id, (_, d))| d.components.iter().map(move |&(a, b)| (a, b, id)))
        .collect();
    all.sort();
    let mut reach: Option<(usize, usize)> = None;
    for &(a, b2, id) in &all {
        if let Some((end, other)) = reach {
            if a <= end && other != id {
                let p1 = index.materialize(g, fs, p, deep[other].0);
                let p2 = index.materialize(g, fs, p, deep[id].0);
                return Err(LabError::Violation(format!(
                    "index {a} is deep for distinct cosets {} and {}",
                    p1.label(g),
                    p2.label(g)
                )));
            }
        }
        if reach.is_none_or(|(end, _)| b2 > end) {
            reach = Some((b2, id));
        }
    }
    let mut alphas: Vec<(usize, usize, usize)> = all
        .iter()
        .copied()
        .filter(|&(a, b2, _)| b2 - a >= b)
        .collect();
    alphas.sort();
    let mut segments = Vec::new();
    let mut cursor = 0;
    for &(a, b2, id) in &alphas {
        segments.push(Segment {
            kind: SegmentKind::Sigma,
            range: (cursor, a),
            peripheral: None,
        });
        segments.push(Segment {
            kind: SegmentKind::Alpha,
            range: (a, b2),
            peripheral: Some(index.materialize(g, fs, p, deep[id].0)),
        });
        cursor = b2;
    }
    segments.push(Segment {
        kind: SegmentKind::Sigma,
        range: (cursor, n),
        peripheral: None,
    });
    let deep_sets = deep
        .into_iter()
        .enumerate()
        .map(|(id, (k, mut d))| {
            if alphas.iter().any(|&(_, _, j)| j == id) {
                d.coset = Some(index.materialize(g, fs, p, k));
            }
            d
        })
        .collect();
    Ok(Decomposition {
        segments,
        scale,
        b,
        constants: c.clone(),
        qg: *q,
        deep_sets,
    })
}

/// Geometric invariants of a decomposition, each measured, not assumed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub segments_tile: bool,
    /// Largest d(α_i(t), P_i) over all α points, against ⌈rR⌉.
    pub alpha_max_distance: usize,
    pub alpha_near: bool,
    /// Largest window projection diameter over σ pieces, against λ(4B+ε).
    pub sigma_projection: usize,
    #[serde(with = "crate::rat")]
    pub sigma_bound: Rat,
    pub sigma_bounded: bool,
    pub deep_components_separated: bool,
    pub adjacent_distinct: bool,
    pub all_distinct: bool,
    /// max d(π_{P_k}(P_i), π_{P_k}(P_j)) over i < j < k; None when n < 3.
    pub k1_observed: Option<usize>,
}

impl DecompositionCheck {
    pub fn passed(&self) -> bool {
        self.segments_tile
            && self.alpha_near
            && self.sigma_bounded
            && self.deep_components_separated
            && self.adjacent_distinct
    }
}

pub fn check_decomposition(
    g: &MarkedGroup,
    p: &PathInGraph,
    d: &Decomposition,
) -> Result<DecompositionCheck> {
    let fs = product_factors(g)?;
    let n = p.len();
    let tiles = d.segments.first().is_some_and(|s| s.range.0 == 0)
        && d.segments.last().is_some_and(|s| s.range.1 == n)
        && d.segments.windows(2).all(|w| w[0].range.1 == w[1].range.0)
        && d.segments.iter().all(|s| s.range.0 <= s.range.1)
        && d.segments.iter().enumerate().all(|(i, s)| {
            (s.kind == SegmentKind::Sigma) == (i % 2 == 0)
                && (s.kind == SegmentKind::Alpha) == s.peripheral.is_some()
        });

    let rho = d.constants.rho();
    let mut alpha_max = 0;
    let mut walker = Cursor::at(g, fs, &p.start);
    let mut at = 0;
    for s in d.alphas() {
        let coset = s.peripheral.as_ref().expect("alpha carries its peripheral");
        while at < s.range.0 {
            walker.push(p.labels[at]);
            at += 1;
        }
        let mut rel = Cursor::at(g, fs, &g.inverse(&coset.representative));
        for l in walker.word() {
            rel.push(l);
        }
        alpha_max = alpha_max.max(rel.distance_to_base(coset.factor));
        for &l in &p.labels[s.range.0..s.range.1] {
            rel.push(l);
            alpha_max = alpha_max.max(rel.distance_to_base(coset.factor));
        }
    }

    let bound = d.qg.lambda * (rat(4 * d.b as i64) + d.qg.epsilon);
    let tr = tracks(g, fs, p, None);
    let mut sigma = 0;
    for s in d.sigmas() {
        for t in tr.values() {
            let pts = restricted(t, s.range.0, s.range.1);
            sigma = sigma.max(window_diameter(&fs[t.factor].group, pts, d.scale));
        }
    }

    let peri = d.relevant_peripherals();
    let adjacent = peri.windows(2).all(|w| w[0] != w[1]);
    let distinct = peri.iter().collect::<HashSet<_>>().len() == peri.len();
    let k1 = if peri.len() >= 3 {
        let mut best = 0;
        for k in 2..peri.len() {
            let proj: Vec<Word> = peri[..k]
                .iter()
                .map(|pi| peripheral_projection(g, peri[k], &pi.representative))
                .collect::<Result<_>>()?;
            for i in 0..k {
                for j in i + 1..k {
                    best = best.max(g.dist(&proj[i], &proj[j]));
                }
            }
        }
        Some(best)
    } else {
        None
    };
    Ok(DecompositionCheck {
        segments_tile: tiles,
        alpha_max_distance: alpha_max,
        alpha_near: alpha_max <= rho,
        sigma_projection: sigma,
        sigma_bound: bound,
        sigma_bounded: rat(sigma as i64) <= bound,
        deep_components_separated: d.deep_sets.iter().all(DeepSet::components_separated),
        adjacent_distinct: adjacent,
        all_distinct: distinct,
        k1_observed: k1,
    })
}

// ----- distance formula -----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceFormulaReport {
    #[serde(rename = "A_measured", with = "crate::rat")]
    pub a_measured: Rat,
    pub threshold: usize,
    pub samples: usize,
    pub seed: u64,
    /// The pair attaining A_measured, as word strings.
    pub worst_pair: Option<(String, String)>,
    pub violations: Vec<String>,
}

impl DistanceFormulaReport {
    pub fn a_label(&self) -> String {
        format_rat(&self.a_measured)
    }
}

/// S(x, y) = coned distance + Σ_P {{d(π_P x, π_P y)}}_T. Only the syllable
/// cosets of the normal-form geodesic can have π_P x ≠ π_P y.
pub fn distance_formula_sum(
    g: &MarkedGroup,
    x: &[Letter],
    y: &[Letter],
    threshold: usize,
) -> Result<usize> {
    let fs = product_factors(g)?;
    let coned = coned_distance_formula(g, x, y)?;
    let mut c = Cursor::at(g, fs, x);
    let z = g.multiply(&g.inverse(x), y);
    let mut sum = 0;
    let mut k = 0;
    while k < z.len() {
        let f = g.factor_of(z[k].gen).0;
        let coset = c.coset(f);
        while k < z.len() && g.factor_of(z[k].gen).0 == f {
            c.push(z[k]);
            k += 1;
        }
        let d = g.dist(
            &peripheral_projection(g, &coset, x)?,
            &peripheral_projection(g, &coset, y)?,
        );
        if d >= threshold {
            sum += d;
        }
    }
    Ok(coned + sum)
}

/// Smallest A with d ≤ A·S + A and S ≤ A·d + A over seeded pairs drawn
/// from the ball's inner region.
pub fn distance_formula_check(
    g: &MarkedGroup,
    ball: &Ball,
    threshold: usize,
    samples: usize,
    seed: u64,
) -> Result<DistanceFormulaReport> {
    product_factors(g)?;
    if threshold == 0 {
        return Err(LabError::malformed("threshold T must be at least 1"));
    }
    let inner: Vec<usize> = ball.within(ball.radius.saturating_sub(2)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = rat(0);
    let mut worst = None;
    for _ in 0..samples {
        let x = &ball.vertices[inner[rng.gen_range(0..inner.len())]];
        let y = &ball.vertices[inner[rng.gen_range(0..inner.len())]];
        let d = g.dist(x, y) as i64;
        let s = distance_formula_sum(g, x, y, threshold)? as i64;
        let need = Rat::new(d, s + 1).max(Rat::new(s, d + 1));
        if need > a {
            a = need;
            worst = Some((g.format_word(x), g.format_word(y)));
        }
    }
    Ok(DistanceFormulaReport {
        a_measured: a,
        threshold,
        samples,
        seed,
        worst_pair: worst,
        violations: Vec::new(),
    })
}
