//! Marked groups with a solvable word problem: free groups, free abelian
//! groups, right-angled Coxeter groups, and free or direct products of these.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ball_cap, LabError, Result};

/// One letter of a word: a generator index and an inversion flag.
/// Involutions (RACG generators) always carry `inv == false`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u32,
    pub inv: bool,
}

impl Letter {
    pub const fn new(gen: u32, inv: bool) -> Self {
        Letter { gen, inv }
    }

    pub const fn pos(gen: u32) -> Self {
        Letter { gen, inv: false }
    }

    fn code(self) -> u64 {
        (self.gen as u64) * 2 + self.inv as u64 + 1
    }
}

pub type Word = Vec<Letter>;

/// ShortLex order: shorter first, then lexicographic by (generator, sign).
pub fn shortlex_cmp(a: &[Letter], b: &[Letter]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Free,
    FreeAbelian,
    Racg,
    FreeProduct,
    DirectProduct,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

/// JSON-facing description of a group family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<GroupDescriptor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GroupDescriptor {
    fn bare(family: FamilyKind) -> Self {
        GroupDescriptor {
            family,
            rank: None,
            graph: None,
            factors: None,
            labels: None,
        }
    }

    pub fn free(rank: usize) -> Self {
        GroupDescriptor {
            rank: Some(rank),
            ..Self::bare(FamilyKind::Free)
        }
    }

    pub fn free_abelian(rank: usize) -> Self {
        GroupDescriptor {
            rank: Some(rank),
            ..Self::bare(FamilyKind::FreeAbelian)
        }
    }

    pub fn racg(vertices: &[&str], edges: &[(&str, &str)]) -> Self {
        GroupDescriptor {
            graph: Some(GraphSpec {
                vertices: vertices.iter().map(|s| s.to_string()).collect(),
                edges: edges
                    .iter()
                    .map(|(a, b)| [a.to_string(), b.to_string()])
                    .collect(),
            }),
            ..Self::bare(FamilyKind::Racg)
        }
    }

    pub fn free_product(factors: Vec<GroupDescriptor>) -> Self {
        GroupDescriptor {
            factors: Some(factors),
            ..Self::bare(FamilyKind::FreeProduct)
        }
    }

    pub fn direct_product(factors: Vec<GroupDescriptor>) -> Self {
        GroupDescriptor {
            factors: Some(factors),
            ..Self::bare(FamilyKind::DirectProduct)
        }
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        self.labels = Some(labels.iter().map(|s| s.to_string()).collect());
        self
    }

    fn is_leaf_lettered(&self) -> bool {
        matches!(self.family, FamilyKind::Free | FamilyKind::FreeAbelian) && self.labels.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Factor {
    pub group: MarkedGroup,
    pub offset: u32,
}

#[derive(Clone, Debug)]
pub(crate) enum Kind {
    Free,
    Abelian { rank: usize },
    Racg { commute: Vec<Vec<bool>> },
    FreeProduct(Vec<Factor>),
    Direct(Vec<Factor>),
}

/// A group together with its ordered generating set.
#[derive(Clone, Debug)]
pub struct MarkedGroup {
    descriptor: GroupDescriptor,
    labels: Vec<String>,
    label_index: HashMap<String, u32>,
    involution: Vec<bool>,
    factor_of: Vec<(usize, u32)>,
    pub(crate) kind: Kind,
}

const FACTOR_POOLS: [&[&str]; 3] = [
    &["x", "y", "z", "w"],
    &["t", "u", "v", "s"],
    &["p", "q", "r"],
];

fn alphabet_labels(rank: usize) -> Vec<String> {
    if rank <= 26 {
        (0..rank)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect()
    } else {
        (0..rank).map(|i| format!("g{i}")).collect()
    }
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && s != "1" && !s.chars().any(|c| c.is_whitespace() || c == ',' || c == '^')
}

pub fn parse_group(desc: &GroupDescriptor) -> Result<MarkedGroup> {
    MarkedGroup::build(desc, None)
}

impl MarkedGroup {
    pub fn from_json(text: &str) -> Result<MarkedGroup> {
        let desc: GroupDescriptor = serde_json::from_str(text)
            .map_err(|e| LabError::malformed(format!("group descriptor: {e}")))?;
        parse_group(&desc)
    }

    fn build(desc: &GroupDescriptor, pool: Option<&[&str]>) -> Result<MarkedGroup> {
        let (kind, default_labels, involution) = match desc.family {
            FamilyKind::Free | FamilyKind::FreeAbelian => {
                let rank = desc
                    .rank
                    .ok_or_else(|| LabError::malformed("free and free_abelian need a rank"))?;
                if rank == 0 {
                    return Err(LabError::malformed("rank must be at least 1"));
                }
                let labels = match pool {
                    Some(p) if rank <= p.len() => p[..rank].iter().map(|s| s.to_string()).collect(),
                    _ => alphabet_labels(rank),
                };
                let kind = if desc.family == FamilyKind::Free {
                    Kind::Free
                } else {
                    Kind::Abelian { rank }
                };
                (kind, labels, vec![false; rank])
            }
            FamilyKind::Racg => {
                let graph = desc
                    .graph
                    .as_ref()
                    .ok_or_else(|| LabError::malformed("racg needs a graph"))?;
                let n = graph.vertices.len();
                if n == 0 {
                    return Err(LabError::malformed("racg graph has no vertices"));
                }
                let mut index = HashMap::new();
                for (i, v) in graph.vertices.iter().enumerate() {
                    if index.insert(v.clone(), i).is_some() {
                        return Err(LabError::malformed(format!("duplicate racg vertex {v}")));
                    }
                }
                let mut commute = vec![vec![false; n]; n];
                for [a, b] in &graph.edges {
                    let (&i, &j) = match (index.get(a), index.get(b)) {
                        (Some(i), Some(j)) => (i, j),
                        _ => {
                            return Err(LabError::malformed(format!(
                                "edge {a}-{b} names an unknown vertex"
                            )))
                        }
                    };
                    if i == j {
                        return Err(LabError::malformed(format!("loop at vertex {a}")));
                    }
                    if commute[i][j] {
                        return Err(LabError::malformed(format!("repeated edge {a}-{b}")));
                    }
                    commute[i][j] = true;
                    commute[j][i] = true;
                }
                (
                    Kind::Racg { commute },
                    graph.vertices.clone(),
                    vec![true; n],
                )
            }
            FamilyKind::FreeProduct | FamilyKind::DirectProduct => {
                let fs = desc
                    .factors
                    .as_ref()
                    .ok_or_else(|| LabError::malformed("products need factors"))?;
                if fs.len() < 2 {
                    return Err(LabError::malformed("products need at least two factors"));
                }
                let mut factors = Vec::new();
                let mut labels: Vec<String> = Vec::new();
                let mut involution = Vec::new();
                let mut offset = 0u32;
                let mut per_factor = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let p = if f.is_leaf_lettered() {
                        FACTOR_POOLS.get(i).copied()
                    } else {
                        None
                    };
                    let g = MarkedGroup::build(f, p)?;
                    per_factor.push(g.labels.clone());
                    involution.extend_from_slice(&g.involution);
                    let n = g.generator_count() as u32;
                    factors.push(Factor { group: g, offset });
                    offset += n;
                }
                let flat: Vec<String> = per_factor.iter().flatten().cloned().collect();
                let unique: HashSet<&String> = flat.iter().collect();
                if unique.len() == flat.len() {
                    labels = flat;
                } else {
                    for (i, ls) in per_factor.iter().enumerate() {
                        labels.extend(ls.iter().map(|l| format!("{i}.{l}")));
                    }
                }
                let kind = if desc.family == FamilyKind::FreeProduct {
                    Kind::FreeProduct(factors)
                } else {
                    Kind::Direct(factors)
                };
                (kind, labels, involution)
            }
        };
        let labels = match &desc.labels {
            Some(ls) => {
                if ls.len() != default_labels.len() {
                    return Err(LabError::malformed(format!(
                        "expected {} labels, got {}",
                        default_labels.len(),
                        ls.len()
                    )));
                }
                ls.clone()
            }
            None => default_labels,
        };
        let mut label_index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if !valid_label(l) {
                return Err(LabError::malformed(format!(
                    "invalid generator label {l:?}"
                )));
            }
            if label_index.insert(l.clone(), i as u32).is_some() {
                return Err(LabError::malformed(format!(
                    "duplicate generator label {l}"
                )));
            }
        }
        let factor_of = match &kind {
            Kind::FreeProduct(fs) | Kind::Direct(fs) => fs
                .iter()
                .enumerate()
                .flat_map(|(i, f)| (0..f.group.generator_count() as u32).map(move |l| (i, l)))
                .collect(),
            _ => (0..labels.len() as u32).map(|l| (0, l)).collect(),
        };
        Ok(MarkedGroup {
            descriptor: desc.clone(),
            labels,
            label_index,
            involution,
            factor_of,
            kind,
        })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn family(&self) -> FamilyKind {
        self.descriptor.family
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn generator_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_involution(&self, gen: u32) -> bool {
        self.involution[gen as usize]
    }

    /// Free-product or direct-product factors; empty for the leaf families.
    pub fn factors(&self) -> &[Factor] {
        match &self.kind {
            Kind::FreeProduct(fs) | Kind::Direct(fs) => fs,
            _ => &[],
        }
    }

    /// (factor index, local generator) of a global generator; (0, gen) for leaves.
    pub fn factor_of(&self, gen: u32) -> (usize, u32) {
        self.factor_of[gen as usize]
    }

    pub fn commutes(&self, s: u32, t: u32) -> bool {
        match &self.kind {
            Kind::Racg { commute } => commute[s as usize][t as usize],
            _ => false,
        }
    }

    /// Every generator move in deterministic order: generator index, + before −.
    pub fn moves(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * self.generator_count());
        for g in 0..self.generator_count() as u32 {
            out.push(Letter::pos(g));
            if !self.is_involution(g) {
                out.push(Letter::new(g, true));
            }
        }
        out
    }

    pub fn letter(&self, gen: u32, inv: bool) -> Letter {
        Letter::new(gen, inv && !self.is_involution(gen))
    }

    pub fn inverse_letter(&self, l: Letter) -> Letter {
        self.letter(l.gen, !l.inv)
    }

    pub fn check_word(&self, w: &[Letter]) -> Result<()> {
        for l in w {
            if l.gen as usize >= self.generator_count() {
                return Err(LabError::malformed(format!(
                    "generator index {} out of range (group has {})",
                    l.gen,
                    self.generator_count()
                )));
            }
        }
        Ok(())
    }

    pub fn inverse(&self, w: &[Letter]) -> Word {
        w.iter().rev().map(|&l| self.inverse_letter(l)).collect()
    }

    pub fn normal_form(&self, w: &[Letter]) -> Result<Word> {
        self.check_word(w)?;
        Ok(self.nf(w))
    }

    /// Normal form without index validation.
    pub fn nf(&self, w: &[Letter]) -> Word {
        let mut acc = self.identity_acc();
        for &l in w {
            self.push(&mut acc, l);
        }
        self.acc_word(&acc)
    }

    pub fn word_length(&self, w: &[Letter]) -> usize {
        let mut acc = self.identity_acc();
        for &l in w {
            self.push(&mut acc, l);
        }
        acc.len()
    }

    pub fn multiply(&self, u: &[Letter], v: &[Letter]) -> Word {
        let mut acc = self.identity_acc();
        for &l in u.iter().chain(v) {
            self.push(&mut acc, l);
        }
        self.acc_word(&acc)
    }

    /// Word-metric distance |u⁻¹v|.
    pub fn dist(&self, u: &[Letter], v: &[Letter]) -> usize {
        let mut acc = self.identity_acc();
        for l in u.iter().rev() {
            self.push(&mut acc, self.inverse_letter(*l));
        }
        for &l in v {
            self.push(&mut acc, l);
        }
        acc.len()
    }

    pub fn is_identity(&self, w: &[Letter]) -> bool {
        self.word_length(w) == 0
    }

    pub fn power(&self, w: &[Letter], n: i64) -> Word {
        let base = if n < 0 { self.inverse(w) } else { w.to_vec() };
        let mut acc = self.identity_acc();
        for _ in 0..n.unsigned_abs() {
            for &l in &base {
                self.push(&mut acc, l);
            }
        }
        self.acc_word(&acc)
    }

    // ----- words as text -----

    pub fn format_letter(&self, l: Letter) -> String {
        let label = &self.labels[l.gen as usize];
        if l.inv {
            format!("{label}^-1")
        } else {
            label.clone()
        }
    }

    pub fn format_word(&self, w: &[Letter]) -> String {
        w.iter()
            .map(|&l| self.format_letter(l))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses whitespace-separated labels, each optionally followed by `^k`.
    /// The empty string and `1` denote the identity.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (label, exp) = match tok.split_once('^') {
                Some((l, e)) => {
                    let k: i64 = e
                        .parse()
                        .map_err(|_| LabError::malformed(format!("bad exponent in {tok:?}")))?;
                    (l, k)
                }
                None => (tok, 1),
            };
            let gen = *self
                .label_index
                .get(label)
                .ok_or_else(|| LabError::malformed(format!("unknown generator {label:?}")))?;
            let l = self.letter(gen, exp < 0);
            for _ in 0..exp.unsigned_abs() {
                out.push(l);
            }
        }
        Ok(out)
    }

    /// Comma-separated list of words, as used by CLI flags such as `--P a,b,c`.
    pub fn parse_word_list(&self, text: &str) -> Result<Vec<Word>> {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| self.parse_word(s))
            .collect()
    }

    // ----- incremental normal forms -----

    pub fn identity_acc(&self) -> Acc {
        match &self.kind {
            Kind::Free => Acc::Free(FreeAcc::default()),
            Kind::Abelian { rank } => Acc::Abelian {
                exps: vec![0; *rank],
                len: 0,
            },
            Kind::Racg { .. } => Acc::Racg(Vec::new()),
            Kind::FreeProduct(_) => Acc::Product {
                syllables: Vec::new(),
                len: 0,
            },
            Kind::Direct(fs) => Acc::Direct {
                parts: fs.iter().map(|f| f.group.identity_acc()).collect(),
                len: 0,
            },
        }
    }

    /// Right-multiplies the accumulated element by one generator letter.
    pub fn push(&self, acc: &mut Acc, l: Letter) {
        match (&self.kind, acc) {
            (Kind::Free, Acc::Free(f)) => f.push(l),
            (Kind::Abelian { .. }, Acc::Abelian { exps, len }) => {
                let e = &mut exps[l.gen as usize];
                let before = e.unsigned_abs();
                *e += if l.inv { -1 } else { 1 };
                let after = e.unsigned_abs();
                *len = *len + after as usize - before as usize;
            }
            (Kind::Racg { commute }, Acc::Racg(w)) => {
                let s = l.gen;
                let mut k = w.len();
                while k > 0 {
                    let t = w[k - 1];
                    if t == s {
                        w.remove(k - 1);
                        return;
                    }
                    if !commute[s as usize][t as usize] {
                        break;
                    }
                    k -= 1;
                }
                w.push(s);
            }
            (Kind::FreeProduct(fs), Acc::Product { syllables, len }) => {
                let (f, local) = self.factor_of[l.gen as usize];
                let ll = Letter::new(local, l.inv);
                let fg = &fs[f].group;
                match syllables.last_mut() {
                    Some((tf, top)) if *tf == f => {
                        let before = top.len();
                        fg.push(top, ll);
                        let after = top.len();
                        *len = *len + after - before;
                        if after == 0 {
                            syllables.pop();
                        }
                    }
                    _ => {
                        let mut a = fg.identity_acc();
                        fg.push(&mut a, ll);
                        *len += a.len();
                        syllables.push((f, a));
                    }
                }
            }
            (Kind::Direct(fs), Acc::Direct { parts, len }) => {
                let (f, local) = self.factor_of[l.gen as usize];
                let before = parts[f].len();
                fs[f].group.push(&mut parts[f], Letter::new(local, l.inv));
                *len = *len + parts[f].len() - before;
            }
            _ => panic!("accumulator does not belong to this group"),
        }
    }

    pub fn acc_from_word(&self, w: &[Letter]) -> Acc {
        let mut acc = self.identity_acc();
        for &l in w {
            self.push(&mut acc, l);
        }
        acc
    }

    /// The normal form of an accumulated element.
    pub fn acc_word(&self, acc: &Acc) -> Word {
        match (&self.kind, acc) {
            (Kind::Free, Acc::Free(f)) => f.letters.clone(),
            (Kind::Abelian { .. }, Acc::Abelian { exps, .. }) => {
                let mut out = Vec::new();
                for (g, &e) in exps.iter().enumerate() {
                    let l = Letter::new(g as u32, e < 0);
                    out.extend(std::iter::repeat_n(l, e.unsigned_abs() as usize));
                }
                out
            }
            (Kind::Racg { commute }, Acc::Racg(w)) => racg_lexmin(w, commute)
                .into_iter()
                .map(Letter::pos)
                .collect(),
            (Kind::FreeProduct(fs), Acc::Product { syllables, .. }) => {
                let mut out = Vec::new();
                for (f, a) in syllables {
                    out.extend(lift(&fs[*f], &fs[*f].group.acc_word(a)));
                }
                out
            }
            (Kind::Direct(fs), Acc::Direct { parts, .. }) => {
                let mut out = Vec::new();
                for (f, a) in fs.iter().zip(parts) {
                    out.extend(lift(f, &f.group.acc_word(a)));
                }
                out
            }
            _ => panic!("accumulator does not belong to this group"),
        }
    }

    /// A deterministic 128-bit fingerprint of the accumulated element.
    pub fn fingerprint(&self, acc: &Acc) -> u128 {
        match (&self.kind, acc) {
            (Kind::Free, Acc::Free(f)) => f.hash(),
            (Kind::Abelian { .. }, Acc::Abelian { exps, .. }) => {
                let mut h = SEED;
                for &e in exps {
                    h = mix(h, e as u64);
                }
                h
            }
            (Kind::Racg { .. }, Acc::Racg(_)) => hash_word(&self.acc_word(acc)),
            (Kind::FreeProduct(fs), Acc::Product { syllables, .. }) => {
                let mut h = SEED;
                for (f, a) in syllables {
                    h = mix(mix(h, *f as u64), fold(fs[*f].group.fingerprint(a)));
                }
                h
            }
            (Kind::Direct(fs), Acc::Direct { parts, .. }) => {
                let mut h = SEED;
                for (f, a) in fs.iter().zip(parts) {
                    h = mix(h, fold(f.group.fingerprint(a)));
                }
                h
            }
            _ => panic!("accumulator does not belong to this group"),
        }
    }

    /// For each letter position j, the latest i < j such that letters i and j
    /// form a cancelling pair: a subword whose removal-by-moves certifies
    /// that any window containing both positions is not geodesic. A window is
    /// geodesic iff it contains no such pair.
    pub fn cancel_links(&self, w: &[Letter]) -> Vec<Option<usize>> {
        let mut out = vec![None; w.len()];
        match &self.kind {
            Kind::Free => {
                for j in 1..w.len() {
                    if w[j - 1] == self.inverse_letter(w[j]) {
                        out[j] = Some(j - 1);
                    }
                }
            }
            Kind::Abelian { rank } => {
                let mut last: Vec<[Option<usize>; 2]> = vec![[None, None]; *rank];
                for (j, l) in w.iter().enumerate() {
                    let slot = &mut last[l.gen as usize];
                    out[j] = slot[!l.inv as usize];
                    slot[l.inv as usize] = Some(j);
                }
            }
            Kind::Racg { commute } => {
                let n = commute.len();
                let mut last: Vec<Option<usize>> = vec![None; n];
                let mut blocked = vec![false; n];
                for (j, l) in w.iter().enumerate() {
                    let t = l.gen as usize;
                    if !blocked[t] {
                        out[j] = last[t];
                    }
                    for s in 0..n {
                        if s != t && !commute[s][t] {
                            blocked[s] = true;
                        }
                    }
                    last[t] = Some(j);
                    blocked[t] = false;
                }
            }
            Kind::FreeProduct(fs) => {
                let mut start = 0;
                while start < w.len() {
                    let f = self.factor_of[w[start].gen as usize].0;
                    let mut end = start;
                    while end < w.len() && self.factor_of[w[end].gen as usize].0 == f {
                        end += 1;
                    }
                    let local: Vec<Letter> = w[start..end]
                        .iter()
                        .map(|l| Letter::new(self.factor_of[l.gen as usize].1, l.inv))
                        .collect();
                    for (k, c) in fs[f].group.cancel_links(&local).into_iter().enumerate() {
                        out[start + k] = c.map(|i| start + i);
                    }
                    start = end;
                }
            }
            Kind::Direct(fs) => {
                for (fi, f) in fs.iter().enumerate() {
                    let positions: Vec<usize> = (0..w.len())
                        .filter(|&j| self.factor_of[w[j].gen as usize].0 == fi)
                        .collect();
                    let local: Vec<Letter> = positions
                        .iter()
                        .map(|&j| Letter::new(self.factor_of[w[j].gen as usize].1, w[j].inv))
                        .collect();
                    for (k, c) in f.group.cancel_links(&local).into_iter().enumerate() {
                        out[positions[k]] = c.map(|i| positions[i]);
                    }
                }
            }
        }
        out
    }

    pub fn is_geodesic_word(&self, w: &[Letter]) -> bool {
        self.cancel_links(w).iter().all(Option::is_none)
    }

    /// Generators g with |w g| < |w|.
    pub fn right_descents(&self, w: &[Letter]) -> Vec<Letter> {
        let acc = self.acc_from_word(w);
        let n = acc.len();
        self.moves()
            .into_iter()
            .filter(|&g| {
                let mut a = acc.clone();
                self.push(&mut a, g);
                a.len() < n
            })
            .collect()
    }

    /// Words over the factor's generators lifted to global indices.
    pub fn lift_factor(&self, factor: usize, w: &[Letter]) -> Word {
        lift(&self.factors()[factor], w)
    }

    /// Ball around `center` under the configured radius cap.
    pub fn ball(&self, center: &[Letter], radius: usize) -> Result<Ball> {
        Ball::build(self, center, radius, ball_cap())
    }
}

fn lift(f: &Factor, w: &[Letter]) -> Word {
    w.iter()
        .map(|l| Letter::new(l.gen + f.offset, l.inv))
        .collect()
}

/// Lexicographically least commutation-equivalent rearrangement of a reduced
/// RACG word: repeatedly move the smallest letter that commutes with all
/// letters before it to the front.
fn racg_lexmin(w: &[u32], commute: &[Vec<bool>]) -> Vec<u32> {
    let n = commute.len();
    let mut rest: Vec<u32> = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    let mut blocked = vec![false; n];
    while !rest.is_empty() {
        blocked.iter_mut().for_each(|b| *b = false);
        let mut best: Option<usize> = None;
        for (i, &s) in rest.iter().enumerate() {
            if !blocked[s as usize] && best.is_none_or(|b| s < rest[b]) {
                best = Some(i);
            }
            for t in 0..n {
                if !commute[s as usize][t] {
                    blocked[t] = true;
                }
            }
        }
        out.push(rest.remove(best.expect("nonempty")));
    }
    out
}

// ----- hashing -----

const SEED: u128 = 0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c834;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix(h: u128, x: u64) -> u128 {
    let hi = (h >> 64) as u64;
    let lo = h as u64;
    let nlo = splitmix(lo ^ x);
    let nhi = splitmix(hi.rotate_left(17) ^ nlo ^ x.wrapping_mul(0xff51_afd7_ed55_8ccd));
    ((nhi as u128) << 64) | nlo as u128
}

pub(crate) fn fold(h: u128) -> u64 {
    (h as u64) ^ ((h >> 64) as u64).rotate_left(29)
}

pub fn hash_word(w: &[Letter]) -> u128 {
    w.iter().fold(SEED, |h, l| mix(h, l.code()))
}

#[derive(Clone, Debug, Default)]
pub struct FreeAcc {
    letters: Vec<Letter>,
    hashes: Vec<u128>,
}

impl FreeAcc {
    fn push(&mut self, l: Letter) {
        if let Some(&top) = self.letters.last() {
            if top.gen == l.gen && top.inv != l.inv {
                self.letters.pop();
                self.hashes.pop();
                return;
            }
        }
        let h = mix(self.hash(), l.code());
        self.letters.push(l);
        self.hashes.push(h);
    }

    fn hash(&self) -> u128 {
        self.hashes.last().copied().unwrap_or(SEED)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }
}

/// Incrementally maintained group element. Each variant keeps enough state for
/// O(1)-ish right multiplication and exact length.
#[derive(Clone, Debug)]
pub enum Acc {
    Free(FreeAcc),
    Abelian {
        exps: Vec<i64>,
        len: usize,
    },
    Racg(Vec<u32>),
    Product {
        syllables: Vec<(usize, Acc)>,
        len: usize,
    },
    Direct {
        parts: Vec<Acc>,
        len: usize,
    },
}

impl Acc {
    pub fn len(&self) -> usize {
        match self {
            Acc::Free(f) => f.letters.len(),
            Acc::Abelian { len, .. } => *len,
            Acc::Racg(w) => w.len(),
            Acc::Product { len, .. } => *len,
            Acc::Direct { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ----- balls -----

/// BFS ball in the Cayley graph with normal-form deduplication.
#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Word,
    pub radius: usize,
    pub vertices: Vec<Word>,
    pub dist: Vec<u32>,
    pub index: HashMap<Word, usize>,
    /// Generator-labelled edges between ball vertices.
    pub adjacency: Vec<Vec<(Letter, usize)>>,
}

pub const MAX_BALL_VERTICES: usize = 3_000_000;

impl Ball {
    pub fn build(g: &MarkedGroup, center: &[Letter], radius: usize, cap: usize) -> Result<Ball> {
        if radius > cap {
            return Err(LabError::cap("ball radius", radius, cap));
        }
        g.check_word(center)?;
        let c = g.nf(center);
        let moves = g.moves();
        let mut vertices = vec![c.clone()];
        let mut dist = vec![0u32];
        let mut index = HashMap::new();
        index.insert(c.clone(), 0usize);
        let mut adjacency: Vec<Vec<(Letter, usize)>> = Vec::new();
        let mut head = 0;
        while head < vertices.len() {
            let v = vertices[head].clone();
            let d = dist[head];
            let mut nbrs = Vec::with_capacity(moves.len());
            for &m in &moves {
                let mut w = v.clone();
                w.push(m);
                let w = g.nf(&w);
                if let Some(&j) = index.get(&w) {
                    nbrs.push((m, j));
                } else if (d as usize) < radius {
                    let j = vertices.len();
                    if j >= MAX_BALL_VERTICES {
                        return Err(LabError::cap("ball vertex count", j + 1, MAX_BALL_VERTICES));
                    }
                    index.insert(w.clone(), j);
                    vertices.push(w);
                    dist.push(d + 1);
                    nbrs.push((m, j));
                }
            }
            adjacency.push(nbrs);
            head += 1;
        }
        // Edges discovered before their endpoint existed are filled in by symmetry.
        let mut full = adjacency.clone();
        for (i, nbrs) in adjacency.iter().enumerate() {
            for &(m, j) in nbrs {
                let back = g.inverse_letter(m);
                if !full[j].iter().any(|&(l, k)| l == back && k == i) {
                    full[j].push((back, i));
                }
            }
        }
        for nbrs in &mut full {
            nbrs.sort();
        }
        Ok(Ball {
            center: c,
            radius,
            vertices,
            dist,
            index,
            adjacency: full,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, w: &[Letter]) -> bool {
        self.index.contains_key(w)
    }

    /// Vertices at distance at most `r` from the centre.
    pub fn within(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.dist[i] as usize <= r)
    }

    /// Number of vertices at each distance 0..=radius.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.radius + 1];
        for &d in &self.dist {
            out[d as usize] += 1;
        }
        out
    }
}
