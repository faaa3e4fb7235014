//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use morselab::fixtures;
use morselab::groups::{shortlex_cmp, Letter, MarkedGroup, Word};

pub fn group(name: &str) -> MarkedGroup {
    fixtures::load(name).expect("bundled fixture parses")
}

pub fn w(g: &MarkedGroup, s: &str) -> Word {
    g.parse_word(s).expect("test word parses")
}

/// Every word of length exactly `n` over the given letters.
pub fn all_words(letters: &[Letter], n: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * letters.len());
        for v in &out {
            for &l in letters {
                let mut u = v.clone();
                u.push(l);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// ShortLex-least word reachable from `w` by deleting adjacent equal letters
/// and swapping adjacent commuting letters.
pub fn racg_closure_nf(g: &MarkedGroup, w: &[Letter]) -> Word {
    let mut seen: BTreeSet<Word> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(w.to_vec());
    queue.push_back(w.to_vec());
    let mut best = w.to_vec();
    while let Some(v) = queue.pop_front() {
        if shortlex_cmp(&v, &best).is_lt() {
            best = v.clone();
        }
        for i in 0..v.len().saturating_sub(1) {
            let (s, t) = (v[i], v[i + 1]);
            let next = if s == t {
                let mut u = v.clone();
                u.drain(i..i + 2);
                u
            } else if g.commutes(s.gen, t.gen) {
                let mut u = v.clone();
                u.swap(i, i + 1);
                u
            } else {
                continue;
            };
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    best
}

/// Free reduction by a stack, independent of the library accumulator.
pub fn free_reduce(w: &[Letter]) -> Word {
    let mut out: Word = Vec::new();
    for &l in w {
        match out.last() {
            Some(&t) if t.gen == l.gen && t.inv != l.inv => {
                out.pop();
            }
            _ => out.push(l),
        }
    }
    out
}

/// Exponent vector of a word in a free abelian group.
pub fn exponents(rank: usize, w: &[Letter]) -> Vec<i64> {
    let mut e = vec![0; rank];
    for l in w {
        e[l.gen as usize] += if l.inv { -1 } else { 1 };
    }
    e
}

/// BFS distances from the identity computed over nothing but the group
/// multiplication, for cross-checking word lengths.
pub fn bfs_lengths(g: &MarkedGroup, radius: usize) -> HashMap<Word, usize> {
    let mut out = HashMap::new();
    out.insert(Vec::new(), 0);
    let mut frontier = vec![Vec::new()];
    for d in 1..=radius {
        let mut next = Vec::new();
        for v in &frontier {
            for m in g.moves() {
                let u = g.multiply(v, &[m]);
                if !out.contains_key(&u) {
                    out.insert(u.clone(), d);
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    out
}

/// L1 distance between integer points.
pub fn l1(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// All-pairs quasi-geodesic test straight from the two inequalities, using
/// points computed by repeated multiplication.
pub fn naive_is_qg(
    g: &MarkedGroup,
    labels: &[Letter],
    lambda: morselab::rat::Rat,
    eps: morselab::rat::Rat,
) -> bool {
    use morselab::rat::rat;
    let mut pts = vec![Vec::new()];
    for &l in labels {
        let next = g.multiply(pts.last().unwrap(), &[l]);
        pts.push(next);
    }
    for s in 0..pts.len() {
        for t in s + 1..pts.len() {
            let gap = rat((t - s) as i64);
            let d = rat(g.dist(&pts[s], &pts[t]) as i64);
            if gap / lambda - eps > d || d > lambda * gap + eps {
                return false;
            }
        }
    }
    true
}

/// Every word of length at most `max` whose path from e is a
/// quasi-geodesic ending at `target`, found without any pruning.
pub fn brute_quasi_geodesics(
    g: &MarkedGroup,
    target: &[Letter],
    lambda: morselab::rat::Rat,
    eps: morselab::rat::Rat,
    max: usize,
) -> Vec<Word> {
    let t = g.nf(target);
    let mut out = Vec::new();
    for n in 0..=max {
        for word in all_words(&g.moves(), n) {
            if g.nf(&word) == t && naive_is_qg(g, &word, lambda, eps) {
                out.push(word);
            }
        }
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
