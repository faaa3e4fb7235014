mod common;

use std::collections::{BTreeMap, HashSet};

use common::{all_words, group, w};
use morselab::groups::{Letter, MarkedGroup, Word};
use morselab::morse::MorseGaugeTable;
use morselab::paths::{
    dist, geodesics_between, is_local_quasi_geodesic, LocalParams, PathInGraph, QGParams,
};
use morselab::rat::{rat, Rat};
use morselab::relhyp::RelHypConstants;
use morselab::verify::*;
use morselab::LabError;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn words(g: &MarkedGroup, s: &str) -> Vec<Word> {
    g.parse_word_list(s).unwrap()
}

// ----- ping-pong -----

/// Closure of the generators under right multiplication, inside the ball.
fn closure(g: &MarkedGroup, gens: &[Word], maxlen: usize) -> HashSet<Word> {
    let mut steps = Vec::new();
    for s in gens {
        steps.push(g.nf(s));
        steps.push(g.nf(&g.inverse(s)));
    }
    let mut seen: HashSet<Word> = [Vec::new()].into_iter().collect();
    let mut stack = vec![Vec::new()];
    while let Some(x) = stack.pop() {
        for s in &steps {
            let y = g.multiply(&x, s);
            if y.len() <= maxlen && seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    seen
}

/// Every alternating product of nontrivial factors outside I with total
/// length at most `maxlen`, looking for one that is trivial.
fn naive_collapse(g: &MarkedGroup, p: &[Word], q: &[Word], i: &[Word], maxlen: usize) -> bool {
    let inner = closure(g, i, maxlen);
    let side = |gens: &[Word]| -> Vec<Word> {
        let mut v: Vec<Word> = closure(g, gens, maxlen)
            .into_iter()
            .filter(|x| !x.is_empty() && !inner.contains(x))
            .collect();
        v.sort();
        v
    };
    let sides = [side(p), side(q)];
    fn go(
        g: &MarkedGroup,
        sides: &[Vec<Word>; 2],
        s: usize,
        x: &Word,
        sum: usize,
        k: usize,
        maxlen: usize,
    ) -> bool {
        if k >= 2 && x.is_empty() {
            return true;
        }
        for f in &sides[s] {
            if sum + f.len() <= maxlen
                && go(
                    g,
                    sides,
                    1 - s,
                    &g.multiply(x, f),
                    sum + f.len(),
                    k + 1,
                    maxlen,
                )
            {
                return true;
            }
        }
        false
    }
    go(g, &sides, 0, &Vec::new(), 0, 0, maxlen) || go(g, &sides, 1, &Vec::new(), 0, 0, maxlen)
}

fn check_witness(g: &MarkedGroup, p: &[Word], q: &[Word], i: &[Word], r: &PingPong) {
    let Some(wit) = &r.witness else { return };
    assert!(wit.len() >= 2);
    assert!(g.nf(&wit.concat()).is_empty(), "witness multiplies to e");
    assert!(wit.iter().map(Vec::len).sum::<usize>() <= r.maxlen);
    let inner = closure(g, i, r.maxlen);
    let (mp, mq) = (closure(g, p, r.maxlen), closure(g, q, r.maxlen));
    let first = usize::from(!mp.contains(&wit[0]) || inner.contains(&wit[0]));
    for (k, f) in wit.iter().enumerate() {
        let m = if (k + first) % 2 == 0 { &mp } else { &mq };
        assert!(
            m.contains(f) && !inner.contains(f) && !f.is_empty(),
            "factor {k}"
        );
    }
}

#[test]
fn pingpong_agrees_with_naive_search() {
    let cases: [(&str, &str, &str, &str, usize); 6] = [
        ("z2", "a", "a b", "", 8),
        ("z2", "a", "a^2, b", "a^2", 6),
        ("f2", "a", "b", "", 8),
        ("f2", "a", "b a b^-1", "", 8),
        ("f2xz", "x", "t", "", 6),
        ("racg-fig1", "a,b,c,d,m", "a,f,e,d,p,n", "a,d", 6),
    ];
    for (name, p, q, i, top) in cases {
        let g = group(name);
        let (p, q, i) = (words(&g, p), words(&g, q), words(&g, i));
        for maxlen in 1..=top {
            let r = pingpong_check(&g, &p, &q, &i, maxlen).unwrap();
            check_witness(&g, &p, &q, &i, &r);
            assert_eq!(
                !r.consistent(),
                naive_collapse(&g, &p, &q, &i, maxlen),
                "{name} at {maxlen}"
            );
        }
    }
}

#[test]
fn lattice_counterexample_collapses_to_a_commutator() {
    let g = group("z2");
    let r = pingpong_check(&g, &words(&g, "a"), &words(&g, "a b"), &[], 8).unwrap();
    let wit = r.witness.clone().unwrap();
    assert_eq!(wit, words(&g, "a, a b, a^-1, a^-1 b^-1"));
    let j = r.to_json(&g);
    assert_eq!(j["verdict"], "collapse");
    assert_eq!(j["witness_word"], "a a b a^-1 a^-1 b^-1");
}

#[test]
fn free_factors_never_collapse() {
    let g = group("f2");
    let r = pingpong_check(&g, &words(&g, "a"), &words(&g, "b"), &[], 10).unwrap();
    assert!(r.consistent());
    assert_eq!(r.to_json(&g)["verdict"], "consistent");
}

#[test]
fn pingpong_preconditions() {
    let g = group("z2");
    let err = pingpong_check(&g, &words(&g, "a"), &words(&g, "b"), &words(&g, "a"), 4);
    assert!(matches!(err, Err(LabError::Precondition(_))));
    let too_long = pingpong_check(&g, &words(&g, "a"), &words(&g, "b"), &[], 1000);
    assert!(matches!(too_long, Err(LabError::Cap { .. })));
}

#[test]
fn subgroup_balls() {
    let g = group("z2");
    let s = subgroup_ball(&g, &words(&g, "a b"), 4).unwrap();
    assert_eq!(s.len(), 5);
    assert_eq!(s[0], Vec::<Letter>::new());
    let f = group("f2");
    // Reduced words in a, b of length ≤ 2: 1 + 4 + 12.
    assert_eq!(subgroup_ball(&f, &words(&f, "a, b"), 2).unwrap().len(), 17);
}

// ----- slim triangles -----

/// Worst choice of three geodesic sides, each point's distance to the union
/// of the other two.
fn brute_slimness(g: &MarkedGroup, x: &[Letter], y: &[Letter], z: &[Letter]) -> usize {
    let sides = |u: &[Letter], v: &[Letter]| -> Vec<Vec<Word>> {
        geodesics_between(g, u, v, 100_000)
            .unwrap()
            .iter()
            .map(|p| p.points(g))
            .collect()
    };
    let (a, b, c) = (sides(x, y), sides(y, z), sides(z, x));
    let near = |pts: &[Word], to: &[Word]| {
        pts.iter()
            .map(|p| to.iter().map(|q| dist(g, p, q)).min().unwrap())
            .collect::<Vec<_>>()
    };
    let mut worst = 0;
    for ga in &a {
        for gb in &b {
            for gc in &c {
                for (s, o1, o2) in [(ga, gb, gc), (gb, gc, ga), (gc, ga, gb)] {
                    let d1 = near(s, o1);
                    let d2 = near(s, o2);
                    worst = worst.max(d1.iter().zip(&d2).map(|(p, q)| *p.min(q)).max().unwrap());
                }
            }
        }
    }
    worst
}

#[test]
fn lattice_triangles_are_fat() {
    let g = group("z2");
    assert_eq!(
        triangle_slimness(&g, &[], &w(&g, "a^2"), &w(&g, "b^2")).unwrap(),
        2
    );
    assert_eq!(brute_slimness(&g, &[], &w(&g, "a^2"), &w(&g, "b^2")), 2);
    let c = local_hyperbolicity_certificate(&g, 3, 0).unwrap();
    assert!(!c.verdict);
    assert_eq!(c.slimness.delta_min, 3);
    let [x, y, z] = c.slimness.witness_triangle.clone().unwrap();
    assert_eq!(triangle_slimness(&g, &x, &y, &z).unwrap(), 3);
}

#[test]
fn trees_certify_at_zero() {
    let g = group("f2");
    let c = local_hyperbolicity_certificate(&g, 3, 0).unwrap();
    assert!(c.verdict);
    assert_eq!(c.slimness.delta_min, 0);
    assert_eq!(c.slimness.witness_triangle, None);
    // 53 vertices: C(55, 3) multisets.
    assert_eq!(c.triangles, 26235);
    assert_eq!(c.to_json(&g)["verdict"], "pass");
    let s = pointed_slimness(&g, 3).unwrap();
    assert_eq!(s.max_slimness, 0);
}

#[test]
fn radius_zero_passes_everywhere() {
    for name in ["f2", "z2", "racg-fig1", "zz2-free-z"] {
        let c = local_hyperbolicity_certificate(&group(name), 0, 0).unwrap();
        assert!(c.verdict, "{name}");
        assert_eq!(c.triangles, 1);
    }
}

#[test]
fn gauge_slimness_by_length() {
    let g = group("racg-fig1");
    let r = gauge_slimness_check(&g, 2, &QGParams::int(3, 0)).unwrap();
    assert!(r.letter_gauges.iter().all(|&m| m >= r.m_floor));
    assert_eq!(r.bound, 4 * r.m_floor + 2);
    assert!(r.certified_by_length);
    assert_eq!(r.exceptions, 0);
}

fn small_vertex() -> impl Strategy<Value = Vec<(u32, bool)>> {
    prop::collection::vec((0..6u32, any::<bool>()), 0..=3)
}

fn mk(g: &MarkedGroup, raw: &[(u32, bool)]) -> Word {
    let labels: Word = raw
        .iter()
        .map(|&(i, s)| g.letter(i % g.generator_count() as u32, s))
        .collect();
    g.nf(&labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn slimness_matches_brute_force(f in 0..3usize, a in small_vertex(), b in small_vertex(), c in small_vertex()) {
        let g = group(["z2", "f2", "racg-fig1"][f]);
        let (x, y, z) = (mk(&g, &a), mk(&g, &b), mk(&g, &c));
        prop_assert_eq!(triangle_slimness(&g, &x, &y, &z).unwrap(), brute_slimness(&g, &x, &y, &z));
    }

    #[test]
    fn slimness_ignores_vertex_order(a in small_vertex(), b in small_vertex(), c in small_vertex()) {
        let g = group("z2");
        let (x, y, z) = (mk(&g, &a), mk(&g, &b), mk(&g, &c));
        let s = triangle_slimness(&g, &x, &y, &z).unwrap();
        prop_assert_eq!(s, triangle_slimness(&g, &z, &x, &y).unwrap());
        prop_assert_eq!(s, triangle_slimness(&g, &y, &x, &z).unwrap());
    }
}

#[test]
fn certificates_are_monotone_in_radius() {
    for name in ["z2", "racg-fig1", "zz2-free-z"] {
        let g = group(name);
        let deltas: Vec<usize> = (0..=2)
            .map(|r| {
                local_hyperbolicity_certificate(&g, r, 0)
                    .unwrap()
                    .slimness
                    .delta_min
            })
            .collect();
        assert!(
            deltas.windows(2).all(|d| d[0] <= d[1]),
            "{name}: {deltas:?}"
        );
        for r in 0..=2 {
            // Passing at δ_min(R) means passing at every smaller radius.
            let c = local_hyperbolicity_certificate(&g, r, deltas[2]).unwrap();
            assert!(c.verdict);
        }
    }
}

// ----- translation spectrum -----

fn cyclic_free_reduce(w: &[Letter]) -> Word {
    let mut v = common::free_reduce(w);
    while v.len() >= 2 && v[0].gen == v[v.len() - 1].gen && v[0].inv != v[v.len() - 1].inv {
        v.remove(0);
        v.pop();
    }
    v
}

/// Conjugacy classes of F2 met by words of length ≤ n: rotation classes of
/// cyclically reduced words.
fn free_classes(g: &MarkedGroup, n: usize) -> BTreeMap<Word, usize> {
    let mut out = BTreeMap::new();
    for k in 0..=n {
        for word in all_words(&g.moves(), k) {
            let c = cyclic_free_reduce(&word);
            let key = (0..c.len().max(1))
                .map(|i| [&c[i.min(c.len())..], &c[..i.min(c.len())]].concat())
                .min()
                .unwrap_or_default();
            out.insert(key, c.len());
        }
    }
    out
}

#[test]
fn free_spectrum_matches_cyclic_reduction() {
    let g = group("f2");
    for n in 0..=4 {
        let s = translation_spectrum(&g, n, None).unwrap();
        let oracle = free_classes(&g, n);
        assert_eq!(s.classes.len(), oracle.len(), "maxlen {n}");
        let mut taus: Vec<usize> = oracle.values().copied().collect();
        taus.sort();
        taus.dedup();
        let want: Vec<Rat> = taus.iter().map(|&t| rat(t as i64)).collect();
        assert_eq!(s.values, want);
        for c in &s.classes {
            assert!(c.exact);
            assert_eq!(
                c.tau,
                rat(cyclic_free_reduce(&c.representative).len() as i64)
            );
            let r = &c.representative;
            let rotations: HashSet<Word> = (0..r.len().max(1))
                .map(|i| [&r[i.min(r.len())..], &r[..i.min(r.len())]].concat())
                .collect();
            assert_eq!(c.shortest, rotations.len());
        }
    }
}

#[test]
fn lattice_spectrum_is_l1() {
    let g = group("z2");
    let s = translation_spectrum(&g, 3, None).unwrap();
    // Z² is abelian: classes are elements, 2n² + 2n + 1 of them.
    assert_eq!(s.classes.len(), 25);
    for c in &s.classes {
        assert_eq!(c.tau, rat(c.representative.len() as i64));
    }
    assert_eq!(s.min_gap, Some(rat(1)));
}

#[test]
fn spectrum_basics() {
    for name in ["f2", "zz2-free-z", "racg-fig1", "f2xz"] {
        let g = group(name);
        let s = translation_spectrum(&g, 3, None).unwrap();
        let id = s
            .classes
            .iter()
            .find(|c| c.representative.is_empty())
            .unwrap();
        assert_eq!(id.tau, rat(0));
        for c in s.classes.iter().filter(|c| c.exact) {
            assert!(*c.tau.denom() as usize <= 3, "{name}");
        }
        assert!(s.values.windows(2).all(|v| v[0] < v[1]));
    }
}

// ----- local-to-global -----

#[test]
fn exhaustive_local_to_global_in_trees() {
    let g = group("f2");
    let r = local_to_global_exhaustive(&g, &QGParams::geodesic(), &[2, 3], 7).unwrap();
    let t = &r.table.as_ref().unwrap();
    let reduced: usize = (1..=7).map(|k| 4 * 3usize.pow(k - 1)).sum();
    for row in &t.rows {
        assert_eq!(row[1], reduced.to_string());
        assert_eq!(row[4], "0");
        assert_eq!(row[5], "0");
        assert_eq!(row[6], "0");
    }
    assert_eq!(r.invariant_passed("monotone_in_scale"), Some(true));
}

#[test]
fn exhaustive_counts_match_enumeration() {
    let g = group("z2");
    let n = 6;
    let r = local_to_global_exhaustive(&g, &QGParams::geodesic(), &[2, 3], n).unwrap();
    let t = r.table.as_ref().unwrap();
    for (row, l) in t.rows.iter().zip([2usize, 3]) {
        let lp = LocalParams::new(l, QGParams::geodesic()).unwrap();
        let (mut local, mut bent) = (0, 0);
        for k in 1..=n {
            for word in all_words(&g.moves(), k) {
                let p = PathInGraph::from_word(&g, &word).unwrap();
                if is_local_quasi_geodesic(&g, &p, &lp).verdict {
                    local += 1;
                    bent += usize::from(g.word_length(&word) < k);
                }
            }
        }
        assert_eq!(row[1], local.to_string(), "L = {l}");
        assert_eq!(row[6], bent.to_string(), "L = {l}");
    }
}

#[test]
fn local_to_global_edge_cases() {
    let g = group("f2");
    let gauge = MorseGaugeTable::supplied(&[(QGParams::geodesic(), 0)]).unwrap();
    let r = local_to_global_experiment(&g, &gauge, &QGParams::geodesic(), &[], 10, 1).unwrap();
    assert!(r.table.as_ref().unwrap().rows.is_empty());
    assert!(matches!(
        local_to_global_exhaustive(&g, &QGParams::geodesic(), &[2], 1000),
        Err(LabError::Cap { .. })
    ));
}

#[test]
fn sampled_local_to_global_is_monotone_and_seeded() {
    let g = group("zz2-free-z");
    let gauge = MorseGaugeTable::supplied(&[(QGParams::geodesic(), 2)]).unwrap();
    let run = |seed| {
        local_to_global_experiment(&g, &gauge, &QGParams::geodesic(), &[2, 4, 6], 40, seed).unwrap()
    };
    let r = run(7);
    assert_eq!(r.invariant_passed("monotone_in_scale"), Some(true));
    assert_eq!(r.canonical(), run(7).canonical());
    assert_eq!(r.schema_version, SCHEMA_VERSION);
    let back: serde_json::Value = serde_json::from_str(&r.to_json_pretty()).unwrap();
    assert_eq!(back["experiment"], "ltg-experiment");
}

#[test]
fn lattice_gauge_one_leaves_long_scales_empty() {
    // Gauge-1 geodesics in Z² have length at most 3, so no pair of them
    // jointly exceeds L = 8.
    let g = group("z2");
    let gauge = MorseGaugeTable::supplied(&[(QGParams::geodesic(), 1)]).unwrap();
    let r = local_to_global_experiment(&g, &gauge, &QGParams::geodesic(), &[8], 30, 1).unwrap();
    let row = &r.table.as_ref().unwrap().rows[0];
    assert_eq!(row[1], "0");
    assert!(
        r.flags.iter().any(|f| f == "empty sample set at L=8"),
        "{:?}",
        r.flags
    );
}

// ----- trichotomy -----

#[test]
fn trichotomy_cases() {
    let cases = [
        ("f2", TrichotomyCase::FreeSubgroup),
        ("z2", TrichotomyCase::MorseLimited),
        ("z", TrichotomyCase::VirtuallyCyclic),
    ];
    for (name, want) in cases {
        let g = group(name);
        let e = trichotomy_probe(&g, 8).unwrap();
        assert_eq!(e.case, want, "{name}");
        if want == TrichotomyCase::FreeSubgroup {
            assert!(e.pingpong.as_ref().unwrap().consistent());
        }
        assert!(e.ball_sizes.windows(2).all(|b| b[0] <= b[1]));
    }
    assert!(trichotomy_probe(&group("f2"), 1).is_err());
}

// ----- relative decomposition -----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn generated_paths_are_local_geodesics(scale in 2usize..16, syl in 1usize..6, max in 1usize..24, seed in any::<u64>()) {
        let g = group("zz2-free-z");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let word = free_product_local_geodesic(&g, scale, syl, max, &mut rng).unwrap();
        let p = PathInGraph::from_word(&g, &word).unwrap();
        let lp = LocalParams::new(scale, QGParams::geodesic()).unwrap();
        prop_assert!(is_local_quasi_geodesic(&g, &p, &lp).verdict);
    }
}

#[test]
fn generator_needs_a_free_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(free_product_local_geodesic(&group("f2xz"), 10, 2, 5, &mut rng).is_err());
    assert!(free_product_local_geodesic(&group("zz2-free-z"), 0, 2, 5, &mut rng).is_err());
}

#[test]
fn decomposition_experiment_passes_and_is_seeded() {
    let g = group("zz2-free-z");
    let f: BTreeMap<usize, usize> = [(0, 0), (1, 1), (2, 2)].into_iter().collect();
    let c = RelHypConstants::new(1, f, rat(1), 1, 1, QGParams::geodesic()).unwrap();
    let r = decomposition_experiment(&g, &c, 3, 6, 11).unwrap();
    assert!(r.passed(), "{}", r.to_json_pretty());
    assert_eq!(r.value("theta"), Some(&serde_json::json!(900)));
    assert!(r.value("alpha_count").unwrap().as_u64().unwrap() > 0);
    assert_eq!(
        r.canonical(),
        decomposition_experiment(&g, &c, 3, 6, 11)
            .unwrap()
            .canonical()
    );
}

#[test]
fn tables_render_as_csv() {
    let mut t = Table::new(&["L", "N"]);
    t.rows.push(vec!["2".into(), "0".into()]);
    assert_eq!(t.to_csv(), "L,N\n2,0\n");
}
