mod common;

use common::{binomial, group, naive_is_qg, w};
use morselab::paths::{
    concat_geodesics, dist, geodesics_between, hausdorff, is_local_quasi_geodesic,
    is_quasi_geodesic, LocalParams, PathInGraph, QGParams,
};
use morselab::rat::{rat, Rat};
use morselab::LabError;
use proptest::prelude::*;

fn path(g: &morselab::MarkedGroup, start: &str, labels: &str) -> PathInGraph {
    PathInGraph::new(g, &w(g, start), w(g, labels)).unwrap()
}

#[test]
fn distances() {
    let f2 = group("f2");
    assert_eq!(dist(&f2, &w(&f2, "a"), &w(&f2, "a b")), 1);
    let z2 = group("z2");
    assert_eq!(dist(&z2, &[], &w(&z2, "a^3 b^-2")), 5);
    let fig = group("racg-fig1");
    assert_eq!(dist(&fig, &[], &w(&fig, "a d a d")), 4);
}

#[test]
fn backtracking_path_in_f2() {
    let g = group("f2");
    let p = path(&g, "", "a a a^-1");
    assert!(is_quasi_geodesic(&g, &p, &QGParams::int(1, 2)).verdict);
    let v = is_quasi_geodesic(&g, &p, &QGParams::int(1, 1));
    assert!(!v.verdict);
    assert_eq!(v.worst_pair, Some((0, 3)));
    assert_eq!(v.margin, Some(rat(1)));
}

#[test]
fn staircase_is_geodesic() {
    let g = group("z2");
    let p = path(&g, "", "a b a b");
    let v = is_quasi_geodesic(&g, &p, &QGParams::geodesic());
    assert!(v.verdict);
    assert_eq!(v.worst_pair, Some((0, 1)));
}

#[test]
fn single_point_paths_pass_everything() {
    let g = group("z2");
    let p = path(&g, "a", "");
    assert!(is_quasi_geodesic(&g, &p, &QGParams::geodesic()).verdict);
    for l in 1..5 {
        let lp = LocalParams::new(l, QGParams::geodesic()).unwrap();
        assert!(is_local_quasi_geodesic(&g, &p, &lp).verdict);
    }
}

#[test]
fn local_but_not_global_geodesic() {
    // A U-turn in the plane: every 3-window is geodesic, the 4-window through
    // the turn is not.
    let g = group("z2");
    let p = path(&g, "", "a a b b a^-1 a^-1");
    let at = |l| LocalParams::new(l, QGParams::geodesic()).unwrap();
    assert!(is_local_quasi_geodesic(&g, &p, &at(3)).verdict);
    let v = is_local_quasi_geodesic(&g, &p, &at(4));
    assert!(!v.verdict);
    assert_eq!(v.worst_window, Some((1, 5)));
    assert!(!is_local_quasi_geodesic(&g, &p, &at(6)).verdict);
}

#[test]
fn general_and_fast_local_checks_agree() {
    let g = group("z2");
    let p = path(&g, "", "a a b b a^-1 a^-1");
    // (1, 1/2) fails exactly where (1,0) fails for integer distances.
    let half = QGParams::new(rat(1), Rat::new(1, 2)).unwrap();
    for l in 1..=6 {
        let slow = is_local_quasi_geodesic(&g, &p, &LocalParams::new(l, half).unwrap());
        let fast =
            is_local_quasi_geodesic(&g, &p, &LocalParams::new(l, QGParams::geodesic()).unwrap());
        assert_eq!(slow, fast, "scale {l}");
    }
}

#[test]
fn in_a_tree_local_geodesics_are_global() {
    let g = group("f2");
    let lp = LocalParams::new(2, QGParams::geodesic()).unwrap();
    for word in common::all_words(&g.moves(), 6) {
        let p = PathInGraph::from_word(&g, &word).unwrap();
        let local = is_local_quasi_geodesic(&g, &p, &lp).verdict;
        assert_eq!(
            local,
            is_quasi_geodesic(&g, &p, &QGParams::geodesic()).verdict
        );
    }
}

#[test]
fn concatenations() {
    let lp = LocalParams::new(4, QGParams::geodesic()).unwrap();
    let f2 = group("f2");
    let one = concat_geodesics(&f2, &[path(&f2, "", "a^5")], &lp).unwrap();
    assert!(one.lemma_hypothesis_met);
    assert_eq!(one.path, path(&f2, "", "a^5"));
    let r = concat_geodesics(&f2, &[path(&f2, "", "a^5"), path(&f2, "a^5", "b^5")], &lp).unwrap();
    assert!(r.lemma_hypothesis_met);
    assert!(is_quasi_geodesic(&f2, &r.path, &QGParams::geodesic()).verdict);

    let z2 = group("z2");
    let r = concat_geodesics(&z2, &[path(&z2, "", "a^5"), path(&z2, "a^5", "a^-5")], &lp).unwrap();
    assert!(!r.lemma_hypothesis_met);

    let short = concat_geodesics(&f2, &[path(&f2, "", "a^2"), path(&f2, "a^2", "b")], &lp).unwrap();
    assert!(!short.lemma_hypothesis_met, "2 + 1 is not longer than 4");
}

#[test]
fn concatenation_errors() {
    let lp = LocalParams::new(4, QGParams::geodesic()).unwrap();
    let f2 = group("f2");
    let gap = concat_geodesics(&f2, &[path(&f2, "", "a"), path(&f2, "b", "b")], &lp);
    assert!(matches!(gap, Err(LabError::Precondition(_))));
    let bent = concat_geodesics(&f2, &[path(&f2, "", "a a^-1 b")], &lp);
    assert!(matches!(bent, Err(LabError::Precondition(_))));
}

#[test]
fn hausdorff_examples() {
    let z2 = group("z2");
    let p = path(&z2, "", "a a b b");
    let q = path(&z2, "", "b b a a");
    assert_eq!(hausdorff(&z2, &p, &p), 0);
    assert_eq!(hausdorff(&z2, &p, &q), 2);
    let f2 = group("f2");
    let ab = path(&f2, "", "a b");
    assert_eq!(hausdorff(&f2, &ab, &ab.reversed(&f2)), 0);
}

#[test]
fn geodesic_counts() {
    let f2 = group("f2");
    assert_eq!(
        geodesics_between(&f2, &[], &w(&f2, "a b"), 10)
            .unwrap()
            .len(),
        1
    );
    let z2 = group("z2");
    assert_eq!(
        geodesics_between(&z2, &[], &w(&z2, "a a b"), 10)
            .unwrap()
            .len(),
        3
    );
    let fig = group("racg-fig1");
    let gs = geodesics_between(&fig, &[], &w(&fig, "a m"), 10).unwrap();
    let spelled: Vec<String> = gs.iter().map(|p| fig.format_word(&p.labels)).collect();
    assert_eq!(spelled, ["a m", "m a"]);
    assert!(matches!(
        geodesics_between(&z2, &[], &w(&z2, "a^6"), 5),
        Err(LabError::Cap { .. })
    ));
}

#[test]
fn lattice_geodesic_counts_are_binomial() {
    let z2 = group("z2");
    for i in -3i64..=3 {
        for j in -3i64..=3 {
            let target = z2.parse_word(&format!("a^{i} b^{j}")).unwrap();
            let n = (i.abs() + j.abs()) as u64;
            let count = geodesics_between(&z2, &[], &target, 10).unwrap().len() as u64;
            assert_eq!(count, binomial(n, i.unsigned_abs()), "({i},{j})");
        }
    }
}

#[test]
fn path_json_round_trip() {
    let g = group("zz2-free-z");
    let p = path(&g, "x", "t y^-1 t^-1");
    let text = p.to_json(&g).to_string();
    assert_eq!(text, r#"["x","x t","x t y^-1","x t y^-1 t^-1"]"#);
    assert_eq!(PathInGraph::from_json(&g, &text).unwrap(), p);
    assert!(PathInGraph::from_json(&g, r#"["x","t"]"#).is_err());
    assert!(PathInGraph::from_json(&g, "[]").is_err());
}

fn raw_word() -> impl Strategy<Value = Vec<(u32, bool)>> {
    prop::collection::vec((0..10u32, any::<bool>()), 0..=8)
}

fn fam(i: usize) -> morselab::MarkedGroup {
    group(["f2", "z2", "racg-fig1", "zz2-free-z", "f2xz"][i])
}

fn mk(g: &morselab::MarkedGroup, raw: &[(u32, bool)]) -> PathInGraph {
    let labels: Vec<morselab::Letter> = raw
        .iter()
        .map(|&(i, s)| g.letter(i % g.generator_count() as u32, s))
        .collect();
    PathInGraph::from_word(g, &labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn geodesic_iff_unit_qg(f in 0..5usize, raw in raw_word()) {
        let g = fam(f);
        let p = mk(&g, &raw);
        let v = is_quasi_geodesic(&g, &p, &QGParams::geodesic()).verdict;
        prop_assert_eq!(v, g.word_length(&p.labels) == p.len());
    }

    #[test]
    fn qg_check_matches_naive(f in 0..5usize, raw in raw_word(), l in 1i64..4, e in 0i64..4, den in 1i64..3) {
        let g = fam(f);
        let p = mk(&g, &raw);
        let lambda = Rat::new(l * den + 1, den).max(rat(1));
        let eps = Rat::new(e, den);
        let q = QGParams::new(lambda, eps).unwrap();
        prop_assert_eq!(is_quasi_geodesic(&g, &p, &q).verdict, naive_is_qg(&g, &p.labels, lambda, eps));
    }

    #[test]
    fn qg_is_monotone_in_constants(f in 0..5usize, raw in raw_word(), l in 1i64..4, e in 0i64..4) {
        let g = fam(f);
        let p = mk(&g, &raw);
        if is_quasi_geodesic(&g, &p, &QGParams::int(l, e)).verdict {
            prop_assert!(is_quasi_geodesic(&g, &p, &QGParams::int(l + 1, e)).verdict);
            prop_assert!(is_quasi_geodesic(&g, &p, &QGParams::int(l, e + 1)).verdict);
        }
    }

    #[test]
    fn locality_is_monotone_in_scale(f in 0..5usize, raw in raw_word(), l in 1usize..8, e in 0i64..2) {
        let g = fam(f);
        let p = mk(&g, &raw);
        let q = QGParams::int(1, e);
        if is_local_quasi_geodesic(&g, &p, &LocalParams::new(l, q).unwrap()).verdict {
            for smaller in 1..l {
                prop_assert!(is_local_quasi_geodesic(&g, &p, &LocalParams::new(smaller, q).unwrap()).verdict);
            }
        }
    }

    #[test]
    fn global_qgs_are_local_at_every_scale(f in 0..5usize, raw in raw_word(), l in 1usize..10) {
        let g = fam(f);
        let p = mk(&g, &raw);
        let q = QGParams::int(2, 1);
        if is_quasi_geodesic(&g, &p, &q).verdict {
            prop_assert!(is_local_quasi_geodesic(&g, &p, &LocalParams::new(l, q).unwrap()).verdict);
        }
    }

    #[test]
    fn hausdorff_is_a_pseudometric(f in 0..5usize, a in raw_word(), b in raw_word(), c in raw_word()) {
        let g = fam(f);
        let (p, q, r) = (mk(&g, &a), mk(&g, &b), mk(&g, &c));
        prop_assert_eq!(hausdorff(&g, &p, &q), hausdorff(&g, &q, &p));
        prop_assert!(hausdorff(&g, &p, &r) <= hausdorff(&g, &p, &q) + hausdorff(&g, &q, &r));
        prop_assert_eq!(hausdorff(&g, &p, &p), 0);
    }
}
