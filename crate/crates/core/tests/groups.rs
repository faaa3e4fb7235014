mod common;

use common::{all_words, bfs_lengths, exponents, free_reduce, group, racg_closure_nf, w};
use morselab::groups::{parse_group, Ball, GroupDescriptor, Letter};
use morselab::LabError;
use proptest::prelude::*;

#[test]
fn generator_labels() {
    assert_eq!(group("f2").labels(), ["a", "b"]);
    let fig = group("racg-fig1");
    assert_eq!(
        fig.labels(),
        ["a", "b", "c", "d", "e", "f", "g", "m", "n", "p"]
    );
    assert_eq!(group("zz2-free-z").labels(), ["x", "y", "t"]);
    assert_eq!(group("f2xz").labels(), ["x", "y", "t"]);
}

#[test]
fn colliding_factor_labels_get_prefixed() {
    let d = GroupDescriptor::free_product(vec![
        GroupDescriptor::racg(&["a", "b"], &[]),
        GroupDescriptor::racg(&["a", "c"], &[]),
    ]);
    let g = parse_group(&d).unwrap();
    assert_eq!(g.labels(), ["0.a", "0.b", "1.a", "1.c"]);
}

#[test]
fn malformed_descriptors_are_rejected() {
    let bad = [
        r#"{"family":"free","rank":0}"#,
        r#"{"family":"free_abelian"}"#,
        r#"{"family":"racg","graph":{"vertices":["a","a"],"edges":[]}}"#,
        r#"{"family":"racg","graph":{"vertices":["a","b"],"edges":[["a","a"]]}}"#,
        r#"{"family":"racg","graph":{"vertices":["a","b"],"edges":[["a","b"],["b","a"]]}}"#,
        r#"{"family":"racg","graph":{"vertices":["a"],"edges":[["a","z"]]}}"#,
        r#"{"family":"free_product","factors":[{"family":"free","rank":1}]}"#,
        r#"{"family":"free","rank":2,"labels":["a","a"]}"#,
        r#"{"family":"klein"}"#,
    ];
    for text in bad {
        assert!(
            matches!(
                morselab::MarkedGroup::from_json(text),
                Err(LabError::Malformed(_))
            ),
            "{text}"
        );
    }
}

#[test]
fn unknown_generator_index_is_rejected() {
    let g = group("f2");
    assert!(g.normal_form(&[Letter::pos(5)]).is_err());
    assert!(g.parse_word("a q").is_err());
}

#[test]
fn small_normal_forms() {
    let f2 = group("f2");
    assert_eq!(f2.nf(&w(&f2, "a a^-1 b")), w(&f2, "b"));
    let fig = group("racg-fig1");
    assert!(fig.nf(&w(&fig, "a m a m")).is_empty());
    assert_eq!(fig.nf(&w(&fig, "a d")), w(&fig, "a d"));
    assert_eq!(racg_closure_nf(&fig, &w(&fig, "a d")), w(&fig, "a d"));
}

#[test]
fn small_word_lengths() {
    let z2 = group("z2");
    assert_eq!(z2.word_length(&w(&z2, "a b a b")), 4);
    let f2 = group("f2");
    assert_eq!(f2.word_length(&w(&f2, "a b b^-1 a")), 2);
    let zz = group("zz2-free-z");
    let lens = bfs_lengths(&zz, 5);
    let x = w(&zz, "x y t x");
    assert_eq!(zz.word_length(&x), 4);
    assert_eq!(lens[&zz.nf(&x)], 4);
}

#[test]
fn word_text_round_trip() {
    let g = group("zz2-free-z");
    let x = w(&g, "x^2 t^-1 y^-3");
    assert_eq!(x.len(), 6);
    assert_eq!(g.format_word(&x), "x x t^-1 y^-1 y^-1 y^-1");
    assert_eq!(g.parse_word(&g.format_word(&x)).unwrap(), x);
    assert!(g.parse_word("").unwrap().is_empty());
    assert!(g.parse_word("1").unwrap().is_empty());
    // Involutions ignore the sign of exponents.
    let d = group("dinf");
    assert_eq!(d.parse_word("a^-1").unwrap(), d.parse_word("a").unwrap());
}

#[test]
fn ball_sizes_match_closed_forms() {
    let f2 = group("f2");
    for r in 0..=6usize {
        let expect = if r == 0 {
            1
        } else {
            1 + 2 * (3usize.pow(r as u32) - 1)
        };
        assert_eq!(f2.ball(&[], r).unwrap().len(), expect, "F2 radius {r}");
    }
    assert_eq!(f2.ball(&[], 2).unwrap().len(), 17);
    let z2 = group("z2");
    for r in 0..=6 {
        assert_eq!(z2.ball(&[], r).unwrap().len(), 2 * r * r + 2 * r + 1);
    }
    let d = group("dinf");
    for r in 0..=8 {
        assert_eq!(d.ball(&[], r).unwrap().len(), 2 * r + 1);
    }
}

#[test]
fn ball_radius_over_cap_names_the_cap() {
    let g = group("f2");
    match Ball::build(&g, &[], 11, 10) {
        Err(LabError::Cap { cap, requested, .. }) => assert_eq!((cap, requested), (10, 11)),
        other => panic!("expected cap rejection, got {other:?}"),
    }
}

#[test]
fn ball_distances_and_edges_are_consistent() {
    for name in ["f2", "z2", "racg-fig1", "zz2-free-z", "f2xz"] {
        let g = group(name);
        let b = g.ball(&[], 3).unwrap();
        for (i, v) in b.vertices.iter().enumerate() {
            assert_eq!(g.word_length(v), b.dist[i] as usize, "{name}");
            for &(m, j) in &b.adjacency[i] {
                assert_eq!(g.multiply(v, &[m]), b.vertices[j]);
                assert!(b.dist[i].abs_diff(b.dist[j]) <= 1);
            }
        }
    }
}

#[test]
fn off_centre_ball() {
    let g = group("z2");
    let c = w(&g, "a a b");
    let b = g.ball(&c, 2).unwrap();
    assert_eq!(b.len(), 13);
    for (i, v) in b.vertices.iter().enumerate() {
        assert_eq!(g.dist(&c, v), b.dist[i] as usize);
    }
}

#[test]
fn racg_normal_form_matches_closure_oracle_on_short_words() {
    let g = group("racg-fig1");
    for n in 0..=5 {
        for word in all_words(&g.moves(), n) {
            assert_eq!(
                g.nf(&word),
                racg_closure_nf(&g, &word),
                "{}",
                g.format_word(&word)
            );
        }
    }
}

#[test]
fn word_lengths_agree_with_bfs() {
    for name in ["f2", "z2", "racg-fig1", "zz2-free-z", "f2xz", "dinf"] {
        let g = group(name);
        let radius = if name == "racg-fig1" { 4 } else { 6 };
        for (v, d) in bfs_lengths(&g, radius) {
            assert_eq!(g.word_length(&v), d, "{name}: {}", g.format_word(&v));
        }
    }
}

#[test]
fn cancel_links_detect_exactly_the_non_geodesic_words() {
    for name in ["f2", "z2", "racg-fig1", "zz2-free-z", "f2xz"] {
        let g = group(name);
        let n = if name == "racg-fig1" { 4 } else { 5 };
        for word in all_words(&g.moves(), n) {
            assert_eq!(
                g.is_geodesic_word(&word),
                g.word_length(&word) == word.len(),
                "{name}: {}",
                g.format_word(&word)
            );
        }
    }
}

#[test]
fn right_descents_shorten() {
    let g = group("racg-fig1");
    let x = w(&g, "a b c");
    let d = g.right_descents(&x);
    assert!(d.contains(&w(&g, "c")[0]));
    for l in d {
        assert_eq!(g.word_length(&g.multiply(&x, &[l])), 2);
    }
}

fn families() -> Vec<&'static str> {
    vec!["f2", "z2", "racg-fig1", "zz2-free-z", "f2xz", "dinf", "z"]
}

fn word_strategy(gens: usize, max: usize) -> impl Strategy<Value = Vec<(u32, bool)>> {
    prop::collection::vec((0..gens as u32, any::<bool>()), 0..=max)
}

fn to_word(g: &morselab::MarkedGroup, raw: &[(u32, bool)]) -> Vec<Letter> {
    raw.iter()
        .map(|&(i, s)| g.letter(i % g.generator_count() as u32, s))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normal_form_is_idempotent(fam in 0..7usize, raw in word_strategy(10, 8)) {
        let g = group(families()[fam]);
        let x = to_word(&g, &raw);
        let n = g.nf(&x);
        prop_assert_eq!(g.nf(&n), n);
    }

    #[test]
    fn racg_normal_form_matches_oracle(raw in word_strategy(10, 8)) {
        let g = group("racg-fig1");
        let x = to_word(&g, &raw);
        prop_assert_eq!(g.nf(&x), racg_closure_nf(&g, &x));
    }

    #[test]
    fn length_is_subadditive(fam in 0..7usize, a in word_strategy(10, 12), b in word_strategy(10, 12)) {
        let g = group(families()[fam]);
        let (u, v) = (to_word(&g, &a), to_word(&g, &b));
        prop_assert!(g.word_length(&g.multiply(&u, &v)) <= g.word_length(&u) + g.word_length(&v));
    }

    #[test]
    fn inverse_cancels(fam in 0..7usize, a in word_strategy(10, 12)) {
        let g = group(families()[fam]);
        let u = to_word(&g, &a);
        prop_assert!(g.is_identity(&g.multiply(&u, &g.inverse(&u))));
    }

    #[test]
    fn free_and_abelian_oracles(a in word_strategy(2, 16)) {
        let f2 = group("f2");
        let u = to_word(&f2, &a);
        prop_assert_eq!(f2.nf(&u), free_reduce(&u));
        let z2 = group("z2");
        let e = exponents(2, &u);
        prop_assert_eq!(z2.word_length(&u) as i64, e[0].abs() + e[1].abs());
        prop_assert_eq!(exponents(2, &z2.nf(&u)), e);
    }

    #[test]
    fn equal_normal_forms_mean_equal_elements(fam in 0..7usize, a in word_strategy(10, 8), b in word_strategy(10, 8)) {
        let g = group(families()[fam]);
        let (u, v) = (to_word(&g, &a), to_word(&g, &b));
        prop_assert_eq!(g.nf(&u) == g.nf(&v), g.is_identity(&g.multiply(&g.inverse(&u), &v)));
    }
}
