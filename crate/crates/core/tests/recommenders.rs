//! Recommenders on networks small enough to score by hand.

use approx::assert_abs_diff_eq;

use hin_core::recommender::{
    ipp_recommend, recommend_top_n, spread_scores, ubcf_recommend, Exclusion, TwoPath, UbcfConfig,
};
use hin_core::{Hin, HinBuilder};

/// a {1,2}, b {1,2,3}, c {2,4}, d {5}, e likes nothing.
fn five_users() -> Hin {
    let mut b = HinBuilder::new();
    b.relation("R_likes", "user", "item").unwrap();
    for u in ["a", "b", "c", "d", "e"] {
        b.node("user", u);
    }
    for i in ["1", "2", "3", "4", "5"] {
        b.node("item", i);
    }
    for (u, i) in [
        ("a", "1"),
        ("a", "2"),
        ("b", "1"),
        ("b", "2"),
        ("b", "3"),
        ("c", "2"),
        ("c", "4"),
        ("d", "5"),
    ] {
        b.edge("R_likes", u, i).unwrap();
    }
    b.build().unwrap()
}

fn labels(hin: &Hin, list: &[(u32, f64)]) -> Vec<String> {
    let items = hin.group("item").unwrap();
    list.iter()
        .map(|(i, _)| items.label(*i).to_string())
        .collect()
}

#[test]
fn ubcf_cosine_votes() {
    let hin = five_users();
    let set = ubcf_recommend(&hin, &UbcfConfig::new("R_likes", None, 2)).unwrap();

    // a: sim(b) = 2/sqrt(6), sim(c) = 1/2
    assert_eq!(labels(&hin, &set.lists[0]), ["3", "4"]);
    assert_abs_diff_eq!(set.lists[0][0].1, 2.0 / 6f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(set.lists[0][1].1, 0.5, epsilon = 1e-12);

    // c: sim(a) = 1/2, sim(b) = 1/sqrt(6); item 1 gets both votes
    assert_eq!(labels(&hin, &set.lists[2]), ["1", "3"]);
    assert_abs_diff_eq!(set.lists[2][0].1, 0.5 + 1.0 / 6f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(set.lists[2][1].1, 1.0 / 6f64.sqrt(), epsilon = 1e-12);

    // d shares nothing with anyone, e likes nothing
    assert!(set.lists[3].is_empty());
    assert!(set.lists[4].is_empty());
}

#[test]
fn ubcf_neighbourhood_and_fallback() {
    let hin = five_users();
    let mut cfg = UbcfConfig::new("R_likes", None, 3);
    cfg.neighbors = 1;
    cfg.popularity_fallback = true;
    let set = ubcf_recommend(&hin, &cfg).unwrap();
    assert_eq!(labels(&hin, &set.lists[0]), ["3"]);
    // popularity: 2 (3 likes), 1 (2), then 3, 4, 5 with one each
    assert_eq!(labels(&hin, &set.lists[4]), ["2", "1", "3"]);
}

#[test]
fn ipp_ranks_by_like_count() {
    let hin = five_users();
    let set = ipp_recommend(&hin, "R_likes", None, 2).unwrap();
    assert_eq!(labels(&hin, &set.lists[0]), ["3", "4"]);
    assert_eq!(labels(&hin, &set.lists[3]), ["2", "1"]);
    assert_eq!(labels(&hin, &set.lists[4]), ["2", "1"]);
    assert_abs_diff_eq!(set.lists[4][0].1, 3.0);
}

/// u1, u2 at L1 and u3 at L2; u1 likes i1, u2 likes i2 and i3, u3 likes
/// i3; i1 and i2 are type A, i3 is type B.
fn located() -> Hin {
    let mut b = HinBuilder::new();
    b.relation("R_likes", "user", "item").unwrap();
    b.relation("R_Lo", "user", "location").unwrap();
    b.relation("R_Ty", "item", "type").unwrap();
    for (u, l) in [("u1", "L1"), ("u2", "L1"), ("u3", "L2")] {
        b.edge("R_Lo", u, l).unwrap();
    }
    for (u, i) in [("u1", "i1"), ("u2", "i2"), ("u2", "i3"), ("u3", "i3")] {
        b.edge("R_likes", u, i).unwrap();
    }
    for (i, t) in [("i1", "A"), ("i2", "A"), ("i3", "B")] {
        b.edge("R_Ty", i, t).unwrap();
    }
    b.build().unwrap()
}

#[test]
fn two_path_scores_by_hand() {
    let hin = located();
    let tp = TwoPath::new(&hin, "R_likes", "Lo", "Ty").unwrap();
    assert_eq!(tp.user_path.to_string(), "R_Lo R_Lo^-1 R_likes");
    assert_eq!(tp.item_path.to_string(), "R_likes R_Ty R_Ty^-1");

    // user path from u1: [1/2, 1/4, 1/4]; item path: [1/2, 1/2, 0]
    let scores = spread_scores(&hin, &tp.spec(0.4).unwrap(), 0).unwrap();
    for (got, want) in scores.iter().zip([0.5, 0.35, 0.15]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
    }
    let set = tp
        .recommend(&hin, 0.4, 2, &Exclusion::Liked("R_likes".into()))
        .unwrap();
    assert_eq!(labels(&hin, &set.lists[0]), ["i2", "i3"]);
    // u3 reaches only i3, which it already likes
    assert!(set.lists[2].is_empty());

    let many = tp
        .recommend_many(&hin, &[0.4, 1.0], 2, &Exclusion::Liked("R_likes".into()))
        .unwrap();
    assert_eq!(many[0], set);
    let pure_item = tp
        .recommend(&hin, 1.0, 2, &Exclusion::Liked("R_likes".into()))
        .unwrap();
    assert_eq!(many[1].lists, pure_item.lists);
    // alpha = 1 leaves only the type walk: i2 at 1/2, i3 unreachable
    assert_eq!(labels(&hin, &pure_item.lists[0]), ["i2"]);
}

#[test]
fn two_path_rejects_swapped_roles() {
    let hin = located();
    assert!(TwoPath::new(&hin, "R_likes", "Ty", "Lo").is_err());
}

#[test]
fn top_n_ties_and_exclusions() {
    let scores = [0.2, 0.5, 0.2, 0.0, 0.5, 0.1];
    let got = recommend_top_n(&scores, &[4], 4);
    let items: Vec<u32> = got.iter().map(|p| p.0).collect();
    assert_eq!(items, [1, 0, 2, 5]);
    // zero scores are never filled in
    assert_eq!(recommend_top_n(&scores, &[], 10).len(), 5);
    assert!(recommend_top_n(&scores, &[], 0).is_empty());
}
