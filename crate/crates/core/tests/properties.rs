use std::collections::HashMap;

use proptest::prelude::*;

use hin_core::diversity::{entropy_bits, mean_individual_from, perplexity_of};
use hin_core::evaluation::{precision_recall_f1, quantile, split_likes, SplitSpec};
use hin_core::ingest::derive_likes;
use hin_core::randomizer::{shuffle_with_stats, ShuffleConfig};
use hin_core::recommender::RecommendationSet;
use hin_core::{build_hin, Error, Hin, HinBuilder, LinkGroup, MetaStep, ObjectGroup, Pmf};

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 1..40)
        .prop_filter("needs mass", |w| w.iter().sum::<f64>() > 1e-6)
}

proptest! {
    #[test]
    fn uniform_perplexity_is_support_size(n in 1usize..10_000) {
        let p = perplexity_of(&vec![1.0; n]).unwrap();
        prop_assert!((p - n as f64).abs() < 1e-9 * n as f64);
    }

    #[test]
    fn perplexity_ignores_zero_padding(w in weights(), pad in 0usize..20) {
        let mut padded = w.clone();
        padded.extend(std::iter::repeat_n(0.0, pad));
        let a = perplexity_of(&w).unwrap();
        let b = perplexity_of(&padded).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn perplexity_is_between_one_and_support(w in weights()) {
        let support = w.iter().filter(|&&x| x > 0.0).count() as f64;
        let p = perplexity_of(&w).unwrap();
        prop_assert!(p >= 1.0 - 1e-12 && p <= support + 1e-9);
    }

    #[test]
    fn perplexity_is_permutation_invariant(w in weights(), rot in 0usize..40) {
        let mut v = w.clone();
        let k = rot % v.len();
        v.rotate_left(k);
        v.reverse();
        prop_assert!((perplexity_of(&w).unwrap() - perplexity_of(&v).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn perplexity_is_scale_invariant(w in weights(), s in 0.01f64..100.0) {
        let scaled: Vec<f64> = w.iter().map(|x| x * s).collect();
        prop_assert!((perplexity_of(&w).unwrap() - perplexity_of(&scaled).unwrap()).abs() < 1e-9 * perplexity_of(&w).unwrap());
    }

    /// The mean individual diversity is a geometric mean of perplexities,
    /// so it lies between their minimum and maximum.
    #[test]
    fn mean_individual_is_bounded_geometric_mean(ws in prop::collection::vec(weights(), 1..8)) {
        let pmfs: Vec<Pmf> = ws.iter().map(|w| {
            let t: f64 = w.iter().sum();
            Pmf { group: "T".into(), mass: w.iter().map(|x| x / t).collect(), lost_mass: 0.0 }
        }).collect();
        let ps: Vec<f64> = ws.iter().map(|w| perplexity_of(w).unwrap()).collect();
        let (mi, excluded) = mean_individual_from(&pmfs).unwrap();
        prop_assert_eq!(excluded, 0);
        let lo = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ps.iter().cloned().fold(0.0, f64::max);
        prop_assert!(mi >= lo - 1e-9 && mi <= hi + 1e-9);
        let geo = (ps.iter().map(|p| p.ln()).sum::<f64>() / ps.len() as f64).exp();
        prop_assert!((mi - geo).abs() < 1e-9 * geo);
    }
}

#[test]
fn entropy_rejects_no_mass() {
    assert!(matches!(
        entropy_bits(&[0.0, 0.0]),
        Err(Error::Degenerate(_))
    ));
    assert!(matches!(entropy_bits(&[]), Err(Error::Degenerate(_))));
}

/// Random schema over four groups with random relations between them.
fn schema_strategy() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..4, 0usize..4), 1..6)
}

fn schema_hin(arcs: &[(usize, usize)]) -> Hin {
    let groups = (0..4)
        .map(|g| ObjectGroup::from_labels(format!("G{g}"), [format!("n{g}")]).unwrap())
        .collect();
    let links = arcs
        .iter()
        .enumerate()
        .map(|(r, &(s, t))| {
            LinkGroup::new(
                format!("R{r}"),
                format!("G{s}"),
                format!("G{t}"),
                vec![(0, 0)],
            )
        })
        .collect();
    build_hin(groups, links).unwrap()
}

proptest! {
    #[test]
    fn meta_path_valid_iff_steps_compose(
        arcs in schema_strategy(),
        picks in prop::collection::vec((0usize..6, any::<bool>()), 1..5),
    ) {
        let hin = schema_hin(&arcs);
        let steps: Vec<MetaStep> = picks
            .iter()
            .map(|&(r, inv)| {
                let name = format!("R{}", r % arcs.len());
                if inv { MetaStep::inverse(name) } else { MetaStep::forward(name) }
            })
            .collect();
        let ends: Vec<(usize, usize)> = picks
            .iter()
            .map(|&(r, inv)| {
                let (s, t) = arcs[r % arcs.len()];
                if inv { (t, s) } else { (s, t) }
            })
            .collect();
        let composes = ends.windows(2).all(|w| w[0].1 == w[1].0);
        match hin.validate_meta_path(&steps) {
            Ok(path) => {
                prop_assert!(composes);
                prop_assert_eq!(path.source(), format!("G{}", ends[0].0));
                prop_assert_eq!(path.target(), format!("G{}", ends.last().unwrap().1));
            }
            Err(Error::Composition { step, .. }) => {
                prop_assert!(!composes);
                let first_bad = ends.windows(2).position(|w| w[0].1 != w[1].0).unwrap();
                prop_assert_eq!(step, first_bad + 2);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn inverting_twice_is_identity(edges in prop::collection::btree_set((0u32..6, 0u32..5), 0..25)) {
        let users = ObjectGroup::from_labels("U", (0..6).map(|i| format!("u{i}"))).unwrap();
        let items = ObjectGroup::from_labels("I", (0..5).map(|i| format!("i{i}"))).unwrap();
        let lg = LinkGroup::new("R", "U", "I", edges.iter().copied().collect());
        let hin = build_hin(vec![users, items], vec![lg]).unwrap();
        let r = hin.relation("R").unwrap();
        let twice = r.inverse().invert();
        prop_assert!(!twice.is_inverted());
        prop_assert_eq!(twice.edges().collect::<Vec<_>>(), r.view().edges().collect::<Vec<_>>());
        let mut flipped: Vec<(u32, u32)> = r.inverse().edges().map(|(a, b)| (b, a)).collect();
        flipped.sort_unstable();
        prop_assert_eq!(flipped, r.edges().to_vec());
    }
}

fn bipartite(edges: &[(u32, u32)], n_src: u32, n_tgt: u32) -> Hin {
    let s = ObjectGroup::from_labels("U", (0..n_src).map(|i| format!("u{i}"))).unwrap();
    let t = ObjectGroup::from_labels("L", (0..n_tgt).map(|i| format!("l{i}"))).unwrap();
    build_hin(
        vec![s, t],
        vec![LinkGroup::new("R_Lo", "U", "L", edges.to_vec())],
    )
    .unwrap()
}

fn degrees(edges: &[(u32, u32)]) -> (HashMap<u32, usize>, HashMap<u32, usize>) {
    let mut out = HashMap::new();
    let mut inn = HashMap::new();
    for &(a, b) in edges {
        *out.entry(a).or_insert(0) += 1;
        *inn.entry(b).or_insert(0) += 1;
    }
    (out, inn)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shuffle_preserves_degrees_and_simplicity(
        edges in prop::collection::btree_set((0u32..15, 0u32..8), 2..60),
        seed in any::<u64>(),
    ) {
        let edges: Vec<(u32, u32)> = edges.into_iter().collect();
        let hin = bipartite(&edges, 15, 8);
        let (shuffled, stats) = shuffle_with_stats(&hin, &ShuffleConfig::new("R_Lo", seed)).unwrap();
        let after = shuffled.relation("R_Lo").unwrap().edges().to_vec();
        prop_assert_eq!(after.len(), edges.len());
        prop_assert_eq!(degrees(&after), degrees(&edges));
        let mut dedup = after.clone();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), after.len());
        prop_assert_eq!(stats.attempted, (10.0 * edges.len() as f64).ceil() as u64);
        prop_assert!(stats.accepted <= stats.attempted);
    }
}

fn likes_hin(pairs: &[(u32, u32, i32)], n_users: u32, n_items: u32) -> Hin {
    let mut b = HinBuilder::new();
    b.relation("R_rates", "user", "movie").unwrap();
    for u in 0..n_users {
        b.node("user", &format!("u{u}"));
    }
    for i in 0..n_items {
        b.node("movie", &format!("m{i}"));
    }
    for &(u, i, r) in pairs {
        b.rated_edge("R_rates", &format!("u{u}"), &format!("m{i}"), r)
            .unwrap();
    }
    derive_likes(&b.build().unwrap(), "R_rates", 3).unwrap()
}

fn ratings() -> impl Strategy<Value = Vec<(u32, u32, i32)>> {
    prop::collection::btree_map((0u32..12, 0u32..15), 1i32..=5, 10..120)
        .prop_map(|m| m.into_iter().map(|((u, i), r)| (u, i, r)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_likes(pairs in ratings(), seed in any::<u64>(), frac in 0.05f64..0.6) {
        let hin = likes_hin(&pairs, 12, 15);
        let likes = hin.relation("R_likes").unwrap().edges().to_vec();
        let mut spec = SplitSpec::new(seed);
        spec.fraction = frac;
        let split = split_likes(&hin, &spec).unwrap();
        let train = split.train.relation("R_likes").unwrap().edges().to_vec();
        prop_assert_eq!(split.test.len(), (frac * likes.len() as f64).floor() as usize);
        prop_assert_eq!(train.len() + split.test.len(), likes.len());
        let mut union: Vec<_> = train.iter().chain(&split.test).copied().collect();
        union.sort_unstable();
        prop_assert_eq!(union, likes);
        let rates = split.train.relation("R_rates").unwrap();
        for e in &split.test {
            prop_assert!(rates.edges().binary_search(e).is_err());
        }
        prop_assert_eq!(rates.len(), pairs.len() - split.test.len());
    }

    #[test]
    fn training_likes_never_score(pairs in ratings(), seed in any::<u64>()) {
        // lists made of training likes cannot hit held-out pairs
        let hin = likes_hin(&pairs, 12, 15);
        let split = split_likes(&hin, &SplitSpec::new(seed)).unwrap();
        prop_assume!(!split.test.is_empty());
        let fwd = split.train.relation("R_likes").unwrap().view();
        let lists = (0..12u32).map(|u| fwd.neighbors(u).iter().map(|&i| (i, 1.0)).collect()).collect();
        let set = RecommendationSet {
            list_size: 15,
            provenance: "train".into(),
            user_group: "user".into(),
            item_group: "movie".into(),
            lists,
        };
        let acc = precision_recall_f1(&set, &split.test).unwrap();
        prop_assert_eq!(acc.f1, 0.0);
        prop_assert_eq!(acc.precision, 0.0);
    }

    #[test]
    fn likes_shrink_as_threshold_rises(pairs in ratings()) {
        let mut b = HinBuilder::new();
        b.relation("R_rates", "user", "movie").unwrap();
        for &(u, i, r) in &pairs {
            b.rated_edge("R_rates", &format!("u{u}"), &format!("m{i}"), r).unwrap();
        }
        let hin = b.build().unwrap();
        let mut prev = usize::MAX;
        for t in 1..=6 {
            let n = derive_likes(&hin, "R_rates", t).unwrap().relation("R_likes").unwrap().len();
            prop_assert!(n <= prev);
            prop_assert_eq!(n, pairs.iter().filter(|p| p.2 >= t).count());
            prev = n;
        }
    }

    #[test]
    fn quantile_matches_type7(mut xs in prop::collection::vec(-100.0f64..100.0, 1..50), q in 0.0f64..=1.0) {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = (xs.len() - 1) as f64 * q;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(xs.len() - 1);
        let expect = xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo]);
        prop_assert!((quantile(&xs, q) - expect).abs() < 1e-9);
    }
}
