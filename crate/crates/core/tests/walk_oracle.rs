//! Walk distributions checked against brute-force path enumeration and a
//! dense matrix product on small random networks.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hin_core::walk::{all_source_distributions, collective_distribution, source_distribution};
use hin_core::{build_hin, Hin, LinkGroup, MetaPath, MetaStep, ObjectGroup};

/// Random network with 2..=4 groups of 1..=5 nodes and a few relations,
/// plus a random valid meta-path of 1..=4 steps over it.
fn random_case(seed: u64) -> (Hin, MetaPath) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_groups = rng.random_range(2..=4);
    let sizes: Vec<usize> = (0..n_groups).map(|_| rng.random_range(1..=5)).collect();
    let groups: Vec<ObjectGroup> = sizes
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            ObjectGroup::from_labels(format!("G{g}"), (0..n).map(|i| format!("g{g}n{i}"))).unwrap()
        })
        .collect();
    let n_rel = rng.random_range(1..=5);
    let mut links = Vec::new();
    for r in 0..n_rel {
        let s = rng.random_range(0..n_groups);
        let t = rng.random_range(0..n_groups);
        let density: f64 = rng.random_range(0.2..0.8);
        let mut edges = Vec::new();
        for a in 0..sizes[s] as u32 {
            for b in 0..sizes[t] as u32 {
                if rng.random_bool(density) {
                    edges.push((a, b));
                }
            }
        }
        links.push(LinkGroup::new(
            format!("R{r}"),
            format!("G{s}"),
            format!("G{t}"),
            edges,
        ));
    }
    let hin = build_hin(groups, links).unwrap();

    let arcs: Vec<(String, String, String)> = hin
        .relations()
        .map(|r| {
            (
                r.name().to_string(),
                r.source().to_string(),
                r.target().to_string(),
            )
        })
        .collect();
    let len = rng.random_range(1..=4);
    let mut steps = Vec::new();
    let first = &arcs[rng.random_range(0..arcs.len())];
    let mut at = if rng.random_bool(0.5) {
        steps.push(MetaStep::forward(&first.0));
        first.2.clone()
    } else {
        steps.push(MetaStep::inverse(&first.0));
        first.1.clone()
    };
    while steps.len() < len {
        let options: Vec<MetaStep> = arcs
            .iter()
            .flat_map(|(name, s, t)| {
                let mut v = Vec::new();
                if *s == at {
                    v.push(MetaStep::forward(name));
                }
                if *t == at {
                    v.push(MetaStep::inverse(name));
                }
                v
            })
            .collect();
        if options.is_empty() {
            break;
        }
        let step = options[rng.random_range(0..options.len())].clone();
        let r = hin.relation(&step.relation).unwrap();
        at = if step.inverted {
            r.source()
        } else {
            r.target()
        }
        .to_string();
        steps.push(step);
    }
    let path = hin.validate_meta_path(&steps).unwrap();
    (hin, path)
}

/// Out-neighbours of `v` along one step, read straight from the edge list.
fn raw_neighbors(hin: &Hin, step: &MetaStep, v: u32) -> Vec<u32> {
    let r = hin.relation(&step.relation).unwrap();
    r.edges()
        .iter()
        .filter_map(|&(a, b)| match step.inverted {
            false if a == v => Some(b),
            true if b == v => Some(a),
            _ => None,
        })
        .collect()
}

fn group_len(hin: &Hin, name: &str) -> usize {
    hin.group(name).unwrap().len()
}

/// Sums probability over every walk instance; returns (target mass, lost).
fn enumerate(hin: &Hin, path: &MetaPath, source: u32) -> (Vec<f64>, f64) {
    fn go(hin: &Hin, steps: &[MetaStep], v: u32, p: f64, acc: &mut [f64], lost: &mut f64) {
        match steps.split_first() {
            None => acc[v as usize] += p,
            Some((step, rest)) => {
                let next = raw_neighbors(hin, step, v);
                if next.is_empty() {
                    *lost += p;
                }
                for w in &next {
                    go(hin, rest, *w, p / next.len() as f64, acc, lost);
                }
            }
        }
    }
    let mut acc = vec![0.0; group_len(hin, path.target())];
    let mut lost = 0.0;
    go(hin, path.steps(), source, 1.0, &mut acc, &mut lost);
    (acc, lost)
}

fn dense(hin: &Hin, step: &MetaStep) -> Vec<Vec<f64>> {
    let r = hin.relation(&step.relation).unwrap();
    let (src, tgt) = if step.inverted {
        (r.target(), r.source())
    } else {
        (r.source(), r.target())
    };
    let (rows, cols) = (group_len(hin, src), group_len(hin, tgt));
    let mut m = vec![vec![0.0; cols]; rows];
    for (i, row) in m.iter_mut().enumerate() {
        let nb = raw_neighbors(hin, step, i as u32);
        for w in &nb {
            row[*w as usize] += 1.0 / nb.len() as f64;
        }
    }
    m
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn single_source_matches_enumeration(seed in any::<u64>()) {
        let (hin, path) = random_case(seed);
        for s in 0..group_len(&hin, path.source()) as u32 {
            let pmf = source_distribution(&hin, &path, s).unwrap();
            let (expect, lost) = enumerate(&hin, &path, s);
            prop_assert_eq!(pmf.mass.len(), expect.len());
            for (a, b) in pmf.mass.iter().zip(&expect) {
                prop_assert!((a - b).abs() < 1e-10, "{} vs {} on {}", a, b, path);
            }
            prop_assert!((pmf.lost_mass - lost).abs() < 1e-10);
            prop_assert!(pmf.is_conserved(1e-10));
        }
    }

    #[test]
    fn collective_is_mean_of_sources(seed in any::<u64>()) {
        let (hin, path) = random_case(seed);
        let n = group_len(&hin, path.source());
        let col = collective_distribution(&hin, &path).unwrap();
        let per = all_source_distributions(&hin, &path).unwrap();
        prop_assert_eq!(per.len(), n);
        for (j, m) in col.mass.iter().enumerate() {
            let mean = per.iter().map(|p| p.mass[j]).sum::<f64>() / n as f64;
            prop_assert!((m - mean).abs() < 1e-10);
        }
        let lost = per.iter().map(|p| p.lost_mass).sum::<f64>() / n as f64;
        prop_assert!((col.lost_mass - lost).abs() < 1e-10);
    }

    #[test]
    fn left_to_right_equals_right_to_left_product(seed in any::<u64>()) {
        let (hin, path) = random_case(seed);
        let mats: Vec<_> = path.steps().iter().map(|s| dense(&hin, s)).collect();
        let mut product = mats.last().unwrap().clone();
        for m in mats.iter().rev().skip(1) {
            product = matmul(m, &product);
        }
        for (s, row) in product.iter().enumerate() {
            let pmf = source_distribution(&hin, &path, s as u32).unwrap();
            for (a, b) in pmf.mass.iter().zip(row) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
