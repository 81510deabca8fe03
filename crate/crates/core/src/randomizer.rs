//! Degree-preserving randomization of one relation (configuration model).
//!
//! A shuffle repeatedly picks two distinct edges `a -> x`, `b -> y` and
//! rewires them to `a -> y`, `b -> x`. A proposal is rejected when either
//! new edge already exists or when it would not change the edge set, so
//! every intermediate state is a simple graph with the original in- and
//! out-degree of every node.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hin::Hin;
use crate::par;

pub const DEFAULT_SWAP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleConfig {
    pub relation: String,
    pub seed: u64,
    /// Attempted swaps per edge.
    pub swap_factor: f64,
}

impl ShuffleConfig {
    pub fn new(relation: &str, seed: u64) -> Self {
        Self {
            relation: relation.to_string(),
            seed,
            swap_factor: DEFAULT_SWAP_FACTOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SwapStats {
    pub attempted: u64,
    pub accepted: u64,
}

/// Runs the swap chain on an edge list in place.
pub fn shuffle_edges(edges: &mut [(u32, u32)], attempts: u64, rng: &mut impl Rng) -> SwapStats {
    let m = edges.len();
    let mut stats = SwapStats::default();
    if m < 2 {
        return stats;
    }
    let mut present: HashSet<(u32, u32)> = edges.iter().copied().collect();
    for _ in 0..attempts {
        stats.attempted += 1;
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (a, x) = edges[i];
        let (b, y) = edges[j];
        if a == b || x == y {
            continue;
        }
        if present.contains(&(a, y)) || present.contains(&(b, x)) {
            continue;
        }
        present.remove(&(a, x));
        present.remove(&(b, y));
        present.insert((a, y));
        present.insert((b, x));
        edges[i] = (a, y);
        edges[j] = (b, x);
        stats.accepted += 1;
    }
    stats
}

/// Network identical to `hin` except that `config.relation` is shuffled.
pub fn shuffle_link_group(hin: &Hin, config: &ShuffleConfig) -> Result<Hin> {
    Ok(shuffle_with_stats(hin, config)?.0)
}

pub fn shuffle_with_stats(hin: &Hin, config: &ShuffleConfig) -> Result<(Hin, SwapStats)> {
    if !(config.swap_factor > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "swap factor must be positive, got {}",
            config.swap_factor
        )));
    }
    let lg = hin.relation(&config.relation)?;
    if lg.len() < 2 {
        return Err(Error::TooFewEdges {
            relation: config.relation.clone(),
            count: lg.len(),
        });
    }
    let mut edges = lg.edges().to_vec();
    let attempts = (config.swap_factor * edges.len() as f64).ceil() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let stats = shuffle_edges(&mut edges, attempts, &mut rng);
    log::debug!(
        "shuffled {}: {}/{} swaps accepted",
        config.relation,
        stats.accepted,
        stats.attempted
    );
    // payload values (if any) no longer belong to their edges
    Ok((hin.replace_edges(&config.relation, edges, None)?, stats))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index`: `splitmix64(master ^ splitmix64(index))`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// `count` independent shuffles of one relation, replicate `k` seeded with
/// [`replicate_seed`]`(master_seed, k)`.
pub fn replicate_stream(
    hin: &Hin,
    relation: &str,
    master_seed: u64,
    count: usize,
    swap_factor: f64,
) -> Result<Vec<Hin>> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "replicate count must be at least 1".into(),
        ));
    }
    par::map_range(count, |k| {
        let config = ShuffleConfig {
            relation: relation.to_string(),
            seed: replicate_seed(master_seed, k as u64),
            swap_factor,
        };
        shuffle_link_group(hin, &config)
    })
    .into_iter()
    .collect()
}

/// Jaccard similarity of two edge sets.
pub fn jaccard(a: &[(u32, u32)], b: &[(u32, u32)]) -> f64 {
    let a: HashSet<_> = a.iter().collect();
    let b: HashSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// One line of a replicate manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub relation: String,
    pub jaccard: f64,
}

pub fn replicate_records(
    original: &Hin,
    replicates: &[Hin],
    relation: &str,
    master_seed: u64,
) -> Result<Vec<ReplicateRecord>> {
    let base = original.relation(relation)?.edges();
    replicates
        .iter()
        .enumerate()
        .map(|(k, h)| {
            Ok(ReplicateRecord {
                index: k,
                seed: replicate_seed(master_seed, k as u64),
                relation: relation.to_string(),
                jaccard: jaccard(base, h.relation(relation)?.edges()),
            })
        })
        .collect()
}

pub fn write_replicate_manifest<W: std::io::Write>(
    records: &[ReplicateRecord],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate", "seed", "relation", "jaccard_to_original"])?;
    for r in records {
        w.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            r.relation.clone(),
            r.jaccard.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<replicates>", e))?;
    Ok(())
}
