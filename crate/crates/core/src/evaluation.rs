//! Hold-out evaluation: likes split, macro-averaged F1, the alpha grid and
//! the shuffled-relation study.

use std::collections::HashSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diversity::{collective_diversity, mean_individual_diversity};
use crate::error::{Error, Result};
use crate::hin::{Hin, MetaStep};
use crate::par;
use crate::randomizer::{replicate_stream, DEFAULT_SWAP_FACTOR};
use crate::recommender::{Exclusion, RecommendationSet, TwoPath};

/// Name given to the recommendation relation added for diversity paths.
pub const REC_RELATION: &str = "R_rec";

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Fraction of likes edges hidden; the test set has
    /// `floor(fraction * |likes|)` edges.
    pub fraction: f64,
    pub seed: u64,
    pub likes: String,
    /// Ratings relation from which hidden pairs are also removed.
    pub rates: Option<String>,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            fraction: 0.1,
            seed,
            likes: "R_likes".into(),
            rates: Some("R_rates".into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Hin,
    /// Hidden `(user, item)` pairs, sorted.
    pub test: Vec<(u32, u32)>,
}

/// Hides a uniform random subset of likes edges.
pub fn split_likes(hin: &Hin, spec: &SplitSpec) -> Result<Split> {
    if !(spec.fraction > 0.0 && spec.fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {} outside (0, 1)",
            spec.fraction
        )));
    }
    let likes = hin.relation(&spec.likes)?;
    let edges = likes.edges();
    let k = (spec.fraction * edges.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut picked = rand::seq::index::sample(&mut rng, edges.len(), k).into_vec();
    picked.sort_unstable();
    let test: Vec<(u32, u32)> = picked.iter().map(|&i| edges[i]).collect();
    let hidden: HashSet<(u32, u32)> = test.iter().copied().collect();

    let (kept, payload) = retain_edges(edges, likes.payload(), &hidden);
    let mut train = hin.replace_edges(&spec.likes, kept, payload)?;
    if let Some(rates) = spec.rates.as_deref().filter(|r| hin.has_relation(r)) {
        let lg = hin.relation(rates)?;
        let (kept, payload) = retain_edges(lg.edges(), lg.payload(), &hidden);
        train = train.replace_edges(rates, kept, payload)?;
    }
    Ok(Split { train, test })
}

type Retained = (Vec<(u32, u32)>, Option<Vec<i32>>);

fn retain_edges(
    edges: &[(u32, u32)],
    payload: Option<&[i32]>,
    hidden: &HashSet<(u32, u32)>,
) -> Retained {
    let keep: Vec<usize> = (0..edges.len())
        .filter(|&i| !hidden.contains(&edges[i]))
        .collect();
    (
        keep.iter().map(|&i| edges[i]).collect(),
        payload.map(|p| keep.iter().map(|&i| p[i]).collect()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Users with at least one test edge (the averaging population).
    pub users: usize,
}

/// Macro-averaged precision, recall and F1 over users with test edges.
///
/// Per user: precision is hits over list length (0 for an empty list),
/// recall is hits over the user's test edges, F1 their harmonic mean (0 when
/// both are 0). The three figures are averaged independently.
pub fn precision_recall_f1(recs: &RecommendationSet, test: &[(u32, u32)]) -> Result<Accuracy> {
    if test.is_empty() {
        return Err(Error::Degenerate("empty test set".into()));
    }
    let mut by_user: Vec<(u32, Vec<u32>)> = Vec::new();
    let mut sorted = test.to_vec();
    sorted.sort_unstable();
    for (u, i) in sorted {
        match by_user.last_mut() {
            Some((last, items)) if *last == u => items.push(i),
            _ => by_user.push((u, vec![i])),
        }
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for (u, items) in &by_user {
        let list = recs
            .lists
            .get(*u as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let hits = list
            .iter()
            .filter(|(i, _)| items.binary_search(i).is_ok())
            .count() as f64;
        let p = if list.is_empty() {
            0.0
        } else {
            hits / list.len() as f64
        };
        let r = hits / items.len() as f64;
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    let n = by_user.len() as f64;
    Ok(Accuracy {
        precision: p_sum / n,
        recall: r_sum / n,
        f1: f_sum / n,
        users: by_user.len(),
    })
}

/// One `(alpha, list size, replicate)` cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub dataset: String,
    pub x: String,
    pub y: String,
    pub alpha: f64,
    pub list_size: usize,
    /// 0 for the original network, `k + 1` for shuffled replicate `k`.
    pub replicate: usize,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// Diversities of `R_rec R_<diversity relation>`; NaN when no user got
    /// any recommendation.
    pub mi_diversity: f64,
    pub col_diversity: f64,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub dataset: String,
    /// User-content relation of the first path.
    pub x: String,
    /// Item-content relation of the second path.
    pub y: String,
    pub alphas: Vec<f64>,
    pub list_sizes: Vec<usize>,
    pub split: SplitSpec,
    /// Item-content relation for recommended-type diversity.
    pub diversity_relation: String,
    /// Exclude rated items instead of liked items.
    pub exclude_rated: bool,
}

impl GridConfig {
    pub fn new(dataset: &str, x: &str, y: &str, seed: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            x: x.to_string(),
            y: y.to_string(),
            alphas: vec![1.0, 0.8, 0.6, 0.4, 0.2, 0.0],
            list_sizes: vec![5, 10, 15, 20],
            split: SplitSpec::new(seed),
            diversity_relation: "R_Ty".into(),
            exclude_rated: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.list_sizes.is_empty() {
            return Err(Error::InvalidConfig("empty alpha or list-size grid".into()));
        }
        if self.list_sizes.contains(&0) {
            return Err(Error::InvalidConfig("list sizes must be at least 1".into()));
        }
        Ok(())
    }

    fn exclusion(&self, hin: &Hin) -> Exclusion {
        match self.split.rates.as_deref() {
            Some(r) if self.exclude_rated && hin.has_relation(r) => Exclusion::Rated(r.to_string()),
            _ => Exclusion::Liked(self.split.likes.clone()),
        }
    }
}

/// Evaluates every `(alpha, list size)` cell on an already-split network.
pub fn evaluate_grid(
    train: &Hin,
    test: &[(u32, u32)],
    config: &GridConfig,
    replicate: usize,
) -> Result<Vec<ExperimentResult>> {
    config.validate()?;
    let two_path = TwoPath::new(train, &config.split.likes, &config.x, &config.y)?;
    let max_n = *config.list_sizes.iter().max().expect("validated non-empty");
    let sets = two_path.recommend_many(train, &config.alphas, max_n, &config.exclusion(train))?;
    let div_rel = train.resolve_relation_name(&config.diversity_relation)?;

    let mut cells = Vec::new();
    for (set, &alpha) in sets.iter().zip(&config.alphas) {
        for &n in &config.list_sizes {
            cells.push((set, alpha, n));
        }
    }
    par::map_slice(&cells, |&(set, alpha, n)| {
        let recs = set.truncated(n);
        let acc = precision_recall_f1(&recs, test)?;
        let (mi, col) = recommendation_diversity(train, &recs, &div_rel)?;
        Ok(ExperimentResult {
            dataset: config.dataset.clone(),
            x: config.x.clone(),
            y: config.y.clone(),
            alpha,
            list_size: n,
            replicate,
            f1: acc.f1,
            precision: acc.precision,
            recall: acc.recall,
            mi_diversity: mi,
            col_diversity: col,
        })
    })
    .into_iter()
    .collect()
}

/// Mean individual and collective diversity of `R_rec R_<relation>`.
pub fn recommendation_diversity(
    hin: &Hin,
    recs: &RecommendationSet,
    relation: &str,
) -> Result<(f64, f64)> {
    if recs.edge_count() == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    let with_rec = hin.with_link_group(recs.to_link_group(REC_RELATION))?;
    let path = with_rec
        .validate_meta_path(&[MetaStep::forward(REC_RELATION), MetaStep::forward(relation)])?;
    let mi = mean_individual_diversity(&with_rec, &path)?.value;
    let col = collective_diversity(&with_rec, &path)?.value;
    Ok((mi, col))
}

/// Splits once and evaluates the whole grid on that split.
pub fn run_alpha_grid(hin: &Hin, config: &GridConfig) -> Result<Vec<ExperimentResult>> {
    let split = split_likes(hin, &config.split)?;
    evaluate_grid(&split.train, &split.test, config, 0)
}

pub fn write_results_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "x",
        "y",
        "alpha",
        "list_size",
        "replicate",
        "f1",
        "precision",
        "recall",
        "mi_diversity",
        "col_diversity",
    ])?;
    for r in results {
        w.write_record([
            r.dataset.clone(),
            r.x.clone(),
            r.y.clone(),
            r.alpha.to_string(),
            r.list_size.to_string(),
            r.replicate.to_string(),
            r.f1.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.mi_diversity.to_string(),
            r.col_diversity.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    F1,
    MeanIndividual,
    Collective,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::F1, Metric::MeanIndividual, Metric::Collective];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::MeanIndividual => "mi_diversity",
            Metric::Collective => "col_diversity",
        }
    }

    pub fn of(self, r: &ExperimentResult) -> f64 {
        match self {
            Metric::F1 => r.f1,
            Metric::MeanIndividual => r.mi_diversity,
            Metric::Collective => r.col_diversity,
        }
    }
}

/// Linear-interpolation quantile of sorted, NaN-free values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub metric: Metric,
    pub alpha: f64,
    pub list_size: usize,
    pub original: f64,
    pub q_low: f64,
    pub median: f64,
    pub q_high: f64,
    pub replicates: usize,
}

impl StudyRow {
    /// Whether the original value lies in the band widened on both sides by
    /// `slack` times its width.
    pub fn original_within(&self, slack: f64) -> bool {
        let range = self.q_high - self.q_low;
        self.original >= self.q_low - slack * range && self.original <= self.q_high + slack * range
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub grid: GridConfig,
    pub shuffled_relation: String,
    pub replicates: usize,
    pub master_seed: u64,
    pub swap_factor: f64,
    pub quantiles: (f64, f64),
}

impl StudyConfig {
    pub fn new(grid: GridConfig, shuffled_relation: &str, replicates: usize) -> Self {
        let master_seed = grid.split.seed;
        Self {
            grid,
            shuffled_relation: shuffled_relation.to_string(),
            replicates,
            master_seed,
            swap_factor: DEFAULT_SWAP_FACTOR,
            quantiles: (0.1, 0.9),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub original: Vec<ExperimentResult>,
    pub replicates: Vec<ExperimentResult>,
}

/// Compares the grid on the original network against the same grid on
/// networks whose `shuffled_relation` was randomized. All runs share one
/// split.
pub fn run_randomization_study(hin: &Hin, config: &StudyConfig) -> Result<StudyOutcome> {
    let split = split_likes(hin, &config.grid.split)?;
    let shuffled = hin.resolve_relation_name(&config.shuffled_relation)?;
    let original = evaluate_grid(&split.train, &split.test, &config.grid, 0)?;
    let variants = replicate_stream(
        &split.train,
        &shuffled,
        config.master_seed,
        config.replicates,
        config.swap_factor,
    )?;
    let per_replicate = par::map_range(variants.len(), |k| {
        evaluate_grid(&variants[k], &split.test, &config.grid, k + 1)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let replicates: Vec<ExperimentResult> = per_replicate.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for metric in Metric::ALL {
        for orig in &original {
            let mut values: Vec<f64> = replicates
                .iter()
                .filter(|r| r.alpha == orig.alpha && r.list_size == orig.list_size)
                .map(|r| metric.of(r))
                .filter(|v| !v.is_nan())
                .collect();
            values.sort_by(f64::total_cmp);
            rows.push(StudyRow {
                metric,
                alpha: orig.alpha,
                list_size: orig.list_size,
                original: metric.of(orig),
                q_low: quantile(&values, config.quantiles.0),
                median: quantile(&values, 0.5),
                q_high: quantile(&values, config.quantiles.1),
                replicates: values.len(),
            });
        }
    }
    Ok(StudyOutcome {
        rows,
        original,
        replicates,
    })
}

pub fn write_study_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "metric",
        "alpha",
        "list_size",
        "original",
        "q10",
        "median",
        "q90",
        "replicates",
    ])?;
    for r in rows {
        w.write_record([
            r.metric.as_str().to_string(),
            r.alpha.to_string(),
            r.list_size.to_string(),
            r.original.to_string(),
            r.q_low.to_string(),
            r.median.to_string(),
            r.q_high.to_string(),
            r.replicates.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<study>", e))?;
    Ok(())
}
