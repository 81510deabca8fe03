//! Graph-spreading recommendation over meta-paths, plus the UBCF and
//! popularity baselines.
//!
//! A user's score over items is a convex combination of the walk
//! distributions of several user-to-item meta-paths. The top-scoring items
//! the user has not already chosen are recommended. Ties go to the lower
//! item index and zero-score items are never recommended.

use std::cmp::Ordering;
use std::io::Write;

use crate::error::{Error, Result};
use crate::hin::{Hin, LinkGroup, MetaPath, MetaStep};
use crate::par;
use crate::walk::OperatorChain;

const WEIGHT_TOL: f64 = 1e-9;

/// Weighted meta-paths sharing one source and one target group.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPathSpec {
    paths: Vec<(MetaPath, f64)>,
}

impl MixedPathSpec {
    pub fn new(paths: Vec<(MetaPath, f64)>) -> Result<Self> {
        let (first, _) = paths.first().ok_or_else(|| {
            Error::InvalidConfig("mixed path spec needs at least one path".into())
        })?;
        for (p, w) in &paths {
            if !(*w >= 0.0 && *w <= 1.0) {
                return Err(Error::InvalidConfig(format!("weight {w} outside [0, 1]")));
            }
            if p.source() != first.source() || p.target() != first.target() {
                return Err(Error::InvalidConfig(format!(
                    "path `{p}` runs {} -> {}, expected {} -> {}",
                    p.source(),
                    p.target(),
                    first.source(),
                    first.target()
                )));
            }
        }
        let total: f64 = paths.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidConfig(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { paths })
    }

    pub fn single(path: MetaPath) -> Self {
        Self {
            paths: vec![(path, 1.0)],
        }
    }

    pub fn paths(&self) -> &[(MetaPath, f64)] {
        &self.paths
    }

    pub fn source(&self) -> &str {
        self.paths[0].0.source()
    }

    pub fn target(&self) -> &str {
        self.paths[0].0.target()
    }

    pub fn describe(&self) -> String {
        self.paths
            .iter()
            .map(|(p, w)| format!("{w}*[{p}]"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Score vector over the target group for one user.
pub fn spread_scores(hin: &Hin, spec: &MixedPathSpec, user: u32) -> Result<Vec<f64>> {
    let chains = chains(hin, spec)?;
    spread_with(&chains, spec, user)
}

fn chains<'a>(hin: &'a Hin, spec: &MixedPathSpec) -> Result<Vec<OperatorChain<'a>>> {
    spec.paths
        .iter()
        .map(|(p, _)| OperatorChain::new(hin, p))
        .collect()
}

fn spread_with(chains: &[OperatorChain<'_>], spec: &MixedPathSpec, user: u32) -> Result<Vec<f64>> {
    let mut scores: Option<Vec<f64>> = None;
    for (chain, (_, w)) in chains.iter().zip(&spec.paths) {
        let pmf = chain.from_source(user)?;
        match scores.as_mut() {
            None => scores = Some(pmf.mass.iter().map(|p| w * p).collect()),
            Some(acc) => {
                for (a, p) in acc.iter_mut().zip(&pmf.mass) {
                    *a += w * p;
                }
            }
        }
    }
    Ok(scores.expect("spec has at least one path"))
}

/// Descending score, then ascending index.
fn rank_order(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top `n` items with positive score that are not in `exclusions` (sorted
/// ascending).
pub fn recommend_top_n(scores: &[f64], exclusions: &[u32], n: usize) -> Vec<(u32, f64)> {
    let mut eligible: Vec<(u32, f64)> = scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| s > 0.0 && exclusions.binary_search(&(i as u32)).is_err())
        .map(|(i, &s)| (i as u32, s))
        .collect();
    top_sorted(&mut eligible, n);
    eligible
}

fn top_sorted(items: &mut Vec<(u32, f64)>, n: usize) {
    if items.len() > n && n > 0 {
        items.select_nth_unstable_by(n - 1, rank_order);
        items.truncate(n);
    } else if n == 0 {
        items.clear();
    }
    items.sort_unstable_by(rank_order);
}

/// Ranked per-user lists over a target group.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationSet {
    pub list_size: usize,
    pub provenance: String,
    pub user_group: String,
    pub item_group: String,
    /// `lists[user]` holds `(item, score)` in rank order.
    pub lists: Vec<Vec<(u32, f64)>>,
}

impl RecommendationSet {
    /// Same recommendations truncated to the first `n` of each list.
    pub fn truncated(&self, n: usize) -> RecommendationSet {
        RecommendationSet {
            list_size: n,
            provenance: self.provenance.clone(),
            user_group: self.user_group.clone(),
            item_group: self.item_group.clone(),
            lists: self
                .lists
                .iter()
                .map(|l| l[..l.len().min(n)].to_vec())
                .collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// The recommendations as a user -> item relation.
    pub fn to_link_group(&self, name: &str) -> LinkGroup {
        let edges = self
            .lists
            .iter()
            .enumerate()
            .flat_map(|(u, l)| l.iter().map(move |&(i, _)| (u as u32, i)))
            .collect();
        LinkGroup::new(name, &self.user_group, &self.item_group, edges)
    }

    /// `user,rank,item,score` rows, rank starting at 1.
    pub fn write_csv<W: Write>(&self, hin: &Hin, out: W) -> Result<()> {
        let users = hin.group(&self.user_group)?;
        let items = hin.group(&self.item_group)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["user", "rank", "item", "score"])?;
        for (u, list) in self.lists.iter().enumerate() {
            for (rank, &(i, s)) in list.iter().enumerate() {
                w.write_record([
                    users.label(u as u32),
                    &(rank + 1).to_string(),
                    items.label(i),
                    &s.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<recommendations>", e))?;
        Ok(())
    }
}

/// Which of a user's items are never recommended back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exclusion {
    /// Items the user likes.
    Liked(String),
    /// Items the user rated.
    Rated(String),
}

impl Exclusion {
    fn relation(&self) -> &str {
        match self {
            Exclusion::Liked(r) | Exclusion::Rated(r) => r,
        }
    }
}

/// Applies a mixed-path spec to every user of its source group.
pub fn recommend_with(
    hin: &Hin,
    spec: &MixedPathSpec,
    n: usize,
    exclusion: &Exclusion,
) -> Result<RecommendationSet> {
    let chains = chains(hin, spec)?;
    let excl = hin.relation(exclusion.relation())?.view();
    let users = chains[0].source_len();
    let lists = par::map_range(users, |u| {
        let scores = spread_with(&chains, spec, u as u32)?;
        Ok(recommend_top_n(&scores, excl.neighbors(u as u32), n))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(RecommendationSet {
        list_size: n,
        provenance: spec.describe(),
        user_group: spec.source().to_string(),
        item_group: spec.target().to_string(),
        lists,
    })
}

/// Two meta-paths mixed by a single weight: a user-content path
/// `R_X R_X^-1 R_likes` weighted `1 - alpha`, and an item-content path
/// `R_likes R_Y R_Y^-1` weighted `alpha`.
#[derive(Debug, Clone)]
pub struct TwoPath {
    pub user_path: MetaPath,
    pub item_path: MetaPath,
    pub likes: String,
}

impl TwoPath {
    pub fn new(hin: &Hin, likes: &str, user_content: &str, item_content: &str) -> Result<Self> {
        let x = hin.resolve_relation_name(user_content)?;
        let y = hin.resolve_relation_name(item_content)?;
        let user_path = hin.validate_meta_path(&[
            MetaStep::forward(&x),
            MetaStep::inverse(&x),
            MetaStep::forward(likes),
        ])?;
        let item_path = hin.validate_meta_path(&[
            MetaStep::forward(likes),
            MetaStep::forward(&y),
            MetaStep::inverse(&y),
        ])?;
        if user_path.source() != item_path.source() || user_path.target() != item_path.target() {
            return Err(Error::InvalidConfig(format!(
                "`{x}` is not a user-content relation or `{y}` is not an item-content relation"
            )));
        }
        Ok(Self {
            user_path,
            item_path,
            likes: likes.to_string(),
        })
    }

    pub fn spec(&self, alpha: f64) -> Result<MixedPathSpec> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        MixedPathSpec::new(vec![
            (self.user_path.clone(), 1.0 - alpha),
            (self.item_path.clone(), alpha),
        ])
    }

    pub fn recommend(
        &self,
        hin: &Hin,
        alpha: f64,
        n: usize,
        exclusion: &Exclusion,
    ) -> Result<RecommendationSet> {
        let mut set = recommend_with(hin, &self.spec(alpha)?, n, exclusion)?;
        set.provenance = format!("two-path alpha={alpha}");
        Ok(set)
    }

    /// Rankings for several weights at once, each of length `n`.
    ///
    /// Both walk distributions are computed once per user and reused for
    /// every weight.
    pub fn recommend_many(
        &self,
        hin: &Hin,
        alphas: &[f64],
        n: usize,
        exclusion: &Exclusion,
    ) -> Result<Vec<RecommendationSet>> {
        for &a in alphas {
            self.spec(a)?;
        }
        let user_chain = OperatorChain::new(hin, &self.user_path)?;
        let item_chain = OperatorChain::new(hin, &self.item_path)?;
        let excl = hin.relation(exclusion.relation())?.view();
        let per_user = par::map_range(user_chain.source_len(), |u| {
            let u = u as u32;
            let px = user_chain.from_source(u)?.mass;
            let py = item_chain.from_source(u)?.mass;
            let mut scores = vec![0.0; px.len()];
            Ok(alphas
                .iter()
                .map(|&a| {
                    for ((s, x), y) in scores.iter_mut().zip(&px).zip(&py) {
                        *s = (1.0 - a) * x + a * y;
                    }
                    recommend_top_n(&scores, excl.neighbors(u), n)
                })
                .collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(alphas
            .iter()
            .enumerate()
            .map(|(k, &a)| RecommendationSet {
                list_size: n,
                provenance: format!("two-path alpha={a}"),
                user_group: self.user_path.source().to_string(),
                item_group: self.user_path.target().to_string(),
                lists: per_user.iter().map(|lists| lists[k].clone()).collect(),
            })
            .collect())
    }
}

/// Two-path recommendation on `R_likes`, excluding liked items.
pub fn two_path_recommend(
    hin: &Hin,
    user_content: &str,
    item_content: &str,
    alpha: f64,
    n: usize,
) -> Result<RecommendationSet> {
    let likes = "R_likes";
    TwoPath::new(hin, likes, user_content, item_content)?.recommend(
        hin,
        alpha,
        n,
        &Exclusion::Liked(likes.into()),
    )
}

#[derive(Debug, Clone)]
pub struct UbcfConfig {
    pub likes: String,
    /// Items excluded from a user's list; `None` excludes liked items.
    pub rated: Option<String>,
    pub n: usize,
    pub neighbors: usize,
    /// Give users without likes the popularity list instead of nothing.
    pub popularity_fallback: bool,
}

impl UbcfConfig {
    pub fn new(likes: &str, rated: Option<&str>, n: usize) -> Self {
        Self {
            likes: likes.to_string(),
            rated: rated.map(str::to_string),
            n,
            neighbors: 50,
            popularity_fallback: false,
        }
    }
}

/// User-based collaborative filtering on binary like vectors.
///
/// Similarity is cosine, `|L_u ∩ L_v| / sqrt(|L_u| |L_v|)`. The `k` most
/// similar other users (ties to lower index, zero similarity dropped) vote
/// for their liked items with weight equal to their similarity.
pub fn ubcf_recommend(hin: &Hin, config: &UbcfConfig) -> Result<RecommendationSet> {
    let likes = hin.relation(&config.likes)?;
    let fwd = likes.view();
    let rev = likes.inverse();
    let excl = hin
        .relation(config.rated.as_deref().unwrap_or(&config.likes))?
        .view();
    let n_users = fwd.source_len();
    let n_items = rev.source_len();
    let popular = popularity_order(hin, &config.likes)?;

    let lists = par::map_range(n_users, |u| {
        let u = u as u32;
        let mine = fwd.neighbors(u);
        if mine.is_empty() {
            if !config.popularity_fallback {
                return Vec::new();
            }
            return popular
                .iter()
                .filter(|(i, _)| excl.neighbors(u).binary_search(i).is_err())
                .take(config.n)
                .copied()
                .collect();
        }
        let mut overlap = vec![0u32; n_users];
        for &i in mine {
            for &v in rev.neighbors(i) {
                overlap[v as usize] += 1;
            }
        }
        let mut sims: Vec<(u32, f64)> = overlap
            .iter()
            .enumerate()
            .filter(|&(v, &c)| c > 0 && v as u32 != u)
            .map(|(v, &c)| {
                let deg_v = fwd.out_degree(v as u32);
                (v as u32, c as f64 / ((mine.len() * deg_v) as f64).sqrt())
            })
            .collect();
        top_sorted(&mut sims, config.neighbors);
        let mut scores = vec![0.0; n_items];
        for &(v, sim) in &sims {
            for &i in fwd.neighbors(v) {
                scores[i as usize] += sim;
            }
        }
        recommend_top_n(&scores, excl.neighbors(u), config.n)
    });
    Ok(RecommendationSet {
        list_size: config.n,
        provenance: format!("UBCF k={}", config.neighbors),
        user_group: fwd.source().to_string(),
        item_group: fwd.target().to_string(),
        lists,
    })
}

/// Items by like in-degree, descending, ties to lower index. Items nobody
/// likes are included with popularity 0.
fn popularity_order(hin: &Hin, likes: &str) -> Result<Vec<(u32, f64)>> {
    let rev = hin.relation(likes)?.inverse();
    let mut items: Vec<(u32, f64)> = (0..rev.source_len() as u32)
        .map(|i| (i, rev.out_degree(i) as f64))
        .collect();
    items.sort_unstable_by(rank_order);
    Ok(items)
}

/// Most-liked items the user has not rated. `rated = None` uses the likes
/// relation as the rated set.
pub fn ipp_recommend(
    hin: &Hin,
    likes: &str,
    rated: Option<&str>,
    n: usize,
) -> Result<RecommendationSet> {
    let popular = popularity_order(hin, likes)?;
    let fwd = hin.relation(likes)?.view();
    let excl = hin.relation(rated.unwrap_or(likes))?.view();
    let lists = par::map_range(fwd.source_len(), |u| {
        let seen = excl.neighbors(u as u32);
        popular
            .iter()
            .filter(|(i, _)| seen.binary_search(i).is_err())
            .take(n)
            .copied()
            .collect()
    });
    Ok(RecommendationSet {
        list_size: n,
        provenance: "IPP".into(),
        user_group: fwd.source().to_string(),
        item_group: fwd.target().to_string(),
        lists,
    })
}
