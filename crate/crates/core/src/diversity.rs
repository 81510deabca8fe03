//! Perplexity-based diversity of meta-path walk distributions.
//!
//! Mean individual diversity is the geometric mean, over source nodes, of
//! the perplexity of each node's walk distribution. Collective diversity is
//! the perplexity of the walk started uniformly over the source group.
//! Logarithms are base 2 throughout.
//!
//! Distributions that lost mass to dangling nodes are renormalized over the
//! surviving mass before entropy is taken. A source whose walk loses all of
//! its mass is excluded from the mean and counted in
//! [`DiversityReport::excluded_sources`].

use std::io::Write;

use crate::error::{Error, Result};
use crate::hin::{Hin, MetaPath, MetaStep};
use crate::par;
use crate::walk::{OperatorChain, Pmf};

/// Shannon entropy in bits of non-negative weights, normalized by their sum.
/// Zero entries contribute nothing.
pub fn entropy_bits(weights: &[f64]) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("no surviving probability mass".into()));
    }
    let mut h = 0.0;
    for &w in weights {
        if w > 0.0 {
            let p = w / total;
            h -= p * p.log2();
        }
    }
    // -0.0 and rounding just below zero for point masses
    Ok(h.max(0.0))
}

pub fn perplexity_of(weights: &[f64]) -> Result<f64> {
    Ok(entropy_bits(weights)?.exp2())
}

/// Entropy of the surviving part of a walk distribution.
pub fn shannon_entropy(pmf: &Pmf) -> Result<f64> {
    entropy_bits(&pmf.mass)
}

pub fn perplexity(pmf: &Pmf) -> Result<f64> {
    perplexity_of(&pmf.mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    MeanIndividual,
    Collective,
}

impl Measure {
    pub fn as_str(self) -> &'static str {
        match self {
            Measure::MeanIndividual => "mean_individual",
            Measure::Collective => "collective",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub path: MetaPath,
    pub measure: Measure,
    pub value: f64,
    pub excluded_sources: usize,
}

/// Geometric mean of per-source perplexities, as `2^(mean entropy)`.
pub fn mean_individual_from(pmfs: &[Pmf]) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for pmf in pmfs {
        if let Ok(h) = shannon_entropy(pmf) {
            sum += h;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "every source walk lost all of its mass".into(),
        ));
    }
    Ok(((sum / used as f64).exp2(), pmfs.len() - used))
}

pub fn mean_individual_diversity(hin: &Hin, path: &MetaPath) -> Result<DiversityReport> {
    let pmfs = OperatorChain::new(hin, path)?.all_sources();
    let (value, excluded_sources) = mean_individual_from(&pmfs)?;
    Ok(DiversityReport {
        path: path.clone(),
        measure: Measure::MeanIndividual,
        value,
        excluded_sources,
    })
}

pub fn collective_diversity(hin: &Hin, path: &MetaPath) -> Result<DiversityReport> {
    let chain = OperatorChain::new(hin, path)?;
    let pmf = chain.collective()?;
    let value = perplexity(&pmf)?;
    // sources whose own walk dies entirely
    let excluded_sources = (0..chain.source_len() as u32)
        .filter(|&s| {
            chain
                .from_source(s)
                .map(|p| p.total() == 0.0)
                .unwrap_or(false)
        })
        .count();
    Ok(DiversityReport {
        path: path.clone(),
        measure: Measure::Collective,
        value,
        excluded_sources,
    })
}

/// Where a mosaic row starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MosaicSource {
    /// Start at the user group itself.
    Identity,
    /// Start at the content group of a user-content relation, walking it
    /// backwards to users.
    Relation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MosaicCell {
    pub source_group: String,
    pub middle_relation: String,
    pub target_group: String,
    pub path: MetaPath,
    pub value: f64,
    pub excluded_sources: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mosaic {
    pub cells: Vec<MosaicCell>,
    /// Combinations skipped because they did not compose or were degenerate.
    pub warnings: Vec<String>,
}

impl Mosaic {
    pub fn get(&self, source_group: &str, middle: &str, target_group: &str) -> Option<&MosaicCell> {
        self.cells.iter().find(|c| {
            c.source_group == source_group
                && c.middle_relation == middle
                && c.target_group == target_group
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "source_group",
            "middle_relation",
            "target_group",
            "measure",
            "value",
            "excluded_sources",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.source_group.as_str(),
                c.middle_relation.as_str(),
                c.target_group.as_str(),
                Measure::MeanIndividual.as_str(),
                &c.value.to_string(),
                &c.excluded_sources.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<mosaic>", e))?;
        Ok(())
    }
}

/// Mean individual diversity of `R_S^-1 R_X R_T` for every combination of
/// source row, middle relation and target relation.
pub fn diversity_mosaic(
    hin: &Hin,
    sources: &[MosaicSource],
    middles: &[String],
    targets: &[String],
) -> Result<Mosaic> {
    let mut combos = Vec::new();
    for middle in middles {
        for source in sources {
            for target in targets {
                combos.push((source, middle, target));
            }
        }
    }
    let results = par::map_slice(&combos, |&(source, middle, target)| {
        mosaic_cell(hin, source, middle, target)
    });
    let mut mosaic = Mosaic::default();
    for r in results {
        match r {
            Ok(cell) => mosaic.cells.push(cell),
            Err(e) if is_skippable(&e) => {
                log::warn!("mosaic cell skipped: {e}");
                mosaic.warnings.push(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(mosaic)
}

fn is_skippable(e: &Error) -> bool {
    matches!(e, Error::Composition { .. } | Error::Degenerate(_))
}

fn mosaic_cell(hin: &Hin, source: &MosaicSource, middle: &str, target: &str) -> Result<MosaicCell> {
    let mut steps = Vec::with_capacity(3);
    if let MosaicSource::Relation(r) = source {
        steps.push(MetaStep::inverse(r.clone()));
    }
    steps.push(MetaStep::forward(middle));
    steps.push(MetaStep::forward(target));
    let path = hin.validate_meta_path(&steps)?;
    let report = mean_individual_diversity(hin, &path)?;
    Ok(MosaicCell {
        source_group: path.source().to_string(),
        middle_relation: middle.to_string(),
        target_group: path.target().to_string(),
        path,
        value: report.value,
        excluded_sources: report.excluded_sources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::tests::toy;
    use crate::hin::HinBuilder;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(entropy_bits(&[0.5, 0.5]).unwrap(), 1.0, epsilon = 1e-15);
        // -(3/4)log2(3/4) - (1/4)log2(1/4), by hand
        assert_abs_diff_eq!(
            entropy_bits(&[0.75, 0.25]).unwrap(),
            0.811278,
            epsilon = 1e-6
        );
        assert_eq!(entropy_bits(&[1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            entropy_bits(&[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(entropy_bits(&[]).is_err());
    }

    #[test]
    fn perplexity_values() {
        let third = 1.0 / 3.0;
        assert_abs_diff_eq!(
            perplexity_of(&[third, third, third]).unwrap(),
            3.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            perplexity_of(&[0.6, 0.2, 0.1, 0.1]).unwrap(),
            2.97,
            epsilon = 0.005
        );
        assert_abs_diff_eq!(
            perplexity_of(&[0.75, 0.25]).unwrap(),
            1.7547,
            epsilon = 0.0005
        );
    }

    #[test]
    fn lost_mass_is_renormalized_away() {
        let pmf = Pmf {
            group: "T".into(),
            mass: vec![0.25, 0.25],
            lost_mass: 0.5,
        };
        assert_abs_diff_eq!(perplexity(&pmf).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn toy_diversities() {
        let hin = toy();
        let mp = hin.meta_path("R_likes R_Ty").unwrap();
        let mi = mean_individual_diversity(&hin, &mp).unwrap();
        assert_abs_diff_eq!(mi.value, 2f64.sqrt(), epsilon = 1e-9);
        assert_eq!(mi.excluded_sources, 0);
        let col = collective_diversity(&hin, &mp).unwrap();
        assert_abs_diff_eq!(col.value, 1.7547, epsilon = 0.0005);
    }

    #[test]
    fn point_masses_have_unit_diversity() {
        let mut b = HinBuilder::new();
        b.relation("R_likes", "U", "I").unwrap();
        b.relation("R_Ty", "I", "Ty").unwrap();
        for k in 0..4 {
            b.edge("R_likes", &format!("u{k}"), &format!("i{k}"))
                .unwrap();
            b.edge("R_Ty", &format!("i{k}"), &format!("t{k}")).unwrap();
        }
        let hin = b.build().unwrap();
        let mp = hin.meta_path("R_likes R_Ty").unwrap();
        assert_eq!(mean_individual_diversity(&hin, &mp).unwrap().value, 1.0);
        assert_abs_diff_eq!(
            collective_diversity(&hin, &mp).unwrap().value,
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn shared_target_has_unit_collective_diversity() {
        let mut b = HinBuilder::new();
        b.relation("R", "A", "B").unwrap();
        for k in 0..5 {
            b.edge("R", &format!("a{k}"), "only").unwrap();
        }
        let hin = b.build().unwrap();
        let mp = hin.meta_path("R").unwrap();
        assert_eq!(collective_diversity(&hin, &mp).unwrap().value, 1.0);
    }

    #[test]
    fn dangling_sources_are_excluded() {
        let mut b = HinBuilder::new();
        b.relation("R_likes", "U", "I").unwrap();
        b.relation("R_Ty", "I", "Ty").unwrap();
        b.edge("R_likes", "u1", "i1").unwrap();
        b.edge("R_likes", "u1", "i2").unwrap();
        b.edge("R_Ty", "i1", "t1").unwrap();
        b.edge("R_Ty", "i2", "t2").unwrap();
        b.node("U", "u2");
        let hin = b.build().unwrap();
        let mp = hin.meta_path("R_likes R_Ty").unwrap();
        let mi = mean_individual_diversity(&hin, &mp).unwrap();
        assert_abs_diff_eq!(mi.value, 2.0, epsilon = 1e-12);
        assert_eq!(mi.excluded_sources, 1);
        let col = collective_diversity(&hin, &mp).unwrap();
        assert_eq!(col.excluded_sources, 1);
        assert_abs_diff_eq!(col.value, 2.0, epsilon = 1e-12);

        let mut b = HinBuilder::new();
        b.relation("R", "A", "B").unwrap();
        b.node("A", "a");
        b.node("B", "b");
        let hin = b.build().unwrap();
        let mp = hin.meta_path("R").unwrap();
        assert!(matches!(
            mean_individual_diversity(&hin, &mp),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            collective_diversity(&hin, &mp),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn toy_mosaic_identity_cell() {
        let hin = toy();
        let m = diversity_mosaic(
            &hin,
            &[MosaicSource::Identity],
            &["R_likes".to_string()],
            &["R_Ty".to_string(), "R_likes".to_string()],
        )
        .unwrap();
        assert_eq!(m.cells.len(), 1);
        assert_eq!(m.warnings.len(), 1);
        assert_abs_diff_eq!(
            m.get("U", "R_likes", "Ty").unwrap().value,
            2f64.sqrt(),
            epsilon = 1e-9
        );
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "source_group,middle_relation,target_group,measure,value,excluded_sources\n"
        ));
        assert!(text.contains("U,R_likes,Ty,mean_individual,"));
    }
}
