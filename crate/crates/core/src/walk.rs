//! Random walks along meta-paths.
//!
//! Each step moves uniformly to one out-neighbor under the step's relation.
//! A node with no out-neighbor absorbs whatever probability reaches it; that
//! mass is reported as [`Pmf::lost_mass`] and never renormalized here.
//!
//! Distributions are evaluated as start vector times operator, left to
//! right. The full path matrix is never materialized.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hin::{Hin, LinkView, MetaPath, MetaStep};
use crate::par;

/// Probability mass over the nodes of one object group.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    pub group: String,
    pub mass: Vec<f64>,
    pub lost_mass: f64,
}

impl Pmf {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass conservation: `sum(mass) + lost_mass == 1` within `tol`.
    pub fn is_conserved(&self, tol: f64) -> bool {
        (self.total() + self.lost_mass - 1.0).abs() <= tol
    }

    /// Writes `label,probability` rows with a header.
    pub fn write_csv<W: Write>(&self, hin: &Hin, out: W) -> Result<()> {
        let group = hin.group(&self.group)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "probability"])?;
        for (i, p) in self.mass.iter().enumerate() {
            w.write_record([group.label(i as u32), &p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<pmf>", e))?;
        Ok(())
    }
}

/// Row-stochastic step operator of one (possibly inverted) relation.
///
/// Entry `(s, t)` is `1 / outdeg(s)` when `s -> t` exists, else 0. Rows of
/// zero out-degree are dangling and all-zero.
#[derive(Debug, Clone, Copy)]
pub struct TransitionOperator<'a> {
    view: LinkView<'a>,
    targets: usize,
}

impl<'a> TransitionOperator<'a> {
    pub fn new(hin: &'a Hin, relation: &str, inverted: bool) -> Result<Self> {
        let lg = hin.relation(relation)?;
        let view = if inverted { lg.inverse() } else { lg.view() };
        let targets = hin.group(view.target())?.len();
        Ok(Self { view, targets })
    }

    pub fn for_step(hin: &'a Hin, step: &MetaStep) -> Result<Self> {
        Self::new(hin, &step.relation, step.inverted)
    }

    pub fn rows(&self) -> usize {
        self.view.source_len()
    }

    pub fn cols(&self) -> usize {
        self.targets
    }

    pub fn is_dangling(&self, row: u32) -> bool {
        self.view.out_degree(row) == 0
    }

    /// Nonzero entries of one row.
    pub fn row(&self, s: u32) -> impl Iterator<Item = (u32, f64)> + 'a {
        let nbrs = self.view.neighbors(s);
        let w = 1.0 / nbrs.len() as f64;
        nbrs.iter().map(move |&t| (t, w))
    }

    /// Dense row-major matrix; for checks on small graphs.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows() as u32)
            .map(|s| {
                let mut row = vec![0.0; self.cols()];
                for (t, w) in self.row(s) {
                    row[t as usize] = w;
                }
                row
            })
            .collect()
    }

    /// `out += v * self`; returns the mass that fell on dangling rows.
    fn apply(&self, v: &[f64], out: &mut [f64]) -> f64 {
        let mut lost = 0.0;
        for (s, &p) in v.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let nbrs = self.view.neighbors(s as u32);
            if nbrs.is_empty() {
                lost += p;
                continue;
            }
            let share = p / nbrs.len() as f64;
            for &t in nbrs {
                out[t as usize] += share;
            }
        }
        lost
    }
}

/// The operators of a validated meta-path, in order.
#[derive(Debug, Clone)]
pub struct OperatorChain<'a> {
    ops: Vec<TransitionOperator<'a>>,
    source: String,
    target: String,
}

impl<'a> OperatorChain<'a> {
    pub fn new(hin: &'a Hin, path: &MetaPath) -> Result<Self> {
        let ops = path
            .steps()
            .iter()
            .map(|s| TransitionOperator::for_step(hin, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ops,
            source: path.source().to_string(),
            target: path.target().to_string(),
        })
    }

    pub fn operators(&self) -> &[TransitionOperator<'a>] {
        &self.ops
    }

    pub fn source_len(&self) -> usize {
        self.ops[0].rows()
    }

    /// Pushes a start vector over the source group through every step.
    pub fn propagate(&self, start: Vec<f64>) -> Pmf {
        debug_assert_eq!(start.len(), self.source_len());
        let mut lost = 0.0;
        let mut current = start;
        for op in &self.ops {
            let mut next = vec![0.0; op.cols()];
            lost += op.apply(&current, &mut next);
            current = next;
        }
        Pmf {
            group: self.target.clone(),
            mass: current,
            lost_mass: lost,
        }
    }

    /// Walk from a single source node.
    pub fn from_source(&self, source: u32) -> Result<Pmf> {
        let n = self.source_len();
        if source as usize >= n {
            return Err(Error::NodeOutOfRange {
                group: self.source.clone(),
                index: source as usize,
                size: n,
            });
        }
        let mut start = vec![0.0; n];
        start[source as usize] = 1.0;
        Ok(self.propagate(start))
    }

    /// Walk from a uniformly random source node.
    pub fn collective(&self) -> Result<Pmf> {
        let n = self.source_len();
        if n == 0 {
            return Err(Error::EmptyGroup(self.source.clone()));
        }
        Ok(self.propagate(vec![1.0 / n as f64; n]))
    }

    /// One distribution per source node, in index order.
    pub fn all_sources(&self) -> Vec<Pmf> {
        par::map_range(self.source_len(), |s| {
            self.from_source(s as u32).expect("index in range")
        })
    }
}

pub fn transition_operator<'a>(
    hin: &'a Hin,
    relation: &str,
    inverted: bool,
) -> Result<TransitionOperator<'a>> {
    TransitionOperator::new(hin, relation, inverted)
}

/// Distribution over the path's target group for a walk started at `source`.
pub fn source_distribution(hin: &Hin, path: &MetaPath, source: u32) -> Result<Pmf> {
    OperatorChain::new(hin, path)?.from_source(source)
}

/// Distribution over the path's target group for a walk started uniformly
/// over the source group.
pub fn collective_distribution(hin: &Hin, path: &MetaPath) -> Result<Pmf> {
    OperatorChain::new(hin, path)?.collective()
}

/// [`source_distribution`] for every node of the source group.
pub fn all_source_distributions(hin: &Hin, path: &MetaPath) -> Result<Vec<Pmf>> {
    Ok(OperatorChain::new(hin, path)?.all_sources())
}
