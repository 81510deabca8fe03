//! Typed heterogeneous information network.
//!
//! A [`Hin`] is a set of named object groups (node types) and named link
//! groups (relations), each relation connecting one source group to one
//! target group. Nodes are dense `u32` indices inside their group; external
//! labels live in a sidecar map on [`ObjectGroup`] and are only consulted at
//! ingest and reporting boundaries.
//!
//! Hins are frozen at construction. Every derived network (likes relation
//! added, train split, shuffled replicate) is a new `Hin` that shares the
//! untouched groups and relations through `Arc`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, Result};

/// Nodes of one type, indexed `0..len()` in order of first insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectGroup {
    name: String,
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl ObjectGroup {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            labels: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Builds a group from labels in the given order. Repeated labels are an
    /// error.
    pub fn from_labels<I, S>(name: impl Into<String>, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut group = Self::new(name);
        for label in labels {
            let label = label.into();
            if group.index.contains_key(&label) {
                return Err(Error::DuplicateLabel {
                    group: group.name,
                    label,
                });
            }
            group.intern(label);
        }
        Ok(group)
    }

    /// Returns the index of `label`, appending it if unseen.
    pub fn intern(&mut self, label: impl Into<String>) -> u32 {
        let label = label.into();
        if let Some(&idx) = self.index.get(&label) {
            return idx;
        }
        let idx = self.labels.len() as u32;
        self.index.insert(label.clone(), idx);
        self.labels.push(label);
        idx
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, idx: u32) -> &str {
        &self.labels[idx as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn require(&self, label: &str) -> Result<u32> {
        self.index_of(label).ok_or_else(|| Error::UnknownNode {
            group: self.name.clone(),
            label: label.to_string(),
        })
    }
}

/// Compressed adjacency: `neighbors(v) = targets[offsets[v]..offsets[v + 1]]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<usize>,
    pub(crate) targets: Vec<u32>,
}

impl Csr {
    fn from_sorted_pairs(rows: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        let mut targets = Vec::new();
        for (s, t) in pairs {
            offsets[s as usize + 1] += 1;
            targets.push(t);
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, targets }
    }

    #[inline]
    pub(crate) fn row(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

/// Edge set of one relation between a source and a target object group.
///
/// Edges are simple: after [`build_hin`] they are sorted by `(source,
/// target)` with duplicates removed. An optional per-edge payload carries
/// rating values between ingest and likes derivation; walks ignore it.
#[derive(Debug, Clone)]
pub struct LinkGroup {
    name: String,
    source: String,
    target: String,
    edges: Vec<(u32, u32)>,
    payload: Option<Vec<i32>>,
    forward: Csr,
    reverse: Csr,
}

impl PartialEq for LinkGroup {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.source == other.source
            && self.target == other.target
            && self.edges == other.edges
            && self.payload == other.payload
    }
}

impl LinkGroup {
    pub fn new(
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        edges: Vec<(u32, u32)>,
    ) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            edges,
            payload: None,
            forward: Csr::default(),
            reverse: Csr::default(),
        }
    }

    /// Attaches one integer value per edge, aligned with `edges`.
    pub fn with_payload(mut self, payload: Vec<i32>) -> Result<Self> {
        if payload.len() != self.edges.len() {
            return Err(Error::InvalidConfig(format!(
                "relation `{}`: {} payload values for {} edges",
                self.name,
                payload.len(),
                self.edges.len()
            )));
        }
        self.payload = Some(payload);
        Ok(self)
    }

    /// Resolves label pairs against the given groups.
    pub fn from_labels<'a>(
        name: impl Into<String>,
        source: &ObjectGroup,
        target: &ObjectGroup,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let edges = pairs
            .into_iter()
            .map(|(s, t)| Ok((source.require(s)?, target.require(t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(name, source.name(), target.name(), edges))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn payload(&self) -> Option<&[i32]> {
        self.payload.as_deref()
    }

    /// Sorts, deduplicates (first occurrence wins) and builds both adjacency
    /// directions.
    fn freeze(&mut self, n_source: usize, n_target: usize) -> Result<()> {
        for &(s, t) in &self.edges {
            if s as usize >= n_source {
                return Err(Error::DanglingEndpoint {
                    relation: self.name.clone(),
                    group: self.source.clone(),
                    index: s,
                    size: n_source,
                });
            }
            if t as usize >= n_target {
                return Err(Error::DanglingEndpoint {
                    relation: self.name.clone(),
                    group: self.target.clone(),
                    index: t,
                    size: n_target,
                });
            }
        }
        match self.payload.take() {
            Some(payload) => {
                let mut tagged: Vec<((u32, u32), i32)> =
                    self.edges.iter().copied().zip(payload).collect();
                tagged.sort_by_key(|&(e, _)| e);
                tagged.dedup_by_key(|&mut (e, _)| e);
                let (edges, payload) = tagged.into_iter().unzip();
                self.edges = edges;
                self.payload = Some(payload);
            }
            None => {
                self.edges.sort_unstable();
                self.edges.dedup();
            }
        }
        self.forward = Csr::from_sorted_pairs(n_source, self.edges.iter().copied());
        let mut reversed: Vec<(u32, u32)> = self.edges.iter().map(|&(s, t)| (t, s)).collect();
        reversed.sort_unstable();
        self.reverse = Csr::from_sorted_pairs(n_target, reversed.into_iter());
        Ok(())
    }

    /// Forward view of this relation.
    pub fn view(&self) -> LinkView<'_> {
        LinkView {
            group: self,
            inverted: false,
        }
    }

    /// Reversed view: source and target swapped, every edge reversed. No
    /// edge data is copied.
    pub fn inverse(&self) -> LinkView<'_> {
        LinkView {
            group: self,
            inverted: true,
        }
    }
}

/// A relation read in either direction.
#[derive(Debug, Clone, Copy)]
pub struct LinkView<'a> {
    group: &'a LinkGroup,
    inverted: bool,
}

impl<'a> LinkView<'a> {
    pub fn name(&self) -> &'a str {
        &self.group.name
    }

    pub fn is_inverted(&self) -> bool {
        self.inverted
    }

    pub fn source(&self) -> &'a str {
        if self.inverted {
            &self.group.target
        } else {
            &self.group.source
        }
    }

    pub fn target(&self) -> &'a str {
        if self.inverted {
            &self.group.source
        } else {
            &self.group.target
        }
    }

    fn csr(&self) -> &'a Csr {
        if self.inverted {
            &self.group.reverse
        } else {
            &self.group.forward
        }
    }

    /// Number of nodes in the (view) source group.
    pub fn source_len(&self) -> usize {
        self.csr().offsets.len() - 1
    }

    /// Out-neighbors of `v`, ascending.
    #[inline]
    pub fn neighbors(&self, v: u32) -> &'a [u32] {
        self.csr().row(v)
    }

    #[inline]
    pub fn out_degree(&self, v: u32) -> usize {
        self.neighbors(v).len()
    }

    pub fn len(&self) -> usize {
        self.group.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group.edges.is_empty()
    }

    /// Edges in view orientation, sorted by `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + 'a {
        let csr = self.csr();
        (0..csr.offsets.len() - 1)
            .flat_map(move |s| csr.row(s as u32).iter().map(move |&t| (s as u32, t)))
    }

    /// Inverse of this view.
    pub fn invert(self) -> LinkView<'a> {
        LinkView {
            group: self.group,
            inverted: !self.inverted,
        }
    }
}

/// One schema arc: a relation and the groups it connects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaArc {
    pub relation: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub nodes: Vec<String>,
    pub arcs: Vec<SchemaArc>,
}

impl Schema {
    pub fn derive(groups: &[Arc<ObjectGroup>], relations: &[Arc<LinkGroup>]) -> Self {
        Self {
            nodes: groups.iter().map(|g| g.name().to_string()).collect(),
            arcs: relations
                .iter()
                .map(|r| SchemaArc {
                    relation: r.name().to_string(),
                    source: r.source().to_string(),
                    target: r.target().to_string(),
                })
                .collect(),
        }
    }
}

/// One meta-path step: a relation, optionally traversed backwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaStep {
    pub relation: String,
    pub inverted: bool,
}

impl MetaStep {
    pub fn forward(relation: impl Into<String>) -> Self {
        Self {
            relation: relation.into(),
            inverted: false,
        }
    }

    pub fn inverse(relation: impl Into<String>) -> Self {
        Self {
            relation: relation.into(),
            inverted: true,
        }
    }

    /// Parses `R_likes` or an inverted step `R_Ty^-1` / `R_Ty~`.
    pub fn parse(token: &str) -> Result<Self> {
        let token = token.trim();
        let (name, inverted) = if let Some(n) = token.strip_suffix("^-1") {
            (n, true)
        } else if let Some(n) = token.strip_suffix('~') {
            (n, true)
        } else {
            (token, false)
        };
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::MetaPathSyntax(token.to_string()));
        }
        Ok(Self {
            relation: name.to_string(),
            inverted,
        })
    }
}

impl fmt::Display for MetaStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}^-1", self.relation)
        } else {
            f.write_str(&self.relation)
        }
    }
}

/// Parses a whitespace- or comma-separated list of steps.
pub fn parse_steps(text: &str) -> Result<Vec<MetaStep>> {
    let steps = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(MetaStep::parse)
        .collect::<Result<Vec<_>>>()?;
    if steps.is_empty() {
        return Err(Error::EmptyMetaPath);
    }
    Ok(steps)
}

/// A schema-validated sequence of steps from group `source` to `target`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaPath {
    steps: Vec<MetaStep>,
    source: String,
    target: String,
}

impl MetaPath {
    pub fn steps(&self) -> &[MetaStep] {
        &self.steps
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

/// Frozen heterogeneous information network.
#[derive(Debug, Clone)]
pub struct Hin {
    groups: Vec<Arc<ObjectGroup>>,
    group_index: HashMap<String, usize>,
    relations: Vec<Arc<LinkGroup>>,
    relation_index: HashMap<String, usize>,
    schema: Schema,
}

/// Assembles and freezes a network.
///
/// Relation edges are sorted and deduplicated; forward and reverse
/// adjacency is built for every relation.
pub fn build_hin(object_groups: Vec<ObjectGroup>, link_groups: Vec<LinkGroup>) -> Result<Hin> {
    Hin::from_parts(
        object_groups.into_iter().map(Arc::new).collect(),
        link_groups
            .into_iter()
            .map(|lg| (lg, false))
            .collect::<Vec<_>>(),
    )
}

impl Hin {
    /// `bool` in `relations` marks link groups that are already frozen.
    fn from_parts(
        groups: Vec<Arc<ObjectGroup>>,
        relations: Vec<(LinkGroup, bool)>,
    ) -> Result<Self> {
        let frozen = relations
            .into_iter()
            .map(|(lg, done)| (Arc::new(lg), done))
            .collect();
        Self::assemble(groups, frozen)
    }

    fn assemble(
        groups: Vec<Arc<ObjectGroup>>,
        relations: Vec<(Arc<LinkGroup>, bool)>,
    ) -> Result<Self> {
        let mut group_index = HashMap::with_capacity(groups.len());
        for (i, g) in groups.iter().enumerate() {
            if group_index.insert(g.name().to_string(), i).is_some() {
                return Err(Error::DuplicateGroup(g.name().to_string()));
            }
        }
        let mut relation_index = HashMap::with_capacity(relations.len());
        let mut frozen = Vec::with_capacity(relations.len());
        for (i, (lg, done)) in relations.into_iter().enumerate() {
            if relation_index.insert(lg.name().to_string(), i).is_some() {
                return Err(Error::DuplicateRelation(lg.name().to_string()));
            }
            let src = *group_index
                .get(lg.source())
                .ok_or_else(|| Error::UnknownGroup(lg.source().to_string()))?;
            let tgt = *group_index
                .get(lg.target())
                .ok_or_else(|| Error::UnknownGroup(lg.target().to_string()))?;
            let lg = if done {
                lg
            } else {
                let mut owned = Arc::try_unwrap(lg).unwrap_or_else(|shared| (*shared).clone());
                owned.freeze(groups[src].len(), groups[tgt].len())?;
                Arc::new(owned)
            };
            frozen.push(lg);
        }
        let schema = Schema::derive(&groups, &frozen);
        Ok(Self {
            groups,
            group_index,
            relations: frozen,
            relation_index,
            schema,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn groups(&self) -> impl Iterator<Item = &ObjectGroup> {
        self.groups.iter().map(|g| g.as_ref())
    }

    pub fn relations(&self) -> impl Iterator<Item = &LinkGroup> {
        self.relations.iter().map(|r| r.as_ref())
    }

    pub fn group(&self, name: &str) -> Result<&ObjectGroup> {
        self.group_index
            .get(name)
            .map(|&i| self.groups[i].as_ref())
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }

    pub fn relation(&self, name: &str) -> Result<&LinkGroup> {
        self.relation_index
            .get(name)
            .map(|&i| self.relations[i].as_ref())
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn has_relation(&self, name: &str) -> bool {
        self.relation_index.contains_key(name)
    }

    /// Looks a relation up by exact name, falling back to `R_<name>`.
    pub fn resolve_relation_name(&self, name: &str) -> Result<String> {
        if self.has_relation(name) {
            return Ok(name.to_string());
        }
        let prefixed = format!("R_{name}");
        if self.has_relation(&prefixed) {
            return Ok(prefixed);
        }
        Err(Error::UnknownRelation(name.to_string()))
    }

    /// Reversed view of a relation.
    pub fn invert(&self, relation: &str) -> Result<LinkView<'_>> {
        Ok(self.relation(relation)?.inverse())
    }

    pub fn view(&self, step: &MetaStep) -> Result<LinkView<'_>> {
        let lg = self.relation(&step.relation)?;
        Ok(if step.inverted {
            lg.inverse()
        } else {
            lg.view()
        })
    }

    /// Checks that `steps` chain on the schema and resolves the end groups.
    pub fn validate_meta_path(&self, steps: &[MetaStep]) -> Result<MetaPath> {
        let first = steps.first().ok_or(Error::EmptyMetaPath)?;
        let first = self.view(first)?;
        let source = first.source().to_string();
        let mut current = first.target();
        for (k, step) in steps.iter().enumerate().skip(1) {
            let view = self.view(step)?;
            if view.source() != current {
                return Err(Error::Composition {
                    step: k + 1,
                    relation: step.to_string(),
                    expected: current.to_string(),
                    found: view.source().to_string(),
                });
            }
            current = view.target();
        }
        Ok(MetaPath {
            steps: steps.to_vec(),
            source,
            target: current.to_string(),
        })
    }

    /// Parses and validates a textual meta-path such as `R_likes R_Ty`.
    pub fn meta_path(&self, text: &str) -> Result<MetaPath> {
        self.validate_meta_path(&parse_steps(text)?)
    }

    /// New network with one extra relation.
    pub fn with_link_group(&self, link_group: LinkGroup) -> Result<Hin> {
        let mut relations: Vec<(Arc<LinkGroup>, bool)> = self
            .relations
            .iter()
            .map(|r| (Arc::clone(r), true))
            .collect();
        relations.push((Arc::new(link_group), false));
        Self::assemble(self.groups.clone(), relations)
    }

    /// New network with the named relation's edges (and payload) replaced.
    /// The relation keeps its position and endpoint groups.
    pub fn replace_edges(
        &self,
        relation: &str,
        edges: Vec<(u32, u32)>,
        payload: Option<Vec<i32>>,
    ) -> Result<Hin> {
        let idx = *self
            .relation_index
            .get(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
        let old = &self.relations[idx];
        let mut lg = LinkGroup::new(old.name(), old.source(), old.target(), edges);
        if let Some(p) = payload {
            lg = lg.with_payload(p)?;
        }
        let relations = self
            .relations
            .iter()
            .enumerate()
            .map(|(i, r)| {
                if i == idx {
                    (Arc::new(lg.clone()), false)
                } else {
                    (Arc::clone(r), true)
                }
            })
            .collect();
        Self::assemble(self.groups.clone(), relations)
    }

    /// New network without the named relation. Object groups are kept.
    pub fn without_relation(&self, relation: &str) -> Result<Hin> {
        if !self.has_relation(relation) {
            return Err(Error::UnknownRelation(relation.to_string()));
        }
        let relations = self
            .relations
            .iter()
            .filter(|r| r.name() != relation)
            .map(|r| (Arc::clone(r), true))
            .collect();
        Self::assemble(self.groups.clone(), relations)
    }

    /// Total number of edges across relations.
    pub fn edge_count(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    /// True when both networks share every relation except possibly `except`,
    /// compared by edge content.
    pub fn same_relations_except(&self, other: &Hin, except: &str) -> bool {
        self.relations.len() == other.relations.len()
            && self
                .relations
                .iter()
                .zip(&other.relations)
                .all(|(a, b)| a.name() == except && b.name() == except || a == b)
    }
}

/// Label-level builder used by ingest and tests: edges are added by label
/// and groups grow on demand.
#[derive(Debug, Default)]
pub struct HinBuilder {
    groups: IndexMap<String, ObjectGroup>,
    relations: IndexMap<String, PendingRelation>,
}

#[derive(Debug)]
struct PendingRelation {
    source: String,
    target: String,
    edges: Vec<(u32, u32)>,
    payload: Option<Vec<i32>>,
}

impl HinBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a group; existing groups are left as they are.
    pub fn group(&mut self, name: &str) -> &mut ObjectGroup {
        self.groups
            .entry(name.to_string())
            .or_insert_with(|| ObjectGroup::new(name))
    }

    /// Adds a node label to a group, returning its index.
    pub fn node(&mut self, group: &str, label: &str) -> u32 {
        self.group(group).intern(label)
    }

    /// Declares a relation (so it exists even with no edges). Redeclaring
    /// with different endpoint groups is an error.
    pub fn relation(&mut self, name: &str, source: &str, target: &str) -> Result<()> {
        self.group(source);
        self.group(target);
        match self.relations.get(name) {
            Some(r) if r.source != source || r.target != target => {
                Err(Error::DuplicateRelation(name.to_string()))
            }
            Some(_) => Ok(()),
            None => {
                self.relations.insert(
                    name.to_string(),
                    PendingRelation {
                        source: source.to_string(),
                        target: target.to_string(),
                        edges: Vec::new(),
                        payload: None,
                    },
                );
                Ok(())
            }
        }
    }

    pub fn edge(&mut self, relation: &str, source_label: &str, target_label: &str) -> Result<()> {
        self.push_edge(relation, source_label, target_label, None)
    }

    pub fn rated_edge(
        &mut self,
        relation: &str,
        source_label: &str,
        target_label: &str,
        value: i32,
    ) -> Result<()> {
        self.push_edge(relation, source_label, target_label, Some(value))
    }

    fn push_edge(
        &mut self,
        relation: &str,
        source_label: &str,
        target_label: &str,
        value: Option<i32>,
    ) -> Result<()> {
        let (source, target) = {
            let r = self
                .relations
                .get(relation)
                .ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
            (r.source.clone(), r.target.clone())
        };
        let s = self.node(&source, source_label);
        let t = self.node(&target, target_label);
        let r = self.relations.get_mut(relation).expect("declared above");
        if let Some(v) = value {
            let payload = r.payload.get_or_insert_with(Vec::new);
            if payload.len() != r.edges.len() {
                return Err(Error::InvalidConfig(format!(
                    "relation `{relation}` mixes rated and unrated edges"
                )));
            }
            payload.push(v);
        } else if r.payload.is_some() {
            return Err(Error::InvalidConfig(format!(
                "relation `{relation}` mixes rated and unrated edges"
            )));
        }
        r.edges.push((s, t));
        Ok(())
    }

    pub fn build(self) -> Result<Hin> {
        let groups = self.groups.into_values().collect();
        let links = self
            .relations
            .into_iter()
            .map(|(name, r)| {
                let lg = LinkGroup::new(name, r.source, r.target, r.edges);
                match r.payload {
                    Some(p) => lg.with_payload(p),
                    None => Ok(lg),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        build_hin(groups, links)
    }
}
