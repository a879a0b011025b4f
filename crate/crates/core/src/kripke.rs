//! Finite Kripke models, frame-class predicates and model constructions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("succ({0}) = {1} is not an R-successor of {0}")]
    SuccNotSuccessor(String, String),
    #[error("model has no root")]
    NoRoot,
    #[error("invalid model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
}

/// A finite Kripke model with an optional partial successor map.
///
/// Worlds are addressed by dense indices in the order they were declared;
/// the string ids are kept for input and output.
#[derive(Clone, Debug)]
pub struct KripkeModel {
    name: String,
    worlds: Vec<String>,
    index: HashMap<String, usize>,
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    val: Vec<BTreeSet<String>>,
    succ_map: Vec<Option<usize>>,
}

impl PartialEq for KripkeModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.worlds == other.worlds
            && self.succs == other.succs
            && self.val == other.val
            && self.succ_map == other.succ_map
    }
}

impl Eq for KripkeModel {}

/// On-disk JSON shape of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub worlds: Vec<String>,
    pub rel: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub val: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub succ: BTreeMap<String, String>,
}

impl KripkeModel {
    /// Builds a model from index-based parts, validating every invariant.
    pub fn from_parts(
        name: impl Into<String>,
        worlds: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        val: Vec<BTreeSet<String>>,
        succ_map: Vec<Option<usize>>,
    ) -> Result<Self, ModelError> {
        let n = worlds.len();
        let mut index = HashMap::with_capacity(n);
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        assert_eq!(val.len(), n, "valuation length must match world count");
        assert_eq!(succ_map.len(), n, "successor map length must match world count");
        let mut succs = vec![Vec::new(); n];
        let mut preds = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge endpoint out of range");
            succs[a].push(b);
            preds[b].push(a);
        }
        for list in succs.iter_mut().chain(preds.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        for (w, s) in succ_map.iter().enumerate() {
            if let Some(s) = *s {
                if succs[w].binary_search(&s).is_err() {
                    return Err(ModelError::SuccNotSuccessor(
                        worlds[w].clone(),
                        worlds[s].clone(),
                    ));
                }
            }
        }
        Ok(KripkeModel {
            name: name.into(),
            worlds,
            index,
            succs,
            preds,
            val,
            succ_map,
        })
    }

    /// Builds a model from string-keyed data.
    pub fn new(
        name: impl Into<String>,
        worlds: Vec<String>,
        rel: &[(String, String)],
        val: &BTreeMap<String, Vec<String>>,
        succ: &BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.as_str(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        let look = |w: &str| {
            index
                .get(w)
                .copied()
                .ok_or_else(|| ModelError::UnknownWorld(w.to_string()))
        };
        let edges = rel
            .iter()
            .map(|(a, b)| Ok((look(a)?, look(b)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut v = vec![BTreeSet::new(); worlds.len()];
        for (w, atoms) in val {
            v[look(w)?].extend(atoms.iter().cloned());
        }
        let mut s = vec![None; worlds.len()];
        for (w, t) in succ {
            s[look(w)?] = Some(look(t)?);
        }
        Self::from_parts(name, worlds, edges, v, s)
    }

    pub fn from_file_data(file: ModelFile) -> Result<Self, ModelError> {
        Self::new(file.name, file.worlds, &file.rel, &file.val, &file.succ)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_file_data(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_data(&self) -> ModelFile {
        let rel = self
            .edges()
            .map(|(a, b)| (self.worlds[a].clone(), self.worlds[b].clone()))
            .collect();
        let val = self
            .val
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(w, s)| (self.worlds[w].clone(), s.iter().cloned().collect()))
            .collect();
        let succ = self
            .succ_map
            .iter()
            .enumerate()
            .filter_map(|(w, s)| s.map(|s| (self.worlds[w].clone(), self.worlds[s].clone())))
            .collect();
        ModelFile {
            name: self.name.clone(),
            worlds: self.worlds.clone(),
            rel,
            val,
            succ,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_data()).expect("model serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_name(&self, w: usize) -> &str {
        &self.worlds[w]
    }

    pub fn world_index(&self, id: &str) -> Result<usize, ModelError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| ModelError::UnknownWorld(id.to_string()))
    }

    /// R-successors of `w`, sorted.
    pub fn successors(&self, w: usize) -> &[usize] {
        &self.succs[w]
    }

    /// R-predecessors of `w`, sorted.
    pub fn predecessors(&self, w: usize) -> &[usize] {
        &self.preds[w]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.succs[a].binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(a, bs)| bs.iter().map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    pub fn atoms_at(&self, w: usize) -> &BTreeSet<String> {
        &self.val[w]
    }

    pub fn satisfies_atom(&self, w: usize, atom: &str) -> bool {
        self.val[w].contains(atom)
    }

    /// Every atom true somewhere in the model.
    pub fn atoms(&self) -> BTreeSet<String> {
        self.val.iter().flatten().cloned().collect()
    }

    /// The designated successor of `w`, if any.
    pub fn succ_of(&self, w: usize) -> Option<usize> {
        self.succ_map[w]
    }

    pub fn has_succ_data(&self) -> bool {
        self.succ_map.iter().any(Option::is_some)
    }

    /// The unique world with no incoming edge from another world.
    pub fn root(&self) -> Option<usize> {
        let mut candidates =
            (0..self.len()).filter(|&w| self.preds[w].iter().all(|&v| v == w));
        let first = candidates.next()?;
        candidates.next().is_none().then_some(first)
    }

    pub fn world_set(&self, ids: impl IntoIterator<Item = usize>) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.len());
        s.extend(ids);
        s
    }

    /// Worlds reachable from `w` in zero or more steps, as a bit set.
    pub fn cone(&self, w: usize) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(self.len());
        let mut stack = vec![w];
        seen.insert(w);
        while let Some(v) = stack.pop() {
            for &u in &self.succs[v] {
                if !seen.put(u) {
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Restriction to a set of worlds, preserving their order. Succ entries
    /// leaving the set are dropped.
    pub fn restrict(&self, keep: &FixedBitSet) -> KripkeModel {
        let old: Vec<usize> = keep.ones().collect();
        let mut new_of = vec![usize::MAX; self.len()];
        for (k, &w) in old.iter().enumerate() {
            new_of[w] = k;
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .filter(|&(a, b)| keep.contains(a) && keep.contains(b))
            .map(|(a, b)| (new_of[a], new_of[b]))
            .collect();
        let succ_map = old
            .iter()
            .map(|&w| {
                self.succ_map[w]
                    .filter(|&s| keep.contains(s))
                    .map(|s| new_of[s])
            })
            .collect();
        KripkeModel::from_parts(
            self.name.clone(),
            old.iter().map(|&w| self.worlds[w].clone()).collect(),
            edges,
            old.iter().map(|&w| self.val[w].clone()).collect(),
            succ_map,
        )
        .expect("restriction preserves model invariants")
    }

    /// Renames every world id through `f`.
    pub fn map_world_ids(&self, mut f: impl FnMut(&str) -> String) -> KripkeModel {
        KripkeModel::from_parts(
            self.name.clone(),
            self.worlds.iter().map(|w| f(w)).collect(),
            self.edges().collect::<Vec<_>>(),
            self.val.clone(),
            self.succ_map.clone(),
        )
        .expect("renaming must keep world ids distinct")
    }

    /// Adds `atom` to the valuation of world `w`.
    pub fn with_atom(mut self, w: usize, atom: &str) -> KripkeModel {
        self.val[w].insert(atom.to_string());
        self
    }

    /// Keeps only the listed atoms in the valuation.
    pub fn restrict_atoms(&self, atoms: &BTreeSet<String>) -> KripkeModel {
        let mut m = self.clone();
        for v in m.val.iter_mut() {
            v.retain(|a| atoms.contains(a));
        }
        m
    }
}

/// A model together with one of its worlds.
#[derive(Clone, Copy, Debug)]
pub struct PointedModel<'a> {
    pub model: &'a KripkeModel,
    pub world: usize,
}

impl<'a> PointedModel<'a> {
    pub fn new(model: &'a KripkeModel, world: &str) -> Result<Self, ModelError> {
        Ok(PointedModel {
            model,
            world: model.world_index(world)?,
        })
    }

    pub fn at(model: &'a KripkeModel, world: usize) -> Self {
        assert!(world < model.len(), "world index out of range");
        PointedModel { model, world }
    }

    /// Pointed at the model's root.
    pub fn rooted(model: &'a KripkeModel) -> Result<Self, ModelError> {
        Ok(PointedModel {
            model,
            world: model.root().ok_or(ModelError::NoRoot)?,
        })
    }

    pub fn world_name(&self) -> &'a str {
        self.model.world_name(self.world)
    }
}

impl std::fmt::Display for PointedModel<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.model.name(), self.world_name())
    }
}

// ---------------------------------------------------------------------------
// Frame classes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameClassReport {
    pub transitive: bool,
    pub reflexive: bool,
    pub irreflexive: bool,
    pub serial: bool,
    pub converse_wellfounded: bool,
    pub connected: bool,
    pub locally_connected: bool,
    pub k4: bool,
    pub kd4: bool,
    pub s4: bool,
    pub gl: bool,
    pub tc: bool,
}

pub fn classify(m: &KripkeModel) -> FrameClassReport {
    let transitive = is_transitive(m);
    let reflexive = (0..m.len()).all(|w| m.has_edge(w, w));
    let irreflexive = (0..m.len()).all(|w| !m.has_edge(w, w));
    let serial = (0..m.len()).all(|w| !m.successors(w).is_empty());
    let converse_wellfounded = is_acyclic(m);
    let all = m.world_set(0..m.len());
    let connected = is_connected_within(m, &all);
    let locally_connected =
        (0..m.len()).all(|w| is_connected_within(m, &m.world_set(m.successors(w).iter().copied())));
    let kd4 = transitive && serial;
    FrameClassReport {
        transitive,
        reflexive,
        irreflexive,
        serial,
        converse_wellfounded,
        connected,
        locally_connected,
        k4: transitive,
        kd4,
        s4: transitive && reflexive,
        gl: transitive && converse_wellfounded,
        tc: kd4 && connected && locally_connected,
    }
}

fn is_transitive(m: &KripkeModel) -> bool {
    (0..m.len()).all(|a| {
        m.successors(a)
            .iter()
            .all(|&b| m.successors(b).iter().all(|&c| m.has_edge(a, c)))
    })
}

// No infinite R-chain in a finite frame means no R-cycle; checked by
// repeatedly peeling off worlds without successors.
fn is_acyclic(m: &KripkeModel) -> bool {
    let mut out_deg: Vec<usize> = (0..m.len()).map(|w| m.successors(w).len()).collect();
    let mut queue: Vec<usize> = (0..m.len()).filter(|&w| out_deg[w] == 0).collect();
    let mut removed = 0;
    while let Some(w) = queue.pop() {
        removed += 1;
        for &p in m.predecessors(w) {
            out_deg[p] -= 1;
            if out_deg[p] == 0 {
                queue.push(p);
            }
        }
    }
    removed == m.len()
}

// Whether the worlds in `set` are linked by undirected R-paths inside `set`.
fn is_connected_within(m: &KripkeModel, set: &FixedBitSet) -> bool {
    let Some(start) = set.ones().next() else {
        return true;
    };
    let mut seen = FixedBitSet::with_capacity(m.len());
    seen.insert(start);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &u in m.successors(v).iter().chain(m.predecessors(v)) {
            if set.contains(u) && !seen.put(u) {
                stack.push(u);
            }
        }
    }
    seen.count_ones(..) == set.count_ones(..)
}

// ---------------------------------------------------------------------------
// Constructions

/// Disjoint union. World ids are kept when they are already distinct across
/// components; otherwise every world is tagged `"{component}:{id}"`.
pub fn disjoint_union<'a>(ms: impl IntoIterator<Item = &'a KripkeModel>) -> KripkeModel {
    disjoint_union_with_offsets(ms).0
}

/// Like [`disjoint_union`], also returning the index offset of each component.
pub fn disjoint_union_with_offsets<'a>(
    ms: impl IntoIterator<Item = &'a KripkeModel>,
) -> (KripkeModel, Vec<usize>) {
    let ms: Vec<&KripkeModel> = ms.into_iter().collect();
    let mut seen = BTreeSet::new();
    let unique = ms
        .iter()
        .flat_map(|m| m.worlds.iter())
        .all(|w| seen.insert(w.as_str()));
    let mut worlds = Vec::new();
    let mut edges = Vec::new();
    let mut val = Vec::new();
    let mut succ_map = Vec::new();
    let mut offsets = Vec::with_capacity(ms.len());
    for (k, m) in ms.iter().enumerate() {
        let off = worlds.len();
        offsets.push(off);
        for w in &m.worlds {
            worlds.push(if unique { w.clone() } else { format!("{k}:{w}") });
        }
        edges.extend(m.edges().map(|(a, b)| (a + off, b + off)));
        val.extend(m.val.iter().cloned());
        succ_map.extend(m.succ_map.iter().map(|s| s.map(|s| s + off)));
    }
    let name = format!(
        "union({})",
        ms.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(",")
    );
    let model = KripkeModel::from_parts(name, worlds, edges, val, succ_map)
        .expect("disjoint union preserves invariants");
    (model, offsets)
}

/// The submodel generated by `w`: its reflexive-transitive cone.
pub fn generated_submodel(m: &KripkeModel, w: &str) -> Result<KripkeModel, ModelError> {
    Ok(generated_submodel_at(m, m.world_index(w)?))
}

pub fn generated_submodel_at(m: &KripkeModel, w: usize) -> KripkeModel {
    m.restrict(&m.cone(w))
}

pub const INFINITY_WORLD: &str = "inf";

/// Adds a fresh world `inf` with empty valuation that every world sees,
/// itself included. The successor map is left unchanged.
pub fn hat(m: &KripkeModel) -> KripkeModel {
    let mut inf = INFINITY_WORLD.to_string();
    while m.index.contains_key(&inf) {
        inf.push('\'');
    }
    let n = m.len();
    let mut worlds = m.worlds.clone();
    worlds.push(inf);
    let edges: Vec<(usize, usize)> = m.edges().chain((0..=n).map(|w| (w, n))).collect();
    let mut val = m.val.clone();
    val.push(BTreeSet::new());
    let mut succ_map = m.succ_map.clone();
    succ_map.push(None);
    KripkeModel::from_parts(format!("hat{}", m.name), worlds, edges, val, succ_map)
        .expect("hat preserves invariants")
}

/// Finds the point at infinity of a hatted model: a reflexive world with
/// empty valuation that every world sees and that sees only itself.
pub fn infinity_world(m: &KripkeModel) -> Option<usize> {
    (0..m.len()).rev().find(|&w| {
        m.val[w].is_empty()
            && m.successors(w) == [w]
            && m.predecessors(w).len() == m.len()
    })
}

/// Reflexive-free transitive closure of the relation.
pub fn transitive_closure(m: &KripkeModel) -> KripkeModel {
    let mut reach: Vec<FixedBitSet> = (0..m.len())
        .map(|w| m.world_set(m.successors(w).iter().copied()))
        .collect();
    // Warshall
    for k in 0..m.len() {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row.contains(k) {
                row.union_with(&via);
            }
        }
    }
    let edges: Vec<(usize, usize)> = reach
        .iter()
        .enumerate()
        .flat_map(|(a, r)| r.ones().map(move |b| (a, b)))
        .collect();
    KripkeModel::from_parts(
        m.name.clone(),
        m.worlds.clone(),
        edges,
        m.val.clone(),
        m.succ_map.clone(),
    )
    .expect("closure keeps succ edges")
}

/// Result of quotienting a model by its maximal auto-bisimulation.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub model: KripkeModel,
    /// Class (a world index of `model`) of each original world.
    pub class_of: Vec<usize>,
}

impl Quotient {
    /// Class id (world id in the quotient) of an original world id.
    pub fn class_id(&self, original: &KripkeModel, w: &str) -> Result<&str, ModelError> {
        Ok(self
            .model
            .world_name(self.class_of[original.world_index(w)?]))
    }
}

/// Coarsest partition of the worlds that respects the atoms in `atoms` and
/// is stable under successor classes. Classes are numbered in order of
/// their first world.
pub fn bisimulation_classes(m: &KripkeModel, atoms: &BTreeSet<String>) -> Vec<usize> {
    let mut class: Vec<usize> = renumber(
        (0..m.len())
            .map(|w| m.val[w].intersection(atoms).cloned().collect::<Vec<_>>())
            .collect(),
    );
    loop {
        let keys: Vec<(usize, Vec<usize>)> = (0..m.len())
            .map(|w| {
                let mut cs: Vec<usize> = m.successors(w).iter().map(|&s| class[s]).collect();
                cs.sort_unstable();
                cs.dedup();
                (class[w], cs)
            })
            .collect();
        let next = renumber(keys);
        let done = next.iter().max() == class.iter().max();
        class = next;
        if done {
            return class;
        }
    }
}

fn renumber<K: Ord + Clone>(keys: Vec<K>) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    let mut out = Vec::with_capacity(keys.len());
    for k in keys {
        let next = ids.len();
        out.push(*ids.entry(k).or_insert(next));
    }
    out
}

/// Collapses bisimilar worlds (relative to `atoms`). Each class is named
/// after its first world; the valuation is restricted to `atoms` and the
/// successor map is dropped.
pub fn quotient_by_bisim(m: &KripkeModel, atoms: &BTreeSet<String>) -> Quotient {
    let class_of = bisimulation_classes(m, atoms);
    let count = class_of.iter().max().map_or(0, |c| c + 1);
    let mut rep = vec![usize::MAX; count];
    for (w, &c) in class_of.iter().enumerate() {
        if rep[c] == usize::MAX {
            rep[c] = w;
        }
    }
    let edges: Vec<(usize, usize)> = m.edges().map(|(a, b)| (class_of[a], class_of[b])).collect();
    let model = KripkeModel::from_parts(
        format!("{}/~", m.name),
        rep.iter().map(|&w| m.worlds[w].clone()).collect(),
        edges,
        rep.iter()
            .map(|&w| m.val[w].intersection(atoms).cloned().collect())
            .collect(),
        vec![None; count],
    )
    .expect("quotient preserves invariants");
    Quotient { model, class_of }
}

/// Searches for an isomorphism from `m1` to `m2`: a bijection on worlds
/// preserving the relation, the valuation and, when both models carry
/// successor data, the successor map. Returns `bijection[w1] = w2`.
pub fn isomorphic(m1: &KripkeModel, m2: &KripkeModel) -> Option<Vec<usize>> {
    if m1.len() != m2.len() || m1.edge_count() != m2.edge_count() {
        return None;
    }
    let use_succ = m1.has_succ_data() && m2.has_succ_data();
    let (colours1, colours2) = joint_colours(m1, m2, use_succ);
    let mut c1 = colours1.clone();
    let mut c2 = colours2.clone();
    c1.sort_unstable();
    c2.sort_unstable();
    if c1 != c2 {
        return None;
    }
    let mut map = vec![usize::MAX; m1.len()];
    let mut used = vec![false; m2.len()];
    let order: Vec<usize> = (0..m1.len()).collect();
    let ok = extend_iso(
        m1, m2, use_succ, &colours1, &colours2, &order, 0, &mut map, &mut used,
    );
    ok.then_some(map)
}

// Colour refinement run on both models at once, so colours are comparable.
fn joint_colours(m1: &KripkeModel, m2: &KripkeModel, use_succ: bool) -> (Vec<usize>, Vec<usize>) {
    let (u, off) = disjoint_union_with_offsets([m1, m2]);
    let initial: Vec<(Vec<String>, bool, bool)> = (0..u.len())
        .map(|w| {
            (
                u.val[w].iter().cloned().collect(),
                u.has_edge(w, w),
                use_succ && u.succ_map[w].is_some(),
            )
        })
        .collect();
    let mut colour = renumber(initial);
    loop {
        let keys: Vec<_> = (0..u.len())
            .map(|w| {
                let mut out: Vec<usize> = u.successors(w).iter().map(|&s| colour[s]).collect();
                let mut inn: Vec<usize> = u.predecessors(w).iter().map(|&s| colour[s]).collect();
                out.sort_unstable();
                inn.sort_unstable();
                let sc = if use_succ {
                    u.succ_map[w].map(|s| colour[s])
                } else {
                    None
                };
                (colour[w], out, inn, sc)
            })
            .collect();
        let next = renumber(keys);
        let done = next.iter().max() == colour.iter().max();
        colour = next;
        if done {
            break;
        }
    }
    let split = off[1];
    (colour[..split].to_vec(), colour[split..].to_vec())
}

#[allow(clippy::too_many_arguments)]
fn extend_iso(
    m1: &KripkeModel,
    m2: &KripkeModel,
    use_succ: bool,
    col1: &[usize],
    col2: &[usize],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&a) = order.get(depth) else {
        return true;
    };
    for x in 0..m2.len() {
        if used[x] || col2[x] != col1[a] {
            continue;
        }
        let consistent = order[..depth].iter().all(|&b| {
            let y = map[b];
            m1.has_edge(a, b) == m2.has_edge(x, y) && m1.has_edge(b, a) == m2.has_edge(y, x)
        }) && m1.has_edge(a, a) == m2.has_edge(x, x)
            && (!use_succ
                || order[..=depth].iter().all(|&b| {
                    let y = if b == a { x } else { map[b] };
                    let s1 = m1.succ_map[b];
                    let s2 = m2.succ_map[y];
                    match (s1, s2) {
                        (None, None) => true,
                        (Some(s1), Some(s2)) => {
                            let img = if s1 == a { Some(x) } else if map[s1] != usize::MAX { Some(map[s1]) } else { None };
                            img.is_none_or(|i| i == s2)
                        }
                        _ => false,
                    }
                }));
        if !consistent {
            continue;
        }
        map[a] = x;
        used[x] = true;
        if extend_iso(m1, m2, use_succ, col1, col2, order, depth + 1, map, used) {
            return true;
        }
        map[a] = usize::MAX;
        used[x] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(json: &str) -> KripkeModel {
        KripkeModel::from_json(json).unwrap()
    }

    fn three_tree() -> KripkeModel {
        model(
            r#"{"name":"t","worlds":["r","a","b"],"rel":[["r","a"],["r","b"]],
                "val":{"b":["p1"]},"succ":{"r":"b"}}"#,
        )
    }

    #[test]
    fn json_round_trip() {
        let m = three_tree();
        let back = KripkeModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            KripkeModel::from_json(r#"{"name":"x","worlds":["a","a"],"rel":[]}"#),
            Err(ModelError::DuplicateWorld(_))
        ));
        assert!(matches!(
            KripkeModel::from_json(r#"{"name":"x","worlds":["a"],"rel":[["a","b"]]}"#),
            Err(ModelError::UnknownWorld(_))
        ));
        assert!(matches!(
            KripkeModel::from_json(r#"{"name":"x","worlds":["a","b"],"rel":[],"succ":{"a":"b"}}"#),
            Err(ModelError::SuccNotSuccessor(..))
        ));
        assert!(matches!(
            KripkeModel::from_json(r#"{"name":"x","worlds":[],"rel":[],"extra":1}"#),
            Err(ModelError::Json(_))
        ));
    }

    #[test]
    fn classify_tree_and_hat() {
        let m = three_tree();
        let r = classify(&m);
        assert!(r.k4 && r.gl && !r.serial && r.connected && !r.locally_connected);
        let h = classify(&hat(&m));
        assert!(h.tc && h.kd4 && !h.gl);
        let point = model(r#"{"name":"p","worlds":["w"],"rel":[["w","w"]]}"#);
        let r = classify(&point);
        assert!(r.s4 && !r.gl);
    }

    #[test]
    fn cycle_without_loops_is_not_wellfounded() {
        let m = model(r#"{"name":"c","worlds":["a","b"],"rel":[["a","b"],["b","a"]]}"#);
        let r = classify(&m);
        assert!(r.irreflexive && !r.converse_wellfounded && !r.transitive);
    }

    #[test]
    fn hat_of_point() {
        let b = model(r#"{"name":"B1_1","worlds":["b"],"rel":[]}"#);
        let h = hat(&b);
        assert_eq!(h.worlds(), ["b", "inf"]);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 1)]);
        assert_eq!(infinity_world(&h), Some(1));
        assert_eq!(infinity_world(&b), None);
    }

    #[test]
    fn union_tags_clashing_ids() {
        let m = three_tree();
        let u = disjoint_union([&m, &m]);
        assert_eq!(u.len(), 6);
        assert_eq!(u.world_name(3), "1:r");
        assert_eq!(u.succ_of(3), Some(5));
    }

    #[test]
    fn generated_submodel_cone() {
        let m = three_tree();
        assert_eq!(generated_submodel(&m, "r").unwrap(), m);
        let s = generated_submodel(&m, "b").unwrap();
        assert_eq!(s.worlds(), ["b"]);
        assert!(matches!(generated_submodel(&m, "zz"), Err(ModelError::UnknownWorld(_))));
    }

    #[test]
    fn quotient_collapses_twins() {
        let m = model(
            r#"{"name":"q","worlds":["a","b"],"rel":[],"val":{"a":["p"],"b":["p"]}}"#,
        );
        let q = quotient_by_bisim(&m, &m.atoms());
        assert_eq!(q.model.len(), 1);
        assert_eq!(q.class_of, vec![0, 0]);
    }

    #[test]
    fn isomorphism_search() {
        let m = three_tree();
        assert_eq!(isomorphic(&m, &m), Some(vec![0, 1, 2]));
        let swapped = model(
            r#"{"name":"t","worlds":["r","b","a"],"rel":[["r","a"],["r","b"]],
                "val":{"b":["p1"]},"succ":{"r":"b"}}"#,
        );
        assert_eq!(isomorphic(&m, &swapped), Some(vec![0, 2, 1]));
        let other_succ = model(
            r#"{"name":"t","worlds":["r","a","b"],"rel":[["r","a"],["r","b"]],
                "val":{"b":["p1"]},"succ":{"r":"a"}}"#,
        );
        assert_eq!(isomorphic(&m, &other_succ), None);
    }

    #[test]
    fn closure_is_transitive() {
        let m = model(r#"{"name":"c","worlds":["a","b","c"],"rel":[["a","b"],["b","c"]]}"#);
        let t = transitive_closure(&m);
        assert!(classify(&t).transitive);
        assert!(t.has_edge(0, 2));
        assert!(!classify(&m).transitive);
    }
}
