//! Bisimulations and confluent relations between finite models.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::kripke::{KripkeModel, PointedModel};

/// A relation between the worlds of two models, as index pairs.
#[derive(Clone, Debug)]
pub struct Relation<'a> {
    pub left: &'a KripkeModel,
    pub right: &'a KripkeModel,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl<'a> Relation<'a> {
    pub fn new(left: &'a KripkeModel, right: &'a KripkeModel) -> Self {
        Relation {
            left,
            right,
            pairs: BTreeSet::new(),
        }
    }

    pub fn identity(m: &'a KripkeModel) -> Self {
        Relation {
            left: m,
            right: m,
            pairs: (0..m.len()).map(|w| (w, w)).collect(),
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn converse(&self) -> Relation<'a> {
        Relation {
            left: self.right,
            right: self.left,
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    /// Pairs as world ids.
    pub fn id_pairs(&self) -> Vec<(&'a str, &'a str)> {
        self.pairs
            .iter()
            .map(|&(a, b)| (self.left.world_name(a), self.right.world_name(b)))
            .collect()
    }

    fn matrix(&self) -> Vec<FixedBitSet> {
        let mut rows = vec![FixedBitSet::with_capacity(self.right.len()); self.left.len()];
        for &(a, b) in &self.pairs {
            rows[a].insert(b);
        }
        rows
    }
}

/// Atoms occurring in either model; the default vocabulary for comparisons.
pub fn default_atoms(a: &KripkeModel, b: &KripkeModel) -> BTreeSet<String> {
    let mut atoms = a.atoms();
    atoms.extend(b.atoms());
    atoms
}

fn agree(a: &KripkeModel, x: usize, b: &KripkeModel, y: usize, atoms: &BTreeSet<String>) -> bool {
    atoms
        .iter()
        .all(|p| a.satisfies_atom(x, p) == b.satisfies_atom(y, p))
}

// Forth: every successor of x is matched by some successor of y.
fn forth(a: &KripkeModel, b: &KripkeModel, rows: &[FixedBitSet], x: usize, y: usize) -> bool {
    a.successors(x)
        .iter()
        .all(|&x2| b.successors(y).iter().any(|&y2| rows[x2].contains(y2)))
}

fn back(a: &KripkeModel, b: &KripkeModel, rows: &[FixedBitSet], x: usize, y: usize) -> bool {
    b.successors(y)
        .iter()
        .all(|&y2| a.successors(x).iter().any(|&x2| rows[x2].contains(y2)))
}

/// The largest bisimulation relative to `atoms` (all atoms of both models
/// when `None`), by removing violating pairs until nothing changes.
pub fn max_bisimulation<'a>(
    a: &'a KripkeModel,
    b: &'a KripkeModel,
    atoms: Option<&BTreeSet<String>>,
) -> Relation<'a> {
    let owned;
    let atoms = match atoms {
        Some(q) => q,
        None => {
            owned = default_atoms(a, b);
            &owned
        }
    };
    let mut rows = vec![FixedBitSet::with_capacity(b.len()); a.len()];
    for (x, row) in rows.iter_mut().enumerate() {
        for y in 0..b.len() {
            if agree(a, x, b, y, atoms) {
                row.insert(y);
            }
        }
    }
    loop {
        let mut removed = Vec::new();
        for (x, row) in rows.iter().enumerate() {
            for y in row.ones() {
                if !forth(a, b, &rows, x, y) || !back(a, b, &rows, x, y) {
                    removed.push((x, y));
                }
            }
        }
        if removed.is_empty() {
            break;
        }
        for (x, y) in removed {
            rows[x].set(y, false);
        }
    }
    Relation {
        left: a,
        right: b,
        pairs: rows
            .iter()
            .enumerate()
            .flat_map(|(x, r)| r.ones().map(move |y| (x, y)))
            .collect(),
    }
}

pub fn locally_bisimilar(
    pa: PointedModel<'_>,
    pb: PointedModel<'_>,
    atoms: Option<&BTreeSet<String>>,
) -> bool {
    max_bisimulation(pa.model, pb.model, atoms).contains(pa.world, pb.world)
}

/// Whether the largest bisimulation is total on `a` and surjective onto `b`.
pub fn globally_bisimilar(a: &KripkeModel, b: &KripkeModel, atoms: Option<&BTreeSet<String>>) -> bool {
    let z = max_bisimulation(a, b, atoms);
    let lefts: BTreeSet<usize> = z.pairs.iter().map(|p| p.0).collect();
    let rights: BTreeSet<usize> = z.pairs.iter().map(|p| p.1).collect();
    lefts.len() == a.len() && rights.len() == b.len()
}

/// Forward confluence for Kripke operators: whenever x χ y and x R x',
/// some y R y' has x' χ y'.
pub fn is_forward_confluent(r: &Relation<'_>) -> bool {
    let rows = r.matrix();
    r.pairs
        .iter()
        .all(|&(x, y)| forth(r.left, r.right, &rows, x, y))
}

/// Backward confluence: forward confluence of the converse relation.
pub fn is_backward_confluent(r: &Relation<'_>) -> bool {
    is_forward_confluent(&r.converse())
}

/// Atom agreement on every pair plus both confluence conditions.
pub fn is_bisimulation(r: &Relation<'_>, atoms: &BTreeSet<String>) -> bool {
    r.pairs
        .iter()
        .all(|&(x, y)| agree(r.left, x, r.right, y, atoms))
        && is_forward_confluent(r)
        && is_backward_confluent(r)
}
