//! The formulas φₙ, ψₙ and the model families 𝒜ⁿ, ℬⁿ built from them.
//!
//! Level-1 models are single points (`A1_1` with `p1`, `B1_1` blank) and the
//! three-world `A1_2` / two-world `B1_2`. Level `n+1` model `i` is either a
//! copy of level-`n` model `i` with `p_{n+1}` added at the root (for
//! `i ≤ 2ⁿ`), or, for `i = 2ⁿ + j`, a fresh blank root over the successor
//! cones of `A^{n+1}_2 .. A^{n+1}_{2ⁿ}` plus `B^{n+1}_j` (and `A^{n+1}_j` on
//! the A side), whose designated successor is the root of the `j` component.
//!
//! World ids are path-qualified: the root of `A2_4` is `A2_4/w0`, a
//! component model `C` embedded in `P` keeps its ids under `P/`, and a
//! successor cone of `C` is embedded under `P/S`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::max_bisimulation;
use crate::formula::Formula;
use crate::kripke::{self, disjoint_union_with_offsets, KripkeModel, PointedModel};
use crate::translate::expand_closure;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("family index n={n}, i={i} out of range (need n >= 1 and 1 <= i <= 2^n)")]
    IndexOutOfRange { n: u32, i: u64 },
    #[error("model has no root")]
    NoRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Address of one family model; `i` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyIndex {
    pub n: u32,
    pub i: u64,
    pub side: Side,
    pub hatted: bool,
}

impl FamilyIndex {
    pub fn new(side: Side, n: u32, i: u64) -> Self {
        FamilyIndex {
            n,
            i,
            side,
            hatted: false,
        }
    }

    pub fn hatted(mut self) -> Self {
        self.hatted = true;
        self
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.n == 0 || self.n > 20 || self.i == 0 || self.i > 1u64 << self.n {
            return Err(FamilyError::IndexOutOfRange {
                n: self.n,
                i: self.i,
            });
        }
        Ok(())
    }

    /// Model name, e.g. `A2_4`.
    pub fn base_name(&self) -> String {
        format!("{}{}_{}", self.side, self.n, self.i)
    }
}

/// φ₁ = `<+> p1`, φₙ₊₁ = `<+>(p_{n+1} & φₙ)`.
pub fn phi(n: u32) -> Formula {
    assert!(n >= 1, "phi is defined for n >= 1");
    let mut f = Formula::dia_plus(Formula::atom("p1"));
    for k in 2..=n {
        f = Formula::dia_plus(Formula::and(Formula::atom(format!("p{k}")), f));
    }
    f
}

/// ψₙ: φₙ with every closure unfolded into the basic modal language.
pub fn psi(n: u32) -> Formula {
    expand_closure(&phi(n))
}

/// Memoizing generator for family models.
#[derive(Default)]
pub struct FamilyBuilder {
    cache: HashMap<(Side, u32, u64), Rc<KripkeModel>>,
}

impl FamilyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(&mut self, idx: FamilyIndex) -> Result<KripkeModel, FamilyError> {
        idx.validate()?;
        let base = self.base(idx.side, idx.n, idx.i);
        Ok(if idx.hatted {
            kripke::hat(&base)
        } else {
            (*base).clone()
        })
    }

    /// All models of one side at level `n`, in index order.
    pub fn level(&mut self, side: Side, n: u32, hatted: bool) -> Result<Vec<KripkeModel>, FamilyError> {
        (1..=1u64 << n)
            .map(|i| {
                let mut idx = FamilyIndex::new(side, n, i);
                idx.hatted = hatted;
                self.build(idx)
            })
            .collect()
    }

    fn base(&mut self, side: Side, n: u32, i: u64) -> Rc<KripkeModel> {
        if let Some(m) = self.cache.get(&(side, n, i)) {
            return m.clone();
        }
        let name = FamilyIndex::new(side, n, i).base_name();
        let half = 1u64 << (n - 1);
        let model = if n == 1 && i == 1 {
            let val = match side {
                Side::A => BTreeSet::from(["p1".to_string()]),
                Side::B => BTreeSet::new(),
            };
            KripkeModel::from_parts(name.clone(), vec![format!("{name}/w0")], [], vec![val], vec![None])
                .expect("point model")
        } else if i <= half {
            let prev = self.base(side, n - 1, i);
            let old = prev.name().to_string();
            let copy = prev
                .map_world_ids(|w| format!("{name}{}", &w[old.len()..]))
                .renamed(name.clone());
            let root = copy.root().expect("family models are rooted");
            copy.with_atom(root, &format!("p{n}"))
        } else {
            let j = i - half;
            let cones: Vec<KripkeModel> = (2..=half)
                .map(|k| {
                    let ak = self.base(Side::A, n, k);
                    let root = ak.root().expect("family models are rooted");
                    let s = ak.succ_of(root).expect("A models with index >= 2 have a successor");
                    let cone = kripke::generated_submodel_at(&ak, s);
                    cone.map_world_ids(|w| format!("{name}/S{w}"))
                })
                .collect();
            let bj = self.base(Side::B, n, j);
            let aj = self.base(Side::A, n, j);
            let mut parts: Vec<(KripkeModel, bool)> = cones.into_iter().map(|c| (c, false)).collect();
            let j_part = match side {
                Side::B => {
                    parts.push((bj.map_world_ids(|w| format!("{name}/{w}")), true));
                    parts.len() - 1
                }
                Side::A => {
                    parts.push((bj.map_world_ids(|w| format!("{name}/{w}")), false));
                    parts.push((aj.map_world_ids(|w| format!("{name}/{w}")), true));
                    parts.len() - 1
                }
            };
            add_root(&name, &parts, j_part)
        };
        let model = Rc::new(model);
        self.cache.insert((side, n, i), model.clone());
        model
    }
}

// Fresh blank root seeing every world of the union of `parts`. Only the
// successor map of the designated part survives, extended by root -> its root.
fn add_root(name: &str, parts: &[(KripkeModel, bool)], j_part: usize) -> KripkeModel {
    let (u, offsets) = disjoint_union_with_offsets(parts.iter().map(|(m, _)| m));
    let n = u.len();
    let mut worlds = vec![format!("{name}/w0")];
    worlds.extend(u.worlds().iter().cloned());
    let mut edges: Vec<(usize, usize)> = (1..=n).map(|w| (0, w)).collect();
    edges.extend(u.edges().map(|(a, b)| (a + 1, b + 1)));
    let mut val = vec![BTreeSet::new()];
    val.extend((0..n).map(|w| u.atoms_at(w).clone()));
    let j_start = offsets[j_part];
    let j_end = offsets.get(j_part + 1).copied().unwrap_or(n);
    let j_root = parts[j_part].0.root().expect("family models are rooted") + j_start;
    let mut succ = vec![Some(j_root + 1)];
    succ.extend((0..n).map(|w| {
        if (j_start..j_end).contains(&w) {
            u.succ_of(w).map(|s| s + 1)
        } else {
            None
        }
    }));
    KripkeModel::from_parts(name, worlds, edges, val, succ).expect("family construction is valid")
}

/// Builds one family model.
pub fn build(idx: FamilyIndex) -> Result<KripkeModel, FamilyError> {
    FamilyBuilder::new().build(idx)
}

/// The amalgam 𝒞ⁿ (or Ĉⁿ) together with the positions of the family roots.
#[derive(Debug, Clone)]
pub struct Amalgam {
    pub model: KripkeModel,
    pub a_roots: Vec<usize>,
    pub b_roots: Vec<usize>,
}

/// Disjoint union of all of 𝒜ⁿ followed by all of ℬⁿ; hatted afterwards
/// when requested.
pub fn amalgam(n: u32, hatted: bool) -> Result<Amalgam, FamilyError> {
    let mut fb = FamilyBuilder::new();
    let mut parts = fb.level(Side::A, n, false)?;
    parts.extend(fb.level(Side::B, n, false)?);
    let (u, offsets) = disjoint_union_with_offsets(parts.iter());
    let roots: Vec<usize> = parts
        .iter()
        .zip(&offsets)
        .map(|(m, off)| m.root().expect("family models are rooted") + off)
        .collect();
    let half = parts.len() / 2;
    let name = format!("C{n}");
    let model = if hatted {
        kripke::hat(&u.renamed(name))
    } else {
        u.renamed(name)
    };
    Ok(Amalgam {
        model,
        a_roots: roots[..half].to_vec(),
        b_roots: roots[half..].to_vec(),
    })
}

#[allow(non_snake_case)]
pub fn big_C(n: u32, hatted: bool) -> Result<KripkeModel, FamilyError> {
    Ok(amalgam(n, hatted)?.model)
}

/// The maximal successor chain from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalBranch {
    pub worlds: Vec<String>,
    pub height: usize,
}

fn branch_indices(m: &KripkeModel) -> Result<Vec<usize>, FamilyError> {
    let mut w = m.root().ok_or(FamilyError::NoRoot)?;
    let mut out = vec![w];
    while let Some(s) = m.succ_of(w) {
        if out.len() > m.len() {
            break;
        }
        out.push(s);
        w = s;
    }
    Ok(out)
}

pub fn critical_branch(m: &KripkeModel) -> Result<CriticalBranch, FamilyError> {
    let idx = branch_indices(m)?;
    Ok(CriticalBranch {
        height: idx.len() - 1,
        worlds: idx.iter().map(|&w| m.world_name(w).to_string()).collect(),
    })
}

/// Sʳ of the root, if the chain is that long.
pub fn successor_power(m: &KripkeModel, r: usize) -> Option<usize> {
    branch_indices(m).ok()?.get(r).copied()
}

/// Least depth at which the two critical branches disagree on an atom.
pub fn distinguishing_value(m1: &KripkeModel, m2: &KripkeModel) -> Result<Option<usize>, FamilyError> {
    let b1 = branch_indices(m1)?;
    let b2 = branch_indices(m2)?;
    Ok(b1
        .iter()
        .zip(&b2)
        .position(|(&x, &y)| m1.atoms_at(x) != m2.atoms_at(y)))
}

/// The three pointed models of the closed game tree example: two on the left
/// and one on the right, all rooted at `r`, over the single atom `p`.
pub fn game_example_models() -> (Vec<KripkeModel>, KripkeModel) {
    let mk = |json: &str| KripkeModel::from_json(json).expect("example model");
    let a1 = mk(r#"{"name":"ExA1","worlds":["r","x","y","z"],
        "rel":[["r","x"],["x","y"],["r","z"]],"val":{"y":["p"],"z":["p"]}}"#);
    let a2 = mk(r#"{"name":"ExA2","worlds":["r","u","v"],
        "rel":[["r","u"],["r","v"]],"val":{"u":["p"],"v":["p"]}}"#);
    let b = mk(r#"{"name":"ExB","worlds":["r","u","v"],
        "rel":[["r","u"],["r","v"]],"val":{"v":["p"]}}"#);
    (vec![a1, a2], b)
}

/// Outcome of checking the three box-move clauses on one level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BoxMoveReport {
    pub special_pairs_checked: usize,
    pub box_one_checked: usize,
    pub box_two_checked: usize,
    pub failures: Vec<String>,
}

/// Checks, with the bisimulation engine, that for twins (a, b) of every
/// height: (i) every successor of a other than S(a) has a bisimilar
/// successor of b; (ii) every successor of b has a bisimilar successor of a;
/// and (iii) for i < j with equal critical height m and distinguishing value
/// r < m, S^{r+1}(aᵢ) is bisimilar to some successor of S^r(bⱼ).
pub fn check_box_move_clauses(n: u32, hatted: bool) -> Result<BoxMoveReport, FamilyError> {
    let mut fb = FamilyBuilder::new();
    let a_models = fb.level(Side::A, n, hatted)?;
    let b_models = fb.level(Side::B, n, hatted)?;
    let mut report = BoxMoveReport::default();
    for (i, (am, bm)) in a_models.iter().zip(&b_models).enumerate() {
        let z = max_bisimulation(am, bm, None);
        let ba = branch_indices(am)?;
        let bb = branch_indices(bm)?;
        for (r, (&a, &b)) in ba.iter().zip(&bb).enumerate() {
            let s_a = am.succ_of(a);
            for &a2 in am.successors(a) {
                if Some(a2) == s_a {
                    continue;
                }
                report.special_pairs_checked += 1;
                if !bm.successors(b).iter().any(|&b2| z.contains(a2, b2)) {
                    report.failures.push(format!(
                        "(i) twins {} height {r}: {} unmatched",
                        i + 1,
                        am.world_name(a2)
                    ));
                }
            }
            for &b2 in bm.successors(b) {
                report.box_one_checked += 1;
                if !am.successors(a).iter().any(|&a2| z.contains(a2, b2)) {
                    report.failures.push(format!(
                        "(ii) twins {} height {r}: {} unmatched",
                        i + 1,
                        bm.world_name(b2)
                    ));
                }
            }
        }
    }
    for (i, am) in a_models.iter().enumerate() {
        for (j, bm) in b_models.iter().enumerate().skip(i + 1) {
            let ha = branch_indices(am)?;
            let hb = branch_indices(bm)?;
            if ha.len() != hb.len() {
                continue;
            }
            let m = ha.len() - 1;
            let Some(r) = distinguishing_value(am, bm)? else {
                continue;
            };
            if r >= m {
                continue;
            }
            report.box_two_checked += 1;
            let z = max_bisimulation(am, bm, None);
            let target = ha[r + 1];
            if !bm.successors(hb[r]).iter().any(|&b2| z.contains(target, b2)) {
                report.failures.push(format!(
                    "(iii) A{n}_{} vs B{n}_{} at r={r}",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    Ok(report)
}

/// Pointed models at the roots of a list of rooted models.
pub fn roots(models: &[KripkeModel]) -> Vec<PointedModel<'_>> {
    models
        .iter()
        .map(|m| PointedModel::rooted(m).expect("family models are rooted"))
        .collect()
}
