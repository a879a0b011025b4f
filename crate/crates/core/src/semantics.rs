//! Model checking for the full language on finite Kripke models.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{self, Formula, FreshVars};
use crate::kripke::{KripkeModel, PointedModel};

/// A set of worlds of one model, indexed by world order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthSet {
    bits: FixedBitSet,
}

impl TruthSet {
    pub fn empty(m: &KripkeModel) -> Self {
        TruthSet {
            bits: FixedBitSet::with_capacity(m.len()),
        }
    }

    pub fn full(m: &KripkeModel) -> Self {
        let mut bits = FixedBitSet::with_capacity(m.len());
        bits.insert_range(..);
        TruthSet { bits }
    }

    pub fn from_bits(bits: FixedBitSet) -> Self {
        TruthSet { bits }
    }

    pub fn from_worlds(m: &KripkeModel, worlds: impl IntoIterator<Item = usize>) -> Self {
        TruthSet {
            bits: m.world_set(worlds),
        }
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn contains(&self, w: usize) -> bool {
        self.bits.contains(w)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len()
    }

    pub fn is_subset(&self, other: &TruthSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// World ids of the members, in world order.
    pub fn world_ids<'m>(&self, m: &'m KripkeModel) -> Vec<&'m str> {
        self.ones().map(|w| m.world_name(w)).collect()
    }

    pub fn union(&self, other: &TruthSet) -> TruthSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        TruthSet { bits }
    }

    pub fn intersection(&self, other: &TruthSet) -> TruthSet {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        TruthSet { bits }
    }

    pub fn complement(&self) -> TruthSet {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        TruthSet { bits }
    }
}

/// Overrides for atoms, used for fixpoint variables and random valuations.
pub type Valuation = HashMap<String, TruthSet>;

/// R⁻¹[X]: worlds with some successor in X.
pub fn preimage(m: &KripkeModel, x: &FixedBitSet) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(m.len());
    for w in x.ones() {
        out.extend(m.predecessors(w).iter().copied());
    }
    out
}

/// Worlds all of whose successors lie in X.
pub fn dual_preimage(m: &KripkeModel, x: &FixedBitSet) -> FixedBitSet {
    let mut comp = x.clone();
    comp.toggle_range(..);
    let mut out = preimage(m, &comp);
    out.toggle_range(..);
    out
}

struct Evaluator<'a> {
    m: &'a KripkeModel,
    base: Option<&'a Valuation>,
    // bound fixpoint variables, innermost last
    env: Vec<(String, FixedBitSet)>,
}

impl Evaluator<'_> {
    fn atom(&self, p: &str) -> FixedBitSet {
        if let Some((_, s)) = self.env.iter().rev().find(|(q, _)| q == p) {
            return s.clone();
        }
        if let Some(s) = self.base.and_then(|v| v.get(p)) {
            return s.bits.clone();
        }
        // atoms absent from the model's valuation are false everywhere
        self.m
            .world_set((0..self.m.len()).filter(|&w| self.m.satisfies_atom(w, p)))
    }

    fn full(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.m.len());
        s.insert_range(..);
        s
    }

    fn eval(&mut self, f: &Formula) -> FixedBitSet {
        let n = self.m.len();
        match f {
            Formula::Top => self.full(),
            Formula::Bot => FixedBitSet::with_capacity(n),
            Formula::Atom(p) => self.atom(p),
            Formula::NegAtom(p) => {
                let mut s = self.atom(p);
                s.toggle_range(..);
                s
            }
            Formula::And(l, r) => {
                let mut s = self.eval(l);
                s.intersect_with(&self.eval(r));
                s
            }
            Formula::Or(l, r) => {
                let mut s = self.eval(l);
                s.union_with(&self.eval(r));
                s
            }
            Formula::Dia(b) => preimage(self.m, &self.eval(b)),
            Formula::Box(b) => dual_preimage(self.m, &self.eval(b)),
            Formula::DiaPlus(b) => {
                let mut s = self.eval(b);
                s.union_with(&preimage(self.m, &s));
                s
            }
            Formula::BoxPlus(b) => {
                let mut s = self.eval(b);
                s.intersect_with(&dual_preimage(self.m, &s));
                s
            }
            Formula::Exists(b) => {
                if self.eval(b).is_clear() {
                    FixedBitSet::with_capacity(n)
                } else {
                    self.full()
                }
            }
            Formula::Forall(b) => {
                if self.eval(b).count_ones(..) == n {
                    self.full()
                } else {
                    FixedBitSet::with_capacity(n)
                }
            }
            Formula::Mu(p, b) => self.fixpoint(p, b, FixedBitSet::with_capacity(n), None),
            Formula::Nu(p, b) => {
                let start = self.full();
                self.fixpoint(p, b, start, None)
            }
            Formula::TangleDia(bodies) => self.tangle(bodies),
            Formula::TangleBox(bodies) => {
                let duals: Vec<Formula> = bodies.iter().map(Formula::dual).collect();
                let mut s = self.tangle(&duals);
                s.toggle_range(..);
                s
            }
        }
    }

    // Simultaneous iteration from `start` until stable.
    fn fixpoint(
        &mut self,
        p: &str,
        body: &Formula,
        start: FixedBitSet,
        mut trace: Option<&mut Vec<FixedBitSet>>,
    ) -> FixedBitSet {
        let mut cur = start;
        loop {
            if let Some(t) = trace.as_deref_mut() {
                t.push(cur.clone());
            }
            self.env.push((p.to_string(), cur.clone()));
            let next = self.eval(body);
            self.env.pop();
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    // Largest S with S ⊆ R⁻¹[S ∩ ⟦φ⟧] for every body φ.
    fn tangle(&mut self, bodies: &[Formula]) -> FixedBitSet {
        let sets: Vec<FixedBitSet> = bodies.iter().map(|b| self.eval(b)).collect();
        tangle_sets(self.m, &sets)
    }
}

/// Greatest fixed point of S ↦ ⋂ᵢ R⁻¹[S ∩ Xᵢ], iterated from the full set.
pub fn tangle_sets(m: &KripkeModel, sets: &[FixedBitSet]) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(m.len());
    s.insert_range(..);
    loop {
        let mut next = s.clone();
        for x in sets {
            let mut meet = s.clone();
            meet.intersect_with(x);
            next.intersect_with(&preimage(m, &meet));
        }
        if next == s {
            return s;
        }
        s = next;
    }
}

/// Truth set of `f` on `m`. Atoms not mentioned by the model's valuation
/// (nor by `v`) are false everywhere.
pub fn eval(m: &KripkeModel, f: &Formula, v: Option<&Valuation>) -> TruthSet {
    let mut ev = Evaluator {
        m,
        base: v,
        env: Vec::new(),
    };
    TruthSet::from_bits(ev.eval(f))
}

pub fn holds(pm: PointedModel<'_>, f: &Formula) -> bool {
    eval(pm.model, f, None).contains(pm.world)
}

/// Direct evaluation of `<*>{bodies}`.
pub fn tangle_direct(m: &KripkeModel, bodies: &[Formula], v: Option<&Valuation>) -> TruthSet {
    assert!(!bodies.is_empty(), "tangle needs at least one body");
    let mut ev = Evaluator {
        m,
        base: v,
        env: Vec::new(),
    };
    TruthSet::from_bits(ev.tangle(bodies))
}

/// Direct evaluation of `[*]{bodies}`.
pub fn cotangle_direct(m: &KripkeModel, bodies: &[Formula], v: Option<&Valuation>) -> TruthSet {
    let duals: Vec<Formula> = bodies.iter().map(Formula::dual).collect();
    tangle_direct(m, &duals, v).complement()
}

/// The fixpoint encoding `nu x . <>(x & f1) & ... & <>(x & fn)` of a tangle.
pub fn tangle_to_nu(bodies: &[Formula]) -> Formula {
    let mut taken = BTreeSet::new();
    for b in bodies {
        taken.extend(b.all_names());
    }
    let x = FreshVars::avoiding(taken).fresh();
    let conj = Formula::conj(
        bodies
            .iter()
            .map(|b| Formula::dia(Formula::and(Formula::atom(x.clone()), b.clone()))),
    );
    Formula::nu(x, conj)
}

/// The approximation sequence of the outermost fixpoint of `f`, starting
/// from the empty (mu) or full (nu) set and ending at the fixpoint.
/// Returns `None` when `f` is not a binder.
pub fn fixpoint_iterates(
    m: &KripkeModel,
    f: &Formula,
    v: Option<&Valuation>,
) -> Option<Vec<TruthSet>> {
    let mut ev = Evaluator {
        m,
        base: v,
        env: Vec::new(),
    };
    let mut trace = Vec::new();
    match f {
        Formula::Mu(p, b) => {
            ev.fixpoint(p, b, FixedBitSet::with_capacity(m.len()), Some(&mut trace));
        }
        Formula::Nu(p, b) => {
            let start = ev.full();
            ev.fixpoint(p, b, start, Some(&mut trace));
        }
        _ => return None,
    }
    Some(trace.into_iter().map(TruthSet::from_bits).collect())
}

pub const CONNECTEDNESS_AXIOM: &str = "A([+] p | [+] ~p) -> (A p | A ~p)";

/// Outcome of testing the connectedness axiom on random valuations of `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomCheck {
    pub valid: bool,
    /// Worlds where `p` was true in the first refuting valuation.
    pub witness: Option<Vec<String>>,
}

/// Evaluates the connectedness axiom under `trials` seeded random
/// valuations of the atom `p`.
pub fn check_connectedness_axiom(m: &KripkeModel, trials: usize, seed: u64) -> AxiomCheck {
    let axiom = formula::parse(CONNECTEDNESS_AXIOM).expect("axiom parses");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let p = TruthSet::from_worlds(m, (0..m.len()).filter(|_| rng.gen_bool(0.5)));
        let v: Valuation = [("p".to_string(), p.clone())].into_iter().collect();
        if !eval(m, &axiom, Some(&v)).is_full() {
            return AxiomCheck {
                valid: false,
                witness: Some(p.world_ids(m).into_iter().map(String::from).collect()),
            };
        }
    }
    AxiomCheck {
        valid: true,
        witness: None,
    }
}
