//! Seeded generators of random formulas and models for property suites.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::Formula;
use crate::kripke::{transitive_closure, KripkeModel};

/// Which operators a random formula may contain.
#[derive(Debug, Clone)]
pub struct FormulaGen {
    pub atoms: Vec<String>,
    pub max_depth: u32,
    pub closure: bool,
    pub universal: bool,
    pub fixpoints: bool,
    pub tangles: bool,
}

impl FormulaGen {
    /// Basic modal formulas over `p`, `q`.
    pub fn basic() -> Self {
        FormulaGen {
            atoms: vec!["p".into(), "q".into()],
            max_depth: 4,
            closure: false,
            universal: false,
            fixpoints: false,
            tangles: false,
        }
    }

    /// Every operator of the language.
    pub fn full() -> Self {
        FormulaGen {
            closure: true,
            universal: true,
            fixpoints: true,
            tangles: true,
            ..Self::basic()
        }
    }

    pub fn with_atoms(mut self, atoms: &[&str]) -> Self {
        self.atoms = atoms.iter().map(|a| a.to_string()).collect();
        self
    }

    pub fn depth(mut self, d: u32) -> Self {
        self.max_depth = d;
        self
    }

    pub fn closure(mut self, on: bool) -> Self {
        self.closure = on;
        self
    }

    pub fn universal(mut self, on: bool) -> Self {
        self.universal = on;
        self
    }

    pub fn fixpoints(mut self, on: bool) -> Self {
        self.fixpoints = on;
        self
    }

    pub fn tangles(mut self, on: bool) -> Self {
        self.tangles = on;
        self
    }

    pub fn generate(&self, rng: &mut impl Rng) -> Formula {
        let mut vars = Vec::new();
        let mut next_var = 0;
        self.gen(rng, self.max_depth, &mut vars, &mut next_var)
    }

    fn leaf(&self, rng: &mut impl Rng, vars: &[String]) -> Formula {
        let roll = rng.gen_range(0..10);
        if roll == 0 {
            return if rng.gen_bool(0.5) { Formula::Top } else { Formula::Bot };
        }
        if !vars.is_empty() && roll < 4 {
            // bound variables only occur positively
            return Formula::Atom(vars.choose(rng).expect("nonempty").clone());
        }
        let a = self.atoms.choose(rng).expect("at least one atom").clone();
        if rng.gen_bool(0.5) {
            Formula::Atom(a)
        } else {
            Formula::NegAtom(a)
        }
    }

    fn gen(&self, rng: &mut impl Rng, depth: u32, vars: &mut Vec<String>, next_var: &mut usize) -> Formula {
        if depth == 0 || rng.gen_range(0..4) == 0 {
            return self.leaf(rng, vars);
        }
        let mut choices = vec![0, 1, 2, 3];
        if self.closure {
            choices.extend([4, 5]);
        }
        if self.universal {
            choices.extend([6, 7]);
        }
        if self.fixpoints {
            choices.extend([8, 9]);
        }
        if self.tangles {
            choices.extend([10, 11]);
        }
        let d = depth - 1;
        match *choices.choose(rng).expect("nonempty") {
            0 => Formula::and(self.gen(rng, d, vars, next_var), self.gen(rng, d, vars, next_var)),
            1 => Formula::or(self.gen(rng, d, vars, next_var), self.gen(rng, d, vars, next_var)),
            2 => Formula::dia(self.gen(rng, d, vars, next_var)),
            3 => Formula::boxed(self.gen(rng, d, vars, next_var)),
            4 => Formula::dia_plus(self.gen(rng, d, vars, next_var)),
            5 => Formula::box_plus(self.gen(rng, d, vars, next_var)),
            6 => Formula::forall(self.gen(rng, d, vars, next_var)),
            7 => Formula::exists(self.gen(rng, d, vars, next_var)),
            k @ (8 | 9) => {
                let x = format!("x{next_var}");
                *next_var += 1;
                vars.push(x.clone());
                let body = self.gen(rng, d, vars, next_var);
                vars.pop();
                if k == 8 {
                    Formula::mu(x, body)
                } else {
                    Formula::nu(x, body)
                }
            }
            k => {
                let n = rng.gen_range(1..=3);
                let bodies = (0..n).map(|_| self.gen(rng, d.min(2), vars, next_var)).collect();
                if k == 10 {
                    Formula::TangleDia(bodies)
                } else {
                    Formula::TangleBox(bodies)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Any,
    /// Transitive.
    K4,
    /// Transitive and irreflexive (acyclic).
    Gl,
}

/// A random model with `1..=max_worlds` worlds over `atoms`.
pub fn random_model(
    rng: &mut impl Rng,
    name: &str,
    max_worlds: usize,
    kind: FrameKind,
    atoms: &[&str],
) -> KripkeModel {
    let n = rng.gen_range(1..=max_worlds.max(1));
    let density: f64 = rng.gen_range(0.1..0.5);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let allowed = match kind {
                FrameKind::Gl => a < b,
                _ => true,
            };
            if allowed && rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    let val = (0..n)
        .map(|_| {
            atoms
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|a| a.to_string())
                .collect::<BTreeSet<_>>()
        })
        .collect();
    let m = KripkeModel::from_parts(
        name,
        (0..n).map(|w| format!("w{w}")).collect(),
        edges,
        val,
        vec![None; n],
    )
    .expect("random model is valid");
    match kind {
        FrameKind::Any => m,
        FrameKind::K4 | FrameKind::Gl => transitive_closure(&m),
    }
}
