use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smc_core::bisim::{is_bisimulation, max_bisimulation};
use smc_core::formula::print;
use smc_core::kripke::{classify, disjoint_union, quotient_by_bisim};
use smc_core::random::{random_model, FormulaGen, FrameKind};
use smc_core::semantics::preimage;
use smc_core::synth::{min_separating_formula_with, verify_separator, OpSet, SynthConfig, SynthOutcome, SynthProblem};
use smc_core::{eval, parse, Formula, KripkeModel, PointedModel};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn model(seed: u64, kind: FrameKind) -> KripkeModel {
    random_model(&mut rng(seed), "m", 7, kind, &["p", "q"])
}

fn formula(seed: u64) -> Formula {
    FormulaGen::full().generate(&mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let f = formula(seed);
        let text = print(&f);
        prop_assert_eq!(parse(&text).unwrap(), f);
        let again = print(&parse(&text).unwrap());
        prop_assert_eq!(again, text);
    }

    #[test]
    fn dual_negates_and_is_involutive(seed in any::<u64>(), ms in any::<u64>()) {
        let f = formula(seed);
        let m = model(ms, FrameKind::Any);
        prop_assert_eq!(f.dual().dual(), f.clone());
        prop_assert_eq!(f.dual().size(), f.size());
        prop_assert_eq!(eval(&m, &f.dual(), None), eval(&m, &f, None).complement());
    }

    #[test]
    fn diamond_is_normal(a in any::<u64>(), b in any::<u64>(), ms in any::<u64>()) {
        let m = model(ms, FrameKind::Any);
        let (f, g) = (formula(a), formula(b));
        let lhs = eval(&m, &Formula::dia(Formula::or(f.clone(), g.clone())), None);
        let rhs = eval(&m, &Formula::or(Formula::dia(f.clone()), Formula::dia(g)), None);
        prop_assert_eq!(lhs, rhs);
        prop_assert!(eval(&m, &Formula::dia(Formula::Bot), None).is_empty());
        let direct = preimage(&m, eval(&m, &f, None).bits());
        let via_eval = eval(&m, &Formula::dia(f), None);
        prop_assert_eq!(via_eval.bits(), &direct);
    }

    #[test]
    fn transitive_frames_are_k4(seed in any::<u64>(), fs in any::<u64>()) {
        let m = model(seed, FrameKind::K4);
        prop_assert!(classify(&m).k4);
        let f = formula(fs);
        let twice = eval(&m, &Formula::dia(Formula::dia(f.clone())), None);
        let once = eval(&m, &Formula::dia(f.clone()), None);
        prop_assert!(twice.is_subset(&once));
        // on K4 the closure diamond is a closure operator
        let c = eval(&m, &Formula::dia_plus(f.clone()), None);
        prop_assert!(eval(&m, &f, None).is_subset(&c));
        prop_assert_eq!(eval(&m, &Formula::dia_plus(Formula::dia_plus(f)), None), c);
    }

    #[test]
    fn quotient_is_minimal_and_bisimilar(seed in any::<u64>()) {
        let m = model(seed, FrameKind::Any);
        let q = quotient_by_bisim(&m, &m.atoms());
        let qq = quotient_by_bisim(&q.model, &m.atoms());
        prop_assert_eq!(qq.model.len(), q.model.len());
        let z = max_bisimulation(&m, &q.model, None);
        prop_assert!(is_bisimulation(&z, &m.atoms()));
        for w in 0..m.len() {
            prop_assert!(z.contains(w, q.class_of[w]));
        }
    }

    #[test]
    fn maximal_bisimulation_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (model(a, FrameKind::Any), model(b, FrameKind::Any));
        let atoms = x.atoms().union(&y.atoms()).cloned().collect();
        let xy = max_bisimulation(&x, &y, Some(&atoms));
        let yx = max_bisimulation(&y, &x, Some(&atoms));
        prop_assert_eq!(xy.converse().pairs, yx.pairs);
    }
}

fn small_problem_models(seed: u64) -> (KripkeModel, KripkeModel) {
    let mut r = rng(seed);
    let a = random_model(&mut r, "a", 4, FrameKind::Any, &["p", "q"]);
    let b = random_model(&mut r, "b", 4, FrameKind::Any, &["p", "q"]);
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesis_is_deterministic_across_thread_counts(seed in any::<u64>()) {
        let (a, b) = small_problem_models(seed);
        let u = disjoint_union([&a, &b]);
        let left = vec![PointedModel::at(&u, 0)];
        let right = vec![PointedModel::at(&u, u.len() - 1)];
        let problem = SynthProblem::new(left, right, OpSet::basic(), 7);
        let run = |threads| {
            let cfg = SynthConfig { threads: Some(threads), ..SynthConfig::default() };
            min_separating_formula_with(&problem, &cfg).unwrap().outcome
        };
        let one = run(1);
        prop_assert_eq!(run(4), one.clone());
        if let SynthOutcome::Found { witness, size } = &one {
            prop_assert_eq!(witness.size(), *size);
            prop_assert!(verify_separator(witness, &problem.left, &problem.right));
        }
    }

    #[test]
    fn minimum_does_not_depend_on_the_ceiling(seed in any::<u64>()) {
        let (a, b) = small_problem_models(seed);
        let left = vec![PointedModel::rooted(&a).unwrap_or(PointedModel::at(&a, 0))];
        let right = vec![PointedModel::at(&b, 0)];
        let cfg = SynthConfig::default();
        let at = |max| {
            let p = SynthProblem::new(left.clone(), right.clone(), OpSet::basic(), max);
            min_separating_formula_with(&p, &cfg).unwrap().outcome
        };
        let (small, large) = (at(4), at(8));
        match (&small, &large) {
            (SynthOutcome::Found { size: s, .. }, SynthOutcome::Found { size: l, .. }) => prop_assert_eq!(s, l),
            (SynthOutcome::BudgetExceeded { .. }, SynthOutcome::Found { size, .. }) => prop_assert!(*size > 4),
            (SynthOutcome::Found { .. }, other) => prop_assert!(false, "larger ceiling lost the separator: {:?}", other),
            _ => {}
        }
        // the raw and quotiented universes agree on the minimum
        let raw = SynthConfig { quotient: false, ..SynthConfig::default() };
        let p = SynthProblem::new(left.clone(), right.clone(), OpSet::basic(), 8);
        let unq = min_separating_formula_with(&p, &raw).unwrap().outcome;
        match (&large, &unq) {
            (SynthOutcome::Found { size: x, .. }, SynthOutcome::Found { size: y, .. }) => prop_assert_eq!(x, y),
            (SynthOutcome::Found { .. }, _) | (_, SynthOutcome::Found { .. }) => {
                prop_assert!(false, "{:?} vs {:?}", large, unq)
            }
            _ => {}
        }
    }
}

/// Basic modal formulas of each size up to `max`, by plain enumeration.
fn enumerate(max: usize) -> Vec<Vec<Formula>> {
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max + 1];
    by_size[1] = vec![Formula::Top, Formula::Bot];
    for a in ["p", "q"] {
        by_size[1].push(Formula::atom(a));
        by_size[1].push(Formula::neg_atom(a));
    }
    for k in 2..=max {
        let mut out = Vec::new();
        for f in &by_size[k - 1] {
            out.push(Formula::dia(f.clone()));
            out.push(Formula::boxed(f.clone()));
        }
        for a in 1..k - 1 {
            for x in &by_size[a] {
                for y in &by_size[k - 1 - a] {
                    out.push(Formula::and(x.clone(), y.clone()));
                    out.push(Formula::or(x.clone(), y.clone()));
                }
            }
        }
        by_size[k] = out;
    }
    by_size
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn search_matches_enumeration(seed in any::<u64>()) {
        let (a, b) = small_problem_models(seed);
        let left = vec![PointedModel::at(&a, 0)];
        let right = vec![PointedModel::at(&b, 0)];
        let max = 4;
        let forms = enumerate(max);
        let brute = (1..=max).find(|&k| forms[k].iter().any(|f| verify_separator(f, &left, &right)));
        let p = SynthProblem::new(left.clone(), right.clone(), OpSet::basic(), max);
        let found = match min_separating_formula_with(&p, &SynthConfig::default()).unwrap().outcome {
            SynthOutcome::Found { size, .. } => Some(size),
            _ => None,
        };
        prop_assert_eq!(found, brute);
    }
}
