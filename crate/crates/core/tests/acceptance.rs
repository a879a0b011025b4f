//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is always shown.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smc_core::bisim::{globally_bisimilar, locally_bisimilar};
use smc_core::experiment::{run_row, FamilyClass, Language, Outcome};
use smc_core::families::{
    check_box_move_clauses, critical_branch, distinguishing_value, game_example_models, phi, psi, roots,
    FamilyBuilder, FamilyIndex, Side,
};
use smc_core::kripke::{classify, generated_submodel_at, infinity_world, isomorphic, quotient_by_bisim};
use smc_core::random::{random_model, FormulaGen, FrameKind};
use smc_core::semantics::{check_connectedness_axiom, tangle_direct, tangle_to_nu};
use smc_core::synth::{meg_verify, MegOutcome, SynthConfig};
use smc_core::translate::{closure_to_mu, expand_closure};
use smc_core::{eval, holds, parse, Formula, KripkeModel, PointedModel};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn level(side: Side, n: u32, hatted: bool) -> Vec<KripkeModel> {
    FamilyBuilder::new().level(side, n, hatted).expect("valid level")
}

/// Every formula of the basic modal language of size exactly `k` over the
/// given literals, built by plain enumeration of syntax trees.
fn all_formulas(atoms: &[&str], max: usize) -> Vec<Vec<Formula>> {
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max + 1];
    if max == 0 {
        return by_size;
    }
    by_size[1].push(Formula::Top);
    by_size[1].push(Formula::Bot);
    for a in atoms {
        by_size[1].push(Formula::atom(*a));
        by_size[1].push(Formula::neg_atom(*a));
    }
    for k in 2..=max {
        let mut out = Vec::new();
        for f in &by_size[k - 1] {
            out.push(Formula::dia(f.clone()));
            out.push(Formula::boxed(f.clone()));
        }
        for a in 1..k - 1 {
            let b = k - 1 - a;
            for x in &by_size[a] {
                for y in &by_size[b] {
                    out.push(Formula::and(x.clone(), y.clone()));
                    out.push(Formula::or(x.clone(), y.clone()));
                }
            }
        }
        by_size[k] = out;
    }
    by_size
}

/// Smallest size at most `max` of a brute-force separator of the family
/// roots, or `None` if there is none.
fn brute_force_min(n: u32, hatted: bool, max: usize) -> Option<usize> {
    let a = level(Side::A, n, hatted);
    let b = level(Side::B, n, hatted);
    let names: Vec<String> = (1..=n).map(|k| format!("p{k}")).collect();
    let atoms: Vec<&str> = names.iter().map(String::as_str).collect();
    let forms = all_formulas(&atoms, max);
    let root_truth = |m: &KripkeModel, f: &Formula| eval(m, f, None).contains(m.root().unwrap());
    (1..=max).find(|&k| {
        forms[k]
            .iter()
            .any(|f| a.iter().all(|m| root_truth(m, f)) && !b.iter().any(|m| root_truth(m, f)))
    })
}

fn c1_family_truth() -> Check {
    let mut checked = 0;
    for n in 1..=4 {
        let f = phi(n);
        for hatted in [false, true] {
            for (side, expected) in [(Side::A, true), (Side::B, false)] {
                for m in level(side, n, hatted) {
                    let pm = PointedModel::rooted(&m).map_err(|e| e.to_string())?;
                    ensure(holds(pm, &f) == expected, || format!("{} at root", m.name()))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} rooted models"))
}

fn c2_size_laws() -> Check {
    let mut s = 4usize;
    for n in 1..=10u32 {
        let (p, q) = (phi(n).size(), psi(n).size());
        ensure(p == 3 * n as usize - 1, || format!("size(phi_{n}) = {p}"))?;
        ensure(q == s, || format!("size(psi_{n}) = {q}, expected {s}"))?;
        ensure(q >= 1 << n, || format!("size(psi_{n}) < 2^{n}"))?;
        s = 2 * s + 6;
    }
    Ok("n = 1..10".into())
}

fn succinctness(class: FamilyClass, language: Language) -> Check {
    let cfg = SynthConfig::default();
    let hatted = class == FamilyClass::Tc;
    let mut notes = Vec::new();
    for n in 1..=3u32 {
        let row = run_row(n, class, language, None, &cfg).map_err(|e| e.to_string())?;
        ensure(row.psi_separates, || format!("psi_{n} does not separate"))?;
        let bound = 1usize << n;
        match row.outcome {
            Outcome::ExactMin(k) => {
                ensure(k >= bound, || format!("n={n}: separator of size {k} < {bound}"))?;
                if n == 1 {
                    ensure(k == 4, || format!("n=1: minimum {k}, expected 4"))?;
                }
                notes.push(format!("n={n} min={k}"));
            }
            Outcome::NoSeparatorBelow(k) => {
                ensure(k >= bound, || format!("n={n}: search stopped at {k}"))?;
                notes.push(format!("n={n} none<{k}"));
            }
            Outcome::MemoryExceeded => notes.push(format!("n={n} memory cap (documented limitation)")),
            Outcome::Infeasible => return Err(format!("n={n}: reported infeasible")),
        }
        // independent enumeration oracle for the small levels
        if language == Language::Dia && n <= 2 {
            let limit = if n == 1 { 4 } else { 5 };
            let brute = brute_force_min(n, hatted, limit);
            let expected = match row.outcome {
                Outcome::ExactMin(k) if k <= limit => Some(k),
                _ => None,
            };
            ensure(brute == expected, || format!("n={n}: enumeration found {brute:?}, search {expected:?}"))?;
        }
    }
    Ok(notes.join(", "))
}

fn c5_universal() -> Check {
    let cfg = SynthConfig::default();
    let mut notes = Vec::new();
    for class in [FamilyClass::Gl, FamilyClass::Tc] {
        for n in 1..=2u32 {
            let row = run_row(n, class, Language::DiaForall, None, &cfg).map_err(|e| e.to_string())?;
            ensure(row.respects_bound(), || format!("{class:?} n={n}: {:?}", row.outcome))?;
            notes.push(format!("{class:?} n={n} {:?}", row.outcome));
        }
    }
    Ok(notes.join(", "))
}

fn random_bodies(rng: &mut ChaCha8Rng, atoms: &[&str]) -> Vec<Formula> {
    let k = rng.gen_range(1..=3);
    (0..k)
        .map(|_| FormulaGen::basic().with_atoms(atoms).depth(3).generate(rng))
        .collect()
}

fn c6_tangle_collapse() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut models = Vec::new();
    for n in 1..=3 {
        models.extend(level(Side::A, n, false));
        models.extend(level(Side::B, n, false));
    }
    for k in 0..100 {
        models.push(random_model(&mut rng, &format!("g{k}"), 8, FrameKind::Gl, &["p1", "p2", "p3"]));
    }
    for m in &models {
        ensure(classify(m).gl, || format!("{} is not GL", m.name()))?;
        for _ in 0..20 {
            let bodies = random_bodies(&mut rng, &["p1", "p2", "p3"]);
            ensure(tangle_direct(m, &bodies, None).is_empty(), || format!("{} {bodies:?}", m.name()))?;
            let f = Formula::TangleDia(bodies);
            ensure(eval(m, &f, None).is_empty(), || format!("{} {f}", m.name()))?;
        }
    }
    Ok(format!("{} models x 20 tangles", models.len()))
}

fn c7_tangle_at_infinity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut count = 0;
    for n in 1..=2 {
        for side in [Side::A, Side::B] {
            for m in level(side, n, true) {
                let inf = infinity_world(&m).ok_or_else(|| format!("{} has no infinity", m.name()))?;
                for _ in 0..50 {
                    let bodies = random_bodies(&mut rng, &["p1", "p2"]);
                    let at_inf = eval(&m, &Formula::conj(bodies.iter().cloned()), None).contains(inf);
                    let t = tangle_direct(&m, &bodies, None);
                    ensure(
                        if at_inf { t.is_full() } else { t.is_empty() },
                        || format!("{} {bodies:?}", m.name()),
                    )?;
                    count += 1;
                }
            }
        }
    }
    Ok(format!("{count} (model, tangle) pairs"))
}

fn c8_tangle_nu() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..200 {
        let m = random_model(&mut rng, &format!("k{k}"), 8, FrameKind::K4, &["p", "q"]);
        let bodies = random_bodies(&mut rng, &["p", "q"]);
        ensure(
            tangle_direct(&m, &bodies, None) == eval(&m, &tangle_to_nu(&bodies), None),
            || format!("model {k}: {bodies:?}"),
        )?;
    }
    Ok("200 K4 models".into())
}

fn c9_games() -> Check {
    let (lefts, right) = game_example_models();
    let f = parse("[] p | <> <> p").map_err(|e| e.to_string())?;
    let left: Vec<_> = lefts.iter().map(|m| PointedModel::rooted(m).unwrap()).collect();
    let right = vec![PointedModel::rooted(&right).unwrap()];
    match meg_verify(&f, &left, &right).map_err(|e| e.to_string())? {
        MegOutcome::Closed(t) => ensure(t.len() == 6, || format!("example tree has {} nodes", t.len()))?,
        MegOutcome::Failed { reason, .. } => return Err(format!("example: {reason}")),
    }
    for n in 1..=2 {
        let (a, b) = (level(Side::A, n, false), level(Side::B, n, false));
        let f = psi(n);
        match meg_verify(&f, &roots(&a), &roots(&b)).map_err(|e| e.to_string())? {
            MegOutcome::Closed(t) => {
                ensure(t.len() == f.size(), || format!("n={n}: {} nodes vs size {}", t.len(), f.size()))?
            }
            MegOutcome::Failed { reason, .. } => return Err(format!("n={n}: {reason}")),
        }
    }
    Ok("example 6 nodes; psi_1, psi_2 closed at formula size".into())
}

fn c10_translations() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gen = FormulaGen::full();
    for _ in 0..1000 {
        let f = gen.generate(&mut rng);
        let t = closure_to_mu(&f);
        ensure(t.size() <= 4 * f.size(), || format!("{f}: {} > 4*{}", t.size(), f.size()))?;
    }
    let gen = FormulaGen::basic().closure(true);
    for k in 0..300 {
        let m = random_model(&mut rng, &format!("k{k}"), 7, FrameKind::K4, &["p", "q"]);
        let f = gen.generate(&mut rng);
        let direct = eval(&m, &f, None);
        ensure(direct == eval(&m, &expand_closure(&f), None), || format!("expand {f}"))?;
        ensure(direct == eval(&m, &closure_to_mu(&f), None), || format!("mu {f}"))?;
    }
    Ok("1000 size bounds, 300 K4 equivalences".into())
}

fn c11_structure() -> Check {
    let mut fb = FamilyBuilder::new();
    let mut iso = 0;
    // i = 2^k + j with 1 <= j <= 2^k: S[X^{n+1}_i] is isomorphic to X^{k+1}_j
    for n in 1..=3u32 {
        for k in 0..=n {
            for j in 1..=1u64 << k {
                let i = (1u64 << k) + j;
                if i > 1u64 << (n + 1) {
                    continue;
                }
                for side in [Side::A, Side::B] {
                    let big = fb.build(FamilyIndex::new(side, n + 1, i)).map_err(|e| e.to_string())?;
                    let small = fb.build(FamilyIndex::new(side, k + 1, j)).map_err(|e| e.to_string())?;
                    let root = big.root().unwrap();
                    let s = big.succ_of(root).ok_or_else(|| format!("{} has no successor", big.name()))?;
                    let sub = generated_submodel_at(&big, s);
                    ensure(isomorphic(&sub, &small).is_some(), || {
                        format!("S[{}] is not isomorphic to {}", big.name(), small.name())
                    })?;
                    iso += 1;
                }
            }
        }
    }
    let mut dv = 0;
    for n in 1..=3u32 {
        let a = fb.level(Side::A, n, false).map_err(|e| e.to_string())?;
        let b = fb.level(Side::B, n, false).map_err(|e| e.to_string())?;
        let next = fb.level(Side::A, n + 1, false).map_err(|e| e.to_string())?;
        let half = 1usize << (n - 1);
        let height = |m: &KripkeModel| critical_branch(m).map(|c| c.height).map_err(|e| e.to_string());
        for i in 0..a.len() {
            let m = height(&a[i])?;
            ensure(height(&b[i])? == m, || format!("heights of A{n}_{0} and B{n}_{0}", i + 1))?;
            let r = distinguishing_value(&a[i], &b[i]).map_err(|e| e.to_string())?;
            ensure(r == Some(m), || format!("A{n}_{0}, B{n}_{0} distinguished by {r:?}, height {m}", i + 1))?;
            dv += 1;
            for j in i + 1..a.len() {
                if height(&a[j])? != m {
                    continue;
                }
                let r = distinguishing_value(&a[i], &a[j])
                    .map_err(|e| e.to_string())?
                    .ok_or_else(|| format!("A{n}_{} and A{n}_{} not distinguished", i + 1, j + 1))?;
                ensure(r < m, || format!("A{n}_{}, A{n}_{}: r={r} >= {m}", i + 1, j + 1))?;
                if i < half && j >= half {
                    ensure(r == 0, || format!("A{n}_{}, A{n}_{}: r={r}, expected 0", i + 1, j + 1))?;
                }
                let same = distinguishing_value(&next[i], &next[j]).map_err(|e| e.to_string())?;
                let shifted =
                    distinguishing_value(&next[a.len() + i], &next[a.len() + j]).map_err(|e| e.to_string())?;
                ensure(same == Some(r) && shifted == Some(r + 1), || {
                    format!("level shift of A{n}_{}, A{n}_{}: {same:?}, {shifted:?}", i + 1, j + 1)
                })?;
                dv += 1;
            }
        }
    }
    let mut clauses = 0;
    for n in 1..=3 {
        for hatted in [false, true] {
            let rep = check_box_move_clauses(n, hatted).map_err(|e| e.to_string())?;
            ensure(rep.failures.is_empty(), || format!("n={n} hatted={hatted}: {:?}", rep.failures))?;
            clauses += rep.special_pairs_checked + rep.box_one_checked + rep.box_two_checked;
        }
    }
    Ok(format!("{iso} isomorphisms, {dv} distinguishing values, {clauses} box-move instances"))
}

fn c12_bisim_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let atoms = ["p", "q"];
    for k in 0..500 {
        let m = random_model(&mut rng, &format!("m{k}"), 7, FrameKind::Any, &atoms);
        let q = quotient_by_bisim(&m, &m.atoms());
        let f = FormulaGen::full().universal(false).generate(&mut rng);
        let (tm, tq) = (eval(&m, &f, None), eval(&q.model, &f, None));
        for w in 0..m.len() {
            let c = q.class_of[w];
            ensure(
                locally_bisimilar(PointedModel::at(&m, w), PointedModel::at(&q.model, c), None),
                || format!("case {k}: {} not bisimilar to its class", m.world_name(w)),
            )?;
            ensure(tm.contains(w) == tq.contains(c), || format!("case {k}: {f}"))?;
        }
    }
    for k in 0..200 {
        let m = random_model(&mut rng, &format!("g{k}"), 7, FrameKind::Any, &atoms);
        let q = quotient_by_bisim(&m, &m.atoms());
        ensure(globally_bisimilar(&m, &q.model, None), || format!("case {k}: not globally bisimilar"))?;
        let f = Formula::forall(FormulaGen::full().generate(&mut rng));
        let f = if rng.gen_bool(0.5) { f } else { Formula::or(f, FormulaGen::full().generate(&mut rng)) };
        let (tm, tq) = (eval(&m, &f, None), eval(&q.model, &f, None));
        for w in 0..m.len() {
            ensure(tm.contains(w) == tq.contains(q.class_of[w]), || format!("case {k}: {f}"))?;
        }
    }
    Ok("500 local cases, 200 global cases".into())
}

fn c13_connectedness() -> Check {
    let mut count = 0;
    for n in 1..=2 {
        for side in [Side::A, Side::B] {
            for m in level(side, n, true) {
                let r = check_connectedness_axiom(&m, 100, n as u64);
                ensure(r.valid, || format!("{} refutes the axiom with p = {:?}", m.name(), r.witness))?;
                count += 1;
            }
        }
    }
    let split = KripkeModel::from_json(
        r#"{"name":"split","worlds":["a","b"],"rel":[["a","a"],["b","b"]]}"#,
    )
    .map_err(|e| e.to_string())?;
    let r = check_connectedness_axiom(&split, 100, 0);
    ensure(!r.valid, || "disconnected model satisfies the axiom".into())?;
    Ok(format!("{count} hatted models valid; disconnected model refutes with p = {:?}", r.witness.unwrap()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("family truth", c1_family_truth),
        ("size laws", c2_size_laws),
        ("dia lower bound on GL families", || succinctness(FamilyClass::Gl, Language::Dia)),
        ("dia lower bound on TC families", || succinctness(FamilyClass::Tc, Language::Dia)),
        ("universal modality on amalgams", c5_universal),
        ("tangle collapse on GL", c6_tangle_collapse),
        ("tangle at infinity", c7_tangle_at_infinity),
        ("tangle against nu encoding", c8_tangle_nu),
        ("game trees", c9_games),
        ("translation bounds", c10_translations),
        ("structural properties", c11_structure),
        ("bisimulation invariance", c12_bisim_invariance),
        ("connectedness axiom", c13_connectedness),
    ];
    let mut failed = BTreeSet::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({detail}) [{secs:.2}s]", k + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.2}s]", k + 1);
                failed.insert(k + 1);
            }
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria pass", criteria.len());
}
