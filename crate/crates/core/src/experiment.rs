//! Succinctness experiments and randomized property suites.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bisim::{globally_bisimilar, locally_bisimilar};
use crate::families::{amalgam, psi, roots, FamilyBuilder, FamilyError, Side};
use crate::formula::{parse, print};
use crate::kripke::{classify, disjoint_union, quotient_by_bisim, PointedModel};
use crate::random::{random_model, FormulaGen, FrameKind};
use crate::semantics::{eval, tangle_direct, tangle_to_nu, TruthSet};
use crate::synth::{
    min_separating_formula_with, verify_separator, OpSet, SynthConfig, SynthError, SynthOutcome,
    SynthProblem,
};
use crate::translate::{closure_to_mu, expand_closure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyClass {
    Gl,
    Tc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    Dia,
    DiaForall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Outcome {
    ExactMin(usize),
    /// Every size below `k` was exhausted without a separator.
    NoSeparatorBelow(usize),
    /// No separator exists at all; contradicts ψₙ separating.
    Infeasible,
    MemoryExceeded,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub n: u32,
    pub family_class: FamilyClass,
    pub language: Language,
    pub lower_bound: usize,
    pub outcome: Outcome,
    pub witness: Option<String>,
    pub elapsed: f64,
    pub psi_size: usize,
    pub psi_separates: bool,
}

impl ExperimentRow {
    /// Whether this row is consistent with the 2ⁿ lower bound.
    pub fn respects_bound(&self) -> bool {
        self.psi_separates
            && match self.outcome {
                Outcome::ExactMin(k) | Outcome::NoSeparatorBelow(k) => k >= self.lower_bound,
                Outcome::Infeasible => false,
                Outcome::MemoryExceeded => true,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    ResourceCap,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::ResourceCap => 3,
        }
    }
}

pub fn verdict(rows: &[ExperimentRow]) -> Verdict {
    if rows.iter().any(|r| !r.respects_bound()) {
        Verdict::Fail
    } else if rows.iter().any(|r| r.outcome == Outcome::MemoryExceeded) {
        Verdict::ResourceCap
    } else {
        Verdict::Pass
    }
}

/// Default search ceiling: size(ψₙ) for n ≤ 2 (exact minima), and 2ⁿ − 1
/// beyond (exhaustion below the bound only).
pub fn default_max_size(n: u32) -> usize {
    if n <= 2 {
        psi(n).size()
    } else {
        (1usize << n) - 1
    }
}

/// Runs one (n, class, language) row.
pub fn run_row(
    n: u32,
    class: FamilyClass,
    language: Language,
    max_size: Option<usize>,
    cfg: &SynthConfig,
) -> Result<ExperimentRow, FamilyError> {
    let hatted = class == FamilyClass::Tc;
    let max_size = max_size.unwrap_or_else(|| default_max_size(n));
    let psi_n = psi(n);
    let start = Instant::now();
    let (psi_separates, result) = match language {
        Language::Dia => {
            let mut fb = FamilyBuilder::new();
            let a = fb.level(Side::A, n, hatted)?;
            let b = fb.level(Side::B, n, hatted)?;
            let (left, right) = (roots(&a), roots(&b));
            let ok = verify_separator(&psi_n, &left, &right);
            let p = SynthProblem::new(left, right, OpSet::basic(), max_size);
            (ok, min_separating_formula_with(&p, cfg))
        }
        Language::DiaForall => {
            let c = amalgam(n, hatted)?;
            let left: Vec<_> = c.a_roots.iter().map(|&w| PointedModel::at(&c.model, w)).collect();
            let right: Vec<_> = c.b_roots.iter().map(|&w| PointedModel::at(&c.model, w)).collect();
            let ok = verify_separator(&psi_n, &left, &right);
            let p = SynthProblem::new(left, right, OpSet::with_universal(), max_size);
            (ok, min_separating_formula_with(&p, cfg))
        }
    };
    let (outcome, witness) = match result {
        Ok(r) => match r.outcome {
            SynthOutcome::Found { size, witness } => (Outcome::ExactMin(size), Some(print(&witness))),
            SynthOutcome::BudgetExceeded { max_size } => (Outcome::NoSeparatorBelow(max_size + 1), None),
            SynthOutcome::Infeasible(_) => (Outcome::Infeasible, None),
        },
        Err(SynthError::MemoryBudgetExceeded { .. }) => (Outcome::MemoryExceeded, None),
        Err(_) => (Outcome::MemoryExceeded, None),
    };
    Ok(ExperimentRow {
        n,
        family_class: class,
        language,
        lower_bound: 1 << n,
        outcome,
        witness,
        elapsed: start.elapsed().as_secs_f64(),
        psi_size: psi_n.size(),
        psi_separates,
    })
}

/// All rows for the given parameters, ordered by (n, class, language).
pub fn run_succinctness(
    ns: &[u32],
    classes: &[FamilyClass],
    languages: &[Language],
    max_size: Option<usize>,
    cfg: &SynthConfig,
) -> Result<Vec<ExperimentRow>, FamilyError> {
    let mut keys = Vec::new();
    for &n in ns {
        for &c in classes {
            for &l in languages {
                keys.push((n, c, l));
            }
        }
    }
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(n, c, l)| run_row(n, c, l, max_size, cfg))
        .collect()
}

#[derive(Serialize)]
struct CsvRow<'a> {
    n: u32,
    family_class: FamilyClass,
    language: Language,
    lower_bound: usize,
    outcome: &'a str,
    k: Option<usize>,
    witness: &'a str,
    elapsed: String,
    psi_size: usize,
    psi_separates: bool,
}

/// Writes the rows as CSV with a header line.
pub fn write_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let (outcome, k) = match r.outcome {
            Outcome::ExactMin(k) => ("ExactMin", Some(k)),
            Outcome::NoSeparatorBelow(k) => ("NoSeparatorBelow", Some(k)),
            Outcome::Infeasible => ("Infeasible", None),
            Outcome::MemoryExceeded => ("MemoryExceeded", None),
        };
        w.serialize(CsvRow {
            n: r.n,
            family_class: r.family_class,
            language: r.language,
            lower_bound: r.lower_bound,
            outcome,
            k,
            witness: r.witness.as_deref().unwrap_or(""),
            elapsed: format!("{:.3}", r.elapsed),
            psi_size: r.psi_size,
            psi_separates: r.psi_separates,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[ExperimentRow], path: impl AsRef<Path>) -> csv::Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

// ---------------------------------------------------------------------------
// Property suite

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn check(
    name: &'static str,
    cases: usize,
    seed: u64,
    mut case: impl FnMut(&mut ChaCha8Rng) -> Result<(), String>,
) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_failure = None;
    for _ in 0..cases {
        if let Err(e) = case(&mut rng) {
            failures += 1;
            first_failure.get_or_insert(e);
        }
    }
    PropertyResult {
        name,
        cases,
        failures,
        first_failure,
    }
}

fn same(a: &TruthSet, b: &TruthSet, what: impl FnOnce() -> String) -> Result<(), String> {
    if a == b {
        Ok(())
    } else {
        Err(what())
    }
}

/// Seeded randomized checks of the main semantic invariants.
pub fn run_properties(seed: u64, cases: usize) -> Vec<PropertyResult> {
    let atoms = ["p", "q"];
    vec![
        check("print_parse_round_trip", cases, seed, |rng| {
            let f = FormulaGen::full().generate(rng);
            let back = parse(&print(&f)).map_err(|e| format!("{f}: {e}"))?;
            (back == f).then_some(()).ok_or_else(|| format!("{f} reparsed as {back}"))
        }),
        check("dual_is_complement", cases, seed, |rng| {
            let f = FormulaGen::full().generate(rng);
            let m = random_model(rng, "m", 6, FrameKind::Any, &atoms);
            same(&eval(&m, &f.dual(), None), &eval(&m, &f, None).complement(), || f.to_string())
        }),
        check("closure_translations_agree_on_k4", cases, seed, |rng| {
            let f = FormulaGen::basic().closure(true).generate(rng);
            let m = random_model(rng, "m", 7, FrameKind::K4, &atoms);
            let direct = eval(&m, &f, None);
            same(&direct, &eval(&m, &expand_closure(&f), None), || format!("expand {f}"))?;
            same(&direct, &eval(&m, &closure_to_mu(&f), None), || format!("mu {f}"))
        }),
        check("tangle_matches_nu_encoding", cases, seed, |rng| {
            let m = random_model(rng, "m", 8, FrameKind::K4, &atoms);
            let bodies: Vec<_> = (0..rand::Rng::gen_range(rng, 1..=3))
                .map(|_| FormulaGen::basic().depth(2).generate(rng))
                .collect();
            same(
                &tangle_direct(&m, &bodies, None),
                &eval(&m, &tangle_to_nu(&bodies), None),
                || format!("{bodies:?}"),
            )
        }),
        check("quotient_preserves_truth", cases, seed, |rng| {
            let m = random_model(rng, "m", 7, FrameKind::Any, &atoms);
            let f = FormulaGen::full().generate(rng);
            let q = quotient_by_bisim(&m, &m.atoms());
            let (tm, tq) = (eval(&m, &f, None), eval(&q.model, &f, None));
            for w in 0..m.len() {
                if tm.contains(w) != tq.contains(q.class_of[w]) {
                    return Err(format!("{f} at {}", m.world_name(w)));
                }
            }
            if !globally_bisimilar(&m, &q.model, None) {
                return Err("quotient not globally bisimilar".into());
            }
            Ok(())
        }),
        check("bisimilar_points_agree", cases, seed, |rng| {
            let a = random_model(rng, "a", 5, FrameKind::Any, &atoms);
            let b = random_model(rng, "b", 5, FrameKind::Any, &atoms);
            let u = disjoint_union([&a, &b]);
            let f = FormulaGen::full().universal(false).generate(rng);
            let t = eval(&u, &f, None);
            for x in 0..u.len() {
                for y in 0..u.len() {
                    if locally_bisimilar(PointedModel::at(&u, x), PointedModel::at(&u, y), None)
                        && t.contains(x) != t.contains(y)
                    {
                        return Err(format!("{f} at {x},{y}"));
                    }
                }
            }
            Ok(())
        }),
        check("scattered_tangle_is_empty", cases, seed, |rng| {
            let m = random_model(rng, "m", 7, FrameKind::Gl, &atoms);
            let bodies = vec![FormulaGen::basic().depth(2).generate(rng)];
            if !classify(&m).gl || !tangle_direct(&m, &bodies, None).is_empty() {
                return Err(format!("{bodies:?}"));
            }
            Ok(())
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn properties_pass_on_a_small_run() {
        for r in run_properties(3, 40) {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn csv_has_header_and_fixed_columns() {
        let row = ExperimentRow {
            n: 1,
            family_class: FamilyClass::Gl,
            language: Language::Dia,
            lower_bound: 2,
            outcome: Outcome::ExactMin(4),
            witness: Some("p1 | <> p1".into()),
            elapsed: 0.0,
            psi_size: 4,
            psi_separates: true,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,family_class,language,lower_bound,outcome,k,witness,elapsed,psi_size,psi_separates"
        );
        assert_eq!(lines.next().unwrap(), "1,gl,dia,2,ExactMin,4,p1 | <> p1,0.000,4,true");
    }

    #[test]
    fn verdicts() {
        let mk = |outcome| ExperimentRow {
            n: 2,
            family_class: FamilyClass::Gl,
            language: Language::Dia,
            lower_bound: 4,
            outcome,
            witness: None,
            elapsed: 0.0,
            psi_size: 14,
            psi_separates: true,
        };
        assert_eq!(verdict(&[mk(Outcome::ExactMin(4))]), Verdict::Pass);
        assert_eq!(verdict(&[mk(Outcome::ExactMin(3))]), Verdict::Fail);
        assert_eq!(verdict(&[mk(Outcome::NoSeparatorBelow(3))]), Verdict::Fail);
        assert_eq!(verdict(&[mk(Outcome::MemoryExceeded)]), Verdict::ResourceCap);
    }
}
