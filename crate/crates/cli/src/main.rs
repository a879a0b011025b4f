use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smc_core::bisim::locally_bisimilar;
use smc_core::experiment::{self, FamilyClass, Language, Verdict};
use smc_core::families::{self, FamilyBuilder, FamilyIndex, Side};
use smc_core::synth::{self, MegOutcome, OpSet, SynthConfig, SynthError, SynthProblem};
use smc_core::translate;
use smc_core::{eval, parse, Formula, KripkeModel, PointedModel};

/// Model checking, bisimulation and minimal-formula synthesis for the
/// spatial mu-calculus over finite Kripke models.
#[derive(Parser, Debug)]
#[command(name = "smc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a formula on a model.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Print a single verdict for this world instead of the truth set.
        #[arg(long)]
        world: Option<String>,
    },
    /// Write a family model as JSON.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: u32,
        /// 1-based index; ignored for the amalgam family C.
        #[arg(long, default_value_t = 1)]
        i: u64,
        #[arg(long)]
        hatted: bool,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Decide local bisimilarity of two pointed models.
    Bisim {
        model1: PathBuf,
        world1: String,
        model2: PathBuf,
        world2: String,
    },
    /// Rewrite a formula into another fragment.
    Translate {
        #[arg(long, value_enum)]
        mode: TranslateMode,
        #[arg(long)]
        formula: String,
        /// Required by the `hat` and `universal` modes.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Search for a smallest formula true on the left and false on the right.
    Synth {
        #[command(flatten)]
        sides: Sides,
        /// Comma-separated operators among lit, dia, box, and, or, forall, exists; or `all`.
        #[arg(long, default_value = "lit,dia,box,and,or")]
        ops: String,
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        /// Search the raw points instead of bisimulation classes.
        #[arg(long)]
        no_quotient: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Play the formula-size game along a formula with a greedy Hydra.
    Meg {
        #[command(flatten)]
        sides: Sides,
        #[arg(long)]
        formula: String,
        /// Also print the game tree as JSON.
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

/// Pointed-model lists. Each item is a family token (`A2`, `B2`, `hatA2`,
/// `CA2`, `hatCB2`) or `path[@world]`, where a missing world means the root.
#[derive(Args, Debug)]
struct Sides {
    #[arg(long, value_delimiter = ',', required = true)]
    left: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    right: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    /// Minimal separator sizes against the 2^n lower bound, written as CSV.
    Succinctness {
        /// A single level or an inclusive range such as `1..3`.
        #[arg(long, default_value = "1..2")]
        n: String,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "gl")]
        class: Vec<ClassArg>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "dia")]
        language: Vec<LanguageArg>,
        /// Search ceiling; defaults to size(psi_n) for n <= 2 and 2^n - 1 above.
        #[arg(long)]
        max_size: Option<usize>,
        /// Largest level accepted.
        #[arg(long, default_value_t = 3)]
        ceiling: u32,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded randomized property checks.
    Properties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    #[value(name = "C")]
    C,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TranslateMode {
    ExpandClosure,
    ClosureToMu,
    Scattered,
    Hat,
    Universal,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ClassArg {
    Gl,
    Tc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LanguageArg {
    Dia,
    DiaForall,
}

/// Failure with the exit status to report.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Check {
            model,
            formula,
            world,
        } => {
            let m = load(&model)?;
            let f = formula_arg(&formula)?;
            let truth = eval(&m, &f, None);
            match world {
                Some(w) => println!("{}", truth.contains(resolve_world(&m, &w)?)),
                None => println!("{{{}}}", truth.world_ids(&m).join(", ")),
            }
            Ok(0)
        }
        Command::Gen {
            family,
            n,
            i,
            hatted,
            out,
        } => {
            let m = match family {
                FamilyArg::C => families::big_C(n, hatted),
                FamilyArg::A | FamilyArg::B => {
                    let side = if matches!(family, FamilyArg::A) { Side::A } else { Side::B };
                    let mut idx = FamilyIndex::new(side, n, i);
                    idx.hatted = hatted;
                    families::build(idx)
                }
            }
            .map_err(usage)?;
            match out {
                Some(path) => std::fs::write(&path, m.to_json() + "\n")
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => println!("{}", m.to_json()),
            }
            Ok(0)
        }
        Command::Bisim {
            model1,
            world1,
            model2,
            world2,
        } => {
            let (m1, m2) = (load(&model1)?, load(&model2)?);
            let a = PointedModel::at(&m1, resolve_world(&m1, &world1)?);
            let b = PointedModel::at(&m2, resolve_world(&m2, &world2)?);
            if locally_bisimilar(a, b, None) {
                println!("bisimilar");
            } else {
                println!("not bisimilar");
            }
            Ok(0)
        }
        Command::Translate {
            mode,
            formula,
            model,
        } => {
            let f = formula_arg(&formula)?;
            let needs_model = || -> Result<KripkeModel> {
                load(model.as_ref().ok_or_else(|| usage("this mode needs --model"))?)
            };
            let out = match mode {
                TranslateMode::ExpandClosure => translate::expand_closure(&f),
                TranslateMode::ClosureToMu => translate::closure_to_mu(&f),
                TranslateMode::Scattered => translate::scattered_eliminate_tangle(&f),
                TranslateMode::Hat => translate::hat_eliminate_tangle(&f, &needs_model()?).map_err(usage)?,
                TranslateMode::Universal => translate::eliminate_universal(&f, &needs_model()?).map_err(usage)?,
            };
            println!("{out}");
            Ok(0)
        }
        Command::Synth {
            sides,
            ops,
            max_size,
            no_quotient,
            threads,
        } => {
            let ops = OpSet::parse(&ops).map_err(usage)?;
            let mut cfg = SynthConfig::from_env().map_err(usage)?;
            cfg.quotient = !no_quotient;
            cfg.threads = threads;
            let mut store = Vec::new();
            let left = resolve_points(&sides.left, &mut store)?;
            let right = resolve_points(&sides.right, &mut store)?;
            let problem = SynthProblem::new(pointed(&store, &left), pointed(&store, &right), ops, max_size);
            match synth::min_separating_formula_with(&problem, &cfg) {
                Ok(report) => {
                    println!("{}", report.outcome);
                    Ok(0)
                }
                Err(e @ SynthError::MemoryBudgetExceeded { .. }) => Err(Failure {
                    code: 3,
                    message: e.to_string(),
                }),
                Err(e) => Err(usage(e)),
            }
        }
        Command::Meg {
            sides,
            formula,
            json,
        } => {
            let f = formula_arg(&formula)?;
            let mut store = Vec::new();
            let left = resolve_points(&sides.left, &mut store)?;
            let right = resolve_points(&sides.right, &mut store)?;
            match synth::meg_verify(&f, &pointed(&store, &left), &pointed(&store, &right)).map_err(usage)? {
                MegOutcome::Closed(tree) => {
                    println!("closed nodes={}", tree.len());
                    if json {
                        println!("{}", tree.to_json());
                    }
                    Ok(0)
                }
                MegOutcome::Failed { node, reason, tree } => {
                    println!("failed at node {node}: {reason}");
                    if json {
                        println!("{}", tree.to_json());
                    }
                    Ok(1)
                }
            }
        }
        Command::Experiment(ExperimentCmd::Succinctness {
            n,
            class,
            language,
            max_size,
            ceiling,
            report,
        }) => {
            let ns = parse_levels(&n)?;
            if let Some(&big) = ns.iter().find(|&&k| k > ceiling) {
                return Err(usage(format!("n = {big} exceeds the ceiling {ceiling}; raise --ceiling")));
            }
            let classes: Vec<_> = class
                .iter()
                .map(|c| match c {
                    ClassArg::Gl => FamilyClass::Gl,
                    ClassArg::Tc => FamilyClass::Tc,
                })
                .collect();
            let languages: Vec<_> = language
                .iter()
                .map(|l| match l {
                    LanguageArg::Dia => Language::Dia,
                    LanguageArg::DiaForall => Language::DiaForall,
                })
                .collect();
            let cfg = SynthConfig::from_env().map_err(usage)?;
            let rows = experiment::run_succinctness(&ns, &classes, &languages, max_size, &cfg).map_err(usage)?;
            let written = match &report {
                Some(path) => experiment::write_csv_file(&rows, path),
                None => experiment::write_csv(&rows, std::io::stdout()),
            };
            written.map_err(|e| usage(format!("writing report: {e}")))?;
            let verdict = experiment::verdict(&rows);
            eprintln!(
                "{}",
                match verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                    Verdict::ResourceCap => "PASS (memory cap reached on some rows)",
                }
            );
            Ok(verdict.exit_code() as u8)
        }
        Command::Experiment(ExperimentCmd::Properties { seed, cases }) => {
            let results = experiment::run_properties(seed, cases);
            let mut ok = true;
            for r in &results {
                ok &= r.passed();
                let status = if r.passed() { "PASS" } else { "FAIL" };
                print!("{status} {} ({} cases, {} failures)", r.name, r.cases, r.failures);
                match &r.first_failure {
                    Some(e) => println!(": {e}"),
                    None => println!(),
                }
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn load(path: &PathBuf) -> Result<KripkeModel> {
    KripkeModel::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn formula_arg(text: &str) -> Result<Formula> {
    parse(text).map_err(|e| usage(format!("formula `{text}`: {e}")))
}

/// Looks up a world by its id, falling back to ids of the form
/// `prefix/id` with a single-segment prefix, so `w0` finds `A1_1/w0`.
fn resolve_world(m: &KripkeModel, id: &str) -> Result<usize> {
    m.world_index(id).or_else(|e| {
        let mut hits = (0..m.len()).filter(|&w| {
            m.world_name(w)
                .split_once('/')
                .is_some_and(|(_, rest)| rest == id)
        });
        match (hits.next(), hits.next()) {
            (Some(w), None) => Ok(w),
            _ => Err(usage(e)),
        }
    })
}

fn parse_levels(text: &str) -> Result<Vec<u32>> {
    let bad = || usage(format!("bad level range `{text}`"));
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let k = num(text)?;
            (k, k)
        }
    };
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

/// Chosen points as (model index into `store`, world). Family levels and
/// amalgams are generated once and shared between both sides.
fn resolve_points(tokens: &[String], store: &mut Vec<(String, KripkeModel)>) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for token in tokens {
        if let Some(points) = family_token(token, store)? {
            out.extend(points);
            continue;
        }
        let (path, world) = match token.rsplit_once('@') {
            Some((p, w)) => (p, Some(w)),
            None => (token.as_str(), None),
        };
        let m = load(&PathBuf::from(path))?;
        let w = match world {
            Some(w) => resolve_world(&m, w)?,
            None => m.root().ok_or_else(|| usage(format!("{path}: model has no root")))?,
        };
        store.push((path.to_string(), m));
        out.push((store.len() - 1, w));
    }
    Ok(out)
}

fn family_token(token: &str, store: &mut Vec<(String, KripkeModel)>) -> Result<Option<Vec<(usize, usize)>>> {
    let (hatted, rest) = match token.strip_prefix("hat") {
        Some(r) => (true, r),
        None => (false, token),
    };
    let (amalgam, rest) = match rest.strip_prefix('C') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let side = match rest.chars().next() {
        Some('A') => Side::A,
        Some('B') => Side::B,
        _ => return Ok(None),
    };
    let Ok(n) = rest[1..].parse::<u32>() else {
        return Ok(None);
    };
    if amalgam {
        let key = format!("{}C{n}", if hatted { "hat" } else { "" });
        let c = families::amalgam(n, hatted).map_err(usage)?;
        let k = match store.iter().position(|(name, _)| *name == key) {
            Some(k) => k,
            None => {
                store.push((key, c.model));
                store.len() - 1
            }
        };
        let roots = if side == Side::A { &c.a_roots } else { &c.b_roots };
        return Ok(Some(roots.iter().map(|&w| (k, w)).collect()));
    }
    let models = FamilyBuilder::new().level(side, n, hatted).map_err(usage)?;
    Ok(Some(
        models
            .into_iter()
            .map(|m| {
                let r = m.root().expect("family models are rooted");
                store.push((m.name().to_string(), m));
                (store.len() - 1, r)
            })
            .collect(),
    ))
}

fn pointed<'a>(store: &'a [(String, KripkeModel)], points: &[(usize, usize)]) -> Vec<PointedModel<'a>> {
    points.iter().map(|&(k, w)| PointedModel::at(&store[k].1, w)).collect()
}
