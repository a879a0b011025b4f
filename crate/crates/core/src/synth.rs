//! Exact minimal separating formulas and game-tree verification.
//!
//! [`min_separating_formula`] enumerates formula extensions ("signatures")
//! over a fixed universe of pointed models by increasing size, keeping each
//! distinct signature once at the first size it appears. The first stored
//! signature that is true on every left point and false on every right point
//! gives the minimal size and a canonical witness.
//!
//! [`meg_verify`] plays the formula-size game with Hercules following the
//! syntax tree of a given formula against a greedy Hydra.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;
use thiserror::Error;

use crate::formula::Formula;
use crate::kripke::{bisimulation_classes, disjoint_union_with_offsets, KripkeModel, PointedModel};
use crate::semantics::eval;

/// Default cap on signature storage, in bytes.
pub const DEFAULT_MEM_CAP: usize = 2 << 30;

/// Largest universe the search supports, in points.
pub const MAX_POINTS: usize = 64 * 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    Literal,
    And,
    Or,
    Dia,
    Box,
    Forall,
    Exists,
}

/// The operators a synthesized formula may use. `T` and `F` are always
/// available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpSet {
    pub literal: bool,
    pub and: bool,
    pub or: bool,
    pub dia: bool,
    pub boxes: bool,
    pub forall: bool,
    pub exists: bool,
}

impl OpSet {
    /// Literals, `&`, `|`, `<>`, `[]`.
    pub fn basic() -> Self {
        OpSet {
            literal: true,
            and: true,
            or: true,
            dia: true,
            boxes: true,
            forall: false,
            exists: false,
        }
    }

    /// The basic operators plus `A` and `E`.
    pub fn with_universal() -> Self {
        OpSet {
            forall: true,
            exists: true,
            ..Self::basic()
        }
    }

    pub fn none() -> Self {
        OpSet {
            literal: false,
            and: false,
            or: false,
            dia: false,
            boxes: false,
            forall: false,
            exists: false,
        }
    }

    pub fn contains(&self, op: Op) -> bool {
        match op {
            Op::Literal => self.literal,
            Op::And => self.and,
            Op::Or => self.or,
            Op::Dia => self.dia,
            Op::Box => self.boxes,
            Op::Forall => self.forall,
            Op::Exists => self.exists,
        }
    }

    pub fn insert(&mut self, op: Op) {
        match op {
            Op::Literal => self.literal = true,
            Op::And => self.and = true,
            Op::Or => self.or = true,
            Op::Dia => self.dia = true,
            Op::Box => self.boxes = true,
            Op::Forall => self.forall = true,
            Op::Exists => self.exists = true,
        }
    }

    pub fn universal(&self) -> bool {
        self.forall || self.exists
    }

    /// Parses a comma-separated list such as `lit,dia,box,and,or`; `all`
    /// enables everything.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut ops = OpSet::none();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "all" => ops = OpSet::with_universal(),
                "lit" | "literal" => ops.insert(Op::Literal),
                "and" => ops.insert(Op::And),
                "or" => ops.insert(Op::Or),
                "dia" => ops.insert(Op::Dia),
                "box" => ops.insert(Op::Box),
                "forall" => ops.insert(Op::Forall),
                "exists" => ops.insert(Op::Exists),
                other => return Err(format!("unknown operator `{other}`")),
            }
        }
        Ok(ops)
    }
}

/// Which points must satisfy (left) and falsify (right) the separator.
#[derive(Debug, Clone)]
pub struct SynthProblem<'a> {
    pub left: Vec<PointedModel<'a>>,
    pub right: Vec<PointedModel<'a>>,
    pub ops: OpSet,
    pub atoms: BTreeSet<String>,
    pub max_size: usize,
}

impl<'a> SynthProblem<'a> {
    /// A problem over all atoms true somewhere in the participating models.
    pub fn new(left: Vec<PointedModel<'a>>, right: Vec<PointedModel<'a>>, ops: OpSet, max_size: usize) -> Self {
        let atoms = left
            .iter()
            .chain(&right)
            .flat_map(|p| p.model.atoms())
            .collect();
        SynthProblem {
            left,
            right,
            ops,
            atoms,
            max_size,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Collapse bisimilar points before searching.
    pub quotient: bool,
    pub mem_cap_bytes: usize,
    /// Worker count; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            quotient: true,
            mem_cap_bytes: DEFAULT_MEM_CAP,
            threads: None,
        }
    }
}

impl SynthConfig {
    /// Defaults, with the memory cap taken from `SMC_MEM_CAP` when set.
    pub fn from_env() -> Result<Self, SynthError> {
        let mut cfg = Self::default();
        if let Ok(text) = std::env::var("SMC_MEM_CAP") {
            cfg.mem_cap_bytes =
                parse_bytes(&text).ok_or(SynthError::BadMemCap(text))?;
        }
        Ok(cfg)
    }
}

/// Parses `1024`, `512K`, `64M`, `2G` (binary multiples).
pub fn parse_bytes(text: &str) -> Option<usize> {
    let t = text.trim();
    let (digits, mult) = match t.chars().last()? {
        'k' | 'K' => (&t[..t.len() - 1], 1usize << 10),
        'm' | 'M' => (&t[..t.len() - 1], 1 << 20),
        'g' | 'G' => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    digits.trim().parse::<usize>().ok()?.checked_mul(mult)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("signature storage exceeded the memory cap of {cap_bytes} bytes while building size {at_size}")]
    MemoryBudgetExceeded { cap_bytes: usize, at_size: usize },
    #[error("universe of {0} points exceeds the supported maximum")]
    UniverseTooLarge(usize),
    #[error("invalid SMC_MEM_CAP value `{0}`")]
    BadMemCap(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    /// A left point is indistinguishable from a right point.
    BisimilarPair { left: String, right: String },
    /// Every expressible signature has been generated without a separator.
    Saturated { at_size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthOutcome {
    Found { size: usize, witness: Formula },
    Infeasible(Infeasibility),
    /// No separator of size at most `max_size` exists.
    BudgetExceeded { max_size: usize },
}

impl fmt::Display for SynthOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthOutcome::Found { size, witness } => write!(f, "min={size} witness=({witness})"),
            SynthOutcome::Infeasible(Infeasibility::BisimilarPair { left, right }) => {
                write!(f, "infeasible: {left} is bisimilar to {right}")
            }
            SynthOutcome::Infeasible(Infeasibility::Saturated { at_size }) => {
                write!(f, "infeasible: no separator exists (saturated at size {at_size})")
            }
            SynthOutcome::BudgetExceeded { max_size } => {
                write!(f, "none: no separator of size <= {max_size}")
            }
        }
    }
}

/// Search statistics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SynthStats {
    pub universe_points: usize,
    /// Distinct signatures first reached at each size (index 0 unused).
    pub layer_sizes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthReport {
    pub outcome: SynthOutcome,
    pub stats: SynthStats,
}

// ---------------------------------------------------------------------------
// Universe

/// The points over which signatures are computed: every world of every
/// participating model, optionally collapsed into bisimulation classes.
#[derive(Debug, Clone)]
pub struct Universe {
    pub labels: Vec<String>,
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    atoms: Vec<String>,
    // holds[a][point]
    holds: Vec<Vec<bool>>,
    // points of each model; a partition of the universe when per-model
    model_points: Vec<Vec<usize>>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Universe {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn successors(&self, point: usize) -> &[usize] {
        &self.succs[point]
    }
}

fn model_key(m: &KripkeModel) -> *const KripkeModel {
    m as *const KripkeModel
}

// Distinct models in first-appearance order, and the index of each point's model.
fn participating<'a>(points: impl Iterator<Item = &'a PointedModel<'a>>) -> Vec<&'a KripkeModel> {
    let mut models: Vec<&KripkeModel> = Vec::new();
    for p in points {
        if !models.iter().any(|m| std::ptr::eq(*m, p.model)) {
            models.push(p.model);
        }
    }
    models
}

/// How points are collapsed when building a universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collapse {
    None,
    WithinModels,
    AcrossModels,
}

pub fn build_universe(p: &SynthProblem<'_>, collapse: Collapse) -> Universe {
    let models = participating(p.left.iter().chain(&p.right));
    let (union, offsets) = disjoint_union_with_offsets(models.iter().copied());
    let model_of_world: Vec<usize> = (0..union.len())
        .map(|w| offsets.iter().rposition(|&o| o <= w).unwrap_or(0))
        .collect();
    let class_of: Vec<usize> = match collapse {
        Collapse::None => (0..union.len()).collect(),
        Collapse::AcrossModels => bisimulation_classes(&union, &p.atoms),
        Collapse::WithinModels => {
            let mut out = vec![0; union.len()];
            let mut next = 0;
            for (k, m) in models.iter().enumerate() {
                let local = bisimulation_classes(m, &p.atoms);
                let count = local.iter().max().map_or(0, |c| c + 1);
                for (w, c) in local.into_iter().enumerate() {
                    out[offsets[k] + w] = next + c;
                }
                next += count;
            }
            out
        }
    };
    let count = class_of.iter().max().map_or(0, |c| c + 1);
    let mut rep = vec![usize::MAX; count];
    for (w, &c) in class_of.iter().enumerate() {
        if rep[c] == usize::MAX {
            rep[c] = w;
        }
    }
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for (a, b) in union.edges() {
        succs[class_of[a]].insert(class_of[b]);
    }
    let mut preds = vec![Vec::new(); count];
    for (a, s) in succs.iter().enumerate() {
        for &b in s {
            preds[b].push(a);
        }
    }
    let atoms: Vec<String> = p.atoms.iter().cloned().collect();
    let holds = atoms
        .iter()
        .map(|a| rep.iter().map(|&w| union.satisfies_atom(w, a)).collect())
        .collect();
    let mut model_points = vec![BTreeSet::new(); models.len()];
    for (w, &c) in class_of.iter().enumerate() {
        model_points[model_of_world[w]].insert(c);
    }
    let locate = |pm: &PointedModel<'_>| {
        let k = models
            .iter()
            .position(|m| std::ptr::eq(*m, pm.model))
            .expect("point model participates");
        class_of[offsets[k] + pm.world]
    };
    let labels = rep
        .iter()
        .map(|&w| {
            let k = model_of_world[w];
            format!("{}:{}", models[k].name(), models[k].world_name(w - offsets[k]))
        })
        .collect();
    Universe {
        labels,
        succs: succs.into_iter().map(|s| s.into_iter().collect()).collect(),
        preds,
        atoms,
        holds,
        model_points: model_points
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect(),
        left: p.left.iter().map(locate).collect(),
        right: p.right.iter().map(locate).collect(),
    }
}

// A left/right pair that no formula of the language can separate.
fn bisimilar_cross_pair(p: &SynthProblem<'_>) -> Option<(String, String)> {
    let models = participating(p.left.iter().chain(&p.right));
    let (union, offsets) = disjoint_union_with_offsets(models.iter().copied());
    let class = bisimulation_classes(&union, &p.atoms);
    let index = |m: &KripkeModel| {
        models
            .iter()
            .position(|x| std::ptr::eq(*x, m))
            .expect("point model participates")
    };
    let globally = |a: usize, b: usize| {
        let classes = |k: usize| {
            let end = offsets.get(k + 1).copied().unwrap_or(union.len());
            (offsets[k]..end).map(|w| class[w]).collect::<BTreeSet<_>>()
        };
        classes(a) == classes(b)
    };
    for l in &p.left {
        for r in &p.right {
            let (kl, kr) = (index(l.model), index(r.model));
            if class[offsets[kl] + l.world] != class[offsets[kr] + r.world] {
                continue;
            }
            if !p.ops.universal() || kl == kr || globally(kl, kr) {
                return Some((l.to_string(), r.to_string()));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Signatures

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Sig<const W: usize>([u64; W]);

impl<const W: usize> Sig<W> {
    fn zero() -> Self {
        Sig([0; W])
    }

    fn from_points(points: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::zero();
        for p in points {
            s.0[p / 64] |= 1 << (p % 64);
        }
        s
    }

    fn and(self, o: Self) -> Self {
        let mut r = self;
        for k in 0..W {
            r.0[k] &= o.0[k];
        }
        r
    }

    fn or(self, o: Self) -> Self {
        let mut r = self;
        for k in 0..W {
            r.0[k] |= o.0[k];
        }
        r
    }

    fn and_not(self, o: Self) -> Self {
        let mut r = self;
        for k in 0..W {
            r.0[k] &= !o.0[k];
        }
        r
    }

    fn is_zero(self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn ones(self) -> impl Iterator<Item = usize> {
        (0..W).flat_map(move |k| {
            let mut word = self.0[k];
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(k * 64 + b)
            })
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Deriv {
    Top,
    Bot,
    Lit(u32, bool),
    Dia(u32),
    Box(u32),
    And(u32, u32),
    Or(u32, u32),
    Exists(u32),
    Forall(u32),
}

struct Tables<const W: usize> {
    full: Sig<W>,
    preds: Vec<Sig<W>>,
    models: Vec<Sig<W>>,
    left: Sig<W>,
    right: Sig<W>,
}

impl<const W: usize> Tables<W> {
    fn dia(&self, s: Sig<W>) -> Sig<W> {
        s.ones().fold(Sig::zero(), |acc, q| acc.or(self.preds[q]))
    }

    fn boxed(&self, s: Sig<W>) -> Sig<W> {
        self.full.and_not(self.dia(self.full.and_not(s)))
    }

    fn exists(&self, s: Sig<W>) -> Sig<W> {
        self.models
            .iter()
            .filter(|m| !s.and(**m).is_zero())
            .fold(Sig::zero(), |acc, m| acc.or(*m))
    }

    fn forall(&self, s: Sig<W>) -> Sig<W> {
        self.models
            .iter()
            .filter(|m| s.and(**m) == **m)
            .fold(Sig::zero(), |acc, m| acc.or(*m))
    }

    fn separates(&self, s: Sig<W>) -> bool {
        s.and(self.left) == self.left && s.and(self.right).is_zero()
    }
}

struct Store<const W: usize> {
    map: FxHashMap<Sig<W>, u32>,
    sigs: Vec<Sig<W>>,
    derivs: Vec<Deriv>,
    layers: Vec<Vec<u32>>,
    bytes_per_entry: usize,
}

impl<const W: usize> Store<W> {
    fn bytes(&self) -> usize {
        self.sigs.len() * self.bytes_per_entry
    }

    // Returns the new id when `sig` was not stored yet.
    fn insert(&mut self, sig: Sig<W>, size: usize, d: Deriv) -> Option<u32> {
        if self.map.contains_key(&sig) {
            return None;
        }
        let id = self.sigs.len() as u32;
        self.map.insert(sig, id);
        self.sigs.push(sig);
        self.derivs.push(d);
        self.layers[size].push(id);
        Some(id)
    }

    fn formula(&self, id: u32, atoms: &[String]) -> Formula {
        match self.derivs[id as usize] {
            Deriv::Top => Formula::Top,
            Deriv::Bot => Formula::Bot,
            Deriv::Lit(a, true) => Formula::atom(atoms[a as usize].clone()),
            Deriv::Lit(a, false) => Formula::neg_atom(atoms[a as usize].clone()),
            Deriv::Dia(x) => Formula::dia(self.formula(x, atoms)),
            Deriv::Box(x) => Formula::boxed(self.formula(x, atoms)),
            Deriv::And(x, y) => Formula::and(self.formula(x, atoms), self.formula(y, atoms)),
            Deriv::Or(x, y) => Formula::or(self.formula(x, atoms), self.formula(y, atoms)),
            Deriv::Exists(x) => Formula::exists(self.formula(x, atoms)),
            Deriv::Forall(x) => Formula::forall(self.formula(x, atoms)),
        }
    }
}

enum Step {
    Continue,
    Found(u32),
}

const UNARY_CHUNK: usize = 4096;
const PAIR_BATCH: usize = 64;

fn search<const W: usize>(
    u: &Universe,
    p: &SynthProblem<'_>,
    cfg: &SynthConfig,
    stats: &mut SynthStats,
) -> Result<SynthOutcome, SynthError> {
    let t = Tables::<W> {
        full: Sig::from_points(0..u.len()),
        preds: u.preds.iter().map(|ps| Sig::from_points(ps.iter().copied())).collect(),
        models: u
            .model_points
            .iter()
            .map(|ps| Sig::from_points(ps.iter().copied()))
            .collect(),
        left: Sig::from_points(u.left.iter().copied()),
        right: Sig::from_points(u.right.iter().copied()),
    };
    let mut store = Store::<W> {
        map: FxHashMap::default(),
        sigs: Vec::new(),
        derivs: Vec::new(),
        layers: vec![Vec::new(); p.max_size + 1],
        bytes_per_entry: 2 * std::mem::size_of::<Sig<W>>()
            + std::mem::size_of::<Deriv>()
            + 3 * std::mem::size_of::<u32>()
            + 8,
    };
    let found = |store: &Store<W>, id: u32, size: usize| SynthOutcome::Found {
        size,
        witness: store.formula(id, &u.atoms),
    };

    // Size 1.
    let mut base = vec![(t.full, Deriv::Top), (Sig::zero(), Deriv::Bot)];
    if p.ops.literal {
        for (a, holds) in u.holds.iter().enumerate() {
            let pos = Sig::from_points((0..u.len()).filter(|&q| holds[q]));
            base.push((pos, Deriv::Lit(a as u32, true)));
            base.push((t.full.and_not(pos), Deriv::Lit(a as u32, false)));
        }
    }
    for (sig, d) in base {
        if let Some(id) = store.insert(sig, 1, d) {
            if t.separates(sig) {
                stats.layer_sizes = store.layers.iter().map(Vec::len).collect();
                return Ok(found(&store, id, 1));
            }
        }
    }

    let mut last_nonempty = 1;
    for k in 2..=p.max_size {
        match build_layer(&t, &mut store, &p.ops, k, cfg)? {
            Step::Found(id) => {
                stats.layer_sizes = store.layers[..=k].iter().map(Vec::len).collect();
                return Ok(found(&store, id, k));
            }
            Step::Continue => {}
        }
        if !store.layers[k].is_empty() {
            last_nonempty = k;
        } else if k > 2 * last_nonempty {
            stats.layer_sizes = store.layers[..=k].iter().map(Vec::len).collect();
            return Ok(SynthOutcome::Infeasible(Infeasibility::Saturated { at_size: k }));
        }
    }
    stats.layer_sizes = store.layers.iter().map(Vec::len).collect();
    Ok(SynthOutcome::BudgetExceeded {
        max_size: p.max_size,
    })
}

// Merges candidates in order; stops at the first separator.
fn merge<const W: usize>(
    t: &Tables<W>,
    store: &mut Store<W>,
    k: usize,
    cfg: &SynthConfig,
    candidates: impl IntoIterator<Item = (Sig<W>, Deriv)>,
) -> Result<Step, SynthError> {
    for (sig, d) in candidates {
        if let Some(id) = store.insert(sig, k, d) {
            if t.separates(sig) {
                return Ok(Step::Found(id));
            }
        }
    }
    if store.bytes() > cfg.mem_cap_bytes {
        return Err(SynthError::MemoryBudgetExceeded {
            cap_bytes: cfg.mem_cap_bytes,
            at_size: k,
        });
    }
    Ok(Step::Continue)
}

fn build_layer<const W: usize>(
    t: &Tables<W>,
    store: &mut Store<W>,
    ops: &OpSet,
    k: usize,
    cfg: &SynthConfig,
) -> Result<Step, SynthError> {
    let prev = store.layers[k - 1].clone();

    let unary = |store: &mut Store<W>, f: &(dyn Fn(Sig<W>) -> Sig<W> + Sync), mk: fn(u32) -> Deriv| {
        for chunk in prev.chunks(UNARY_CHUNK) {
            let sigs = &store.sigs;
            let map = &store.map;
            let cands: Vec<(Sig<W>, Deriv)> = chunk
                .par_iter()
                .filter_map(|&x| {
                    let s = f(sigs[x as usize]);
                    (!map.contains_key(&s)).then_some((s, mk(x)))
                })
                .collect();
            if let Step::Found(id) = merge(t, store, k, cfg, cands)? {
                return Ok(Step::Found(id));
            }
        }
        Ok(Step::Continue)
    };

    if ops.dia {
        if let Step::Found(id) = unary(store, &|s| t.dia(s), Deriv::Dia)? {
            return Ok(Step::Found(id));
        }
    }
    if ops.boxes {
        if let Step::Found(id) = unary(store, &|s| t.boxed(s), Deriv::Box)? {
            return Ok(Step::Found(id));
        }
    }
    for (enabled, is_and) in [(ops.and, true), (ops.or, false)] {
        if !enabled {
            continue;
        }
        for a in 1..=(k - 1) / 2 {
            let b = k - 1 - a;
            let xs = store.layers[a].clone();
            let ys = store.layers[b].clone();
            for (bi, batch) in xs.chunks(PAIR_BATCH).enumerate() {
                let sigs = &store.sigs;
                let map = &store.map;
                let per_x: Vec<Vec<(Sig<W>, Deriv)>> = batch
                    .par_iter()
                    .enumerate()
                    .map(|(xi, &x)| {
                        let sx = sigs[x as usize];
                        let start = if a == b { bi * PAIR_BATCH + xi + 1 } else { 0 };
                        let mut seen = FxHashSet::default();
                        let mut out = Vec::new();
                        for &y in &ys[start..] {
                            let sy = sigs[y as usize];
                            let s = if is_and { sx.and(sy) } else { sx.or(sy) };
                            if !map.contains_key(&s) && seen.insert(s) {
                                let d = if is_and { Deriv::And(x, y) } else { Deriv::Or(x, y) };
                                out.push((s, d));
                            }
                        }
                        out
                    })
                    .collect();
                if let Step::Found(id) = merge(t, store, k, cfg, per_x.into_iter().flatten())? {
                    return Ok(Step::Found(id));
                }
            }
        }
    }
    if ops.exists {
        if let Step::Found(id) = unary(store, &|s| t.exists(s), Deriv::Exists)? {
            return Ok(Step::Found(id));
        }
    }
    if ops.forall {
        if let Step::Found(id) = unary(store, &|s| t.forall(s), Deriv::Forall)? {
            return Ok(Step::Found(id));
        }
    }
    Ok(Step::Continue)
}

macro_rules! dispatch_width {
    ($w:expr, $u:expr, $p:expr, $cfg:expr, $stats:expr; $($n:literal)*) => {
        match $w {
            $($n => search::<$n>($u, $p, $cfg, $stats),)*
            _ => Err(SynthError::UniverseTooLarge($u.len())),
        }
    };
}

/// Least size of a formula over `p.ops` and `p.atoms` that holds at every
/// left point and fails at every right point, with a canonical witness.
pub fn min_separating_formula_with(
    p: &SynthProblem<'_>,
    cfg: &SynthConfig,
) -> Result<SynthReport, SynthError> {
    let mut stats = SynthStats::default();
    if let Some((left, right)) = bisimilar_cross_pair(p) {
        return Ok(SynthReport {
            outcome: SynthOutcome::Infeasible(Infeasibility::BisimilarPair { left, right }),
            stats,
        });
    }
    let collapse = match (cfg.quotient, p.ops.universal()) {
        (false, _) => Collapse::None,
        (true, false) => Collapse::AcrossModels,
        (true, true) => Collapse::WithinModels,
    };
    let u = build_universe(p, collapse);
    stats.universe_points = u.len();
    if u.len() > MAX_POINTS {
        return Err(SynthError::UniverseTooLarge(u.len()));
    }
    let width = u.len().div_ceil(64).max(1);
    let run = |stats: &mut SynthStats| {
        dispatch_width!(width, &u, p, cfg, stats; 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16)
    };
    let outcome = match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| run(&mut stats))
        }
        None => run(&mut stats),
    }?;
    Ok(SynthReport { outcome, stats })
}

/// [`min_separating_formula_with`] under the default configuration (with
/// `SMC_MEM_CAP` honoured).
pub fn min_separating_formula(p: &SynthProblem<'_>) -> Result<SynthOutcome, SynthError> {
    let cfg = SynthConfig::from_env()?;
    Ok(min_separating_formula_with(p, &cfg)?.outcome)
}

/// Whether `f` holds at every left point and fails at every right point.
pub fn verify_separator(f: &Formula, left: &[PointedModel<'_>], right: &[PointedModel<'_>]) -> bool {
    let mut cache: HashMap<*const KripkeModel, crate::semantics::TruthSet> = HashMap::new();
    let mut truth = |pm: &PointedModel<'_>| {
        cache
            .entry(model_key(pm.model))
            .or_insert_with(|| eval(pm.model, f, None))
            .contains(pm.world)
    };
    left.iter().all(&mut truth) && !right.iter().any(truth)
}

// ---------------------------------------------------------------------------
// Game trees

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct GameNode {
    pub id: usize,
    pub label: String,
    pub parent: Option<usize>,
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub stub: bool,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct GameTree {
    pub nodes: Vec<GameNode>,
}

impl GameTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game tree serializes")
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub enum MegOutcome {
    Closed(GameTree),
    /// The play could not be closed at `node`; `tree` is the partial play.
    Failed {
        node: usize,
        reason: String,
        tree: GameTree,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MegError {
    #[error("operator outside the game language in `{0}`")]
    UnsupportedOperator(String),
}

type Point<'a> = (&'a KripkeModel, usize);

struct Game<'a> {
    atoms: BTreeSet<String>,
    truth: HashMap<(*const KripkeModel, *const Formula), crate::semantics::TruthSet>,
    bisim: HashMap<(*const KripkeModel, *const KripkeModel), BTreeSet<(usize, usize)>>,
    tree: GameTree,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<'a> Game<'a> {
    fn holds(&mut self, f: &Formula, p: Point<'a>) -> bool {
        self.truth
            .entry((model_key(p.0), f as *const Formula))
            .or_insert_with(|| eval(p.0, f, None))
            .contains(p.1)
    }

    fn bisimilar(&mut self, l: Point<'a>, r: Point<'a>) -> bool {
        let atoms = &self.atoms;
        self.bisim
            .entry((model_key(l.0), model_key(r.0)))
            .or_insert_with(|| crate::bisim::max_bisimulation(l.0, r.0, Some(atoms)).pairs)
            .contains(&(l.1, r.1))
    }

    fn label(p: &Point<'_>) -> String {
        format!("{}:{}", p.0.name(), p.0.world_name(p.1))
    }

    fn play(
        &mut self,
        f: &Formula,
        left: Vec<Point<'a>>,
        right: Vec<Point<'a>>,
        parent: Option<usize>,
    ) -> Result<(), (usize, String)> {
        let id = self.tree.nodes.len();
        let label = match f {
            Formula::Or(..) => "|".to_string(),
            Formula::And(..) => "&".to_string(),
            Formula::Dia(_) => "<>".to_string(),
            Formula::Box(_) => "[]".to_string(),
            lit => lit.to_string(),
        };
        self.tree.nodes.push(GameNode {
            id,
            label,
            parent,
            left: left.iter().map(Self::label).collect(),
            right: right.iter().map(Self::label).collect(),
            stub: false,
        });
        for &l in &left {
            for &r in &right {
                if self.bisimilar(l, r) {
                    return Err((
                        id,
                        format!("{} and {} are bisimilar", Self::label(&l), Self::label(&r)),
                    ));
                }
            }
        }
        match f {
            Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::NegAtom(_) => {
                let ok = left.iter().all(|&l| self.holds(f, l))
                    && !right.iter().any(|&r| self.holds(f, r));
                if !ok {
                    return Err((id, format!("literal move {f} is not available")));
                }
                self.tree.nodes[id].stub = true;
                Ok(())
            }
            Formula::Or(a, b) => {
                let (l1, l2): (Vec<_>, Vec<_>) = left.into_iter().partition(|&l| self.holds(a, l));
                self.play(a, l1, right.clone(), Some(id))?;
                self.play(b, l2, right, Some(id))
            }
            Formula::And(a, b) => {
                let (r1, r2): (Vec<_>, Vec<_>) = right.into_iter().partition(|&r| !self.holds(a, r));
                self.play(a, left.clone(), r1, Some(id))?;
                self.play(b, left, r2, Some(id))
            }
            Formula::Dia(a) => {
                let mut l1 = Vec::new();
                for &(m, w) in &left {
                    let preferred = m.succ_of(w).filter(|&s| self.holds(a, (m, s)));
                    let pick = preferred
                        .or_else(|| m.successors(w).iter().copied().find(|&s| self.holds(a, (m, s))));
                    match pick {
                        Some(s) => push_unique(&mut l1, (m, s)),
                        None => {
                            return Err((
                                id,
                                format!("no successor of {} satisfies {a}", Self::label(&(m, w))),
                            ))
                        }
                    }
                }
                let mut r1 = Vec::new();
                for &(m, w) in &right {
                    for &s in m.successors(w) {
                        push_unique(&mut r1, (m, s));
                    }
                }
                self.play(a, l1, r1, Some(id))
            }
            Formula::Box(a) => {
                let mut r1 = Vec::new();
                for &(m, w) in &right {
                    match m.successors(w).iter().copied().find(|&s| !self.holds(a, (m, s))) {
                        Some(s) => push_unique(&mut r1, (m, s)),
                        None => {
                            return Err((
                                id,
                                format!("no successor of {} falsifies {a}", Self::label(&(m, w))),
                            ))
                        }
                    }
                }
                let mut l1 = Vec::new();
                for &(m, w) in &left {
                    for &s in m.successors(w) {
                        push_unique(&mut l1, (m, s));
                    }
                }
                self.play(a, l1, r1, Some(id))
            }
            _ => unreachable!("checked before play"),
        }
    }
}

fn push_unique<'a>(v: &mut Vec<Point<'a>>, p: Point<'a>) {
    if !v.iter().any(|q| std::ptr::eq(q.0, p.0) && q.1 == p.1) {
        v.push(p);
    }
}

/// Plays the game with Hercules following the syntax tree of `f` and a
/// greedy Hydra. A closed play has exactly `f.size()` nodes.
pub fn meg_verify(
    f: &Formula,
    left: &[PointedModel<'_>],
    right: &[PointedModel<'_>],
) -> Result<MegOutcome, MegError> {
    let outside = f.any(&|g| {
        !matches!(
            g,
            Formula::Top
                | Formula::Bot
                | Formula::Atom(_)
                | Formula::NegAtom(_)
                | Formula::And(..)
                | Formula::Or(..)
                | Formula::Dia(_)
                | Formula::Box(_)
        )
    });
    if outside {
        return Err(MegError::UnsupportedOperator(f.to_string()));
    }
    let mut game = Game {
        atoms: f.free_atoms(),
        truth: HashMap::new(),
        bisim: HashMap::new(),
        tree: GameTree::default(),
        _marker: std::marker::PhantomData,
    };
    let mut l = Vec::new();
    for p in left {
        push_unique(&mut l, (p.model, p.world));
    }
    let mut r = Vec::new();
    for p in right {
        push_unique(&mut r, (p.model, p.world));
    }
    Ok(match game.play(f, l, r, None) {
        Ok(()) => MegOutcome::Closed(game.tree),
        Err((node, reason)) => MegOutcome::Failed {
            node,
            reason,
            tree: game.tree,
        },
    })
}
