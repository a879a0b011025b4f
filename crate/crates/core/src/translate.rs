//! Translations between fragments of the language.
//!
//! Three are model-independent ([`expand_closure`], [`closure_to_mu`],
//! [`scattered_eliminate_tangle`]); two are relative to a fixed model and
//! replace closed subterms by their constant truth value on it
//! ([`hat_eliminate_tangle`], [`eliminate_universal`]).

use thiserror::Error;

use crate::formula::{Formula, FreshVars};
use crate::kripke::{self, KripkeModel};
use crate::semantics::eval;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("model has no point at infinity over a GL frame")]
    NotHattedModel,
    #[error("subterm `{0}` depends on an enclosing fixpoint variable")]
    UnsupportedFragment(String),
}

/// Unfolds `<+> f` to `f | <> f` and `[+] f` to `f & [] f`, copying the
/// translated body.
pub fn expand_closure(f: &Formula) -> Formula {
    match f {
        Formula::DiaPlus(b) => {
            let t = expand_closure(b);
            Formula::or(t.clone(), Formula::dia(t))
        }
        Formula::BoxPlus(b) => {
            let t = expand_closure(b);
            Formula::and(t.clone(), Formula::boxed(t))
        }
        _ => f.map_children(expand_closure),
    }
}

/// Replaces `<+> f` by `mu q . f | <> q` and `[+] f` by `nu q . f & [] q`
/// with a fresh `q` per occurrence.
pub fn closure_to_mu(f: &Formula) -> Formula {
    let mut fresh = FreshVars::for_formula(f);
    closure_to_mu_with(f, &mut fresh)
}

fn closure_to_mu_with(f: &Formula, fresh: &mut FreshVars) -> Formula {
    match f {
        Formula::DiaPlus(b) => {
            let t = closure_to_mu_with(b, fresh);
            let q = fresh.fresh();
            Formula::mu(q.clone(), Formula::or(t, Formula::dia(Formula::atom(q))))
        }
        Formula::BoxPlus(b) => {
            let t = closure_to_mu_with(b, fresh);
            let q = fresh.fresh();
            Formula::nu(q.clone(), Formula::and(t, Formula::boxed(Formula::atom(q))))
        }
        _ => f.map_children(|c| closure_to_mu_with(c, fresh)),
    }
}

/// Tangles collapse on scattered frames: `<*>` becomes `F`, `[*]` becomes `T`.
pub fn scattered_eliminate_tangle(f: &Formula) -> Formula {
    match f {
        Formula::TangleDia(_) => Formula::Bot,
        Formula::TangleBox(_) => Formula::Top,
        _ => f.map_children(scattered_eliminate_tangle),
    }
}

fn constant(b: bool) -> Formula {
    if b {
        Formula::Top
    } else {
        Formula::Bot
    }
}

// Rewrites the subterms selected by `resolve` bottom-up. `resolve` sees the
// already-translated node and returns its replacement, or `None` to keep it.
fn rewrite_closed(
    f: &Formula,
    bound: &mut Vec<String>,
    resolve: &impl Fn(&Formula) -> Option<Formula>,
    selected: &impl Fn(&Formula) -> bool,
) -> Result<Formula, TranslateError> {
    let inner = match f {
        Formula::Mu(p, b) | Formula::Nu(p, b) => {
            bound.push(p.clone());
            let body = rewrite_closed(b, bound, resolve, selected);
            bound.pop();
            let body = body?;
            if matches!(f, Formula::Mu(..)) {
                Formula::mu(p.clone(), body)
            } else {
                Formula::nu(p.clone(), body)
            }
        }
        _ => {
            let mut err = None;
            let out = f.map_children(|c| {
                rewrite_closed(c, bound, resolve, selected).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    Formula::Bot
                })
            });
            if let Some(e) = err {
                return Err(e);
            }
            out
        }
    };
    if !selected(&inner) {
        return Ok(inner);
    }
    if inner.free_atoms().iter().any(|a| bound.contains(a)) {
        return Err(TranslateError::UnsupportedFragment(inner.to_string()));
    }
    Ok(resolve(&inner).unwrap_or(inner))
}

/// Replaces each tangle by its constant value on a hatted GL model: by the
/// truth of the (translated) conjunction of its bodies at the point at
/// infinity, and dually for `[*]`.
pub fn hat_eliminate_tangle(f: &Formula, m: &KripkeModel) -> Result<Formula, TranslateError> {
    let inf = kripke::infinity_world(m).ok_or(TranslateError::NotHattedModel)?;
    let mut keep = m.world_set(0..m.len());
    keep.set(inf, false);
    if !kripke::classify(&m.restrict(&keep)).gl {
        return Err(TranslateError::NotHattedModel);
    }
    let at_inf = |g: &Formula| eval(m, g, None).contains(inf);
    rewrite_closed(
        f,
        &mut Vec::new(),
        &|g| match g {
            Formula::TangleDia(bs) => Some(constant(at_inf(&Formula::conj(bs.iter().cloned())))),
            Formula::TangleBox(bs) => Some(constant(at_inf(&Formula::disj(bs.iter().cloned())))),
            _ => None,
        },
        &|g| matches!(g, Formula::TangleDia(_) | Formula::TangleBox(_)),
    )
}

/// Replaces each `A f` / `E f` by its constant global truth value on `m`.
pub fn eliminate_universal(f: &Formula, m: &KripkeModel) -> Result<Formula, TranslateError> {
    rewrite_closed(
        f,
        &mut Vec::new(),
        &|g| match g {
            Formula::Forall(_) | Formula::Exists(_) => Some(constant(eval(m, g, None).is_full())),
            _ => None,
        },
        &|g| matches!(g, Formula::Forall(_) | Formula::Exists(_)),
    )
}
