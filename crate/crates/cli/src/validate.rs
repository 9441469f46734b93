//! Engine-versus-reference checks behind the `validate` command.

use crate::CliResult;
use fptas_core::model::DpInstance;
use fptas_core::oracle::{bracket, deterministic_equivalent, BracketOptions};
use fptas_core::rat::{self, Rat};
use fptas_core::scheme::ValueFnApprox;
use fptas_core::simulate::rollout;
use fptas_core::Error;
use num_traits::One;
use std::fmt;

pub struct Settings {
    pub paths: usize,
    pub seed: u64,
    pub grid: usize,
    pub cells: usize,
}

pub struct Line {
    pub passed: bool,
    pub name: &'static str,
    pub detail: String,
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn line(passed: bool, name: &'static str, detail: String) -> Line {
    Line { passed, name, detail }
}

/// Exact form when short, otherwise the decimal and the bit size.
fn show(x: &Rat) -> String {
    let exact = rat::format(x);
    if exact.len() <= 32 {
        format!("{exact} (~{:.6})", rat::to_f64(x))
    } else {
        format!("~{:.9} ({} bits)", rat::to_f64(x), rat::bit_size(x))
    }
}

pub fn report(inst: &DpInstance, vfa: &ValueFnApprox, s: Settings) -> CliResult<Vec<Line>> {
    let mut out = Vec::new();
    let c = &vfa.certificate;
    let value = vfa.value_at(&inst.initial_state)?;
    let factor = Rat::one() + &inst.eps;
    out.push(line(
        c.within_eps,
        "certificate",
        format!(
            "final claim K = {} against 1 + eps = {}",
            show(&c.final_claim.k),
            show(&factor)
        ),
    ));
    out.push(line(
        c.promises_kept,
        "stage claims",
        format!("{} stages within their promised factors", c.stages.len()),
    ));
    match deterministic_equivalent(inst) {
        Ok(de) => {
            let ok = de.value <= value && value <= &factor * &de.value;
            out.push(line(
                ok,
                "scenario tree",
                format!(
                    "z* = {} over {} paths, engine {}",
                    show(&de.value),
                    de.paths,
                    show(&value)
                ),
            ));
        }
        Err(Error::Precondition(why)) => {
            let b = bracket(
                inst,
                BracketOptions {
                    states: s.grid,
                    cells: s.cells,
                },
            )?;
            let ok = b.lower <= value && value <= &factor * &b.upper;
            out.push(line(
                ok,
                "grid bracket",
                format!(
                    "z* in [{}, {}], engine {} (scenario tree skipped: {why})",
                    show(&b.lower),
                    show(&b.upper),
                    show(&value)
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    }
    if s.paths > 0 {
        let r = rollout(inst, vfa, s.paths, s.seed)?;
        let v = rat::to_f64(&value);
        out.push(line(
            r.mean <= v + 3.0 * r.std_err,
            "rollout",
            format!(
                "mean {:.6} +- {:.6} over {} paths, bound {:.6}",
                r.mean, r.std_err, r.paths, v
            ),
        ));
    }
    Ok(out)
}
