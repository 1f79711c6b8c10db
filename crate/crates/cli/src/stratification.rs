use std::path::Path;

use anyhow::{anyhow, Result};

use duflot::filtration::WitnessSearch;
use duflot::io::read_stratification;
use duflot::poset::{associated_prime_transfer, check_topological, detection, truncation_check};

use crate::output::{facts, opt, Table};
use crate::{emit_report, emit_violations, load, Ctx};

pub fn check(ctx: &Ctx, path: &Path, truncation: bool) -> Result<bool> {
    let ts = load(path, read_stratification)?;
    let rep = check_topological(&ts);
    if !emit_report(ctx, &rep) || !truncation {
        return Ok(rep.is_ok());
    }
    let mut t = Table::new(&["i", "terms", "maps", "mismatches"]);
    let mut bad = Vec::new();
    for i in 0..=ts.poset.max_corank() + 1 {
        let tc = truncation_check(&ts, i, ctx.window.lo, ctx.window.hi)?;
        t.row(vec![i.to_string(), tc.compared_terms.to_string(), tc.compared_maps.to_string(), tc.mismatches.len().to_string()]);
        bad.extend(tc.mismatches.iter().map(|m| format!("truncation {i}: {m}")));
    }
    t.print(ctx.format);
    Ok(emit_violations(ctx, "truncation", &bad))
}

pub fn detect(ctx: &Ctx, path: &Path, d: usize) -> Result<bool> {
    let ts = load(path, read_stratification)?;
    let rep = detection(&ts, d, ctx.window.lo, ctx.window.hi);
    facts(&[("d", d.to_string()), ("depth_in_window", opt(rep.depth))]).print(ctx.format);
    let mut t = Table::new(&["degree", "kernel_dim"]);
    for (e, n) in &rep.kernel {
        t.row(vec![e.to_string(), n.to_string()]);
    }
    t.print(ctx.format);
    let bad = if rep.violated {
        vec![format!("depth is {d} but restriction to corank {d} strata has a kernel")]
    } else {
        Vec::new()
    };
    Ok(emit_violations(ctx, "detection", &bad))
}

pub fn transfer(ctx: &Ctx, path: &Path, element: Option<&str>) -> Result<bool> {
    let ts = load(path, read_stratification)?;
    let xs: Vec<usize> = match element {
        Some(name) => vec![ts.poset.index(name).ok_or_else(|| anyhow!("no poset element named {name:?}"))?],
        None => (0..ts.poset.len()).collect(),
    };
    let cfg = WitnessSearch { seed: ctx.seed, ..WitnessSearch::default() };
    let mut t = Table::new(&["element", "rank_V", "witness_L", "witness_T", "depth_T"]);
    let mut bad = Vec::new();
    for x in xs {
        let r = associated_prime_transfer(&ts, x, cfg, ctx.window.lo, ctx.window.hi)?;
        t.row(vec![
            r.element.clone(),
            r.rank_v.to_string(),
            opt(r.in_l.map(|w| w.degree)),
            opt(r.in_t.map(|w| w.degree)),
            opt(r.depth_t),
        ]);
        bad.extend(r.violations.iter().map(|v| format!("{}: {v}", r.element)));
    }
    t.print(ctx.format);
    Ok(emit_violations(ctx, "transfer", &bad))
}
