use std::path::Path;

use anyhow::{bail, Result};

use duflot::filtration::{
    check_bounds, is_prime_associated, toral_primes, witnessed_linear_primes, FreeRankFiltration, WitnessSearch,
};
use duflot::graded::{GradedModule, SubspaceV};
use duflot::io::{read_filtration, read_instance, Instance};
use duflot::koszul::local_cohomology as oracle;

use crate::output::{facts, opt, Table};
use crate::{emit_report, emit_violations, load, Ctx};

/// Rows of the canonical basis, e.g. `<1 0 2, 0 1 0>`; `0` for the zero space.
pub fn span(v: &SubspaceV) -> String {
    if v.rank() == 0 {
        return "0".into();
    }
    let rows: Vec<String> = v
        .canonical()
        .to_rows()
        .iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    format!("<{}>", rows.join(", "))
}

fn module_of(path: &Path) -> Result<GradedModule> {
    Ok(match load(path, read_instance)? {
        Instance::Module(m) => m,
        Instance::Filtration(f) => f.module().clone(),
        Instance::Stratification(ts) => ts.module()?,
        other => bail!("{}: expected a module, filtration or stratification file, found {}", path.display(), other.kind()),
    })
}

/// Loads and validates; prints the violations of an invalid filtration.
fn valid_filtration(ctx: &Ctx, path: &Path) -> Result<Option<FreeRankFiltration>> {
    let frf = load(path, read_filtration)?;
    let rep = frf.validate();
    if !rep.is_ok() {
        emit_report(ctx, &rep);
        return Ok(None);
    }
    Ok(Some(frf))
}

fn witness_cfg(ctx: &Ctx) -> WitnessSearch {
    WitnessSearch { seed: ctx.seed, ..WitnessSearch::default() }
}

pub fn local_cohomology(ctx: &Ctx, path: &Path) -> Result<bool> {
    let m = module_of(path)?;
    let lc = oracle(&m, ctx.window.lo, ctx.window.hi);
    let mut t = Table::new(&["i", "degree", "dim"]);
    for (&(i, d), cell) in &lc.cells {
        t.row(vec![i.to_string(), d.to_string(), opt(cell.dim())]);
    }
    t.print(ctx.format);
    let n = lc.uncertified_count();
    if n > 0 {
        eprintln!("note: {n} cell(s) not certified by the module window, shown as ?");
    }
    Ok(true)
}

pub fn check(ctx: &Ctx, path: &Path) -> Result<bool> {
    let frf = load(path, read_filtration)?;
    Ok(emit_report(ctx, &frf.validate()))
}

pub fn duflot_complex(ctx: &Ctx, path: &Path) -> Result<bool> {
    let Some(frf) = valid_filtration(ctx, path)? else { return Ok(false) };
    let dc = duflot::filtration::duflot_complex(&frf, ctx.window.lo, ctx.window.hi)?;
    let h = dc.cohomology();
    let mut t = Table::new(&["j", "degree", "dim", "rank_d", "H"]);
    for j in 0..=dc.top {
        for d in dc.lo..=dc.hi {
            let rank = if j < dc.top { opt(dc.diff(j, d).map(|m| m.rank())) } else { "0".into() };
            t.row(vec![j.to_string(), d.to_string(), dc.dim(j, d).to_string(), rank, opt(h.dim(j, d))]);
        }
    }
    t.print(ctx.format);
    let bad: Vec<String> = dc.square_failures().iter().map(|(j, d)| format!("d^{} d^{j} != 0 in degree {d}", j + 1)).collect();
    Ok(emit_violations(ctx, "square", &bad))
}

pub fn bounds(ctx: &Ctx, path: &Path) -> Result<bool> {
    let Some(frf) = valid_filtration(ctx, path)? else { return Ok(false) };
    let lc = oracle(frf.module(), ctx.window.lo, ctx.window.hi);
    let br = check_bounds(&frf, &lc)?;
    facts(&[
        ("depth_lower_bound", br.depth.to_string()),
        ("dimension", br.dim.to_string()),
        ("regularity_bound", opt(br.regularity_bound)),
        ("regularity_in_window", opt(br.regularity_seen)),
        ("uncertified_cells", lc.uncertified_count().to_string()),
    ])
    .print(ctx.format);
    Ok(emit_violations(ctx, "bounds", &br.violations))
}

pub fn associated(ctx: &Ctx, path: &Path) -> Result<bool> {
    let Some(frf) = valid_filtration(ctx, path)? else { return Ok(false) };
    let cfg = witness_cfg(ctx);
    let toral = toral_primes(&frf);
    let mut t = Table::new(&["V", "rank", "toral", "witness_degree"]);
    for tp in &toral {
        let w = is_prime_associated(&frf, tp, cfg);
        t.row(vec![span(&tp.v), tp.v.rank().to_string(), "yes".into(), opt(w.map(|w| w.degree))]);
    }
    let mut bad = Vec::new();
    for (v, w) in witnessed_linear_primes(frf.module(), cfg) {
        if toral.iter().any(|tp| tp.v.same_subspace(&v)) {
            continue;
        }
        t.row(vec![span(&v), v.rank().to_string(), "no".into(), w.degree.to_string()]);
        bad.push(format!("witness in degree {} has annihilator of {} which is not toral", w.degree, span(&v)));
    }
    t.print(ctx.format);
    Ok(emit_violations(ctx, "associated", &bad))
}
