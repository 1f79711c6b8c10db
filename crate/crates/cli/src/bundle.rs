use std::path::Path;

use anyhow::{bail, Result};

use duflot::io::{read_bundle, read_instance, read_kcomplex, Instance};
use duflot::kbundle::{
    check_kbundle, hypercohomology_ss, resolution_for, tate_cyclic, tate_shift_check, two_row, FiniteGroup, KBundle,
    KComplex, KModule,
};
use duflot::matrix::{is_prime, Matrix};

use crate::output::{facts, opt, Table};
use crate::{emit_report, emit_violations, load, Ctx};

pub fn check(ctx: &Ctx, path: &Path) -> Result<bool> {
    let b = load(path, read_bundle)?;
    let rep = b.validate();
    if !emit_report(ctx, &rep) {
        return Ok(false);
    }
    let br = check_kbundle(&b, ctx.window.lo, ctx.window.hi)?;
    facts(&[
        ("group_order", b.group().order().to_string()),
        ("degrees_checked", br.checked.len().to_string()),
        ("degrees_skipped", br.skipped.len().to_string()),
    ])
    .print(ctx.format);
    if !br.skipped.is_empty() {
        eprintln!("note: degrees {:?} not certified by the window", br.skipped);
    }
    Ok(emit_report(ctx, &br.report))
}

pub fn spectral_sequence(ctx: &Ctx, path: &Path, pmax: i32) -> Result<bool> {
    match load(path, read_instance)? {
        Instance::Bundle(b) => bundle_ss(ctx, &b, pmax),
        Instance::Complex(c) => two_row_ss(ctx, &c, pmax),
        other => bail!("{}: expected a kbundle or kcomplex file, found {}", path.display(), other.kind()),
    }
}

fn bundle_ss(ctx: &Ctx, b: &KBundle, pmax: i32) -> Result<bool> {
    let rep = b.validate();
    if !emit_report(ctx, &rep) {
        return Ok(false);
    }
    let hr = hypercohomology_ss(b, ctx.window.lo, ctx.window.hi, pmax)?;
    let mut e2 = Table::new(&["degree", "p", "q", "E2"]);
    let mut tot = Table::new(&["degree", "n", "total", "H_DN"]);
    for hd in &hr.degrees {
        for (&(p, q), &n) in &hd.e2 {
            e2.row(vec![hd.d.to_string(), p.to_string(), q.to_string(), n.to_string()]);
        }
        for (n, (&t, &base)) in hd.total.iter().zip(&hd.base).enumerate() {
            tot.row(vec![hd.d.to_string(), n.to_string(), t.to_string(), opt(base)]);
        }
    }
    e2.print(ctx.format);
    tot.print(ctx.format);
    if !hr.skipped.is_empty() {
        eprintln!("note: degrees {:?} not certified by the window", hr.skipped);
    }
    Ok(emit_violations(ctx, "ss", &hr.violations))
}

fn two_row_ss(ctx: &Ctx, c: &KComplex, pmax: i32) -> Result<bool> {
    let rep = c.validate();
    if !emit_report(ctx, &rep) {
        return Ok(false);
    }
    let len = (pmax + c.hi() - c.lo + 3).max(0) as usize;
    let res = resolution_for(&c.group, len)?;
    let tr = two_row(c, &res, pmax)?;
    facts(&[
        ("bottom_row", tr.bottom.to_string()),
        ("top_row", tr.top.to_string()),
        ("differential_page", tr.r.to_string()),
        ("iso_in_positive_columns", tr.iso_positive.to_string()),
        ("surjective_in_column_0", tr.surjective_zero.to_string()),
    ])
    .print(ctx.format);
    let mut t = Table::new(&["p", "q", "E2", "E2_coefficients"]);
    for (&(p, q), &n) in &tr.e2 {
        t.row(vec![p.to_string(), q.to_string(), n.to_string(), opt(tr.e2_from_coefficients.get(&(p, q)))]);
    }
    t.print(ctx.format);
    let mut t = Table::new(&["n", "total", "invariants"]);
    for (&n, &h) in &tr.abutment {
        t.row(vec![n.to_string(), h.to_string(), opt(tr.invariants.get(&n))]);
    }
    t.print(ctx.format);
    let mut t = Table::new(&["p", "rank_d", "rank_from_abutment"]);
    for (p, (&r, &ra)) in tr.ranks.iter().zip(&tr.ranks_from_abutment).enumerate() {
        t.row(vec![p.to_string(), r.to_string(), ra.to_string()]);
    }
    t.print(ctx.format);
    Ok(emit_violations(ctx, "ss", &tr.violations))
}

pub fn tate(ctx: &Ctx, path: Option<&Path>) -> Result<bool> {
    match path {
        Some(path) => tate_shift(ctx, path),
        None => tate_facts(ctx),
    }
}

fn tate_shift(ctx: &Ctx, path: &Path) -> Result<bool> {
    let c = load(path, read_kcomplex)?;
    let rep = c.validate();
    if !emit_report(ctx, &rep) {
        return Ok(false);
    }
    let tr = tate_shift_check(&c, ctx.window.lo, ctx.window.hi)?;
    facts(&[
        ("bottom_row", tr.bottom.to_string()),
        ("top_row", tr.top.to_string()),
        ("shift", tr.r.to_string()),
        ("hyper_tate_vanishes", tr.applicable.to_string()),
    ])
    .print(ctx.format);
    let mut t = Table::new(&["i", "tate_top", "tate_bottom_shifted", "rank"]);
    for &(i, up, down, rank) in &tr.rows {
        t.row(vec![i.to_string(), up.to_string(), down.to_string(), rank.to_string()]);
    }
    t.print(ctx.format);
    if !tr.applicable {
        eprintln!("note: hyper-Tate cohomology does not vanish, so no shift isomorphism is implied");
    }
    Ok(emit_violations(ctx, "tate", &tr.violations))
}

/// Ĥ^i of the trivial and the free module of rank one, for each prime.
fn tate_facts(ctx: &Ctx) -> Result<bool> {
    let mut t = Table::new(&["p", "i", "trivial", "free"]);
    let mut bad = Vec::new();
    for &p in &ctx.prange {
        if !is_prime(p) {
            bail!("--prange: {p} is not prime");
        }
        let k = FiniteGroup::cyclic(p as usize);
        let triv = Matrix::identity(p, 1);
        let free = KModule::regular(p, &k).rho[1].clone();
        for i in ctx.window.lo..=ctx.window.hi {
            let a = tate_cyclic(p as usize, &triv, i)?;
            let b = tate_cyclic(p as usize, &free, i)?;
            if a != 1 || b != 0 {
                bad.push(format!("p = {p}, i = {i}: trivial {a}, free {b}"));
            }
            t.row(vec![p.to_string(), i.to_string(), a.to_string(), b.to_string()]);
        }
    }
    t.print(ctx.format);
    Ok(emit_violations(ctx, "tate", &bad))
}
