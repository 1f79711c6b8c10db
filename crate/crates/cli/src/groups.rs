use std::path::Path;

use anyhow::{anyhow, Result};

use duflot::io::{parse_group_file, GroupFile};
use duflot::pgroups::{en_tower, format_cycles, PGroup, Subgroup};

use crate::output::{facts, Table};
use crate::{emit_violations, read_text, Ctx};

fn load_group(ctx: &Ctx, path: &Path) -> Result<GroupFile> {
    let text = read_text(path)?;
    parse_group_file(&text, ctx.cap).map_err(|e| anyhow::Error::new(e).context(path.display().to_string()))
}

fn named(gf: &GroupFile, name: &str) -> Result<Subgroup> {
    let g = &gf.group;
    match name {
        "whole" => Ok(g.whole()),
        "center" => Ok(g.center()),
        "trivial" => Ok(g.subgroup(&[])),
        _ => gf.subgroup(name).ok_or_else(|| anyhow!("no subgroup named {name:?} in the group file")),
    }
}

fn gens(g: &PGroup, s: &Subgroup) -> String {
    let gs: Vec<String> = g.generators_of(s).iter().map(|&x| format_cycles(g.element(x))).collect();
    if gs.is_empty() {
        "()".into()
    } else {
        gs.join(" ")
    }
}

pub fn ptori(ctx: &Ctx, path: &Path, up_to_conjugacy: bool) -> Result<bool> {
    let gf = load_group(ctx, path)?;
    let g = &gf.group;
    let tori = g.p_tori();
    if up_to_conjugacy {
        let mut t = Table::new(&["rank", "class_size", "representative"]);
        for class in g.conjugacy_classes(&tori) {
            let rep = &tori[class[0]];
            t.row(vec![rep.rank.to_string(), class.len().to_string(), gens(g, &rep.sub)]);
        }
        t.print(ctx.format);
    } else {
        let mut t = Table::new(&["rank", "order", "generators"]);
        for tor in &tori {
            t.row(vec![tor.rank.to_string(), tor.sub.order().to_string(), gens(g, &tor.sub)]);
        }
        t.print(ctx.format);
    }
    Ok(true)
}

pub fn centralizer(ctx: &Ctx, path: &Path, name: &str) -> Result<bool> {
    let gf = load_group(ctx, path)?;
    let s = named(&gf, name)?;
    let c = gf.group.centralizer(&s);
    facts(&[
        ("subgroup_order", s.order().to_string()),
        ("centralizer_order", c.order().to_string()),
        ("generators", gens(&gf.group, &c)),
    ])
    .print(ctx.format);
    Ok(true)
}

pub fn i_trivial(ctx: &Ctx, path: &Path, h: &str, i: usize) -> Result<bool> {
    let gf = load_group(ctx, path)?;
    let sub = named(&gf, h)?;
    let r = gf.group.i_trivial(&sub, i)?;
    println!("{}", r.holds);
    let mut rows = vec![("tori_checked", r.checked.to_string())];
    if let Some(w) = &r.witness {
        rows.push(("witness_rank", w.rank.to_string()));
        rows.push(("witness", gens(&gf.group, &w.sub)));
        rows.push(("witness_centralizer_order", gf.group.centralizer(&w.sub).order().to_string()));
    }
    facts(&rows).print(ctx.format);
    Ok(true)
}

pub fn wreath_tower(ctx: &Ctx, n: usize) -> Result<bool> {
    if n == 0 {
        return Err(anyhow!("--n must be at least 1"));
    }
    let p = ctx.prime.unwrap_or(3);
    let levels = en_tower(n, p, ctx.cap)?;
    let mut t = Table::new(&[
        "n",
        "order",
        "E_rank",
        "normal",
        "max_rank",
        "max_rank_tori",
        "bound",
        "bound_trivial",
        "quotient_ok",
        "certified",
    ]);
    let mut notes = Vec::new();
    for l in &levels {
        t.row(vec![
            l.n.to_string(),
            l.order.to_string(),
            l.torus_rank.to_string(),
            l.normal.to_string(),
            l.max_rank.to_string(),
            l.max_rank_count.to_string(),
            l.triviality_bound.to_string(),
            l.i_trivial.holds.to_string(),
            l.quotient_ok.to_string(),
            l.certified().to_string(),
        ]);
        notes.extend(l.notes.iter().map(|s| format!("W({}): {s}", l.n)));
    }
    t.print(ctx.format);
    for s in &notes {
        println!("note: {s}");
    }
    let bad: Vec<String> = levels
        .iter()
        .filter(|l| !l.normal || !l.elementary_abelian || !l.quotient_ok)
        .map(|l| format!("W({}): E({}) fails the structural checks", l.n, l.n))
        .collect();
    Ok(emit_violations(ctx, "tower", &bad))
}
