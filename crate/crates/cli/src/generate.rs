use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use duflot::generate::{
    random_bundle, random_filtration_for, random_stratification_for, random_two_row, required_top, FiltrationParams,
    StratParams, TwoRowParams,
};
use duflot::graded::{jfree_build, BoundedFactor, PWAlgebra, SubspaceV};
use duflot::io::{write_group_file, write_instance, GroupFile, Instance};
use duflot::matrix::is_prime;
use duflot::pgroups::en_tower;
use duflot::poset::check_topological;
use duflot::report::Report;

use crate::{emit_report, Ctx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// P_V for a coordinate subspace V, windowed so the oracle certifies --window.
    Pv,
    Filtration,
    Stratification,
    Kbundle,
    /// A two-row complex of Z/p-modules.
    Kcomplex,
    /// W(n) with the subgroup `base` = E(n).
    Group,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    kind: Kind,
    /// Rank of W.
    #[arg(long, default_value_t = 2)]
    w: usize,
    /// Rank of V for `pv` (default: w).
    #[arg(long)]
    rank: Option<usize>,
    /// Order of the cyclic group K for `kbundle`.
    #[arg(long)]
    k: Option<usize>,
    /// Add a socle stratum to generated stratifications.
    #[arg(long)]
    socle: bool,
    /// Top degree of stored products in generated algebras.
    #[arg(long, default_value_t = 6)]
    mult_hi: i32,
    #[arg(long, default_value_t = 1)]
    bottom: i32,
    #[arg(long, default_value_t = 3)]
    top: i32,
    #[arg(long, default_value_t = 2)]
    chains: usize,
    #[arg(long, default_value_t = 2)]
    contractible: usize,
    /// Add a trivial summand to the bottom row so the terms are not free.
    #[arg(long)]
    trivial_defect: bool,
    /// Wreath level for `group`.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, a: &GenerateArgs) -> Result<bool> {
    let (lo, hi) = (ctx.window.lo, ctx.window.hi);
    let seed = ctx.seed;
    let p = match (ctx.prime, a.k) {
        (Some(p), _) => p,
        (None, Some(k)) if a.kind == Kind::Kbundle && is_prime(k as u32) => k as u32,
        _ => 2,
    };
    if !is_prime(p) {
        bail!("--prime: {p} is not prime");
    }
    let strat_params = StratParams { p, w: a.w, socle: a.socle, mult_hi: a.mult_hi };
    let (text, rep) = match a.kind {
        Kind::Pv => {
            let rank = a.rank.unwrap_or(a.w);
            if rank > a.w {
                bail!("--rank {rank} exceeds --w {}", a.w);
            }
            let alg = PWAlgebra::new(p, a.w)?;
            let v = SubspaceV::coordinate(p, a.w, &(0..rank).collect::<Vec<_>>());
            let top = required_top(alg.sigma(), a.w, 0, alg.sigma(), lo, hi);
            let m = jfree_build(alg, &v, 0, &BoundedFactor::point(), 0, top)?;
            let rep = m.validate();
            (write_instance(&Instance::Module(m)), rep)
        }
        Kind::Filtration => {
            let frf = random_filtration_for(FiltrationParams::small(p, a.w), seed, lo, hi).frf;
            let rep = frf.validate();
            (write_instance(&Instance::Filtration(frf)), rep)
        }
        Kind::Stratification => {
            let ts = random_stratification_for(strat_params, seed, lo, hi).strat;
            let rep = check_topological(&ts);
            (write_instance(&Instance::Stratification(ts)), rep)
        }
        Kind::Kbundle => {
            let k = a.k.unwrap_or(p as usize);
            if k == 0 {
                bail!("--k must be positive");
            }
            let b = random_bundle(strat_params, k, seed, lo, hi);
            let rep = b.validate();
            (write_instance(&Instance::Bundle(b)), rep)
        }
        Kind::Kcomplex => {
            if a.bottom >= a.top {
                bail!("--bottom must be below --top");
            }
            let params = TwoRowParams {
                p,
                bottom: a.bottom,
                top: a.top,
                chains: a.chains,
                contractible: a.contractible,
                trivial_defect: a.trivial_defect,
            };
            let c = random_two_row(params, seed);
            let rep = c.validate();
            (write_instance(&Instance::Complex(c)), rep)
        }
        Kind::Group => {
            if a.n == 0 {
                bail!("--n must be at least 1");
            }
            let p = ctx.prime.unwrap_or(3);
            let level = en_tower(a.n, p, ctx.cap)?.pop().expect("n >= 1 levels");
            let g = level.group;
            let base = g.generators_of(&level.torus).iter().map(|&x| g.element(x).clone()).collect();
            let gf = GroupFile { group: g, subgroups: vec![("base".into(), base)] };
            (write_group_file(&gf), Report::new())
        }
    };
    if !rep.is_ok() {
        // generated instances are validator-closed; reaching this is a bug
        emit_report(ctx, &rep);
        return Ok(false);
    }
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}
