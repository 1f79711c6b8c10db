mod bundle;
mod filtration;
mod generate;
mod groups;
mod output;
mod stratification;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use duflot::filtration::FiltrationError;
use duflot::graded::GradedError;
use duflot::io::FormatError;
use duflot::kbundle::KError;
use duflot::koszul::KoszulError;
use duflot::pgroups::{PGroupError, DEFAULT_CAP};
use duflot::poset::PosetError;
use duflot::report::Report;

use output::{Format, Table};

#[derive(Parser, Debug)]
#[command(name = "duflot", version, about = "Free rank filtrations, Duflot complexes and i-triviality checks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Internal degree window LO:HI for reported cohomology.
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true, default_value = "-4:4")]
    window: Window,
    /// Prime for generated instances and Tate tables.
    #[arg(long, global = true)]
    prime: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Comma-separated primes for `tate` without a file.
    #[arg(long, global = true, value_delimiter = ',', default_value = "2,3,5")]
    prange: Vec<u32>,
    /// Largest group order enumerated.
    #[arg(long, global = true, env = "DUFLOT_CAP", default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub lo: i32,
    pub hi: i32,
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad window start {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad window end {b:?}"))?;
    if lo > hi {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok(Window { lo, hi })
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Local cohomology dims of a module (or the module of a filtration or stratification) by the Koszul oracle.
    LocalCohomology { file: PathBuf },
    /// Term dims, differential ranks and cohomology of the Duflot complex of a filtration.
    DuflotComplex { file: PathBuf },
    /// Validate a free rank filtration file.
    CheckFiltration { file: PathBuf },
    /// Depth, dimension and regularity bounds of a filtration, checked against the oracle.
    Bounds { file: PathBuf },
    /// Toral primes of a filtration and the linear primes with a witness.
    Associated { file: PathBuf },
    /// Validate a topological stratification.
    CheckStratification {
        file: PathBuf,
        /// Also compare Duflot complexes with every truncation.
        #[arg(long)]
        truncation: bool,
    },
    /// Kernel of restriction to strata of corank below d, against the depth.
    Detect {
        file: PathBuf,
        #[arg(long)]
        d: usize,
    },
    /// Associated-prime transfer between the module and each stratum.
    Transfer {
        file: PathBuf,
        /// Only this poset element.
        #[arg(long)]
        element: Option<String>,
    },
    /// Validate a K-bundle and compare DN with the invariants of DL.
    CheckBundle { file: PathBuf },
    /// Hypercohomology spectral sequence of a bundle or a K-complex.
    Ss {
        file: PathBuf,
        /// Last group cohomology column.
        #[arg(long, default_value_t = 4)]
        pmax: i32,
    },
    /// Tate shift check of a two-row K-complex, or Tate facts over --prange.
    Tate { file: Option<PathBuf> },
    /// p-tori of a permutation group.
    Ptori {
        file: PathBuf,
        #[arg(long)]
        up_to_conjugacy: bool,
    },
    /// Centralizer of a named subgroup (or `center`, `whole`, `trivial`).
    Centralizer {
        file: PathBuf,
        #[arg(long)]
        subgroup: String,
    },
    /// Whether every p-torus of rank >= i has centralizer inside H.
    ITrivial {
        file: PathBuf,
        #[arg(long = "H")]
        h: String,
        #[arg(long)]
        i: usize,
    },
    /// Levels W(1..n) of the iterated wreath product of Z/p.
    WreathTower {
        #[arg(long)]
        n: usize,
    },
    /// Write a seeded random instance.
    Generate(generate::GenerateArgs),
}

pub struct Ctx {
    pub window: Window,
    pub prime: Option<u32>,
    pub format: Format,
    pub prange: Vec<u32>,
    pub cap: usize,
    pub seed: u64,
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses `path` with `f`, naming the file in any error.
pub fn load<T>(path: &Path, f: impl FnOnce(&str) -> std::result::Result<T, FormatError>) -> Result<T> {
    let text = read_text(path)?;
    f(&text).with_context(|| path.display().to_string())
}

/// Prints the violations and returns whether there were none.
pub fn emit_report(ctx: &Ctx, r: &Report) -> bool {
    let mut t = Table::new(&["check", "detail"]);
    for v in &r.violations {
        t.row(vec![v.check.to_string(), v.detail.replace('\n', " ")]);
    }
    if r.is_ok() {
        println!("valid");
    } else {
        t.print(ctx.format);
        eprintln!("{} violation(s)", r.violations.len());
    }
    r.is_ok()
}

/// Free-form violations under one tag, as from the oracle comparisons.
pub fn emit_violations(ctx: &Ctx, tag: &str, v: &[String]) -> bool {
    if !v.is_empty() {
        let mut t = Table::new(&["check", "detail"]);
        for s in v {
            t.row(vec![tag.to_string(), s.replace('\n', " ")]);
        }
        t.print(ctx.format);
        eprintln!("{} violation(s)", v.len());
    }
    v.is_empty()
}

fn is_limit(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<FormatError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<GradedError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<KoszulError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<FiltrationError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<PosetError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<KError>().is_some_and(|e| e.is_limit())
            || c.downcast_ref::<PGroupError>().is_some_and(|e| e.is_limit())
    })
}

fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    let ctx = Ctx { window: g.window, prime: g.prime, format: g.format, prange: g.prange, cap: g.cap, seed: g.seed };
    match cli.cmd {
        Cmd::LocalCohomology { file } => filtration::local_cohomology(&ctx, &file),
        Cmd::DuflotComplex { file } => filtration::duflot_complex(&ctx, &file),
        Cmd::CheckFiltration { file } => filtration::check(&ctx, &file),
        Cmd::Bounds { file } => filtration::bounds(&ctx, &file),
        Cmd::Associated { file } => filtration::associated(&ctx, &file),
        Cmd::CheckStratification { file, truncation } => stratification::check(&ctx, &file, truncation),
        Cmd::Detect { file, d } => stratification::detect(&ctx, &file, d),
        Cmd::Transfer { file, element } => stratification::transfer(&ctx, &file, element.as_deref()),
        Cmd::CheckBundle { file } => bundle::check(&ctx, &file),
        Cmd::Ss { file, pmax } => bundle::spectral_sequence(&ctx, &file, pmax),
        Cmd::Tate { file } => bundle::tate(&ctx, file.as_deref()),
        Cmd::Ptori { file, up_to_conjugacy } => groups::ptori(&ctx, &file, up_to_conjugacy),
        Cmd::Centralizer { file, subgroup } => groups::centralizer(&ctx, &file, &subgroup),
        Cmd::ITrivial { file, h, i } => groups::i_trivial(&ctx, &file, &h, i),
        Cmd::WreathTower { n } => groups::wreath_tower(&ctx, n),
        Cmd::Generate(args) => generate::run(&ctx, &args),
    }
}

fn main() -> ExitCode {
    // usage errors exit 1: code 2 is reserved for window and cap limits
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_limit(&e) { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse() {
        assert_eq!(parse_window("-8:8"), Ok(Window { lo: -8, hi: 8 }));
        assert!(parse_window("3:1").is_err());
        assert!(parse_window("3").is_err());
    }

    #[test]
    fn negative_window_after_subcommand() {
        let cli = Cli::try_parse_from(["duflot", "local-cohomology", "x.mod", "--window", "-8:8"]).unwrap();
        assert_eq!(cli.global.window, Window { lo: -8, hi: 8 });
    }

    #[test]
    fn unknown_flag_is_an_error() {
        assert!(Cli::try_parse_from(["duflot", "bounds", "x", "--frobnicate"]).is_err());
    }

    #[test]
    fn limits_are_found_through_wrappers() {
        let e = KError::Filtration(FiltrationError::Koszul(KoszulError::WindowTooSmall { i: 0, d: 0, reason: "r".into() }));
        assert!(is_limit(&anyhow::Error::new(e).context("f.frf")));
        let e = FormatError::Group(PGroupError::CapExceeded { cap: 3 });
        assert!(is_limit(&anyhow::Error::new(e)));
        assert!(!is_limit(&anyhow::anyhow!("plain")));
    }
}
