//! Batch front end: enumerate disjoint triples, solve compatible forms and
//! image lattices, run the full cocycle/twist pipeline, and verify emitted
//! R-matrices.
//!
//! Exit codes: 0 all checks pass, 1 a verification failed, 2 input error.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{JobConfig, OmegaChoice};
use qtwist_core::bdstruct::{enumerate_disjoint, SignConvention};
use qtwist_core::qfa::{
    braid_relation_holds, minimal_poly_degree_is_two, nonstandard_support, qybe_holds, RMatrix,
};
use qtwist_core::rootdata::Lattice;
use qtwist_core::twist::{run_twist, TwistOptions};
use qtwist_core::{RootDatum, TripleSide, SCHEMA_VERSION};

#[derive(Parser)]
#[command(
    name = "qtwist",
    about = "exact twists of multiparameter quantum groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all disjoint triples on a root datum.
    Triples {
        /// Type letter A-G.
        letter: char,
        /// Rank.
        rank: usize,
        /// Write the JSON listing here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the compatible-form equations and report the image lattices.
    Compat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sign: Option<String>,
        #[arg(long)]
        omega: Option<String>,
    },
    /// Run the full twist pipeline and emit the report and R-matrices.
    Twist {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.json and r_prime.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        height_cap: Option<usize>,
        #[arg(long)]
        sign: Option<String>,
        #[arg(long)]
        omega: Option<String>,
    },
    /// Standalone checks on a previously emitted R-matrix JSON file.
    Verify { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_sign(s: &str) -> Result<SignConvention> {
    match s {
        "plus" => Ok(SignConvention::Plus),
        "minus" => Ok(SignConvention::Minus),
        other => Err(anyhow!("unknown sign convention {other:?} (plus|minus)")),
    }
}

fn parse_omega(s: &str) -> Result<OmegaChoice> {
    match s {
        "root" => Ok(OmegaChoice::Root),
        "weight" => Ok(OmegaChoice::Weight),
        other => Err(anyhow!("unknown omega choice {other:?} (root|weight)")),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Triples { letter, rank, out } => cmd_triples(letter, rank, out),
        Command::Compat {
            config,
            out,
            sign,
            omega,
        } => {
            let mut cfg = JobConfig::load(&config)?;
            if let Some(s) = sign {
                cfg.sign = parse_sign(&s)?;
            }
            if let Some(o) = omega {
                cfg.omega = parse_omega(&o)?;
            }
            cmd_compat(&cfg, out)
        }
        Command::Twist {
            config,
            out,
            height_cap,
            sign,
            omega,
        } => {
            let mut cfg = JobConfig::load(&config)?;
            if let Some(h) = height_cap {
                cfg.height_cap = h;
            }
            if let Some(s) = sign {
                cfg.sign = parse_sign(&s)?;
            }
            if let Some(o) = omega {
                cfg.omega = parse_omega(&o)?;
            }
            cmd_twist(&cfg, out)
        }
        Command::Verify { path } => cmd_verify(&path),
    }
}

#[derive(Serialize)]
struct TripleOut {
    pi1: Vec<usize>,
    pi2: Vec<usize>,
    tau: Vec<(usize, usize)>,
}

fn cmd_triples(letter: char, rank: usize, out: Option<PathBuf>) -> Result<ExitCode> {
    let rd = RootDatum::build(letter, rank).map_err(|e| anyhow!("{e}"))?;
    let triples = enumerate_disjoint(&rd);
    #[derive(Serialize)]
    struct Listing {
        schema_version: u32,
        root: String,
        count: usize,
        triples: Vec<TripleOut>,
    }
    let listing = Listing {
        schema_version: SCHEMA_VERSION,
        root: format!("{letter}{rank}"),
        count: triples.len(),
        triples: triples
            .iter()
            .map(|t| TripleOut {
                pi1: t.pi1.iter().map(|&i| i + 1).collect(),
                pi2: t.pi2.iter().map(|&i| i + 1).collect(),
                tau: t.tau.iter().map(|(&a, &b)| (a + 1, b + 1)).collect(),
            })
            .collect(),
    };
    emit_json(&listing, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn rational_str(q: &qtwist_core::Q) -> String {
    q.to_string()
}

fn lattice_out(l: &Lattice) -> Vec<Vec<String>> {
    l.basis()
        .iter()
        .map(|w| w.0.iter().map(rational_str).collect())
        .collect()
}

fn cmd_compat(cfg: &JobConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let rd = cfg.root_datum()?;
    let t = cfg.bd_triple(&rd)?;
    let sol = qtwist_core::solve_compatible(&rd, &t, cfg.sign)
        .ok_or_else(|| anyhow!("compatibility equations are inconsistent"))?;
    let cf = cfg.form(&rd, &t);
    #[derive(Serialize)]
    struct CompatOut {
        schema_version: u32,
        dim: usize,
        particular: Vec<Vec<String>>,
        basis: Vec<Vec<Vec<String>>>,
        selected_form_ok: bool,
        selected_form_diagnostic: Option<String>,
        compatibility_violations: Vec<String>,
        l1: Vec<Vec<String>>,
        l1_tilde: Vec<Vec<String>>,
        l2: Vec<Vec<String>>,
        l2_tilde: Vec<Vec<String>>,
    }
    let mat_out = |m: &Vec<Vec<qtwist_core::Q>>| -> Vec<Vec<String>> {
        m.iter()
            .map(|r| r.iter().map(rational_str).collect())
            .collect()
    };
    let (form_ok, diag, violations, lattices) = match cf {
        Ok(cf) => {
            let omega = cfg.omega_lattice(&rd);
            let (l1, l1t) = cf
                .sublattice_l(TripleSide::One, &omega)
                .map_err(|e| anyhow!("{e}"))?;
            let (l2, l2t) = cf
                .sublattice_l(TripleSide::Two, &omega)
                .map_err(|e| anyhow!("{e}"))?;
            (
                true,
                None,
                cf.compatibility_violations(),
                (
                    lattice_out(&l1),
                    lattice_out(&l1t),
                    lattice_out(&l2),
                    lattice_out(&l2t),
                ),
            )
        }
        Err(e) => {
            return Err(e);
        }
    };
    let outdoc = CompatOut {
        schema_version: SCHEMA_VERSION,
        dim: sol.dim,
        particular: mat_out(&sol.particular),
        basis: sol.basis.iter().map(mat_out).collect(),
        selected_form_ok: form_ok,
        selected_form_diagnostic: diag,
        compatibility_violations: violations,
        l1: lattices.0,
        l1_tilde: lattices.1,
        l2: lattices.2,
        l2_tilde: lattices.3,
    };
    emit_json(&outdoc, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_twist(cfg: &JobConfig, out: PathBuf) -> Result<ExitCode> {
    let rd = cfg.root_datum()?;
    let t = cfg.bd_triple(&rd)?;
    let cf = cfg.form(&rd, &t)?;
    if !cf.compatibility_violations().is_empty() {
        return Err(anyhow!(
            "the selected form violates the compatibility equations under this sign \
             convention; the twist pipeline needs the literal (plus) solution: {:?}",
            cf.compatibility_violations()
        ));
    }
    let opts = TwistOptions {
        height_cap: cfg.height_cap,
        with_r_matrix: cfg.with_r_matrix,
        with_associativity: cfg.with_associativity,
    };
    let report = run_twist(cf, &opts).map_err(|e| anyhow!("pipeline: {e}"))?;
    std::fs::create_dir_all(&out).context("creating output directory")?;
    let report_path = out.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .context("writing report")?;
    if let Some(rp) = &report.r_prime {
        std::fs::write(out.join("r_prime.json"), serde_json::to_string_pretty(rp)?)?;
    }
    if let Some(r) = &report.r_untwisted {
        std::fs::write(
            out.join("r_untwisted.json"),
            serde_json::to_string_pretty(r)?,
        )?;
    }
    for c in &report.checks {
        print_line(&format!(
            "{} {}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.witness
                .as_deref()
                .map(|w| format!(" ({w})"))
                .unwrap_or_default()
        ));
    }
    print_line(&format!("report: {}", report_path.display()));
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_verify(path: &std::path::Path) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let r: RMatrix = serde_json::from_str(&text)
        .with_context(|| format!("parsing R-matrix from {}", path.display()))?;
    let qybe = qybe_holds(&r);
    let r_hat = r.r_hat();
    let braid = braid_relation_holds(&r_hat, r.n);
    let hecke = minimal_poly_degree_is_two(&r_hat);
    let extra = nonstandard_support(&r);
    #[derive(Serialize)]
    struct VerifyOut {
        schema_version: u32,
        n: usize,
        qybe: bool,
        braid_relation: bool,
        minimal_poly_degree_2: bool,
        support: String,
        nonstandard_entries: Vec<((usize, usize), (usize, usize))>,
    }
    let outdoc = VerifyOut {
        schema_version: SCHEMA_VERSION,
        n: r.n,
        qybe,
        braid_relation: braid,
        minimal_poly_degree_2: hecke,
        support: if extra.is_empty() {
            "standard pattern".into()
        } else {
            "nonstandard entries present".into()
        },
        nonstandard_entries: extra,
    };
    print_line(&serde_json::to_string_pretty(&outdoc)?);
    if qybe && braid && hecke {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&std::path::Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print_line(&text),
    }
    Ok(())
}

/// Write a line to stdout; when the consumer has closed the pipe, stop
/// quietly like any well-behaved unix filter.
fn print_line(s: &str) {
    use std::io::Write;
    let mut out = std::io::stdout();
    if writeln!(out, "{s}").is_err() {
        std::process::exit(0);
    }
}
