//! `micromorph`: compose, apply and verify enhanced micromorphisms from declaration files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use micromorph::calculus::{apply_formal, compose_enhanced, pair_costate, CostateF, Enhanced, StateF};
use micromorph::config::Config;
use micromorph::dump;
use micromorph::dynamics::{hj_generating, hj_residual, Hamiltonian};
use micromorph::expr::{parse_series, print_declaration, print_formal, print_hbar, Declaration, Sections};
use micromorph::genfun::compose_genfun;
use micromorph::poisson::{bch, monoid_genfun_constant, monoid_genfun_linear, star_product, LieAlgebra, PoissonStructure};
use micromorph::series::{FormalSeries, HbarSeries, Scalar, VarSet};
use micromorph::verify::{exact_hbar, run_suite, Suite};
use micromorph::Error;

const CONVENTIONS: &str = include_str!("conventions.txt");

#[derive(Parser)]
#[command(name = "micromorph", version, about = "Exact symbol calculus for enhanced symplectic micromorphisms")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Total-degree truncation N_tot.
    #[arg(long, global = true)]
    truncation: Option<u32>,
    /// Highest power of hbar kept.
    #[arg(long, global = true)]
    hbar_order: Option<u32>,
    /// Highest power of t kept by `hj`.
    #[arg(long, global = true)]
    t_order: Option<u32>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a declaration and print its canonical form.
    Parse { file: PathBuf },
    /// Compose two generating functions: first FIRST, then SECOND.
    Compose { first: PathBuf, second: PathBuf },
    /// Compose two enhanced declarations (amplitudes included): first FIRST, then SECOND.
    ComposeEnhanced { first: PathBuf, second: PathBuf },
    /// Apply an enhanced declaration to a polynomial state in x1..xk.
    Apply { operator: PathBuf, state: String },
    /// Pair the costate <x0, f, amplitude| with a polynomial state.
    Pair {
        /// Base point, e.g. "2, -1/2".
        #[arg(long)]
        x0: String,
        /// Amplitude over p1..pn.
        #[arg(long, default_value = "1")]
        amplitude: String,
        /// Deformation over p1..pn, momentum degree >= 2.
        #[arg(long, default_value = "0")]
        f: String,
        state: String,
    },
    /// Hamilton-Jacobi generating function of a Hamiltonian in p1..pn, x1..xn.
    Hj {
        hamiltonian: String,
        /// Degrees of freedom (default: `dim` from the config).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Star product of F and G for the Poisson structure in STRUCTURE (`pi:` or `bracket:`).
    Star { structure: PathBuf, f: String, g: String },
    /// BCH series of a Lie algebra: a structure file, `heisenberg`, `so3` or `abelian:N`.
    Bch { algebra: String },
    /// Run a verification suite: laws, statphase, hj, star, functoriality or all.
    Verify {
        suite: String,
        /// Write (h, error) columns of each slope check into this directory.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Print the pinned sign and normalization conventions.
    Conventions,
}

enum Failure {
    Lib(Error),
    Io(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<String, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::UnknownVariable(_) | Error::Invalid(_) | Error::Constraint(_) => 2,
        Error::Dimension(_) | Error::VarMismatch { .. } => 3,
        Error::NonConvergence(_) => 4,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_toml(&read(p)?)?,
        None => Config::default(),
    };
    if let Some(v) = cli.truncation {
        cfg.truncation = v;
    }
    if let Some(v) = cli.hbar_order {
        cfg.hbar_order = v;
    }
    if let Some(v) = cli.t_order {
        cfg.t_order = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn declaration(path: &Path, cfg: &Config) -> Result<(Declaration, bool), Failure> {
    let text = read(path)?;
    let d = Declaration::parse(&text, cfg.truncation, cfg.hbar_order)?;
    for w in &d.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    let has_amp = Sections::parse(&text)?.get("amplitude").is_some();
    Ok((d, has_amp))
}

fn hbar_expr(text: &str, vars: &VarSet, cfg: &Config) -> Result<HbarSeries, Failure> {
    let low = parse_series(text, vars, cfg.truncation, cfg.hbar_order)?;
    for w in &low.warnings {
        eprintln!("warning: {w}");
    }
    Ok(low.value)
}

/// An exact polynomial, truncated at its own degree.
fn exact_expr(text: &str, vars: &VarSet) -> Result<FormalSeries, Failure> {
    let s = parse_series(text, vars, u8::MAX as u32, 0)?.into_formal()?;
    let d = s.max_degree().unwrap_or(0);
    Ok(s.with_trunc(d))
}

fn x0_list(text: &str) -> Result<Vec<Scalar>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let s = parse_series(t, &VarSet::empty(), 0, 0)?.into_formal()?;
            Ok(s.constant_term())
        })
        .collect()
}

fn enhanced_out(e: &Enhanced, fmt: Format) -> String {
    match fmt {
        Format::Text => print_declaration(e.gen(), Some(e.amplitude())),
        Format::Json => dump::to_json(&dump::enhanced_dump(e)),
    }
}

fn hbar_out(label: &str, s: &HbarSeries, fmt: Format) -> String {
    match fmt {
        Format::Text => format!("{label}: {}\n", print_hbar(s)),
        Format::Json => dump::to_json(&dump::hbar_dump(s)),
    }
}

fn lie_algebra(arg: &str) -> Result<LieAlgebra, Failure> {
    match arg {
        "heisenberg" => return Ok(LieAlgebra::heisenberg()),
        "so3" => return Ok(LieAlgebra::so3()),
        _ => {}
    }
    if let Some(n) = arg.strip_prefix("abelian:") {
        let n: usize = n.parse().map_err(|_| Failure::Lib(Error::parse(1, 10, format!("`{n}` is not a dimension"))))?;
        return Ok(LieAlgebra::abelian(n));
    }
    match PoissonStructure::parse(&read(Path::new(arg))?)? {
        PoissonStructure::Linear(lie) => Ok(lie),
        PoissonStructure::Constant(_) => Err(Error::Invalid("bch needs a `bracket:` structure, not `pi:`".into()).into()),
    }
}

fn run(cli: &Cli) -> Outcome {
    let cfg = config(cli)?;
    let fmt = cli.format;
    let order = cfg.hbar_order;
    match &cli.cmd {
        Cmd::Parse { file } => {
            let (d, has_amp) = declaration(file, &cfg)?;
            let e = Enhanced::from_declaration(&d)?;
            Ok(match (fmt, has_amp) {
                (Format::Text, true) => print_declaration(e.gen(), Some(e.amplitude())),
                (Format::Text, false) => print_declaration(e.gen(), None),
                (Format::Json, true) => dump::to_json(&dump::enhanced_dump(&e)),
                (Format::Json, false) => dump::to_json(&dump::genfun_dump(e.gen())),
            })
        }
        Cmd::Compose { first, second } => {
            let a = Enhanced::from_declaration(&declaration(first, &cfg)?.0)?;
            let b = Enhanced::from_declaration(&declaration(second, &cfg)?.0)?;
            let g = compose_genfun(a.gen(), b.gen())?;
            Ok(match fmt {
                Format::Text => print_declaration(&g, None),
                Format::Json => dump::to_json(&dump::genfun_dump(&g)),
            })
        }
        Cmd::ComposeEnhanced { first, second } => {
            let a = Enhanced::from_declaration(&declaration(first, &cfg)?.0)?;
            let b = Enhanced::from_declaration(&declaration(second, &cfg)?.0)?;
            Ok(enhanced_out(&compose_enhanced(&a, &b, order)?, fmt))
        }
        Cmd::Apply { operator, state } => {
            let e = Enhanced::from_declaration(&declaration(operator, &cfg)?.0)?;
            let psi = StateF::new(hbar_expr(state, &VarSet::positions(e.k()), &cfg)?)?;
            Ok(hbar_out("state", &apply_formal(&e, &psi, order)?.amplitude, fmt))
        }
        Cmd::Pair { x0, amplitude, f, state } => {
            let x0 = x0_list(x0)?;
            let n = x0.len();
            let ps = VarSet::momenta(n);
            let amp = hbar_expr(amplitude, &ps, &cfg)?;
            let f = parse_series(f, &ps, cfg.truncation, 0)?.into_formal()?;
            let c = CostateF::new(x0, f, amp)?;
            let psi = StateF::new(hbar_expr(state, &VarSet::positions(n), &cfg)?)?;
            Ok(hbar_out("pairing", &pair_costate(&c, &psi, order)?, fmt))
        }
        Cmd::Hj { hamiltonian, dim } => {
            let h = Hamiltonian::parse(hamiltonian, dim.unwrap_or(cfg.dim))?;
            let s = hj_generating(&h, cfg.t_order)?;
            let r = hj_residual(&h, &s)?;
            if !r.is_zero() {
                eprintln!("Hamilton-Jacobi residual does not vanish: {}", print_formal(&r));
                return Err(Failure::Check);
            }
            Ok(match fmt {
                Format::Text => format!("S: {}\n", print_formal(&s.s)),
                Format::Json => dump::to_json(&dump::series_dump(&s.s)),
            })
        }
        Cmd::Star { structure, f, g } => {
            let ps = PoissonStructure::parse(&read(structure)?)?;
            let xs = VarSet::positions(ps.dim());
            let (f, g) = (exact_expr(f, &xs)?, exact_expr(g, &xs)?);
            let m = match &ps {
                PoissonStructure::Constant(pi) => monoid_genfun_constant(pi)?,
                PoissonStructure::Linear(lie) => {
                    let d = f.max_degree().unwrap_or(0) + g.max_degree().unwrap_or(0);
                    monoid_genfun_linear(lie, d.max(1))?
                }
            };
            let out = star_product(&m, &exact_hbar(&f, order), &exact_hbar(&g, order), order)?;
            Ok(hbar_out("product", &out, fmt))
        }
        Cmd::Bch { algebra } => {
            let lie = lie_algebra(algebra)?;
            let comps = bch(&lie, cfg.truncation);
            Ok(match fmt {
                Format::Text => comps.iter().enumerate().map(|(i, c)| format!("component {}: {}\n", i + 1, print_formal(c))).collect(),
                Format::Json => dump::to_json(&comps.iter().map(dump::series_dump).collect::<Vec<_>>()),
            })
        }
        Cmd::Verify { suite, plot_dir } => {
            let suite: Suite = suite.parse()?;
            let reports = run_suite(suite, &cfg);
            if let Some(dir) = plot_dir {
                write_plots(dir, &reports)?;
            }
            let text = match fmt {
                Format::Text => reports.iter().map(|r| r.to_string()).collect(),
                Format::Json => dump::to_json(&reports),
            };
            if reports.iter().all(|r| r.passed()) {
                Ok(text)
            } else {
                print!("{text}");
                Err(Failure::Check)
            }
        }
        Cmd::Conventions => Ok(CONVENTIONS.to_string()),
    }
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn write_plots(dir: &Path, reports: &[micromorph::verify::Report]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    for r in reports {
        for (i, c) in r.checks.iter().enumerate().filter(|(_, c)| !c.data.is_empty()) {
            let path = dir.join(format!("{}-{}.dat", slug(&r.name), i + 1));
            let mut body = format!("# {}\n# h error\n", c.name);
            for (h, e) in &c.data {
                body.push_str(&format!("{h:e} {e:e}\n"));
            }
            fs::write(&path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check) => ExitCode::from(1),
    }
}
