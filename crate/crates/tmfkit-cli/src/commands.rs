//! Subcommands. Each returns a process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tmfkit::catalog::{self, build, run_suite, zhang_crosscheck, Case, CatalogError, SuiteOptions};
use tmfkit::cover::{delta_sigma, functor_a, functor_b, functor_c, functor_h, make_cover, second_cover, symmetric_split};
use tmfkit::gradedmod::Verdict;
use tmfkit::report::Report;
use tmfkit::tmf::{reduce, Tmf};

use crate::io::{self, IoError, Loaded};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PROBABLY_NOT: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser, Debug)]
#[command(name = "tmfkit", version, about = "Verify and transform twisted matrix factorizations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for randomized checks; falls back to TMFKIT_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Random trials for isomorphism tests.
    #[arg(long, global = true, default_value_t = 32)]
    pub trials: usize,
    /// Hilbert-series window; defaults to 2d.
    #[arg(long, global = true)]
    pub max_degree: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check both factorization identities for every factorization in a file.
    Verify { path: PathBuf },
    /// Built-in singularities and their factorizations.
    Catalog {
        #[command(subcommand)]
        action: CatalogCommand,
    },
    /// Apply a functor to a file and write the result.
    Functor { name: FunctorName, input: PathBuf, output: PathBuf },
    /// Decide isomorphism of two factorizations by random evaluation.
    Iso { path1: PathBuf, path2: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum CatalogCommand {
    List,
    Verify {
        case: String,
        #[arg(long)]
        n: Option<u32>,
        /// Skip the cover and second-cover checks.
        #[arg(long)]
        no_covers: bool,
    },
    Export {
        case: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        j: Option<u32>,
        /// Family label; defaults to the first listed family.
        #[arg(long)]
        family: Option<String>,
        /// Write here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FunctorName {
    #[value(name = "C")]
    C,
    #[value(name = "Res")]
    Res,
    #[value(name = "H")]
    H,
    #[value(name = "T")]
    T,
    #[value(name = "tw")]
    Tw,
    #[value(name = "B")]
    B,
    #[value(name = "A")]
    A,
    #[value(name = "delta-sigma")]
    DeltaSigma,
    #[value(name = "reduce")]
    Reduce,
    #[value(name = "split")]
    Split,
}

pub struct Ctx<'a> {
    pub format: Format,
    pub seed: u64,
    pub trials: usize,
    pub max_degree: Option<u32>,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn input_error(&mut self, e: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {}", e);
        EXIT_INPUT
    }

    fn emit_report(&mut self, r: &Report) {
        let _ = match self.format {
            Format::Json => write!(self.out, "{}", io::to_text(r)),
            Format::Text => write!(self.out, "{}", r.to_text()),
        };
    }

    fn emit<T: Serialize>(&mut self, v: &T, text: &str) {
        let _ = match self.format {
            Format::Json => write!(self.out, "{}", io::to_text(v)),
            Format::Text => writeln!(self.out, "{}", text),
        };
    }
}

pub fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("TMFKIT_SEED").ok()?.parse().ok()).unwrap_or(DEFAULT_SEED)
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut ctx =
        Ctx { format: cli.format, seed: resolve_seed(cli.seed), trials: cli.trials, max_degree: cli.max_degree, out, err };
    match cli.command {
        Command::Verify { path } => cmd_verify(&mut ctx, &path),
        Command::Catalog { action } => cmd_catalog(&mut ctx, action),
        Command::Functor { name, input, output } => cmd_functor(&mut ctx, name, &input, &output),
        Command::Iso { path1, path2 } => cmd_iso(&mut ctx, &path1, &path2),
    }
}

fn verify_report(title: String, ts: &[Tmf], seed: u64) -> Report {
    let mut r = Report::new(title, seed);
    for (k, t) in ts.iter().enumerate() {
        let v = t.verify();
        let detail = if v.pass {
            String::new()
        } else {
            let mut parts = v.messages.clone();
            parts.extend(
                v.nonzero_residuals()
                    .into_iter()
                    .map(|(id, i, j, p)| format!("identity {} entry ({},{}) = {}", id, i + 1, j + 1, p)),
            );
            parts.join("; ")
        };
        let name = if ts.len() == 1 { "verify".to_string() } else { format!("verify #{}", k + 1) };
        r.push(name, v.pass, detail, 0);
    }
    r
}

pub fn cmd_verify(ctx: &mut Ctx, path: &Path) -> i32 {
    let loaded = match io::load_tmfs(path) {
        Ok(l) => l,
        Err(e) => return ctx.input_error(e),
    };
    let ts: Vec<Tmf> = loaded.into_iter().map(|l| l.tmf).collect();
    let r = verify_report(path.display().to_string(), &ts, ctx.seed);
    ctx.emit_report(&r);
    if r.pass() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn catalog_error(ctx: &mut Ctx, e: CatalogError) -> i32 {
    match e {
        CatalogError::BadParams(_) => ctx.input_error(e),
        other => {
            let _ = writeln!(ctx.err, "error: {}", other);
            EXIT_FAIL
        }
    }
}

pub fn cmd_catalog(ctx: &mut Ctx, action: CatalogCommand) -> i32 {
    match action {
        CatalogCommand::List => {
            let rows: Vec<(String, String)> =
                Case::ALL.iter().map(|c| (c.tag().to_string(), c.range().to_string())).collect();
            let text: Vec<String> = rows.iter().map(|(t, r)| format!("{:<16}{}", t, r)).collect();
            ctx.emit(&rows, &text.join("\n"));
            EXIT_PASS
        }
        CatalogCommand::Verify { case, n, no_covers } => {
            let case = match Case::parse(&case, n) {
                Ok(c) => c,
                Err(e) => return catalog_error(ctx, e),
            };
            let entry = match build(case, n) {
                Ok(e) => e,
                Err(e) => return catalog_error(ctx, e),
            };
            let opts = SuiteOptions { trials: ctx.trials, seed: ctx.seed, max_degree: ctx.max_degree, covers: !no_covers };
            let mut r = run_suite(&entry, &opts);
            if matches!(case, Case::G | Case::B) {
                match zhang_crosscheck(&entry, &opts) {
                    Ok(z) => {
                        r.checks.extend(z.checks.into_iter().map(|mut c| {
                            c.name = format!("zhang {}", c.name);
                            c
                        }));
                    }
                    Err(e) => r.push("zhang cross-check", false, e.to_string(), 0),
                }
            }
            ctx.emit_report(&r);
            if r.pass() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        CatalogCommand::Export { case, n, j, family, out } => {
            let case = match Case::parse(&case, n) {
                Ok(c) => c,
                Err(e) => return catalog_error(ctx, e),
            };
            let entry = match build(case, n) {
                Ok(e) => e,
                Err(e) => return catalog_error(ctx, e),
            };
            let label = match family.or_else(|| entry.families.first().map(|f| f.label.clone())) {
                Some(l) => l,
                None => return ctx.input_error(format!("case {} has no listed factorizations", case)),
            };
            let j = j.or_else(|| entry.families.iter().find(|f| f.label == label).and_then(|f| f.j));
            let t = match catalog::factorization(&entry, &label, j) {
                Ok(t) => t,
                Err(e) => return catalog_error(ctx, e),
            };
            let text = io::to_text(&io::tmf_json(&t, &[]));
            write_output(ctx, out.as_deref(), &text)
        }
    }
}

fn write_output(ctx: &mut Ctx, out: Option<&Path>, text: &str) -> i32 {
    match out {
        Some(p) => match std::fs::write(p, text) {
            Ok(()) => EXIT_PASS,
            Err(e) => ctx.input_error(format!("{}: {}", p.display(), e)),
        },
        None => {
            let _ = write!(ctx.out, "{}", text);
            EXIT_PASS
        }
    }
}

fn load_one(path: &Path) -> Result<Loaded, IoError> {
    let mut v = io::load_tmfs(path)?;
    if v.len() != 1 {
        return Err(IoError::Invalid { path: path.display().to_string(), msg: "expected a single factorization".into() });
    }
    Ok(v.remove(0))
}

fn fresh_name(t: &Tmf, base: &str) -> String {
    let alg = &t.ctx.algebra;
    if alg.gen_index(base).is_none() {
        return base.to_string();
    }
    (1..).map(|k| format!("{}{}", base, k)).find(|n| alg.gen_index(n).is_none()).expect("unbounded")
}

/// Output of a functor: factorizations with their cover variables, or a module.
enum Produced {
    Tmfs(Vec<(Tmf, Vec<String>)>),
    Module(std::sync::Arc<tmfkit::tmf::NormalContext>, tmfkit::cover::EquivariantModule),
}

fn apply_functor(name: FunctorName, input: &Path) -> Result<(Produced, Vec<String>), String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    if name == FunctorName::A {
        let text = std::fs::read_to_string(input).map_err(|e| format!("{}: {}", input.display(), e))?;
        let (base, m) = io::parse_module(&input.display().to_string(), &text).map_err(|e| err(&e))?;
        let cc = make_cover(&base, "z").map_err(|e| err(&e))?;
        let t = functor_a(&cc, &m).map_err(|e| err(&e))?;
        return Ok((Produced::Tmfs(vec![(t, vec![])]), vec![]));
    }
    let l = load_one(input).map_err(|e| err(&e))?;
    let t = &l.tmf;
    let vars = l.cover_variables.clone();
    let with = |extra: &[String]| {
        let mut v = vars.clone();
        v.extend(extra.iter().cloned());
        v
    };
    let mut notes = Vec::new();
    let produced = match name {
        FunctorName::C => {
            let z = fresh_name(t, "z");
            let cc = make_cover(&t.ctx, &z).map_err(|e| err(&e))?;
            Produced::Tmfs(vec![(functor_c(&cc, t).map_err(|e| err(&e))?, with(&[z]))])
        }
        FunctorName::Res => {
            if vars.is_empty() {
                return Err("input has no cover variables to restrict".into());
            }
            let base = io::restrict_context(&t.ctx, &vars)?;
            let r = Tmf::new(&base, t.phi.restrict(&base.algebra), t.psi.restrict(&base.algebra));
            Produced::Tmfs(vec![(r, vec![])])
        }
        FunctorName::H => {
            if t.ctx.algebra.gen_index("u").is_some() || t.ctx.algebra.gen_index("v").is_some() {
                return Err("generator names u and v are taken".into());
            }
            let sc = second_cover(&t.ctx).map_err(|e| err(&e))?;
            Produced::Tmfs(vec![(functor_h(&sc, t).map_err(|e| err(&e))?, with(&["u".into(), "v".into()]))])
        }
        FunctorName::T => Produced::Tmfs(vec![(t.t_functor().map_err(|e| err(&e))?, vars.clone())]),
        FunctorName::Tw => Produced::Tmfs(vec![(t.tw_functor(), vars.clone())]),
        FunctorName::B => {
            let cc = make_cover(&t.ctx, "z").map_err(|e| err(&e))?;
            Produced::Module(t.ctx.clone(), functor_b(&cc, t).map_err(|e| err(&e))?)
        }
        FunctorName::A => unreachable!("handled above"),
        FunctorName::DeltaSigma => {
            let z = fresh_name(t, "z");
            let cc = make_cover(&t.ctx, &z).map_err(|e| err(&e))?;
            let m = functor_b(&cc, t).map_err(|e| err(&e))?;
            Produced::Tmfs(vec![(delta_sigma(&cc, &m).map_err(|e| err(&e))?, with(&[z]))])
        }
        FunctorName::Reduce => {
            let (r, counts) = reduce(t);
            notes.push(format!(
                "removed {} trivial summands ({} of the form (1, f), {} of the form (f, 1))",
                counts.total(),
                counts.unit_first,
                counts.f_first
            ));
            Produced::Tmfs(vec![(r, vars.clone())])
        }
        FunctorName::Split => {
            let z = fresh_name(t, "z");
            let cc = make_cover(&t.ctx, &z).map_err(|e| err(&e))?;
            let (a, b) = symmetric_split(&cc, t).map_err(|e| err(&e))?;
            Produced::Tmfs(vec![(a, with(std::slice::from_ref(&z))), (b, with(&[z]))])
        }
    };
    Ok((produced, notes))
}

pub fn cmd_functor(ctx: &mut Ctx, name: FunctorName, input: &Path, output: &Path) -> i32 {
    let (produced, notes) = match apply_functor(name, input) {
        Ok(p) => p,
        Err(e) => return ctx.input_error(e),
    };
    let mut r = Report::new(format!("functor {:?} on {}", name, input.display()), ctx.seed);
    r.notes = notes;
    let text = match &produced {
        Produced::Tmfs(list) => {
            let ts: Vec<Tmf> = list.iter().map(|(t, _)| t.clone()).collect();
            r.checks = verify_report(String::new(), &ts, ctx.seed).checks;
            let forms: Vec<io::TmfJson> = list.iter().map(|(t, v)| io::tmf_json(t, v)).collect();
            if forms.len() == 1 {
                io::to_text(&forms[0])
            } else {
                io::to_text(&forms)
            }
        }
        Produced::Module(base, m) => {
            let ok = make_cover(base, "z").and_then(|cc| m.check(&cc));
            r.push("module invariants", ok.is_ok(), ok.err().map(|e| e.to_string()).unwrap_or_default(), 0);
            io::to_text(&io::module_json(base, m))
        }
    };
    if let Err(e) = std::fs::write(output, text) {
        return ctx.input_error(format!("{}: {}", output.display(), e));
    }
    ctx.emit_report(&r);
    if r.pass() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[derive(Serialize)]
struct IsoOutput {
    verdict: &'static str,
    seed: u64,
    trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<io::MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<io::MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failures: Option<usize>,
}

pub fn cmd_iso(ctx: &mut Ctx, p1: &Path, p2: &Path) -> i32 {
    let (a, b) = match (load_one(p1), load_one(p2)) {
        (Ok(a), Ok(b)) => (a.tmf, b.tmf),
        (Err(e), _) | (_, Err(e)) => return ctx.input_error(e),
    };
    if *a.ctx.algebra != *b.ctx.algebra {
        return ctx.input_error("the two files use different algebras");
    }
    let alg = &a.ctx.algebra;
    if a.ctx.f != b.ctx.f.rehome(alg) || a.ctx.sigma != b.ctx.sigma.rehome(alg) {
        return ctx.input_error("the two files use different normal elements");
    }
    let b = Tmf::new(&a.ctx, b.phi.rehome(alg), b.psi.rehome(alg));
    match a.probably_isomorphic(&b, ctx.trials, ctx.seed) {
        Verdict::Iso { alpha, beta } => {
            let out = IsoOutput {
                verdict: "iso",
                seed: ctx.seed,
                trials: ctx.trials,
                alpha: Some(io::matrix_json(&alpha)),
                beta: Some(io::matrix_json(&beta)),
                failures: None,
            };
            let text = format!(
                "isomorphic (seed {})\nalpha = {:?}\nbeta = {:?}",
                ctx.seed,
                io::matrix_json(&alpha).entries,
                io::matrix_json(&beta).entries
            );
            ctx.emit(&out, &text);
            EXIT_PASS
        }
        Verdict::ProbablyNot { failures } => {
            let out = IsoOutput {
                verdict: "probably-not",
                seed: ctx.seed,
                trials: ctx.trials,
                alpha: None,
                beta: None,
                failures: Some(failures),
            };
            ctx.emit(&out, &format!("probably not isomorphic (seed {}, {} trials)", ctx.seed, ctx.trials));
            EXIT_PROBABLY_NOT
        }
    }
}
