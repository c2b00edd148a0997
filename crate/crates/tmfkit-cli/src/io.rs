//! JSON forms of algebras, contexts, matrices and factorizations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tmfkit::cover::EquivariantModule;
use tmfkit::gradedmod::GradedMatrix;
use tmfkit::ncalgebra::{Algebra, AlgebraMap, Generator, Poly, Terms};
use tmfkit::scalars::{LiteralError, Scalar};
use tmfkit::tmf::{NormalContext, Tmf};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}:{column}: {msg}")]
    Syntax { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub name: String,
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub monomial: Vec<u32>,
}

/// Generator reference by name or by position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleJson {
    /// `[b, a]` for the product `x_b * x_a` with `b` after `a`.
    pub lhs: [GenRef; 2],
    pub rhs: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub generators: Vec<GeneratorJson>,
    #[serde(default)]
    pub rules: Vec<RuleJson>,
    #[serde(default)]
    pub automorphisms: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Inline(AlgebraJson),
    Path(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextJson {
    pub algebra: AlgebraRef,
    pub f: String,
    pub sigma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<String>,
    /// Generators adjoined by cover constructions, removed by `Res`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cover_variables: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmfJson {
    pub context: ContextJson,
    pub phi: MatrixJson,
    pub psi: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleJson {
    pub context: ContextJson,
    pub shifts: Vec<i64>,
    pub z_action: MatrixJson,
    pub theta: Vec<i8>,
}

/// A parsed factorization together with the names of its cover variables.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub tmf: Tmf,
    pub cover_variables: Vec<String>,
}

/// Source text kept around to turn offsets into line/column positions.
struct Source<'a> {
    path: &'a str,
    text: &'a str,
    dir: PathBuf,
}

impl Source<'_> {
    fn invalid(&self, msg: impl Into<String>) -> IoError {
        IoError::Invalid { path: self.path.to_string(), msg: msg.into() }
    }

    /// Position of a literal error, found by locating the literal's text in
    /// the file.
    fn literal_error(&self, literal: &str, e: &LiteralError) -> IoError {
        let needle = format!("\"{}\"", literal);
        match self.text.find(&needle) {
            Some(start) => {
                let at = start + 1 + e.offset.min(literal.len());
                let before = &self.text[..at];
                let line = before.matches('\n').count() + 1;
                let column = at - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                IoError::Syntax {
                    path: self.path.to_string(),
                    line,
                    column,
                    msg: format!("in literal {:?}: {}", literal, e.msg),
                }
            }
            None => self.invalid(format!("in literal {:?}: {}", literal, e)),
        }
    }

    fn poly(&self, alg: &Arc<Algebra>, s: &str) -> Result<Poly, IoError> {
        Poly::parse(alg, s).map_err(|e| self.literal_error(s, &e))
    }

    fn scalar(&self, s: &str) -> Result<Scalar, IoError> {
        Scalar::parse(s).map_err(|e| self.literal_error(s, &e))
    }
}

fn json_error(path: &str, e: serde_json::Error) -> IoError {
    IoError::Syntax { path: path.to_string(), line: e.line(), column: e.column(), msg: e.to_string() }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read { path: path.display().to_string(), source: e })
}

fn resolve_gen(src: &Source, names: &[String], g: &GenRef) -> Result<usize, IoError> {
    match g {
        GenRef::Index(i) if *i < names.len() => Ok(*i),
        GenRef::Index(i) => Err(src.invalid(format!("generator index {} out of range", i))),
        GenRef::Name(n) => {
            names.iter().position(|x| x == n).ok_or_else(|| src.invalid(format!("unknown generator {:?}", n)))
        }
    }
}

fn build_algebra(src: &Source, a: &AlgebraJson) -> Result<Arc<Algebra>, IoError> {
    let gens: Vec<Generator> =
        a.generators.iter().map(|g| Generator { name: g.name.clone(), degree: g.degree }).collect();
    let names: Vec<String> = gens.iter().map(|g| g.name.clone()).collect();
    let mut rules = Vec::new();
    for r in &a.rules {
        let b = resolve_gen(src, &names, &r.lhs[0])?;
        let a_ = resolve_gen(src, &names, &r.lhs[1])?;
        let mut terms = Terms::new();
        for t in &r.rhs {
            if t.monomial.len() != names.len() {
                return Err(src.invalid("monomial exponent vector has the wrong length"));
            }
            let c = src.scalar(&t.coeff)?;
            if !c.is_zero() {
                terms.insert(t.monomial.clone(), c);
            }
        }
        rules.push(((b, a_), terms));
    }
    Algebra::new(gens, rules).map_err(|e| src.invalid(e.to_string()))
}

fn build_map(src: &Source, alg: &Arc<Algebra>, images: &BTreeMap<String, String>) -> Result<AlgebraMap, IoError> {
    let mut out = Vec::new();
    for (i, g) in alg.generators().iter().enumerate() {
        out.push(match images.get(&g.name) {
            Some(s) => src.poly(alg, s)?,
            None => Poly::generator(alg, i),
        });
    }
    if let Some(k) = images.keys().find(|k| alg.gen_index(k).is_none()) {
        return Err(src.invalid(format!("automorphism names unknown generator {:?}", k)));
    }
    AlgebraMap::new(alg, alg, out).map_err(|e| src.invalid(e.to_string()))
}

fn build_context(src: &Source, c: &ContextJson) -> Result<Arc<NormalContext>, IoError> {
    let aj = match &c.algebra {
        AlgebraRef::Inline(a) => a.clone(),
        AlgebraRef::Path(p) => {
            let full = src.dir.join(p);
            let text = read(&full)?;
            let sub = full.display().to_string();
            serde_json::from_str(&text).map_err(|e| json_error(&sub, e))?
        }
    };
    let alg = build_algebra(src, &aj)?;
    let auto = |name: &str| -> Result<AlgebraMap, IoError> {
        let images =
            aj.automorphisms.get(name).ok_or_else(|| src.invalid(format!("no automorphism named {:?}", name)))?;
        build_map(src, &alg, images)
    };
    let sigma = auto(&c.sigma)?;
    let tau = c.tau.as_deref().map(auto).transpose()?;
    let f = src.poly(&alg, &c.f)?;
    if let Some(v) = c.cover_variables.iter().find(|v| alg.gen_index(v).is_none()) {
        return Err(src.invalid(format!("cover variable {:?} is not a generator", v)));
    }
    NormalContext::new(f, sigma, tau).map_err(|e| src.invalid(e.to_string()))
}

fn build_matrix(src: &Source, alg: &Arc<Algebra>, m: &MatrixJson, what: &str) -> Result<GradedMatrix, IoError> {
    let entries = m
        .entries
        .iter()
        .map(|r| r.iter().map(|s| src.poly(alg, s)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    GradedMatrix::new(alg, m.source.clone(), m.target.clone(), entries)
        .map_err(|e| src.invalid(format!("{}: {}", what, e)))
}

fn tmf_from_json(src: &Source, j: &TmfJson) -> Result<Loaded, IoError> {
    let ctx = build_context(src, &j.context)?;
    let phi = build_matrix(src, &ctx.algebra, &j.phi, "phi")?;
    let psi = build_matrix(src, &ctx.algebra, &j.psi, "psi")?;
    Ok(Loaded { tmf: Tmf::new(&ctx, phi, psi), cover_variables: j.context.cover_variables.clone() })
}

fn source<'a>(path: &'a str, text: &'a str) -> Source<'a> {
    let dir = Path::new(path).parent().map(Path::to_path_buf).unwrap_or_default();
    Source { path, text, dir }
}

/// Parse a factorization from JSON text; `path` is used for messages and to
/// resolve a referenced algebra file.
pub fn parse_tmf(path: &str, text: &str) -> Result<Loaded, IoError> {
    let src = source(path, text);
    let j: TmfJson = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    tmf_from_json(&src, &j)
}

/// A file holding one factorization or an array of them.
pub fn parse_tmfs(path: &str, text: &str) -> Result<Vec<Loaded>, IoError> {
    let src = source(path, text);
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    let list: Vec<TmfJson> = if v.is_array() {
        serde_json::from_value(v).map_err(|e| src.invalid(e.to_string()))?
    } else {
        vec![serde_json::from_value(v).map_err(|e| src.invalid(e.to_string()))?]
    };
    list.iter().map(|j| tmf_from_json(&src, j)).collect()
}

pub fn load_tmfs(path: &Path) -> Result<Vec<Loaded>, IoError> {
    let text = read(path)?;
    parse_tmfs(&path.display().to_string(), &text)
}

pub fn parse_module(path: &str, text: &str) -> Result<(Arc<NormalContext>, EquivariantModule), IoError> {
    let src = source(path, text);
    let j: ModuleJson = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    let ctx = build_context(&src, &j.context)?;
    let z_action = build_matrix(&src, &ctx.algebra, &j.z_action, "z_action")?;
    Ok((ctx, EquivariantModule { shifts: j.shifts, z_action, theta: j.theta }))
}

pub fn algebra_json(alg: &Algebra, automorphisms: &[(&str, &AlgebraMap)]) -> AlgebraJson {
    let gens = alg.generators();
    let mut rules = Vec::new();
    for b in 0..gens.len() {
        for a in 0..b {
            if let Some(t) = alg.rule(b, a) {
                rules.push(RuleJson {
                    lhs: [GenRef::Name(gens[b].name.clone()), GenRef::Name(gens[a].name.clone())],
                    rhs: t.iter().map(|(m, c)| TermJson { coeff: c.to_string(), monomial: m.clone() }).collect(),
                });
            }
        }
    }
    let automorphisms = automorphisms
        .iter()
        .map(|(name, m)| {
            let images = gens
                .iter()
                .zip(m.images())
                .map(|(g, p)| (g.name.clone(), p.to_string()))
                .collect::<BTreeMap<_, _>>();
            (name.to_string(), images)
        })
        .collect();
    AlgebraJson {
        generators: gens.iter().map(|g| GeneratorJson { name: g.name.clone(), degree: g.degree }).collect(),
        rules,
        automorphisms,
    }
}

pub fn context_json(ctx: &NormalContext, cover_variables: &[String]) -> ContextJson {
    let mut autos: Vec<(&str, &AlgebraMap)> = vec![("sigma", &ctx.sigma)];
    if let Some(r) = &ctx.root {
        autos.push(("tau", &r.tau));
    }
    ContextJson {
        algebra: AlgebraRef::Inline(algebra_json(&ctx.algebra, &autos)),
        f: ctx.f.to_string(),
        sigma: "sigma".into(),
        tau: ctx.root.as_ref().map(|_| "tau".into()),
        cover_variables: cover_variables.to_vec(),
    }
}

pub fn matrix_json(m: &GradedMatrix) -> MatrixJson {
    MatrixJson {
        source: m.source().to_vec(),
        target: m.target().to_vec(),
        entries: m.entries().iter().map(|r| r.iter().map(|p| p.to_string()).collect()).collect(),
    }
}

pub fn tmf_json(t: &Tmf, cover_variables: &[String]) -> TmfJson {
    TmfJson { context: context_json(&t.ctx, cover_variables), phi: matrix_json(&t.phi), psi: matrix_json(&t.psi) }
}

pub fn module_json(ctx: &NormalContext, m: &EquivariantModule) -> ModuleJson {
    ModuleJson {
        context: context_json(ctx, &[]),
        shifts: m.shifts.clone(),
        z_action: matrix_json(&m.z_action),
        theta: m.theta.clone(),
    }
}

/// Canonical pretty-printed JSON.
pub fn to_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON forms always serialize");
    s.push('\n');
    s
}

/// Drop the named cover variables: the algebra on the remaining generators,
/// with `f`, `sigma` and `tau` restricted.
pub fn restrict_context(ctx: &NormalContext, drop: &[String]) -> Result<Arc<NormalContext>, String> {
    let alg = &ctx.algebra;
    let keep: Vec<usize> =
        (0..alg.ngens()).filter(|&i| !drop.contains(&alg.generators()[i].name)).collect();
    if keep.iter().enumerate().any(|(k, &i)| k != i) {
        return Err("cover variables must be the last generators".into());
    }
    let gens = alg.generators()[..keep.len()].to_vec();
    let mut rules = Vec::new();
    for b in 0..keep.len() {
        for a in 0..b {
            if let Some(t) = alg.rule(b, a) {
                let t: Terms = t.iter().map(|(m, c)| (m[..keep.len()].to_vec(), c.clone())).collect();
                rules.push(((b, a), t));
            }
        }
    }
    let base = Algebra::new(gens, rules).map_err(|e| e.to_string())?;
    let sigma = ctx.sigma.restrict(&base).map_err(|e| e.to_string())?;
    let tau = match &ctx.root {
        Some(r) => Some(r.tau.restrict(&base).map_err(|e| e.to_string())?),
        None => None,
    };
    NormalContext::new(ctx.f.restrict(&base), sigma, tau).map_err(|e| e.to_string())
}
