//! Command-line pipelines. Each command has a library entry point returning
//! a serializable report; [`run`] wraps them with argument parsing, file
//! output and exit codes.

mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::budget::{budget, compare_literature, minimal_q, render_table, with_choice, BudgetMode, LiteratureRow, SmoothnessBudget};
use crate::cohsolver::{compactify, solve_backward, solve_both, solve_forward, symmetric_bump_spec, CompactifiedSystem, GridSpec, Mode, SampledField, SolverConfig, SystemInput, VectorFn};
use crate::error::{Error, Result};
use crate::nhimverify::{nhim_check, NhimReport, SamplingOptions, DEFAULT_SAMPLES};
use crate::normalform::{lie_normalize_hamiltonian, poincare_dulac, split_remainder, theorem_form_report, HamOptions, KeepSet, NfOptions, NormalizationResult, Normalized, SplitOptions, TheoremFormReport};
use crate::polycore::Role;
use crate::resonance::{resonant_set, Arith, HamConvention, ResMode, ResonantSet};
use crate::signsym::{check_field_signsym, check_hamiltonian_signsym, BumpSpec, SignReport};
use crate::spectral::{log_norm, spectral_gap, LogNormReport, SpectralGap};

pub use spec::{BudgetSpec, Built, RemainderSpec, SolverSpec, SystemSpec, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Precondition { .. } | Error::CenterEigenvalue(_) | Error::ResonantTerm { .. } | Error::InvalidWindow { .. } | Error::NonInvertibleLinearPart => EXIT_PRECONDITION,
        e if e.is_numerical() => EXIT_NUMERICAL,
        Error::GridTooCoarse(_) => EXIT_NUMERICAL,
        _ => EXIT_SCHEMA,
    }
}

pub fn load_spec(path: &Path) -> Result<SystemSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    SystemSpec::from_json(&text)
}

fn default_bump(spec: &SystemSpec) -> Result<BumpSpec> {
    match spec.bump {
        Some(b) => Ok(b),
        None => symmetric_bump_spec(0.1, 0.2),
    }
}

fn default_p(spec: &SystemSpec) -> u32 {
    spec.budget.p.map(|p| p.max(2) as u32).unwrap_or(4)
}

/// Compactified system of `spec`, truncated at `trunc`.
pub fn compactified(spec: &SystemSpec, built: &Built) -> Result<CompactifiedSystem> {
    let input = match (&built.hamiltonian, &built.form) {
        (Some(h), Some(f)) => SystemInput::Hamiltonian(h.clone(), f.clone()),
        _ => SystemInput::Field(built.field.clone()),
    };
    compactify(&input, default_bump(spec)?)
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    pub block: String,
    pub supplied: bool,
    pub log_norm: LogNormReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub budget: SmoothnessBudget,
    pub minimal_q: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSummary {
    pub set: ResonantSet,
    /// Saddle-component entries of degree two.
    pub saddle_order2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub name: Option<String>,
    pub mode: Mode,
    pub gap: SpectralGap,
    pub log_norms: Vec<BlockNorm>,
    pub resonances: ResonanceSummary,
    pub budgets: Vec<BudgetEntry>,
    pub literature: Vec<LiteratureRow>,
    pub signsym: Option<SignReport>,
    pub notes: Vec<String>,
}

pub fn analyze(spec: &SystemSpec, max_degree: u32) -> Result<AnalysisReport> {
    let r = &spec.roster;
    let saddles = r.saddle_indices();
    let gap = spectral_gap(&saddles.iter().map(|&i| r.nu(i)).collect::<Vec<_>>())?;
    let built = spec.build(max_degree.max(2))?;
    let sys = compactified(spec, &built)?;
    let supplied = spec.matrices()?;
    let mut log_norms = Vec::new();
    for (name, m) in [("A_u", &sys.a_u), ("A_s", &sys.a_s), ("B", &sys.b)] {
        if m.nrows() == 0 {
            continue;
        }
        let given = supplied.iter().find(|(n, _)| *n == name);
        log_norms.push(BlockNorm {
            block: name.into(),
            supplied: given.is_some(),
            log_norm: log_norm(given.map_or(m, |(_, g)| g)),
        });
    }
    let mode = match spec.mode {
        Mode::General => ResMode::VectorField,
        Mode::Hamiltonian => ResMode::Hamiltonian(HamConvention::default()),
    };
    let lo = if spec.mode == Mode::General { 2 } else { 3 };
    let set = resonant_set(r, lo, max_degree.max(lo), mode, Arith::default())?;
    let saddle_order2 = set
        .entries
        .iter()
        .filter(|e| e.index.degree() == 2 && e.component.is_some_and(|j| saddles.contains(&j)))
        .count();
    let k = spec.budget.k;
    let mut notes = Vec::new();
    let pure = r.center_indices().is_empty();
    let modes: &[BudgetMode] = if pure {
        &[BudgetMode::General, BudgetMode::Hamiltonian, BudgetMode::PureSaddle]
    } else {
        &[BudgetMode::General, BudgetMode::Hamiltonian]
    };
    let mut budgets = Vec::new();
    for &m in modes {
        let mut b = budget(k, &gap, m)?;
        if let (Some(qq), Some(p), Some(q)) = (spec.budget.q_big, spec.budget.p, spec.budget.q) {
            b = with_choice(&b, qq, p, q);
        }
        let minimal_q = minimal_q(&b);
        budgets.push(BudgetEntry { budget: b, minimal_q });
    }
    if pure {
        notes.push("pure saddle: q0 = Q0 + 2".into());
    }
    let signsym = if r.has_sign_groups() {
        Some(match &built.hamiltonian {
            Some(h) => check_hamiltonian_signsym(h)?,
            None => check_field_signsym(&built.field)?,
        })
    } else {
        notes.push("no sign groups in the roster; sign symmetry not checked".into());
        None
    };
    Ok(AnalysisReport {
        name: spec.name.clone(),
        mode: spec.mode,
        gap,
        log_norms,
        resonances: ResonanceSummary { set, saddle_order2 },
        budgets,
        literature: compare_literature(k, &gap),
        signsym,
        notes,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v}"))
}

pub fn render_analysis(a: &AnalysisReport) -> String {
    let mut s = String::new();
    if let Some(n) = &a.name {
        s.push_str(&format!("system: {n}\n"));
    }
    let g = &a.gap;
    s.push_str(&format!(
        "spectral gap: lambda in [{}, {}], mu in [{}, {}]\n",
        opt(g.lambda_min),
        opt(g.lambda_max),
        opt(g.mu_min),
        opt(g.mu_max)
    ));
    for b in &a.log_norms {
        s.push_str(&format!("{:<4} mu_log = {:.6}  m_l = {:.6}\n", b.block, b.log_norm.mu_log, b.log_norm.m_l));
    }
    let w = a.resonances.set.window;
    s.push_str(&format!(
        "resonant monomials, degrees {}..={}: {} ({} saddle-component of order 2)\n",
        w.0,
        w.1,
        a.resonances.set.len(),
        a.resonances.saddle_order2
    ));
    s.push_str("\nbudget:\n");
    for e in &a.budgets {
        let b = &e.budget;
        s.push_str(&format!(
            "  {:<12} l1 = {}  l2 = {}  Q0 = {}  q0 = {}  minimal q = {}\n",
            serde_json::to_value(b.mode).unwrap().as_str().unwrap_or("").to_string(),
            b.ell1,
            b.ell2,
            b.q_big0,
            b.q0,
            e.minimal_q
        ));
        for r in &b.inequality_ledger {
            s.push_str(&format!("    {:<28} {:?}  ({} vs {})\n", r.name, r.status, r.lhs, r.rhs));
        }
        for w in &b.warnings {
            s.push_str(&format!("    warning: {w}\n"));
        }
    }
    s.push_str("\nliterature:\n");
    s.push_str(&render_table(&a.literature));
    s.push('\n');
    match &a.signsym {
        Some(r) if r.symmetric => s.push_str(&format!("sign symmetry: ok ({} terms)\n", r.checked_terms)),
        Some(r) => s.push_str(&format!("sign symmetry: {} violating terms\n", r.violations.len())),
        None => s.push_str("sign symmetry: not applicable\n"),
    }
    for n in &a.notes {
        s.push_str(&format!("note: {n}\n"));
    }
    s
}

// -------------------------------------------------------------- normalize

/// One monomial to keep, by component name (absent for a Hamiltonian).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeepEntry {
    #[serde(default)]
    pub component: Option<String>,
    pub exp: Vec<u16>,
}

pub fn keep_set(spec: &SystemSpec, entries: &[KeepEntry]) -> Result<KeepSet> {
    let mut k = KeepSet::default();
    for e in entries {
        if e.exp.len() != spec.roster.len() {
            return Err(Error::InvalidInput(format!("keep entry {:?} has the wrong length", e.exp)));
        }
        let c = match &e.component {
            None => None,
            Some(n) => Some(spec.roster.index_of(n).ok_or_else(|| Error::InvalidInput(format!("unknown component `{n}`")))?),
        };
        k.insert(c, &e.exp);
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizeReport {
    #[serde(rename = "P")]
    pub p: u32,
    pub removed: usize,
    pub identity_transform: bool,
    pub residual_nonresonant_max: f64,
    pub theorem_form: TheoremFormReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizeOutput {
    pub result: NormalizationResult,
    pub report: NormalizeReport,
}

pub fn normalize(spec: &SystemSpec, p: u32, keep: Option<&KeepSet>) -> Result<NormalizeOutput> {
    if p < 2 {
        return Err(Error::InvalidWindow { k1: 2, k2: p });
    }
    let (result, field) = match spec.mode {
        Mode::General => {
            let built = spec.build(p)?;
            let res = poincare_dulac(&built.field, p, keep, NfOptions::default())?;
            let f = res.field().unwrap().clone();
            (res, f)
        }
        Mode::Hamiltonian => {
            let built = spec.build(p + 1)?;
            let form = built.form.unwrap();
            let opts = HamOptions { keep: keep.cloned(), ..Default::default() };
            let res = lie_normalize_hamiltonian(built.hamiltonian.as_ref().unwrap(), &form, p + 1, &opts)?.result;
            let f = form.vector_field(res.hamiltonian().unwrap(), p)?;
            (res, f)
        }
    };
    let q_big = spec.budget.q_big.map_or(p.saturating_sub(2), |q| q.max(0) as u32);
    let r = field.roster().clone();
    let id = crate::polycore::PolyField::identity(&r, result.transform.trunc_degree());
    let report = NormalizeReport {
        p,
        removed: result.total_removed(),
        identity_transform: result.transform.max_diff(&id) == 0.0,
        residual_nonresonant_max: result.residual_nonresonant_max,
        theorem_form: theorem_form_report(&field, p, q_big)?,
    };
    Ok(NormalizeOutput { result, report })
}

// --------------------------------------------------------------- cohsolve

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Back,
    Fwd,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohsolveOptions {
    pub mode: SolveMode,
    #[serde(default)]
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub label: String,
    pub points: usize,
    pub max_value: f64,
    pub max_residual: f64,
    pub max_t_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohsolveSummary {
    pub mode: SolveMode,
    pub ell1: u32,
    pub ell2: u32,
    pub quad_tol: f64,
    pub straightened: bool,
    pub fields: Vec<FieldSummary>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohsolveOutput {
    /// Labelled fields: `G1`, `G2` and their sum `G`, as requested.
    pub fields: Vec<(String, SampledField)>,
    pub summary: CohsolveSummary,
}

fn bumped(sys: &CompactifiedSystem, r: &Normalized) -> Result<Arc<dyn VectorFn>> {
    Ok(sys.clone().with_poly_remainder(r)?.remainder().unwrap().clone())
}

fn summarize(label: &str, g: &SampledField) -> FieldSummary {
    FieldSummary {
        label: label.into(),
        points: g.grid.len(),
        max_value: g.values.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs())),
        max_residual: g.max_residual(),
        max_t_star: g.t_star.iter().fold(0.0, |m: f64, v| m.max(*v)),
    }
}

pub fn cohsolve(spec: &SystemSpec, opts: &CohsolveOptions) -> Result<CohsolveOutput> {
    if spec.remainder.is_none() {
        return Err(Error::InvalidInput("cohsolve requires R".into()));
    }
    let built = spec.build(default_p(spec).max(3))?;
    let rem = built.remainder.clone().unwrap();
    let sys = compactified(spec, &built)?;
    let solver = spec.solver.clone().unwrap_or_default();
    let (ell1, ell2) = match (solver.ell1, solver.ell2) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let gap = sys.gap()?;
            let m = if spec.mode == Mode::Hamiltonian { BudgetMode::Hamiltonian } else { BudgetMode::General };
            let bu = budget(spec.budget.k, &gap, m)?;
            (a.unwrap_or(bu.ell1 as u32), b.unwrap_or(bu.ell2 as u32))
        }
    };
    let quad_tol = opts.quad_tol.or(solver.quad_tol).unwrap_or(1e-8);
    let grid = opts.grid.clone().or(solver.grid).unwrap_or_default();
    let points = grid.points(&sys)?;
    let cfg = |ell| SolverConfig { quad_tol, ell, ..Default::default() };
    let mut warnings = Vec::new();
    if !sys.straightened {
        warnings.push("input is not straightened; G is reported in the given chart".into());
    }
    let fields = match opts.mode {
        SolveMode::Back => vec![("G1".to_string(), solve_backward(&sys, bumped(&sys, &rem)?.as_ref(), &points, &cfg(ell1))?)],
        SolveMode::Fwd => vec![("G2".to_string(), solve_forward(&sys, bumped(&sys, &rem)?.as_ref(), &points, &cfg(ell2))?)],
        SolveMode::Both => {
            let split = split_remainder(
                &rem,
                ell1,
                ell2,
                &SplitOptions {
                    q_big: spec.budget.q_big.map(|q| q.max(0) as u32),
                    ..Default::default()
                },
            )?;
            warnings.extend(split.warnings.iter().cloned());
            let r1 = bumped(&sys, &split.r1)?;
            let r2 = bumped(&sys, &split.r2)?;
            let (g1, g2, g) = solve_both(&sys, r1.as_ref(), r2.as_ref(), &points, &cfg(ell1), &cfg(ell2))?;
            vec![("G1".into(), g1), ("G2".into(), g2), ("G".into(), g)]
        }
    };
    let summary = CohsolveSummary {
        mode: opts.mode,
        ell1,
        ell2,
        quad_tol,
        straightened: sys.straightened,
        fields: fields.iter().map(|(l, g)| summarize(l, g)).collect(),
        warnings,
    };
    Ok(CohsolveOutput { fields, summary })
}

// ------------------------------------------------------------- nhim-check

pub fn nhim(spec: &SystemSpec, opts: &SamplingOptions) -> Result<NhimReport> {
    let built = spec.build(default_p(spec).max(3))?;
    let mut sys = compactified(spec, &built)?;
    if let Some(r) = &built.remainder {
        sys = sys.with_poly_remainder(r)?;
    }
    nhim_check(&sys, opts, spec.budget.k)
}

pub fn render_nhim(r: &NhimReport) -> String {
    let mut s = format!("NHIM diagnostics ({})\n", r.label);
    s.push_str(&format!("{:<28}{:>14}{:>14}{:>14}  ok\n", "condition", "lhs", "rhs", "margin"));
    for row in &r.ledger.rows {
        s.push_str(&format!(
            "{:<28}{:>14.6}{:>14.6}{:>14.6}  {}\n",
            row.name.replace('j', &row.j.map_or("j".into(), |j| j.to_string())),
            row.lhs,
            row.rhs,
            row.margin,
            if row.pass { "yes" } else { "no" }
        ));
    }
    let b = &r.isolating_block;
    s.push_str(&format!(
        "isolating block (delta = {}): exit margin {:.6e}, entry margin {:.6e}, {}\n",
        b.delta,
        b.exit.margin,
        b.entry.margin,
        if b.pass { "pass" } else { "FAIL" }
    ));
    s.push_str(&format!("rate conditions: {}\n", if r.ledger.all_pass { "pass" } else { "FAIL" }));
    s
}

// ---------------------------------------------------------- check-signsym

pub fn signsym(spec: &SystemSpec) -> Result<SignReport> {
    let built = spec.build(default_p(spec).max(3))?;
    match &built.hamiltonian {
        Some(h) => check_hamiltonian_signsym(h),
        None => check_field_signsym(&built.field),
    }
}

fn exp_string(r: &crate::polycore::Roster, exp: &[u16]) -> String {
    let parts: Vec<String> = exp
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { r.name(i).to_string() } else { format!("{}^{e}", r.name(i)) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

pub fn render_signsym(spec: &SystemSpec, r: &SignReport) -> String {
    let mut s = format!(
        "sign symmetry: {} ({} terms checked)\n",
        if r.symmetric { "ok" } else { "violated" },
        r.checked_terms
    );
    for v in &r.violations {
        let comp = v.component.as_deref().map_or(String::new(), |c| format!("[{c}] "));
        let par: Vec<String> = v.parities.iter().map(|(g, p)| format!("{g}={p}")).collect();
        s.push_str(&format!(
            "  {comp}{} coeff ({}, {})  degrees {}\n",
            exp_string(&spec.roster, &v.exp),
            v.re,
            v.im,
            par.join(" ")
        ));
    }
    s
}

// -------------------------------------------------------------------- run

#[derive(Parser, Debug)]
#[command(name = "saddlenf", version, about = "Normal forms and conjugacy numerics near saddle-center equilibria")]
pub struct Cli {
    /// Seed for the quasi-random sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for grid solves and sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectral gap, resonances, smoothness budget and literature comparison.
    Analyze {
        spec: PathBuf,
        /// Highest degree for the resonance listing (defaults to P, or 4).
        #[arg(long)]
        max_degree: Option<u32>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Polynomial normal form up to degree P.
    Normalize {
        spec: PathBuf,
        #[arg(long)]
        degree: Option<u32>,
        /// JSON list of `{component, exp}` monomials to keep.
        #[arg(long)]
        keep_file: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Sampled solution of the cohomological equation.
    Cohsolve {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMode::Back)]
        mode: SolveMode,
        #[arg(long)]
        quad_tol: Option<f64>,
        /// JSON grid description `{half_width, points_per_axis, center_slice}`.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Sampled rate constants and isolating-block margins.
    NhimCheck {
        spec: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long = "L", default_value_t = 0.1)]
        l: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Term-by-term sign-symmetry check.
    CheckSignsym {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent() {
        if !d.as_os_str().is_empty() {
            fs::create_dir_all(d).map_err(|e| Error::InvalidInput(format!("{}: {e}", d.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Analyze { spec, max_degree, json: as_json, out } => {
            let s = load_spec(spec)?;
            let a = analyze(&s, max_degree.unwrap_or_else(|| default_p(&s)))?;
            if let Some(o) = out {
                write(o, &json(&a))?;
            }
            if *as_json {
                print!("{}", json(&a));
            } else {
                print!("{}", render_analysis(&a));
            }
            Ok(EXIT_OK)
        }
        Command::Normalize { spec, degree, keep_file, out_dir } => {
            let s = load_spec(spec)?;
            let keep = match keep_file {
                Some(p) => Some(keep_set(&s, &read_json::<Vec<KeepEntry>>(p)?)?),
                None => None,
            };
            let p = degree.unwrap_or_else(|| default_p(&s));
            let out = normalize(&s, p, keep.as_ref())?;
            write(&out_dir.join("normalized.json"), &json(&out.result.normalized))?;
            write(&out_dir.join("transform.json"), &json(&out.result.transform))?;
            write(&out_dir.join("result.json"), &json(&out.result))?;
            write(&out_dir.join("report.json"), &json(&out.report))?;
            let t = &out.report.theorem_form;
            println!(
                "normalized to degree {p}: {} terms removed, {} normal-form, {} remainder-admissible, {} violations",
                out.report.removed, t.normal_form, t.remainder_admissible, t.violations
            );
            Ok(EXIT_OK)
        }
        Command::Cohsolve { spec, mode, quad_tol, grid, out_dir } => {
            let s = load_spec(spec)?;
            let grid = grid.as_deref().map(read_json::<GridSpec>).transpose()?;
            let out = cohsolve(&s, &CohsolveOptions { mode: *mode, quad_tol: *quad_tol, grid })?;
            for (label, g) in &out.fields {
                write(&out_dir.join(format!("{label}.json")), &(g.to_json()? + "\n"))?;
                let mut buf = Vec::new();
                g.write_csv(&mut buf)?;
                write(&out_dir.join(format!("{label}.csv")), &String::from_utf8(buf).expect("csv is utf-8"))?;
            }
            write(&out_dir.join("summary.json"), &json(&out.summary))?;
            for f in &out.summary.fields {
                println!(
                    "{}: {} points, max |G| = {:.6e}, max residual = {:.3e}, max T* = {:.3}",
                    f.label, f.points, f.max_value, f.max_residual, f.max_t_star
                );
            }
            for w in &out.summary.warnings {
                println!("warning: {w}");
            }
            Ok(EXIT_OK)
        }
        Command::NhimCheck { spec, delta, samples, l, out } => {
            let s = load_spec(spec)?;
            let opts = SamplingOptions {
                samples: *samples,
                seed: cli.seed,
                ..SamplingOptions::new(*delta, *l)
            };
            let r = nhim(&s, &opts)?;
            if let Some(o) = out {
                write(o, &json(&r))?;
            }
            print!("{}", render_nhim(&r));
            Ok(EXIT_OK)
        }
        Command::CheckSignsym { spec, out } => {
            let s = load_spec(spec)?;
            let r = signsym(&s)?;
            if let Some(o) = out {
                write(o, &json(&r))?;
            }
            print!("{}", render_signsym(&s, &r));
            Ok(if r.symmetric { EXIT_OK } else { EXIT_PRECONDITION })
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Saddle-coordinate indices of the compactified chart, in chart order.
pub fn saddle_coords(sys: &CompactifiedSystem) -> Vec<usize> {
    let mut v = sys.indices(Role::Unstable);
    v.extend(sys.indices(Role::Stable));
    v.sort_unstable();
    v
}
