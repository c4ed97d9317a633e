//! `mlecone`: decide MLE existence for hierarchical log-linear models and
//! inspect marginal cones.
//!
//! Exit codes: 0 the MLE exists (or the command succeeded), 3 the MLE does not
//! exist, 1 usage error, 2 I/O or budget error, 4 methods disagree.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mlecone::complex::{parse_complex, parse_complex_with_k, SimplicialComplex};
use mlecone::cone::{
    collapsibility_report, facet_count_lower_bound, orbit_classify, square_reference_check, Budget, ConeError,
    MarginalCone,
};
use mlecone::decomposed::build_reduced_system;
use mlecone::design::DesignMatrix;
use mlecone::methods::{method_by_name, MethodConfig, METHOD_NAMES};
use mlecone::relint::ExistenceError;
use mlecone::table::{ContingencyTable, FaceMode, LevelSpec};
use mlecone::triangulate::{chordal_triangulation, triangulator_by_name};

const SCHEMA_VERSION: u32 = 1;

const EXIT_EXISTS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NOT_EXISTS: u8 = 3;
const EXIT_DISAGREE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "mlecone", version, about = "Exact existence tests for log-linear MLEs and marginal cone facets")]
struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print a readable summary instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    /// Maximum number of worker threads.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Maximum number of extreme rays for facet enumeration.
    #[arg(long, global = true)]
    budget_rays: Option<usize>,
    /// Maximum ambient dimension (design-matrix rows) for facet enumeration.
    #[arg(long, global = true)]
    budget_dim: Option<usize>,
    /// Lift the default limits for long enumerations. Also set by MLECONE_LONG=1.
    #[arg(long, global = true)]
    long: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the MLE exists for a table.
    Check {
        #[arg(long)]
        model: String,
        /// Table file, JSON (`{"levels", "counts"}`) or CSV.
        #[arg(long)]
        table: PathBuf,
        /// Levels for CSV tables, e.g. `2,3,2`; inferred when omitted.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
        /// Rows of the design matrix used for reported margins and exports.
        #[arg(long, value_enum, default_value_t = FaceModeArg::Facets)]
        face_mode: FaceModeArg,
        /// Triangulation strategy for the decomposed method.
        #[arg(long)]
        triangulator: Option<String>,
        /// Write the design matrix in sparse text form to this file.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Write the decomposed system in LP format to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Chordal cover of a model and its width.
    Triangulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        triangulator: Option<String>,
    },
    /// Enumerate the facets of a marginal cone.
    Facets {
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Defaults to all two-way interactions of three variables.
        #[arg(long)]
        model: Option<String>,
        /// Emit only the summary row: dim, rays, facets, orbits, collapsing.
        #[arg(long)]
        table1: bool,
        /// Compare the facet count with the three-way lower bound.
        #[arg(long)]
        check_lower_bound: bool,
    },
    /// Where each facet orbit comes from under collapsing.
    CollapseReport {
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Export the design matrix in sparse text form.
    Design {
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long, value_enum, default_value_t = FaceModeArg::Facets)]
        face_mode: FaceModeArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Direct,
    Kernel,
    Decomposed,
    Oracle,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FaceModeArg {
    Facets,
    All,
}

impl From<FaceModeArg> for FaceMode {
    fn from(m: FaceModeArg) -> Self {
        match m {
            FaceModeArg::Facets => FaceMode::FacetsOnly,
            FaceModeArg::All => FaceMode::AllFaces,
        }
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

fn io(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_IO, error: error.into() }
}

fn from_existence(e: ExistenceError) -> Failure {
    match e {
        ExistenceError::Cone(ConeError::Budget(_)) => io(e),
        ExistenceError::Solver(_) => io(e),
        _ => usage(e),
    }
}

fn from_cone(e: ConeError) -> Failure {
    match e {
        ConeError::Budget(_) | ConeError::Overflow => io(e),
        _ => usage(e),
    }
}

struct Output {
    report: Value,
    human: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_EXISTS });
        }
    };
    match run(&cli) {
        Ok(out) => match emit(&cli, &out) {
            Ok(()) => ExitCode::from(out.code),
            Err(f) => {
                eprintln!("error: {:#}", f.error);
                ExitCode::from(f.code)
            }
        },
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), Failure> {
    let text = if cli.human {
        out.human.clone()
    } else {
        serde_json::to_string_pretty(&out.report).map_err(io)? + "\n"
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn budget(cli: &Cli) -> Budget {
    let long = cli.long || std::env::var("MLECONE_LONG").is_ok_and(|v| v == "1");
    let mut b = if long { Budget::long() } else { Budget::default() };
    if let Some(r) = cli.budget_rays {
        b.max_rays = r;
    }
    if let Some(d) = cli.budget_dim {
        b.max_ambient_dim = d;
    }
    b
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(dst), Value::Object(src)) = (&mut v, body) {
        dst.extend(src);
    }
    v
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Check { model, table, levels, method, face_mode, triangulator, dump_matrix, dump_lp } => cmd_check(
            cli,
            &CheckArgs {
                model,
                table,
                levels: levels.as_deref(),
                method: *method,
                face_mode: (*face_mode).into(),
                triangulator: triangulator.as_deref(),
                dump_matrix: dump_matrix.as_deref(),
                dump_lp: dump_lp.as_deref(),
            },
        ),
        Command::Triangulate { model, triangulator } => cmd_triangulate(model, triangulator.as_deref()),
        Command::Facets { levels, model, table1, check_lower_bound } => {
            cmd_facets(cli, levels, model.as_deref(), *table1, *check_lower_bound)
        }
        Command::CollapseReport { levels, model } => cmd_collapse_report(cli, levels, model.as_deref()),
        Command::Design { model, levels, face_mode } => cmd_design(model, levels, (*face_mode).into()),
    }
}

struct CheckArgs<'a> {
    model: &'a str,
    table: &'a Path,
    levels: Option<&'a [usize]>,
    method: MethodArg,
    face_mode: FaceMode,
    triangulator: Option<&'a str>,
    dump_matrix: Option<&'a Path>,
    dump_lp: Option<&'a Path>,
}

fn load_table(path: &Path, levels: Option<&[usize]>) -> Result<ContingencyTable, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(io)?;
    let spec = levels.map(|l| LevelSpec::new(l.to_vec())).transpose().map_err(usage)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    let table = if is_json {
        ContingencyTable::from_json_str(&text)
    } else {
        ContingencyTable::from_csv(&text, spec.clone())
    }
    .with_context(|| format!("parsing {}", path.display()))
    .map_err(io)?;
    if let Some(s) = spec {
        if &s != table.spec() {
            return Err(usage(anyhow!("table has levels {:?}, --levels says {:?}", table.spec().levels(), s.levels())));
        }
    }
    Ok(table)
}

#[derive(Serialize)]
struct MethodReport {
    method: &'static str,
    exists: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<String>,
    elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

fn cmd_check(cli: &Cli, args: &CheckArgs) -> Result<Output, Failure> {
    let table = load_table(args.table, args.levels)?;
    let model = parse_complex_with_k(args.model, table.spec().k()).map_err(usage)?;
    table.check_model(&model).map_err(usage)?;
    let config = MethodConfig { budget: budget(cli), triangulator: args.triangulator.map(str::to_string) };
    if let Some(t) = args.triangulator {
        triangulator_by_name(t).ok_or_else(|| usage(anyhow!("unknown triangulator {t:?}")))?;
    }
    let names: Vec<&str> = match args.method {
        MethodArg::Direct => vec!["direct"],
        MethodArg::Kernel => vec!["kernel"],
        MethodArg::Decomposed => vec!["decomposed"],
        MethodArg::Oracle => vec!["oracle"],
        MethodArg::All => METHOD_NAMES.to_vec(),
    };

    let mut reports = Vec::new();
    let mut primary = None;
    let mut verdicts = Vec::new();
    for name in names {
        let method = method_by_name(name, &config).ok_or_else(|| usage(anyhow!("unknown method {name}")))?;
        let start = Instant::now();
        match method.decide(&table, &model) {
            Ok(v) => {
                let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                verdicts.push(v.exists);
                reports.push(MethodReport {
                    method: v.method,
                    exists: Some(v.exists),
                    epsilon: v.epsilon.as_ref().map(|e| e.to_string()),
                    elapsed_ms,
                    skipped: None,
                });
                if v.verdict.is_some() {
                    primary = v.verdict;
                }
            }
            Err(ExistenceError::Cone(ConeError::Budget(msg))) if args.method == MethodArg::All => {
                reports.push(MethodReport {
                    method: method.name(),
                    exists: None,
                    epsilon: None,
                    elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                    skipped: Some(format!("budget exceeded: {msg}")),
                });
            }
            Err(e) => return Err(from_existence(e)),
        }
    }
    let agree = verdicts.windows(2).all(|w| w[0] == w[1]);
    let exists = verdicts[0];

    let design = DesignMatrix::build(table.spec(), &model, args.face_mode).map_err(usage)?;
    if let Some(path) = args.dump_matrix {
        std::fs::write(path, design.to_sparse_text()).with_context(|| format!("writing {}", path.display())).map_err(io)?;
    }
    if let Some(path) = args.dump_lp {
        let cover = match args.triangulator {
            Some(t) => triangulator_by_name(t)
                .and_then(|tr| tr.triangulate(&model))
                .ok_or_else(|| usage(anyhow!("triangulator {t} declined the model")))?,
            None => chordal_triangulation(&model),
        };
        let sys = build_reduced_system(&table, &model, &cover).map_err(from_existence)?;
        std::fs::write(path, sys.to_lp_text()).with_context(|| format!("writing {}", path.display())).map_err(io)?;
    }

    let mut body = json!({
        "model": model.to_string(),
        "levels": table.spec().levels(),
        "face_mode": args.face_mode,
        "jobs": cli.jobs,
        "margins": design.apply_counts(table.counts()),
        "methods": reports,
        "agreement": agree,
        "exists": exists,
    });
    if let Some(v) = &primary {
        let vj = serde_json::to_value(v.to_json(&table)).map_err(io)?;
        if let (Value::Object(dst), Value::Object(src)) = (&mut body, vj) {
            for (k, val) in src {
                if k != "exists" {
                    dst.insert(k, val);
                }
            }
        }
    }

    let mut human = String::new();
    let _ = writeln!(human, "model {}  levels {}", model, table.spec());
    for r in &body["methods"].as_array().cloned().unwrap_or_default() {
        let _ = writeln!(
            human,
            "  {:<10} {}",
            r["method"].as_str().unwrap_or(""),
            match r["exists"].as_bool() {
                Some(true) => "exists".to_string(),
                Some(false) => "does not exist".to_string(),
                None => format!("skipped ({})", r["skipped"].as_str().unwrap_or("")),
            }
        );
    }
    if let Some(v) = &primary {
        let _ = writeln!(human, "epsilon* = {}", v.epsilon_star);
        if !v.facial_set.is_empty() {
            let cells: Vec<String> = v.facial_set.iter().map(|&c| format!("{:?}", table.spec().cell_label(c))).collect();
            let _ = writeln!(human, "facial set: {}", cells.join(" "));
        }
    }
    let code = if !agree {
        let _ = writeln!(human, "METHODS DISAGREE");
        EXIT_DISAGREE
    } else if exists {
        let _ = writeln!(human, "MLE exists");
        EXIT_EXISTS
    } else {
        let _ = writeln!(human, "MLE does not exist");
        EXIT_NOT_EXISTS
    };
    Ok(Output { report: envelope("check", body), human, code })
}

fn cmd_triangulate(model: &str, triangulator: Option<&str>) -> Result<Output, Failure> {
    let model = parse_complex(model).map_err(usage)?;
    let (name, cover) = match triangulator {
        Some(t) => {
            let tr = triangulator_by_name(t).ok_or_else(|| usage(anyhow!("unknown triangulator {t:?}")))?;
            let cover = tr.triangulate(&model).ok_or_else(|| usage(anyhow!("triangulator {t} declined the model")))?;
            (tr.name(), cover)
        }
        None => ("auto", chordal_triangulation(&model)),
    };
    let report = cover.report();
    let mut human = format!("width {}\n", report.width);
    for c in &cover.cliques {
        let _ = writeln!(human, "  {c}");
    }
    let body = json!({ "model": model.to_string(), "triangulator": name, "cliques": report.cliques, "width": report.width, "elimination_order": report.elimination_order });
    Ok(Output { report: envelope("triangulate", body), human, code: EXIT_EXISTS })
}

fn cone_model(levels: &[usize], model: Option<&str>) -> Result<(LevelSpec, SimplicialComplex), Failure> {
    let spec = LevelSpec::new(levels.to_vec()).map_err(usage)?;
    let model = match model {
        Some(m) => parse_complex_with_k(m, spec.k()).map_err(usage)?,
        None if spec.k() == 3 => SimplicialComplex::cycle(3),
        None => return Err(usage(anyhow!("--model is required unless there are exactly three variables"))),
    };
    Ok((spec, model))
}

fn cmd_facets(
    cli: &Cli,
    levels: &[usize],
    model: Option<&str>,
    table1: bool,
    check_lower_bound: bool,
) -> Result<Output, Failure> {
    let (spec, model) = cone_model(levels, model)?;
    let three_way = spec.k() == 3 && model == SimplicialComplex::cycle(3);
    if check_lower_bound && !three_way {
        return Err(usage(anyhow!("--check-lower-bound needs three variables and the model [12][13][23]")));
    }
    let start = Instant::now();
    let cone = MarginalCone::new(&spec, &model).map_err(from_cone)?.enumerate(&budget(cli)).map_err(from_cone)?;
    let orbits = orbit_classify(&cone);
    let mut human = format!(
        "levels {spec}  model {model}\ndim {}  extreme rays {}  facets {}  orbits {}\n",
        cone.dim(),
        cone.extreme_ray_count(),
        cone.facet_count(),
        orbits.len()
    );
    let mut body = if table1 {
        let report = collapsibility_report(&cone, &orbits).map_err(from_cone)?;
        let collapsing: Vec<String> = report.minimal_collapsing.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(human, "collapsing {}", collapsing.join(" "));
        json!({
            "levels": spec.levels(),
            "model": model.to_string(),
            "dim": cone.dim(),
            "extreme_rays": cone.extreme_ray_count(),
            "facets": cone.facet_count(),
            "orbits": orbits.len(),
            "collapsing": report.minimal_collapsing,
        })
    } else {
        let mut v = serde_json::to_value(cone.to_json(Some(&orbits))).map_err(io)?;
        v["model"] = json!(model.to_string());
        v["facet_count"] = json!(cone.facet_count());
        v["extreme_rays"] = json!(cone.extreme_ray_count());
        v
    };
    if check_lower_bound {
        let l = spec.levels();
        let bound = facet_count_lower_bound(l[0] as u32, l[1] as u32, l[2] as u32);
        let holds = bound <= cone.facet_count() as u128;
        let _ = writeln!(human, "lower bound {bound} <= {}: {}", cone.facet_count(), if holds { "confirmed" } else { "VIOLATED" });
        body["lower_bound"] = json!({ "bound": bound.to_string(), "facets": cone.facet_count(), "holds": holds });
    }
    body["elapsed_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    Ok(Output { report: envelope("facets", body), human, code: EXIT_EXISTS })
}

fn cmd_collapse_report(cli: &Cli, levels: &[usize], model: Option<&str>) -> Result<Output, Failure> {
    let (spec, model) = cone_model(levels, model)?;
    let cone = MarginalCone::new(&spec, &model).map_err(from_cone)?.enumerate(&budget(cli)).map_err(from_cone)?;
    let orbits = orbit_classify(&cone);
    let report = collapsibility_report(&cone, &orbits).map_err(from_cone)?;
    let square = square_reference_check(&report);
    let mut human = format!("levels {spec}  orbits {}\n", report.orbits.len());
    for o in &report.orbits {
        let what = match &o.provenance {
            mlecone::cone::CollapseProvenance::MarginFacet { face, cell } => format!("margin facet {face:?} at {cell:?}"),
            mlecone::cone::CollapseProvenance::CollapsedFrom { levels, .. } => format!("collapsed from {levels:?}"),
            mlecone::cone::CollapseProvenance::NonCollapsible => "non-collapsible".to_string(),
        };
        let _ = writeln!(human, "  {} x{}  {what}", o.representative, o.size);
    }
    let _ = writeln!(human, "all facets collapse to {:?}", report.minimal_collapsing);
    if let Some(sq) = &square {
        if !sq.counterexamples.is_empty() {
            let _ = writeln!(human, "{} orbits do not collapse to {:?}", sq.counterexamples.len(), sq.reference);
        }
    }
    let mut body = serde_json::to_value(&report).map_err(io)?;
    body["model"] = json!(model.to_string());
    body["square_reference"] = serde_json::to_value(&square).map_err(io)?;
    Ok(Output { report: envelope("collapse-report", body), human, code: EXIT_EXISTS })
}

fn cmd_design(model: &str, levels: &[usize], face_mode: FaceMode) -> Result<Output, Failure> {
    let spec = LevelSpec::new(levels.to_vec()).map_err(usage)?;
    let model = parse_complex_with_k(model, spec.k()).map_err(usage)?;
    let design = DesignMatrix::build(&spec, &model, face_mode).map_err(usage)?;
    let (rank, kernel) = design.rank_and_kernel_dim();
    let text = design.to_sparse_text();
    let body = json!({
        "model": model.to_string(),
        "levels": spec.levels(),
        "face_mode": face_mode,
        "rows": design.row_count(),
        "cols": design.col_count,
        "rank": rank,
        "kernel_dim": kernel,
        "sparse": text,
    });
    Ok(Output { report: envelope("design", body), human: text, code: EXIT_EXISTS })
}
