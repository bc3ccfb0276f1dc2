//! `sobmult` — decide whether a symbol multiplies W^{1,2}[0,1] (and its
//! endpoint-vanishing subspace W_0) densely, probe operator boundedness, and
//! construct a certified non-vanishing denominator.
//!
//! Exit codes: 0 success, 1 inconclusive verdicts, 2 parse/config errors,
//! 3 refused construction.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use report::{
    Classification, Format, InputEcho, KernelResidual, KernelSection, Report, Timings, Tolerances,
    SCHEMA_VERSION,
};
use sobmult::denom::{DenomConfig, DenomError, DenominatorResult};
use sobmult::{
    boundedness_probe, build_denominator, catalog, classify_full, classify_w0, inner_product,
    kernel_function, kernel_value, ClassifyConfig, Decision, DifferentiableFunction, Evidence,
    MembershipConfig, QuadConfig, RealFunction,
};

#[derive(Parser)]
#[command(
    name = "sobmult",
    version,
    about = "Multiplication operators on the Sobolev space W^{1,2}[0,1]: classification and certified non-vanishing denominators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a symbol on W_0 and the full space; probe boundedness
    Classify(SymbolArgs),
    /// Build the non-vanishing denominator and emit its certificate
    Denom(SymbolArgs),
    /// Sample the reproducing kernel and check the reproducing identity
    Kernel(KernelArgs),
}

#[derive(Args)]
struct SymbolArgs {
    /// Symbol expression over x, e.g. "sin(1/x)"
    #[arg(long, conflicts_with = "catalog")]
    function: Option<String>,
    /// Built-in symbol name (see README for the catalog)
    #[arg(long)]
    catalog: Option<String>,
    /// Singular points of the symbol in [0,1], comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    singularities: Vec<f64>,
    /// Dyadic truncation depth N
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Probe levels and compact-family depth K
    #[arg(long, default_value_t = 20)]
    levels: usize,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel centers in [0,1], comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    at: Vec<f64>,
    /// Samples per center for the plot CSV
    #[arg(long, default_value_t = 257)]
    grid: usize,
    /// Relative quadrature tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct IoArgs {
    /// Write the report to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for CSV plot data
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include wall-clock timings (makes reports non-reproducible)
    #[arg(long)]
    timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Denom(args) => cmd_denominator(args),
        Command::Kernel(args) => cmd_kernel(args),
    };
    match code {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn quad_config(tol: f64) -> Result<QuadConfig, String> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(format!("--tol must lie in (0, 1e-2], got {tol}"));
    }
    let mut cfg = QuadConfig::default().with_rel_tol(tol);
    if let Ok(v) = std::env::var("SOBMULT_MAX_SUBDIV") {
        cfg.max_panels = v
            .parse()
            .map_err(|_| format!("SOBMULT_MAX_SUBDIV must be a positive integer, got '{v}'"))?;
    }
    Ok(cfg)
}

struct ResolvedSymbol {
    function: DifferentiableFunction,
    echo: InputEcho,
    classify_cfg: ClassifyConfig,
    quad: QuadConfig,
}

fn resolve_symbol(args: &SymbolArgs) -> Result<ResolvedSymbol, String> {
    if args.depth < 4 {
        return Err(format!("--depth must be at least 4, got {}", args.depth));
    }
    let quad = quad_config(args.tol)?;
    let mut singularities = args.singularities.clone();
    for &s in &singularities {
        if !(0.0..=1.0).contains(&s) {
            return Err(format!("singular point {s} lies outside [0,1]"));
        }
    }
    let (expression, catalog_name) = match (&args.function, &args.catalog) {
        (Some(f), None) => (f.clone(), None),
        (None, Some(name)) => {
            let entry = catalog::resolve(name)
                .ok_or_else(|| format!("unknown catalog symbol '{name}'"))?;
            singularities.extend_from_slice(entry.singularities);
            (entry.expression.to_owned(), Some(entry.name.to_owned()))
        }
        (None, None) => return Err("one of --function or --catalog is required".into()),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    singularities.sort_by(f64::total_cmp);
    singularities.dedup();
    let expr = sobmult::parse(&expression).map_err(|e| format!("cannot parse '{expression}': {e}"))?;
    let function = DifferentiableFunction::from_expr(&expr, &expression, singularities.clone());
    let membership = MembershipConfig {
        quad: quad.clone(),
        probe_levels: args.levels,
        ..MembershipConfig::default()
    };
    let classify_cfg = ClassifyConfig { membership, levels: args.levels, ..ClassifyConfig::default() };
    Ok(ResolvedSymbol {
        function,
        echo: InputEcho {
            function: expression,
            catalog: catalog_name,
            singularities,
            depth: args.depth,
            tol: args.tol,
            levels: args.levels,
        },
        classify_cfg,
        quad,
    })
}

fn tolerances(quad: &QuadConfig, classify: &ClassifyConfig) -> Tolerances {
    Tolerances {
        quadrature_rel_tol: quad.rel_tol,
        max_panels: quad.max_panels,
        probe_ratio_threshold: classify.membership.ratio_threshold,
        endpoint_tol: classify.membership.endpoint_tol,
        majorant_slack: sobmult::denom::MAJORANT_SLACK,
    }
}

fn emit(report: &Report, io: &IoArgs) -> Result<(), String> {
    let rendered = report.render(io.format);
    match &io.output {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn write_plot(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn probe_csv(classification: &Classification) -> String {
    let mut out = String::from("space,point,direction,level,ln_increment\r\n");
    for (space, verdict) in
        [("w0", &classification.w0), ("full", &classification.full)]
    {
        for ev in &verdict.evidence {
            if let Evidence::Probe(p) = ev {
                for (i, inc) in p.increments.iter().enumerate() {
                    out.push_str(&format!(
                        "{space},{},{:?},{},{}\r\n",
                        p.point,
                        p.direction,
                        p.skipped_levels + i + 1,
                        inc.ln()
                    ));
                }
            }
        }
    }
    out
}

fn classify_exit(classification: &Classification) -> ExitCode {
    let inconclusive = classification.w0.densely_defined == Decision::Inconclusive
        || classification.full.densely_defined == Decision::Inconclusive;
    if inconclusive {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_classify(args: SymbolArgs) -> Result<ExitCode, String> {
    let start = Instant::now();
    let sym = resolve_symbol(&args)?;
    let w0 = classify_w0(&sym.function, &sym.classify_cfg);
    let full = classify_full(&sym.function, &sym.classify_cfg);
    let boundedness = if w0.densely_defined == Decision::Yes {
        Some(boundedness_probe(&sym.function, &sym.classify_cfg))
    } else {
        None
    };
    let classification = Classification { w0, full };
    if let Some(dir) = &args.io.plot_data {
        write_plot(dir, "probes.csv", &probe_csv(&classification))?;
    }
    let exit = classify_exit(&classification);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "classify",
        input: sym.echo,
        tolerances: tolerances(&sym.quad, &sym.classify_cfg),
        classification: Some(classification),
        boundedness,
        denominator: None,
        refusal: None,
        kernel: None,
        timings: args.io.timings.then(|| Timings {
            total_ms: start.elapsed().as_millis(),
            classify_ms: Some(start.elapsed().as_millis()),
            denominator_ms: None,
        }),
    };
    emit(&report, &args.io)?;
    Ok(exit)
}

/// 4096 sample points, geometrically dense toward both endpoints where all
/// the interesting behaviour lives.
fn log_dense_grid(depth: usize) -> Vec<f64> {
    let n = 4096;
    let half = n / 2;
    let ln_span = -(depth as f64) * std::f64::consts::LN_2;
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let x = if i == 0 {
            0.0
        } else if i == n - 1 {
            1.0
        } else if i < half {
            0.5 * (ln_span * (half - i) as f64 / (half - 1) as f64).exp()
        } else {
            1.0 - 0.5 * (ln_span * (i - half + 1) as f64 / (half - 1) as f64).exp()
        };
        xs.push(x);
    }
    xs
}

fn samples_csv(result: &DenominatorResult, depth: usize) -> String {
    let mut out = String::from("x,d,phi_d\r\n");
    for x in log_dense_grid(depth) {
        let d = RealFunction::ln_value(&result.d, x).map(|v| v.to_f64());
        let pd = RealFunction::ln_value(&result.phi_d, x).map(|v| v.to_f64());
        let fmt = |r: Result<f64, _>| match r {
            Ok(v) => format!("{v}"),
            Err(_) => "NaN".to_owned(),
        };
        out.push_str(&format!("{x},{},{}\r\n", fmt(d), fmt(pd)));
    }
    out
}

fn cmd_denominator(args: SymbolArgs) -> Result<ExitCode, String> {
    let start = Instant::now();
    let sym = resolve_symbol(&args)?;
    let w0 = classify_w0(&sym.function, &sym.classify_cfg);
    let full = classify_full(&sym.function, &sym.classify_cfg);
    let classify_ms = start.elapsed().as_millis();
    let w0_verdict = w0.densely_defined;
    let classification = Classification { w0, full };

    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "denom",
        input: sym.echo,
        tolerances: tolerances(&sym.quad, &sym.classify_cfg),
        classification: Some(classification),
        boundedness: None,
        denominator: None,
        refusal: None,
        kernel: None,
        timings: None,
    };

    match w0_verdict {
        Decision::Yes => {}
        Decision::Inconclusive => {
            report.refusal = Some("classification on W_0 is inconclusive".into());
            emit(&report, &args.io)?;
            return Ok(ExitCode::from(1));
        }
        Decision::No => {
            report.refusal =
                Some("symbol is not a densely defined multiplier on W_0".into());
            emit(&report, &args.io)?;
            return Ok(ExitCode::from(3));
        }
    }

    let denom_cfg = DenomConfig {
        depth: args.depth,
        quad: sym.quad.clone(),
        classify: sym.classify_cfg.clone(),
        ..DenomConfig::default()
    };
    let denom_start = Instant::now();
    match build_denominator(&sym.function, &denom_cfg) {
        Ok(result) => {
            if let Some(dir) = &args.io.plot_data {
                write_plot(dir, "denominator_nodes.csv", &result.d.piecewise().to_csv())?;
                write_plot(dir, "samples.csv", &samples_csv(&result, args.depth))?;
                if let Some(left) = &result.left {
                    write_plot(dir, "profile_left.csv", &left.profile.to_csv())?;
                }
                if let Some(right) = &result.right {
                    write_plot(dir, "profile_right.csv", &right.profile.to_csv())?;
                }
            }
            report.timings = args.io.timings.then(|| Timings {
                total_ms: start.elapsed().as_millis(),
                classify_ms: Some(classify_ms),
                denominator_ms: Some(denom_start.elapsed().as_millis()),
            });
            report.denominator = Some(result);
            emit(&report, &args.io)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ (DenomError::Refused(_) | DenomError::EmptyProfile)) => {
            report.refusal = Some(e.to_string());
            emit(&report, &args.io)?;
            Ok(ExitCode::from(3))
        }
        Err(e) => {
            report.refusal = Some(e.to_string());
            emit(&report, &args.io)?;
            Ok(ExitCode::from(3))
        }
    }
}

fn kernel_test_family() -> Vec<(String, DifferentiableFunction)> {
    vec![
        ("1".into(), DifferentiableFunction::constant(1.0)),
        (
            "x".into(),
            DifferentiableFunction::from_expr(&sobmult::parse("x").unwrap(), "x", vec![]),
        ),
        (
            "x^2".into(),
            DifferentiableFunction::from_expr(&sobmult::parse("x^2").unwrap(), "x^2", vec![]),
        ),
        ("cosh".into(), DifferentiableFunction::from_closures("cosh", f64::cosh, f64::sinh)),
    ]
}

fn cmd_kernel(args: KernelArgs) -> Result<ExitCode, String> {
    let start = Instant::now();
    let quad = quad_config(args.tol)?;
    if args.grid < 2 {
        return Err("--grid must be at least 2".into());
    }
    for &x in &args.at {
        if !(0.0..=1.0).contains(&x) {
            return Err(format!("kernel center {x} lies outside [0,1]"));
        }
    }
    let family = kernel_test_family();
    let mut residuals = Vec::new();
    let mut max_symmetry = 0.0_f64;
    let mut csv = String::from("record,x,param,value\r\n");
    for &x in &args.at {
        let k = kernel_function(x);
        for j in 0..args.grid {
            let y = j as f64 / (args.grid - 1) as f64;
            csv.push_str(&format!("sample,{x},{y},{}\r\n", kernel_value(x, y)));
            let sym_res = kernel_value(x, y) - kernel_value(y, x);
            max_symmetry = max_symmetry.max(sym_res.abs());
            csv.push_str(&format!("symmetry,{x},{y},{sym_res}\r\n"));
        }
        for (name, f) in &family {
            let ip = inner_product(f, &k, &quad)
                .map_err(|e| format!("reproducing-identity quadrature failed: {e}"))?;
            let fx = f.value(x).map_err(|e| e.to_string())?;
            let residual = (ip.value - fx).abs();
            residuals.push(KernelResidual { x, family: name.clone(), residual });
            csv.push_str(&format!("residual,{x},{name},{residual}\r\n"));
        }
    }
    if let Some(dir) = &args.io.plot_data {
        write_plot(dir, "kernel.csv", &csv)?;
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "kernel",
        input: InputEcho {
            function: "kernel".into(),
            catalog: None,
            singularities: Vec::new(),
            depth: 0,
            tol: args.tol,
            levels: 0,
        },
        tolerances: Tolerances {
            quadrature_rel_tol: quad.rel_tol,
            max_panels: quad.max_panels,
            probe_ratio_threshold: 0.9,
            endpoint_tol: 1e-9,
            majorant_slack: sobmult::denom::MAJORANT_SLACK,
        },
        classification: None,
        boundedness: None,
        denominator: None,
        refusal: None,
        kernel: Some(KernelSection { points: args.at.clone(), residuals, max_symmetry_residual: max_symmetry }),
        timings: args.io.timings.then(|| Timings {
            total_ms: start.elapsed().as_millis(),
            classify_ms: None,
            denominator_ms: None,
        }),
    };
    emit(&report, &args.io)?;
    Ok(ExitCode::SUCCESS)
}
