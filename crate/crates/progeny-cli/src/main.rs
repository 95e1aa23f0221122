//! Command-line front end: mechanism evaluation, exhaustive audits, forest
//! enumeration, family construction, the worked examples, and the two
//! demonstrations.
//!
//! Exit codes: 0 pass, 1 audit violation or failed demonstration, 2 usage
//! or parse error, 3 numeric failure.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use progeny::canonical::canonical_form;
use progeny::enumerate;
use progeny::error::Error;
use progeny::family;
use progeny::format::{emit_forest_json, emit_forest_text, parse_forest};
use progeny::mechanism::{evaluate, fmt_f64, GeneratorTable, MechanismSpec};
use progeny::verify::{
    self, audit_fairness_forests, audit_ic_forests, audit_mass_forests,
    audit_quality_forests, quality_of, AuditReport, AuditSelect, MassMode,
};
use progeny::Forest;

#[derive(Parser)]
#[command(
    name = "progeny",
    version,
    about = "Incentive-compatible selection mechanisms on directed forests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, PartialEq, ValueEnum)]
enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MassModeArg {
    Exact,
    Subdistribution,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a mechanism on a forest (file or `-` for stdin)
    Eval {
        /// mf | mb | meps:<eps> | fg:<table.json> | mprime | uniform | empty | sym:<inner>
        mechanism: String,
        /// Forest file in text or JSON format; `-` reads stdin
        forest: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run audits over all labeled forests up to a size (or one forest)
    Audit {
        mechanism: String,
        /// Largest vertex count to enumerate (default 6; 5 for sym:*)
        #[arg(long)]
        max_n: Option<usize>,
        /// Comma-separated subset of ic,mass,quality,fairness
        #[arg(long, default_value = "ic,mass")]
        checks: String,
        /// Per-forest quality lower bound (required with the quality check)
        #[arg(long)]
        bound: Option<f64>,
        /// Mass discipline (default: exact for mb and fg:, else subdistribution)
        #[arg(long, value_enum)]
        mass_mode: Option<MassModeArg>,
        /// Audit this forest file instead of enumerating
        #[arg(long)]
        forest: Option<String>,
        /// Worker threads for the sweep
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Stream every labeled forest on n vertices (JSON lines)
    Enumerate {
        n: usize,
        /// Print only the count
        #[arg(long)]
        count_only: bool,
        /// Collapse isomorphic forests (canonical-code dedup)
        #[arg(long)]
        dedup: bool,
    },
    /// Build a named forest family and emit it
    Family {
        /// star:K | star-path:S1,S2,... | overpay:A,B | upper-pair:N
        spec: String,
        /// Isolated vertices appended to star-path/overpay
        #[arg(long, default_value_t = 0)]
        extras: usize,
        /// Join the upper-pair centers
        #[arg(long)]
        connected: bool,
        /// Write here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
        /// Emit the line-based text format instead of JSON
        #[arg(long)]
        text: bool,
    },
    /// Recompute the worked examples against their closed forms
    Examples {
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Demonstrations
    Demo {
        #[command(subcommand)]
        demo: DemoCommand,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Quality of the two-star pair never beats 4/5
    UpperBound {
        mechanism: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Residual-splitting mechanisms over-distribute on the four-star chain
    Impossibility {
        /// 1 | p | p^2 | 2^p | fg:<table.json>
        #[arg(long, default_value = "2^p")]
        generator: String,
        #[arg(long, default_value_t = 10)]
        a: usize,
        #[arg(long, default_value_t = 20)]
        b: usize,
        #[arg(long, default_value_t = 2)]
        extras: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::NumericalOverflow { .. }
                | Error::ZeroDenominator { .. }
                | Error::DegenerateInterval { .. } => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_mechanism(s: &str) -> Result<MechanismSpec, Error> {
    MechanismSpec::parse(s, &GeneratorTable::from_json_file)
}

fn read_forest(path: &str) -> Result<Forest, Error> {
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(path)?
    };
    parse_forest(&text)
}

fn enumeration_cap() -> usize {
    std::env::var("PROGENY_MAX_N")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(enumerate::DEFAULT_CAP)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Eval { mechanism, forest, format } => cmd_eval(&mechanism, &forest, format),
        audit @ Command::Audit { .. } => cmd_audit(audit),
        Command::Enumerate { n, count_only, dedup } => cmd_enumerate(n, count_only, dedup),
        Command::Family { spec, extras, connected, output, text } => {
            cmd_family(&spec, extras, connected, output, text)
        }
        Command::Examples { format } => cmd_examples(format),
        Command::Demo { demo } => match demo {
            DemoCommand::UpperBound { mechanism, n, format } => {
                cmd_demo_upper_bound(&mechanism, n, format)
            }
            DemoCommand::Impossibility { generator, a, b, extras, format } => {
                cmd_demo_impossibility(&generator, a, b, extras, format)
            }
        },
    }
}

fn cmd_eval(mechanism: &str, forest: &str, format: Format) -> Result<ExitCode, Error> {
    let spec = parse_mechanism(mechanism)?;
    let f = read_forest(forest)?;
    let dist = evaluate(&spec, &f)?;
    let q = quality_of(&dist, &f);
    match format {
        Format::Json => {
            println!(
                "{{\"mechanism\":\"{spec}\",\"distribution\":{},\"quality\":{{\"expected_progeny\":{},\"pstar\":{},\"q\":{}}}}}",
                dist.to_json(),
                fmt_f64(q.expected_progeny),
                q.pstar,
                fmt_f64(q.q),
            );
        }
        Format::Table => {
            let table = f.progeny_table();
            println!("{:>6} {:>8} {:>22}", "vertex", "progeny", "probability");
            for v in f.vertices() {
                println!("{v:>6} {:>8} {:>22.16}", table.progeny(v), dist.get(v));
            }
            println!(
                "total {:.16}  nonroot mass {:.16}  valid {}",
                dist.total(),
                dist.nonroot_mass(),
                dist.is_valid()
            );
            println!(
                "quality: expected progeny {:.12}, P* {}, q {:.12}",
                q.expected_progeny, q.pstar, q.q
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(cmd: Command) -> Result<ExitCode, Error> {
    let Command::Audit { mechanism, max_n, checks, bound, mass_mode, forest, jobs, format } =
        cmd
    else {
        unreachable!()
    };
    let spec = parse_mechanism(&mechanism)?;
    let default_n = if matches!(spec, MechanismSpec::Symmetrized(_)) { 5 } else { 6 };
    let n_max = max_n.unwrap_or(default_n);
    let cap = enumeration_cap();
    let mass = mass_mode.map(|m| match m {
        MassModeArg::Exact => MassMode::Exact,
        MassModeArg::Subdistribution => MassMode::Subdistribution,
    });
    let default_mass = match spec {
        MechanismSpec::Exact | MechanismSpec::FunctionGenerated(_) => MassMode::Exact,
        _ => MassMode::Subdistribution,
    };
    let mut selected = Vec::new();
    for check in checks.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        selected.push(match check {
            "ic" => AuditSelect::Ic,
            "mass" => AuditSelect::Mass(mass.unwrap_or(default_mass)),
            "quality" => AuditSelect::Quality(bound.ok_or_else(|| {
                Error::InvalidSpec("the quality check needs --bound".into())
            })?),
            "fairness" => AuditSelect::Fairness,
            other => {
                return Err(Error::InvalidSpec(format!("unknown check `{other}`")));
            }
        });
    }
    if selected.is_empty() {
        return Err(Error::InvalidSpec("no checks selected".into()));
    }

    let reports: Vec<AuditReport> = match forest {
        Some(path) => {
            let single = [read_forest(&path)?];
            selected
                .iter()
                .map(|check| match *check {
                    AuditSelect::Ic => audit_ic_forests(&spec, &single, jobs),
                    AuditSelect::Mass(mode) => {
                        audit_mass_forests(&spec, &single, mode, jobs)
                    }
                    AuditSelect::Quality(b) => {
                        audit_quality_forests(&spec, &single, b, jobs)
                    }
                    AuditSelect::Fairness => audit_fairness_forests(&spec, &single, jobs),
                })
                .collect::<Result<_, _>>()?
        }
        None => verify::sweep(std::slice::from_ref(&spec), &selected, n_max, cap, jobs)?,
    };

    let all_passed = reports.iter().all(AuditReport::passed);
    match format {
        Format::Json => {
            let body: Vec<String> = reports.iter().map(AuditReport::to_json).collect();
            println!("[{}]", body.join(","));
        }
        Format::Table => {
            for report in &reports {
                print!("{}", report.to_table());
            }
        }
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_enumerate(n: usize, count_only: bool, dedup: bool) -> Result<ExitCode, Error> {
    let stream = enumerate::forests_with_cap(n, enumeration_cap())?;
    if dedup {
        let mut seen = std::collections::HashSet::new();
        let mut kept = 0usize;
        for f in stream {
            if seen.insert(canonical_form(&f).code().to_string()) {
                kept += 1;
                if !count_only {
                    println!("{}", emit_forest_json(&f));
                }
            }
        }
        if count_only {
            println!("{kept}");
        }
    } else if count_only {
        println!("{}", enumerate::count(n));
    } else {
        for f in stream {
            println!("{}", emit_forest_json(&f));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_family(
    spec: &str,
    extras: usize,
    connected: bool,
    output: Option<PathBuf>,
    text: bool,
) -> Result<ExitCode, Error> {
    let family_spec = family::parse(spec, extras, connected)?;
    let f = family::build(&family_spec)?;
    let body = if text { emit_forest_text(&f) } else { format!("{}\n", emit_forest_json(&f)) };
    match output {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_examples(format: Format) -> Result<ExitCode, Error> {
    let report = verify::worked_examples()?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string(&report).expect("report serialization cannot fail")
        ),
        Format::Table => {
            println!(
                "{:<18} {:<8} {:<10} {:>22} {:>22} {:>12}",
                "forest", "mech", "subject", "computed", "expected", "deviation"
            );
            for row in &report.rows {
                println!(
                    "{:<18} {:<8} {:<10} {:>22.16} {:>22.16} {:>12.3e}",
                    row.forest,
                    row.mechanism,
                    row.subject,
                    row.computed,
                    row.expected,
                    (row.computed - row.expected).abs()
                );
            }
            println!(
                "max deviation {:.3e} -> {}",
                report.max_deviation,
                if report.passed() { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_demo_upper_bound(mechanism: &str, n: usize, format: Format) -> Result<ExitCode, Error> {
    let spec = parse_mechanism(mechanism)?;
    let report = verify::demo_upper_bound(&spec, n)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string(&report).expect("report serialization cannot fail")
        ),
        Format::Table => {
            println!(
                "two {}-star pair under {}: split q {:.9}, joined q {:.9}",
                n / 2,
                report.mechanism,
                report.q_disconnected,
                report.q_connected
            );
            println!(
                "min q {:.9} <= 4/5: {}",
                report.min_q,
                if report.within_bound { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(if report.within_bound { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn parse_generator(name: &str, n: usize) -> Result<GeneratorTable, Error> {
    match name {
        "1" => GeneratorTable::from_fn(n, |_| 1.0),
        "p" => GeneratorTable::from_fn(n, |k| k as f64),
        "p^2" => GeneratorTable::from_fn(n, |k| (k * k) as f64),
        "2^p" => GeneratorTable::from_fn(n, |k| (k as f64).exp2()),
        other => match other.strip_prefix("fg:") {
            Some(path) => GeneratorTable::from_json_file(path),
            None => Err(Error::InvalidSpec(format!(
                "unknown generator `{other}` (expected 1, p, p^2, 2^p or fg:<path>)"
            ))),
        },
    }
}

fn cmd_demo_impossibility(
    generator: &str,
    a: usize,
    b: usize,
    extras: usize,
    format: Format,
) -> Result<ExitCode, Error> {
    let n = 2 * a + 2 * b + extras;
    let table = parse_generator(generator, n)?;
    let report = verify::demo_overdistribution(&table, a, b, extras)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string(&report).expect("report serialization cannot fail")
        ),
        Format::Table => {
            println!(
                "four-star chain ({b}, {b}, {a}, {a}) plus {extras} isolated, n = {}",
                report.n
            );
            println!("k = f(b)/f(2a) = {:.6}, m = f(a+b)/f(2a) = {:.6}", report.k, report.m);
            for h in &report.hypotheses {
                println!(
                    "  hypothesis {:<18} observed {:>12.6e} vs {:>12.6e} -> {}",
                    h.label,
                    h.observed,
                    h.threshold,
                    if h.holds { "holds" } else { "FAILS" }
                );
            }
            println!("center probabilities (x1, x2, x3, x4):");
            for (label, values) in &report.center_values {
                println!(
                    "  {label:<20} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                    values[0], values[1], values[2], values[3]
                );
            }
            println!(
                "non-root mass {:.15}; top root residual share {:.15}",
                report.nonroot_mass, report.top_root_share
            );
            match report.over_distributes {
                Some(true) => println!(
                    "over-distribution confirmed: IC alone forces more than total probability 1"
                ),
                Some(false) => println!("no over-distribution at this configuration"),
                None => println!("hypotheses unmet; no verdict"),
            }
        }
    }
    Ok(match report.over_distributes {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}
