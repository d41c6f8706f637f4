use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bracket_core::continuous::Density as _;
use bracket_core::dsl::model::{Density, Domain, Model, ObservableKind, Region, Space};
use bracket_core::dsl::{self, Bindings};
use bracket_core::processes::sample_path;
use bracket_core::verify::verify_model;
use bracket_core::{format, Orientation, ProbVector};
use clap::{Parser, Subcommand};

/// Evaluate probability brackets and evolve Markov chains described in JSON model files.
#[derive(Debug, Parser)]
#[command(name = "bracket", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an expression such as `P(even|Omega)` or `E[X*Y]`.
    Eval {
        model: PathBuf,
        expr: String,
        /// Bind a numeric name usable in observable expressions, as NAME=VALUE.
        #[arg(long = "bind", value_parser = parse_binding)]
        bindings: Vec<(String, f64)>,
    },
    /// Print a chain's distribution after some steps or some time.
    Evolve {
        model: PathBuf,
        #[arg(long)]
        chain: String,
        /// Number of steps for a discrete-time chain.
        #[arg(long, conflicts_with = "time")]
        steps: Option<u64>,
        /// Elapsed time for a continuous-time chain.
        #[arg(long)]
        time: Option<f64>,
        /// Start from this state instead of the declared initial distribution.
        #[arg(long)]
        from: Option<String>,
    },
    /// Print a chain's stationary distribution.
    Stationary {
        model: PathBuf,
        #[arg(long)]
        chain: String,
    },
    /// Sample one path of a process and print it as CSV.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        process: String,
        /// `start:stop:step` or a comma-separated list of times.
        #[arg(long)]
        times: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every applicable invariant check on a model.
    Verify { model: PathBuf },
    /// List a model's declarations.
    Info { model: PathBuf },
}

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn parse_times(spec: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{}` is not a number", s.trim()))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || !(b >= a) {
                return Err(format!("bad time range `{spec}`"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            if n > 10_000_000 {
                return Err(format!("time range `{spec}` has too many points"));
            }
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [_] => spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect(),
        _ => Err(format!("bad time specification `{spec}`")),
    }
}

/// A failure to report: the message and the exit status.
struct Failure(String, u8);

impl From<bracket_core::Error> for Failure {
    fn from(e: bracket_core::Error) -> Self {
        Failure(e.to_string(), 1)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(e.to_string(), 1)
    }
}

fn user(msg: impl Into<String>) -> Failure {
    Failure(msg.into(), 1)
}

fn load(path: &PathBuf) -> Result<Model, Failure> {
    if !path.exists() {
        return Err(user(format!("{}: file not found", path.display())));
    }
    Ok(Model::load(path)?)
}

fn print_vector(out: &mut impl Write, p: &ProbVector) -> io::Result<()> {
    for (s, w) in p.states().iter().zip(p.weights()) {
        writeln!(out, "{s}\t{}", format::number(*w))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Eval { model, expr, bindings } => {
            let m = load(&model)?;
            let e = dsl::parse(&expr)?;
            let b: Bindings = bindings.into_iter().collect();
            let v = dsl::evaluate_with(&e, &m, &b)?;
            writeln!(out, "{}", format::number(v))?;
        }
        Command::Evolve {
            model,
            chain,
            steps,
            time,
            from,
        } => {
            let m = load(&model)?;
            match m.domain(&chain) {
                Some(Domain::Chain) => {
                    let c = &m.chains[&chain];
                    let n = steps.ok_or_else(|| user(format!("`{chain}` is a discrete-time chain; use --steps")))?;
                    let u0 = match from {
                        Some(s) => ProbVector::one_hot(c.matrix.states(), &s, Orientation::Row)?,
                        None => c
                            .initial
                            .clone()
                            .ok_or_else(|| user(format!("chain `{chain}` has no initial distribution; use --from")))?,
                    };
                    print_vector(&mut out, &c.matrix.evolve_left(&u0, n)?)?;
                }
                Some(Domain::Generator) => {
                    let g = &m.generators[&chain];
                    let t = time.ok_or_else(|| user(format!("`{chain}` is a continuous-time chain; use --time")))?;
                    let p0 = match from {
                        Some(s) => ProbVector::one_hot(g.generator.states(), &s, Orientation::Column)?,
                        None => g
                            .initial
                            .clone()
                            .ok_or_else(|| user(format!("generator `{chain}` has no initial distribution; use --from")))?,
                    };
                    print_vector(&mut out, &g.generator.evolve_density(&p0, t)?)?;
                }
                _ => return Err(user(format!("no chain or generator named `{chain}`"))),
            }
        }
        Command::Stationary { model, chain } => {
            let m = load(&model)?;
            let pi = match m.domain(&chain) {
                Some(Domain::Chain) => m.chains[&chain].matrix.stationary()?.vector,
                Some(Domain::Generator) => m.generators[&chain].generator.stationary()?,
                _ => return Err(user(format!("no chain or generator named `{chain}`"))),
            };
            print_vector(&mut out, &pi)?;
        }
        Command::Simulate {
            model,
            process,
            times,
            seed,
        } => {
            let m = load(&model)?;
            let p = m
                .processes
                .get(&process)
                .ok_or_else(|| user(format!("no process named `{process}`")))?;
            let times = parse_times(&times).map_err(user)?;
            sample_path(p, &times, seed)?.write_csv(&mut out)?;
        }
        Command::Verify { model } => {
            let m = load(&model)?;
            let report = verify_model(&m);
            writeln!(out, "{report}")?;
            if !report.passed() {
                let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
                return Err(Failure(format!("failed invariants: {}", names.join("; ")), 2));
            }
        }
        Command::Info { model } => {
            let m = load(&model)?;
            info(&mut out, &m)?;
        }
    }
    Ok(())
}

fn info(out: &mut impl Write, m: &Model) -> io::Result<()> {
    for (name, s) in &m.spaces {
        match s {
            Space::Discrete(d) => writeln!(out, "space {name}: {} outcomes", d.len())?,
            Space::Product(p) => writeln!(
                out,
                "space {name}: product of {} factors, {} outcomes",
                p.factors().len(),
                p.joint().len()
            )?,
        }
    }
    for (name, c) in &m.chains {
        writeln!(
            out,
            "chain {name}: {} states [{}]{}",
            c.matrix.len(),
            c.matrix.states().join(", "),
            if c.initial.is_some() { ", initial distribution" } else { "" }
        )?;
    }
    for (name, g) in &m.generators {
        writeln!(
            out,
            "generator {name}: {} states{}",
            g.generator.len(),
            if g.initial.is_some() { ", initial distribution" } else { "" }
        )?;
    }
    for (name, d) in &m.densities {
        match d {
            Density::Line(d) => {
                let s = d.support();
                writeln!(out, "density {name}: {} on [{}, {}]", d.name(), s.lo, s.hi)?
            }
            Density::Plane(d) => writeln!(out, "density {name}: {} in the plane", d.name())?,
        }
    }
    for (name, p) in &m.processes {
        writeln!(out, "process {name}: {p:?}")?;
    }
    for (name, e) in &m.events {
        let what = match &e.region {
            Region::Set(s) => format!("{} outcomes", s.len()),
            Region::Interval(i) => format!("[{}, {}]", i.lo, i.hi),
            Region::Planar(_) => "planar region".into(),
        };
        writeln!(out, "event {name} on {}: {what}", e.space)?;
    }
    for (name, o) in &m.observables {
        let what = match o.kind {
            ObservableKind::Table(_) => "table".to_string(),
            ObservableKind::Coordinate(i) => format!("coordinate {i}"),
        };
        writeln!(out, "observable {name} on {}: {what}", o.space)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_specs() {
        assert_eq!(parse_times("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_times("0, 0.5,2").unwrap(), vec![0.0, 0.5, 2.0]);
        assert_eq!(parse_times("").unwrap(), Vec::<f64>::new());
        assert!(parse_times("1:0:0.1").is_err());
        assert!(parse_times("0:1").is_err());
        assert!(parse_times("a,b").is_err());
    }

    #[test]
    fn bindings() {
        assert_eq!(parse_binding("c=2.5").unwrap(), ("c".to_string(), 2.5));
        assert!(parse_binding("c").is_err());
    }
}
