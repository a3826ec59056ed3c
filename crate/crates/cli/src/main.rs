use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use zetahess::commands::{self, Output};
use zetahess::io::{self, parse_complex, parse_rational_matrix, parse_vector, Format, Manifest, Precision, Report};
use zetahess::operator::PerturbationDirection;
use zetahess::torus::{TorusPerturbation, TorusProblem};
use zetahess::{Error, Exec};

#[derive(Parser, Debug)]
#[command(name = "zetahess", version, about = "Hessians of spectral zeta functions: exact symbols and numerical checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Output format: text, latex (theorem2 only) or json
    #[arg(long, global = true, default_value = "text")]
    format: String,
    /// Write the main output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Write the run manifest here (otherwise it is embedded in json output or printed to stderr)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Cap on worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every loop on the calling thread
    #[arg(long, global = true)]
    sequential: bool,
    /// double or extended; defaults to $ZETAHESS_PRECISION, then double
    #[arg(long, global = true)]
    precision: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate and print the six second-order symbol patterns (a)–(f)
    Theorem2 {
        /// Compare each generated entry with the hand-encoded forms
        #[arg(long)]
        check: bool,
    },
    /// Evaluate the assembled symbol u_s(x, ξ) applied to h
    Us {
        /// Operator spec file, or laplacian / conformal / family:<c1> (needs --n)
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: Option<usize>,
        /// complex s as "re,im"
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        /// comma-separated covector
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        /// symmetric rational matrix, rows separated by ';' ("1,0;0,-1/2")
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        /// drop the trace part of h
        #[arg(long)]
        trace_free: bool,
    },
    /// Run a verification suite: identities, torus, split or all
    Verify {
        suite: String,
        /// also write the rows as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Hessian of the modified zeta function on a flat torus
    TorusHessian {
        #[command(flatten)]
        torus: TorusArgs,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    /// Small-time second variation of the heat trace against the symbol prediction
    HeatTrace {
        #[command(flatten)]
        torus: TorusArgs,
        /// comma-separated times
        #[arg(long, default_value = "1e-2,3e-3,1e-3")]
        t: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Separate the two asymptotic families of a (t, T) integral
    Split {
        /// tau, rational or exponential
        #[arg(long, default_value = "tau")]
        q: String,
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, default_value_t = 1)]
        k_max: usize,
        #[arg(long, default_value_t = 1)]
        l_max: usize,
        /// |ξ| values for the reconstruction check (comma-separated; empty skips it)
        #[arg(long, default_value = "")]
        xi: String,
    },
}

#[derive(Args, Debug)]
struct TorusArgs {
    /// Problem file (JSON); overrides the flags below
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// mode cutoff K
    #[arg(long = "cutoff", default_value_t = 64)]
    k: usize,
    /// cosine mode m (comma-separated, n entries); omit for a constant h
    #[arg(long, allow_hyphen_values = true)]
    mode: Option<String>,
    /// symmetric matrix e ("1,0;0,1"); defaults to the identity
    #[arg(long, allow_hyphen_values = true)]
    e: Option<String>,
    /// include the volume factor V
    #[arg(long)]
    v_factor: bool,
}

impl TorusArgs {
    fn problem(&self) -> zetahess::Result<(TorusProblem, TorusPerturbation, Value)> {
        if let Some(p) = &self.problem {
            let text = io::read_file(p)?;
            let (prob, h) = commands::load_torus_problem(&text)?;
            let cfg: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
            return Ok((prob, h, cfg));
        }
        let n = self.n;
        if n == 0 {
            return Err(Error::Invalid("n must be ≥ 1".into()));
        }
        let e = match &self.e {
            Some(txt) => {
                let rows: Vec<Vec<f64>> = txt.split(';').map(parse_vector).collect::<zetahess::Result<_>>()?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Parse(format!("e must be {n}×{n}")));
                }
                zetahess::torus::dmatrix(&rows)
            }
            None => zetahess::torus::dmatrix(&(0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect::<Vec<_>>()),
        };
        let h = match &self.mode {
            Some(m) => {
                let m: Vec<i64> = m.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| Error::Parse(format!("mode '{x}' is not an integer")))).collect::<zetahess::Result<_>>()?;
                if m.len() != n {
                    return Err(Error::Parse(format!("mode needs {n} entries")));
                }
                TorusPerturbation::CosMode { e, m }
            }
            None => TorusPerturbation::Constant { e },
        };
        let prob = TorusProblem::flat(n, self.k, self.v_factor);
        let cfg = json!({ "n": n, "K": self.k, "mode": self.mode, "e": self.e, "v_factor": self.v_factor });
        Ok((prob, h, cfg))
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Invalid(_) | Error::ZeroXi(_) | Error::Constraint(_) => 2,
        Error::Pole(_) => 3,
        _ => 1,
    }
}

fn emit(common: &Common, format: Format, manifest: &Manifest, out: &Output) -> zetahess::Result<()> {
    let man = serde_json::to_value(manifest).expect("manifest serializes");
    let body = match format {
        Format::Json => {
            let mut doc = out.json.clone();
            if let Value::Object(m) = &mut doc {
                m.insert("manifest".into(), man.clone());
            }
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        _ => out.text.clone(),
    };
    match &common.output {
        Some(p) => io::write_file(p, &body)?,
        None => print!("{body}"),
    }
    match &common.manifest {
        Some(p) => io::write_file(p, &(serde_json::to_string_pretty(&man).expect("json") + "\n"))?,
        None if format != Format::Json => eprintln!("manifest: {man}"),
        None => {}
    }
    Ok(())
}

fn run(cli: Cli) -> zetahess::Result<usize> {
    let common = &cli.common;
    let format: Format = common.format.parse()?;
    let precision = Precision::resolve(common.precision.as_deref())?;
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::Invalid("--threads must be ≥ 1".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    let exec = if common.sequential { Exec::Sequential } else { Exec::default() };
    if format == Format::Latex && !matches!(cli.cmd, Cmd::Theorem2 { .. }) {
        return Err(Error::Invalid("latex output is only available for theorem2".into()));
    }
    let manifest = |name: &str, cfg: Value, seeds: Vec<u64>| Manifest::new(name, cfg, seeds, common.threads, precision);

    match &cli.cmd {
        Cmd::Theorem2 { check } => {
            let out = commands::theorem2(format, *check)?;
            emit(common, format, &manifest("theorem2", json!({ "check": check, "format": format }), vec![]), &out)?;
            Ok(out.failures)
        }
        Cmd::Us { spec, n, s, xi, h, trace_free } => {
            let s_val = parse_complex(s)?;
            let xi_val = parse_vector(xi)?;
            let (op, warnings) = commands::load_spec(spec, *n)?;
            let hm = parse_rational_matrix(h)?;
            if xi_val.len() != op.n || hm.len() != op.n {
                return Err(Error::Invalid(format!("xi and h must have dimension n = {}", op.n)));
            }
            let dir = PerturbationDirection::new(hm, *trace_free)?;
            let out = commands::us(&op, s_val, &xi_val, &dir, warnings)?;
            let cfg = json!({ "spec": spec, "n": op.n, "s": s, "xi": xi, "h": h, "trace_free": trace_free });
            emit(common, format, &manifest("us", cfg, vec![]), &out)?;
            Ok(0)
        }
        Cmd::Verify { suite, csv } => {
            if suite.trim().is_empty() {
                return Err(Error::Invalid(format!("empty suite name; expected one of {}", zetahess::verify::SUITES.join(", "))));
            }
            let rows = commands::verify(suite, exec)?;
            let seeds = vec![zetahess::verify::LINEARIZATION_SEED];
            let report = Report::new(manifest("verify", json!({ "suite": suite }), seeds), suite, rows);
            if let Some(p) = csv {
                io::write_file(p, &io::report_csv(&report)?)?;
            }
            let out = Output { json: serde_json::to_value(&report).expect("report serializes"), text: report.to_text(), failures: report.failures };
            emit(common, format, &report.manifest, &out)?;
            Ok(report.failures)
        }
        Cmd::TorusHessian { torus, s } => {
            let (p, h, cfg) = torus.problem()?;
            let out = commands::torus_hessian(&p, &h, parse_complex(s)?, precision, exec)?;
            emit(common, format, &manifest("torus-hessian", json!({ "problem": cfg, "s": s }), vec![]), &out)?;
            Ok(0)
        }
        Cmd::HeatTrace { torus, t, csv } => {
            let (p, h, cfg) = torus.problem()?;
            let ts = parse_vector(t)?;
            let (out, rows) = commands::heat_trace(&p, &h, &ts, exec)?;
            if let Some(path) = csv {
                let mut buf = Vec::new();
                io::write_csv(&mut buf, &["t", "scaled_value", "prediction", "rel_deviation", "k_used"], &rows)?;
                io::write_file(path, &String::from_utf8(buf).expect("utf-8"))?;
            }
            emit(common, format, &manifest("heat-trace", json!({ "problem": cfg, "t": ts }), vec![]), &out)?;
            Ok(0)
        }
        Cmd::Split { q, n, s, k_max, l_max, xi } => {
            let xis = if xi.trim().is_empty() { vec![] } else { parse_vector(xi)? };
            let out = commands::split(q, *n, parse_complex(s)?, *k_max, *l_max, &xis)?;
            let cfg = json!({ "q": q, "n": n, "s": s, "k_max": k_max, "l_max": l_max, "xi": xis });
            emit(common, format, &manifest("split", cfg, vec![]), &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) => ExitCode::from(failures.min(255) as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
