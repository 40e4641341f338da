//! Command-line front door: norm computation, operator application,
//! verification suites, factorization runs, and report emission.
//!
//! Exit codes: 0 ok, 1 usage/input error, 2 mathematical divergence
//! (expected for trivial exponents), 3 certified-check failure.

use crate::bml::{self, BmlExponents, NormOutcome};
use crate::hardy;
use crate::lorentz::{mesh_lorentz_norm, LorentzExponents};
use crate::mesh::{Generator, MeshFunction, Region};
use crate::ops;
use crate::rat::{self, from_int};
use crate::report::{self, ExperimentConfig, Suite};
use crate::Error;
use clap::{Args, Parser, Subcommand};
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "bmllab", version, about = "Exact-norm laboratory for Bourgain-Morrey-Lorentz spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MeshArgs {
    /// Mesh parameters n,L,J (dimension, domain exponent, cell exponent).
    #[arg(long, value_name = "n,L,J", default_value = "1,2,4")]
    mesh: String,
}

impl MeshArgs {
    fn parse(&self) -> Result<(usize, i32, i32), Error> {
        let parts: Vec<&str> = self.mesh.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Input("--mesh expects n,L,J".into()));
        }
        let n = parts[0].trim().parse().map_err(|_| Error::Input("bad n".into()))?;
        let l = parts[1].trim().parse().map_err(|_| Error::Input("bad L".into()))?;
        let j = parts[2].trim().parse().map_err(|_| Error::Input("bad J".into()))?;
        Ok((n, l, j))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Bourgain-Morrey-Lorentz breakdown (and Lorentz norms).
    Norm {
        /// Load the function from a MeshFunction JSON file.
        #[arg(long)]
        file: Option<String>,
        /// Dyadic indicator spec, e.g. "j=0" or "j=1,m=3".
        #[arg(long)]
        indicator: Option<String>,
        /// Seeded random step function.
        #[arg(long)]
        random: Option<u64>,
        /// Exponents p,q,t,r ("inf" allowed for q and r).
        #[arg(long, value_name = "p,q,t,r")]
        exps: Option<String>,
        /// Compute only the Lorentz norm with these exponents p,q.
        #[arg(long, value_name = "p,q")]
        lorentz: Option<String>,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Apply an operator and emit the sampled output.
    Op {
        /// hilbert | maximal | sharp | fractional | commutator | truncated
        name: String,
        #[arg(long)]
        file: String,
        /// Fractional order for `fractional`.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Truncation radius for `truncated`.
        #[arg(long, default_value_t = 0.25)]
        zeta: f64,
        /// Grid offset for `maximal`, e.g. "0" or "1,2".
        #[arg(long, default_value = "0")]
        offset: String,
        /// Symbol function file for `commutator`.
        #[arg(long)]
        symbol: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a verification suite and emit the machine-readable report.
    Verify {
        /// lorentz | bml | operators | blocks | hardy | all
        suite: String,
        #[arg(long, default_value_t = 200)]
        corpus: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the weak Hardy factorization and emit the trace.
    Factorize {
        /// Side of the canonical atom cube (rational, e.g. "1" or "1/4").
        #[arg(long, default_value = "1")]
        side: String,
        /// Separation parameter M (must exceed 10); 0 searches 2^4..2^10.
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        /// Exponents p,q,t,r.
        #[arg(long, value_name = "p,q,t,r", default_value = "2,2,3,4")]
        exps: String,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-render a saved report as CSV/JSON, or emit parameter tables.
    Report {
        /// Saved verify-report JSON.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Emit the envelope-constant vs M table instead.
        #[arg(long)]
        envelope_table: bool,
        #[arg(long, value_name = "M,...", default_value = "16,64,256")]
        m_list: String,
        #[arg(long, value_name = "p,q,t,r", default_value = "2,2,3,4")]
        exps: String,
        #[arg(long)]
        out: Option<String>,
    },
}

fn parse_exp(s: &str) -> Result<f64, Error> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(f64::INFINITY);
    }
    t.parse().map_err(|_| Error::Input(format!("bad exponent '{t}'")))
}

fn parse_exps(s: &str) -> Result<BmlExponents, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Input("--exps expects p,q,t,r".into()));
    }
    BmlExponents::new(
        parse_exp(parts[0])?,
        parse_exp(parts[1])?,
        parse_exp(parts[2])?,
        parse_exp(parts[3])?,
    )
}

fn parse_indicator(spec: &str, n: usize) -> Result<Generator, Error> {
    let mut j = None;
    let mut m = vec![0i64; n];
    for part in spec.split(',') {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("bad indicator component '{part}'")))?;
        match key.trim() {
            "j" => j = Some(val.trim().parse().map_err(|_| Error::Input("bad j".into()))?),
            "m" => m[0] = val.trim().parse().map_err(|_| Error::Input("bad m".into()))?,
            "m2" => {
                if n < 2 {
                    return Err(Error::Input("m2 needs n = 2".into()));
                }
                m[1] = val.trim().parse().map_err(|_| Error::Input("bad m2".into()))?;
            }
            other => return Err(Error::Input(format!("unknown indicator key '{other}'"))),
        }
    }
    let j = j.ok_or_else(|| Error::Input("indicator needs j=<scale>".into()))?;
    Ok(Generator::DyadicIndicator { j, m })
}

fn load_function(path: &str) -> Result<MeshFunction, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(e.to_string()))?;
    MeshFunction::from_json(&text)
}

fn emit(out: &Option<String>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|e| Error::Input(e.to_string())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            // A closed pipe downstream is not an error worth reporting.
            let _ = writeln!(stdout, "{body}");
            Ok(())
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("BMLLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

pub fn run() -> i32 {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Norm { file, indicator, random, exps, lorentz, mesh, out } => {
            let (n, l, j) = mesh.parse()?;
            let f = if let Some(path) = &file {
                load_function(path)?
            } else if let Some(spec) = &indicator {
                MeshFunction::synthesize(n, l, j, &parse_indicator(spec, n)?)?
            } else if let Some(seed) = random {
                MeshFunction::synthesize(
                    n,
                    l,
                    j,
                    &Generator::RandomStep { seed, lo: -2.0, hi: 2.0 },
                )?
            } else {
                return Err(Error::Input("need --file, --indicator or --random".into()));
            };
            let mut body = serde_json::Map::new();
            if let Some(pq) = &lorentz {
                let parts: Vec<&str> = pq.split(',').collect();
                if parts.len() != 2 {
                    return Err(Error::Input("--lorentz expects p,q".into()));
                }
                let e = LorentzExponents::new(parse_exp(parts[0])?, parse_exp(parts[1])?)?;
                body.insert(
                    "lorentz_norm".into(),
                    serde_json::json!({"p": e.p, "q": e.q, "value": mesh_lorentz_norm(&f, e, None)}),
                );
            }
            if let Some(spec) = &exps {
                let e = parse_exps(spec)?;
                match bml::bml_norm(&f, &e) {
                    NormOutcome::Finite(b) => {
                        body.insert(
                            "bml_norm".into(),
                            serde_json::json!({
                                "p": e.p, "q": e.q, "t": e.t, "r": e.r,
                                "coarse_tail": b.coarse_tail,
                                "middle": b.middle,
                                "fine_tail": b.fine_tail,
                                "total": b.total,
                            }),
                        );
                    }
                    NormOutcome::Divergent => {
                        eprintln!("divergent by nontriviality: the space is trivial for these exponents");
                        return Ok(2);
                    }
                }
            }
            if body.is_empty() {
                return Err(Error::Input("need --exps and/or --lorentz".into()));
            }
            emit(&out, &serde_json::Value::Object(body).to_string())?;
            Ok(0)
        }
        Command::Op { name, file, alpha, zeta, offset, symbol, out } => {
            let f = load_function(&file)?;
            let offsets: Vec<u8> = offset
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Error::Input("bad offset".into())))
                .collect::<Result<_, Error>>()?;
            let body = match name.as_str() {
                "hilbert" => ops::hilbert_transform(&f)?.to_json(),
                "maximal" => {
                    let m = ops::maximal_dyadic(&f, &offsets);
                    ops::OperatorSample { values: m, kind: ops::SampleKind::ExactCellAverage }
                        .to_json()
                }
                "sharp" => {
                    let m = ops::sharp_maximal(&f);
                    ops::OperatorSample { values: m, kind: ops::SampleKind::ExactCellAverage }
                        .to_json()
                }
                "fractional" => match f.n() {
                    1 => ops::fractional_integral(&f, alpha)?.to_json(),
                    _ => ops::fractional_integral_2d(&f, alpha)?.to_json(),
                },
                "truncated" => ops::truncated_transform(&f, zeta)?.to_json(),
                "commutator" => {
                    let b = load_function(
                        symbol.as_deref().ok_or_else(|| Error::Input("commutator needs --symbol".into()))?,
                    )?;
                    ops::commutator(&b, &f)?.to_json()
                }
                other => return Err(Error::Input(format!("unknown operator '{other}'"))),
            };
            emit(&out, &body)?;
            Ok(0)
        }
        Command::Verify { suite, corpus, seed, mesh, format, out } => {
            let (n, l, j) = mesh.parse()?;
            let suite = Suite::from_str(&suite)?;
            let cfg = ExperimentConfig {
                seed,
                corpus_size: corpus,
                n,
                l_exp: l,
                j_exp: j,
                ..Default::default()
            };
            let reports = report::run_suite(suite, &cfg)?;
            let ok = reports.iter().all(|r| r.all_certified_pass());
            let body = match format.as_str() {
                "json" => serde_json::to_string_pretty(&reports).unwrap(),
                "csv" => reports.iter().map(|r| r.to_csv()).collect::<Vec<_>>().join("\n"),
                other => return Err(Error::Input(format!("unknown format '{other}'"))),
            };
            emit(&out, &body)?;
            for r in &reports {
                for rec in &r.records {
                    let tag = if rec.certified { "certified" } else { "empirical" };
                    eprintln!(
                        "{} {:<45} measured={:.6e} bound={:.6e} [{tag}]",
                        if rec.pass { "PASS" } else { "FAIL" },
                        rec.name,
                        rec.measured,
                        rec.bound
                    );
                }
            }
            Ok(if ok { 0 } else { 3 })
        }
        Command::Factorize { side, m, rounds, exps, mesh, out } => {
            let (n, l, j) = mesh.parse()?;
            if n != 1 {
                return Err(Error::DimensionUnsupported("factorize"));
            }
            if m != 0.0 && m <= 10.0 {
                return Err(Error::MTooSmall(m));
            }
            let e = parse_exps(&exps)?;
            let side = rat::parse_rat(&side).ok_or_else(|| Error::Input("bad --side".into()))?;
            let cube = Region::interval(from_int(0), side)?;
            let state = if m == 0.0 {
                let summary = report::run_factorization(&e, l, j, rounds)?;
                eprintln!("searched M = {}", summary.searched_m);
                summary.state
            } else {
                let l_need = hardy::step_required_l(&cube, m).max(l);
                let atom = hardy::canonical_atom(cube, l_need, j)?;
                hardy::factorize(vec![(1.0, atom)], &e, m, rounds)?
            };
            emit(&out, &state.to_json())?;
            eprintln!("round  residual_l1      certified_h1     defect");
            for (i, r) in state.rounds.iter().enumerate() {
                eprintln!(
                    "{:>5}  {:<15.9e}  {:<15.9e}  {:.3e}",
                    i + 1,
                    r.residual_l1,
                    r.certified_h1,
                    r.represent_defect
                );
            }
            Ok(0)
        }
        Command::Report { input, format, envelope_table, m_list, exps, out } => {
            if envelope_table {
                let e = parse_exps(&exps)?;
                let ms: Vec<f64> = m_list
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Input("bad M".into())))
                    .collect::<Result<_, Error>>()?;
                let mut csv = String::from("m,envelope_constant,product_cost,residual_bound_constant\n");
                for m in ms {
                    let cube = Region::interval(from_int(0), from_int(1))?;
                    let l_need = hardy::step_required_l(&cube, m).max(4);
                    let atom = hardy::canonical_atom(cube, l_need, 6)?;
                    let step = hardy::factorization_step(&atom, m, &e)?;
                    csv.push_str(&format!(
                        "{m},{:.12e},{:.12e},{:.12e}\n",
                        step.certificate.envelope_constant,
                        step.product_cost,
                        step.residual_bound_constant
                    ));
                }
                emit(&out, &csv)?;
                return Ok(0);
            }
            let path = input.ok_or_else(|| Error::Input("need --input or --envelope-table".into()))?;
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Input(e.to_string()))?;
            let reports: Vec<report::Report> =
                serde_json::from_str(&text).map_err(|e| Error::Input(e.to_string()))?;
            let body = match format.as_str() {
                "json" => serde_json::to_string_pretty(&reports).unwrap(),
                "csv" => reports.iter().map(|r| r.to_csv()).collect::<Vec<_>>().join("\n"),
                other => return Err(Error::Input(format!("unknown format '{other}'"))),
            };
            emit(&out, &body)?;
            Ok(0)
        }
    }
}
