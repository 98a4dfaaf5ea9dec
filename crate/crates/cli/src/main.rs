mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cmif::chain_file::{parse_chain_file, serialize_chain_file, ChainFile};
use cmif::document::{load_function, FunctionDocument};
use cmif::error::Error;
use cmif::function::{ClosedGraphViolation, GeneratedFn, SetValuedFn};
use cmif::inverse_limit::{approximate_with, parse_cloud_csv, transport_test, write_cloud_csv, DEFAULT_TRUNCATION};
use cmif::limits::one_sided_limit;
use cmif::markov::{verify_cmif_to_depth, DEFAULT_DEPTH};
use cmif::partition::{MarkovPartition, Membership, Point};
use cmif::pattern::{
    check_same_pattern, find_pattern_map, parse_pattern_map, serialize_pattern_map, PatternMap, DEFAULT_SHIFT_BOUND,
};
use cmif::render::{render_svg, RenderOptions};
use cmif::scalar::{fmt_rational, parse_rational, Rational, Side};
use cmif::set::ClosedSet1D;

use report::{RunReport, Status};

#[derive(Parser)]
#[command(name = "cmif", version, about = "Exact tools for countably Markov interval functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Up,
    Down,
}

#[derive(Subcommand)]
enum Command {
    /// Check the closed graph and, for generated functions, the Markov conditions.
    Validate {
        doc: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: i64,
    },
    /// One-sided set-valued limit at a point.
    Limits {
        doc: PathBuf,
        #[arg(long, value_parser = rational)]
        at: Rational,
        #[arg(long, value_enum)]
        side: SideArg,
    },
    /// Check a pattern map, or search for one.
    Pattern {
        doc_f: PathBuf,
        doc_g: PathBuf,
        #[arg(long)]
        tau: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SHIFT_BOUND)]
        shift_bound: i64,
        /// Write the pattern map that was checked or found.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify the chain h_1, ..., h_{m+1}.
    Conjugate {
        doc_f: PathBuf,
        doc_g: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        tau: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-depth point cloud of the inverse limit, as CSV.
    Approx {
        #[arg(required = true)]
        docs: Vec<PathBuf>,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_parser = rational)]
        resolution: Rational,
        #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
        truncation: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Push a cloud through a chain and check membership in the target limit.
    Transport {
        chain: PathBuf,
        cloud: PathBuf,
        #[arg(required = true)]
        docs_g: Vec<PathBuf>,
    },
    /// Draw the graph as SVG.
    Render {
        doc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        width: u32,
        #[arg(long, default_value_t = 400)]
        height: u32,
        #[arg(long, default_value_t = 8)]
        truncation: i64,
    },
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// Errors that make the input unusable (exit 2).
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<RunReport, InputError>;

struct Inputs(Vec<Vec<u8>>);

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<String, InputError> {
        let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| InputError(format!("{}: not UTF-8", path.display())))?;
        self.0.push(bytes);
        Ok(text)
    }

    fn function(&mut self, path: &Path) -> Result<(FunctionDocument, SetValuedFn), InputError> {
        let text = self.read(path)?;
        load_function(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
    }

    fn generated(&mut self, path: &Path) -> Result<(FunctionDocument, GeneratedFn), InputError> {
        match self.function(path)? {
            (d, SetValuedFn::Generated(g)) => Ok((d, g)),
            _ => Err(InputError(format!("{}: a generated function is required", path.display()))),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn set_json(s: &ClosedSet1D) -> Value {
    json!({
        "text": s.to_string(),
        "components": s.components().iter().map(|(a, b)| [fmt_rational(a), fmt_rational(b)]).collect::<Vec<_>>(),
    })
}

fn violation_json(v: &Option<ClosedGraphViolation>) -> Value {
    match v {
        None => Value::Null,
        Some(v) => json!({
            "x": fmt_rational(&v.x),
            "side": v.side.name(),
            "limit": set_json(&v.limit),
            "value": set_json(&v.value),
            "witness": [fmt_rational(&v.witness.0), fmt_rational(&v.witness.1)],
        }),
    }
}

fn name_in(p: &MarkovPartition, v: &Rational) -> Option<String> {
    match p.is_point_of(v) {
        Membership::Explicit(i) => Some(p.display_point(Point::Explicit(i))),
        Membership::Member(f, n) => Some(p.display_point(Point::Member(f, n))),
        Membership::NotInA => None,
    }
}

fn validate(doc: &Path, depth: i64) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let (_, f) = inputs.function(doc)?;
    let (status, results) = match &f {
        SetValuedFn::Generated(g) => {
            let r = verify_cmif_to_depth(g, depth);
            let conditions: Vec<Value> = r
                .conditions
                .iter()
                .map(|c| json!({"condition": c.condition, "passed": c.passed(), "witness": c.witness.as_ref().map(|w| w.to_string())}))
                .collect();
            let results = json!({
                "kind": "generated",
                "depth": depth,
                "closed_graph": violation_json(&r.usc),
                "conditions": conditions,
                "derived_set": r.derived_set.iter().map(fmt_rational).collect::<Vec<_>>(),
            });
            (if r.passed() { Status::Pass } else { Status::Fail }, results)
        }
        SetValuedFn::Finite(_) => {
            let usc = f.closed_graph_check(depth)?;
            let surj = f.surjective_graph_check();
            let results = json!({
                "kind": "finite-graph",
                "closed_graph": violation_json(&usc),
                "uncovered": surj.map(|p| p.to_string()),
            });
            (if usc.is_none() { Status::Pass } else { Status::Fail }, results)
        }
    };
    Ok(RunReport::new("validate", &inputs.0, status, results))
}

fn limits(doc: &Path, at: &Rational, side: SideArg) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let (_, f) = inputs.function(doc)?;
    let side = match side {
        SideArg::Up => Side::Up,
        SideArg::Down => Side::Down,
    };
    let lim = one_sided_limit(&f, at, side)?;
    let named: Value = match &f {
        SetValuedFn::Generated(g) => lim
            .components()
            .iter()
            .map(|(a, b)| json!([name_in(g.partition(), a), name_in(g.partition(), b)]))
            .collect(),
        SetValuedFn::Finite(_) => Value::Null,
    };
    let results = json!({"at": fmt_rational(at), "side": side.name(), "limit": set_json(&lim), "named": named});
    Ok(RunReport::new("limits", &inputs.0, Status::Pass, results))
}

fn markov_pair(f: &GeneratedFn, g: &GeneratedFn) -> Option<String> {
    for (which, h) in [("f", f), ("g", g)] {
        if !verify_cmif_to_depth(h, DEFAULT_DEPTH).passed() {
            return Some(format!("{which} is not countably Markov"));
        }
    }
    None
}

fn load_tau(inputs: &mut Inputs, path: &Path, f: &GeneratedFn, g: &GeneratedFn) -> Result<PatternMap, InputError> {
    let text = inputs.read(path)?;
    let file = parse_pattern_map(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    PatternMap::from_file(&file, f.partition_arc().clone(), g.partition_arc().clone())
        .map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn tau_json(tau: &PatternMap) -> Value {
    json!({
        "map": tau.to_string(),
        "identity": tau.source() == tau.target() && *tau == PatternMap::identity(tau.source_arc().clone()),
        "file": serde_json::to_value(tau.to_file()).expect("pattern files serialize"),
    })
}

fn pattern(doc_f: &Path, doc_g: &Path, tau: Option<&Path>, bound: i64, out: Option<&Path>) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let (_, f) = inputs.generated(doc_f)?;
    let (_, g) = inputs.generated(doc_g)?;
    if let Some(reason) = markov_pair(&f, &g) {
        return Ok(RunReport::new("pattern", &inputs.0, Status::Fail, json!({"reason": reason})));
    }
    let (status, results, found) = match tau {
        Some(path) => {
            let t = load_tau(&mut inputs, path, &f, &g)?;
            match check_same_pattern(&f, &g, &t) {
                None => (Status::Pass, json!({"mode": "check", "tau": tau_json(&t)}), Some(t)),
                Some(v) => (
                    Status::Fail,
                    json!({"mode": "check", "violation": {"point": v.point, "condition": v.condition, "detail": v.detail}}),
                    None,
                ),
            }
        }
        None => match find_pattern_map(&f, &g, bound) {
            Some(t) => (Status::Found, json!({"mode": "search", "shift_bound": bound, "tau": tau_json(&t)}), Some(t)),
            None => (Status::None, json!({"mode": "search", "shift_bound": bound, "tau": null}), None),
        },
    };
    if let (Some(path), Some(t)) = (out, &found) {
        write(path, &serialize_pattern_map(&t.to_file()))?;
    }
    Ok(RunReport::new("pattern", &inputs.0, status, results))
}

fn conjugate(doc_f: &Path, doc_g: &Path, depth: usize, tau: Option<&Path>, out: Option<&Path>) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let (df, f) = inputs.generated(doc_f)?;
    let (dg, g) = inputs.generated(doc_g)?;
    let t = match tau {
        Some(path) => load_tau(&mut inputs, path, &f, &g)?,
        None => match find_pattern_map(&f, &g, DEFAULT_SHIFT_BOUND) {
            Some(t) => t,
            None => {
                let results = json!({"reason": "no pattern map found"});
                return Ok(RunReport::new("conjugate", &inputs.0, Status::Fail, results));
            }
        },
    };
    match ChainFile::create(df, dg, &t, depth) {
        Ok((file, chain)) => {
            if let Some(path) = out {
                write(path, &serialize_chain_file(&file))?;
            }
            let results = json!({
                "tau": t.to_string(),
                "maps": chain.len(),
                "squares_verified": depth,
                "verify_depth": file.summary.verify_depth,
                "summary": serde_json::to_value(&file.summary).expect("summaries serialize"),
            });
            Ok(RunReport::new("conjugate", &inputs.0, Status::Pass, results))
        }
        Err(Error::PatternMismatch(m)) => {
            Ok(RunReport::new("conjugate", &inputs.0, Status::Fail, json!({"reason": m})))
        }
        Err(e) => Err(e.into()),
    }
}

fn approx(docs: &[PathBuf], depth: usize, resolution: &Rational, truncation: i64, out: &Path) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let fs = docs.iter().map(|d| inputs.function(d).map(|(_, f)| f)).collect::<Result<Vec<_>, _>>()?;
    let cloud = approximate_with(&fs, depth, resolution, truncation)?;
    let csv = write_cloud_csv(&cloud)?;
    write(out, &csv)?;
    let results = json!({
        "depth": depth,
        "resolution": fmt_rational(resolution),
        "truncation": truncation,
        "tuples": cloud.len(),
        "csv_digest": report::digest(&[csv.into_bytes()]),
    });
    Ok(RunReport::new("approx", &inputs.0, Status::Pass, results))
}

fn transport(chain: &Path, cloud: &Path, docs_g: &[PathBuf]) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let chain_text = inputs.read(chain)?;
    let file = parse_chain_file(&chain_text).map_err(|e| InputError(format!("{}: {e}", chain.display())))?;
    let chain = file.load().map_err(|e| InputError(format!("{}: {e}", chain.display())))?;
    let cloud_text = inputs.read(cloud)?;
    let cloud = parse_cloud_csv(&cloud_text).map_err(|e| InputError(format!("{}: {e}", cloud.display())))?;
    let gs = docs_g.iter().map(|d| inputs.function(d).map(|(_, f)| f)).collect::<Result<Vec<_>, _>>()?;
    let (status, witness) = match transport_test(&chain, &cloud, &gs)? {
        None => (Status::Pass, Value::Null),
        Some(w) => (Status::Fail, json!(w.to_string())),
    };
    let results = json!({"depth": cloud.depth, "tuples": cloud.len(), "witness": witness});
    Ok(RunReport::new("transport", &inputs.0, status, results))
}

fn render(doc: &Path, out: &Path, options: RenderOptions) -> Outcome {
    let mut inputs = Inputs(Vec::new());
    let (_, f) = inputs.function(doc)?;
    let svg = render_svg(&f, &options);
    write(out, &svg)?;
    let results = json!({
        "lines": svg.matches("<line ").count(),
        "rects": svg.matches("<rect ").count(),
        "truncation": options.truncation,
    });
    Ok(RunReport::new("render", &inputs.0, Status::Pass, results))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { doc, depth } => validate(&doc, depth),
        Command::Limits { doc, at, side } => limits(&doc, &at, side),
        Command::Pattern { doc_f, doc_g, tau, shift_bound, out } => {
            pattern(&doc_f, &doc_g, tau.as_deref(), shift_bound, out.as_deref())
        }
        Command::Conjugate { doc_f, doc_g, depth, tau, out } => {
            conjugate(&doc_f, &doc_g, depth, tau.as_deref(), out.as_deref())
        }
        Command::Approx { docs, depth, resolution, truncation, out } => {
            approx(&docs, depth, &resolution, truncation, &out)
        }
        Command::Transport { chain, cloud, docs_g } => transport(&chain, &cloud, &docs_g),
        Command::Render { doc, out, width, height, truncation } => {
            render(&doc, &out, RenderOptions { width, height, truncation })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{}", report.to_json());
            ExitCode::from(report.exit_status)
        }
        Err(InputError(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

