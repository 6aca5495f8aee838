//! The `expost` command line. [`run`] parses arguments, calls the library and
//! returns the exit code together with the JSON document to print.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use expost_core::expost::{max_stable_decomposition_with_cap, DEFAULT_CAP};
use expost_core::formats::{self, decomposition_to_json, error_to_json, matching_to_json, matrix_to_json};
use expost_core::fractional::check_fractional_naive;
use expost_core::gen::{self, fixtures, ReductionVariant, TieModel, X3CInstance};
use expost_core::oracle;
use expost_core::randmatch::validate_random_matching;
use expost_core::robust::robust_witnesses;
use expost_core::strong::expost_strong_decompose_with_cap;
use expost_core::{
    birkhoff_decompose, check_fractional_stability, check_fractional_strong_stability, complete_instance,
    deferred_acceptance, find_consistent_stable, is_robust_expost_stable, is_strongly_stable, is_weakly_stable,
    validate_instance, Error, Instance, RandomMatching, TieBreak,
};
use serde_json::{json, Map, Value};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_FAILS: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// JSON document, or plain text for `--help` and `--version`.
    pub stdout: Value,
}

impl CommandOutcome {
    fn verdict(holds: bool, stdout: Value) -> Self {
        CommandOutcome { exit_code: if holds { EXIT_HOLDS } else { EXIT_FAILS }, stdout }
    }

    fn ok(stdout: Value) -> Self {
        CommandOutcome { exit_code: EXIT_HOLDS, stdout }
    }

    /// The text `main` prints.
    pub fn render(&self) -> String {
        match &self.stdout {
            Value::String(s) => s.clone(),
            v => serde_json::to_string_pretty(v).expect("serializable"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "expost", version, about = "Ex-post stability of random matchings")]
struct Cli {
    /// Output format; JSON is the only one.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an instance, and optionally a matrix against it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Reduce an instance (and a sub-stochastic matrix) to a complete one.
    Complete {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Blocking pairs of a deterministic matching.
    CheckStable {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        matching: PathBuf,
        #[arg(long)]
        strong: bool,
    },
    /// Agent-proposing deferred acceptance after seeded tie-breaking.
    Da {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        oracle: bool,
    },
    /// Birkhoff–von Neumann decomposition of a bistochastic matrix.
    Birkhoff {
        #[arg(long)]
        matrix: PathBuf,
        /// Names the agents and items and marks stable terms.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// The linear fractional stability conditions.
    Fractional {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        oracle: bool,
    },
    /// Maximum probability of drawing a weakly stable matching.
    Expost {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        search: Search,
    },
    /// Decomposition into strongly stable matchings.
    ExpostStrong {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        search: Search,
    },
    /// Whether every decomposition uses only weakly stable matchings.
    Robust {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        all_witnesses: bool,
        #[arg(long)]
        oracle: bool,
    },
    /// A weakly stable matching inside the support of the matrix.
    ConsistentStable {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        oracle: bool,
    },
    /// Fixtures and generated instances.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args, Debug)]
struct Input {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
}

#[derive(Args, Debug)]
struct Search {
    /// Largest number of stable matchings to enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Also write the decomposition to this file.
    #[arg(long)]
    emit_decomposition: Option<PathBuf>,
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct OutDir {
    /// Write every top-level field of the output to `<dir>/<field>.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// The four-agent school-choice example.
    Example1 {
        #[command(flatten)]
        out: OutDir,
    },
    /// A hardness reduction from exact cover by 3-sets.
    X3c {
        /// X3C file `{"elements": [...], "sets": [[e, e, e], ...]}`.
        #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
        x3c: Option<PathBuf>,
        #[arg(long, value_parser = ["x3c1", "x3c2-yes", "x3c2-no"])]
        fixture: Option<String>,
        #[arg(long, value_parser = parse_variant)]
        variant: ReductionVariant,
        #[command(flatten)]
        out: OutDir,
    },
    /// A seeded random instance.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_model, default_value = "strict")]
        model: TieModel,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// A random lottery over deferred-acceptance outcomes.
    Mixture {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Probabilistic serial (simultaneous eating).
    Ps {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
}

fn parse_variant(s: &str) -> Result<ReductionVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> Result<TieModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn outcome(&self) -> CommandOutcome {
        let (exit_code, stdout) = match self {
            Failure::Usage(m) => (EXIT_INPUT, json!({"error": {"kind": "usage", "message": m}})),
            Failure::Io(m) => (EXIT_INPUT, json!({"error": {"kind": "io", "message": m}})),
            Failure::Core(e @ Error::CapExceeded { .. }) => (EXIT_CAP, error_to_json(e)),
            Failure::Core(e) => (EXIT_INPUT, error_to_json(e)),
        };
        CommandOutcome { exit_code, stdout }
    }
}

type Outcome = Result<CommandOutcome, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, v: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Ok(formats::parse_instance(&read(path)?)?)
}

fn load_input(input: &Input) -> Result<(Instance, RandomMatching), Failure> {
    let inst = load_instance(&input.instance)?;
    let p = formats::parse_matrix(&read(&input.matrix)?, &inst)?;
    Ok((inst, p))
}

fn emit(out: &OutDir, doc: Value) -> Outcome {
    if let (Some(dir), Value::Object(fields)) = (&out.out_dir, &doc) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        for (k, v) in fields {
            write(&dir.join(format!("{k}.json")), v)?;
        }
    }
    Ok(CommandOutcome::ok(doc))
}

/// Attaches the oracle's verdict; exit code 5 when it disagrees.
fn cross_check(mut outcome: CommandOutcome, ours: bool, theirs: bool) -> CommandOutcome {
    if let Value::Object(map) = &mut outcome.stdout {
        map.insert("oracle".into(), json!({"agrees": ours == theirs, "verdict": theirs}));
    }
    if ours != theirs {
        outcome.exit_code = EXIT_ORACLE;
    }
    outcome
}

/// Runs one command. `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandOutcome::ok(Value::String(e.to_string())),
                _ => Failure::Usage(e.to_string()).outcome(),
            };
        }
    };
    dispatch(cli.command).unwrap_or_else(|f| f.outcome())
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Validate { instance, matrix } => validate(&instance, matrix.as_deref()),
        Command::Complete { instance, matrix, out } => complete(&instance, matrix.as_deref(), &out),
        Command::CheckStable { instance, matching, strong } => {
            let inst = load_instance(&instance)?;
            let m = formats::parse_matching(&read(&matching)?, &inst)?;
            let report = if strong { is_strongly_stable(&inst, &m)? } else { is_weakly_stable(&inst, &m)? };
            Ok(CommandOutcome::verdict(report.stable, formats::stability_to_json(&report)))
        }
        Command::Da { instance, seed, oracle } => {
            let inst = load_instance(&instance)?;
            let m = deferred_acceptance(&inst, TieBreak::new(seed))?;
            let out = CommandOutcome::ok(matching_to_json(&m, inst.agents(), inst.items()));
            if !oracle {
                return Ok(out);
            }
            let stable = oracle::enumerate_weakly_stable(&inst)?.contains(&m);
            Ok(cross_check(out, true, stable))
        }
        Command::Birkhoff { matrix, instance } => {
            let text = read(&matrix)?;
            let d = match instance {
                Some(path) => {
                    let inst = load_instance(&path)?;
                    let mut d = birkhoff_decompose(&formats::parse_matrix(&text, &inst)?)?;
                    d.annotate(&inst);
                    d
                }
                None => birkhoff_decompose(&formats::parse_matrix_standalone(&text)?)?,
            };
            Ok(CommandOutcome::ok(decomposition_to_json(&d)))
        }
        Command::Fractional { input, strong, oracle } => {
            let (inst, p) = load_input(&input)?;
            let report = if strong {
                check_fractional_strong_stability(&inst, &p)?
            } else {
                check_fractional_stability(&inst, &p)?
            };
            let out = CommandOutcome::verdict(report.satisfied, formats::fractional_to_json(&report));
            if !oracle {
                return Ok(out);
            }
            let naive = check_fractional_naive(&inst, &p, strong)?.satisfied;
            Ok(cross_check(out, report.satisfied, naive))
        }
        Command::Expost { input, search } => {
            let (inst, p) = load_input(&input)?;
            let r = max_stable_decomposition_with_cap(&inst, &p, search.cap)?;
            if let Some(path) = &search.emit_decomposition {
                write(path, &decomposition_to_json(&r.decomposition))?;
            }
            let out = CommandOutcome::verdict(r.is_expost_stable, formats::expost_to_json(&r));
            if !search.oracle {
                return Ok(out);
            }
            let columns = oracle::weakly_stable_consistent(&inst, &p)?;
            Ok(cross_check(out, r.is_expost_stable, oracle::lp_membership(&p, &columns).is_some()))
        }
        Command::ExpostStrong { input, search } => {
            let (inst, p) = load_input(&input)?;
            let found = expost_strong_decompose_with_cap(&inst, &p, search.cap)?;
            if let (Some(path), Some((d, _))) = (&search.emit_decomposition, &found) {
                write(path, &decomposition_to_json(d))?;
            }
            let doc = match &found {
                Some((d, method)) => json!({
                    "expost_strongly_stable": true,
                    "method": method.as_str(),
                    "decomposition": decomposition_to_json(d),
                }),
                None => json!({"expost_strongly_stable": false, "method": null, "decomposition": null}),
            };
            let out = CommandOutcome::verdict(found.is_some(), doc);
            if !search.oracle {
                return Ok(out);
            }
            let columns = oracle::strongly_stable_consistent(&inst, &p)?;
            Ok(cross_check(out, found.is_some(), oracle::lp_membership(&p, &columns).is_some()))
        }
        Command::Robust { input, all_witnesses, oracle } => {
            let (inst, p) = load_input(&input)?;
            let r = is_robust_expost_stable(&inst, &p)?;
            let mut doc = formats::robust_to_json(&r, inst.agents(), inst.items());
            if all_witnesses {
                let all: Vec<Value> = robust_witnesses(&inst, &p)?
                    .iter()
                    .map(|w| formats::witness_to_json(w, inst.agents(), inst.items()))
                    .collect();
                doc["witnesses"] = Value::Array(all);
            }
            let out = CommandOutcome::verdict(r.robust, doc);
            if !oracle {
                return Ok(out);
            }
            Ok(cross_check(out, r.robust, oracle::robust_oracle(&inst, &p)?))
        }
        Command::ConsistentStable { input, oracle } => {
            let (inst, p) = load_input(&input)?;
            let m = find_consistent_stable(&inst, &p)?;
            let doc = json!({
                "found": m.is_some(),
                "matching": m.as_ref().map_or(Value::Null, |m| matching_to_json(m, inst.agents(), inst.items())["matching"].clone()),
            });
            let out = CommandOutcome::verdict(m.is_some(), doc);
            if !oracle {
                return Ok(out);
            }
            let exists = !oracle::weakly_stable_consistent(&inst, &p)?.is_empty();
            Ok(cross_check(out, m.is_some(), exists))
        }
        Command::Gen(g) => generate(g),
    }
}

fn validate(instance: &Path, matrix: Option<&Path>) -> Outcome {
    let inst = formats::parse_instance_unchecked(&read(instance)?)?;
    let report = validate_instance(&inst);
    let mut doc = Map::new();
    let mut ok = report.ok;
    doc.insert("instance".into(), formats::validation_to_json(&report));
    if let Some(path) = matrix {
        let p = formats::parse_matrix(&read(path)?, &inst)?;
        let m = validate_random_matching(&inst, &p);
        ok &= m.ok;
        doc.insert("matrix".into(), formats::validation_to_json(&m));
    }
    doc.insert("ok".into(), json!(ok));
    Ok(CommandOutcome::verdict(ok, Value::Object(doc)))
}

fn complete(instance: &Path, matrix: Option<&Path>, out: &OutDir) -> Outcome {
    let inst = load_instance(instance)?;
    let p = match matrix {
        Some(path) => Some(formats::parse_matrix(&read(path)?, &inst)?),
        None => None,
    };
    let (done, q) = complete_instance(&inst, p.as_ref())?;
    let mut doc = Map::new();
    doc.insert("instance".into(), formats::instance_to_json(&done));
    if let Some(q) = q {
        doc.insert("matrix".into(), matrix_to_json(&q));
    }
    emit(out, Value::Object(doc))
}

fn x3c_fixture(name: &str) -> X3CInstance {
    match name {
        "x3c1" => fixtures::x3c1(),
        "x3c2-yes" => fixtures::x3c2_yes(),
        _ => fixtures::x3c2_no(),
    }
}

fn generate(g: GenCommand) -> Outcome {
    match g {
        GenCommand::Example1 { out } => {
            let ex = gen::gen_example1();
            let (agents, items) = (ex.instance.agents(), ex.instance.items());
            let doc = json!({
                "instance": formats::instance_to_json(&ex.instance),
                "uniform": matrix_to_json(&ex.p_uniform),
                "improved": matrix_to_json(&ex.p_improved),
                "m1": matching_to_json(&ex.m1, agents, items),
                "m2": matching_to_json(&ex.m2, agents, items),
            });
            emit(&out, doc)
        }
        GenCommand::X3c { x3c, fixture, variant, out } => {
            let x = match (x3c, fixture) {
                (Some(path), _) => formats::parse_x3c(&read(&path)?)?,
                (None, Some(name)) => x3c_fixture(&name),
                (None, None) => return Err(Failure::Usage("either --x3c or --fixture is required".into())),
            };
            let (inst, p) = gen::gen_x3c_reduction(&x, variant)?;
            let doc = json!({
                "instance": formats::instance_to_json(&inst),
                "matrix": matrix_to_json(&p),
                "has_cover": oracle::solve_x3c(&x).is_some(),
            });
            emit(&out, doc)
        }
        GenCommand::Random { n, model, density, seed, out } => {
            if n == 0 || !(0.0..=1.0).contains(&density) {
                return Err(Failure::Usage("need n >= 1 and density in [0, 1]".into()));
            }
            let inst = gen::gen_random_instance(n, model, density, seed);
            emit(&out, json!({"instance": formats::instance_to_json(&inst)}))
        }
        GenCommand::Mixture { instance, k, seed, out } => {
            let inst = load_instance(&instance)?;
            let p = gen::gen_random_mixture(&inst, k, seed)?;
            emit(&out, json!({"matrix": matrix_to_json(&p)}))
        }
        GenCommand::Ps { instance, out } => {
            let inst = load_instance(&instance)?;
            let p = gen::probabilistic_serial(&inst)?;
            emit(&out, json!({"matrix": matrix_to_json(&p)}))
        }
    }
}
