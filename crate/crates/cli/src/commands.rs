use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use delta_attrib::attribution::{
    coarse_attrib, fine_attrib, fine_attrib_sampled, linear_attrib_mechanisms, natural_order, ordered_attrib,
    SamplingConfig,
};
use delta_attrib::casestudy::{
    attribute_panel, coefficient_table, ingest_panel, unit_report, PanelMethod, PanelOptions, PanelSchema, ResidualMode,
};
use delta_attrib::experiments::{
    records_to_csv, run_reliability, run_scalability, summarize, write_records, FittedKind, MaeRecord,
    ReliabilityConfig, ScalabilityConfig,
};
use delta_attrib::fcm::{fcm_attrib_with_limit, InvertibleFcm};
use delta_attrib::format::sig6;
use delta_attrib::model_file::ModelFile;
use delta_attrib::models::TruthKind;
use delta_attrib::{AttributionResult, ChangeInstance, Error, Player};

use crate::{
    AttribMethod, AttributeArgs, CasestudyArgs, Cli, Command, FcmArgs, Format, OutputArgs, PanelMethodArg,
    ReliabilityArgs, ScalabilityArgs, SimOutputArgs, SimulateCommand, TruthChoice,
};

pub struct CliError {
    pub code: u8,
    pub message: String,
    pub hint: Option<String>,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
            hint: None,
        }
    }

    fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionMismatch { .. }
            | Error::NoInputs
            | Error::OverExactLimit { .. }
            | Error::InvalidOrdering(_)
            | Error::InvalidConfig(_)
            | Error::InvalidModel(_)
            | Error::Expression(_)
            | Error::UnknownUnit(_)
            | Error::Io { .. } => 2,
            Error::MissingColumn(_)
            | Error::Cell { .. }
            | Error::DuplicateRow { .. }
            | Error::EmptyDataset
            | Error::Data(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::Evaluation { .. } | Error::NonFinite { .. } | Error::Invertibility { .. } | Error::Fit(_) => 4,
        };
        let hint = matches!(e, Error::OverExactLimit { .. })
            .then(|| "pass --budget M to sample M permutations, or raise --exact-limit".to_string());
        Self {
            code,
            message: e.to_string(),
            hint,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Attribute(a) => attribute(cli, a),
        Command::Simulate(SimulateCommand::Reliability(a)) => reliability(cli, a),
        Command::Simulate(SimulateCommand::Scalability(a)) => scalability(cli, a),
        Command::Casestudy(a) => casestudy(cli, a),
        Command::Fcm(a) => fcm(cli, a),
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::usage(format!("{flag}: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_vector(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = parse_list(flag, text)?;
    if v.is_empty() {
        return Err(CliError::usage(format!("{flag}: expected at least one value")));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(CliError::usage(format!("{flag}: value {bad} is not finite")));
    }
    Ok(v)
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| {
        CliError::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn same_file(a: &Path, b: &Path) -> bool {
    a == b || matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y)
}

fn load_model(flag: &str, path: &Path) -> CliResult<ModelFile> {
    ModelFile::load(path).map_err(|e| CliError::from(e).context(flag))
}

fn attribute(cli: &Cli, a: &AttributeArgs) -> CliResult {
    let x_bg = parse_vector("--x-bg", &a.x_bg)?;
    let x_fg = parse_vector("--x-fg", &a.x_fg)?;
    let file_bg = load_model("--model-bg", &a.model_bg)?;
    let f_bg = file_bg.clone().into_mechanism();
    let (file_fg, f_fg) = if same_file(&a.model_bg, &a.model_fg) {
        (file_bg.clone(), Arc::clone(&f_bg))
    } else {
        let file = load_model("--model-fg", &a.model_fg)?;
        (file.clone(), file.into_mechanism())
    };
    for (flag, x) in [("--x-bg", &x_bg), ("--x-fg", &x_fg)] {
        if x.len() != f_bg.arity() || x.len() != f_fg.arity() {
            return Err(CliError::usage(format!(
                "{flag}: got {} values but the models take {} (background) and {} (foreground) inputs",
                x.len(),
                f_bg.arity(),
                f_fg.arity()
            )));
        }
    }
    let instance = ChangeInstance::new(x_bg.clone(), x_fg.clone(), f_bg, f_fg)?;
    let sampling = a.budget.map(|m| SamplingConfig {
        num_permutations: m,
        seed: cli.seed,
    });

    let result = match a.method {
        AttribMethod::Coarse => coarse_attrib(&instance)?,
        AttribMethod::Linear => match (&file_bg, &file_fg) {
            (ModelFile::Linear(bg), ModelFile::Linear(fg)) => linear_attrib_mechanisms(bg, fg, &x_bg, &x_fg)?,
            _ => return Err(CliError::usage("--method linear needs two linear model files")),
        },
        AttribMethod::Fine => fine_attrib(&instance, a.exact_limit, sampling.as_ref())?,
        AttribMethod::Sampled => {
            let config = sampling.ok_or_else(|| CliError::usage("--method sampled needs --budget M"))?;
            fine_attrib_sampled(&instance, &config)?
        }
        AttribMethod::Ordered => {
            let order = match &a.order {
                Some(text) => text
                    .split(',')
                    .map(|s| s.parse::<Player>().map_err(|e| CliError::from(e).context("--order")))
                    .collect::<CliResult<Vec<_>>>()?,
                None => natural_order(instance.dim()),
            };
            ordered_attrib(&instance, &order)?
        }
    };
    if cli.verbose {
        eprintln!(
            "y_bg = {}, y_fg = {}, oracle evaluations = {}",
            instance.y_bg()?,
            instance.y_fg()?,
            result.oracle_evaluations.map_or("-".into(), |n| n.to_string())
        );
    }
    emit_result(&result, &a.output, &|p| p.to_string())
}

fn result_text(r: &AttributionResult, name: &dyn Fn(Player) -> String) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method: {}", r.method);
    let _ = writeln!(s, "delta_y: {}", sig6(r.delta_y));
    if let Some(m) = r.permutations_used {
        let _ = writeln!(s, "permutations: {m}");
    }
    let row = |a: &str, b: &str, c: &str| format!("{a:<16} {b:>14} {c:>14}").trim_end().to_string();
    let _ = writeln!(
        s,
        "{}",
        row("player", "credit", if r.stderr.is_some() { "stderr" } else { "" })
    );
    for (p, c) in &r.credits {
        let se = r
            .stderr
            .as_ref()
            .and_then(|m| m.get(p))
            .map(|v| sig6(*v))
            .unwrap_or_default();
        let _ = writeln!(s, "{}", row(&name(*p), &sig6(*c), &se));
    }
    s
}

fn result_csv(r: &AttributionResult, name: &dyn Fn(Player) -> String) -> String {
    let mut s = String::from("player,credit,stderr\n");
    for (p, c) in &r.credits {
        let se = r
            .stderr
            .as_ref()
            .and_then(|m| m.get(p))
            .map(|v| format!("{v:?}"))
            .unwrap_or_default();
        let _ = writeln!(s, "{},{c:?},{se}", name(*p));
    }
    s
}

fn emit_result(r: &AttributionResult, out: &OutputArgs, name: &dyn Fn(Player) -> String) -> CliResult {
    let json = || serde_json::to_string_pretty(r).expect("result serializes") + "\n";
    match out.format {
        Format::Text => print!("{}", result_text(r, name)),
        Format::Json => print!("{}", json()),
        Format::Csv => print!("{}", result_csv(r, name)),
    }
    if let Some(path) = &out.out {
        let text = if out.format == Format::Csv {
            result_csv(r, &|p| p.to_string())
        } else {
            json()
        };
        write_file(path, &text)?;
    }
    Ok(())
}

fn sim_outputs(records: &[MaeRecord], out: &SimOutputArgs) -> CliResult {
    let jsonl: Option<PathBuf> = out
        .jsonl
        .clone()
        .or_else(|| out.out.as_ref().map(|p| p.with_extension("jsonl")));
    write_records(records, out.out.as_deref(), jsonl.as_deref())?;
    let summary = summary_text(records);
    if out.out.is_some() {
        print!("{summary}");
    } else {
        print!("{}", records_to_csv(records)?);
        eprint!("{summary}");
    }
    Ok(())
}

fn summary_text(records: &[MaeRecord]) -> String {
    let mut s = format!(
        "{:<11} {:<15} {:<8} {:>4} {:>7} {:>6} {:>8} {:>12} {:>12}\n",
        "kind", "fitted", "method", "d", "budget", "cells", "failed", "median_mae", "mean_mae"
    );
    for g in summarize(records) {
        let _ = writeln!(
            s,
            "{:<11} {:<15} {:<8} {:>4} {:>7} {:>6} {:>8} {:>12} {:>12}",
            g.kind.to_string(),
            g.fitted.to_string(),
            g.method.to_string(),
            g.d.map_or("-".into(), |d| d.to_string()),
            g.budget.map_or("-".into(), |b| b.to_string()),
            g.cells,
            g.failures,
            sig6(g.median_mae),
            sig6(g.mean_mae)
        );
    }
    s
}

fn reliability(cli: &Cli, a: &ReliabilityArgs) -> CliResult {
    let truth_kinds = match a.truth {
        TruthChoice::Linear => vec![TruthKind::Linear],
        TruthChoice::Polynomial => vec![TruthKind::Polynomial],
        TruthChoice::Both => vec![TruthKind::Linear, TruthKind::Polynomial],
    };
    let fitted_kinds: Vec<FittedKind> = a
        .fitted
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<FittedKind>()
                .map_err(|e| CliError::from(e).context("--fitted"))
        })
        .collect::<CliResult<_>>()?;
    let config = ReliabilityConfig {
        num_models: a.models,
        n: a.n,
        truth_kinds,
        fitted_kinds,
        stump_rounds: a.rounds,
        stump_rate: a.rate,
        seed: cli.seed,
        ..Default::default()
    };
    let records = run_reliability(&config)?;
    if cli.verbose {
        let failed = records.iter().filter(|r| r.failed()).count();
        eprintln!("{} records, {failed} failed cells", records.len());
    }
    sim_outputs(&records, &a.output)
}

fn scalability(cli: &Cli, a: &ScalabilityArgs) -> CliResult {
    let config = ScalabilityConfig {
        dims: parse_list("--dims", &a.dims)?,
        budgets: parse_list("--budgets", &a.budgets)?,
        repeats: a.repeats,
        n: a.n,
        seed: cli.seed,
    };
    let records = run_scalability(&config)?;
    sim_outputs(&records, &a.output)
}

fn casestudy(_cli: &Cli, a: &CasestudyArgs) -> CliResult {
    let data = ingest_panel(&a.panel, &PanelSchema::default()).map_err(|e| CliError::from(e).context("--panel"))?;
    let options = PanelOptions {
        method: match a.method {
            PanelMethodArg::Linear => PanelMethod::Linear,
            PanelMethodArg::Fine => PanelMethod::Fine,
        },
        with_intercept: a.intercept,
        residuals: if a.fold_residuals {
            ResidualMode::Mechanism
        } else {
            ResidualMode::Fitted
        },
    };
    let panel = attribute_panel(&data, a.bg_year, a.fg_year, options)?;
    let unit = a
        .unit
        .as_deref()
        .map(|id| unit_report(&panel, id).map_err(|e| CliError::from(e).context("--unit")))
        .transpose()?;
    let coefficients = coefficient_table(&panel);

    let json = serde_json::json!({
        "report": panel.report,
        "fits": panel.fits,
        "coefficients": coefficients,
        "excluded_units": panel.excluded_units,
        "unit": unit,
    });
    let json_text = serde_json::to_string_pretty(&json).expect("report serializes") + "\n";
    match a.format {
        Format::Json => print!("{json_text}"),
        _ => {
            let mut s = panel.report.render_text();
            if let Some((bg, fg)) = &panel.fits {
                for f in [bg, fg] {
                    let _ = writeln!(
                        s,
                        "fit {}: n = {}, R2 = {}, uncentered R2 = {}{}",
                        f.year,
                        f.n,
                        sig6(f.r_squared),
                        sig6(f.r_squared_uncentered),
                        f.warning.as_ref().map(|w| format!(" ({w})")).unwrap_or_default()
                    );
                }
            }
            let _ = writeln!(s, "{:<10} {:>12} {:>12}", "coef", panel.bg_year, panel.fg_year);
            for (name, (b, f)) in &coefficients {
                let _ = writeln!(s, "{:<10} {:>12} {:>12}", name, sig6(*b), sig6(*f));
            }
            if let Some(u) = &unit {
                s.push('\n');
                s.push_str(&u.render_text());
            }
            print!("{s}");
        }
    }
    if let Some(path) = &a.out {
        write_file(path, &json_text)?;
    }
    if let Some(path) = &a.credits {
        write_file(path, &panel.credits_csv()?)?;
    }
    Ok(())
}

fn fcm(cli: &Cli, a: &FcmArgs) -> CliResult {
    let model = InvertibleFcm::load(&a.spec).map_err(|e| CliError::from(e).context("--spec"))?;
    let bg = model
        .load_observations(&a.obs_bg)
        .map_err(|e| CliError::from(e).context("--obs-bg"))?;
    let fg = model
        .load_observations(&a.obs_fg)
        .map_err(|e| CliError::from(e).context("--obs-fg"))?;
    let sampling = a.budget.map(|m| SamplingConfig {
        num_permutations: m,
        seed: cli.seed,
    });
    let result = fcm_attrib_with_limit(&model, &bg, &fg, a.exact_limit, sampling.as_ref())?;
    let name = |p: Player| match p {
        Player::NodeNoise(j) => format!("noise[{}]", model.nodes()[j].name),
        other => other.to_string(),
    };
    emit_result(&result, &a.output, &name)
}
