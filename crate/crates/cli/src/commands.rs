use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use maxstream_core::extremal::simulate_extremal_process;
use maxstream_core::maxima::{partial_max_process, time_space_measure};
use maxstream_core::models::{
    garch_extremal_index, garch_tail_index_with, GarchThetaOptions, TailIndexOptions,
};
use maxstream_core::regvar::normalizer_an;
use maxstream_core::skorokhod::{d_j1, d_m1, osc_j1, osc_m1};
use maxstream_core::verify::{
    empirical_quantile, estimate_theta_blocks, j1_failure_experiment, karamata_report, poisson_cluster_check,
    theta_blocks_report, theta_conditional_report, verify_fidi, verify_max_limit, ClusterConfig, FidiConfig,
    J1FailureConfig, KaramataConfig, MaxLimitConfig, ThetaConfig,
};
use maxstream_core::{Error, Executor, ProcessModel, StepFunction, VerificationReport};

use crate::args::*;
use crate::output::{json as render_json, key_value_csv, sequence_csv, Output};

pub type CmdResult = std::result::Result<Output, String>;

pub struct Context {
    pub seed: u64,
    pub format: Format,
    pub config: Option<ProcessModel>,
    pub timings: bool,
    pub exec: Executor,
}

fn core_err(e: Error) -> String {
    e.to_string()
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

pub fn load_model_config(path: &Path) -> Result<ProcessModel, String> {
    serde_json::from_str(&read_text(path)?).map_err(|e| format!("invalid model spec in {}: {e}", path.display()))
}

fn inline_model(kind: ModelKind, p: &ModelParams) -> maxstream_core::Result<ProcessModel> {
    match kind {
        ModelKind::Iid => ProcessModel::iid(p.alpha, p.scale),
        ModelKind::Mm => ProcessModel::moving_maxima(p.coeffs.clone()),
        ModelKind::Armax => ProcessModel::armax(p.c),
        ModelKind::Garch2 => ProcessModel::squared_garch(p.alpha0, p.alpha1, p.beta1),
    }
}

impl Context {
    fn model(&self, args: &ModelArgs) -> Result<ProcessModel, String> {
        match &self.config {
            Some(m) => Ok(m.clone()),
            None => inline_model(args.model, &args.params).map_err(core_err),
        }
    }

    fn object(&self, value: Value) -> CmdResult {
        Ok(Output::ok(match self.format {
            Format::Json => render_json(&value),
            Format::Csv => key_value_csv(value.as_object().expect("command results are objects")),
        }))
    }

    fn report(&self, started: Instant, result: maxstream_core::Result<VerificationReport>) -> CmdResult {
        let mut report = result.map_err(core_err)?;
        if self.timings {
            let secs = started.elapsed().as_secs_f64();
            eprintln!("runtime: {secs:.3} s");
            report.runtime_seconds = Some(secs);
        }
        let text = match self.format {
            Format::Json => report.to_json() + "\n",
            Format::Csv => report.to_csv(),
        };
        Ok(Output { text, pass: report.pass })
    }
}

/// Reads a step function from JSON, or from `t,v` CSV when the file is not JSON.
fn read_step_function(path: &Path) -> Result<StepFunction, String> {
    let text = read_text(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let parsed = if is_csv || !text.trim_start().starts_with('{') {
        StepFunction::from_csv(&text).map_err(core_err)
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| format!("invalid step function in {}: {e}", path.display()))
}

/// Accepts a JSON array, an object with a `values` array (the output of
/// `simulate`), or CSV with the value in the last column.
fn read_series(path: &Path) -> Result<Vec<f64>, String> {
    let text = read_text(path)?;
    let bad = |what: String| format!("invalid series in {}: {what}", path.display());
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let items = match &v {
            Value::Array(a) => a,
            Value::Object(o) => match o.get("values") {
                Some(Value::Array(a)) => a,
                _ => return Err(bad("expected a \"values\" array".into())),
            },
            _ => unreachable!(),
        };
        return items.iter().map(|x| x.as_f64().ok_or_else(|| bad(format!("not a number: {x}")))).collect();
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.rsplit(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(x) => out.push(x),
            Err(_) if i == 0 => {}
            Err(_) => return Err(bad(format!("line {}: not a number", i + 1))),
        }
    }
    Ok(out)
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> CmdResult {
    let kind = match a.model {
        SimModel::Extremal => {
            let path = simulate_extremal_process(a.params.alpha, a.theta, a.floor, ctx.seed).map_err(core_err)?;
            return Ok(Output::ok(match ctx.format {
                Format::Json => render_json(&serde_json::to_value(&path).expect("path serializes")),
                Format::Csv => path.to_csv(),
            }));
        }
        SimModel::Iid => ModelKind::Iid,
        SimModel::Mm => ModelKind::Mm,
        SimModel::Armax => ModelKind::Armax,
        SimModel::Garch2 => ModelKind::Garch2,
    };
    let model = match &ctx.config {
        Some(m) => m.clone(),
        None => inline_model(kind, &a.params).map_err(core_err)?,
    };
    let xs = model.generate(a.n, ctx.seed).map_err(core_err)?;
    let text = match a.emit {
        Emit::Sequence => match ctx.format {
            Format::Json => render_json(&json!({"model": model, "n": a.n, "seed": ctx.seed, "values": xs})),
            Format::Csv => sequence_csv(&xs),
        },
        Emit::Path | Emit::Points => {
            let a_n = normalizer_an(&model, a.n).map_err(core_err)?;
            if a.emit == Emit::Path {
                let path = partial_max_process(&xs, a_n).map_err(core_err)?;
                match ctx.format {
                    Format::Json => render_json(&serde_json::to_value(&path).expect("path serializes")),
                    Format::Csv => path.to_csv(),
                }
            } else {
                let points = time_space_measure(&xs, a_n).map_err(core_err)?;
                match ctx.format {
                    Format::Json => render_json(&serde_json::to_value(&points).expect("measure serializes")),
                    Format::Csv => {
                        let mut out = String::from("t,x\n");
                        for &(t, x) in points.atoms() {
                            out.push_str(&format!("{t},{x}\n"));
                        }
                        out
                    }
                }
            }
        }
    };
    Ok(Output::ok(text))
}

pub fn metric(ctx: &Context, a: &MetricArgs) -> CmdResult {
    let left = read_step_function(&a.left)?;
    let right = read_step_function(&a.right)?;
    let (name, value) = match a.kind {
        MetricKind::M1 => ("m1", d_m1(&left, &right, a.tol)),
        MetricKind::J1 => ("j1", d_j1(&left, &right, a.tol)),
    };
    let value = value.map_err(core_err)?;
    ctx.object(json!({"metric": name, "value": value, "tol": a.tol}))
}

pub fn oscillation(ctx: &Context, a: &OscillationArgs) -> CmdResult {
    let path = read_step_function(&a.path)?;
    let mut rows = Vec::new();
    for &delta in &a.delta {
        let m1 = osc_m1(&path, delta).map_err(core_err)?;
        let j1 = osc_j1(&path, delta).map_err(core_err)?;
        rows.push((delta, m1, j1));
    }
    let text = match ctx.format {
        Format::Json => render_json(&json!({
            "oscillations": rows.iter().map(|&(d, m, j)| json!({"delta": d, "osc_m1": m, "osc_j1": j})).collect::<Vec<_>>()
        })),
        Format::Csv => {
            use maxstream_core::verify::sig6;
            let mut out = String::from("delta,osc_m1,osc_j1\n");
            for (d, m, j) in rows {
                out.push_str(&format!("{},{},{}\n", sig6(d), sig6(m), sig6(j)));
            }
            out
        }
    };
    Ok(Output::ok(text))
}

pub fn verify(ctx: &Context, cmd: &VerifyCommand) -> CmdResult {
    let started = Instant::now();
    let result = match cmd {
        VerifyCommand::MaxLimit(a) => {
            let cfg = MaxLimitConfig { n: a.n, trials: a.trials, seed: ctx.seed, ks_threshold: a.ks_threshold };
            verify_max_limit(&ctx.model(&a.model)?, &cfg, &ctx.exec)
        }
        VerifyCommand::Fidi(a) => {
            let cfg = FidiConfig {
                n: a.n,
                trials: a.trials,
                seed: ctx.seed,
                times: a.times.clone(),
                levels: a.levels.clone(),
                tolerance: a.tolerance,
            };
            verify_fidi(&ctx.model(&a.model)?, &cfg, &ctx.exec)
        }
        VerifyCommand::J1Failure(a) => {
            let cfg = J1FailureConfig {
                c0: a.c0,
                c1: a.c1,
                eps: a.eps,
                n: a.n,
                trials: a.trials,
                seed: ctx.seed,
                p_a_tolerance: a.p_a_tolerance,
            };
            j1_failure_experiment(&cfg, &ctx.exec)
        }
        VerifyCommand::ClusterPoisson(a) => {
            let cfg = ClusterConfig {
                n: a.n,
                u: a.u,
                block_len: a.block_len,
                trials: a.trials,
                seed: ctx.seed,
                mean_rel_tolerance: a.mean_tolerance,
                dispersion_range: (a.dispersion_min, a.dispersion_max),
            };
            poisson_cluster_check(&ctx.model(&a.model)?, &cfg, &ctx.exec)
        }
        VerifyCommand::Karamata(a) => {
            let cfg = KaramataConfig {
                alpha: a.alpha,
                orders: a.orders.clone(),
                eps: a.eps,
                n: a.n,
                rel_tolerance: a.tolerance,
            };
            karamata_report(&cfg)
        }
    };
    ctx.report(started, result)
}

pub fn estimate(ctx: &Context, cmd: &EstimateCommand) -> CmdResult {
    let EstimateCommand::Theta(a) = cmd;
    let started = Instant::now();
    if let Some(input) = &a.input {
        if a.method != ThetaMethod::Blocks {
            return Err("--input is only supported with --method blocks".into());
        }
        if !(a.quantile > 0.0 && a.quantile < 1.0) {
            return Err(format!("quantile must lie in (0, 1), got {}", a.quantile));
        }
        let xs = read_series(input)?;
        if xs.is_empty() {
            return Err(format!("{} contains no values", input.display()));
        }
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let threshold = empirical_quantile(&sorted, a.quantile);
        let theta = estimate_theta_blocks(&xs, a.block_len, threshold).map_err(core_err)?;
        return ctx.object(json!({
            "method": "blocks",
            "n": xs.len(),
            "block_len": a.block_len,
            "quantile": a.quantile,
            "threshold": threshold,
            "theta": theta,
        }));
    }
    let model = ctx.model(&a.model)?;
    let cfg = ThetaConfig {
        seed: ctx.seed,
        tolerance: a.tolerance,
        r: a.r,
        quantile: a.quantile,
        trials: a.trials,
        grid: a.grid,
        n: a.n,
        block_len: a.block_len,
    };
    let result = match a.method {
        ThetaMethod::Conditional => theta_conditional_report(&model, &cfg, &ctx.exec),
        ThetaMethod::Blocks => theta_blocks_report(&model, &cfg),
    };
    ctx.report(started, result)
}

pub fn garch(ctx: &Context, cmd: &GarchCommand) -> CmdResult {
    match cmd {
        GarchCommand::Alpha(a) => {
            let opts = TailIndexOptions { tol: a.tol, ..TailIndexOptions::default() };
            let alpha = garch_tail_index_with(a.alpha1, a.beta1, &opts).map_err(core_err)?;
            ctx.object(json!({"alpha": alpha, "alpha1": a.alpha1, "beta1": a.beta1, "tol": a.tol}))
        }
        GarchCommand::Theta(a) => {
            let opts = GarchThetaOptions { k_max: a.k_max, trials: a.trials, seed: ctx.seed };
            let t = garch_extremal_index(a.alpha1, a.beta1, &opts, &ctx.exec).map_err(core_err)?;
            ctx.object(json!({
                "alpha1": a.alpha1,
                "beta1": a.beta1,
                "k_max": a.k_max,
                "trials": a.trials,
                "seed": ctx.seed,
                "alpha": t.alpha,
                "theta": t.estimate,
                "stderr": t.stderr,
                "by_k": t.by_k,
            }))
        }
    }
}
