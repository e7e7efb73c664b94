use serde_json::{json, Value};

use super::config::{
    BoundsArgs, BoundsOp, CovappArgs, FileConfig, GeneratorArg, LawArg, Merge, OrliczArgs, OrliczOp, ProblemArgs,
    SampleArgs, SideArg, Suite, SumArgs, VerifyArgs,
};
use super::output::{fmt_float, to_json, Cell, Sink, Table};
use super::suites::{run_suite, DEFAULT_COUNT, DEFAULT_REPS};
use super::{Cli, CliError, Command, Format};
use crate::bounds::{
    dual_moment_rate, gbo_bound_params, k_of_t, moment_rate, moment_rate_psi, tail_closed_form, tail_upper_k,
    BoundValue, Side,
};
use crate::covapp::{coverage_experiment, default_nu_grid, scaling_sweep, CovExperimentConfig};
use crate::orlicz::{log_phi_bounds, log_phi_p_z, orlicz_norm_analytic, sequence_orlicz_norm, GboFunction, ZSurvival};
use crate::sampling::{sample_y, sample_z, sample_zstar};

/// Grid of the optional covariance scaling sweep.
pub const SWEEP_MS: [usize; 3] = [10, 20, 40];
pub const SWEEP_NS: [usize; 3] = [100, 200, 400];
pub const SWEEP_QS: [usize; 2] = [5, 10];

fn need<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required setting `{what}`")))
}

pub(super) fn dispatch(cli: &Cli, file: FileConfig) -> Result<(), CliError> {
    let seed = cli.global.seed.or(file.seed);
    let mut sink = Sink::new(cli.global.out.clone(), cli.global.format)?;
    let snapshot = match &cli.command {
        Command::Bounds { problem, args } => bounds(&mut sink, problem.clone(), args.clone(), &file)?,
        Command::Orlicz { args, sum } => orlicz(&mut sink, args.clone(), sum.clone(), &file)?,
        Command::Sample { args, sum } => sample(&mut sink, args.clone(), sum.clone(), &file, need(seed, "seed")?)?,
        Command::Verify { args } => verify(&mut sink, args.clone(), &file, need(seed, "seed")?)?,
        Command::Covapp { args } => covapp(&mut sink, args.clone(), &file, need(seed, "seed")?)?,
    };
    sink.finish(cli.command.name(), snapshot, seed)
}

fn bound_json(op: BoundsOp, inputs: Value, b: &BoundValue) -> Value {
    json!({
        "operation": op.name(),
        "inputs": inputs,
        "value": b.value,
        "regime": b.regime,
        "constant_c": b.constant_c,
        "exceeds_one": b.exceeds_one,
    })
}

fn bounds(sink: &mut Sink, problem: ProblemArgs, args: BoundsArgs, file: &FileConfig) -> Result<Value, CliError> {
    let args = args.merge(file.bounds.clone().unwrap_or_default());
    let op = need(args.op, "op")?;
    let c = args.constant_c.unwrap_or(1.0);
    let result = if op == BoundsOp::MomentRatePsi {
        // only alpha and the weights matter here
        let file_problem = file.problem.clone().map(|p| ProblemArgs { alpha: Some(p.alpha), weights: Some(p.weights), scales: None });
        let merged = problem.merge(file_problem.unwrap_or_default());
        let alpha = need(merged.alpha, "alpha")?;
        let weights = need(merged.weights, "weights")?;
        let p = need(args.p, "p")?;
        let inputs = json!({ "alpha": alpha, "weights": weights, "p": p });
        bound_json(op, inputs, &moment_rate_psi(&weights, alpha, p, c)?)
    } else {
        let config = problem.resolve(file.problem.as_ref())?;
        let q = config.build()?.canonicalize();
        let mut inputs = json!({ "problem": config });
        match op {
            BoundsOp::MomentRate => {
                let p = need(args.p, "p")?;
                inputs["p"] = json!(p);
                bound_json(op, inputs, &moment_rate(&q, p, c)?)
            }
            BoundsOp::TailUpperK => {
                let t = need(args.t, "t")?;
                inputs["t"] = json!(t);
                bound_json(op, inputs, &tail_upper_k(&q, t, c)?)
            }
            BoundsOp::TailClosedForm => {
                let t = need(args.t, "t")?;
                let side = match args.side.unwrap_or(SideArg::Upper) {
                    SideArg::Upper => Side::Upper,
                    SideArg::Lower => Side::Lower,
                };
                inputs["t"] = json!(t);
                inputs["side"] = json!(args.side.unwrap_or(SideArg::Upper));
                bound_json(op, inputs, &tail_closed_form(&q, t, c, side)?)
            }
            BoundsOp::KOfT => {
                let t = need(args.t, "t")?;
                inputs["t"] = json!(t);
                let k = k_of_t(&q, t)?;
                json!({ "operation": op.name(), "inputs": inputs, "value": k, "regime": null, "constant_c": null, "exceeds_one": false })
            }
            BoundsOp::DualMomentRate => {
                let p = need(args.p, "p")?;
                inputs["p"] = json!(p);
                let v = dual_moment_rate(&q, p)?;
                json!({ "operation": op.name(), "inputs": inputs, "value": v, "regime": null, "constant_c": null, "exceeds_one": false })
            }
            BoundsOp::GboBoundParams => {
                let g = gbo_bound_params(&q, c)?;
                json!({
                    "operation": op.name(),
                    "inputs": inputs,
                    "value": g.nu_star,
                    "l_star": g.l_star,
                    "nu_star": g.nu_star,
                    "regime": null,
                    "constant_c": c,
                    "exceeds_one": false,
                })
            }
            BoundsOp::MomentRatePsi => unreachable!(),
        }
    };
    sink.emit("bounds.json", Format::Json, Format::Json, &to_json(&result)?)?;
    let mut t = Table::new(&["operation", "value", "regime", "constant_c", "exceeds_one"]);
    let text = |v: &Value| v.as_str().map_or(Cell::Empty, Cell::from);
    t.push(vec![
        op.name().into(),
        result["value"].as_f64().into(),
        text(&result["regime"]),
        result["constant_c"].as_f64().into(),
        Cell::S(result["exceeds_one"].to_string()),
    ]);
    sink.emit("bounds.csv", Format::Csv, Format::Json, &t.to_csv())?;
    Ok(json!({ "bounds": { "op": op.name(), "p": args.p, "t": args.t, "constant_c": c, "side": args.side }, "result_inputs": result["inputs"] }))
}

fn orlicz(sink: &mut Sink, args: OrliczArgs, sum: SumArgs, file: &FileConfig) -> Result<Value, CliError> {
    let args = args.merge(file.orlicz.clone().unwrap_or_default());
    let op = need(args.op, "op")?;
    let result = match op {
        OrliczOp::Norm => {
            let alpha = need(args.alpha, "alpha")?;
            let l = need(args.l, "l")?;
            let generator = args.generator.unwrap_or(GeneratorArg::Gbo);
            let g = match generator {
                GeneratorArg::Gbo => GboFunction::new(alpha, l)?,
                GeneratorArg::Psi => GboFunction::psi(alpha)?,
            };
            let sol = orlicz_norm_analytic(&ZSurvival::new(alpha, l)?, &g)?;
            json!({
                "operation": "norm",
                "inputs": { "alpha": alpha, "l": l, "generator": generator },
                "eta_star": sol.eta_star,
                "bracket": sol.bracket,
                "iterations": sol.iterations,
                "expectation_at_eta_star": sol.expectation_at_eta_star,
            })
        }
        OrliczOp::LogPhi | OrliczOp::LogPhiBounds => {
            let alpha = need(args.alpha, "alpha")?;
            let l = need(args.l, "l")?;
            let eta = need(args.eta, "eta")?;
            let p = need(args.p, "p")?;
            let inputs = json!({ "alpha": alpha, "l": l, "eta": eta, "p": p });
            if op == OrliczOp::LogPhi {
                json!({ "operation": "log_phi", "inputs": inputs, "value": log_phi_p_z(eta, p, alpha, l)? })
            } else {
                let b = log_phi_bounds(eta, p, alpha, l)?;
                json!({ "operation": "log_phi_bounds", "inputs": inputs, "lower": b.lower, "upper": b.upper })
            }
        }
        OrliczOp::SequenceNorm => {
            let p = need(args.p, "p")?;
            let config = sum.with_alpha(args.alpha).resolve(file.problem.as_ref())?;
            let q = config.build()?.canonicalize();
            json!({ "operation": "sequence_norm", "inputs": { "problem": config, "p": p }, "value": sequence_orlicz_norm(&q, p)? })
        }
    };
    sink.emit("orlicz.json", Format::Json, Format::Json, &to_json(&result)?)?;
    let fields: Vec<(&str, Cell)> = ["value", "eta_star", "lower", "upper", "iterations", "expectation_at_eta_star"]
        .into_iter()
        .filter(|k| !result[k].is_null())
        .map(|k| (k, result[k].as_f64().into()))
        .collect();
    let mut header = vec!["operation"];
    header.extend(fields.iter().map(|(k, _)| *k));
    let mut t = Table::new(&header);
    let mut row = vec![Cell::from(result["operation"].as_str().unwrap_or_default())];
    row.extend(fields.into_iter().map(|(_, c)| c));
    t.push(row);
    sink.emit("orlicz.csv", Format::Csv, Format::Json, &t.to_csv())?;
    Ok(json!({ "orlicz": args, "inputs": result["inputs"] }))
}

fn sample(sink: &mut Sink, args: SampleArgs, sum: SumArgs, file: &FileConfig, seed: u64) -> Result<Value, CliError> {
    let args = args.merge(file.sample.clone().unwrap_or_default());
    let law = need(args.law, "law")?;
    let count = need(args.count, "count")?;
    let batch = match law {
        LawArg::Y => sample_y(count, seed)?,
        LawArg::Z => sample_z(need(args.alpha, "alpha")?, need(args.l, "l")?, count, seed)?,
        LawArg::Zstar => {
            let config = sum.clone().with_alpha(args.alpha).resolve(file.problem.as_ref())?;
            sample_zstar(&config.build()?.canonicalize(), count, seed)?
        }
    };
    let mut csv = batch.spec.describe();
    csv.push('\n');
    for x in &batch.values {
        csv.push_str(&fmt_float(*x));
        csv.push('\n');
    }
    sink.emit("sample.csv", Format::Csv, Format::Csv, &csv)?;
    let sidecar = json!({ "seed": batch.seed, "generator_id": batch.generator_id, "spec": batch.spec, "count": batch.values.len() });
    sink.emit("sample.json", Format::Json, Format::Csv, &to_json(&sidecar)?)?;
    Ok(json!({ "sample": args, "weights": sum.weights, "scales": sum.scales }))
}

fn verify(sink: &mut Sink, args: VerifyArgs, file: &FileConfig, seed: u64) -> Result<Value, CliError> {
    let args = args.merge(file.verify.clone().unwrap_or_default());
    let suite: Suite = need(args.suite, "suite")?;
    let count = args.count.unwrap_or(DEFAULT_COUNT);
    let reps = args.reps.unwrap_or(DEFAULT_REPS);
    let out = run_suite(suite, seed, count, reps)?;
    let name = suite.name();
    sink.emit(&format!("verify_{name}.json"), Format::Json, Format::Json, &to_json(&out.report)?)?;
    sink.emit(&format!("verify_{name}.csv"), Format::Csv, Format::Json, &out.table.to_csv())?;
    Ok(json!({ "verify": { "suite": name, "count": count, "reps": reps } }))
}

fn covapp(sink: &mut Sink, args: CovappArgs, file: &FileConfig, seed: u64) -> Result<Value, CliError> {
    let args = args.merge(file.covapp.clone().unwrap_or_default());
    let config = CovExperimentConfig {
        m: need(args.m, "m")?,
        n: need(args.n, "n")?,
        q: need(args.q, "q")?,
        reps: need(args.reps, "reps")?,
        seed,
        nu_grid: args.nu_grid.clone().unwrap_or_else(default_nu_grid),
    };
    let report = coverage_experiment(&config)?;
    let sweep = match args.sweep_reps {
        Some(reps) => Some(scaling_sweep(&SWEEP_MS, &SWEEP_NS, &SWEEP_QS, reps, seed)?),
        None => None,
    };
    let summary = json!({ "report": report, "sweep": sweep });
    sink.emit("covapp.json", Format::Json, Format::Json, &to_json(&summary)?)?;
    let mut t = Table::new(&["case", "nu_or_t", "empirical_freq", "bound_value", "c_fit"]);
    for r in &report.coverage {
        t.push(vec!["coverage".into(), r.nu.into(), r.empirical_freq.into(), r.quantile_bound.into(), report.c_fit.into()]);
    }
    for r in &report.centered_tail {
        t.push(vec!["centered_tail".into(), r.t.into(), r.empirical_freq.into(), r.bound_value.into(), report.c_fit.into()]);
    }
    sink.emit("covapp.csv", Format::Csv, Format::Json, &t.to_csv())?;
    Ok(json!({ "covapp": args }))
}
