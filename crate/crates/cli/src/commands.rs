use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use minirocket::classifier::RIDGE_MAX_TRAIN;
use minirocket::io::{
    load_delimited, load_model, load_params, load_unlabelled, save_model, save_params, write_features_csv,
};
use minirocket::oracle::{selftest, SelftestConfig};
use minirocket::timing::{bench_point, ratio_is_linear, BenchRow, LINEAR_RATIO_RANGE};
use minirocket::{
    accuracy, choose_classifier, default_alphas, fit, logistic_fit, ridge_fit, transform, BiasVariant, ClassifierKind,
    TimeSeriesDataset, TrainingSchedule, NUM_KERNELS,
};

use crate::{BenchArgs, ClassifierChoice, Command, FitArgs, PredictArgs, SelftestArgs, TrainArgs, TransformArgs};

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Selftest(args) => cmd_selftest(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn load(path: &Path, delimiter: char, unlabelled: bool) -> Result<TimeSeriesDataset> {
    let data = if unlabelled {
        load_unlabelled(path, delimiter)
    } else {
        load_delimited(path, delimiter)
    };
    data.with_context(|| format!("reading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode> {
    let train = load(&args.train, args.format.delimiter, false)?;
    let variant = if args.deterministic {
        BiasVariant::Deterministic
    } else {
        BiasVariant::Default {
            seed: args.seed.unwrap_or(0),
        }
    };
    let params = fit(&train, args.num_features, args.max_dilations, variant)?;
    save_params(&params, &args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let plan = &params.plan;
    println!("{:>10}  {:>20}", "dilation", "features_per_kernel");
    for (d, f) in plan.dilations.iter().zip(&plan.features_per_dilation) {
        println!("{d:>10}  {f:>20}");
    }
    if plan.dilations.len() == 1 {
        println!(
            "single dilation: the per-kernel budget allows only dilation {}",
            plan.dilations[0]
        );
    }
    println!(
        "total features: {} ({} kernels x {} per kernel)",
        plan.total_features(),
        NUM_KERNELS,
        plan.features_per_kernel()
    );
    match variant {
        BiasVariant::Default { seed } => println!("variant: default, seed {seed}"),
        BiasVariant::Deterministic => println!("variant: deterministic"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_transform(args: TransformArgs) -> Result<ExitCode> {
    let params = load_params(&args.params).with_context(|| format!("reading {}", args.params.display()))?;
    let data = load(&args.data, args.format.delimiter, args.unlabelled)?;
    let features = transform(&data, &params)?;
    let mut out = output(args.out.as_deref())?;
    write_features_csv(&features, data.labels(), &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let params = load_params(&args.params).with_context(|| format!("reading {}", args.params.display()))?;
    let train = load(&args.train, args.format.delimiter, false)?;
    let labels = train.require_labels()?;
    let kind = match args.classifier {
        ClassifierChoice::Auto => choose_classifier(train.len()),
        ClassifierChoice::Ridge => ClassifierKind::Ridge,
        ClassifierChoice::Logistic => ClassifierKind::Logistic,
    };
    if args.classifier == ClassifierChoice::Auto {
        println!(
            "classifier: {kind} (auto: {} training examples, ridge up to {RIDGE_MAX_TRAIN})",
            train.len()
        );
    } else {
        println!("classifier: {kind}");
    }

    let started = Instant::now();
    let (model, transform_time) = match kind {
        ClassifierKind::Ridge => {
            let features = transform(&train, &params)?;
            let transform_time = started.elapsed();
            let fitted = ridge_fit(&features, labels, &default_alphas())?;
            println!("alpha: {:e}", fitted.alpha);
            (fitted.model, transform_time)
        }
        ClassifierKind::Logistic => {
            let mut transform_time = Duration::ZERO;
            let fitted = logistic_fit(
                &train,
                |batch| {
                    let t = Instant::now();
                    let f = transform(batch, &params);
                    transform_time += t.elapsed();
                    f
                },
                &TrainingSchedule::default(),
                args.seed,
            )?;
            println!(
                "updates: {}, epochs: {}, best validation loss: {:.6}, final lr: {:e}",
                fitted.updates, fitted.epochs, fitted.best_validation_loss, fitted.final_lr
            );
            (fitted.model, transform_time)
        }
    };
    let total = started.elapsed();
    save_model(&model, &args.model_out).with_context(|| format!("writing {}", args.model_out.display()))?;
    println!("transform_s: {:.3}", transform_time.as_secs_f64());
    println!(
        "classifier_s: {:.3}",
        total.saturating_sub(transform_time).as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_predict(args: PredictArgs) -> Result<ExitCode> {
    let params = load_params(&args.params).with_context(|| format!("reading {}", args.params.display()))?;
    let model = load_model(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    if model.num_features() != params.num_features() {
        bail!(
            "model expects {} features but the parameters produce {}",
            model.num_features(),
            params.num_features()
        );
    }
    let data = load(&args.data, args.format.delimiter, args.unlabelled)?;
    let predicted = model.predict(&transform(&data, &params)?)?;
    if let Some(truth) = data.labels() {
        println!("accuracy: {:.6}", accuracy(&predicted, truth));
    }
    if data.labels().is_none() || args.out.is_some() {
        let mut out = output(args.out.as_deref())?;
        writeln!(out, "index,prediction")?;
        for (i, p) in predicted.iter().enumerate() {
            writeln!(out, "{i},{p}")?;
        }
        out.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(args: SelftestArgs) -> Result<ExitCode> {
    let config = SelftestConfig {
        cases: args.cases as usize,
        seed: args.seed,
        num_features: args.num_features,
        inject_parity_fault: args.inject_parity_fault,
        ..SelftestConfig::default()
    };
    let report = selftest(&config)?;
    println!("cases: {}", report.cases.len());
    println!("max abs deviation: {:e}", report.max_abs_diff);
    println!("tolerance: {:e}", report.tolerance);
    if report.passed() {
        println!("result: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("result: FAIL");
        Ok(ExitCode::from(2))
    }
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    if args.lengths.is_empty() || args.examples.is_empty() {
        bail!("need at least one length and one example count");
    }
    let mut rows = Vec::new();
    let mut out = io::stdout().lock();
    writeln!(out, "length,n,fast_ms,naive_ms,speedup")?;
    for &n in &args.examples {
        for &length in &args.lengths {
            let row = bench_point(length, n, args.repeats, !args.no_naive, args.seed)?;
            let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.3}"));
            writeln!(
                out,
                "{length},{n},{:.3},{},{}",
                row.fast_ms,
                fmt(row.naive_ms),
                fmt(row.speedup())
            )?;
            out.flush()?;
            rows.push(row);
        }
    }
    for check in scaling_checks(&rows) {
        eprintln!("{check}");
    }
    Ok(ExitCode::SUCCESS)
}

/// One line per pair of rows where exactly one of length or example count
/// doubles.
fn scaling_checks(rows: &[BenchRow]) -> Vec<String> {
    let mut lines = Vec::new();
    for a in rows {
        for b in rows {
            let length_doubles = b.length == 2 * a.length && b.examples == a.examples;
            let examples_double = b.examples == 2 * a.examples && b.length == a.length;
            if !(length_doubles || examples_double) {
                continue;
            }
            let ratio = b.fast_ms / a.fast_ms;
            lines.push(format!(
                "scaling {}x{} -> {}x{}: ratio {ratio:.2} ({} in [{}, {}])",
                a.length,
                a.examples,
                b.length,
                b.examples,
                if ratio_is_linear(ratio) { "linear" } else { "NOT linear" },
                LINEAR_RATIO_RANGE.0,
                LINEAR_RATIO_RANGE.1
            ));
        }
    }
    lines
}
