use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ncamon::dataset::{apply_scaler, fit_scaler, generate_synthetic, load_csv, save_csv};
use ncamon::evaluation::{orthogonality_report, render_table, run_benchmark, write_table_csv, NamedRun};
use ncamon::monitoring::{write_records, MonitorRecord};
use ncamon::nca::NcaModel;
use ncamon::{DataMatrix, Detector, Error, FaultSpec, LabeledRun, Method, ModelEnvelope, Result};

use crate::args::{BenchmarkArgs, FaultArg, FitArgs, InspectArgs, MonitorArgs, SynthArgs, TrainArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load(path: &Path) -> Result<DataMatrix> {
    load_csv(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn print_trace(env: &ModelEnvelope) {
    match &env.detector {
        Detector::Nca(m) => {
            for (i, step) in m.history.iter().enumerate() {
                println!(
                    "outer {:>3}  loss {:.6e}  frame change {:.3e}",
                    i + 1,
                    step.loss_after_rotation,
                    step.frame_change
                );
            }
            let status = if m.converged { "converged" } else { "stopped at max_outer" };
            println!("{status} after {} outer iterations", m.history.len());
        }
        Detector::Autoencoder(m) => {
            let last = m.loss_trace.len().saturating_sub(1);
            for (i, loss) in m.loss_trace.iter().enumerate() {
                if i % 100 == 0 || i == last {
                    println!("epoch {:>5}  loss {loss:.6e}", i + 1);
                }
            }
        }
        Detector::Pca(_) | Detector::Kpca(_) => {}
    }
}

fn fit_monitor(method: Method, train: &DataMatrix, fit: &FitArgs) -> Result<ModelEnvelope> {
    ModelEnvelope::train(method, train, fit.dim, &fit.settings(), fit.confidence)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let data = load(&args.data)?;
    let env = fit_monitor(args.method, &data, &args.fit)?;
    print_trace(&env);
    env.save(&args.out)?;
    let l = env.control_limits;
    println!(
        "{} model with {} features written to {} (T2 limit {:.6}, SPE limit {:.6})",
        env.method(),
        env.detector.dim(),
        args.out.display(),
        l.t2_limit,
        l.spe_limit
    );
    Ok(())
}

pub fn monitor(args: &MonitorArgs) -> Result<()> {
    let env = ModelEnvelope::load(&args.model)?;
    let records = match load(&args.data) {
        Ok(data) => env.monitor(&data)?,
        Err(Error::EmptyInput(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    match &args.out {
        Some(path) => write_records(create(path)?, &records, &env.control_limits)?,
        None => write_records(io::stdout().lock(), &records, &env.control_limits)?,
    }
    if args.out.is_some() {
        let count = |f: fn(&MonitorRecord) -> bool| records.iter().filter(|r| f(r)).count();
        println!(
            "{} samples, {} T2 alarms, {} SPE alarms",
            records.len(),
            count(|r| r.t2_alarm),
            count(|r| r.spe_alarm)
        );
    }
    Ok(())
}

fn run_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let train = load(&args.train)?;
    let runs = args
        .tests
        .iter()
        .map(|path| {
            Ok(NamedRun {
                id: run_id(path),
                run: LabeledRun::new(load(path)?, Some(args.onset))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = run_benchmark(&train, &runs, &args.methods.0, args.fit.dim, &args.fit.settings(), args.fit.confidence)?;
    for (method, model) in &report.models {
        if let Err(e) = model {
            log::warn!("{method} failed: {e}");
        }
    }
    println!("p = {}", report.dim);
    print!("{}", render_table(&report.rows));
    if let Some(path) = &args.out {
        write_table_csv(create(path)?, &report.rows)?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let fault = match args.fault {
        FaultArg::None => FaultSpec::none(),
        FaultArg::Step => FaultSpec::step(args.magnitude, args.onset),
        FaultArg::Drift => FaultSpec::drift(args.magnitude, args.onset),
    };
    let (train, test) = generate_synthetic(args.vars, args.train_rows, args.test_rows, &fault, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let (train_path, test_path) = (args.out.join("train.csv"), args.out.join("test.csv"));
    save_csv(&train_path, &train)?;
    save_csv(&test_path, &test.data)?;
    println!("wrote {} and {}", train_path.display(), test_path.display());
    Ok(())
}

fn write_matrix(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn columns(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
}

fn write_nca_diagnostics(out_dir: &Path, model: &NcaModel, scaled: &DataMatrix, epsilon: f64) -> Result<()> {
    let p = model.dim();
    let pca = ncamon::baselines::fit_pca(scaled, p)?;
    let (btb, btu) = orthogonality_report(model, &pca)?;
    let rows = |m: &nalgebra::DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>();
    write_matrix(&out_dir.join("nca_btb.csv"), &columns("c", p), rows(&btb).into_iter())?;
    write_matrix(&out_dir.join("nca_btu.csv"), &columns("u", p), rows(&btu).into_iter())?;

    let mut trace = create(&out_dir.join("nca_loss_trace.csv"))?;
    writeln!(trace, "outer,encoder_loss_start,encoder_loss_end,loss_before_rotation,loss_after_rotation,frame_change,orthonormality_error")?;
    for (i, s) in model.history.iter().enumerate() {
        writeln!(
            trace,
            "{},{},{},{},{},{},{}",
            i + 1,
            s.encoder_loss_start,
            s.encoder_loss_end,
            s.loss_before_rotation,
            s.loss_after_rotation,
            s.frame_change,
            s.orthonormality_error
        )?;
    }
    trace.flush()?;

    let eye = nalgebra::DMatrix::<f64>::identity(p, p);
    let final_change = model.history.last().map_or(f64::NAN, |s| s.frame_change);
    println!(
        "nca: {} outer iterations, final ‖B−B̂‖_F {final_change:.3e} (ε {epsilon:.1e}, {}), ‖BᵀB−I‖_F {:.3e}, ‖BᵀU−I‖_F {:.3e}",
        model.history.len(),
        if model.converged { "converged" } else { "not converged" },
        (&btb - &eye).norm(),
        (&btu - &eye).norm()
    );
    Ok(())
}

pub fn inspect(args: &InspectArgs) -> Result<()> {
    let train = load(&args.data)?;
    let tests = args.tests.iter().map(|p| Ok((run_id(p), load(p)?))).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&args.out)?;
    let fit = args.fit_args();
    let scaled = apply_scaler(&fit_scaler(&train)?, &train)?;

    for &method in &args.methods.0 {
        let env = fit_monitor(method, &train, &fit)?;
        let g = env.detector.extract(&scaled)?;
        let features = PathBuf::from(&args.out).join(format!("features_{method}.csv"));
        write_matrix(&features, &columns("f", g.ncols()), (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()))?;

        let train_records = env.monitor(&train)?;
        write_records(create(&args.out.join(format!("records_{method}_train.csv")))?, &train_records, &env.control_limits)?;
        for (id, data) in &tests {
            let records = env.monitor(data)?;
            write_records(create(&args.out.join(format!("records_{method}_{id}.csv")))?, &records, &env.control_limits)?;
        }

        match &env.detector {
            Detector::Nca(model) => write_nca_diagnostics(&args.out, model, &scaled, env.metadata.settings.nca_epsilon)?,
            Detector::Autoencoder(model) => write_matrix(
                &args.out.join("autoencoder_loss_trace.csv"),
                "epoch,loss",
                model.loss_trace.iter().enumerate().map(|(i, l)| vec![(i + 1) as f64, *l]),
            )?,
            Detector::Pca(_) | Detector::Kpca(_) => {}
        }
        println!(
            "{method}: {} features, T2 limit {:.6}, SPE limit {:.6}",
            g.ncols(),
            env.control_limits.t2_limit,
            env.control_limits.spe_limit
        );
    }
    println!("diagnostics written to {}", args.out.display());
    Ok(())
}
