use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use hyperfa::datasim::{generate, Partition, SimDesign};
use hyperfa::rng::substream;
use hyperfa::selection::{select, SelectionGrid};
use hyperfa::{
    ari, bic_table_csv, fit, fit_classify, hold_out_unlabel, AitkenTarget, Error, Family, FitConfig, FitReport, Init,
    ModelRecord, PartialLabels, StartStatus,
};

use crate::args::{AitkenArg, ClassifyArgs, EvaluateArgs, FamilyArg, FitArgs, FitOptions, InitArg, ReplayArgs, SimulateArgs};
use crate::manifest::{file_sha256, ArtifactWriter, Fingerprint, RecordedCommand, RunManifest, Versions};
use crate::table::{assignment_csv, class_names, quote, read_dataset, read_labels, Dataset};
use crate::Failure;

pub type Outcome = Result<(), Failure>;

/// Input and schema problems.
fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

/// Library errors: bad arguments are input errors, the rest are fit failures.
fn library(e: Error) -> Failure {
    match e {
        Error::Input(_) | Error::Dimension(_) => Failure::Input(e.into()),
        Error::FitFailure(ref reasons) => {
            for reason in reasons {
                eprintln!("{reason}");
            }
            Failure::Fit(e.into())
        }
        _ => Failure::Fit(e.into()),
    }
}

fn config(options: &FitOptions) -> FitConfig {
    FitConfig {
        max_iter: options.max_iter,
        epsilon: options.epsilon,
        n_starts: options.starts,
        init: match options.init {
            InitArg::Kmeans => Init::KMeans,
            InitArg::Random => Init::Random,
        },
        seed: options.seed,
        aitken_target: match options.aitken_target {
            AitkenArg::Latest => AitkenTarget::Latest,
            AitkenArg::Previous => AitkenTarget::Previous,
        },
        threads: options.threads,
        ..FitConfig::default()
    }
}

fn fingerprint(path: &Path, data: &Dataset) -> Result<Fingerprint, Failure> {
    Ok(Fingerprint {
        path: path.to_path_buf(),
        sha256: file_sha256(path).map_err(input)?,
        rows: data.matrix.n(),
        columns: data.matrix.p(),
    })
}

fn absolute(path: &Path) -> Result<PathBuf, Failure> {
    fs::canonicalize(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(input)
}

fn warn_failed_starts(report: &FitReport) {
    for s in &report.starts {
        if let StartStatus::Failed(reason) = &s.status {
            log::warn!("G={} q={} start {}: {reason}", report.g, report.q, s.start);
        }
    }
}

fn model_json(report: &FitReport) -> Result<String, Failure> {
    let record = ModelRecord::from_model(&report.model, report.loglik, report.bic);
    Ok(serde_json::to_string_pretty(&record).map_err(|e| Failure::Fit(e.into()))? + "\n")
}

pub fn cmd_fit(mut args: FitArgs) -> Outcome {
    let start = Instant::now();
    args.options.data = absolute(&args.options.data)?;
    let data = read_dataset(&args.options.data, "label").map_err(input)?;
    let config = config(&args.options);
    let mut out = ArtifactWriter::new(&args.options.out).map_err(input)?;

    let gs = args.g_range.map_or_else(|| vec![args.g.unwrap_or(1)], |r| (r.lo..=r.hi).collect());
    let qs = args.options.q_range.map_or_else(|| vec![args.options.q.unwrap_or(1)], |r| (r.lo..=r.hi).collect());
    let report = if args.g_range.is_some() || args.options.q_range.is_some() {
        let grid = SelectionGrid::new(gs, qs, data.matrix.p()).map_err(library)?;
        let selection = select(&data.matrix, &grid, &config).map_err(library)?;
        for row in &selection.table {
            if row.bic.is_none() {
                log::warn!("G={} q={}: {}", row.g, row.q, row.status.label());
            }
        }
        out.write("bic.csv", &bic_table_csv(&selection.table)).map_err(input)?;
        selection.best
    } else {
        fit(&data.matrix, gs[0], qs[0], &config).map_err(library)?
    };
    warn_failed_starts(&report);

    let responsibility = report.max_responsibility();
    let labels = assignment_csv(
        "component",
        data.row_ids
            .iter()
            .zip(&report.labels)
            .zip(&responsibility)
            .map(|((id, &c), &r)| (id.as_str(), (c + 1).to_string(), r)),
    );
    out.write("labels.csv", &labels).map_err(input)?;
    out.write("model.json", &model_json(&report)?).map_err(input)?;
    println!(
        "G={} q={} loglik={:.6} bic={:.6} iterations={} converged={}",
        report.g, report.q, report.loglik, report.bic, report.iterations, report.converged
    );

    let manifest = RunManifest {
        seed: args.options.seed,
        dataset: Some(fingerprint(&args.options.data, &data)?),
        command: RecordedCommand::Fit(args),
        versions: Versions::default(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        artifacts: Default::default(),
    };
    out.finish(manifest).map_err(input)?;
    Ok(())
}

pub fn cmd_classify(mut args: ClassifyArgs) -> Outcome {
    let start = Instant::now();
    args.options.data = absolute(&args.options.data)?;
    let data = read_dataset(&args.options.data, &args.label_column).map_err(input)?;
    let Some(cells) = &data.labels else {
        return Err(input(anyhow!(
            "{}: no '{}' column",
            args.options.data.display(),
            args.label_column
        )));
    };
    let names = class_names(cells.iter().flatten().map(String::as_str));
    let index = |s: &String| names.iter().position(|n| n == s).expect("name was collected");
    let g = args.g.unwrap_or(names.len());
    if names.len() > g {
        return Err(input(anyhow!("{} distinct labels but G = {g}", names.len())));
    }

    let (labels, truth) = match args.unlabel_frac {
        Some(frac) => {
            if cells.iter().any(Option::is_none) {
                return Err(input(anyhow!("--unlabel-frac needs every row labelled")));
            }
            let truth: Vec<usize> = cells.iter().flatten().map(index).collect();
            let mut rng = substream(args.options.seed, "holdout", 0);
            let labels = hold_out_unlabel(&truth, frac, &mut rng).map_err(library)?;
            (labels, Some(truth))
        }
        None => (PartialLabels::new(cells.iter().map(|c| c.as_ref().map(index)).collect()), None),
    };
    let class_name = |c: usize| names.get(c).cloned().unwrap_or_else(|| (c + 1).to_string());
    let config = config(&args.options);
    let mut out = ArtifactWriter::new(&args.options.out).map_err(input)?;
    let report = fit_classify(&data.matrix, &labels, g, args.options.q.unwrap_or(1), &config)
        .map_err(library)?;
    warn_failed_starts(&report.fit);

    if report.unlabelled.is_empty() {
        log::warn!("no unlabelled rows; the predictions file is empty");
    }
    let predictions = assignment_csv(
        "class",
        report
            .unlabelled
            .iter()
            .zip(&report.predicted)
            .zip(&report.confidence)
            .map(|((&i, &c), &r)| (data.row_ids[i].as_str(), quote(&class_name(c)), r)),
    );
    out.write("predictions.csv", &predictions).map_err(input)?;
    out.write("model.json", &model_json(&report.fit)?).map_err(input)?;
    println!(
        "G={g} q={} loglik={:.6} bic={:.6} unlabelled={}",
        report.fit.q,
        report.fit.loglik,
        report.fit.bic,
        report.unlabelled.len()
    );
    if let Some(truth) = truth {
        if !report.unlabelled.is_empty() {
            let hidden: Vec<usize> = report.unlabelled.iter().map(|&i| truth[i]).collect();
            let score = ari(&Partition::new(hidden), &Partition::new(report.predicted.clone())).map_err(library)?;
            println!("ARI {score:.6}");
        }
    }

    let manifest = RunManifest {
        seed: args.options.seed,
        dataset: Some(fingerprint(&args.options.data, &data)?),
        command: RecordedCommand::Classify(args),
        versions: Versions::default(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        artifacts: Default::default(),
    };
    out.finish(manifest).map_err(input)?;
    Ok(())
}

pub fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let start = Instant::now();
    if args.g == 0 || args.n % args.g != 0 {
        return Err(input(anyhow!("n = {} is not a multiple of G = {}", args.n, args.g)));
    }
    let family = match args.family {
        FamilyArg::Gaussian => Family::Gaussian,
        FamilyArg::SkewNormal => Family::SkewNormal,
        FamilyArg::Gh => Family::Gh,
    };
    let mut design = SimDesign::new(family, args.p, args.g, args.n / args.g, args.seed);
    design.correlated = args.correlated;
    let (data, truth) = generate(&design).map_err(library)?;

    let mut csv = String::from("id");
    for j in 1..=args.p {
        let _ = write!(csv, ",x{j}");
    }
    csv.push('\n');
    for (i, row) in data.rows().iter().enumerate() {
        let _ = write!(csv, "{}", i + 1);
        for v in row.iter() {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    let mut labels = String::from("row_id,label\n");
    for (i, l) in truth.labels.iter().enumerate() {
        let _ = writeln!(labels, "{},{l}", i + 1);
    }

    let mut out = ArtifactWriter::new(&args.out).map_err(input)?;
    out.write("data.csv", &csv).map_err(input)?;
    out.write("truth.csv", &labels).map_err(input)?;
    let manifest = RunManifest {
        seed: args.seed,
        dataset: None,
        command: RecordedCommand::Simulate(args),
        versions: Versions::default(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        artifacts: Default::default(),
    };
    out.finish(manifest).map_err(input)?;
    Ok(())
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Outcome {
    let truth = read_labels(&args.truth).map_err(input)?;
    let predicted = read_labels(&args.predicted).map_err(input)?;
    let (a, b): (Vec<&str>, Vec<&str>) = match (&truth.row_ids, &predicted.row_ids) {
        (Some(tid), Some(pid)) => {
            let lookup: std::collections::HashMap<&str, &str> =
                tid.iter().map(String::as_str).zip(truth.labels.iter().map(String::as_str)).collect();
            let mut pairs = Vec::with_capacity(pid.len());
            for (id, label) in pid.iter().zip(&predicted.labels) {
                let t = lookup
                    .get(id.as_str())
                    .ok_or_else(|| input(anyhow!("row_id '{id}' is not in {}", args.truth.display())))?;
                pairs.push((*t, label.as_str()));
            }
            pairs.into_iter().unzip()
        }
        _ => {
            if truth.labels.len() != predicted.labels.len() {
                return Err(input(anyhow!(
                    "{} rows against {} rows",
                    truth.labels.len(),
                    predicted.labels.len()
                )));
            }
            (
                truth.labels.iter().map(String::as_str).collect(),
                predicted.labels.iter().map(String::as_str).collect(),
            )
        }
    };
    if a.is_empty() {
        return Err(input(anyhow!("no rows to compare")));
    }
    let encode = |v: &[&str]| {
        let names = class_names(v.iter().copied());
        Partition::new(v.iter().map(|s| names.iter().position(|n| n == s).unwrap() + 1).collect())
    };
    let score = ari(&encode(&a), &encode(&b)).map_err(library)?;
    println!("{score:.6}");
    Ok(())
}

pub fn cmd_replay(args: ReplayArgs) -> Outcome {
    let recorded = RunManifest::load(&args.manifest).map_err(input)?;
    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => args
            .manifest
            .parent()
            .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
            .unwrap_or(Path::new("."))
            .to_path_buf(),
    };
    if let Some(fp) = &recorded.dataset {
        let now = file_sha256(&fp.path).map_err(input)?;
        if now != fp.sha256 {
            return Err(input(anyhow!("{} changed since the run was recorded", fp.path.display())));
        }
    }
    let threads = |t: &mut usize| {
        if let Some(n) = args.threads {
            *t = n;
        }
    };
    match recorded.command.clone() {
        RecordedCommand::Fit(mut a) => {
            a.options.out = out_dir.clone();
            threads(&mut a.options.threads);
            cmd_fit(a)?
        }
        RecordedCommand::Classify(mut a) => {
            a.options.out = out_dir.clone();
            threads(&mut a.options.threads);
            cmd_classify(a)?
        }
        RecordedCommand::Simulate(mut a) => {
            a.out = out_dir.clone();
            cmd_simulate(a)?
        }
    }

    let mut differing = Vec::new();
    for (name, hash) in &recorded.artifacts {
        let now = file_sha256(&out_dir.join(name)).map_err(input)?;
        if &now != hash {
            differing.push(name.as_str());
        }
    }
    if differing.is_empty() {
        println!("replay: {} artifacts identical", recorded.artifacts.len());
        Ok(())
    } else {
        Err(Failure::Fit(anyhow!("replay differs in {}", differing.join(", "))))
    }
}
