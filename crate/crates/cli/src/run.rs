//! Orchestration: boundary construction, the alpha sweep, baselines, and
//! output files.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use c3l_core::geometry::embed_discriminant;
use c3l_core::{evaluation, optimizer, DataMatrix, Hyperplane, OptimizerConfig};

use crate::args::{Args, Baseline};
use crate::document::{self, DocMeta, SummaryRow};
use crate::ingest;
use crate::CliError;

pub fn execute(args: &Args) -> Result<(), CliError> {
    let alphas = parse_alpha_list(&args.alpha)?;
    if args.hyperplane.is_some() == args.discriminant_col.is_some() {
        return Err(CliError::input(
            "exactly one boundary form is required: --hyperplane, or --discriminant-col with --threshold",
        ));
    }
    if args.discriminant_col.is_some() != args.threshold.is_some() {
        return Err(CliError::input(
            "--discriminant-col and --threshold go together",
        ));
    }

    let dataset = ingest::ingest(
        &args.input,
        args.features.as_deref(),
        args.labels.as_deref(),
        args.discriminant_col.as_deref(),
    )?;

    let (data, hyperplane) = match (&args.hyperplane, &dataset.discriminant) {
        (Some(spec), None) => {
            let hp = parse_hyperplane(spec, dataset.data.cols())?;
            (dataset.data.clone(), hp)
        }
        (None, Some(disc)) => {
            let threshold = args.threshold.expect("validated above");
            embed_discriminant(disc, threshold, &dataset.data).map_err(CliError::Core)?
        }
        _ => unreachable!("boundary form validated above"),
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", args.out.display())))?;

    let meta = DocMeta {
        features: &dataset.feature_names,
        discriminant: args.discriminant_col.as_deref(),
        threshold: args.threshold,
    };
    let labels = dataset.labels.as_deref();
    let mut rows: Vec<SummaryRow> = Vec::new();

    for &alpha in &alphas {
        let cfg = config(args, alpha);
        let result = optimizer::run(&data, &hyperplane, &cfg).map_err(CliError::Core)?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        let report = evaluation::report(&result, &data, labels).map_err(CliError::Core)?;
        let name = format!("c3l_alpha{alpha:.4}.jsonl");
        write_doc(&args.out.join(name), &result, &report, &meta)?;
        println!(
            "c3l alpha={alpha:.4}: cost {:.6}, bic {:.3}, k {}, max leakage {:.6}",
            result.cost, report.bic, report.final_k, report.max_leakage
        );
        rows.push(SummaryRow {
            alpha,
            method: result.method.to_string(),
            cost: result.cost,
            bic: report.bic,
            nmi: report.nmi,
            max_leakage: report.max_leakage,
            final_k: report.final_k,
        });
    }

    for baseline in &args.baseline {
        let cfg = config(args, 0.5);
        let result = match baseline {
            Baseline::Cec => optimizer::run_cec(&data, &hyperplane, &cfg),
            Baseline::CecH => optimizer::run_cec_h(&data, &hyperplane, &cfg),
        }
        .map_err(CliError::Core)?;
        let report = evaluation::report(&result, &data, labels).map_err(CliError::Core)?;
        let name = format!("{}.jsonl", result.method);
        write_doc(&args.out.join(name), &result, &report, &meta)?;
        println!(
            "{} baseline: cost {:.6}, bic {:.3}, k {}, max leakage {:.6}",
            result.method, result.cost, report.bic, report.final_k, report.max_leakage
        );
        rows.push(SummaryRow {
            // baselines sit on the alpha axis at their effective leakage
            alpha: report.max_leakage,
            method: result.method.to_string(),
            cost: result.cost,
            bic: report.bic,
            nmi: report.nmi,
            max_leakage: report.max_leakage,
            final_k: report.final_k,
        });
    }

    rows.sort_by(|a, b| {
        a.alpha
            .partial_cmp(&b.alpha)
            .expect("alphas are finite")
            .then_with(|| a.method.cmp(&b.method))
    });
    let summary_path = args.out.join("summary.csv");
    let file = fs::File::create(&summary_path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", summary_path.display())))?;
    let mut out = BufWriter::new(file);
    document::write_summary(&mut out, &rows)?;
    let noun = if rows.len() == 1 {
        "document"
    } else {
        "documents"
    };
    println!("wrote {} result {noun} and summary.csv", rows.len());
    Ok(())
}

fn config(args: &Args, alpha: f64) -> OptimizerConfig {
    OptimizerConfig::new(args.k, alpha, args.seed)
        .with_restarts(args.restarts)
        .with_max_sweeps(args.max_sweeps)
}

fn write_doc(
    path: &Path,
    result: &c3l_core::ClusteringResult,
    report: &c3l_core::EvaluationReport,
    meta: &DocMeta<'_>,
) -> Result<(), CliError> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    document::write_document(&mut out, result, report, meta)
}

fn parse_alpha_list(spec: &str) -> Result<Vec<f64>, CliError> {
    let mut alphas = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = item
            .parse()
            .map_err(|_| CliError::input(format!("alpha '{item}' is not a number")))?;
        if !(v > 0.0 && v <= 0.5) {
            return Err(CliError::input(format!("alpha {v} is outside (0, 0.5]")));
        }
        alphas.push(v);
    }
    if alphas.is_empty() {
        return Err(CliError::input("alpha list is empty"));
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    alphas.dedup();
    Ok(alphas)
}

fn parse_hyperplane(spec: &str, dim: usize) -> Result<Hyperplane, CliError> {
    let (coeffs, offset) = spec
        .split_once(';')
        .ok_or_else(|| CliError::input("hyperplane must look like \"h1,...,hN;a\""))?;
    let normal: Vec<f64> = coeffs
        .split(',')
        .map(|c| {
            c.trim().parse::<f64>().map_err(|_| {
                CliError::input(format!("hyperplane coefficient '{c}' is not a number"))
            })
        })
        .collect::<Result<_, _>>()?;
    if normal.len() != dim {
        return Err(CliError::input(format!(
            "hyperplane has {} coefficients for {dim} feature columns",
            normal.len()
        )));
    }
    let offset: f64 = offset
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("hyperplane offset '{offset}' is not a number")))?;
    Hyperplane::new(normal, offset).map_err(CliError::Core)
}

/// Re-derives a document's stored cost from its assignment plus the raw
/// data; exposed for the round-trip checks.
pub fn verify_document(path: &Path, data: &DataMatrix) -> Result<(f64, f64), CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = std::io::BufReader::new(file);
    let doc = document::parse_document(&mut reader)?;
    let recomputed = document::recompute_cost(&doc, data)?;
    Ok((doc.run.cost, recomputed))
}
