//! Line-delimited result documents and the summary table.
//!
//! Each run writes one document: a `run` record, one `cluster` record per
//! component, the sweep trace, removal events, and the full assignment, one
//! JSON object per line under a versioned `schema` tag. Documents parse back
//! into plain records so stored costs can be re-derived from the assignment
//! and the original data.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use c3l_core::evaluation::EvaluationReport;
use c3l_core::model::{self, GaussianNd, Partition};
use c3l_core::{ClusteringResult, ConstrainedGaussian1d, DataMatrix, Hyperplane};

use crate::CliError;

pub const SCHEMA: &str = "c3l-result/1";

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub record: String,
    pub method: String,
    pub alpha: f64,
    pub seed: u64,
    pub k_init: usize,
    pub restarts: usize,
    pub n: usize,
    pub dim: usize,
    pub features: Vec<String>,
    pub discriminant: Option<String>,
    pub threshold: Option<f64>,
    pub hyperplane_normal: Vec<f64>,
    pub hyperplane_offset: f64,
    pub cost: f64,
    pub bic: f64,
    pub log_likelihood: f64,
    pub free_params: usize,
    pub nmi: Option<f64>,
    pub max_leakage: f64,
    pub final_k: usize,
    pub best_restart: usize,
    pub restart_costs: Vec<Option<f64>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub schema: String,
    pub record: String,
    pub index: usize,
    pub prior: f64,
    pub count: usize,
    pub g1_mean: f64,
    pub g1_std: f64,
    pub g1_p_alpha: f64,
    pub g1_constrained: bool,
    pub leakage: f64,
    pub rest_mean: Vec<f64>,
    pub rest_covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepLine {
    pub schema: String,
    pub record: String,
    pub sweep: usize,
    pub moves: usize,
    pub removed: usize,
    pub cost_after_moves: f64,
    pub cost: f64,
    pub k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RemovalLine {
    pub schema: String,
    pub record: String,
    pub sweep: usize,
    pub cluster: usize,
    pub size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub schema: String,
    pub record: String,
    pub assignment: Vec<usize>,
}

/// Context the document keeps about how the analysis frame was built.
pub struct DocMeta<'a> {
    pub features: &'a [String],
    pub discriminant: Option<&'a str>,
    pub threshold: Option<f64>,
}

pub fn write_document(
    out: &mut dyn Write,
    result: &ClusteringResult,
    report: &EvaluationReport,
    meta: &DocMeta<'_>,
) -> Result<(), CliError> {
    let n = result.assignment.len();
    let mut counts = vec![0usize; result.models.len()];
    for &c in &result.assignment {
        counts[c] += 1;
    }
    let run = RunRecord {
        schema: SCHEMA.to_string(),
        record: "run".to_string(),
        method: result.method.to_string(),
        alpha: result.alpha,
        seed: result.seed,
        k_init: result.k_init,
        restarts: result.restarts,
        n,
        dim: result.hyperplane.dim(),
        features: meta.features.to_vec(),
        discriminant: meta.discriminant.map(|s| s.to_string()),
        threshold: meta.threshold,
        hyperplane_normal: result.hyperplane.normal().to_vec(),
        hyperplane_offset: result.hyperplane.offset(),
        cost: result.cost,
        bic: report.bic,
        log_likelihood: report.log_likelihood,
        free_params: report.free_params,
        nmi: report.nmi,
        max_leakage: report.max_leakage,
        final_k: result.models.len(),
        best_restart: result.best_restart,
        restart_costs: result.restart_costs.clone(),
        converged: result.trace.converged,
        warnings: result.warnings.clone(),
    };
    write_line(out, &run)?;

    for (index, m) in result.models.iter().enumerate() {
        let (rest_mean, rest_covariance) = match &m.rest {
            Some(g) => {
                let d = g.dim();
                let nested: Vec<Vec<f64>> = (0..d)
                    .map(|i| g.covariance()[i * d..(i + 1) * d].to_vec())
                    .collect();
                (g.mean().to_vec(), nested)
            }
            None => (Vec::new(), Vec::new()),
        };
        write_line(
            out,
            &ClusterRecord {
                schema: SCHEMA.to_string(),
                record: "cluster".to_string(),
                index,
                prior: m.prior,
                count: counts[index],
                g1_mean: m.g1.mean,
                g1_std: m.g1.std,
                g1_p_alpha: m.g1.p_alpha,
                g1_constrained: m.g1.constrained,
                leakage: m.leakage(),
                rest_mean,
                rest_covariance,
            },
        )?;
    }

    for s in &result.trace.sweeps {
        write_line(
            out,
            &SweepLine {
                schema: SCHEMA.to_string(),
                record: "sweep".to_string(),
                sweep: s.sweep,
                moves: s.moves,
                removed: s.removed,
                cost_after_moves: s.cost_after_moves,
                cost: s.cost,
                k: s.k,
            },
        )?;
    }
    for r in &result.trace.removals {
        write_line(
            out,
            &RemovalLine {
                schema: SCHEMA.to_string(),
                record: "removal".to_string(),
                sweep: r.sweep,
                cluster: r.cluster,
                size: r.size,
            },
        )?;
    }
    write_line(
        out,
        &AssignmentRecord {
            schema: SCHEMA.to_string(),
            record: "assignments".to_string(),
            assignment: result.assignment.clone(),
        },
    )?;
    Ok(())
}

fn write_line<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    out.write_all(b"\n")
        .map_err(|e| CliError::input(format!("write failed: {e}")))?;
    Ok(())
}

pub struct ParsedDocument {
    pub run: RunRecord,
    pub clusters: Vec<ClusterRecord>,
    pub sweeps: Vec<SweepLine>,
    pub assignment: Vec<usize>,
}

pub fn parse_document(input: &mut dyn BufRead) -> Result<ParsedDocument, CliError> {
    let mut run: Option<RunRecord> = None;
    let mut clusters = Vec::new();
    let mut sweeps = Vec::new();
    let mut assignment: Option<Vec<usize>> = None;
    for (no, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CliError::input(format!("read failed: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let tag: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| CliError::input(format!("line {}: invalid JSON: {e}", no + 1)))?;
        if tag.get("schema").and_then(|v| v.as_str()) != Some(SCHEMA) {
            return Err(CliError::input(format!(
                "line {}: unknown schema {:?}",
                no + 1,
                tag.get("schema")
            )));
        }
        match tag.get("record").and_then(|v| v.as_str()) {
            Some("run") => run = Some(from_line(&line, no)?),
            Some("cluster") => clusters.push(from_line(&line, no)?),
            Some("sweep") => sweeps.push(from_line(&line, no)?),
            Some("removal") => {}
            Some("assignments") => {
                let rec: AssignmentRecord = from_line(&line, no)?;
                assignment = Some(rec.assignment);
            }
            other => {
                return Err(CliError::input(format!(
                    "line {}: unknown record kind {other:?}",
                    no + 1
                )))
            }
        }
    }
    Ok(ParsedDocument {
        run: run.ok_or_else(|| CliError::input("document has no run record"))?,
        clusters,
        sweeps,
        assignment: assignment
            .ok_or_else(|| CliError::input("document has no assignments record"))?,
    })
}

fn from_line<T: for<'de> Deserialize<'de>>(line: &str, no: usize) -> Result<T, CliError> {
    serde_json::from_str(line)
        .map_err(|e| CliError::input(format!("line {}: malformed record: {e}", no + 1)))
}

/// Rebuilds the stored models and recomputes the total cost of the stored
/// assignment against the given data, in the document's own frame.
pub fn recompute_cost(doc: &ParsedDocument, data: &DataMatrix) -> Result<f64, CliError> {
    let hp = Hyperplane::new(doc.run.hyperplane_normal.clone(), doc.run.hyperplane_offset)
        .map_err(CliError::Core)?;
    let canonical = hp
        .canonicalize()
        .apply_matrix(data)
        .map_err(CliError::Core)?;
    let k = doc.clusters.len();
    let partition = Partition::from_assignment(&canonical, doc.assignment.clone(), k)
        .map_err(CliError::Core)?;
    let n = doc.assignment.len() as f64;
    let mut total = 0.0;
    for c in &doc.clusters {
        let g1 = ConstrainedGaussian1d {
            mean: c.g1_mean,
            std: c.g1_std,
            p_alpha: c.g1_p_alpha,
            constrained: c.g1_constrained,
        };
        let rest = if c.rest_mean.is_empty() {
            None
        } else {
            let d = c.rest_mean.len();
            let mut flat = Vec::with_capacity(d * d);
            for row in &c.rest_covariance {
                flat.extend_from_slice(row);
            }
            Some(GaussianNd::new(c.rest_mean.clone(), flat).map_err(CliError::Core)?)
        };
        let m = c3l_core::ClusterModel {
            prior: c.prior,
            g1,
            rest,
        };
        let stats = partition.stats(c.index);
        let p = stats.count() as f64 / n;
        total += p * (-p.ln() + model::cluster_cost(stats, &m).map_err(CliError::Core)?);
    }
    Ok(total)
}

/// One summary row; baselines sit on the alpha axis at their measured
/// leakage.
#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub alpha: f64,
    pub method: String,
    pub cost: f64,
    pub bic: f64,
    pub nmi: Option<f64>,
    pub max_leakage: f64,
    pub final_k: usize,
}

pub fn write_summary(out: &mut dyn Write, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::input(format!("summary write failed: {e}")))?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("summary flush failed: {e}")))?;
    Ok(())
}
