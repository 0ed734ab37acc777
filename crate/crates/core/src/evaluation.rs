//! Missed-detection and false-alarm rates, the multi-method benchmark and
//! decoder-frame diagnostics.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::PcaModel;
use crate::dataset::{apply_scaler, fit_scaler, DataMatrix, LabeledRun};
use crate::detector::{FitSettings, Method};
use crate::error::{Error, Result};
use crate::monitoring::MonitorRecord;
use crate::nca::NcaModel;
use crate::par;
use crate::pipeline::{DimSpec, ModelEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    T2,
    Spe,
}

fn alarmed(r: &MonitorRecord, stat: Statistic) -> bool {
    match stat {
        Statistic::T2 => r.t2_alarm,
        Statistic::Spe => r.spe_alarm,
    }
}

/// Percentage of rows at or after `onset` that raised no alarm.
pub fn mdr(records: &[MonitorRecord], onset: usize, stat: Statistic) -> Result<f64> {
    if onset >= records.len() {
        return Err(Error::UndefinedMetric(format!(
            "fault region is empty (onset {onset}, {} records)",
            records.len()
        )));
    }
    let region = &records[onset..];
    let misses = region.iter().filter(|r| !alarmed(r, stat)).count();
    Ok((100 * misses) as f64 / region.len() as f64)
}

/// Percentage of rows before `onset` that raised an alarm.
pub fn far(records: &[MonitorRecord], onset: usize, stat: Statistic) -> Result<f64> {
    if onset == 0 {
        return Err(Error::UndefinedMetric("normal region is empty (onset 0)".into()));
    }
    let region = &records[..onset.min(records.len())];
    let alarms = region.iter().filter(|r| alarmed(r, stat)).count();
    Ok((100 * alarms) as f64 / region.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub t2_mdr: f64,
    pub t2_far: f64,
    pub spe_mdr: f64,
    pub spe_far: f64,
}

impl RunMetrics {
    pub fn from_records(records: &[MonitorRecord], onset: usize) -> Result<Self> {
        Ok(Self {
            t2_mdr: mdr(records, onset, Statistic::T2)?,
            t2_far: far(records, onset, Statistic::T2)?,
            spe_mdr: mdr(records, onset, Statistic::Spe)?,
            spe_far: far(records, onset, Statistic::Spe)?,
        })
    }
}

/// One (fault, method) cell; `metrics` is `None` when the method failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub fault_id: String,
    pub method: Method,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedRun {
    pub id: String,
    pub run: LabeledRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub dim: usize,
    pub rows: Vec<BenchmarkRow>,
    /// Fitted monitors in `methods` order; `Err` holds the failure message.
    pub models: Vec<(Method, std::result::Result<ModelEnvelope, String>)>,
}

/// Fits every method once on the scaled training data, then monitors every
/// run. Rows come out ordered by (run, method) in the order given. A method
/// that fails to fit or monitor yields marked rows; the others continue.
pub fn run_benchmark(
    train: &DataMatrix,
    runs: &[NamedRun],
    methods: &[Method],
    dim: DimSpec,
    settings: &FitSettings,
    confidence: f64,
) -> Result<BenchmarkReport> {
    if runs.is_empty() {
        return Err(Error::Config("benchmark needs at least one test run".into()));
    }
    if let Some(r) = runs.iter().find(|r| r.run.fault_onset.is_none()) {
        return Err(Error::Config(format!("run {:?} has no fault onset", r.id)));
    }
    let scaler = fit_scaler(train)?;
    let scaled = apply_scaler(&scaler, train)?;
    let p = dim.resolve(&scaled)?;

    let models: Vec<_> = par::map_indices(methods.len(), |m| {
        ModelEnvelope::train_scaled(methods[m], scaler.clone(), &scaled, p, dim, settings, confidence)
            .map_err(|e| e.to_string())
    });

    let cells = runs.len() * methods.len();
    let rows = par::map_indices(cells, |cell| {
        let (r, m) = (cell / methods.len(), cell % methods.len());
        let run = &runs[r];
        let outcome = models[m].as_ref().map_err(Clone::clone).and_then(|model| {
            let onset = run.run.fault_onset.expect("checked above");
            model
                .monitor(&run.run.data)
                .and_then(|recs| RunMetrics::from_records(&recs, onset))
                .map_err(|e| e.to_string())
        });
        BenchmarkRow {
            fault_id: run.id.clone(),
            method: methods[m],
            metrics: outcome.as_ref().ok().copied(),
            error: outcome.err(),
        }
    });

    Ok(BenchmarkReport {
        dim: p,
        rows,
        models: methods.iter().copied().zip(models).collect(),
    })
}

pub const TABLE_CSV_HEADER: &str = "fault,method,t2_mdr,t2_far,spe_mdr,spe_far,error";

pub fn write_table_csv<W: Write>(mut out: W, rows: &[BenchmarkRow]) -> Result<()> {
    writeln!(out, "{TABLE_CSV_HEADER}")?;
    for r in rows {
        match (&r.metrics, &r.error) {
            (Some(m), _) => writeln!(
                out,
                "{},{},{},{},{},{},",
                r.fault_id, r.method, m.t2_mdr, m.t2_far, m.spe_mdr, m.spe_far
            )?,
            (None, err) => writeln!(
                out,
                "{},{},,,,,\"{}\"",
                r.fault_id,
                r.method,
                err.as_deref().unwrap_or("failed").replace('"', "'")
            )?,
        }
    }
    out.flush()?;
    Ok(())
}

/// A cell is a candidate for "best" only when it detects better than chance
/// without flooding operators: MDR < 50% and FAR ≤ 5%.
pub fn is_acceptable(mdr: f64, far: f64) -> bool {
    mdr < 50.0 && far <= 5.0
}

/// Aligned text table, one line per fault, with `MDR(FAR)` cells for T² and
/// SPE of each method. The lowest acceptable MDR on each line is starred.
pub fn render_table(rows: &[BenchmarkRow]) -> String {
    let mut faults: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !faults.contains(&r.fault_id.as_str()) {
            faults.push(&r.fault_id);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }

    let mut header = vec!["fault".to_string()];
    for m in &methods {
        header.push(format!("{m} T2"));
        header.push(format!("{m} SPE"));
    }
    let mut lines = vec![header];
    for f in &faults {
        let mut cells: Vec<(Option<(f64, f64)>, String)> = Vec::new();
        for m in &methods {
            let row = rows.iter().find(|r| r.fault_id == *f && r.method == *m);
            match row.and_then(|r| r.metrics) {
                Some(x) => {
                    cells.push((Some((x.t2_mdr, x.t2_far)), format!("{:.2}({:.2})", x.t2_mdr, x.t2_far)));
                    cells.push((Some((x.spe_mdr, x.spe_far)), format!("{:.2}({:.2})", x.spe_mdr, x.spe_far)));
                }
                None => {
                    cells.push((None, "failed".into()));
                    cells.push((None, "failed".into()));
                }
            }
        }
        let best = cells
            .iter()
            .filter_map(|(v, _)| *v)
            .filter(|&(m, f)| is_acceptable(m, f))
            .map(|(m, _)| m)
            .fold(f64::INFINITY, f64::min);
        let mut line = vec![f.to_string()];
        for (v, text) in cells {
            let star = matches!(v, Some((m, f)) if m == best && is_acceptable(m, f));
            line.push(if star { format!("*{text}") } else { text });
        }
        lines.push(line);
    }

    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &lines {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// `(BᵀB, BᵀU)` for an NCA frame `B` and PCA loadings `U`.
pub fn orthogonality_report(model: &NcaModel, pca: &PcaModel) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if model.b.shape() != pca.loadings.shape() {
        return Err(Error::Shape(format!(
            "NCA frame is {:?}, PCA loadings are {:?}",
            model.b.shape(),
            pca.loadings.shape()
        )));
    }
    Ok((model.b.transpose() * &model.b, model.b.transpose() * &pca.loadings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(alarms: &[bool]) -> Vec<MonitorRecord> {
        alarms
            .iter()
            .enumerate()
            .map(|(i, &a)| MonitorRecord {
                sample_index: i,
                t2: 0.0,
                spe: 0.0,
                t2_alarm: a,
                spe_alarm: !a,
            })
            .collect()
    }

    #[test]
    fn mdr_far_boundaries() {
        let all = records(&[true; 10]);
        assert_eq!(mdr(&all, 4, Statistic::T2).unwrap(), 0.0);
        assert_eq!(mdr(&all, 4, Statistic::Spe).unwrap(), 100.0);
        assert_eq!(far(&all, 4, Statistic::T2).unwrap(), 100.0);
        assert_eq!(far(&all, 4, Statistic::Spe).unwrap(), 0.0);
        assert!(matches!(mdr(&all, 10, Statistic::T2), Err(Error::UndefinedMetric(_))));
        assert!(matches!(far(&all, 0, Statistic::T2), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn far_arithmetic() {
        let mut a = vec![false; 170];
        for x in a.iter_mut().take(8) {
            *x = true;
        }
        assert_eq!(far(&records(&a), 160, Statistic::T2).unwrap(), 5.0);
    }

    #[test]
    fn table_stars_best_acceptable_cell() {
        let row = |m, t2_mdr, t2_far, spe_mdr, spe_far| BenchmarkRow {
            fault_id: "1".into(),
            method: m,
            metrics: Some(RunMetrics { t2_mdr, t2_far, spe_mdr, spe_far }),
            error: None,
        };
        let rows = vec![
            row(Method::Pca, 0.5, 4.38, 0.13, 20.6),
            row(Method::Nca, 0.5, 0.0, 0.75, 0.0),
            BenchmarkRow {
                fault_id: "1".into(),
                method: Method::Kpca,
                metrics: None,
                error: Some("boom".into()),
            },
        ];
        let text = render_table(&rows);
        assert!(text.contains("*0.50(4.38)"));
        assert!(text.contains("*0.50(0.00)"));
        assert!(text.contains("0.13(20.60)") && !text.contains("*0.13"));
        assert!(text.contains("failed"));

        let mut csv = Vec::new();
        write_table_csv(&mut csv, &rows).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.contains("1,pca,0.5,4.38,0.13,20.6,"));
        assert!(csv.contains("1,kpca,,,,,\"boom\""));
    }
}
