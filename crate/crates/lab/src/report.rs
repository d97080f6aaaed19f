//! Aggregates results CSVs into episode summaries and audits every row.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use adl_core::metrics::{empirical_breakdown, instance_bound, path_variation, EpisodeMetrics};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::runner::{ResultRow, RESULT_COLUMNS};

fn parse_row(path: &Path, line: u64, rec: &csv::StringRecord) -> Result<ResultRow> {
    let bad = |col: &str, msg: String| LabError::Schema { path: path.into(), row: line, column: col.into(), message: msg };
    if rec.len() != RESULT_COLUMNS.len() {
        return Err(bad("", format!("expected {} fields, found {}", RESULT_COLUMNS.len(), rec.len())));
    }
    let num = |i: usize| -> Result<f64> {
        rec[i].parse::<f64>().map_err(|_| bad(RESULT_COLUMNS[i], format!("`{}` is not a number", &rec[i])))
    };
    Ok(ResultRow {
        policy: rec[0].to_string(),
        round: rec[1].parse().map_err(|_| bad("round", format!("`{}` is not a round id", &rec[1])))?,
        delta_horizon: num(2)?,
        executed: num(3)?,
        b_needed: num(4)?,
        tracking: num(5)?,
        overshoot: num(6)?,
        undershoot: num(7)?,
        fairness: num(8)?,
        m: num(9)?,
        m_ilp: num(10)?,
        loss_total: num(11)?,
        lambda: num(12)?,
        deficit: num(13)?,
        theta_needed: num(14)?,
    })
}

/// Reads a results file, checking the header.
pub fn read_results(path: &Path) -> Result<Vec<(u64, ResultRow)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| LabError::File { path: path.into(), message: e.to_string() })?;
    let header = reader.headers().map_err(|e| LabError::File { path: path.into(), message: e.to_string() })?;
    if header.iter().ne(RESULT_COLUMNS.iter().copied()) {
        return Err(LabError::Schema {
            path: path.into(),
            row: 1,
            column: String::new(),
            message: format!("header must be {}", RESULT_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| LabError::File { path: path.into(), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, parse_row(path, line, &rec)?));
    }
    Ok(out)
}

/// First column whose stored value differs from its recomputation.
pub fn audit_row(row: &ResultRow) -> Option<&'static str> {
    let e = empirical_breakdown(row.executed, row.b_needed, row.m, row.m_ilp, row.lambda);
    let checks = [
        ("tracking", row.tracking, e.tracking),
        ("overshoot", row.overshoot, (row.executed - row.b_needed).max(0.0)),
        ("undershoot", row.undershoot, (row.b_needed - row.executed).max(0.0)),
        ("fairness", row.fairness, e.fairness),
        ("loss_total", row.loss_total, e.total),
    ];
    checks.into_iter().find(|(_, stored, recomputed)| stored.to_bits() != recomputed.to_bits()).map(|c| c.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub rows_audited: usize,
    /// Regrets that need allocations (static, dynamic, decomposition) are absent.
    pub episodes: Vec<EpisodeMetrics>,
}

/// Lists `results_*.csv` in a directory, or takes a file as is.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| LabError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("results_") && n.ends_with(".csv"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(LabError::File { path: p.clone(), message: "file not found".into() });
        }
    }
    if files.is_empty() {
        return Err(LabError::Config("no results files found".into()));
    }
    Ok(files)
}

/// Audits and aggregates. A row that fails recomputation is an invariant violation.
pub fn build_report(inputs: &[PathBuf]) -> Result<Report> {
    let files = collect_inputs(inputs)?;
    // (lambda bits, delta bits, policy) -> rows in round order
    let mut groups: BTreeMap<(u64, u64, String), Vec<ResultRow>> = BTreeMap::new();
    let mut audited = 0;
    for f in &files {
        for (line, row) in read_results(f)? {
            if let Some(col) = audit_row(&row) {
                return Err(LabError::Internal(format!("{}:{line}: column `{col}` does not recompute", f.display())));
            }
            audited += 1;
            let key = (ordered_bits(row.lambda), ordered_bits(row.delta_horizon), row.policy.clone());
            groups.entry(key).or_default().push(row);
        }
    }
    let mut episodes = Vec::with_capacity(groups.len());
    for rows in groups.values_mut() {
        rows.sort_by_key(|r| r.round);
        let thetas: Vec<f64> = rows.iter().map(|r| r.theta_needed).collect();
        let deficits: Vec<f64> = rows.iter().map(|r| r.deficit).collect();
        let p_theta = path_variation(&thetas);
        let envelope = instance_bound(p_theta, &deficits);
        let objective = rows.iter().map(|r| r.loss_total).sum();
        episodes.push(EpisodeMetrics {
            policy: rows[0].policy.clone(),
            delta_horizon: rows[0].delta_horizon,
            lambda: rows[0].lambda,
            objective,
            tracking: rows.iter().map(|r| r.tracking).sum(),
            fairness: rows.iter().map(|r| r.fairness).sum(),
            overshoot: rows.iter().map(|r| r.overshoot).sum(),
            undershoot: rows.iter().map(|r| r.undershoot).sum(),
            failure: rows.iter().map(|r| r.undershoot).sum(),
            p_theta,
            instance_bound: envelope,
            bound_ratio: (envelope > 0.0).then(|| objective / envelope),
            ..EpisodeMetrics::default()
        });
    }
    // regrets against the best policy sharing lambda and horizon
    let mut best: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for e in &episodes {
        let slot = best.entry((ordered_bits(e.lambda), ordered_bits(e.delta_horizon))).or_insert((f64::INFINITY, f64::INFINITY));
        slot.0 = slot.0.min(e.objective);
        slot.1 = slot.1.min(e.tracking);
    }
    for e in &mut episodes {
        let (obj, trk) = best[&(ordered_bits(e.lambda), ordered_bits(e.delta_horizon))];
        e.policy_class_regret = e.objective - obj;
        e.tracking_regret = e.tracking - trk;
    }
    Ok(Report { files, rows_audited: audited, episodes })
}

/// Order-preserving key for finite floats.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}
