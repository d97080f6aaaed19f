//! Scenario directories: `rounds.csv`, `winners.csv`, optional
//! `benchmarks.csv` and optional `scenario.meta`.
//!
//! Numbers are written in shortest round-trip decimal form, so a write
//! followed by a load reproduces every field bit for bit. Empty cells mean
//! "absent".

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use adl_core::scenario::{Benchmark, Metadata, RoundTruth, Scenario};
use adl_core::{RoundState, WinnerAccount};

use crate::error::{LabError, Result};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const WINNERS_FILE: &str = "winners.csv";
pub const BENCHMARKS_FILE: &str = "benchmarks.csv";
pub const META_FILE: &str = "scenario.meta";

const ROUND_COLUMNS: [&str; 4] = ["round_id", "deficit", "epsilon", "context"];
const WINNER_COLUMNS: [&str; 8] =
    ["round_id", "winner_id", "capacity", "lot_size", "production_haircut", "score", "comparator_haircut", "slope"];
const BENCHMARK_COLUMNS: [&str; 6] = ["round_id", "delta_horizon", "b_needed", "b_needed_hat", "alpha_true", "q_scale"];

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// A CSV table with named-column access and line-numbered errors.
struct Table {
    path: PathBuf,
    index: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let index: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        for col in required {
            if !index.contains_key(*col) {
                return Err(LabError::Schema {
                    path: path.into(),
                    row: 1,
                    column: (*col).into(),
                    message: "missing header column".into(),
                });
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table { path: path.into(), index, rows })
    }

    fn err(&self, row: u64, column: &str, message: impl Into<String>) -> LabError {
        LabError::Schema { path: self.path.clone(), row, column: column.into(), message: message.into() }
    }

    fn cell<'a>(&self, rec: &'a csv::StringRecord, column: &str) -> &'a str {
        self.index.get(column).and_then(|&i| rec.get(i)).unwrap_or("")
    }

    fn str(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<String> {
        let s = self.cell(rec, column);
        if s.is_empty() {
            return Err(self.err(line, column, "value required"));
        }
        Ok(s.to_string())
    }

    fn opt_f64(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<Option<f64>> {
        let s = self.cell(rec, column);
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.err(line, column, format!("`{s}` is not a finite number"))),
        }
    }

    fn f64(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<f64> {
        self.opt_f64(line, rec, column)?.ok_or_else(|| self.err(line, column, "value required"))
    }

    fn u64(&self, line: u64, rec: &csv::StringRecord, column: &str) -> Result<u64> {
        let s = self.cell(rec, column);
        s.parse::<u64>().map_err(|_| self.err(line, column, format!("`{s}` is not a non-negative integer")))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    let row = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => LabError::io(path, source),
        other => LabError::Schema { path: path.into(), row, column: String::new(), message: format!("{other:?}") },
    }
}

fn parse_context(table: &Table, line: u64, raw: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for pair in raw.split(';').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| table.err(line, "context", format!("`{pair}` is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| table.err(line, "context", format!("`{pair}` has a non-numeric value")))?;
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(table.err(line, "context", format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

fn format_context(ctx: &BTreeMap<String, f64>) -> String {
    ctx.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect::<Vec<_>>().join(";")
}

/// `(round_id, line, deficit, epsilon, context)`
type RoundHead = (u64, u64, f64, f64, BTreeMap<String, f64>);

struct WinnerRow {
    line: u64,
    account: WinnerAccount,
    extras: [Option<f64>; 4],
}

/// Loads a scenario directory, validating every row.
pub fn load_scenario(dir: &Path) -> Result<Scenario> {
    let rounds_path = dir.join(ROUNDS_FILE);
    let winners_path = dir.join(WINNERS_FILE);
    for p in [&rounds_path, &winners_path] {
        if !p.is_file() {
            return Err(LabError::File { path: p.clone(), message: "file not found".into() });
        }
    }

    let rounds = Table::read(&rounds_path, &ROUND_COLUMNS[..3])?;
    let mut heads: Vec<RoundHead> = Vec::new();
    for (line, rec) in &rounds.rows {
        let id = rounds.u64(*line, rec, "round_id")?;
        if let Some(prev) = heads.last() {
            if id <= prev.0 {
                return Err(rounds.err(*line, "round_id", format!("round id {id} does not increase (previous {})", prev.0)));
            }
        }
        let deficit = rounds.f64(*line, rec, "deficit")?;
        let epsilon = rounds.f64(*line, rec, "epsilon")?;
        let ctx = parse_context(&rounds, *line, rounds.cell(rec, "context"))?;
        heads.push((id, *line, deficit, epsilon, ctx));
    }
    let position: HashMap<u64, usize> = heads.iter().enumerate().map(|(i, h)| (h.0, i)).collect();

    let winners = Table::read(&winners_path, &WINNER_COLUMNS[..3])?;
    let mut grouped: Vec<Vec<WinnerRow>> = (0..heads.len()).map(|_| Vec::new()).collect();
    for (line, rec) in &winners.rows {
        let round = winners.u64(*line, rec, "round_id")?;
        let slot = *position
            .get(&round)
            .ok_or_else(|| winners.err(*line, "round_id", format!("round {round} is not in {ROUNDS_FILE}")))?;
        let id = winners.str(*line, rec, "winner_id")?;
        let capacity = winners.f64(*line, rec, "capacity")?;
        let lot = winners.opt_f64(*line, rec, "lot_size")?;
        let account = WinnerAccount::new(id, capacity, lot).map_err(|e| winners.err(*line, "capacity", e.to_string()))?;
        let mut extras = [None; 4];
        for (k, col) in WINNER_COLUMNS[4..].iter().enumerate() {
            extras[k] = winners.opt_f64(*line, rec, col)?;
        }
        grouped[slot].push(WinnerRow { line: *line, account, extras });
    }

    let mut benches: Vec<Vec<Benchmark>> = vec![Vec::new(); heads.len()];
    let bench_path = dir.join(BENCHMARKS_FILE);
    if bench_path.is_file() {
        let table = Table::read(&bench_path, &BENCHMARK_COLUMNS[..3])?;
        for (line, rec) in &table.rows {
            let round = table.u64(*line, rec, "round_id")?;
            let slot = *position
                .get(&round)
                .ok_or_else(|| table.err(*line, "round_id", format!("round {round} is not in {ROUNDS_FILE}")))?;
            let b = Benchmark {
                delta_horizon: table.f64(*line, rec, "delta_horizon")?,
                b_needed: table.f64(*line, rec, "b_needed")?,
                b_needed_hat: table.opt_f64(*line, rec, "b_needed_hat")?,
                alpha_true: table.opt_f64(*line, rec, "alpha_true")?,
                q_scale: table.opt_f64(*line, rec, "q_scale")?,
            };
            if b.b_needed < 0.0 || b.b_needed_hat.is_some_and(|h| h < 0.0) {
                return Err(table.err(*line, "b_needed", "benchmark must be non-negative"));
            }
            if benches[slot].iter().any(|o| o.delta_horizon == b.delta_horizon) {
                return Err(table.err(*line, "delta_horizon", format!("duplicate horizon for round {round}")));
            }
            benches[slot].push(b);
        }
    }

    let mut states = Vec::with_capacity(heads.len());
    let mut truth = Vec::with_capacity(heads.len());
    for ((id, line, deficit, epsilon, ctx), (mut rows, mut bench)) in heads.into_iter().zip(grouped.into_iter().zip(benches)) {
        rows.sort_by(|a, b| a.account.id.cmp(&b.account.id));
        for pair in rows.windows(2) {
            if pair[0].account.id == pair[1].account.id {
                return Err(winners.err(pair[1].line, "winner_id", format!("duplicate winner {} in round {id}", pair[1].account.id)));
            }
        }
        let mut columns: [Option<Vec<f64>>; 4] = Default::default();
        for (k, column) in columns.iter_mut().enumerate() {
            let present = rows.iter().filter(|r| r.extras[k].is_some()).count();
            if present == rows.len() && !rows.is_empty() {
                *column = Some(rows.iter().map(|r| r.extras[k].unwrap_or_default()).collect());
            } else if present > 0 {
                let gap = rows.iter().find(|r| r.extras[k].is_none()).map_or(0, |r| r.line);
                return Err(winners.err(gap, WINNER_COLUMNS[4 + k], format!("round {id}: column must be set for all winners or none")));
            }
        }
        let state = RoundState::new(id, deficit, rows.into_iter().map(|r| r.account).collect(), ctx, epsilon)
            .map_err(|e| rounds.err(line, "round_id", e.to_string()))?;
        bench.sort_by(|a, b| a.delta_horizon.total_cmp(&b.delta_horizon));
        let [production, score, comparator, slope] = columns;
        states.push(state);
        truth.push(RoundTruth { scores: score, production, comparator, slopes: slope, benchmarks: bench });
    }

    let meta_path = dir.join(META_FILE);
    let metadata = if meta_path.is_file() { read_meta(&meta_path)? } else { Metadata::default() };
    Scenario::new(states, truth, metadata).map_err(|e| LabError::File { path: dir.into(), message: e.to_string() })
}

fn read_meta(path: &Path) -> Result<Metadata> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut meta = Metadata::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| LabError::Schema { path: path.into(), row: n as u64 + 1, column: String::new(), message };
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("`{line}` is not key=value")))?;
        match k {
            "name" => meta.name = v.to_string(),
            "seed" => meta.seed = Some(v.parse().map_err(|_| bad(format!("bad seed `{v}`")))?),
            _ => match k.strip_prefix("param.") {
                Some(p) => {
                    meta.params.insert(p.to_string(), v.to_string());
                }
                None => return Err(bad(format!("unknown key `{k}`"))),
            },
        }
    }
    Ok(meta)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Writes `scenario` into `dir` (created if missing).
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    write_csv(
        &dir.join(ROUNDS_FILE),
        &ROUND_COLUMNS,
        scenario.rounds().iter().map(|r| {
            vec![r.round_id().to_string(), fmt_num(r.deficit()), fmt_num(r.epsilon()), format_context(r.context())]
        }),
    )?;
    let mut winner_rows = Vec::new();
    for (r, t) in scenario.rounds().iter().zip(scenario.truth()) {
        let pick = |v: &Option<Vec<f64>>, i: usize| fmt_opt(v.as_ref().map(|v| v[i]));
        for (i, w) in r.winners().iter().enumerate() {
            winner_rows.push(vec![
                r.round_id().to_string(),
                w.id.to_string(),
                fmt_num(w.capacity),
                fmt_opt(w.lot_size),
                pick(&t.production, i),
                pick(&t.scores, i),
                pick(&t.comparator, i),
                pick(&t.slopes, i),
            ]);
        }
    }
    write_csv(&dir.join(WINNERS_FILE), &WINNER_COLUMNS, winner_rows)?;
    let bench_rows: Vec<Vec<String>> = scenario
        .rounds()
        .iter()
        .zip(scenario.truth())
        .flat_map(|(r, t)| {
            t.benchmarks.iter().map(move |b| {
                vec![
                    r.round_id().to_string(),
                    fmt_num(b.delta_horizon),
                    fmt_num(b.b_needed),
                    fmt_opt(b.b_needed_hat),
                    fmt_opt(b.alpha_true),
                    fmt_opt(b.q_scale),
                ]
            })
        })
        .collect();
    let bench_path = dir.join(BENCHMARKS_FILE);
    if bench_rows.is_empty() {
        if bench_path.exists() {
            fs::remove_file(&bench_path).map_err(|e| LabError::io(&bench_path, e))?;
        }
    } else {
        write_csv(&bench_path, &BENCHMARK_COLUMNS, bench_rows)?;
    }
    let meta = scenario.metadata();
    let mut text = format!("name={}\n", meta.name);
    if let Some(seed) = meta.seed {
        text.push_str(&format!("seed={seed}\n"));
    }
    for (k, v) in &meta.params {
        text.push_str(&format!("param.{k}={v}\n"));
    }
    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, text).map_err(|e| LabError::io(&meta_path, e))
}
