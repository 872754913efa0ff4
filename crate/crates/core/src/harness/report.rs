//! Comparing variant results and the bug records that come out of it.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::engine::Engine;
use crate::error::{Error, Result};
use crate::generator::hints::HintVariant;
use crate::model::{multiset_compare, CompareMode, CompareOutcome, ResultSet, RowDiff};
use crate::oracle::GroundTruth;

/// Which reference a report was checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    GroundTruth,
    /// The unhinted query's result on the same engine.
    BaseVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugReport {
    pub query_index: usize,
    pub base_sql: String,
    pub hint: String,
    pub sql: String,
    pub session: Vec<String>,
    /// DDL and INSERT statements that rebuild the database.
    pub script: Vec<String>,
    pub engine: String,
    pub engine_result: ResultSet,
    pub reference: Reference,
    pub expected: ResultSet,
    pub mode: CompareMode,
    pub diff: RowDiff,
    /// Hex WL hash of the query graph.
    pub iso_key: String,
    pub noise_seed: Option<u64>,
}

impl BugReport {
    pub fn dedup_key(&self) -> (String, String) {
        (self.iso_key.clone(), self.hint.clone())
    }
}

/// What every report for one query shares.
#[derive(Debug, Clone, Default)]
pub struct QueryContext<'a> {
    pub query_index: usize,
    pub base_sql: &'a str,
    pub script: &'a [String],
    pub engine: &'a str,
    pub iso_key: &'a str,
    pub noise_seed: Option<u64>,
}

fn compare(got: &ResultSet, want: &ResultSet, mode: CompareMode) -> Option<RowDiff> {
    match multiset_compare(got, want, mode) {
        Ok(CompareOutcome::Match) => None,
        Ok(CompareOutcome::Mismatch(d)) => Some(d),
        // Arity differs: everything is missing and everything is extra.
        Err(_) => Some(RowDiff { missing: want.rows.clone(), extra: got.rows.clone() }),
    }
}

fn report(
    ctx: &QueryContext,
    v: &HintVariant,
    got: &ResultSet,
    reference: Reference,
    expected: &ResultSet,
    mode: CompareMode,
    diff: RowDiff,
) -> BugReport {
    BugReport {
        query_index: ctx.query_index,
        base_sql: ctx.base_sql.to_string(),
        hint: v.label.clone(),
        sql: v.sql.clone(),
        session: v.session.clone(),
        script: ctx.script.to_vec(),
        engine: ctx.engine.to_string(),
        engine_result: got.clone(),
        reference,
        expected: expected.clone(),
        mode,
        diff,
        iso_key: ctx.iso_key.to_string(),
        noise_seed: ctx.noise_seed,
    }
}

/// Check every variant against the ground truth on its own. Variants that
/// agree with each other but not with the ground truth are all reported.
pub fn compare_and_report(ctx: &QueryContext, results: &[(HintVariant, ResultSet)], gt: &GroundTruth) -> Vec<BugReport> {
    results
        .iter()
        .filter_map(|(v, got)| {
            compare(got, &gt.result, gt.mode)
                .map(|d| report(ctx, v, got, Reference::GroundTruth, &gt.result, gt.mode, d))
        })
        .collect()
}

/// Without a ground truth: every variant whose result differs from the
/// first (unhinted) one is reported.
pub fn differential_report(ctx: &QueryContext, results: &[(HintVariant, ResultSet)]) -> Vec<BugReport> {
    let Some((_, base)) = results.first() else { return Vec::new() };
    results[1..]
        .iter()
        .filter_map(|(v, got)| {
            compare(got, base, CompareMode::FullSet)
                .map(|d| report(ctx, v, got, Reference::BaseVariant, base, CompareMode::FullSet, d))
        })
        .collect()
}

pub fn write_reports(mut w: impl Write, reports: &[BugReport]) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Input(format!("bug report: {e}")))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_reports(r: impl BufRead) -> Result<Vec<BugReport>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Input(format!("bug report line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub result: ResultSet,
    /// The mismatch shows up again.
    pub reproduced: bool,
    /// The engine returned exactly the recorded result.
    pub same_result: bool,
}

/// Rebuild the database from the report's script on `engine` and rerun the
/// failing variant.
pub fn replay(report: &BugReport, engine: &mut dyn Engine) -> Result<ReplayOutcome> {
    for stmt in &report.script {
        let head = stmt.trim_start().get(..6).unwrap_or_default().to_ascii_uppercase();
        if head == "INSERT" {
            engine.execute_dml(stmt)?;
        } else {
            engine.execute_ddl(stmt)?;
        }
    }
    let result = engine.execute_query(&report.sql, &report.session)?;
    let reproduced = compare(&result, &report.expected, report.mode).is_some();
    let same_result = compare(&result, &report.engine_result, CompareMode::FullSet).is_none();
    Ok(ReplayOutcome { result, reproduced, same_result })
}
