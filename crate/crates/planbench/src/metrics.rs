//! Aggregate scoring: success/optimality rates, time and cost efficiency,
//! parallelism ratios, and correlation statistics.
//!
//! Everything that feeds a report is kept in exact rational arithmetic and
//! only rendered to decimals at emission time, so identities like
//! optimal_rate + feasible_rate = success_rate hold exactly, not just within
//! floating-point noise.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{PlanStatus, PlanVerdict};
use crate::generate::Structure;
use crate::graph::TaskGraph;
use crate::plan::{Plan, PlanScore};
use crate::schedule::simulate;

/// Ratio assigned to failed cases in both the time and the cost average.
pub const FAILURE_PENALTY: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot score an empty run")]
    EmptyRun,
    #[error("plan has no sub-plans")]
    EmptyPlan,
    #[error("correlation requires two or more points and non-constant series")]
    DegenerateInput,
    #[error("plan is not valid for the graph: {0}")]
    InvalidPlan(String),
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn zero() -> BigRational {
    BigRational::from_integer(BigInt::from(0))
}

/// Render a non-negative rational with a fixed number of decimals,
/// rounding half away from zero.
pub fn format_rational(v: &BigRational, decimals: u32) -> String {
    debug_assert!(v >= &zero(), "report values are never negative");
    let scale = BigInt::from(10u64.pow(decimals));
    let scaled = v * BigRational::from_integer(scale.clone());
    let rounded = (scaled + ratio(1, 2)).floor().to_integer();
    if decimals == 0 {
        return rounded.to_string();
    }
    let whole = &rounded / &scale;
    let frac = (&rounded % &scale).to_string();
    let pad = "0".repeat(decimals as usize - frac.len());
    format!("{whole}.{pad}{frac}")
}

/// Scored summary of one evaluation run. Counts and ratio sums are exact;
/// the rate and average accessors derive everything else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    n: usize,
    optimal: usize,
    success: usize,
    time_ratio_sum: BigRational,
    cost_ratio_sum: BigRational,
}

impl RunReport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn optimal_count(&self) -> usize {
        self.optimal
    }

    pub fn success_count(&self) -> usize {
        self.success
    }

    /// Fraction of cases whose plan matched the optimal (makespan, cost).
    pub fn optimal_rate(&self) -> BigRational {
        ratio(self.optimal as u64, self.n as u64)
    }

    /// Fraction of cases that produced any valid plan.
    pub fn success_rate(&self) -> BigRational {
        ratio(self.success as u64, self.n as u64)
    }

    /// Valid but non-optimal fraction; exactly success - optimal.
    pub fn feasible_rate(&self) -> BigRational {
        self.success_rate() - self.optimal_rate()
    }

    /// Mean makespan ratio to the optimum, failures counted as the penalty.
    pub fn avg_time_ratio(&self) -> BigRational {
        &self.time_ratio_sum / BigRational::from_integer(BigInt::from(self.n))
    }

    /// Mean cost ratio to the optimum, failures counted as the penalty.
    pub fn avg_cost_ratio(&self) -> BigRational {
        &self.cost_ratio_sum / BigRational::from_integer(BigInt::from(self.n))
    }

    /// Fold another report into this one (associative, order-independent).
    pub fn merge(&mut self, other: &RunReport) {
        self.n += other.n;
        self.optimal += other.optimal;
        self.success += other.success;
        self.time_ratio_sum += &other.time_ratio_sum;
        self.cost_ratio_sum += &other.cost_ratio_sum;
    }

    pub fn csv_header() -> &'static str {
        "Optimal Rate,Success Rate,Feasible Rate,Avg Time Ratio,Avg Cost Ratio"
    }

    /// One CSV row: rates as percentages with one decimal, ratios with three.
    pub fn to_csv_row(&self) -> String {
        let hundred = BigRational::from_integer(BigInt::from(100));
        format!(
            "{},{},{},{},{}",
            format_rational(&(self.optimal_rate() * &hundred), 1),
            format_rational(&(self.success_rate() * &hundred), 1),
            format_rational(&(self.feasible_rate() * &hundred), 1),
            format_rational(&self.avg_time_ratio(), 3),
            format_rational(&self.avg_cost_ratio(), 3),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "optimal_rate": self.optimal_rate().to_f64(),
            "success_rate": self.success_rate().to_f64(),
            "feasible_rate": self.feasible_rate().to_f64(),
            "avg_time_ratio": self.avg_time_ratio().to_f64(),
            "avg_cost_ratio": self.avg_cost_ratio().to_f64(),
        })
    }
}

/// Score a run of verdicts, each paired with its instance's optimal score.
pub fn score_run(cases: &[(PlanVerdict, PlanScore)]) -> Result<RunReport, MetricsError> {
    if cases.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let mut report = RunReport {
        n: cases.len(),
        optimal: 0,
        success: 0,
        time_ratio_sum: zero(),
        cost_ratio_sum: zero(),
    };
    for (verdict, opt) in cases {
        match verdict.status {
            PlanStatus::Optimal => {
                report.optimal += 1;
                report.success += 1;
            }
            PlanStatus::Feasible => report.success += 1,
            PlanStatus::Failed => {}
        }
        match &verdict.schedule {
            Some(sched) if verdict.is_success() => {
                debug_assert!(opt.makespan >= 1 && opt.cost >= 1);
                report.time_ratio_sum += ratio(sched.makespan, opt.makespan);
                report.cost_ratio_sum += ratio(sched.total_cost, opt.cost);
            }
            _ => {
                report.time_ratio_sum += ratio(FAILURE_PENALTY, 1);
                report.cost_ratio_sum += ratio(FAILURE_PENALTY, 1);
            }
        }
    }
    Ok(report)
}

/// Makespan divided by the sum of all sub-plan durations: 1 for a fully
/// sequential plan, approaching 0 the more work overlaps.
pub fn parallel_sequential_ratio(
    graph: &TaskGraph,
    plan: &Plan,
) -> Result<BigRational, MetricsError> {
    if plan.is_empty() {
        return Err(MetricsError::EmptyPlan);
    }
    let sched = simulate(graph, plan).map_err(|e| MetricsError::InvalidPlan(e.to_string()))?;
    // Durations recovered from the schedule: each sub-plan starts when its
    // last listed dependency ends.
    let mut total = 0u64;
    for sp in plan.iter() {
        let end = sched.end_times[&sp.name];
        let start = sp
            .dependencies
            .iter()
            .map(|d| sched.end_times[d])
            .max()
            .unwrap_or(0);
        total += end - start;
    }
    Ok(ratio(sched.makespan, total))
}

/// Pearson correlation and least-squares slope on min-max normalized series,
/// both rounded to two decimals.
pub fn correlation_stats(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), MetricsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(MetricsError::DegenerateInput);
    }
    let normalize = |vs: &[f64]| -> Result<Vec<f64>, MetricsError> {
        let min = vs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max - min).is_normal() {
            return Err(MetricsError::DegenerateInput);
        }
        Ok(vs.iter().map(|v| (v - min) / (max - min)).collect())
    };
    let xs = normalize(xs)?;
    let ys = normalize(ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mx) * (y - my);
        var_x += (x - mx) * (x - mx);
        var_y += (y - my) * (y - my);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(MetricsError::DegenerateInput);
    }
    let round2 = |v: f64| (v * 100.0).round() / 100.0;
    let r = cov / (var_x * var_y).sqrt();
    let m = cov / var_x;
    Ok((round2(r), round2(m)))
}

/// How rows are grouped in a report table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKey {
    NodeCount,
    EdgeBucket,
    Structure,
}

impl GroupKey {
    pub fn column_name(&self) -> &'static str {
        match self {
            GroupKey::NodeCount => "node_count",
            GroupKey::EdgeBucket => "edge_bucket",
            GroupKey::Structure => "structure",
        }
    }
}

impl FromStr for GroupKey {
    type Err = String;

    fn from_str(s: &str) -> Result<GroupKey, String> {
        match s {
            "node_count" => Ok(GroupKey::NodeCount),
            "edge_bucket" => Ok(GroupKey::EdgeBucket),
            "structure" => Ok(GroupKey::Structure),
            other => Err(format!(
                "unknown group key {other:?}, expected node_count, edge_bucket, or structure"
            )),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column_name())
    }
}

/// One scored case with the instance metadata grouping can key on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub node_count: u32,
    pub edge_count: u64,
    pub structure: Structure,
    pub verdict: PlanVerdict,
    pub opt: PlanScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub label: String,
    pub report: RunReport,
}

/// Group cases by the key and score each group. Rows come out in ascending
/// group order (numeric for node counts and edge buckets, declaration order
/// for structures). Edge buckets are decades: 20-29, 30-39, ...
pub fn aggregate_by(key: GroupKey, rows: &[CaseRow]) -> Result<Vec<GroupRow>, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let mut groups: BTreeMap<(u64, String), Vec<(PlanVerdict, PlanScore)>> = BTreeMap::new();
    for row in rows {
        let (sort, label) = match key {
            GroupKey::NodeCount => (row.node_count as u64, row.node_count.to_string()),
            GroupKey::EdgeBucket => {
                let lo = row.edge_count / 10 * 10;
                (lo, format!("{lo}-{}", lo + 9))
            }
            GroupKey::Structure => (row.structure as u64, row.structure.to_string()),
        };
        groups
            .entry((sort, label))
            .or_default()
            .push((row.verdict.clone(), row.opt));
    }
    groups
        .into_iter()
        .map(|((_, label), cases)| {
            Ok(GroupRow {
                label,
                report: score_run(&cases)?,
            })
        })
        .collect()
}

/// Render grouped rows as CSV with the group column first.
pub fn grouped_csv(key: GroupKey, rows: &[GroupRow]) -> String {
    let mut out = format!("{},{}\n", key.column_name(), RunReport::csv_header());
    for row in rows {
        out.push_str(&format!("{},{}\n", row.label, row.report.to_csv_row()));
    }
    out
}
