//! Human-readable tables and structured outputs. Every float goes through
//! [`fmt_sig`] or [`round_sig`] so outputs are byte-stable across runs.

use std::fmt::Write as _;

use anyhow::Result;
use avmerge_core::harness::ReplayAudit;
use avmerge_core::policy::{Candidate, SkipReason};
use avmerge_core::{MergePlan, Scenario};
use serde::Serialize;
use serde_json::Value;

/// Significant digits of every printed float.
pub const SIG_DIGITS: usize = 9;

/// `x` with `digits` significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Scientific formatting rounds first, so the exponent already accounts
    // for carries such as 9.9999999996 -> 10.0000000.
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-5..15).contains(&exp) {
        let (mantissa, e) = sci.split_at(sci.find('e').unwrap());
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        return format!("{mantissa}{e}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let fixed = format!("{x:.decimals$}");
    if fixed.contains('.') {
        let trimmed = fixed.trim_end_matches('0').trim_end_matches('.');
        if trimmed == "-0" {
            "0".into()
        } else {
            trimmed.into()
        }
    } else {
        fixed
    }
}

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap()
    } else {
        x
    }
}

fn f(x: f64) -> String {
    fmt_sig(x, SIG_DIGITS)
}

/// One row of the per-index cost table.
#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub k: usize,
    pub t_m: Option<f64>,
    pub v_m: Option<f64>,
    /// AV share of the cost.
    pub j_a: Option<f64>,
    /// HDV share of the cost.
    pub j_h: Option<f64>,
    pub j: Option<f64>,
    pub feasible: Option<bool>,
    pub status: &'static str,
}

fn cost_row(c: &Candidate, plan: &MergePlan, alpha: f64) -> CostRow {
    if c.k == plan.k {
        // The plan may have been re-solved within the actuator limits, so
        // report its own point rather than the unconstrained optimum.
        let resolved = c
            .solution
            .is_some_and(|x| x.t_m != plan.t_m || x.v_m != plan.v_m);
        return CostRow {
            k: c.k.get(),
            t_m: Some(plan.t_m),
            v_m: Some(plan.v_m),
            j_a: Some(plan.cost.av_part(alpha)),
            j_h: Some(plan.cost.hdv_part(alpha)),
            j: Some(plan.total),
            feasible: Some(plan.feasible.is_feasible()),
            status: if resolved {
                "chosen, re-solved within limits"
            } else {
                "chosen"
            },
        };
    }
    let status = if !c.evaluated {
        "not evaluated"
    } else if c.solution.is_none() {
        "empty window"
    } else if c.feasibility.is_some_and(|r| !r.is_feasible()) {
        "infeasible"
    } else {
        ""
    };
    let sol = c.solution;
    CostRow {
        k: c.k.get(),
        t_m: sol.map(|x| x.t_m),
        v_m: sol.map(|x| x.v_m),
        j_a: sol.map(|x| x.cost.av_part(alpha)),
        j_h: sol.map(|x| x.cost.hdv_part(alpha)),
        j: sol.map(|x| x.total),
        feasible: c.feasibility.map(|r| r.is_feasible()),
        status,
    }
}

pub fn cost_rows(plan: &MergePlan, s: &Scenario) -> Vec<CostRow> {
    plan.candidates
        .iter()
        .map(|c| cost_row(c, plan, s.alpha))
        .collect()
}

/// Per-index table followed by the chosen plan.
pub fn plan_table(plan: &MergePlan, s: &Scenario) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), f);
    let mut out = String::new();
    writeln!(
        out,
        "{:>3}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}  {:>8}  status",
        "k", "t_m", "v_m", "J_A", "J_H", "J", "feasible"
    )
    .unwrap();
    for r in cost_rows(plan, s) {
        let feasible = r.feasible.map_or("-", |b| if b { "yes" } else { "no" });
        writeln!(
            out,
            "{:>3}  {:>14}  {:>14}  {:>14}  {:>14}  {:>14}  {:>8}  {}",
            r.k,
            opt(r.t_m),
            opt(r.v_m),
            opt(r.j_a),
            opt(r.j_h),
            opt(r.j),
            feasible,
            r.status
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "alpha = {}", f(s.alpha)).unwrap();
    writeln!(
        out,
        "chosen k = {}: t_m = {} s, v_m = {} m/s, J = {}",
        plan.k,
        f(plan.t_m),
        f(plan.v_m),
        f(plan.total)
    )
    .unwrap();
    writeln!(
        out,
        "fallback applied: {}",
        if plan.fallback_applied { "yes" } else { "no" }
    )
    .unwrap();
    for skip in &plan.skipped_indices {
        let why = match skip.reason {
            SkipReason::EmptyWindow => "empty window".to_string(),
            SkipReason::ActuatorInfeasible { v_range, u_range } => format!(
                "unconstrained optimum breaks actuator limits (v in [{}, {}], u in [{}, {}])",
                f(v_range.0),
                f(v_range.1),
                f(u_range.0),
                f(u_range.1)
            ),
        };
        writeln!(out, "skipped k = {}: {why}", skip.k).unwrap();
    }
    if let Some(fp) = &plan.fast_path {
        let thr = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), f);
        writeln!(
            out,
            "alpha_l = {}, alpha_u = {}",
            thr(fp.alpha_lower),
            thr(fp.alpha_upper)
        )
        .unwrap();
        let shortlist: Vec<String> = fp.shortlist.iter().map(|k| k.to_string()).collect();
        writeln!(
            out,
            "fast path: rule {:?}, shortlist [{}], predicted {}{}",
            fp.rule,
            shortlist.join(", "),
            fp.predicted.map_or("-".to_string(), |k| k.to_string()),
            match fp.agrees_with_scan {
                Some(true) => ", agrees with full scan",
                Some(false) => ", disagrees with full scan",
                None => "",
            }
        )
        .unwrap();
        if let Some(note) = &fp.note {
            writeln!(out, "fast path note: {note}").unwrap();
        }
    }
    out
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap());
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Serializes `value` as pretty JSON with every float rounded to [`SIG_DIGITS`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

#[derive(Serialize)]
struct PlanReport<'a> {
    alpha: f64,
    table: Vec<CostRow>,
    plan: &'a MergePlan,
}

pub fn plan_json(plan: &MergePlan, s: &Scenario) -> Result<String> {
    to_json(&PlanReport {
        alpha: s.alpha,
        table: cost_rows(plan, s),
        plan,
    })
}

/// `t,x,v,u` samples; the last row is the merging instant.
pub fn trajectory_csv(audit: &ReplayAudit) -> String {
    let mut out = String::from("t,x,v,u\n");
    for p in &audit.samples {
        writeln!(out, "{},{},{},{}", f(p.t), f(p.x), f(p.v), f(p.u)).unwrap();
    }
    out
}
