//! Chart equivalence: the svg-json metric (type + underlying values, with
//! flipped axes allowed) and the strict pixel metric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{evaluate_full, EvalError, Evaluation, Tolerance, TupleSet};
use crate::spec::{chart_type_of, ChartSpec};
use crate::table::DataTable;

mod pixels;
mod svg;

pub use pixels::{match_pixels, PixelError};
pub use svg::{expected_mark_class, extract_values_from_svg, SvgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Candidate,
    Truth,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("{side:?} spec could not be evaluated: {cause}")]
    EvaluationFailed { side: Side, cause: EvalError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVerdict {
    /// Absent when no renderer was available.
    pub pixel_match: Option<bool>,
    pub type_match: bool,
    pub content_match: bool,
    pub overall: bool,
    /// Content matched only after exchanging x and y.
    pub flipped: bool,
}

impl MatchVerdict {
    pub fn new(type_match: bool, content_match: bool, flipped: bool) -> Self {
        Self {
            pixel_match: None,
            type_match,
            content_match,
            overall: type_match && content_match,
            flipped,
        }
    }
}

fn swap_xy_name(name: &str) -> String {
    match name {
        "x" => "y".to_string(),
        "y" => "x".to_string(),
        other => other.to_string(),
    }
}

/// Compare channel-keyed tuples, allowing x and y to be exchanged. Returns
/// (matched, matched only when flipped).
pub fn content_match(candidate: &TupleSet, truth: &TupleSet, tol: Tolerance) -> (bool, bool) {
    if candidate.equals(truth, tol) {
        return (true, false);
    }
    let flipped = candidate.rename(swap_xy_name);
    if flipped.equals(truth, tol) {
        return (true, true);
    }
    (false, false)
}

pub fn match_evaluations(
    candidate_spec: &ChartSpec,
    candidate: &Evaluation,
    truth_spec: &ChartSpec,
    truth: &Evaluation,
    tol: Tolerance,
) -> MatchVerdict {
    let type_match = chart_type_of(candidate_spec) == chart_type_of(truth_spec);
    let (content, flipped) = content_match(&candidate.by_channel, &truth.by_channel, tol);
    MatchVerdict::new(type_match, content, flipped)
}

pub fn match_svg_json(
    candidate: &ChartSpec,
    truth: &ChartSpec,
    table: &DataTable,
) -> Result<MatchVerdict, MatchError> {
    match_svg_json_with(candidate, truth, table, Tolerance::COMPARISON)
}

pub fn match_svg_json_with(
    candidate: &ChartSpec,
    truth: &ChartSpec,
    table: &DataTable,
    tol: Tolerance,
) -> Result<MatchVerdict, MatchError> {
    let truth_eval = evaluate_full(truth, table).map_err(|cause| MatchError::EvaluationFailed {
        side: Side::Truth,
        cause,
    })?;
    let cand_eval =
        evaluate_full(candidate, table).map_err(|cause| MatchError::EvaluationFailed {
            side: Side::Candidate,
            cause,
        })?;
    Ok(match_evaluations(
        candidate,
        &cand_eval,
        truth,
        &truth_eval,
        tol,
    ))
}
