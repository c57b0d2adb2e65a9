//! Centered moving-average smoothing of probability curves.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::ClipPrediction;

/// Smoothing window: one for every class, or one per class name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Windows {
    Global(usize),
    PerClass(BTreeMap<String, usize>),
}

pub fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Param(format!(
            "smoothing window must be a positive odd integer, got {window}"
        )));
    }
    Ok(())
}

/// Centered moving average with windows truncated at the clip edges.
///
/// `out[i]` is the mean of `curve[i-h..=i+h]` restricted to valid indices,
/// where `h = (window - 1) / 2`.
pub fn smooth_moving_average(curve: &[f64], window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    if window == 1 || curve.is_empty() {
        return Ok(curve.to_vec());
    }
    let n = curve.len();
    let h = (window - 1) / 2;
    let (lo, hi) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(h);
        let end = (i + h + 1).min(n);
        let sum: f64 = curve[start..end].iter().sum();
        // rounding may step a hair outside the data range
        out.push((sum / (end - start) as f64).clamp(lo, hi));
    }
    Ok(out)
}

/// Smooths every class curve of a clip with its window.
pub fn smooth_clip(pred: &ClipPrediction, windows: &Windows) -> Result<ClipPrediction> {
    let curves = pred
        .class_names()
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let w = match windows {
                Windows::Global(w) => *w,
                Windows::PerClass(map) => *map.get(name).ok_or_else(|| {
                    Error::Config(format!("no smoothing window for class {name}"))
                })?,
            };
            smooth_moving_average(pred.curve(c), w)
        })
        .collect::<Result<Vec<_>>>()?;
    pred.with_curves(curves)
}
