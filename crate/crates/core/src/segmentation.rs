//! Binarization of probability curves and conversion to events.
//!
//! All comparisons follow one convention: a frame becomes (or stays) active
//! on `>=`, and an active run ends on `<`. With this convention hysteresis
//! with equal thresholds is exactly absolute thresholding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Family, Rule, SegmenterConfig, SlopeParams};
use crate::dataio::WeakTags;
use crate::error::{Error, Result};
use crate::smoothing::smooth_moving_average;
use crate::types::{frames_to_seconds, ClipPrediction, Event, EventList, Segment};

/// Thresholds derived from dataset statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetThresholds {
    pub class_names: Vec<String>,
    /// Mean probability of each class over every frame of the dataset.
    pub per_class: Vec<f64>,
    /// Mean of `per_class`.
    pub global: f64,
}

impl DatasetThresholds {
    pub fn for_class(&self, name: &str) -> Option<f64> {
        self.class_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.per_class[i])
    }
}

/// Per-class mean probability over all frames of all clips.
///
/// Clips are weighted by their number of frames. Sums accumulate in clip
/// order before the division so the result does not depend on scheduling.
pub fn compute_datawise_thresholds(dataset: &[ClipPrediction]) -> Result<DatasetThresholds> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::Data("cannot compute thresholds of an empty dataset".into()))?;
    let class_names = first.class_names().to_vec();
    let mut sums = vec![0.0; class_names.len()];
    let mut frames = 0usize;
    for clip in dataset {
        if clip.class_names() != class_names.as_slice() {
            return Err(Error::Data(format!(
                "clip {} has a different class list than {}",
                clip.clip_id(),
                first.clip_id()
            )));
        }
        for (c, sum) in sums.iter_mut().enumerate() {
            *sum += clip.curve(c).iter().sum::<f64>();
        }
        frames += clip.n_frames();
    }
    let per_class: Vec<f64> = sums.iter().map(|s| s / frames as f64).collect();
    let global = per_class.iter().sum::<f64>() / per_class.len() as f64;
    Ok(DatasetThresholds {
        class_names,
        per_class,
        global,
    })
}

pub fn binarize_absolute(curve: &[f64], threshold: f64) -> Vec<bool> {
    curve.iter().map(|&v| v >= threshold).collect()
}

/// Two-threshold state machine: enters on `>= high`, leaves on `< low`.
pub fn binarize_hysteresis(curve: &[f64], high: f64, low: f64) -> Result<Vec<bool>> {
    Rule::Hysteresis { high, low }.validate()?;
    let mut active = false;
    Ok(curve
        .iter()
        .map(|&v| {
            active = if active { v >= low } else { v >= high };
            active
        })
        .collect())
}

/// Slope-triggered segmentation.
///
/// The slope at frame `i` is `(curve[i] - curve[i-k]) / k`, taken as zero for
/// `i < k`. A positive slope `>= rise` opens a segment at `i`. An open segment
/// closes at the first later frame whose slope is negative with magnitude
/// `>= fall`, or where the last `plateau_len` slopes (all after the opening
/// frame) had magnitude `< plateau_eps`. The closing frame is not part of the
/// segment and cannot reopen one. A segment still open at the end of the curve
/// runs to the end.
pub fn binarize_slope(curve: &[f64], params: &SlopeParams) -> Result<Vec<bool>> {
    params.validate()?;
    let k = params.k;
    let slope = |i: usize| {
        if i < k {
            0.0
        } else {
            (curve[i] - curve[i - k]) / k as f64
        }
    };

    let mut mask = vec![false; curve.len()];
    let mut active = false;
    let mut flat_run = 0usize;
    for (i, m) in mask.iter_mut().enumerate() {
        let s = slope(i);
        if !active {
            if i >= k && s > 0.0 && s >= params.rise {
                active = true;
                flat_run = 0;
                *m = true;
            }
            continue;
        }
        if s.abs() < params.plateau_eps {
            flat_run += 1;
        } else {
            flat_run = 0;
        }
        let falling = s < 0.0 && -s >= params.fall;
        if falling || flat_run >= params.plateau_len {
            active = false;
        } else {
            *m = true;
        }
    }
    Ok(mask)
}

/// Applies a parametric rule to an (already smoothed) curve.
pub fn binarize(curve: &[f64], rule: &Rule) -> Result<Vec<bool>> {
    match rule {
        Rule::Absolute { threshold } => {
            rule.validate()?;
            Ok(binarize_absolute(curve, *threshold))
        }
        Rule::Hysteresis { high, low } => binarize_hysteresis(curve, *high, *low),
        Rule::Slope(p) => binarize_slope(curve, p),
    }
}

/// Maximal runs of `true` as half-open segments, in ascending order.
pub fn mask_to_segments(mask: &[bool], class_index: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &on) in mask.iter().enumerate() {
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Segment::new(class_index, s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Segment::new(class_index, s, mask.len()));
    }
    out
}

/// Merges segments separated by fewer than `min_gap_frames` frames, then
/// drops segments shorter than `min_len_frames`.
///
/// Input must be sorted, non-overlapping segments of a single class.
pub fn merge_and_prune(
    segments: &[Segment],
    min_gap_frames: usize,
    min_len_frames: usize,
) -> Vec<Segment> {
    let mut merged: Vec<Segment> = Vec::with_capacity(segments.len());
    for seg in segments {
        match merged.last_mut() {
            Some(prev) if seg.start_frame - prev.end_frame < min_gap_frames => {
                prev.end_frame = prev.end_frame.max(seg.end_frame);
            }
            _ => merged.push(*seg),
        }
    }
    merged.retain(|s| s.len() >= min_len_frames);
    merged
}

/// Frame-domain segments of one class curve under a parametric rule.
///
/// `curve` must already be smoothed.
pub(crate) fn rule_segments(
    curve: &[f64],
    rule: &Rule,
    class_index: usize,
    min_gap_frames: usize,
    min_len_frames: usize,
) -> Result<Vec<Segment>> {
    let mask = binarize(curve, rule)?;
    Ok(merge_and_prune(
        &mask_to_segments(&mask, class_index),
        min_gap_frames,
        min_len_frames,
    ))
}

pub(crate) fn segments_to_events<'a>(
    clip_id: &str,
    class_name: &str,
    frame_duration: f64,
    segments: &'a [Segment],
) -> impl Iterator<Item = Event> + 'a {
    let clip_id = clip_id.to_string();
    let class_name = class_name.to_string();
    segments.iter().map(move |s| Event {
        clip_id: clip_id.clone(),
        class_name: class_name.clone(),
        onset: frames_to_seconds(s.start_frame, frame_duration),
        offset: frames_to_seconds(s.end_frame, frame_duration),
    })
}

/// Runs the full post-processing chain on one clip.
///
/// Per class (only the oracle's tags for this clip, when an oracle is given):
/// smooth (parametric methods only), binarize, extract segments, merge and
/// prune, and convert to events. Data-wise methods need `thresholds`.
pub fn segment_clip(
    pred: &ClipPrediction,
    config: &SegmenterConfig,
    thresholds: Option<&DatasetThresholds>,
    oracle: Option<&WeakTags>,
) -> Result<EventList> {
    config.validate()?;
    let mut events = Vec::new();
    for (c, class_name) in pred.class_names().iter().enumerate() {
        if let Some(tags) = oracle {
            if !tags.has_tag(pred.clip_id(), class_name) {
                continue;
            }
        }
        let segments = match config.method.family() {
            Family::DataWise => {
                let t = thresholds.ok_or_else(|| {
                    Error::Config(format!("{} requires dataset thresholds", config.method))
                })?;
                let threshold = if config.method.is_class_dependent() {
                    t.for_class(class_name).ok_or_else(|| {
                        Error::Config(format!("no data-wise threshold for class {class_name}"))
                    })?
                } else {
                    t.global
                };
                let mask = binarize_absolute(pred.curve(c), threshold);
                merge_and_prune(
                    &mask_to_segments(&mask, c),
                    config.min_gap_frames,
                    config.min_len_frames,
                )
            }
            _ => {
                let params = config.class_params(class_name)?;
                let smoothed = smooth_moving_average(pred.curve(c), params.window)?;
                rule_segments(
                    &smoothed,
                    &params.rule,
                    c,
                    config.min_gap_frames,
                    config.min_len_frames,
                )?
            }
        };
        events.extend(segments_to_events(
            pred.clip_id(),
            class_name,
            pred.frame_duration(),
            &segments,
        ));
    }
    Ok(events)
}

/// Segments every clip of a dataset. Data-wise methods first compute their
/// thresholds from the dataset itself.
pub fn segment_dataset(
    dataset: &[ClipPrediction],
    config: &SegmenterConfig,
    oracle: Option<&WeakTags>,
) -> Result<EventList> {
    let thresholds = if config.method.is_statistic() && !dataset.is_empty() {
        Some(compute_datawise_thresholds(dataset)?)
    } else {
        None
    };
    let per_clip = dataset
        .par_iter()
        .map(|clip| segment_clip(clip, config, thresholds.as_ref(), oracle))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_clip.into_iter().flatten().collect())
}
