//! Deterministic synthetic corpora: ground-truth events plus noisy
//! probability curves rendered from them.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded with
//! the corpus seed and switched to stream `clip_index` for each clip, so a
//! clip's content depends only on `(seed, clip_index)` and the `SynthSpec`, on
//! every platform.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataio::{
    at_path, derive_weak_tags, write_annotations_tsv, write_atomic, write_probability_csv,
    write_weak_tags_tsv,
};
use crate::error::{Error, Result};
use crate::smoothing::{check_window, smooth_moving_average};
use crate::types::{
    default_margin_frames, frames_to_seconds, AnnotationSet, ClipPrediction, Event, DCASE_CLASSES,
    DEFAULT_FRAMES, DEFAULT_FRAME_DURATION,
};

const PLACEMENT_ATTEMPTS: usize = 200;
const CLIP_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_clips: usize,
    pub class_names: Vec<String>,
    /// Events per clip are drawn uniformly from `0..=max_events_per_clip`.
    pub max_events_per_clip: usize,
    /// Event durations are drawn uniformly from this range, in seconds.
    pub duration_range: (f64, f64),
    /// Minimum silence between two events of the same class, in seconds.
    pub min_separation: f64,
    pub inside_prob: f64,
    pub outside_prob: f64,
    pub noise_sigma: f64,
    pub render_window: usize,
    pub n_frames: usize,
    pub frame_duration: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_clips: 100,
            class_names: DCASE_CLASSES.iter().map(|s| s.to_string()).collect(),
            max_events_per_clip: 3,
            duration_range: (0.5, 2.5),
            min_separation: 0.5,
            inside_prob: 0.9,
            outside_prob: 0.1,
            noise_sigma: 0.05,
            render_window: 5,
            n_frames: DEFAULT_FRAMES,
            frame_duration: DEFAULT_FRAME_DURATION,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if self.class_names.is_empty() {
            return bad("at least one class is required".into());
        }
        if !(0.0 <= self.outside_prob
            && self.outside_prob < self.inside_prob
            && self.inside_prob <= 1.0)
        {
            return bad(format!(
                "need 0 <= outside_prob < inside_prob <= 1, got {} and {}",
                self.outside_prob, self.inside_prob
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if !(self.frame_duration.is_finite() && self.frame_duration > 0.0) || self.n_frames == 0 {
            return bad("frame grid must be non-empty with a positive frame duration".into());
        }
        let (lo, hi) = self.duration_range;
        if !(lo >= 2.0 * self.frame_duration && lo <= hi && hi <= self.clip_length()) {
            return bad(format!(
                "event durations must satisfy 2 frames <= min <= max <= clip length, got [{lo}, {hi}]"
            ));
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return bad("min_separation must be >= 0".into());
        }
        check_window(self.render_window)
    }

    pub fn clip_length(&self) -> f64 {
        frames_to_seconds(self.n_frames, self.frame_duration)
    }

    pub fn clip_id(&self, index: usize) -> String {
        format!("synth_{index:04}")
    }
}

/// A generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub annotations: AnnotationSet,
    pub predictions: Vec<ClipPrediction>,
}

/// Frame-domain event: `(class, start_frame, end_frame)`.
type FrameEvent = (usize, usize, usize);

fn place_events(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Option<Vec<FrameEvent>> {
    let n_events = rng.random_range(0..=spec.max_events_per_clip);
    let sep = default_margin_frames(spec.frame_duration, spec.min_separation);
    let length = spec.clip_length();
    let mut events: Vec<FrameEvent> = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let class = rng.random_range(0..spec.class_names.len());
        let (lo, hi) = spec.duration_range;
        let duration = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let placed = (0..PLACEMENT_ATTEMPTS).find_map(|_| {
            let onset = rng.random_range(0.0..=(length - duration));
            let start = (onset / spec.frame_duration).floor() as usize;
            let end =
                (((onset + duration) / spec.frame_duration).ceil() as usize).min(spec.n_frames);
            let clear = events
                .iter()
                .filter(|e| e.0 == class)
                .all(|&(_, s, e)| start >= e + sep || end + sep <= s);
            clear.then_some((class, start, end))
        });
        events.push(placed?);
    }
    Some(events)
}

fn generate_clip(spec: &SynthSpec, index: usize) -> Result<(Vec<Event>, ClipPrediction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let events = (0..CLIP_ATTEMPTS)
        .find_map(|_| place_events(spec, &mut rng))
        .ok_or_else(|| {
            Error::Data(format!(
                "could not place non-overlapping events in clip {index} after {CLIP_ATTEMPTS} attempts"
            ))
        })?;

    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Param(e.to_string()))?;
    let mut curves = Vec::with_capacity(spec.class_names.len());
    for class in 0..spec.class_names.len() {
        let mut curve = vec![spec.outside_prob; spec.n_frames];
        for &(_, s, e) in events.iter().filter(|e| e.0 == class) {
            curve[s..e].fill(spec.inside_prob);
        }
        if spec.noise_sigma > 0.0 {
            for v in curve.iter_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        let mut smooth = smooth_moving_average(&curve, spec.render_window)?;
        for v in smooth.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        curves.push(smooth);
    }

    let clip_id = spec.clip_id(index);
    let filename = format!("{clip_id}.wav");
    let mut truth: Vec<Event> = events
        .iter()
        .map(|&(c, s, e)| Event {
            clip_id: filename.clone(),
            class_name: spec.class_names[c].clone(),
            onset: frames_to_seconds(s, spec.frame_duration),
            offset: frames_to_seconds(e, spec.frame_duration),
        })
        .collect();
    truth.sort_by(|a, b| {
        a.onset
            .total_cmp(&b.onset)
            .then(a.class_name.cmp(&b.class_name))
    });
    let pred = ClipPrediction::from_curves(
        clip_id,
        spec.class_names.clone(),
        curves,
        spec.frame_duration,
    )?;
    Ok((truth, pred))
}

/// Generates the corpus described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut annotations = AnnotationSet::new();
    let mut predictions = Vec::with_capacity(spec.n_clips);
    for index in 0..spec.n_clips {
        let (events, pred) = generate_clip(spec, index)?;
        annotations.add_clip(&format!("{}.wav", pred.clip_id()), Some(spec.clip_length()));
        for e in events {
            annotations.add_event(e)?;
        }
        predictions.push(pred);
    }
    Ok(SynthCorpus {
        annotations,
        predictions,
    })
}

/// Writes `predictions/<clip>.csv`, `annotations.tsv` and `weak.tsv` under `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<()> {
    let pred_dir = dir.join("predictions");
    fs::create_dir_all(&pred_dir).map_err(|e| at_path(&pred_dir, e))?;
    for pred in &corpus.predictions {
        let mut buf = Vec::new();
        write_probability_csv(pred, &mut buf)?;
        write_atomic(&pred_dir.join(format!("{}.csv", pred.clip_id())), &buf)?;
    }
    let mut buf = Vec::new();
    write_annotations_tsv(&corpus.annotations, &mut buf)?;
    write_atomic(&dir.join("annotations.tsv"), &buf)?;
    let mut buf = Vec::new();
    write_weak_tags_tsv(&derive_weak_tags(&corpus.annotations), &mut buf)?;
    write_atomic(&dir.join("weak.tsv"), &buf)?;
    Ok(())
}
