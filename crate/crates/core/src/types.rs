//! Domain types shared by every stage of the pipeline, plus the
//! frame/time conversions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frames per clip produced by the reference localizers.
pub const DEFAULT_FRAMES: usize = 431;
/// Clip length in seconds.
pub const DEFAULT_CLIP_SECONDS: f64 = 10.0;
/// 10 s / 431 frames.
pub const DEFAULT_FRAME_DURATION: f64 = DEFAULT_CLIP_SECONDS / DEFAULT_FRAMES as f64;
/// Onset collar of the challenge metric; also the merge/prune margin.
pub const CHALLENGE_MARGIN_SECONDS: f64 = 0.2;

/// The ten domestic sound classes, as spelled in DCASE annotation files.
pub const DCASE_CLASSES: [&str; 10] = [
    "Speech",
    "Dog",
    "Cat",
    "Alarm_bell_ringing",
    "Dishes",
    "Frying",
    "Blender",
    "Running_water",
    "Vacuum_cleaner",
    "Electric_shaver_toothbrush",
];

pub fn frames_to_seconds(frame: usize, frame_duration: f64) -> f64 {
    frame as f64 * frame_duration
}

/// Inverse of [`frames_to_seconds`], rounding down.
pub fn seconds_to_frames(seconds: f64, frame_duration: f64) -> usize {
    let x = seconds / frame_duration;
    // absorb representation error so that exact multiples land on their frame
    let snapped = x.round();
    if (x - snapped).abs() < 1e-9 {
        snapped.max(0.0) as usize
    } else {
        x.floor().max(0.0) as usize
    }
}

/// Number of frames covering `margin` seconds, rounded up.
pub fn default_margin_frames(frame_duration: f64, margin: f64) -> usize {
    if margin <= 0.0 {
        return 0;
    }
    let x = margin / frame_duration;
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Strips the final extension of a file name: `"a.wav"` becomes `"a"`.
///
/// Clips are matched across prediction CSVs, annotation TSVs and submissions
/// by this key, so `a.csv`, `a.wav` and a bare `a` all name the same clip.
pub fn clip_stem(name: &str) -> &str {
    match name.rfind('.') {
        Some(i) if i > 0 && !name[i + 1..].contains('/') => &name[..i],
        _ => name,
    }
}

/// Frame-level class probabilities of one clip, stored class-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPrediction {
    clip_id: String,
    class_names: Vec<String>,
    frame_duration: f64,
    n_frames: usize,
    curves: Vec<Vec<f64>>,
}

impl ClipPrediction {
    /// Builds a prediction from `rows[frame][class]`.
    pub fn from_rows(
        clip_id: impl Into<String>,
        class_names: Vec<String>,
        rows: &[Vec<f64>],
        frame_duration: f64,
    ) -> Result<Self> {
        let n_classes = class_names.len();
        let mut curves = vec![Vec::with_capacity(rows.len()); n_classes];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::Data(format!(
                    "frame {i} has {} values, expected {n_classes}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                curves[c].push(v);
            }
        }
        Self::from_curves(clip_id, class_names, curves, frame_duration)
    }

    /// Builds a prediction from one curve per class.
    pub fn from_curves(
        clip_id: impl Into<String>,
        class_names: Vec<String>,
        curves: Vec<Vec<f64>>,
        frame_duration: f64,
    ) -> Result<Self> {
        let clip_id = clip_id.into();
        if class_names.is_empty() {
            return Err(Error::Data(format!("clip {clip_id}: no classes")));
        }
        let unique: BTreeSet<&String> = class_names.iter().collect();
        if unique.len() != class_names.len() {
            return Err(Error::Data(format!(
                "clip {clip_id}: duplicate class names"
            )));
        }
        if curves.len() != class_names.len() {
            return Err(Error::Data(format!(
                "clip {clip_id}: {} curves for {} classes",
                curves.len(),
                class_names.len()
            )));
        }
        if !(frame_duration.is_finite() && frame_duration > 0.0) {
            return Err(Error::Data(format!(
                "clip {clip_id}: frame duration must be positive, got {frame_duration}"
            )));
        }
        let n_frames = curves[0].len();
        if n_frames == 0 {
            return Err(Error::Data(format!("clip {clip_id}: no frames")));
        }
        for (c, curve) in curves.iter().enumerate() {
            if curve.len() != n_frames {
                return Err(Error::Data(format!(
                    "clip {clip_id}: class {} has {} frames, expected {n_frames}",
                    class_names[c],
                    curve.len()
                )));
            }
            if let Some((i, v)) = curve
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(Error::Data(format!(
                    "clip {clip_id}: class {} frame {i}: probability {v} outside [0, 1]",
                    class_names[c]
                )));
            }
        }
        Ok(Self {
            clip_id,
            class_names,
            frame_duration,
            n_frames,
            curves,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn frame_duration(&self) -> f64 {
        self.frame_duration
    }

    pub fn duration(&self) -> f64 {
        frames_to_seconds(self.n_frames, self.frame_duration)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    pub fn curve(&self, class_index: usize) -> &[f64] {
        &self.curves[class_index]
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    /// Value at `(frame, class)`.
    pub fn get(&self, frame: usize, class_index: usize) -> f64 {
        self.curves[class_index][frame]
    }

    /// Same clip with the curves replaced; the new curves are validated.
    pub fn with_curves(&self, curves: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_curves(
            self.clip_id.clone(),
            self.class_names.clone(),
            curves,
            self.frame_duration,
        )
    }
}

/// One detected or annotated sound event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub clip_id: String,
    pub class_name: String,
    pub onset: f64,
    pub offset: f64,
}

impl Event {
    pub fn new(
        clip_id: impl Into<String>,
        class_name: impl Into<String>,
        onset: f64,
        offset: f64,
    ) -> Result<Self> {
        let event = Self {
            clip_id: clip_id.into(),
            class_name: class_name.into(),
            onset,
            offset,
        };
        event.validate()?;
        Ok(event)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.onset.is_finite() && self.offset.is_finite()) {
            return Err(Error::Data(format!(
                "{}: non-finite event time",
                self.clip_id
            )));
        }
        if self.onset < 0.0 {
            return Err(Error::Data(format!(
                "{}: negative onset {}",
                self.clip_id, self.onset
            )));
        }
        if self.onset >= self.offset {
            return Err(Error::Data(format!(
                "{}: onset {} is not before offset {}",
                self.clip_id, self.onset, self.offset
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

pub type EventList = Vec<Event>;

/// Strong annotations of a set of clips.
///
/// Clips are keyed by [`clip_stem`] of their file name; clips without any
/// event are kept so that predictions on them can be scored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    events: Vec<Event>,
    clips: BTreeMap<String, ClipInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipInfo {
    /// File name as it appears in the annotation file.
    pub filename: String,
    /// Clip length in seconds, when known.
    pub duration: Option<f64>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a clip. Re-adding a known clip only fills in a missing duration.
    pub fn add_clip(&mut self, filename: &str, duration: Option<f64>) {
        let entry = self
            .clips
            .entry(clip_stem(filename).to_string())
            .or_insert_with(|| ClipInfo {
                filename: filename.to_string(),
                duration: None,
            });
        if entry.duration.is_none() {
            entry.duration = duration;
        }
    }

    /// Adds an event, registering its clip if needed.
    pub fn add_event(&mut self, event: Event) -> Result<()> {
        event.validate()?;
        self.add_clip(&event.clip_id.clone(), None);
        if let Some(d) = self.clips[clip_stem(&event.clip_id)].duration {
            if event.offset > d + 1e-9 {
                return Err(Error::Data(format!(
                    "{}: offset {} beyond clip length {d}",
                    event.clip_id, event.offset
                )));
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn clips(&self) -> &BTreeMap<String, ClipInfo> {
        &self.clips
    }

    pub fn contains_clip(&self, clip: &str) -> bool {
        self.clips.contains_key(clip_stem(clip))
    }

    /// Events of one clip, in file order.
    pub fn events_of<'a>(&'a self, clip: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        let key = clip_stem(clip);
        self.events
            .iter()
            .filter(move |e| clip_stem(&e.clip_id) == key)
    }

    /// Class names appearing in the events, sorted.
    pub fn class_names(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.class_name.clone()).collect()
    }

    /// Restricts the set to the given clips (by stem).
    pub fn subset<'a>(&self, clips: impl IntoIterator<Item = &'a str>) -> Self {
        let keep: BTreeSet<&str> = clips.into_iter().map(clip_stem).collect();
        Self {
            events: self
                .events
                .iter()
                .filter(|e| keep.contains(clip_stem(&e.clip_id)))
                .cloned()
                .collect(),
            clips: self
                .clips
                .iter()
                .filter(|(k, _)| keep.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Half-open run of active frames `[start_frame, end_frame)` for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub class_index: usize,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl Segment {
    pub fn new(class_index: usize, start_frame: usize, end_frame: usize) -> Self {
        debug_assert!(start_frame < end_frame);
        Self {
            class_index,
            start_frame,
            end_frame,
        }
    }

    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.end_frame <= self.start_frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_conversions() {
        assert_eq!(frames_to_seconds(0, DEFAULT_FRAME_DURATION), 0.0);
        assert_eq!(frames_to_seconds(431, DEFAULT_FRAME_DURATION), 10.0);
        assert!((frames_to_seconds(9, DEFAULT_FRAME_DURATION) - 9.0 * 10.0 / 431.0).abs() < 1e-15);
        assert!((frames_to_seconds(9, DEFAULT_FRAME_DURATION) - 0.208_816_705).abs() < 1e-9);
    }

    #[test]
    fn margin_frames() {
        assert_eq!(default_margin_frames(DEFAULT_FRAME_DURATION, 0.2), 9);
        assert_eq!(default_margin_frames(DEFAULT_FRAME_DURATION, 0.0), 0);
        assert_eq!(default_margin_frames(0.5, 0.0), 0);
        assert_eq!(default_margin_frames(0.02, 0.2), 10);
    }

    #[test]
    fn seconds_round_trip_within_a_frame() {
        let d = DEFAULT_FRAME_DURATION;
        for i in 0..=1000 {
            let x = 10.0 * i as f64 / 1000.0;
            let back = frames_to_seconds(seconds_to_frames(x, d), d);
            assert!(back <= x + 1e-9 && x - back < d, "x={x} back={back}");
        }
        for f in 0..=431 {
            assert_eq!(seconds_to_frames(frames_to_seconds(f, d), d), f);
        }
    }

    #[test]
    fn clip_prediction_rejects_out_of_range_and_nan() {
        let names = vec!["A".to_string()];
        assert!(ClipPrediction::from_rows("x", names.clone(), &[vec![1.2]], 0.1).is_err());
        assert!(ClipPrediction::from_rows("x", names.clone(), &[vec![-0.1]], 0.1).is_err());
        assert!(ClipPrediction::from_rows("x", names.clone(), &[vec![f64::NAN]], 0.1).is_err());
        assert!(ClipPrediction::from_rows("x", names.clone(), &[], 0.1).is_err());
        assert!(ClipPrediction::from_rows("x", names, &[vec![0.0], vec![1.0]], 0.1).is_ok());
        let dup = vec!["A".to_string(), "A".to_string()];
        assert!(ClipPrediction::from_rows("x", dup, &[vec![0.1, 0.2]], 0.1).is_err());
    }

    #[test]
    fn default_grid_length() {
        let p = ClipPrediction::from_curves(
            "c",
            vec!["A".into()],
            vec![vec![0.0; DEFAULT_FRAMES]],
            DEFAULT_FRAME_DURATION,
        )
        .unwrap();
        assert!((p.duration() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn events_validate_order() {
        assert!(Event::new("a.wav", "Speech", 1.0, 3.0).is_ok());
        assert!(Event::new("a.wav", "Speech", 3.0, 1.0).is_err());
        assert!(Event::new("a.wav", "Speech", 1.0, 1.0).is_err());
        assert!(Event::new("a.wav", "Speech", -1.0, 1.0).is_err());
    }

    #[test]
    fn clip_stem_strips_one_extension() {
        assert_eq!(clip_stem("a.wav"), "a");
        assert_eq!(clip_stem("a"), "a");
        assert_eq!(clip_stem("Y-abc_30.000_40.000.wav"), "Y-abc_30.000_40.000");
        assert_eq!(clip_stem(".hidden"), ".hidden");
    }

    #[test]
    fn annotation_clip_bounds_enforced() {
        let mut set = AnnotationSet::new();
        set.add_clip("a.wav", Some(10.0));
        assert!(set
            .add_event(Event::new("a.wav", "Dog", 1.0, 11.0).unwrap())
            .is_err());
        assert!(set
            .add_event(Event::new("a", "Dog", 1.0, 9.0).unwrap())
            .is_ok());
        assert_eq!(set.clips().len(), 1);
    }
}
