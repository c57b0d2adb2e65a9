//! Event-based scoring with onset/offset collars.
//!
//! A prediction matches a reference of the same clip and class when its
//! onset is within `onset_collar` of the reference onset and its offset is
//! within `max(onset_collar, offset_ratio * reference length)` of the
//! reference offset. Cross-class substitutions are not counted, so the
//! error rate is `(deletions + insertions) / references`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{clip_stem, AnnotationSet, Event};

/// Onset collar of the challenge metric, in seconds.
pub const DEFAULT_ONSET_COLLAR: f64 = 0.2;
/// Offset collar as a fraction of the reference length.
pub const DEFAULT_OFFSET_RATIO: f64 = 0.2;

/// Slack on collar comparisons so that decimal round-off in event times
/// cannot flip a boundary decision.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn n_ref(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn n_pred(&self) -> usize {
        self.tp + self.fp
    }

    /// `2tp / (2tp + fp + fn)`; `None` when the class has neither references
    /// nor predictions.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        (denom > 0).then(|| 2.0 * self.tp as f64 / denom as f64)
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
    }
}

/// Collar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collars {
    pub onset: f64,
    pub offset_ratio: f64,
}

impl Default for Collars {
    fn default() -> Self {
        Self {
            onset: DEFAULT_ONSET_COLLAR,
            offset_ratio: DEFAULT_OFFSET_RATIO,
        }
    }
}

impl Collars {
    pub fn validate(&self) -> Result<()> {
        if !(self.onset.is_finite() && self.onset >= 0.0) {
            return Err(Error::Param(format!(
                "onset collar must be >= 0, got {}",
                self.onset
            )));
        }
        if !(0.0..=1.0).contains(&self.offset_ratio) {
            return Err(Error::Param(format!(
                "offset ratio must lie in [0, 1], got {}",
                self.offset_ratio
            )));
        }
        Ok(())
    }

    fn eligible(&self, r: (f64, f64), p: (f64, f64)) -> bool {
        let offset_collar = self.onset.max(self.offset_ratio * (r.1 - r.0));
        (p.0 - r.0).abs() <= self.onset + TIME_EPS && (p.1 - r.1).abs() <= offset_collar + TIME_EPS
    }
}

/// Greedy matching of one clip/class group, given as `(onset, offset)` pairs.
///
/// References are visited by onset; each takes the eligible unmatched
/// prediction closest in onset (ties: earliest prediction).
pub fn match_intervals(refs: &[(f64, f64)], preds: &[(f64, f64)], collars: &Collars) -> Counts {
    let by_time = |a: &(f64, f64), b: &(f64, f64)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1));
    let mut refs = refs.to_vec();
    refs.sort_by(by_time);
    let mut preds = preds.to_vec();
    preds.sort_by(by_time);

    let mut used = vec![false; preds.len()];
    let mut tp = 0;
    for &r in &refs {
        let mut best: Option<(usize, f64)> = None;
        for (j, &p) in preds.iter().enumerate() {
            if used[j] || !collars.eligible(r, p) {
                continue;
            }
            let d = (p.0 - r.0).abs();
            // strict `<` keeps the earliest prediction on ties
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            tp += 1;
        }
    }
    Counts {
        tp,
        fp: preds.len() - tp,
        fn_: refs.len() - tp,
    }
}

/// Counts of one clip/class pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub clip: String,
    pub class_name: String,
    pub counts: Counts,
}

type Groups = BTreeMap<(String, String), (Vec<(f64, f64)>, Vec<(f64, f64)>)>;

fn group<'a>(
    refs: impl IntoIterator<Item = &'a Event>,
    preds: impl IntoIterator<Item = &'a Event>,
) -> Groups {
    let mut groups: Groups = BTreeMap::new();
    for e in refs {
        groups
            .entry((clip_stem(&e.clip_id).to_string(), e.class_name.clone()))
            .or_default()
            .0
            .push((e.onset, e.offset));
    }
    for e in preds {
        groups
            .entry((clip_stem(&e.clip_id).to_string(), e.class_name.clone()))
            .or_default()
            .1
            .push((e.onset, e.offset));
    }
    groups
}

/// Matches references and predictions within each clip and class.
pub fn match_events(refs: &[Event], preds: &[Event], collars: &Collars) -> Vec<GroupCounts> {
    group(refs, preds)
        .into_iter()
        .map(|((clip, class_name), (r, p))| GroupCounts {
            clip,
            class_name,
            counts: match_intervals(&r, &p, collars),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_name: String,
    pub n_ref: usize,
    #[serde(flatten)]
    pub counts: Counts,
    /// `None` when the class has neither references nor predictions.
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub classes: Vec<ClassScore>,
    /// Mean F1 over classes with references or predictions (0 when there are none).
    pub macro_f1: f64,
    /// `(sum fn + sum fp) / sum n_ref`. With no references it is 0 when
    /// nothing was predicted and infinite otherwise.
    pub error_rate: f64,
    pub total: Counts,
}

impl ScoreReport {
    pub fn from_class_counts(per_class: BTreeMap<String, Counts>) -> Self {
        let mut total = Counts::default();
        let classes: Vec<ClassScore> = per_class
            .into_iter()
            .map(|(class_name, counts)| {
                total += counts;
                ClassScore {
                    class_name,
                    n_ref: counts.n_ref(),
                    counts,
                    f1: counts.f1(),
                }
            })
            .collect();
        let f1s: Vec<f64> = classes.iter().filter_map(|c| c.f1).collect();
        let macro_f1 = if f1s.is_empty() {
            0.0
        } else {
            f1s.iter().sum::<f64>() / f1s.len() as f64
        };
        let n_ref = total.n_ref();
        let errors = total.fn_ + total.fp;
        let error_rate = if n_ref > 0 {
            errors as f64 / n_ref as f64
        } else if errors == 0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            classes,
            macro_f1,
            error_rate,
            total,
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassScore> {
        self.classes.iter().find(|c| c.class_name == name)
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<28} {:>5} {:>5} {:>5} {:>5} {:>7}\n",
            "class", "ref", "tp", "fp", "fn", "F1"
        );
        for c in &self.classes {
            let f1 = c.f1.map_or("-".to_string(), |f| format!("{f:.3}"));
            out.push_str(&format!(
                "{:<28} {:>5} {:>5} {:>5} {:>5} {:>7}\n",
                c.class_name, c.n_ref, c.counts.tp, c.counts.fp, c.counts.fn_, f1
            ));
        }
        out.push_str(&format!(
            "macro-F1 {:.3}\nER {:.3}\n",
            self.macro_f1, self.error_rate
        ));
        out
    }
}

/// Scores predictions against strong annotations, pooling counts per class
/// over all clips.
pub fn score(
    annotations: &AnnotationSet,
    predictions: &[Event],
    collars: &Collars,
) -> Result<ScoreReport> {
    collars.validate()?;
    if let Some(e) = predictions
        .iter()
        .find(|e| !annotations.contains_clip(&e.clip_id))
    {
        return Err(Error::Data(format!(
            "prediction for clip {} which is not in the annotations",
            e.clip_id
        )));
    }
    let mut per_class: BTreeMap<String, Counts> = BTreeMap::new();
    for g in match_events(annotations.events(), predictions, collars) {
        *per_class.entry(g.class_name).or_default() += g.counts;
    }
    Ok(ScoreReport::from_class_counts(per_class))
}
