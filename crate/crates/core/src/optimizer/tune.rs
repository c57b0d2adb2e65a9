//! Tuning of parametric segmenters against strong annotations.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{
    coarse_grid_search, dichotomic_search, Dimension, ParameterSpace, SearchResult, ValueKind,
};
use crate::config::{ClassParams, Family, Method, Parameters, SegmenterConfig};
use crate::dataio::{derive_weak_tags, WeakTags};
use crate::error::{Error, Result};
use crate::metrics::{match_intervals, Collars, Counts, ScoreReport};
use crate::segmentation::rule_segments;
use crate::smoothing::smooth_moving_average;
use crate::types::{clip_stem, frames_to_seconds, AnnotationSet, ClipPrediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningOptions {
    pub collars: Collars,
    pub min_gap_frames: usize,
    pub min_len_frames: usize,
    /// Restrict each clip to its annotated classes (audio-tagging oracle).
    pub use_oracle: bool,
}

/// How the parameter vector is searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Search {
    /// Exhaustive search over explicit value lists.
    Grid(Vec<(String, Vec<f64>)>),
    Dichotomic(ParameterSpace),
}

impl Search {
    fn names(&self) -> Vec<String> {
        match self {
            Search::Grid(g) => g.iter().map(|(n, _)| n.clone()).collect(),
            Search::Dichotomic(s) => s.names(),
        }
    }

    fn run<F>(&self, objective: &F) -> Result<SearchResult>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        match self {
            Search::Grid(g) => coarse_grid_search(objective, g),
            Search::Dichotomic(s) => dichotomic_search(objective, s),
        }
    }

    /// Index into the search vector of each parameter of `family`.
    fn layout(&self, family: Family) -> Result<Vec<usize>> {
        let names = self.names();
        let wanted = family.param_names();
        if let Some(extra) = names.iter().find(|n| !wanted.contains(&n.as_str())) {
            return Err(Error::Config(format!(
                "parameter {extra} does not apply to {family:?} methods"
            )));
        }
        wanted
            .iter()
            .map(|w| {
                names
                    .iter()
                    .position(|n| n == w)
                    .ok_or_else(|| Error::Config(format!("search space is missing parameter {w}")))
            })
            .collect()
    }
}

/// Default search bounds for a method family.
pub fn default_space(
    family: Family,
    points_per_dim: usize,
    steps: usize,
) -> Result<ParameterSpace> {
    let window = Dimension::new("window", 1.0, 31.0, ValueKind::OddInteger);
    let unit = |n: &str| Dimension::new(n, 0.0, 1.0, ValueKind::Real);
    let dims = match family {
        Family::DataWise => {
            return Err(Error::Config(
                "data-wise methods have no tunable parameters".into(),
            ))
        }
        Family::Absolute => vec![window, unit("threshold")],
        Family::Hysteresis => vec![window, unit("t_high"), unit("t_low")],
        Family::Slope => vec![
            window,
            Dimension::new("k", 1.0, 5.0, ValueKind::Integer),
            Dimension::new("rise", 0.0, 0.3, ValueKind::Real),
            Dimension::new("fall", 0.0, 0.3, ValueKind::Real),
            Dimension::new("plateau_eps", 0.0, 0.0, ValueKind::Real),
            Dimension::new("plateau_len", 10.0, 10.0, ValueKind::Integer),
        ],
    };
    ParameterSpace::new(dims, points_per_dim, steps)
}

type Curves = Vec<Vec<f64>>;
/// Smoothed curves of every clip, keyed by `(class, window)`.
type CurveCache = Mutex<HashMap<(usize, usize), Arc<OnceLock<Curves>>>>;

/// Scores candidate parameters on a fixed dataset.
///
/// Smoothed curves are cached per `(class, window)`. References of clips
/// outside the dataset are ignored.
pub struct Evaluator<'a> {
    clips: &'a [ClipPrediction],
    class_names: Vec<String>,
    /// `refs[class][clip]`
    refs: Vec<Vec<Vec<(f64, f64)>>>,
    /// `active[class][clip]`: whether the class is segmented in the clip.
    active: Vec<Vec<bool>>,
    /// Annotated classes missing from the prediction class list; all deletions.
    unknown_classes: BTreeMap<String, Counts>,
    options: TuningOptions,
    cache: CurveCache,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        clips: &'a [ClipPrediction],
        annotations: &AnnotationSet,
        options: TuningOptions,
    ) -> Result<Self> {
        options.collars.validate()?;
        let first = clips
            .first()
            .ok_or_else(|| Error::Data("cannot tune on an empty dataset".into()))?;
        let class_names = first.class_names().to_vec();
        for clip in clips {
            if clip.class_names() != class_names.as_slice() {
                return Err(Error::Data(format!(
                    "clip {} has a different class list than {}",
                    clip.clip_id(),
                    first.clip_id()
                )));
            }
            if !annotations.contains_clip(clip.clip_id()) {
                return Err(Error::Data(format!(
                    "clip {} has no annotations",
                    clip.clip_id()
                )));
            }
        }

        let clip_index: HashMap<&str, usize> = clips
            .iter()
            .enumerate()
            .map(|(i, c)| (clip_stem(c.clip_id()), i))
            .collect();
        let mut refs = vec![vec![Vec::new(); clips.len()]; class_names.len()];
        let mut unknown_classes: BTreeMap<String, Counts> = BTreeMap::new();
        for e in annotations.events() {
            let Some(&i) = clip_index.get(clip_stem(&e.clip_id)) else {
                continue;
            };
            match class_names.iter().position(|c| *c == e.class_name) {
                Some(c) => refs[c][i].push((e.onset, e.offset)),
                None => unknown_classes.entry(e.class_name.clone()).or_default().fn_ += 1,
            }
        }

        let oracle: Option<WeakTags> = options.use_oracle.then(|| derive_weak_tags(annotations));
        let active = class_names
            .iter()
            .map(|name| {
                clips
                    .iter()
                    .map(|clip| {
                        oracle
                            .as_ref()
                            .is_none_or(|t| t.has_tag(clip.clip_id(), name))
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            clips,
            class_names,
            refs,
            active,
            unknown_classes,
            options,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn options(&self) -> &TuningOptions {
        &self.options
    }

    fn smoothed(&self, class_index: usize, window: usize) -> Result<Arc<OnceLock<Curves>>> {
        let cell = {
            let mut cache = self.cache.lock().expect("cache lock");
            cache.entry((class_index, window)).or_default().clone()
        };
        if cell.get().is_none() {
            let curves = self
                .clips
                .iter()
                .enumerate()
                .map(|(i, clip)| {
                    if self.active[class_index][i] {
                        smooth_moving_average(clip.curve(class_index), window)
                    } else {
                        Ok(Vec::new())
                    }
                })
                .collect::<Result<Curves>>()?;
            let _ = cell.set(curves);
        }
        Ok(cell)
    }

    /// Pooled counts of one class over the dataset under `params`.
    pub fn class_counts(&self, class_index: usize, params: &ClassParams) -> Result<Counts> {
        params.validate()?;
        let cell = self.smoothed(class_index, params.window)?;
        let curves = cell.get().expect("initialised");
        let mut total = Counts::default();
        for (i, clip) in self.clips.iter().enumerate() {
            let refs = &self.refs[class_index][i];
            if !self.active[class_index][i] {
                total.fn_ += refs.len();
                continue;
            }
            let segments = rule_segments(
                &curves[i],
                &params.rule,
                class_index,
                self.options.min_gap_frames,
                self.options.min_len_frames,
            )?;
            let d = clip.frame_duration();
            let preds: Vec<(f64, f64)> = segments
                .iter()
                .map(|s| {
                    (
                        frames_to_seconds(s.start_frame, d),
                        frames_to_seconds(s.end_frame, d),
                    )
                })
                .collect();
            total += match_intervals(refs, &preds, &self.options.collars);
        }
        Ok(total)
    }

    /// Score report of a full parameter assignment, one entry per class.
    pub fn report(&self, params: &[ClassParams]) -> Result<ScoreReport> {
        let mut per_class = self.unknown_classes.clone();
        for (c, p) in params.iter().enumerate() {
            per_class.insert(self.class_names[c].clone(), self.class_counts(c, p)?);
        }
        Ok(ScoreReport::from_class_counts(per_class))
    }
}

/// Result of a tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub config: SegmenterConfig,
    /// One search for class-independent methods; one per class otherwise,
    /// labelled with the class name.
    pub searches: Vec<(String, SearchResult)>,
    pub evaluations: usize,
    /// Macro-F1 of the returned configuration on the tuning data.
    pub macro_f1: f64,
}

fn check_method(method: Method, class_dependent: bool) -> Result<()> {
    if method.is_statistic() {
        return Err(Error::Config(format!(
            "{method} has no parameters to optimize"
        )));
    }
    if method.is_class_dependent() != class_dependent {
        return Err(Error::Config(format!(
            "{method} is class-{}; use the other optimizer",
            if class_dependent {
                "independent"
            } else {
                "dependent"
            }
        )));
    }
    Ok(())
}

fn decode(family: Family, layout: &[usize], x: &[f64]) -> Option<ClassParams> {
    let values: Vec<f64> = layout.iter().map(|&i| x[i]).collect();
    ClassParams::from_values(family, &values)
        .ok()
        .filter(|p| p.validate().is_ok())
}

/// One parameter set shared by all classes, maximizing macro-F1.
///
/// Infeasible points (for example `t_low > t_high`) score `-inf`.
pub fn optimize_class_independent(
    method: Method,
    search: &Search,
    evaluator: &Evaluator,
) -> Result<TuneOutcome> {
    check_method(method, false)?;
    let family = method.family();
    let layout = search.layout(family)?;
    let n_classes = evaluator.class_names().len();

    let objective = |x: &[f64]| -> f64 {
        match decode(family, &layout, x) {
            Some(p) => evaluator
                .report(&vec![p; n_classes])
                .map_or(f64::NEG_INFINITY, |r| r.macro_f1),
            None => f64::NEG_INFINITY,
        }
    };
    let result = search.run(&objective)?;
    let best = decode(family, &layout, &result.best)
        .ok_or_else(|| Error::Config("no feasible point in the search space".into()))?;
    let opts = evaluator.options();
    Ok(TuneOutcome {
        config: SegmenterConfig {
            method,
            params: Parameters::Global(best),
            min_gap_frames: opts.min_gap_frames,
            min_len_frames: opts.min_len_frames,
        },
        evaluations: result.evaluations,
        macro_f1: result.best_value,
        searches: vec![("all".to_string(), result)],
    })
}

/// An independent search per class, each maximizing that class's F1.
///
/// Classes do not interact, so maximizing every per-class F1 maximizes the
/// macro-F1 of the combined configuration.
pub fn optimize_class_dependent(
    method: Method,
    search: &Search,
    evaluator: &Evaluator,
) -> Result<TuneOutcome> {
    check_method(method, true)?;
    let family = method.family();
    let layout = search.layout(family)?;

    let mut searches = Vec::new();
    let mut params = Vec::new();
    for (c, name) in evaluator.class_names().iter().enumerate() {
        let objective = |x: &[f64]| -> f64 {
            match decode(family, &layout, x) {
                Some(p) => evaluator
                    .class_counts(c, &p)
                    .map_or(f64::NEG_INFINITY, |n| n.f1().unwrap_or(0.0)),
                None => f64::NEG_INFINITY,
            }
        };
        let result = search.run(&objective)?;
        let best = decode(family, &layout, &result.best)
            .ok_or_else(|| Error::Config(format!("no feasible point for class {name}")))?;
        params.push(best);
        searches.push((name.clone(), result));
    }

    let macro_f1 = evaluator.report(&params)?.macro_f1;
    let opts = evaluator.options();
    Ok(TuneOutcome {
        config: SegmenterConfig {
            method,
            params: Parameters::PerClass(
                evaluator
                    .class_names()
                    .iter()
                    .cloned()
                    .zip(params)
                    .collect(),
            ),
            min_gap_frames: opts.min_gap_frames,
            min_len_frames: opts.min_len_frames,
        },
        evaluations: searches.iter().map(|(_, r)| r.evaluations).sum(),
        macro_f1,
        searches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Event;

    fn toy() -> (Vec<ClipPrediction>, AnnotationSet) {
        // class A: clean boxcar on frames 10..30; class B: weaker bump on 40..60
        let a: Vec<f64> = (0..100)
            .map(|i| if (10..30).contains(&i) { 0.9 } else { 0.1 })
            .collect();
        let b: Vec<f64> = (0..100)
            .map(|i| if (40..60).contains(&i) { 0.35 } else { 0.05 })
            .collect();
        let clip = ClipPrediction::from_curves("x", vec!["A".into(), "B".into()], vec![a, b], 0.1)
            .unwrap();
        let mut ann = AnnotationSet::new();
        ann.add_event(Event::new("x.wav", "A", 1.0, 3.0).unwrap())
            .unwrap();
        ann.add_event(Event::new("x.wav", "B", 4.0, 6.0).unwrap())
            .unwrap();
        (vec![clip], ann)
    }

    fn opts() -> TuningOptions {
        TuningOptions {
            collars: Collars::default(),
            min_gap_frames: 0,
            min_len_frames: 0,
            use_oracle: true,
        }
    }

    #[test]
    fn class_dependent_finds_per_class_thresholds() {
        let (clips, ann) = toy();
        let ev = Evaluator::new(&clips, &ann, opts()).unwrap();
        let search = Search::Grid(vec![
            ("window".into(), vec![1.0]),
            ("threshold".into(), vec![0.2, 0.5, 0.8]),
        ]);
        let cd = optimize_class_dependent(Method::Cda, &search, &ev).unwrap();
        assert_eq!(cd.macro_f1, 1.0);
        assert_eq!(cd.evaluations, 6);
        let ci = optimize_class_independent(Method::Cia, &search, &ev).unwrap();
        assert!(cd.macro_f1 >= ci.macro_f1);
        assert_eq!(ci.macro_f1, 1.0);
        assert_eq!(
            ci.config.class_params("A").unwrap().rule,
            crate::config::Rule::Absolute { threshold: 0.2 }
        );
    }

    #[test]
    fn wrong_method_or_space() {
        let (clips, ann) = toy();
        let ev = Evaluator::new(&clips, &ann, opts()).unwrap();
        let space = default_space(Family::Absolute, 3, 1).unwrap();
        let s = Search::Dichotomic(space);
        assert!(optimize_class_independent(Method::Cda, &s, &ev).is_err());
        assert!(optimize_class_dependent(Method::Cia, &s, &ev).is_err());
        assert!(optimize_class_independent(Method::Cidwa, &s, &ev).is_err());
        assert!(optimize_class_independent(Method::Cih, &s, &ev).is_err());
    }

    #[test]
    fn infeasible_hysteresis_points_are_skipped() {
        let (clips, ann) = toy();
        let ev = Evaluator::new(&clips, &ann, opts()).unwrap();
        let space = default_space(Family::Hysteresis, 5, 2).unwrap();
        let r = optimize_class_independent(Method::Cih, &Search::Dichotomic(space), &ev).unwrap();
        let p = r.config.class_params("A").unwrap();
        assert!(p.validate().is_ok());
        assert!(r.searches[0].1.trace[0].best_value > f64::NEG_INFINITY);
    }

    #[test]
    fn unannotated_clip_rejected() {
        let (clips, _) = toy();
        assert!(Evaluator::new(&clips, &AnnotationSet::new(), opts()).is_err());
    }
}
