//! Derivative-free parameter search.
//!
//! [`dichotomic_search`] evaluates a full Cartesian grid inside the current
//! bounds, keeps the best point, narrows every dimension to one grid spacing
//! around it, and repeats for a fixed number of steps. Grid points are
//! evaluated in parallel; the argmax breaks ties on the lexicographically
//! smallest parameter vector, so results do not depend on scheduling.

mod tune;

pub use tune::{
    default_space, optimize_class_dependent, optimize_class_independent, Evaluator, Search,
    TuneOutcome, TuningOptions,
};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueKind {
    Real,
    Integer,
    /// Odd integers, used for smoothing windows.
    OddInteger,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Real => "real",
            ValueKind::Integer => "int",
            ValueKind::OddInteger => "odd",
        }
    }
}

impl FromStr for ValueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(ValueKind::Real),
            "int" | "integer" => Ok(ValueKind::Integer),
            "odd" => Ok(ValueKind::OddInteger),
            _ => Err(Error::Config(format!(
                "unknown value kind {s:?} (real, int, odd)"
            ))),
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: ValueKind,
}

impl Dimension {
    pub fn new(name: &str, lower: f64, upper: f64, kind: ValueKind) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            kind,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("parameter {}: {msg}", self.name)));
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return bad("bounds must be finite");
        }
        if self.lower > self.upper {
            return bad("lower bound exceeds upper bound");
        }
        match self.kind {
            ValueKind::Real => {}
            ValueKind::Integer => {
                if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 {
                    return bad("integer bounds required");
                }
            }
            ValueKind::OddInteger => {
                let odd = |v: f64| v.fract() == 0.0 && (v as i64).rem_euclid(2) == 1;
                if !odd(self.lower) || !odd(self.upper) {
                    return bad("odd integer bounds required");
                }
            }
        }
        Ok(())
    }
}

/// Search bounds plus grid resolution and number of refinement steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub dims: Vec<Dimension>,
    pub points_per_dim: usize,
    pub steps: usize,
}

pub const DEFAULT_POINTS_PER_DIM: usize = 9;
pub const DEFAULT_STEPS: usize = 4;

impl ParameterSpace {
    pub fn new(dims: Vec<Dimension>, points_per_dim: usize, steps: usize) -> Result<Self> {
        let space = Self {
            dims,
            points_per_dim,
            steps,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("parameter space has no dimensions".into()));
        }
        if self.points_per_dim < 2 {
            return Err(Error::Config("points per dimension must be >= 2".into()));
        }
        if self.steps < 1 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        for (i, d) in self.dims.iter().enumerate() {
            d.validate()?;
            if self.dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::Config(format!("duplicate parameter {}", d.name)));
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.iter().map(|d| d.name.clone()).collect()
    }

    pub fn dim(&self, name: &str) -> Option<&Dimension> {
        self.dims.iter().find(|d| d.name == name)
    }

    /// Parses `name = kind lower upper` lines (`#` starts a comment).
    /// Points and steps come from the caller.
    pub fn parse_bounds(
        text: &str,
        source_name: &str,
        points_per_dim: usize,
        steps: usize,
    ) -> Result<Self> {
        let mut dims = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(source_name, idx + 1, m);
            let (name, spec) = line
                .split_once('=')
                .ok_or_else(|| err("expected `name = kind lower upper`".into()))?;
            let parts: Vec<&str> = spec.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(err("expected `name = kind lower upper`".into()));
            }
            let kind: ValueKind = parts[0].parse().map_err(|e: Error| err(e.to_string()))?;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("not a number: {s:?}")))
            };
            let dim = Dimension::new(name.trim(), num(parts[1])?, num(parts[2])?, kind);
            dim.validate().map_err(|e| err(e.to_string()))?;
            dims.push(dim);
        }
        Self::new(dims, points_per_dim, steps)
            .map_err(|e| Error::parse(source_name, 0, e.to_string()))
    }

    pub fn to_bounds_text(&self) -> String {
        self.dims
            .iter()
            .map(|d| format!("{} = {} {} {}\n", d.name, d.kind, d.lower, d.upper))
            .collect()
    }

    /// Step-one grid of every dimension.
    pub fn initial_grid(&self) -> Vec<(String, Vec<f64>)> {
        self.dims
            .iter()
            .map(|d| {
                (
                    d.name.clone(),
                    grid_values(d.lower, d.upper, self.points_per_dim, d.kind),
                )
            })
            .collect()
    }
}

fn snap(v: f64, lo: f64, hi: f64, kind: ValueKind) -> f64 {
    match kind {
        ValueKind::Real => v.clamp(lo, hi),
        ValueKind::Integer => {
            let mut s = v.round();
            if s < lo {
                s += 1.0;
            }
            if s > hi {
                s -= 1.0;
            }
            s
        }
        ValueKind::OddInteger => {
            let mut s = ((v - 1.0) / 2.0).round() * 2.0 + 1.0;
            if s < lo {
                s += 2.0;
            }
            if s > hi {
                s -= 2.0;
            }
            s
        }
    }
}

/// `points` equally spaced values over `[lo, hi]`, snapped to the value kind
/// and deduplicated. Degenerate bounds give the single value `lo`.
pub fn grid_values(lo: f64, hi: f64, points: usize, kind: ValueKind) -> Vec<f64> {
    if lo == hi || points < 2 {
        return vec![snap(lo, lo, hi, kind)];
    }
    let mut out: Vec<f64> = (0..points)
        .map(|i| {
            let v = if i == points - 1 {
                hi
            } else {
                lo + i as f64 * (hi - lo) / (points - 1) as f64
            };
            snap(v, lo, hi, kind)
        })
        .collect();
    out.dedup();
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// True when `(value, point)` beats `(best_value, best)`: higher value, or
/// equal value and lexicographically smaller point.
fn better(value: f64, point: &[f64], best_value: f64, best: &[f64]) -> bool {
    match value.total_cmp(&best_value) {
        Ordering::Greater => true,
        Ordering::Equal => lex_cmp(point, best) == Ordering::Less,
        Ordering::Less => false,
    }
}

fn cartesian(grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grid.iter().fold(vec![Vec::new()], |acc, values| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub bounds: Vec<(f64, f64)>,
    pub grid: Vec<Vec<f64>>,
    pub evaluations: usize,
    pub best: Vec<f64>,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub param_names: Vec<String>,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub trace: Vec<StepTrace>,
}

/// Evaluates every point of `grid` and returns the best one with its value.
fn evaluate_grid<F>(objective: &F, grid: &[Vec<f64>]) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let points = cartesian(grid);
    let values: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let v = objective(p);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    let mut best_idx = 0;
    for i in 1..points.len() {
        if better(values[i], &points[i], values[best_idx], &points[best_idx]) {
            best_idx = i;
        }
    }
    (points[best_idx].clone(), values[best_idx], points.len())
}

/// Exhaustive search over explicit value lists.
pub fn coarse_grid_search<F>(objective: &F, grid: &[(String, Vec<f64>)]) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("grid has no parameters".into()));
    }
    if let Some((name, _)) = grid.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("grid for {name} is empty")));
    }
    let values: Vec<Vec<f64>> = grid.iter().map(|(_, v)| v.clone()).collect();
    let (best, best_value, evaluations) = evaluate_grid(objective, &values);
    let bounds = values
        .iter()
        .map(|v| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    Ok(SearchResult {
        param_names: grid.iter().map(|(n, _)| n.clone()).collect(),
        best: best.clone(),
        best_value,
        evaluations,
        trace: vec![StepTrace {
            bounds,
            grid: values,
            evaluations,
            best,
            best_value,
        }],
    })
}

/// Iterative grid refinement over `space`.
///
/// Each step lays `points_per_dim` values per dimension across the current
/// bounds, evaluates the Cartesian product and recentres the bounds on the
/// step's best point with a half-width of one grid spacing, clipped to the
/// global bounds. The best point over all steps is returned.
pub fn dichotomic_search<F>(objective: &F, space: &ParameterSpace) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    space.validate()?;
    let p = space.points_per_dim;
    let mut bounds: Vec<(f64, f64)> = space.dims.iter().map(|d| (d.lower, d.upper)).collect();
    let mut trace = Vec::with_capacity(space.steps);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;

    for _ in 0..space.steps {
        let grid: Vec<Vec<f64>> = space
            .dims
            .iter()
            .zip(&bounds)
            .map(|(d, &(lo, hi))| grid_values(lo, hi, p, d.kind))
            .collect();
        let (step_best, step_value, n) = evaluate_grid(objective, &grid);
        evaluations += n;
        trace.push(StepTrace {
            bounds: bounds.clone(),
            grid,
            evaluations: n,
            best: step_best.clone(),
            best_value: step_value,
        });

        bounds = space
            .dims
            .iter()
            .zip(&bounds)
            .zip(&step_best)
            .map(|((d, &(lo, hi)), &b)| {
                let spacing = (hi - lo) / (p - 1) as f64;
                ((b - spacing).max(d.lower), (b + spacing).min(d.upper))
            })
            .collect();

        let replace = match &best {
            None => true,
            Some((bp, bv)) => better(step_value, &step_best, *bv, bp),
        };
        if replace {
            best = Some((step_best, step_value));
        }
    }

    let (best, best_value) = best.expect("at least one step");
    Ok(SearchResult {
        param_names: space.names(),
        best,
        best_value,
        evaluations,
        trace,
    })
}
