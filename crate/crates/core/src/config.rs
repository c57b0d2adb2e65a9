//! Segmenter configuration and its flat `key = value` file format.
//!
//! ```text
//! method = CDA
//! min_gap_frames = 9
//! min_len_frames = 9
//! class.Speech.window = 9
//! class.Speech.threshold = 0.45
//! ```
//!
//! Class-independent methods use bare keys (`window = 5`); class-dependent
//! methods prefix every parameter with `class.<name>.`. Lines starting with
//! `#` are comments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::check_window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Class-independent data-wise average.
    Cidwa,
    /// Class-dependent data-wise average.
    Cddwa,
    Cia,
    Cda,
    Cih,
    Cdh,
    Cis,
    Cds,
}

/// Binarization family behind a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    DataWise,
    Absolute,
    Hysteresis,
    Slope,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Cidwa,
        Method::Cddwa,
        Method::Cia,
        Method::Cda,
        Method::Cih,
        Method::Cdh,
        Method::Cis,
        Method::Cds,
    ];

    pub fn family(self) -> Family {
        match self {
            Method::Cidwa | Method::Cddwa => Family::DataWise,
            Method::Cia | Method::Cda => Family::Absolute,
            Method::Cih | Method::Cdh => Family::Hysteresis,
            Method::Cis | Method::Cds => Family::Slope,
        }
    }

    pub fn is_class_dependent(self) -> bool {
        matches!(
            self,
            Method::Cddwa | Method::Cda | Method::Cdh | Method::Cds
        )
    }

    pub fn is_statistic(self) -> bool {
        self.family() == Family::DataWise
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cidwa => "CIDWA",
            Method::Cddwa => "CDDWA",
            Method::Cia => "CIA",
            Method::Cda => "CDA",
            Method::Cih => "CIH",
            Method::Cdh => "CDH",
            Method::Cis => "CIS",
            Method::Cds => "CDS",
        }
    }

    /// The class-independent counterpart of a class-dependent method, and vice versa.
    pub fn counterpart(self) -> Method {
        match self {
            Method::Cidwa => Method::Cddwa,
            Method::Cddwa => Method::Cidwa,
            Method::Cia => Method::Cda,
            Method::Cda => Method::Cia,
            Method::Cih => Method::Cdh,
            Method::Cdh => Method::Cih,
            Method::Cis => Method::Cds,
            Method::Cds => Method::Cis,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?} (expected one of CIDWA, CDDWA, CIA, CDA, CIH, CDH, CIS, CDS)"
                ))
            })
    }
}

impl Family {
    /// Names of the tunable parameters, smoothing window first.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::DataWise => &[],
            Family::Absolute => &["window", "threshold"],
            Family::Hysteresis => &["window", "t_high", "t_low"],
            Family::Slope => &["window", "k", "rise", "fall", "plateau_eps", "plateau_len"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeParams {
    /// Slope lag in frames.
    pub k: usize,
    /// Minimum slope that opens a segment.
    pub rise: f64,
    /// Minimum negative slope (magnitude) that closes a segment.
    pub fall: f64,
    /// Slopes with magnitude below this count as flat.
    pub plateau_eps: f64,
    /// Consecutive flat frames that close a segment.
    pub plateau_len: usize,
}

impl SlopeParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Param("slope lag k must be >= 1".into()));
        }
        for (name, v) in [
            ("rise", self.rise),
            ("fall", self.fall),
            ("plateau_eps", self.plateau_eps),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Param(format!("slope {name} must be >= 0, got {v}")));
            }
        }
        if self.plateau_len < 1 {
            return Err(Error::Param("plateau_len must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    Absolute { threshold: f64 },
    Hysteresis { high: f64, low: f64 },
    Slope(SlopeParams),
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Param(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

impl Rule {
    pub fn family(&self) -> Family {
        match self {
            Rule::Absolute { .. } => Family::Absolute,
            Rule::Hysteresis { .. } => Family::Hysteresis,
            Rule::Slope(_) => Family::Slope,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Rule::Absolute { threshold } => check_unit("threshold", threshold),
            Rule::Hysteresis { high, low } => {
                check_unit("t_high", high)?;
                check_unit("t_low", low)?;
                if low > high {
                    return Err(Error::Param(format!(
                        "t_low ({low}) must not exceed t_high ({high})"
                    )));
                }
                Ok(())
            }
            Rule::Slope(p) => p.validate(),
        }
    }
}

/// Parameters of one class (or of all classes, for class-independent methods).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub window: usize,
    pub rule: Rule,
}

impl ClassParams {
    pub fn validate(&self) -> Result<()> {
        check_window(self.window)?;
        self.rule.validate()
    }

    /// Values in [`Family::param_names`] order.
    pub fn values(&self) -> Vec<f64> {
        let w = self.window as f64;
        match self.rule {
            Rule::Absolute { threshold } => vec![w, threshold],
            Rule::Hysteresis { high, low } => vec![w, high, low],
            Rule::Slope(p) => vec![
                w,
                p.k as f64,
                p.rise,
                p.fall,
                p.plateau_eps,
                p.plateau_len as f64,
            ],
        }
    }

    /// Builds parameters from a value vector in [`Family::param_names`] order.
    ///
    /// Integer parameters are rounded. No validation is done here.
    pub fn from_values(family: Family, values: &[f64]) -> Result<Self> {
        let names = family.param_names();
        if family == Family::DataWise || values.len() != names.len() {
            return Err(Error::Config(format!(
                "expected {} values for {family:?}, got {}",
                names.len(),
                values.len()
            )));
        }
        let as_count = |v: f64| v.round().max(0.0) as usize;
        let rule = match family {
            Family::Absolute => Rule::Absolute {
                threshold: values[1],
            },
            Family::Hysteresis => Rule::Hysteresis {
                high: values[1],
                low: values[2],
            },
            Family::Slope => Rule::Slope(SlopeParams {
                k: as_count(values[1]),
                rise: values[2],
                fall: values[3],
                plateau_eps: values[4],
                plateau_len: as_count(values[5]),
            }),
            Family::DataWise => unreachable!(),
        };
        Ok(ClassParams {
            window: as_count(values[0]),
            rule,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parameters {
    /// Data-wise methods take their thresholds from dataset statistics.
    None,
    Global(ClassParams),
    PerClass(BTreeMap<String, ClassParams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub method: Method,
    pub params: Parameters,
    pub min_gap_frames: usize,
    pub min_len_frames: usize,
}

impl SegmenterConfig {
    /// Configuration for a data-wise method.
    pub fn statistic(method: Method, min_gap_frames: usize, min_len_frames: usize) -> Self {
        Self {
            method,
            params: Parameters::None,
            min_gap_frames,
            min_len_frames,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let family = self.method.family();
        let check = |p: &ClassParams| -> Result<()> {
            if p.rule.family() != family {
                return Err(Error::Config(format!(
                    "{} expects {family:?} parameters, got {:?}",
                    self.method,
                    p.rule.family()
                )));
            }
            p.validate()
        };
        match (
            &self.params,
            self.method.is_statistic(),
            self.method.is_class_dependent(),
        ) {
            (Parameters::None, true, _) => Ok(()),
            (Parameters::Global(p), false, false) => check(p),
            (Parameters::PerClass(map), false, true) => map.values().try_for_each(check),
            _ => Err(Error::Config(format!(
                "parameter layout does not fit method {}",
                self.method
            ))),
        }
    }

    /// Parameters applying to `class_name`, for parametric methods.
    pub fn class_params(&self, class_name: &str) -> Result<&ClassParams> {
        match &self.params {
            Parameters::Global(p) => Ok(p),
            Parameters::PerClass(map) => map.get(class_name).ok_or_else(|| {
                Error::Config(format!(
                    "{} configuration has no parameters for class {class_name}",
                    self.method
                ))
            }),
            Parameters::None => Err(Error::Config(format!(
                "{} has no per-class parameters",
                self.method
            ))),
        }
    }

    /// Parses the key-value format. Margins missing from the file take the given defaults.
    pub fn parse_kv(text: &str, source_name: &str, default_margin_frames: usize) -> Result<Self> {
        let mut method = None;
        let mut min_gap = None;
        let mut min_len = None;
        let mut global: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut per_class: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, line_no, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            let parse_count = |v: &str| {
                v.parse::<usize>().map_err(|_| {
                    Error::parse(
                        source_name,
                        line_no,
                        format!("expected an integer, got {v:?}"),
                    )
                })
            };
            match key {
                "method" => {
                    method = Some(
                        value
                            .parse::<Method>()
                            .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?,
                    )
                }
                "min_gap_frames" => min_gap = Some(parse_count(&value)?),
                "min_len_frames" => min_len = Some(parse_count(&value)?),
                _ => {
                    if let Some(rest) = key.strip_prefix("class.") {
                        let (class, param) = rest.rsplit_once('.').ok_or_else(|| {
                            Error::parse(source_name, line_no, "expected class.<name>.<parameter>")
                        })?;
                        per_class
                            .entry(class.to_string())
                            .or_default()
                            .insert(param.to_string(), (line_no, value));
                    } else {
                        global.insert(key.to_string(), (line_no, value));
                    }
                }
            }
        }

        let method = method.ok_or_else(|| Error::parse(source_name, 0, "missing `method`"))?;
        let family = method.family();
        let build = |entries: &BTreeMap<String, (usize, String)>,
                     scope: &str|
         -> Result<ClassParams> {
            let names = family.param_names();
            if let Some((k, (line, _))) = entries.iter().find(|(k, _)| !names.contains(&k.as_str()))
            {
                return Err(Error::parse(
                    source_name,
                    *line,
                    format!("unknown parameter {k:?} for {method}"),
                ));
            }
            let values = names
                .iter()
                .map(|name| {
                    let (line, v) = entries.get(*name).ok_or_else(|| {
                        Error::parse(source_name, 0, format!("{scope}: missing parameter {name}"))
                    })?;
                    v.parse::<f64>().map_err(|_| {
                        Error::parse(source_name, *line, format!("{name}: not a number: {v:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            for (name, v) in names.iter().zip(&values) {
                if matches!(*name, "window" | "k" | "plateau_len") && v.fract() != 0.0 {
                    let line = entries[*name].0;
                    return Err(Error::parse(
                        source_name,
                        line,
                        format!("{name} must be an integer"),
                    ));
                }
            }
            ClassParams::from_values(family, &values)
        };

        let params = if method.is_statistic() {
            if let Some((k, (line, _))) = global.iter().next() {
                return Err(Error::parse(
                    source_name,
                    *line,
                    format!("{method} takes no parameter {k:?}"),
                ));
            }
            if !per_class.is_empty() {
                return Err(Error::parse(
                    source_name,
                    0,
                    format!("{method} takes no class parameters"),
                ));
            }
            Parameters::None
        } else if method.is_class_dependent() {
            if let Some((k, (line, _))) = global.iter().next() {
                return Err(Error::parse(
                    source_name,
                    *line,
                    format!("{method} is class-dependent; use class.<name>.{k}"),
                ));
            }
            Parameters::PerClass(
                per_class
                    .iter()
                    .map(|(c, entries)| Ok((c.clone(), build(entries, &format!("class {c}"))?)))
                    .collect::<Result<_>>()?,
            )
        } else {
            if !per_class.is_empty() {
                return Err(Error::parse(
                    source_name,
                    0,
                    format!("{method} is class-independent; class.* keys are not allowed"),
                ));
            }
            Parameters::Global(build(&global, "global")?)
        };

        let config = SegmenterConfig {
            method,
            params,
            min_gap_frames: min_gap.unwrap_or(default_margin_frames),
            min_len_frames: min_len.unwrap_or(default_margin_frames),
        };
        config
            .validate()
            .map_err(|e| Error::parse(source_name, 0, e.to_string()))?;
        Ok(config)
    }

    /// Writes the key-value format. Floats use shortest round-trip notation.
    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "method = {}\nmin_gap_frames = {}\nmin_len_frames = {}\n",
            self.method, self.min_gap_frames, self.min_len_frames
        );
        let family = self.method.family();
        let mut emit = |prefix: &str, p: &ClassParams| {
            for (name, v) in family.param_names().iter().zip(p.values()) {
                out.push_str(&format!("{prefix}{name} = {v}\n"));
            }
        };
        match &self.params {
            Parameters::None => {}
            Parameters::Global(p) => emit("", p),
            Parameters::PerClass(map) => {
                for (class, p) in map {
                    emit(&format!("class.{class}."), p);
                }
            }
        }
        out
    }
}
