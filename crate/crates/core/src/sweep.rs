//! Curve sweeps over one query parameter, with figure presets and CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::{self, BoundResult};
use crate::ecsq::{binary_bound_at_rate, binary_quantizer, design_ecsq, overline_de_expansion, shannon_dr};
use crate::error::{Error, Result};
use crate::oracle::GridSpec;
use crate::scalar::{ExtReal, GaussianSource, Measure, RdpQuery, LOG_2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Rate,
    Common,
    Perception,
    Theta,
    Lambda,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Rate => "R",
            SweepVariable::Common => "Rc",
            SweepVariable::Perception => "P",
            SweepVariable::Theta => "theta",
            SweepVariable::Lambda => "lambda",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "rate" => Ok(SweepVariable::Rate),
            "Rc" | "common" => Ok(SweepVariable::Common),
            "P" | "perception" => Ok(SweepVariable::Perception),
            "theta" => Ok(SweepVariable::Theta),
            "lambda" => Ok(SweepVariable::Lambda),
            other => Err(Error::usage(format!(
                "unknown sweep variable '{other}' (expected R, Rc, P, theta or lambda)"
            ))),
        }
    }
}

/// A named output column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Lower,
    ImprovedLower,
    Upper,
    Induced,
    /// `improved_lower − lower`.
    Gap,
    LowerSigma,
    ImprovedSigma,
    ImprovedAlpha,
    /// Binary-quantizer distortion at entropy `R`.
    Binary,
    Shannon,
    Expansion,
    BinaryRate,
    BinaryDistortion,
    EcsqEntropy,
    EcsqDistortion,
    EcsqCells,
}

const ALL_SELECTORS: [Selector; 16] = [
    Selector::Lower,
    Selector::ImprovedLower,
    Selector::Upper,
    Selector::Induced,
    Selector::Gap,
    Selector::LowerSigma,
    Selector::ImprovedSigma,
    Selector::ImprovedAlpha,
    Selector::Binary,
    Selector::Shannon,
    Selector::Expansion,
    Selector::BinaryRate,
    Selector::BinaryDistortion,
    Selector::EcsqEntropy,
    Selector::EcsqDistortion,
    Selector::EcsqCells,
];

impl Selector {
    pub fn name(self) -> &'static str {
        match self {
            Selector::Lower => "lower",
            Selector::ImprovedLower => "improved_lower",
            Selector::Upper => "upper",
            Selector::Induced => "induced",
            Selector::Gap => "gap",
            Selector::LowerSigma => "lower_sigma",
            Selector::ImprovedSigma => "improved_sigma",
            Selector::ImprovedAlpha => "improved_alpha",
            Selector::Binary => "binary",
            Selector::Shannon => "shannon",
            Selector::Expansion => "expansion",
            Selector::BinaryRate => "binary_rate",
            Selector::BinaryDistortion => "binary_distortion",
            Selector::EcsqEntropy => "ecsq_entropy",
            Selector::EcsqDistortion => "ecsq_distortion",
            Selector::EcsqCells => "ecsq_cells",
        }
    }

    fn is_distortion(self) -> bool {
        matches!(
            self,
            Selector::Lower
                | Selector::ImprovedLower
                | Selector::Upper
                | Selector::Induced
                | Selector::Gap
                | Selector::Binary
                | Selector::Shannon
                | Selector::Expansion
                | Selector::BinaryDistortion
                | Selector::EcsqDistortion
        )
    }

    fn needs_w2(self) -> bool {
        matches!(
            self,
            Selector::ImprovedLower | Selector::Gap | Selector::ImprovedSigma | Selector::ImprovedAlpha
        )
    }

    fn allowed_for(self, v: SweepVariable) -> bool {
        match v {
            SweepVariable::Theta => matches!(self, Selector::BinaryRate | Selector::BinaryDistortion),
            SweepVariable::Lambda => {
                matches!(
                    self,
                    Selector::EcsqEntropy | Selector::EcsqDistortion | Selector::EcsqCells
                )
            }
            _ => !matches!(
                self,
                Selector::BinaryRate
                    | Selector::BinaryDistortion
                    | Selector::EcsqEntropy
                    | Selector::EcsqDistortion
                    | Selector::EcsqCells
            ),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_SELECTORS
            .iter()
            .copied()
            .find(|sel| sel.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ALL_SELECTORS.iter().map(|s| s.name()).collect();
                Error::usage(format!("unknown selector '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// One sweep: the swept variable and its grid, the remaining query fields
/// (the swept field of `fixed` is ignored) and the output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub range: GridSpec,
    pub fixed: RdpQuery,
    pub selectors: Vec<Selector>,
    /// Divide distortion columns by `σ²_X`.
    pub normalize: bool,
    /// Level budget for `lambda` sweeps.
    pub n_max: usize,
    /// Initialisation seed for `lambda` sweeps.
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(variable: SweepVariable, range: GridSpec, fixed: RdpQuery, selectors: Vec<Selector>) -> Result<Self> {
        let cfg = SweepConfig {
            variable,
            range,
            fixed,
            selectors,
            normalize: false,
            n_max: 8,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.selectors.is_empty() {
            return Err(Error::usage("a sweep needs at least one selector"));
        }
        for &sel in &self.selectors {
            if !sel.allowed_for(self.variable) {
                return Err(Error::usage(format!(
                    "selector '{sel}' cannot be used when sweeping {}",
                    self.variable
                )));
            }
            if sel.needs_w2() && self.fixed.measure != Measure::W2Sq {
                return Err(Error::usage(format!("selector '{sel}' requires --measure w2")));
            }
        }
        if matches!(
            self.variable,
            SweepVariable::Rate | SweepVariable::Common | SweepVariable::Perception
        ) && self.range.lo < 0.0
        {
            return Err(Error::domain(format!("{} cannot be negative", self.variable)));
        }
        if self.variable == SweepVariable::Lambda && self.n_max == 0 {
            return Err(Error::usage("n_max must be at least 1"));
        }
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        std::iter::once(self.variable.name().to_string())
            .chain(self.selectors.iter().map(|s| s.name().to_string()))
            .collect()
    }

    fn query_at(&self, x: f64) -> Result<RdpQuery> {
        let v = ExtReal::new(x)?;
        Ok(match self.variable {
            SweepVariable::Rate => self.fixed.with_rate(v),
            SweepVariable::Common => self.fixed.with_common_randomness(v),
            SweepVariable::Perception => self.fixed.with_perception(v),
            SweepVariable::Theta | SweepVariable::Lambda => self.fixed,
        })
    }

    fn row_at(&self, x: f64) -> Result<Vec<Option<f64>>> {
        let src = &self.fixed.source;
        let mut row = Vec::with_capacity(self.selectors.len() + 1);
        row.push(Some(x));
        match self.variable {
            SweepVariable::Theta => {
                let (_, rate, d) = binary_quantizer(x, src)?;
                for &sel in &self.selectors {
                    row.push(Some(if sel == Selector::BinaryRate { rate } else { d }));
                }
            }
            SweepVariable::Lambda => {
                let design = design_ecsq(src, x, self.n_max, self.seed)?;
                for &sel in &self.selectors {
                    row.push(Some(match sel {
                        Selector::EcsqEntropy => design.metrics.entropy,
                        Selector::EcsqDistortion => design.metrics.distortion,
                        _ => design.quantizer.len() as f64,
                    }));
                }
            }
            _ => {
                let q = self.query_at(x)?;
                let mut cache = PointCache::default();
                for &sel in &self.selectors {
                    row.push(cache.eval(sel, &q)?);
                }
            }
        }
        if self.normalize {
            let var = src.variance();
            for (cell, sel) in row.iter_mut().skip(1).zip(&self.selectors) {
                if sel.is_distortion() {
                    *cell = cell.map(|v| v / var);
                }
            }
        }
        Ok(row)
    }

    /// Evaluates every grid point (in parallel) and returns rows in grid
    /// order.
    pub fn run(&self) -> Result<Vec<Vec<Option<f64>>>> {
        self.validate()?;
        (0..self.range.points)
            .into_par_iter()
            .map(|i| self.row_at(self.range.node(i)))
            .collect()
    }
}

#[derive(Default)]
struct PointCache {
    lower: Option<BoundResult>,
    improved: Option<BoundResult>,
}

impl PointCache {
    fn lower(&mut self, q: &RdpQuery) -> Result<BoundResult> {
        if self.lower.is_none() {
            self.lower = Some(bounds::lower(q)?);
        }
        Ok(self.lower.expect("just set"))
    }

    fn improved(&mut self, q: &RdpQuery) -> Result<BoundResult> {
        if self.improved.is_none() {
            self.improved = Some(bounds::improved_lower_w2(q)?);
        }
        Ok(self.improved.expect("just set"))
    }

    fn eval(&mut self, sel: Selector, q: &RdpQuery) -> Result<Option<f64>> {
        let r = q.rate.get();
        Ok(match sel {
            Selector::Lower => Some(self.lower(q)?.value),
            Selector::ImprovedLower => Some(self.improved(q)?.value),
            Selector::Upper => Some(bounds::upper(q)?.value),
            Selector::Induced => Some(bounds::induced(q)?.value),
            Selector::Gap => Some(self.improved(q)?.value - self.lower(q)?.value),
            Selector::LowerSigma => self.lower(q)?.minimizer_sigma,
            Selector::ImprovedSigma => self.improved(q)?.minimizer_sigma,
            Selector::ImprovedAlpha => self.improved(q)?.maximizer_alpha,
            Selector::Binary => {
                if r > 0.0 && r <= LOG_2 {
                    Some(binary_bound_at_rate(r, &q.source)?)
                } else {
                    None
                }
            }
            Selector::Shannon => Some(shannon_dr(q.rate, &q.source)),
            Selector::Expansion => {
                if q.rate.is_infinite() || q.common_randomness.is_infinite() {
                    None
                } else {
                    Some(overline_de_expansion(r, q.common_randomness.get(), &q.source)?)
                }
            }
            _ => unreachable!("validated selector"),
        })
    }
}

/// Parameter set of one of the standard figure sweeps on a standard normal source.
pub fn figure_preset(figure: u8) -> Result<SweepConfig> {
    let src = GaussianSource::standard();
    let q = |r: f64, rc: f64, p: f64, m: Measure| RdpQuery::from_f64(src, r, rc, p, m);
    let rate_axis = GridSpec::new(0.0, 2.0, 201)?;
    use Selector::*;
    match figure {
        2 => SweepConfig::new(
            SweepVariable::Rate,
            rate_axis,
            q(0.0, 0.0, 0.1, Measure::Kl)?,
            vec![Upper, Lower, Induced],
        ),
        3 => SweepConfig::new(
            SweepVariable::Rate,
            rate_axis,
            q(0.0, 0.0, 0.1, Measure::W2Sq)?,
            vec![Induced, Upper, Lower],
        ),
        4 => SweepConfig::new(
            SweepVariable::Perception,
            GridSpec::new(0.0, 1.0, 201)?,
            q(0.1, 0.1, 0.0, Measure::W2Sq)?,
            vec![Lower, ImprovedLower, Gap],
        ),
        5 => SweepConfig::new(
            SweepVariable::Rate,
            rate_axis,
            q(0.0, 0.1, 0.1, Measure::W2Sq)?,
            vec![Lower, ImprovedLower, Gap],
        ),
        6 => SweepConfig::new(
            SweepVariable::Rate,
            GridSpec::new(LOG_2 / 200.0, LOG_2, 200)?,
            q(0.0, 0.0, f64::INFINITY, Measure::Kl)?,
            vec![Binary, Upper, Lower],
        ),
        other => Err(Error::usage(format!("no preset for figure {other} (expected 2 to 6)"))),
    }
}

/// CSV rendering of one number: 17 significant digits, `inf` for infinity.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        // no signed zeros in output
        format!("{:.16e}", x + 0.0)
    }
}

/// Writes a header and rows; `None` cells are left empty.
pub fn write_csv<W: Write>(out: &mut W, header: &[String], rows: &[Vec<Option<f64>>]) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(format_value).unwrap_or_default()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Header and values of a single-point report: the query, every bound for
/// its measure and the optimisers.
pub fn point_report(q: &RdpQuery, normalize: bool) -> Result<(Vec<String>, Vec<String>)> {
    let header = [
        "mean",
        "var",
        "rate",
        "common",
        "perception",
        "measure",
        "lower",
        "improved_lower",
        "upper",
        "induced",
        "lower_sigma",
        "improved_sigma",
        "improved_alpha",
    ]
    .map(String::from)
    .to_vec();
    let lower = bounds::lower(q)?;
    let upper = bounds::upper(q)?;
    let induced = bounds::induced(q)?;
    let improved = match q.measure {
        Measure::W2Sq => Some(bounds::improved_lower_w2(q)?),
        Measure::Kl => None,
    };
    let scale = if normalize { q.source.variance() } else { 1.0 };
    let d = |v: f64| Some(v / scale);
    let cells: Vec<Option<f64>> = vec![
        d(lower.value),
        improved.and_then(|b| d(b.value)),
        d(upper.value),
        d(induced.value),
        lower.minimizer_sigma,
        improved.and_then(|b| b.minimizer_sigma),
        improved.and_then(|b| b.maximizer_alpha),
    ];
    let mut row = vec![
        format_value(q.source.mean()),
        format_value(q.source.variance()),
        format_value(q.rate.get()),
        format_value(q.common_randomness.get()),
        format_value(q.perception.get()),
        q.measure.to_string(),
    ];
    row.extend(cells.into_iter().map(|c| c.map(format_value).unwrap_or_default()));
    Ok((header, row))
}
