//! Stratified 2×2 tables of a binary exposure and binary outcome, with
//! risk-difference, risk-ratio and odds-ratio collapsibility verdicts.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for verdicts on exact probability tables.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("table has no strata")]
    Empty,
    #[error("cell value {value} in stratum {stratum} is negative or not finite")]
    BadCell { stratum: String, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("table total is zero")]
    ZeroTotal,
    #[error("stratum `{0}` appears twice")]
    DuplicateStratum(String),
    #[error("unknown stratum `{0}`")]
    UnknownStratum(String),
    #[error("no mass for A={a} in stratum {stratum}")]
    EmptyMargin { stratum: String, a: u8 },
    #[error("{measure} is undefined in {stratum}: zero denominator")]
    ZeroDenominator { measure: Measure, stratum: String },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Joint probabilities indexed `[y][a]` for one stratum.
pub type Cells = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTable {
    labels: Vec<String>,
    cells: Vec<Cells>,
}

impl StratifiedTable {
    /// Probabilities that must already sum to one (within 1e-12).
    pub fn from_probabilities<S: Into<String>>(
        strata: impl IntoIterator<Item = (S, Cells)>,
    ) -> Result<Self, TableError> {
        let t = Self::build(strata)?;
        let total = t.total();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TableError::NotNormalized(total));
        }
        Ok(t)
    }

    /// Non-negative counts or weights, normalized to probabilities.
    pub fn from_counts<S: Into<String>>(
        strata: impl IntoIterator<Item = (S, Cells)>,
    ) -> Result<Self, TableError> {
        let mut t = Self::build(strata)?;
        let total = t.total();
        if total <= 0.0 {
            return Err(TableError::ZeroTotal);
        }
        for c in &mut t.cells {
            for row in c.iter_mut() {
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        Ok(t)
    }

    fn build<S: Into<String>>(
        strata: impl IntoIterator<Item = (S, Cells)>,
    ) -> Result<Self, TableError> {
        let mut labels: Vec<String> = Vec::new();
        let mut cells = Vec::new();
        for (label, c) in strata {
            let label = label.into();
            if labels.contains(&label) {
                return Err(TableError::DuplicateStratum(label));
            }
            for v in c.iter().flatten() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(TableError::BadCell {
                        stratum: label,
                        value: *v,
                    });
                }
            }
            labels.push(label);
            cells.push(c);
        }
        if labels.is_empty() {
            return Err(TableError::Empty);
        }
        Ok(Self { labels, cells })
    }

    /// Reads `stratum,a,y,weight` rows (header required). Repeated
    /// `(stratum, a, y)` rows are summed; strata keep first-seen order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, TableError> {
        #[derive(Deserialize)]
        struct Row {
            stratum: String,
            a: u8,
            y: u8,
            weight: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut order: Vec<String> = Vec::new();
        let mut acc: HashMap<String, Cells> = HashMap::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec.map_err(|e| TableError::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            if row.a > 1 || row.y > 1 {
                return Err(TableError::Csv {
                    line: 0,
                    message: format!("a and y must be 0 or 1 (stratum {})", row.stratum),
                });
            }
            let cells = acc.entry(row.stratum.clone()).or_insert_with(|| {
                order.push(row.stratum.clone());
                [[0.0; 2]; 2]
            });
            cells[row.y as usize][row.a as usize] += row.weight;
        }
        Self::from_counts(order.into_iter().map(|l| {
            let c = acc[&l];
            (l, c)
        }))
    }

    /// Table-1 example: two strata of a binary confounder.
    pub fn table1() -> Self {
        Self::from_probabilities([
            ("L=1", [[0.10, 0.05], [0.15, 0.20]]),
            ("L=0", [[0.20, 0.15], [0.05, 0.10]]),
        ])
        .expect("valid")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn strata(&self) -> usize {
        self.labels.len()
    }

    pub fn cells(&self, stratum: usize) -> &Cells {
        &self.cells[stratum]
    }

    pub fn stratum_index(&self, label: &str) -> Result<usize, TableError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| TableError::UnknownStratum(label.to_string()))
    }

    fn total(&self) -> f64 {
        self.cells.iter().flatten().flatten().sum()
    }

    /// P(stratum).
    pub fn weight(&self, stratum: usize) -> f64 {
        self.cells[stratum].iter().flatten().sum()
    }

    /// P(A=a, stratum).
    pub fn margin(&self, stratum: usize, a: u8) -> f64 {
        let c = &self.cells[stratum];
        c[0][a as usize] + c[1][a as usize]
    }

    /// P(Y=1 | A=a, stratum).
    pub fn risk(&self, stratum: usize, a: u8) -> Result<f64, TableError> {
        let m = self.margin(stratum, a);
        if m <= 0.0 {
            return Err(TableError::EmptyMargin {
                stratum: self.labels[stratum].clone(),
                a,
            });
        }
        Ok(self.cells[stratum][1][a as usize] / m)
    }

    /// Sum over strata.
    pub fn marginalize(&self) -> StratifiedTable {
        let mut c = [[0.0; 2]; 2];
        for s in &self.cells {
            for y in 0..2 {
                for a in 0..2 {
                    c[y][a] += s[y][a];
                }
            }
        }
        StratifiedTable {
            labels: vec!["marginal".into()],
            cells: vec![c],
        }
    }

    pub fn effect_measure(&self, measure: Measure) -> Result<MeasureReport, TableError> {
        self.effect_measure_with_tolerance(measure, EXACT_TOLERANCE)
    }

    /// As [`effect_measure`](Self::effect_measure) with a caller-chosen
    /// relative tolerance, for tables estimated from data.
    pub fn effect_measure_with_tolerance(
        &self,
        measure: Measure,
        tolerance: f64,
    ) -> Result<MeasureReport, TableError> {
        let mut strata = Vec::with_capacity(self.strata());
        for i in 0..self.strata() {
            let r1 = self.risk(i, 1)?;
            let r0 = self.risk(i, 0)?;
            strata.push(StratumValue {
                stratum: self.labels[i].clone(),
                weight: self.weight(i),
                risk_exposed: r1,
                risk_unexposed: r0,
                value: measure.apply(r1, r0).ok_or_else(|| TableError::ZeroDenominator {
                    measure,
                    stratum: self.labels[i].clone(),
                })?,
            });
        }
        let m = self.marginalize();
        let (r1, r0) = (m.risk(0, 1)?, m.risk(0, 0)?);
        let marginal = measure.apply(r1, r0).ok_or(TableError::ZeroDenominator {
            measure,
            stratum: "marginal".into(),
        })?;

        let close = |a: f64, b: f64| (a - b).abs() <= tolerance * a.abs().max(b.abs()).max(1.0);
        let lo = strata.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        let hi = strata.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        let strictly_collapsible = strata.iter().all(|s| close(s.value, marginal));
        let collapsible = strictly_collapsible
            || ((marginal >= lo || close(marginal, lo)) && (marginal <= hi || close(marginal, hi)));

        Ok(MeasureReport {
            measure,
            strata,
            marginal,
            marginal_risk_exposed: r1,
            marginal_risk_unexposed: r0,
            strictly_collapsible,
            collapsible,
        })
    }

    /// Plain-text layout with one column per stratum plus the marginal:
    /// the four joint cells, then risks and the three effect measures.
    pub fn render(&self) -> String {
        let m = self.marginalize();
        let mut cols: Vec<(&str, &Cells)> = self
            .labels
            .iter()
            .map(String::as_str)
            .zip(self.cells.iter())
            .collect();
        cols.push(("Marginal", &m.cells[0]));

        let mut out = String::new();
        let _ = write!(out, "{:<22}", "");
        for (l, _) in &cols {
            let _ = write!(out, "{l:>10}");
        }
        out.push('\n');
        for (name, y, a) in [
            ("P(Y=1, A=1)", 1, 1),
            ("P(Y=1, A=0)", 1, 0),
            ("P(Y=0, A=1)", 0, 1),
            ("P(Y=0, A=0)", 0, 0),
        ] {
            let _ = write!(out, "{name:<22}");
            for (_, c) in &cols {
                let _ = write!(out, "{:>10.2}", c[y][a]);
            }
            out.push('\n');
        }
        let risk = |c: &Cells, a: usize| c[1][a] / (c[0][a] + c[1][a]);
        for (name, a) in [("Risk A=1", 1), ("Risk A=0", 0)] {
            let _ = write!(out, "{name:<22}");
            for (_, c) in &cols {
                let _ = write!(out, "{:>10.2}", risk(c, a));
            }
            out.push('\n');
        }
        for measure in Measure::ALL {
            let _ = write!(out, "{:<22}", measure.label());
            for (_, c) in &cols {
                match measure.apply(risk(c, 1), risk(c, 0)) {
                    Some(v) => {
                        let _ = write!(out, "{v:>10.2}");
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    RiskDifference,
    RiskRatio,
    OddsRatio,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::RiskDifference, Measure::RiskRatio, Measure::OddsRatio];

    /// `None` when a denominator vanishes.
    pub fn apply(self, r1: f64, r0: f64) -> Option<f64> {
        let v = match self {
            Measure::RiskDifference => r1 - r0,
            Measure::RiskRatio if r0 == 0.0 => return None,
            Measure::RiskRatio => r1 / r0,
            Measure::OddsRatio if [r1, r0].iter().any(|&r| r == 0.0 || r == 1.0) => return None,
            Measure::OddsRatio => (r1 / (1.0 - r1)) / (r0 / (1.0 - r0)),
        };
        v.is_finite().then_some(v)
    }

    pub fn label(self) -> &'static str {
        match self {
            Measure::RiskDifference => "Risk difference",
            Measure::RiskRatio => "Risk ratio",
            Measure::OddsRatio => "Odds ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        match s {
            "risk_difference" | "rd" => Some(Measure::RiskDifference),
            "risk_ratio" | "rr" => Some(Measure::RiskRatio),
            "odds_ratio" | "or" => Some(Measure::OddsRatio),
            _ => None,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::RiskDifference => "risk_difference",
            Measure::RiskRatio => "risk_ratio",
            Measure::OddsRatio => "odds_ratio",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumValue {
    pub stratum: String,
    /// P(stratum).
    pub weight: f64,
    pub risk_exposed: f64,
    pub risk_unexposed: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureReport {
    pub measure: Measure,
    pub strata: Vec<StratumValue>,
    pub marginal: f64,
    pub marginal_risk_exposed: f64,
    pub marginal_risk_unexposed: f64,
    /// Every stratum value equals the marginal value.
    pub strictly_collapsible: bool,
    /// The marginal value lies within the range of stratum values.
    pub collapsible: bool,
}
