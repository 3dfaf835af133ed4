//! Result envelope written by every experiment, plus its JSON and CSV
//! encodings.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The pass condition of a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    /// `|observed - expected| <= tolerance`
    Within { expected: f64, tolerance: f64 },
    /// `observed > bound`
    Above { bound: f64 },
    /// `observed <= bound`
    AtMost { bound: f64 },
}

impl Band {
    pub fn contains(&self, observed: f64) -> bool {
        match *self {
            Self::Within {
                expected,
                tolerance,
            } => (observed - expected).abs() <= tolerance,
            Self::Above { bound } => observed > bound,
            Self::AtMost { bound } => observed <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub observed: f64,
    pub band: Band,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, observed: f64, band: Band) -> Self {
        Self {
            name: name.into(),
            observed,
            passed: band.contains(observed),
            band,
        }
    }

    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(
            name,
            observed,
            Band::Within {
                expected,
                tolerance,
            },
        )
    }

    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, Band::AtMost { bound })
    }

    pub fn above(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self::new(name, observed, Band::Above { bound })
    }
}

/// A named, plot-ready table. Cells are JSON values; complex numbers are
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub tables: Vec<Table>,
    /// Modeling assumptions the numbers depend on.
    pub assumptions: Vec<String>,
}

impl Payload {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub config: ExperimentConfig,
    pub version: String,
    pub payload: Payload,
    pub verdicts: Vec<Verdict>,
    pub duration_ms: u64,
}

impl ResultEnvelope {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Everything except the wall-clock duration, as compact JSON.
    pub fn comparable(&self) -> String {
        let mut v = serde_json::to_value(self).expect("envelope serializes");
        if let Value::Object(map) = &mut v {
            map.remove("duration_ms");
        }
        v.to_string()
    }

    /// Long-format CSV of the payload tables: `table,row,column,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["table", "row", "column", "value"])?;
        for t in &self.payload.tables {
            for (i, row) in t.rows.iter().enumerate() {
                for (col, cell) in t.columns.iter().zip(row) {
                    let value = match cell {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    w.write_record([t.name.as_str(), &i.to_string(), col, &value])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn complex(z: Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentKind, InputState, Preset};
    use serde_json::json;

    fn sample() -> ResultEnvelope {
        let mut t = Table::new("histogram", &["attempts", "count", "amplitude", "label"]);
        t.push(vec![
            json!(1),
            json!(4987),
            complex(Complex64::new(0.5, -0.25)),
            json!("a,b"),
        ]);
        let mut config = ExperimentConfig::new(ExperimentKind::RusStatistics);
        config.input_state = InputState::Preset(Preset::Bell);
        ResultEnvelope {
            config,
            version: VERSION.into(),
            payload: Payload {
                tables: vec![t],
                assumptions: vec!["loss aborts".into()],
            },
            verdicts: vec![Verdict::within("mean", 2.01, 2.0, 0.0135)],
            duration_ms: 17,
        }
    }

    #[test]
    fn json_round_trip() {
        let e = sample();
        assert_eq!(ResultEnvelope::from_json(&e.to_json()).unwrap(), e);
    }

    #[test]
    fn top_level_keys() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            ["config", "duration_ms", "payload", "verdicts", "version"]
        );
    }

    #[test]
    fn comparable_ignores_duration() {
        let a = sample();
        let mut b = sample();
        b.duration_ms = 9000;
        assert_eq!(a.comparable(), b.comparable());
        assert!(!a.comparable().contains("duration_ms"));
    }

    #[test]
    fn bands() {
        assert!(Verdict::within("x", 1.0, 1.0, 0.0).passed);
        assert!(!Verdict::within("x", 1.1, 1.0, 0.05).passed);
        assert!(Verdict::above("r2", 0.999, 0.99).passed);
        assert!(!Verdict::above("r2", 0.99, 0.99).passed);
        assert!(Verdict::at_most("dev", 1e-13, 1e-12).passed);
    }

    #[test]
    fn csv_long_format_quotes_cells() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "table,row,column,value");
        assert_eq!(lines[1], "histogram,0,attempts,1");
        assert_eq!(lines[3], "histogram,0,amplitude,\"[0.5,-0.25]\"");
        assert_eq!(lines[4], "histogram,0,label,\"a,b\"");
    }
}
