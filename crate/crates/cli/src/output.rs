//! CSV tables with the resolved config as a `#` comment header.

use std::io::Write;

use efw_core::witness::WitnessReport;

use crate::commands::{DecayOutput, DickeSweepOutput, SphereOutput, TentCell};
use crate::config::{Command, ExperimentConfig};
use crate::CliError;

pub const WITNESS_COLUMNS: [&str; 9] = ["w1", "w2", "w3_X", "w3_Y", "w3_Z", "w4_X", "w4_Y", "w4_Z", "W"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    /// Empty when absent.
    Maybe(Option<f64>),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Maybe(Some(x)) => float(*x),
            Cell::Maybe(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) | Cell::Maybe(Some(x)) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Written after the rows as `# key: value` lines.
    pub summary: Vec<(String, String)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn write(&self, out: &mut dyn Write, cmd: Command, cfg: &ExperimentConfig) -> Result<(), CliError> {
        writeln!(out, "# efw {}", cmd.name())?;
        let json = serde_json::to_string_pretty(cfg).expect("config serializes");
        for line in json.lines() {
            writeln!(out, "# {line}")?;
        }
        {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# {k}: {v}")?;
        }
        Ok(())
    }
}

fn witness_cells(r: &WitnessReport) -> impl Iterator<Item = Cell> + '_ {
    r.values().into_iter().map(|(_, v)| Cell::Float(v)).chain(std::iter::once(Cell::Float(r.w_min)))
}

fn maybe(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), float)
}

pub fn sphere_table(o: &SphereOutput) -> Table {
    let mut columns = vec!["theta", "phi"];
    columns.extend(WITNESS_COLUMNS);
    let rows = o
        .reports
        .iter()
        .map(|r| {
            let (theta, phi) = r.direction.map_or((f64::NAN, f64::NAN), |d| d.angles());
            [Cell::Float(theta), Cell::Float(phi)].into_iter().chain(witness_cells(r)).collect()
        })
        .collect();
    let w_min = o.reports.iter().map(|r| r.w_min).fold(f64::INFINITY, f64::min);
    Table {
        columns,
        rows,
        summary: vec![
            ("detected_fraction".into(), float(o.detected_fraction)),
            ("W_0".into(), float(o.w0.w_min)),
            ("W_0_argmin".into(), o.w0.argmin.to_string()),
            ("W_min".into(), float(w_min)),
            ("epsilon".into(), float(o.epsilon)),
        ],
    }
}

pub fn dicke_table(o: &DickeSweepOutput) -> Table {
    let mut columns = vec!["theta", "S_k"];
    columns.extend(WITNESS_COLUMNS);
    let rows = o
        .reports
        .iter()
        .zip(&o.s_k)
        .map(|(r, s)| {
            let theta = r.direction.map_or(f64::NAN, |d| d.angles().0);
            [Cell::Float(theta), Cell::Float(*s)].into_iter().chain(witness_cells(r)).collect()
        })
        .collect();
    let detected = o.reports.iter().filter(|r| r.is_entangled(o.epsilon)).count();
    Table {
        columns,
        rows,
        summary: vec![
            ("delta".into(), maybe(o.delta)),
            ("detected_fraction".into(), float(detected as f64 / o.reports.len().max(1) as f64)),
            ("epsilon".into(), float(o.epsilon)),
        ],
    }
}

pub fn decay_table(o: &DecayOutput) -> Table {
    let rows = o
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::Float(r.t),
                Cell::Float(r.w_min),
                Cell::Float(r.theta_argmin),
                Cell::Float(r.c_glob),
                Cell::Float(r.trace_drift),
                Cell::Float(r.min_eig),
            ]
        })
        .collect();
    let mut summary = vec![
        ("t_ent".into(), maybe(o.t_ent)),
        ("t_conc".into(), maybe(o.t_conc)),
        ("max_trace_drift".into(), float(o.max_trace_drift())),
        ("min_eig".into(), float(o.min_eigenvalue())),
        ("epsilon".into(), float(o.epsilon)),
    ];
    if let Some(s) = o.stats {
        summary
            .push(("steps".into(), format!("{} accepted, {} rejected, {} rhs", s.accepted, s.rejected, s.rhs_evals)));
    }
    if let Some(e) = &o.error {
        summary.push(("error".into(), e.clone()));
    }
    Table { columns: vec!["t", "W_min_over_dirs", "theta_argmin", "C_glob", "trace_drift", "min_eig"], rows, summary }
}

pub fn tent_table(cells: &[TentCell]) -> Table {
    Table {
        columns: vec!["n", "kd", "t_ent", "status"],
        rows: cells
            .iter()
            .map(|c| vec![Cell::Int(c.n), Cell::Float(c.kd), Cell::Maybe(c.t_ent), Cell::Text(c.status.label().into())])
            .collect(),
        summary: Vec::new(),
    }
}
