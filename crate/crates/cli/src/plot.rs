//! Quick-look SVG plots drawn from the output tables.

use std::path::Path;

use plotters::prelude::*;

use crate::config::Command;
use crate::output::Table;
use crate::CliError;

const PALETTE: [RGBColor; 5] = [
    RGBColor(31, 119, 180),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
];

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Line chart of several named series against a shared x.
pub fn lines(path: &Path, title: &str, x_desc: &str, series: &[(String, Vec<(f64, f64)>)]) -> Result<(), CliError> {
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (x0, x1) = finite_range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y0, y1) = finite_range(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_desc).draw().map_err(plot_err)?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                pts.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE.mix(0.8)).draw().map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// `W` over `(θ, φ)`: blue where entanglement is detected, gray elsewhere.
pub fn sphere_map(path: &Path, table: &Table, epsilon: f64) -> Result<(), CliError> {
    let col = |name| table.column(name).unwrap_or_default();
    let (theta, phi, w) = (col("theta"), col("phi"), col("W"));
    let cells: Vec<(f64, f64, f64)> =
        theta.iter().zip(&phi).zip(&w).filter_map(|((t, p), w)| Some(((*t)?, (*p)?, (*w)?))).collect();
    let root = SVGBackend::new(path, (900, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("W over observation directions", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("phi").y_desc("theta").draw().map_err(plot_err)?;
    let n_theta = {
        let mut t: Vec<f64> = cells.iter().map(|c| c.0).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.len().max(1)
    };
    let n_phi = (cells.len() / n_theta).max(1);
    let (dt, dp) = (std::f64::consts::PI / n_theta as f64, std::f64::consts::TAU / n_phi as f64);
    let w_lo = cells.iter().map(|c| c.2).fold(0.0, f64::min);
    chart
        .draw_series(cells.iter().map(|&(t, p, w)| {
            let color = if w < -epsilon {
                let s = if w_lo < 0.0 { (w / w_lo).clamp(0.0, 1.0) } else { 1.0 };
                RGBColor((200.0 * (1.0 - s)) as u8, (200.0 * (1.0 - s)) as u8 + 30, 255)
            } else {
                RGBColor(190, 190, 190)
            };
            Rectangle::new([(p, t - dt / 2.0), (p + dp, t + dt / 2.0)], color.filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

pub fn plot(path: &Path, cmd: Command, table: &Table, epsilon: f64) -> Result<(), CliError> {
    let xy = |x: &str, y: &str| -> Vec<(f64, f64)> {
        let (xs, ys) = (table.column(x).unwrap_or_default(), table.column(y).unwrap_or_default());
        xs.iter().zip(&ys).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect()
    };
    match cmd {
        Command::Fig1Sphere => sphere_map(path, table, epsilon),
        Command::DickeSweep => lines(
            path,
            "Dicke state: witness and S_k",
            "theta",
            &[("W".into(), xy("theta", "W")), ("S_k".into(), xy("theta", "S_k"))],
        ),
        Command::Decay => lines(
            path,
            "Decay dynamics",
            "t",
            &[("W_min".into(), xy("t", "W_min_over_dirs")), ("C_glob".into(), xy("t", "C_glob"))],
        ),
        Command::CumulantTent => {
            let mut by_kd: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
            for row in &table.rows {
                let (Some(n), Some(kd), Some(t)) = (row[0].as_f64(), row[1].as_f64(), row[2].as_f64()) else {
                    continue;
                };
                if t <= 0.0 {
                    continue;
                }
                match by_kd.iter_mut().find(|(k, _)| *k == kd) {
                    Some((_, pts)) => pts.push((n, t.log10())),
                    None => by_kd.push((kd, vec![(n, t.log10())])),
                }
            }
            let series: Vec<(String, Vec<(f64, f64)>)> =
                by_kd.into_iter().map(|(kd, pts)| (format!("kd = {kd}"), pts)).collect();
            lines(path, "log10 t_ent", "N", &series)
        }
        Command::Fuzz => Err(CliError::Plot("the fuzz report has no plot".into())),
    }
}
