//! Static SVG plots. Every plot is rebuilt from a CSV file written by the
//! library, never from in-memory state.

use std::collections::HashMap;
use std::path::Path;

use plotters::prelude::*;
use plotters::style::colors::colormaps::ViridisRGB;

use crate::error::{Error, Result};

/// Columns of a numeric CSV file keyed by header name. `#` lines are
/// skipped; non-numeric cells become NaN and are kept in `text`.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: HashMap<String, Vec<f64>>,
    pub text: HashMap<String, Vec<String>>,
    pub order: Vec<String>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty table".into()))?;
        let order: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut table = Table {
            order: order.clone(),
            ..Default::default()
        };
        for name in &order {
            table.columns.insert(name.clone(), Vec::new());
            table.text.insert(name.clone(), Vec::new());
        }
        for (n, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != order.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} cells",
                    n + 2,
                    cells.len()
                )));
            }
            for (name, cell) in order.iter().zip(cells) {
                table
                    .columns
                    .get_mut(name)
                    .unwrap()
                    .push(cell.parse().unwrap_or(f64::NAN));
                table.text.get_mut(name).unwrap().push(cell.to_string());
            }
        }
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("column `{name}` not found")))
    }
}

fn draw_err<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> Error + '_ {
    move |e| Error::InvalidArgument(format!("plot {}: {e}", path.display()))
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

/// Survival probability on log-log axes with the 1/P_R line. `analytic`
/// is an optional second CSV with an `sp_analytic` column on the same grid.
pub fn plot_survival(sp_csv: &Path, analytic_csv: Option<&Path>, out: &Path) -> Result<()> {
    let sp = Table::read(sp_csv)?;
    let t = sp.column("t")?;
    let numeric = sp.column("sp")?;
    let plateau = sp.column("plateau")?.first().copied().unwrap_or(f64::NAN);
    let analytic = match analytic_csv {
        Some(p) => Some(Table::read(p)?),
        None => None,
    };
    let positive = |v: &f64| *v > 0.0 && v.is_finite();
    let t_lo = t
        .iter()
        .copied()
        .filter(positive)
        .fold(f64::INFINITY, f64::min);
    let t_hi = t.iter().copied().fold(0.0, f64::max);
    // deep minima would squash the curve; keep two decades below 1/P_R
    let floor = if plateau > 0.0 { plateau * 1e-2 } else { 1e-6 };
    let y_lo = numeric
        .iter()
        .copied()
        .filter(positive)
        .fold(1.0, f64::min)
        .max(floor);
    if !(t_lo < t_hi) {
        return Err(Error::InvalidArgument(
            "survival plot needs positive times".into(),
        ));
    }
    let err = draw_err(out);
    let root = SVGBackend::new(out, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(&err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d((t_lo..t_hi).log_scale(), (y_lo..1.5).log_scale())
        .map_err(&err)?;
    chart
        .configure_mesh()
        .x_desc("t")
        .y_desc("SP(t)")
        .x_label_formatter(&|v| format!("{v:.0e}"))
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .label_style(("sans-serif", 14))
        .draw()
        .map_err(&err)?;
    let pts = |ys: &[f64]| -> Vec<(f64, f64)> {
        t.iter()
            .zip(ys)
            .filter(|(t, y)| **t > 0.0 && **y > 0.0)
            .map(|(t, y)| (*t, y.max(y_lo)))
            .collect()
    };
    chart
        .draw_series(LineSeries::new(pts(numeric), BLUE.stroke_width(1)))
        .map_err(&err)?
        .label("numeric")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    if let Some(a) = &analytic {
        let at = a.column("t")?;
        let av = a.column("sp_analytic")?;
        let line: Vec<(f64, f64)> = at
            .iter()
            .zip(av)
            .filter(|(t, y)| **t > 0.0 && **y > 0.0)
            .map(|(t, y)| (*t, y.max(y_lo)))
            .collect();
        chart
            .draw_series(LineSeries::new(line, RED.stroke_width(1)))
            .map_err(&err)?
            .label("analytic")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RED));
    }
    if plateau.is_finite() && plateau > 0.0 {
        chart
            .draw_series(LineSeries::new(
                vec![(t_lo, plateau), (t_hi, plateau)],
                BLACK.stroke_width(1),
            ))
            .map_err(&err)?
            .label("1/P_R")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(&err)?;
    root.present().map_err(&err)
}

/// Heatmap of a map CSV (`phi,jz_tilde,value,status`); missing points
/// are left grey.
pub fn plot_heatmap(map_csv: &Path, out: &Path, title: &str) -> Result<()> {
    let map = Table::read(map_csv)?;
    let phi = map.column("phi")?;
    let jz = map.column("jz_tilde")?;
    let value = map.column("value")?;
    let mut phis: Vec<f64> = phi.to_vec();
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    let mut jzs: Vec<f64> = jz.to_vec();
    jzs.sort_by(f64::total_cmp);
    jzs.dedup();
    let half = |v: &[f64], lo: f64, hi: f64| {
        if v.len() > 1 {
            0.5 * (v[1] - v[0])
        } else {
            0.5 * (hi - lo)
        }
    };
    let dphi = half(&phis, 0.0, std::f64::consts::TAU);
    let djz = half(&jzs, -1.0, 1.0);
    let (vlo, vhi) = finite_range(value.iter().copied()).unwrap_or((0.0, 1.0));
    let vhi = if vhi > vlo { vhi } else { vlo + 1.0 };

    let err = draw_err(out);
    let root = SVGBackend::new(out, (820, 700)).into_drawing_area();
    root.fill(&WHITE).map_err(&err)?;
    let (main, bar) = root.split_horizontally(700);
    let mut chart = ChartBuilder::on(&main)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(55)
        .build_cartesian_2d(
            (phis.first().copied().unwrap_or(0.0) - dphi)
                ..(phis.last().copied().unwrap_or(1.0) + dphi),
            (jzs.first().copied().unwrap_or(-1.0) - djz)
                ..(jzs.last().copied().unwrap_or(1.0) + djz),
        )
        .map_err(&err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("phi")
        .y_desc("jz/J")
        .draw()
        .map_err(&err)?;
    let cells = phi.iter().zip(jz).zip(value).map(|((&p, &j), &v)| {
        let color = if v.is_finite() {
            ViridisRGB::get_color_normalized(v, vlo, vhi).filled()
        } else {
            RGBColor(225, 225, 225).filled()
        };
        Rectangle::new([(p - dphi, j - djz), (p + dphi, j + djz)], color)
    });
    chart.draw_series(cells).map_err(&err)?;

    let mut scale = ChartBuilder::on(&bar)
        .margin_top(50)
        .margin_bottom(60)
        .margin_right(10)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..1.0, vlo..vhi)
        .map_err(&err)?;
    scale
        .configure_mesh()
        .disable_mesh()
        .disable_x_axis()
        .draw()
        .map_err(&err)?;
    let steps = 100;
    scale
        .draw_series((0..steps).map(|k| {
            let a = vlo + (vhi - vlo) * k as f64 / steps as f64;
            let b = vlo + (vhi - vlo) * (k + 1) as f64 / steps as f64;
            Rectangle::new(
                [(0.0, a), (1.0, b)],
                ViridisRGB::get_color_normalized(0.5 * (a + b), vlo, vhi).filled(),
            )
        }))
        .map_err(&err)?;
    root.present().map_err(&err)
}

/// Scatter of two columns, e.g. Poincaré crossings or a contour.
pub fn plot_scatter(csv: &Path, x: &str, y: &str, out: &Path, title: &str) -> Result<()> {
    let table = Table::read(csv)?;
    let xs = table.column(x)?;
    let ys = table.column(y)?;
    let (xlo, xhi) = finite_range(xs.iter().copied()).unwrap_or((0.0, 1.0));
    let (ylo, yhi) = finite_range(ys.iter().copied()).unwrap_or((0.0, 1.0));
    let pad = |lo: f64, hi: f64| {
        let d = if hi > lo { 0.03 * (hi - lo) } else { 0.5 };
        (lo - d)..(hi + d)
    };
    let err = draw_err(out);
    let root = SVGBackend::new(out, (800, 700)).into_drawing_area();
    root.fill(&WHITE).map_err(&err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(55)
        .build_cartesian_2d(pad(xlo, xhi), pad(ylo, yhi))
        .map_err(&err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(x)
        .y_desc(y)
        .draw()
        .map_err(&err)?;
    chart
        .draw_series(
            xs.iter()
                .zip(ys)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(&a, &b)| Circle::new((a, b), 1, BLACK.filled())),
        )
        .map_err(&err)?;
    root.present().map_err(&err)
}
