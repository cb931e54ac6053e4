//! CSV tables, SVG figures and the markdown report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plotters::coord::ranged1d::{AsRangedCoord, ValueFormatter};
use plotters::coord::Shift;
use plotters::prelude::*;

use crate::manifest::{Manifest, Plot, SeriesStyle, Status};

/// Header of every kernel-sweep table.
pub const KERNEL_HEADER: [&str; 7] = ["x_r", "y_r", "term", "re", "im", "abs", "quad_err"];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub x_r: f64,
    pub y_r: f64,
    pub term: String,
    pub re: f64,
    pub im: f64,
    pub quad_err: f64,
}

impl KernelRow {
    pub fn new(x_r: f64, y_r: f64, term: &str, value: num_complex::Complex64, quad_err: f64) -> Self {
        Self { x_r, y_r, term: term.to_string(), re: value.re, im: value.im, quad_err }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.x_r),
            fmt_f64(self.y_r),
            self.term.clone(),
            fmt_f64(self.re),
            fmt_f64(self.im),
            fmt_f64(self.re.hypot(self.im)),
            fmt_f64(self.quad_err),
        ]
    }
}

/// Comma-separated, LF-terminated table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_kernel_table(path: &Path, rows: &[KernelRow]) -> Result<()> {
    write_table(path, &KERNEL_HEADER, rows.iter().map(|r| r.fields()))
}

fn axis_range(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite() && (!log || *v > 0.0)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        let (lo, hi) = if hi / lo < 1.01 { (lo / 2.0, hi * 2.0) } else { (lo, hi) };
        (lo / 1.3, hi * 1.3)
    } else {
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
        (lo - pad, hi + pad)
    }
}

fn tick(v: &f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.0e}")
    } else {
        format!("{v}")
    }
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
    RGBColor(140, 86, 75),
    RGBColor(127, 127, 127),
];

fn draw<X, Y>(area: &DrawingArea<SVGBackend, Shift>, plot: &Plot, x: X, y: Y) -> Result<()>
where
    X: AsRangedCoord<Value = f64>,
    Y: AsRangedCoord<Value = f64>,
    X::CoordDescType: ValueFormatter<f64>,
    Y::CoordDescType: ValueFormatter<f64>,
{
    let err = |e: DrawingAreaErrorKind<std::io::Error>| anyhow::anyhow!("{}: {e}", plot.file);
    let mut chart = ChartBuilder::on(area)
        .caption(&plot.title, ("sans-serif", 18))
        .margin(14)
        .x_label_area_size(42)
        .y_label_area_size(72)
        .build_cartesian_2d(x, y)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc(&plot.x_label)
        .y_desc(&plot.y_label)
        .x_label_formatter(&tick)
        .y_label_formatter(&tick)
        .draw()
        .map_err(err)?;
    for s in &plot.series {
        let color = PALETTE[s.color % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(a, b)| a.is_finite() && b.is_finite() && (!plot.log_x || *a > 0.0) && (!plot.log_y || *b > 0.0))
            .collect();
        let legend = move |(px, py): (i32, i32)| PathElement::new(vec![(px, py), (px + 18, py)], color.stroke_width(2));
        match s.style {
            SeriesStyle::Line => {
                chart.draw_series(LineSeries::new(pts, color.stroke_width(2))).map_err(err)?.label(&s.label).legend(legend);
            }
            SeriesStyle::Points => {
                chart.draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled()))).map_err(err)?.label(&s.label).legend(legend);
            }
        }
    }
    if !plot.series.is_empty() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperRight)
            .draw()
            .map_err(err)?;
    }
    Ok(())
}

pub fn render_plot(plot: &Plot, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(&plot.file);
    let xs = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x0, x1) = axis_range(xs, plot.log_x);
    let (y0, y1) = axis_range(ys, plot.log_y);
    {
        let root = SVGBackend::new(&path, (760, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow::anyhow!("{e}"))?;
        let (body, foot) = root.split_vertically(470);
        match (plot.log_x, plot.log_y) {
            (true, true) => draw(&body, plot, (x0..x1).log_scale(), (y0..y1).log_scale())?,
            (true, false) => draw(&body, plot, (x0..x1).log_scale(), y0..y1)?,
            (false, true) => draw(&body, plot, x0..x1, (y0..y1).log_scale())?,
            (false, false) => draw(&body, plot, x0..x1, y0..y1)?,
        }
        if let Some(n) = &plot.note {
            foot.draw_text(n, &("sans-serif", 14).into_text_style(&foot), (16, 6)).map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        root.present().map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    }
    Ok(path)
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Error => "ERROR",
    }
}

/// Markdown summary of a manifest.
pub fn report_markdown(m: &Manifest) -> String {
    let mut s = String::new();
    let c = &m.config;
    let _ = writeln!(s, "# bscatter report\n");
    let _ = writeln!(
        s,
        "{} {}; potential `{}`; grid radius {} resolution {}; seed {}.\n",
        m.tool,
        m.version,
        serde_json::to_string(&c.potential).unwrap_or_default(),
        c.grid.radius,
        c.grid.resolution,
        c.seed
    );
    if m.records.is_empty() {
        return s;
    }
    let _ = writeln!(s, "Overall: **{}**\n", if m.pass { "PASS" } else { "FAIL" });
    for r in &m.records {
        let _ = writeln!(s, "## {} ({})\n", r.experiment, status_word(r.status));
        if let Some(e) = &r.error {
            let _ = writeln!(s, "Error: `{e}`\n");
        }
        if !r.probes.is_empty() {
            let _ = writeln!(s, "| probe | property | measured | expected | fitted slope | pass |");
            let _ = writeln!(s, "|---|---|---|---|---|---|");
            for p in &r.probes {
                let slope = p.fitted.slope.map(|v| format!("{v:.4}")).unwrap_or_else(|| "".into());
                let measured = if matches!(p.expected, crate::manifest::Expect::Holds) {
                    (if p.tolerance_pass { "yes" } else { "no" }).to_string()
                } else {
                    format!("{:.4e}", p.measured)
                };
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} |",
                    p.probe,
                    cell(&p.claim),
                    measured,
                    p.expected,
                    slope,
                    if p.tolerance_pass { "yes" } else { "**no**" }
                );
            }
            let _ = writeln!(s);
        }
        for p in &r.plots {
            let _ = writeln!(s, "![{}]({})\n", p.title, p.file);
        }
        if !r.files.is_empty() {
            let _ = writeln!(s, "Data: {}\n", r.files.iter().map(|f| format!("`{f}`")).collect::<Vec<_>>().join(", "));
        }
    }
    s
}

/// Writes report.md and every figure of the manifest into `dir`.
pub fn emit_report(m: &Manifest, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    for p in m.records.iter().flat_map(|r| r.plots.iter()) {
        written.push(render_plot(p, dir)?);
    }
    let report = dir.join("report.md");
    std::fs::write(&report, report_markdown(m)).with_context(|| format!("cannot write {}", report.display()))?;
    written.push(report);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        let v = 0.1f64 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn kernel_table_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("bscatter-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("k.csv");
        let row = KernelRow::new(1.0, 0.5, "Q", num_complex::Complex64::new(3.0, -4.0), 0.0);
        write_kernel_table(&p, &[row]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "x_r,y_r,term,re,im,abs,quad_err\n\
             1.0000000000000000e0,5.0000000000000000e-1,Q,3.0000000000000000e0,-4.0000000000000000e0,5.0000000000000000e0,0.0000000000000000e0\n"
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
