//! SVG error-vs-sample-size plots.
//!
//! The x axis is log10(n). Each series is one `(noise, eps, estimator)`
//! group: a polyline through the mean, a shaded band of +-1 std, and a
//! circle per point carrying `data-n` and `data-mean` attributes. Y-axis
//! ticks carry `data-value` so a reader can recover the axis mapping.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::{Aggregate, SweepResult};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Affine maps from data space to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub log_n_min: f64,
    pub log_n_max: f64,
    pub y_max: f64,
}

impl Axes {
    fn fit(aggs: &[&Aggregate]) -> Self {
        let logs = aggs.iter().map(|a| (a.n as f64).log10());
        let log_n_min = logs.clone().fold(f64::INFINITY, f64::min);
        let log_n_max = logs.fold(f64::NEG_INFINITY, f64::max);
        let top = aggs
            .iter()
            .map(|a| a.mean_l1_error + a.std_l1_error)
            .fold(0.0, f64::max);
        let y_max = if top > 0.0 { nice_ceiling(top * 1.05) } else { 1.0 };
        Axes { log_n_min, log_n_max, y_max }
    }

    pub fn x(&self, n: usize) -> f64 {
        let span = self.log_n_max - self.log_n_min;
        let w = WIDTH - LEFT - RIGHT;
        if span <= 0.0 {
            return LEFT + w / 2.0;
        }
        LEFT + ((n as f64).log10() - self.log_n_min) / span * w
    }

    pub fn y(&self, value: f64) -> f64 {
        let h = HEIGHT - TOP - BOTTOM;
        TOP + h * (1.0 - value.clamp(0.0, self.y_max) / self.y_max)
    }
}

fn nice_ceiling(v: f64) -> f64 {
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

fn series_label(a: &Aggregate) -> String {
    format!("{} ({}-{})", a.estimator, a.noise, a.eps)
}

/// Renders the aggregates of a sweep; groups with no successful repeats
/// are skipped.
pub fn render_svg(result: &SweepResult) -> Result<String> {
    let usable: Vec<&Aggregate> = result
        .aggregates
        .iter()
        .filter(|a| a.count > 0 && a.mean_l1_error.is_finite())
        .collect();
    if usable.is_empty() {
        return Err(Error::InvalidConfig("nothing to plot: no successful cells".into()));
    }
    let axes = Axes::fit(&usable);

    let mut series: Vec<(String, Vec<&Aggregate>)> = Vec::new();
    for a in &usable {
        let label = series_label(a);
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push(a),
            None => series.push((label, vec![a])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by_key(|a| a.n);
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">Estimation error vs sample size</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0
    );

    // axes
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let mut ns: Vec<usize> = usable.iter().map(|a| a.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for n in &ns {
        let x = axes.x(*n);
        let _ = writeln!(
            s,
            r#"<line class="xtick" data-value="{n}" x1="{x:.3}" y1="{y0}" x2="{x:.3}" y2="{:.3}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{n}</text>"#,
            y0 + 18.0
        );
    }
    for i in 0..=5 {
        let v = axes.y_max * i as f64 / 5.0;
        let y = axes.y(v);
        let _ = writeln!(
            s,
            r#"<line class="ytick" data-value="{v}" x1="{:.3}" y1="{y:.3}" x2="{x0}" y2="{y:.3}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.3}" x2="{x1}" y2="{y:.3}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            trim_float(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sample size n (log scale)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">L1 estimation error</text>"#,
        (y0 + y1) / 2.0
    );

    for (k, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g class="series" data-label="{}">"#, escape(label));
        // band: upper edge left to right, lower edge back
        let mut band = String::new();
        for a in pts.iter() {
            let _ = write!(band, "{:.3},{:.3} ", axes.x(a.n), axes.y(a.mean_l1_error + a.std_l1_error));
        }
        for a in pts.iter().rev() {
            let _ = write!(band, "{:.3},{:.3} ", axes.x(a.n), axes.y(a.mean_l1_error - a.std_l1_error));
        }
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = pts
            .iter()
            .map(|a| format!("{:.3},{:.3}", axes.x(a.n), axes.y(a.mean_l1_error)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for a in pts.iter() {
            let _ = writeln!(
                s,
                r#"<circle class="point" data-n="{}" data-mean="{}" data-std="{}" cx="{:.3}" cy="{:.3}" r="3.5" fill="{color}"/>"#,
                a.n,
                a.mean_l1_error,
                a.std_l1_error,
                axes.x(a.n),
                axes.y(a.mean_l1_error)
            );
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(label));
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(result)?)?;
    Ok(())
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::noise::NoiseKind;
    use crate::sweep::CellRecord;

    fn result() -> SweepResult {
        let mut recs = Vec::new();
        for (n, base) in [(100, 0.4), (1000, 0.2), (10000, 0.1)] {
            for (k, est) in [EstimatorKind::T, EstimatorKind::DualT].into_iter().enumerate() {
                for j in 0..3 {
                    recs.push(CellRecord {
                        noise: NoiseKind::Sym,
                        eps: 0.2,
                        n,
                        seed: j,
                        estimator: est,
                        l1_error: Some(base / (k + 1) as f64 + 0.01 * j as f64),
                        wall_time_seconds: 0.0,
                    });
                }
            }
        }
        SweepResult::from_records(recs)
    }

    #[test]
    fn log_axis_is_even() {
        let r = result();
        let aggs: Vec<&Aggregate> = r.aggregates.iter().collect();
        let ax = Axes::fit(&aggs);
        let d1 = ax.x(1000) - ax.x(100);
        let d2 = ax.x(10000) - ax.x(1000);
        assert!((d1 - d2).abs() < 1e-9);
        assert!(ax.y(0.0) > ax.y(ax.y_max));
    }

    #[test]
    fn one_circle_per_aggregate() {
        let svg = render_svg(&result()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 6);
        assert_eq!(svg.matches("class=\"band\"").count(), 2);
    }

    #[test]
    fn empty_result_is_an_error() {
        assert!(render_svg(&SweepResult::default()).is_err());
    }

    #[test]
    fn nice_ceiling_steps() {
        assert_eq!(nice_ceiling(0.42), 0.5);
        assert_eq!(nice_ceiling(1.7), 2.0);
        assert_eq!(nice_ceiling(0.021), 0.025);
    }
}
