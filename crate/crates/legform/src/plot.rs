//! Self-contained SVG fitness plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use legform_core::stats::{mean, standard_error};

use crate::report::StatsRow;
use crate::Error;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const SERIES: [(&str, &str); 3] = [("best", "#2e8b57"), ("mean", "#1f5fbf"), ("worst", "#c0392b")];
const DASHES: [&str; 4] = ["", "8 4", "3 3", "10 3 2 3"];

/// Mean and standard error across repeats, per generation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub generation: usize,
    /// `[best, mean, worst]` means.
    pub value: [f64; 3],
    pub std_error: [f64; 3],
}

pub fn aggregate(rows: &[StatsRow]) -> Vec<SeriesPoint> {
    let mut by_gen: BTreeMap<usize, [Vec<f64>; 3]> = BTreeMap::new();
    for r in rows {
        let e = by_gen.entry(r.generation).or_default();
        e[0].push(r.best);
        e[1].push(r.mean);
        e[2].push(r.worst);
    }
    by_gen
        .into_iter()
        .map(|(generation, cols)| SeriesPoint {
            generation,
            value: [mean(&cols[0]), mean(&cols[1]), mean(&cols[2])],
            std_error: [standard_error(&cols[0]), standard_error(&cols[1]), standard_error(&cols[2])],
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if (0.01..10_000.0).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Best/mean/worst lines with shaded standard-error bands, one dash style
/// per labelled archive.
pub fn render_fitness_plot(archives: &[(String, Vec<StatsRow>)]) -> Result<String, Error> {
    if archives.is_empty() || archives.iter().any(|(_, rows)| rows.is_empty()) {
        return Err(Error::Archive("nothing to plot".into()));
    }
    let series: Vec<(&str, Vec<SeriesPoint>)> = archives.iter().map(|(l, rows)| (l.as_str(), aggregate(rows))).collect();

    let max_gen = series.iter().flat_map(|(_, s)| s.iter().map(|p| p.generation)).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in series.iter().flat_map(|(_, s)| s) {
        for k in 0..3 {
            lo = lo.min(p.value[k] - p.std_error[k]);
            hi = hi.max(p.value[k] + p.std_error[k]);
        }
    }
    if !(hi > lo) {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.05 } else { 1.0 };
        lo -= pad;
        hi += pad;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |g: usize| LEFT + if max_gen == 0 { plot_w / 2.0 } else { g as f64 / max_gen as f64 * plot_w };
    let y_of = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, "<title>fitness per generation</title>");
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // axes and ticks
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");
    let step = (max_gen / 10).max(1);
    for g in (0..=max_gen).step_by(step) {
        let x = x_of(g);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{g}</text>"#, y0 + 18.0);
    }
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(v));
    }
    let _ = writeln!(svg, r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">generation</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="20" y="{0:.2}" text-anchor="middle" transform="rotate(-90 20 {0:.2})">fitness</text>"#,
        TOP + plot_h / 2.0
    );

    for (a, (label, points)) in series.iter().enumerate() {
        let dash = DASHES[a % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(svg, r#"<g class="archive" data-label="{}">"#, escape(label));
        for (k, (name, colour)) in SERIES.iter().enumerate() {
            let mut band = String::new();
            for (i, p) in points.iter().enumerate() {
                let _ = write!(band, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, x_of(p.generation), y_of(p.value[k] + p.std_error[k]));
            }
            for p in points.iter().rev() {
                let _ = write!(band, "L{:.2},{:.2} ", x_of(p.generation), y_of(p.value[k] - p.std_error[k]));
            }
            band.push('Z');
            let _ = writeln!(svg, r#"<path class="band {name}" d="{band}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#);
        }
        for (k, (name, colour)) in SERIES.iter().enumerate() {
            let mut line = String::new();
            for (i, p) in points.iter().enumerate() {
                let _ = write!(line, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, x_of(p.generation), y_of(p.value[k]));
            }
            let _ = writeln!(svg, r#"<path class="series {name}" d="{line}" fill="none" stroke="{colour}" stroke-width="2"{dash_attr}/>"#);
        }
        let _ = writeln!(svg, "</g>");
    }

    // legend
    let lx = LEFT + plot_w + 20.0;
    let mut ly = TOP + 10.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (name, colour) in SERIES {
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 24.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{name}</text>"#, lx + 30.0, ly + 4.0);
        ly += 18.0;
    }
    for (a, (label, _)) in series.iter().enumerate() {
        let dash = DASHES[a % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black"{dash_attr}/>"#, lx + 24.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, escape(label));
        ly += 18.0;
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(repeats: usize) -> Vec<StatsRow> {
        (0..repeats)
            .flat_map(|r| {
                (0..5).map(move |g| StatsRow { repeat: r, generation: g, best: 1.0 + g as f64 + r as f64, mean: 0.5 + g as f64 * 0.5, worst: 0.1 })
            })
            .collect()
    }

    #[test]
    fn single_repeat_has_flat_bands() {
        let agg = aggregate(&rows(1));
        assert!(agg.iter().all(|p| p.std_error == [0.0; 3]));
        let agg = aggregate(&rows(3));
        assert!(agg[0].std_error[0] > 0.0);
        assert_eq!(agg[2].value[0], 4.0);
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_fitness_plot(&[("a<b&c".into(), rows(2))]).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(render_fitness_plot(&[]).is_err());
    }
}
