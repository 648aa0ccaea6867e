//! Minimal static SVG output: bar charts and 2-D scatter plots.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#4878cf", "#e1812c", "#3a923a", "#c03d3e", "#9372b2", "#7f7f7f"];

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bar chart with a zero axis; one bar per label.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    assert_eq!(labels.len(), values.len());
    let bar_h = 18.0;
    let gap = 6.0;
    let label_w = 180.0;
    let plot_w = 520.0;
    let top = 40.0;
    let height = top + labels.len() as f64 * (bar_h + gap) + 20.0;
    let width = label_w + plot_w + 40.0;
    let max_abs = values.iter().fold(1e-300f64, |a, &v| a.max(v.abs()));
    let zero_x = label_w + plot_w / 2.0;
    let scale = plot_w / 2.0 / max_abs;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"20\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        esc(title)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{zero_x:.1}\" y1=\"{top:.1}\" x2=\"{zero_x:.1}\" y2=\"{:.1}\" stroke=\"#999\"/>",
        height - 20.0
    );
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = top + i as f64 * (bar_h + gap);
        let w = v.abs() * scale;
        let x = if v < 0.0 { zero_x - w } else { zero_x };
        let color = if v < 0.0 { PALETTE[3] } else { PALETTE[0] };
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{bar_h:.1}\" fill=\"{color}\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            label_w - 6.0,
            y + bar_h - 4.0,
            esc(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter plot of 2-D points, optionally colored by a class string.
pub fn scatter(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    points: &[(f64, f64)],
    classes: Option<&[String]>,
) -> String {
    let width = 640.0;
    let height = 520.0;
    let margin = 60.0;
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if points.is_empty() || !min_x.is_finite() {
        min_x = 0.0;
        max_x = 1.0;
        min_y = 0.0;
        max_y = 1.0;
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(1e-12);
        *lo -= 0.05 * span;
        *hi += 0.05 * span;
    };
    pad(&mut min_x, &mut max_x);
    pad(&mut min_y, &mut max_y);
    let sx = (width - 2.0 * margin) / (max_x - min_x);
    let sy = (height - 2.0 * margin) / (max_y - min_y);

    // Stable class -> color mapping in first-appearance order.
    let mut class_names: Vec<&str> = Vec::new();
    if let Some(cls) = classes {
        for c in cls {
            if !class_names.iter().any(|k| k == c) {
                class_names.push(c);
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        esc(title)
    );
    let _ = writeln!(
        out,
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#999\"/>",
        width - 2.0 * margin,
        height - 2.0 * margin
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        height - 14.0,
        esc(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        height / 2.0,
        height / 2.0,
        esc(ylabel)
    );
    for (i, &(x, y)) in points.iter().enumerate() {
        let px = margin + (x - min_x) * sx;
        let py = height - margin - (y - min_y) * sy;
        let color = match classes {
            None => PALETTE[0],
            Some(cls) => {
                let pos = class_names.iter().position(|k| *k == cls[i]).unwrap_or(0);
                PALETTE[pos % PALETTE.len()]
            }
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3.5\" fill=\"{color}\" fill-opacity=\"0.75\"/>"
        );
    }
    for (pos, name) in class_names.iter().enumerate() {
        let y = margin + 16.0 * pos as f64;
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{}\"/>",
            width - margin - 110.0,
            y,
            PALETTE[pos % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            width - margin - 100.0,
            y + 4.0,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
