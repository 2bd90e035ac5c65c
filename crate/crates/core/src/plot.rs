//! Minimal static SVG charts: ROC curves and probability time series with
//! shaded recession months.

use std::fmt::Write as _;

use crate::metrics::RocCurve;
use crate::period::YearMonth;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(title: &str, body: &str, x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (WIDTH, HEIGHT, MARGIN);
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect width="{w}" height="{h}" fill="white"/>
<text x="{cx}" y="20" text-anchor="middle" font-size="14">{title}</text>
{body}<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="black"/>
<text x="{cx}" y="{xl}" text-anchor="middle">{x_label}</text>
<text x="14" y="{cy}" text-anchor="middle" transform="rotate(-90 14 {cy})">{y_label}</text>
"#,
        cx = w / 2.0,
        cy = h / 2.0,
        pw = w - 2.0 * m,
        ph = h - 2.0 * m,
        xl = h - 12.0,
        title = escape(title),
        x_label = escape(x_label),
        y_label = escape(y_label),
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = h - m - v * (h - 2.0 * m);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            m - 4.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn px(x: f64) -> f64 {
    MARGIN + x * (WIDTH - 2.0 * MARGIN)
}

fn py(y: f64) -> f64 {
    HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN)
}

/// ROC curves with a diagonal reference line; the legend reports each AUC.
pub fn roc_svg(title: &str, curves: &[(&str, &RocCurve)]) -> String {
    let mut body = String::new();
    let _ = writeln!(
        body,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for (i, (name, roc)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = roc
            .fp_rate
            .iter()
            .zip(&roc.tp_rate)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = py(0.1) - 16.0 * i as f64;
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}" text-anchor="end">{} (AUC {:.3})</text>"#,
            px(0.97),
            escape(name),
            roc.auc
        );
    }
    frame(title, &body, "false positive rate", "true positive rate")
}

/// Probability series over time with recession months shaded.
pub fn probability_svg(
    title: &str,
    dates: &[YearMonth],
    series: &[(&str, &[f64])],
    recession: &[u8],
) -> String {
    let mut body = String::new();
    if dates.is_empty() {
        return frame(title, &body, "date", "probability");
    }
    let first = dates[0];
    let span = dates.last().expect("non-empty").months_since(&first).max(1) as f64;
    let x_of = |d: &YearMonth| px(d.months_since(&first) as f64 / span);
    let step = px(1.0 / span) - px(0.0);
    for (d, r) in dates.iter().zip(recession) {
        if *r == 1 {
            let _ = writeln!(
                body,
                r##"<rect x="{:.2}" y="{}" width="{:.2}" height="{}" fill="#dddddd"/>"##,
                x_of(d) - step / 2.0,
                MARGIN,
                step,
                HEIGHT - 2.0 * MARGIN
            );
        }
    }
    for (i, (name, values)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = dates
            .iter()
            .zip(values.iter())
            .map(|(d, v)| format!("{:.2},{:.2}", x_of(d), py(*v)))
            .collect();
        let _ = writeln!(
            body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            px(0.02),
            py(0.95) + 16.0 * i as f64,
            escape(name)
        );
    }
    let years: Vec<&YearMonth> = dates.iter().filter(|d| d.month() == 1 && d.year() % 5 == 0).collect();
    for d in years {
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x_of(d),
            HEIGHT - MARGIN + 16.0,
            d.year()
        );
    }
    frame(title, &body, "date", "probability")
}
