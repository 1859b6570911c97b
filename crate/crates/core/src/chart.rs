//! Minimal SVG bar charts.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Vertical bars: one group per label, one bar per series. Values are
/// clamped at zero from below, so negative R² shows as an empty bar.
pub fn grouped_bars(title: &str, labels: &[String], series: &[String], values: &[Vec<f64>]) -> String {
    let bar_w = 14.0;
    let group_w = bar_w * series.len().max(1) as f64 + 16.0;
    let left = 60.0;
    let top = 40.0;
    let plot_h = 260.0;
    let label_h = 180.0;
    let width = left + group_w * labels.len() as f64 + 140.0;
    let height = top + plot_h + label_h;
    let vmax = values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    let base = top + plot_h;
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{base}" x2="{:.1}" y2="{base}" stroke="#333"/>"##,
        width - 130.0
    );
    for tick in 0..=4 {
        let v = vmax * tick as f64 / 4.0;
        let y = base - plot_h * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            left - 4.0,
            y + 4.0
        );
    }
    for (g, label) in labels.iter().enumerate() {
        let x0 = left + 8.0 + group_w * g as f64;
        for (k, v) in values.get(g).map(|v| v.as_slice()).unwrap_or(&[]).iter().enumerate() {
            let h = if v.is_finite() { v.max(0.0) / vmax * plot_h } else { 0.0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w}" height="{h:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                x0 + bar_w * k as f64,
                base - h,
                PALETTE[k % PALETTE.len()],
                escape(&series[k])
            );
        }
        let lx = x0 + group_w / 2.0 - 8.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{:.1}" transform="rotate(60 {lx:.1} {:.1})">{}</text>"#,
            base + 12.0,
            base + 12.0,
            escape(label)
        );
    }
    for (k, name) in series.iter().enumerate() {
        let y = top + 16.0 * k as f64;
        let x = width - 120.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            PALETTE[k % PALETTE.len()],
            x + 14.0,
            y + 9.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars sorted as given. Highlighted bars get a heavy outline.
pub fn importance_bars(title: &str, items: &[(String, f64, bool)]) -> String {
    let row_h = 14.0;
    let left = 170.0;
    let plot_w = 420.0;
    let top = 36.0;
    let height = top + row_h * items.len() as f64 + 40.0;
    let width = left + plot_w + 90.0;
    let vmax = items
        .iter()
        .map(|i| i.1)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{}</text>"#, escape(title));
    for (i, (name, v, highlight)) in items.iter().enumerate() {
        let y = top + row_h * i as f64;
        let w = if vmax > 0.0 { v.max(0.0) / vmax * plot_w } else { 0.0 };
        let stroke = if *highlight {
            r##" stroke="#000" stroke-width="2""##
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text><rect x="{left}" y="{y:.1}" width="{w:.1}" height="{:.1}" fill="#4e79a7"{stroke}/><text x="{:.1}" y="{:.1}">{v:.4}</text>"##,
            left - 4.0,
            y + 10.0,
            escape(name),
            row_h - 3.0,
            left + w + 4.0,
            y + 10.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="10" y="{:.1}" width="10" height="10" fill="#4e79a7" stroke="#000" stroke-width="2"/><text x="24" y="{:.1}">MLS numeric feature</text>"##,
        height - 24.0,
        height - 15.0
    );
    s.push_str("</svg>\n");
    s
}
