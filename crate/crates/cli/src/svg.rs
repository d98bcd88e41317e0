//! Minimal SVG line and scatter plots.

use std::fmt::Write as _;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const W: f64 = 800.0;
const H: f64 = 300.0;
const PAD: f64 = 40.0;

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str, height: f64) {
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(title)).unwrap();
}

fn legend(out: &mut String, labels: &[&str], y: f64) {
    let mut x = PAD;
    for (i, l) in labels.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        writeln!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{c}"/>"#, y - 9.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11">{}</text>"#, x + 14.0, escape(l)).unwrap();
        x += 24.0 + 7.0 * l.len() as f64;
    }
}

/// Stacked panels, one per series, each scaled to its own range.
pub fn panels(title: &str, series: &[(&str, &[f64])]) -> String {
    let panel_h = 120.0;
    let height = 40.0 + panel_h * series.len() as f64;
    let mut out = String::new();
    header(&mut out, title, height);
    for (i, (label, ys)) in series.iter().enumerate() {
        let top = 30.0 + panel_h * i as f64;
        let (lo, hi) = bounds(ys.iter());
        let n = ys.len().max(2) as f64 - 1.0;
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .map(|(t, &y)| {
                let px = PAD + (W - 2.0 * PAD) * t as f64 / n;
                let py = top + 15.0 + (panel_h - 25.0) * (1.0 - (y - lo) / (hi - lo));
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let c = PALETTE[i % PALETTE.len()];
        writeln!(out, r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#, top + 10.0, escape(label)).unwrap();
        writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{}"/>"#, pts.join(" ")).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Several curves on shared axes over `x`.
pub fn lines(title: &str, x: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title, H);
    let (xlo, xhi) = bounds(x.iter());
    let (ylo, yhi) = bounds(series.iter().flat_map(|s| s.1.iter()));
    let map = |a: f64, b: f64| {
        (PAD + (W - 2.0 * PAD) * (a - xlo) / (xhi - xlo), 40.0 + (H - 80.0) * (1.0 - (b - ylo) / (yhi - ylo)))
    };
    writeln!(out, r#"<text x="4" y="44" font-family="sans-serif" font-size="10">{yhi:.3}</text>"#).unwrap();
    writeln!(out, r#"<text x="4" y="{}" font-family="sans-serif" font-size="10">{ylo:.3}</text>"#, H - 40.0).unwrap();
    for (i, (_, ys)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = x.iter().zip(ys).map(|(&a, &b)| map(a, b)).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
        for p in &pts {
            let (a, b) = p.split_once(',').unwrap();
            writeln!(out, r#"<circle cx="{a}" cy="{b}" r="2.5" fill="{c}"/>"#).unwrap();
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut out, &labels, H - 10.0);
    out.push_str("</svg>\n");
    out
}

/// Point clouds, one colour per group.
pub fn scatter(title: &str, groups: &[(&str, &[[f64; 2]])]) -> String {
    let mut out = String::new();
    header(&mut out, title, H + 100.0);
    let (xlo, xhi) = bounds(groups.iter().flat_map(|g| g.1.iter().map(|p| &p[0])));
    let (ylo, yhi) = bounds(groups.iter().flat_map(|g| g.1.iter().map(|p| &p[1])));
    let h = H + 100.0;
    for (i, (_, pts)) in groups.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        for p in pts.iter() {
            let px = PAD + (W - 2.0 * PAD) * (p[0] - xlo) / (xhi - xlo);
            let py = 40.0 + (h - 80.0) * (1.0 - (p[1] - ylo) / (yhi - ylo));
            writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{c}" fill-opacity="0.7"/>"#).unwrap();
        }
    }
    let labels: Vec<&str> = groups.iter().map(|g| g.0).collect();
    legend(&mut out, &labels, h - 10.0);
    out.push_str("</svg>\n");
    out
}
