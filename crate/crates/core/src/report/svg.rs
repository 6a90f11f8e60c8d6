//! Minimal SVG writers for HPD bar charts and trace plots.

use std::fmt::Write;

use super::summary::{ParameterSummary, SummaryTable};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 70.0;
const CHAIN_COLOURS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let w = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - w, hi + w)
    }
}

/// One panel of HPD bars with mode dots; `physical` gives the bin centres in
/// physical units for the secondary axis.
fn hpd_panel(out: &mut String, x0: f64, title: &str, params: &[ParameterSummary], physical: &[f64], unit: &str) {
    let lo = params.iter().map(|p| p.hpd_lower.min(p.mode)).fold(f64::INFINITY, f64::min);
    let hi = params.iter().map(|p| p.hpd_upper.max(p.mode)).fold(f64::NEG_INFINITY, f64::max);
    let (ymin, ymax) = range(lo, hi);
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let n = params.len().max(1) as f64;
    let px = |i: usize| x0 + MARGIN_L + plot_w * (i as f64 + 0.5) / n;
    let py = |v: f64| MARGIN_T + plot_h * (1.0 - (v - ymin) / (ymax - ymin));

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x0 + MARGIN_L,
        MARGIN_T,
        plot_w,
        plot_h
    );
    for k in 0..=4 {
        let v = ymin + (ymax - ymin) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            x0 + MARGIN_L - 4.0,
            x0 + MARGIN_L,
            x0 + MARGIN_L - 6.0,
            y + 3.0,
            fmt_tick(v)
        );
    }
    for (i, p) in params.iter().enumerate() {
        let x = px(i);
        let (y1, y2) = (py(p.hpd_lower), py(p.hpd_upper));
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{y2:.2}" stroke="black" stroke-width="2"><title>{}</title></line>"#,
            escape(&p.name)
        );
        for y in [y1, y2] {
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, x - 4.0, x + 4.0);
        }
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="red"/>"#, py(p.mode));
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            MARGIN_T + plot_h + 14.0,
            i + 1
        );
        if let Some(c) = physical.get(i) {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" font-size="8" text-anchor="middle" fill="grey">{}</text>"#,
                MARGIN_T + plot_h + 28.0,
                fmt_tick(*c)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">bin index (grey: bin centre, {})</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        PANEL_H - 18.0,
        escape(unit)
    );
    let _ = writeln!(out, "</g>");
}

/// ρ panel and f panel side by side: HPD bars with the modes as red dots.
pub fn hpd_plot(summary: &SummaryTable, radial_centres: &[f64], energy_centres: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * PANEL_W,
        PANEL_H,
        2.0 * PANEL_W,
        PANEL_H
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mass = (summary.hpd_mass * 100.0).round();
    hpd_panel(&mut out, 0.0, &format!("rho: {mass}% HPD and mode"), &summary.rho, radial_centres, "radius");
    hpd_panel(&mut out, PANEL_W, &format!("f: {mass}% HPD and mode"), &summary.f, energy_centres, "energy");
    out.push_str("</svg>\n");
    out
}

/// Trace of one parameter, one polyline per chain.
pub fn trace_plot(name: &str, chains: &[Vec<f64>]) -> String {
    let w = 640.0;
    let h = 240.0;
    let plot_w = w - MARGIN_L - MARGIN_R;
    let plot_h = h - MARGIN_T - 40.0;
    let lo = chains.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = chains.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let (ymin, ymax) = if lo.is_finite() { range(lo, hi) } else { (0.0, 1.0) };
    let n = chains.iter().map(Vec::len).max().unwrap_or(1).max(2) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">trace of {}</text>"#,
        MARGIN_L + plot_w / 2.0,
        escape(name)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = ymin + (ymax - ymin) * k as f64 / 4.0;
        let y = MARGIN_T + plot_h * (1.0 - k as f64 / 4.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            y + 3.0,
            fmt_tick(v)
        );
    }
    for (c, values) in chains.iter().enumerate() {
        // Long chains are decimated to keep files small.
        let stride = (values.len() / 2000).max(1);
        let mut pts = String::new();
        for (i, v) in values.iter().enumerate().step_by(stride) {
            let x = MARGIN_L + plot_w * i as f64 / (n - 1.0);
            let y = MARGIN_T + plot_h * (1.0 - (v - ymin) / (ymax - ymin));
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="0.8" points="{}"/>"#,
            CHAIN_COLOURS[c % CHAIN_COLOURS.len()],
            pts.trim_end()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">stored sample</text>"#,
        MARGIN_L + plot_w / 2.0,
        h - 10.0
    );
    out.push_str("</svg>\n");
    out
}
