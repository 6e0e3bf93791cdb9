//! Deterministic SVG renderers for the four standard charts. All numeric
//! attributes are written with three decimals, colors and layout are fixed,
//! and inputs are traversed in sorted order, so identical inputs produce
//! byte-identical files.

use crate::fmt_budget;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use tcsl_core::{BudgetReport, PowerLawFit, RunGrid};

const W: f64 = 720.0;
const H: f64 = 480.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 700.0;
const PLOT_TOP: f64 = 45.0;
const PLOT_BOTTOM: f64 = 430.0;

/// Qualitative palette for per-budget series (colorbrewer Dark2).
const SERIES_COLORS: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

/// Diverging low→high ramp for the heatmap (blue → white → red).
const RAMP: [(u8, u8, u8); 5] = [
    (0x21, 0x66, 0xac),
    (0x67, 0xa9, 0xcf),
    (0xf7, 0xf7, 0xf7),
    (0xef, 0x8a, 0x62),
    (0xb2, 0x18, 0x2b),
];

fn n3(v: f64) -> String {
    format!("{v:.3}")
}

fn ramp_color(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let seg = (t.floor() as usize).min(RAMP.len() - 2);
    let local = t - seg as f64;
    let (r0, g0, b0) = RAMP[seg];
    let (r1, g1, b1) = RAMP[seg + 1];
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * local).round() as u8;
    (mix(r0, r1), mix(g0, g1), mix(b0, b1))
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Perceived brightness on [0, 1]; light cells get dark text.
fn luminance((r, g, b): (u8, u8, u8)) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

/// Monotone axis mapping, linear either in the value or in its logarithm.
struct Scale {
    lo: f64,
    hi: f64,
    out_lo: f64,
    out_hi: f64,
    log: bool,
}

impl Scale {
    fn new(values: impl IntoIterator<Item = f64>, out_lo: f64, out_hi: f64, log: bool) -> Scale {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.ln() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let pad = 0.06 * (hi - lo).max(1e-9);
        Scale {
            lo: lo - pad,
            hi: hi + pad,
            out_lo,
            out_hi,
            log,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.ln() } else { v };
        self.out_lo + (v - self.lo) / (self.hi - self.lo) * (self.out_hi - self.out_lo)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\" font-family=\"Helvetica,Arial,sans-serif\">",
        n3(W),
        n3(H),
        n3(W),
        n3(H)
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        n3(W),
        n3(H)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-size=\"15\" fill=\"#1a1a1a\">{title}</text>",
        n3(PLOT_LEFT)
    );
    s
}

fn frame(s: &mut String, right: f64) {
    let _ = writeln!(
        s,
        "<path d=\"M {} {} L {} {} L {} {}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
        n3(PLOT_LEFT),
        n3(PLOT_TOP),
        n3(PLOT_LEFT),
        n3(PLOT_BOTTOM),
        n3(right),
        n3(PLOT_BOTTOM)
    );
}

fn x_tick(s: &mut String, x: f64, label: &str) {
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#333333\" stroke-width=\"1\"/>\
         <text x=\"{x0}\" y=\"{ty}\" font-size=\"10\" fill=\"#333333\" text-anchor=\"middle\">{label}</text>",
        x0 = n3(x),
        y0 = n3(PLOT_BOTTOM),
        y1 = n3(PLOT_BOTTOM + 5.0),
        ty = n3(PLOT_BOTTOM + 17.0),
    );
}

fn y_tick(s: &mut String, y: f64, label: &str) {
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#333333\" stroke-width=\"1\"/>\
         <text x=\"{tx}\" y=\"{ty}\" font-size=\"10\" fill=\"#333333\" text-anchor=\"end\">{label}</text>",
        x0 = n3(PLOT_LEFT - 5.0),
        x1 = n3(PLOT_LEFT),
        y = n3(y),
        tx = n3(PLOT_LEFT - 8.0),
        ty = n3(y + 3.5),
    );
}

fn axis_captions(s: &mut String, x_label: &str, y_label: &str, right: f64) {
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#333333\" text-anchor=\"middle\">{x_label}</text>",
        n3((PLOT_LEFT + right) / 2.0),
        n3(H - 12.0)
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" font-size=\"11\" fill=\"#333333\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {})\">{y_label}</text>",
        n3((PLOT_TOP + PLOT_BOTTOM) / 2.0),
        n3((PLOT_TOP + PLOT_BOTTOM) / 2.0)
    );
}

fn polyline(s: &mut String, pts: &[(f64, f64)], color: &str, width: f64, dash: Option<&str>) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", n3(x), n3(y))).collect();
    let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"{dash}/>",
        coords.join(" "),
        n3(width)
    );
}

fn circle(s: &mut String, x: f64, y: f64, r: f64, color: &str) {
    let _ = writeln!(
        s,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\"/>",
        n3(x),
        n3(y),
        n3(r)
    );
}

fn linear_y_ticks(s: &mut String, scale: &Scale) {
    for i in 0..5 {
        let v = scale.lo + (scale.hi - scale.lo) * i as f64 / 4.0;
        y_tick(s, scale.map(v), &format!("{v:.3}"));
    }
}

/// Optimal size versus budget on log-log axes: anchor points, the fitted
/// power law, and a dotted square-root-slope reference through the first
/// anchor.
pub fn size_law_svg(anchors: &[(f64, f64)], fit: &PowerLawFit) -> String {
    let mut s = header(&format!(
        "Optimal model size vs budget (fit exponent {:.3})",
        fit.exponent_alpha
    ));
    let x0 = anchors[0].0;
    let y0 = anchors[0].1;
    let xs = Scale::new(anchors.iter().map(|p| p.0), PLOT_LEFT, PLOT_RIGHT, true);
    let fit_at = |x: f64| fit.coeff_a * x.powf(fit.exponent_alpha);
    let ref_at = |x: f64| y0 * (x / x0).powf(0.5);
    let mut all_y: Vec<f64> = anchors.iter().map(|p| p.1).collect();
    for &(x, _) in [anchors[0], anchors[anchors.len() - 1]].iter() {
        all_y.push(fit_at(x));
        all_y.push(ref_at(x));
    }
    let ys = Scale::new(all_y, PLOT_BOTTOM, PLOT_TOP, true);
    frame(&mut s, PLOT_RIGHT);
    let x_lo = anchors[0].0;
    let x_hi = anchors[anchors.len() - 1].0;
    polyline(
        &mut s,
        &[(xs.map(x_lo), ys.map(ref_at(x_lo))), (xs.map(x_hi), ys.map(ref_at(x_hi)))],
        "#2166ac",
        1.5,
        Some("4 3"),
    );
    polyline(
        &mut s,
        &[(xs.map(x_lo), ys.map(fit_at(x_lo))), (xs.map(x_hi), ys.map(fit_at(x_hi)))],
        "#d95f02",
        2.0,
        None,
    );
    for &(x, y) in anchors {
        circle(&mut s, xs.map(x), ys.map(y), 4.0, "#1b9e77");
        x_tick(&mut s, xs.map(x), &fmt_budget(x));
    }
    for v in [25.0f64, 50.0, 100.0, 200.0, 400.0, 800.0, 1600.0] {
        if v.ln() >= ys.lo && v.ln() <= ys.hi {
            y_tick(&mut s, ys.map(v), &format!("{v}"));
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#d95f02\">power-law fit</text>\
         <text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#2166ac\">slope 0.50 reference</text>",
        n3(PLOT_LEFT + 12.0),
        n3(PLOT_TOP + 16.0),
        n3(PLOT_LEFT + 12.0),
        n3(PLOT_TOP + 30.0)
    );
    axis_captions(&mut s, "budget (wall-clock)", "optimal params (M)", PLOT_RIGHT);
    s.push_str("</svg>\n");
    s
}

/// Best attained loss versus budget: log-scaled budgets, linear loss, and
/// the fitted decay curve sampled geometrically.
pub fn loss_law_svg(anchors: &[(f64, f64)], fit: &PowerLawFit) -> String {
    let mut s = header(&format!(
        "Best loss vs budget (fit exponent {:.3})",
        fit.exponent_alpha
    ));
    let xs = Scale::new(anchors.iter().map(|p| p.0), PLOT_LEFT, PLOT_RIGHT, true);
    let fit_at = |x: f64| fit.coeff_a * x.powf(fit.exponent_alpha);
    let x_lo = anchors[0].0;
    let x_hi = anchors[anchors.len() - 1].0;
    let samples: Vec<(f64, f64)> = (0..=64)
        .map(|i| {
            let x = (x_lo.ln() + (x_hi.ln() - x_lo.ln()) * i as f64 / 64.0).exp();
            (x, fit_at(x))
        })
        .collect();
    let ys = Scale::new(
        anchors.iter().map(|p| p.1).chain(samples.iter().map(|p| p.1)),
        PLOT_BOTTOM,
        PLOT_TOP,
        false,
    );
    frame(&mut s, PLOT_RIGHT);
    let curve: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (xs.map(x), ys.map(y))).collect();
    polyline(&mut s, &curve, "#d95f02", 2.0, None);
    for &(x, y) in anchors {
        circle(&mut s, xs.map(x), ys.map(y), 4.0, "#1b9e77");
        x_tick(&mut s, xs.map(x), &fmt_budget(x));
    }
    linear_y_ticks(&mut s, &ys);
    axis_captions(&mut s, "budget (wall-clock)", "best val BPB", PLOT_RIGHT);
    s.push_str("</svg>\n");
    s
}

/// Seed-mean loss per (budget, depth) cell, keyed for sorted traversal.
fn seed_means(grid: &RunGrid) -> BTreeMap<(u64, u32), (f64, f64)> {
    let mut acc: BTreeMap<(u64, u32), (f64, f64, usize)> = BTreeMap::new();
    for r in grid.records() {
        let e = acc
            .entry((r.budget_min.to_bits(), r.depth))
            .or_insert((r.params_m, 0.0, 0));
        e.1 += r.val_bpb;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(k, (params, sum, n))| (k, (params, sum / n as f64)))
        .collect()
}

/// One loss-versus-size curve per budget over log-scaled size: the U-shapes
/// and their flattening as the budget grows.
pub fn u_curves_svg(grid: &RunGrid) -> String {
    let legend_left = 610.0;
    let mut s = header("Validation BPB vs model size per budget");
    let budgets = grid.budgets();
    let means = seed_means(grid);
    let xs = Scale::new(
        grid.records().iter().map(|r| r.params_m),
        PLOT_LEFT,
        legend_left - 10.0,
        true,
    );
    let ys = Scale::new(means.values().map(|&(_, v)| v), PLOT_BOTTOM, PLOT_TOP, false);
    frame(&mut s, legend_left - 10.0);
    for (i, &budget) in budgets.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut pts: Vec<(f64, f64, f64)> = means
            .iter()
            .filter(|((bits, _), _)| *bits == budget.to_bits())
            .map(|(_, &(params, v))| (params, xs.map(params), ys.map(v)))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let line: Vec<(f64, f64)> = pts.iter().map(|&(_, x, y)| (x, y)).collect();
        polyline(&mut s, &line, color, 2.0, None);
        for &(_, x, y) in &pts {
            circle(&mut s, x, y, 3.0, color);
        }
        let ly = 50.0 + i as f64 * 16.0;
        let _ = writeln!(
            s,
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{tx}\" y=\"{ty}\" font-size=\"10\" fill=\"#333333\">{label}</text>",
            x1 = n3(legend_left),
            x2 = n3(legend_left + 18.0),
            y = n3(ly),
            tx = n3(legend_left + 24.0),
            ty = n3(ly + 3.5),
            label = fmt_budget(budget),
        );
    }
    for depth in grid.depths() {
        if let Some(params) = grid.params_of(depth) {
            x_tick(&mut s, xs.map(params), &format!("D{depth}"));
        }
    }
    linear_y_ticks(&mut s, &ys);
    axis_captions(&mut s, "model size (depth label, log params)", "val BPB", legend_left - 10.0);
    s.push_str("</svg>\n");
    s
}

/// Budgets × depths heatmap of seed-mean loss on the diverging ramp, gold
/// outlines on each budget's tie-set optima, absent cells in grey.
pub fn heatmap_svg(grid: &RunGrid, reports: &[BudgetReport]) -> String {
    let budgets = grid.budgets();
    let depths = grid.depths();
    let means = seed_means(grid);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, v) in means.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    let mut s = header(&format!(
        "BPB heatmap: blue {} to red {} (gold = optimum)",
        n3(lo),
        n3(hi)
    ));
    let cw = (PLOT_RIGHT - PLOT_LEFT) / depths.len() as f64;
    let ch = (PLOT_BOTTOM - PLOT_TOP) / budgets.len() as f64;
    let cell_rect = |row: usize, col: usize| {
        (PLOT_LEFT + col as f64 * cw, PLOT_TOP + row as f64 * ch)
    };
    for (row, &budget) in budgets.iter().enumerate() {
        for (col, &depth) in depths.iter().enumerate() {
            let (x, y) = cell_rect(row, col);
            match means.get(&(budget.to_bits(), depth)) {
                Some(&(_, v)) => {
                    let t = if span > 0.0 { (v - lo) / span } else { 0.5 };
                    let rgb = ramp_color(t);
                    let _ = writeln!(
                        s,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" \
                         stroke=\"#ffffff\" stroke-width=\"1\"/>",
                        n3(x),
                        n3(y),
                        n3(cw),
                        n3(ch),
                        hex(rgb)
                    );
                    let text_color = if luminance(rgb) > 0.55 { "#1a1a1a" } else { "#ffffff" };
                    let _ = writeln!(
                        s,
                        "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"{text_color}\" \
                         text-anchor=\"middle\">{}</text>",
                        n3(x + cw / 2.0),
                        n3(y + ch / 2.0 + 3.5),
                        n3(v)
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#dddddd\" \
                         stroke=\"#ffffff\" stroke-width=\"1\"/>",
                        n3(x),
                        n3(y),
                        n3(cw),
                        n3(ch)
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#333333\" text-anchor=\"end\">{}</text>",
            n3(PLOT_LEFT - 8.0),
            n3(PLOT_TOP + row as f64 * ch + ch / 2.0 + 3.5),
            fmt_budget(budget)
        );
    }
    for (col, &depth) in depths.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#333333\" text-anchor=\"middle\">D{depth}</text>",
            n3(PLOT_LEFT + col as f64 * cw + cw / 2.0),
            n3(PLOT_BOTTOM + 16.0)
        );
    }
    // Gold outlines last so they are never covered by neighbouring cells.
    for report in reports {
        let Some(row) = budgets.iter().position(|b| *b == report.budget_min) else {
            continue;
        };
        for d in &report.optimum.depths {
            let Some(col) = depths.iter().position(|x| x == d) else {
                continue;
            };
            let (x, y) = cell_rect(row, col);
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" \
                 stroke=\"#ffd700\" stroke-width=\"2.5\"/>",
                n3(x + 1.5),
                n3(y + 1.5),
                n3(cw - 3.0),
                n3(ch - 3.0)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use tcsl_core::{
        budget_reports, fit_loss_law, fit_optimal_size_law, load_reference_dataset, TiePolicy,
    };

    #[test]
    fn ramp_endpoints_and_midpoint() {
        assert_eq!(hex(ramp_color(0.0)), "#2166ac");
        assert_eq!(hex(ramp_color(0.5)), "#f7f7f7");
        assert_eq!(hex(ramp_color(1.0)), "#b2182b");
        assert_eq!(hex(ramp_color(-1.0)), "#2166ac");
        assert_eq!(hex(ramp_color(2.0)), "#b2182b");
    }

    #[test]
    fn charts_are_deterministic_and_well_formed() {
        let ds = load_reference_dataset();
        let tie = TiePolicy::default();
        let (size_fit, size_anchors) = fit_optimal_size_law(&ds.grid, tie).unwrap();
        let (loss_fit, loss_anchors) = fit_loss_law(&ds.grid).unwrap();
        let reports = budget_reports(&ds.grid, tie);
        let charts = [
            size_law_svg(&size_anchors, &size_fit),
            loss_law_svg(&loss_anchors, &loss_fit),
            u_curves_svg(&ds.grid),
            heatmap_svg(&ds.grid, &reports),
        ];
        for chart in &charts {
            assert!(chart.starts_with("<svg "));
            assert!(chart.ends_with("</svg>\n"));
            assert_eq!(chart.matches("<svg ").count(), 1);
        }
        assert_eq!(charts[0], {
            let (f, a) = fit_optimal_size_law(&ds.grid, tie).unwrap();
            size_law_svg(&a, &f)
        });
        assert!(charts[0].contains("slope 0.50 reference"));
        assert!(charts[0].contains("stroke-dasharray=\"4 3\""));
        assert!(charts[2].contains("24h"));
        assert!(charts[3].contains("#ffd700"));
        assert!(charts[3].contains("#dddddd"));
        // 56 observed cells leave 24 absent ones in an 8×10 table.
        assert_eq!(charts[3].matches("#dddddd").count(), 24);
        // Two tie-set cells at 2h plus one per other budget.
        assert_eq!(charts[3].matches("#ffd700").count(), 9);
    }
}
