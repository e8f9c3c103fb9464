//! Hand-rolled SVG figures: rect-grid heatmaps with a two-color linear
//! ramp, and line plots with an optional inset panel.

use std::fmt::Write as _;

const RAMP_LOW: (u8, u8, u8) = (33, 102, 172); // blue
const RAMP_HIGH: (u8, u8, u8) = (178, 24, 43); // red
const MISSING: &str = "#cccccc";
const SERIES_COLORS: [&str; 6] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
];

/// Linear two-color ramp, clamped to [v_min, v_max].
pub fn ramp_color(v: f64, v_min: f64, v_max: f64) -> String {
    let t = if v_max > v_min {
        ((v - v_min) / (v_max - v_min)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let mix = |a: u8, b: u8| (a as f64 + t * (b as f64 - a as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(RAMP_LOW.0, RAMP_HIGH.0),
        mix(RAMP_LOW.1, RAMP_HIGH.1),
        mix(RAMP_LOW.2, RAMP_HIGH.2)
    )
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    /// Column axis (h values, ascending).
    pub h: &'a [f64],
    /// Row axis (ε values, ascending).
    pub eps: &'a [f64],
    /// Row-major cells, `cells[e * h.len() + i]`; `None` renders gray.
    pub cells: &'a [Option<f64>],
    pub v_min: f64,
    pub v_max: f64,
    /// Overlay points (h, ε), drawn as circles.
    pub boundary: &'a [(f64, f64)],
}

const MARGIN: f64 = 50.0;
const PLOT_W: f64 = 540.0;
const PLOT_H: f64 = 360.0;

fn x_of(v: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + (v - lo) / (hi - lo).max(f64::MIN_POSITIVE) * PLOT_W
}

fn y_of(v: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + PLOT_H - (v - lo) / (hi - lo).max(f64::MIN_POSITIVE) * PLOT_H
}

pub fn render_heatmap(hm: &Heatmap) -> String {
    let (w, h) = (MARGIN * 2.0 + PLOT_W, MARGIN * 2.0 + PLOT_H + 20.0);
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        hm.title
    );
    let cell_w = PLOT_W / hm.h.len() as f64;
    let cell_h = PLOT_H / hm.eps.len() as f64;
    for (e, _) in hm.eps.iter().enumerate() {
        for (i, _) in hm.h.iter().enumerate() {
            let color = match hm.cells[e * hm.h.len() + i] {
                Some(v) => ramp_color(v, hm.v_min, hm.v_max),
                None => MISSING.to_string(),
            };
            let x = MARGIN + i as f64 * cell_w;
            // ε increases upward
            let y = MARGIN + PLOT_H - (e + 1) as f64 * cell_h;
            let _ = write!(
                s,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w:.2}\" height=\"{cell_h:.2}\" fill=\"{color}\"/>\n"
            );
        }
    }
    let (h_lo, h_hi) = (hm.h[0], hm.h[hm.h.len() - 1]);
    let (e_lo, e_hi) = (hm.eps[0], hm.eps[hm.eps.len() - 1]);
    for &(bh, beps) in hm.boundary {
        let _ = write!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"white\" stroke=\"black\"/>\n",
            x_of(bh, h_lo, h_hi),
            y_of(beps, e_lo, e_hi)
        );
    }
    axis_labels(&mut s, h_lo, h_hi, e_lo, e_hi, "h", "eps");
    s.push_str("</svg>\n");
    s
}

fn axis_labels(s: &mut String, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, x_name: &str, y_name: &str) {
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{x_lo}</text>\n",
        MARGIN,
        MARGIN + PLOT_H + 16.0
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{x_hi}</text>\n",
        MARGIN + PLOT_W,
        MARGIN + PLOT_H + 16.0
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\">{x_name}</text>\n",
        MARGIN + PLOT_W / 2.0,
        MARGIN + PLOT_H + 18.0
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{y_lo}</text>\n",
        MARGIN - 6.0,
        MARGIN + PLOT_H
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{y_hi}</text>\n",
        MARGIN - 6.0,
        MARGIN + 10.0
    );
    let _ = write!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\">{y_name}</text>\n",
        MARGIN - 6.0,
        MARGIN + PLOT_H / 2.0
    );
}

/// One named line with optional per-point vertical error bars.
pub struct Series<'a> {
    pub label: String,
    /// (x, y, error) triples; error 0 draws no bar.
    pub points: &'a [(f64, f64, f64)],
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        for &(x, y, e) in s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y - e);
            y_hi = y_hi.max(y + e);
        }
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    (x_lo, x_hi, y_lo, y_hi)
}

fn draw_series(
    s: &mut String,
    series: &[Series],
    origin: (f64, f64),
    size: (f64, f64),
    lims: (f64, f64, f64, f64),
) {
    let (x_lo, x_hi, y_lo, y_hi) = lims;
    let px = |x: f64| origin.0 + (x - x_lo) / (x_hi - x_lo).max(f64::MIN_POSITIVE) * size.0;
    let py = |y: f64| origin.1 + size.1 - (y - y_lo) / (y_hi - y_lo).max(f64::MIN_POSITIVE) * size.1;
    for (k, ser) in series.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = write!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        );
        for &(x, y, e) in ser.points {
            if e > 0.0 {
                let _ = write!(
                    s,
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
                    px(x), py(y - e), px(x), py(y + e)
                );
            }
            let _ = write!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            );
        }
    }
}

/// Line plot with legend; `inset` draws a second small panel in the
/// upper right (used for the collapsed curves).
pub fn render_curves(
    title: &str,
    x_name: &str,
    y_name: &str,
    series: &[Series],
    inset: Option<(&str, &[Series])>,
) -> String {
    let (w, h) = (MARGIN * 2.0 + PLOT_W, MARGIN * 2.0 + PLOT_H + 20.0);
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2.0
    );
    let _ = write!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    let lims = bounds(series);
    draw_series(&mut s, series, (MARGIN, MARGIN), (PLOT_W, PLOT_H), lims);
    axis_labels(&mut s, lims.0, lims.1, lims.2, lims.3, x_name, y_name);
    for (k, ser) in series.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let _ = write!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            MARGIN + 10.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            ser.label
        );
    }
    if let Some((inset_title, inset_series)) = inset {
        let (iw, ih) = (PLOT_W * 0.34, PLOT_H * 0.34);
        let (ix, iy) = (MARGIN + PLOT_W - iw - 12.0, MARGIN + 12.0);
        let _ = write!(
            s,
            "<rect x=\"{ix:.2}\" y=\"{iy:.2}\" width=\"{iw:.2}\" height=\"{ih:.2}\" fill=\"white\" stroke=\"black\"/>\n"
        );
        let ilims = bounds(inset_series);
        draw_series(&mut s, inset_series, (ix, iy), (iw, ih), ilims);
        let _ = write!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"10\">{inset_title}</text>\n",
            ix + iw / 2.0,
            iy + ih + 12.0
        );
    }
    s.push_str("</svg>\n");
    s
}
