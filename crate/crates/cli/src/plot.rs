//! Information-plane figure as a self-contained SVG.
//!
//! One polyline per hidden layer, in a fixed per-layer color. Markers are
//! colored by epoch along a purple → teal → yellow gradient, interpolated
//! linearly in `ln(1 + epoch) / ln(1 + last epoch)`. Output bytes depend
//! only on the input points.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use infoplane::mi_est::InfoPlanePoint;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 420.0;

const LAYER_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const GRADIENT: [(f64, [f64; 3]); 3] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

/// Marker color for `epoch` on a run ending at `last`.
pub fn epoch_color(epoch: usize, last: usize) -> String {
    let t = if last == 0 {
        0.0
    } else {
        ((1.0 + epoch as f64).ln() / (1.0 + last as f64).ln()).clamp(0.0, 1.0)
    };
    let (lo, hi) = if t <= GRADIENT[1].0 {
        (GRADIENT[0], GRADIENT[1])
    } else {
        (GRADIENT[1], GRADIENT[2])
    };
    let u = (t - lo.0) / (hi.0 - lo.0);
    let c: Vec<u8> = (0..3).map(|i| (lo.1[i] + u * (hi.1[i] - lo.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn nice_max(v: f64, step: f64) -> f64 {
    ((v / step).ceil() * step).max(step)
}

/// Renders the figure. `widths[i]`, when given, labels layer `i` in the
/// legend.
pub fn render_svg(points: &[InfoPlanePoint], widths: Option<&[usize]>, title: &str) -> CliResult<String> {
    if points.is_empty() {
        return Err(CliError::validation("nothing to plot: no information-plane points"));
    }
    let mut layers: BTreeMap<usize, Vec<&InfoPlanePoint>> = BTreeMap::new();
    for p in points {
        layers.entry(p.layer).or_default().push(p);
    }
    for pts in layers.values_mut() {
        pts.sort_by_key(|p| p.epoch);
    }
    let last_epoch = points.iter().map(|p| p.epoch).max().unwrap_or(0);
    let x_max = nice_max(points.iter().map(|p| p.mi_xt_bits).fold(0.0, f64::max), 1.0);
    let y_max = nice_max(points.iter().map(|p| p.mi_ty_bits).fold(0.0, f64::max).max(1.0), 0.2);
    let sx = |v: f64| LEFT + PLOT_W * v / x_max;
    let sy = |v: f64| TOP + PLOT_H * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"##
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"##,
        LEFT + PLOT_W / 2.0,
        escape(title)
    );

    // axes and ticks
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="#000000"/>"##
    );
    let x_step = if x_max <= 14.0 { 1.0 } else { 2.0 };
    let mut xv = 0.0;
    while xv <= x_max + 1e-9 {
        let x = sx(xv);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{xv}</text>"##,
            TOP + PLOT_H,
            TOP + PLOT_H + 5.0,
            TOP + PLOT_H + 18.0
        );
        xv += x_step;
    }
    let y_step = if y_max <= 1.2 { 0.2 } else { 0.5 };
    let mut k = 0;
    loop {
        let yv = k as f64 * y_step;
        if yv > y_max + 1e-9 {
            break;
        }
        let y = sy(yv);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.1}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
        k += 1;
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">I(X;T) [bits]</text>"##,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 38.0
    );
    let _ = writeln!(
        s,
        r##"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">I(T;Y) [bits]</text>"##,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );

    for (&layer, pts) in &layers {
        let color = LAYER_COLORS[layer % LAYER_COLORS.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.mi_xt_bits), sy(p.mi_ty_bits)))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"##,
                path.join(" ")
            );
        }
        for p in pts {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" stroke="{color}" stroke-width="0.6"/>"##,
                sx(p.mi_xt_bits),
                sy(p.mi_ty_bits),
                epoch_color(p.epoch, last_epoch)
            );
        }
    }

    // legend: layer colors, then the epoch gradient
    let lx = LEFT + PLOT_W + 20.0;
    let mut ly = TOP + 10.0;
    for &layer in layers.keys() {
        let color = LAYER_COLORS[layer % LAYER_COLORS.len()];
        let label = match widths.and_then(|w| w.get(layer)) {
            Some(w) => format!("layer {layer} (width {w})"),
            None => format!("layer {layer}"),
        };
        let _ = writeln!(
            s,
            r##"<rect x="{lx:.1}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{:.1}" y="{ly:.1}">{label}</text>"##,
            ly - 6.0,
            lx + 20.0
        );
        ly += 18.0;
    }
    ly += 10.0;
    let _ = writeln!(s, r##"<text x="{lx:.1}" y="{ly:.1}">epoch</text>"##);
    for i in 0..=10 {
        let e = ((1.0 + last_epoch as f64).powf(i as f64 / 10.0) - 1.0).round() as usize;
        let _ = writeln!(
            s,
            r##"<rect x="{lx:.1}" y="{:.1}" width="14" height="12" fill="{}"/>"##,
            ly + 6.0 + 12.0 * i as f64,
            epoch_color(e, last_epoch)
        );
    }
    let _ = writeln!(s, r##"<text x="{:.1}" y="{:.1}">0</text>"##, lx + 20.0, ly + 16.0);
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}">{last_epoch}</text>"##,
        lx + 20.0,
        ly + 16.0 + 120.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(epoch: usize, layer: usize, x: f64, y: f64) -> InfoPlanePoint {
        InfoPlanePoint {
            epoch,
            layer,
            mi_xt_bits: x,
            mi_ty_bits: y,
        }
    }

    #[test]
    fn gradient_endpoints() {
        assert_eq!(epoch_color(0, 100), "#440154");
        assert_eq!(epoch_color(100, 100), "#fde725");
        assert_eq!(epoch_color(0, 0), "#440154");
    }

    #[test]
    fn single_point_gives_one_marker() {
        let svg = render_svg(&[pt(0, 0, 1.0, 0.5)], None, "t").unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn two_layers_two_polylines_and_widths_in_legend() {
        let pts = [pt(0, 0, 1.0, 0.1), pt(9, 0, 2.0, 0.9), pt(0, 1, 0.5, 0.1), pt(9, 1, 0.7, 0.8)];
        let svg = render_svg(&pts, Some(&[10, 7]), "t").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("layer 0 (width 10)") && svg.contains("layer 1 (width 7)"));
        assert_eq!(svg, render_svg(&pts, Some(&[10, 7]), "t").unwrap());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(render_svg(&[], None, "t").is_err());
    }
}
