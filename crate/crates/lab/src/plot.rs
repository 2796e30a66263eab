//! Two-panel SVG line charts: cumulative spend (with the ideal plan) on the
//! left, the applied multiplier on the right.

use std::fmt::Write as _;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 380.0;
const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 270.0;
const TOP: f64 = 50.0;
const LEFTS: [f64; 2] = [70.0, 550.0];
const PALETTE: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// One controller's series over the horizon.
#[derive(Debug, Clone)]
pub struct Trace {
    pub label: String,
    pub cum_spend: Vec<f64>,
    pub lambda: Vec<f64>,
}

struct Axis {
    left: f64,
    x_max: f64,
    y_max: f64,
}

impl Axis {
    fn x(&self, i: usize) -> f64 {
        self.left + PANEL_W * i as f64 / self.x_max.max(1.0)
    }

    fn y(&self, v: f64) -> f64 {
        TOP + PANEL_H * (1.0 - v / self.y_max)
    }
}

fn nice_max(v: f64) -> f64 {
    if !(v.is_finite() && v > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    let m = v / mag;
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .find(|s| m <= *s)
        .unwrap_or(10.0);
    step * mag
}

fn polyline(out: &mut String, axis: &Axis, ys: &[f64], color: &str, dashed: bool) {
    let points: Vec<String> = ys
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.2},{:.2}", axis.x(i), axis.y(v)))
        .collect();
    let dash = if dashed {
        r#" stroke-dasharray="6 4""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        points.join(" ")
    );
}

fn frame(out: &mut String, axis: &Axis, title: &str, y_label: &str) {
    let (l, r, b) = (axis.left, axis.left + PANEL_W, TOP + PANEL_H);
    let _ = writeln!(
        out,
        r##"<rect x="{l}" y="{TOP}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{title}</text>"#,
        l + PANEL_W / 2.0,
        TOP - 12.0
    );
    for k in 0..=4 {
        let v = axis.y_max * k as f64 / 4.0;
        let y = axis.y(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="#444"/>"##,
            l - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            l - 6.0,
            y + 4.0,
            tick(v)
        );
        let i = (axis.x_max * k as f64 / 4.0).round() as usize;
        let x = axis.x(i);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{:.1}" stroke="#444"/>"##,
            b + 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle" font-size="11">{i}</text>"#,
            b + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">cycle</text>"#,
        (l + r) / 2.0,
        b + 36.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{y_label}</text>"#,
        l - 52.0,
        TOP + PANEL_H / 2.0,
        l - 52.0,
        TOP + PANEL_H / 2.0
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the chart. Output is a pure function of the inputs.
pub fn render_svg(title: &str, ideal: &[f64], traces: &[Trace]) -> String {
    let horizon = traces
        .iter()
        .map(|t| t.lambda.len())
        .chain([ideal.len()])
        .max()
        .unwrap_or(0);
    let x_max = horizon.saturating_sub(1) as f64;
    let spend_max = traces
        .iter()
        .flat_map(|t| t.cum_spend.iter())
        .chain(ideal)
        .fold(0.0f64, |m, &v| m.max(v));
    let lambda_max = traces
        .iter()
        .flat_map(|t| t.lambda.iter())
        .fold(0.0f64, |m, &v| m.max(v));
    let spend_axis = Axis {
        left: LEFTS[0],
        x_max,
        y_max: nice_max(spend_max),
    };
    let lambda_axis = Axis {
        left: LEFTS[1],
        x_max,
        y_max: nice_max(lambda_max),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    frame(&mut out, &spend_axis, "cumulative spend", "spend");
    frame(&mut out, &lambda_axis, "multiplier", "lambda");

    polyline(&mut out, &spend_axis, ideal, "#000000", true);
    for (trace, color) in traces.iter().zip(PALETTE.iter().cycle()) {
        polyline(&mut out, &spend_axis, &trace.cum_spend, color, false);
        polyline(&mut out, &lambda_axis, &trace.lambda, color, false);
    }

    let mut legend_x = LEFTS[0];
    let legend_y = HEIGHT - 12.0;
    let mut entry = |label: &str, color: &str, dashed: bool| {
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<line x1="{legend_x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            legend_y - 4.0,
            legend_x + 24.0,
            legend_y - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{legend_y:.1}" font-size="12">{}</text>"#,
            legend_x + 30.0,
            escape(label)
        );
        legend_x += 40.0 + 8.0 * label.len() as f64;
    };
    entry("ideal", "#000000", true);
    for (trace, color) in traces.iter().zip(PALETTE.iter().cycle()) {
        entry(&trace.label, color, false);
    }
    out.push_str("</svg>\n");
    out
}
