//! Minimal SVG rendering: line charts for influence curves, grouped bars for
//! rejection rates. No plotting dependency; the CSV next to the SVG is the
//! canonical output.

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct BarGroup {
    pub label: String,
    pub values: Vec<f64>,
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        (WIDTH - MARGIN_RIGHT + MARGIN_LEFT) / 2.0,
        escape(title)
    ));
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str, x_ticks: &[f64], y_ticks: &[f64]) {
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    for &t in y_ticks {
        let y = frame.py(t);
        out.push_str(&format!(
            "<line x1=\"{left:.1}\" y1=\"{y:.1}\" x2=\"{right:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            left - 6.0,
            y + 4.0,
            tick_label(t)
        ));
    }
    for &t in x_ticks {
        let x = frame.px(t);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{bottom:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            top,
            bottom + 18.0,
            tick_label(t)
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{left:.1}\" y=\"{top:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333333\"/>\n",
        right - left,
        bottom - top
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (left + right) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    ));
}

fn legend(out: &mut String, names: &[String]) {
    let x = WIDTH - MARGIN_RIGHT + 16.0;
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 + i as f64 * 20.0;
        out.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"14\" height=\"4\" fill=\"{}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            y - 2.0,
            color(i),
            x + 20.0,
            y + 4.0,
            escape(name)
        ));
    }
}

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| lo + (hi - lo) * i as f64 / count as f64)
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            xs = (xs.0.min(x), xs.1.max(x));
            ys = (ys.0.min(y), ys.1.max(y));
        }
    }
    if !xs.0.is_finite() {
        xs = (0.0, 1.0);
        ys = (0.0, 1.0);
    }
    let pad = ((ys.1 - ys.0).abs()).max(1e-9) * 0.06;
    let frame = Frame {
        x0: xs.0,
        x1: xs.1.max(xs.0 + 1e-9),
        y0: ys.0 - pad,
        y1: ys.1 + pad,
    };

    let mut out = String::new();
    header(&mut out, title);
    axes(
        &mut out,
        &frame,
        x_label,
        y_label,
        &ticks(frame.x0, frame.x1, 8),
        &ticks(frame.y0, frame.y1, 6),
    );
    if frame.y0 < 0.0 && frame.y1 > 0.0 {
        let y = frame.py(0.0);
        out.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            pts.join(" "),
            color(i)
        ));
    }
    legend(&mut out, &series.iter().map(|s| s.name.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Grouped bar chart; every group carries one value per series name.
pub fn bar_chart(title: &str, y_label: &str, series_names: &[String], groups: &[BarGroup]) -> String {
    let max_val = groups
        .iter()
        .flat_map(|g| g.values.iter().copied())
        .fold(0.0f64, f64::max);
    let frame = Frame {
        x0: 0.0,
        x1: groups.len().max(1) as f64,
        y0: 0.0,
        y1: (max_val * 1.08).max(0.1),
    };

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame, "", y_label, &[], &ticks(0.0, frame.y1, 6));

    let group_width = frame.px(1.0) - frame.px(0.0);
    let slot = group_width * 0.8 / series_names.len().max(1) as f64;
    for (gi, group) in groups.iter().enumerate() {
        let gx = frame.px(gi as f64) + group_width * 0.1;
        for (si, &v) in group.values.iter().enumerate() {
            let x = gx + si as f64 * slot;
            let y = frame.py(v);
            let h = frame.py(0.0) - y;
            out.push_str(&format!(
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"/>\n",
                (slot * 0.92).max(1.0),
                color(si)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            frame.px(gi as f64 + 0.5),
            HEIGHT - MARGIN_BOTTOM + 18.0,
            escape(&group.label)
        ));
    }
    legend(&mut out, series_names);
    out.push_str("</svg>\n");
    out
}
