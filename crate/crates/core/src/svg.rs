//! Dependency-free SVG emitters for line charts and scatter plots.
//!
//! Fixed viewBox, deterministic number formatting, no timestamps: byte-stable
//! for golden-file comparisons.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Distinct stroke colors, cycled.
pub const SERIES_COLORS: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn fmt(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_bounds(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        let pad = |lo: f64, hi: f64| {
            let span = hi - lo;
            if span <= 0.0 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo - 0.05 * span, hi + 0.05 * span)
            }
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        Frame { x_min, x_max, y_min, y_max }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"13\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = esc(title),
    )
}

fn axes(frame: &Frame, x_ticks: &[f64], x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for &tick in x_ticks {
        let sx = frame.sx(tick);
        out.push_str(&format!(
            "<line x1=\"{sx}\" y1=\"{y0}\" x2=\"{sx}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{sx}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 5.0,
            y0 + 20.0,
            fmt(tick)
        ));
    }
    // Five evenly spaced y ticks.
    for i in 0..=4 {
        let v = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 4.0;
        let sy = frame.sy(v);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{sy}\" x2=\"{x0}\" y2=\"{sy}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            sy + 4.0,
            fmt(v)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    ));
    out
}

/// One named line series over a shared x grid. Missing values leave gaps.
pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<Option<f64>>,
}

/// Line chart with x ticks exactly at the grid values.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], series: &[Series]) -> String {
    let ys: Vec<f64> = series.iter().flat_map(|s| s.values.iter().flatten().copied()).collect();
    let (y_min, y_max) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (y_min, y_max) = if ys.is_empty() { (0.0, 1.0) } else { (y_min, y_max) };
    let x_min = xs.first().copied().unwrap_or(0.0);
    let x_max = xs.last().copied().unwrap_or(1.0);
    let frame = Frame::from_bounds(x_min, x_max, y_min, y_max);

    let mut out = header(title);
    out.push_str(&axes(&frame, xs, x_label, y_label));
    for (si, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, out: &mut String| {
            if seg.len() >= 2 {
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                    seg.join(" ")
                ));
            }
            seg.clear();
        };
        for (x, v) in xs.iter().zip(&s.values) {
            match v {
                Some(v) => {
                    segment.push(format!("{},{}", fmt(frame.sx(*x)), fmt(frame.sy(*v))));
                    out.push_str(&format!(
                        "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                        fmt(frame.sx(*x)),
                        fmt(frame.sy(*v))
                    ));
                }
                None => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            WIDTH - MARGIN_R - 150.0,
            MARGIN_T + 18.0 * si as f64,
            WIDTH - MARGIN_R - 133.0,
            MARGIN_T + 11.0 + 18.0 * si as f64,
            esc(s.name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// One scatter group (one color).
pub struct ScatterGroup<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Scatter plot with one color per group and a legend.
pub fn scatter_plot(title: &str, groups: &[ScatterGroup]) -> String {
    let all: Vec<(f64, f64)> = groups.iter().flat_map(|g| g.points.iter().copied()).collect();
    let (x_min, x_max, y_min, y_max) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(xl, xh, yl, yh), &(x, y)| (xl.min(x), xh.max(x), yl.min(y), yh.max(y)),
    );
    let (x_min, x_max, y_min, y_max) =
        if all.is_empty() { (0.0, 1.0, 0.0, 1.0) } else { (x_min, x_max, y_min, y_max) };
    let frame = Frame::from_bounds(x_min, x_max, y_min, y_max);

    let mut out = header(title);
    out.push_str(&axes(&frame, &[x_min, x_max], "x", "y"));
    for (gi, group) in groups.iter().enumerate() {
        let color = SERIES_COLORS[gi % SERIES_COLORS.len()];
        for &(x, y) in &group.points {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.7\"/>\n",
                fmt(frame.sx(x)),
                fmt(frame.sy(y))
            ));
        }
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            WIDTH - MARGIN_R - 150.0,
            MARGIN_T + 18.0 * gi as f64,
            WIDTH - MARGIN_R - 133.0,
            MARGIN_T + 11.0 + 18.0 * gi as f64,
            esc(group.name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_deterministic_and_has_grid_ticks() {
        let xs: Vec<f64> = (-5..=5).map(|i| i as f64 / 10.0).collect();
        let series = [Series {
            name: "score",
            values: xs.iter().map(|x| Some(x * x)).collect(),
        }];
        let a = line_chart("t", "alpha", "mean", &xs, &series);
        let b = line_chart("t", "alpha", "mean", &xs, &series);
        assert_eq!(a, b);
        for x in ["-0.500", "0.000", "0.500"] {
            assert!(a.contains(&format!(">{x}</text>")), "tick {x}");
        }
        assert!(a.starts_with("<svg "));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn scatter_handles_gaps_and_escaping() {
        let groups = [ScatterGroup { name: "a<b", points: vec![(0.0, 0.0), (1.0, 1.0)] }];
        let svg = scatter_plot("user & scatter", &groups);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("user &amp; scatter"));
    }
}
