//! Accuracy-vs-k line charts as standalone SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use expower_core::AccuracyCurve;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn x_of(k: f64) -> f64 {
    LEFT + k / 100.0 * (WIDTH - LEFT - RIGHT)
}

fn y_of(acc: f64) -> f64 {
    HEIGHT - BOTTOM - acc.clamp(0.0, 1.0) * (HEIGHT - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One chart with a line per method; axes are fixed to k in [0, 100] and
/// accuracy in [0, 1].
pub fn render_chart(title: &str, curves: &[&AccuracyCurve]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (x_of(0.0), x_of(100.0), y_of(0.0), y_of(1.0));
    let _ = writeln!(
        s,
        r#"<g id="axes" data-k-range="0 100" data-accuracy-range="0 1" stroke="black"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    for i in 0..=5 {
        let k = f64::from(i) * 20.0;
        let x = x_of(k);
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{k}</text>"##,
            y0 + 4.0,
            y0 + 16.0
        );
        let a = f64::from(i) * 0.2;
        let y = y_of(a);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{a:.1}</text>"##,
            x0 - 4.0,
            x0 - 7.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">k (% of time steps perturbed)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(14 {}) rotate(-90)" text-anchor="middle">accuracy</text>"#,
        (y0 + y1) / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|&(k, a)| format!("{:.2},{:.2}", x_of(f64::from(k)), y_of(a)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&c.method)
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.method)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Write `<dir>/plots/<referee>_<strategy>.svg` for every (strategy, referee) pair.
pub fn write_curve_charts(dir: &Path, curves: &[AccuracyCurve]) -> anyhow::Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(String, String), Vec<&AccuracyCurve>> = BTreeMap::new();
    for c in curves {
        groups
            .entry((c.referee.clone(), c.strategy.to_string()))
            .or_default()
            .push(c);
    }
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).with_context(|| format!("cannot create {}", plots.display()))?;
    let mut written = Vec::new();
    for ((referee, strategy), group) in groups {
        let file: String = format!("{referee}_{strategy}")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let path = plots.join(format!("{file}.svg"));
        let svg = render_chart(&format!("{referee} / {strategy}"), &group);
        std::fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
