use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ranks::cd_groups;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const AXIS_LEFT: f64 = 200.0;
const AXIS_RIGHT: f64 = 600.0;
const AXIS_Y: f64 = 70.0;
const BAR_GAP: f64 = 8.0;
const LINE_GAP: f64 = 20.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Critical-distance diagram as a standalone SVG document. Output depends
/// only on the arguments.
pub fn render_cd_svg(avg_ranks: &[f64], names: &[String], cd: f64) -> Result<String> {
    let k = avg_ranks.len();
    if k < 2 || names.len() != k {
        return Err(Error::InvalidInput(format!(
            "diagram needs at least 2 methods with one name each, got {k} ranks and {} names",
            names.len()
        )));
    }
    if avg_ranks.iter().any(|&r| !(1.0..=k as f64).contains(&r)) {
        return Err(Error::InvalidInput(format!("average ranks must lie in [1, {k}]")));
    }
    if !(cd.is_finite() && cd >= 0.0) {
        return Err(Error::InvalidInput(format!("critical distance must be non-negative, got {cd}")));
    }
    let x = |r: f64| AXIS_LEFT + (r - 1.0) / (k as f64 - 1.0) * (AXIS_RIGHT - AXIS_LEFT);
    let groups: Vec<Vec<usize>> = cd_groups(avg_ranks, cd).into_iter().filter(|g| g.len() > 1).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| avg_ranks[a].total_cmp(&avg_ranks[b]).then(a.cmp(&b)));
    let left = k.div_ceil(2);
    let labels_top = AXIS_Y + 20.0 + groups.len() as f64 * BAR_GAP + LINE_GAP;
    let height = labels_top + left.max(k - left) as f64 * LINE_GAP + 10.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Critical distance ruler.
    let cd_end = AXIS_LEFT + cd / (k as f64 - 1.0) * (AXIS_RIGHT - AXIS_LEFT);
    let _ = writeln!(
        svg,
        r#"<g class="cd"><line x1="{AXIS_LEFT:.2}" y1="20.00" x2="{cd_end:.2}" y2="20.00" stroke="black" stroke-width="2"/><line x1="{AXIS_LEFT:.2}" y1="15.00" x2="{AXIS_LEFT:.2}" y2="25.00" stroke="black"/><line x1="{cd_end:.2}" y1="15.00" x2="{cd_end:.2}" y2="25.00" stroke="black"/><text x="{:.2}" y="12.00" text-anchor="middle">CD = {cd:.2}</text></g>"#,
        (AXIS_LEFT + cd_end) / 2.0
    );

    // Axis with one tick per integer rank.
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{AXIS_LEFT:.2}" y1="{AXIS_Y:.2}" x2="{AXIS_RIGHT:.2}" y2="{AXIS_Y:.2}" stroke="black"/>"#
    );
    for r in 1..=k {
        let tx = x(r as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{AXIS_Y:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{r}</text>"#,
            AXIS_Y - 6.0,
            AXIS_Y - 10.0
        );
    }

    // Groups of methods that are not significantly different.
    for (g, group) in groups.iter().enumerate() {
        let y = AXIS_Y + 16.0 + g as f64 * BAR_GAP;
        let lo = x(avg_ranks[group[0]]) - 4.0;
        let hi = x(avg_ranks[*group.last().expect("non-empty group")]) + 4.0;
        let members: Vec<String> = group.iter().map(|&i| escape(&names[i])).collect();
        let _ = writeln!(
            svg,
            r#"<line class="group" data-members="{}" x1="{lo:.2}" y1="{y:.2}" x2="{hi:.2}" y2="{y:.2}" stroke="black" stroke-width="3"/>"#,
            members.join("|")
        );
    }

    // Method markers: better half labelled left, the rest right.
    for (pos, &i) in order.iter().enumerate() {
        let mx = x(avg_ranks[i]);
        let (y, end_x, anchor, text_x) = if pos < left {
            let y = labels_top + pos as f64 * LINE_GAP;
            (y, AXIS_LEFT - 20.0, "end", AXIS_LEFT - 24.0)
        } else {
            let y = labels_top + (k - 1 - pos) as f64 * LINE_GAP;
            (y, AXIS_RIGHT + 20.0, "start", AXIS_RIGHT + 24.0)
        };
        let _ = writeln!(
            svg,
            r#"<g class="method"><polyline points="{mx:.2},{AXIS_Y:.2} {mx:.2},{y:.2} {end_x:.2},{y:.2}" fill="none" stroke="black"/><text x="{text_x:.2}" y="{:.2}" text-anchor="{anchor}">{} ({:.2})</text></g>"#,
            y + 4.0,
            escape(&names[i]),
            avg_ranks[i]
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn cd_diagram(avg_ranks: &[f64], names: &[String], cd: f64, path: &Path) -> Result<()> {
    let svg = render_cd_svg(avg_ranks, names, cd)?;
    fs::write(path, svg).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}
