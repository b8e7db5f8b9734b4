//! Knuth-style diagrams: channels as horizontal wires, comparators as
//! vertical segments. Within a layer, comparators whose channel ranges
//! overlap are drawn in separate columns.

use std::fmt::Write;

use crate::netcore::{Comparator, Network};

/// A labelled run of layers, `first..=last`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub label: String,
    pub first: usize,
    pub last: usize,
}

/// Reads `# region <label> <first>-<last>` lines from a network file.
pub fn parse_regions(text: &str) -> Vec<Region> {
    text.lines()
        .filter_map(|l| {
            let rest = l.trim().strip_prefix('#')?.trim().strip_prefix("region ")?;
            let (label, span) = rest.trim().rsplit_once(' ')?;
            let (a, b) = span.split_once('-')?;
            Some(Region {
                label: label.trim().to_string(),
                first: a.parse().ok()?,
                last: b.parse().ok()?,
            })
        })
        .collect()
}

/// Columns of each layer: comparators packed first-fit so that no two in a
/// column touch overlapping channel ranges.
fn columns(net: &Network) -> Vec<Vec<Vec<Comparator>>> {
    net.layers()
        .iter()
        .map(|layer| {
            let mut cols: Vec<Vec<Comparator>> = Vec::new();
            for &c in layer.comparators() {
                let free = cols
                    .iter()
                    .position(|col| col.iter().all(|d| d.hi() < c.lo() || c.hi() < d.lo()));
                match free {
                    Some(k) => cols[k].push(c),
                    None => cols.push(vec![c]),
                }
            }
            cols
        })
        .collect()
}

pub fn render_ascii(net: &Network, regions: &[Region]) -> String {
    let n = net.n();
    let cols = columns(net);
    let label_w = n.saturating_sub(1).to_string().len();
    let mut rows: Vec<String> = (0..n).map(|i| format!("{i:>label_w$} -")).collect();
    let mut starts = Vec::with_capacity(cols.len());
    for layer in &cols {
        starts.push(rows.first().map_or(0, String::len));
        for col in layer {
            for (i, row) in rows.iter_mut().enumerate() {
                let mark = col.iter().find_map(|c| {
                    if i == c.lo() || i == c.hi() {
                        Some('o')
                    } else if c.lo() < i && i < c.hi() {
                        Some('|')
                    } else {
                        None
                    }
                });
                row.push(mark.unwrap_or('-'));
                row.push('-');
            }
        }
        for row in rows.iter_mut() {
            row.push_str("--");
        }
    }
    let mut out = String::new();
    for row in rows {
        out.push_str(row.trim_end());
        out.push('\n');
    }
    for r in regions {
        if r.first == 0 || r.first > r.last || r.last > cols.len() {
            continue;
        }
        let start = starts[r.first - 1];
        let end = starts.get(r.last).copied().unwrap_or(out.lines().next().map_or(0, str::len) + 1) - 2;
        let width = end.saturating_sub(start).max(1);
        let _ = writeln!(out, "{}{} {}", " ".repeat(start), "^".repeat(width), r.label);
    }
    out
}

pub fn render_svg(net: &Network, regions: &[Region]) -> String {
    const GAP: usize = 20;
    const COL: usize = 12;
    const LAYER_GAP: usize = 14;
    const MARGIN: usize = 30;
    let n = net.n();
    let cols = columns(net);
    let mut x = MARGIN;
    let mut layer_x = Vec::new();
    let mut segs = Vec::new();
    for layer in &cols {
        let start = x;
        for col in layer {
            x += COL;
            for c in col {
                segs.push((x, c.lo(), c.hi()));
            }
        }
        x += LAYER_GAP;
        layer_x.push((start, x - LAYER_GAP / 2));
    }
    let width = x + MARGIN;
    let height = MARGIN * 2 + GAP * n.saturating_sub(1) + if regions.is_empty() { 0 } else { 20 };
    let y = |i: usize| MARGIN + GAP * i;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for r in regions {
        if r.first == 0 || r.first > r.last || r.last > layer_x.len() {
            continue;
        }
        let (x0, _) = layer_x[r.first - 1];
        let (_, x1) = layer_x[r.last - 1];
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#eef2f8" stroke="#9aa8c0"/>"##,
            x0,
            MARGIN / 2,
            x1 - x0,
            GAP * n.saturating_sub(1) + MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2,
            height - 8,
            escape(&r.label)
        );
    }
    for i in 0..n {
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1"/>"#,
            MARGIN / 2,
            y(i),
            width - MARGIN / 2,
            y(i)
        );
    }
    for (cx, lo, hi) in segs {
        let _ = writeln!(
            s,
            r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="black" stroke-width="1.5"/>"#,
            y(lo),
            y(hi)
        );
        for ch in [lo, hi] {
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{}" r="3" fill="black"/>"#, y(ch));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_comparator() {
        let net = Network::from_pairs(2, &[&[(0, 1)]]);
        assert_eq!(render_ascii(&net, &[]), "0 -o---\n1 -o---\n");
        let svg = render_svg(&net, &[]);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 1);
    }

    #[test]
    fn overlapping_ranges_get_columns() {
        let net = Network::from_pairs(4, &[&[(0, 2), (1, 3)]]);
        let text = render_ascii(&net, &[]);
        assert_eq!(text.lines().next().unwrap(), "0 -o-----");
        assert_eq!(text.lines().nth(1).unwrap(), "1 -|-o---");
        let disjoint = Network::from_pairs(4, &[&[(0, 1), (2, 3)]]);
        assert_eq!(render_ascii(&disjoint, &[]).lines().next().unwrap(), "0 -o---");
    }

    #[test]
    fn regions_parse() {
        let r = parse_regions("# region 16-part 1-5\n# note\n# region SAT layers 7-13\n[(0,1)]\n");
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].label, "SAT layers");
        assert_eq!((r[1].first, r[1].last), (7, 13));
    }
}
