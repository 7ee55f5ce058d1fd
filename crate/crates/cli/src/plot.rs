//! Plain SVG output: grayscale heatmaps of the result tables, landscape
//! line plots and an MDS scatter of landscape distances.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lsmtopo_core::landscape::Landscape;
use lsmtopo_core::lsm::classical_mds;

use crate::config::ScenarioKind;
use crate::error::{io_err, Result};
use crate::experiment::{write_file, CellResult, RunArtifacts, CLUSTER_METHODS, TEST_METHODS};

const CELL: f64 = 48.0;
const MARGIN: f64 = 90.0;
const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;

/// Gray level of a value in [0, 1]: 255 at 0, 0 at 1, so larger is darker.
pub fn shade(v: f64) -> u8 {
    (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open_svg(w: f64, h: f64, title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(s, "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>", w / 2.0, escape(title)).unwrap();
    s
}

/// Grid heatmap. `cells` holds `(row, col, value)`; grid positions without a
/// cell stay blank.
pub fn heatmap(title: &str, rows: &[String], cols: &[String], cells: &[(usize, usize, f64)]) -> String {
    let w = MARGIN + CELL * cols.len() as f64 + 20.0;
    let h = MARGIN + CELL * rows.len() as f64 + 20.0;
    let mut s = open_svg(w, h, title);
    for (i, label) in rows.iter().enumerate() {
        let y = MARGIN + CELL * (i as f64 + 0.5);
        writeln!(s, "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>", MARGIN - 6.0, escape(label))
            .unwrap();
    }
    for (j, label) in cols.iter().enumerate() {
        let x = MARGIN + CELL * (j as f64 + 0.5);
        writeln!(s, "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>", MARGIN - 8.0, escape(label)).unwrap();
    }
    for &(r, c, v) in cells {
        let g = shade(v);
        let (x, y) = (MARGIN + CELL * c as f64, MARGIN + CELL * r as f64);
        writeln!(
            s,
            "<rect class=\"cell\" x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"rgb({g},{g},{g})\" stroke=\"black\" stroke-width=\"0.5\" data-row=\"{r}\" data-col=\"{c}\" data-value=\"{v}\"/>"
        )
        .unwrap();
        let ink = if g < 128 { "white" } else { "black" };
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" dominant-baseline=\"middle\" fill=\"{ink}\">{v:.3}</text>",
            x + CELL / 2.0,
            y + CELL / 2.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        60.0 + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 80.0)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - 40.0 - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 80.0)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (60.0, WIDTH - 20.0, 40.0, HEIGHT - 40.0);
        writeln!(s, "<polyline points=\"{l},{t} {l},{b} {r},{b}\" fill=\"none\" stroke=\"black\"/>").unwrap();
        writeln!(s, "<text x=\"{l}\" y=\"{}\" text-anchor=\"middle\">{:.3}</text>", b + 14.0, self.x0).unwrap();
        writeln!(s, "<text x=\"{r}\" y=\"{}\" text-anchor=\"middle\">{:.3}</text>", b + 14.0, self.x1).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{b}\" text-anchor=\"end\">{:.3}</text>", l - 4.0, self.y0).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{t}\" text-anchor=\"end\">{:.3}</text>", l - 4.0, self.y1).unwrap();
        writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", (l + r) / 2.0, b + 30.0, escape(xlabel)).unwrap();
        writeln!(s, "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>", (t + b) / 2.0, (t + b) / 2.0, escape(ylabel))
            .unwrap();
    }
}

/// Line plot of the first `max_levels` landscape levels, darkest first.
pub fn landscape_plot(title: &str, l: &Landscape, max_levels: usize) -> String {
    let levels = &l.levels[..l.levels.len().min(max_levels)];
    let pts = || levels.iter().flatten();
    let frame = Frame::fit(pts().map(|p| p.0), pts().map(|p| p.1).chain([0.0]));
    let mut s = open_svg(WIDTH, HEIGHT, title);
    frame.axes(&mut s, "filtration value", "landscape value");
    for (k, level) in levels.iter().enumerate() {
        let g = (k * 160 / max_levels.max(1)) as u8;
        let points: Vec<String> =
            level.iter().map(|&(t, v)| format!("{:.3},{:.3}", frame.px(t), frame.py(v))).collect();
        writeln!(
            s,
            "<polyline class=\"level\" data-level=\"{}\" points=\"{}\" fill=\"none\" stroke=\"rgb({g},{g},{g})\" stroke-width=\"1.5\"/>",
            k + 1,
            points.join(" ")
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Classical MDS of a row-major distance matrix, one marker per item with
/// its group encoded by gray level.
pub fn mds_scatter(title: &str, distances: &[f64], groups: &[usize]) -> Result<String> {
    let coords = classical_mds(distances, groups.len())?;
    let frame = Frame::fit(coords.iter().map(|p| p[0]), coords.iter().map(|p| p[1]));
    let k = groups.iter().max().map_or(1, |g| g + 1);
    let mut s = open_svg(WIDTH, HEIGHT, title);
    frame.axes(&mut s, "MDS 1", "MDS 2");
    for (p, &g) in coords.iter().zip(groups) {
        let gray = (g * 200 / k.max(2).saturating_sub(1).max(1)).min(200) as u8;
        writeln!(
            s,
            "<circle class=\"point\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"rgb({gray},{gray},{gray})\" stroke=\"black\" stroke-width=\"0.5\" data-group=\"{g}\"/>",
            frame.px(p[0]),
            frame.py(p[1])
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn keys(rows: &[CellResult]) -> Vec<(usize, usize)> {
    let mut k: Vec<(usize, usize)> = rows.iter().map(|r| (r.m, r.order)).collect();
    k.sort_unstable();
    k.dedup();
    k
}

fn table_plots(a: &RunArtifacts, rows: &[CellResult], methods: &[&'static str], what: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (m, order) in keys(rows) {
        let sel = |method: &'static str| rows.iter().filter(move |r| r.m == m && r.order == order && r.method == method);
        match a.kind {
            ScenarioKind::ErPairwise => {
                for method in methods {
                    let cells: Vec<_> = sel(method).map(|r| (r.row, r.col, r.mean)).collect();
                    if cells.is_empty() {
                        continue;
                    }
                    let title = format!("mean {what}, {method}, m = {m}, order {order}");
                    out.push((
                        format!("{what}_{method}_m{m}_order{order}.svg"),
                        heatmap(&title, &a.labels, &a.labels, &cells),
                    ));
                }
            }
            ScenarioKind::SbmMultisample => {
                let cells: Vec<_> = methods
                    .iter()
                    .enumerate()
                    .flat_map(|(c, method)| sel(method).map(move |r| (r.row, c, r.mean)))
                    .collect();
                let cols: Vec<String> = methods.iter().map(|s| s.to_string()).collect();
                let title = format!("mean {what}, m = {m}, order {order}");
                out.push((format!("{what}_m{m}_order{order}.svg"), heatmap(&title, &a.labels, &cols, &cells)));
            }
        }
    }
    out
}

/// Renders every plot the artifacts support, keyed by file name.
pub fn render_plots(a: &RunArtifacts) -> Result<Vec<(String, String)>> {
    let mut out = table_plots(a, &a.tests, &TEST_METHODS, "pvalue");
    out.extend(table_plots(a, &a.clustering, &CLUSTER_METHODS, "rand"));
    if let Some(p) = &a.preview {
        for (g, l) in p.landscapes.iter().enumerate() {
            let title = format!("{}: group {}, order {}", p.cell, g + 1, p.order);
            out.push((format!("landscape_group{}.svg", g + 1), landscape_plot(&title, l, 5)));
        }
        let title = format!("{}: MDS of landscape distances, order {}", p.cell, p.order);
        out.push(("mds.svg".to_string(), mds_scatter(&title, &p.distances, &p.groups)?));
    }
    Ok(out)
}

/// Writes the plots into `dir`. Nothing is created when there is nothing to
/// plot.
pub fn emit_plots(a: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = render_plots(a)?;
    if plots.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for (name, body) in plots {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}
