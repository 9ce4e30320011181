use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::config::Method;
use super::grid::GridRow;
use super::region::{pool, success_region, CellSet, PooledCell};
use crate::error::{Error, Result};
use crate::measurement::Shots;

pub const CSV_HEADER: &str = "d,N,S,method,trial_seed,success_rate,stderr,tie_count,swap_tests,state_copies";

pub fn write_csv<W: Write>(rows: &[GridRow], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER.split(',')).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[GridRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<GridRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers().map_err(|e| Error::Config(e.to_string()))?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {:?}", header.join(","))));
    }
    rd.deserialize().map(|r| r.map_err(|e| Error::Config(e.to_string()))).collect()
}

pub fn read_csv_file(path: &Path) -> Result<Vec<GridRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(f))
}

/// Horizontal axis of a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapAxis {
    /// `log₂ N`.
    N,
    /// `log₂(N·S)`; exact-shot cells are omitted.
    NS,
}

/// Linear ramp from dark purple (success ≤ 0.5) to yellow (success 1).
/// Every channel is non-decreasing in the success rate.
pub fn success_color(p: f64) -> (u8, u8, u8) {
    let t = ((p - 0.5) / 0.5).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 137.0))
}

fn log2(x: f64) -> f64 {
    x.log2()
}

fn unit(values: &BTreeSet<i64>) -> f64 {
    let v: Vec<i64> = values.iter().copied().collect();
    let gap = v.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(1000);
    gap as f64 / 1000.0
}

fn key(x: f64) -> i64 {
    (x * 1000.0).round() as i64
}

/// One heatmap: x is `log₂N` or `log₂(NS)`, y is `log₂S` with exact-shot
/// cells in a top row marked `∞`. Cells in `region` get a black outline.
pub fn heatmap_svg(cells: &[PooledCell], d: usize, method: Method, region: &CellSet, axis: HeatmapAxis) -> String {
    let cells: Vec<&PooledCell> = cells
        .iter()
        .filter(|c| c.d == d && c.method == method)
        .filter(|c| axis == HeatmapAxis::N || c.s != Shots::Exact)
        .collect();
    let finite_s: BTreeSet<i64> = cells.iter().filter_map(|c| c.s.finite()).map(|s| key(log2(s as f64))).collect();
    let has_exact = cells.iter().any(|c| c.s == Shots::Exact);
    let x_of = |c: &PooledCell| match axis {
        HeatmapAxis::N => log2(c.n as f64),
        HeatmapAxis::NS => log2(c.n as f64) + log2(c.s.key() as f64),
    };
    let xs: BTreeSet<i64> = cells.iter().map(|c| key(x_of(c))).collect();
    let (ux, uy) = (unit(&xs), unit(&finite_s));
    let x_min = xs.first().map_or(0.0, |&k| k as f64 / 1000.0);
    let x_max = xs.last().map_or(0.0, |&k| k as f64 / 1000.0);
    let y_min = finite_s.first().map_or(0.0, |&k| k as f64 / 1000.0);
    let y_top = finite_s.last().map_or(0.0, |&k| k as f64 / 1000.0) + if has_exact { uy } else { 0.0 };
    let y_of = |c: &PooledCell| match c.s {
        Shots::Finite(s) => log2(s as f64),
        Shots::Exact => y_top,
    };

    let px = 36.0;
    let (left, top, right, bottom) = (70.0, 40.0, 90.0, 60.0);
    let cols = ((x_max - x_min) / ux).round() + 1.0;
    let rows = ((y_top - y_min) / uy).round() + 1.0;
    let (w, h) = (left + cols * px + right, top + rows * px + bottom);
    let cx = |x: f64| left + ((x - x_min) / ux).round() * px;
    let cy = |y: f64| top + (rows - 1.0 - ((y - y_min) / uy).round()) * px;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<text x="{left}" y="20" font-size="13">d = {d}, {method}</text>"#);
    for c in &cells {
        let (r, g, b) = success_color(c.success_rate);
        let _ = writeln!(
            svg,
            r#"<rect class="cell" x="{:.1}" y="{:.1}" width="{px}" height="{px}" fill="rgb({r},{g},{b})" data-n="{}" data-s="{}" data-success="{}"/>"#,
            cx(x_of(c)),
            cy(y_of(c)),
            c.n,
            c.s,
            c.success_rate
        );
    }
    for c in cells.iter().filter(|c| region.contains(&(c.n, c.s))) {
        let _ = writeln!(
            svg,
            r#"<rect class="region" x="{:.1}" y="{:.1}" width="{px}" height="{px}" fill="none" stroke="black" stroke-width="2"/>"#,
            cx(x_of(c)),
            cy(y_of(c))
        );
    }
    for &k in &xs {
        let x = k as f64 / 1000.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            cx(x) + px / 2.0,
            top + rows * px + 15.0,
            fmt_tick(x)
        );
    }
    for &k in &finite_s {
        let y = k as f64 / 1000.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            cy(y) + px / 2.0 + 4.0,
            fmt_tick(y)
        );
    }
    if has_exact {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">∞</text>"#, left - 6.0, cy(y_top) + px / 2.0 + 4.0);
    }
    let xlabel = match axis {
        HeatmapAxis::N => "log2 N",
        HeatmapAxis::NS => "log2 (N S)",
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#,
        left + cols * px / 2.0,
        top + rows * px + 38.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">log2 S</text>"#,
        top + rows * px / 2.0,
        top + rows * px / 2.0
    );
    // Color bar.
    let bx = left + cols * px + 25.0;
    for i in 0..=10 {
        let p = 0.5 + 0.05 * i as f64;
        let (r, g, b) = success_color(p);
        let y = top + (10 - i) as f64 * 12.0;
        let _ = writeln!(svg, r#"<rect x="{bx:.1}" y="{y:.1}" width="14" height="12" fill="rgb({r},{g},{b})"/>"#);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">1.0</text>"#, bx + 18.0, top + 10.0);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">0.5</text>"#, bx + 18.0, top + 130.0);
    svg.push_str("</svg>\n");
    svg
}

fn fmt_tick(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.2}")
    }
}

/// Writes one heatmap per `(d, method)` into `dir`.
pub fn write_heatmaps(rows: &[GridRow], dir: &Path, threshold: f64, axis: HeatmapAxis) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let pooled = pool(rows);
    let region = success_region(rows, threshold);
    let keys: BTreeSet<(usize, Method)> = pooled.iter().map(|c| (c.d, c.method)).collect();
    let mut paths = Vec::new();
    for (d, method) in keys {
        let suffix = match axis {
            HeatmapAxis::N => "",
            HeatmapAxis::NS => "_ns",
        };
        let path = dir.join(format!("heatmap_d{d}_{method}{suffix}.svg"));
        std::fs::write(&path, heatmap_svg(&pooled, d, method, &region.get(d, method), axis))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, s: Shots, p: f64) -> GridRow {
        GridRow {
            d: 2,
            n,
            s,
            method: Method::SvmSwap,
            trial_seed: 42,
            success_rate: p,
            stderr: 0.01,
            tie_count: 1,
            swap_tests: 10,
            state_copies: 20,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        assert_eq!(to_csv_string(&[]).unwrap(), format!("{CSV_HEADER}\n"));
        assert!(read_csv(CSV_HEADER.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn one_row_round_trips() {
        for s in [Shots::Finite(64), Shots::Exact] {
            let rows = vec![row(16, s, 0.875)];
            let text = to_csv_string(&rows).unwrap();
            assert_eq!(text.lines().count(), 2);
            assert_eq!(read_csv(text.as_bytes()).unwrap(), rows);
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn gradient_renders_monotone_ramp() {
        let rows: Vec<GridRow> = (0..6).map(|k| row(1 << (k + 2), Shots::Finite(16), 0.5 + 0.1 * k as f64)).collect();
        let svg = heatmap_svg(&pool(&rows), 2, Method::SvmSwap, &CellSet::new(), HeatmapAxis::N);
        let fills: Vec<(u8, u8, u8)> = svg
            .lines()
            .filter(|l| l.contains(r#"class="cell""#))
            .map(|l| {
                let start = l.find("rgb(").unwrap() + 4;
                let end = start + l[start..].find(')').unwrap();
                let v: Vec<u8> = l[start..end].split(',').map(|x| x.parse().unwrap()).collect();
                (v[0], v[1], v[2])
            })
            .collect();
        assert_eq!(fills.len(), 6);
        assert!(fills.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1 && w[0].2 <= w[1].2));
    }

    #[test]
    fn ns_axis_drops_exact_cells() {
        let rows = vec![row(16, Shots::Finite(16), 0.9), row(16, Shots::Exact, 1.0)];
        let svg = heatmap_svg(&pool(&rows), 2, Method::SvmSwap, &CellSet::new(), HeatmapAxis::NS);
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        let svg = heatmap_svg(&pool(&rows), 2, Method::SvmSwap, &CellSet::new(), HeatmapAxis::N);
        assert_eq!(svg.matches(r#"class="cell""#).count(), 2);
        assert!(svg.contains('∞'));
    }
}
