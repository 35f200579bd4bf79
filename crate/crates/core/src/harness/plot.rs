//! Static SVG histograms of one CSV column.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

/// Restricts which rows are plotted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RowFilter {
    pub arm: Option<String>,
    pub k: Option<usize>,
}

/// Equal-width histogram over `[lo, hi]`. A degenerate range collapses to a
/// single bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bins must be at least 1"));
        }
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            return Ok(Histogram { lo, hi, counts: vec![values.len()] });
        }
        let mut counts = vec![0; bins];
        for &v in values {
            let b = ((v - lo) / (hi - lo) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Ok(Histogram { lo, hi, counts })
    }

    /// Bar heights normalized so the tallest bar is 1.
    pub fn heights(&self) -> Vec<f64> {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / max).collect()
    }
}

/// A CSV produced by the harness: optional `# {json}` line, then a table.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub metadata: Option<Value>,
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

pub fn load_csv<R: Read>(input: R) -> Result<LoadedCsv> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let (metadata, rest): (Option<Value>, Box<dyn Read>) = match first.strip_prefix('#') {
        Some(json) => (serde_json::from_str(json.trim()).ok(), Box::new(reader)),
        None => (None, Box::new(std::io::Cursor::new(first.into_bytes()).chain(reader))),
    };
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(rest);
    let header = csv.headers()?.iter().map(str::to_string).collect();
    let rows = csv.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(LoadedCsv { metadata, header, rows })
}

impl LoadedCsv {
    fn index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of `column` in rows passing `filter`. Empty cells are
    /// skipped.
    pub fn column(&self, column: &str, filter: &RowFilter) -> Result<Vec<f64>> {
        let c = self.index(column).ok_or_else(|| Error::NonNumericColumn(format!("no column `{column}`")))?;
        let arm_col = self.index("arm");
        let k_col = self.index("k");
        let mut values = Vec::new();
        for row in &self.rows {
            if let (Some(arm), Some(i)) = (&filter.arm, arm_col) {
                if &row[i] != arm {
                    continue;
                }
            }
            if let (Some(k), Some(i)) = (filter.k, k_col) {
                if row[i].parse::<usize>().ok() != Some(k) {
                    continue;
                }
            }
            let cell = row.get(c).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::NonNumericColumn(format!("`{column}` holds `{cell}`")))?;
            if !v.is_finite() {
                return Err(Error::NonNumericColumn(format!("`{column}` holds `{cell}`")));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(values)
    }

    /// Reference value drawn as a vertical line: the arm's true value for
    /// `estimate`, otherwise an entry of the `reference` map.
    pub fn reference(&self, column: &str, filter: &RowFilter) -> Option<f64> {
        let meta = self.metadata.as_ref()?;
        if column == "estimate" {
            if let Some(arm) = &filter.arm {
                if let Some(v) = meta.get("true_values").and_then(|t| t.get(arm)).and_then(Value::as_f64) {
                    return Some(v);
                }
            }
            return meta.get("true_value").and_then(Value::as_f64);
        }
        meta.get("reference").and_then(|r| r.get(column)).and_then(Value::as_f64)
    }
}

fn label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    } else {
        format!("{v:.3e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(hist: &Histogram, title: &str, x_label: &str, reference: Option<f64>) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let base = MARGIN_TOP + plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let bar_w = plot_w / hist.counts.len() as f64;
    for (b, h) in hist.heights().iter().enumerate() {
        let bh = h * plot_h;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="#ffffff" stroke-width="0.5"/>"##,
            MARGIN_LEFT + b as f64 * bar_w,
            base - bh,
            bar_w,
            bh
        );
    }

    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#000000"/>"##,
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{base:.2}" stroke="#000000"/>"##
    );
    let ticks: Vec<(f64, f64)> = if hist.lo == hist.hi {
        vec![(MARGIN_LEFT + plot_w / 2.0, hist.lo)]
    } else {
        (0..TICKS)
            .map(|t| {
                let f = t as f64 / (TICKS - 1) as f64;
                (MARGIN_LEFT + f * plot_w, hist.lo + f * (hist.hi - hist.lo))
            })
            .collect()
    };
    for (x, v) in ticks {
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##, base + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            base + 18.0,
            label(v)
        );
    }
    let max = hist.counts.iter().copied().max().unwrap_or(0);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{max}</text>"#,
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );

    if let Some(r) = reference {
        let x = if hist.lo == hist.hi {
            (r == hist.lo).then_some(MARGIN_LEFT + plot_w / 2.0)
        } else {
            (hist.lo..=hist.hi).contains(&r).then(|| MARGIN_LEFT + (r - hist.lo) / (hist.hi - hist.lo) * plot_w)
        };
        if let Some(x) = x {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{base:.2}" stroke="#c44e52" stroke-width="2" stroke-dasharray="6 3"/>"##
            );
        }
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end" fill="#c44e52">reference {}</text>"##,
            WIDTH - MARGIN_RIGHT,
            MARGIN_TOP - 4.0,
            label(r)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Reads `column` from `csv_in`, bins it, and writes an SVG to `svg_out`.
pub fn render_histogram(
    csv_in: &Path,
    column: &str,
    bins: usize,
    svg_out: &Path,
    filter: &RowFilter,
) -> Result<Histogram> {
    let loaded = load_csv(std::fs::File::open(csv_in)?)?;
    let values = loaded.column(column, filter)?;
    let hist = Histogram::new(&values, bins)?;
    let mut title = column.to_string();
    if let Some(arm) = &filter.arm {
        let _ = write!(title, ", {arm}");
    }
    if let Some(k) = filter.k {
        let _ = write!(title, ", k = {k}");
    }
    let _ = write!(title, " (n = {})", values.len());
    let svg = render_svg(&hist, &title, column, loaded.reference(column, filter));
    std::fs::write(svg_out, svg)?;
    Ok(hist)
}
