//! Byte-stable output formatting: CSV with '\n' endings and 12 significant
//! digits, canonical JSON, and SVG views rendered from CSV text.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// 12 significant digits in scientific notation; `nan`/`inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// An in-memory CSV table, written in row order.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }
}

/// Pretty JSON with a trailing newline; key order follows struct order.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line plot of every numeric column against the first column of `csv_text`.
/// Each series is scaled to its own maximum so that all fit one axis.
pub fn svg_from_csv(csv_text: &[u8], title: &str) -> Result<Vec<u8>> {
    let mut reader = csv::Reader::from_reader(csv_text);
    let bad = |e: csv::Error| CliError::Replay(format!("unreadable CSV for plot: {e}"));
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(bad)?;
        rows.push(record.iter().map(|f| f.parse().unwrap_or(f64::NAN)).collect());
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let px = |x: f64| MARGIN + (x - x_lo) / x_span * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{MARGIN}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{MARGIN}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{MARGIN}\" y=\"{lb}\" font-family=\"sans-serif\" font-size=\"11\">{x_lo:.4}</text>\n\
         <text x=\"{r}\" y=\"{lb}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{x_hi:.4}</text>\n",
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        lb = HEIGHT - MARGIN + 16.0,
    );
    for (series, name) in header.iter().enumerate().skip(1) {
        let ys: Vec<f64> = rows.iter().map(|r| r.get(series).copied().unwrap_or(f64::NAN)).collect();
        let top = ys.iter().copied().filter(|y| y.is_finite()).fold(0.0f64, f64::max);
        let scale = if top > 0.0 { top } else { 1.0 };
        let points: Vec<String> = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y / scale)))
            .collect();
        let colour = COLOURS[(series - 1) % COLOURS.len()];
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\">{name} (max {top:.4})</text>\n",
            points.join(" "),
            WIDTH - MARGIN - 180.0,
            MARGIN + 14.0 * series as f64,
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}
