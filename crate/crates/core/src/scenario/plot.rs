//! Minimal SVG rendering of run outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Numeric columns of a CSV file, by header name. Empty fields read as NaN.
pub fn read_csv_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let parse_err = |msg: String| Error::Parse {
        path: path.display().to_string(),
        msg,
    };
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .split(',')
        .collect();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| parse_err(format!("missing column {n}")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        for (c, &i) in idx.iter().enumerate() {
            let f = fields.get(i).copied().unwrap_or("");
            let v = if f.is_empty() {
                f64::NAN
            } else {
                f.parse()
                    .map_err(|_| parse_err(format!("row {}: bad number `{f}`", row + 2)))?
            };
            cols[c].push(v);
        }
    }
    Ok(cols)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" text-anchor="middle">{:.3}</text>"#, HEIGHT - MARGIN + 16.0, f.x0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{:.3}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        f.x1
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, HEIGHT - MARGIN, f.y0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, MARGIN + 4.0, f.y1);
    s
}

/// Residual history on a log10 axis; each series is `(label, values)`.
pub fn residual_svg(series: &[(String, Vec<f64>)]) -> String {
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let logs: Vec<Vec<f64>> = series
        .iter()
        .map(|(_, v)| v.iter().map(|r| if *r > 0.0 { r.log10() } else { f64::NAN }).collect())
        .collect();
    let maxlen = logs.iter().map(|v| v.len()).max().unwrap_or(1);
    let f = Frame::new(
        [0.0, maxlen.saturating_sub(1) as f64].into_iter(),
        logs.iter().flatten().copied().collect::<Vec<_>>().into_iter(),
    );
    let mut s = open("GMRES residual history", "iteration", "log10 relative residual", &f);
    for (i, ((label, _), ys)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(l, y)| format!("{:.2},{:.2}", f.px(l as f64), f.py(*y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * (i + 1) as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Eigenvalues as dots with HR values as small crosses, in the complex
/// plane.
pub fn spectrum_svg(eigs: &[(f64, f64)], hr: &[(f64, f64)]) -> String {
    let f = Frame::new(
        eigs.iter().chain(hr).map(|p| p.0),
        eigs.iter().chain(hr).map(|p| p.1),
    );
    let mut s = open("spectrum and harmonic Ritz values", "Re", "Im", &f);
    for &(x, y) in hr {
        let (px, py) = (f.px(x), f.py(y));
        let _ = writeln!(
            s,
            r##"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="#d62728" stroke-width="0.6"/>"##,
            px - 2.0,
            py - 2.0,
            px + 2.0,
            py + 2.0,
            px - 2.0,
            py + 2.0,
            px + 2.0,
            py - 2.0
        );
    }
    for &(x, y) in eigs {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4"/>"##, f.px(x), f.py(y));
    }
    s.push_str("</svg>\n");
    s
}

/// Renders `residuals.svg` and, when a spectrum was computed,
/// `spectrum_hr.svg` inside `run_dir`.
pub fn plot_run(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let res = read_csv_columns(&run_dir.join("residuals.csv"), &["relative_residual"])?;
    let label = run_dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let path = run_dir.join("residuals.svg");
    std::fs::write(&path, residual_svg(&[(label, res[0].clone())])).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let spec_path = run_dir.join("spectrum.csv");
    if spec_path.exists() {
        let eig = read_csv_columns(&spec_path, &["re", "im"])?;
        let eigs: Vec<(f64, f64)> = eig[0].iter().copied().zip(eig[1].iter().copied()).collect();
        let hr_path = run_dir.join("hr.csv");
        let hr = if hr_path.exists() {
            let c = read_csv_columns(&hr_path, &["re", "im"])?;
            c[0].iter().copied().zip(c[1].iter().copied()).collect()
        } else {
            Vec::new()
        };
        let path = run_dir.join("spectrum_hr.svg");
        std::fs::write(&path, spectrum_svg(&eigs, &hr)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
