//! Text formats: single-column signals, `i j weight` edge lists and cardinality
//! profiles read from files with 1-based indices and `#` comments, plus CSV writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::setfn::{CardinalityProfile, WeightedGraph};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((k + 1, l))
    })
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("value {tok} is not finite")));
    }
    Ok(v)
}

/// Parses one column of numbers. A non-numeric first line is taken as a header.
pub fn parse_column(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, (line, l)) in content_lines(text).enumerate() {
        let tok = l.trim_end_matches(',').trim();
        if tok.contains(',') {
            return Err(parse_err(path, line, "expected a single column"));
        }
        match tok.parse::<f64>() {
            Err(_) if k == 0 => continue,
            _ => out.push(parse_f64(path, line, tok)?),
        }
    }
    Ok(out)
}

pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let v = parse_column(path, &read(path)?)?;
    if v.is_empty() {
        return Err(parse_err(path, 0, "no values"));
    }
    Ok(v)
}

/// One `i j weight` triple per line; indices are 1-based. `p` defaults to the largest index.
pub fn parse_graph(path: &Path, text: &str, p: Option<usize>) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    let mut max = 0;
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if toks.len() != 3 {
            return Err(parse_err(path, line, "expected `i j weight`"));
        }
        let idx = |t: &str| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i),
                _ => Err(parse_err(
                    path,
                    line,
                    format!("expected a 1-based index, found {t:?}"),
                )),
            }
        };
        let (i, j) = (idx(toks[0])?, idx(toks[1])?);
        let w = parse_f64(path, line, toks[2])?;
        max = max.max(i).max(j);
        edges.push((i - 1, j - 1, w));
    }
    let p = p.unwrap_or(max);
    if max > p {
        return Err(parse_err(
            path,
            0,
            format!("index {max} exceeds the ground set size {p}"),
        ));
    }
    WeightedGraph::new(p, &edges)
}

pub fn read_graph(path: &Path, p: Option<usize>) -> Result<WeightedGraph> {
    parse_graph(path, &read(path)?, p)
}

/// h(0), …, h(p), one per line.
pub fn read_profile(path: &Path) -> Result<CardinalityProfile> {
    CardinalityProfile::new(read_signal(path)?)
}

/// Rows of comma-separated numbers (a design matrix), returned row-major with its width.
pub fn read_matrix(path: &Path) -> Result<(Vec<f64>, usize)> {
    let text = read(path)?;
    let mut data = Vec::new();
    let mut width = None;
    for (line, l) in content_lines(&text) {
        let row: Vec<f64> = l
            .split(',')
            .map(|t| parse_f64(path, line, t.trim()))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {w} columns, found {}", row.len()),
                ))
            }
            _ => {}
        }
        data.extend(row);
    }
    let width = width.ok_or_else(|| parse_err(path, 0, "empty matrix"))?;
    Ok((data, width))
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Simple CSV builder; cells are written as given.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Self::default();
        c.buf.push_str(&header.join(","));
        c.buf.push('\n');
        c
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let joined: Vec<&str> = cells.iter().map(|c| c.as_ref()).collect();
        self.buf.push_str(&joined.join(","));
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

/// A single named column.
pub fn column_csv(header: &str, values: &[f64]) -> String {
    let mut c = Csv::new(&[header]);
    for v in values {
        c.row(&[fmt_f64(*v)]);
    }
    c.buf
}
