//! Plain-text matrix and sample-batch files.
//!
//! Both formats share one layout: a header line `# field=real|complex
//! dim=D`, then one row of comma-separated decimal values per matrix row or
//! sample vector. Real files carry `D` values per row; complex files carry
//! `2 D` values per row as alternating real and imaginary parts. Matrix
//! files hold exactly `D` data rows; sample files hold one row per sample,
//! at least one. Blank lines are ignored.
//!
//! Values are emitted in scientific notation with 17 significant digits,
//! which recovers every IEEE double bit-exactly on re-parsing, so emitting
//! and re-reading a file is lossless.

use std::fmt::Write as _;

use ellcov::{Complex64, Mat, SampleBatch};

/// Scalar field a file declares in its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    /// One value per entry.
    Real,
    /// Two values (real part, imaginary part) per entry.
    Complex,
}

impl FieldTag {
    /// Spelling used in file headers.
    pub fn label(self) -> &'static str {
        match self {
            FieldTag::Real => "real",
            FieldTag::Complex => "complex",
        }
    }

    /// Comma-separated values per row for `dim` entries.
    fn row_width(self, dim: usize) -> usize {
        match self {
            FieldTag::Real => dim,
            FieldTag::Complex => 2 * dim,
        }
    }
}

/// A parsed square matrix in either field.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

impl AnyMatrix {
    /// Field the matrix was declared with.
    pub fn field(&self) -> FieldTag {
        match self {
            AnyMatrix::Real(_) => FieldTag::Real,
            AnyMatrix::Complex(_) => FieldTag::Complex,
        }
    }
}

/// A parsed sample batch in either field.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyBatch {
    Real(SampleBatch<f64>),
    Complex(SampleBatch<Complex64>),
}

impl AnyBatch {
    /// Field the batch was declared with.
    pub fn field(&self) -> FieldTag {
        match self {
            AnyBatch::Real(_) => FieldTag::Real,
            AnyBatch::Complex(_) => FieldTag::Complex,
        }
    }
}

const HEADER_HINT: &str = "header must read '# field=real|complex dim=D'";

fn parse_header(line_no: usize, line: &str) -> Result<(FieldTag, usize), String> {
    let bad = || format!("line {line_no}: {HEADER_HINT}");
    let rest = line.strip_prefix('#').ok_or_else(bad)?;
    let mut field = None;
    let mut dim = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("field=") {
            field = Some(match v {
                "real" => FieldTag::Real,
                "complex" => FieldTag::Complex,
                other => {
                    return Err(format!(
                        "line {line_no}: unknown field '{other}' (expected real or complex)"
                    ))
                }
            });
        } else if let Some(v) = tok.strip_prefix("dim=") {
            let d: usize = v
                .parse()
                .map_err(|_| format!("line {line_no}: cannot parse dimension '{v}'"))?;
            dim = Some(d);
        } else {
            return Err(format!("line {line_no}: unexpected header token '{tok}'"));
        }
    }
    let (Some(field), Some(dim)) = (field, dim) else {
        return Err(bad());
    };
    if dim == 0 {
        return Err(format!("line {line_no}: dimension must be positive"));
    }
    Ok((field, dim))
}

fn parse_row(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>, String> {
    let mut vals = Vec::with_capacity(expected);
    for (k, tok) in line.split(',').enumerate() {
        let t = tok.trim();
        let v: f64 = t.parse().map_err(|_| {
            format!("line {line_no}: value {} ('{t}') is not a number", k + 1)
        })?;
        vals.push(v);
    }
    if vals.len() != expected {
        return Err(format!(
            "line {line_no}: expected {expected} comma-separated values, found {}",
            vals.len()
        ));
    }
    Ok(vals)
}

struct ParsedBody {
    tag: FieldTag,
    dim: usize,
    rows: Vec<Vec<f64>>,
}

fn parse_body(text: &str) -> Result<ParsedBody, String> {
    let mut header: Option<(FieldTag, usize)> = None;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match header {
            None => header = Some(parse_header(line_no, line)?),
            Some((tag, dim)) => rows.push(parse_row(line_no, line, tag.row_width(dim))?),
        }
    }
    let Some((tag, dim)) = header else {
        return Err(format!("line 1: missing {HEADER_HINT}"));
    };
    Ok(ParsedBody { tag, dim, rows })
}

fn to_complex(rows: &[Vec<f64>]) -> Vec<Complex64> {
    rows.iter()
        .flat_map(|r| r.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])))
        .collect()
}

/// Parse a matrix file: header, then exactly `dim` rows.
pub fn parse_matrix(text: &str) -> Result<AnyMatrix, String> {
    let body = parse_body(text)?;
    if body.rows.len() != body.dim {
        return Err(format!(
            "expected {} matrix rows, found {}",
            body.dim,
            body.rows.len()
        ));
    }
    match body.tag {
        FieldTag::Real => Mat::from_vec(body.dim, body.rows.concat())
            .map(AnyMatrix::Real)
            .map_err(|e| e.to_string()),
        FieldTag::Complex => Mat::from_vec(body.dim, to_complex(&body.rows))
            .map(AnyMatrix::Complex)
            .map_err(|e| e.to_string()),
    }
}

/// Parse a sample file: header, then one row per sample (at least one).
pub fn parse_samples(text: &str) -> Result<AnyBatch, String> {
    let body = parse_body(text)?;
    if body.rows.is_empty() {
        return Err("sample file holds no data rows".into());
    }
    match body.tag {
        FieldTag::Real => SampleBatch::from_flat(body.dim, body.rows.concat())
            .map(AnyBatch::Real)
            .map_err(|e| e.to_string()),
        FieldTag::Complex => SampleBatch::from_flat(body.dim, to_complex(&body.rows))
            .map(AnyBatch::Complex)
            .map_err(|e| e.to_string()),
    }
}

fn push_value(out: &mut String, first: bool, x: f64) {
    if !first {
        out.push(',');
    }
    // 17 significant digits: the shortest count that distinguishes every
    // IEEE double, so parsing the emitted text restores the exact bits.
    let _ = write!(out, "{x:.16e}");
}

fn header(tag: FieldTag, dim: usize) -> String {
    format!("# field={} dim={}\n", tag.label(), dim)
}

/// Emit a real matrix file.
pub fn emit_matrix_real(m: &Mat<f64>) -> String {
    let d = m.dim();
    let mut out = header(FieldTag::Real, d);
    for i in 0..d {
        for j in 0..d {
            push_value(&mut out, j == 0, m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Emit a complex matrix file (alternating real and imaginary parts).
pub fn emit_matrix_complex(m: &Mat<Complex64>) -> String {
    let d = m.dim();
    let mut out = header(FieldTag::Complex, d);
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            push_value(&mut out, j == 0, z.re);
            push_value(&mut out, false, z.im);
        }
        out.push('\n');
    }
    out
}

/// Emit a real sample file, one row per sample.
pub fn emit_samples_real(b: &SampleBatch<f64>) -> String {
    let mut out = header(FieldTag::Real, b.dim());
    for row in b.iter() {
        for (j, &x) in row.iter().enumerate() {
            push_value(&mut out, j == 0, x);
        }
        out.push('\n');
    }
    out
}

/// Emit a complex sample file, one row per sample (alternating real and
/// imaginary parts).
pub fn emit_samples_complex(b: &SampleBatch<Complex64>) -> String {
    let mut out = header(FieldTag::Complex, b.dim());
    for row in b.iter() {
        for (j, z) in row.iter().enumerate() {
            push_value(&mut out, j == 0, z.re);
            push_value(&mut out, false, z.im);
        }
        out.push('\n');
    }
    out
}
