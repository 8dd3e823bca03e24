//! Generator-set JSON files and point-cloud CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use hypercyc_core::algebra::{verify_commuting, ComplexMatrix, GeneratorFamily};
use hypercyc_core::dynamics::OrbitCloud;
use hypercyc_core::Complex64;
use serde_json::Value;

/// A malformed generator-set file, located by line, column and field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// Path of the offending value, such as `matrices[1][0]`; empty for the root.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let field = if self.field.is_empty() { "<root>" } else { &self.field };
        write!(f, "line {}, column {}, field {}: {}", self.line, self.column, field, self.message)
    }
}

impl std::error::Error for ParseError {}

/// `{"n": int, "p": int, "matrices": [[[ [re, im], … ] …] …], "labels": [str]?}`
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSetFile {
    pub n: usize,
    pub matrices: Vec<ComplexMatrix>,
    pub labels: Option<Vec<String>>,
}

impl GeneratorSetFile {
    pub fn new(matrices: Vec<ComplexMatrix>, labels: Option<Vec<String>>) -> Self {
        let n = matrices.first().map_or(0, ComplexMatrix::dim);
        GeneratorSetFile { n, matrices, labels }
    }

    pub fn from_family(family: &GeneratorFamily, labels: Option<Vec<String>>) -> Self {
        GeneratorSetFile::new(family.generators().to_vec(), labels)
    }

    pub fn p(&self) -> usize {
        self.matrices.len()
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let value: Value = serde_json::from_str(text).map_err(|e| syntax_error(text, &e))?;
        let index = PathIndex::build(text);
        parse_value(&value).map_err(|(field, message)| {
            let (line, column) = index.position(&field);
            ParseError { line, column, field, message }
        })
    }

    pub fn read(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|e| ParseError {
            line: 0,
            column: 0,
            field: String::new(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Deterministic JSON text, one matrix row per line.
    pub fn to_json(&self) -> String {
        let num = |x: f64| serde_json::to_string(&x).expect("finite entries serialize");
        let mut out = String::new();
        out.push_str(&format!("{{\n  \"n\": {},\n  \"p\": {},\n  \"matrices\": [\n", self.n, self.p()));
        for (m, a) in self.matrices.iter().enumerate() {
            out.push_str("    [\n");
            for i in 0..a.dim() {
                let row: Vec<String> =
                    a.row(i).iter().map(|z| format!("[{}, {}]", num(z.re), num(z.im))).collect();
                let sep = if i + 1 < a.dim() { "," } else { "" };
                out.push_str(&format!("      [{}]{sep}\n", row.join(", ")));
            }
            out.push_str(if m + 1 < self.p() { "    ],\n" } else { "    ]\n" });
        }
        out.push_str("  ]");
        if let Some(labels) = &self.labels {
            out.push_str(&format!(",\n  \"labels\": {}", serde_json::to_string(labels).expect("strings serialize")));
        }
        out.push_str("\n}\n");
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn to_family(&self, tol_comm: f64) -> hypercyc_core::Result<GeneratorFamily> {
        verify_commuting(self.matrices.clone(), tol_comm)
    }

    /// Entries and labels agree bit for bit.
    pub fn bit_identical(&self, other: &GeneratorSetFile) -> bool {
        self.n == other.n
            && self.labels == other.labels
            && self.p() == other.p()
            && self.matrices.iter().zip(&other.matrices).all(|(a, b)| {
                a.dim() == b.dim()
                    && a.entries().iter().zip(b.entries()).all(|(x, y)| {
                        x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
                    })
            })
    }
}

/// Parse, serialize and parse again; true when the two parses agree bit for bit.
pub fn validate_roundtrip(path: &Path) -> Result<bool, ParseError> {
    let first = GeneratorSetFile::read(path)?;
    let second = GeneratorSetFile::parse(&first.to_json())?;
    Ok(first.bit_identical(&second))
}

fn syntax_error(text: &str, e: &serde_json::Error) -> ParseError {
    let (line, column) = (e.line(), e.column());
    let mut message = e.to_string();
    if let Some(cut) = message.rfind(" at line ") {
        message.truncate(cut);
    }
    let field = open_path_at(text, line, column);
    ParseError { line, column, field, message }
}

type FieldError = (String, String);

fn field_err(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    (field.into(), message.into())
}

fn parse_count(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize, FieldError> {
    let v = obj.get(key).ok_or_else(|| field_err("", format!("missing field \"{key}\"")))?;
    match v.as_u64() {
        Some(x) if x >= 1 => Ok(x as usize),
        _ => Err(field_err(key, "expected a positive integer")),
    }
}

fn parse_entry(v: &Value, field: &str) -> Result<Complex64, FieldError> {
    let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| field_err(field, "expected an [re, im] pair"))?;
    let re = pair[0].as_f64().ok_or_else(|| field_err(format!("{field}[0]"), "expected a number"))?;
    let im = pair[1].as_f64().ok_or_else(|| field_err(format!("{field}[1]"), "expected a number"))?;
    Ok(Complex64::new(re, im))
}

fn parse_matrix(v: &Value, m: usize, n: usize) -> Result<ComplexMatrix, FieldError> {
    let field = format!("matrices[{m}]");
    let rows = v.as_array().ok_or_else(|| field_err(&field, "expected an array of rows"))?;
    let mut parsed: Vec<Vec<Complex64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rf = format!("{field}[{i}]");
        let row = row.as_array().ok_or_else(|| field_err(&rf, "expected an array of entries"))?;
        let entries = row
            .iter()
            .enumerate()
            .map(|(j, e)| parse_entry(e, &format!("{rf}[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        parsed.push(entries);
    }
    let r = parsed.len();
    let c = parsed.first().map_or(0, Vec::len);
    if let Some(i) = parsed.iter().position(|row| row.len() != c) {
        return Err(field_err(
            format!("{field}[{i}]"),
            format!("matrix {} row {} has {} entries, expected {c}", m + 1, i + 1, parsed[i].len()),
        ));
    }
    if r != c {
        return Err(field_err(&field, format!("matrix {} is {r}×{c}", m + 1)));
    }
    if r != n {
        return Err(field_err(&field, format!("matrix {} is {r}×{r}, expected {n}×{n}", m + 1)));
    }
    if let Some((i, j)) = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).find(|&(i, j)| {
        let z = parsed[i][j];
        !(z.re.is_finite() && z.im.is_finite())
    }) {
        return Err(field_err(format!("{field}[{i}][{j}]"), "entry is not finite"));
    }
    Ok(ComplexMatrix::from_rows(&parsed).expect("square rows"))
}

fn parse_value(v: &Value) -> Result<GeneratorSetFile, FieldError> {
    let obj = v.as_object().ok_or_else(|| field_err("", "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "n" | "p" | "matrices" | "labels")) {
        return Err(field_err(k.clone(), format!("unknown field \"{k}\"")));
    }
    let n = parse_count(obj, "n")?;
    let p = parse_count(obj, "p")?;
    let list = obj
        .get("matrices")
        .ok_or_else(|| field_err("", "missing field \"matrices\""))?
        .as_array()
        .ok_or_else(|| field_err("matrices", "expected an array of matrices"))?;
    if list.len() != p {
        return Err(field_err("matrices", format!("expected {p} matrices, found {}", list.len())));
    }
    let matrices = list.iter().enumerate().map(|(m, a)| parse_matrix(a, m, n)).collect::<Result<Vec<_>, _>>()?;
    let labels = match obj.get("labels") {
        None => None,
        Some(Value::Array(items)) => {
            if items.len() != p {
                return Err(field_err("labels", format!("expected {p} labels, found {}", items.len())));
            }
            let mut out = Vec::with_capacity(p);
            for (i, s) in items.iter().enumerate() {
                out.push(s.as_str().ok_or_else(|| field_err(format!("labels[{i}]"), "expected a string"))?.to_string());
            }
            Some(out)
        }
        Some(_) => return Err(field_err("labels", "expected an array of strings")),
    };
    Ok(GeneratorSetFile { n, matrices, labels })
}

#[derive(Clone, Debug)]
enum Frame {
    Object { key: Option<String>, expecting_key: bool },
    Array { index: usize },
}

fn render(stack: &[Frame]) -> String {
    let mut out = String::new();
    for f in stack {
        match f {
            Frame::Object { key: Some(k), expecting_key: false } => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Frame::Object { .. } => {}
            Frame::Array { index } => out.push_str(&format!("[{index}]")),
        }
    }
    out
}

/// Tolerant JSON tokenizer reporting each value's path and position.
struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    stack: Vec<Frame>,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner { chars: text.chars().peekable(), line: 1, column: 0, stack: Vec::new() }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 0;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Advances one token; calls `on_value` with the path and position of a value start.
    fn step(&mut self, on_value: &mut impl FnMut(String, usize, usize)) -> bool {
        let Some(c) = self.bump() else { return false };
        match c {
            '{' | '[' => {
                on_value(render(&self.stack), self.line, self.column);
                self.stack.push(if c == '{' {
                    Frame::Object { key: None, expecting_key: true }
                } else {
                    Frame::Array { index: 0 }
                });
            }
            '}' | ']' => {
                self.stack.pop();
            }
            ',' => match self.stack.last_mut() {
                Some(Frame::Array { index }) => *index += 1,
                Some(Frame::Object { expecting_key, .. }) => *expecting_key = true,
                None => {}
            },
            ':' => {
                if let Some(Frame::Object { expecting_key, .. }) = self.stack.last_mut() {
                    *expecting_key = false;
                }
            }
            '"' => {
                let (line, column) = (self.line, self.column);
                let mut s = String::new();
                while let Some(d) = self.bump() {
                    match d {
                        '"' => break,
                        '\\' => {
                            if let Some(e) = self.bump() {
                                s.push(e);
                            }
                        }
                        _ => s.push(d),
                    }
                }
                match self.stack.last_mut() {
                    Some(Frame::Object { key, expecting_key: true }) => *key = Some(s),
                    _ => on_value(render(&self.stack), line, column),
                }
            }
            c if c.is_whitespace() => {}
            _ => {
                on_value(render(&self.stack), self.line, self.column);
                while let Some(&d) = self.chars.peek() {
                    if matches!(d, ',' | ']' | '}' | ':') || d.is_whitespace() {
                        break;
                    }
                    self.bump();
                }
            }
        }
        true
    }
}

/// Path of the innermost value open at `(line, column)`.
fn open_path_at(text: &str, line: usize, column: usize) -> String {
    let mut s = Scanner::new(text);
    while (s.line, s.column) < (line, column) && s.step(&mut |_, _, _| {}) {}
    render(&s.stack)
}

/// Start position of every value, keyed by path.
struct PathIndex(BTreeMap<String, (usize, usize)>);

impl PathIndex {
    fn build(text: &str) -> Self {
        let mut map = BTreeMap::new();
        let mut s = Scanner::new(text);
        while s.step(&mut |path, line, column| {
            map.entry(path).or_insert((line, column));
        }) {}
        PathIndex(map)
    }

    fn position(&self, field: &str) -> (usize, usize) {
        self.0.get(field).copied().unwrap_or((1, 1))
    }
}

/// Writes `k1,…,kp,re1,im1,…,ren,imn,saturated`, one row per orbit point.
pub fn write_cloud<W: Write>(cloud: &OrbitCloud, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=cloud.p).map(|k| format!("k{k}")).collect();
    for i in 1..=cloud.n {
        header.push(format!("re{i}"));
        header.push(format!("im{i}"));
    }
    header.push("saturated".into());
    w.write_record(&header)?;
    for pt in &cloud.points {
        let mut rec: Vec<String> = pt.word.exponents().iter().map(u64::to_string).collect();
        for z in &pt.point {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        rec.push(pt.saturated.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a cloud CSV as `(exponents, point, saturated)`.
pub fn read_cloud<R: std::io::Read>(input: R) -> Result<Vec<(Vec<u64>, Vec<Complex64>, bool)>, String> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    let p = header.iter().take_while(|h| h.starts_with('k')).count();
    let n = (header.len().saturating_sub(p + 1)) / 2;
    if header.len() != p + 2 * n + 1 || header.get(header.len() - 1) != Some("saturated") {
        return Err("header must be k1,…,kp,re1,im1,…,ren,imn,saturated".into());
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |what: &str| format!("row {}: bad {what}", row + 1);
        let word = (0..p).map(|i| rec[i].parse::<u64>().map_err(|_| bad("exponent"))).collect::<Result<Vec<_>, _>>()?;
        let point = (0..n)
            .map(|i| {
                let re = rec[p + 2 * i].parse::<f64>().map_err(|_| bad("coordinate"))?;
                let im = rec[p + 2 * i + 1].parse::<f64>().map_err(|_| bad("coordinate"))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>, String>>()?;
        let saturated = rec[p + 2 * n].parse::<bool>().map_err(|_| bad("saturated flag"))?;
        out.push((word, point, saturated));
    }
    Ok(out)
}
