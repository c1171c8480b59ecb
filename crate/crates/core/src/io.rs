//! Dataset ingestion and model persistence.
//!
//! Sparse text lines look like `label idx:val idx:val …` with 1-based,
//! strictly ascending indices. Model files are line-oriented UTF-8 with a
//! magic first line and a format version; reals are written in Rust's
//! shortest round-trip form so that loading reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::data::{Dataset, DatasetBuilder};
use crate::error::{Result, SvmError};
use crate::kernel::{KernelKind, KernelSpec};
use crate::model::{DecisionFunction, ModelTask, SvmModel, TrainingMeta};
use crate::preprocess::ScalerParams;

pub const MODEL_MAGIC: &str = "wsvm-model";
pub const FORMAT_VERSION: u32 = 1;

fn parse_err(line: usize, msg: impl Into<String>) -> SvmError {
    SvmError::Parse { line, msg: msg.into() }
}

/// Parses sparse text from a reader. `n_cols` overrides the column count,
/// which otherwise is the largest index seen.
pub fn parse_sparse<R: BufRead>(reader: R, n_cols: Option<usize>) -> Result<(Dataset, Vec<f64>)> {
    let mut builder = DatasetBuilder::new();
    let mut labels = Vec::new();
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        let label: f64 = label
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label '{label}'")))?;
        idx.clear();
        vals.clear();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("bad token '{tok}'")))?;
            let i: u32 = i
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| parse_err(lineno, format!("bad index '{i}'")))?;
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(lineno, "bad value"))?;
            if let Some(&prev) = idx.last() {
                if i - 1 <= prev {
                    return Err(parse_err(lineno, "indices not ascending"));
                }
            }
            idx.push(i - 1);
            vals.push(v);
        }
        if let (Some(limit), Some(&last)) = (n_cols, idx.last()) {
            if last as usize >= limit {
                return Err(parse_err(
                    lineno,
                    format!("index {} exceeds {limit} columns", last + 1),
                ));
            }
        }
        builder.push_sparse_row(&idx, &vals);
        labels.push(label);
    }
    Ok((builder.finish(n_cols)?, labels))
}

pub fn parse_sparse_file(path: impl AsRef<Path>, n_cols: Option<usize>) -> Result<(Dataset, Vec<f64>)> {
    let path = path.as_ref();
    let f = fs::File::open(path).map_err(|e| SvmError::io(path, e))?;
    parse_sparse(BufReader::new(f), n_cols)
}

/// Writes sparse text; the inverse of [`parse_sparse`].
pub fn write_sparse<W: Write>(mut w: W, data: &Dataset, labels: &[f64]) -> std::io::Result<()> {
    for (i, label) in labels.iter().enumerate().take(data.n_rows()) {
        let mut line = format!("{label:?}");
        let row = data.row(i);
        for (&c, &v) in row.indices.iter().zip(row.values) {
            let _ = write!(line, " {}:{v:?}", c + 1);
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Parses numeric CSV; `label_column` is split off as the labels. A first
/// row that does not parse as numbers is treated as a header.
pub fn parse_csv<R: Read>(reader: R, label_column: usize) -> Result<(Dataset, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut builder = DatasetBuilder::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut dense = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let lineno = k + 1;
        let rec = rec.map_err(|e| parse_err(lineno, e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        if k == 0 && parsed.iter().any(|v| v.is_none()) {
            continue;
        }
        match width {
            None => {
                if label_column >= rec.len() {
                    return Err(parse_err(
                        lineno,
                        format!("label column {label_column} missing from {} columns", rec.len()),
                    ));
                }
                width = Some(rec.len());
            }
            Some(w) if w != rec.len() => {
                return Err(parse_err(
                    lineno,
                    format!("ragged row: {} columns, expected {w}", rec.len()),
                ));
            }
            _ => {}
        }
        dense.clear();
        for (c, v) in parsed.iter().enumerate() {
            let v = v
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("non-numeric cell '{}'", &rec[c])))?;
            if c == label_column {
                labels.push(v);
            } else {
                dense.push(v);
            }
        }
        builder.push_dense_row(&dense);
    }
    let n_cols = width.map_or(0, |w| w - 1);
    Ok((builder.finish(Some(n_cols))?, labels))
}

pub fn parse_csv_file(path: impl AsRef<Path>, label_column: usize) -> Result<(Dataset, Vec<f64>)> {
    let path = path.as_ref();
    let f = fs::File::open(path).map_err(|e| SvmError::io(path, e))?;
    parse_csv(BufReader::new(f), label_column)
}

fn join<T, F: Fn(&T) -> String>(v: &[T], f: F) -> String {
    v.iter().map(f).collect::<Vec<_>>().join(" ")
}

fn real(v: &f64) -> String {
    format!("{v:?}")
}

/// Serializes a model to the text format.
pub fn model_to_string(model: &SvmModel) -> String {
    let mut s = String::new();
    let k = &model.kernel;
    let _ = writeln!(s, "{MODEL_MAGIC}");
    let _ = writeln!(s, "format_version {FORMAT_VERSION}");
    let _ = writeln!(s, "task {}", model.task.name());
    let _ = writeln!(
        s,
        "kernel {} gamma {:?} degree {} coef0 {:?}",
        k.kind.name(),
        k.gamma,
        k.degree,
        k.coef0
    );
    let _ = writeln!(s, "n_features {}", model.n_features);
    let _ = writeln!(s, "labels {} {}", model.class_labels.len(), join(&model.class_labels, real));
    match &model.scaler {
        None => {
            let _ = writeln!(s, "scaler none");
        }
        Some(sc) => {
            let _ = writeln!(s, "scaler {}", sc.n_cols());
            let _ = writeln!(s, "means {}", join(&sc.means, real));
            let _ = writeln!(s, "stds {}", join(&sc.stds, real));
            let _ = writeln!(s, "constant {}", join(&sc.constant, |&b| (b as u8).to_string()));
        }
    }
    let _ = writeln!(s, "functions {}", model.decision_functions.len());
    for (df, meta) in model.decision_functions.iter().zip(&model.training_meta) {
        let _ = writeln!(
            s,
            "function {} {} {} bias {:?} n_sv {} iterations {} gap {:?} violation {:?} converged {} cap {}",
            df.class_a,
            df.class_b,
            df.positive,
            df.bias,
            df.sv_indices.len(),
            meta.iterations,
            meta.gap,
            meta.violation,
            meta.converged as u8,
            meta.iteration_cap_reached as u8
        );
        let _ = writeln!(s, "sv_indices {}", join(&df.sv_indices, |i| i.to_string()));
        let _ = writeln!(s, "coefficients {}", join(&df.coefficients, real));
    }
    let _ = writeln!(s, "support_vectors {}", model.support_vectors.n_rows());
    for row in model.support_vectors.rows() {
        let mut line = String::from("sv");
        for (&c, &v) in row.indices.iter().zip(row.values) {
            let _ = write!(line, " {}:{v:?}", c + 1);
        }
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s, "end");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn truncated() -> SvmError {
        SvmError::ModelFormat("truncated".into())
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (i, line) = self.inner.next().ok_or_else(Self::truncated)?;
        self.line = i + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok(tokens.collect()),
            _ => Err(self.err(format!("expected '{key}'"))),
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> SvmError {
        SvmError::ModelFormat(format!("line {}: {msg}", self.line))
    }

    fn num<T: std::str::FromStr>(&self, tok: Option<&&str>) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err("missing field"))?;
        tok.parse().map_err(|_| self.err(format!("bad number '{tok}'")))
    }

    fn nums<T: std::str::FromStr>(&self, toks: &[&str], n: usize) -> Result<Vec<T>> {
        if toks.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", toks.len())));
        }
        toks.iter().map(|t| self.num(Some(t))).collect()
    }

    /// Value following `key` in a `key value key value` line.
    fn field<T: std::str::FromStr>(&self, toks: &[&str], key: &str) -> Result<T> {
        let pos = toks
            .iter()
            .position(|t| *t == key)
            .ok_or_else(|| self.err(format!("missing '{key}'")))?;
        self.num(toks.get(pos + 1))
    }
}

/// Parses a model from the text format.
pub fn model_from_str(text: &str) -> Result<SvmModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    lines.expect(MODEL_MAGIC)?;
    let v = lines.expect("format_version")?;
    let version: u32 = lines.num(v.first())?;
    if version != FORMAT_VERSION {
        return Err(SvmError::ModelFormat(format!(
            "unsupported format_version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    let t = lines.expect("task")?;
    let task = t
        .first()
        .and_then(|s| ModelTask::parse(s))
        .ok_or_else(|| lines.err("unknown task"))?;
    let k = lines.expect("kernel")?;
    let kind = k
        .first()
        .and_then(|s| KernelKind::parse(s))
        .ok_or_else(|| lines.err("unknown kernel"))?;
    let kernel = KernelSpec {
        kind,
        gamma: lines.field(&k, "gamma")?,
        degree: lines.field(&k, "degree")?,
        coef0: lines.field(&k, "coef0")?,
    };
    let nf = lines.expect("n_features")?;
    let n_features: usize = lines.num(nf.first())?;
    let lab = lines.expect("labels")?;
    let n_labels: usize = lines.num(lab.first())?;
    let class_labels: Vec<f64> = lines.nums(&lab[1..], n_labels)?;
    let sc = lines.expect("scaler")?;
    let scaler = match sc.first() {
        Some(&"none") => None,
        _ => {
            let d: usize = lines.num(sc.first())?;
            let means = lines.expect("means")?;
            let means = lines.nums(&means, d)?;
            let stds = lines.expect("stds")?;
            let stds = lines.nums(&stds, d)?;
            let constant = lines.expect("constant")?;
            let constant: Vec<u8> = lines.nums(&constant, d)?;
            Some(ScalerParams {
                means,
                stds,
                constant: constant.into_iter().map(|b| b != 0).collect(),
            })
        }
    };
    let f = lines.expect("functions")?;
    let n_functions: usize = lines.num(f.first())?;
    let mut decision_functions = Vec::with_capacity(n_functions);
    let mut training_meta = Vec::with_capacity(n_functions);
    for _ in 0..n_functions {
        let h = lines.expect("function")?;
        let n_sv: usize = lines.field(&h, "n_sv")?;
        let flag = |key: &str| -> Result<bool> { Ok(lines.field::<u8>(&h, key)? != 0) };
        training_meta.push(TrainingMeta {
            iterations: lines.field(&h, "iterations")?,
            gap: lines.field(&h, "gap")?,
            violation: lines.field(&h, "violation")?,
            converged: flag("converged")?,
            iteration_cap_reached: flag("cap")?,
        });
        let (class_a, class_b, positive) = (lines.num(h.first())?, lines.num(h.get(1))?, lines.num(h.get(2))?);
        let bias = lines.field(&h, "bias")?;
        let idx = lines.expect("sv_indices")?;
        let sv_indices = lines.nums(&idx, n_sv)?;
        let co = lines.expect("coefficients")?;
        let coefficients = lines.nums(&co, n_sv)?;
        decision_functions.push(DecisionFunction {
            class_a,
            class_b,
            positive,
            sv_indices,
            coefficients,
            bias,
        });
    }
    let s = lines.expect("support_vectors")?;
    let n_rows: usize = lines.num(s.first())?;
    let mut builder = DatasetBuilder::new();
    for _ in 0..n_rows {
        let toks = lines.expect("sv")?;
        let mut idx = Vec::with_capacity(toks.len());
        let mut vals = Vec::with_capacity(toks.len());
        for tok in toks {
            let (i, v) = tok.split_once(':').ok_or_else(|| lines.err("bad support vector entry"))?;
            let i: u32 = lines.num(Some(&i))?;
            if i == 0 {
                return Err(lines.err("support vector index must be 1-based"));
            }
            idx.push(i - 1);
            vals.push(lines.num(Some(&v))?);
        }
        builder.push_sparse_row(&idx, &vals);
    }
    lines.expect("end")?;
    let support_vectors = builder
        .finish(Some(n_features))
        .map_err(|e| SvmError::ModelFormat(e.to_string()))?;
    for df in &decision_functions {
        if df.sv_indices.iter().any(|&i| i >= n_rows) {
            return Err(SvmError::ModelFormat("support vector index out of range".into()));
        }
        let classes = class_labels.len();
        if task.is_classification() && (df.class_a >= classes || df.class_b >= classes || df.positive >= classes) {
            return Err(SvmError::ModelFormat("class index out of range".into()));
        }
    }
    if decision_functions.is_empty() {
        return Err(SvmError::ModelFormat("model has no decision function".into()));
    }
    Ok(SvmModel {
        task,
        kernel,
        n_features,
        support_vectors,
        class_labels,
        decision_functions,
        scaler,
        training_meta,
    })
}

pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| SvmError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SvmError::io(path, e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{train, SvmParams};
    use proptest::prelude::*;

    #[test]
    fn one_line() {
        let (d, y) = parse_sparse("1 3:2.5 7:1.0\n".as_bytes(), None).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.nnz(), 2);
        assert_eq!(d.row(0).indices, &[2, 6]);
        assert_eq!(d.n_cols(), 7);
        assert_eq!(y, vec![1.0]);
    }

    #[test]
    fn two_lines_and_blanks() {
        let (d, y) = parse_sparse("-1 1:0.5\n\n+1 2:0.5\n".as_bytes(), None).unwrap();
        assert_eq!((d.n_rows(), d.n_cols()), (2, 2));
        assert_eq!(y, vec![-1.0, 1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_sparse("1 5:a".as_bytes(), None).unwrap_err();
        assert_eq!(e.to_string(), "line 1: bad value");
        let e = parse_sparse("1 1:1\n1 3:1 2:1".as_bytes(), None).unwrap_err();
        assert_eq!(e.to_string(), "line 2: indices not ascending");
        let e = parse_sparse("1 0:1".as_bytes(), None).unwrap_err();
        assert!(e.to_string().starts_with("line 1: bad index"));
        assert!(parse_sparse("x 1:1".as_bytes(), None).is_err());
        assert!(parse_sparse("1 4:1".as_bytes(), Some(3)).is_err());
        let (d, _) = parse_sparse("1 2:1".as_bytes(), Some(9)).unwrap();
        assert_eq!(d.n_cols(), 9);
    }

    #[test]
    fn csv_examples() {
        let (d, y) = parse_csv("1,2,3\n4,0,6\n7,8,9\n".as_bytes(), 0).unwrap();
        assert_eq!((d.n_rows(), d.n_cols()), (3, 2));
        assert_eq!(y, vec![1.0, 4.0, 7.0]);
        assert_eq!(d.row(1).nnz(), 1);

        let (d, y) = parse_csv("a,b,label\n1,2,0\n3,4,1\n".as_bytes(), 2).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(y, vec![0.0, 1.0]);
        assert_eq!(d.dense_row(1), vec![3.0, 4.0]);

        let e = parse_csv("1,2,3\n4,5\n".as_bytes(), 0).unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("ragged"), "{e}");
        let e = parse_csv("1,2\n3,x\n".as_bytes(), 0).unwrap_err();
        assert!(e.to_string().contains("non-numeric"), "{e}");
    }

    fn two_point_model() -> SvmModel {
        let d = Dataset::from_dense(&[vec![-1.0], vec![1.0]]).unwrap();
        train(&d, &[-1.0, 1.0], &SvmParams::classification(crate::kernel::KernelSpec::linear(), 1.0)).unwrap()
    }

    #[test]
    fn model_round_trip_is_exact() {
        let m = two_point_model();
        let back = model_from_str(&model_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn future_version_and_truncation() {
        let text = model_to_string(&two_point_model()).replace("format_version 1", "format_version 2");
        let e = model_from_str(&text).unwrap_err();
        assert!(e.to_string().contains("unsupported format_version"), "{e}");
        assert!(model_from_str("").unwrap_err().to_string().contains("truncated"));
        let full = model_to_string(&two_point_model());
        let cut: String = full.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(model_from_str(&cut).unwrap_err().to_string().contains("truncated"));
    }

    proptest! {
        #[test]
        fn sparse_text_round_trip(
            rows in prop::collection::vec(
                (prop_oneof![Just(1.0), Just(-1.0), -1e6f64..1e6],
                 prop::collection::vec(prop_oneof![Just(0.0), Just(0.0), -1e3f64..1e3, any::<f64>().prop_filter("finite", |v| v.is_finite())], 5)),
                0..12,
            )
        ) {
            let labels: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let dense: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
            let d = if dense.is_empty() { Dataset::empty(5) } else { Dataset::from_dense(&dense).unwrap() };
            let mut buf = Vec::new();
            write_sparse(&mut buf, &d, &labels).unwrap();
            let (back, back_labels) = parse_sparse(buf.as_slice(), Some(5)).unwrap();
            prop_assert_eq!(back, d);
            prop_assert_eq!(back_labels, labels);
        }
    }
}
