//! Headered numeric CSV files: reading with located errors, row splits,
//! standardization and dataset export.

use std::fs;
use std::io::Read;
use std::path::Path;

use fastnn_core::rng::{mix, rng};
use fastnn_core::{Dataset, RowMatrix};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, CliResult};

/// A numeric table with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub data: RowMatrix,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_table(file, &path.display().to_string())
}

/// Parse CSV text; every cell must be a finite real.
pub fn parse_table<R: Read>(input: R, source: &str) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{source}: cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        return Err(CliError::Input(format!("{source}: missing header row")));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("{source}: line {line}: {e}"))
        })?;
        rows += 1;
        let line = rec.position().map_or(rows + 1, |p| p.line() as usize);
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "{source}: row {rows} (line {line}), column `{}`: cannot parse `{cell}` as a number",
                    names[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{source}: row {rows} (line {line}), column `{}`: value `{cell}` is not finite",
                    names[j]
                )));
            }
            data.push(v);
        }
    }
    Ok(Table {
        data: RowMatrix::from_vec(rows, names.len(), data)?,
        names,
    })
}

impl Table {
    /// Position of the column called `name`, which must appear exactly once.
    pub fn column(&self, name: &str) -> CliResult<usize> {
        let hits: Vec<usize> = (0..self.names.len()).filter(|&j| self.names[j] == name).collect();
        match hits.as_slice() {
            [j] => Ok(*j),
            [] => Err(CliError::Input(format!("column `{name}` not found"))),
            _ => Err(CliError::Input(format!("column `{name}` appears {} times", hits.len()))),
        }
    }

    /// Response column plus covariates (by default every other column).
    pub fn dataset(&self, response: &str, covariates: Option<&[String]>) -> CliResult<(Dataset, Vec<String>)> {
        let yj = self.column(response)?;
        let names: Vec<String> = match covariates {
            Some(c) => c.to_vec(),
            None => self.names.iter().filter(|n| n.as_str() != response).cloned().collect(),
        };
        if names.is_empty() {
            return config_err("no covariate columns");
        }
        let cols = names.iter().map(|n| self.column(n)).collect::<CliResult<Vec<_>>>()?;
        if cols.contains(&yj) {
            return config_err(format!("response `{response}` is also listed as a covariate"));
        }
        let y = self.data.column(yj);
        Ok((Dataset::new(self.data.select_cols(&cols), y)?, names))
    }

    pub fn covariates(&self, names: &[String]) -> CliResult<RowMatrix> {
        let cols = names.iter().map(|n| self.column(n)).collect::<CliResult<Vec<_>>>()?;
        Ok(self.data.select_cols(&cols))
    }
}

/// Half-open row range `start..end`, 0-based over data rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowRange {
    pub start: usize,
    pub end: usize,
}

impl std::str::FromStr for RowRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("row range `{s}` is not of the form start..end"))?;
        let start = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let end = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        Ok(RowRange { start, end })
    }
}

impl RowRange {
    fn indices(&self, n: usize, what: &str) -> CliResult<Vec<usize>> {
        if self.start >= self.end || self.end > n {
            return config_err(format!("{what} rows {}..{} invalid for {n} rows", self.start, self.end));
        }
        Ok((self.start..self.end).collect())
    }
}

/// How rows are divided into training, validation and test sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SplitSpec {
    /// The leading `split` fraction of rows is shuffled into training
    /// (`inner_split` of it) and validation; the remaining rows are the test set.
    Ratio {
        split: f64,
        inner_split: f64,
        split_seed: u64,
    },
    /// Explicit row ranges; without a test range every row outside the
    /// training and validation ranges is a test row.
    Rows {
        train: RowRange,
        valid: RowRange,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<RowRange>,
    },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Ratio {
            split: 0.6,
            inner_split: 0.7,
            split_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> CliResult<()> {
        if let SplitSpec::Ratio { split, inner_split, .. } = *self {
            if !(split > 0.0 && split <= 1.0 && inner_split > 0.0 && inner_split < 1.0) {
                return config_err("split must lie in (0, 1] and inner_split in (0, 1)");
            }
        }
        Ok(())
    }

    /// Row indices for repeat `repeat`; only the inner shuffle depends on it.
    pub fn indices(&self, n: usize, repeat: usize) -> CliResult<Splits> {
        self.validate()?;
        let s = match *self {
            SplitSpec::Ratio {
                split,
                inner_split,
                split_seed,
            } => {
                let pool = (split * n as f64).round() as usize;
                let mut idx: Vec<usize> = (0..pool).collect();
                idx.shuffle(&mut rng(mix(split_seed, repeat as u64)));
                let n_train = (inner_split * pool as f64).round() as usize;
                let valid = idx.split_off(n_train.min(pool));
                let mut train = idx;
                train.sort_unstable();
                let mut valid = valid;
                valid.sort_unstable();
                Splits {
                    train,
                    valid,
                    test: (pool..n).collect(),
                }
            }
            SplitSpec::Rows { train, valid, test } => {
                let tr = train.indices(n, "training")?;
                let va = valid.indices(n, "validation")?;
                if tr.iter().any(|i| va.contains(i)) {
                    return config_err("training and validation rows overlap");
                }
                let te = match test {
                    Some(t) => t.indices(n, "test")?,
                    None => (0..n).filter(|i| !tr.contains(i) && !va.contains(i)).collect(),
                };
                Splits {
                    train: tr,
                    valid: va,
                    test: te,
                }
            }
        };
        if s.train.is_empty() || s.valid.is_empty() {
            return config_err(format!("split of {n} rows leaves an empty training or validation set"));
        }
        Ok(s)
    }
}

/// Column centering and scaling fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Constant columns get scale 1.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &RowMatrix) -> Self {
        let n = x.rows.max(1) as f64;
        let means: Vec<f64> = (0..x.cols)
            .map(|j| (0..x.rows).map(|i| x.get(i, j)).sum::<f64>() / n)
            .collect();
        let scales = (0..x.cols)
            .map(|j| {
                let v = (0..x.rows).map(|i| (x.get(i, j) - means[j]).powi(2)).sum::<f64>() / n;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { means, scales }
    }

    pub fn apply(&self, x: &RowMatrix) -> CliResult<RowMatrix> {
        if x.cols != self.means.len() {
            return Err(fastnn_core::Error::Shape {
                what: "standardized columns",
                expected: self.means.len(),
                found: x.cols,
            }
            .into());
        }
        Ok(RowMatrix::from_fn(x.rows, x.cols, |i, j| {
            (x.get(i, j) - self.means[j]) / self.scales[j]
        }))
    }
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Serialize rows with the `csv` crate; an empty table still gets `header`.
pub fn to_csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<String> {
    let err = |e: csv::Error| CliError::Input(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(err)?;
    }
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Matrix with a header row.
pub fn matrix_csv(names: &[String], m: &RowMatrix) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(names).map_err(err)?;
    for i in 0..m.rows {
        w.write_record(m.row(i).iter().map(|v| v.to_string())).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write `x1..xp,y` to `path` and, for simulated data, the latent truth
/// (`f1..fr`, the important idiosyncratics, `m`, `eps`) next to it as
/// `<stem>.truth.csv`.
pub fn write_dataset(path: &Path, data: &Dataset) -> CliResult<()> {
    let mut names: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    names.push("y".into());
    let y = RowMatrix::from_vec(data.len(), 1, data.y.clone())?;
    write_file(path, &matrix_csv(&names, &data.x.hcat(&y)?)?)?;
    if let Some(l) = &data.latent {
        let mut names: Vec<String> = (1..=l.factors.cols).map(|k| format!("f{k}")).collect();
        names.extend(l.important.iter().map(|j| format!("u{}", j + 1)));
        names.push("m".into());
        names.push("eps".into());
        let n = data.len();
        let tail = RowMatrix::from_fn(n, 2, |i, c| if c == 0 { l.truth[i] } else { l.noise[i] });
        let m = l.factors.hcat(&l.idio)?.hcat(&tail)?;
        let stem = path
            .file_stem()
            .map_or("data".into(), |s| s.to_string_lossy().into_owned());
        write_file(
            &path.with_file_name(format!("{stem}.truth.csv")),
            &matrix_csv(&names, &m)?,
        )?;
    }
    Ok(())
}
