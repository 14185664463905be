//! Tabular datasets: labeled/unlabeled row algebra, CSV ingestion, min-max
//! scaling and stratified folds.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{permutation, Matrix};
use crate::scalar::{median, Scalar};
use crate::seed;

/// Placeholder label of rows whose class is unknown.
pub const UNLABELED: i32 = -1;

/// Feature matrix plus binary labels, where `-1` marks an unlabeled row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S: Scalar = f64> {
    features: Matrix<S>,
    labels: Vec<i32>,
    column_names: Vec<String>,
    labeled_mask: Vec<bool>,
}

impl<S: Scalar> Dataset<S> {
    /// Builds a dataset, deriving the labeled mask from the labels.
    pub fn new(features: Matrix<S>, labels: Vec<i32>, column_names: Vec<String>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() != column_names.len() {
            return Err(Error::Dimension(format!(
                "{} feature columns but {} column names",
                features.ncols(),
                column_names.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| !(y == 0 || y == 1 || y == UNLABELED)) {
            return Err(Error::Schema(format!("label {bad} outside {{0, 1, -1}}")));
        }
        let labeled_mask = labels.iter().map(|&y| y != UNLABELED).collect();
        Ok(Self {
            features,
            labels,
            column_names,
            labeled_mask,
        })
    }

    /// Unlabeled dataset with generic column names `z0, z1, ...`.
    pub fn unlabeled(features: Matrix<S>) -> Self {
        let n = features.nrows();
        let names = default_names(features.ncols());
        Self::new(features, vec![UNLABELED; n], names).expect("consistent shapes")
    }

    pub fn with_default_names(features: Matrix<S>, labels: Vec<i32>) -> Result<Self> {
        let names = default_names(features.ncols());
        Self::new(features, labels, names)
    }

    pub fn features(&self) -> ArrayView2<'_, S> {
        self.features.view()
    }

    pub fn into_features(self) -> Matrix<S> {
        self.features
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled_mask
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labeled_mask[i]).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| !self.labeled_mask[i]).collect()
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_rows() - self.n_labeled()
    }

    /// Number of labeled rows per class.
    pub fn class_counts(&self) -> BTreeMap<i32, usize> {
        let mut counts = BTreeMap::new();
        for &y in self.labels.iter().filter(|&&y| y != UNLABELED) {
            *counts.entry(y).or_insert(0) += 1;
        }
        counts
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            column_names: self.column_names.clone(),
            labeled_mask: rows.iter().map(|&i| self.labeled_mask[i]).collect(),
        }
    }

    /// Labeled rows only (the set L).
    pub fn labeled(&self) -> Self {
        self.subset(&self.labeled_indices())
    }

    pub fn with_features(&self, features: Matrix<S>) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.column_names.clone())
    }

    pub fn with_labels(&self, labels: Vec<i32>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.column_names.clone())
    }

    /// Row-wise concatenation; column names are taken from `self`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.n_cols() != other.n_cols() {
            return Err(Error::Dimension(format!(
                "cannot concatenate {} and {} columns",
                self.n_cols(),
                other.n_cols()
            )));
        }
        let features = ndarray::concatenate(Axis(0), &[self.features.view(), other.features.view()])
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Self::new(features, labels, self.column_names.clone())
    }

    /// Writes a CSV with a header row; the label column is appended last.
    pub fn write_csv<W: Write>(&self, writer: W, label_column: &str) -> Result<()> {
        self.write_csv_with(writer, label_column, None)
    }

    /// Like [`Dataset::write_csv`], with an optional extra string column.
    pub fn write_csv_with<W: Write>(
        &self,
        writer: W,
        label_column: &str,
        extra: Option<(&str, &[String])>,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push(label_column);
        if let Some((name, _)) = extra {
            header.push(name);
        }
        w.write_record(&header)?;
        for (i, row) in self.features.outer_iter().enumerate() {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(self.labels[i].to_string());
            if let Some((_, values)) = extra {
                record.push(values[i].clone());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), label_column)
    }

    pub fn to_json(&self) -> DatasetJson<S> {
        DatasetJson {
            columns: self.column_names.clone(),
            rows: self.features.outer_iter().map(|r| r.to_vec()).collect(),
            labels: self.labels.clone(),
            labeled_mask: self.labeled_mask.clone(),
        }
    }

    pub fn from_json(json: DatasetJson<S>) -> Result<Self> {
        let n_cols = json.columns.len();
        let n_rows = json.rows.len();
        let mut flat = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in json.rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!("row {i} has {} values, expected {n_cols}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        let features = Array2::from_shape_vec((n_rows, n_cols), flat).map_err(|e| Error::Dimension(e.to_string()))?;
        let ds = Self::new(features, json.labels, json.columns)?;
        if ds.labeled_mask != json.labeled_mask {
            return Err(Error::Schema("labeled_mask disagrees with labels".into()));
        }
        Ok(ds)
    }
}

/// JSON form of a [`Dataset`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DatasetJson<S: Scalar> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<S>>,
    pub labels: Vec<i32>,
    pub labeled_mask: Vec<bool>,
}

pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("z{j}")).collect()
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<i32> {
    let t = cell.trim();
    if t.is_empty() {
        return Ok(UNLABELED);
    }
    match t.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        Ok(v) if v == -1.0 => Ok(UNLABELED),
        _ => Err(Error::Schema(format!(
            "row {row}, column `{column}`: label value `{t}` outside {{0, 1, -1, empty}}"
        ))),
    }
}

/// Reads a header-first CSV. Missing feature cells are imputed with the
/// column median; labels outside {0, 1} are read as unlabeled (`-1` or empty).
pub fn read_csv<S: Scalar, R: Read>(reader: R, label_column: &str) -> Result<Dataset<S>> {
    read_csv_ignoring(reader, label_column, &[])
}

/// Like [`read_csv`], dropping the named non-feature columns.
pub fn read_csv_ignoring<S: Scalar, R: Read>(reader: R, label_column: &str, ignored: &[&str]) -> Result<Dataset<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Parse {
            row: 0,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::Schema(format!("label column `{label_column}` not found")))?;
    let skip: Vec<bool> = headers.iter().map(|h| ignored.contains(&h.trim())).collect();
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx && !skip[j])
        .map(|(_, h)| h.trim().to_string())
        .collect();
    let n_cols = names.len();

    let mut cells: Vec<Option<S>> = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(parse_label(cell, row, label_column)?);
                continue;
            }
            if skip[j] {
                continue;
            }
            let t = cell.trim();
            if t.is_empty() {
                cells.push(None);
            } else {
                let v = t.parse::<S>().map_err(|_| Error::Parse {
                    row,
                    column: headers[j].to_string(),
                    message: format!("`{t}` is not a real number"),
                })?;
                cells.push(Some(v));
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            row: 0,
            column: String::new(),
            message: "no data rows".into(),
        });
    }

    let n_rows = labels.len();
    let mut features = Array2::<S>::zeros((n_rows, n_cols));
    for j in 0..n_cols {
        let present: Vec<S> = (0..n_rows).filter_map(|i| cells[i * n_cols + j]).collect();
        let fill = median(&present).unwrap_or_else(|| {
            log::warn!("column `{}` has no values; imputing 0", names[j]);
            S::zero()
        });
        for i in 0..n_rows {
            features[[i, j]] = cells[i * n_cols + j].unwrap_or(fill);
        }
    }
    Dataset::new(features, labels, names)
}

pub fn load_csv<S: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset<S>> {
    load_csv_ignoring(path, label_column, &[])
}

pub fn load_csv_ignoring<S: Scalar>(path: impl AsRef<Path>, label_column: &str, ignored: &[&str]) -> Result<Dataset<S>> {
    let file = std::fs::File::open(path)?;
    read_csv_ignoring(std::io::BufReader::new(file), label_column, ignored)
}

/// Per-column bounds used for min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScalingParams<S: Scalar> {
    pub min: Vec<S>,
    pub max: Vec<S>,
}

impl<S: Scalar> ScalingParams<S> {
    pub fn fit(x: &ArrayView2<S>) -> Self {
        let n = x.ncols();
        let mut min = vec![S::infinity(); n];
        let mut max = vec![S::neg_infinity(); n];
        for row in x.outer_iter() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        if x.nrows() == 0 {
            min.iter_mut().for_each(|v| *v = S::zero());
            max.iter_mut().for_each(|v| *v = S::zero());
        }
        Self { min, max }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            min: vec![S::zero(); n],
            max: vec![S::one(); n],
        }
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.max[j] == self.min[j]
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.min.len()).filter(|&j| self.is_constant(j)).collect()
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn apply(&self, x: &ArrayView2<S>) -> Result<Matrix<S>> {
        self.check(x)?;
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.is_constant(j) {
                    S::zero()
                } else {
                    (*v - self.min[j]) / (self.max[j] - self.min[j])
                };
            }
        }
        Ok(out)
    }

    /// Inverse map; constant columns are restored to their single value.
    pub fn invert(&self, x: &ArrayView2<S>) -> Result<Matrix<S>> {
        self.check(x)?;
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if self.is_constant(j) {
                    self.min[j]
                } else {
                    *v * (self.max[j] - self.min[j]) + self.min[j]
                };
            }
        }
        Ok(out)
    }

    fn check(&self, x: &ArrayView2<S>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} columns, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(())
    }
}

/// Min-max scales every column to [0, 1]; constant columns become 0.
pub fn minmax_scale<S: Scalar>(d: &Dataset<S>) -> Result<(Dataset<S>, ScalingParams<S>)> {
    if d.n_rows() == 0 {
        return Err(Error::Precondition("min-max scaling needs at least one row".into()));
    }
    let params = ScalingParams::fit(&d.features());
    let scaled = params.apply(&d.features())?;
    Ok((d.with_features(scaled)?, params))
}

/// Fold index per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_index_per_row: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index_per_row.len())
            .filter(|&i| self.fold_index_per_row[i] != fold)
            .collect()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index_per_row.len())
            .filter(|&i| self.fold_index_per_row[i] == fold)
            .collect()
    }
}

/// Stratified k-fold assignment. Rows of each class are shuffled and dealt
/// round-robin, continuing the dealing position across classes so that fold
/// sizes stay balanced too. Unlabeled rows form their own stratum.
pub fn stratified_folds<S: Scalar>(d: &Dataset<S>, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Precondition(format!("need k >= 2 folds, got {k}")));
    }
    for class in [0, 1] {
        let count = d.labels().iter().filter(|&&y| y == class).count();
        if count < k {
            return Err(Error::Stratification {
                class: i64::from(class),
                count,
                folds: k,
            });
        }
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![0usize; d.n_rows()];
    let mut cursor = 0usize;
    for class in [0, 1, UNLABELED] {
        let members: Vec<usize> = (0..d.n_rows()).filter(|&i| d.labels()[i] == class).collect();
        let order = permutation(members.len(), &mut rng);
        for &p in &order {
            folds[members[p]] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldAssignment {
        fold_index_per_row: folds,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(labels: Vec<i32>) -> Dataset<f64> {
        let n = labels.len();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        Dataset::with_default_names(x, labels).unwrap()
    }

    #[test]
    fn mask_partitions_rows() {
        let d = toy(vec![0, -1, 1, -1, 1]);
        assert_eq!(d.labeled_indices(), vec![0, 2, 4]);
        assert_eq!(d.unlabeled_indices(), vec![1, 3]);
        assert_eq!(d.n_labeled() + d.n_unlabeled(), d.n_rows());
    }

    #[test]
    fn rejects_bad_label() {
        let x = Array2::<f64>::zeros((1, 1));
        assert!(matches!(
            Dataset::with_default_names(x, vec![2]),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn csv_reads_missing_and_unlabeled() {
        let text = "a,b,y\n1,2,0\n,4,1\n5,,\n7,8,-1\n";
        let d: Dataset = read_csv(text.as_bytes(), "y").unwrap();
        assert_eq!(d.labels(), &[0, 1, -1, -1]);
        // column a median of {1,5,7} = 5; column b median of {2,4,8} = 4
        assert_eq!(d.features()[[1, 0]], 5.0);
        assert_eq!(d.features()[[2, 1]], 4.0);
        assert_eq!(d.column_names(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(read_csv::<f64, _>("".as_bytes(), "y"), Err(Error::Parse { .. })));
        assert!(matches!(read_csv::<f64, _>("a,y\n".as_bytes(), "y"), Err(Error::Parse { .. })));
        assert!(matches!(read_csv::<f64, _>("a,b\n1,2\n".as_bytes(), "y"), Err(Error::Schema(_))));
        let err = read_csv::<f64, _>("a,y\n1,0\nxx,1\n".as_bytes(), "y").unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(read_csv::<f64, _>("a,y\n1,7\n".as_bytes(), "y"), Err(Error::Schema(_))));
    }

    #[test]
    fn minmax_examples() {
        let x = array![[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]];
        let d = Dataset::with_default_names(x.clone(), vec![0, 1, 0]).unwrap();
        let (s, p) = minmax_scale(&d).unwrap();
        assert_eq!(s.features().column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(s.features().column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        assert_eq!(p.constant_columns(), vec![1]);
        let back = p.invert(&s.features()).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn stratified_ninety_ten() {
        let labels: Vec<i32> = (0..100).map(|i| if i < 90 { 1 } else { 0 }).collect();
        let d = toy(labels);
        let f = stratified_folds(&d, 5, 7).unwrap();
        for fold in 0..5 {
            let idx = f.test_indices(fold);
            let ones = idx.iter().filter(|&&i| d.labels()[i] == 1).count();
            assert_eq!(ones, 18);
            assert_eq!(idx.len() - ones, 2);
        }
        assert_eq!(f, stratified_folds(&d, 5, 7).unwrap());
    }

    #[test]
    fn stratified_two_by_two() {
        let d = toy(vec![0, 0, 1, 1]);
        let f = stratified_folds(&d, 2, 1).unwrap();
        for fold in 0..2 {
            let idx = f.test_indices(fold);
            assert_eq!(idx.len(), 2);
            assert_eq!(idx.iter().filter(|&&i| d.labels()[i] == 1).count(), 1);
        }
    }

    #[test]
    fn stratified_names_short_class() {
        let d = toy(vec![0, 1, 1, 1, 1, 1]);
        match stratified_folds(&d, 2, 1) {
            Err(Error::Stratification { class, count, .. }) => {
                assert_eq!(class, 0);
                assert_eq!(count, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let d = toy(vec![0, -1, 1]);
        let json = serde_json::to_string(&d.to_json()).unwrap();
        let back = Dataset::from_json(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
