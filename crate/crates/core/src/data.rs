//! Datasets, CSV ingestion, standardization, quadratic expansion and fold
//! assignment.
//!
//! A [`Dataset`] keeps the roles of its columns apart: the outcome `y`, the
//! focus covariate `x0` whose coefficient is pinned to `α = ±1`, the remaining
//! focus covariates `x̃` (always in the rule) and the auxiliary covariates `z`
//! (subject to selection). An all-ones intercept, when present, lives in `x̃`
//! and is flagged so that standardization and expansion leave it alone.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::Matrix;

pub const INTERCEPT_NAME: &str = "Intercept";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<u8>,
    x0: Vec<f64>,
    x_tilde: Matrix,
    z: Matrix,
    outcome_name: String,
    x0_name: String,
    focus_names: Vec<String>,
    aux_names: Vec<String>,
    intercept: Option<usize>,
}

impl Dataset {
    /// Build a dataset with generated column names (`x0`, `xt1..`, `z1..`).
    pub fn new(y: Vec<u8>, x0: Vec<f64>, x_tilde: Matrix, z: Matrix) -> Result<Self> {
        let focus_names = (1..=x_tilde.cols()).map(|j| format!("xt{j}")).collect();
        let aux_names = (1..=z.cols()).map(|j| format!("z{j}")).collect();
        Self::with_names(
            y,
            x0,
            x_tilde,
            z,
            "y".into(),
            "x0".into(),
            focus_names,
            aux_names,
            None,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_names(
        y: Vec<u8>,
        x0: Vec<f64>,
        x_tilde: Matrix,
        z: Matrix,
        outcome_name: String,
        x0_name: String,
        focus_names: Vec<String>,
        aux_names: Vec<String>,
        intercept: Option<usize>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::arg("dataset needs at least one observation"));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::arg(format!("outcome at row {i} is not 0/1")));
        }
        if x0.len() != n || x_tilde.rows() != n || z.rows() != n {
            return Err(Error::arg("row counts of y, x0, x_tilde and z differ"));
        }
        if focus_names.len() != x_tilde.cols() || aux_names.len() != z.cols() {
            return Err(Error::arg("column name count does not match matrix width"));
        }
        if let Some(c) = intercept {
            if c >= x_tilde.cols() {
                return Err(Error::arg("intercept index out of range"));
            }
        }
        let mut seen = HashSet::new();
        for name in std::iter::once(&outcome_name)
            .chain(std::iter::once(&x0_name))
            .chain(&focus_names)
            .chain(&aux_names)
        {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{name}`")));
            }
        }
        Ok(Self {
            y,
            x0,
            x_tilde,
            z,
            outcome_name,
            x0_name,
            focus_names,
            aux_names,
            intercept,
        })
    }

    /// Prepend an all-ones intercept column to `x̃`.
    pub fn with_intercept(self) -> Result<Self> {
        if self.intercept.is_some() {
            return Ok(self);
        }
        let n = self.n();
        let mut cols = vec![vec![1.0; n]];
        cols.extend((0..self.k()).map(|j| self.x_tilde.column(j)));
        let mut names = vec![INTERCEPT_NAME.to_string()];
        names.extend(self.focus_names.iter().cloned());
        Self::with_names(
            self.y,
            self.x0,
            Matrix::from_columns(n, &cols)?,
            self.z,
            self.outcome_name,
            self.x0_name,
            names,
            self.aux_names,
            Some(0),
        )
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.x_tilde.cols()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.z.cols()
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn x_tilde(&self) -> &Matrix {
        &self.x_tilde
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn x0_name(&self) -> &str {
        &self.x0_name
    }

    pub fn focus_names(&self) -> &[String] {
        &self.focus_names
    }

    pub fn aux_names(&self) -> &[String] {
        &self.aux_names
    }

    pub fn intercept_index(&self) -> Option<usize> {
        self.intercept
    }

    /// Names of the `k + p` free coefficients, focus first.
    pub fn coefficient_names(&self) -> Vec<String> {
        self.focus_names.iter().chain(&self.aux_names).cloned().collect()
    }

    /// Row `i` of `w̃ = (x̃, z)` written into `out` (length `k + p`).
    pub fn w_row_into(&self, i: usize, out: &mut [f64]) {
        let k = self.k();
        out[..k].copy_from_slice(self.x_tilde.row(i));
        out[k..].copy_from_slice(self.z.row(i));
    }

    /// The `n × (k + p)` matrix `w̃ = (x̃, z)`.
    pub fn w_tilde(&self) -> Matrix {
        let (n, k, p) = (self.n(), self.k(), self.p());
        let mut data = Vec::with_capacity(n * (k + p));
        for i in 0..n {
            data.extend_from_slice(self.x_tilde.row(i));
            data.extend_from_slice(self.z.row(i));
        }
        Matrix::from_row_major(n, k + p, data).expect("consistent dimensions")
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x0: rows.iter().map(|&i| self.x0[i]).collect(),
            x_tilde: self.x_tilde.select_rows(rows),
            z: self.z.select_rows(rows),
            outcome_name: self.outcome_name.clone(),
            x0_name: self.x0_name.clone(),
            focus_names: self.focus_names.clone(),
            aux_names: self.aux_names.clone(),
            intercept: self.intercept,
        }
    }

    /// Names of covariate columns that are constant (the intercept excluded).
    pub fn constant_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        if is_constant(&self.x0) {
            out.push(self.x0_name.clone());
        }
        for j in 0..self.k() {
            if Some(j) != self.intercept && is_constant(&self.x_tilde.column(j)) {
                out.push(self.focus_names[j].clone());
            }
        }
        for j in 0..self.p() {
            if is_constant(&self.z.column(j)) {
                out.push(self.aux_names[j].clone());
            }
        }
        out
    }

    /// Write the dataset as CSV (header: outcome, x0, non-intercept focus, auxiliary).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let focus: Vec<usize> = (0..self.k()).filter(|&j| Some(j) != self.intercept).collect();
        let mut header = vec![self.outcome_name.clone(), self.x0_name.clone()];
        header.extend(focus.iter().map(|&j| self.focus_names[j].clone()));
        header.extend(self.aux_names.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![self.y[i].to_string(), fmt_f64(self.x0[i])];
            rec.extend(focus.iter().map(|&j| fmt_f64(self.x_tilde[(i, j)])));
            rec.extend((0..self.p()).map(|j| fmt_f64(self.z[(i, j)])));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// The schema that reloads what [`write_csv`](Self::write_csv) produced.
    pub fn schema(&self) -> Schema {
        Schema {
            outcome: self.outcome_name.clone(),
            x0: self.x0_name.clone(),
            focus: (0..self.k())
                .filter(|&j| Some(j) != self.intercept)
                .map(|j| self.focus_names[j].clone())
                .collect(),
            auxiliary: self.aux_names.clone(),
            intercept: self.intercept.is_some(),
        }
    }
}

fn fmt_f64(v: f64) -> String {
    // `Display` for f64 is the shortest representation that round-trips.
    format!("{v}")
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schema {
    pub outcome: String,
    pub x0: String,
    pub focus: Vec<String>,
    pub auxiliary: Vec<String>,
    /// Add an all-ones intercept column as the first focus covariate.
    pub intercept: bool,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let locate = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let y_col = locate(&schema.outcome)?;
    let x0_col = locate(&schema.x0)?;
    let focus_cols = schema.focus.iter().map(|c| locate(c)).collect::<Result<Vec<_>>>()?;
    let aux_cols = schema
        .auxiliary
        .iter()
        .map(|c| locate(c))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut x0 = Vec::new();
    let mut focus: Vec<Vec<f64>> = vec![Vec::new(); focus_cols.len()];
    let mut aux: Vec<Vec<f64>> = vec![Vec::new(); aux_cols.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).ok_or_else(|| Error::Parse {
                row,
                column: name.to_string(),
                message: "missing cell".into(),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("`{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: name.to_string(),
                    message: format!("`{raw}` is not finite"),
                });
            }
            Ok(v)
        };
        let yv = cell(y_col, &schema.outcome)?;
        let yb = if yv == 0.0 {
            0
        } else if yv == 1.0 {
            1
        } else {
            return Err(Error::Parse {
                row,
                column: schema.outcome.clone(),
                message: format!("outcome must be 0 or 1, found {yv}"),
            });
        };
        y.push(yb);
        x0.push(cell(x0_col, &schema.x0)?);
        for (buf, (&c, name)) in focus.iter_mut().zip(focus_cols.iter().zip(&schema.focus)) {
            buf.push(cell(c, name)?);
        }
        for (buf, (&c, name)) in aux.iter_mut().zip(aux_cols.iter().zip(&schema.auxiliary)) {
            buf.push(cell(c, name)?);
        }
    }
    let n = y.len();
    let ds = Dataset::with_names(
        y,
        x0,
        Matrix::from_columns(n, &focus)?,
        Matrix::from_columns(n, &aux)?,
        schema.outcome.clone(),
        schema.x0.clone(),
        schema.focus.clone(),
        schema.auxiliary.clone(),
        None,
    )?;
    if schema.intercept {
        ds.with_intercept()
    } else {
        Ok(ds)
    }
}

/// Rescale the named covariate columns to sample mean 0 and sample variance 1
/// (denominator `n − 1`). The intercept column is never touched.
pub fn standardize(d: &Dataset, columns: &[String]) -> Result<Dataset> {
    let mut out = d.clone();
    for name in columns {
        if name == &d.x0_name {
            out.x0 = standardized(&d.x0, name)?;
        } else if let Some(j) = d.focus_names.iter().position(|c| c == name) {
            if Some(j) == d.intercept {
                continue;
            }
            let col = standardized(&d.x_tilde.column(j), name)?;
            for (i, v) in col.into_iter().enumerate() {
                out.x_tilde[(i, j)] = v;
            }
        } else if let Some(j) = d.aux_names.iter().position(|c| c == name) {
            let col = standardized(&d.z.column(j), name)?;
            for (i, v) in col.into_iter().enumerate() {
                out.z[(i, j)] = v;
            }
        } else {
            return Err(Error::Schema(format!("no covariate named `{name}`")));
        }
    }
    Ok(out)
}

/// Standardize `x0`, every non-intercept focus column and every auxiliary column.
pub fn standardize_all(d: &Dataset) -> Result<Dataset> {
    let mut names = vec![d.x0_name.clone()];
    names.extend(
        (0..d.k())
            .filter(|&j| Some(j) != d.intercept)
            .map(|j| d.focus_names[j].clone()),
    );
    names.extend(d.aux_names.iter().cloned());
    standardize(d, &names)
}

fn standardized(v: &[f64], name: &str) -> Result<Vec<f64>> {
    let n = v.len();
    if n < 2 {
        return Err(Error::DegenerateColumn(name.to_string()));
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    if !(var > 0.0) || is_constant(v) {
        return Err(Error::DegenerateColumn(name.to_string()));
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - mean) / sd).collect())
}

/// Index pairs of the second-order terms of `m` base columns: cross products
/// ordered by index distance (adjacent pairs first), then squares.
///
/// For three columns `(a, b, c)` this gives `a·b, b·c, a·c, a², b², c²`.
pub fn quadratic_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m * (m + 1) / 2);
    for gap in 1..m {
        for i in 0..m - gap {
            pairs.push((i, i + gap));
        }
    }
    pairs.extend((0..m).map(|i| (i, i)));
    pairs
}

/// Replace the auxiliary block by the named base columns followed by all their
/// pairwise products and squares.
pub fn quadratic_expand(d: &Dataset, base: &[String]) -> Result<Dataset> {
    if base.is_empty() {
        return Err(Error::arg("quadratic expansion needs at least one base column"));
    }
    let mut idx = Vec::with_capacity(base.len());
    for name in base {
        let j = d
            .aux_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("`{name}` is not an auxiliary column")))?;
        if idx.contains(&j) {
            return Err(Error::Schema(format!("base column `{name}` listed twice")));
        }
        idx.push(j);
    }
    let n = d.n();
    let cols: Vec<Vec<f64>> = idx.iter().map(|&j| d.z.column(j)).collect();
    let mut new_cols = cols.clone();
    let mut names: Vec<String> = base.to_vec();
    for (a, b) in quadratic_pairs(base.len()) {
        new_cols.push(cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).collect());
        names.push(format!("{}*{}", base[a], base[b]));
    }
    Dataset::with_names(
        d.y.clone(),
        d.x0.clone(),
        d.x_tilde.clone(),
        Matrix::from_columns(n, &new_cols)?,
        d.outcome_name.clone(),
        d.x0_name.clone(),
        d.focus_names.clone(),
        names,
        d.intercept,
    )
}

/// How standardization and quadratic expansion are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PrepOrder {
    /// Standardize, expand, then standardize the new columns.
    #[default]
    StandardizeFirst,
    /// Expand raw columns, then standardize everything.
    ExpandFirst,
}

/// Optional standardization and quadratic expansion of the auxiliary block.
pub fn prepare(
    d: &Dataset,
    standardize_cols: bool,
    expand: Option<&[String]>,
    order: PrepOrder,
) -> Result<Dataset> {
    match (standardize_cols, expand) {
        (false, None) => Ok(d.clone()),
        (true, None) => standardize_all(d),
        (false, Some(base)) => quadratic_expand(d, base),
        (true, Some(base)) => match order {
            PrepOrder::StandardizeFirst => {
                let s = standardize_all(d)?;
                let e = quadratic_expand(&s, base)?;
                let new: Vec<String> = e.aux_names[base.len()..].to_vec();
                standardize(&e, &new)
            }
            PrepOrder::ExpandFirst => standardize_all(&quadratic_expand(d, base)?),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_index: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index.len())
            .filter(|&i| self.fold_index[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index.len())
            .filter(|&i| self.fold_index[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.fold_index {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Balanced random fold assignment: a seeded permutation dealt round-robin.
pub fn split_folds(n: usize, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 {
        return Err(Error::arg("need at least two folds"));
    }
    if n < folds {
        return Err(Error::arg(format!("cannot split {n} rows into {folds} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_index = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_index[i] = pos % folds;
    }
    Ok(FoldAssignment {
        fold_index,
        folds,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CSV3: &str = "y,dcost,cars\n1,0.5,2\n0,-1.25,0\n1,2,1\n";

    fn schema3() -> Schema {
        Schema {
            outcome: "y".into(),
            x0: "dcost".into(),
            focus: vec![],
            auxiliary: vec!["cars".into()],
            intercept: false,
        }
    }

    #[test]
    fn loads_three_row_file() {
        let d = read_csv(CSV3.as_bytes(), &schema3()).unwrap();
        assert_eq!((d.n(), d.k(), d.p()), (3, 0, 1));
        assert_eq!(d.y(), &[1, 0, 1]);
        assert_eq!(d.x0(), &[0.5, -1.25, 2.0]);
        assert_eq!(d.z().column(0), vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn outcome_outside_binary_is_rejected_with_location() {
        let csv = "y,dcost,cars\n1,0.5,2\n2,-1.25,0\n";
        match read_csv(csv.as_bytes(), &schema3()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let csv = "y,dcost,cars\n1,abc,2\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &schema3()),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let mut s = schema3();
        s.auxiliary.push("dovtt".into());
        assert!(matches!(read_csv(CSV3.as_bytes(), &s), Err(Error::Schema(_))));
    }

    #[test]
    fn intercept_flag_adds_ones_column() {
        let mut s = schema3();
        s.intercept = true;
        let d = read_csv(CSV3.as_bytes(), &s).unwrap();
        assert_eq!(d.k(), 1);
        assert_eq!(d.intercept_index(), Some(0));
        assert_eq!(d.x_tilde().column(0), vec![1.0; 3]);
    }

    #[test]
    fn standardize_one_two_three() {
        let d = Dataset::new(
            vec![0, 1, 0],
            vec![1.0, 2.0, 3.0],
            Matrix::zeros(3, 0),
            Matrix::zeros(3, 0),
        )
        .unwrap();
        let s = standardize(&d, &["x0".to_string()]).unwrap();
        assert_eq!(s.x0(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let d = Dataset::new(
            vec![0, 1, 0],
            vec![5.0, 5.0, 5.0],
            Matrix::zeros(3, 0),
            Matrix::zeros(3, 0),
        )
        .unwrap();
        match standardize(&d, &["x0".to_string()]) {
            Err(Error::DegenerateColumn(name)) => assert_eq!(name, "x0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn intercept_is_never_standardized() {
        let d = read_csv(CSV3.as_bytes(), &Schema { intercept: true, ..schema3() }).unwrap();
        let s = standardize_all(&d).unwrap();
        assert_eq!(s.x_tilde().column(0), vec![1.0; 3]);
    }

    #[test]
    fn quadratic_single_column() {
        let d = Dataset::new(
            vec![0, 1],
            vec![1.0, 2.0],
            Matrix::zeros(2, 0),
            Matrix::from_columns(2, &[vec![3.0, -2.0]]).unwrap(),
        )
        .unwrap();
        let e = quadratic_expand(&d, &["z1".to_string()]).unwrap();
        assert_eq!(e.p(), 2);
        assert_eq!(e.z().column(1), vec![9.0, 4.0]);
        assert_eq!(e.aux_names(), &["z1".to_string(), "z1*z1".to_string()]);
    }

    #[test]
    fn quadratic_two_columns_row_values() {
        let d = Dataset::new(
            vec![1],
            vec![0.0],
            Matrix::zeros(1, 0),
            Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap(),
        )
        .unwrap();
        let e = quadratic_expand(&d, &["z1".to_string(), "z2".to_string()]).unwrap();
        assert_eq!(e.z().row(0), &[2.0, 3.0, 6.0, 4.0, 9.0]);
    }

    #[test]
    fn quadratic_three_columns_follow_reference_layout() {
        let names: Vec<String> = ["CARS", "DOVTT", "DIVTT"].iter().map(|s| s.to_string()).collect();
        let d = Dataset::with_names(
            vec![1],
            vec![0.0],
            Matrix::zeros(1, 0),
            Matrix::from_rows(&[vec![2.0, 3.0, 5.0]]).unwrap(),
            "y".into(),
            "DCOST".into(),
            vec![],
            names.clone(),
            None,
        )
        .unwrap();
        let e = quadratic_expand(&d, &names).unwrap();
        let expected = [
            "CARS",
            "DOVTT",
            "DIVTT",
            "CARS*DOVTT",
            "DOVTT*DIVTT",
            "CARS*DIVTT",
            "CARS*CARS",
            "DOVTT*DOVTT",
            "DIVTT*DIVTT",
        ];
        assert_eq!(e.aux_names(), expected.map(String::from).as_slice());
        assert_eq!(e.z().row(0), &[2.0, 3.0, 5.0, 6.0, 15.0, 10.0, 4.0, 9.0, 25.0]);
    }

    #[test]
    fn folds_ten_by_five() {
        let f = split_folds(10, 5, 3).unwrap();
        assert_eq!(f.fold_sizes(), vec![2; 5]);
        assert_eq!(f, split_folds(10, 5, 3).unwrap());
    }

    #[test]
    fn folds_842_by_five() {
        let mut sizes = split_folds(842, 5, 9).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![168, 168, 168, 169, 169]);
    }

    #[test]
    fn folds_need_enough_rows() {
        assert!(matches!(split_folds(3, 5, 0), Err(Error::Argument(_))));
        assert!(matches!(split_folds(3, 1, 0), Err(Error::Argument(_))));
    }

    fn random_dataset(n: usize, p: usize, vals: &[f64]) -> Dataset {
        let y: Vec<u8> = (0..n).map(|i| (vals[i % vals.len()] > 0.0) as u8).collect();
        let x0: Vec<f64> = (0..n).map(|i| vals[(i * 7 + 1) % vals.len()]).collect();
        let z = Matrix::from_row_major(
            n,
            p,
            (0..n * p).map(|i| vals[(i * 3 + 2) % vals.len()] * (1.0 + i as f64)).collect(),
        )
        .unwrap();
        Dataset::new(y, x0, Matrix::zeros(n, 0), z).unwrap()
    }

    proptest! {
        #[test]
        fn csv_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 8..40), p in 0usize..4) {
            let d = random_dataset(vals.len(), p, &vals);
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            let back = read_csv(buf.as_slice(), &d.schema()).unwrap();
            prop_assert_eq!(back, d);
        }

        #[test]
        fn standardized_moments(vals in prop::collection::vec(-1e3f64..1e3, 3..60)) {
            prop_assume!(!is_constant(&vals));
            let s = standardized(&vals, "v").unwrap();
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!((var - 1.0).abs() < 1e-12);
            let again = standardized(&s, "v").unwrap();
            for (a, b) in again.iter().zip(&s) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn folds_partition_rows(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let f = split_folds(n, k, seed).unwrap();
            let sizes = f.fold_sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = (0..k).flat_map(|j| f.test_indices(j)).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn expansion_preserves_focus_block(vals in prop::collection::vec(-10f64..10.0, 6..30)) {
            let d = random_dataset(vals.len(), 2, &vals);
            let e = quadratic_expand(&d, &d.aux_names().to_vec()).unwrap();
            prop_assert_eq!(e.y(), d.y());
            prop_assert_eq!(e.x0(), d.x0());
            prop_assert_eq!(e.x_tilde(), d.x_tilde());
        }
    }
}
