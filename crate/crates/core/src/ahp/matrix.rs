use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use super::{AhpError, EQ_TOL};

/// Lowest and highest judgement on the 1-9 comparison scale.
pub const SCALE_MIN: f64 = 1.0 / 9.0;
pub const SCALE_MAX: f64 = 9.0;

/// Positive reciprocal comparison matrix, dense row-major.
///
/// `a[i][j]` states how strongly label `i` dominates label `j`; the diagonal
/// is 1 and `a[j][i] = 1 / a[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
}

impl PairwiseMatrix {
    /// Builds from full rows and validates.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let n = labels.len();
        if n == 0 {
            return Err(AhpError::Empty);
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(AhpError::DimensionMismatch {
                expected: n,
                found: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(rows.len()),
            });
        }
        let m = PairwiseMatrix {
            labels,
            entries: rows.into_iter().flatten().collect(),
        };
        validate_pairwise(&m)?;
        Ok(m)
    }

    /// Builds from the strict upper triangle (row by row), mirroring
    /// reciprocals below the diagonal. `upper.len()` must be `n(n-1)/2`.
    pub fn from_upper(labels: Vec<String>, upper: &[f64]) -> Result<Self, AhpError> {
        let n = labels.len();
        if n == 0 {
            return Err(AhpError::Empty);
        }
        if upper.len() != n * (n - 1) / 2 {
            return Err(AhpError::DimensionMismatch {
                expected: n * (n - 1) / 2,
                found: upper.len(),
            });
        }
        let mut entries = vec![1.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().expect("length checked");
                entries[i * n + j] = v;
                entries[j * n + i] = 1.0 / v;
            }
        }
        let m = PairwiseMatrix { labels, entries };
        validate_pairwise(&m)?;
        Ok(m)
    }

    /// Like [`from_upper`](Self::from_upper) but additionally requires every
    /// judgement to lie on the 1-9 scale (or its reciprocal).
    pub fn from_scale(labels: Vec<String>, upper: &[f64]) -> Result<Self, AhpError> {
        if let Some(&v) = upper
            .iter()
            .find(|&&v| !(SCALE_MIN - EQ_TOL..=SCALE_MAX + EQ_TOL).contains(&v))
        {
            return Err(AhpError::OffScale { value: v });
        }
        Self::from_upper(labels, upper)
    }

    /// Perfectly consistent matrix `a[i][j] = w[i] / w[j]`.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self, AhpError> {
        let n = labels.len();
        if weights.len() != n {
            return Err(AhpError::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if let Some(&v) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(AhpError::NonPositive {
                row: 0,
                col: 0,
                value: v,
            });
        }
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                upper.push(weights[i] / weights[j]);
            }
        }
        Self::from_upper(labels, &upper)
    }

    /// All-ones matrix: every label equally important.
    pub fn uniform(labels: Vec<String>) -> Result<Self, AhpError> {
        let n = labels.len();
        Self::from_upper(labels, &vec![1.0; n * n.saturating_sub(1) / 2])
    }

    /// Builds without validation; used by tests that need invalid matrices.
    pub fn from_raw_unchecked(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        PairwiseMatrix {
            labels,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.n())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Sets `a[i][j] = value` and `a[j][i] = 1 / value`.
    pub fn set_pair(&mut self, i: usize, j: usize, value: f64) {
        let n = self.n();
        self.entries[i * n + j] = value;
        self.entries[j * n + i] = 1.0 / value;
    }

    /// Reorders rows, columns and labels so that new index `k` holds old
    /// index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, AhpError> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(AhpError::BadPermutation);
        }
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                entries.push(self.get(pi, pj));
            }
        }
        Ok(PairwiseMatrix { labels, entries })
    }
}

/// Checks diagonal, positivity and reciprocity (`a_ij * a_ji = 1 ± 1e-9`).
pub fn validate_pairwise(m: &PairwiseMatrix) -> Result<(), AhpError> {
    let n = m.n();
    if n == 0 {
        return Err(AhpError::Empty);
    }
    if m.entries.len() != n * n {
        return Err(AhpError::DimensionMismatch {
            expected: n * n,
            found: m.entries.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if !(v > 0.0 && v.is_finite()) {
                return Err(AhpError::NonPositive {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    for i in 0..n {
        let d = m.get(i, i);
        if (d - 1.0).abs() > EQ_TOL {
            return Err(AhpError::BadDiagonal { index: i, value: d });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let product = m.get(i, j) * m.get(j, i);
            if (product - 1.0).abs() > EQ_TOL {
                return Err(AhpError::NonReciprocal {
                    row: i,
                    col: j,
                    product,
                });
            }
        }
    }
    Ok(())
}

impl fmt::Display for PairwiseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0);
        write!(f, "{:width$}", "")?;
        for l in &self.labels {
            write!(f, " {l:>9}")?;
        }
        for (label, row) in self.labels.iter().zip(self.rows()) {
            write!(f, "\n{label:width$}")?;
            for v in row {
                write!(f, " {v:>9.4}")?;
            }
        }
        Ok(())
    }
}

/// A matrix entry in config files: a number or a `"p/q"` fraction string.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry(f64);

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        let k = (1.0 / v).round();
        // Only exact reciprocals, so the string parses back to the same bits.
        if v < 1.0 && 1.0 / k == v {
            s.serialize_str(&format!("1/{k}"))
        } else {
            s.serialize_f64(v)
        }
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Entry(v as f64)),
            Raw::Num(v) => Ok(Entry(v)),
            Raw::Text(s) => parse_fraction(&s)
                .map(Entry)
                .ok_or_else(|| de::Error::custom(format!("bad matrix entry `{s}`"))),
        }
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            (q != 0.0).then(|| p / q)
        }
        None => s.parse().ok(),
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    labels: Vec<String>,
    rows: Vec<Vec<Entry>>,
}

impl Serialize for PairwiseMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Rows<'a>(&'a PairwiseMatrix);
        impl Serialize for Rows<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.n()))?;
                for row in self.0.rows() {
                    let row: Vec<Entry> = row.iter().map(|&v| Entry(v)).collect();
                    seq.serialize_element(&row)?;
                }
                seq.end()
            }
        }
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PairwiseMatrix", 2)?;
        st.serialize_field("labels", &self.labels)?;
        st.serialize_field("rows", &Rows(self))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for PairwiseMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let rows = repr
            .rows
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.0).collect())
            .collect();
        PairwiseMatrix::new(repr.labels, rows).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn reference_criteria_matrix_is_valid() {
        let m = PairwiseMatrix::new(
            labels(4),
            vec![
                vec![1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 7.0],
                vec![3.0, 1.0, 1.0, 1.0 / 5.0],
                vec![3.0, 1.0, 1.0, 1.0 / 5.0],
                vec![7.0, 5.0, 5.0, 1.0],
            ],
        );
        assert!(m.is_ok());
    }

    #[test]
    fn identity_is_valid() {
        assert!(PairwiseMatrix::uniform(labels(3)).is_ok());
    }

    #[test]
    fn non_reciprocal_rejected() {
        let m = PairwiseMatrix::from_raw_unchecked(labels(2), vec![vec![1.0, 2.0], vec![3.0, 1.0]]);
        assert!(matches!(
            validate_pairwise(&m),
            Err(AhpError::NonReciprocal { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn non_positive_rejected() {
        let m = PairwiseMatrix::from_raw_unchecked(labels(2), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(validate_pairwise(&m), Err(AhpError::NonPositive { .. })));
        let m = PairwiseMatrix::from_raw_unchecked(labels(2), vec![vec![1.0, f64::NAN], vec![1.0, 1.0]]);
        assert!(matches!(validate_pairwise(&m), Err(AhpError::NonPositive { .. })));
    }

    #[test]
    fn bad_diagonal_rejected() {
        let m = PairwiseMatrix::from_raw_unchecked(labels(2), vec![vec![2.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            validate_pairwise(&m),
            Err(AhpError::BadDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn off_scale_judgement_rejected() {
        assert!(matches!(
            PairwiseMatrix::from_scale(labels(2), &[12.0]),
            Err(AhpError::OffScale { .. })
        ));
        assert!(PairwiseMatrix::from_scale(labels(2), &[1.0 / 9.0]).is_ok());
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = PairwiseMatrix::new(labels(2), vec![vec![1.0, 2.0], vec![0.5]]).unwrap_err();
        assert!(matches!(err, AhpError::DimensionMismatch { .. }));
    }

    #[test]
    fn toml_accepts_fractions() {
        let text = r#"
labels = ["a", "b", "c"]
rows = [[1, "1/3", 5], [3, 1, 7], ["1/5", "1/7", 1]]
"#;
        let m: PairwiseMatrix = toml::from_str(text).unwrap();
        assert_eq!(m.get(0, 1), 1.0 / 3.0);
        assert_eq!(m.get(2, 0), 0.2);
        let back: PairwiseMatrix = toml::from_str(&toml::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn toml_rejects_invalid_matrix() {
        let text = r#"
labels = ["a", "b"]
rows = [[1, 2], [3, 1]]
"#;
        assert!(toml::from_str::<PairwiseMatrix>(text).is_err());
    }

    #[test]
    fn permutation_moves_labels_and_entries() {
        let m = PairwiseMatrix::from_upper(labels(3), &[2.0, 4.0, 2.0]).unwrap();
        let p = m.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.labels(), &["c2", "c0", "c1"]);
        assert_eq!(p.get(1, 0), m.get(0, 2));
        assert!(matches!(m.permuted(&[0, 0, 1]), Err(AhpError::BadPermutation)));
    }
}
