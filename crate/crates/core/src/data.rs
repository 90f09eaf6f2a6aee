//! Phenotype/genotype containers, column standardization, covariate
//! residualization and on-demand interaction columns.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, Axis, ShapeBuilder};

use crate::error::{Error, Result};

/// Raw trait and dosage data for one cohort.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Array1<f64>,
    /// n × p dosage matrix, stored column-major.
    pub x: Array2<f64>,
    pub snp_ids: Vec<String>,
    pub sample_ids: Option<Vec<String>>,
    pub covariates: Option<Array2<f64>>,
}

impl Dataset {
    pub fn new(y: Array1<f64>, x: Array2<f64>, snp_ids: Vec<String>) -> Result<Self> {
        let ds = Dataset { y, x: to_column_major(x), snp_ids, sample_ids: None, covariates: None };
        ds.validate()?;
        Ok(ds)
    }

    /// Dataset with SNP ids `snp1..snpP`.
    pub fn with_default_ids(y: Array1<f64>, x: Array2<f64>) -> Result<Self> {
        let ids = (1..=x.ncols()).map(|j| format!("snp{j}")).collect();
        Self::new(y, x, ids)
    }

    pub fn with_covariates(mut self, covariates: Array2<f64>) -> Result<Self> {
        if covariates.nrows() != self.n() {
            return Err(Error::SampleMismatch(format!(
                "{} covariate rows for {} samples",
                covariates.nrows(),
                self.n()
            )));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("covariates"));
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn with_sample_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n() {
            return Err(Error::SampleMismatch(format!("{} sample ids for {} samples", ids.len(), self.n())));
        }
        self.sample_ids = Some(ids);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n < 2 || self.x.ncols() == 0 {
            return Err(Error::EmptyData);
        }
        if self.x.nrows() != n {
            return Err(Error::SampleMismatch(format!("{} genotype rows for {} phenotypes", self.x.nrows(), n)));
        }
        if self.snp_ids.len() != self.x.ncols() {
            return Err(Error::Invalid(format!(
                "{} SNP ids for {} genotype columns",
                self.snp_ids.len(),
                self.x.ncols()
            )));
        }
        let mut seen = HashSet::with_capacity(self.snp_ids.len());
        for id in &self.snp_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("phenotype"));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("genotype"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `idx` (in the given order) as a new dataset.
    pub fn subset_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            y: self.y.select(Axis(0), idx),
            x: to_column_major(self.x.select(Axis(0), idx)),
            snp_ids: self.snp_ids.clone(),
            sample_ids: self.sample_ids.as_ref().map(|s| idx.iter().map(|&i| s[i].clone()).collect()),
            covariates: self.covariates.as_ref().map(|c| c.select(Axis(0), idx)),
        }
    }

    /// Stack cohorts sharing one SNP panel into a single pooled dataset.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or(Error::EmptyData)?;
        for d in parts {
            if d.snp_ids != first.snp_ids {
                return Err(Error::Invalid("cohorts do not share an identical SNP panel".into()));
            }
        }
        let ys: Vec<_> = parts.iter().map(|d| d.y.view()).collect();
        let xs: Vec<_> = parts.iter().map(|d| d.x.view()).collect();
        let y = ndarray::concatenate(Axis(0), &ys).map_err(|e| Error::Invalid(e.to_string()))?;
        let x = ndarray::concatenate(Axis(0), &xs).map_err(|e| Error::Invalid(e.to_string()))?;
        Dataset::new(y, x, first.snp_ids.clone())
    }
}

pub(crate) fn to_column_major(x: Array2<f64>) -> Array2<f64> {
    if x.t().is_standard_layout() {
        return x;
    }
    let (n, p) = x.dim();
    let mut out = Array2::zeros((n, p).f());
    out.assign(&x);
    out
}

/// Centered, unit-norm response and design with the statistics needed to
/// map coefficients back to the dosage scale.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    pub y_std: Array1<f64>,
    /// n × p, column-major, every column mean 0 and norm 1.
    pub x_std: Array2<f64>,
    pub column_means: Array1<f64>,
    pub column_norms: Array1<f64>,
    pub y_mean: f64,
    pub y_norm: f64,
    pub snp_ids: Vec<String>,
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.y_std.len()
    }

    pub fn p(&self) -> usize {
        self.x_std.ncols()
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        self.x_std.column(j).to_slice().expect("design is column-major")
    }

    pub fn y(&self) -> &[f64] {
        self.y_std.as_slice().expect("contiguous response")
    }

    /// Replace the response without re-standardizing it.
    pub fn with_response(mut self, y: Array1<f64>) -> Self {
        assert_eq!(y.len(), self.n());
        self.y_std = y;
        self
    }

    /// The standardized values as a plain dataset (for re-standardization).
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            y: self.y_std.clone(),
            x: self.x_std.clone(),
            snp_ids: self.snp_ids.clone(),
            sample_ids: None,
            covariates: None,
        }
    }
}

fn center_and_scale(values: ArrayView1<f64>) -> Option<(Vec<f64>, f64, f64)> {
    let n = values.len() as f64;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = values.sum() / n;
    let mut c: Vec<f64> = values.iter().map(|v| v - mean).collect();
    // second pass removes the rounding left by the first
    let drift = c.iter().sum::<f64>() / n;
    c.iter_mut().for_each(|v| *v -= drift);
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-10 * (1.0 + scale)) {
        return None;
    }
    c.iter_mut().for_each(|v| *v /= norm);
    Some((c, mean + drift, norm))
}

pub fn standardize(ds: &Dataset) -> Result<StandardizedDesign> {
    let (n, p) = ds.x.dim();
    if n < 2 || p == 0 || ds.y.len() != n {
        return Err(Error::EmptyData);
    }
    let (y_std, y_mean, y_norm) = center_and_scale(ds.y.view()).ok_or(Error::ConstantResponse)?;
    let mut data = Vec::with_capacity(n * p);
    let mut means = Array1::zeros(p);
    let mut norms = Array1::zeros(p);
    for j in 0..p {
        let (col, mean, norm) = center_and_scale(ds.x.column(j)).ok_or(Error::ConstantColumn(j))?;
        data.extend_from_slice(&col);
        means[j] = mean;
        norms[j] = norm;
    }
    let x_std = Array2::from_shape_vec((n, p).f(), data).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(StandardizedDesign {
        y_std: Array1::from(y_std),
        x_std,
        column_means: means,
        column_norms: norms,
        y_mean,
        y_norm,
        snp_ids: ds.snp_ids.clone(),
    })
}

/// Elementwise product of standardized columns `j` and `k`. The product is
/// neither re-centered nor re-normalized.
pub fn interaction_column(sd: &StandardizedDesign, j: usize, k: usize) -> Result<Array1<f64>> {
    let p = sd.p();
    for &i in &[j, k] {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, p });
        }
    }
    if j == k {
        return Err(Error::Invalid("interaction of a SNP with itself".into()));
    }
    Ok(sd.col(j).iter().zip(sd.col(k)).map(|(a, b)| a * b).collect())
}

/// Replace `y` by its residuals from least squares on `[1, covariates]`.
pub fn residualize(ds: &Dataset) -> Result<Dataset> {
    let cov = ds.covariates.as_ref().ok_or_else(|| Error::Invalid("no covariates to adjust for".into()))?;
    let n = ds.n();
    let q = cov.ncols();
    if q + 1 >= n {
        return Err(Error::RankDeficientCovariates);
    }
    let design = DMatrix::from_fn(n, q + 1, |i, c| if c == 0 { 1.0 } else { cov[(i, c - 1)] });
    let y = nalgebra::DVector::from_iterator(n, ds.y.iter().copied());
    let resid = least_squares_residuals(&design, &y).ok_or(Error::RankDeficientCovariates)?;
    let mut out = ds.clone();
    out.y = Array1::from_iter(resid.iter().copied());
    out.covariates = None;
    Ok(out)
}

/// QR-based least-squares residuals; `None` when the design is numerically
/// rank deficient.
fn least_squares_residuals(design: &DMatrix<f64>, y: &nalgebra::DVector<f64>) -> Option<nalgebra::DVector<f64>> {
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..r.ncols()).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..r.ncols()).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag.max(1e-300)) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    let coef = r.solve_upper_triangular(&qty)?;
    Some(y - design * coef)
}

/// A main effect `Main(j)` or an interaction `Inter(j, k)` with `j < k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermId {
    Main(usize),
    Inter(usize, usize),
}

impl TermId {
    /// Canonical interaction term; panics when `j == k`.
    pub fn inter(j: usize, k: usize) -> TermId {
        assert_ne!(j, k, "self-interactions are not supported");
        if j < k {
            TermId::Inter(j, k)
        } else {
            TermId::Inter(k, j)
        }
    }

    pub fn is_interaction(&self) -> bool {
        matches!(self, TermId::Inter(..))
    }

    /// `snp_id` for main effects, `snp_id:snp_id` for interactions.
    pub fn label(&self, ids: &[String]) -> String {
        match *self {
            TermId::Main(j) => ids[j].clone(),
            TermId::Inter(j, k) => format!("{}:{}", ids[j], ids[k]),
        }
    }

    pub fn parse(label: &str, ids: &[String]) -> Result<TermId> {
        let find = |s: &str| ids.iter().position(|id| id == s).ok_or_else(|| Error::UnknownId(s.to_string()));
        match label.split_once(':') {
            None => Ok(TermId::Main(find(label)?)),
            Some((a, b)) => {
                let (j, k) = (find(a)?, find(b)?);
                if j == k {
                    return Err(Error::Invalid(format!("self-interaction `{label}`")));
                }
                Ok(TermId::inter(j, k))
            }
        }
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermId::Main(j) => write!(f, "Main({j})"),
            TermId::Inter(j, k) => write!(f, "Inter({j},{k})"),
        }
    }
}

/// Sparse coefficient map; an absent term has coefficient exactly zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientState {
    coeffs: BTreeMap<TermId, f64>,
}

impl CoefficientState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, term: TermId) -> f64 {
        self.coeffs.get(&term).copied().unwrap_or(0.0)
    }

    /// Stores `value`, or removes the term when `value == 0`.
    pub fn set(&mut self, term: TermId, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFiniteInput("coefficient"));
        }
        if value == 0.0 {
            self.coeffs.remove(&term);
        } else {
            self.coeffs.insert(term, value);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.coeffs.iter().map(|(t, v)| (*t, *v))
    }

    pub fn terms(&self) -> Vec<TermId> {
        self.coeffs.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn main_count(&self) -> usize {
        self.coeffs.keys().filter(|t| !t.is_interaction()).count()
    }

    pub fn interaction_count(&self) -> usize {
        self.coeffs.keys().filter(|t| t.is_interaction()).count()
    }
}

impl FromIterator<(TermId, f64)> for CoefficientState {
    fn from_iter<I: IntoIterator<Item = (TermId, f64)>>(iter: I) -> Self {
        let coeffs = iter.into_iter().filter(|(_, v)| *v != 0.0).collect();
        CoefficientState { coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dosages(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| rng.gen_range(0..=2) as f64)
    }

    #[test]
    fn standardizes_small_column() {
        let ds = Dataset::with_default_ids(array![1.0, 2.0, 4.0, 3.0], array![[0.0], [1.0], [2.0], [1.0]]).unwrap();
        let sd = standardize(&ds).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in sd.col(0).iter().zip([-h, 0.0, h, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((sd.column_means[0] - 1.0).abs() < 1e-15);
        assert!((sd.column_norms[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_design_is_centered_and_unit_norm() {
        let x = random_dosages(50, 10, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = Array1::from_shape_fn(50, |_| rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        for j in 0..10 {
            // direct recomputation
            let col = sd.col(j);
            let mean: f64 = col.iter().sum::<f64>() / 50.0;
            let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!(sd.y_std.sum().abs() < 1e-12);
        assert!((sd.y_std.dot(&sd.y_std).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_is_idempotent() {
        let x = random_dosages(40, 6, 9);
        let y = Array1::from_shape_fn(40, |i| (i as f64).sin());
        let once = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let twice = standardize(&once.to_dataset()).unwrap();
        for (a, b) in once.x_std.iter().zip(twice.x_std.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in once.y_std.iter().zip(twice.y_std.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = array![[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]];
        let ds = Dataset::with_default_ids(array![1.0, 2.0, 0.0], x).unwrap();
        assert!(matches!(standardize(&ds), Err(Error::ConstantColumn(1))));
        let ds = Dataset::with_default_ids(array![1.0, 1.0, 1.0], array![[0.0], [1.0], [2.0]]).unwrap();
        assert!(matches!(standardize(&ds), Err(Error::ConstantResponse)));
    }

    #[test]
    fn duplicate_ids_and_short_data_rejected() {
        let x = array![[0.0, 1.0], [1.0, 2.0]];
        let r = Dataset::new(array![1.0, 2.0], x, vec!["a".into(), "a".into()]);
        assert!(matches!(r, Err(Error::DuplicateId(_))));
        let r = Dataset::with_default_ids(array![1.0], array![[1.0]]);
        assert!(matches!(r, Err(Error::EmptyData)));
    }

    #[test]
    fn product_norm_of_independent_columns_is_one_over_n() {
        // rows are exchangeable and each column has squared norm 1, so
        // E[a_i²] = 1/n and E[Σ a_i² b_i²] = n · (1/n)² = 1/n exactly
        let n = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = rand_distr::Binomial::new(2, 0.5).unwrap();
        let x = Array2::from_shape_fn((n, 400), |_| rand_distr::Distribution::sample(&b, &mut rng) as f64);
        let y = Array1::from_shape_fn(n, |_| rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let mean: f64 = (0..200)
            .map(|q| {
                let v = interaction_column(&sd, 2 * q, 2 * q + 1).unwrap();
                v.dot(&v)
            })
            .sum::<f64>()
            / 200.0;
        assert!((n as f64 * mean - 1.0).abs() < 0.05, "n·mean = {}", n as f64 * mean);
    }

    #[test]
    fn interaction_column_is_symmetric_product() {
        let x = random_dosages(30, 4, 1);
        let y = Array1::from_shape_fn(30, |i| i as f64);
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let a = interaction_column(&sd, 1, 3).unwrap();
        let b = interaction_column(&sd, 3, 1).unwrap();
        assert_eq!(a, b);
        for i in 0..30 {
            assert_eq!(a[i], sd.col(1)[i] * sd.col(3)[i]);
        }
        assert!(matches!(interaction_column(&sd, 0, 4), Err(Error::IndexOutOfRange { index: 4, .. })));
    }

    #[test]
    fn residualize_against_self_gives_zero() {
        let y = array![1.0, 3.0, 2.0, 5.0, 4.0];
        let ds = Dataset::with_default_ids(y.clone(), array![[0.], [1.], [2.], [1.], [0.]])
            .unwrap()
            .with_covariates(y.clone().insert_axis(Axis(1)))
            .unwrap();
        let r = residualize(&ds).unwrap();
        assert!(r.y.iter().all(|v| v.abs() < 1e-12));
        assert!(r.covariates.is_none());
    }

    #[test]
    fn residualize_intercept_only_centers() {
        // a covariate identical to the intercept is rank deficient
        let y = array![1.0, 3.0, 2.0, 6.0];
        let ds = Dataset::with_default_ids(y.clone(), array![[0.], [1.], [2.], [1.]]).unwrap();
        let ds1 = ds.clone().with_covariates(Array2::ones((4, 1))).unwrap();
        assert!(matches!(residualize(&ds1), Err(Error::RankDeficientCovariates)));
        let ds0 = ds.with_covariates(Array2::zeros((4, 0))).unwrap();
        let r = residualize(&ds0).unwrap();
        for (a, b) in r.y.iter().zip(y.iter()) {
            assert!((a - (b - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn residualize_matches_normal_equations() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let age = Array1::from_shape_fn(n, |_| rng.gen_range(20.0..70.0));
        let e = Array1::from_shape_fn(n, |_| rng.gen::<f64>() - 0.5);
        let y = age.mapv(|a| 3.0 + 2.0 * a) + &e;
        let ds = Dataset::with_default_ids(y.clone(), random_dosages(n, 2, 5))
            .unwrap()
            .with_covariates(age.clone().insert_axis(Axis(1)))
            .unwrap();
        let r = residualize(&ds).unwrap();

        // hand-rolled 2x2 normal equations
        let (s1, sa, saa) = (n as f64, age.sum(), age.dot(&age));
        let (sy, say) = (y.sum(), age.dot(&y));
        let det = s1 * saa - sa * sa;
        let b0 = (saa * sy - sa * say) / det;
        let b1 = (s1 * say - sa * sy) / det;
        for i in 0..n {
            assert!((r.y[i] - (y[i] - b0 - b1 * age[i])).abs() < 1e-9);
        }
        assert!(r.y.dot(&age).abs() <= 1e-8 * n as f64);
        assert!(r.y.sum().abs() <= 1e-8 * n as f64);
    }

    #[test]
    fn term_labels_round_trip() {
        let ids: Vec<String> = ["rs1", "rs2", "rs3"].iter().map(|s| s.to_string()).collect();
        let t = TermId::inter(2, 0);
        assert_eq!(t, TermId::Inter(0, 2));
        assert_eq!(t.label(&ids), "rs1:rs3");
        assert_eq!(TermId::parse("rs3:rs1", &ids).unwrap(), t);
        assert_eq!(TermId::parse("rs2", &ids).unwrap(), TermId::Main(1));
        assert!(TermId::parse("rs9", &ids).is_err());
    }

    #[test]
    fn coefficient_state_drops_zeros() {
        let mut c = CoefficientState::new();
        c.set(TermId::Main(0), 0.5).unwrap();
        c.set(TermId::inter(1, 0), -0.2).unwrap();
        c.set(TermId::Main(0), 0.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(TermId::Inter(0, 1)), -0.2);
        assert!(c.set(TermId::Main(2), f64::NAN).is_err());
    }
}
