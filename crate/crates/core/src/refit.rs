//! Unpenalized refits of selected terms and split-sample Z scores.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::data::{standardize, Dataset, StandardizedDesign, TermId};
use crate::error::{Error, Result};
use crate::network::WeightMatrix;
use crate::solver::SolverConfig;
use crate::tuning::{lambda1_for_target, TuneSpec};

/// Relative size below which a diagonal entry of `R` marks a dependent column.
const RANK_TOL: f64 = 1e-10;
/// Smallest p-value carried into the inverse-normal map, keeping Z finite.
const P_FLOOR: f64 = 1e-300;

/// OLS refit of a set of terms (with intercept).
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub terms: Vec<TermId>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    /// 1-based rank of each term by descending `|t|`.
    pub rank: Vec<usize>,
    pub intercept: f64,
    /// Residual degrees of freedom `n − m − 1`.
    pub df: usize,
    pub rss: f64,
}

impl FitReport {
    /// Two-sided p-values from the t distribution with `df` degrees of freedom.
    pub fn p_values(&self) -> Vec<f64> {
        let dist = StudentsT::new(0.0, 1.0, self.df as f64).expect("df ≥ 1");
        self.t.iter().map(|t| if t.is_nan() { 1.0 } else { (2.0 * dist.sf(t.abs())).min(1.0) }).collect()
    }
}

fn abs_t(t: f64) -> f64 {
    if t.is_nan() {
        0.0
    } else {
        t.abs()
    }
}

/// Positions ordered by descending `|t|`, ties by ascending term.
fn order_by_t(terms: &[TermId], t: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..terms.len()).collect();
    idx.sort_by(|&a, &b| abs_t(t[b]).total_cmp(&abs_t(t[a])).then(terms[a].cmp(&terms[b])));
    idx
}

/// Terms by descending `|t|`, ties by ascending term index.
pub fn rank_terms(report: &FitReport) -> Vec<TermId> {
    order_by_t(&report.terms, &report.t).into_iter().map(|i| report.terms[i]).collect()
}

/// Least squares of `y` on `[1, columns]`.
fn ols_core(y: &[f64], columns: &[Vec<f64>], terms: &[TermId]) -> Result<FitReport> {
    let n = y.len();
    let m = terms.len();
    if m + 1 >= n {
        return Err(Error::TooManyTerms { terms: m, n });
    }
    let x = DMatrix::from_fn(n, m + 1, |i, c| if c == 0 { 1.0 } else { columns[c - 1][i] });
    let qr = x.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..=m).map(|i| r[(i, i)].abs()).collect();
    let scale = diag.iter().cloned().fold(0.0, f64::max);
    let dependent: Vec<TermId> = (1..=m).filter(|&i| diag[i] <= RANK_TOL * scale).map(|i| terms[i - 1]).collect();
    if !dependent.is_empty() || diag[0] <= RANK_TOL * scale {
        return Err(Error::RankDeficient(dependent));
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = r.solve_upper_triangular(&qty).ok_or_else(|| Error::RankDeficient(terms.to_vec()))?;
    let fitted = &x * &coef;
    let rss: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let df = n - m - 1;
    let sigma2 = rss / df as f64;
    let rinv = r.solve_upper_triangular(&DMatrix::identity(m + 1, m + 1)).ok_or_else(|| Error::RankDeficient(terms.to_vec()))?;
    let beta: Vec<f64> = (1..=m).map(|i| coef[i]).collect();
    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ, so var(β_i) = σ² Σ_l (R⁻¹)_il²
    let se: Vec<f64> = (1..=m).map(|i| (sigma2 * rinv.row(i).iter().map(|v| v * v).sum::<f64>()).sqrt()).collect();
    let t: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let mut rank = vec![0; m];
    for (pos, i) in order_by_t(terms, &t).into_iter().enumerate() {
        rank[i] = pos + 1;
    }
    Ok(FitReport { terms: terms.to_vec(), beta, se, t, rank, intercept: coef[0], df, rss })
}

fn term_column(col: impl Fn(usize) -> Vec<f64>, term: TermId) -> Vec<f64> {
    match term {
        TermId::Main(j) => col(j),
        TermId::Inter(j, k) => col(j).iter().zip(col(k)).map(|(a, b)| a * b).collect(),
    }
}

fn check_terms(terms: &[TermId], p: usize) -> Result<()> {
    for t in terms {
        let hi = match *t {
            TermId::Main(j) => j,
            TermId::Inter(j, k) => j.max(k),
        };
        if hi >= p {
            return Err(Error::IndexOutOfRange { index: hi, p });
        }
    }
    Ok(())
}

/// Unpenalized least squares of the standardized trait on the standardized
/// main-effect columns and products named by `terms`, plus an intercept.
pub fn ols_refit(sd: &StandardizedDesign, terms: &[TermId]) -> Result<FitReport> {
    check_terms(terms, sd.p())?;
    let cols: Vec<Vec<f64>> = terms.iter().map(|&t| term_column(|j| sd.col(j).to_vec(), t)).collect();
    ols_core(sd.y(), &cols, terms)
}

/// Refit on raw data, standardizing only the columns the terms use.
pub fn refit_dataset(ds: &Dataset, terms: &[TermId]) -> Result<FitReport> {
    check_terms(terms, ds.p())?;
    let n = ds.n() as f64;
    let standardized = |v: Vec<f64>| -> Option<Vec<f64>> {
        let mean = v.iter().sum::<f64>() / n;
        let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        let max = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        (norm > 1e-10 * (1.0 + max)).then(|| centered.into_iter().map(|x| x / norm).collect())
    };
    let mut cache: BTreeMap<usize, Option<Vec<f64>>> = BTreeMap::new();
    let mut constant = Vec::new();
    for t in terms {
        let snps = match *t {
            TermId::Main(j) => vec![j],
            TermId::Inter(j, k) => vec![j, k],
        };
        for j in snps {
            let col = cache.entry(j).or_insert_with(|| standardized(ds.x.column(j).to_vec()));
            if col.is_none() {
                constant.push(*t);
            }
        }
    }
    if !constant.is_empty() {
        constant.dedup();
        return Err(Error::RankDeficient(constant));
    }
    let y = standardized(ds.y.to_vec()).ok_or(Error::ConstantResponse)?;
    let cols: Vec<Vec<f64>> = terms.iter().map(|&t| term_column(|j| cache[&j].clone().expect("checked"), t)).collect();
    ols_core(&y, &cols, terms)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Signed Z with two-sided p-value `p`: `sign · Φ⁻¹(1 − p/2)`.
pub fn z_from_p(p: f64, sign: f64) -> f64 {
    let p = p.clamp(P_FLOOR, 1.0);
    let z = -standard_normal().inverse_cdf(p / 2.0);
    if z == 0.0 {
        0.0
    } else if sign < 0.0 {
        -z
    } else {
        z
    }
}

/// Two-sided p-value of `z`.
pub fn p_from_z(z: f64) -> f64 {
    (2.0 * standard_normal().sf(z.abs())).min(1.0)
}

/// `min(1, p · m)`.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m.max(1) as f64).min(1.0)
}

/// Bonferroni round trip on a Z vector: two-sided p, multiplied by the
/// number of nonzero entries, back to a signed Z.
pub fn bonferroni_z(z: &[f64]) -> Vec<f64> {
    let m = z.iter().filter(|v| **v != 0.0).count();
    z.iter().map(|&v| if v == 0.0 { 0.0 } else { z_from_p(bonferroni(p_from_z(v), m), v) }).collect()
}

/// Terms selected on one dataset.
#[derive(Debug, Clone)]
pub struct Selection {
    pub terms: Vec<TermId>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub main_count: usize,
}

/// Tune to the spec on `ds` and return the nonzero terms.
pub fn select_terms(ds: &Dataset, w: &WeightMatrix, spec: &TuneSpec, cfg: &SolverConfig) -> Result<Selection> {
    let sd = standardize(ds)?;
    let c = spec.resolve_c(&sd, w)?;
    let tuned = lambda1_for_target(&sd, w, spec, c, cfg)?;
    Ok(Selection {
        terms: tuned.solution.coeffs.terms(),
        lambda1: tuned.lambda1,
        lambda2: tuned.lambda2,
        main_count: tuned.solution.main_count(),
    })
}

/// Random split of `0..n`; the first part gets `⌈n/2⌉` rows.
pub fn split_rows(n: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let d2 = idx.split_off(n.div_ceil(2));
    let mut d1 = idx;
    d1.sort_unstable();
    let mut d2 = d2;
    d2.sort_unstable();
    (d1, d2)
}

/// One split-sample run.
#[derive(Debug, Clone)]
pub struct SplitZ {
    /// Signed Z per selected term; every other term has Z = 0.
    pub z: BTreeMap<TermId, f64>,
    /// Rows used for selection.
    pub d1: Vec<usize>,
    /// Rows used for the refit.
    pub d2: Vec<usize>,
    pub selection: Selection,
    pub report: FitReport,
}

/// Select on a random half, refit the selection on the other half and turn
/// the refit t statistics into signed Z scores. With `bonferroni` the
/// p-values are multiplied by the number of selected terms first.
pub fn split_half_z(ds: &Dataset, w: &WeightMatrix, spec: &TuneSpec, cfg: &SolverConfig, seed: u64, bonferroni_adjust: bool) -> Result<SplitZ> {
    let n = ds.n();
    if n < 4 {
        return Err(Error::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d1, d2) = split_rows(n, &mut rng);
    let selection = select_terms(&ds.subset_rows(&d1), w, spec, cfg)?;
    let report = refit_dataset(&ds.subset_rows(&d2), &selection.terms)?;
    let m = report.terms.len();
    let z = report
        .terms
        .iter()
        .zip(report.p_values())
        .zip(&report.t)
        .map(|((&term, p), &t)| {
            let p = if bonferroni_adjust { bonferroni(p, m) } else { p };
            (term, z_from_p(p, t))
        })
        .collect();
    Ok(SplitZ { z, d1, d2, selection, report })
}
