//! Turning a target model size into penalty levels.
//!
//! `λ₂ = c λ₁` throughout; `λ₁` is found by bisection on the number of
//! selected main effects.

use crate::data::{CoefficientState, StandardizedDesign, TermId};
use crate::error::{Error, Result};
use crate::network::WeightMatrix;
use crate::screening::{prescreen_scores, rank_by_score, swindle_on, ScreenPlan};
use crate::solver::{Problem, Solution, SolverConfig, State};

/// How the ratio `c = λ₂ / λ₁` is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    C(f64),
    /// Relative difficulty; converted with `c_from_r`.
    R(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneSpec {
    pub s_target: usize,
    /// Accept any count in `s_target ± s_slack`.
    pub s_slack: usize,
    pub ratio: Ratio,
    pub lambda1_bounds: Option<(f64, f64)>,
    /// Use the median rather than the mean in `c_from_r`.
    pub median: bool,
    /// Return the probe closest to the target instead of failing with
    /// `TargetUnreachable`.
    pub accept_closest: bool,
}

impl TuneSpec {
    pub fn new(s_target: usize, ratio: Ratio) -> Self {
        TuneSpec { s_target, s_slack: 1, ratio, lambda1_bounds: None, median: false, accept_closest: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_target == 0 {
            return Err(Error::config("s", "target model size must be at least 1"));
        }
        match self.ratio {
            Ratio::C(c) if !(c > 0.0 && c.is_finite()) => return Err(Error::config("c", "must be positive and finite")),
            Ratio::R(r) if !(r > 0.0 && r.is_finite()) => return Err(Error::config("r", "must be positive and finite")),
            _ => {}
        }
        if let Some((lo, hi)) = self.lambda1_bounds {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::config("lambda1_bounds", "need 0 < lo < hi"));
            }
        }
        Ok(())
    }

    /// `c`, converting `r` when needed.
    pub fn resolve_c(&self, sd: &StandardizedDesign, w: &WeightMatrix) -> Result<f64> {
        match self.ratio {
            Ratio::C(c) => Ok(c),
            Ratio::R(r) => c_from_r(sd, w, r, self.median),
        }
    }
}

/// `c = avg over allowed pairs of (w_jj / w_jk) · ‖X_jk‖`, divided by `r`.
pub fn c_from_r(sd: &StandardizedDesign, w: &WeightMatrix, r: f64, median: bool) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::config("r", "must be positive and finite"));
    }
    if w.n_pairs() == 0 {
        return Err(Error::NoAllowedPairs);
    }
    let mut vals: Vec<f64> = w
        .pairs()
        .iter()
        .map(|&(j, k, wjk)| {
            let norm: f64 = sd.col(j).iter().zip(sd.col(k)).map(|(a, b)| a * a * b * b).sum::<f64>().sqrt();
            w.diag(j) / wjk * norm
        })
        .collect();
    let center = if median {
        vals.sort_by(f64::total_cmp);
        let m = vals.len();
        if m % 2 == 1 {
            vals[m / 2]
        } else {
            0.5 * (vals[m / 2 - 1] + vals[m / 2])
        }
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    Ok(center / r)
}

/// Smallest `λ₁` guaranteed to give the empty model: `max_j score_j / w_jj`.
pub fn lambda1_max(sd: &StandardizedDesign, w: &WeightMatrix) -> f64 {
    prescreen_scores(sd)
        .into_iter()
        .enumerate()
        .filter(|(j, _)| w.diag(*j).is_finite())
        .map(|(j, s)| s / w.diag(j))
        .fold(0.0, f64::max)
}

/// One bisection probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub lambda1: f64,
    pub count: usize,
}

/// Outcome of `lambda1_for_target`.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
    pub solution: Solution,
    pub probes: Vec<Probe>,
    /// False when the count lies outside the accepted window (only possible
    /// with `accept_closest`).
    pub within_slack: bool,
}

/// Largest number of bisection probes.
const MAX_PROBES: usize = 200;
/// How far below the initial lower bound the bracket may expand.
const MAX_LOWER_EXPANSIONS: usize = 4;

/// Bisect on `λ₁` until the screened fit at `(λ₁, c λ₁)` selects
/// `s_target ± s_slack` main effects.
pub fn lambda1_for_target(sd: &StandardizedDesign, w: &WeightMatrix, spec: &TuneSpec, c: f64, base: &SolverConfig) -> Result<Tuned> {
    spec.validate()?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::config("c", "must be non-negative and finite"));
    }
    let pb = Problem::new(sd, w)?;
    let order = rank_by_score(&prescreen_scores(sd));
    let lmax = lambda1_max(sd, w);
    if lmax <= 0.0 {
        return Err(Error::Invalid("no SNP is correlated with the trait".into()));
    }
    let (mut lo, mut hi) = spec.lambda1_bounds.unwrap_or((lmax * 1e-4, lmax));
    let lo0 = lo;
    let width_stop = 1e-6 * lmax;
    let plan = ScreenPlan::for_target(spec.s_target, sd.p());
    let (want_lo, want_hi) = (spec.s_target.saturating_sub(spec.s_slack), spec.s_target + spec.s_slack);

    let mut probes: Vec<Probe> = Vec::new();
    let mut best: Option<(usize, f64, Solution)> = None;
    // every probe's state; each new probe starts from the nearest one with a
    // larger λ₁ (a sparser model), so the path never inherits a cascade
    let mut warm: Vec<(f64, State)> = Vec::new();
    let mut expansions = 0;
    let probe = |lambda1: f64, warm: &mut Vec<(f64, State)>| {
        let cfg = base.with_lambdas(lambda1, c * lambda1);
        let start = warm.iter().filter(|(l, _)| *l >= lambda1).min_by(|a, b| a.0.total_cmp(&b.0)).map(|(_, s)| s.clone());
        let out = swindle_on(&pb, &cfg, &plan, &order, start);
        let sol = pb.solution(&out.state, &cfg, &out.run, out.k, out.rounds);
        log::debug!(
            "probe lambda1 = {:.6e}: {} mains, {} cycles, {} screening rounds, converged {}",
            lambda1,
            sol.main_count(),
            sol.cycles_used,
            sol.screen_rounds,
            sol.converged
        );
        warm.push((lambda1, out.state));
        sol
    };
    let try_lambda = |lambda1: f64, warm: &mut Vec<(f64, State)>, probes: &mut Vec<Probe>, best: &mut Option<(usize, f64, Solution)>| {
        let sol = probe(lambda1, warm);
        let count = sol.main_count();
        if let Some(prev) = probes.iter().find(|p| (p.lambda1 < lambda1 && p.count < count) || (p.lambda1 > lambda1 && p.count > count)) {
            log::info!("selected count not monotone in lambda1: {} at {:.6e} vs {} at {:.6e}", count, lambda1, prev.count, prev.lambda1);
        }
        probes.push(Probe { lambda1, count });
        let miss = count.abs_diff(spec.s_target);
        if best.as_ref().map_or(true, |(m, _, _)| miss < *m) {
            *best = Some((miss, lambda1, sol.clone()));
        }
        (count, sol)
    };

    for _ in 0..MAX_PROBES {
        let mid = 0.5 * (lo + hi);
        let (count, sol) = try_lambda(mid, &mut warm, &mut probes, &mut best);
        if (want_lo..=want_hi).contains(&count) {
            return Ok(Tuned { lambda1: mid, lambda2: c * mid, c, solution: sol, probes, within_slack: true });
        }
        if count > want_hi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < width_stop {
            // the target may need a smaller λ₁ than the initial bracket holds
            if count < want_lo && lo <= lo0 * (1.0 + 1e-12) && expansions < MAX_LOWER_EXPANSIONS && spec.lambda1_bounds.is_none() {
                expansions += 1;
                hi = lo;
                lo /= 100.0;
                continue;
            }
            break;
        }
    }
    let (_, l1, sol) = best.expect("at least one probe");
    let closest = sol.main_count();
    if spec.accept_closest {
        log::warn!("target {} ± {} unreachable; using closest count {} at lambda1 = {:.6e}", spec.s_target, spec.s_slack, closest, l1);
        return Ok(Tuned { lambda1: l1, lambda2: c * l1, c, solution: sol, probes, within_slack: false });
    }
    Err(Error::TargetUnreachable { target: spec.s_target, closest, lambda_lo: lo, lambda_hi: hi })
}

/// Threshold the unshrunken estimate of `term` must exceed to become
/// nonzero, given the current nonzero `pattern`.
///
/// `Main(j)`: `λ₁ w_jj` when every interaction of `j` is zero, else 0.
/// `Inter(j,k)`: `(w_jk / ‖X_jk‖) · (λ₂ + m λ₁)` with `m` = 2, 1 or 0 when
/// neither, one or both main effects are nonzero.
pub fn entry_threshold(sd: &StandardizedDesign, term: TermId, w: &WeightMatrix, lambda1: f64, lambda2: f64, pattern: &CoefficientState) -> Result<f64> {
    let p = sd.p();
    match term {
        TermId::Main(j) => {
            if j >= p {
                return Err(Error::IndexOutOfRange { index: j, p });
            }
            let group_active = pattern.iter().any(|(t, _)| matches!(t, TermId::Inter(a, b) if a == j || b == j));
            Ok(if group_active { 0.0 } else { lambda1 * w.diag(j) })
        }
        TermId::Inter(j, k) => {
            if j >= p || k >= p {
                return Err(Error::IndexOutOfRange { index: j.max(k), p });
            }
            let wjk = w.weight(j, k).ok_or(Error::ExcludedPair(j, k))?;
            let norm: f64 = sd.col(j).iter().zip(sd.col(k)).map(|(a, b)| a * a * b * b).sum::<f64>().sqrt();
            let inactive = [j, k].iter().filter(|&&m| pattern.get(TermId::Main(m)) == 0.0).count();
            Ok(wjk / norm * (lambda2 + inactive as f64 * lambda1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Dataset};
    use crate::solver::fit;
    use ndarray::{Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Binomial, Distribution, StandardNormal};

    fn genotypes(n: usize, p: usize, maf: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let b = Binomial::new(2, maf).unwrap();
        Array2::from_shape_fn((n, p), |_| b.sample(rng) as f64)
    }

    #[test]
    fn c_from_r_matches_unit_norm_product_limit() {
        // n‖X_jk‖² → E[z_j² z_k²] = 1 for independent SNPs, so c·√n → 1 at r = 1
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1000;
        let x = genotypes(n, 20, 0.5, &mut rng);
        let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::from_groups(20, &[(0..20).collect()]).unwrap();
        let c = c_from_r(&sd, &w, 1.0, false).unwrap();
        // independent Monte Carlo oracle of E[sqrt(Σ z_j² z_k²)] with fresh draws
        let mut oracle = 0.0;
        let reps = 200;
        for _ in 0..reps {
            let a = genotypes(n, 2, 0.5, &mut rng);
            let z = |col: usize| {
                let m = a.column(col).mean().unwrap();
                let s = a.column(col).iter().map(|v| (v - m).powi(2)).sum::<f64>().sqrt();
                a.column(col).iter().map(|v| (v - m) / s).collect::<Vec<_>>()
            };
            let (u, v) = (z(0), z(1));
            oracle += u.iter().zip(&v).map(|(p, q)| p * p * q * q).sum::<f64>().sqrt();
        }
        oracle /= reps as f64;
        assert!((c / oracle - 1.0).abs() < 0.03, "c = {c}, oracle = {oracle}");
        assert!((c * (n as f64).sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn c_from_r_scales_inversely() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = genotypes(100, 6, 0.3, &mut rng);
        let y = Array1::from_shape_fn(100, |_| rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::from_groups(6, &[vec![0, 1, 2, 3, 4, 5]]).unwrap();
        let c1 = c_from_r(&sd, &w, 1.0, false).unwrap();
        assert_eq!(c_from_r(&sd, &w, 2.0, false).unwrap(), c1 / 2.0);
        assert!(c_from_r(&sd, &w, 1e12, false).unwrap() < 1e-12);
        assert!(c_from_r(&sd, &w, 1.0, true).unwrap() > 0.0);
        assert!(matches!(c_from_r(&sd, &WeightMatrix::main_only(6), 1.0, false), Err(Error::NoAllowedPairs)));
    }

    #[test]
    fn lambda_max_gives_empty_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = genotypes(80, 10, 0.4, &mut rng);
        let y = Array1::from_shape_fn(80, |i| x[(i, 2)] + rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::from_groups(10, &[vec![0, 1, 2, 3]]).unwrap();
        let sol = fit(&sd, &w, &SolverConfig::new(lambda1_max(&sd, &w), 0.5 * lambda1_max(&sd, &w)), None).unwrap();
        assert_eq!(sol.main_count(), 0);
    }

    #[test]
    fn planted_pair_is_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 300;
        let x = genotypes(n, 52, 0.3, &mut rng);
        let y = Array1::from_shape_fn(n, |i| 1.5 * x[(i, 7)] - 1.5 * x[(i, 31)] + rng.sample::<f64, _>(StandardNormal));
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::from_groups(52, &[(0..10).collect()]).unwrap();
        let spec = TuneSpec { s_slack: 0, ..TuneSpec::new(2, Ratio::C(0.5)) };
        let t = lambda1_for_target(&sd, &w, &spec, 0.5, &SolverConfig::new(1.0, 0.5)).unwrap();
        let mains: Vec<TermId> = t.solution.coeffs.terms().into_iter().filter(|t| !t.is_interaction()).collect();
        assert_eq!(mains, vec![TermId::Main(7), TermId::Main(31)]);
        assert!((t.lambda2 - 0.5 * t.lambda1).abs() < 1e-15);
    }

    #[test]
    fn unreachable_target_reports_closest() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = genotypes(40, 5, 0.3, &mut rng);
        let y = Array1::from_shape_fn(40, |_| rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::main_only(5);
        let spec = TuneSpec { s_slack: 0, ..TuneSpec::new(9, Ratio::C(0.5)) };
        match lambda1_for_target(&sd, &w, &spec, 0.5, &SolverConfig::new(1.0, 0.5)) {
            Err(Error::TargetUnreachable { target, closest, .. }) => {
                assert_eq!(target, 9);
                assert_eq!(closest, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        let spec = TuneSpec { accept_closest: true, ..spec };
        let t = lambda1_for_target(&sd, &w, &spec, 0.5, &SolverConfig::new(1.0, 0.5)).unwrap();
        assert!(!t.within_slack);
        assert_eq!(t.solution.main_count(), 5);
    }

    #[test]
    fn entry_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = genotypes(50, 4, 0.4, &mut rng);
        let y = Array1::from_shape_fn(50, |_| rng.gen::<f64>());
        let sd = standardize(&Dataset::with_default_ids(y, x).unwrap()).unwrap();
        let w = WeightMatrix::from_groups(4, &[vec![0, 1, 2, 3]]).unwrap();
        let norm: f64 = sd.col(0).iter().zip(sd.col(1)).map(|(a, b)| a * a * b * b).sum::<f64>().sqrt();
        let both: CoefficientState = [(TermId::Main(0), 0.1), (TermId::Main(1), 0.2)].into_iter().collect();
        assert_eq!(entry_threshold(&sd, TermId::inter(0, 1), &w, 0.3, 0.0, &both).unwrap(), 0.0);
        let none = CoefficientState::new();
        let t = entry_threshold(&sd, TermId::inter(0, 1), &w, 0.3, 0.1, &none).unwrap();
        assert!((t - (0.1 + 2.0 * 0.3) / norm).abs() < 1e-12);
        assert_eq!(entry_threshold(&sd, TermId::Main(2), &w, 0.3, 0.1, &none).unwrap(), 0.3);
        let active: CoefficientState = [(TermId::inter(2, 3), 0.5)].into_iter().collect();
        assert_eq!(entry_threshold(&sd, TermId::Main(2), &w, 0.3, 0.1, &active).unwrap(), 0.0);
    }
}
