//! Synthetic genotype designs, trait models, weight scenarios, a stage-wise
//! baseline and evaluation curves.

use std::collections::BTreeSet;
use std::fmt;

use ndarray::{Array1, Array2, ShapeBuilder};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{standardize, Dataset, StandardizedDesign, TermId};
use crate::error::{Error, Result};
use crate::meta::{unit_seed, CohortSet};
use crate::network::WeightMatrix;
use crate::refit::{ols_refit, rank_terms, refit_dataset, select_terms};
use crate::solver::SolverConfig;
use crate::tuning::{lambda1_for_target, Ratio, TuneSpec};

/// Number of SNPs with a true main effect in every model.
pub const N_ACTIVE: usize = 20;
/// Total pathway count of the noisy scenarios.
pub const NOISE_PATHWAYS: usize = 20;
/// Non-active SNPs spread over the noise pathways.
pub const NOISE_SNPS: usize = 160;
/// Inclusive range of noise-pathway sizes.
pub const NOISE_PATHWAY_SIZE: (usize, usize) = (10, 46);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraitModel {
    /// Twenty main effects, no interaction.
    M1,
    /// Twenty main effects plus every pair among SNPs 1 to 5.
    M2,
    /// Twenty main effects plus the ten disjoint pairs (1,2), (3,4), ..., (19,20).
    M3,
}

impl TraitModel {
    /// True interacting pairs, 0-based, `j < k`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        match self {
            TraitModel::M1 => vec![],
            TraitModel::M2 => (0..5).flat_map(|j| (j + 1..5).map(move |k| (j, k))).collect(),
            TraitModel::M3 => (0..10).map(|i| (2 * i, 2 * i + 1)).collect(),
        }
    }

    /// Pathways holding the true pairs.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        match self {
            TraitModel::M1 => vec![],
            TraitModel::M2 => vec![(0..5).collect()],
            TraitModel::M3 => self.pairs().into_iter().map(|(j, k)| vec![j, k]).collect(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" | "1" => Ok(TraitModel::M1),
            "M2" | "2" => Ok(TraitModel::M2),
            "M3" | "3" => Ok(TraitModel::M3),
            _ => Err(Error::config("model", format!("unknown model {s:?}; expected M1, M2 or M3"))),
        }
    }
}

impl fmt::Display for TraitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WScenario {
    /// Exactly the model's true pairs.
    W1,
    /// Every pair among SNPs 1 to 20.
    W2,
    /// W1 plus noise pathways.
    W3,
    /// W2 plus noise pathways.
    W4,
    /// Every pair among SNPs 1 to 40.
    W5,
    /// Pairs within {1..10, 21..30} and within {11..20, 31..40}.
    W6,
}

impl WScenario {
    pub const ALL: [WScenario; 6] = [WScenario::W1, WScenario::W2, WScenario::W3, WScenario::W4, WScenario::W5, WScenario::W6];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "W1" => Ok(WScenario::W1),
            "W2" => Ok(WScenario::W2),
            "W3" => Ok(WScenario::W3),
            "W4" => Ok(WScenario::W4),
            "W5" => Ok(WScenario::W5),
            "W6" => Ok(WScenario::W6),
            _ => Err(Error::config("w_scenario", format!("unknown scenario {s:?}; expected W1 to W6"))),
        }
    }

    fn needed_snps(&self) -> usize {
        match self {
            WScenario::W1 | WScenario::W2 => N_ACTIVE,
            WScenario::W3 | WScenario::W4 => N_ACTIVE + NOISE_SNPS,
            WScenario::W5 | WScenario::W6 => 2 * N_ACTIVE,
        }
    }
}

impl fmt::Display for WScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub n: usize,
    pub p: usize,
    pub maf: Vec<f64>,
    pub model: TraitModel,
    /// Single-SNP power the main effects are calibrated to.
    pub main_power: f64,
    /// Power the interaction effects are calibrated to.
    pub interaction_power: f64,
    /// Reverse the interaction signs so they add no marginal SNP effect.
    pub marginal_free: bool,
    pub w_scenario: WScenario,
    pub replicates: usize,
    pub seed: u64,
}

impl SimDesign {
    /// Common MAF of 0.5, 80% power for every effect, 100 replicates.
    pub fn new(n: usize, p: usize, model: TraitModel, w_scenario: WScenario) -> Self {
        SimDesign {
            n,
            p,
            maf: vec![0.5; p],
            model,
            main_power: 0.8,
            interaction_power: 0.8,
            marginal_free: false,
            w_scenario,
            replicates: 100,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::EmptyData);
        }
        if self.maf.len() != self.p {
            return Err(Error::config("maf", format!("{} frequencies for {} SNPs", self.maf.len(), self.p)));
        }
        if let Some(m) = self.maf.iter().find(|m| !(**m > 0.0 && **m <= 0.5)) {
            return Err(Error::config("maf", format!("{m} lies outside (0, 0.5]")));
        }
        for power in [self.main_power, self.interaction_power] {
            if !(power > 0.0 && power < 1.0) {
                return Err(Error::InvalidPower(power));
            }
        }
        let needed = N_ACTIVE.max(self.w_scenario.needed_snps());
        if needed > self.p {
            return Err(Error::ModelTooLarge { needed, p: self.p });
        }
        Ok(())
    }

    /// True effects implied by the design's powers and frequencies.
    pub fn effects(&self) -> Result<TrueEffects> {
        self.validate()?;
        let mut mains: Vec<(usize, f64)> = (0..N_ACTIVE)
            .map(|j| Ok((j, effect_for_power(self.n, self.maf[j], self.main_power, 0.05, false, None)?)))
            .collect::<Result<_>>()?;
        let mut pairs = Vec::new();
        for (j, k) in self.model.pairs() {
            let b = effect_for_power(self.n, self.maf[j], self.interaction_power, 0.05, true, Some(self.maf[k]))?;
            pairs.push((j, k, if self.marginal_free { -b } else { b }));
        }
        if self.marginal_free {
            // E[x_k] = 2 maf_k; compensate so the product terms leave each
            // SNP's marginal slope at its calibrated main effect
            for &(j, k, b) in &pairs {
                mains[j].1 += b.abs() * 2.0 * self.maf[k];
                mains[k].1 += b.abs() * 2.0 * self.maf[j];
            }
        }
        Ok(TrueEffects { mains, pairs })
    }

    pub fn truth(&self) -> Truth {
        Truth::new(self.p, self.model)
    }
}

/// MAFs of 10% to 50% cycling over SNPs 1 to 20 (SNP 1, 6, 11, 16 at 10%,
/// SNP 2, 7, 12, 17 at 20%, and so on); the remaining SNPs draw one of the
/// five values at random.
pub fn varying_maf(p: usize, rng: &mut impl Rng) -> Vec<f64> {
    const LEVELS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
    (0..p).map(|j| if j < N_ACTIVE { LEVELS[j % 5] } else { LEVELS[rng.gen_range(0..5)] }).collect()
}

/// Additive genotype codes drawn from Binomial(2, maf_j), column by column.
pub fn gen_genotypes(design: &SimDesign, rng: &mut impl Rng) -> Result<Array2<f64>> {
    design.validate()?;
    let mut x = Array2::<f64>::zeros((design.n, design.p).f());
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let dist = Binomial::new(2, design.maf[j]).map_err(|e| Error::config("maf", e.to_string()))?;
        col.iter_mut().for_each(|v| *v = dist.sample(rng) as f64);
    }
    Ok(x)
}

/// Effect size giving `power` for a two-sided level-`alpha` test with unit
/// noise variance.
///
/// Main effects use the SNP variance `2 maf (1 - maf)`. Interactions use
/// `σ_j² σ_k²`, the variance of the product once both main effects are in the
/// model.
pub fn effect_for_power(n: usize, maf: f64, power: f64, alpha: f64, is_interaction: bool, maf2: Option<f64>) -> Result<f64> {
    if !(power > 0.0 && power < 1.0) {
        return Err(Error::InvalidPower(power));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha", "must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let var = |m: f64| 2.0 * m * (1.0 - m);
    let var_x = if is_interaction {
        let m2 = maf2.ok_or_else(|| Error::config("maf2", "interactions need the second SNP's frequency"))?;
        var(maf) * var(m2)
    } else {
        var(maf)
    };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let numerator = normal.inverse_cdf(1.0 - alpha / 2.0) + normal.inverse_cdf(power);
    Ok(numerator / (n as f64 * var_x).sqrt())
}

/// True coefficients of a simulated trait, 0-based SNP indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueEffects {
    pub mains: Vec<(usize, f64)>,
    pub pairs: Vec<(usize, usize, f64)>,
}

/// `y = Σ β_j x_j + Σ β_jk x_j x_k + ε` with standard normal `ε`.
pub fn simulate_trait(x: &Array2<f64>, effects: &TrueEffects, rng: &mut impl Rng) -> Result<Array1<f64>> {
    let p = x.ncols();
    let needed = effects.mains.iter().map(|m| m.0 + 1).chain(effects.pairs.iter().map(|q| q.0.max(q.1) + 1)).max().unwrap_or(0);
    if needed > p {
        return Err(Error::ModelTooLarge { needed, p });
    }
    let mut y = Array1::from_shape_fn(x.nrows(), |_| rng.sample::<f64, _>(StandardNormal));
    for &(j, b) in &effects.mains {
        y.scaled_add(b, &x.column(j));
    }
    for &(j, k, b) in &effects.pairs {
        y.scaled_add(b, &(&x.column(j) * &x.column(k)));
    }
    Ok(y)
}

fn range(a: usize, b: usize) -> Vec<usize> {
    (a..b).collect()
}

/// Pathways of a weight scenario (0-based members).
///
/// The noisy scenarios add pathways until there are 20 in total, then place
/// 160 randomly chosen non-active SNPs: each goes to one random noise
/// pathway, after which every noise pathway is filled up to a size drawn
/// uniformly from 10 to 46.
pub fn scenario_groups(design: &SimDesign, rng: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    design.validate()?;
    let model = design.model;
    let groups = match design.w_scenario {
        WScenario::W1 => model.groups(),
        WScenario::W2 => vec![range(0, N_ACTIVE)],
        WScenario::W3 | WScenario::W4 => {
            let mut groups = if design.w_scenario == WScenario::W3 { model.groups() } else { vec![range(0, N_ACTIVE)] };
            let n_noise = NOISE_PATHWAYS.saturating_sub(groups.len());
            let mut pool: Vec<usize> = range(N_ACTIVE, design.p);
            pool.shuffle(rng);
            pool.truncate(NOISE_SNPS);
            pool.sort_unstable();
            let mut noise: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_noise];
            if n_noise > 0 {
                for &s in &pool {
                    noise[rng.gen_range(0..n_noise)].insert(s);
                }
                for g in noise.iter_mut() {
                    let size = rng.gen_range(NOISE_PATHWAY_SIZE.0..=NOISE_PATHWAY_SIZE.1).min(pool.len());
                    while g.len() < size {
                        g.insert(pool[rng.gen_range(0..pool.len())]);
                    }
                }
            }
            groups.extend(noise.into_iter().map(|g| g.into_iter().collect()));
            groups
        }
        WScenario::W5 => vec![range(0, 2 * N_ACTIVE)],
        WScenario::W6 => vec![[range(0, 10), range(20, 30)].concat(), [range(10, 20), range(30, 40)].concat()],
    };
    Ok(groups)
}

/// Weight matrix of a scenario: unit diagonal, unit weight on every pair
/// sharing a pathway.
pub fn scenario_weights(design: &SimDesign, rng: &mut impl Rng) -> Result<WeightMatrix> {
    let groups = scenario_groups(design, rng)?;
    if groups.is_empty() {
        return Ok(WeightMatrix::main_only(design.p));
    }
    WeightMatrix::from_groups(design.p, &groups)
}

/// Stage-wise selection: a main-effect-only fit keeps `s1` SNPs, then a
/// plain lasso over those SNPs and all their pairwise products keeps `s2`
/// terms in total.
pub fn stagewise_baseline(sd: &StandardizedDesign, s1: usize, s2: usize, solver: &SolverConfig) -> Result<Vec<TermId>> {
    let p = sd.p();
    if s1 == 0 || s1 > p {
        return Err(Error::config("s1", format!("must lie in 1..={p}")));
    }
    if s2 == 0 {
        return Err(Error::config("s2", "must be at least 1"));
    }
    let stage1_spec = TuneSpec { accept_closest: true, ..TuneSpec::new(s1, Ratio::C(1.0)) };
    let stage1 = lambda1_for_target(sd, &WeightMatrix::main_only(p), &stage1_spec, 0.0, solver)?;
    let chosen: Vec<usize> = stage1.solution.coeffs.terms().into_iter().filter_map(|t| if let TermId::Main(j) = t { Some(j) } else { None }).collect();
    if chosen.is_empty() {
        return Ok(vec![]);
    }

    let mut terms: Vec<TermId> = chosen.iter().map(|&j| TermId::Main(j)).collect();
    for a in 0..chosen.len() {
        for b in a + 1..chosen.len() {
            terms.push(TermId::inter(chosen[a], chosen[b]));
        }
    }
    let n = sd.n();
    let mut x = Array2::<f64>::zeros((n, terms.len()).f());
    for (c, t) in terms.iter().enumerate() {
        let mut col = x.column_mut(c);
        match *t {
            TermId::Main(j) => col.iter_mut().zip(sd.col(j)).for_each(|(v, a)| *v = *a),
            TermId::Inter(j, k) => col.iter_mut().zip(sd.col(j).iter().zip(sd.col(k))).for_each(|(v, (a, b))| *v = a * b),
        }
    }
    let stage2_ds = Dataset::with_default_ids(Array1::from(sd.y().to_vec()), x)?;
    let stage2_sd = standardize(&stage2_ds)?;
    let q = terms.len();
    let stage2_spec = TuneSpec { accept_closest: true, ..TuneSpec::new(s2.min(q), Ratio::C(1.0)) };
    let stage2 = lambda1_for_target(&stage2_sd, &WeightMatrix::main_only(q), &stage2_spec, 0.0, solver)?;
    let mut out: Vec<TermId> = stage2
        .solution
        .coeffs
        .terms()
        .into_iter()
        .filter_map(|t| if let TermId::Main(c) = t { Some(terms[c]) } else { None })
        .collect();
    out.sort();
    Ok(out)
}

/// Selection strategy evaluated by the harness.
#[derive(Debug, Clone)]
pub enum Method {
    /// The network-penalized fit tuned to `tune`.
    Network { tune: TuneSpec, solver: SolverConfig },
    /// The two-stage baseline.
    Stagewise { s1: usize, s2: usize, solver: SolverConfig },
}

impl Method {
    /// 25 main effects and `c = 0.5`, as in the single-cohort simulations.
    pub fn network_default() -> Self {
        Method::Network { tune: TuneSpec { accept_closest: true, ..TuneSpec::new(25, Ratio::C(0.5)) }, solver: SolverConfig::new(1.0, 0.5) }
    }

    pub fn stagewise_default() -> Self {
        Method::Stagewise { s1: 25, s2: 35, solver: SolverConfig::new(1.0, 0.0) }
    }
}

/// Selected terms of one replicate, ranked by refit `|t|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub ranked: Vec<TermId>,
    pub abs_t: Vec<f64>,
}

impl ReplicateOutcome {
    pub fn selected_mains(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranked.iter().filter_map(|t| if let TermId::Main(j) = t { Some(*j) } else { None })
    }

    /// Interactions in rank order.
    pub fn ranked_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ranked.iter().filter_map(|t| if let TermId::Inter(j, k) = t { Some((*j, *k)) } else { None })
    }
}

/// Simulated data of one replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub dataset: Dataset,
    pub weights: WeightMatrix,
    pub groups: Vec<Vec<usize>>,
    pub effects: TrueEffects,
}

/// Draw replicate `rep` of `design`. Genotypes, pathways and trait noise use
/// separate streams derived from the design seed.
pub fn simulate_replicate(design: &SimDesign, rep: usize) -> Result<Replicate> {
    let effects = design.effects()?;
    let x = gen_genotypes(design, &mut ChaCha8Rng::seed_from_u64(unit_seed(design.seed, &[rep as u64, 0])))?;
    let groups = scenario_groups(design, &mut ChaCha8Rng::seed_from_u64(unit_seed(design.seed, &[rep as u64, 1])))?;
    let weights = if groups.is_empty() { WeightMatrix::main_only(design.p) } else { WeightMatrix::from_groups(design.p, &groups)? };
    let y = simulate_trait(&x, &effects, &mut ChaCha8Rng::seed_from_u64(unit_seed(design.seed, &[rep as u64, 2])))?;
    Ok(Replicate { dataset: Dataset::with_default_ids(y, x)?, weights, groups, effects })
}

/// Cohorts of one multi-cohort replicate: `m` independent samples of size
/// `design.n` from the same effects, scored against one weight matrix.
pub fn simulate_cohorts(design: &SimDesign, m: usize, rep: usize) -> Result<(CohortSet, WeightMatrix)> {
    if m == 0 {
        return Err(Error::config("cohorts", "need at least one cohort"));
    }
    let effects = design.effects()?;
    let groups = scenario_groups(design, &mut ChaCha8Rng::seed_from_u64(unit_seed(design.seed, &[rep as u64, 1])))?;
    let weights = if groups.is_empty() { WeightMatrix::main_only(design.p) } else { WeightMatrix::from_groups(design.p, &groups)? };
    let cohorts = (0..m)
        .map(|c| {
            let base = unit_seed(design.seed, &[rep as u64, 100 + c as u64]);
            let x = gen_genotypes(design, &mut ChaCha8Rng::seed_from_u64(unit_seed(base, &[0])))?;
            let y = simulate_trait(&x, &effects, &mut ChaCha8Rng::seed_from_u64(unit_seed(base, &[2])))?;
            Dataset::with_default_ids(y, x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((CohortSet::unlabeled(cohorts)?, weights))
}

/// Apply `method` to one replicate's data.
pub fn run_method(rep: &Replicate, method: &Method, replicate: usize) -> Result<ReplicateOutcome> {
    let report = match method {
        Method::Network { tune, solver } => {
            let sel = select_terms(&rep.dataset, &rep.weights, tune, solver)?;
            refit_dataset(&rep.dataset, &sel.terms)?
        }
        Method::Stagewise { s1, s2, solver } => {
            let sd = standardize(&rep.dataset)?;
            let terms = stagewise_baseline(&sd, *s1, *s2, solver)?;
            ols_refit(&sd, &terms)?
        }
    };
    let ranked = rank_terms(&report);
    let abs_t = ranked.iter().map(|t| report.terms.iter().position(|x| x == t).map_or(0.0, |q| report.t[q].abs())).collect();
    Ok(ReplicateOutcome { replicate, ranked, abs_t })
}

/// Every replicate of `design` under `method`, in parallel.
pub fn run_replicates(design: &SimDesign, method: &Method) -> Result<Vec<ReplicateOutcome>> {
    design.validate()?;
    (0..design.replicates).into_par_iter().map(|r| run_method(&simulate_replicate(design, r)?, method, r)).collect()
}

/// SNP categories of the main-effect power table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SnpCategory {
    WithInteraction,
    WithoutInteraction,
    NonActive,
}

/// Term groups used to summarize Z scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermGroup {
    ActiveWithInteraction,
    ActiveWithoutInteraction,
    NonActive,
    TrueInteraction,
    NoiseInteraction,
}

impl TermGroup {
    pub const ALL: [TermGroup; 5] = [
        TermGroup::ActiveWithInteraction,
        TermGroup::ActiveWithoutInteraction,
        TermGroup::NonActive,
        TermGroup::TrueInteraction,
        TermGroup::NoiseInteraction,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            TermGroup::ActiveWithInteraction => "active_with_interaction",
            TermGroup::ActiveWithoutInteraction => "active_without_interaction",
            TermGroup::NonActive => "non_active",
            TermGroup::TrueInteraction => "true_interaction",
            TermGroup::NoiseInteraction => "noise_interaction",
        }
    }
}

/// Ground truth of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub p: usize,
    pub true_pairs: BTreeSet<(usize, usize)>,
    pub active: Vec<bool>,
    pub interacting: Vec<bool>,
}

impl Truth {
    pub fn new(p: usize, model: TraitModel) -> Self {
        Self::from_parts(p, (0..N_ACTIVE.min(p)).collect::<Vec<_>>(), model.pairs())
    }

    pub fn from_parts(p: usize, active: impl IntoIterator<Item = usize>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut act = vec![false; p];
        active.into_iter().filter(|&j| j < p).for_each(|j| act[j] = true);
        let true_pairs: BTreeSet<(usize, usize)> = pairs.into_iter().map(|(j, k)| (j.min(k), j.max(k))).collect();
        let mut interacting = vec![false; p];
        for &(j, k) in &true_pairs {
            interacting[j] = true;
            interacting[k] = true;
        }
        Truth { p, true_pairs, active: act, interacting }
    }

    pub fn category(&self, j: usize) -> SnpCategory {
        if !self.active[j] {
            SnpCategory::NonActive
        } else if self.interacting[j] {
            SnpCategory::WithInteraction
        } else {
            SnpCategory::WithoutInteraction
        }
    }

    pub fn group(&self, term: TermId) -> TermGroup {
        match term {
            TermId::Main(j) => match self.category(j) {
                SnpCategory::WithInteraction => TermGroup::ActiveWithInteraction,
                SnpCategory::WithoutInteraction => TermGroup::ActiveWithoutInteraction,
                SnpCategory::NonActive => TermGroup::NonActive,
            },
            TermId::Inter(j, k) if self.true_pairs.contains(&(j, k)) => TermGroup::TrueInteraction,
            TermId::Inter(..) => TermGroup::NoiseInteraction,
        }
    }
}

/// Mean selection rate per SNP category; `None` for an empty category.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    pub with_interaction: Option<f64>,
    pub without_interaction: Option<f64>,
    pub non_active: Option<f64>,
    /// SNP counts per category, in the same order.
    pub counts: [usize; 3],
}

/// Averages over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCurves {
    /// Rank thresholds `1..=T`.
    pub thresholds: Vec<usize>,
    /// True share of the top-`T` interactions, `1` when none is selected.
    pub one_minus_fdr: Vec<f64>,
    /// True interactions among the top `T`, divided by `T`.
    pub discovery_rate: Vec<f64>,
    pub power: PowerTable,
    pub replicates: usize,
}

/// 1 − FDR of one replicate's ranked interactions at threshold `t`.
pub fn one_minus_fdr(ranked_pairs: &[(usize, usize)], truth: &Truth, t: usize) -> f64 {
    let r = ranked_pairs.len().min(t);
    if r == 0 {
        return 1.0;
    }
    ranked_pairs[..r].iter().filter(|p| truth.true_pairs.contains(p)).count() as f64 / r as f64
}

/// True interactions in the top `t`, divided by `t`.
pub fn discovery_rate(ranked_pairs: &[(usize, usize)], truth: &Truth, t: usize) -> f64 {
    let r = ranked_pairs.len().min(t);
    ranked_pairs[..r].iter().filter(|p| truth.true_pairs.contains(p)).count() as f64 / t as f64
}

pub fn evaluate(outcomes: &[ReplicateOutcome], truth: &Truth, max_threshold: usize) -> Result<EvalCurves> {
    if outcomes.is_empty() {
        return Err(Error::EmptyData);
    }
    if max_threshold == 0 {
        return Err(Error::config("max_threshold", "must be at least 1"));
    }
    let reps = outcomes.len() as f64;
    let thresholds: Vec<usize> = (1..=max_threshold).collect();
    let mut fdr = vec![0.0; max_threshold];
    let mut disc = vec![0.0; max_threshold];
    let mut hits = vec![0usize; truth.p];
    for o in outcomes {
        let pairs: Vec<(usize, usize)> = o.ranked_pairs().collect();
        for (i, &t) in thresholds.iter().enumerate() {
            fdr[i] += one_minus_fdr(&pairs, truth, t);
            disc[i] += discovery_rate(&pairs, truth, t);
        }
        for j in o.selected_mains() {
            if j >= truth.p {
                return Err(Error::IndexOutOfRange { index: j, p: truth.p });
            }
            hits[j] += 1;
        }
    }
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for j in 0..truth.p {
        let c = truth.category(j) as usize;
        sums[c] += hits[j] as f64 / reps;
        counts[c] += 1;
    }
    let rate = |c: usize| (counts[c] > 0).then(|| sums[c] / counts[c] as f64);
    // averaging after summing keeps a perfect selector at exactly 1
    fdr.iter_mut().chain(disc.iter_mut()).for_each(|v| *v /= reps);
    Ok(EvalCurves {
        thresholds,
        one_minus_fdr: fdr,
        discovery_rate: disc,
        power: PowerTable { with_interaction: rate(0), without_interaction: rate(1), non_active: rate(2), counts },
        replicates: outcomes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// OLS of `y` on an intercept and `cols` via explicit normal equations;
    /// returns the coefficients and standard errors of `cols`.
    fn ols_oracle(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = y.len();
        let mut x: Vec<Vec<f64>> = vec![vec![1.0; n]];
        x.extend(cols.iter().cloned());
        let k = x.len();
        let mut a = vec![vec![0.0; k + 1]; k];
        for r in 0..k {
            for c in 0..k {
                a[r][c] = (0..n).map(|i| x[r][i] * x[c][i]).sum();
            }
            a[r][k] = (0..n).map(|i| x[r][i] * y[i]).sum();
        }
        let mut inv = vec![vec![0.0; k]; k];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for c in 0..k {
            let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            inv.swap(c, piv);
            let d = a[c][c];
            for v in a[c].iter_mut() {
                *v /= d;
            }
            for v in inv[c].iter_mut() {
                *v /= d;
            }
            for r in 0..k {
                if r != c {
                    let f = a[r][c];
                    for q in 0..=k {
                        a[r][q] -= f * a[c][q];
                    }
                    for q in 0..k {
                        inv[r][q] -= f * inv[c][q];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..k).map(|r| a[r][k]).collect();
        let rss: f64 = (0..n).map(|i| (y[i] - (0..k).map(|r| beta[r] * x[r][i]).sum::<f64>()).powi(2)).sum();
        let s2 = rss / (n - k) as f64;
        let se = (1..k).map(|r| (s2 * inv[r][r]).sqrt()).collect();
        (beta[1..].to_vec(), se)
    }

    fn ols_last_t(cols: &[Vec<f64>], y: &[f64]) -> f64 {
        let (b, se) = ols_oracle(cols, y);
        b[b.len() - 1] / se[se.len() - 1]
    }

    fn mc_power(n: usize, maf: f64, beta: f64, interaction: bool, sims: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bin = Binomial::new(2, maf).unwrap();
        let crit = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
        let mut rejected = 0;
        for _ in 0..sims {
            let a: Vec<f64> = (0..n).map(|_| bin.sample(&mut rng) as f64).collect();
            if interaction {
                let b: Vec<f64> = (0..n).map(|_| bin.sample(&mut rng) as f64).collect();
                let ab: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u * v).collect();
                let y: Vec<f64> = ab.iter().map(|v| beta * v + rng.sample::<f64, _>(StandardNormal)).collect();
                if ols_last_t(&[a, b, ab], &y).abs() > crit {
                    rejected += 1;
                }
            } else {
                let y: Vec<f64> = a.iter().map(|v| beta * v + rng.sample::<f64, _>(StandardNormal)).collect();
                if ols_last_t(&[a], &y).abs() > crit {
                    rejected += 1;
                }
            }
        }
        rejected as f64 / sims as f64
    }

    #[test]
    fn genotype_moments() {
        let mut d = SimDesign::new(100_000, 20, TraitModel::M1, WScenario::W1);
        d.maf = (0..20).map(|j| if j < 10 { 0.5 } else { 0.1 }).collect();
        let x = gen_genotypes(&d, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for j in 0..20 {
            let col = x.column(j);
            let mean = col.mean().unwrap();
            if j < 10 {
                assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
            } else {
                let var = col.mapv(|v| (v - mean).powi(2)).sum() / (col.len() - 1) as f64;
                assert!((var / 0.18 - 1.0).abs() < 0.05, "var {var}");
            }
        }
    }

    #[test]
    fn varying_maf_listing() {
        let maf = varying_maf(50, &mut ChaCha8Rng::seed_from_u64(1));
        for (snp, want) in [(1, 0.1), (6, 0.1), (11, 0.1), (16, 0.1), (2, 0.2), (17, 0.2), (3, 0.3), (13, 0.3), (4, 0.4), (19, 0.4), (5, 0.5), (20, 0.5)] {
            assert_eq!(maf[snp - 1], want);
        }
        assert!(maf[20..].iter().all(|m| [0.1, 0.2, 0.3, 0.4, 0.5].contains(m)));
    }

    #[test]
    fn effect_size_formula() {
        let b = effect_for_power(1000, 0.5, 0.8, 0.05, false, None).unwrap();
        assert!((b - (1.959964 + 0.841621) / 500f64.sqrt()).abs() < 1e-5);
        assert!((b - 0.1253).abs() < 1e-4);
        let b = effect_for_power(1000, 0.5, 0.5, 0.05, false, None).unwrap();
        assert!((b - 1.959964 / 500f64.sqrt()).abs() < 1e-6);
        assert!(matches!(effect_for_power(1000, 0.5, 1.0, 0.05, false, None), Err(Error::InvalidPower(_))));
        assert!(effect_for_power(1000, 0.5, 0.8, 0.05, true, None).is_err());
    }

    #[test]
    fn main_effect_power_oracle() {
        let b = effect_for_power(1000, 0.5, 0.8, 0.05, false, None).unwrap();
        let got = mc_power(1000, 0.5, b, false, 2000, 11);
        assert!((got - 0.8).abs() < 0.03, "power {got}");
        let got = mc_power(1000, 0.5, 0.0, false, 2000, 12);
        assert!((got - 0.05).abs() < 0.015, "size {got}");
    }

    #[test]
    fn interaction_power_oracle() {
        let b = effect_for_power(500, 0.3, 0.5, 0.05, true, Some(0.3)).unwrap();
        let got = mc_power(500, 0.3, b, true, 2000, 13);
        assert!((got - 0.5).abs() < 0.035, "power {got}");
    }

    #[test]
    fn model_pair_counts() {
        assert_eq!(TraitModel::M1.pairs().len(), 0);
        assert_eq!(TraitModel::M2.pairs().len(), 10);
        assert_eq!(TraitModel::M3.pairs().len(), 10);
        assert!(TraitModel::M3.pairs().contains(&(18, 19)));
    }

    #[test]
    fn pure_noise_trait() {
        let d = SimDesign::new(50, 25, TraitModel::M1, WScenario::W1);
        let x = gen_genotypes(&d, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let none = TrueEffects { mains: vec![(3, 0.0)], pairs: vec![] };
        let y = simulate_trait(&x, &none, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for v in y.iter() {
            assert_eq!(*v, rng.sample::<f64, _>(StandardNormal));
        }
        let big = TrueEffects { mains: vec![(30, 1.0)], pairs: vec![] };
        assert!(matches!(simulate_trait(&x, &big, &mut rng), Err(Error::ModelTooLarge { needed: 31, p: 25 })));
    }

    #[test]
    fn true_design_regression_covers_effects() {
        let d = SimDesign { replicates: 200, ..SimDesign::new(400, 20, TraitModel::M3, WScenario::W1) };
        let eff = d.effects().unwrap();
        let truth: Vec<f64> = eff.mains.iter().map(|m| m.1).chain(eff.pairs.iter().map(|q| q.2)).collect();
        let (mut inside, mut total) = (0, 0);
        for rep in 0..d.replicates {
            let r = simulate_replicate(&d, rep).unwrap();
            let x = &r.dataset.x;
            let mut cols: Vec<Vec<f64>> = eff.mains.iter().map(|m| x.column(m.0).to_vec()).collect();
            cols.extend(eff.pairs.iter().map(|q| (&x.column(q.0) * &x.column(q.1)).to_vec()));
            let (b, se) = ols_oracle(&cols, r.dataset.y.as_slice().unwrap());
            for i in 0..truth.len() {
                total += 1;
                if (b[i] - truth[i]).abs() <= 3.0 * se[i] {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 / total as f64 >= 0.99, "{inside} of {total}");
    }

    #[test]
    fn marginal_free_slopes_match_main_effects() {
        let d = SimDesign { marginal_free: true, main_power: 0.2, ..SimDesign::new(1000, 30, TraitModel::M2, WScenario::W2) };
        let plain = SimDesign { marginal_free: false, ..d.clone() }.effects().unwrap();
        let eff = d.effects().unwrap();
        assert!(eff.pairs.iter().all(|q| q.2 < 0.0));
        for j in 0..N_ACTIVE {
            // marginal slope: β_j + Σ_k β_jk E[x_k]
            let slope = eff.mains[j].1 + eff.pairs.iter().filter(|q| q.0 == j || q.1 == j).map(|q| q.2 * 1.0).sum::<f64>();
            assert!((slope - plain.mains[j].1).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_pair_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let count = |m: TraitModel, w: WScenario, rng: &mut ChaCha8Rng| scenario_weights(&SimDesign::new(100, 300, m, w), rng).unwrap().n_pairs();
        assert_eq!(count(TraitModel::M2, WScenario::W1, &mut rng), 10);
        assert_eq!(count(TraitModel::M3, WScenario::W1, &mut rng), 10);
        assert_eq!(count(TraitModel::M2, WScenario::W2, &mut rng), 190);
        assert_eq!(count(TraitModel::M2, WScenario::W5, &mut rng), 780);
        assert_eq!(count(TraitModel::M2, WScenario::W6, &mut rng), 380);
        assert_eq!(count(TraitModel::M1, WScenario::W1, &mut rng), 0);
    }

    #[test]
    fn noise_pathways_layout() {
        let d = SimDesign::new(100, 300, TraitModel::M3, WScenario::W3);
        let groups = scenario_groups(&d, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(groups.len(), NOISE_PATHWAYS);
        assert_eq!(&groups[..10], &TraitModel::M3.groups()[..]);
        let noise: BTreeSet<usize> = groups[10..].iter().flatten().copied().collect();
        assert_eq!(noise.len(), NOISE_SNPS);
        assert!(noise.iter().all(|&j| j >= N_ACTIVE));
        for g in &groups[10..] {
            assert!(g.len() >= NOISE_PATHWAY_SIZE.0 && g.len() <= NOISE_PATHWAY_SIZE.1.max(NOISE_SNPS));
        }
        // the true pairs are all still allowed and no true SNP meets a noise SNP
        let w = WeightMatrix::from_groups(300, &groups).unwrap();
        for (j, k) in TraitModel::M3.pairs() {
            assert!(w.weight(j, k).is_some());
        }
        assert!(w.allowed_pairs().all(|(j, k)| (j < N_ACTIVE) == (k < N_ACTIVE)));
        let small = SimDesign::new(100, 150, TraitModel::M2, WScenario::W4);
        assert!(matches!(small.validate(), Err(Error::ModelTooLarge { .. })));
    }

    fn outcome(pairs: &[(usize, usize)], mains: &[usize]) -> ReplicateOutcome {
        let ranked: Vec<TermId> = pairs.iter().map(|&(j, k)| TermId::Inter(j, k)).chain(mains.iter().map(|&j| TermId::Main(j))).collect();
        let abs_t = vec![1.0; ranked.len()];
        ReplicateOutcome { replicate: 0, ranked, abs_t }
    }

    #[test]
    fn perfect_and_useless_selectors() {
        let truth = Truth::new(30, TraitModel::M2);
        let good = outcome(&TraitModel::M2.pairs(), &[0, 1, 2]);
        let bad = outcome(&[(20, 21), (22, 23)], &[25]);
        let e = evaluate(&[good.clone(), good], &truth, 10).unwrap();
        assert!(e.one_minus_fdr.iter().all(|v| *v == 1.0));
        assert!(e.discovery_rate.iter().all(|v| *v == 1.0));
        let e = evaluate(&[bad], &truth, 10).unwrap();
        assert!(e.one_minus_fdr.iter().all(|v| *v == 0.0));
        assert_eq!(e.power.non_active, Some(1.0 / 10.0));
        assert_eq!(e.power.with_interaction, Some(0.0));
        assert_eq!(e.power.counts.iter().sum::<usize>(), 30);
        // nothing selected counts as no false discovery
        let e = evaluate(&[outcome(&[], &[])], &truth, 3).unwrap();
        assert_eq!(e.one_minus_fdr, vec![1.0; 3]);
        assert_eq!(e.discovery_rate, vec![0.0; 3]);
    }

    #[test]
    fn power_table_categories() {
        let truth = Truth::new(40, TraitModel::M2);
        let o = outcome(&[], &[0, 1, 2, 3, 4, 5, 6, 30]);
        let e = evaluate(&[o], &truth, 1).unwrap();
        assert_eq!(e.power.counts, [5, 15, 20]);
        assert_eq!(e.power.with_interaction, Some(1.0));
        assert!((e.power.without_interaction.unwrap() - 2.0 / 15.0).abs() < 1e-12);
        assert_eq!(e.power.non_active, Some(1.0 / 20.0));
        let m1 = evaluate(&[outcome(&[], &[0])], &Truth::new(40, TraitModel::M1), 1).unwrap();
        assert_eq!(m1.power.with_interaction, None);
    }

    #[test]
    fn term_groups() {
        let truth = Truth::new(40, TraitModel::M2);
        assert_eq!(truth.group(TermId::Main(0)), TermGroup::ActiveWithInteraction);
        assert_eq!(truth.group(TermId::Main(7)), TermGroup::ActiveWithoutInteraction);
        assert_eq!(truth.group(TermId::Main(30)), TermGroup::NonActive);
        assert_eq!(truth.group(TermId::Inter(1, 3)), TermGroup::TrueInteraction);
        assert_eq!(truth.group(TermId::Inter(1, 7)), TermGroup::NoiseInteraction);
    }

    #[test]
    fn replicates_are_reproducible() {
        let d = SimDesign { replicates: 2, ..SimDesign::new(120, 60, TraitModel::M2, WScenario::W2) };
        let a = simulate_replicate(&d, 1).unwrap();
        let b = simulate_replicate(&d, 1).unwrap();
        assert_eq!(a.dataset.y, b.dataset.y);
        assert_eq!(a.dataset.x, b.dataset.x);
        assert_ne!(simulate_replicate(&d, 0).unwrap().dataset.y, a.dataset.y);
    }

    #[test]
    fn baseline_without_interactions_adds_few_pairs() {
        let d = SimDesign { replicates: 5, main_power: 0.999, ..SimDesign::new(400, 80, TraitModel::M1, WScenario::W2) };
        let mut pairs = 0;
        for rep in 0..d.replicates {
            let r = simulate_replicate(&d, rep).unwrap();
            let sd = standardize(&r.dataset).unwrap();
            // equal stage sizes: no room is reserved for pairs
            let terms = stagewise_baseline(&sd, 20, 20, &SolverConfig::new(1.0, 0.0)).unwrap();
            pairs += terms.iter().filter(|t| t.is_interaction()).count();
            assert!(terms.len() <= 21);
        }
        assert!(pairs as f64 / d.replicates as f64 <= 2.0, "{pairs}");
    }

    #[test]
    fn baseline_with_every_snp_in_stage_one() {
        let d = SimDesign { replicates: 1, ..SimDesign::new(200, 20, TraitModel::M3, WScenario::W1) };
        let r = simulate_replicate(&d, 0).unwrap();
        let sd = standardize(&r.dataset).unwrap();
        let terms = stagewise_baseline(&sd, 20, 30, &SolverConfig::new(1.0, 0.0)).unwrap();
        assert!(terms.len().abs_diff(30) <= 1);
        assert!(terms.iter().any(|t| t.is_interaction()));
    }

    #[test]
    fn network_method_under_w1_only_finds_true_pairs() {
        let d = SimDesign { replicates: 2, ..SimDesign::new(300, 60, TraitModel::M2, WScenario::W1) };
        let out = run_replicates(&d, &Method::network_default()).unwrap();
        let e = evaluate(&out, &d.truth(), 10).unwrap();
        assert_eq!(e.one_minus_fdr, vec![1.0; 10]);
    }
}
