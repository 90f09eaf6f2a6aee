//! Cyclic coordinate descent for the hierarchical network penalty
//!
//! ```text
//! ½‖y − Σ X_j β_j − Σ X_jk β_jk‖²
//!   + λ₁ Σ_j ( w_jj² ‖X_j β_j‖² + Σ_{k≠j} w_jk² ‖X_jk β_jk‖² )^{1/2}
//!   + λ₂ Σ_{j<k} w_jk ‖X_jk β_jk‖
//! ```
//!
//! Main effects are visited in index order, then allowed pairs in
//! lexicographic order. Each sweep is followed by an exact line search along
//! every nonzero row and by block moves out of zero rows. Between full cycles
//! the solver sweeps the nonzero coordinates only; convergence is judged on a
//! full cycle together with the KKT conditions of the working set.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{CoefficientState, StandardizedDesign, TermId};
use crate::error::{Error, Result};
use crate::network::WeightMatrix;
use crate::screening::{kkt_check, KktScope};
use crate::shrinkage::{self, InteractionTerms, RootControl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    #[default]
    Cyclic,
    /// Mains and pairs reshuffled every full cycle.
    Shuffled(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Convergence threshold on the largest coefficient change in a full cycle.
    pub tol: f64,
    pub max_cycles: usize,
    pub root: RootControl,
    pub order: UpdateOrder,
    /// Record the objective after every coordinate update (slow).
    pub record_trace: bool,
}

impl SolverConfig {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        SolverConfig {
            lambda1,
            lambda2,
            tol: 1e-6,
            max_cycles: 1000,
            root: RootControl::default(),
            order: UpdateOrder::Cyclic,
            record_trace: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Self {
        SolverConfig { lambda1, lambda2, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(Error::config("lambda1", "must be positive and finite"));
        }
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(Error::config("lambda2", "must be non-negative and finite"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.max_cycles == 0 {
            return Err(Error::config("max_cycles", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub coeffs: CoefficientState,
    pub objective: f64,
    pub cycles_used: usize,
    pub converged: bool,
    /// Largest coefficient change in the final full cycle.
    pub last_change: f64,
    /// Number of screening rounds (1 when fit without screening).
    pub screen_rounds: usize,
    /// Number of main effects in the final working set.
    pub working_set: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub trace: Option<Vec<f64>>,
}

impl Solution {
    pub fn main_count(&self) -> usize {
        self.coeffs.main_count()
    }

    /// `Err(NotConverged)` for a solution that hit the cycle cap.
    pub fn check_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged { cycles: self.cycles_used })
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

/// A design paired with its weight matrix, with the pair norms `X_jkᵀX_jk`
/// computed once.
pub struct Problem<'a> {
    pub sd: &'a StandardizedDesign,
    pub w: &'a WeightMatrix,
    pair_xtx: Vec<f64>,
}

impl<'a> Problem<'a> {
    pub fn new(sd: &'a StandardizedDesign, w: &'a WeightMatrix) -> Result<Self> {
        if sd.p() != w.p() {
            return Err(Error::Invalid(format!("design has {} SNPs but weights cover {}", sd.p(), w.p())));
        }
        let pair_xtx = w
            .pairs()
            .iter()
            .map(|&(j, k, _)| {
                let (a, b) = (sd.col(j), sd.col(k));
                a.iter().zip(b).map(|(x, y)| x * x * y * y).sum()
            })
            .collect();
        Ok(Problem { sd, w, pair_xtx })
    }

    pub fn pair_xtx(&self, idx: usize) -> f64 {
        self.pair_xtx[idx]
    }

    /// Main effects that may enter (finite diagonal weight).
    pub fn eligible_mains(&self) -> Vec<usize> {
        (0..self.sd.p()).filter(|&j| self.w.diag(j).is_finite()).collect()
    }

    /// Pair indices with both SNPs in `mains` (sorted).
    pub(crate) fn pairs_within(&self, mains: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.sd.p()];
        for &j in mains {
            inside[j] = true;
        }
        (0..self.w.n_pairs())
            .filter(|&i| {
                let (j, k, _) = self.w.pair(i);
                inside[j] && inside[k]
            })
            .collect()
    }

    pub(crate) fn state_from(&self, coeffs: Option<&CoefficientState>) -> Result<State> {
        let mut st = State::zeros(self);
        if let Some(c) = coeffs {
            for (term, v) in c.iter() {
                match term {
                    TermId::Main(j) => {
                        if j >= self.sd.p() {
                            return Err(Error::IndexOutOfRange { index: j, p: self.sd.p() });
                        }
                        if !self.w.diag(j).is_finite() {
                            return Err(Error::Invalid(format!("main effect {j} is excluded by the weights")));
                        }
                        st.beta[j] = v;
                    }
                    TermId::Inter(j, k) => {
                        let idx = self.w.pair_index(j, k).ok_or(Error::ExcludedPair(j, k))?;
                        st.gamma[idx] = v;
                    }
                }
            }
            st.recompute(self);
        }
        Ok(st)
    }

    pub(crate) fn objective_of(&self, st: &State, cfg: &SolverConfig) -> f64 {
        let rss: f64 = st.resid.iter().map(|r| r * r).sum();
        let mut group = vec![0.0; self.sd.p()];
        let mut l2 = 0.0;
        for (i, &g) in st.gamma.iter().enumerate() {
            if g != 0.0 {
                let (j, k, w) = self.w.pair(i);
                let n = self.pair_xtx[i];
                let q = w * w * n * g * g;
                group[j] += q;
                group[k] += q;
                l2 += w * n.sqrt() * g.abs();
            }
        }
        let l1: f64 = (0..self.sd.p())
            .map(|j| {
                let main = if st.beta[j] != 0.0 { (self.w.diag(j) * st.beta[j]).powi(2) } else { 0.0 };
                (main + group[j]).sqrt()
            })
            .sum();
        0.5 * rss + cfg.lambda1 * l1 + cfg.lambda2 * l2
    }

    pub(crate) fn to_coeffs(&self, st: &State) -> CoefficientState {
        let mains = st.beta.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (TermId::Main(j), *v));
        let inters = st.gamma.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| {
            let (j, k, _) = self.w.pair(i);
            (TermId::Inter(j, k), *v)
        });
        mains.chain(inters).collect()
    }

    pub(crate) fn solution(&self, st: &State, cfg: &SolverConfig, run: &CdRun, working_set: usize, rounds: usize) -> Solution {
        Solution {
            coeffs: self.to_coeffs(st),
            objective: self.objective_of(st, cfg),
            cycles_used: run.cycles,
            converged: run.converged,
            last_change: run.last_change,
            screen_rounds: rounds,
            working_set,
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            trace: run.trace.clone(),
        }
    }

    /// `−∇L` for a main effect: `X_jᵀ r`.
    pub(crate) fn main_gradient(&self, st: &State, j: usize) -> f64 {
        dot(self.sd.col(j), &st.resid)
    }

    /// `−∇L` for a pair: `X_jkᵀ r`.
    pub(crate) fn pair_gradient(&self, st: &State, idx: usize) -> f64 {
        let (j, k, _) = self.w.pair(idx);
        dot3(self.sd.col(j), self.sd.col(k), &st.resid)
    }

    /// Interaction part of row `j`'s group, excluding pair `skip`.
    fn group_without(&self, st: &State, j: usize, skip: Option<usize>) -> f64 {
        let own = skip.map_or(0.0, |i| {
            let g = st.gamma[i];
            if g == 0.0 {
                0.0
            } else {
                let w = self.w.pair(i).2;
                w * w * self.pair_xtx[i] * g * g
            }
        });
        let others = st.group_nnz[j] - usize::from(skip.is_some_and(|i| st.gamma[i] != 0.0));
        if others == 0 {
            0.0
        } else {
            (st.group[j] - own).max(0.0)
        }
    }

    pub(crate) fn main_update_value(&self, st: &State, cfg: &SolverConfig, j: usize, gradient: f64) -> f64 {
        let beta_hat = gradient + st.beta[j];
        let c = self.group_without(st, j, None);
        shrinkage::shrink_main_value(beta_hat, cfg.lambda1, self.w.diag(j), c, cfg.root)
    }

    pub(crate) fn pair_terms(&self, st: &State, cfg: &SolverConfig, idx: usize, gradient: f64) -> InteractionTerms {
        let (j, k, w) = self.w.pair(idx);
        let xtx = self.pair_xtx[idx];
        let main_part = |m: usize| {
            let b = st.beta[m];
            if b == 0.0 {
                0.0
            } else {
                (self.w.diag(m) * b).powi(2)
            }
        };
        InteractionTerms {
            beta_hat: gradient / xtx + st.gamma[idx],
            lambda1: cfg.lambda1,
            lambda2: cfg.lambda2,
            w,
            xtx,
            c1: main_part(j) + self.group_without(st, j, Some(idx)),
            c2: main_part(k) + self.group_without(st, k, Some(idx)),
        }
    }

    fn set_main(&self, st: &mut State, j: usize, value: f64) -> f64 {
        let delta = value - st.beta[j];
        if delta != 0.0 {
            for (r, x) in st.resid.iter_mut().zip(self.sd.col(j)) {
                *r -= delta * x;
            }
            st.beta[j] = value;
        }
        delta.abs()
    }

    fn set_pair(&self, st: &mut State, idx: usize, value: f64) -> f64 {
        let old = st.gamma[idx];
        let delta = value - old;
        if delta != 0.0 {
            let (j, k, w) = self.w.pair(idx);
            for ((r, a), b) in st.resid.iter_mut().zip(self.sd.col(j)).zip(self.sd.col(k)) {
                *r -= delta * a * b;
            }
            let scale = w * w * self.pair_xtx[idx];
            let dq = scale * (value * value - old * old);
            let dnnz = (value != 0.0) as isize - (old != 0.0) as isize;
            for m in [j, k] {
                st.group[m] += dq;
                st.group_nnz[m] = (st.group_nnz[m] as isize + dnnz) as usize;
                if st.group_nnz[m] == 0 {
                    st.group[m] = 0.0;
                }
            }
            st.gamma[idx] = value;
        }
        delta.abs()
    }

    /// Scaled steepest-descent data for SNP `m` whose main effect and every
    /// interaction are zero. Only pairs accepted by `pair_ok` may move.
    ///
    /// With `u₀ = w_mm β_m` and `u_k = w_mk ‖X_mk‖ β_mk` the row's group norm
    /// is `‖u‖`, so the row can leave zero exactly when
    /// `(X_mᵀr / w_mm)² + Σ_k (|X_mkᵀr| / (w_mk‖X_mk‖) − λ₂ − λ₁·[row k zero])₊² > λ₁²`.
    /// Single-coordinate thresholds miss the joint move.
    pub(crate) fn zero_row_block(&self, st: &State, cfg: &SolverConfig, m: usize, pair_ok: impl Fn(usize) -> bool) -> RowBlock {
        let wmm = self.w.diag(m);
        let main = self.main_gradient(st, m) / wmm;
        let mut pairs = Vec::new();
        let mut sq = main * main;
        let incident = self.w.incident(m);
        if !incident.is_empty() {
            let v: Vec<f64> = self.sd.col(m).iter().zip(&st.resid).map(|(x, r)| x * r).collect();
            for &idx in incident {
                if !pair_ok(idx) {
                    continue;
                }
                let (j, k, w) = self.w.pair(idx);
                let other = if j == m { k } else { j };
                let other_zero = st.beta[other] == 0.0 && st.group_nnz[other] == 0;
                let h = dot(&v, self.sd.col(other)) / (w * self.pair_xtx[idx].sqrt());
                let t = cfg.lambda2 + if other_zero { cfg.lambda1 } else { 0.0 };
                let excess = h.abs() - t;
                if excess > 0.0 {
                    pairs.push((idx, h.signum() * excess));
                    sq += excess * excess;
                }
            }
        }
        RowBlock { m, main, pairs, norm: sq.sqrt() }
    }

    /// Exact line search from zero along the steepest-descent direction of an
    /// all-zero row. Returns the largest coefficient change.
    fn escape_zero_row(&self, st: &mut State, cfg: &SolverConfig, blk: &RowBlock) -> f64 {
        let (l1, l2) = (cfg.lambda1, cfg.lambda2);
        if blk.norm <= l1 {
            return 0.0;
        }
        let m = blk.m;
        let d_main = blk.main / blk.norm / self.w.diag(m);
        let mut xd: Vec<f64> = self.sd.col(m).iter().map(|x| d_main * x).collect();
        // (direction in coefficient space, u_k, squared norm of the partner row)
        let mut moves = Vec::with_capacity(blk.pairs.len());
        let mut l2sum = 0.0;
        for &(idx, v) in &blk.pairs {
            let (j, k, w) = self.w.pair(idx);
            let u = v / blk.norm;
            let d = u / (w * self.pair_xtx[idx].sqrt());
            for ((o, a), b) in xd.iter_mut().zip(self.sd.col(j)).zip(self.sd.col(k)) {
                *o += d * a * b;
            }
            let other = if j == m { k } else { j };
            let main_part = if st.beta[other] == 0.0 { 0.0 } else { (self.w.diag(other) * st.beta[other]).powi(2) };
            let s2 = main_part + if st.group_nnz[other] > 0 { st.group[other] } else { 0.0 };
            moves.push((idx, d, u, s2));
            l2sum += l2 * u.abs();
        }
        let a = dot(&xd, &st.resid);
        let b = dot(&xd, &xd);
        if !(b > 0.0) {
            return 0.0;
        }
        let slope = |tau: f64| {
            let mut val = -a + b * tau + l1 + l2sum;
            let mut deriv = b;
            for &(_, _, u, s2) in &moves {
                if s2 == 0.0 {
                    val += l1 * u.abs();
                } else {
                    let q = (s2 + tau * tau * u * u).sqrt();
                    val += l1 * tau * u * u / q;
                    deriv += l1 * u * u * s2 / (q * q * q);
                }
            }
            (val, deriv)
        };
        if slope(0.0).0 >= 0.0 {
            return 0.0;
        }
        let tau_hi = a / b;
        let alpha = shrinkage::solve_increasing(
            |x| {
                let (v, d) = slope(x * tau_hi);
                (v, d * tau_hi)
            },
            cfg.root,
        );
        let tau = alpha * tau_hi;
        if tau <= 0.0 {
            return 0.0;
        }
        let mut change = self.set_main(st, m, tau * d_main);
        for &(idx, d, _, _) in &moves {
            change = change.max(self.set_pair(st, idx, tau * d));
        }
        change
    }

    /// Exact line search along the ray through row `m`'s current
    /// coefficients, `β_row → t β_row` with `t ≥ 0`. Returns the largest
    /// coefficient change.
    ///
    /// Row `m`'s own norm is linear in `t`, so this direction carries no
    /// penalty curvature from its group. Single coordinates of a small row
    /// see curvature `λ₁ w² ‖X‖² / ‖row‖` and barely move.
    fn scale_row(&self, st: &mut State, cfg: &SolverConfig, m: usize) -> f64 {
        let (l1, l2) = (cfg.lambda1, cfg.lambda2);
        let own = self.row_norm(st, m);
        if own == 0.0 {
            return 0.0;
        }
        let bm = st.beta[m];
        let mut v: Vec<f64> = if bm != 0.0 { self.sd.col(m).iter().map(|x| bm * x).collect() } else { vec![0.0; self.sd.n()] };
        // (rest of the partner row's squared norm, this pair's share of it)
        let mut partners = Vec::new();
        let mut l2sum = 0.0;
        for &idx in self.w.incident(m) {
            let g = st.gamma[idx];
            if g == 0.0 {
                continue;
            }
            let (j, k, w) = self.w.pair(idx);
            for ((o, a), b) in v.iter_mut().zip(self.sd.col(j)).zip(self.sd.col(k)) {
                *o += g * a * b;
            }
            let other = if j == m { k } else { j };
            let q = w * w * self.pair_xtx[idx] * g * g;
            let rest = (self.row_norm(st, other).powi(2) - q).max(0.0);
            partners.push((rest, q));
            l2sum += l2 * w * self.pair_xtx[idx].sqrt() * g.abs();
        }
        let a = dot(&v, &st.resid);
        let b = dot(&v, &v);
        if !(b > 0.0) {
            return 0.0;
        }
        let slope = |t: f64| {
            let mut val = -a + (t - 1.0) * b + l1 * own + l2sum;
            let mut deriv = b;
            for &(rest, q) in &partners {
                let s = (rest + t * t * q).sqrt();
                if s == 0.0 {
                    val += l1 * q.sqrt();
                } else {
                    val += l1 * t * q / s;
                    deriv += l1 * q * rest / (s * s * s);
                }
            }
            (val, deriv)
        };
        let t = if slope(0.0).0 >= 0.0 {
            0.0
        } else {
            let t_hi = 1.0 + a.max(0.0) / b;
            t_hi * shrinkage::solve_increasing(
                |x| {
                    let (val, d) = slope(x * t_hi);
                    (val, d * t_hi)
                },
                cfg.root,
            )
        };
        if t == 1.0 {
            return 0.0;
        }
        let mut change = if bm != 0.0 { self.set_main(st, m, t * bm) } else { 0.0 };
        for &idx in self.w.incident(m) {
            let g = st.gamma[idx];
            if g != 0.0 {
                change = change.max(self.set_pair(st, idx, t * g));
            }
        }
        change
    }

    /// `scale_row` on every nonzero row of `mains`.
    fn scale_rows(&self, st: &mut State, cfg: &SolverConfig, mains: &[usize], trace: &mut Option<Vec<f64>>) -> f64 {
        let mut max_change = 0.0f64;
        for &m in mains {
            if st.beta[m] != 0.0 || st.group_nnz[m] != 0 {
                max_change = max_change.max(self.scale_row(st, cfg, m));
                if let Some(t) = trace.as_mut() {
                    t.push(self.objective_of(st, cfg));
                }
            }
        }
        max_change
    }

    /// Scaled norm of row `m`: `(w_mm² β_m² + Σ_k w_mk² ‖X_mk‖² β_mk²)^{1/2}`.
    fn row_norm(&self, st: &State, m: usize) -> f64 {
        let main = if st.beta[m] == 0.0 { 0.0 } else { (self.w.diag(m) * st.beta[m]).powi(2) };
        let group = if st.group_nnz[m] > 0 { st.group[m].max(0.0) } else { 0.0 };
        (main + group).sqrt()
    }

    /// Set row `m` (main effect and every interaction) to zero. Returns the
    /// largest coefficient change.
    fn zero_row(&self, st: &mut State, m: usize) -> f64 {
        let mut change = self.set_main(st, m, 0.0);
        for &idx in self.w.incident(m) {
            if st.gamma[idx] != 0.0 {
                change = change.max(self.set_pair(st, idx, 0.0));
            }
        }
        change
    }

    /// Zero the rows in `rows` together, keeping the result only when the
    /// objective does not increase.
    fn try_zero_rows(&self, st: &mut State, cfg: &SolverConfig, rows: &[usize]) -> Option<f64> {
        let before = self.objective_of(st, cfg);
        let saved = st.clone();
        let mut change = 0.0f64;
        for &m in rows {
            change = change.max(self.zero_row(st, m));
        }
        if self.objective_of(st, cfg) <= before {
            Some(change)
        } else {
            *st = saved;
            None
        }
    }

    /// Move every all-zero row in `mains` whose joint block condition fails.
    ///
    /// Small rows are first tried at exactly zero, jointly and then one by
    /// one, whenever that does not raise the objective. Coordinate updates
    /// approach a zero row only geometrically, and two small rows sharing a
    /// pair can hold each other away from zero indefinitely.
    fn escape_zero_rows(&self, st: &mut State, cfg: &SolverConfig, mains: &[usize], pair_in: &[bool], trace: &mut Option<Vec<f64>>) -> f64 {
        let mut max_change = 0.0f64;
        let small: Vec<usize> = mains
            .iter()
            .copied()
            .filter(|&m| (st.beta[m] != 0.0 || st.group_nnz[m] != 0) && self.row_norm(st, m) <= SMALL_ROW)
            .collect();
        if !small.is_empty() {
            match self.try_zero_rows(st, cfg, &small) {
                Some(c) => max_change = max_change.max(c),
                None => {
                    for &m in &small {
                        if let Some(c) = self.try_zero_rows(st, cfg, &[m]) {
                            max_change = max_change.max(c);
                        }
                    }
                }
            }
            if let Some(t) = trace.as_mut() {
                t.push(self.objective_of(st, cfg));
            }
        }
        for &m in mains {
            if st.beta[m] != 0.0 || st.group_nnz[m] != 0 {
                continue;
            }
            let blk = self.zero_row_block(st, cfg, m, |i| pair_in[i]);
            if blk.norm > cfg.lambda1 * (1.0 + ESCAPE_REL_TOL) {
                max_change = max_change.max(self.escape_zero_row(st, cfg, &blk));
                if let Some(t) = trace.as_mut() {
                    t.push(self.objective_of(st, cfg));
                }
            }
        }
        max_change
    }

    /// One pass over `mains` then `pairs`. Returns the largest change.
    fn sweep(&self, st: &mut State, cfg: &SolverConfig, mains: &[usize], pairs: &[usize], grouped: bool, trace: &mut Option<Vec<f64>>) -> f64 {
        let mut max_change = 0.0f64;
        for &j in mains {
            let g = self.main_gradient(st, j);
            let v = self.main_update_value(st, cfg, j, g);
            max_change = max_change.max(self.set_main(st, j, v));
            if let Some(t) = trace.as_mut() {
                t.push(self.objective_of(st, cfg));
            }
        }
        let n = self.sd.n();
        let mut cache_j = usize::MAX;
        let mut v = vec![0.0; if grouped { n } else { 0 }];
        for &idx in pairs {
            let (j, k, _) = self.w.pair(idx);
            let g = if grouped {
                if cache_j != j {
                    for ((vi, x), r) in v.iter_mut().zip(self.sd.col(j)).zip(&st.resid) {
                        *vi = x * r;
                    }
                    cache_j = j;
                }
                dot(&v, self.sd.col(k))
            } else {
                self.pair_gradient(st, idx)
            };
            let terms = self.pair_terms(st, cfg, idx, g);
            let value = shrinkage::shrink_interaction_value(&terms, cfg.root);
            let change = self.set_pair(st, idx, value);
            if change != 0.0 {
                cache_j = usize::MAX;
            }
            max_change = max_change.max(change);
            if let Some(t) = trace.as_mut() {
                t.push(self.objective_of(st, cfg));
            }
        }
        max_change
    }

    /// Coordinate descent over the working set `mains` (and the allowed pairs
    /// inside it), starting from `st`.
    pub(crate) fn run(&self, st: &mut State, cfg: &SolverConfig, mains: &[usize]) -> CdRun {
        let pairs = self.pairs_within(mains);
        let mut pair_in = vec![false; self.w.n_pairs()];
        for &i in &pairs {
            pair_in[i] = true;
        }
        let mut inside = vec![false; self.sd.p()];
        for &j in mains {
            inside[j] = true;
        }
        let mut trace = cfg.record_trace.then(|| vec![self.objective_of(st, cfg)]);
        let mut rng = match cfg.order {
            UpdateOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            UpdateOrder::Cyclic => None,
        };
        let mut order_mains = mains.to_vec();
        let mut order_pairs = pairs.clone();
        let mut cycles = 0;
        let mut last_change = f64::INFINITY;
        let mut converged = false;
        while cycles < cfg.max_cycles {
            st.recompute(self);
            if let Some(rng) = rng.as_mut() {
                order_mains.shuffle(rng);
                order_pairs.shuffle(rng);
            }
            last_change = self.sweep(st, cfg, &order_mains, &order_pairs, rng.is_none(), &mut trace);
            if !pairs.is_empty() {
                last_change = last_change.max(self.scale_rows(st, cfg, mains, &mut trace));
                last_change = last_change.max(self.escape_zero_rows(st, cfg, mains, &pair_in, &mut trace));
            }
            cycles += 1;
            if last_change <= cfg.tol {
                // small steps alone do not certify tiny coefficients in a
                // non-separable group; require the restricted KKT conditions
                let report = kkt_check(self, st, cfg, cfg.tol, KktScope::Inside(&inside));
                if report.ok {
                    converged = true;
                    break;
                }
            }
            // sweep the current support until it settles
            for _ in 0..cfg.max_cycles {
                let active_mains: Vec<usize> = mains.iter().copied().filter(|&j| st.beta[j] != 0.0 || st.group_nnz[j] > 0).collect();
                let active_pairs: Vec<usize> = pairs.iter().copied().filter(|&i| st.gamma[i] != 0.0).collect();
                if active_mains.is_empty() && active_pairs.is_empty() {
                    break;
                }
                let mut change = self.sweep(st, cfg, &active_mains, &active_pairs, rng.is_none(), &mut trace);
                if !active_pairs.is_empty() {
                    change = change.max(self.scale_rows(st, cfg, &active_mains, &mut trace));
                }
                if change <= cfg.tol * 0.1 {
                    break;
                }
            }
        }
        CdRun { cycles, converged, last_change, trace }
    }
}

/// Scaled row norm at or below which a row is tried at exactly zero.
const SMALL_ROW: f64 = 1e-4;

/// Relative margin by which an all-zero row's block norm must exceed `λ₁`
/// before the solver moves it.
const ESCAPE_REL_TOL: f64 = 1e-9;

/// Scaled block gradient of an all-zero row (see `Problem::zero_row_block`).
pub(crate) struct RowBlock {
    pub m: usize,
    pub main: f64,
    /// `(pair index, v_k)` for the pairs with a positive excess.
    pub pairs: Vec<(usize, f64)>,
    pub norm: f64,
}

pub(crate) struct CdRun {
    pub cycles: usize,
    pub converged: bool,
    pub last_change: f64,
    pub trace: Option<Vec<f64>>,
}

/// Dense coefficient state with its residual and group sums.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub resid: Vec<f64>,
    /// `Σ_k w_jk² X_jkᵀX_jk β_jk²` over the pairs of SNP `j`.
    pub group: Vec<f64>,
    pub group_nnz: Vec<usize>,
}

impl State {
    pub fn zeros(pb: &Problem) -> Self {
        State {
            beta: vec![0.0; pb.sd.p()],
            gamma: vec![0.0; pb.w.n_pairs()],
            resid: pb.sd.y().to_vec(),
            group: vec![0.0; pb.sd.p()],
            group_nnz: vec![0; pb.sd.p()],
        }
    }

    /// Rebuild residual and group sums from the coefficients.
    pub fn recompute(&mut self, pb: &Problem) {
        self.resid.copy_from_slice(pb.sd.y());
        for (j, &b) in self.beta.iter().enumerate() {
            if b != 0.0 {
                for (r, x) in self.resid.iter_mut().zip(pb.sd.col(j)) {
                    *r -= b * x;
                }
            }
        }
        self.group.iter_mut().for_each(|g| *g = 0.0);
        self.group_nnz.iter_mut().for_each(|g| *g = 0);
        for (i, &g) in self.gamma.iter().enumerate() {
            if g != 0.0 {
                let (j, k, w) = pb.w.pair(i);
                for ((r, a), b) in self.resid.iter_mut().zip(pb.sd.col(j)).zip(pb.sd.col(k)) {
                    *r -= g * a * b;
                }
                let q = w * w * pb.pair_xtx[i] * g * g;
                for m in [j, k] {
                    self.group[m] += q;
                    self.group_nnz[m] += 1;
                }
            }
        }
    }
}

/// Penalized objective of `coeffs`.
pub fn objective(sd: &StandardizedDesign, w: &WeightMatrix, cfg: &SolverConfig, coeffs: &CoefficientState) -> Result<f64> {
    let pb = Problem::new(sd, w)?;
    let st = pb.state_from(Some(coeffs))?;
    Ok(pb.objective_of(&st, cfg))
}

/// `y` minus every fitted contribution except that of `term`.
pub fn partial_residual(sd: &StandardizedDesign, coeffs: &CoefficientState, term: TermId) -> Result<Vec<f64>> {
    let p = sd.p();
    let mut r = sd.y().to_vec();
    for (t, v) in coeffs.iter() {
        if t == term {
            continue;
        }
        match t {
            TermId::Main(j) => {
                if j >= p {
                    return Err(Error::IndexOutOfRange { index: j, p });
                }
                for (ri, x) in r.iter_mut().zip(sd.col(j)) {
                    *ri -= v * x;
                }
            }
            TermId::Inter(j, k) => {
                if j >= p || k >= p {
                    return Err(Error::IndexOutOfRange { index: j.max(k), p });
                }
                for ((ri, a), b) in r.iter_mut().zip(sd.col(j)).zip(sd.col(k)) {
                    *ri -= v * a * b;
                }
            }
        }
    }
    Ok(r)
}

/// Coordinate update for main effect `j` given all other coefficients.
pub fn shrink_main(sd: &StandardizedDesign, w: &WeightMatrix, cfg: &SolverConfig, coeffs: &CoefficientState, j: usize) -> Result<f64> {
    if j >= sd.p() {
        return Err(Error::IndexOutOfRange { index: j, p: sd.p() });
    }
    if !w.diag(j).is_finite() {
        return Ok(0.0);
    }
    let pb = Problem::new(sd, w)?;
    let st = pb.state_from(Some(coeffs))?;
    let g = pb.main_gradient(&st, j);
    let v = pb.main_update_value(&st, cfg, j, g);
    if !v.is_finite() {
        return Err(Error::NonFiniteInput("main-effect update"));
    }
    Ok(v)
}

/// Coordinate update for the interaction `(j, k)` given all other coefficients.
pub fn shrink_interaction(
    sd: &StandardizedDesign,
    w: &WeightMatrix,
    cfg: &SolverConfig,
    coeffs: &CoefficientState,
    j: usize,
    k: usize,
) -> Result<f64> {
    let idx = w.pair_index(j, k).ok_or(Error::ExcludedPair(j.min(k), j.max(k)))?;
    let pb = Problem::new(sd, w)?;
    let st = pb.state_from(Some(coeffs))?;
    let g = pb.pair_gradient(&st, idx);
    let terms = pb.pair_terms(&st, cfg, idx, g);
    Ok(shrinkage::shrink_interaction_value(&terms, cfg.root))
}

/// Fit the full problem. A solution that hits `max_cycles` is returned with
/// `converged = false`.
pub fn fit(sd: &StandardizedDesign, w: &WeightMatrix, cfg: &SolverConfig, warm_start: Option<&CoefficientState>) -> Result<Solution> {
    cfg.validate()?;
    let pb = Problem::new(sd, w)?;
    let mut st = pb.state_from(warm_start)?;
    let mains = pb.eligible_mains();
    let run = pb.run(&mut st, cfg, &mains);
    if !run.converged {
        log::warn!("coordinate descent stopped after {} cycles (last change {:.3e})", run.cycles, run.last_change);
    }
    Ok(pb.solution(&st, cfg, &run, mains.len(), 1))
}
