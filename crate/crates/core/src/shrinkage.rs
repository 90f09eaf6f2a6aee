//! Scalar shrinkage factors for the coordinate updates.
//!
//! Each coordinate update is `β̃ = α β̂` with `α ∈ [0, 1]` the root of a
//! strictly increasing scalar equation. The roots are found with Newton's
//! method started at `α = 0.5`, guarded by a bracket on `[0, 1]` that falls
//! back to bisection whenever a Newton step leaves the bracket or stalls.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootControl {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RootControl {
    fn default() -> Self {
        RootControl { tol: 1e-13, max_iter: 50 }
    }
}

/// Root of an increasing function on `(0, 1]` given `f(lo) < 0 <= f(1)`.
/// `f` returns `(value, derivative)`.
pub fn solve_increasing<F>(f: F, ctl: RootControl) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut alpha = 0.5;
    let mut last_abs = f64::INFINITY;
    for _ in 0..ctl.max_iter {
        let (v, d) = f(alpha);
        if v == 0.0 {
            return alpha;
        }
        if v < 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let newton = alpha - v / d;
        let stalled = v.abs() > 0.5 * last_abs;
        last_abs = v.abs();
        let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi && !stalled {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - alpha).abs() <= ctl.tol || hi - lo <= ctl.tol {
            return next.clamp(0.0, 1.0);
        }
        alpha = next;
    }
    // Newton budget spent: finish with plain bisection.
    while hi - lo > ctl.tol {
        let mid = 0.5 * (lo + hi);
        if f(mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual of the main-effect shrinkage equation
/// `α (1 + λ₁ w² / sqrt(w² α² β̂² + c)) − 1` and its derivative in `α`
/// (unit-norm column).
pub fn main_equation(alpha: f64, beta_hat: f64, lambda1: f64, w: f64, c: f64) -> (f64, f64) {
    let w2 = w * w;
    let s = (w2 * alpha * alpha * beta_hat * beta_hat + c).sqrt();
    let value = alpha * (1.0 + lambda1 * w2 / s) - 1.0;
    let deriv = 1.0 + lambda1 * w2 * c / (s * s * s);
    (value, deriv)
}

/// Shrinkage factor for a main effect with unit-norm column, unshrunken
/// estimate `beta_hat`, diagonal weight `w` and group remainder `c`.
pub fn main_alpha(beta_hat: f64, lambda1: f64, w: f64, c: f64, ctl: RootControl) -> f64 {
    if beta_hat == 0.0 {
        return 0.0;
    }
    if lambda1 == 0.0 {
        return 1.0;
    }
    if c <= 0.0 {
        return (1.0 - lambda1 * w / beta_hat.abs()).max(0.0);
    }
    solve_increasing(|a| main_equation(a, beta_hat, lambda1, w, c), ctl)
}

/// Shrunken main effect `α β̂`.
pub fn shrink_main_value(beta_hat: f64, lambda1: f64, w: f64, c: f64, ctl: RootControl) -> f64 {
    main_alpha(beta_hat, lambda1, w, c, ctl) * beta_hat
}

/// Inputs to the interaction shrinkage equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionTerms {
    pub beta_hat: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub w: f64,
    /// `X_jkᵀ X_jk`.
    pub xtx: f64,
    pub c1: f64,
    pub c2: f64,
}

impl InteractionTerms {
    /// Magnitude of the right-hand side `(|β̂| − λ₂ w / sqrt(XᵀX))₊`.
    pub fn rhs(&self) -> f64 {
        (self.beta_hat.abs() - self.lambda2 * self.w / self.xtx.sqrt()).max(0.0)
    }

    /// `|LHS(α)| − |RHS|` and its derivative, for `α > 0`.
    pub fn equation(&self, alpha: f64) -> (f64, f64) {
        let b = self.beta_hat.abs();
        let w2 = self.w * self.w;
        let q = w2 * self.xtx * alpha * alpha * b * b;
        let s1 = (q + self.c1).sqrt();
        let s2 = (q + self.c2).sqrt();
        let value = alpha * b * (1.0 + self.lambda1 * w2 * (1.0 / s1 + 1.0 / s2)) - self.rhs();
        let d1 = if self.c1 > 0.0 { self.c1 / (s1 * s1 * s1) } else { 0.0 };
        let d2 = if self.c2 > 0.0 { self.c2 / (s2 * s2 * s2) } else { 0.0 };
        let deriv = b * (1.0 + self.lambda1 * w2 * (d1 + d2));
        (value, deriv)
    }

    /// Limit of `equation` as `α → 0⁺`.
    fn value_at_zero(&self) -> f64 {
        let zero_groups = (self.c1 <= 0.0) as u8 + (self.c2 <= 0.0) as u8;
        self.lambda1 * self.w * zero_groups as f64 / self.xtx.sqrt() - self.rhs()
    }
}

/// Shrinkage factor for an interaction.
pub fn interaction_alpha(t: &InteractionTerms, ctl: RootControl) -> f64 {
    if t.beta_hat == 0.0 || t.rhs() == 0.0 {
        return 0.0;
    }
    if t.c1 <= 0.0 && t.c2 <= 0.0 {
        let thr = (2.0 * t.lambda1 + t.lambda2) * t.w / (t.xtx.sqrt() * t.beta_hat.abs());
        return (1.0 - thr).max(0.0);
    }
    if t.value_at_zero() >= 0.0 {
        return 0.0;
    }
    let t = InteractionTerms { c1: t.c1.max(0.0), c2: t.c2.max(0.0), ..*t };
    solve_increasing(|a| t.equation(a), ctl)
}

pub fn shrink_interaction_value(t: &InteractionTerms, ctl: RootControl) -> f64 {
    interaction_alpha(t, ctl) * t.beta_hat
}
