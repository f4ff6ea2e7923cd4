//! Spectral description of the stochastic Burgers equation
//! `du = (ν u_xx + λu - γ u u_x) dt + σ u ∘ dW` on `(0, l)` with Dirichlet ends.
//!
//! The eigenbasis is the sine basis `e_n(x) = √(2/l) sin(nπx/l)`. The other
//! modules need only eigenvalues, the bilinear interaction coefficients and
//! the number of resolved modes, so they work through [`SpectralModel`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Eigenvalues `β_n` and coefficients `⟨B(e_p, e_q), e_r⟩` of a model
/// `du = (Lu + B(u,u)) dt + σ u ∘ dW`.
pub trait SpectralModel: Sync {
    fn eigenvalue(&self, n: usize) -> f64;
    fn interaction(&self, p: usize, q: usize, r: usize) -> f64;
    /// Number of resolved modes `m`.
    fn resolved(&self) -> usize;
    fn sigma(&self) -> f64;
    /// Largest mode index that can carry a non-zero interaction with
    /// resolved/first-order-unresolved arguments; `None` if unbounded.
    fn support(&self) -> Option<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersModel {
    pub nu: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub l: f64,
    pub m: usize,
}

impl BurgersModel {
    pub fn new(nu: f64, gamma: f64, lambda: f64, sigma: f64, l: f64) -> Result<Self> {
        let m = Self { nu, gamma, lambda, sigma, l, m: 2 };
        m.validate()?;
        Ok(m)
    }

    /// Base regime: `ν = 2`, `γ = 0.5`, `l = 2.5π`, `λ = 1.7 λ_c`, `σ = 0.35`.
    pub fn regime_a() -> Self {
        let (nu, l) = (2.0, 2.5 * PI);
        Self { nu, gamma: 0.5, lambda: 1.7 * lambda_c(nu, l), sigma: 0.35, l, m: 2 }
    }

    /// Longer domain `l = 3.5π`, `σ = 0.4`, with `λ = factor · λ_c`.
    pub fn regime_b(factor: f64) -> Self {
        let (nu, l) = (2.0, 3.5 * PI);
        Self { nu, gamma: 0.5, lambda: factor * lambda_c(nu, l), sigma: 0.4, l, m: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(param("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(param("l", format!("must be positive, got {}", self.l)));
        }
        if !self.gamma.is_finite() || !self.lambda.is_finite() {
            return Err(param("gamma/lambda", "must be finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(param("sigma", format!("must be non-negative, got {}", self.sigma)));
        }
        if self.m == 0 {
            return Err(param("m", "need at least one resolved mode"));
        }
        Ok(())
    }

    pub fn lambda_c(&self) -> f64 {
        lambda_c(self.nu, self.l)
    }

    pub fn beta(&self, n: usize) -> f64 {
        self.lambda - self.nu * (n * n) as f64 * PI * PI / (self.l * self.l)
    }

    pub fn basis(&self, n: usize, x: f64) -> f64 {
        (2.0 / self.l).sqrt() * (n as f64 * PI * x / self.l).sin()
    }

    /// `π/(√2 l^{3/2})`, the scale shared by every interaction coefficient.
    pub fn scale(&self) -> f64 {
        PI / (2f64.sqrt() * self.l.powf(1.5))
    }

    /// `⟨e_p ∂_x e_q, e_r⟩`.
    pub fn triple(&self, p: usize, q: usize, r: usize) -> f64 {
        let (p, q, r) = (p as i64, q as i64, r as i64);
        let d = |a: i64| if a == r { 1.0 } else { 0.0 };
        q as f64 * self.scale() * (d(p + q) + d(p - q) - d(q - p))
    }

    /// `c = γπ/(√2 l^{3/2})`.
    pub fn c(&self) -> f64 {
        self.gamma * self.scale()
    }

    /// Gaps `β1+β2-β3` and `2β2-β4` entering the one-layer manifold.
    pub fn gaps(&self) -> (f64, f64) {
        let b = |n| self.beta(n);
        (b(1) + b(2) - b(3), 2.0 * b(2) - b(4))
    }

    pub fn check_nr(&self) -> NrReport {
        nr_report(self)
    }

    /// Second-order non-resonance gaps used by the two-layer manifold.
    pub fn check_nr2(&self) -> NrReport {
        let b = |n| self.beta(n);
        let gaps = vec![
            ("β1+β2-β3".to_string(), b(1) + b(2) - b(3)),
            ("β1+2β2-β3".to_string(), b(1) + 2.0 * b(2) - b(3)),
            ("3β1-β3".to_string(), 3.0 * b(1) - b(3)),
            ("3β1+β2-β3".to_string(), 3.0 * b(1) + b(2) - b(3)),
            ("2β1+β2-β4".to_string(), 2.0 * b(1) + b(2) - b(4)),
            ("4β1-β4".to_string(), 4.0 * b(1) - b(4)),
            ("2β2-β4".to_string(), 2.0 * b(2) - b(4)),
        ];
        NrReport::from_gaps(gaps)
    }

    pub(crate) fn require_two_modes(&self) -> Result<()> {
        if self.m != 2 {
            return Err(param("m", format!("the closed-form Burgers reduction needs m = 2, got {}", self.m)));
        }
        Ok(())
    }
}

impl SpectralModel for BurgersModel {
    fn eigenvalue(&self, n: usize) -> f64 {
        self.beta(n)
    }
    fn interaction(&self, p: usize, q: usize, r: usize) -> f64 {
        -self.gamma * self.triple(p, q, r)
    }
    fn resolved(&self) -> usize {
        self.m
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn support(&self) -> Option<usize> {
        Some(2 * self.m)
    }
}

pub fn lambda_c(nu: f64, l: f64) -> f64 {
    nu * PI * PI / (l * l)
}

/// `(σ_*, σ_#) = (√(2g)/(k-1), √g/(k-1))`: below `σ_*` the memory term `M_n`
/// has a finite mean, below `σ_#` a finite variance.
pub fn sigma_bounds(g: f64, k: usize) -> Result<(f64, f64)> {
    if g <= 0.0 {
        return Err(Error::Gap { label: "g".into(), value: g });
    }
    if k < 1 {
        return Err(param("k", "monomial degree must be at least 1"));
    }
    if k == 1 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let km1 = (k - 1) as f64;
    Ok(((2.0 * g).sqrt() / km1, g.sqrt() / km1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NrReport {
    pub gaps: Vec<(String, f64)>,
    pub ok: bool,
}

impl NrReport {
    fn from_gaps(gaps: Vec<(String, f64)>) -> Self {
        let ok = gaps.iter().all(|(_, g)| *g > 0.0);
        Self { gaps, ok }
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min)
    }

    pub fn require(&self) -> Result<()> {
        match self.gaps.iter().find(|(_, g)| *g <= 0.0) {
            Some((label, value)) => Err(Error::Gap { label: label.clone(), value: *value }),
            None => Ok(()),
        }
    }
}

/// Gaps `β_{i1}+β_{i2}-β_n` for every resolved pair that forces an unresolved mode.
pub fn nr_report(model: &dyn SpectralModel) -> NrReport {
    let m = model.resolved();
    let top = model.support().unwrap_or(2 * m);
    let mut gaps: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for n in m + 1..=top {
        for i1 in 1..=m {
            for i2 in 1..=m {
                let b = model.interaction(i1, i2, n);
                if b != 0.0 {
                    let (a, c) = (i1.min(i2), i1.max(i2));
                    let g = model.eigenvalue(i1) + model.eigenvalue(i2) - model.eigenvalue(n);
                    gaps.insert((a, c, n), g);
                }
            }
        }
    }
    let gaps = gaps
        .into_iter()
        .map(|((a, c, n), g)| {
            let label = if a == c { format!("2β{a}-β{n}") } else { format!("β{a}+β{c}-β{n}") };
            (label, g)
        })
        .collect();
    NrReport::from_gaps(gaps)
}

/// A model given by explicit tables, for systems other than Burgers.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TabulatedModel {
    /// `eigenvalues[n-1] = β_n`.
    pub eigenvalues: Vec<f64>,
    pub interactions: BTreeMap<(usize, usize, usize), f64>,
    pub m: usize,
    pub sigma: f64,
}

impl SpectralModel for TabulatedModel {
    fn eigenvalue(&self, n: usize) -> f64 {
        self.eigenvalues.get(n.wrapping_sub(1)).copied().unwrap_or(f64::NEG_INFINITY)
    }
    fn interaction(&self, p: usize, q: usize, r: usize) -> f64 {
        self.interactions.get(&(p, q, r)).copied().unwrap_or(0.0)
    }
    fn resolved(&self) -> usize {
        self.m
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn support(&self) -> Option<usize> {
        if self.eigenvalues.is_empty() {
            None
        } else {
            Some(self.eigenvalues.len())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // composite Simpson on [0, l]
    fn quad(f: impl Fn(f64) -> f64, l: f64) -> f64 {
        let n = 4000;
        let h = l / n as f64;
        let mut s = f(0.0) + f(l);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn regime_a_numbers() {
        let m = BurgersModel::regime_a();
        assert!((m.lambda_c() - 0.32).abs() < 1e-12);
        let (g1, g2) = m.gaps();
        assert!((g1 - 1.824).abs() < 1e-12, "{g1}");
        assert!((g2 - 3.104).abs() < 1e-12, "{g2}");
    }

    #[test]
    fn regime_b_numbers() {
        let m = BurgersModel::regime_b(1.7);
        assert!((m.lambda_c() - 2.0 / 12.25).abs() < 1e-12);
        let (g1, g2) = m.gaps();
        // β1+β2-β3 = λ + 4λ_c,  2β2-β4 = λ + 8λ_c
        assert!((g1 - (1.7 + 4.0) * 2.0 / 12.25).abs() < 1e-12);
        assert!((g1 - 0.93).abs() < 5e-3);
        assert!((g2 - 1.58).abs() < 5e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BurgersModel::new(0.0, 0.5, 1.0, 0.1, 1.0).is_err());
        assert!(BurgersModel::new(1.0, 0.5, 1.0, 0.1, -1.0).is_err());
        assert!(BurgersModel::new(1.0, 0.5, 1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn triple_matches_quadrature() {
        let m = BurgersModel::regime_b(3.0);
        let l = m.l;
        for p in 1..=5 {
            for q in 1..=5 {
                for r in 1..=8 {
                    let f = |x: f64| {
                        let dq = (2.0 / l).sqrt() * (q as f64 * PI / l) * (q as f64 * PI * x / l).cos();
                        m.basis(p, x) * dq * m.basis(r, x)
                    };
                    let num = quad(f, l);
                    assert!((num - m.triple(p, q, r)).abs() < 1e-9, "{p}{q}{r}: {num}");
                }
            }
        }
    }

    #[test]
    fn reduced_coefficients() {
        let m = BurgersModel::regime_a();
        let c = m.c();
        // B(ξ,ξ) projected on e3 has coefficient -3c ξ1ξ2, on e4 -2c ξ2²
        let b3 = m.interaction(1, 2, 3) + m.interaction(2, 1, 3);
        assert!((b3 + 3.0 * c).abs() < 1e-14);
        let b4 = m.interaction(2, 2, 4);
        assert!((b4 + 2.0 * c).abs() < 1e-14);
        assert!((2.0 * c - 2f64.sqrt() * m.gamma * PI / m.l.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn nr_report_burgers() {
        let m = BurgersModel::regime_a();
        let r = m.check_nr();
        assert!(r.ok);
        assert_eq!(r.gaps.len(), 2);
        assert_eq!(r.gaps[0].0, "β1+β2-β3");
        assert!((r.gaps[0].1 - 1.824).abs() < 1e-12);
        assert_eq!(r.gaps[1].0, "2β2-β4");
        assert!((r.gaps[1].1 - 3.104).abs() < 1e-12);
        assert!(m.check_nr2().ok);
    }

    #[test]
    fn nr_failure_is_reported() {
        // λ negative enough that β1+β2-β3 = λ + 4λ_c < 0
        let m = BurgersModel::regime_b(-5.0);
        let r = m.check_nr();
        assert!(!r.ok);
        assert!(matches!(r.require(), Err(Error::Gap { .. })));
    }

    #[test]
    fn sigma_bound_values() {
        let (s1, s2) = sigma_bounds(1.824, 2).unwrap();
        assert!((s1 - (2.0f64 * 1.824).sqrt()).abs() < 1e-15);
        assert!((s2 - 1.824f64.sqrt()).abs() < 1e-15);
        let (a, b) = sigma_bounds(3.104, 3).unwrap();
        assert!((a - (6.208f64).sqrt() / 2.0).abs() < 1e-15);
        assert!((b - 3.104f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(sigma_bounds(-1.0, 2).is_err());
    }

    proptest! {
        #[test]
        fn gap_identity(nu in 0.1f64..5.0, lpi in 1.0f64..6.0, fac in 0.0f64..10.0) {
            let l = lpi * PI;
            let lc = lambda_c(nu, l);
            let m = BurgersModel { nu, gamma: 0.5, lambda: fac * lc, sigma: 0.1, l, m: 2 };
            let (g1, g2) = m.gaps();
            prop_assert!((g1 - (4.0 * lc + m.lambda)).abs() < 1e-9 * (1.0 + m.lambda.abs()));
            prop_assert!((g2 - (8.0 * lc + m.lambda)).abs() < 1e-9 * (1.0 + m.lambda.abs()));
            prop_assert!((m.beta(1) - (m.lambda - lc)).abs() < 1e-12 * (1.0 + m.lambda.abs()));
        }

        #[test]
        fn interaction_antisymmetry(p in 1usize..10, q in 1usize..10, r in 1usize..20) {
            // ⟨e_p ∂e_q, e_r⟩ + ⟨e_r ∂e_q, e_p⟩ = -⟨e_q, ∂(e_p e_r)⟩ + ... integrates to
            // ⟨e_p ∂e_q, e_r⟩ = -⟨e_q, ∂e_p e_r⟩ - ⟨e_q, e_p ∂e_r⟩
            let m = BurgersModel::regime_a();
            let lhs = m.triple(p, q, r);
            let rhs = -m.triple(r, p, q) - m.triple(p, r, q);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn sigma_star_exceeds_sigma_sharp(g in 0.01f64..10.0, k in 2usize..6) {
            let (a, b) = sigma_bounds(g, k).unwrap();
            prop_assert!(a > b);
            prop_assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        }
    }
}
