//! Domain-adaptation error bounds for test-time training with a labeled
//! slice of the test domain.
//!
//! Domain 0 is the source, domain 1 the labeled part of the test domain.
//! `omega` weights the two empirical errors and `lambda` is the share of the
//! `n` labeled samples drawn from each. All logarithms are natural.

mod montecarlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use montecarlo::{hoeffding_bound, lemma2_montecarlo, MonteCarloConfig, MonteCarloReport};

const SIMPLEX_TOL: f64 = 1e-9;

/// Binary hypotheses over a finite domain `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteHypothesisClass {
    hypotheses: Vec<Vec<bool>>,
    vc_dim: usize,
}

impl FiniteHypothesisClass {
    pub fn new(hypotheses: Vec<Vec<bool>>, vc_dim: usize) -> Result<Self> {
        let Some(first) = hypotheses.first() else {
            return Err(Error::Validation("hypothesis class is empty".into()));
        };
        let len = first.len();
        if let Some(k) = hypotheses.iter().position(|h| h.len() != len) {
            return Err(Error::Validation(format!(
                "hypothesis {k} has {} points, expected {len}",
                hypotheses[k].len()
            )));
        }
        Ok(FiniteHypothesisClass { hypotheses, vc_dim })
    }

    pub fn hypotheses(&self) -> &[Vec<bool>] {
        &self.hypotheses
    }

    pub fn vc_dim(&self) -> usize {
        self.vc_dim
    }

    pub fn domain_size(&self) -> usize {
        self.hypotheses[0].len()
    }
}

fn disagreement(h: &[bool], g: &[bool], sample: &[usize]) -> f64 {
    sample.iter().filter(|&&x| h[x] != g[x]).count() as f64 / sample.len() as f64
}

/// `2 * max over pairs (h, h')` of the gap between their disagreement rates
/// on `s1` and on `s2`.
pub fn empirical_hdh_distance(hc: &FiniteHypothesisClass, s1: &[usize], s2: &[usize]) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::Validation("H-delta-H distance needs two nonempty samples".into()));
    }
    let size = hc.domain_size();
    if let Some(&x) = s1.iter().chain(s2).find(|&&x| x >= size) {
        return Err(Error::Validation(format!("sample point {x} outside the domain of size {size}")));
    }
    let hs = hc.hypotheses();
    let mut best = 0.0f64;
    for (a, h) in hs.iter().enumerate() {
        for g in &hs[a + 1..] {
            best = best.max((disagreement(h, g, s1) - disagreement(h, g, s2)).abs());
        }
    }
    Ok(2.0 * best)
}

fn check_simplex(name: &str, v: [f64; 2]) -> Result<()> {
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (v[0] + v[1] - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Validation(format!("{name} = {v:?} is not a probability vector")));
    }
    Ok(())
}

fn check_unit_open(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Validation(format!("{name} = {x} outside (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Estimated H-delta-H distance between the unlabeled samples.
    pub dhat: f64,
    /// Unlabeled sample size per domain.
    pub m: usize,
    /// VC dimension.
    pub d: usize,
    pub delta: f64,
    /// Error of the best joint hypothesis.
    pub eps_joint: f64,
    pub omega: [f64; 2],
    pub lambda: [f64; 2],
    /// Total labeled samples.
    pub n: usize,
    /// Domain whose error is bounded.
    #[serde(default = "default_target")]
    pub target: usize,
}

fn default_target() -> usize {
    1
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            dhat: 0.4,
            m: 2000,
            d: 10,
            delta: 0.05,
            eps_joint: 0.1,
            omega: [0.9, 0.1],
            lambda: [0.9, 0.1],
            n: 1000,
            target: default_target(),
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.dhat.is_finite() && (0.0..=2.0).contains(&self.dhat)) {
            return Err(Error::Validation(format!("dhat = {} outside [0, 2]", self.dhat)));
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::Validation("sample counts m and n must be positive".into()));
        }
        check_unit_open("delta", self.delta)?;
        if !(self.eps_joint.is_finite() && self.eps_joint >= 0.0) {
            return Err(Error::Validation(format!("eps_joint = {} must be non-negative", self.eps_joint)));
        }
        check_simplex("omega", self.omega)?;
        check_simplex("lambda", self.lambda)?;
        if self.target > 1 {
            return Err(Error::Validation(format!("target domain {} must be 0 or 1", self.target)));
        }
        weight_ratio(self.omega, self.lambda).map(|_| ())
    }

    /// `4 * sqrt((2d ln(2m) + ln(2/delta)) / m)`.
    pub fn divergence_slack(&self) -> f64 {
        let (d, m) = (self.d as f64, self.m as f64);
        4.0 * ((2.0 * d * (2.0 * m).ln() + (2.0 / self.delta).ln()) / m).sqrt()
    }

    /// `sqrt((d ln(2N) - ln delta) / (2N))`.
    pub fn sample_term(&self) -> f64 {
        let (d, n) = (self.d as f64, self.n as f64);
        ((d * (2.0 * n).ln() - self.delta.ln()) / (2.0 * n)).sqrt()
    }

    /// Divergence term `A` of the compact test-domain bound.
    pub fn divergence_term(&self) -> f64 {
        self.dhat + self.divergence_slack() + self.eps_joint
    }

    /// Empirical gap term `M` of the compact test-domain bound.
    pub fn gap_term(&self) -> f64 {
        2.0 * self.sample_term()
    }
}

/// `sum_i omega_i^2 / lambda_i`; a zero share is allowed only with zero weight.
pub fn weight_ratio(omega: [f64; 2], lambda: [f64; 2]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..2 {
        if lambda[i] == 0.0 {
            if omega[i] != 0.0 {
                return Err(Error::Validation(format!(
                    "lambda_{i} = 0 with omega_{i} = {} makes the bound infinite",
                    omega[i]
                )));
            }
            continue;
        }
        total += omega[i] * omega[i] / lambda[i];
    }
    Ok(total)
}

/// Upper bound on `e_j(h_hat) - e_j(h_j*)` for `j = b.target`.
pub fn theorem1_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    let c = 2.0 * (weight_ratio(b.omega, b.lambda)? * b.sample_term().powi(2)).sqrt();
    let cross: f64 = (0..2)
        .filter(|&i| i != b.target)
        .map(|i| b.omega[i] * (b.dhat + b.divergence_slack() + b.eps_joint))
        .sum();
    Ok(cross + c)
}

/// `sqrt(omega0^2/lambda0 + (1-omega0)^2/(1-lambda0))`.
pub fn weight_radical(omega0: f64, lambda0: f64) -> f64 {
    (omega0 * omega0 / lambda0 + (1.0 - omega0) * (1.0 - omega0) / (1.0 - lambda0)).sqrt()
}

/// Compact test-domain bound `omega0 * A + radical * M`.
pub fn test_domain_bound(a: f64, m: f64, omega0: f64, lambda0: f64) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0 && m.is_finite() && m >= 0.0) {
        return Err(Error::Validation(format!("A = {a} and M = {m} must be non-negative")));
    }
    if !(0.0..=1.0).contains(&omega0) {
        return Err(Error::Validation(format!("omega0 = {omega0} outside [0, 1]")));
    }
    check_unit_open("lambda0", lambda0)?;
    Ok(omega0 * a + weight_radical(omega0, lambda0) * m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Check {
    /// Smallest bound over the grid (witness included).
    pub min: f64,
    /// Bound with no labeled test samples: `A + M`.
    pub ftt: f64,
    pub holds: bool,
    /// `(omega0, bound)` on the uniform grid.
    #[serde(skip)]
    pub curve: Vec<(f64, f64)>,
    #[serde(skip)]
    pub argmin: f64,
}

/// Uniform grid `k / (grid - 1)` for `k = 0..grid`.
pub fn omega_grid(grid: usize) -> Vec<f64> {
    (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect()
}

/// Minimizes the test-domain bound over `omega0` and compares with the
/// corner `omega0 = lambda0 = 1`. The grid always includes `omega0 = lambda0`.
pub fn theorem2_check(a: f64, m: f64, lambda0: f64, grid: usize) -> Result<Theorem2Check> {
    if grid < 2 {
        return Err(Error::Validation(format!("grid = {grid} must be at least 2")));
    }
    if !(a > 0.0 && a.is_finite() && m > 0.0 && m.is_finite()) {
        return Err(Error::Validation(format!("A = {a} and M = {m} must be positive")));
    }
    check_unit_open("lambda0", lambda0)?;
    let curve = omega_grid(grid)
        .into_iter()
        .map(|w| Ok((w, test_domain_bound(a, m, w, lambda0)?)))
        .collect::<Result<Vec<_>>>()?;
    let witness = (lambda0, test_domain_bound(a, m, lambda0, lambda0)?);
    let (argmin, min) = curve
        .iter()
        .copied()
        .chain(std::iter::once(witness))
        .fold((f64::NAN, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best });
    let ftt = a + m;
    Ok(Theorem2Check {
        min,
        ftt,
        holds: min < ftt,
        curve,
        argmin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    #[serde(default)]
    pub inputs: BoundInputs,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    101
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            inputs: BoundInputs::default(),
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub theorem1: f64,
    pub test_domain_curve: Vec<(f64, f64)>,
    pub theorem2: Theorem2Check,
}

/// Evaluates both bounds; the test-domain curve uses `A` and `M` derived
/// from `params.inputs` with `lambda0 = lambda[0]`.
pub fn bound_report(params: &BoundParams) -> Result<BoundReport> {
    let b = &params.inputs;
    let theorem1 = theorem1_bound(b)?;
    let t2 = theorem2_check(b.divergence_term(), b.gap_term(), b.lambda[0], params.grid)?;
    Ok(BoundReport {
        inputs: b.clone(),
        theorem1,
        test_domain_curve: t2.curve.clone(),
        theorem2: t2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn halves() -> FiniteHypothesisClass {
        // h0 and h1 disagree exactly on 0..4
        let h0 = vec![false; 8];
        let mut h1 = vec![false; 8];
        h1[..4].iter_mut().for_each(|b| *b = true);
        FiniteHypothesisClass::new(vec![h0, h1], 1).unwrap()
    }

    #[test]
    fn hdh_disjoint_halves_is_two() {
        let d = empirical_hdh_distance(&halves(), &[0, 1, 2, 3], &[4, 5, 6, 7]).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(empirical_hdh_distance(&halves(), &[4, 5, 6, 7], &[0, 1, 2, 3]).unwrap(), 2.0);
    }

    #[test]
    fn hdh_degenerate_cases() {
        let hc = halves();
        assert_eq!(empirical_hdh_distance(&hc, &[0, 5], &[0, 5]).unwrap(), 0.0);
        let single = FiniteHypothesisClass::new(vec![vec![true, false, true]], 1).unwrap();
        assert_eq!(empirical_hdh_distance(&single, &[0], &[1, 2]).unwrap(), 0.0);
        assert!(empirical_hdh_distance(&hc, &[], &[1]).is_err());
        assert!(empirical_hdh_distance(&hc, &[8], &[1]).is_err());
        assert!(FiniteHypothesisClass::new(vec![], 1).is_err());
        assert!(FiniteHypothesisClass::new(vec![vec![true], vec![true, false]], 1).is_err());
    }

    #[test]
    fn theorem1_source_target_with_unit_weight() {
        let b = BoundInputs {
            omega: [1.0, 0.0],
            lambda: [1.0, 0.0],
            target: 0,
            ..BoundInputs::default()
        };
        let c = 2.0 * b.sample_term();
        assert_relative_eq!(theorem1_bound(&b).unwrap(), c, max_relative = 1e-12);
    }

    #[test]
    fn theorem1_zero_share_with_weight_fails() {
        let b = BoundInputs {
            omega: [0.5, 0.5],
            lambda: [1.0, 0.0],
            ..BoundInputs::default()
        };
        assert!(theorem1_bound(&b).is_err());
    }

    #[test]
    fn theorem1_monotone() {
        let base = BoundInputs::default();
        let lo = theorem1_bound(&base).unwrap();
        let hi = theorem1_bound(&BoundInputs { dhat: base.dhat + 0.1, ..base.clone() }).unwrap();
        assert_relative_eq!(hi - lo, base.omega[0] * 0.1, max_relative = 1e-9);
        let hi = theorem1_bound(&BoundInputs { eps_joint: base.eps_joint + 0.1, ..base.clone() }).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn test_domain_bound_values() {
        assert_relative_eq!(test_domain_bound(1.0, 1.0, 0.5, 0.5).unwrap(), 1.5, max_relative = 1e-15);
        assert_relative_eq!(
            test_domain_bound(3.0, 2.0, 0.0, 0.2).unwrap(),
            (1.0f64 / 0.8).sqrt() * 2.0,
            max_relative = 1e-15
        );
        assert!(test_domain_bound(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(test_domain_bound(1.0, 1.0, 0.5, 0.0).is_err());
        assert!(test_domain_bound(-1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn radical_at_least_one() {
        for lambda0 in [0.05, 0.3, 0.5, 0.77] {
            assert_relative_eq!(weight_radical(lambda0, lambda0), 1.0, max_relative = 1e-12);
            for w in omega_grid(41) {
                assert!(weight_radical(w, lambda0) >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn theorem2_unit_example() {
        let r = theorem2_check(1.0, 1.0, 0.5, 11).unwrap();
        assert!(r.min <= 1.5 && r.ftt == 2.0 && r.holds);
        assert_eq!(r.curve.len(), 11);
        assert!(theorem2_check(1.0, 1.0, 0.5, 1).is_err());
        assert!(theorem2_check(0.0, 1.0, 0.5, 5).is_err());
    }

    #[test]
    fn witness_beats_off_grid() {
        // lambda0 = 0.37 is not on an 11-point grid; a tiny A leaves the radical in charge
        let r = theorem2_check(1e-9, 1.0, 0.37, 11).unwrap();
        assert_eq!(r.argmin, 0.37);
        assert_relative_eq!(r.min, 0.37e-9 + 1.0, max_relative = 1e-12);
        let r = theorem2_check(2.0, 1.0, 0.37, 11).unwrap();
        assert!(r.min <= 0.37 * 2.0 + 1.0);
    }

    #[test]
    fn report_shape() {
        let r = bound_report(&BoundParams::default()).unwrap();
        assert!(r.theorem2.holds);
        assert_eq!(r.test_domain_curve.len(), 101);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["inputs", "theorem1", "test_domain_curve", "theorem2"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let t2 = v["theorem2"].as_object().unwrap();
        let mut keys: Vec<&str> = t2.keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(keys, ["ftt", "holds", "min"]);
    }
}
