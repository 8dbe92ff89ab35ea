//! Closed-form energies of the ABC and ABAC families and large-strength
//! asymptotics for arbitrary repetends.
//!
//! For a repetend with short-range cost `S` per copy and optimal long-range
//! coefficient `K` (repetend filling the cell, unit strength), `n` copies at
//! strength `gamma` cost `S n + gamma K / n^2`. Minimizing over continuous
//! `n` gives `C gamma^{1/3}` with `C = (3/2) 2^{1/3} (S^2 K)^{1/3}`.

use serde::{Deserialize, Serialize};

use crate::energy::{short_range, ModelParams, Tensions};
use crate::error::{Error, Result};
use crate::interaction::VolumeFractions;
use crate::optimizer::{optimize_widths, OptimizerOptions};
use crate::pattern::{CanonicalPattern, Pattern};

/// Coefficients closer than this are reported as tied.
pub const RANKING_TOL: f64 = 1e-9;

fn check_args(n: usize, gamma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("repetition count must be at least 1".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::NonPositiveStrength(gamma));
    }
    Ok(())
}

fn pairwise(omega: &VolumeFractions) -> f64 {
    let (a, b, c) = (omega.a(), omega.b(), omega.c());
    a * b + b * c + c * a
}

/// Long-range coefficient of ABC with the permutation-symmetric matrix.
pub fn k_abc(omega: &VolumeFractions) -> f64 {
    (5.0 - 9.0 * omega.a() * omega.b() * omega.c() / pairwise(omega)) / 16.0
}

/// Long-range coefficient of ABAC (equal A layers) with the permutation-symmetric matrix.
pub fn k_abac(omega: &VolumeFractions) -> f64 {
    (2.0 + 3.0 * omega.a() * omega.a() / pairwise(omega)) / 16.0
}

/// Energy of `n` copies of ABC with uniform widths.
pub fn j_abc(n: usize, omega: &VolumeFractions, tensions: &Tensions, gamma: f64) -> Result<f64> {
    check_args(n, gamma)?;
    let n = n as f64;
    Ok(tensions.sum() * n + gamma / (n * n) * k_abc(omega))
}

/// Energy of `n` copies of ABAC with equal A layers; independent of `c23`.
pub fn j_abac(n: usize, omega: &VolumeFractions, tensions: &Tensions, gamma: f64) -> Result<f64> {
    check_args(n, gamma)?;
    let n = n as f64;
    Ok(2.0 * (tensions.c12 + tensions.c13) * n + gamma / (n * n) * k_abac(omega))
}

/// `(3/2) 2^{1/3} (S^2 K)^{1/3}`.
pub fn coefficient_from(s: f64, k: f64) -> f64 {
    1.5 * 2f64.cbrt() * (s * s * k).cbrt()
}

/// Continuous minimizer `(2 gamma K / S)^{1/3}` of `S n + gamma K / n^2`.
pub fn optimal_repeat_count(s: f64, k: f64, gamma: f64) -> f64 {
    (2.0 * gamma * k / s).cbrt()
}

/// Integer minimizer of `S n + gamma K / n^2` and its value; ties go to smaller `n`.
pub fn discrete_minimum(s: f64, k: f64, gamma: f64) -> (usize, f64) {
    let cost = |n: usize| s * n as f64 + gamma * k / (n * n) as f64;
    let guess = optimal_repeat_count(s, k, gamma).floor().max(1.0) as usize;
    let lo = guess.saturating_sub(1).max(1);
    (lo..=guess + 2)
        .map(|n| (n, cost(n)))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCoefficient {
    pub repetend: CanonicalPattern,
    /// Short-range cost of one copy.
    pub s: f64,
    /// Long-range term of one copy filling the cell at unit strength.
    pub k: f64,
    pub c: f64,
    /// Optimal widths of the repetend, aligned with `repetend`.
    pub widths: Vec<f64>,
}

/// Asymptotic coefficient of a repetend under strength-normalized parameters.
///
/// `K` comes from optimizing the repetend's widths at `n = 1`; `n` copies
/// scaled by `1/n` have long-range term exactly `K / n^2`.
pub fn asymptotic_coefficient(
    repetend: &Pattern,
    params: &ModelParams,
    opts: &OptimizerOptions,
) -> Result<AsymptoticCoefficient> {
    let canonical = repetend.canonicalize();
    let r = optimize_widths(&canonical, params, opts)?;
    if !r.converged {
        return Err(Error::NotConverged {
            pattern: canonical.to_string(),
            iterations: r.iterations,
            residual: r.stationarity,
        });
    }
    let s = short_range(&canonical, &params.tensions);
    let k = r.energy.long_range.max(0.0);
    Ok(AsymptoticCoefficient { c: coefficient_from(s, k), s, k, widths: r.widths.into_vec(), repetend: canonical })
}

/// Ranks repetends by ascending coefficient; near-ties fall back to canonical order.
pub fn compare_candidates(
    repetends: &[Pattern],
    params: &ModelParams,
    opts: &OptimizerOptions,
) -> Result<Vec<AsymptoticCoefficient>> {
    if repetends.is_empty() {
        return Err(Error::Domain("candidate list is empty".into()));
    }
    let mut out = repetends
        .iter()
        .map(|p| asymptotic_coefficient(p, params, opts))
        .collect::<Result<Vec<_>>>()?;
    rank(&mut out);
    Ok(out)
}

fn rank(items: &mut [AsymptoticCoefficient]) {
    items.sort_by(|a, b| a.c.total_cmp(&b.c).then_with(|| a.repetend.cmp(&b.repetend)));
    let mut start = 0;
    while start < items.len() {
        let mut end = start + 1;
        while end < items.len() && items[end].c - items[start].c < RANKING_TOL {
            end += 1;
        }
        items[start..end].sort_by(|a, b| a.repetend.cmp(&b.repetend));
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{free_energy, WidthVector};
    use crate::interaction::build_ren;

    fn pat(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    fn prop31() -> ModelParams {
        let omega = VolumeFractions::new(0.14, 0.43, 0.43).unwrap();
        ModelParams::new(omega, Tensions::equal(1.0), build_ren(&omega, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn centroid_value() {
        let omega = VolumeFractions::equal();
        assert!((j_abc(1, &omega, &Tensions::equal(1.0), 1.0).unwrap() - 3.25).abs() < 1e-15);
        assert!(j_abc(0, &omega, &Tensions::equal(1.0), 1.0).is_err());
        assert!(j_abc(1, &omega, &Tensions::equal(1.0), 0.0).is_err());
    }

    #[test]
    fn closed_forms_match_energy_module() {
        let omega = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
        let t = Tensions::new(1.0, 0.7, 1.2);
        let gamma = 7.5;
        let m = ModelParams::new(omega, t, build_ren(&omega, gamma).unwrap()).unwrap();
        for n in 1..=5 {
            for (rep, j) in [("ABC", j_abc(n, &omega, &t, gamma)), ("ABAC", j_abac(n, &omega, &t, gamma))] {
                let p = pat(rep).repeat(n).unwrap();
                let e = free_energy(&p, &WidthVector::uniform(&p, &omega), &m).unwrap();
                assert!((e.total - j.unwrap()).abs() < 1e-10, "{rep} n={n}");
            }
        }
    }

    #[test]
    fn abac_ignores_c23_and_limit() {
        let omega = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
        let a = j_abac(2, &omega, &Tensions::new(1.0, 1.0, 0.1), 3.0).unwrap();
        let b = j_abac(2, &omega, &Tensions::new(1.0, 1.0, 1.9), 3.0).unwrap();
        assert_eq!(a, b);
        let tiny = VolumeFractions::new(1e-9, 0.5, 0.5 - 1e-9).unwrap();
        assert!((k_abac(&tiny) - 2.0 / 16.0).abs() < 1e-8);
    }

    #[test]
    fn shortrange_step_at_zero_strength() {
        // With a vanishing long-range part, one more copy costs exactly S.
        let omega = VolumeFractions::equal();
        let t = Tensions::new(0.5, 0.8, 1.1);
        let d = j_abc(3, &omega, &t, 1e-300).unwrap() - j_abc(2, &omega, &t, 1e-300).unwrap();
        assert!((d - t.sum()).abs() < 1e-15);
    }

    #[test]
    fn prop31_coefficients() {
        let m = prop31();
        let opts = OptimizerOptions::default();
        let abc = asymptotic_coefficient(&pat("ABC"), &m, &opts).unwrap();
        let abac = asymptotic_coefficient(&pat("ABAC"), &m, &opts).unwrap();
        assert!((abc.c - 2.52).abs() <= 0.01, "{}", abc.c);
        assert!((abac.c - 2.46).abs() <= 0.01, "{}", abac.c);
        assert!((abac.k - k_abac(&m.omega)).abs() < 1e-10);
        let ranked = compare_candidates(&[pat("ABC"), pat("ABAC")], &m, &opts).unwrap();
        assert_eq!(ranked[0].repetend.to_string(), "ABAC");
    }

    #[test]
    fn centroid_prefers_abc() {
        let omega = VolumeFractions::equal();
        let m = ModelParams::new(omega, Tensions::equal(1.0), build_ren(&omega, 1.0).unwrap()).unwrap();
        let ranked = compare_candidates(&[pat("ABAC"), pat("ABC")], &m, &OptimizerOptions::default()).unwrap();
        assert_eq!(ranked[0].repetend.to_string(), "ABC");
        let single = compare_candidates(&[pat("CBA")], &m, &OptimizerOptions::default()).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].repetend.to_string(), "ABC");
        assert!(compare_candidates(&[], &m, &OptimizerOptions::default()).is_err());
    }

    #[test]
    fn abc_coefficient_identity() {
        for (a, b) in [(0.2, 0.3), (1.0 / 3.0, 1.0 / 3.0), (0.6, 0.1)] {
            let omega = VolumeFractions::from_ab(a, b).unwrap();
            let t = Tensions::new(0.9, 1.0, 0.8);
            let m = ModelParams::new(omega, t, build_ren(&omega, 1.0).unwrap()).unwrap();
            let c = asymptotic_coefficient(&pat("ABC"), &m, &OptimizerOptions::default()).unwrap();
            let s = t.sum();
            let closed = 0.75 * (s * s * (5.0 - 9.0 * a * b * omega.c() / pairwise(&omega))).cbrt();
            assert!((c.c - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_minimum_brackets_continuous() {
        let (n, v) = discrete_minimum(3.0, 0.25, 1000.0);
        let brute = (1..100).map(|n| 3.0 * n as f64 + 250.0 / (n * n) as f64).fold(f64::INFINITY, f64::min);
        assert_eq!(v, brute);
        assert!((n as f64 - optimal_repeat_count(3.0, 0.25, 1000.0)).abs() <= 1.0);
        assert!(v >= coefficient_from(3.0, 0.25) * 1000f64.cbrt() - 1e-12);
    }
}
