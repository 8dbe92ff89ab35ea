#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ternary_ok::energy::{ModelParams, Tensions, WidthVector};
use ternary_ok::interaction::{build_ren, VolumeFractions};
use ternary_ok::pattern::{validate, Pattern, Species};

pub fn random_fractions(rng: &mut ChaCha8Rng) -> VolumeFractions {
    loop {
        let a = rng.gen_range(0.05..0.9);
        let b = rng.gen_range(0.05..0.9);
        if a + b <= 0.95 {
            return VolumeFractions::new(a, b, 1.0 - a - b).unwrap();
        }
    }
}

/// Tensions in `[0.6, 1.2]` always satisfy the triangle inequalities.
pub fn random_tensions(rng: &mut ChaCha8Rng) -> Tensions {
    Tensions::new(rng.gen_range(0.6..1.2), rng.gen_range(0.6..1.2), rng.gen_range(0.6..1.2))
}

pub fn random_pattern(rng: &mut ChaCha8Rng, max_len: usize) -> Pattern {
    loop {
        let len = rng.gen_range(3..=max_len);
        let word: Vec<Species> = (0..len).map(|_| Species::ALL[rng.gen_range(0..3)]).collect();
        if let Ok(p) = validate(&word) {
            return p;
        }
    }
}

/// Positive widths with the species totals of `omega`.
pub fn random_widths(p: &Pattern, omega: &VolumeFractions, rng: &mut ChaCha8Rng) -> WidthVector {
    let mut raw: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut per = [0.0; 3];
    for (s, w) in p.layers().iter().zip(&raw) {
        per[s.index()] += w;
    }
    for (s, w) in p.layers().iter().zip(raw.iter_mut()) {
        *w *= omega.get(s.index()) / per[s.index()];
    }
    WidthVector::from_raw(raw)
}

pub fn ren_params(omega: VolumeFractions, tensions: Tensions, gamma: f64) -> ModelParams {
    ModelParams::new(omega, tensions, build_ren(&omega, gamma).unwrap()).unwrap()
}

pub fn pat(s: &str) -> Pattern {
    s.parse().unwrap()
}
