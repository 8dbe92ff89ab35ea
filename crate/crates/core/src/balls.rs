//! Point charges at the centers of tightly packed balls on the unit torus.
//!
//! A uniform-width layer pattern with `n` layers per species behaves like
//! `3n` balls whose diameters are the layer widths, so brute force over ball
//! arrangements is an exact oracle for such patterns.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{green_kernel, long_range_unconstrained, ModelParams};
use crate::error::{Error, Result};
use crate::interaction::{cap_grid, f_from_gamma, Decomposition, InteractionMatrix, VolumeFractions};
use crate::numeric::{format_significant, CompensatedSum};
use crate::pattern::{is_lex_min, lex_min_transform, validate, Pattern, Species};

/// Largest ternary `n` accepted by the brute force (`3n = 15` balls).
pub const TERNARY_MAX_N: usize = 5;
/// Largest binary `n` accepted by the brute force (`2n = 16` balls).
pub const BINARY_MAX_N: usize = 8;
/// Arrangements within this fraction of the energy scale of the minimum are tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrangementKind {
    /// `n` positive (A) and `n` negative (B) unit charges on equal balls.
    Binary,
    /// `n` balls of each species, sized by the volume fractions.
    Ternary,
}

/// Cyclic sequence of ball types; binary arrangements use A for `+1` and B for `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Arrangement {
    types: Vec<Species>,
}

impl Arrangement {
    pub fn new(types: Vec<Species>) -> Result<Self> {
        let c = counts(&types);
        let ok = if c[2] == 0 { c[0] >= 1 && c[0] == c[1] } else { c[0] == c[1] && c[1] == c[2] };
        if !ok {
            return Err(Error::Arrangement(format!(
                "need equal ball counts per species, got A={} B={} C={}",
                c[0], c[1], c[2]
            )));
        }
        Ok(Self { types })
    }

    pub fn ternary(types: Vec<Species>) -> Result<Self> {
        let a = Self::new(types)?;
        if a.kind() != ArrangementKind::Ternary {
            return Err(Error::Arrangement("ternary arrangement needs C balls".into()));
        }
        Ok(a)
    }

    pub fn binary(spins: &[i8]) -> Result<Self> {
        let types = spins
            .iter()
            .map(|&s| match s {
                1 => Ok(Species::A),
                -1 => Ok(Species::B),
                _ => Err(Error::Arrangement(format!("spin must be +1 or -1, got {s}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(types)
    }

    /// `ABC` repeated `n` times.
    pub fn abc_repetition(n: usize) -> Result<Self> {
        Self::ternary([Species::A, Species::B, Species::C].repeat(n))
    }

    /// `AB` repeated `n` times.
    pub fn alternating(n: usize) -> Result<Self> {
        Self::new([Species::A, Species::B].repeat(n))
    }

    pub fn kind(&self) -> ArrangementKind {
        if self.types.contains(&Species::C) {
            ArrangementKind::Ternary
        } else {
            ArrangementKind::Binary
        }
    }

    /// Balls per species.
    pub fn n(&self) -> usize {
        counts(&self.types)[0]
    }

    pub fn types(&self) -> &[Species] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// `+1` for A and `-1` for B; `None` for ternary arrangements.
    pub fn spins(&self) -> Option<Vec<i8>> {
        (self.kind() == ArrangementKind::Binary)
            .then(|| self.types.iter().map(|&s| if s == Species::A { 1 } else { -1 }).collect())
    }

    /// Smallest image under rotation and reflection.
    pub fn canonicalize(&self) -> Arrangement {
        Arrangement { types: lex_min_transform(&self.types).apply(&self.types) }
    }

    pub fn is_canonical(&self) -> bool {
        is_lex_min(&self.types)
    }
}

fn counts(types: &[Species]) -> [usize; 3] {
    let mut c = [0; 3];
    for s in types {
        c[s.index()] += 1;
    }
    c
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.types {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Arrangement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let types = s
            .trim()
            .chars()
            .map(|c| Species::from_label(c).ok_or_else(|| Error::Arrangement(format!("unknown ball label {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(types)
    }
}

impl TryFrom<String> for Arrangement {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Arrangement> for String {
    fn from(a: Arrangement) -> Self {
        a.to_string()
    }
}

/// Ball centers; the last ball sits at 1, identified with 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPositions {
    pub centers: Vec<f64>,
}

/// Centers of touching balls with the given diameters, starting after 0.
pub fn centers_from_diameters(diameters: &[f64]) -> Vec<f64> {
    let len = diameters.len();
    let mut out = Vec::with_capacity(len);
    let mut acc = CompensatedSum::new();
    for k in 0..len {
        let prev = diameters[(k + len - 1) % len];
        acc.add(0.5 * diameters[k]);
        acc.add(0.5 * prev);
        out.push(acc.value());
    }
    out
}

/// Ball centers of an arrangement; binary balls are equal, so `omega` only affects ternary ones.
pub fn positions(arr: &Arrangement, omega: &VolumeFractions) -> BallPositions {
    let len = arr.len();
    let mut centers = match arr.kind() {
        ArrangementKind::Binary => (1..=len).map(|k| k as f64 / len as f64).collect(),
        ArrangementKind::Ternary => {
            let n = arr.n() as f64;
            let d: Vec<f64> = arr.types.iter().map(|s| omega.get(s.index()) / n).collect();
            centers_from_diameters(&d)
        }
    };
    if let Some(last) = centers.last_mut() {
        *last = 1.0;
    }
    BallPositions { centers }
}

/// `(1/2) sum_k sum_m f[i_k][i_m] G(x_k, x_m)` over all pairs, self pairs included.
pub fn point_charge_energy(types: &[Species], centers: &[f64], f: &InteractionMatrix) -> f64 {
    let mut sum = CompensatedSum::new();
    for (k, (&s, &x)) in types.iter().zip(centers).enumerate() {
        sum.add(0.5 * f.get(s.index(), s.index()) * green_kernel(0.0));
        for (&t, &y) in types.iter().zip(centers).skip(k + 1) {
            sum.add(f.get(s.index(), t.index()) * green_kernel(x - y));
        }
    }
    sum.value()
}

/// Coulomb matrix of the binary model: A and B carry charges `+1` and `-1`, C none.
pub fn binary_matrix() -> InteractionMatrix {
    InteractionMatrix([[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
}

pub fn binary_energy(arr: &Arrangement) -> Result<f64> {
    if arr.kind() != ArrangementKind::Binary {
        return Err(Error::Arrangement(format!("{arr} is not a binary arrangement")));
    }
    let p = positions(arr, &VolumeFractions::equal());
    Ok(point_charge_energy(&arr.types, &p.centers, &binary_matrix()))
}

fn check_symmetric(f: &InteractionMatrix) -> Result<()> {
    if !f.is_symmetric(1e-12) {
        return Err(Error::Params("interaction matrix is not symmetric".into()));
    }
    Ok(())
}

pub fn ternary_energy(arr: &Arrangement, omega: &VolumeFractions, f: &InteractionMatrix) -> Result<f64> {
    if arr.kind() != ArrangementKind::Ternary {
        return Err(Error::Arrangement(format!("{arr} is not a ternary arrangement")));
    }
    check_symmetric(f)?;
    let p = positions(arr, omega);
    Ok(point_charge_energy(&arr.types, &p.centers, f))
}

fn check_cap(kind: ArrangementKind, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("need at least one ball per species".into()));
    }
    let cap = match kind {
        ArrangementKind::Binary => BINARY_MAX_N,
        ArrangementKind::Ternary => TERNARY_MAX_N,
    };
    if n > cap {
        return Err(Error::CapExceeded { what: "n", value: n, cap });
    }
    Ok(())
}

/// Canonical arrangements with `n` balls per species, in lexicographic order.
pub fn canonical_arrangements(kind: ArrangementKind, n: usize) -> Result<Vec<Arrangement>> {
    check_cap(kind, n)?;
    let species = match kind {
        ArrangementKind::Binary => 2,
        ArrangementKind::Ternary => 3,
    };
    let len = species * n;
    let mut left = [n; 3];
    for s in left.iter_mut().skip(species) {
        *s = 0;
    }
    // A canonical word starts with the smallest letter.
    left[0] -= 1;
    let mut word = vec![Species::A; len];
    let mut out = Vec::new();
    fn walk(word: &mut Vec<Species>, pos: usize, left: &mut [usize; 3], out: &mut Vec<Arrangement>) {
        if pos == word.len() {
            if is_lex_min(word) {
                out.push(Arrangement { types: word.clone() });
            }
            return;
        }
        for s in Species::ALL {
            if left[s.index()] > 0 {
                left[s.index()] -= 1;
                word[pos] = s;
                walk(word, pos + 1, left, out);
                left[s.index()] += 1;
            }
        }
    }
    walk(&mut word, 1, &mut left, &mut out);
    Ok(out)
}

/// Outcome of an exhaustive minimization over arrangements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub kind: ArrangementKind,
    pub n: usize,
    /// Canonical minimizers in lexicographic order.
    pub minimizers: Vec<Arrangement>,
    pub min_energy: f64,
    pub max_energy: f64,
    /// Absolute tie tolerance used to collect minimizers.
    pub tolerance: f64,
    pub evaluated: usize,
    #[serde(skip)]
    pub table: Vec<(Arrangement, f64)>,
}

impl BruteForceReport {
    /// `arrangement,energy,minimizer` for every canonical arrangement.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("arrangement,energy,minimizer\n");
        for (a, e) in &self.table {
            let _ = writeln!(out, "{a},{},{}", format_significant(*e, 15), self.minimizers.contains(a));
        }
        out
    }

    pub fn is_minimizer(&self, arr: &Arrangement) -> bool {
        self.minimizers.contains(&arr.canonicalize())
    }
}

fn minimize(
    kind: ArrangementKind,
    n: usize,
    candidates: &[Arrangement],
    energy: impl Fn(&Arrangement) -> f64 + Sync,
) -> BruteForceReport {
    let energies: Vec<f64> = candidates.par_iter().map(&energy).collect();
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (max - min).max(min.abs()).max(max.abs());
    let tolerance = TIE_TOL * scale;
    let minimizers = candidates
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e <= min + tolerance)
        .map(|(a, _)| a.clone())
        .collect();
    BruteForceReport {
        kind,
        n,
        minimizers,
        min_energy: min,
        max_energy: max,
        tolerance,
        evaluated: candidates.len(),
        table: candidates.iter().cloned().zip(energies).collect(),
    }
}

pub fn brute_force_binary(n: usize) -> Result<BruteForceReport> {
    let candidates = canonical_arrangements(ArrangementKind::Binary, n)?;
    let f = binary_matrix();
    let centers: Vec<f64> = (1..=2 * n).map(|k| k as f64 / (2 * n) as f64).collect();
    Ok(minimize(ArrangementKind::Binary, n, &candidates, |a| point_charge_energy(&a.types, &centers, &f)))
}

pub fn brute_force_optimal(n: usize, omega: &VolumeFractions, f: &InteractionMatrix) -> Result<BruteForceReport> {
    check_symmetric(f)?;
    let candidates = canonical_arrangements(ArrangementKind::Ternary, n)?;
    Ok(brute_force_among(n, &candidates, omega, f))
}

fn brute_force_among(
    n: usize,
    candidates: &[Arrangement],
    omega: &VolumeFractions,
    f: &InteractionMatrix,
) -> BruteForceReport {
    minimize(ArrangementKind::Ternary, n, candidates, |a| {
        point_charge_energy(&a.types, &positions(a, omega).centers, f)
    })
}

/// Canonical members of `AB C^{l_1} AB C^{l_2} ... AB C^{l_n}` over all `l_k >= 0` summing to `n`.
pub fn degenerate_family(n: usize) -> Result<Vec<Arrangement>> {
    check_cap(ArrangementKind::Ternary, n)?;
    let mut out = Vec::new();
    let mut l = vec![0usize; n];
    fn walk(l: &mut Vec<usize>, k: usize, left: usize, out: &mut Vec<Arrangement>) {
        if k + 1 == l.len() {
            l[k] = left;
            let mut types = Vec::new();
            for &c in l.iter() {
                types.extend([Species::A, Species::B]);
                types.extend(std::iter::repeat_n(Species::C, c));
            }
            out.push(Arrangement { types }.canonicalize());
            return;
        }
        for c in 0..=left {
            l[k] = c;
            walk(l, k + 1, left - c, out);
        }
    }
    walk(&mut l, 0, n, &mut out);
    out.sort();
    out.dedup();
    Ok(out)
}

/// Layer pattern and widths induced by an arrangement: each ball becomes a
/// layer of width `omega_i / n`, and neighbouring balls of one species merge.
pub fn induced_pattern(arr: &Arrangement, omega: &VolumeFractions) -> Result<(Pattern, Vec<f64>)> {
    if arr.kind() != ArrangementKind::Ternary {
        return Err(Error::Arrangement(format!("{arr} is not a ternary arrangement")));
    }
    let len = arr.len();
    let n = arr.n() as f64;
    let start = (0..len).find(|&k| arr.types[k] != arr.types[(k + len - 1) % len]).unwrap_or(0);
    let mut layers: Vec<Species> = Vec::new();
    let mut widths: Vec<f64> = Vec::new();
    for j in 0..len {
        let s = arr.types[(start + j) % len];
        let w = omega.get(s.index()) / n;
        match layers.last() {
            Some(&last) if last == s => *widths.last_mut().unwrap() += w,
            _ => {
                layers.push(s);
                widths.push(w);
            }
        }
    }
    Ok((validate(&layers)?, widths))
}

/// Differences between two arrangements in the continuum and discrete models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub delta_long_range: f64,
    pub delta_potential: f64,
    /// `|delta_long_range - (2 / n^2) delta_potential|`.
    pub residual: f64,
}

/// Checks that the long-range term of the induced uniform-width patterns is
/// `2/n^2` times the ball potential energy, up to a shared constant.
pub fn ok_discrete_equivalence(first: &Arrangement, second: &Arrangement, params: &ModelParams) -> Result<EquivalenceReport> {
    if first.n() != second.n() {
        return Err(Error::Arrangement(format!("{first} and {second} have different ball counts")));
    }
    let f = f_from_gamma(&params.gamma, &params.omega);
    let lr = |a: &Arrangement| -> Result<f64> {
        let (p, w) = induced_pattern(a, &params.omega)?;
        long_range_unconstrained(&p, &w, &params.gamma)
    };
    let delta_long_range = lr(first)? - lr(second)?;
    let delta_potential = ternary_energy(first, &params.omega, &f)? - ternary_energy(second, &params.omega, &f)?;
    let n = first.n() as f64;
    Ok(EquivalenceReport {
        delta_long_range,
        delta_potential,
        residual: (delta_long_range - 2.0 / (n * n) * delta_potential).abs(),
    })
}

/// The two arrangements related by flipping the dipoles of one group.
///
/// A group is `(AB)^pairs (BA)^pairs`; the first arrangement is
/// `group C group C` and the second swaps A and B in the first group.
pub fn lemma61_arrangements(pairs: usize) -> Result<(Vec<Species>, Vec<Species>)> {
    if pairs == 0 {
        return Err(Error::Domain("need at least one A/B pair per group".into()));
    }
    let mut group = [Species::A, Species::B].repeat(pairs);
    group.extend([Species::B, Species::A].repeat(pairs));
    let flipped: Vec<Species> = group
        .iter()
        .map(|&s| if s == Species::A { Species::B } else { Species::A })
        .collect();
    let build = |first: &[Species]| {
        let mut v = first.to_vec();
        v.push(Species::C);
        v.extend_from_slice(&group);
        v.push(Species::C);
        v
    };
    Ok((build(&group), build(&flipped)))
}

/// Energy change from flipping one group, with no precondition checks.
///
/// The `4 pairs` balls of each of A and B share that species' fraction
/// equally; the two C balls split `omega_3`.
pub fn lemma61_difference(pairs: usize, omega: &VolumeFractions, f: &InteractionMatrix) -> Result<f64> {
    let (before, after) = lemma61_arrangements(pairs)?;
    let per_group = 4.0 * pairs as f64;
    let energy = |types: &[Species]| {
        let d: Vec<f64> = types
            .iter()
            .map(|s| match s {
                Species::C => 0.5 * omega.c(),
                s => omega.get(s.index()) / per_group,
            })
            .collect();
        point_charge_energy(types, &centers_from_diameters(&d), f)
    };
    Ok(energy(&after) - energy(&before))
}

/// [`lemma61_difference`] after checking `omega_1 = omega_2` and `f13 = f23`.
pub fn lemma61_check(pairs: usize, omega: &VolumeFractions, f: &InteractionMatrix) -> Result<f64> {
    if (omega.a() - omega.b()).abs() > 1e-12 {
        return Err(Error::Params(format!("A and B balls differ in size ({} vs {})", omega.a(), omega.b())));
    }
    check_symmetric(f)?;
    let scale = f.frobenius_norm();
    if (f.get(0, 2) - f.get(1, 2)).abs() > 1e-12 * scale {
        return Err(Error::Params(format!("f13 = {} differs from f23 = {}", f.get(0, 2), f.get(1, 2))));
    }
    lemma61_difference(pairs, omega, f)
}

/// Fractions `(i, j, k) / 7` with positive integers summing to 7.
pub fn conjecture_omega_grid() -> Vec<VolumeFractions> {
    let mut out = Vec::new();
    for i in 1..=5 {
        for j in 1..=(6 - i) {
            let k = 7 - i - j;
            out.push(VolumeFractions::new(i as f64 / 7.0, j as f64 / 7.0, k as f64 / 7.0).expect("interior point"));
        }
    }
    out
}

/// Unit-norm cap samples: 4 rings of 5 azimuths.
pub fn conjecture_matrices() -> Vec<Decomposition> {
    cap_grid(4, 5)
}

/// One `(n, f, omega)` cell of the conjecture sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureCell {
    pub n: usize,
    pub f: Decomposition,
    pub omega: [f64; 3],
    /// The ABC repetition is among the minimizers.
    pub holds: bool,
    pub abc_energy: f64,
    pub min_energy: f64,
    pub minimizers: Vec<Arrangement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureSweep {
    pub cells: Vec<ConjectureCell>,
    pub counterexamples: usize,
}

/// Brute force over every `(n, f, omega)` combination, in nested input order.
pub fn conjecture_sweep(ns: &[usize], matrices: &[Decomposition], omegas: &[VolumeFractions]) -> Result<ConjectureSweep> {
    let mut cells = Vec::new();
    for &n in ns {
        let candidates = canonical_arrangements(ArrangementKind::Ternary, n)?;
        let abc = Arrangement::abc_repetition(n)?.canonicalize();
        let jobs: Vec<(&Decomposition, &VolumeFractions)> =
            matrices.iter().flat_map(|d| omegas.iter().map(move |w| (d, w))).collect();
        let out: Vec<ConjectureCell> = jobs
            .par_iter()
            .map(|&(d, w)| {
                let f = d.to_matrix();
                let r = brute_force_among(n, &candidates, w, &f);
                let abc_energy = r.table.iter().find(|(a, _)| *a == abc).map(|(_, e)| *e).unwrap_or(f64::NAN);
                ConjectureCell {
                    n,
                    f: *d,
                    omega: w.as_array(),
                    holds: r.minimizers.contains(&abc),
                    abc_energy,
                    min_energy: r.min_energy,
                    minimizers: r.minimizers,
                }
            })
            .collect();
        cells.extend(out);
    }
    let counterexamples = cells.iter().filter(|c| !c.holds).count();
    Ok(ConjectureSweep { cells, counterexamples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Tensions;
    use crate::interaction::{build_blend, build_ren};

    fn arr(s: &str) -> Arrangement {
        s.parse().unwrap()
    }

    fn ren_f(omega: &VolumeFractions) -> InteractionMatrix {
        f_from_gamma(&build_ren(omega, 1.0).unwrap(), omega)
    }

    #[test]
    fn arrangement_validation() {
        assert_eq!(arr("ABAB").kind(), ArrangementKind::Binary);
        assert_eq!(arr("ABCCAB").kind(), ArrangementKind::Ternary);
        assert_eq!(arr("ABCCAB").n(), 2);
        assert!("AAB".parse::<Arrangement>().is_err());
        assert!("ABCA".parse::<Arrangement>().is_err());
        assert!("ABX".parse::<Arrangement>().is_err());
        assert!(Arrangement::binary(&[1, 0]).is_err());
        assert_eq!(Arrangement::binary(&[1, -1, -1, 1]).unwrap().to_string(), "ABBA");
        assert_eq!(arr("BACBAC").canonicalize().to_string(), "ABCABC");
    }

    #[test]
    fn positions_follow_spacing_rule() {
        let p = positions(&arr("ABABAB"), &VolumeFractions::equal());
        for (k, x) in p.centers.iter().enumerate() {
            assert!((x - (k + 1) as f64 / 6.0).abs() < 1e-15);
        }
        let p = positions(&arr("CAB"), &VolumeFractions::equal());
        for (x, want) in p.centers.iter().zip([1.0 / 3.0, 2.0 / 3.0, 1.0]) {
            assert!((x - want).abs() < 1e-15);
        }
        let omega = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
        let p = positions(&arr("ABCCAB"), &omega);
        // Diameters are omega / 2; the first ball follows the last (B).
        assert!((p.centers[0] - (0.05 + 0.075)).abs() < 1e-15);
        assert!((p.centers[1] - p.centers[0] - (0.05 + 0.075)).abs() < 1e-15);
        assert!((p.centers[2] - p.centers[1] - (0.075 + 0.125)).abs() < 1e-15);
        assert_eq!(*p.centers.last().unwrap(), 1.0);
    }

    #[test]
    fn two_ball_binary_energy() {
        assert!((binary_energy(&arr("AB")).unwrap() - 0.125).abs() < 1e-15);
        assert!(binary_energy(&arr("ABC")).is_err());
    }

    #[test]
    fn binary_alternation_wins() {
        for n in 1..=6 {
            let r = brute_force_binary(n).unwrap();
            assert_eq!(r.minimizers, vec![Arrangement::alternating(n).unwrap()], "n={n}");
        }
        assert!(matches!(brute_force_binary(9), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn enumeration_counts() {
        // Necklaces under the dihedral group: 3 for AABB-type with n=2, 4 for n=3 (2n=6).
        assert_eq!(canonical_arrangements(ArrangementKind::Binary, 2).unwrap().len(), 2);
        assert_eq!(canonical_arrangements(ArrangementKind::Binary, 3).unwrap().len(), 3);
        let t2 = canonical_arrangements(ArrangementKind::Ternary, 2).unwrap();
        // 90 words; dihedral orbit count by Burnside is 11.
        assert_eq!(t2.len(), 11);
        assert!(t2.iter().all(|a| a.is_canonical()));
        assert!(matches!(
            canonical_arrangements(ArrangementKind::Ternary, 6),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn ren_prefers_abc_for_two_copies() {
        let omega = VolumeFractions::equal();
        let r = brute_force_optimal(2, &omega, &ren_f(&omega)).unwrap();
        assert!(r.is_minimizer(&arr("ABCABC")));
        assert!(!r.is_minimizer(&arr("ABCBAC")));
        let zero = brute_force_optimal(2, &omega, &InteractionMatrix([[0.0; 3]; 3])).unwrap();
        assert_eq!(zero.min_energy, 0.0);
        assert_eq!(zero.minimizers.len(), zero.evaluated);
    }

    #[test]
    fn nonpositive_coefficients_favor_abc() {
        let f = Decomposition::new(-0.5, -0.3, -0.8).to_matrix();
        for n in 2..=4 {
            let omega = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
            let r = brute_force_optimal(n, &omega, &f).unwrap();
            assert!(r.is_minimizer(&Arrangement::abc_repetition(n).unwrap()), "n={n}");
        }
    }

    #[test]
    fn blend_family_is_tied_and_minimal() {
        for n in 2..=4 {
            let omega = VolumeFractions::new(0.25, 0.35, 0.4).unwrap();
            let f = f_from_gamma(&build_blend(&omega, 1.0).unwrap(), &omega);
            let r = brute_force_optimal(n, &omega, &f).unwrap();
            let family = degenerate_family(n).unwrap();
            assert_eq!(r.minimizers, family, "n={n}");
            let e: Vec<f64> = family.iter().map(|a| ternary_energy(a, &omega, &f).unwrap()).collect();
            let spread = e.iter().fold(0.0f64, |m, x| m.max((x - e[0]).abs()));
            assert!(spread <= 1e-13, "n={n} spread {spread:e}");
        }
    }

    #[test]
    fn induced_pattern_merges_runs() {
        let omega = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
        let (p, w) = induced_pattern(&arr("AABCBC"), &omega).unwrap();
        assert_eq!(p.to_string(), "ABCBC");
        assert!((w[0] - 0.2).abs() < 1e-15);
        let (p, _) = induced_pattern(&arr("BCAACB"), &omega).unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn continuum_equivalence() {
        let omega = VolumeFractions::equal();
        let params = ModelParams::new(omega, Tensions::equal(1.0), build_ren(&omega, 1.0).unwrap()).unwrap();
        let r = ok_discrete_equivalence(&arr("ABCABC"), &arr("ABCBAC"), &params).unwrap();
        assert!(r.residual <= 1e-12, "{r:?}");
        assert!(r.delta_potential.abs() > 1e-6);
        let same = ok_discrete_equivalence(&arr("ABCABC"), &arr("ABCABC"), &params).unwrap();
        assert_eq!(same.residual, 0.0);
        assert!(ok_discrete_equivalence(&arr("ABC"), &arr("ABCABC"), &params).is_err());
    }

    #[test]
    fn dipole_flip_is_free_when_symmetric() {
        let omega = VolumeFractions::new(0.25, 0.25, 0.5).unwrap();
        let f = ren_f(&omega);
        for pairs in 1..=6 {
            let d = lemma61_check(pairs, &omega, &f).unwrap();
            assert!(d.abs() <= 1e-12 * f.frobenius_norm(), "pairs {pairs}: {d:e}");
        }
        let skewed = Decomposition::new(-0.6, -0.5, -0.2).to_matrix();
        assert!(lemma61_check(1, &omega, &skewed).is_err());
        assert!(lemma61_difference(1, &omega, &skewed).unwrap().abs() > 1e-6);
        let uneven = VolumeFractions::new(0.2, 0.3, 0.5).unwrap();
        assert!(lemma61_check(1, &uneven, &ren_f(&uneven)).is_err());
    }

    #[test]
    fn sweep_grid_sizes() {
        assert_eq!(conjecture_omega_grid().len(), 15);
        assert_eq!(conjecture_matrices().len(), 20);
        let s = conjecture_sweep(&[2], &conjecture_matrices()[..3], &conjecture_omega_grid()[..2]).unwrap();
        assert_eq!(s.cells.len(), 6);
        assert_eq!(s.counterexamples, 0);
    }
}
