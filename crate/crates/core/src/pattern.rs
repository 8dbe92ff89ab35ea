//! Cyclic layer patterns on the periodic cell.
//!
//! A pattern is a cyclic word over {A, B, C} with no two cyclically adjacent
//! equal letters and every species present. Patterns related by rotation or
//! reflection have identical energies, so searches work with the
//! lexicographically smallest image (species labels are never permuted).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest pattern accepted by [`enumerate_patterns`].
pub const MAX_ENUMERATION_LENGTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Species {
    A,
    B,
    C,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::A, Species::B, Species::C];

    /// Zero-based index into fractions and matrices.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Species> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> char {
        ['A', 'B', 'C'][self.index()]
    }

    pub fn from_label(c: char) -> Option<Species> {
        match c {
            'A' | 'a' => Some(Species::A),
            'B' | 'b' => Some(Species::B),
            'C' | 'c' => Some(Species::C),
            _ => None,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("pattern has {0} layers, at least 3 are required")]
    TooShort(usize),
    #[error("adjacent duplicate: layers {first} and {second} are both {species}")]
    AdjacentDuplicate { first: usize, second: usize, species: Species },
    #[error("species {0} is missing")]
    MissingSpecies(Species),
    #[error("unknown species label {0:?}")]
    UnknownLabel(char),
    #[error("repetition count must be at least 1")]
    ZeroRepeat,
    #[error("length {0} exceeds the enumeration cap of {MAX_ENUMERATION_LENGTH}")]
    LengthCap(usize),
}

/// A validated cyclic pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pattern {
    layers: Vec<Species>,
}

/// Rotation by `shift`, optionally preceded by a reversal.
///
/// Image index `k` reads source index `(shift + k) mod L`, or
/// `(shift - k) mod L` when reflected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transform {
    pub shift: usize,
    pub reflected: bool,
}

impl Transform {
    pub const IDENTITY: Transform = Transform { shift: 0, reflected: false };

    #[inline]
    pub fn source(&self, k: usize, len: usize) -> usize {
        if self.reflected {
            (self.shift + len - k % len) % len
        } else {
            (self.shift + k) % len
        }
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        let len = items.len();
        (0..len).map(|k| items[self.source(k, len)].clone()).collect()
    }

    fn all(len: usize) -> impl Iterator<Item = Transform> {
        (0..len).flat_map(|shift| {
            [false, true].into_iter().map(move |reflected| Transform { shift, reflected })
        })
    }
}

/// Checks the cyclic word invariants.
pub fn validate(layers: &[Species]) -> Result<Pattern, PatternError> {
    let len = layers.len();
    if len < 3 {
        return Err(PatternError::TooShort(len));
    }
    for k in 0..len {
        let next = (k + 1) % len;
        if layers[k] == layers[next] {
            return Err(PatternError::AdjacentDuplicate { first: k, second: next, species: layers[k] });
        }
    }
    for s in Species::ALL {
        if !layers.contains(&s) {
            return Err(PatternError::MissingSpecies(s));
        }
    }
    Ok(Pattern { layers: layers.to_vec() })
}

/// Rotation or reflection giving the lexicographically smallest cyclic image.
pub fn lex_min_transform<T: Ord>(layers: &[T]) -> Transform {
    let len = layers.len();
    let mut best = Transform::IDENTITY;
    for t in Transform::all(len).skip(1) {
        let mut ord = std::cmp::Ordering::Equal;
        for k in 0..len {
            ord = layers[t.source(k, len)].cmp(&layers[best.source(k, len)]);
            if ord != std::cmp::Ordering::Equal {
                break;
            }
        }
        if ord == std::cmp::Ordering::Less {
            best = t;
        }
    }
    best
}

/// True if no rotation or reflection gives a smaller cyclic image.
pub fn is_lex_min<T: Ord>(layers: &[T]) -> bool {
    let len = layers.len();
    Transform::all(len).skip(1).all(|t| {
        for k in 0..len {
            match layers[t.source(k, len)].cmp(&layers[k]) {
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Greater => return true,
                std::cmp::Ordering::Equal => {}
            }
        }
        true
    })
}

impl Pattern {
    pub fn layers(&self) -> &[Species] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn species(&self, k: usize) -> Species {
        self.layers[k]
    }

    /// Number of layers of each species.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.layers {
            c[s.index()] += 1;
        }
        c
    }

    /// Concatenation of `n` copies.
    pub fn repeat(&self, n: usize) -> Result<Pattern, PatternError> {
        repeat_layers(&self.layers, n)
    }

    /// The transform taking this pattern to its canonical image.
    pub fn canonical_transform(&self) -> Transform {
        lex_min_transform(&self.layers)
    }

    pub fn canonicalize(&self) -> CanonicalPattern {
        CanonicalPattern(Pattern { layers: self.canonical_transform().apply(&self.layers) })
    }

    pub fn is_canonical(&self) -> bool {
        is_lex_min(&self.layers)
    }

    pub fn transformed(&self, t: Transform) -> Pattern {
        Pattern { layers: t.apply(&self.layers) }
    }

    /// Transforms that map the pattern onto itself.
    pub fn automorphisms(&self) -> Vec<Transform> {
        let len = self.len();
        Transform::all(len)
            .filter(|t| (0..len).all(|k| self.layers[t.source(k, len)] == self.layers[k]))
            .collect()
    }

    /// Layer orbits under the automorphism group, each sorted, ordered by first member.
    pub fn symmetry_orbits(&self) -> Vec<Vec<usize>> {
        let len = self.len();
        let mut label: Vec<usize> = (0..len).collect();
        for t in self.automorphisms() {
            for k in 0..len {
                let (a, b) = (find(&mut label, k), find(&mut label, t.source(k, len)));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        let mut root_of = vec![usize::MAX; len];
        for k in 0..len {
            let r = find(&mut label, k);
            if root_of[r] == usize::MAX {
                root_of[r] = orbits.len();
                orbits.push(Vec::new());
            }
            orbits[root_of[r]].push(k);
        }
        orbits
    }

    /// Species with the A/B/C labels permuted by `perm` (new label of old index).
    pub fn relabeled(&self, perm: [Species; 3]) -> Pattern {
        Pattern { layers: self.layers.iter().map(|s| perm[s.index()]).collect() }
    }
}

fn find(label: &mut [usize], mut k: usize) -> usize {
    while label[k] != k {
        label[k] = label[label[k]];
        k = label[k];
    }
    k
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.layers {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = PatternError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let layers = s
            .trim()
            .chars()
            .map(|c| Species::from_label(c).ok_or(PatternError::UnknownLabel(c)))
            .collect::<Result<Vec<_>, _>>()?;
        validate(&layers)
    }
}

impl TryFrom<String> for Pattern {
    type Error = PatternError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> Self {
        p.to_string()
    }
}

/// A pattern in its lexicographically minimal rotation/reflection image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalPattern(Pattern);

impl CanonicalPattern {
    pub fn pattern(&self) -> &Pattern {
        &self.0
    }

    pub fn into_pattern(self) -> Pattern {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for CanonicalPattern {
    type Target = Pattern;
    fn deref(&self) -> &Pattern {
        &self.0
    }
}

impl fmt::Display for CanonicalPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub fn canonicalize(p: &Pattern) -> CanonicalPattern {
    p.canonicalize()
}

/// Concatenates `n` copies of `layers` and validates the result.
pub fn repeat_layers(layers: &[Species], n: usize) -> Result<Pattern, PatternError> {
    if n == 0 {
        return Err(PatternError::ZeroRepeat);
    }
    let repeated: Vec<Species> = layers.iter().copied().cycle().take(layers.len() * n).collect();
    validate(&repeated)
}

/// All canonical patterns of lengths `3..=max_len`, grouped by length and
/// sorted lexicographically within each length.
pub fn enumerate_patterns(max_len: usize) -> Result<Vec<CanonicalPattern>, PatternError> {
    if max_len > MAX_ENUMERATION_LENGTH {
        return Err(PatternError::LengthCap(max_len));
    }
    if max_len < 3 {
        return Err(PatternError::TooShort(max_len));
    }
    let mut out = Vec::new();
    for len in 3..=max_len {
        out.extend(enumerate_length(len));
    }
    Ok(out)
}

/// Canonical patterns of exactly `len` layers, in lexicographic order.
///
/// A canonical word contains every species, so it starts with A; the walk
/// fixes the first letter and only extends with letters differing from the
/// previous one.
pub fn enumerate_length(len: usize) -> Vec<CanonicalPattern> {
    let mut out = Vec::new();
    if len < 3 {
        return out;
    }
    let mut word = vec![Species::A; len];
    fn walk(word: &mut Vec<Species>, pos: usize, out: &mut Vec<CanonicalPattern>) {
        let len = word.len();
        if pos == len {
            if word[len - 1] != word[0]
                && word.contains(&Species::B)
                && word.contains(&Species::C)
                && is_lex_min(word)
            {
                out.push(CanonicalPattern(Pattern { layers: word.clone() }));
            }
            return;
        }
        for s in Species::ALL {
            if s != word[pos - 1] {
                word[pos] = s;
                walk(word, pos + 1, out);
            }
        }
    }
    walk(&mut word, 1, &mut out);
    out
}

/// Drops layers thinner than `drop_tol` and merges the neighbours they separated.
///
/// Width removed from a dropped layer is returned to the widest remaining
/// layer of the same species so per-species totals are unchanged. Returns
/// `None` if the result is not a valid pattern.
pub fn merge_thin_layers(p: &Pattern, widths: &[f64], drop_tol: f64) -> Option<(Pattern, Vec<f64>)> {
    let mut kept: Vec<(Species, f64)> = Vec::with_capacity(p.len());
    let mut spill = [0.0; 3];
    for (k, &s) in p.layers().iter().enumerate() {
        if widths[k] <= drop_tol {
            spill[s.index()] += widths[k];
        } else {
            kept.push((s, widths[k]));
        }
    }
    for s in Species::ALL {
        if spill[s.index()] > 0.0 {
            let widest = kept
                .iter()
                .enumerate()
                .filter(|(_, (t, _))| *t == s)
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)?;
            kept[widest].1 += spill[s.index()];
        }
    }
    // Merge cyclically adjacent duplicates.
    let mut merged: Vec<(Species, f64)> = Vec::with_capacity(kept.len());
    for (s, w) in kept {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => merged.push((s, w)),
        }
    }
    while merged.len() > 1 && merged[0].0 == merged[merged.len() - 1].0 {
        let (_, w) = merged.pop().unwrap();
        merged[0].1 += w;
    }
    let layers: Vec<Species> = merged.iter().map(|x| x.0).collect();
    let pattern = validate(&layers).ok()?;
    Some((pattern, merged.into_iter().map(|x| x.1).collect()))
}
