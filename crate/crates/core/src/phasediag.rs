//! Large-strength phase diagrams over two barycentric cross-sections.
//!
//! Each grid cell is labelled by the candidate repetend with the smallest
//! asymptotic coefficient `C`. The long-range coefficient `K` of a candidate
//! depends only on the volume fractions and matrix family, so it is computed
//! once per distinct composition and combined with each cell's tensions.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{coefficient_from, RANKING_TOL};
use crate::energy::{short_range, ModelParams, Tensions};
use crate::error::{Error, Result};
use crate::interaction::{build_blend, build_ohta, build_ren, GammaMatrix, VolumeFractions};
use crate::numeric::format_significant;
use crate::optimizer::{optimize_widths, OptimizerOptions};
use crate::pattern::{CanonicalPattern, Pattern};

pub const MAX_RESOLUTION: usize = 200;
pub const DEFAULT_RESOLUTION: usize = 60;

/// Winner index recorded when a cell could not be evaluated.
pub const SENTINEL_WINNER: usize = 0;

/// Legend labels, numbered 1 to 19.
pub const CANDIDATE_LABELS: [&str; 19] = [
    "ABC",
    "ABAC",
    "BABC",
    "CACB",
    "ABACBABC",
    "CACBACAB",
    "CBCABCBA",
    "BABAC",
    "CACAB",
    "CBCBA",
    "BABABC",
    "ABABAC",
    "ACACAB",
    "CACACB",
    "CBCBCA",
    "BCBCBA",
    "BCBCBACBCBCA",
    "BABABCABABAC",
    "ACACABCACACB",
];

const PALETTE: [&str; 19] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5",
];
const SENTINEL_COLOR: &str = "#000000";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    labels: Vec<String>,
    repetends: Vec<CanonicalPattern>,
}

impl CandidateSet {
    /// The nineteen legend candidates in legend order.
    pub fn standard() -> Self {
        let labels: Vec<String> = CANDIDATE_LABELS.iter().map(|s| s.to_string()).collect();
        let repetends = labels
            .iter()
            .map(|l| l.parse::<Pattern>().expect("legend labels are valid").canonicalize())
            .collect();
        CandidateSet { labels, repetends }
    }

    pub fn len(&self) -> usize {
        self.repetends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.repetends.is_empty()
    }

    /// Legend label for a 1-based index.
    pub fn label(&self, index: usize) -> Option<&str> {
        index.checked_sub(1).and_then(|i| self.labels.get(i)).map(String::as_str)
    }

    pub fn repetend(&self, index: usize) -> Option<&CanonicalPattern> {
        index.checked_sub(1).and_then(|i| self.repetends.get(i))
    }

    pub fn repetends(&self) -> &[CanonicalPattern] {
        &self.repetends
    }

    /// 1-based index of the candidate equivalent to `p`, if any.
    pub fn index_of(&self, p: &Pattern) -> Option<usize> {
        let c = p.canonicalize();
        self.repetends.iter().position(|r| *r == c).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    /// Volume fractions vary, tensions all 2/3.
    Omega,
    /// Tensions vary, volume fractions all 1/3.
    Tension,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Section::Omega => "omega",
            Section::Tension => "tension",
        }
    }
}

impl std::str::FromStr for Section {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(Section::Omega),
            "tension" => Ok(Section::Tension),
            _ => Err(Error::Params(format!("unknown section {s:?} (expected omega or tension)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFamily {
    Ren,
    Ohta,
    Blend,
}

impl MatrixFamily {
    pub fn name(self) -> &'static str {
        match self {
            MatrixFamily::Ren => "ren",
            MatrixFamily::Ohta => "ohta",
            MatrixFamily::Blend => "blend",
        }
    }

    pub fn build(self, omega: &VolumeFractions, gamma: f64) -> Result<GammaMatrix> {
        match self {
            MatrixFamily::Ren => build_ren(omega, gamma),
            MatrixFamily::Ohta => build_ohta(omega, gamma),
            MatrixFamily::Blend => build_blend(omega, gamma),
        }
    }
}

impl std::str::FromStr for MatrixFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ren" => Ok(MatrixFamily::Ren),
            "ohta" => Ok(MatrixFamily::Ohta),
            "blend" => Ok(MatrixFamily::Blend),
            _ => Err(Error::Params(format!("unknown matrix family {s:?}"))),
        }
    }
}

fn check_simplex(lambda: [f64; 3]) -> Result<()> {
    let sum: f64 = lambda.iter().sum();
    if lambda.iter().any(|l| !l.is_finite() || *l < -1e-12) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("{lambda:?} is not a point of the simplex")));
    }
    Ok(())
}

/// Volume fractions and tensions at a barycentric point of a section.
pub fn section_point(section: Section, lambda: [f64; 3]) -> Result<(VolumeFractions, Tensions)> {
    check_simplex(lambda)?;
    match section {
        Section::Omega => {
            let omega = VolumeFractions::new(lambda[0], lambda[1], lambda[2])?;
            Ok((omega, Tensions::equal(2.0 / 3.0)))
        }
        Section::Tension => {
            let l = lambda.map(|x| x.max(0.0));
            Ok((VolumeFractions::equal(), Tensions::new(l[0] + l[1], l[0] + l[2], l[1] + l[2])))
        }
    }
}

/// Strength-normalized model parameters at a barycentric point.
pub fn params_from_barycentric(section: Section, family: MatrixFamily, lambda: [f64; 3]) -> Result<ModelParams> {
    let (omega, tensions) = section_point(section, lambda)?;
    ModelParams::new(omega, tensions, family.build(&omega, 1.0)?)
}

/// Inverse of the tension-section map: `lambda_1 = (c12 + c13 - c23) / 2`, etc.
pub fn barycentric_from_tensions(t: &Tensions) -> [f64; 3] {
    [
        0.5 * (t.c12 + t.c13 - t.c23),
        0.5 * (t.c12 + t.c23 - t.c13),
        0.5 * (t.c13 + t.c23 - t.c12),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub barycentric: [f64; 3],
    /// Corners of the cell, used for plotting.
    pub vertices: [[f64; 3]; 3],
    /// 1-based candidate index, or [`SENTINEL_WINNER`].
    pub winner: usize,
    pub coefficient: f64,
    pub runner_up: Option<(usize, f64)>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub section: Section,
    pub family: MatrixFamily,
    pub resolution: usize,
    pub cells: Vec<PhaseCell>,
}

/// Triangular subdivision: `resolution^2` cells, rows of constant `lambda_2`.
pub fn grid_cells(resolution: usize) -> Vec<([f64; 3], [[f64; 3]; 3])> {
    let r = resolution as f64;
    let point = |a: f64, b: f64| [a / r, b / r, 1.0 - (a + b) / r];
    let mut out = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution - j {
            let (fi, fj) = (i as f64, j as f64);
            let centroid = |a: f64, b: f64| {
                let (l1, l2) = ((3.0 * fi + a) / (3.0 * r), (3.0 * fj + b) / (3.0 * r));
                [l1, l2, 1.0 - l1 - l2]
            };
            out.push((centroid(1.0, 1.0), [point(fi, fj), point(fi + 1.0, fj), point(fi, fj + 1.0)]));
            if i + j + 2 <= resolution {
                out.push((
                    centroid(2.0, 2.0),
                    [point(fi + 1.0, fj), point(fi + 1.0, fj + 1.0), point(fi, fj + 1.0)],
                ));
            }
        }
    }
    out
}

/// Optimal long-range coefficient of each candidate at one composition.
fn candidate_k(
    candidates: &CandidateSet,
    omega: &VolumeFractions,
    family: MatrixFamily,
    opts: &OptimizerOptions,
) -> Result<Vec<Result<f64>>> {
    let gamma = family.build(omega, 1.0)?;
    let params = ModelParams::new(*omega, Tensions::equal(0.0), gamma)?;
    Ok(candidates
        .repetends()
        .iter()
        .map(|p| {
            let r = optimize_widths(p, &params, opts)?;
            if r.converged {
                Ok(r.energy.long_range.max(0.0))
            } else {
                Err(Error::NotConverged { pattern: p.to_string(), iterations: r.iterations, residual: r.stationarity })
            }
        })
        .collect())
}

fn rank_cell(
    candidates: &CandidateSet,
    ks: &[Result<f64>],
    tensions: &Tensions,
    barycentric: [f64; 3],
    vertices: [[f64; 3]; 3],
) -> PhaseCell {
    let mut failure = None;
    let mut coeffs = Vec::with_capacity(ks.len());
    for (p, k) in candidates.repetends().iter().zip(ks) {
        match k {
            Ok(k) => coeffs.push(coefficient_from(short_range(p, tensions), *k)),
            Err(e) => {
                failure.get_or_insert_with(|| e.to_string());
                coeffs.push(f64::NAN);
            }
        }
    }
    if let Some(msg) = failure {
        return PhaseCell {
            barycentric,
            vertices,
            winner: SENTINEL_WINNER,
            coefficient: f64::NAN,
            runner_up: None,
            failure: Some(msg),
        };
    }
    let mut winner = 0;
    for (i, &c) in coeffs.iter().enumerate() {
        if c < coeffs[winner] - RANKING_TOL {
            winner = i;
        }
    }
    let runner_up = coeffs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .fold(None::<(usize, f64)>, |best, (i, &c)| match best {
            Some((_, b)) if b <= c => best,
            _ => Some((i + 1, c)),
        });
    PhaseCell { barycentric, vertices, winner: winner + 1, coefficient: coeffs[winner], runner_up, failure: None }
}

/// Winner at a single barycentric point.
pub fn evaluate_point(
    section: Section,
    family: MatrixFamily,
    lambda: [f64; 3],
    opts: &OptimizerOptions,
) -> Result<PhaseCell> {
    let candidates = CandidateSet::standard();
    let (omega, tensions) = section_point(section, lambda)?;
    let ks = candidate_k(&candidates, &omega, family, opts)?;
    Ok(rank_cell(&candidates, &ks, &tensions, lambda, [lambda; 3]))
}

/// Labels every cell of a section with its winning candidate.
pub fn sweep(section: Section, family: MatrixFamily, resolution: usize, opts: &OptimizerOptions) -> Result<PhaseGrid> {
    if resolution == 0 || resolution > MAX_RESOLUTION {
        return Err(Error::CapExceeded { what: "resolution", value: resolution, cap: MAX_RESOLUTION });
    }
    opts.validate()?;
    let candidates = CandidateSet::standard();
    let cells = grid_cells(resolution);
    let cells = match section {
        Section::Tension => {
            let ks = candidate_k(&candidates, &VolumeFractions::equal(), family, opts)?;
            cells
                .into_par_iter()
                .map(|(b, v)| {
                    let (_, t) = section_point(section, b)?;
                    Ok(rank_cell(&candidates, &ks, &t, b, v))
                })
                .collect::<Result<Vec<_>>>()?
        }
        Section::Omega => cells
            .into_par_iter()
            .map(|(b, v)| {
                let (omega, t) = section_point(section, b)?;
                let ks = candidate_k(&candidates, &omega, family, opts)?;
                Ok(rank_cell(&candidates, &ks, &t, b, v))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(PhaseGrid { section, family, resolution, cells })
}

/// Cell whose centroid is closest to `lambda`.
pub fn nearest_cell(grid: &PhaseGrid, lambda: [f64; 3]) -> Option<&PhaseCell> {
    let dist = |c: &PhaseCell| c.barycentric.iter().zip(lambda).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    grid.cells.iter().min_by(|a, b| dist(a).total_cmp(&dist(b)))
}

pub const CSV_HEADER: &str = "lambda1,lambda2,lambda3,winner_index,winner_pattern,coefficient";

/// CSV with 12 significant digits; `comments` are written first as `# ` lines.
pub fn emit_csv(grid: &PhaseGrid, comments: &[String]) -> String {
    let candidates = CandidateSet::standard();
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{CSV_HEADER}");
    for cell in &grid.cells {
        let b = cell.barycentric.map(|x| format_significant(x, 12));
        let label = candidates.label(cell.winner).unwrap_or("");
        let coeff = if cell.coefficient.is_finite() { format_significant(cell.coefficient, 12) } else { String::new() };
        let _ = writeln!(out, "{},{},{},{},{},{}", b[0], b[1], b[2], cell.winner, label, coeff);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub barycentric: [f64; 3],
    pub winner: usize,
    pub pattern: String,
    pub coefficient: Option<f64>,
}

/// Parses the output of [`emit_csv`], skipping comment lines.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Params(format!("unexpected CSV header {other:?}"))),
    }
    let bad = |l: &str| Error::Params(format!("malformed CSV row {l:?}"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok(CsvRow {
                barycentric: [num(f[0])?, num(f[1])?, num(f[2])?],
                winner: f[3].parse().map_err(|_| bad(l))?,
                pattern: f[4].to_string(),
                coefficient: if f[5].is_empty() { None } else { Some(num(f[5])?) },
            })
        })
        .collect()
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

/// Ternary plot of the winners with a 19-entry legend; `comment` goes into an XML comment.
pub fn emit_svg(grid: &PhaseGrid, comment: Option<&str>) -> String {
    let candidates = CandidateSet::standard();
    let (side, margin, legend_w) = (600.0, 40.0, 220.0);
    let height = side * 3f64.sqrt() / 2.0;
    let (w, h) = (side + 2.0 * margin + legend_w, height + 2.0 * margin);
    // lambda_1 bottom-left, lambda_2 bottom-right, lambda_3 top.
    let xy = |b: &[f64; 3]| -> (f64, f64) {
        let x = margin + side * (b[1] + 0.5 * b[2]);
        let y = margin + height * (1.0 - b[2]);
        (x, y)
    };
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    if let Some(c) = comment {
        let _ = writeln!(out, "<!-- {} -->", escape_xml(c));
    }
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<g stroke-width="0.3">"#);
    for cell in &grid.cells {
        let color = if cell.winner == SENTINEL_WINNER { SENTINEL_COLOR } else { PALETTE[cell.winner - 1] };
        let pts: Vec<String> = cell
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = xy(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{color}" stroke="{color}"/>"#, pts.join(" "));
    }
    let _ = writeln!(out, "</g>");
    let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let outline: Vec<String> = corners
        .iter()
        .map(|c| {
            let (x, y) = xy(c);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1"/>"#, outline.join(" "));
    let vertex_labels = match grid.section {
        Section::Omega => ["A", "B", "C"],
        Section::Tension => ["(1,1,0)", "(1,0,1)", "(0,1,1)"],
    };
    for (c, label) in corners.iter().zip(vertex_labels) {
        let (x, y) = xy(c);
        let dy = if c[2] > 0.5 { -10.0 } else { 22.0 };
        let _ = writeln!(
            out,
            r#"<text x="{x:.3}" y="{:.3}" font-family="sans-serif" font-size="14" text-anchor="middle">{label}</text>"#,
            y + dy
        );
    }
    let lx = side + 2.0 * margin;
    let _ = writeln!(
        out,
        r#"<text x="{lx}" y="{margin}" font-family="sans-serif" font-size="14">{} section, {} family</text>"#,
        grid.section.name(),
        grid.family.name()
    );
    for i in 0..candidates.len() {
        let y = margin + 16.0 + 20.0 * i as f64;
        let _ = writeln!(out, r#"<rect x="{lx}" y="{y}" width="14" height="14" fill="{}"/>"#, PALETTE[i]);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}: {}</text>"#,
            lx + 20.0,
            y + 12.0,
            i + 1,
            candidates.label(i + 1).unwrap_or("")
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}
