//! Width optimization for a fixed pattern.
//!
//! Variables are orbit widths `z_o` (one per layer in free mode, one per
//! symmetry orbit in paper-symmetric mode) with multiplicities `m_o`. The
//! feasible set is a product of scaled simplices `sum_o m_o z_o = omega_i`,
//! `z >= 0`. Projected gradient with Barzilai-Borwein steps gets close; a
//! null-space Newton step on the free variables finishes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{
    free_energy, interface_couplings, interface_positions, long_range_from_positions, position_gradient,
    position_to_width_gradient, short_range, width_hessian, EnergyBreakdown, ModelParams, WidthVector,
};
use crate::error::{Error, Result};
use crate::numeric::project_weighted_simplex;
use crate::pattern::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryMode {
    #[default]
    Free,
    PaperSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    /// Relative KKT residual threshold.
    pub optimality_tol: f64,
    /// Per-species volume residual threshold; also the degenerate-width cutoff.
    pub constraint_tol: f64,
    /// Largest width change of the final accepted step.
    pub step_tol: f64,
    pub max_iters: usize,
    pub symmetry_mode: SymmetryMode,
    /// Extra seeded random starts on top of the uniform one.
    pub multistart: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            optimality_tol: 1e-6,
            constraint_tol: 1e-6,
            step_tol: 1e-6,
            max_iters: 2000,
            symmetry_mode: SymmetryMode::Free,
            multistart: 0,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("optimality_tol", self.optimality_tol),
            ("constraint_tol", self.constraint_tol),
            ("step_tol", self.step_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Params(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Params("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub widths: WidthVector,
    pub energy: EnergyBreakdown,
    pub converged: bool,
    pub iterations: usize,
    pub degenerate_layers: Vec<usize>,
    /// Relative KKT residual at the returned iterate.
    pub stationarity: f64,
}

/// Widths below this fraction of their species total are treated as zero.
const SNAP_TOL: f64 = 1e-10;

struct Problem<'a> {
    pattern: &'a Pattern,
    couplings: Vec<f64>,
    orbits: Vec<Vec<usize>>,
    mult: Vec<f64>,
    groups: [Vec<usize>; 3],
    omega: [f64; 3],
}

impl<'a> Problem<'a> {
    fn new(pattern: &'a Pattern, params: &ModelParams, mode: SymmetryMode) -> Self {
        let orbits = match mode {
            SymmetryMode::Free => (0..pattern.len()).map(|k| vec![k]).collect(),
            SymmetryMode::PaperSymmetric => pattern.symmetry_orbits(),
        };
        let mult = orbits.iter().map(|o| o.len() as f64).collect();
        let mut groups: [Vec<usize>; 3] = Default::default();
        for (o, members) in orbits.iter().enumerate() {
            groups[pattern.species(members[0]).index()].push(o);
        }
        Problem {
            pattern,
            couplings: interface_couplings(pattern, &params.gamma),
            orbits,
            mult,
            groups,
            omega: params.omega.as_array(),
        }
    }

    fn dim(&self) -> usize {
        self.orbits.len()
    }

    fn widths(&self, z: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.pattern.len()];
        for (o, members) in self.orbits.iter().enumerate() {
            for &k in members {
                w[k] = z[o];
            }
        }
        w
    }

    fn energy(&self, z: &[f64]) -> f64 {
        long_range_from_positions(&self.couplings, &interface_positions(&self.widths(z)))
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let x = interface_positions(&self.widths(z));
        let gw = position_to_width_gradient(&position_gradient(&self.couplings, &x));
        self.orbits.iter().map(|m| m.iter().map(|&k| gw[k]).sum()).collect()
    }

    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let len = self.pattern.len();
        let hw = width_hessian(&self.couplings, &interface_positions(&self.widths(z)));
        DMatrix::from_fn(self.dim(), self.dim(), |o, p| {
            let mut s = 0.0;
            for &k in &self.orbits[o] {
                for &l in &self.orbits[p] {
                    s += hw[k * len + l];
                }
            }
            s
        })
    }

    fn uniform_start(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for (i, group) in self.groups.iter().enumerate() {
            let mass: f64 = group.iter().map(|&o| self.mult[o]).sum();
            for &o in group {
                z[o] = self.omega[i] / mass;
            }
        }
        z
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for (i, group) in self.groups.iter().enumerate() {
            let raw: Vec<f64> = group.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let mass: f64 = group.iter().zip(&raw).map(|(&o, r)| self.mult[o] * r).sum();
            for (&o, r) in group.iter().zip(&raw) {
                z[o] = r * self.omega[i] / mass;
            }
        }
        z
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        for (i, group) in self.groups.iter().enumerate() {
            let vg: Vec<f64> = group.iter().map(|&o| v[o]).collect();
            let mg: Vec<f64> = group.iter().map(|&o| self.mult[o]).collect();
            for (&o, x) in group.iter().zip(project_weighted_simplex(&vg, &mg, self.omega[i])) {
                z[o] = x;
            }
        }
        z
    }

    /// Snaps negligible widths to zero and moves rounding drift in the
    /// species totals onto the remaining free variables.
    fn restore_totals(&self, z: &mut [f64]) {
        for (i, group) in self.groups.iter().enumerate() {
            for &o in group {
                if z[o] < SNAP_TOL * self.omega[i] {
                    z[o] = 0.0;
                }
            }
            let total: f64 = group.iter().map(|&o| self.mult[o] * z[o]).sum();
            let free_mass: f64 = group.iter().filter(|&&o| z[o] > 0.0).map(|&o| self.mult[o]).sum();
            if free_mass > 0.0 {
                let shift = (self.omega[i] - total) / free_mass;
                for &o in group {
                    if z[o] > 0.0 {
                        z[o] = (z[o] + shift).max(0.0);
                    }
                }
            }
        }
    }

    fn is_trivial(&self) -> bool {
        self.groups.iter().all(|g| g.len() <= 1)
    }

    /// Relative KKT residual and the part of it due to active bounds.
    fn kkt(&self, z: &[f64], g: &[f64]) -> (f64, f64) {
        let mut worst = 0.0f64;
        let mut bound = 0.0f64;
        let mut scale = 1.0f64;
        for group in &self.groups {
            let r: Vec<f64> = group.iter().map(|&o| g[o] / self.mult[o]).collect();
            scale = r.iter().fold(scale, |s, x| s.max(x.abs()));
            let free: Vec<f64> = group.iter().zip(&r).filter(|(&o, _)| z[o] > 0.0).map(|(_, &x)| x).collect();
            if free.is_empty() {
                continue;
            }
            let lo = free.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = free.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lambda = 0.5 * (lo + hi);
            worst = worst.max(0.5 * (hi - lo));
            for (&o, &x) in group.iter().zip(&r) {
                if z[o] <= 0.0 {
                    bound = bound.max(lambda - x);
                }
            }
        }
        (worst.max(bound) / scale, bound / scale)
    }

    fn accept(&self, e_new: f64, e: f64, decrease: f64) -> bool {
        e_new <= e + 1e-4 * decrease + 1e-14 * e.abs().max(1e-300)
    }

    /// With `release`, zero-width variables that violate their bound join the free set.
    fn newton_step(&self, z: &[f64], e: f64, g: &[f64], res: f64, release: bool) -> Option<(Vec<f64>, f64)> {
        let n = self.dim();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for group in &self.groups {
            let mut free: Vec<usize> = group.iter().copied().filter(|&o| z[o] > 0.0).collect();
            if release && !free.is_empty() {
                let r = |o: usize| g[o] / self.mult[o];
                let lo = free.iter().map(|&o| r(o)).fold(f64::INFINITY, f64::min);
                let hi = free.iter().map(|&o| r(o)).fold(f64::NEG_INFINITY, f64::max);
                let lambda = 0.5 * (lo + hi);
                free.extend(group.iter().copied().filter(|&o| z[o] <= 0.0 && r(o) < lambda));
            }
            for &o in free.iter().skip(1) {
                let mut c = vec![0.0; n];
                c[o] = 1.0 / self.mult[o];
                c[free[0]] = -1.0 / self.mult[free[0]];
                cols.push(c);
            }
        }
        if cols.is_empty() {
            return None;
        }
        let zb = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        let h = self.hessian(z);
        let hr = zb.transpose() * &h * &zb;
        let gr = zb.transpose() * DVector::from_column_slice(g);
        // Eigenvalues are replaced by their magnitudes (floored) so the step
        // is a descent direction away from convex regions too.
        let eig = hr.symmetric_eigen();
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(top > 0.0) || !top.is_finite() {
            return None;
        }
        let floor = 1e-10 * top;
        let coords = eig.eigenvectors.transpose() * &gr;
        let scaled = DVector::from_iterator(
            coords.len(),
            coords.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.abs().max(floor)),
        );
        let d = &zb * -(&eig.eigenvectors * scaled);
        let decrease: f64 = d.iter().zip(g).map(|(a, b)| a * b).sum();
        if !(decrease < 0.0) {
            return None;
        }
        let mut alpha_max = f64::INFINITY;
        let mut blocking = None;
        for o in 0..n {
            if d[o] < 0.0 {
                let a = z[o] / -d[o];
                if a < alpha_max {
                    alpha_max = a;
                    blocking = Some(o);
                }
            }
        }
        if !(alpha_max > 0.0) {
            return None;
        }
        let mut alpha = alpha_max.min(1.0);
        for _ in 0..40 {
            let mut zn: Vec<f64> = (0..n).map(|o| (z[o] + alpha * d[o]).max(0.0)).collect();
            if alpha == alpha_max {
                if let Some(o) = blocking {
                    zn[o] = 0.0;
                }
            }
            self.restore_totals(&mut zn);
            let en = self.energy(&zn);
            if self.accept(en, e, alpha * decrease) {
                return Some((zn, en));
            }
            // Below the rounding floor of the energy, judge the full step by
            // the KKT residual instead.
            if alpha == alpha_max.min(1.0) && -decrease <= 1e-10 * e.abs().max(1.0) {
                let gn = self.gradient(&zn);
                if self.kkt(&zn, &gn).0 < res {
                    return Some((zn, en));
                }
            }
            alpha *= 0.5;
        }
        None
    }

    /// One projected-gradient step; returns the new iterate and the next step length.
    fn gradient_step(&self, z: &[f64], e: f64, g: &[f64], alpha: f64) -> Option<(Vec<f64>, f64, f64)> {
        let n = self.dim();
        let mut a = alpha;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..n).map(|o| z[o] - a * g[o] / self.mult[o]).collect();
            let mut zn = self.project(&trial);
            self.restore_totals(&mut zn);
            let decrease: f64 = (0..n).map(|o| g[o] * (zn[o] - z[o])).sum();
            if decrease >= 0.0 {
                return None;
            }
            let en = self.energy(&zn);
            if self.accept(en, e, decrease) {
                return Some((zn, en, a));
            }
            a *= 0.5;
        }
        None
    }

    fn solve(&self, start: Vec<f64>, opts: &OptimizerOptions) -> (Vec<f64>, usize, f64) {
        let mut z = start;
        let mut e = self.energy(&z);
        if self.is_trivial() {
            let g = self.gradient(&z);
            return (z.clone(), 0, self.kkt(&z, &g).0);
        }
        let mut g = self.gradient(&z);
        let scale = g.iter().zip(&self.mult).fold(1e-300f64, |s, (x, m)| s.max((x / m).abs()));
        let mut alpha = 1e-2 / scale;
        let mut last_step = f64::INFINITY;
        let mut iterations = 0;
        while iterations < opts.max_iters {
            let (res, bound) = self.kkt(&z, &g);
            if res <= opts.optimality_tol && last_step <= opts.step_tol {
                break;
            }
            iterations += 1;
            let newton = if bound < res { self.newton_step(&z, e, &g, res, false) } else { None };
            let (zn, en) = match newton {
                Some(step) => step,
                None => match self.gradient_step(&z, e, &g, alpha) {
                    Some((zn, en, used)) => {
                        let gn = self.gradient(&zn);
                        let mut sy = 0.0;
                        let mut ss = 0.0;
                        for o in 0..self.dim() {
                            let s = zn[o] - z[o];
                            sy += s * (gn[o] - g[o]);
                            ss += self.mult[o] * s * s;
                        }
                        alpha = if sy > 0.0 { ss / sy } else { 2.0 * used };
                        (zn, en)
                    }
                    None => match self.newton_step(&z, e, &g, res, true) {
                        Some(step) => step,
                        None => break,
                    },
                },
            };
            last_step = zn.iter().zip(&z).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
            z = zn;
            e = en;
            g = self.gradient(&z);
        }
        let res = self.kkt(&z, &g).0;
        (z, iterations, res)
    }
}

/// Local minimizer of the free energy over the widths of a fixed pattern.
///
/// Starts from per-species uniform widths. Non-convergence is reported
/// through `converged = false`, not as an error.
pub fn optimize_widths(pattern: &Pattern, params: &ModelParams, opts: &OptimizerOptions) -> Result<OptimizationResult> {
    opts.validate()?;
    let problem = Problem::new(pattern, params, opts.symmetry_mode);
    let (mut best_z, mut iterations, mut residual) = problem.solve(problem.uniform_start(), opts);
    let mut best_e = problem.energy(&best_z);
    if opts.multistart > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.multistart {
            let (z, it, res) = problem.solve(problem.random_start(&mut rng), opts);
            iterations += it;
            let e = problem.energy(&z);
            if e < best_e - 1e-12 * best_e.abs().max(1.0) {
                best_z = z;
                best_e = e;
                residual = res;
            }
        }
    }
    let widths = problem.widths(&best_z);
    let mut per = [0.0; 3];
    for (s, w) in pattern.layers().iter().zip(&widths) {
        per[s.index()] += w;
    }
    let feasible = per.iter().zip(&problem.omega).all(|(a, b)| (a - b).abs() <= opts.constraint_tol);
    let degenerate_layers = widths.iter().enumerate().filter(|(_, &w)| w < opts.constraint_tol).map(|(k, _)| k).collect();
    let energy = EnergyBreakdown::new(short_range(pattern, &params.tensions), best_e);
    Ok(OptimizationResult {
        widths: WidthVector::from_raw(widths),
        energy,
        converged: feasible && residual <= opts.optimality_tol,
        iterations,
        degenerate_layers,
        stationarity: residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOptimum {
    pub n: usize,
    pub result: OptimizationResult,
    /// Total energy for each `n = 1..=n_max`.
    pub energies: Vec<f64>,
    /// The optimum sits at `n_max`, so a larger bound might do better.
    pub at_boundary: bool,
}

/// Best repetition count of `repetend` in `1..=n_max`; ties go to smaller `n`.
pub fn optimize_repeats(
    repetend: &Pattern,
    params: &ModelParams,
    n_max: usize,
    opts: &OptimizerOptions,
) -> Result<RepeatOptimum> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let mut best: Option<(usize, OptimizationResult)> = None;
    let mut energies = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let p = repetend.repeat(n)?;
        let r = optimize_widths(&p, params, opts)?;
        energies.push(r.energy.total);
        let better = match &best {
            None => true,
            Some((_, b)) => r.energy.total < b.energy.total - 1e-9,
        };
        if better {
            best = Some((n, r));
        }
    }
    let (n, result) = best.expect("n_max >= 1");
    Ok(RepeatOptimum { n, result, energies, at_boundary: n == n_max })
}

/// Re-evaluates a result through the checked energy path.
pub fn verify(pattern: &Pattern, result: &OptimizationResult, params: &ModelParams) -> Result<EnergyBreakdown> {
    free_energy(pattern, &result.widths, params)
}
