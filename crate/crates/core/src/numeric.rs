//! Small numerical helpers shared across modules.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Weighted projection onto `{z >= 0, sum_k m_k z_k = total}` in the metric
/// `sum_k m_k (z_k - v_k)^2`. The minimizer is `z_k = max(v_k - tau, 0)` for the
/// unique threshold `tau` matching the total.
pub fn project_weighted_simplex(v: &[f64], weights: &[f64], total: f64) -> Vec<f64> {
    debug_assert_eq!(v.len(), weights.len());
    debug_assert!(total >= 0.0);
    if v.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    // Walk breakpoints from the largest value down; with the first r entries
    // positive, tau = (sum m v - total) / sum m.
    let mut mass = 0.0;
    let mut weighted = 0.0;
    let mut tau = 0.0;
    for (r, &k) in order.iter().enumerate() {
        mass += weights[k];
        weighted += weights[k] * v[k];
        let candidate = (weighted - total) / mass;
        let next = order.get(r + 1).map(|&j| v[j]);
        if next.is_none_or(|nv| nv <= candidate) {
            tau = candidate;
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Formats `x` as a plain decimal with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // Rounding can carry into a new leading digit (9.99.. -> 10.0); one
    // extra decimal is harmless there.
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Rounds `x` to `digits` significant digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    format_significant(x, digits).parse().unwrap_or(x)
}
