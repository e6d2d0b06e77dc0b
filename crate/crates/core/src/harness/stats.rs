//! Moment accumulators and distribution distances for Monte Carlo reports.

use crate::special::normal_cdf;

/// Second moments about a known zero mean, `(1/R) Σ x xᵀ`, plus the
/// sample mean. Merging is associative, so replication order only matters
/// through floating-point summation, which callers keep sequential.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    dim: usize,
    count: usize,
    sum: Vec<f64>,
    outer: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        MomentAccumulator { dim, count: 0, sum: vec![0.0; dim], outer: vec![0.0; dim * dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        for (i, &xi) in x.iter().enumerate() {
            self.sum[i] += xi;
            let row = &mut self.outer[i * self.dim..(i + 1) * self.dim];
            for (o, &xj) in row.iter_mut().zip(x) {
                *o += xi * xj;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let r = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / r).collect()
    }

    /// `(1/R) Σ x xᵀ` as rows.
    pub fn second_moment(&self) -> Vec<Vec<f64>> {
        let r = self.count.max(1) as f64;
        (0..self.dim).map(|i| self.outer[i * self.dim..(i + 1) * self.dim].iter().map(|o| o / r).collect()).collect()
    }
}

/// Kolmogorov–Smirnov distance between the sample and the standard normal.
pub fn ks_normal(sample: &[f64]) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sample: &[f64], q: f64) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    if xs.is_empty() {
        return f64::NAN;
    }
    let pos = q * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_known_points() {
        let mut acc = MomentAccumulator::new(2);
        acc.push(&[1.0, -1.0]);
        acc.push(&[3.0, 1.0]);
        assert_eq!(acc.mean(), vec![2.0, 0.0]);
        assert_eq!(acc.second_moment(), vec![vec![5.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn ks_of_single_point() {
        assert!((ks_normal(&[0.0]) - 0.5).abs() < 1e-15);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
    }
}
