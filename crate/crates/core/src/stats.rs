//! Small deterministic statistics helpers.

/// Pairwise (cascade) summation; the result depends only on the order of
/// `xs`, never on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// Sample mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanVar {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl MeanVar {
    pub fn of(xs: &[f64]) -> MeanVar {
        let count = xs.len();
        if count > 0 && xs.iter().all(|&x| x == xs[0]) {
            // Exact for identical samples, where summation would round.
            return MeanVar {
                count,
                mean: xs[0],
                variance: 0.0,
                std_error: 0.0,
            };
        }
        let m = mean(xs);
        let variance = if count > 1 {
            let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
            pairwise_sum(&sq) / (count - 1) as f64
        } else {
            0.0
        };
        MeanVar {
            count,
            mean: m,
            variance,
            std_error: if count > 0 {
                (variance / count as f64).sqrt()
            } else {
                f64::NAN
            },
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_slope(&lx, &ly)
}

pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn meanvar_single_sample_has_zero_variance() {
        let s = MeanVar::of(&[3.0]);
        assert_eq!((s.mean, s.variance, s.std_error), (3.0, 0.0, 0.0));
        let s = MeanVar::of(&[1.0, 3.0]);
        assert_eq!(s.variance, 2.0);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.2, 0.4, 0.8];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        assert!((loglog_slope(&x, &y) - 0.5).abs() < 1e-12);
    }
}
