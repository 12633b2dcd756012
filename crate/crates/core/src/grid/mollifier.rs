use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use super::{convolve, Field, Grid};
use crate::error::{Error, Result};

/// Periodized Friedrichs mollifier `J_δ` tabulated on a grid.
#[derive(Debug, Clone)]
pub struct Mollifier {
    delta: f64,
    kernel: Field,
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(grid: Grid, delta: f64) -> Result<Mollifier> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mollifier radius must be positive (got {delta})"
            )));
        }
        let min = 2.0 * grid.h();
        if delta < min {
            return Err(Error::UnderResolved { delta, min });
        }
        type Cache = RwLock<HashMap<(usize, u64), Arc<Field>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (grid.n(), delta.to_bits());
        if let Some(k) = cache.read().unwrap().get(&key) {
            return Ok(Mollifier {
                delta,
                kernel: (**k).clone(),
            });
        }

        // Sum over periodic images; only a few are non-zero unless δ > π.
        let images = (delta / (2.0 * PI)).ceil() as i64 + 1;
        let mut values: Vec<f64> = grid
            .nodes()
            .into_iter()
            .map(|x| {
                (-images..=images)
                    .map(|m| bump((x + 2.0 * PI * m as f64) / delta))
                    .sum::<f64>()
            })
            .collect();
        // Normalize discretely so that the quadrature of J_δ is exactly one.
        let mass = grid.h() * crate::stats::pairwise_sum(&values);
        for v in &mut values {
            *v /= mass;
        }
        let kernel = Field::from_raw(grid, values);
        cache
            .write()
            .unwrap()
            .insert(key, Arc::new(kernel.clone()));
        Ok(Mollifier { delta, kernel })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `J_δ` sampled at the nodes (centred at `x = 0`, wrapped).
    pub fn kernel(&self) -> &Field {
        &self.kernel
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        convolve(f, &self.kernel)
    }
}

/// `f * J_δ`.
pub fn mollify(f: &Field, delta: f64) -> Result<Field> {
    Mollifier::new(f.grid(), delta)?.apply(f)
}
