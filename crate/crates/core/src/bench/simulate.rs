use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::table::{Column, MixedTable};
use crate::{Error, Result};

/// Parameters of the linear simulation model
/// `Y = X1 + X2 + X3 + X4 + eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Standard deviation of `eps`.
    pub noise_sd: f64,
    /// Correlation within the pairs (X1, X2) and (X5, X6).
    pub pair_correlation: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            noise_sd: 0.5,
            pair_correlation: 0.96,
        }
    }
}

/// Ten predictors and a response:
/// (X1, X2) and (X5, X6) bivariate normal with mean 3, SD 3 and the pair
/// correlation; X3, X10 ~ N(1, 1); X8 ~ N(3, SD 4); X4, X7, X9 exponential
/// with mean 0.5; everything else independent.
pub fn simulate_section5(n: usize, seed: u64) -> Result<MixedTable> {
    simulate_with(n, seed, &SimulationConfig::default())
}

pub fn simulate_with(n: usize, seed: u64, config: &SimulationConfig) -> Result<MixedTable> {
    if n == 0 {
        return Err(Error::Config("simulation needs n >= 1".into()));
    }
    let r = config.pair_correlation;
    if !(-1.0..=1.0).contains(&r) || !(config.noise_sd >= 0.0) {
        return Err(Error::Config("invalid simulation parameters".into()));
    }
    let mut rng = seed::rng(seed);
    let exp = Exp::new(2.0).expect("rate 2 is valid");
    let s = (1.0 - r * r).sqrt();
    let mut x = vec![Vec::with_capacity(n); 10];
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut z = || -> f64 { rng.sample(StandardNormal) };
        let (a, b, c, d) = (z(), z(), z(), z());
        let mut row = [0.0; 10];
        row[0] = 3.0 + 3.0 * a;
        row[1] = 3.0 + 3.0 * (r * a + s * b);
        row[4] = 3.0 + 3.0 * c;
        row[5] = 3.0 + 3.0 * (r * c + s * d);
        row[2] = 1.0 + z();
        row[9] = 1.0 + z();
        row[7] = 3.0 + 4.0 * z();
        let eps = config.noise_sd * z();
        for k in [3, 6, 8] {
            row[k] = exp.sample(&mut rng);
        }
        y.push(row[0] + row[1] + row[2] + row[3] + eps);
        for (col, v) in x.iter_mut().zip(row) {
            col.push(v);
        }
    }
    let mut columns: Vec<Column> = x
        .into_iter()
        .enumerate()
        .map(|(k, v)| Column::from_f64(format!("X{}", k + 1), v))
        .collect();
    columns.push(Column::from_f64("Y", y));
    Ok(MixedTable::new(columns)?.with_provenance(format!("simulate(n={n}, seed={seed})")))
}

/// `p` standard normal columns with common pairwise correlation `r`.
pub fn equicorrelated(n: usize, p: usize, r: f64, seed: u64) -> Result<MixedTable> {
    if n == 0 || p == 0 || !(0.0..1.0).contains(&r) {
        return Err(Error::Config(
            "equicorrelated needs n, p >= 1 and 0 <= r < 1".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let mut cols = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        let common: f64 = rng.sample(StandardNormal);
        for col in cols.iter_mut() {
            let own: f64 = rng.sample(StandardNormal);
            col.push(r.sqrt() * common + (1.0 - r).sqrt() * own);
        }
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(k, v)| Column::from_f64(format!("V{}", k + 1), v))
        .collect();
    Ok(MixedTable::new(columns)?
        .with_provenance(format!("equicorrelated(n={n}, p={p}, r={r}, seed={seed})")))
}
