//! Werner-family sweep of the basis-free and optimized quantities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::factory::werner;
use crate::info::{mutual_information, von_neumann_entropy};
use crate::ledger::deficit_lower_bound;
use crate::optimize::{least_discord, least_discord_alt, OptimizationResult, OptimizerConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub z: f64,
    pub least_discord: f64,
    pub least_discord_alt: f64,
    pub deficit_lower_bound: f64,
    pub h_joint: f64,
    pub mutual_i: f64,
}

/// A start that missed the simplex tolerance still yields a usable minimum.
fn minimum(r: Result<OptimizationResult>) -> Result<f64> {
    match r {
        Ok(r) => Ok(r.minimum),
        Err(DiscordError::NoConvergence { best }) => Ok(best.minimum),
        Err(e) => Err(e),
    }
}

fn row(z: f64, config: &OptimizerConfig) -> Result<SweepRow> {
    let rho = werner(z, "S", "A")?;
    Ok(SweepRow {
        z,
        least_discord: minimum(least_discord(&rho, "A", config))?,
        least_discord_alt: minimum(least_discord_alt(&rho, "A", config))?,
        deficit_lower_bound: deficit_lower_bound(&rho, 1.0)?,
        h_joint: von_neumann_entropy(&rho),
        mutual_i: mutual_information(&rho, "S", "A")?,
    })
}

/// `steps` evenly spaced points from `z_min` to `z_max` inclusive, measuring
/// `A`; `kT = 1`.
pub fn sweep_werner(z_min: f64, z_max: f64, steps: usize, config: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&z_min) || !(0.0..=1.0).contains(&z_max) || z_min > z_max {
        return Err(DiscordError::BadRange(format!("need 0 ≤ z_min ≤ z_max ≤ 1, got [{z_min}, {z_max}]")));
    }
    if steps < 2 && z_min != z_max || steps == 0 {
        return Err(DiscordError::BadRange(format!("{steps} steps cannot span [{z_min}, {z_max}]")));
    }
    let zs: Vec<f64> = (0..steps)
        .map(|i| {
            if steps == 1 {
                z_min
            } else {
                z_min + (z_max - z_min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();
    zs.into_par_iter().map(|z| row(z, config)).collect()
}
