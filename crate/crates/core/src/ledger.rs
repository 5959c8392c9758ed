//! Work accounting for classical and quantum demons, in units of `kT`
//! (Boltzmann constant for entropy in bits, times bath temperature).

use serde::{Deserialize, Serialize};

use crate::error::{DiscordError, Result};
use crate::info::{
    accessible_joint_entropy, conditional_entropy, measure_branches, shannon_entropy, von_neumann_entropy,
    BasisFreeEntropies, MeasurementBasis,
};
use crate::optimize::{least_discord, OptimizerConfig};
use crate::state::DensityOperator;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorkLedger {
    #[serde(rename = "kT")]
    pub kt: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub w_classical: f64,
    pub w_quantum: f64,
    pub advantage: f64,
    pub deficit_lower_bound: f64,
    pub basis_used: MeasurementBasis,
}

fn check_kt(kt: f64) -> Result<()> {
    if kt > 0.0 && kt.is_finite() {
        Ok(())
    } else {
        Err(DiscordError::BadParameter(format!("kT must be positive, got {kt}")))
    }
}

fn other_part<'a>(rho: &'a DensityOperator, measured: &str) -> Result<&'a str> {
    if rho.layout().len() != 2 {
        return Err(DiscordError::NotBipartite(rho.layout().len()));
    }
    rho.layout().position(measured)?;
    Ok(rho.layout().labels().find(|l| *l != measured).expect("two distinct labels"))
}

/// `W⁺ = kT (lg d_S − H(S|A))`: work from letting `S` expand once `A` is read.
pub fn work_gain(rho: &DensityOperator, basis: &MeasurementBasis, kt: f64) -> Result<f64> {
    check_kt(kt)?;
    let s = other_part(rho, basis.target())?;
    let d_s = rho.layout().dim_of(s)? as f64;
    Ok(kt * (d_s.log2() - conditional_entropy(rho, basis)?))
}

/// `W⁻ = kT H(A)`, with `H(A)` the entropy of the outcome distribution.
pub fn erasure_cost(rho: &DensityOperator, basis: &MeasurementBasis, kt: f64) -> Result<f64> {
    check_kt(kt)?;
    let probs: Vec<f64> = measure_branches(rho, basis)?.iter().map(|b| b.probability).collect();
    Ok(kt * shannon_entropy(&probs))
}

/// `W^C = kT (lg d_SA − [H(A) + H(S|A)]_basis)`.
pub fn net_work_classical(rho: &DensityOperator, basis: &MeasurementBasis, kt: f64) -> Result<f64> {
    check_kt(kt)?;
    other_part(rho, basis.target())?;
    let d = rho.dim() as f64;
    Ok(kt * (d.log2() - accessible_joint_entropy(rho, basis)?))
}

/// `W^Q = kT (lg d_SA − H(S,A))`; basis-free.
pub fn net_work_quantum(rho: &DensityOperator, kt: f64) -> Result<f64> {
    check_kt(kt)?;
    Ok(kt * ((rho.dim() as f64).log2() - von_neumann_entropy(rho)))
}

/// `kT (max(H(A), H(S)) − H(S,A))`. Negative for some separable states and
/// returned as is.
pub fn deficit_lower_bound(rho: &DensityOperator, kt: f64) -> Result<f64> {
    check_kt(kt)?;
    let a = rho
        .layout()
        .labels()
        .next()
        .ok_or(DiscordError::NotBipartite(0))?
        .to_owned();
    let fixed = BasisFreeEntropies::of(rho, &a)?;
    Ok(kt * (fixed.h_a.max(fixed.h_s) - fixed.h_joint))
}

/// All terms at a given basis.
pub fn ledger_at_basis(rho: &DensityOperator, basis: &MeasurementBasis, kt: f64) -> Result<WorkLedger> {
    let w_classical = net_work_classical(rho, basis, kt)?;
    let w_quantum = net_work_quantum(rho, kt)?;
    Ok(WorkLedger {
        kt,
        w_plus: work_gain(rho, basis, kt)?,
        w_minus: erasure_cost(rho, basis, kt)?,
        w_classical,
        w_quantum,
        advantage: w_quantum - w_classical,
        deficit_lower_bound: deficit_lower_bound(rho, kt)?,
        basis_used: basis.clone(),
    })
}

/// Ledger with the classical demon measuring `measured` in its least-discord
/// basis, so `advantage = kT δ̂`.
pub fn ledger(rho: &DensityOperator, measured: &str, kt: f64, config: &OptimizerConfig) -> Result<WorkLedger> {
    check_kt(kt)?;
    let best = least_discord(rho, measured, config)?;
    ledger_at_basis(rho, &best.best_basis, kt)
}
