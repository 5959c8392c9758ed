//! Optimizer minima against a dense brute-force grid on the Bloch sphere.

use std::f64::consts::PI;

use discordium::factory::{bell, classical_mixture, random_density, random_unitary, werner};
use discordium::info::{discord_at_basis, qubit_vector};
use discordium::optimize::{least_discord, least_discord_alt, polarization, OptimizationResult};
use discordium::{ComplexMatrix, DensityOperator, DiscordError, MeasurementBasis, OptimizerConfig, Result, SubsystemLayout};

fn settle(r: Result<OptimizationResult>) -> OptimizationResult {
    match r {
        Ok(r) => r,
        Err(DiscordError::NoConvergence { best }) => *best,
        Err(e) => panic!("{e}"),
    }
}

fn basis_on(target: &str, theta: f64, phi: f64) -> MeasurementBasis {
    let v = qubit_vector(theta, phi);
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set_column(0, &v);
    m.set_column(1, &[-v[1].conj(), v[0].conj()]);
    MeasurementBasis::new(target, m).unwrap()
}

fn grid_minimum(rho: &discordium::DensityOperator, n_theta: usize, n_phi: usize) -> f64 {
    grid_minimum_on(rho, "A", n_theta, n_phi)
}

fn grid_minimum_on(rho: &discordium::DensityOperator, target: &str, n_theta: usize, n_phi: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..n_theta {
        for j in 0..n_phi {
            let theta = PI * i as f64 / (n_theta - 1) as f64;
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            best = best.min(discord_at_basis(rho, &basis_on(target, theta, phi)).unwrap().discord);
        }
    }
    best
}

#[test]
fn optimizer_never_loses_to_the_grid() {
    let config = OptimizerConfig::default();
    for seed in 0..30u64 {
        let rho = random_density(&[2, 2], seed).relabel(&["S", "A"]).unwrap();
        let found = settle(least_discord(&rho, "A", &config)).minimum;
        let grid = grid_minimum(&rho, 121, 120);
        assert!(found <= grid + 1e-12, "seed {seed}: {found} vs grid {grid}");
        // A 1.5° grid is within ~1e-3 bit of the true minimum.
        assert!(grid - found < 2e-3, "seed {seed}: {found} vs grid {grid}");
    }
}

#[test]
fn qutrit_side_is_no_worse_than_its_computational_basis() {
    let config = OptimizerConfig::default();
    for seed in 0..5u64 {
        let rho = random_density(&[2, 3], 300 + seed).relabel(&["S", "A"]).unwrap();
        let found = settle(least_discord(&rho, "A", &config));
        let comp = discord_at_basis(&rho, &MeasurementBasis::computational("A", 3)).unwrap().discord;
        assert!(found.minimum <= comp + 1e-12);
        let at_best = discord_at_basis(&rho, &found.best_basis).unwrap().discord;
        assert!((at_best - found.minimum).abs() < 1e-12);
    }
}

#[test]
fn werner_is_basis_independent() {
    let rho = werner(0.5, "S", "A").unwrap();
    let grid = grid_minimum(&rho, 9, 8);
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    // 1 + h((1 + z)/2) − H(S,A) with H(S,A) from the spectrum (5/8, 1/8, 1/8, 1/8).
    let h_joint = -(0.625f64 * 0.625f64.log2()) - 3.0 * 0.125 * 0.125f64.log2();
    let analytic = 1.0 + h(0.75) - h_joint;
    assert!((grid - analytic).abs() < 1e-12);
    let found = settle(least_discord(&rho, "A", &OptimizerConfig::default())).minimum;
    assert!((found - analytic).abs() < 1e-10);
    let alt = settle(least_discord_alt(&rho, "A", &OptimizerConfig::default())).minimum;
    assert!((alt - analytic).abs() < 1e-10);
}

#[test]
fn polarization_vanishes_for_symmetric_states() {
    let rho = werner(0.3, "S", "A").unwrap();
    assert!(polarization(&rho, "S", "A", &OptimizerConfig::default()).unwrap().abs() < 1e-10);
}

/// `½(|0⟩⟨0|_S ⊗ |0⟩⟨0|_A + |+⟩⟨+|_S ⊗ |1⟩⟨1|_A)`: classical on `A` only.
fn one_way_classical() -> DensityOperator {
    let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
    let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
    let plus = ComplexMatrix::from_parts(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[vec![0.0; 2], vec![0.0; 2]]).unwrap();
    let m = &p0.kron(&p0) + &plus.kron(&p1);
    DensityOperator::new(m.scale_real(0.5), SubsystemLayout::qubits(&["S", "A"]).unwrap()).unwrap()
}

#[test]
fn one_way_classical_state_is_polarized() {
    let rho = one_way_classical();
    let config = OptimizerConfig::default();
    let s_given_a = settle(least_discord(&rho, "A", &config)).minimum;
    let a_given_s = settle(least_discord(&rho, "S", &config)).minimum;
    assert!(s_given_a.abs() < 1e-8);
    let grid = grid_minimum_on(&rho, "S", 121, 120);
    assert!(a_given_s <= grid + 1e-6 && grid - a_given_s < 2e-3, "{a_given_s} vs grid {grid}");
    assert!(a_given_s > 0.01);
    let w = polarization(&rho, "S", "A", &config).unwrap();
    assert!(w < 0.0);
    assert_eq!(w, -polarization(&rho, "A", "S", &config).unwrap());
}

#[test]
fn least_discord_survives_local_unitaries() {
    let config = OptimizerConfig::default();
    for seed in 0..10u64 {
        let rho = random_density(&[2, 2], 500 + seed).relabel(&["S", "A"]).unwrap();
        let u = random_unitary(2, 600 + seed).kron(&random_unitary(2, 700 + seed));
        let rotated = rho.evolve(&u);
        let a = settle(least_discord(&rho, "A", &config)).minimum;
        let b = settle(least_discord(&rotated, "A", &config)).minimum;
        assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn alternative_discord_worked_examples() {
    let config = OptimizerConfig::default();
    assert!(settle(least_discord_alt(&classical_mixture("S", "A"), "A", &config)).minimum.abs() < 1e-9);
    assert!((settle(least_discord_alt(&bell("S", "A"), "A", &config)).minimum - 1.0).abs() < 1e-9);
    assert!(polarization(&bell("S", "A"), "S", "A", &config).unwrap().abs() < 1e-9);
}
