//! Property tests over seeded random states and bases.

use discordium::factory::{random_basis, random_density, random_product, random_unitary};
use discordium::info::{discord_at_basis, mutual_information, outsider_state, von_neumann_entropy};
use discordium::MeasurementBasis;
use discordium::ledger::{deficit_lower_bound, net_work_classical, net_work_quantum};
use proptest::prelude::*;

fn sa(dims: [usize; 2], seed: u64) -> discordium::DensityOperator {
    random_density(&dims, seed).relabel(&["S", "A"]).unwrap()
}

fn dims() -> impl Strategy<Value = [usize; 2]> {
    (2usize..=3, 2usize..=3).prop_map(|(s, a)| [s, a])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discord_is_non_negative(d in dims(), seed in any::<u64>(), bseed in any::<u64>()) {
        let rho = sa(d, seed);
        let r = discord_at_basis(&rho, &random_basis("A", d[1], bseed)).unwrap();
        prop_assert!(r.discord >= -1e-9);
        prop_assert!(r.j_asym <= r.mutual_i + 1e-9);
        prop_assert!((r.discord - (r.mutual_i - r.j_asym)).abs() < 1e-10);
    }

    #[test]
    fn entropy_bounds(d in dims(), seed in any::<u64>()) {
        let rho = sa(d, seed);
        let h = von_neumann_entropy(&rho);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= ((d[0] * d[1]) as f64).log2() + 1e-12);
        let i = mutual_information(&rho, "S", "A").unwrap();
        prop_assert!(i >= -1e-10);
    }

    #[test]
    fn partial_trace_is_trace_preserving_and_hermitian(d in dims(), seed in any::<u64>()) {
        let rho = sa(d, seed);
        for side in ["S", "A"] {
            let m = rho.partial_trace(&[side]).unwrap();
            prop_assert!((m.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert!(m.matrix().hermiticity_deviation() < 1e-12);
        }
    }

    #[test]
    fn products_carry_no_correlation(d in dims(), seed in any::<u64>()) {
        let rho = random_product(&d, seed).relabel(&["S", "A"]).unwrap();
        prop_assert!(mutual_information(&rho, "S", "A").unwrap().abs() < 1e-10);
        // Zero discord needs the eigenbasis of ρ_A; other bases add outcome entropy.
        let eigen = rho.partial_trace(&["A"]).unwrap().eigendecompose().unwrap().eigenvectors;
        let r = discord_at_basis(&rho, &MeasurementBasis::new("A", eigen).unwrap()).unwrap();
        prop_assert!(r.discord.abs() < 1e-9);
    }

    #[test]
    fn unitary_invariance(seed in any::<u64>(), useed in any::<u64>()) {
        let rho = random_density(&[2, 3], seed);
        let u = random_unitary(6, useed);
        prop_assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rho.evolve(&u))).abs() < 1e-10);
    }

    #[test]
    fn dephasing_never_lowers_entropy(d in dims(), seed in any::<u64>(), bseed in any::<u64>()) {
        let rho = sa(d, seed);
        let out = outsider_state(&rho, &random_basis("A", d[1], bseed)).unwrap();
        prop_assert!(von_neumann_entropy(&out) >= von_neumann_entropy(&rho) - 1e-10);
    }

    #[test]
    fn quantum_demon_dominates(d in dims(), seed in any::<u64>(), bseed in any::<u64>()) {
        let rho = sa(d, seed);
        let b = random_basis("A", d[1], bseed);
        let kt = 0.75;
        prop_assert!(net_work_quantum(&rho, kt).unwrap() >= net_work_classical(&rho, &b, kt).unwrap() - 1e-9);
        prop_assert!(deficit_lower_bound(&rho, kt).unwrap() <= kt * ((d[0].max(d[1])) as f64).log2() + 1e-9);
    }
}
