//! Randomized self-check battery: closed forms against their independent
//! oracles, order relations between conversion families, and the storage
//! reduction, on freshly drawn desk-scale instances.

use crate::grn::{z_eval, z_oracle, GrnParams};
use crate::majorization::{
    condition_to_storage, max_convertible_number, max_fidelity_deterministic,
    max_fidelity_majorization, ConversionMode,
    Distribution,
};
use crate::oracles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn gauge(name: &'static str, worst: f64, tol: f64) -> Self {
        Check {
            name,
            passed: worst <= tol,
            detail: format!("worst {worst:.3e} (tol {tol:.1e})"),
        }
    }
}

/// Run the full battery with a deterministic seed. `oracle_grid` controls
/// the variational-oracle resolution (400 reproduces the reference
/// tolerances; smaller is faster and looser).
pub fn run_battery(seed: u64, oracle_grid: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    checks.push(check_closed_form_vs_oracle(oracle_grid));
    checks.push(check_oracle_dominance(oracle_grid));
    checks.push(check_uniform_target_formula(&mut rng));
    checks.push(check_solver_vs_enumeration(&mut rng));
    checks.push(check_storage_reduction(&mut rng));
    checks.push(check_deterministic_below_majorization(&mut rng));
    checks.push(check_count_order_relation(&mut rng));
    checks.push(check_uniform_target_count_sandwich(&mut rng));
    checks
}

fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    // exponential spacings normalized; sorted decreasing
    let mut v: Vec<f64> = (0..d)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    v
}

fn check_closed_form_vs_oracle(grid: usize) -> Check {
    let mut worst = 0.0f64;
    for &v in &[1.0 / 3.0, 1.0, 3.0] {
        for &s in &[-0.5, 0.0, 0.5, 1.0] {
            for &mu in &[-2.0, -1.0, 0.0, 1.0, 2.0] {
                let params = GrnParams::new(v, s).expect("valid");
                let gap = (z_eval(params, mu) - z_oracle(params, mu, grid)).abs();
                worst = worst.max(gap);
            }
        }
    }
    Check::gauge("closed form vs variational oracle", worst, 1e-3)
}

fn check_oracle_dominance(grid: usize) -> Check {
    let mut worst = 0.0f64;
    for &v in &[1.0 / 3.0, 1.0, 3.0] {
        for &s in &[-0.5, 0.0, 0.5, 1.0] {
            for &mu in &[-2.0, -1.0, 0.0, 1.0, 2.0] {
                let params = GrnParams::new(v, s).expect("valid");
                let deficit = z_eval(params, mu) - z_oracle(params, mu, grid);
                worst = worst.max(deficit);
            }
        }
    }
    Check::gauge("variational oracle never undercuts the closed form", worst, 1e-4)
}

fn check_uniform_target_formula(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..=20);
        let n = rng.gen_range(1..=64u64);
        let p = Distribution::from_probs(&random_simplex(rng, d)).expect("simplex");
        let formula = oracles::uniform_target_fidelity(&p, n).expect("desk scale");
        let solved = max_fidelity_majorization(&p, &Distribution::uniform(n)).fidelity;
        worst = worst.max((formula - solved).abs());
    }
    Check::gauge("uniform-target closed form vs solver", worst, 1e-10)
}

fn check_solver_vs_enumeration(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let dp = rng.gen_range(1..=8);
        let dq = rng.gen_range(2..=8);
        let p = Distribution::from_probs(&random_simplex(rng, dp)).expect("simplex");
        let q = Distribution::from_probs(&random_simplex(rng, dq)).expect("simplex");
        let solved = max_fidelity_majorization(&p, &q).fidelity;
        let enumerated = oracles::max_fidelity_enumeration(&p, &q, 12).expect("small");
        worst = worst.max((solved - enumerated).abs());
    }
    Check::gauge("solver vs active-set enumeration", worst, 1e-9)
}

fn check_storage_reduction(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let dp = rng.gen_range(2..=6);
        let dq = rng.gen_range(2..=6);
        let cap = rng.gen_range(1..=4usize);
        let p = Distribution::from_probs(&random_simplex(rng, dp)).expect("simplex");
        let q = Distribution::from_probs(&random_simplex(rng, dq)).expect("simplex");
        let via = max_fidelity_majorization(&condition_to_storage(&p, cap as u64), &q).fidelity;
        let searched = oracles::storage_intermediate_search(&p, &q, cap, 200).expect("small");
        worst = worst.max((via - searched).abs());
    }
    Check::gauge("storage reduction vs intermediate search", worst, 2e-3)
}

fn check_deterministic_below_majorization(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let dp = rng.gen_range(1..=8);
        let dq = rng.gen_range(1..=4);
        let p = Distribution::from_probs(&random_simplex(rng, dp)).expect("simplex");
        let q = Distribution::from_probs(&random_simplex(rng, dq)).expect("simplex");
        let det = max_fidelity_deterministic(&p, &q).expect("brute-force regime");
        let maj = max_fidelity_majorization(&p, &q).fidelity;
        worst = worst.max(det - maj);
    }
    Check::gauge("deterministic fidelity below majorization fidelity", worst, 1e-12)
}

fn check_count_order_relation(rng: &mut ChaCha8Rng) -> Check {
    let mut failures = 0u32;
    let mut tested = 0u32;
    for _ in 0..10 {
        let dp = rng.gen_range(2..=6);
        let p = Distribution::from_probs(&random_simplex(rng, dp)).expect("simplex");
        let q = Distribution::from_probs(&random_simplex(rng, 2)).expect("simplex");
        // pick nu strictly between the one- and two-copy deterministic
        // fidelities so the deterministic search stays in its brute regime
        let f1 = match max_fidelity_deterministic(&p, &crate::majorization::iid_power(&q, 1).unwrap()) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let f2 = match max_fidelity_deterministic(&p, &crate::majorization::iid_power(&q, 2).unwrap()) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if !(f2 < f1 - 1e-6) {
            continue;
        }
        let nu = 0.5 * (f1 + f2);
        tested += 1;
        let l_det =
            max_convertible_number(&p, &q, nu, None, ConversionMode::Deterministic).expect("small");
        let l_maj =
            max_convertible_number(&p, &q, nu, None, ConversionMode::Majorization).expect("small");
        if l_maj < l_det {
            failures += 1;
        }
    }
    Check {
        name: "majorization count dominates deterministic count",
        passed: failures == 0 && tested > 0,
        detail: format!("{failures} failures over {tested} instances"),
    }
}

fn check_uniform_target_count_sandwich(rng: &mut ChaCha8Rng) -> Check {
    let mut failures = 0u32;
    for _ in 0..5 {
        let base = rng.gen_range(2..=4u64);
        let n = rng.gen_range(3..=5u32);
        let m = rng.gen_range(1..n);
        let nu = rng.gen_range(0.6..0.95);
        let p = Distribution::uniform(base.pow(n));
        let q = Distribution::uniform(base);
        let bits = m as f64 * (base as f64).log2();
        let l = max_convertible_number(&p, &q, nu, Some(bits), ConversionMode::Majorization)
            .expect("uniform instances are cheap");
        let upper = m as f64 - 2.0 * nu.ln() / (base as f64).ln();
        if (l as f64) < m as f64 || l as f64 > upper + 1e-9 {
            failures += 1;
        }
    }
    Check {
        name: "uniform-target count sandwich under storage",
        passed: failures == 0,
        detail: format!("{failures} failures over 5 instances"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_on_default_seed() {
        // a coarser oracle grid keeps this unit test quick; the acceptance
        // suite runs the full-resolution version
        let checks = run_battery(7, 100);
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(checks.len() >= 8);
    }
}
