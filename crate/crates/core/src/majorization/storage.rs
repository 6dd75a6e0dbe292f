//! Storage conditioning, storage-restricted fidelities, i.i.d. powers, and
//! maximal convertible numbers.

use super::distribution::{Distribution, Level, Neumaier};
#[cfg(test)]
use super::distribution::ln_sum;
use super::solver::{max_fidelity_majorization, ConversionResult};
use super::MajorizationError;
use crate::special_fns::{ln_add_exp, ln_diff_exp};

const LN_2: f64 = std::f64::consts::LN_2;

/// The storage-conditioning map: keep the top `J` levels of `p` verbatim and
/// spread the remaining tail mass uniformly over the other `capacity - J`
/// slots, where `J` is the largest prefix length whose per-slot tail average
/// stays strictly below the last kept level. Returns `p` unchanged when the
/// support already fits.
///
/// The qualifying condition is constant within a level block, so the cut
/// always lands on a block boundary and no block ever needs splitting.
pub fn condition_to_storage(p: &Distribution, capacity: u64) -> Distribution {
    assert!(capacity >= 1, "storage capacity must be positive");
    condition_to_storage_ln(p, (capacity as f64).ln())
}

/// Log-capacity variant: capacity is `exp(ln_cap)` atoms. For capacities
/// beyond integer range the sub-atom rounding of the capacity is immaterial
/// (it shifts the uniform fill by a relative 2^-52).
pub(crate) fn condition_to_storage_ln(p: &Distribution, ln_cap: f64) -> Distribution {
    if p.ln_support() <= ln_cap {
        return p.clone();
    }
    let levels = p.levels();
    let n = levels.len();
    // suffix masses: tail_after[b] = mass strictly after block b (linear)
    let mut tail_after = vec![0.0f64; n];
    {
        let mut acc = Neumaier::new();
        for b in (0..n).rev() {
            tail_after[b] = acc.value();
            acc.add(levels[b].log_mass().exp());
        }
    }
    // cumulative ln counts at block ends
    let mut ln_end = Vec::with_capacity(n);
    let mut acc = f64::NEG_INFINITY;
    for l in levels {
        acc = ln_add_exp(acc, l.log_mult);
        ln_end.push(acc);
    }
    // J = end of the last block b with end_b <= cap - 1 and
    // tail_after[b] < p_b * (cap - end_b)
    let mut cut: Option<usize> = None;
    for b in 0..n {
        if ln_end[b] >= ln_cap {
            break; // block reaches or crosses the capacity
        }
        let ln_room = ln_diff_exp(ln_cap, ln_end[b]);
        // `end_b <= cap - 1` needs at least one whole free slot
        if ln_room < 0.0 && ln_cap <= 53.0 * LN_2 {
            break;
        }
        let ln_tail = if tail_after[b] > 0.0 { tail_after[b].ln() } else { f64::NEG_INFINITY };
        if ln_tail < levels[b].log_p + ln_room {
            cut = Some(b);
        }
    }
    let mut out: Vec<Level> = Vec::new();
    let (kept, ln_pos, tail_mass) = match cut {
        Some(b) => (b + 1, ln_end[b], tail_after[b]),
        None => (0, f64::NEG_INFINITY, 1.0),
    };
    out.extend_from_slice(&levels[..kept]);
    let ln_room = ln_diff_exp(ln_cap, ln_pos);
    out.push(Level {
        log_p: tail_mass.ln() - ln_room,
        log_mult: ln_room,
    });
    Distribution::from_log_levels(out).expect("conditioning preserves total mass")
}

/// Maximal fidelity of converting `p` into `q` when the conversion must pass
/// through a storage of `n_bits` bits (capacity `floor(2^n_bits)` atoms):
/// condition `p` to the storage, then convert without restriction.
pub fn max_fidelity_majorization_with_storage(
    p: &Distribution,
    q: &Distribution,
    n_bits: f64,
) -> Result<ConversionResult, MajorizationError> {
    if !(n_bits >= 0.0) {
        return Err(MajorizationError::Capacity(format!(
            "storage of {n_bits} bits holds no state"
        )));
    }
    let ln_cap = if n_bits <= 52.0 {
        // exact floor for integer-range capacities
        ((2.0f64.powf(n_bits)).floor()).ln()
    } else {
        n_bits * LN_2
    };
    let conditioned = condition_to_storage_ln(p, ln_cap);
    let res = max_fidelity_majorization(&conditioned, q);
    debug_assert!(
        res.fidelity <= q.top_mass_ln_count(ln_cap).sqrt() + 1e-12,
        "storage fidelity exceeded the top-capacity mass bound"
    );
    Ok(res)
}

// ---------------------------------------------------------------------------
// i.i.d. powers via type classes
// ---------------------------------------------------------------------------

/// Natural log of `n!`, exact to f64 rounding for small `n`, Stirling with
/// Bernoulli corrections beyond.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 170 {
        let mut prod = 1.0f64;
        for k in 2..=n {
            prod *= k as f64;
        }
        return prod.ln();
    }
    let x = (n + 1) as f64;
    let x2 = x * x;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
        - 1.0 / (1680.0 * x * x2 * x2 * x2)
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Budget on the number of type classes an i.i.d. power may enumerate.
pub const IID_COMPOSITION_BUDGET: f64 = 1e6;

/// The `n`-fold i.i.d. power of `base`, represented by type classes: one
/// level per composition `c` of `n` over the atoms, with probability
/// `prod p_a^{c_a}` and multiplicity `multinomial(n; c)`. Near-equal level
/// collisions (symmetric products) merge.
pub fn iid_power(base: &Distribution, n: u64) -> Result<Distribution, MajorizationError> {
    if n == 0 {
        return Ok(Distribution::point_mass());
    }
    let atoms = base.to_dense(64).ok_or_else(|| {
        MajorizationError::Size("i.i.d. base must expand to at most 64 atoms".into())
    })?;
    let k = atoms.len();
    if k == 1 {
        return Ok(Distribution::point_mass());
    }
    let combos = ln_binomial(n + k as u64 - 1, k as u64 - 1);
    if combos > IID_COMPOSITION_BUDGET.ln() {
        return Err(MajorizationError::Size(format!(
            "n={n} over a {k}-letter alphabet needs e^{combos:.1} type classes (budget {IID_COMPOSITION_BUDGET:e})"
        )));
    }
    let ln_atoms: Vec<f64> = atoms.iter().map(|p| p.ln()).collect();
    let ln_n_fact = ln_factorial(n);
    let mut levels = Vec::new();
    let mut counts = vec![0u64; k];
    compose(n, 0, &mut counts, &ln_atoms, ln_n_fact, &mut levels);
    Distribution::from_log_levels(levels)
}

fn compose(
    remaining: u64,
    slot: usize,
    counts: &mut Vec<u64>,
    ln_atoms: &[f64],
    ln_n_fact: f64,
    out: &mut Vec<Level>,
) {
    if slot == ln_atoms.len() - 1 {
        counts[slot] = remaining;
        let mut log_p = 0.0;
        let mut log_mult = ln_n_fact;
        for (c, lp) in counts.iter().zip(ln_atoms) {
            log_p += *c as f64 * lp;
            log_mult -= ln_factorial(*c);
        }
        out.push(Level { log_p, log_mult });
        return;
    }
    for c in 0..=remaining {
        counts[slot] = c;
        compose(remaining - c, slot + 1, counts, ln_atoms, ln_n_fact, out);
    }
}

// ---------------------------------------------------------------------------
// maximal convertible numbers
// ---------------------------------------------------------------------------

/// Which conversion family a convertible-number search optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversionMode {
    /// Deterministic maps (brute-force regime only).
    Deterministic,
    /// Majorization conversions (exact at any scale).
    Majorization,
}

/// Largest `L` such that the maximal fidelity of converting `p` into
/// `q_base^L` (through `n_bits` of storage when given) still reaches `nu`;
/// 0 when even one copy fails. Fidelity is non-increasing in `L`, searched
/// by exponential bracketing plus bisection. The `>= nu` comparison carries
/// a 1e-12 slack so knife-edge plateaus resolve toward acceptance.
pub fn max_convertible_number(
    p: &Distribution,
    q_base: &Distribution,
    nu: f64,
    n_bits: Option<f64>,
    mode: ConversionMode,
) -> Result<u64, MajorizationError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(MajorizationError::InvalidInput(format!(
            "confidence must lie in (0,1), got {nu}"
        )));
    }
    if q_base.ln_support() <= 0.0 {
        return Err(MajorizationError::InvalidInput(
            "target base must have at least two atoms".into(),
        ));
    }
    let accept = |l: u64| -> Result<bool, MajorizationError> {
        Ok(eval_fidelity(p, q_base, l, n_bits, mode)? >= nu - 1e-12)
    };
    if !accept(1)? {
        return Ok(0);
    }
    let mut lo = 1u64; // accepted
    let mut hi = 2u64;
    while accept(hi)? {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi > 1 << 40 {
            return Err(MajorizationError::Size(
                "convertible number exceeded 2^40; target base is degenerate".into(),
            ));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if accept(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn eval_fidelity(
    p: &Distribution,
    q_base: &Distribution,
    l: u64,
    n_bits: Option<f64>,
    mode: ConversionMode,
) -> Result<f64, MajorizationError> {
    let target = iid_power(q_base, l)?;
    match mode {
        ConversionMode::Majorization => match n_bits {
            Some(bits) => Ok(max_fidelity_majorization_with_storage(p, &target, bits)?.fidelity),
            None => Ok(max_fidelity_majorization(p, &target).fidelity),
        },
        ConversionMode::Deterministic => {
            if n_bits.is_some() {
                return Err(MajorizationError::Size(
                    "deterministic search with storage is outside the brute-force regime".into(),
                ));
            }
            max_fidelity_deterministic(p, &target)
        }
    }
}

/// Maximal fidelity over deterministic (function) conversions, by exhaustive
/// enumeration of all maps from the source atoms onto the target atoms.
/// Brute-force regime: at most 9 source atoms and 4 target atoms.
pub fn max_fidelity_deterministic(
    p: &Distribution,
    q: &Distribution,
) -> Result<f64, MajorizationError> {
    let pd = p.to_dense(9).ok_or_else(|| {
        MajorizationError::Size("deterministic search needs a source with at most 9 atoms".into())
    })?;
    let qd = q.to_dense(4).ok_or_else(|| {
        MajorizationError::Size("deterministic search needs a target with at most 4 atoms".into())
    })?;
    let nx = pd.len();
    let ny = qd.len();
    let mut map = vec![0usize; nx];
    let mut best = 0.0f64;
    loop {
        let mut wp = [0.0f64; 4];
        for (x, &y) in map.iter().enumerate() {
            wp[y] += pd[x];
        }
        let f: f64 = (0..ny).map(|y| (wp[y] * qd[y]).sqrt()).sum();
        best = best.max(f);
        // odometer over maps X -> Y
        let mut pos = 0;
        loop {
            if pos == nx {
                return Ok(best.min(1.0));
            }
            map[pos] += 1;
            if map[pos] < ny {
                break;
            }
            map[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::distribution::{fidelity, is_majorized};
    use super::*;

    fn dist(probs: &[f64]) -> Distribution {
        Distribution::from_probs(probs).unwrap()
    }

    #[test]
    fn conditioning_examples() {
        let c = condition_to_storage(&dist(&[0.6, 0.3, 0.1]), 2);
        let d = c.to_dense(4).unwrap();
        assert!((d[0] - 0.6).abs() < 1e-14 && (d[1] - 0.4).abs() < 1e-14);
        // strict inequality in the cut rule: 0.5/(2-1) is not < 0.5
        let c = condition_to_storage(&dist(&[0.5, 0.25, 0.25]), 2);
        assert!(c.is_uniform());
        assert_eq!(c.support_count(), Some(2));
        // storage not binding
        let p = dist(&[0.6, 0.3, 0.1]);
        assert_eq!(condition_to_storage(&p, 8), p);
    }

    #[test]
    fn conditioning_majorizes_and_caps_support() {
        let p = dist(&[0.35, 0.25, 0.2, 0.1, 0.05, 0.05]);
        for cap in 1..=6 {
            let c = condition_to_storage(&p, cap);
            assert!(is_majorized(&p, &c), "cap={cap}");
            assert!(c.support_count().unwrap() <= cap);
        }
    }

    #[test]
    fn ln_factorial_accuracy() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120.0f64.ln()).abs() < 1e-13);
        // Stirling side against the exact product side at the seam
        let exact170 = ln_factorial(170);
        let stirling171 = ln_factorial(171);
        assert!((stirling171 - (exact170 + 171.0f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn iid_power_binomial_example() {
        let p2 = iid_power(&dist(&[0.75, 0.25]), 2).unwrap();
        let levels = p2.levels();
        assert_eq!(levels.len(), 3);
        let probs: Vec<f64> = levels.iter().map(|l| l.log_p.exp()).collect();
        let mults: Vec<f64> = levels.iter().map(|l| l.log_mult.exp()).collect();
        assert!((probs[0] - 0.5625).abs() < 1e-12);
        assert!((probs[1] - 0.1875).abs() < 1e-12);
        assert!((probs[2] - 0.0625).abs() < 1e-12);
        assert!((mults[0] - 1.0).abs() < 1e-9);
        assert!((mults[1] - 2.0).abs() < 1e-9);
        assert!((mults[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn iid_power_edge_cases() {
        let base = dist(&[0.75, 0.25]);
        let once = iid_power(&base, 1).unwrap();
        assert_eq!(once.levels().len(), base.levels().len());
        for (a, b) in once.levels().iter().zip(base.levels()) {
            assert!((a.log_p - b.log_p).abs() < 1e-12);
            assert!((a.log_mult - b.log_mult).abs() < 1e-12);
        }
        let u = iid_power(&Distribution::uniform(2), 10).unwrap();
        assert!(u.is_uniform());
        assert_eq!(u.support_count(), Some(1024));
        // budget guard
        let wide = Distribution::uniform(8);
        assert!(matches!(
            iid_power(&wide, 100_000),
            Err(MajorizationError::Size(_))
        ));
    }

    #[test]
    fn iid_power_large_n_mass_is_one() {
        let p = iid_power(&dist(&[0.75, 0.25]), 4096).unwrap();
        assert_eq!(p.levels().len(), 4097);
        let ln_total = ln_sum(p.levels().iter().map(|l| l.log_mass()));
        assert!(ln_total.abs() < 1e-9);
        // entropy scales linearly in n
        assert!((p.entropy_bits() - 4096.0 * 0.811_278_124_459_132_8).abs() < 1e-6);
    }

    #[test]
    fn storage_fidelity_two_stage_example() {
        // p = (.5,.25,.25), q = p, 1 bit of storage:
        // C_2(p) = (.5,.5) then convert to p
        let p = dist(&[0.5, 0.25, 0.25]);
        let direct = max_fidelity_majorization(
            &condition_to_storage(&p, 2),
            &p,
        );
        let via = max_fidelity_majorization_with_storage(&p, &p, 1.0).unwrap();
        assert!((via.fidelity - direct.fidelity).abs() < 1e-14);
        let expect = (1.0f64 / 3.0).sqrt() + (1.0f64 / 12.0).sqrt();
        assert!((via.fidelity - expect).abs() < 1e-12);
        // unbinding storage reproduces the unrestricted value
        let free = max_fidelity_majorization_with_storage(&p, &p, 8.0).unwrap();
        assert!((free.fidelity - 1.0).abs() < 1e-12);
        assert!(max_fidelity_majorization_with_storage(&p, &p, -1.0).is_err());
        // fidelity never beats the top-capacity target mass
        let q = dist(&[0.4, 0.3, 0.2, 0.1]);
        let r = max_fidelity_majorization_with_storage(&p, &q, 1.0).unwrap();
        assert!(r.fidelity <= (0.4f64 + 0.3).sqrt() + 1e-12);
    }

    #[test]
    fn deterministic_brute_force() {
        // target point mass: map everything there
        let p = dist(&[0.4, 0.3, 0.3]);
        assert!((max_fidelity_deterministic(&p, &Distribution::point_mass()).unwrap() - 1.0).abs() < 1e-12);
        let b = dist(&[0.5, 0.5]);
        assert!((max_fidelity_deterministic(&b, &b).unwrap() - 1.0).abs() < 1e-12);
        // size guard
        let big = Distribution::uniform(10);
        assert!(matches!(
            max_fidelity_deterministic(&big, &b),
            Err(MajorizationError::Size(_))
        ));
        assert!(matches!(
            max_fidelity_deterministic(&b, &Distribution::uniform(5)),
            Err(MajorizationError::Size(_))
        ));
    }

    #[test]
    fn convertible_number_basics() {
        let p = dist(&[0.75, 0.25]);
        // identity conversion: at least one copy
        let l = max_convertible_number(&p, &p, 1.0 - 1e-9, None, ConversionMode::Majorization)
            .unwrap();
        assert!(l >= 1);
        // nu checks
        assert!(max_convertible_number(&p, &p, 1.5, None, ConversionMode::Majorization).is_err());
        // point-mass target rejected
        assert!(max_convertible_number(
            &p,
            &Distribution::point_mass(),
            0.9,
            None,
            ConversionMode::Majorization
        )
        .is_err());
        // fidelity really is monotone non-increasing in L here
        let q = dist(&[0.6, 0.4]);
        let mut last = 2.0;
        for l in 1..=6 {
            let f = max_fidelity_majorization(&p, &iid_power(&q, l).unwrap()).fidelity;
            assert!(f <= last + 1e-12);
            last = f;
        }
    }

    #[test]
    fn uniform_to_uniform_storage_sandwich() {
        // F(U_{N^a} -> U_{N^L}) = N^{(a-L)/2}; with m blocks of storage the
        // effective exponent is min(n, m)
        let n_base = 3u64;
        let p = Distribution::uniform(n_base.pow(4)); // U_{3^4}
        let q = Distribution::uniform(n_base);
        let m = 2u32;
        let bits = m as f64 * (n_base as f64).log2();
        let nu = 0.9;
        let l = max_convertible_number(&p, &q, nu, Some(bits), ConversionMode::Majorization)
            .unwrap();
        let upper = m as f64 - 2.0 * nu.ln() / (n_base as f64).ln();
        assert!(l >= m as u64, "l={l}");
        assert!((l as f64) <= upper + 1e-9, "l={l} upper={upper}");
        let witnessed = fidelity(
            &Distribution::uniform(n_base.pow(m)),
            &Distribution::uniform(n_base.pow(m)),
        );
        assert!((witnessed - 1.0).abs() < 1e-12);
    }
}
