//! Brute-force reference implementations used by the self-check battery and
//! the test suite.
//!
//! Everything here works on small, densely expanded instances and stays
//! algorithmically independent of the production solvers: the conversion
//! optimum is recomputed by exhaustive active-set enumeration, and the
//! storage reduction is validated against a simplex grid search over all
//! small-support intermediates (with a local polish pass so the comparison
//! is limited by the claim under test, not by grid resolution).

use crate::majorization::{fidelity, is_majorized, max_fidelity_majorization, Distribution};

/// Maximal majorization-conversion fidelity by exhaustive enumeration of
/// active prefix-constraint subsets (`2^(d-1)` candidate KKT systems, keep
/// the best feasible one). Dense instances only; `None` when a side exceeds
/// `max_dim` atoms.
pub fn max_fidelity_enumeration(
    p: &Distribution,
    q: &Distribution,
    max_dim: usize,
) -> Option<f64> {
    let pd = p.to_dense(max_dim)?;
    let qd = q.to_dense(max_dim)?;
    let d = qd.len();
    if d == 0 || d > 20 {
        return None;
    }
    // source prefix masses evaluated on the target index range; atoms beyond
    // the target support fold into the final prefix (the conversion must
    // place all source mass), accumulated exactly rather than via `1 - sum`
    let mut pref_p = vec![0.0f64; d];
    let mut acc = 0.0;
    for i in 0..d {
        acc += pd.get(i).copied().unwrap_or(0.0);
        pref_p[i] = acc;
    }
    for i in d..pd.len() {
        acc += pd[i];
    }
    pref_p[d - 1] = acc;
    let mut pref_q = vec![0.0f64; d];
    let mut acc = 0.0;
    for i in 0..d {
        acc += qd[i];
        pref_q[i] = acc;
    }
    let interior = d - 1;
    let mut best: f64 = 0.0;
    for mask in 0u32..(1u32 << interior) {
        // tight positions for this candidate + the forced final equality
        let mut x = vec![0.0f64; d];
        let mut lo = 0usize;
        let mut p_lo = 0.0f64;
        let mut q_lo = 0.0f64;
        let mut ok = true;
        for pos in 0..d {
            let is_bound = pos == d - 1 || (mask >> pos) & 1 == 1;
            if !is_bound {
                continue;
            }
            let dp = (pref_p[pos] - p_lo).max(0.0);
            let dq = pref_q[pos] - q_lo;
            if dq <= 0.0 {
                ok = false;
                break;
            }
            let lambda = dp / dq;
            for (i, xi) in x.iter_mut().enumerate().take(pos + 1).skip(lo) {
                *xi = lambda * qd[i];
            }
            lo = pos + 1;
            p_lo = pref_p[pos];
            q_lo = pref_q[pos];
        }
        if !ok {
            continue;
        }
        // feasibility: candidate prefixes must dominate the source's
        let mut cum = 0.0;
        let mut feasible = true;
        for i in 0..d {
            cum += x[i];
            if cum < pref_p[i] - 1e-12 {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let mut xs = x.clone();
        xs.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let f: f64 = xs
            .iter()
            .zip(&qd)
            .map(|(xi, qi)| (xi * qi).max(0.0).sqrt())
            .sum();
        best = best.max(f);
    }
    Some(best.min(1.0))
}

/// Closed-form maximal fidelity into a uniform target of `n` slots:
/// `sqrt(1/n) (sum_{j<=J} sqrt(p_j) + sqrt((n-J) tail))` with `J` the
/// largest prefix whose per-slot tail average stays below the last kept
/// atom. Tail masses accumulate by suffix sums so a fully kept support has
/// an exactly zero tail term.
pub fn uniform_target_fidelity(p: &Distribution, n: u64) -> Option<f64> {
    let pd = p.to_dense(4096)?;
    let d = pd.len();
    // suffix tails: tail[j] = sum of atoms strictly after position j (1-based)
    let mut tail = vec![0.0f64; d + 1];
    for j in (0..d).rev() {
        tail[j] = tail[j + 1] + pd[j];
    }
    let mut big_j = 0usize;
    let limit = d.min(n.saturating_sub(1) as usize);
    for j in 1..=limit {
        if tail[j] / ((n - j as u64) as f64) < pd[j - 1] {
            big_j = j;
        }
    }
    let head: f64 = pd[..big_j].iter().map(|x| x.sqrt()).sum();
    let t = tail[big_j].max(0.0);
    Some(((head + ((n - big_j as u64) as f64 * t).sqrt()) / (n as f64).sqrt()).min(1.0))
}

/// Best two-stage fidelity over all support-`<= capacity` intermediates that
/// majorize `p`, searched on the simplex grid of the given resolution and
/// polished by a local mass-transfer descent. The production path routes
/// through its canonical conditioned intermediate; this oracle checks that
/// no other intermediate beats it.
pub fn storage_intermediate_search(
    p: &Distribution,
    q: &Distribution,
    capacity: usize,
    resolution: u32,
) -> Option<f64> {
    if capacity == 0 || capacity > 6 {
        return None;
    }
    let mut best_val = 0.0f64;
    let mut best_pt: Option<Vec<u32>> = None;
    let mut counts = vec![0u32; capacity];
    enumerate_decreasing(resolution, 0, resolution, &mut counts, &mut |c| {
        let cand: Vec<f64> = c
            .iter()
            .filter(|&&x| x > 0)
            .map(|&x| x as f64 / resolution as f64)
            .collect();
        if cand.is_empty() {
            return;
        }
        let cand_dist = match Distribution::from_probs(&cand) {
            Ok(d) => d,
            Err(_) => return,
        };
        if !is_majorized(p, &cand_dist) {
            return;
        }
        let f = max_fidelity_majorization(&cand_dist, q).fidelity;
        if f > best_val {
            best_val = f;
            best_pt = Some(c.to_vec());
        }
    });
    let start = best_pt?;
    // local polish: transfer mass between coordinate pairs at shrinking step
    let mut cur: Vec<f64> = start.iter().map(|&x| x as f64 / resolution as f64).collect();
    let mut step = 0.5 / resolution as f64;
    for _ in 0..24 {
        let mut improved = false;
        for i in 0..capacity {
            for j in 0..capacity {
                if i == j {
                    continue;
                }
                let mut cand = cur.clone();
                cand[i] += step;
                cand[j] -= step;
                if cand[j] < 0.0 {
                    continue;
                }
                let positive: Vec<f64> = {
                    let mut v: Vec<f64> = cand.iter().copied().filter(|&x| x > 1e-15).collect();
                    v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                    v
                };
                let cand_dist = match Distribution::from_probs(&positive) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                if !is_majorized(p, &cand_dist) {
                    continue;
                }
                let f = max_fidelity_majorization(&cand_dist, q).fidelity;
                if f > best_val + 1e-15 {
                    best_val = f;
                    cur = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(best_val)
}

/// All non-increasing compositions of `total` into `slots` parts (zeros
/// allowed), visited in place.
fn enumerate_decreasing(
    total: u32,
    slot: usize,
    max_part: u32,
    counts: &mut Vec<u32>,
    visit: &mut impl FnMut(&[u32]),
) {
    let slots = counts.len();
    if slot == slots {
        if total == 0 {
            visit(counts);
        }
        return;
    }
    let remaining_slots = (slots - slot) as u32;
    let lo = total.div_ceil(remaining_slots);
    let hi = max_part.min(total);
    for part in (lo..=hi).rev() {
        counts[slot] = part;
        enumerate_decreasing(total - part, slot + 1, part, counts, visit);
    }
    counts[slot] = 0;
}

/// Fidelity between a dense candidate and a distribution, aligning both in
/// decreasing order (test convenience).
pub fn dense_fidelity(xs: &[f64], q: &Distribution) -> Option<f64> {
    let d = Distribution::from_probs(xs).ok()?;
    Some(fidelity(&d, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(probs: &[f64]) -> Distribution {
        Distribution::from_probs(probs).unwrap()
    }

    #[test]
    fn enumeration_agrees_with_hand_example() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.5, 0.25, 0.25]);
        let expect = (1.0f64 / 3.0).sqrt() + (1.0f64 / 12.0).sqrt();
        let e = max_fidelity_enumeration(&p, &q, 12).unwrap();
        assert!((e - expect).abs() < 1e-12);
        // refuses oversized instances
        assert!(max_fidelity_enumeration(&Distribution::uniform(40), &q, 12).is_none());
    }

    #[test]
    fn uniform_target_closed_form_matches_solver() {
        let p = dist(&[0.6, 0.3, 0.1]);
        for n in [1u64, 2, 4, 16] {
            let formula = uniform_target_fidelity(&p, n).unwrap();
            let solved = max_fidelity_majorization(&p, &Distribution::uniform(n)).fidelity;
            assert!((formula - solved).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn decreasing_compositions_cover_the_simplex() {
        let mut seen = 0usize;
        let mut counts = vec![0u32; 3];
        enumerate_decreasing(6, 0, 6, &mut counts, &mut |c| {
            assert_eq!(c.iter().sum::<u32>(), 6);
            assert!(c.windows(2).all(|w| w[0] >= w[1]));
            seen += 1;
        });
        // partitions of 6 into at most 3 parts: 7 of them
        assert_eq!(seen, 7);
    }

    #[test]
    fn storage_search_respects_the_canonical_intermediate() {
        use crate::majorization::condition_to_storage;
        let p = dist(&[0.45, 0.3, 0.15, 0.1]);
        let q = dist(&[0.5, 0.3, 0.2]);
        let cap = 2usize;
        let via_canonical =
            max_fidelity_majorization(&condition_to_storage(&p, cap as u64), &q).fidelity;
        let searched = storage_intermediate_search(&p, &q, cap, 200).unwrap();
        assert!(searched <= via_canonical + 1e-9);
        assert!(via_canonical - searched <= 2e-3, "{via_canonical} vs {searched}");
    }
}
