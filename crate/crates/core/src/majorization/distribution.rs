//! Probability vectors in level/multiplicity form.
//!
//! A [`Distribution`] stores strictly decreasing probability levels together
//! with their multiplicities, both in natural-log space. The log
//! representation is what lets exact finite-n experiments run at i.i.d.
//! powers with thousands of copies: a binary power `P^4096` has 4097 levels
//! whose probabilities (around `e^-3000`) and multiplicities (around
//! `e^+2800`) are far outside linear f64 range but are perfectly tame as
//! logs. At desk scale the representation is exact to ordinary f64 rounding.

use crate::special_fns::{ln_add_exp, ln_diff_exp};

use super::MajorizationError;

const LN_2: f64 = std::f64::consts::LN_2;

/// One probability level: `exp(log_p)` repeated `exp(log_mult)` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub log_p: f64,
    pub log_mult: f64,
}

impl Level {
    /// Mass carried by the level: `p * mult`, in log space.
    #[inline]
    pub fn log_mass(&self) -> f64 {
        self.log_p + self.log_mult
    }
}

/// A finite probability distribution in level/multiplicity form, sorted by
/// strictly decreasing probability, total mass 1 (renormalized exactly at
/// construction), all levels strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    levels: Vec<Level>,
}

impl Distribution {
    /// Build from dense per-atom probabilities. Zero entries are dropped,
    /// equal entries merge into one level. The total may deviate from 1 by
    /// at most 1e-9 (input rounding); it is renormalized away exactly.
    pub fn from_probs(probs: &[f64]) -> Result<Self, MajorizationError> {
        let mut levels = Vec::with_capacity(probs.len());
        for &p in probs {
            if p.is_nan() || p < 0.0 || p > 1.0 + 1e-9 {
                return Err(MajorizationError::InvalidInput(format!(
                    "probabilities must lie in [0,1], got {p}"
                )));
            }
            if p > 0.0 {
                levels.push(Level {
                    log_p: p.ln(),
                    log_mult: 0.0,
                });
            }
        }
        Self::from_log_levels(levels)
    }

    /// Build from `(probability, multiplicity)` pairs in linear space.
    pub fn from_levels(levels: &[(f64, u64)]) -> Result<Self, MajorizationError> {
        let mut out = Vec::with_capacity(levels.len());
        for &(p, m) in levels {
            if p.is_nan() || p < 0.0 || p > 1.0 + 1e-9 {
                return Err(MajorizationError::InvalidInput(format!(
                    "level probability must lie in [0,1], got {p}"
                )));
            }
            if m == 0 && p > 0.0 {
                return Err(MajorizationError::InvalidInput(
                    "multiplicity must be positive".into(),
                ));
            }
            if p > 0.0 {
                out.push(Level {
                    log_p: p.ln(),
                    log_mult: (m as f64).ln(),
                });
            }
        }
        Self::from_log_levels(out)
    }

    /// Build from raw log-space levels: sorts, merges near-equal levels, and
    /// validates/renormalizes the total mass.
    ///
    /// Levels are merged when their log-probabilities agree to within
    /// `1e-12 + 1e-14 |log p|`: a relative 1e-12 window on the probability,
    /// widened by the accumulation noise of forming large type-class logs,
    /// so that symmetric product collisions always fuse.
    pub fn from_log_levels(mut levels: Vec<Level>) -> Result<Self, MajorizationError> {
        levels.retain(|l| l.log_p > f64::NEG_INFINITY && l.log_mult > f64::NEG_INFINITY);
        if levels.is_empty() {
            return Err(MajorizationError::InvalidInput(
                "a distribution needs at least one positive level".into(),
            ));
        }
        for l in &levels {
            if l.log_p.is_nan() || l.log_mult.is_nan() || l.log_p > 1e-9 {
                return Err(MajorizationError::InvalidInput(format!(
                    "invalid level (log_p={}, log_mult={})",
                    l.log_p, l.log_mult
                )));
            }
        }
        levels.sort_by(|a, b| b.log_p.partial_cmp(&a.log_p).expect("no NaN past validation"));
        let mut merged: Vec<Level> = Vec::with_capacity(levels.len());
        for l in levels {
            match merged.last_mut() {
                Some(last) if (last.log_p - l.log_p).abs() <= 1e-12 + 1e-14 * l.log_p.abs() => {
                    last.log_mult = ln_add_exp(last.log_mult, l.log_mult);
                }
                _ => merged.push(l),
            }
        }
        // validate and renormalize the total mass
        let ln_total = ln_sum(merged.iter().map(Level::log_mass));
        if !(ln_total.abs() <= 1e-9) {
            return Err(MajorizationError::InvalidInput(format!(
                "total mass deviates from 1 by {:e}",
                ln_total.exp_m1()
            )));
        }
        for l in &mut merged {
            l.log_p -= ln_total;
        }
        Ok(Self { levels: merged })
    }

    /// Uniform distribution on `l` atoms.
    pub fn uniform(l: u64) -> Self {
        assert!(l >= 1, "uniform needs at least one atom");
        let ln_l = (l as f64).ln();
        Self {
            levels: vec![Level {
                log_p: -ln_l,
                log_mult: ln_l,
            }],
        }
    }

    /// Deterministic single-atom distribution.
    pub fn point_mass() -> Self {
        Self::uniform(1)
    }

    #[inline]
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Natural log of the number of atoms in the support.
    pub fn ln_support(&self) -> f64 {
        ln_sum(self.levels.iter().map(|l| l.log_mult))
    }

    /// Exact support size when it fits an integer.
    pub fn support_count(&self) -> Option<u64> {
        let ln = self.ln_support();
        if ln > 52.0 * LN_2 {
            return None;
        }
        Some(ln.exp().round() as u64)
    }

    /// True when all atoms carry the same probability.
    pub fn is_uniform(&self) -> bool {
        self.levels.len() == 1
    }

    /// Dense per-atom probabilities, largest first, when the support is
    /// small enough to expand.
    pub fn to_dense(&self, max_atoms: usize) -> Option<Vec<f64>> {
        let count = self.support_count()?;
        if count > max_atoms as u64 {
            return None;
        }
        let mut out = Vec::with_capacity(count as usize);
        for l in &self.levels {
            let m = l.log_mult.exp().round() as u64;
            let p = l.log_p.exp();
            for _ in 0..m {
                out.push(p);
            }
        }
        Some(out)
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        let mut sum = Neumaier::new();
        for l in &self.levels {
            sum.add(l.log_mass().exp() * (-l.log_p / LN_2));
        }
        sum.value().max(0.0)
    }

    /// Varentropy in bits squared: the variance of the self-information
    /// `-log2 P(X)`.
    pub fn varentropy_bits2(&self) -> f64 {
        if self.is_uniform() {
            return 0.0;
        }
        let h = self.entropy_bits();
        let mut sum = Neumaier::new();
        for l in &self.levels {
            let d = -l.log_p / LN_2 - h;
            sum.add(l.log_mass().exp() * d * d);
        }
        sum.value().max(0.0)
    }

    /// Mass of the top `exp(ln_count)` atoms (a prefix in decreasing order).
    pub fn top_mass_ln_count(&self, ln_count: f64) -> f64 {
        let mut consumed = f64::NEG_INFINITY; // ln of atoms used so far
        let mut mass = Neumaier::new();
        for l in &self.levels {
            let after = ln_add_exp(consumed, l.log_mult);
            if after <= ln_count {
                mass.add(l.log_mass().exp());
                consumed = after;
            } else {
                let room = ln_diff_exp(ln_count, consumed);
                if room > f64::NEG_INFINITY {
                    mass.add((l.log_p + room).exp());
                }
                return mass.value().min(1.0);
            }
        }
        mass.value().min(1.0)
    }
}

/// Compensated (Neumaier) summation for nonnegative contribution streams.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(sum of e^x)` over an iterator, shifted by the running maximum.
pub(crate) fn ln_sum(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = Neumaier::new();
    for x in xs {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

// ---------------------------------------------------------------------------
// aligned segment walk
// ---------------------------------------------------------------------------

/// A run of atom positions over which both walked distributions hold a
/// constant level. `log_p`/`log_q` are `-inf` once the respective support is
/// exhausted.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub log_count: f64,
    pub log_p: f64,
    pub log_q: f64,
}

/// Walk two level sequences position-aligned (both sorted decreasing),
/// splitting runs at every boundary of either. Count arithmetic happens in
/// log space; exactly equal remainders advance both sides so identical
/// distributions align segment-for-segment.
pub(crate) fn aligned_segments(p: &Distribution, q: &Distribution) -> Vec<Segment> {
    let pl = p.levels();
    let ql = q.levels();
    let mut out = Vec::with_capacity(pl.len() + ql.len() + 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut rp = pl.first().map_or(f64::NEG_INFINITY, |l| l.log_mult);
    let mut rq = ql.first().map_or(f64::NEG_INFINITY, |l| l.log_mult);
    while i < pl.len() && j < ql.len() {
        let take = rp.min(rq);
        out.push(Segment {
            log_count: take,
            log_p: pl[i].log_p,
            log_q: ql[j].log_p,
        });
        let advance_p = rp <= take;
        let advance_q = rq <= take;
        if advance_p {
            i += 1;
            rp = if i < pl.len() { pl[i].log_mult } else { f64::NEG_INFINITY };
        } else {
            rp = ln_diff_exp(rp, take);
            if rp == f64::NEG_INFINITY {
                i += 1;
                rp = if i < pl.len() { pl[i].log_mult } else { f64::NEG_INFINITY };
            }
        }
        if advance_q {
            j += 1;
            rq = if j < ql.len() { ql[j].log_mult } else { f64::NEG_INFINITY };
        } else {
            rq = ln_diff_exp(rq, take);
            if rq == f64::NEG_INFINITY {
                j += 1;
                rq = if j < ql.len() { ql[j].log_mult } else { f64::NEG_INFINITY };
            }
        }
    }
    while i < pl.len() {
        out.push(Segment {
            log_count: rp,
            log_p: pl[i].log_p,
            log_q: f64::NEG_INFINITY,
        });
        i += 1;
        rp = if i < pl.len() { pl[i].log_mult } else { f64::NEG_INFINITY };
    }
    while j < ql.len() {
        out.push(Segment {
            log_count: rq,
            log_p: f64::NEG_INFINITY,
            log_q: ql[j].log_p,
        });
        j += 1;
        rq = if j < ql.len() { ql[j].log_mult } else { f64::NEG_INFINITY };
    }
    out
}

/// Fidelity (Bhattacharyya coefficient) between two distributions after
/// aligning both in decreasing order; positions beyond either support
/// contribute nothing.
pub fn fidelity(p: &Distribution, q: &Distribution) -> f64 {
    let mut sum = Neumaier::new();
    for seg in aligned_segments(p, q) {
        if seg.log_p > f64::NEG_INFINITY && seg.log_q > f64::NEG_INFINITY {
            sum.add((seg.log_count + 0.5 * (seg.log_p + seg.log_q)).exp());
        }
    }
    sum.value().min(1.0)
}

/// Majorization order: true iff every prefix sum of `p` sorted decreasing is
/// dominated by the matching prefix of `q` (1e-12 slack). Prefixes are
/// piecewise linear between level boundaries, so checking at the merged
/// boundaries of both sequences is exact.
pub fn is_majorized(p: &Distribution, q: &Distribution) -> bool {
    let mut pref_p = Neumaier::new();
    let mut pref_q = Neumaier::new();
    for seg in aligned_segments(p, q) {
        if seg.log_p > f64::NEG_INFINITY {
            pref_p.add((seg.log_count + seg.log_p).exp());
        }
        if seg.log_q > f64::NEG_INFINITY {
            pref_q.add((seg.log_count + seg.log_q).exp());
        }
        if pref_p.value() > pref_q.value() + 1e-12 {
            return false;
        }
    }
    true
}
