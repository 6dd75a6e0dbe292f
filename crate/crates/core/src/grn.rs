//! The generalized Rayleigh-normal distribution family `Z_{v,s}(mu)`.
//!
//! `Z_{v,s}(mu)` is one minus the squared optimal continuous fidelity between
//! the derivative of a constrained envelope (a monotone function pinched
//! between the standard normal CDF and 1, equal to 1 at `s`) and the density
//! of `N(mu, v)`. The closed forms split on `v` and involve one or two roots
//! of a ratio equation between normal tails and densities:
//!
//! - `v < 1`: a unique root `beta < min(s, mu/(1-v))`;
//! - `v = 1`: explicit for `mu <= 0`, a unique root for `mu > 0`;
//! - `v > 1`: a root `alpha` of the left-tail ratio equation, plus (when `s`
//!   exceeds a threshold determined by `alpha`) the larger of two roots
//!   `beta > alpha`.
//!
//! `s = +inf` selects the plain Rayleigh-normal family: the `Phi_{mu,v}(s)`
//! factor becomes 1 symbolically and the `v = 1, mu > 0` and `v > 1` cases
//! lose their finite `beta`.
//!
//! All residuals are solved in log space so the case dispatch stays stable
//! out to extreme parameters (`v = 1e-4` .. `1e6`, `|mu|` in the tens).

use crate::special_fns::{
    find_root, integrate, ln_gauss_mass, ln_phi, ln_phi_sf, normal_cdf, normal_pdf, normal_sf,
    phi, phi_inv, phi_sf, std_normal_pdf, NormalParams, SpecialFnError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrnError {
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("case error: {0}")]
    Case(String),
}

/// Absolute tolerance for the log-residual root solves.
const ROOT_TOL: f64 = 1e-13;
/// Below this value of `Phi_{mu,v}(s)` the envelope fidelity is crushed by
/// the Cauchy-Schwarz bound `F <= sqrt(Phi_{mu,v}(s))` and `Z` is 1 to far
/// beyond f64 resolution.
const TRUNCATION_FLOOR: f64 = 1e-150;

/// Parameters `(v, s)` of the family. `v >= 0` finite; `s` real or `+inf`
/// (which selects the plain Rayleigh-normal limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrnParams {
    v: f64,
    s: f64,
}

impl GrnParams {
    pub fn new(v: f64, s: f64) -> Result<Self, GrnError> {
        if !(v >= 0.0) || v.is_infinite() {
            return Err(GrnError::Param(format!(
                "v must be finite and >= 0 (use the scaled limit for v -> inf), got {v}"
            )));
        }
        if s.is_nan() || s == f64::NEG_INFINITY {
            return Err(GrnError::Param(format!("s must be real or +inf, got {s}")));
        }
        Ok(Self { v, s })
    }

    #[inline]
    pub fn v(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Which closed-form branch applies at a given `(v, s, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrnCase {
    VLt1,
    VEq1MuLe0,
    VEq1MuGt0,
    VGt1SmallS,
    VGt1LargeS,
}

/// Solved roots behind one evaluation of `Z_{v,s}(mu)`.
#[derive(Debug, Clone, Copy)]
pub struct GrnRoots {
    pub case_tag: GrnCase,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// `v` values within this relative band of 1 dispatch to the `v = 1`
/// formulas; the `v != 1` forms degenerate there (`mu/(1-v)` blows up) while
/// the family itself is continuous across `v = 1`.
const V_ONE_BAND: f64 = 1e-8;

/// For `v = 1`, positive `mu` below this band evaluates by the `mu <= 0`
/// form: the root runs off to `-infinity` like `-c/mu` while the value
/// approaches the explicit branch with an `O(mu)` error.
const MU_ZERO_BAND: f64 = 1e-9;

#[inline]
fn is_v_one(v: f64) -> bool {
    (v - 1.0).abs() < V_ONE_BAND
}

/// `ln(N_{mu,v}(x) / N(x))`, expanded so the quadratic terms never cancel
/// (`x^2/2 - (x-mu)^2/2` devours every digit once `|x| >> |mu|`; the grouped
/// form keeps the `v = 1` coefficient exactly zero and each term accurate).
#[inline]
fn ln_density_ratio(mu: f64, v: f64, x: f64) -> f64 {
    0.5 * x * x * (1.0 - 1.0 / v) + mu * x / v - mu * mu / (2.0 * v) - 0.5 * v.ln()
}

/// Log residual whose sign equals the sign of Eq-(f)-style
/// `(Phi_{mu,v}(s) - Phi_{mu,v}(x)) - (1 - Phi(x)) N_{mu,v}(x)/N(x)`.
fn beta_log_residual(mu: f64, v: f64, s: f64, x: f64) -> f64 {
    let sd = v.sqrt();
    let hi = if s.is_infinite() { f64::INFINITY } else { (s - mu) / sd };
    let mass = ln_gauss_mass((x - mu) / sd, hi);
    let tail = ln_phi_sf(x) + ln_density_ratio(mu, v, x);
    mass - tail
}

/// Log residual whose sign equals the sign of
/// `Phi_{mu,v}(x) - Phi(x) N_{mu,v}(x)/N(x)`.
fn alpha_log_residual(mu: f64, v: f64, x: f64) -> f64 {
    ln_phi((x - mu) / v.sqrt()) - ln_phi(x) - ln_density_ratio(mu, v, x)
}

/// Cleared-denominator residual of the defining equation of `beta`,
/// `f(x) = (Phi_{mu,v}(s) - Phi_{mu,v}(x)) - (1 - Phi(x)) N_{mu,v}(x)/N(x)`,
/// evaluated in linear space. Used to certify solved roots.
pub fn beta_residual(mu: f64, v: f64, s: f64, x: f64) -> f64 {
    let p = NormalParams::new(mu, v).expect("validated");
    let fs = if s.is_infinite() { 0.0 } else { normal_sf(p, s) };
    let mass = normal_sf(p, x) - fs;
    mass - phi_sf(x) * ln_density_ratio(mu, v, x).exp()
}

/// Cleared-denominator residual of the defining equation of `alpha`,
/// `Phi(x) N_{mu,v}(x) - Phi_{mu,v}(x) N(x)`.
pub fn alpha_residual(mu: f64, v: f64, x: f64) -> f64 {
    let p = NormalParams::new(mu, v).expect("validated");
    phi(x) * normal_pdf(p, x) - normal_cdf(p, x) * std_normal_pdf(x)
}

fn brent_log(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64, GrnError> {
    find_root(f, (lo, hi), ROOT_TOL).map_err(|e| match e {
        SpecialFnError::Bracket { lo, hi, flo, fhi } => GrnError::Case(format!(
            "internal bracket lost sign change on [{lo}, {hi}] (f: {flo:e}, {fhi:e})"
        )),
        other => GrnError::Case(other.to_string()),
    })
}

/// Solve the left-tail ratio equation `Phi(x)/Phi_{mu,v}(x) = N(x)/N_{mu,v}(x)`
/// for its unique root `alpha_{mu,v}`. Requires `v > 1`.
pub fn solve_alpha(mu: f64, v: f64) -> Result<f64, GrnError> {
    if !(v > 1.0) || is_v_one(v) {
        return Err(GrnError::Case(format!("alpha exists only for v > 1, got v={v}")));
    }
    // The residual is positive at -inf and negative at +inf with a single
    // crossing; scan geometrically widening spans around mu.
    let mut span = 1.0;
    while span < 1e7 {
        let steps = 64;
        let mut prev_x = mu - span;
        let mut prev_d = alpha_log_residual(mu, v, prev_x);
        for k in 1..=steps {
            let x = mu - span + 2.0 * span * k as f64 / steps as f64;
            let d = alpha_log_residual(mu, v, x);
            if prev_d > 0.0 && d <= 0.0 {
                return brent_log(|t| alpha_log_residual(mu, v, t), prev_x, x);
            }
            prev_x = x;
            prev_d = d;
        }
        span *= 2.0;
    }
    Err(GrnError::Case(format!(
        "alpha scan found no sign change for mu={mu}, v={v}"
    )))
}

/// Solve the tail-ratio equation
/// `(1 - Phi(x)) / (Phi_{mu,v}(s) - Phi_{mu,v}(x)) = N(x)/N_{mu,v}(x)`
/// for `beta_{mu,v,s}` in the regimes where it exists: `v < 1` always
/// (the unique root, below `min(s, mu/(1-v))`); `v = 1` with `mu > 0`;
/// `v > 1` with `s` above the `alpha` threshold (the larger of two roots).
pub fn solve_beta(mu: f64, v: f64, s: f64) -> Result<f64, GrnError> {
    if !(v > 0.0) {
        return Err(GrnError::Case(format!("beta requires v > 0, got {v}")));
    }
    if is_v_one(v) {
        if mu <= 0.0 {
            return Err(GrnError::Case(
                "v = 1 with mu <= 0 has no root; Z is explicit there".into(),
            ));
        }
        if s.is_infinite() {
            return Err(GrnError::Case(
                "v = 1 with s = +inf has no finite root; Z is explicit there".into(),
            ));
        }
        // residual strictly decreasing; positive far left, negative as x -> s-.
        // For small mu the crossing sits near -(1 - Phi(s))/mu, so the scan
        // has to reach out on that scale.
        let mut lo = mu / 2.0;
        let mut step = 1.0 + mu.abs();
        while beta_log_residual(mu, 1.0, s, lo) <= 0.0 {
            lo -= step;
            step *= 2.0;
            if step > 1e13 {
                return Err(GrnError::Case(format!(
                    "beta left scan failed for mu={mu}, v=1, s={s}"
                )));
            }
        }
        let hi = approach_upper(mu, 1.0, s, lo)?;
        return brent_log(|t| beta_log_residual(mu, 1.0, s, t), lo, hi);
    }
    if v < 1.0 {
        // unique root on the decreasing branch left of min(s, mu/(1-v))
        let pole = mu / (1.0 - v);
        let anchor = if s.is_finite() { s.min(pole) } else { pole };
        let mut hi = anchor;
        // the residual is < 0 on (beta, s); fp noise at the anchor is the
        // only way this loop runs
        let mut widen = 0.5;
        while beta_log_residual(mu, v, s, hi) >= 0.0 {
            hi = if s.is_finite() { s - (s - hi) / 2.0 } else { hi + widen };
            widen *= 2.0;
            if widen > 1e9 {
                return Err(GrnError::Case(format!(
                    "beta anchor scan failed for mu={mu}, v={v}, s={s}"
                )));
            }
        }
        let mut step = 0.5 * (1.0 + v.sqrt());
        let mut lo = hi - step;
        // walk left until the residual turns positive
        while beta_log_residual(mu, v, s, lo) <= 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
            if step > 1e9 {
                return Err(GrnError::Case(format!(
                    "beta left scan failed for mu={mu}, v={v}, s={s}"
                )));
            }
        }
        return brent_log(|t| beta_log_residual(mu, v, s, t), lo, hi);
    }
    // v > 1: only the larger root, strictly above alpha
    if s.is_infinite() {
        return Err(GrnError::Case(
            "v > 1 with s = +inf has no finite beta; Z uses I_{mu,v}(inf)".into(),
        ));
    }
    let alpha = solve_alpha(mu, v)?;
    if beta_log_residual(mu, v, s, alpha) <= 0.0 {
        return Err(GrnError::Case(format!(
            "s={s} is at or below the existence threshold for mu={mu}, v={v}"
        )));
    }
    let hi = approach_upper(mu, v, s, alpha)?;
    brent_log(|t| beta_log_residual(mu, v, s, t), alpha, hi)
}

/// Walk right from `lo` toward `s`, halving the remaining gap, until the
/// residual goes negative. The residual is negative in a left neighborhood
/// of `s`, so this terminates.
fn approach_upper(mu: f64, v: f64, s: f64, lo: f64) -> Result<f64, GrnError> {
    let mut t = lo;
    loop {
        t = s - (s - t) / 2.0;
        if beta_log_residual(mu, v, s, t) < 0.0 {
            return Ok(t);
        }
        if s - t < 1e-13 * s.abs().max(1.0) {
            return Err(GrnError::Case(format!(
                "no sign change approaching s for mu={mu}, v={v}, s={s}"
            )));
        }
    }
}

/// `I_{mu,v}(x) = sqrt(2 sqrt(v)/(1+v)) exp(-mu^2/(4(1+v))) Phi_w(x)` where
/// `w = N(mu/(1+v), 2v/(1+v))`; equals the cumulative geometric-mean overlap
/// `int_{-inf}^x sqrt(N(t) N_{mu,v}(t)) dt`. `x = +inf` gives the prefactor.
pub fn i_term(mu: f64, v: f64, x: f64) -> f64 {
    assert!(v > 0.0, "i_term requires v > 0");
    let pref = (2.0 * v.sqrt() / (1.0 + v)).sqrt() * (-mu * mu / (4.0 * (1.0 + v))).exp();
    if x == f64::INFINITY {
        return pref;
    }
    let w = NormalParams::new(mu / (1.0 + v), 2.0 * v / (1.0 + v)).expect("valid by construction");
    pref * normal_cdf(w, x)
}

/// Classify `(v, s, mu)` into its closed-form case and solve the roots that
/// case needs. `v = 0` never reaches here (it has its own explicit form).
pub fn classify(params: GrnParams, mu: f64) -> Result<GrnRoots, GrnError> {
    let (v, s) = (params.v, params.s);
    if !(v > 0.0) {
        return Err(GrnError::Case("classification requires v > 0".into()));
    }
    if is_v_one(v) {
        if mu <= MU_ZERO_BAND {
            return Ok(GrnRoots {
                case_tag: GrnCase::VEq1MuLe0,
                alpha: None,
                beta: None,
            });
        }
        let beta = if s.is_finite() { Some(solve_beta(mu, 1.0, s)?) } else { None };
        return Ok(GrnRoots {
            case_tag: GrnCase::VEq1MuGt0,
            alpha: None,
            beta,
        });
    }
    if v < 1.0 {
        return Ok(GrnRoots {
            case_tag: GrnCase::VLt1,
            alpha: None,
            beta: Some(solve_beta(mu, v, s)?),
        });
    }
    let alpha = solve_alpha(mu, v)?;
    if s.is_infinite() {
        return Ok(GrnRoots {
            case_tag: GrnCase::VGt1LargeS,
            alpha: Some(alpha),
            beta: None,
        });
    }
    // s <= threshold  <=>  f(alpha) <= 0; the sign of f(alpha) decides the
    // branch without the cancellation of forming the threshold explicitly.
    // Ties within 1e-12 of the threshold land on the small-s side, matching
    // the closed form's `if s <=` inequality (the two branches agree there).
    let fa = beta_log_residual(mu, v, s, alpha);
    if fa <= 0.0 || s <= threshold_from_alpha(mu, v, alpha)? + 1e-12 {
        return Ok(GrnRoots {
            case_tag: GrnCase::VGt1SmallS,
            alpha: None,
            beta: None,
        });
    }
    let beta = solve_beta(mu, v, s)?;
    Ok(GrnRoots {
        case_tag: GrnCase::VGt1LargeS,
        alpha: Some(alpha),
        beta: Some(beta),
    })
}

fn threshold_from_alpha(mu: f64, v: f64, alpha: f64) -> Result<f64, GrnError> {
    let ln_ratio = ln_phi((alpha - mu) / v.sqrt()) - ln_phi(alpha);
    let ratio = ln_ratio.exp().clamp(1e-300, 1.0 - 1e-16);
    let q = phi_inv(ratio).map_err(|e| GrnError::Case(e.to_string()))?;
    Ok(mu + v.sqrt() * q)
}

/// The `v > 1` case threshold `Phi_{mu,v}^{-1}(Phi_{mu,v}(alpha)/Phi(alpha))`:
/// `s` at or below it selects the pure-truncation branch.
pub fn large_s_threshold(mu: f64, v: f64) -> Result<f64, GrnError> {
    let alpha = solve_alpha(mu, v)?;
    threshold_from_alpha(mu, v, alpha)
}

/// Evaluate `Z_{v,s}(mu)` by the closed forms.
///
/// `v = 0` uses the left-continuous limiting form (`Phi(mu)` for `mu <= s`,
/// 1 beyond); `s = +inf` evaluates the plain Rayleigh-normal reduction of
/// each case. The result is clamped to `[0, 1]` against sub-1e-12 numerical
/// overshoot only.
pub fn z_eval(params: GrnParams, mu: f64) -> f64 {
    let (v, s) = (params.v, params.s);
    if v == 0.0 {
        return if mu <= s { phi(mu) } else { 1.0 };
    }
    let p = NormalParams::new(mu, v).expect("validated in GrnParams");
    if s.is_finite() && normal_cdf(p, s) < TRUNCATION_FLOOR {
        // F <= sqrt(Phi_{mu,v}(s)) by Cauchy-Schwarz, so Z = 1 - O(1e-150)
        return 1.0;
    }
    let roots = classify(params, mu).expect("dispatch covers every (v,s,mu); this is a bug");
    let value = match roots.case_tag {
        GrnCase::VEq1MuLe0 => {
            return if s.is_finite() { phi(mu - s) } else { 0.0 };
        }
        GrnCase::VEq1MuGt0 => {
            if s.is_infinite() {
                return clamp_unit(1.0 - (-mu * mu / 4.0).exp());
            }
            let b = roots.beta.expect("finite s stores beta");
            let mass = phi_sf(b - mu) - phi_sf(s - mu);
            (phi_sf(b) * mass.max(0.0)).sqrt() + phi(b - mu / 2.0) * (-mu * mu / 8.0).exp()
        }
        GrnCase::VLt1 => {
            let b = roots.beta.expect("v<1 always stores beta");
            let sf_s = if s.is_finite() { normal_sf(p, s) } else { 0.0 };
            let mass = normal_sf(p, b) - sf_s;
            (phi_sf(b) * mass.max(0.0)).sqrt() + i_term(mu, v, b)
        }
        GrnCase::VGt1SmallS => {
            return clamp_unit(normal_sf(p, s));
        }
        GrnCase::VGt1LargeS => {
            let a = roots.alpha.expect("v>1 stores alpha");
            let head = (phi(a) * normal_cdf(p, a)).sqrt();
            match roots.beta {
                None => head + i_term(mu, v, f64::INFINITY) - i_term(mu, v, a),
                Some(b) => {
                    let mass = normal_sf(p, b) - normal_sf(p, s);
                    head + i_term(mu, v, b) - i_term(mu, v, a)
                        + (phi_sf(b) * mass.max(0.0)).sqrt()
                }
            }
        }
    };
    clamp_unit(1.0 - value * value)
}

#[inline]
fn clamp_unit(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

/// Scaled large-`v` limit: `lim_{v->inf} Z_{v, sqrt(v) s}(sqrt(v) mu)
/// = Phi(mu - min(s, 0))`.
pub fn z_limit_v_to_infinity(s: f64, mu: f64) -> f64 {
    phi(mu - s.min(0.0))
}

/// Variational grid oracle for `Z_{v,s}(mu)`, independent of the closed
/// forms. Requires `v > 0` and finite `s`.
///
/// Candidate envelopes are three-piece: proportional to `Phi_{mu,v}` up to
/// `b`, equal to `Phi` on `[b, b']`, then a proportional ramp to 1 at `s`.
/// Its fidelity against `N_{mu,v}` is
/// `sqrt(Phi(b) Phi_{mu,v}(b)) + int_b^{b'} sqrt(N N_{mu,v})
///  + sqrt((1-Phi(b'))(Phi_{mu,v}(s)-Phi_{mu,v}(b')))`,
/// with the middle integral done by quadrature. A candidate is kept only if
/// the induced envelope stays above `Phi`: the head ratio `Phi/Phi_{mu,v}`
/// must peak at `b` and the tail ratio `(1-Phi)/(Phi_{mu,v}(s)-Phi_{mu,v})`
/// must bottom at `b'`. The degenerate corner `b = b' = lo` reduces to the
/// pure-truncation envelope `Phi_{mu,v}/Phi_{mu,v}(s)`, so that candidate is
/// covered by the same filter. The maximizer never exceeds the true supremum,
/// and reaches it up to grid resolution.
pub fn z_oracle(params: GrnParams, mu: f64, grid: usize) -> f64 {
    let (v, s) = (params.v, params.s);
    assert!(v > 0.0, "z_oracle requires v > 0");
    assert!(s.is_finite(), "z_oracle requires finite s");
    assert!(grid >= 2, "z_oracle needs at least 2 grid cells");
    let p = NormalParams::new(mu, v).expect("validated");
    let hi = s.min(8.0);
    let lo = if hi <= -8.0 { hi - 16.0 } else { -8.0 };
    let n = grid;
    let xs: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();

    // cumulative geometric-mean overlap along the grid
    let overlap = |t: f64| (std_normal_pdf(t) * normal_pdf(p, t)).sqrt();
    let mut cum = vec![0.0f64; n + 1];
    for i in 0..n {
        let piece = integrate(overlap, xs[i], xs[i + 1], 1e-12)
            .expect("smooth integrand on a bounded cell");
        cum[i + 1] = cum[i] + piece;
    }

    let sf_s = normal_sf(p, s);
    let head: Vec<f64> = xs.iter().map(|&x| (phi(x) * normal_cdf(p, x)).sqrt()).collect();
    let tail: Vec<f64> = xs
        .iter()
        .map(|&x| (phi_sf(x) * (normal_sf(p, x) - sf_s).max(0.0)).sqrt())
        .collect();

    // head feasibility: ln(Phi/Phi_{mu,v}) is a running maximum at b
    let mut head_ok = vec![false; n + 1];
    let mut run_max = f64::NEG_INFINITY;
    for i in 0..=n {
        let r = ln_phi(xs[i]) - ln_phi((xs[i] - mu) / v.sqrt());
        if r >= run_max - 1e-9 {
            head_ok[i] = true;
        }
        run_max = run_max.max(r);
    }
    // tail feasibility: ln((1-Phi)/(Phi_{mu,v}(s)-Phi_{mu,v})) is a suffix
    // minimum at b'; when s extends past the grid the suffix check continues
    // on an extension grid so the ramp stays above Phi out to s.
    let ln_g = |x: f64| {
        let mass = ln_gauss_mass((x - mu) / v.sqrt(), (s - mu) / v.sqrt());
        ln_phi_sf(x) - mass
    };
    let mut suffix_min = f64::INFINITY;
    if s > hi {
        let ext_hi = s.min(40.0);
        let m = n / 2;
        for k in (1..=m).rev() {
            let x = hi + (ext_hi - hi) * k as f64 / m as f64;
            suffix_min = suffix_min.min(ln_g(x));
        }
    }
    let mut tail_ok = vec![false; n + 1];
    for j in (0..=n).rev() {
        let g = if xs[j] >= s { f64::INFINITY } else { ln_g(xs[j]) };
        if g <= suffix_min + 1e-9 {
            tail_ok[j] = true;
        }
        suffix_min = suffix_min.min(g);
    }

    let mut best: f64 = 0.0;
    let mut run_best = f64::NEG_INFINITY;
    for j in 0..=n {
        if head_ok[j] {
            run_best = run_best.max(head[j] - cum[j]);
        }
        if tail_ok[j] && run_best > f64::NEG_INFINITY {
            best = best.max(tail[j] + cum[j] + run_best);
        }
    }
    clamp_unit(1.0 - best * best)
}
