//! LOCC conversion via entanglement storage, bridged to the classical
//! majorization engine through squared Schmidt coefficients.
//!
//! A pure bipartite state enters either as its amplitude matrix or directly
//! as its squared Schmidt coefficients. The spectrum of the reduced state
//! (the Gram matrix of the amplitude matrix) is everything the conversion
//! math needs: the maximal LOCC fidelity through `N` stored qubit pairs
//! equals the classical storage-restricted majorization fidelity between
//! the Schmidt distributions, with storage capacity `2^N` Schmidt ranks.
//!
//! # JSON format
//!
//! ```json
//! {"amplitudes": [[[0.7071, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.7071, 0.0]]]}
//! ```
//!
//! (rows by the first subsystem, complex entries as `[re, im]` pairs), or
//! `{"schmidt_sq": [0.5, 0.5]}`.

use crate::asymptotics::{
    profile, second_order_fidelity_inverse, AsymptoticsError,
};
use crate::majorization::{
    iid_power, max_convertible_number, max_fidelity_majorization_with_storage, ConversionMode,
    Distribution, MajorizationError,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("norm error: {0}")]
    Norm(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("uniform error: {0}")]
    Uniform(String),
    #[error(transparent)]
    Majorization(#[from] MajorizationError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
}

/// A pure bipartite state: an amplitude matrix (rows indexed by the first
/// subsystem), squared Schmidt coefficients, or both (validated to agree).
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: Option<Vec<Vec<Complex64>>>,
    schmidt_sq: Distribution,
}

impl PureState {
    /// Build from a unit-Frobenius-norm amplitude matrix.
    pub fn from_amplitudes(amplitudes: Vec<Vec<Complex64>>) -> Result<Self, QuantumError> {
        let schmidt_sq = schmidt_squared(&amplitudes)?;
        Ok(Self {
            amplitudes: Some(amplitudes),
            schmidt_sq,
        })
    }

    /// Build directly from squared Schmidt coefficients.
    pub fn from_schmidt_sq(schmidt_sq: Distribution) -> Self {
        Self {
            amplitudes: None,
            schmidt_sq,
        }
    }

    /// Build from both representations, checking they agree within 1e-8.
    pub fn from_both(
        amplitudes: Vec<Vec<Complex64>>,
        schmidt_sq: Distribution,
    ) -> Result<Self, QuantumError> {
        let computed = schmidt_squared(&amplitudes)?;
        let a = computed.to_dense(4096);
        let b = schmidt_sq.to_dense(4096);
        match (a, b) {
            (Some(a), Some(b)) => {
                let n = a.len().max(b.len());
                for i in 0..n {
                    let x = a.get(i).copied().unwrap_or(0.0);
                    let y = b.get(i).copied().unwrap_or(0.0);
                    if (x - y).abs() > 1e-8 {
                        return Err(QuantumError::InvalidState(format!(
                            "amplitude and Schmidt forms disagree at rank {i}: {x} vs {y}"
                        )));
                    }
                }
            }
            _ => {
                return Err(QuantumError::InvalidState(
                    "states too large to cross-validate".into(),
                ))
            }
        }
        Ok(Self {
            amplitudes: Some(amplitudes),
            schmidt_sq,
        })
    }

    pub fn amplitudes(&self) -> Option<&[Vec<Complex64>]> {
        self.amplitudes.as_deref()
    }

    /// The squared Schmidt coefficients (the classical shadow on which all
    /// LOCC convertibility questions are decided).
    pub fn schmidt_sq(&self) -> &Distribution {
        &self.schmidt_sq
    }

    /// Parse the JSON interchange form.
    pub fn from_json(json: &str) -> Result<Self, QuantumError> {
        let wire: StateJson = serde_json::from_str(json)
            .map_err(|e| QuantumError::InvalidState(format!("bad state JSON: {e}")))?;
        let amps = wire.amplitudes.map(|rows| {
            rows.into_iter()
                .map(|row| row.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
                .collect::<Vec<Vec<Complex64>>>()
        });
        let schmidt = wire
            .schmidt_sq
            .map(|p| Distribution::from_probs(&p))
            .transpose()?;
        match (amps, schmidt) {
            (Some(a), None) => Self::from_amplitudes(a),
            (None, Some(s)) => Ok(Self::from_schmidt_sq(s)),
            (Some(a), Some(s)) => Self::from_both(a, s),
            (None, None) => Err(QuantumError::InvalidState(
                "state JSON needs \"amplitudes\" or \"schmidt_sq\"".into(),
            )),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StateJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schmidt_sq: Option<Vec<f64>>,
}

/// Squared Schmidt coefficients of a unit-norm amplitude matrix: the
/// spectrum of the Gram matrix `M M^dagger`, computed by cyclic Jacobi
/// rotations to an off-diagonal residual below 1e-12, zeros dropped, sorted
/// decreasing.
pub fn schmidt_squared(amplitudes: &[Vec<Complex64>]) -> Result<Distribution, QuantumError> {
    let d_a = amplitudes.len();
    if d_a == 0 {
        return Err(QuantumError::InvalidState("empty amplitude matrix".into()));
    }
    let d_b = amplitudes[0].len();
    if d_b == 0 || amplitudes.iter().any(|row| row.len() != d_b) {
        return Err(QuantumError::InvalidState(
            "amplitude matrix must be rectangular and nonempty".into(),
        ));
    }
    let norm2: f64 = amplitudes
        .iter()
        .flat_map(|row| row.iter())
        .map(|a| a.norm_sqr())
        .sum();
    if (norm2 - 1.0).abs() > 1e-8 {
        return Err(QuantumError::Norm(format!(
            "state norm^2 deviates from 1 by {:e}",
            norm2 - 1.0
        )));
    }
    // Gram matrix G = M M^dagger (Hermitian PSD, trace 1)
    let mut g = vec![vec![Complex64::new(0.0, 0.0); d_a]; d_a];
    for r in 0..d_a {
        for c in 0..=r {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d_b {
                acc += amplitudes[r][k] * amplitudes[c][k].conj();
            }
            g[r][c] = acc;
            g[c][r] = acc.conj();
        }
    }
    let eigen = jacobi_hermitian_eigenvalues(&mut g, 1e-12);
    let mut probs: Vec<f64> = eigen.into_iter().filter(|&e| e > 1e-12).collect();
    probs.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));
    Ok(Distribution::from_probs(&probs)?)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations;
/// sweeps until the off-diagonal Frobenius mass drops below `tol`.
///
/// Each pivot `(p, q)` applies the unitary that is the identity outside the
/// `(p, q)` plane and, inside it,
/// `U = [[c, s e^{i phi}], [-s e^{-i phi}, c]]` with `phi = arg(G[p][q])`
/// and `tan(2 theta) = 2 |G[p][q]| / (G[q][q] - G[p][p])`, which zeroes the
/// pivot exactly.
fn jacobi_hermitian_eigenvalues(g: &mut [Vec<Complex64>], tol: f64) -> Vec<f64> {
    let n = g.len();
    if n == 1 {
        return vec![g[0][0].re];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| g[r][c].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = g[p][q];
                let a = apq.norm();
                if a <= tol / (10.0 * n as f64) {
                    continue;
                }
                let phase = apq / a;
                let theta = 0.5 * (2.0 * a).atan2(g[q][q].re - g[p][p].re);
                let (c, s) = (theta.cos(), theta.sin());
                // G <- G U: col p gets c*col_p - s e^{-i phi} col_q,
                //           col q gets s e^{i phi} col_p + c*col_q
                for r in 0..n {
                    let grp = g[r][p];
                    let grq = g[r][q];
                    g[r][p] = grp * c - grq * phase.conj() * s;
                    g[r][q] = grp * phase * s + grq * c;
                }
                // G <- U^dagger G: row p gets c*row_p - s e^{i phi} row_q,
                //                  row q gets s e^{-i phi} row_p + c*row_q
                for col in 0..n {
                    let gpc = g[p][col];
                    let gqc = g[q][col];
                    g[p][col] = gpc * c - gqc * phase * s;
                    g[q][col] = gpc * phase.conj() * s + gqc * c;
                }
                g[p][q] = Complex64::new(0.0, 0.0);
                g[q][p] = Complex64::new(0.0, 0.0);
            }
        }
    }
    (0..n).map(|i| g[i][i].re).collect()
}

/// Maximal LOCC conversion fidelity from `psi` to `phi` through an
/// entanglement storage of `n_qubit_pairs` maximally entangled qubit pairs
/// (Schmidt-rank capacity `2^N`): equals the classical storage-restricted
/// majorization fidelity between the squared Schmidt distributions.
pub fn locc_fidelity_via_storage(
    psi: &PureState,
    phi: &PureState,
    n_qubit_pairs: f64,
) -> Result<f64, QuantumError> {
    Ok(
        max_fidelity_majorization_with_storage(psi.schmidt_sq(), phi.schmidt_sq(), n_qubit_pairs)?
            .fidelity,
    )
}

/// Largest number of copies of `phi` recoverable from `n` copies of `psi`
/// by LOCC through `n_qubit_pairs` of entanglement storage at confidence
/// `nu`: the classical maximal convertible number on the Schmidt
/// distributions.
pub fn locc_max_recovery(
    psi: &PureState,
    phi: &PureState,
    nu: f64,
    n: u64,
    n_qubit_pairs: Option<f64>,
) -> Result<u64, QuantumError> {
    let source = iid_power(psi.schmidt_sq(), n)?;
    Ok(max_convertible_number(
        &source,
        phi.schmidt_sq(),
        nu,
        n_qubit_pairs,
        ConversionMode::Majorization,
    )?)
}

/// Predicted copy deficit of LOCC compression at second-order storage rate
/// `s2`: `-F^{-1}_{P,P,s2}(nu) * sqrt(n)`, positive when loss is
/// unavoidable, negative when the recovered copies exceed the input
/// (cloning-like gain).
pub fn compression_loss(
    psi: &PureState,
    nu: f64,
    s2: f64,
    n: u64,
) -> Result<f64, QuantumError> {
    let p = psi.schmidt_sq();
    if p.is_uniform() {
        return Err(QuantumError::Uniform(
            "a flat Schmidt spectrum has no second-order compression tradeoff".into(),
        ));
    }
    let prof = profile(p, p);
    let t2 = second_order_fidelity_inverse(&prof, prof.h_p, s2, nu)?;
    Ok(-t2 * (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::fidelity;
    use crate::special_fns::phi_inv;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_state_is_point_mass() {
        let amps = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
        let d = schmidt_squared(&amps).unwrap();
        assert!(d.is_uniform());
        assert_eq!(d.support_count(), Some(1));
    }

    #[test]
    fn maximally_entangled_diagonal() {
        let r = 0.5f64.sqrt();
        let amps = vec![vec![c(r, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(r, 0.0)]];
        let d = schmidt_squared(&amps).unwrap();
        let dense = d.to_dense(4).unwrap();
        assert_eq!(dense.len(), 2);
        assert!((dense[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn norm_violation_rejected() {
        let amps = vec![vec![c(1.0, 0.0), c(0.5, 0.0)]];
        assert!(matches!(
            schmidt_squared(&amps),
            Err(QuantumError::Norm(_))
        ));
    }

    #[test]
    fn off_diagonal_state_with_phases() {
        // |psi> = (|00> + |01> + |10> - |11>)/2 has Schmidt squares (1/2, 1/2)
        let amps = vec![
            vec![c(0.5, 0.0), c(0.5, 0.0)],
            vec![c(0.5, 0.0), c(-0.5, 0.0)],
        ];
        let d = schmidt_squared(&amps).unwrap();
        let dense = d.to_dense(4).unwrap();
        assert!((dense[0] - 0.5).abs() < 1e-10);
        // a complex-phased variant keeps the same spectrum
        let amps = vec![
            vec![c(0.5, 0.0), c(0.0, 0.5)],
            vec![c(0.0, 0.5), c(0.5, 0.0)],
        ];
        let d = schmidt_squared(&amps).unwrap();
        let dense = d.to_dense(4).unwrap();
        assert!((dense[0] - 0.5).abs() < 1e-10, "{dense:?}");
    }

    #[test]
    fn storage_bridge_is_the_classical_path() {
        let r = 0.5f64.sqrt();
        let psi = PureState::from_amplitudes(vec![
            vec![c(r, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(r, 0.0)],
        ])
        .unwrap();
        let phi_state =
            PureState::from_schmidt_sq(Distribution::from_probs(&[0.7, 0.2, 0.1]).unwrap());
        let quantum = locc_fidelity_via_storage(&psi, &phi_state, 2.0).unwrap();
        let classical = max_fidelity_majorization_with_storage(
            psi.schmidt_sq(),
            phi_state.schmidt_sq(),
            2.0,
        )
        .unwrap()
        .fidelity;
        assert_eq!(quantum, classical);
        // identity conversion with ample storage
        let same = locc_fidelity_via_storage(&psi, &psi, 1.0).unwrap();
        assert!((same - 1.0).abs() < 1e-12);
        // monotone in storage
        let f0 = locc_fidelity_via_storage(&psi, &phi_state, 0.0).unwrap();
        let f1 = locc_fidelity_via_storage(&psi, &phi_state, 1.0).unwrap();
        let f2 = locc_fidelity_via_storage(&psi, &phi_state, 2.0).unwrap();
        assert!(f0 <= f1 + 1e-12 && f1 <= f2 + 1e-12);
    }

    #[test]
    fn maximally_entangled_rank4_reaches_small_targets() {
        // U_4 Schmidt spectrum is majorized by every rank-<=4 spectrum
        let psi = PureState::from_schmidt_sq(Distribution::uniform(4));
        let phi_state =
            PureState::from_schmidt_sq(Distribution::from_probs(&[0.5, 0.3, 0.2]).unwrap());
        let f = locc_fidelity_via_storage(&psi, &phi_state, 2.0).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovery_counts() {
        let p = Distribution::from_probs(&[0.75, 0.25]).unwrap();
        let psi = PureState::from_schmidt_sq(p);
        let l = locc_max_recovery(&psi, &psi, 0.9, 8, None).unwrap();
        assert!(l >= 8, "identity recovery with unbounded storage: {l}");
    }

    #[test]
    fn compression_loss_sign_flip() {
        let p = Distribution::from_probs(&[0.75, 0.25]).unwrap();
        let psi = PureState::from_schmidt_sq(p.clone());
        let nu = 0.9f64;
        let v = p.varentropy_bits2();
        let crossover = v.sqrt() * phi_inv(nu * nu).unwrap();
        let at = compression_loss(&psi, nu, crossover, 1024).unwrap();
        assert!(at.abs() < 1e-6);
        let below = compression_loss(&psi, nu, crossover - 0.5, 1024).unwrap();
        assert!(below > 0.0, "loss below the crossover: {below}");
        let above = compression_loss(&psi, nu, crossover + 0.5, 1024).unwrap();
        assert!(above < 0.0, "gain above the crossover: {above}");
        // flat spectrum rejected
        let flat = PureState::from_schmidt_sq(Distribution::uniform(2));
        assert!(matches!(
            compression_loss(&flat, nu, 0.0, 16),
            Err(QuantumError::Uniform(_))
        ));
    }

    #[test]
    fn json_forms() {
        let s = PureState::from_json(r#"{"schmidt_sq": [0.5, 0.5]}"#).unwrap();
        assert!(s.schmidt_sq().is_uniform());
        let r = 0.5f64.sqrt();
        let js = format!(
            r#"{{"amplitudes": [[[{r}, 0.0], [0.0, 0.0]], [[0.0, 0.0], [{r}, 0.0]]]}}"#
        );
        let s = PureState::from_json(&js).unwrap();
        assert_eq!(s.schmidt_sq().support_count(), Some(2));
        assert!(PureState::from_json(r#"{}"#).is_err());
        // both forms, consistent
        let js = format!(
            r#"{{"amplitudes": [[[{r}, 0.0], [0.0, 0.0]], [[0.0, 0.0], [{r}, 0.0]]], "schmidt_sq": [0.5, 0.5]}}"#
        );
        assert!(PureState::from_json(&js).is_ok());
        // both forms, inconsistent
        let js = format!(
            r#"{{"amplitudes": [[[{r}, 0.0], [0.0, 0.0]], [[0.0, 0.0], [{r}, 0.0]]], "schmidt_sq": [0.9, 0.1]}}"#
        );
        assert!(PureState::from_json(&js).is_err());
    }

    #[test]
    fn witness_fidelity_consistency() {
        // the quantum fidelity value is achieved by a genuine majorization witness
        let psi = PureState::from_schmidt_sq(
            Distribution::from_probs(&[0.6, 0.25, 0.15]).unwrap(),
        );
        let phi_state =
            PureState::from_schmidt_sq(Distribution::from_probs(&[0.4, 0.35, 0.25]).unwrap());
        let res = max_fidelity_majorization_with_storage(
            psi.schmidt_sq(),
            phi_state.schmidt_sq(),
            1.0,
        )
        .unwrap();
        assert!((fidelity(&res.witness, phi_state.schmidt_sq()) - res.fidelity).abs() < 1e-12);
    }
}
