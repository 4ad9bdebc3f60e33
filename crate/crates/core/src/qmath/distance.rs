use super::matrix::Mat2;
use super::state::QubitState;
use super::{QmathError, PINV_CUTOFF};

/// `½‖ρ_a − ρ_b‖₁`
pub fn trace_distance(a: &QubitState, b: &QubitState) -> f64 {
    let d = a.density() - b.density();
    let [l1, l2] = d.hermitian_eigenvalues();
    (0.5 * (l1.abs() + l2.abs())).clamp(0.0, 1.0)
}

/// A member of an ensemble with its prior weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedState {
    pub weight: f64,
    pub state: QubitState,
}

impl WeightedState {
    pub fn new(weight: f64, state: QubitState) -> Self {
        WeightedState { weight, state }
    }

    /// Unnormalized operator `p·ρ`.
    pub fn operator(&self) -> Mat2 {
        self.state.density().scale_re(self.weight)
    }
}

pub fn ensemble_sum(ens: &[WeightedState]) -> Mat2 {
    ens.iter().map(WeightedState::operator).sum()
}

/// `c = max_{r,r'} ‖√ρ^r X⁻¹ √σ^{r'}‖²∞` with `X = Σ_r ρ^r = Σ_r σ^r`.
pub fn complementarity_c(ens0: &[WeightedState], ens1: &[WeightedState]) -> Result<f64, QmathError> {
    let x = ensemble_sum(ens0);
    let residual = x.max_abs_diff(&ensemble_sum(ens1));
    if residual > 1e-10 {
        return Err(QmathError::EnsembleMismatch { residual });
    }
    let xinv = x.pinv_hermitian(PINV_CUTOFF);
    let roots1: Vec<Mat2> = ens1.iter().map(|w| w.operator().sqrt_psd()).collect();
    let mut c: f64 = 0.0;
    for w0 in ens0 {
        let left = w0.operator().sqrt_psd() * xinv;
        for r1 in &roots1 {
            c = c.max((left * *r1).operator_norm().powi(2));
        }
    }
    Ok(c)
}
