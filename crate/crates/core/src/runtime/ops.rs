use crate::error::Result;

/// Forward and backward operators of a step-wise computation.
///
/// Both operators must be deterministic: the same input bytes must give the
/// same output bytes. Every strategy then yields the same step-0 adjoint,
/// bit for bit.
pub trait OperatorPair {
    type State: Clone;
    type Adjoint;

    /// Number of forward steps `n`.
    fn steps(&self) -> usize;

    /// Size of an encoded state in bytes.
    fn state_size(&self) -> usize;

    /// State `step + 1` from state `step`.
    fn forward_step(&self, step: usize, state: &Self::State) -> Self::State;

    /// Adjoint of state `step` from state `step` and the adjoint of state `step + 1`.
    fn backward_step(&self, step: usize, state: &Self::State, adjoint: &Self::Adjoint) -> Self::Adjoint;

    /// Adjoint of the final state `n`.
    fn adjoint_seed(&self, final_state: &Self::State) -> Self::Adjoint;

    fn encode_state(&self, state: &Self::State) -> Vec<u8>;

    fn decode_state(&self, bytes: &[u8]) -> Result<Self::State>;
}
