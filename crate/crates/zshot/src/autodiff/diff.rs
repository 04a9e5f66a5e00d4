//! Gradient and Hessian-vector drivers over [`LossFn`] objects.
//!
//! `grad` differentiates the mean batch loss in one reverse pass. Exact HVPs
//! come from running the identical forward+reverse computation in dual
//! arithmetic: seeding the parameter tangents with `v` makes the tangent of
//! the gradient equal `H(theta) v`, with no finite-difference truncation.

use num_traits::{One, Zero};

use crate::data::Example;
use crate::scalar::{Dual, Scalar};

use super::tape::{BackwardArena, NodeId, Tape};
use super::{AutodiffError, GradVector, LossFn, ParamVector};

/// Mean loss over the batch as a tape node; checks every per-example loss for
/// finiteness so overflows are attributed to the offending example.
pub(crate) fn batch_loss_node<S: Scalar, F: LossFn<S> + ?Sized>(
    f: &F,
    tape: &mut Tape<S>,
    batch: &[Example],
) -> Result<NodeId, AutodiffError> {
    if batch.is_empty() {
        return Err(AutodiffError::Argument("empty batch".into()));
    }
    let mut total: Option<NodeId> = None;
    for example in batch {
        let node = f.example_loss(tape, example)?;
        if !tape.scalar_value(node).is_finite() {
            return Err(AutodiffError::NumericOverflow { example_id: example.id.clone() });
        }
        total = Some(match total {
            Some(acc) => tape.add(acc, node),
            None => node,
        });
    }
    let total = total.expect("non-empty batch");
    Ok(tape.scale(total, 1.0 / batch.len() as f64))
}

/// Gradient of the mean batch loss.
pub fn grad<S, F>(
    f: &F,
    params: &ParamVector<S>,
    batch: &[Example],
) -> Result<GradVector<S>, AutodiffError>
where
    S: Scalar,
    F: LossFn<S> + ?Sized,
{
    grad_with_loss(f, params, batch).map(|(g, _)| g)
}

/// Gradient plus the mean loss value it was taken at.
pub fn grad_with_loss<S, F>(
    f: &F,
    params: &ParamVector<S>,
    batch: &[Example],
) -> Result<(GradVector<S>, S), AutodiffError>
where
    S: Scalar,
    F: LossFn<S> + ?Sized,
{
    let mut tape = Tape::new(params.values().to_vec());
    let loss = batch_loss_node(f, &mut tape, batch)?;
    let mut out = vec![S::zero(); params.len()];
    let mut arena = BackwardArena::new();
    tape.backward(loss, &mut out, &mut arena);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(AutodiffError::NonFiniteGradient);
    }
    Ok((GradVector::from_values(out), tape.scalar_value(loss)))
}

/// Exact Hessian-vector product of the mean batch loss.
///
/// Linear in `v`: `hvp(a u + b w) = a hvp(u) + b hvp(w)` up to roundoff.
pub fn hvp_exact<S, F>(
    f: &F,
    params: &ParamVector<S>,
    batch: &[Example],
    v: &[S],
) -> Result<GradVector<S>, AutodiffError>
where
    S: Scalar,
    F: LossFn<Dual<S>> + ?Sized,
{
    let mut op = HvpOperator::new(f, params, batch)?;
    op.apply(v).map(GradVector::from_values)
}

/// Finite-difference Hessian-vector product `(g(theta + eps v) - g(theta)) / eps`.
///
/// O(eps) error; kept as a cross-check for [`hvp_exact`].
pub fn hvp_fd<S, F>(
    f: &F,
    params: &ParamVector<S>,
    batch: &[Example],
    v: &[S],
    eps: f64,
) -> Result<GradVector<S>, AutodiffError>
where
    S: Scalar,
    F: LossFn<S> + ?Sized,
{
    if eps <= 0.0 {
        return Err(AutodiffError::Argument(format!("eps must be positive, got {eps}")));
    }
    if v.len() != params.len() {
        return Err(AutodiffError::Argument("direction length mismatch".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(AutodiffError::Argument("non-finite direction".into()));
    }
    let g0 = grad(f, params, batch)?;
    let eps_s = S::from_real(eps);
    let mut shifted = params.clone();
    for (p, &d) in shifted.values_mut().iter_mut().zip(v) {
        *p += eps_s * d;
    }
    let g1 = grad(f, &shifted, batch)?;
    let inv = S::from_real(1.0 / eps);
    let values = g1
        .values()
        .iter()
        .zip(g0.values())
        .map(|(&a, &b)| (a - b) * inv)
        .collect();
    Ok(GradVector::from_values(values))
}

/// Reusable exact-HVP operator for one `(params, batch)` pair.
///
/// The dual tape is recorded once; each `apply` only rewrites parameter
/// tangents, refreshes forward values in place and runs one reverse pass.
/// Conjugate gradient and self-influence ranking apply it many times.
pub struct HvpOperator<S: Scalar> {
    tape: Tape<Dual<S>>,
    loss: NodeId,
    arena: BackwardArena<Dual<S>>,
    adjoint: Vec<Dual<S>>,
    dim: usize,
}

impl<S: Scalar> HvpOperator<S> {
    pub fn new<F>(f: &F, params: &ParamVector<S>, batch: &[Example]) -> Result<Self, AutodiffError>
    where
        F: LossFn<Dual<S>> + ?Sized,
    {
        let lifted: Vec<Dual<S>> = params.values().iter().map(|&x| Dual::constant(x)).collect();
        let mut tape = Tape::new(lifted);
        let loss = batch_loss_node(f, &mut tape, batch)?;
        let dim = params.len();
        Ok(HvpOperator {
            tape,
            loss,
            arena: BackwardArena::new(),
            adjoint: vec![Dual::zero(); dim],
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `H(theta) v` for the recorded batch.
    pub fn apply(&mut self, v: &[S]) -> Result<Vec<S>, AutodiffError> {
        if v.len() != self.dim {
            return Err(AutodiffError::Argument("direction length mismatch".into()));
        }
        self.tape.set_param_tangents(v);
        self.tape.refresh_forward();
        for a in self.adjoint.iter_mut() {
            *a = Dual::zero();
        }
        self.tape.backward(self.loss, &mut self.adjoint, &mut self.arena);
        let mut out = Vec::with_capacity(self.dim);
        for a in &self.adjoint {
            if !a.is_finite() {
                return Err(AutodiffError::NonFiniteGradient);
            }
            out.push(a.tan);
        }
        Ok(out)
    }
}
