//! Reverse-mode differentiation core.
//!
//! A [`Tape`] records vector-valued operations during loss construction and
//! replays them backwards for gradients. Running the same generic code with
//! [`Dual`](crate::scalar::Dual) parameters gives exact Hessian-vector
//! products, and conjugate gradient on top of those gives the inverse-HVP
//! solves the influence computations need.

mod cg;
mod diff;
mod tape;
pub(crate) mod vecmath;

pub use cg::{inverse_hvp, inverse_hvp_with, SolveDiagnostics, SolverOptions};
pub use diff::{grad, grad_with_loss, hvp_exact, hvp_fd, HvpOperator};
pub use tape::{BackwardArena, NodeId, Tape};

use num_traits::{One, Zero};

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Example;
use crate::scalar::Scalar;

/// Errors from gradient and Hessian-vector evaluations.
#[derive(Debug, thiserror::Error)]
pub enum AutodiffError {
    #[error("non-finite loss while evaluating example `{example_id}`")]
    NumericOverflow { example_id: String },
    #[error("non-finite entries in computed gradient")]
    NonFiniteGradient,
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// One named weight block inside the flat parameter vector.
///
/// Vectors are stored as `rows x 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ordered segment table mapping block names to disjoint slices covering
/// `[0, total_len)`.
#[derive(Debug, Clone)]
pub struct Layout {
    segments: Vec<Segment>,
    index: HashMap<String, usize>,
    total: usize,
}

impl Layout {
    pub fn builder() -> LayoutBuilder {
        LayoutBuilder { segments: Vec::new(), offset: 0 }
    }

    /// Single anonymous block, handy for plain test functions.
    pub fn flat(len: usize) -> Arc<Layout> {
        let mut b = Layout::builder();
        b.push("theta", len, 1);
        b.build()
    }

    pub fn from_segments(segments: Vec<Segment>) -> Result<Arc<Layout>, AutodiffError> {
        let mut index = HashMap::new();
        let mut offset = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.offset != offset {
                return Err(AutodiffError::Argument(format!(
                    "segment `{}` at offset {} leaves a gap (expected {})",
                    seg.name, seg.offset, offset
                )));
            }
            if index.insert(seg.name.clone(), i).is_some() {
                return Err(AutodiffError::Argument(format!(
                    "duplicate segment name `{}`",
                    seg.name
                )));
            }
            offset += seg.len();
        }
        Ok(Arc::new(Layout { segments, index, total: offset }))
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.index.get(name).map(|&i| &self.segments[i])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_len(&self) -> usize {
        self.total
    }
}

pub struct LayoutBuilder {
    segments: Vec<Segment>,
    offset: usize,
}

impl LayoutBuilder {
    pub fn push(&mut self, name: &str, rows: usize, cols: usize) -> &mut Self {
        self.segments.push(Segment {
            name: name.to_string(),
            offset: self.offset,
            rows,
            cols,
        });
        self.offset += rows * cols;
        self
    }

    pub fn build(self) -> Arc<Layout> {
        Layout::from_segments(self.segments).expect("builder produces contiguous unique segments")
    }
}

/// Flat view of all trainable parameters plus the segment table describing it.
#[derive(Debug, Clone)]
pub struct ParamVector<S> {
    values: Vec<S>,
    layout: Arc<Layout>,
}

impl<S: Scalar> ParamVector<S> {
    pub fn new(layout: Arc<Layout>, values: Vec<S>) -> Result<Self, AutodiffError> {
        if values.len() != layout.total_len() {
            return Err(AutodiffError::Argument(format!(
                "parameter vector length {} does not match layout length {}",
                values.len(),
                layout.total_len()
            )));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![S::zero(); layout.total_len()];
        ParamVector { values, layout }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn segment_slice(&self, name: &str) -> Option<&[S]> {
        let seg = self.layout.segment(name)?;
        Some(&self.values[seg.offset..seg.offset + seg.len()])
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Same layout, mapped values.
    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> ParamVector<T> {
        ParamVector {
            values: self.values.iter().map(|&x| f(x)).collect(),
            layout: Arc::clone(&self.layout),
        }
    }
}

/// Gradient with the same length and layout as the parameters it was taken
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct GradVector<S> {
    values: Vec<S>,
}

impl<S: Scalar> GradVector<S> {
    pub fn from_values(values: Vec<S>) -> Self {
        GradVector { values }
    }

    pub fn zeros(len: usize) -> Self {
        GradVector { values: vec![S::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn dot(&self, other: &GradVector<S>) -> S {
        vecmath::dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        vecmath::norm(&self.values)
    }
}

/// Differentiable per-example loss.
///
/// Implementations append the scalar loss node for one example to the tape;
/// the driver functions average over a batch. Losses are pure functions of
/// the tape parameters and the example, so the same recording is valid for
/// every scalar type.
pub trait LossFn<S: Scalar> {
    fn example_loss(&self, tape: &mut Tape<S>, example: &Example) -> Result<NodeId, AutodiffError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_covers_range_and_rejects_duplicates() {
        let mut b = Layout::builder();
        b.push("a", 2, 3).push("b", 4, 1);
        let layout = b.build();
        assert_eq!(layout.total_len(), 10);
        assert_eq!(layout.segment("b").unwrap().offset, 6);
        assert!(layout.segment("c").is_none());

        let dup = Layout::from_segments(vec![
            Segment { name: "x".into(), offset: 0, rows: 1, cols: 1 },
            Segment { name: "x".into(), offset: 1, rows: 1, cols: 1 },
        ]);
        assert!(dup.is_err());

        let gap = Layout::from_segments(vec![
            Segment { name: "x".into(), offset: 0, rows: 1, cols: 1 },
            Segment { name: "y".into(), offset: 2, rows: 1, cols: 1 },
        ]);
        assert!(gap.is_err());
    }

    #[test]
    fn param_vector_checks_length() {
        let layout = Layout::flat(3);
        assert!(ParamVector::new(Arc::clone(&layout), vec![1.0, 2.0]).is_err());
        let p = ParamVector::new(layout, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.segment_slice("theta").unwrap(), &[1.0, 2.0, 3.0]);
    }
}
