//! Dense float64 arrays and a reverse-mode tape over them.
//!
//! Complex quantities travel through the tape as real arrays whose last axis
//! has length 2 (re, im). All differentiation is real-valued: the gradient of
//! a complex node is `∂L/∂re + i ∂L/∂im`.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{grad_check, grad_check_graph, GradCheck, GradCheckReport};
pub use params::{ParamId, ParamSlot, ParamStore};
pub use tape::{backprop, CustomOp, Elementwise, Gradients, NodeId, Tape};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major float64 array. A scalar has an empty shape.
#[derive(Clone, Debug, PartialEq)]
pub struct RealArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl RealArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::BadLength {
                shape,
                expected,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("array of shape {shape:?}")));
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: self.shape,
                right: shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Complex array with a logical `shape`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexArray {
    shape: Vec<usize>,
    values: Vec<Complex64>,
}

impl ComplexArray {
    pub fn new(shape: Vec<usize>, values: Vec<Complex64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::BadLength {
                shape,
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn re(&self) -> RealArray {
        RealArray::from_parts(self.shape.clone(), self.values.iter().map(|v| v.re).collect())
    }

    pub fn im(&self) -> RealArray {
        RealArray::from_parts(self.shape.clone(), self.values.iter().map(|v| v.im).collect())
    }

    /// Real-pair layout: shape gains a trailing axis of length 2.
    pub fn to_pairs(&self) -> RealArray {
        let mut shape = self.shape.clone();
        shape.push(2);
        RealArray::from_parts(shape, pairs_from_complex(&self.values))
    }

    pub fn from_pairs(a: &RealArray) -> Result<Self> {
        match a.shape().split_last() {
            Some((2, lead)) => Ok(Self {
                shape: lead.to_vec(),
                values: complex_from_pairs(a.data()),
            }),
            _ => Err(Error::ShapeMismatch {
                op: "from_pairs",
                left: a.shape().to_vec(),
                right: vec![2],
            }),
        }
    }
}

pub(crate) fn complex_from_pairs(data: &[f64]) -> Vec<Complex64> {
    data.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

pub(crate) fn pairs_from_complex(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() * 2);
    for v in values {
        out.push(v.re);
        out.push(v.im);
    }
    out
}
