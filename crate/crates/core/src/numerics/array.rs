use crate::error::{Error, Result};
use crate::numerics::Real;

/// Dense row-major array with an explicit shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Array<T> {
    data: Vec<T>,
    shape: Vec<usize>,
}

impl<T: Real> Array<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.iter().all(|&d| d > 0), "array dims must be positive: {shape:?}");
        let n = shape.iter().product();
        Self { data: vec![T::zero(); n], shape: shape.to_vec() }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("Array::from_vec", format!("zero dim in {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "Array::from_vec",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Self { data, shape: shape.to_vec() })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Rows of a 2-D array.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Columns of a 2-D array (product of trailing dims).
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn convert<U: Real>(&self) -> Array<U> {
        Array {
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
            shape: self.shape.clone(),
        }
    }
}
