use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::{Array, Real};

/// Handle to one parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named, shaped parameter arrays in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    arrays: Vec<Array<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), arrays: Vec::new(), index: HashMap::new() }
    }

    /// Registers a parameter. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, array: Array<T>) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        let id = self.arrays.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.arrays.push(array);
        ParamId(id)
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    pub fn num_elements(&self) -> usize {
        self.arrays.iter().map(|a| a.len()).sum()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Array<T> {
        &self.arrays[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array<T> {
        &mut self.arrays[id.0]
    }

    #[inline]
    pub fn data(&self, id: ParamId) -> &[T] {
        self.arrays[id.0].data()
    }

    #[inline]
    pub fn data_mut(&mut self, id: ParamId) -> &mut [T] {
        self.arrays[id.0].data_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.arrays.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array<T>)> {
        self.names.iter().map(String::as_str).zip(&self.arrays)
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut out = Self::new();
        for (name, a) in self.iter() {
            out.add(name, Array::zeros(a.shape()));
        }
        out
    }

    pub fn fill(&mut self, v: T) {
        self.arrays.iter_mut().for_each(|a| a.fill(v));
    }

    pub fn convert<U: Real>(&self) -> ParamStore<U> {
        let mut out = ParamStore::new();
        for (name, a) in self.iter() {
            out.add(name, a.convert());
        }
        out
    }

    /// Fails unless `other` has identical names and shapes in the same order.
    pub fn check_layout<U: Real>(&self, other: &ParamStore<U>) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(
                "ParamStore",
                format!("{} parameters vs {}", self.len(), other.len()),
            ));
        }
        for ((n1, a1), (n2, a2)) in self.iter().zip(other.iter()) {
            if n1 != n2 || a1.shape() != a2.shape() {
                return Err(Error::shape(
                    "ParamStore",
                    format!("{n1}{:?} vs {n2}{:?}", a1.shape(), a2.shape()),
                ));
            }
        }
        Ok(())
    }

    /// Flat `(param, element)` address of the `i`-th scalar.
    pub fn locate(&self, mut i: usize) -> Option<(ParamId, usize)> {
        for (p, a) in self.arrays.iter().enumerate() {
            if i < a.len() {
                return Some((ParamId(p), i));
            }
            i -= a.len();
        }
        None
    }

    pub fn all_finite(&self) -> bool {
        self.arrays.iter().all(|a| a.data().iter().all(|v| v.is_finite()))
    }
}
