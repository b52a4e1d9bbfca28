use std::collections::HashMap;

use serde_json::{json, Value};

use super::{Kind, QalgError};
use crate::linalg::Matrix;
use crate::scalar::{rational_from_json, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub kind: Kind,
    pub extent: usize,
}

impl Axis {
    pub fn h(extent: usize) -> Self {
        Axis { kind: Kind::H, extent }
    }
    pub fn v() -> Self {
        Axis { kind: Kind::V, extent: 3 }
    }
}

/// Dense row-major multi-index array with kind-tagged axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    pub axes: Vec<Axis>,
    pub data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(axes: Vec<Axis>) -> Self {
        let len = axes.iter().map(|a| a.extent).product();
        Tensor { axes, data: vec![S::zero(); len] }
    }

    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut t = Self::zeros(axes);
        let mut idx = vec![0; t.rank()];
        for k in 0..t.data.len() {
            t.unravel(k, &mut idx);
            t.data[k] = f(&idx);
        }
        t
    }

    pub fn from_matrix(m: &Matrix<S>, kinds: (Kind, Kind)) -> Self {
        Tensor {
            axes: vec![Axis { kind: kinds.0, extent: m.rows }, Axis { kind: kinds.1, extent: m.cols }],
            data: m.data.clone(),
        }
    }

    pub fn to_matrix(&self) -> Matrix<S> {
        assert_eq!(self.rank(), 2, "to_matrix needs a rank-2 tensor");
        Matrix { rows: self.axes[0].extent, cols: self.axes[1].extent, data: self.data.clone() }
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.extent).collect()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let mut off = 0;
        for (a, &i) in self.axes.iter().zip(idx) {
            debug_assert!(i < a.extent);
            off = off * a.extent + i;
        }
        off
    }

    fn unravel(&self, mut k: usize, idx: &mut [usize]) {
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = k % a.extent;
            k /= a.extent;
        }
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn add_at(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = self.data[o].clone() + v;
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Tensor { axes: self.axes.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.axes, other.axes, "axis mismatch in add");
        Tensor {
            axes: self.axes.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&S::from_i64(-1)))
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    pub fn close(&self, other: &Self, tol: f64) -> bool {
        self.axes == other.axes && self.data.iter().zip(&other.data).all(|(a, b)| a.close(b, tol))
    }

    /// Reorders axes: output axis `k` is input axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let axes = perm.iter().map(|&p| self.axes[p]).collect();
        let mut src = vec![0; self.rank()];
        Tensor::from_fn(axes, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src).clone()
        })
    }

    /// Sum of squares of all entries.
    pub fn norm_sq(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "axes": self.axes.iter().map(|a| json!({"kind": a.kind.tag(), "extent": a.extent})).collect::<Vec<_>>(),
            "scalar": S::NAME,
            "data": self.data.iter().map(|x| x.to_json()).collect::<Vec<_>>(),
        })
    }
}

impl Tensor<Rational> {
    pub fn from_json(v: &Value) -> Result<Self, QalgError> {
        let bad = |m: &str| QalgError::Json(m.to_string());
        let axes = v["axes"]
            .as_array()
            .ok_or_else(|| bad("missing axes"))?
            .iter()
            .map(|a| {
                let kind = match a["kind"].as_str() {
                    Some("H") => Kind::H,
                    Some("V") => Kind::V,
                    _ => return Err(bad("axis kind must be H or V")),
                };
                let extent = a["extent"].as_u64().ok_or_else(|| bad("axis extent"))? as usize;
                Ok(Axis { kind, extent })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let data = v["data"]
            .as_array()
            .ok_or_else(|| bad("missing data"))?
            .iter()
            .map(|x| match x {
                Value::Number(n) if !n.is_i64() => Err(bad("float entry in rational tensor")),
                _ => rational_from_json(x).map_err(|e| bad(&e.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let len: usize = axes.iter().map(|a| a.extent).product();
        if data.len() != len {
            return Err(bad("data length does not match axes"));
        }
        Ok(Tensor { axes, data })
    }
}

/// Einstein contraction of `a` and `b` over the listed axis pairs.
///
/// Result axes are the free axes of `a` followed by the free axes of `b`.
pub fn contract<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, pairs: &[(usize, usize)]) -> Result<Tensor<S>, QalgError> {
    for &(i, j) in pairs {
        let (x, y) = (a.axes.get(i), b.axes.get(j));
        let (Some(x), Some(y)) = (x, y) else {
            return Err(QalgError::AxisOutOfRange);
        };
        if x.kind != y.kind {
            return Err(QalgError::KindMismatch { left: x.kind, right: y.kind });
        }
        if x.extent != y.extent {
            return Err(QalgError::ExtentMismatch { left: x.extent, right: y.extent });
        }
    }
    let a_free: Vec<usize> = (0..a.rank()).filter(|k| !pairs.iter().any(|p| p.0 == *k)).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|k| !pairs.iter().any(|p| p.1 == *k)).collect();
    let axes: Vec<Axis> = a_free.iter().map(|&k| a.axes[k]).chain(b_free.iter().map(|&k| b.axes[k])).collect();
    let mut out: Tensor<S> = Tensor::zeros(axes);

    // Index b's nonzero entries by the values of its paired axes.
    let mut by_key: HashMap<Vec<usize>, Vec<(usize, S)>> = HashMap::new();
    let mut idx = vec![0; b.rank()];
    let b_free_len: usize = b_free.iter().map(|&k| b.axes[k].extent).product();
    for (k, v) in b.data.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        b.unravel(k, &mut idx);
        let key: Vec<usize> = pairs.iter().map(|p| idx[p.1]).collect();
        let mut off = 0;
        for &f in &b_free {
            off = off * b.axes[f].extent + idx[f];
        }
        by_key.entry(key).or_default().push((off, v.clone()));
    }
    let mut idx = vec![0; a.rank()];
    for (k, v) in a.data.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        a.unravel(k, &mut idx);
        let key: Vec<usize> = pairs.iter().map(|p| idx[p.0]).collect();
        let Some(entries) = by_key.get(&key) else { continue };
        let mut a_off = 0;
        for &f in &a_free {
            a_off = a_off * a.axes[f].extent + idx[f];
        }
        for (b_off, w) in entries {
            let o = a_off * b_free_len + b_off;
            out.data[o] = out.data[o].clone() + v.clone() * w.clone();
        }
    }
    Ok(out)
}

/// Contraction of two axes of a single tensor.
pub fn trace<S: Scalar>(t: &Tensor<S>, i: usize, j: usize) -> Result<Tensor<S>, QalgError> {
    let (x, y) = (t.axes[i], t.axes[j]);
    if x.kind != y.kind {
        return Err(QalgError::KindMismatch { left: x.kind, right: y.kind });
    }
    if x.extent != y.extent {
        return Err(QalgError::ExtentMismatch { left: x.extent, right: y.extent });
    }
    let free: Vec<usize> = (0..t.rank()).filter(|&k| k != i && k != j).collect();
    let axes = free.iter().map(|&k| t.axes[k]).collect();
    let mut src = vec![0; t.rank()];
    Ok(Tensor::from_fn(axes, |idx| {
        for (k, &f) in free.iter().enumerate() {
            src[f] = idx[k];
        }
        let mut acc = S::zero();
        for d in 0..x.extent {
            src[i] = d;
            src[j] = d;
            acc = acc + t.get(&src).clone();
        }
        acc
    }))
}
