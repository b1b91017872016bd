use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape mismatch in {op}: expected {expected:?}, got {got:?}")]
pub struct ShapeError {
    pub op: &'static str,
    pub expected: Vec<usize>,
    pub got: Vec<usize>,
}

/// Dense row-major `f64` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Tensor, ShapeError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(ShapeError { op: "Tensor::new", expected: vec![n], got: vec![data.len()] });
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.shape)
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Extent of the last axis.
    pub fn cols(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    /// Slab `i` of the first axis.
    pub fn slab(&self, i: usize) -> &[f64] {
        let s = self.data.len() / self.shape[0];
        &self.data[i * s..(i + 1) * s]
    }

    pub fn slab_mut(&mut self, i: usize) -> &mut [f64] {
        let s = self.data.len() / self.shape[0];
        &mut self.data[i * s..(i + 1) * s]
    }

    pub fn expect_shape(&self, op: &'static str, expected: &[usize]) -> Result<(), ShapeError> {
        if self.shape != expected {
            return Err(ShapeError { op, expected: expected.to_vec(), got: self.shape.clone() });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `out += x · W` for `W` of shape (x.len(), out.len()).
#[inline]
pub fn vec_mat(x: &[f64], w: &[f64], out: &mut [f64]) {
    let dout = out.len();
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            axpy(xk, &w[k * dout..(k + 1) * dout], out);
        }
    }
}

/// `out += W · g` for `W` of shape (out.len(), g.len()).
#[inline]
pub fn mat_vec(w: &[f64], g: &[f64], out: &mut [f64]) {
    let dout = g.len();
    for (k, o) in out.iter_mut().enumerate() {
        *o += dot(&w[k * dout..(k + 1) * dout], g);
    }
}

/// `dw += xᵀ g`.
#[inline]
pub fn outer_acc(x: &[f64], g: &[f64], dw: &mut [f64]) {
    let dout = g.len();
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            axpy(xk, g, &mut dw[k * dout..(k + 1) * dout]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_kernels() {
        assert!(Tensor::new(&[2, 3], vec![0.0; 5]).is_err());
        let w = Tensor::new(&[2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let mut out = vec![0.0; 3];
        vec_mat(&[1.0, 2.0], w.data(), &mut out);
        assert_eq!(out, [9.0, 12.0, 15.0]);
        let mut back = vec![0.0; 2];
        mat_vec(w.data(), &[1.0, 0.0, 1.0], &mut back);
        assert_eq!(back, [4.0, 10.0]);
        let mut dw = vec![0.0; 6];
        outer_acc(&[1.0, 2.0], &[1.0, 0.0, -1.0], &mut dw);
        assert_eq!(dw, [1.0, 0.0, -1.0, 2.0, 0.0, -2.0]);
        assert_eq!(w.row(1), &[4., 5., 6.]);
        assert!(w.expect_shape("t", &[3, 2]).is_err());
    }
}
