//! Built-in benchmark kernels: dense linear algebra, statistics, stencils
//! and two data-dependent loops.

use super::{DataArray, Direction, KernelSpec};

fn arr(name: &str, extent: &str, direction: Direction) -> DataArray {
    DataArray { name: name.into(), element_type: "double".into(), extent: extent.into(), direction }
}

fn spec(name: &str, depth: u32, collapsible: bool, arrays: Vec<DataArray>, source: &str) -> KernelSpec {
    KernelSpec {
        kernel_name: name.into(),
        source: source.into(),
        loop_nest_depth: depth,
        collapsible,
        size_params: vec!["n".into()],
        data_arrays: arrays,
    }
}

const MATMUL: &str = r#"void matmul(int n, double a[n*n], double b[n*n], double c[n*n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < n; j++) {
      double sum = 0.0;
      for (int k = 0; k < n; k++) {
        sum += a[i*n + k] * b[k*n + j];
      }
      c[i*n + j] = sum;
    }
  }
}
"#;

const MATVEC: &str = r#"void matvec(int n, double a[n*n], double x[n], double y[n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    double sum = 0.0;
    for (int j = 0; j < n; j++) {
      sum += a[i*n + j] * x[j];
    }
    y[i] = sum;
  }
}
"#;

const TRANSPOSE: &str = r#"void transpose(int n, double a[n*n], double b[n*n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < n; j++) {
      b[j*n + i] = a[i*n + j];
    }
  }
}
"#;

const VECADD: &str = r#"void vecadd(int n, double a[n], double b[n], double c[n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    c[i] = a[i] + b[i];
  }
}
"#;

const COVARIANCE: &str = r#"void covariance(int n, double data[n*n], double cov[n*n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < n; j++) {
      double s = 0.0;
      for (int k = 0; k < n; k++) {
        s += data[k*n + i] * data[k*n + j];
      }
      cov[i*n + j] = s / (n - 1);
    }
  }
}
"#;

const CORRELATION: &str = r#"void correlation(int n, double data[n*n], double stddev[n], double corr[n*n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < n; j++) {
      double s = 0.0;
      for (int k = 0; k < n; k++) {
        s += data[k*n + i] * data[k*n + j];
      }
      corr[i*n + j] = s / (n * stddev[i] * stddev[j]);
    }
  }
}
"#;

const JACOBI: &str = r#"void jacobi(int n, double a[n*n], double b[n*n]) {
  // @kernel
  for (int i = 1; i < n - 1; i++) {
    for (int j = 1; j < n - 1; j++) {
      b[i*n + j] = 0.2 * (a[i*n + j] + a[(i-1)*n + j] + a[(i+1)*n + j] + a[i*n + j - 1] + a[i*n + j + 1]);
    }
  }
}
"#;

const LAPLACE: &str = r#"void laplace(int n, double u[n*n], double v[n*n]) {
  // @kernel
  for (int i = 1; i < n - 1; i++) {
    for (int j = 1; j < n - 1; j++) {
      v[i*n + j] = u[(i-1)*n + j] + u[(i+1)*n + j] + u[i*n + j - 1] + u[i*n + j + 1] - 4.0 * u[i*n + j];
    }
  }
}
"#;

const LAPLACE3D: &str = r#"void laplace3d(int n, double u[n*n*n], double v[n*n*n]) {
  // @kernel
  for (int i = 1; i < n - 1; i++) {
    for (int j = 1; j < n - 1; j++) {
      for (int k = 1; k < n - 1; k++) {
        v[(i*n + j)*n + k] = u[((i-1)*n + j)*n + k] + u[((i+1)*n + j)*n + k] + u[(i*n + j - 1)*n + k] + u[(i*n + j + 1)*n + k] + u[(i*n + j)*n + k - 1] + u[(i*n + j)*n + k + 1] - 6.0 * u[(i*n + j)*n + k];
      }
    }
  }
}
"#;

const KNN: &str = r#"void knn(int n, double px[n], double py[n], double qx[n], double qy[n], double best[n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    double m = 1.0e30;
    for (int j = 0; j < n; j++) {
      double dx = px[j] - qx[i];
      double dy = py[j] - qy[i];
      double d = dx * dx + dy * dy;
      if (d < m) {
        m = d;
      }
    }
    best[i] = sqrt(m);
  }
}
"#;

const PARTICLE: &str = r#"void particle(int n, double x[n], double w[n], double obs[n]) {
  // @kernel
  for (int i = 0; i < n; i++) {
    double e = x[i] - obs[i];
    if (e > 0.0) {
      w[i] = w[i] * exp(-e * e);
    } else {
      w[i] = w[i] * exp(-0.5 * e * e);
    }
    for (int s = 0; s < 16; s++) {
      x[i] = x[i] + 0.01 * w[i];
    }
  }
}
"#;

/// The kernels used by the pipeline when no kernel list is given.
pub fn builtin_kernels() -> Vec<KernelSpec> {
    use Direction::*;
    vec![
        spec("matmul", 3, true, vec![arr("a", "n*n", To), arr("b", "n*n", To), arr("c", "n*n", From)], MATMUL),
        spec("matvec", 2, false, vec![arr("a", "n*n", To), arr("x", "n", To), arr("y", "n", From)], MATVEC),
        spec("transpose", 2, true, vec![arr("a", "n*n", To), arr("b", "n*n", From)], TRANSPOSE),
        spec("vecadd", 1, false, vec![arr("a", "n", To), arr("b", "n", To), arr("c", "n", From)], VECADD),
        spec("covariance", 3, true, vec![arr("data", "n*n", To), arr("cov", "n*n", From)], COVARIANCE),
        spec(
            "correlation",
            3,
            true,
            vec![arr("data", "n*n", To), arr("stddev", "n", To), arr("corr", "n*n", From)],
            CORRELATION,
        ),
        spec("jacobi", 2, true, vec![arr("a", "n*n", To), arr("b", "n*n", From)], JACOBI),
        spec("laplace", 2, true, vec![arr("u", "n*n", To), arr("v", "n*n", From)], LAPLACE),
        spec("laplace3d", 3, true, vec![arr("u", "n*n*n", To), arr("v", "n*n*n", From)], LAPLACE3D),
        spec(
            "knn",
            2,
            false,
            vec![arr("px", "n", To), arr("py", "n", To), arr("qx", "n", To), arr("qy", "n", To), arr("best", "n", From)],
            KNN,
        ),
        spec(
            "particle",
            2,
            false,
            vec![arr("x", "n", ToFrom), arr("w", "n", ToFrom), arr("obs", "n", To)],
            PARTICLE,
        ),
    ]
}
