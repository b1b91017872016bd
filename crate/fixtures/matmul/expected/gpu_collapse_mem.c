void matmul(int n, double a[n*n], double b[n*n], double c[n*n]) {
  #pragma omp target teams distribute parallel for collapse(2) num_teams(4) num_threads(64) map(to: a[0:n*n]) map(to: b[0:n*n]) map(from: c[0:n*n])
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
