void axpy(double* y, double* x, int n) {
    for (int i = 0; i < n; ++i) {
        y[i] = y[i] + 2.5 * x[i];
    }
}
