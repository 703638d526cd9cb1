void copy(double* y, double* x, int n) {
    for (int i = 0; i < n; ++i) {
        y[i] = x[i];
    }
}
