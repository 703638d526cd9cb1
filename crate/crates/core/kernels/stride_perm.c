// Even-indexed entries to the front half, odd-indexed to the back half.
void stride_perm(double* y, double* x, int n) {
    for (int i = 0; i < n / 2; ++i) {
        y[i] = x[2 * i];
        y[i + n / 2] = x[2 * i + 1];
    }
}
