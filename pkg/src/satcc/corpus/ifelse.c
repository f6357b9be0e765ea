/* Branching body: the merged scalar feeds a shared product. */
void clip(int n, double lo, double hi, double x[16], double y[16], double w[16])
{
#pragma acc parallel loop vector
    for (int i = 0; i < n; i++) {
        double v = x[i] * w[i];
        double s;
        if (v > hi) {
            s = hi - v * 0.5;
        } else if (v < lo) {
            s = lo + v * 0.5;
        } else {
            s = v;
        }
        y[i] = s * w[i] + x[i] * w[i];
    }
}
