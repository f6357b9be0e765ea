/* Polynomial evaluation and an axpy update: multiply-add chains. */
void horner(int n, double a, double c0, double c1, double c2, double c3,
            double x[16], double y[16], double z[16])
{
#pragma acc parallel loop gang vector
    for (int i = 0; i < n; i++) {
        double t = x[i];
        double p = ((c3 * t + c2) * t + c1) * t + c0;
        y[i] = a * p + y[i];
        z[i] = z[i] - a * t * t;
    }
}
