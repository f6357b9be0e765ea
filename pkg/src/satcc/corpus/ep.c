/* Gaussian-pair transform with opaque math calls. */
void gauss(int n, double scale, double xs[16], double ys[16], double qx[16], double qy[16])
{
#pragma acc parallel loop gang vector
    for (int i = 0; i < n; i++) {
        double x1 = 2.0 * xs[i] - 1.0;
        double x2 = 2.0 * ys[i] - 1.0;
        double t1 = x1 * x1 + x2 * x2;
        double t2 = sqrt(fabs(log(t1 + 1.0)) / (t1 + 1.0));
        qx[i] = x1 * t2 * scale;
        qy[i] = x2 * t2 * scale + qx[i] * 0.5;
    }
}
