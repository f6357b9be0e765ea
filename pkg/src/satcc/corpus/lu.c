/* Scaling and elimination step with divisions by a shared pivot. */
void eliminate(int n, double eps, double piv[16], double u[16][16], double r[16][16])
{
#pragma acc parallel loop gang
    for (int i = 1; i < n; i++) {
#pragma acc loop vector
        for (int j = 1; j < n; j++) {
            double d = piv[i] * piv[i] + eps * eps + 1.0;
            double f = u[i][j] / d;
            r[i][j] = u[i][j] - f * u[i-1][j] / d;
            u[i][j] = r[i][j] * (u[i][j] / d) + u[i][j-1] % 1.5;
        }
    }
}
