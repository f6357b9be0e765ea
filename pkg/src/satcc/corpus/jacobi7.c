/* 7-point Jacobi stencil; neighbouring loads overlap between points. */
void jacobi(int nx, int ny, int nz, double c0, double c1, double a[10][10][10], double b[10][10][10])
{
#pragma acc parallel loop gang
    for (int k = 1; k <= nz; k++) {
#pragma acc loop worker
        for (int j = 1; j <= ny; j++) {
#pragma acc loop vector
            for (int i = 1; i <= nx; i++) {
                b[k][j][i] = c0 * a[k][j][i]
                    + c1 * (a[k][j][i-1] + a[k][j][i+1] + a[k][j-1][i]
                            + a[k][j+1][i] + a[k-1][j][i] + a[k+1][j][i]);
            }
        }
    }
}
