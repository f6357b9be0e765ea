/* Reduced block-tridiagonal setup in the style of NPB-BT z_solve:
   10 stores into lhsZ, 20 loads from fjacZ/njacZ. */
void z_solve_kernel(int ksize, int gp02, int gp12, double dt, double tz1, double tz2,
                    double dz1, double dz5, double lhsZ[3][3][3][9][9][9],
                    double fjacZ[3][3][9][9][9], double njacZ[3][3][9][9][9])
{
    int i, j, k;
    double temp1, temp2;
#pragma acc parallel loop gang num_gangs(ksize-1)\
                  num_workers(4) vector_length(32)
    for (k = 1; k <= ksize-1; k++) {
#pragma acc loop worker
        for (i = 1; i <= gp02; i++) {
#pragma acc loop vector
            for (j = 1; j <= gp12; j++) {
                temp1 = dt * tz1; temp2 = dt * tz2;
                lhsZ[0][0][0][k][i][j] = - temp2 * fjacZ[0][0][k-1][i][j]
                    - temp1 * njacZ[0][0][k-1][i][j] - temp1 * dz1;
                lhsZ[0][1][0][k][i][j] = - temp2 * fjacZ[0][1][k-1][i][j]
                    - temp1 * njacZ[0][1][k-1][i][j];
                lhsZ[1][0][0][k][i][j] = - temp2 * fjacZ[1][0][k-1][i][j]
                    - temp1 * njacZ[1][0][k-1][i][j];
                lhsZ[1][1][0][k][i][j] = - temp2 * fjacZ[1][1][k-1][i][j]
                    - temp1 * njacZ[1][1][k-1][i][j] - temp1 * dz5;
                lhsZ[0][0][1][k][i][j] = 1.0 + temp1 * 2.0 * njacZ[0][0][k][i][j]
                    + temp1 * 2.0 * dz1 - temp2 * fjacZ[0][0][k][i][j];
                lhsZ[0][1][1][k][i][j] = temp1 * 2.0 * njacZ[0][1][k][i][j]
                    - temp2 * fjacZ[0][1][k][i][j];
                lhsZ[1][0][1][k][i][j] = temp1 * 2.0 * njacZ[1][0][k][i][j]
                    - temp2 * fjacZ[1][0][k][i][j];
                lhsZ[1][1][1][k][i][j] = 1.0 + temp1 * 2.0 * njacZ[1][1][k][i][j]
                    + temp1 * 2.0 * dz5 - temp2 * fjacZ[1][1][k][i][j];
                lhsZ[0][0][2][k][i][j] = temp2 * fjacZ[0][0][k+1][i][j]
                    - temp1 * njacZ[0][0][k+1][i][j] - temp1 * dz1;
                lhsZ[1][1][2][k][i][j] = temp2 * fjacZ[1][1][k+1][i][j]
                    - temp1 * njacZ[1][1][k+1][i][j] - temp1 * dz5;
            }
        }
    }
}
