/* Heat update with a boundary test and an integer index computation. */
int stride;
void heat(int n, int m, double k0, double t[16][16], double tn[16][16], int flag[16])
{
#pragma acc parallel loop gang vector
    for (int i = 1; i < n; i++) {
        int im = i - 1;
        int ip = i + 1;
        double lap = t[im][m] + t[ip][m] - 2.0 * t[i][m];
        if (flag[i] > 3) {
            tn[i][m] = t[i][m] + k0 * lap;
        } else {
            tn[i][m] = t[i][m];
        }
        tn[i][0] = tn[i][m] * 0.5 + lap * k0;
    }
}
