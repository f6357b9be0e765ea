/* The same array element read several times in one statement and across statements. */
void dup(int n, double a[16][16], double x[16], double y[16])
{
#pragma acc parallel loop gang
    for (int i = 0; i < n; i++) {
#pragma acc loop vector
        for (int j = 0; j < n; j++) {
            x[j] = a[i][j] * 2.0 + a[i][j] * 3.0 + a[i][j];
            y[j] = a[i][j] * a[i][j] - x[j];
        }
    }
}
