/* A store followed by loads that may alias it: the neighbouring load must stay
   behind the store. */
void shift(int n, double s, double t, double a[16][16], double b[16][16], double c[16][16])
{
#pragma acc parallel loop gang
    for (int i = 0; i < n; i++) {
#pragma acc loop vector
        for (int j = 0; j < n; j++) {
            a[i][j] = b[i][j] * s;
            c[i][j] = a[i][j+1] * t + a[i][j] * t + b[i][j];
            a[i][j+1] = c[i][j] - a[i][j+1];
        }
    }
}
