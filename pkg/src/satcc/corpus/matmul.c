void mm(int cx, int cy, int ax, double alpha, double beta,
        double a[16][16], double b[16][16], double c[16][16], double r[16][16])
{
#pragma acc kernels loop independent
//#pragma omp target teams distribute
for (int i = 0; i < cy; i++) {
#pragma acc loop independent gang(16) vector(256)
//#pragma omp parallel for simd
  for (int j = 0; j < cx; j++) {
    double tmp = 0.f;
    for (int l = 0; l < ax; l++)
      tmp += a[i][l] * b[l][j];
    r[i][j] = alpha * tmp + beta * c[i][j];
}}
}
