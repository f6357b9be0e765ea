/* OpenMP offload matrix multiply with an accumulation loop. */
void gemm(int n, int m, int p, double alpha, double beta,
          double A[16][16], double B[16][16], double C[16][16])
{
#pragma omp target teams distribute parallel for collapse(2)
    for (int i = 0; i < n; i++)
        for (int j = 0; j < m; j++) {
            double acc = 0.0;
            for (int l = 0; l < p; l++) {
                acc = acc + A[i][l] * B[l][j];
            }
            C[i][j] = beta * C[i][j] + alpha * acc;
        }
}
