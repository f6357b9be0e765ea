/* Sparse matrix-vector product with an indirect index and a sequential inner loop. */
void spmv(int nrows, int rowstr[17], int colidx[16], double a[16], double p[16], double q[16])
{
#pragma acc parallel loop gang vector
    for (int j = 0; j < nrows; j++) {
        double sum = 0.0;
        for (int k = rowstr[j]; k < rowstr[j+1]; k++) {
            sum = sum + a[k] * p[colidx[k]];
        }
        q[j] = sum + p[j] * a[j];
    }
}
