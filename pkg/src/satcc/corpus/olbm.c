/* Lattice-Boltzmann collision step (D2Q9) with heavily duplicated loads. */
void collide(int n, double omega, double src[16][9], double dst[16][9])
{
#pragma acc parallel loop gang vector
    for (int c = 0; c < n; c++) {
        double rho = src[c][0] + src[c][1] + src[c][2] + src[c][3] + src[c][4]
                   + src[c][5] + src[c][6] + src[c][7] + src[c][8];
        double ux = src[c][1] - src[c][3] + src[c][5] - src[c][6] - src[c][7] + src[c][8];
        double uy = src[c][2] - src[c][4] + src[c][5] + src[c][6] - src[c][7] - src[c][8];
        double u2 = 1.5 * (ux * ux + uy * uy);
        dst[c][0] = (1.0 - omega) * src[c][0] + omega * (4.0 / 9.0) * (rho - u2);
        dst[c][1] = (1.0 - omega) * src[c][1] + omega * (1.0 / 9.0) * (rho + 3.0 * ux + 4.5 * ux * ux - u2);
        dst[c][2] = (1.0 - omega) * src[c][2] + omega * (1.0 / 9.0) * (rho + 3.0 * uy + 4.5 * uy * uy - u2);
        dst[c][3] = (1.0 - omega) * src[c][3] + omega * (1.0 / 9.0) * (rho - 3.0 * ux + 4.5 * ux * ux - u2);
        dst[c][4] = (1.0 - omega) * src[c][4] + omega * (1.0 / 9.0) * (rho - 3.0 * uy + 4.5 * uy * uy - u2);
        dst[c][5] = (1.0 - omega) * src[c][5] + omega * (1.0 / 36.0) * (rho + 3.0 * (ux + uy) - u2);
        dst[c][6] = (1.0 - omega) * src[c][6] + omega * (1.0 / 36.0) * (rho + 3.0 * (uy - ux) - u2);
        dst[c][7] = (1.0 - omega) * src[c][7] + omega * (1.0 / 36.0) * (rho - 3.0 * (ux + uy) - u2);
        dst[c][8] = (1.0 - omega) * src[c][8] + omega * (1.0 / 36.0) * (rho + 3.0 * (ux - uy) - u2);
    }
}
