/* MRI-Q style accumulation over k-space samples with sin/cos. */
void computeQ(int numX, int numK, double kx[16], double ky[16], double kz[16], double phiMag[16],
              double x[16], double y[16], double z[16], double Qr[16], double Qi[16])
{
#pragma acc parallel loop gang vector
    for (int i = 0; i < numX; i++) {
        double qr = 0.0;
        double qi = 0.0;
        for (int k = 0; k < numK; k++) {
            double expArg = 6.2831853071795864769 * (kx[k] * x[i] + ky[k] * y[i] + kz[k] * z[i]);
            qr += phiMag[k] * cos(expArg);
            qi += phiMag[k] * sin(expArg);
        }
        Qr[i] = qr;
        Qi[i] = qi;
    }
}
