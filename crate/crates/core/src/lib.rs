pub fn probe() -> f64 {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    let i = Complex64::new(0.0, 1.0);
    let m = DMatrix::from_row_slice(2, 2, &[
        Complex64::new(0.3, 0.0), Complex64::new(0.1, 0.0) - 2.0 * i,
        Complex64::new(0.1, 0.0) + 2.0 * i, Complex64::new(-0.3, 0.0),
    ]);
    let e = (m.clone() * Complex64::new(0.0, -1.0)).exp();
    let se = m.clone().symmetric_eigen();
    let rec = &se.eigenvectors
        * DMatrix::from_diagonal(&se.eigenvalues.map(|x| Complex64::new(x, 0.0)))
        * se.eigenvectors.adjoint();
    e[(0, 0)].re + (rec - &m).norm()
}
