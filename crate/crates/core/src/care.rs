//! Generic dense solvers for continuous Lyapunov and algebraic Riccati
//! equations. They make no use of the channel structure and serve as a
//! cross-check for the closed forms.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solves `A X + X A^T + Q = 0` through the Kronecker form.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let x = k
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Lyapunov operator"))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Stabilizing solution of `A^T P + P A - P B R^-1 B^T P + Q = 0` by the
/// matrix sign function of the Hamiltonian, polished with Newton-Kleinman.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("input weight"))?;
    let g = b * &r_inv * b.transpose();

    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut z = h;
    let mut converged = false;
    for _ in 0..200 {
        let zi = z
            .clone()
            .try_inverse()
            .ok_or(Error::Singular("Hamiltonian has imaginary-axis eigenvalues"))?;
        let det = z.determinant().abs();
        let c = if det.is_finite() && det > 0.0 {
            det.powf(-1.0 / (2 * n) as f64)
        } else {
            1.0
        };
        let next = (&z * c + zi / c) * 0.5;
        let delta = (&next - &z).norm() / next.norm();
        z = next;
        if delta < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("matrix sign iteration"));
    }

    // [W12; W22 + I] P = -[W11 + I; W21]
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(z.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(z.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-300)
        .map_err(|_| Error::Singular("sign-function subspace"))?;
    let mut p = (&p + p.transpose()) * 0.5;

    // Newton-Kleinman refinement
    for _ in 0..8 {
        let k = &r_inv * b.transpose() * &p;
        let acl = a - b * &k;
        let rhs = q + k.transpose() * r * &k;
        let next = lyapunov(&acl.transpose(), &rhs)?;
        let delta = (&next - &p).norm() / next.norm();
        p = next;
        if delta < 1e-15 {
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Riccati solution"));
    }
    Ok(p)
}
