//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the model code except to read plain parameter fields.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use uavpl_core::VehicleParams;

pub type V3 = Vector3<f64>;
pub type M3 = Matrix3<f64>;

pub fn cross_matrix(a: &V3) -> M3 {
    M3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// `Rz(psi) Ry(theta) Rx(phi)` built from elementary rotations.
pub fn rot(eta: &V3) -> M3 {
    let (sf, cf) = eta.x.sin_cos();
    let (st, ct) = eta.y.sin_cos();
    let (sp, cp) = eta.z.sin_cos();
    let rx = M3::new(1.0, 0.0, 0.0, 0.0, cf, -sf, 0.0, sf, cf);
    let ry = M3::new(ct, 0.0, st, 0.0, 1.0, 0.0, -st, 0.0, ct);
    let rz = M3::new(cp, -sp, 0.0, sp, cp, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// Body rates from Euler rates, read off `R^T R_dot` by central differences.
pub fn body_rates_fd(eta: &V3, eta_dot: &V3) -> V3 {
    let h = 1e-4;
    let d = |s: f64| rot(&(eta + eta_dot * s));
    let r_dot = (d(-2.0 * h) - 8.0 * d(-h) + 8.0 * d(h) - d(2.0 * h)) / (12.0 * h);
    let w = rot(eta).transpose() * r_dot;
    V3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)])
}

/// Closed-form ZYX body-rate map.
pub fn body_rate_map(eta: &V3) -> M3 {
    let (sf, cf) = eta.x.sin_cos();
    let (st, ct) = eta.y.sin_cos();
    M3::new(1.0, 0.0, -st, 0.0, cf, sf * ct, 0.0, -sf, cf * ct)
}

/// Mass, POI offset from the combined CoG, and inertia about the CoG, from
/// two point-mass parallel-axis shifts.
pub struct Rigid {
    pub m: f64,
    pub r_hat: V3,
    pub h: M3,
    pub g: f64,
}

impl Rigid {
    pub fn new(p: &VehicleParams) -> Self {
        let m = p.m_uav + p.m_pl;
        let c = p.r_pl * (p.m_pl / m);
        let shift = |mass: f64, d: V3| mass * (M3::identity() * d.norm_squared() - d * d.transpose());
        let h = p.h_tot + shift(p.m_uav, -c) + shift(p.m_pl, p.r_pl - c);
        Self {
            m,
            r_hat: p.r_poi - c,
            h,
            g: p.g,
        }
    }

    /// Kinetic energy in the coordinates `(p_poi, eta)`.
    pub fn kinetic(&self, q: &[f64; 6], qd: &[f64; 6]) -> f64 {
        let eta = V3::new(q[3], q[4], q[5]);
        let eta_dot = V3::new(qd[3], qd[4], qd[5]);
        let w = body_rate_map(&eta) * eta_dot;
        let v_poi = V3::new(qd[0], qd[1], qd[2]);
        let v_cog = v_poi - rot(&eta) * w.cross(&self.r_hat);
        0.5 * self.m * v_cog.norm_squared() + 0.5 * w.dot(&(self.h * w))
    }

    pub fn potential(&self, q: &[f64; 6]) -> f64 {
        let eta = V3::new(q[3], q[4], q[5]);
        let p_cog = V3::new(q[0], q[1], q[2]) - rot(&eta) * self.r_hat;
        self.m * self.g * p_cog.z
    }

    pub fn energy(&self, q: &[f64; 6], qd: &[f64; 6]) -> f64 {
        self.kinetic(q, qd) + self.potential(q)
    }

    /// Inertia matrix of the Lagrangian by polarization of the kinetic energy.
    pub fn lagrangian_mass(&self, q: &[f64; 6]) -> DMatrix<f64> {
        let e = |i: usize| {
            let mut v = [0.0; 6];
            v[i] = 1.0;
            v
        };
        let mut m = DMatrix::zeros(6, 6);
        for i in 0..6 {
            m[(i, i)] = 2.0 * self.kinetic(q, &e(i));
            for j in 0..i {
                let mut eij = e(i);
                eij[j] = 1.0;
                let v = self.kinetic(q, &eij) - self.kinetic(q, &e(i)) - self.kinetic(q, &e(j));
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Second derivatives `(p_ddot, eta_ddot)` from the Euler-Lagrange
    /// equations with generalized force `Q`.
    pub fn lagrangian_acc(&self, q: &[f64; 6], qd: &[f64; 6], force: &[f64; 6]) -> DVector<f64> {
        let h = 1e-3;
        let shift = |dir: &[f64; 6], s: f64| {
            let mut out = *q;
            for i in 0..6 {
                out[i] += s * dir[i];
            }
            out
        };
        let stencil = |f: &dyn Fn(f64) -> DMatrix<f64>| {
            (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h)
        };
        let m = self.lagrangian_mass(q);
        let m_dot = stencil(&|s| self.lagrangian_mass(&shift(qd, s)));
        let qd_v = DVector::from_column_slice(qd);
        let mut rhs = DVector::from_column_slice(force) - m_dot * &qd_v;
        for k in 0..6 {
            let mut e = [0.0; 6];
            e[k] = 1.0;
            let dl = stencil(&|s| {
                let qs = shift(&e, s);
                DMatrix::from_element(1, 1, self.kinetic(&qs, qd) - self.potential(&qs))
            });
            rhs[k] += dl[(0, 0)];
        }
        m.lu().solve(&rhs).expect("Lagrangian inertia is singular")
    }

    /// Newton-Euler about the CoG with thrust applied at the POI.
    /// Returns `(p_ddot_poi, omega_dot)`.
    pub fn newton_euler(&self, eta: &V3, omega: &V3, u: &[f64; 4]) -> (V3, V3) {
        let r = rot(eta);
        let thrust_body = V3::new(0.0, 0.0, u[0]);
        let acc_cog = r * thrust_body / self.m - V3::new(0.0, 0.0, self.g);
        let torque = V3::new(u[1], u[2], u[3]) + self.r_hat.cross(&thrust_body);
        let omega_dot = self
            .h
            .lu()
            .solve(&(torque - omega.cross(&(self.h * omega))))
            .unwrap();
        let acc_poi = acc_cog
            + r * (omega_dot.cross(&self.r_hat) + omega.cross(&omega.cross(&self.r_hat)));
        (acc_poi, omega_dot)
    }
}

/// `exp(A)` by scaling and squaring a truncated Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Two-sided Welch estimate of the spectral density at bins
/// `0..bins` of segments of length `seg`, Hann window, no overlap.
pub fn welch_psd(x: &[f64], dt: f64, seg: usize, bins: usize) -> Vec<f64> {
    let window: Vec<f64> = (0..seg)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / seg as f64).cos())
        .collect();
    let u: f64 = window.iter().map(|w| w * w).sum::<f64>();
    let segments = x.len() / seg;
    let mut psd = vec![0.0; bins];
    for s in 0..segments {
        let chunk = &x[s * seg..(s + 1) * seg];
        for (k, out) in psd.iter_mut().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for n in 0..seg {
                let ang = -2.0 * std::f64::consts::PI * (k * n) as f64 / seg as f64;
                acc += Complex::from_polar(chunk[n] * window[n], ang);
            }
            *out += acc.norm_sqr() * dt / u;
        }
    }
    psd.iter().map(|p| p / segments as f64).collect()
}

/// Finite transmission zeros of `(A, b, c, 0)` from the Rosenbrock pencil,
/// by a shift-and-invert eigenproblem.
pub fn transmission_zeros(a: &DMatrix<f64>, b: &DVector<f64>, c: &DMatrix<f64>, shift: f64) -> Vec<Complex<f64>> {
    let n = a.nrows();
    let mut p = DMatrix::zeros(n + 1, n + 1);
    p.view_mut((0, 0), (n, n)).copy_from(a);
    p.view_mut((0, n), (n, 1)).copy_from(b);
    p.view_mut((n, 0), (1, n)).copy_from(c);
    let mut e = DMatrix::zeros(n + 1, n + 1);
    e.view_mut((0, 0), (n, n)).fill_with_identity();
    let shifted = &p - &e * shift;
    let m = shifted.lu().solve(&e).expect("shift is a zero");
    let mu = m.complex_eigenvalues();
    let scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    mu.iter()
        .filter(|z| z.norm() > 1e-4 * scale.max(1.0))
        .map(|z| Complex::new(shift, 0.0) + Complex::new(1.0, 0.0) / z)
        .collect()
}

/// Characteristic polynomial coefficients, highest degree first.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &eye * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

pub fn kron_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    // A^T X + X A + Q = 0
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(&a.transpose()) + a.transpose().kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let x = op.lu().solve(&rhs).unwrap();
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    (&x + x.transpose()) * 0.5
}

/// Newton-Kleinman iteration for `A^T P + P A - P b b^T P + Q = 0`, started
/// from an Ackermann pole placement.
pub fn kleinman_care(a: &DMatrix<f64>, b: &DVector<f64>, q: &DMatrix<f64>, poles: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a * col;
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut phi = eye.clone();
    for &p in poles {
        phi *= a - &eye * p;
    }
    let mut last = DMatrix::zeros(1, n);
    last[(0, n - 1)] = 1.0;
    let mut k = last * ctrb.lu().try_inverse().unwrap() * phi;
    let b = DMatrix::from_column_slice(n, 1, b.as_slice());
    let mut p = DMatrix::zeros(n, n);
    for _ in 0..100 {
        let acl = a - &b * &k;
        let next = kron_lyapunov(&acl, &(q + k.transpose() * &k));
        let delta = (&next - &p).norm() / next.norm();
        p = next;
        k = b.transpose() * &p;
        if delta < 1e-14 {
            break;
        }
    }
    p
}

pub fn random_params(rng: &mut ChaCha8Rng) -> VehicleParams {
    let mut h = M3::from_diagonal(&V3::new(
        rng.random_range(0.1..1.0),
        rng.random_range(0.1..1.0),
        rng.random_range(0.1..1.0),
    ));
    let off = rng.random_range(-0.03..0.03);
    h[(0, 1)] = off;
    h[(1, 0)] = off;
    VehicleParams {
        m_uav: rng.random_range(1.0..30.0),
        m_pl: rng.random_range(0.0..10.0),
        r_pl: V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)),
        r_poi: V3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)),
        h_tot: h,
        g: 9.81,
    }
}

/// Parameters satisfying the decoupling assumptions: diagonal inertia, payload
/// and POI on the body z-axis.
pub fn random_symmetric_params(rng: &mut ChaCha8Rng) -> VehicleParams {
    VehicleParams {
        m_uav: rng.random_range(1.0..30.0),
        m_pl: rng.random_range(0.0..10.0),
        r_pl: V3::new(0.0, 0.0, rng.random_range(-3.0..3.0)),
        r_poi: V3::new(0.0, 0.0, rng.random_range(-3.0..3.0)),
        h_tot: M3::from_diagonal(&V3::new(
            rng.random_range(0.1..1.0),
            rng.random_range(0.1..1.0),
            rng.random_range(0.1..1.0),
        )),
        g: 9.81,
    }
}

/// Nearest-neighbour distance between two spectra of the same length.
pub fn spectrum_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// `W` with `A W + W A^T + b b^T = 0`.
pub fn controllability_gramian(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    kron_lyapunov(&a.transpose(), &(b * b.transpose()))
}
