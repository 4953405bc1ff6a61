//! Three-vectors, proper rotations and a closed-form eigensolver for 3×3
//! Hermitian matrices.
//!
//! Everything here is small and allocation free: the spectrum fit calls
//! [`eigensolve_hermitian3`] millions of times.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3c = Matrix3<Complex64>;

/// A proper rotation of three-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Rotation3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Rotation3::identity())
    }

    /// Validates orthogonality and unit determinant (both within 1e-12).
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        ensure(ortho <= 1e-12, || {
            format!("matrix is not orthogonal (max |RᵀR - I| = {ortho:e})")
        })?;
        let det = m.determinant();
        ensure((det - 1.0).abs() <= 1e-12, || {
            format!("matrix is not a proper rotation (det = {det})")
        })?;
        Ok(Rotation(Rotation3::from_matrix_unchecked(m)))
    }

    /// Right-handed rotation by `angle` about `axis`. A zero axis yields the identity.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        match Unit::try_new(*axis, 1e-300) {
            Some(u) => Rotation(Rotation3::from_axis_angle(&u, angle)),
            None => Self::identity(),
        }
    }

    pub fn about_x(angle: f64) -> Self {
        Rotation(Rotation3::from_axis_angle(&Vec3::x_axis(), angle))
    }

    pub fn about_y(angle: f64) -> Self {
        Rotation(Rotation3::from_axis_angle(&Vec3::y_axis(), angle))
    }

    pub fn about_z(angle: f64) -> Self {
        Rotation(Rotation3::from_axis_angle(&Vec3::z_axis(), angle))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn then_after(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.inverse())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        self.0.matrix()
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> f64 {
        self.0.angle()
    }
}

/// Completes a unit vector to a right-handed orthonormal frame `(x, y, n)`.
///
/// The helper direction is the coordinate axis along which `n` has its
/// smallest component, so the result is a deterministic function of `n`.
pub fn orthonormal_frame(n: &Vec3) -> (Vec3, Vec3) {
    let a = n.abs();
    let pivot = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let x = (pivot - n * n.dot(&pivot)).normalize();
    let y = n.cross(&x);
    (x, y)
}

/// Eigen-decomposition of a Hermitian 3×3 matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: [f64; 3],
    /// Column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Mat3c,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vector3<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

pub(crate) fn hermitian_defect(m: &Mat3c) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn max_abs(m: &Mat3c) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// cubic and eigenvectors from cross products of rows of `M - λI`. When two
/// eigenvalues are too close for the cross products to be trusted the cyclic
/// complex Jacobi method is used instead.
pub fn eigensolve_hermitian3(m: &Mat3c) -> Result<HermitianEigen> {
    let scale = max_abs(m);
    let defect = hermitian_defect(m);
    if !scale.is_finite() || defect > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (max |M - M†| = {defect:e})"
        )));
    }
    if scale == 0.0 {
        return Ok(HermitianEigen {
            values: [0.0; 3],
            vectors: Mat3c::identity(),
        });
    }
    // Symmetrise so the diagonal is exactly real.
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);

    let values = closed_form_eigenvalues(&h);
    let gap = (values[1] - values[0]).min(values[2] - values[1]);
    let spread = (values[2] - values[0]).abs().max(scale);
    if gap <= 1e-5 * spread {
        return Ok(jacobi_hermitian3(&h));
    }

    let v0 = null_vector(&h, values[0]);
    let v2 = null_vector(&h, values[2]);
    let (v0, v2) = match (v0, v2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(jacobi_hermitian3(&h)),
    };
    // Orthogonalise the top vector against the bottom one, then complete.
    let v2 = {
        let proj = v0.dotc(&v2);
        let w = v2 - v0 * proj;
        w / Complex64::new(w.norm(), 0.0)
    };
    let v1 = {
        let c = v0.cross(&v2).map(|z| z.conj());
        c / Complex64::new(c.norm(), 0.0)
    };

    let rayleigh = |v: &Vector3<Complex64>| v.dotc(&(h * v)).re;
    let mut pairs = [(rayleigh(&v0), v0), (rayleigh(&v1), v1), (rayleigh(&v2), v2)];
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(HermitianEigen {
        values: [pairs[0].0, pairs[1].0, pairs[2].0],
        vectors: Mat3c::from_columns(&[pairs[0].1, pairs[1].1, pairs[2].1]),
    })
}

/// Roots of the characteristic polynomial by the trigonometric method, ascending.
fn closed_form_eigenvalues(h: &Mat3c) -> [f64; 3] {
    let a00 = h[(0, 0)].re;
    let a11 = h[(1, 1)].re;
    let a22 = h[(2, 2)].re;
    let q = (a00 + a11 + a22) / 3.0;
    let p1 = h[(0, 1)].norm_sqr() + h[(0, 2)].norm_sqr() + h[(1, 2)].norm_sqr();
    let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let b = (h - Mat3c::identity() * Complex64::new(q, 0.0)) / Complex64::new(p, 0.0);
    let r = (0.5 * b.determinant().re).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    let mut v = [lo, mid, hi];
    v.sort_by(f64::total_cmp);
    v
}

/// Unit vector spanning the kernel of `h - λI`, from the best-conditioned
/// cross product of two of its rows.
fn null_vector(h: &Mat3c, lambda: f64) -> Option<Vector3<Complex64>> {
    let a = h - Mat3c::identity() * Complex64::new(lambda, 0.0);
    let rows = [
        a.row(0).transpose(),
        a.row(1).transpose(),
        a.row(2).transpose(),
    ];
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))?;
    let n = best.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(best / Complex64::new(n, 0.0))
}

/// Cyclic Jacobi diagonalisation with complex plane rotations.
pub(crate) fn jacobi_hermitian3(h: &Mat3c) -> HermitianEigen {
    let mut a = *h;
    let mut v = Mat3c::identity();
    let norm = max_abs(h);
    for _sweep in 0..64 {
        let off = a[(0, 1)].norm_sqr() + a[(0, 2)].norm_sqr() + a[(1, 2)].norm_sqr();
        if off.sqrt() <= 1e-17 * norm {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            let r = apq.norm();
            if r <= 1e-300 {
                continue;
            }
            let phase = apq / r;
            let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let t = if tau == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let mut j = Mat3c::identity();
            j[(p, p)] = Complex64::new(c, 0.0);
            j[(p, q)] = Complex64::new(s, 0.0);
            j[(q, p)] = -phase.conj() * s;
            j[(q, q)] = phase.conj() * c;
            a = j.adjoint() * a * j;
            v *= j;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &k| a[(i, i)].re.total_cmp(&a[(k, k)].re));
    HermitianEigen {
        values: [a[(order[0], order[0])].re, a[(order[1], order[1])].re, a[(order[2], order[2])].re],
        vectors: Mat3c::from_columns(&[
            v.column(order[0]).into_owned(),
            v.column(order[1]).into_owned(),
            v.column(order[2]).into_owned(),
        ]),
    }
}
