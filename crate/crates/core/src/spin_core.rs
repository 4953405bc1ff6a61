//! NV ground-state spin-1 Hamiltonian, its eigenstructure, and the magnetic
//! torque exerted by a spin state on the host crystal.
//!
//! Energies are held in Hz (cycles); multiply by [`PLANCK`] for joules and by
//! 2π for angular frequencies. Matrices use the basis {|+1⟩, |0⟩, |−1⟩}.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::error::{ensure, invalid, Error, Result};
use crate::vector3::{eigensolve_hermitian3, hermitian_defect, orthonormal_frame, Mat3c, Rotation, Vec3};

/// Zero-field splitting and electron gyromagnetic ratio, both in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinConstants {
    /// Hz.
    pub d_zfs: f64,
    /// Hz/T.
    pub gamma_e: f64,
}

impl Default for SpinConstants {
    fn default() -> Self {
        SpinConstants {
            d_zfs: 2.87e9,
            gamma_e: 28.0e9,
        }
    }
}

impl SpinConstants {
    pub fn new(d_zfs: f64, gamma_e: f64) -> Result<Self> {
        ensure(d_zfs > 0.0 && d_zfs.is_finite(), || format!("d_zfs must be positive, got {d_zfs}"))?;
        ensure(gamma_e > 0.0 && gamma_e.is_finite(), || {
            format!("gamma_e must be positive, got {gamma_e}")
        })?;
        Ok(SpinConstants { d_zfs, gamma_e })
    }
}

/// Magnetic field in the lab frame, tesla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector(Vec3);

impl FieldVector {
    pub fn new(b: Vec3) -> Result<Self> {
        ensure(b.iter().all(|c| c.is_finite()), || format!("non-finite field {b:?}"))?;
        Ok(FieldVector(b))
    }

    pub fn zero() -> Self {
        FieldVector(Vec3::zeros())
    }

    /// Field of `magnitude` tesla along `direction` (normalised here).
    pub fn along(direction: &Vec3, magnitude: f64) -> Result<Self> {
        let n = direction.norm();
        ensure(n > 0.0 && n.is_finite(), || "field direction must be non-zero".into())?;
        Self::new(direction / n * magnitude)
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }
}

/// Unit vector along an NV symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvAxis(Vec3);

impl NvAxis {
    /// Rejects vectors whose norm differs from one by more than 1e-12.
    pub fn new(n: Vec3) -> Result<Self> {
        let norm = n.norm();
        ensure((norm - 1.0).abs() <= 1e-12, || {
            format!("NV axis must be a unit vector (|n| = {norm})")
        })?;
        Ok(NvAxis(n))
    }

    pub fn normalized(n: Vec3) -> Result<Self> {
        let norm = n.norm();
        ensure(norm > 0.0 && norm.is_finite(), || "NV axis must be non-zero".into())?;
        Ok(NvAxis(n / norm))
    }

    pub fn z() -> Self {
        NvAxis(Vec3::z())
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

/// Bare spin projections, in matrix index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BareState {
    Plus,
    Zero,
    Minus,
}

impl BareState {
    pub const ALL: [BareState; 3] = [BareState::Plus, BareState::Zero, BareState::Minus];

    pub fn index(self) -> usize {
        match self {
            BareState::Plus => 0,
            BareState::Zero => 1,
            BareState::Minus => 2,
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-1 operators (Sx, Sy, Sz) in the {|+1⟩, |0⟩, |−1⟩} basis.
pub fn spin_matrices() -> [Mat3c; 3] {
    let r = FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, r);
    let z = c(0.0);
    let sx = Mat3c::new(z, c(r), z, c(r), z, c(r), z, c(r), z);
    let sy = Mat3c::new(z, -i, z, i, z, -i, z, i, z);
    let sz = Mat3c::new(c(1.0), z, z, z, z, z, z, z, c(-1.0));
    [sx, sy, sz]
}

/// Ensemble-averaged state of a single NV spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat3c);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace (1e-12) and positivity (eigenvalues ≥ −1e-10).
    pub fn new(rho: Mat3c) -> Result<Self> {
        let defect = hermitian_defect(&rho);
        ensure(defect <= 1e-12, || format!("density matrix not Hermitian ({defect:e})"))?;
        let tr = rho.trace();
        ensure((tr.re - 1.0).abs() <= 1e-12 && tr.im.abs() <= 1e-12, || {
            format!("density matrix trace {tr} != 1")
        })?;
        let eig = eigensolve_hermitian3(&rho)?;
        ensure(eig.values[0] >= -1e-10, || {
            format!("density matrix has negative eigenvalue {}", eig.values[0])
        })?;
        Ok(DensityMatrix(rho))
    }

    pub(crate) fn from_matrix_unchecked(rho: Mat3c) -> Self {
        DensityMatrix(rho)
    }

    /// Removes rounding drift: symmetrises and rescales to unit trace.
    pub(crate) fn renormalized(&self) -> Self {
        let m = (self.0 + self.0.adjoint()) * c(0.5);
        DensityMatrix(m / c(m.trace().re))
    }

    pub fn pure(state: BareState) -> Self {
        let mut m = Mat3c::zeros();
        m[(state.index(), state.index())] = c(1.0);
        DensityMatrix(m)
    }

    /// Uniform mixture: the infinite-temperature fixed point.
    pub fn thermal() -> Self {
        DensityMatrix(Mat3c::identity() / c(3.0))
    }

    /// Diagonal state with populations (p₊₁, p₀, p₋₁).
    pub fn from_populations(p_plus: f64, p_zero: f64, p_minus: f64) -> Result<Self> {
        let m = Mat3c::from_diagonal(&Vector3::new(c(p_plus), c(p_zero), c(p_minus)));
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat3c {
        &self.0
    }

    pub fn population(&self, s: BareState) -> f64 {
        self.0[(s.index(), s.index())].re
    }

    /// Expectation value Tr(ρA).
    pub fn expectation(&self, op: &Mat3c) -> Complex64 {
        (self.0 * op).trace()
    }

    /// ⟨S⟩ in the frame the matrix is expressed in.
    pub fn spin_vector(&self) -> Vec3 {
        let [sx, sy, sz] = spin_matrices();
        Vec3::new(
            self.expectation(&sx).re,
            self.expectation(&sy).re,
            self.expectation(&sz).re,
        )
    }
}

/// Orthonormal spin quantisation frame: `z` is the NV axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinFrame {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl SpinFrame {
    /// Deterministic transverse axes from the smallest-component pivot rule.
    pub fn from_axis(axis: &NvAxis) -> Self {
        let z = *axis.vector();
        let (x, y) = orthonormal_frame(&z);
        SpinFrame { x, y, z }
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        SpinFrame {
            x: r.apply(&self.x),
            y: r.apply(&self.y),
            z: r.apply(&self.z),
        }
    }

    /// Lab-frame vector expressed in this frame.
    pub fn project(&self, v: &Vec3) -> Vec3 {
        Vec3::new(v.dot(&self.x), v.dot(&self.y), v.dot(&self.z))
    }
}

/// H = D S_z'² + γ_e B·S with the primed axes given by `frame`. Hz.
pub fn hamiltonian_in_frame(field: &FieldVector, frame: &SpinFrame, constants: &SpinConstants) -> Mat3c {
    let [sx, sy, sz] = spin_matrices();
    let b = frame.project(field.vector()) * constants.gamma_e;
    sz * sz * c(constants.d_zfs) + sx * c(b.x) + sy * c(b.y) + sz * c(b.z)
}

/// NV Hamiltonian in Hz for an axis in the lab frame.
pub fn build_hamiltonian(field: &FieldVector, axis: &NvAxis, constants: &SpinConstants) -> Mat3c {
    hamiltonian_in_frame(field, &SpinFrame::from_axis(axis), constants)
}

/// The two ground-state transitions, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPair {
    /// |0⟩-like → |−1⟩-like.
    pub f_minus: f64,
    /// |0⟩-like → |+1⟩-like.
    pub f_plus: f64,
}

/// Transition frequencies with eigenstates labelled by their largest overlap
/// with a bare state.
///
/// An exactly degenerate ±1 pair (zero transverse and axial Zeeman term) is
/// reported as two equal frequencies; any other case where two eigenstates
/// claim the same bare label is an error.
pub fn transition_frequencies(h: &Mat3c) -> Result<TransitionPair> {
    let eig = eigensolve_hermitian3(h)?;
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);

    let mut labels = [BareState::Zero; 3];
    for (k, label) in labels.iter_mut().enumerate() {
        let v = eig.vector(k);
        let best = BareState::ALL
            .into_iter()
            .max_by(|a, b| v[a.index()].norm_sqr().total_cmp(&v[b.index()].norm_sqr()))
            .expect("three bare states");
        *label = best;
    }
    let find = |s: BareState| labels.iter().position(|&l| l == s);
    let zero = labels.iter().filter(|&&l| l == BareState::Zero).count();
    if zero == 1 {
        let k0 = find(BareState::Zero).expect("counted");
        let others: Vec<usize> = (0..3).filter(|&k| k != k0).collect();
        let (a, b) = (others[0], others[1]);
        if (eig.values[a] - eig.values[b]).abs() <= 1e-9 * scale {
            let f = 0.5 * (eig.values[a] + eig.values[b]) - eig.values[k0];
            return Ok(TransitionPair { f_minus: f, f_plus: f });
        }
    }
    match (find(BareState::Plus), find(BareState::Zero), find(BareState::Minus)) {
        (Some(p), Some(z), Some(m)) if p != m && p != z && m != z => Ok(TransitionPair {
            f_minus: eig.values[m] - eig.values[z],
            f_plus: eig.values[p] - eig.values[z],
        }),
        _ => Err(Error::DegenerateLabeling(format!(
            "eigenstates labelled {labels:?} do not map one-to-one onto bare states"
        ))),
    }
}

/// Transition pair that never fails: the |0⟩-like state is the eigenvector with
/// the largest |0⟩ weight and the remaining two are ordered by their
/// |−1⟩ versus |+1⟩ weight. Used inside the spectrum fit, where a labeling
/// error must not abort the search.
pub fn transition_pair_loose(h: &Mat3c) -> Result<TransitionPair> {
    let eig = eigensolve_hermitian3(h)?;
    let w = |k: usize, s: BareState| eig.vectors[(s.index(), k)].norm_sqr();
    let k0 = (0..3)
        .max_by(|&a, &b| w(a, BareState::Zero).total_cmp(&w(b, BareState::Zero)))
        .expect("three eigenvectors");
    let others: Vec<usize> = (0..3).filter(|&k| k != k0).collect();
    let bias = |k: usize| w(k, BareState::Minus) - w(k, BareState::Plus);
    let (km, kp) = if bias(others[0]) >= bias(others[1]) {
        (others[0], others[1])
    } else {
        (others[1], others[0])
    };
    Ok(TransitionPair {
        f_minus: eig.values[km] - eig.values[k0],
        f_plus: eig.values[kp] - eig.values[k0],
    })
}

fn unit_rotation_axis(rotation_axis: &Vec3) -> Result<Vec3> {
    let n = rotation_axis.norm();
    if (n - 1.0).abs() > 1e-9 {
        return invalid(format!("rotation axis must be a unit vector (|k| = {n})"));
    }
    Ok(*rotation_axis)
}

/// Torque on the crystal about `rotation_axis` (N·m, per spin):
/// τ = −h·Tr(ρ ∂H/∂θ), with θ a rigid rotation of the NV frame about
/// `rotation_axis`.
///
/// `rho` is expressed in the deterministic frame of `axis`
/// ([`SpinFrame::from_axis`]). Rotating the frame by θ changes the field
/// components to e_i(θ)·B, whose derivative at θ = 0 is e_i·(B × k).
pub fn spin_torque(
    rho: &DensityMatrix,
    field: &FieldVector,
    axis: &NvAxis,
    rotation_axis: &Vec3,
    constants: &SpinConstants,
) -> Result<f64> {
    let k = unit_rotation_axis(rotation_axis)?;
    let frame = SpinFrame::from_axis(axis);
    let db = frame.project(&field.vector().cross(&k));
    let s = rho.spin_vector();
    Ok(-PLANCK * constants.gamma_e * s.dot(&db))
}

/// Same torque by a central difference of the rotated-frame Hamiltonian.
pub fn spin_torque_central_difference(
    rho: &DensityMatrix,
    field: &FieldVector,
    axis: &NvAxis,
    rotation_axis: &Vec3,
    constants: &SpinConstants,
    step: f64,
) -> Result<f64> {
    let k = unit_rotation_axis(rotation_axis)?;
    ensure(step > 0.0, || "finite-difference step must be positive".into())?;
    let frame = SpinFrame::from_axis(axis);
    let h_at = |theta: f64| hamiltonian_in_frame(field, &frame.rotated(&Rotation::about_axis(&k, theta)), constants);
    let dh = (h_at(step) - h_at(-step)) / c(2.0 * step);
    Ok(-PLANCK * rho.expectation(&dh).re)
}

/// Torque scale of one flipped spin, ħ·2π·γ_e·|B|, N·m.
pub fn per_spin_torque_scale(field_magnitude: f64, constants: &SpinConstants) -> Result<f64> {
    ensure(field_magnitude >= 0.0 && field_magnitude.is_finite(), || {
        format!("field magnitude must be non-negative, got {field_magnitude}")
    })?;
    Ok(PLANCK * constants.gamma_e * field_magnitude)
}
