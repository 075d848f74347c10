//! Projective 2x2 complex matrices, the level-to-group embedding, the unitary
//! projection, and the three real structures as matrix involutions.
//!
//! Points of the projectivized matrix space are represented by an arbitrary
//! nonzero `Matrix2`; equality is always a projective comparison with an
//! explicit scalar quotient group (`Quotient`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Pgl2Error;

/// Absolute tolerance for projective comparison after scale normalization.
pub const PROJ_TOL: f64 = 1e-9;

/// Relative tolerance for the rank-1 (determinant zero) requirement on
/// quadric representatives: |det| <= DET_TOL * max_entry^2.
pub const DET_TOL: f64 = 1e-9;

/// Scalar group a projective comparison quotients by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quotient {
    /// Any nonzero complex scalar.
    Complex,
    /// Any nonzero real scalar (both signs).
    Real,
    /// Unit-modulus complex scalar.
    Unitary,
}

/// A 2x2 complex matrix, used as a representative of a projective class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Matrix2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix2 {
            a: Complex64::new(a, 0.0),
            b: Complex64::new(b, 0.0),
            c: Complex64::new(c, 0.0),
            d: Complex64::new(d, 0.0),
        }
    }

    pub fn identity() -> Self {
        Matrix2::from_real(1.0, 0.0, 0.0, 1.0)
    }

    /// Rank-1 representative x * y^T of a Segre point.
    pub fn rank_one(x: [Complex64; 2], y: [Complex64; 2]) -> Self {
        Matrix2::new(x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1])
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn max_entry_norm(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_entry_norm() == 0.0
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Matrix2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, other: &Matrix2) -> Self {
        Matrix2::new(
            self.a + other.a,
            self.b + other.b,
            self.c + other.c,
            self.d + other.d,
        )
    }

    /// Conjugate transpose.
    pub fn hermitian_conjugate(&self) -> Self {
        Matrix2::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    /// Entrywise conjugate.
    pub fn conjugate(&self) -> Self {
        Matrix2::new(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    /// Frobenius inner product <self, other> = sum conj(self_ij) * other_ij.
    fn inner(&self, other: &Matrix2) -> Complex64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    fn norm_sq(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Projective equality up to the given scalar quotient group.
    ///
    /// The best scalar lambda with other ~ lambda * self is found by least
    /// squares, constrained to the quotient group, and the residual is
    /// compared entrywise against `PROJ_TOL` after normalizing both sides by
    /// the largest entry modulus.
    pub fn proj_eq(&self, other: &Matrix2, quotient: Quotient) -> bool {
        if self.is_zero() || other.is_zero() {
            return false;
        }
        let lambda = other.inner(self) / other.norm_sq();
        // lambda maps other -> self in least squares; constrain to the group.
        let lambda = match quotient {
            Quotient::Complex => lambda,
            Quotient::Real => Complex64::new(lambda.re, 0.0),
            Quotient::Unitary => {
                if lambda.norm() == 0.0 {
                    return false;
                }
                lambda / lambda.norm()
            }
        };
        let scaled = other.scale(lambda);
        let norm = self.max_entry_norm().max(scaled.max_entry_norm());
        if norm == 0.0 {
            return false;
        }
        self.entries()
            .iter()
            .zip(scaled.entries().iter())
            .all(|(x, y)| (x - y).norm() <= PROJ_TOL * norm)
    }
}

/// Adjugate of a 2x2 matrix: [d, -b; -c, a]. Satisfies m * adj(m) = det(m) Id.
pub fn adjugate(m: &Matrix2) -> Matrix2 {
    Matrix2::new(m.d, -m.b, -m.c, m.a)
}

/// A point of the level-times-quadric-bundle chart: a positive level
/// coordinate together with a rank-1 representative of a quadric point.
#[derive(Debug, Clone, Copy)]
pub struct PsiPoint {
    pub alpha: f64,
    pub base: Matrix2,
}

impl PsiPoint {
    pub fn new(alpha: f64, base: Matrix2) -> Result<Self, Pgl2Error> {
        if !(alpha > 0.0) {
            return Err(Pgl2Error::NonPositiveLevel { alpha });
        }
        let scale = base.max_entry_norm();
        if scale == 0.0 {
            return Err(Pgl2Error::ZeroMatrix);
        }
        if base.det().norm() > DET_TOL * scale * scale {
            return Err(Pgl2Error::DegenerateBase {
                det_norm: base.det().norm(),
            });
        }
        Ok(PsiPoint { alpha, base })
    }
}

/// The diffeomorphism from level-times-bundle coordinates into the group:
/// (alpha, [B]) -> [e^alpha B + e^(-alpha) adj(B*)].
pub fn psi(p: &PsiPoint) -> Matrix2 {
    let up = p.base.scale(Complex64::new(p.alpha.exp(), 0.0));
    let down = adjugate(&p.base.hermitian_conjugate()).scale(Complex64::new((-p.alpha).exp(), 0.0));
    up.add(&down)
}

/// Unitary-part projection: [A] -> [A + adj(A*)], a scalar multiple of a
/// unitary matrix. The input is normalized to determinant one first, so the
/// result does not depend on the representative.
pub fn polar_project(m: &Matrix2) -> Result<Matrix2, Pgl2Error> {
    let det = m.det();
    let scale = m.max_entry_norm();
    if det.norm() <= DET_TOL * scale * scale {
        return Err(Pgl2Error::SingularInput {
            det_norm: det.norm(),
        });
    }
    let s = det.sqrt();
    let unit = m.scale(Complex64::new(1.0, 0.0) / s);
    Ok(unit.add(&adjugate(&unit.hermitian_conjugate())))
}

/// The three anti-holomorphic involutions, named by the topology of the real
/// locus of the quadric they induce: a torus, the empty set, or a sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RealStructure {
    #[serde(rename = "T2")]
    T2,
    #[serde(rename = "empty")]
    Empty,
    #[serde(rename = "S2")]
    S2,
}

impl RealStructure {
    pub fn label(&self) -> &'static str {
        match self {
            RealStructure::T2 => "T2",
            RealStructure::Empty => "empty",
            RealStructure::S2 => "S2",
        }
    }
}

/// Apply a real structure to a matrix representative.
///
/// The empty-locus involution is implemented through the adjugate of the
/// conjugate transpose, which is projectively the inverse but has no
/// division, so only genuinely singular inputs are rejected.
pub fn apply_real_structure(rs: RealStructure, m: &Matrix2) -> Result<Matrix2, Pgl2Error> {
    match rs {
        RealStructure::T2 => Ok(m.conjugate()),
        RealStructure::S2 => Ok(m.hermitian_conjugate()),
        RealStructure::Empty => {
            let det = m.det();
            let scale = m.max_entry_norm();
            if det.norm() <= DET_TOL * scale * scale {
                return Err(Pgl2Error::SingularInput {
                    det_norm: det.norm(),
                });
            }
            Ok(adjugate(&m.hermitian_conjugate()))
        }
    }
}

/// Whether [m] is a fixed point of the involution, up to a complex scalar.
pub fn is_real_point(rs: RealStructure, m: &Matrix2) -> Result<bool, Pgl2Error> {
    let image = apply_real_structure(rs, m)?;
    Ok(m.proj_eq(&image, Quotient::Complex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix2 {
        let mut e = [Complex64::default(); 4];
        for z in &mut e {
            *z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        }
        Matrix2::new(e[0], e[1], e[2], e[3])
    }

    fn random_real_rank_one(rng: &mut ChaCha8Rng) -> Matrix2 {
        let t = rng.gen_range(0.0..std::f64::consts::PI);
        let s = rng.gen_range(0.0..std::f64::consts::PI);
        Matrix2::rank_one(
            [c(t.cos(), 0.0), c(t.sin(), 0.0)],
            [c(s.cos(), 0.0), c(s.sin(), 0.0)],
        )
    }

    #[test]
    fn adjugate_identity_and_textbook() {
        let id = Matrix2::identity();
        assert!(adjugate(&id).proj_eq(&id, Quotient::Complex));
        let m = Matrix2::from_real(1.0, 2.0, 3.0, 4.0);
        let adj = adjugate(&m);
        assert_eq!(adj, Matrix2::from_real(4.0, -2.0, -3.0, 1.0));
        // m * adj(m) = det(m) Id
        let prod = Matrix2::new(
            m.a * adj.a + m.b * adj.c,
            m.a * adj.b + m.b * adj.d,
            m.c * adj.a + m.d * adj.c,
            m.c * adj.b + m.d * adj.d,
        );
        assert!(prod.proj_eq(&Matrix2::identity(), Quotient::Complex));
        assert!((prod.a - m.det()).norm() < 1e-12);
    }

    #[test]
    fn adjugate_annihilates_rank_one() {
        let m = Matrix2::rank_one([c(1.0, 0.5), c(-0.3, 2.0)], [c(0.7, 0.0), c(1.1, -0.4)]);
        let adj = adjugate(&m);
        let prod = Matrix2::new(
            adj.a * m.a + adj.b * m.c,
            adj.a * m.b + adj.b * m.d,
            adj.c * m.a + adj.d * m.c,
            adj.c * m.b + adj.d * m.d,
        );
        assert!(prod.max_entry_norm() < 1e-12);
    }

    #[test]
    fn adjugate_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = random_matrix(&mut rng);
            let back = adjugate(&adjugate(&m));
            assert!((back.a - m.a).norm() < 1e-14);
            assert!((back.d - m.d).norm() < 1e-14);
        }
    }

    #[test]
    fn psi_diagonal_rank_one() {
        let base = Matrix2::from_real(1.0, 0.0, 0.0, 0.0);
        for alpha in [0.3, 1.0, 2.5] {
            let p = PsiPoint::new(alpha, base).unwrap();
            let out = psi(&p);
            let expect = Matrix2::from_real(alpha.exp(), 0.0, 0.0, (-alpha).exp());
            assert!(out.proj_eq(&expect, Quotient::Complex));
        }
    }

    #[test]
    fn psi_unit_rank_one_has_determinant_one() {
        // det(e^a uv^T + e^-a adj((uv^T)*)) expanded by hand equals |u|^2 |v|^2;
        // on unit-normalized real factors the determinant is exactly 1.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let base = random_real_rank_one(&mut rng);
            let p = PsiPoint::new(rng.gen_range(0.1..3.0), base).unwrap();
            let out = psi(&p);
            assert!((out.det() - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn psi_of_real_base_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let base = random_real_rank_one(&mut rng);
            let p = PsiPoint::new(rng.gen_range(0.1..3.0), base).unwrap();
            let out = psi(&p);
            for z in out.entries() {
                assert!(z.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn psi_rejects_degenerate_base() {
        let full_rank = Matrix2::from_real(1.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            PsiPoint::new(1.0, full_rank),
            Err(Pgl2Error::DegenerateBase { .. })
        ));
    }

    #[test]
    fn polar_project_unitary_fixed() {
        let t: f64 = 0.7;
        let u = Matrix2::new(
            c(t.cos(), 0.0),
            c(-t.sin(), 0.0),
            c(t.sin(), 0.0),
            c(t.cos(), 0.0),
        );
        let out = polar_project(&u).unwrap();
        assert!(out.proj_eq(&u, Quotient::Real));
        // for det = 1 unitary the formula returns exactly 2U
        assert!((out.a - u.a.scale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn polar_project_diagonal() {
        let m = Matrix2::from_real(2.0, 0.0, 0.0, 0.5);
        let out = polar_project(&m).unwrap();
        assert!(out.proj_eq(&Matrix2::identity(), Quotient::Real));
    }

    #[test]
    fn polar_project_forgets_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let base = random_real_rank_one(&mut rng);
            let outs: Vec<Matrix2> = [0.5, 1.0, 2.0]
                .iter()
                .map(|&alpha| {
                    let p = PsiPoint::new(alpha, base).unwrap();
                    polar_project(&psi(&p)).unwrap()
                })
                .collect();
            assert!(outs[0].proj_eq(&outs[1], Quotient::Real));
            assert!(outs[0].proj_eq(&outs[2], Quotient::Real));
        }
    }

    #[test]
    fn polar_project_rejects_singular() {
        let m = Matrix2::from_real(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(
            polar_project(&m),
            Err(Pgl2Error::SingularInput { .. })
        ));
    }

    #[test]
    fn real_structure_fixed_points() {
        let real = Matrix2::from_real(1.0, 2.0, 3.0, 4.0);
        assert!(is_real_point(RealStructure::T2, &real).unwrap());
        let herm = Matrix2::new(c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0));
        assert!(is_real_point(RealStructure::S2, &herm).unwrap());
        let t: f64 = 1.1;
        let unitary = Matrix2::new(
            c(t.cos(), 0.0),
            c(0.0, t.sin()),
            c(0.0, t.sin()),
            c(t.cos(), 0.0),
        );
        assert!((unitary.det() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(is_real_point(RealStructure::Empty, &unitary).unwrap());
        // and a generic complex matrix is fixed by none of them
        let generic = Matrix2::new(c(1.0, 0.3), c(0.2, -1.0), c(2.0, 0.9), c(-0.4, 0.6));
        assert!(!is_real_point(RealStructure::T2, &generic).unwrap());
        assert!(!is_real_point(RealStructure::S2, &generic).unwrap());
    }

    #[test]
    fn real_structures_are_projective_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for rs in [RealStructure::T2, RealStructure::Empty, RealStructure::S2] {
            for _ in 0..100 {
                let m = random_matrix(&mut rng);
                if m.det().norm() < 1e-3 {
                    continue;
                }
                let twice =
                    apply_real_structure(rs, &apply_real_structure(rs, &m).unwrap()).unwrap();
                assert!(twice.proj_eq(&m, Quotient::Complex));
            }
        }
    }

    #[test]
    fn psi_equivariance_for_conjugation_structures() {
        // applying T2 or S2 to the base and then psi agrees projectively with
        // applying the structure to the psi output
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let x = [
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let y = [
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let base = Matrix2::rank_one(x, y);
            if base.max_entry_norm() < 1e-2 {
                continue;
            }
            let alpha = rng.gen_range(0.2..2.0);
            for rs in [RealStructure::T2, RealStructure::S2] {
                let base_rs = apply_real_structure(rs, &base).unwrap();
                let p1 = PsiPoint::new(alpha, base_rs).unwrap();
                let lhs = psi(&p1);
                let p2 = PsiPoint::new(alpha, base).unwrap();
                let rhs = apply_real_structure(rs, &psi(&p2)).unwrap();
                assert!(lhs.proj_eq(&rhs, Quotient::Complex));
            }
        }
    }

    #[test]
    fn unitary_points_are_empty_structure_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            // random special unitary via two angles and a phase
            let (t, p1, p2) = (
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let a = Complex64::from_polar(t.cos(), p1);
            let b = Complex64::from_polar(t.sin(), p2);
            let u = Matrix2::new(a, b, -b.conj(), a.conj());
            assert!(is_real_point(RealStructure::Empty, &u).unwrap());
        }
    }
}
