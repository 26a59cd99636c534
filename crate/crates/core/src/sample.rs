//! Random matrices and projection pairs with controlled relative position.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkit::{c, CMatrix};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    rect_gaussian(n, n, rng)
}

pub fn rect_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c(s * a, s * b)
    })
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian(n, rng);
    (&g + g.adjoint()).scale(0.5)
}

pub fn skew<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian(n, rng);
    (&g - g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = gaussian(n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random projection of rank `k` in `M_n`.
pub fn projection_matrix<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMatrix {
    let u = haar_unitary(n, rng);
    let cols = u.columns(0, k);
    cols * cols.adjoint()
}

/// Relative position of a pair in Halmos coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLayout {
    /// `rank(p∧q)`
    pub both: usize,
    /// `rank(p⊥∧q⊥)`
    pub neither: usize,
    /// `rank(p∧q⊥) = rank(p⊥∧q)`
    pub wedge: usize,
    /// Principal angles of the generic part, each in `(0, π/2)`.
    pub angles: Vec<f64>,
}

impl PairLayout {
    pub fn dim(&self) -> usize {
        self.both + self.neither + 2 * self.wedge + 2 * self.angles.len()
    }

    pub fn rank(&self) -> usize {
        self.both + self.wedge + self.angles.len()
    }

    /// The pair in standard coordinates, ordered as
    /// `[both | wedge in p | wedge in q | generic p | generic p⊥ | neither]`.
    pub fn build(&self) -> (CMatrix, CMatrix) {
        let n = self.dim();
        let g = self.angles.len();
        let mut p = CMatrix::zeros(n, n);
        let mut q = CMatrix::zeros(n, n);
        let one = c(1.0, 0.0);
        for i in 0..self.both {
            p[(i, i)] = one;
            q[(i, i)] = one;
        }
        let wp = self.both;
        let wq = wp + self.wedge;
        for i in 0..self.wedge {
            p[(wp + i, wp + i)] = one;
            q[(wq + i, wq + i)] = one;
        }
        let gp = wq + self.wedge;
        let gq = gp + g;
        for (i, &theta) in self.angles.iter().enumerate() {
            p[(gp + i, gp + i)] = one;
            let mut v = DVector::<Complex64>::zeros(n);
            v[gp + i] = c(theta.cos(), 0.0);
            v[gq + i] = c(theta.sin(), 0.0);
            q += &v * v.adjoint();
        }
        (p, q)
    }

    /// The pair conjugated by a Haar-random unitary.
    pub fn build_rotated<R: Rng + ?Sized>(&self, rng: &mut R) -> (CMatrix, CMatrix) {
        let (p, q) = self.build();
        let u = haar_unitary(self.dim(), rng);
        let ua = u.adjoint();
        (&u * p * &ua, &u * q * &ua)
    }

    /// Random layout of dimension `n` with projections of rank `rank`.
    /// With `force_wedge`, the wedge part has rank at least one (requires
    /// `1 ≤ rank ≤ n − 1`).
    pub fn random<R: Rng + ?Sized>(n: usize, rank: usize, force_wedge: bool, rng: &mut R) -> Self {
        assert!(rank <= n, "rank exceeds dimension");
        let room = rank.min(n - rank);
        let wedge = if force_wedge {
            assert!(room >= 1, "a wedge part needs 1 <= rank <= n - 1");
            rng.random_range(1..=room)
        } else {
            0
        };
        let g = rng.random_range(0..=room - wedge);
        let angles = (0..g).map(|_| random_angle(rng)).collect();
        Self {
            both: rank - wedge - g,
            neither: n - rank - wedge - g,
            wedge,
            angles,
        }
    }
}

/// Angle drawn uniformly from `(0.05, π/2 − 0.05)`, away from the
/// clustering windows at 0 and π/2.
pub fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.05..FRAC_PI_2 - 0.05)
}

/// Independent Haar-random projections of the same rank.
pub fn generic_pair<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> (CMatrix, CMatrix) {
    (
        projection_matrix(n, rank, rng),
        projection_matrix(n, rank, rng),
    )
}

/// Conjugate by a fixed unitary.
pub fn conjugate(u: &CMatrix, x: &CMatrix) -> CMatrix {
    u * x * u.adjoint()
}
