//! Ready-made curve polynomials: named classics used across tests, demos and
//! the documentation, plus seeded random structure-invariant polynomials.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::bipoly::BiPoly;
use crate::matrix::RealStructure;

/// The diagonal (1,1) curve x0 y1 - x1 y0; real locus is the graph of the
/// identity, one circle of class (1,1).
pub fn diagonal() -> BiPoly {
    BiPoly::from_real_coeffs(1, [((0, 1), 1.0), ((1, 0), -1.0)]).unwrap()
}

/// The antidiagonal (1,1) curve x0 y0 - x1 y1; real locus has class (1,-1).
pub fn antidiagonal() -> BiPoly {
    BiPoly::from_real_coeffs(1, [((0, 0), 1.0), ((1, 1), -1.0)]).unwrap()
}

/// Translate of the diagonal: sin(phi - theta) - c cos(phi - theta); its
/// real locus is the graph phi = theta + arctan(c), disjoint from the
/// diagonal for c != 0.
pub fn diagonal_translate(c: f64) -> BiPoly {
    BiPoly::from_real_coeffs(
        1,
        [((0, 1), 1.0), ((1, 0), -1.0), ((0, 0), -c), ((1, 1), -c)],
    )
    .unwrap()
}

/// Graph of the scaling tan(phi) = lambda tan(theta), rotated by `a` in both
/// factors. Crosses the diagonal transversally at theta = a and a + pi/2
/// when lambda != 1.
pub fn scaling_graph(lambda: f64, a: f64) -> BiPoly {
    let base = BiPoly::from_real_coeffs(1, [((0, 1), 1.0), ((1, 0), -lambda)]).unwrap();
    let (c, s) = (a.cos(), a.sin());
    // substitute the rotation by -a in both projective pairs
    let rot = [
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
    ];
    substituted(&base, rot, rot)
}

/// Positive definite real (b,b) polynomial on the torus model,
/// (x0^2 + x1^2)^(b/2) (y0^2 + y1^2)^(b/2); requires even b.
pub fn torus_definite(b: usize) -> BiPoly {
    assert!(b % 2 == 0, "torus-definite polynomials need even bidegree");
    let mut sq = BiPoly::from_real_coeffs(
        2,
        [((0, 0), 1.0), ((0, 2), 1.0), ((2, 0), 1.0), ((2, 2), 1.0)],
    )
    .unwrap();
    let factor = sq.clone();
    for _ in 1..(b / 2) {
        sq = sq.multiply(&factor);
    }
    sq
}

/// Positive definite Hermitian (b,b) polynomial on the sphere model,
/// (x0 y0 + x1 y1)^b: evaluates to (tr B)^b = 2^b on the sphere.
pub fn sphere_definite(b: usize) -> BiPoly {
    let tr = BiPoly::from_real_coeffs(1, [((0, 0), 1.0), ((1, 1), 1.0)]).unwrap();
    let mut out = BiPoly::constant(Complex64::new(1.0, 0.0));
    for _ in 0..b {
        out = out.multiply(&tr);
    }
    out
}

/// Linear substitution x -> mx . x, y -> my . y (rows give the new x0, x1).
pub fn substituted(f: &BiPoly, mx: [[Complex64; 2]; 2], my: [[Complex64; 2]; 2]) -> BiPoly {
    let b = f.bidegree();
    let mut acc: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); b + 1]; b + 1];
    for (&(i, j), &c) in f.coefficients() {
        let xpart = pair_power(mx, b - i, i);
        let ypart = pair_power(my, b - j, j);
        for (xi, xc) in xpart.iter().enumerate() {
            if xc.norm() == 0.0 {
                continue;
            }
            for (yj, yc) in ypart.iter().enumerate() {
                acc[xi][yj] += c * xc * yc;
            }
        }
    }
    let coeffs = acc.into_iter().enumerate().flat_map(|(i, row)| {
        row.into_iter()
            .enumerate()
            .map(move |(j, c)| ((i, j), c))
    });
    BiPoly::new(b, coeffs).unwrap()
}

/// Coefficients over the degree in the second variable of
/// (m[0][0] z0 + m[0][1] z1)^e0 (m[1][0] z0 + m[1][1] z1)^e1.
fn pair_power(m: [[Complex64; 2]; 2], e0: usize, e1: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for (row, count) in [(m[0], e0), (m[1], e1)] {
        for _ in 0..count {
            let mut next = vec![Complex64::new(0.0, 0.0); out.len() + 1];
            for (k, &c) in out.iter().enumerate() {
                next[k] += c * row[0];
                next[k + 1] += c * row[1];
            }
            out = next;
        }
    }
    out
}

/// Smooth a product of curves: the union of the factors' loci is singular at
/// their pairwise crossings, so add a small generic invariant polynomial of
/// the same bidegree. Transverse crossings with other curves survive, while
/// the self-crossings open into smooth branches.
pub fn perturbed_product(factors: &[BiPoly], eps: f64, seed: u64) -> BiPoly {
    let mut product = BiPoly::constant(Complex64::new(1.0, 0.0));
    for f in factors {
        product = product.multiply(f);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = random_invariant(&mut rng, product.bidegree(), RealStructure::T2);
    product
        .add_scaled(&noise, Complex64::new(eps, 0.0))
        .expect("matching bidegrees")
}

/// Random polynomial invariant under the given real structure, coefficients
/// of unit scale.
pub fn random_invariant<R: Rng>(rng: &mut R, b: usize, rs: RealStructure) -> BiPoly {
    let mut coeffs: Vec<((usize, usize), Complex64)> = Vec::new();
    match rs {
        RealStructure::T2 => {
            for i in 0..=b {
                for j in 0..=b {
                    coeffs.push(((i, j), Complex64::new(rng.gen_range(-1.0..1.0), 0.0)));
                }
            }
        }
        RealStructure::S2 => {
            for i in 0..=b {
                for j in 0..=b {
                    if i < j {
                        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        coeffs.push(((i, j), c));
                        coeffs.push(((j, i), c.conj()));
                    } else if i == j {
                        coeffs.push(((i, j), Complex64::new(rng.gen_range(-1.0..1.0), 0.0)));
                    }
                }
            }
        }
        RealStructure::Empty => {
            for i in 0..=b {
                for j in 0..=b {
                    let (pi, pj) = (b - i, b - j);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    if (i, j) < (pi, pj) {
                        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                        coeffs.push(((i, j), c));
                        coeffs.push(((pi, pj), c.conj() * sign));
                    } else if (i, j) == (pi, pj) {
                        coeffs.push(((i, j), Complex64::new(rng.gen_range(-1.0..1.0), 0.0)));
                    }
                }
            }
        }
    }
    BiPoly::new(b, coeffs).unwrap()
}
