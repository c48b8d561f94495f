use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{c, CMatrix, CVector, Operator, C64};
use crate::error::{domain_err, Result};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re * s, im * s)
    })
}

/// Haar-random `N×N` unitary: QR of a complex Ginibre matrix with the
/// columns rephased by the diagonal of `R`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Operator> {
    if n == 0 {
        return domain_err("haar_sample needs N >= 1");
    }
    Operator::new(vec![n], haar_unitary(n, rng))
}

/// Haar-random unit vector of dimension `d`.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let g = ginibre(d, 1, rng);
    let v = CVector::from_column_slice(g.as_slice());
    let n = v.norm();
    v / c(n, 0.0)
}

/// `G†G / Tr(G†G)` for complex Gaussian `G`: a full-rank unit-trace PSD
/// operator.
pub fn random_density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Operator> {
    let d: usize = dims.iter().product();
    let g = ginibre(d, d, rng);
    let m = g.adjoint() * &g;
    let tr = m.trace().re;
    let mut m = m / c(tr, 0.0);
    // exact Hermiticity
    for i in 0..d {
        m[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in 0..i {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
    Operator::new(dims.to_vec(), m)
}

/// `U · exp(i·scale·H)` for a random Hermitian `H` of unit Frobenius norm;
/// used to probe continuity bounds at short distances.
pub fn random_unitary_near<R: Rng + ?Sized>(u: &CMatrix, scale: f64, rng: &mut R) -> CMatrix {
    let n = u.nrows();
    let g = ginibre(n, n, rng);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let h = &h / c(h.norm(), 0.0);
    // exp(iθH) through the eigendecomposition of H
    let eig = h.symmetric_eigen();
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, scale * l)),
    ));
    let w = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    u * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(16, &mut rng);
        let defect = max_abs(&(u.adjoint() * &u - CMatrix::identity(16, 16)));
        assert!(defect <= 1e-12, "{defect}");
        let s = haar_unitary(1, &mut rng);
        assert!((s[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn first_moment_of_an_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shots = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..shots {
            let u = haar_unitary(4, &mut rng);
            let p = u[(0, 0)].norm_sqr();
            s += p;
            s2 += p * p;
        }
        let mean = s / shots as f64;
        let se = ((s2 / shots as f64 - mean * mean) / shots as f64).sqrt();
        assert!((mean - 0.25).abs() <= 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn left_invariance_statistic() {
        // |(WU)_{00}|² has the same law as |U_{00}|²; compare the second moment
        // 2/(N(N+1)) with N = 3.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = haar_unitary(3, &mut rng);
        let shots = 50_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..shots {
            let u = &w * haar_unitary(3, &mut rng);
            let p = u[(0, 0)].norm_sqr().powi(2);
            s += p;
            s2 += p * p;
        }
        let mean = s / shots as f64;
        let se = ((s2 / shots as f64 - mean * mean) / shots as f64).sqrt();
        assert!((mean - 2.0 / 12.0).abs() <= 4.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn near_unitary_is_close_and_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(4, &mut rng);
        let v = random_unitary_near(&u, 1e-3, &mut rng);
        assert!(max_abs(&(v.adjoint() * &v - CMatrix::identity(4, 4))) < 1e-12);
        assert!((&u - &v).norm() <= 1.1e-3);
    }
}
