//! Dense complex operators on tensor-product spaces, plus the spectral,
//! sampling and channel tools built on top of them.

mod channel;
mod random;
mod spectral;

pub use channel::{diamond_distance_bounds, unitary_diamond_distance, Channel};
pub use random::{haar_sample, haar_unitary, random_density, random_pure_state, random_unitary_near};
pub use spectral::{hermitian_eigenvalues, is_psd, min_eigenvalue, trace_distance, trace_norm};

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// 4096² complex entries, about 256 MB.
pub const DEFAULT_DENSE_ENTRY_BUDGET: u64 = 4096 * 4096;

static DENSE_ENTRY_BUDGET: AtomicU64 = AtomicU64::new(DEFAULT_DENSE_ENTRY_BUDGET);

/// Sets the process-wide cap on dense matrix entries.
pub fn set_dense_entry_budget(entries: u64) {
    DENSE_ENTRY_BUDGET.store(entries.max(1), Ordering::Relaxed);
}

pub fn dense_entry_budget() -> u64 {
    DENSE_ENTRY_BUDGET.load(Ordering::Relaxed)
}

pub(crate) fn check_budget(what: &str, side: usize) -> Result<()> {
    let requested = (side as u128) * (side as u128);
    let limit = dense_entry_budget() as u128;
    if requested > limit {
        return Err(Error::SizeLimit {
            what: what.to_string(),
            requested,
            limit,
        });
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

/// A square complex matrix together with the dimensions of its tensor
/// factors. Register 0 is the most significant digit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    mat: CMatrix,
}

impl Operator {
    pub fn new(dims: Vec<usize>, mat: CMatrix) -> Result<Self> {
        let side: usize = dims.iter().product();
        if mat.nrows() != side || mat.ncols() != side {
            return dim_err(format!(
                "dims {:?} need a {side}x{side} matrix, got {}x{}",
                dims,
                mat.nrows(),
                mat.ncols()
            ));
        }
        check_budget("operator", side)?;
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator has non-finite entries".into()));
        }
        Ok(Operator { dims, mat })
    }

    /// Wraps a matrix as a single-register operator.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let d = mat.nrows();
        Self::new(vec![d], mat)
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let side: usize = dims.iter().product();
        check_budget("operator", side)?;
        Ok(Operator {
            dims,
            mat: CMatrix::zeros(side, side),
        })
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let side: usize = dims.iter().product();
        check_budget("operator", side)?;
        Ok(Operator {
            dims,
            mat: CMatrix::identity(side, side),
        })
    }

    /// `|v⟩⟨v|` (no normalization).
    pub fn from_ket(dims: Vec<usize>, v: &CVector) -> Result<Self> {
        Self::new(dims, v * v.adjoint())
    }

    pub fn basis_projector(dims: Vec<usize>, index: usize) -> Result<Self> {
        let mut op = Self::zeros(dims)?;
        if index >= op.dim() {
            return Err(Error::Index(format!("basis index {index} out of range")));
        }
        op.mat[(index, index)] = c(1.0, 0.0);
        Ok(op)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        self.mat[(r, col)]
    }

    pub fn set(&mut self, r: usize, col: usize, v: C64) {
        self.mat[(r, col)] = v;
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn transpose(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat * c(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Operator {
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat * s,
        }
    }

    fn same_shape(&self, other: &Operator, op: &str) -> Result<()> {
        if self.dims != other.dims {
            return dim_err(format!("{op}: dims {:?} vs {:?}", self.dims, other.dims));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.same_shape(other, "add")?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.same_shape(other, "sub")?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    /// Matrix product; subsystem dims of `self` are kept.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return dim_err(format!("mul: {} vs {}", self.dim(), other.dim()));
        }
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> Result<C64> {
        if self.dim() != other.dim() {
            return dim_err(format!("trace_product: {} vs {}", self.dim(), other.dim()));
        }
        let d = self.dim();
        let mut acc = c(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        if self.dim() != other.dim() {
            return dim_err(format!("max_abs_diff: {} vs {}", self.dim(), other.dim()));
        }
        Ok(self
            .mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `(X + X†)/2`.
    pub fn hermitian_part(&self) -> Operator {
        Operator {
            dims: self.dims.clone(),
            mat: (&self.mat + self.mat.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        tensor(self, other)
    }

    /// Reorders tensor factors: new register `s` is old register `order[s]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<Operator> {
        let n = self.dims.len();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::Index(format!(
                "{order:?} is not a reordering of {n} subsystems"
            )));
        }
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Ok(self.clone());
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let map = reorder_map(&self.dims, order);
        let d = self.dim();
        let mut mat = CMatrix::zeros(d, d);
        for col in 0..d {
            let nc = map[col];
            for r in 0..d {
                mat[(map[r], nc)] = self.mat[(r, col)];
            }
        }
        Ok(Operator {
            dims: new_dims,
            mat,
        })
    }

    /// Traces out every register not listed in `keep` (0-indexed). The kept
    /// registers appear in increasing order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Operator> {
        let n = self.dims.len();
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= n) {
            return Err(Error::Index(format!(
                "bad keep set {keep:?} for {n} subsystems"
            )));
        }
        let traced: Vec<usize> = (0..n).filter(|i| !keep_sorted.contains(i)).collect();
        let mut order = keep_sorted.clone();
        order.extend(&traced);
        let moved = self.permute_subsystems(&order)?;
        let dk: usize = keep_sorted.iter().map(|&k| self.dims[k]).product();
        let dt: usize = traced.iter().map(|&k| self.dims[k]).product();
        let mut mat = CMatrix::zeros(dk, dk);
        for i in 0..dk {
            for j in 0..dk {
                let mut acc = c(0.0, 0.0);
                for e in 0..dt {
                    acc += moved.mat[(i * dt + e, j * dt + e)];
                }
                mat[(i, j)] = acc;
            }
        }
        let dims = keep_sorted.iter().map(|&k| self.dims[k]).collect();
        Ok(Operator { dims, mat })
    }

    /// Transposes the listed registers in the computational basis.
    pub fn partial_transpose(&self, flip: &[usize]) -> Result<Operator> {
        let n = self.dims.len();
        if flip.iter().any(|&f| f >= n) {
            return Err(Error::Index(format!(
                "bad flip set {flip:?} for {n} subsystems"
            )));
        }
        let d = self.dim();
        let strides = strides(&self.dims);
        let mut mat = CMatrix::zeros(d, d);
        for r in 0..d {
            for col in 0..d {
                let (mut nr, mut nc) = (r, col);
                for &f in flip {
                    let s = strides[f];
                    let dr = (r / s) % self.dims[f];
                    let dc = (col / s) % self.dims[f];
                    nr = nr - dr * s + dc * s;
                    nc = nc - dc * s + dr * s;
                }
                mat[(nr, nc)] = self.mat[(r, col)];
            }
        }
        Ok(Operator {
            dims: self.dims.clone(),
            mat,
        })
    }

    /// `(u on target) · self · (u on target)†`.
    pub fn conjugate_subsystem(&self, target: usize, u: &CMatrix) -> Result<Operator> {
        let left = left_apply_subsystem(&self.mat, &self.dims, target, u)?;
        let right = left_apply_subsystem(&left.adjoint(), &self.dims, target, u)?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: right.adjoint(),
        })
    }
}

pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let side = a.dim() * b.dim();
    check_budget("tensor product", side)?;
    let mut dims = a.dims.clone();
    dims.extend(&b.dims);
    Ok(Operator {
        dims,
        mat: a.mat.kronecker(&b.mat),
    })
}

pub fn partial_trace(a: &Operator, keep: &[usize]) -> Result<Operator> {
    a.partial_trace(keep)
}

pub fn partial_transpose(a: &Operator, flip: &[usize]) -> Result<Operator> {
    a.partial_transpose(flip)
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Basis-index map for reordering registers: `map[old] = new`.
pub(crate) fn reorder_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let new_strides = strides(&new_dims);
    // stride in the new layout of each old register
    let mut dest = vec![0usize; dims.len()];
    for (s, &o) in order.iter().enumerate() {
        dest[o] = new_strides[s];
    }
    let d: usize = dims.iter().product();
    (0..d)
        .map(|x| {
            dims.iter()
                .enumerate()
                .map(|(k, &dk)| ((x / old_strides[k]) % dk) * dest[k])
                .sum()
        })
        .collect()
}

/// Applies `u` to register `target` of every column of `m`.
pub fn left_apply_subsystem(
    m: &CMatrix,
    dims: &[usize],
    target: usize,
    u: &CMatrix,
) -> Result<CMatrix> {
    if target >= dims.len() || u.nrows() != dims[target] || u.ncols() != dims[target] {
        return dim_err(format!(
            "cannot apply {}x{} to register {target} of {dims:?}",
            u.nrows(),
            u.ncols()
        ));
    }
    let d = dims[target];
    let inner: usize = dims[target + 1..].iter().product();
    let outer: usize = dims[..target].iter().product();
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    let mut buf = vec![c(0.0, 0.0); d];
    for col in 0..m.ncols() {
        for a in 0..outer {
            for b in 0..inner {
                let base = a * d * inner + b;
                for (j, slot) in buf.iter_mut().enumerate() {
                    *slot = m[(base + j * inner, col)];
                }
                for i in 0..d {
                    let mut acc = c(0.0, 0.0);
                    for (j, v) in buf.iter().enumerate() {
                        acc += u[(i, j)] * v;
                    }
                    out[(base + i * inner, col)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Applies `u` to register `target` of a state vector.
pub fn apply_to_register(v: &CVector, dims: &[usize], target: usize, u: &CMatrix) -> Result<CVector> {
    let as_mat = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let out = left_apply_subsystem(&as_mat, dims, target, u)?;
    Ok(CVector::from_column_slice(out.as_slice()))
}

/// The unnormalized maximally entangled vector `Σ_i |i⟩|i⟩`.
pub fn omega(n: usize) -> CVector {
    let mut v = CVector::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = c(1.0, 0.0);
    }
    v
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = c(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn random_matrix(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        use rand_distr::{Distribution, StandardNormal};
        CMatrix::from_fn(d, d, |_, _| {
            c(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    #[test]
    fn tensor_examples() {
        let i2 = Operator::identity(vec![2]).unwrap();
        assert_eq!(tensor(&i2, &i2).unwrap().matrix(), &CMatrix::identity(4, 4));
        let p0 = Operator::basis_projector(vec![2], 0).unwrap();
        let p1 = Operator::basis_projector(vec![2], 1).unwrap();
        let t = tensor(&p0, &p1).unwrap();
        assert_eq!(t.get(1, 1), c(1.0, 0.0));
        assert_eq!(t.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let x = Operator::from_matrix(pauli_x()).unwrap();
        let xx = tensor(&x, &x).unwrap();
        let out = xx.matrix() * basis_vector(4, 0);
        assert_eq!(out, basis_vector(4, 3));
    }

    #[test]
    fn partial_trace_examples() {
        let mixed = Operator::identity(vec![2, 2]).unwrap().scale(0.25);
        let r = mixed.partial_trace(&[0]).unwrap();
        assert!(r.max_abs_diff(&Operator::identity(vec![2]).unwrap().scale(0.5)).unwrap() < 1e-15);
        let om = Operator::from_ket(vec![2, 2], &omega(2)).unwrap();
        let r = om.partial_trace(&[0]).unwrap();
        assert_eq!(r.matrix(), &CMatrix::identity(2, 2));
        assert!(mixed.partial_trace(&[2]).is_err());
    }

    #[test]
    fn partial_trace_against_index_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&[2, 3, 2], &mut rng).unwrap();
        let kept = rho.partial_trace(&[0, 2]).unwrap();
        // direct oracle: sum over the middle digit
        for a in 0..2 {
            for b in 0..2 {
                for a2 in 0..2 {
                    for b2 in 0..2 {
                        let mut acc = c(0.0, 0.0);
                        for m in 0..3 {
                            acc += rho.get(a * 6 + m * 2 + b, a2 * 6 + m * 2 + b2);
                        }
                        assert!((kept.get(a * 2 + b, a2 * 2 + b2) - acc).norm() < 1e-14);
                    }
                }
            }
        }
        assert!((kept.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_examples() {
        let om = Operator::from_ket(vec![2, 2], &omega(2)).unwrap();
        let swapped = om.partial_transpose(&[1]).unwrap();
        for x in 0..4usize {
            let y = (x % 2) * 2 + x / 2;
            for z in 0..4 {
                let want = if z == y { 1.0 } else { 0.0 };
                assert_eq!(swapped.get(z, x).re, want);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Operator::new(vec![2, 3], random_matrix(6, &mut rng)).unwrap();
        let twice = a.partial_transpose(&[1]).unwrap().partial_transpose(&[1]).unwrap();
        assert_eq!(twice, a);
        let full = a.partial_transpose(&[0, 1]).unwrap();
        assert_eq!(full.matrix(), &a.matrix().transpose());
    }

    #[test]
    fn ricochet_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(3, &mut rng);
        let id = CMatrix::identity(3, 3);
        let lhs = a.kronecker(&id) * omega(3);
        let rhs = id.kronecker(&a.transpose()) * omega(3);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn gate_teleportation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_matrix(2, &mut rng);
        let b = random_matrix(2, &mut rng);
        let cc = random_matrix(2, &mut rng);
        let id = CMatrix::identity(2, 2);
        let om = omega(2);
        let proj = &om * om.adjoint();
        // (⟨Ω| ⊗ id)(B ⊗ (id⊗A)|Ω⟩⟨Ω|(id⊗C))(|Ω⟩ ⊗ id), registers 1..4
        let middle = id.kronecker(&a) * proj * id.kronecker(&cc);
        let big = b.kronecker(&middle);
        let bra = om.adjoint().kronecker(&id);
        let ket = om.kronecker(&id);
        let lhs = bra * big * ket;
        let want = &a * &b * &cc;
        assert!(max_abs(&(lhs - want)) < 1e-12);
    }

    #[test]
    fn reorder_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Operator::new(vec![2, 3, 4], random_matrix(24, &mut rng)).unwrap();
        let moved = a.permute_subsystems(&[2, 0, 1]).unwrap();
        assert_eq!(moved.dims(), &[4, 2, 3]);
        let back = moved.permute_subsystems(&[1, 2, 0]).unwrap();
        assert_eq!(back, a);
        // tensor factors reorder as expected
        let x = random_density(&[2], &mut rng).unwrap();
        let y = random_density(&[3], &mut rng).unwrap();
        let xy = tensor(&x, &y).unwrap().permute_subsystems(&[1, 0]).unwrap();
        assert!(xy.max_abs_diff(&tensor(&y, &x).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn conjugating_a_register() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&[2, 3], &mut rng).unwrap();
        let u = haar_unitary(3, &mut rng);
        let full = CMatrix::identity(2, 2).kronecker(&u);
        let want = &full * rho.matrix() * full.adjoint();
        let got = rho.conjugate_subsystem(1, &u).unwrap();
        assert!(max_abs(&(got.matrix() - want)) < 1e-13);
    }

    #[test]
    fn budget_is_enforced() {
        // the default budget admits 4096 but not 4097
        assert!(matches!(
            Operator::zeros(vec![4097]),
            Err(Error::SizeLimit { .. })
        ));
        assert!(check_budget("edge", 4096).is_ok());
    }
}
