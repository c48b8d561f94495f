use nalgebra::DMatrix;

use super::{CMatrix, Operator, C64, HERMITIAN_TOL};
use crate::error::{dim_err, domain_err, Result};

/// Connected components of the nonzero pattern of a square matrix. A
/// Hermitian matrix is block diagonal along them, so its spectrum is the
/// union of the block spectra.
pub(crate) fn components(m: &CMatrix) -> Vec<Vec<usize>> {
    let d = m.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for col in 0..d {
        for r in 0..col {
            let z = m[(r, col)];
            if z.re != 0.0 || z.im != 0.0 || m[(col, r)].re != 0.0 || m[(col, r)].im != 0.0 {
                let (a, b) = (find(&mut parent, r), find(&mut parent, col));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; d];
    for i in 0..d {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is
/// used.
pub(crate) fn hermitian_spectrum(m: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows());
    for block in components(m) {
        if block.len() == 1 {
            out.push(m[(block[0], block[0])].re);
            continue;
        }
        let k = block.len();
        let sub = DMatrix::<C64>::from_fn(k, k, |i, j| {
            (m[(block[i], block[j])] + m[(block[j], block[i])].conj()) * 0.5
        });
        out.extend(sub.symmetric_eigenvalues().iter().copied());
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

pub fn hermitian_eigenvalues(a: &Operator) -> Result<Vec<f64>> {
    let defect = a.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return domain_err(format!("operator is not Hermitian (defect {defect:.3e})"));
    }
    Ok(hermitian_spectrum(a.matrix()))
}

/// `‖a‖₁`. Hermitian inputs go through the eigenvalues, anything else
/// through singular values.
pub fn trace_norm(a: &Operator) -> f64 {
    if a.hermiticity_defect() <= HERMITIAN_TOL {
        hermitian_spectrum(a.matrix()).iter().map(|l| l.abs()).sum()
    } else {
        a.matrix().clone().singular_values().iter().sum()
    }
}

/// `½‖a − b‖₁` for Hermitian inputs.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return dim_err(format!("trace_distance: {} vs {}", a.dim(), b.dim()));
    }
    for (name, x) in [("first", a), ("second", b)] {
        let defect = x.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return domain_err(format!(
                "trace_distance: {name} argument not Hermitian (defect {defect:.3e})"
            ));
        }
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_spectrum(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

pub fn min_eigenvalue(a: &Operator) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.first().copied().unwrap_or(0.0))
}

/// True iff `a` is Hermitian within `tol` and its smallest eigenvalue is at
/// least `-tol`.
pub fn is_psd(a: &Operator, tol: f64) -> bool {
    if a.hermiticity_defect() > tol.max(HERMITIAN_TOL) {
        return false;
    }
    hermitian_spectrum(a.matrix())
        .first()
        .is_none_or(|&l| l >= -tol)
}
