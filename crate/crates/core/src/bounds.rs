//! Numeric checks of the standalone inequalities and the distinguishing
//! linear program.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain_err, Error, Result};
use crate::permops::{basis_map, checked_pow, enumerate_symmetric_group, falling_factorial, Permutation};
use crate::qlinalg::{check_budget, min_eigenvalue, random_density, random_pure_state, trace_distance, Operator};
use crate::seeds::task_rng;
use crate::weingarten::{approx_mixed_twirl, exact_mixed_twirl, exact_twirl_with_ancilla, weingarten_table};

/// `½ + (3ε + ε²) / (2(1+ε)²)`.
pub fn lp_closed_form(eps: f64) -> Result<f64> {
    if eps.is_nan() || eps < 0.0 || !eps.is_finite() {
        return domain_err(format!("epsilon must be a finite non-negative number, got {eps}"));
    }
    Ok(0.5 + (3.0 * eps + eps * eps) / (2.0 * (1.0 + eps).powi(2)))
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub eps: f64,
    pub value: f64,
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    /// Constraint names with zero slack at the reported vertex.
    pub active: Vec<String>,
    /// `false` when `ε ≥ 1`: the ratio coefficient `(1+ε)²/(1−ε)` is then
    /// undefined or negative and the ratio constraints carry no information.
    pub ratio_constraints_used: bool,
}

struct HalfPlane {
    name: &'static str,
    a: [f64; 2],
    b: f64,
}

/// Maximizes `(p00 + p11)/2` over the LP after substituting `p10 = 1 − p00`
/// and `p11 = 1 − p01`, by enumerating the vertices of the planar polytope
/// in `(p00, p01)`.
pub fn lp_solve(eps: f64) -> Result<LpSolution> {
    if eps.is_nan() || eps < 0.0 || !eps.is_finite() {
        return domain_err(format!("epsilon must be a finite non-negative number, got {eps}"));
    }
    let mut planes = vec![
        HalfPlane { name: "p00 >= 0", a: [-1.0, 0.0], b: 0.0 },
        HalfPlane { name: "p10 >= 0", a: [1.0, 0.0], b: 1.0 },
        HalfPlane { name: "p01 >= 0", a: [0.0, -1.0], b: 0.0 },
        HalfPlane { name: "p11 >= 0", a: [0.0, 1.0], b: 1.0 },
    ];
    let ratio_constraints_used = eps < 1.0;
    if ratio_constraints_used {
        let coef = (1.0 + eps).powi(2) / (1.0 - eps);
        // coef·p00 ≥ p01
        planes.push(HalfPlane { name: "ratio p01 <= c p00", a: [-coef, 1.0], b: 0.0 });
        // coef·p10 ≥ p11  ⇔  coef·p00 − p01 ≤ coef − 1
        planes.push(HalfPlane { name: "ratio p11 <= c p10", a: [coef, -1.0], b: coef - 1.0 });
    }
    let tol = 1e-12;
    let mut best: Option<(f64, [f64; 2])> = None;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            let (p, q) = (&planes[i], &planes[j]);
            let det = p.a[0] * q.a[1] - p.a[1] * q.a[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let x = [(p.b * q.a[1] - p.a[1] * q.b) / det, (p.a[0] * q.b - p.b * q.a[0]) / det];
            let scale = |h: &HalfPlane| 1.0 + h.a[0].abs() + h.a[1].abs() + h.b.abs();
            if planes.iter().all(|h| h.a[0] * x[0] + h.a[1] * x[1] - h.b <= tol * scale(h)) {
                let value = (x[0] + 1.0 - x[1]) / 2.0;
                if best.is_none_or(|(v, _)| value > v + 1e-15) {
                    best = Some((value, x));
                }
            }
        }
    }
    let (value, x) = best.ok_or_else(|| Error::Domain(format!("LP infeasible at eps = {eps}")))?;
    let active = planes
        .iter()
        .filter(|h| (h.a[0] * x[0] + h.a[1] * x[1] - h.b).abs() <= 1e-10 * (1.0 + h.b.abs() + h.a[0].abs()))
        .map(|h| h.name.to_string())
        .collect();
    Ok(LpSolution {
        eps,
        value,
        p00: x[0],
        p01: x[1],
        p10: 1.0 - x[0],
        p11: 1.0 - x[1],
        active,
        ratio_constraints_used,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FallingRatio {
    pub n: u64,
    pub t: u64,
    /// Exact ratio in lowest terms, `"p/q"`.
    pub ratio: String,
    pub ratio_value: f64,
    /// Harness candidate `4t²/N` for `ε`.
    pub eps_bound: f64,
    pub within_bound: bool,
}

/// `(N+2t−1)^{↓2t} / ((N+t−1)^{↓t})²` in exact rationals.
pub fn falling_ratio(n: u64, t: u64) -> Result<BigRational> {
    if n == 0 || t == 0 {
        return domain_err(format!("falling ratio needs N, t >= 1, got N={n}, t={t}"));
    }
    let num = falling_factorial(n + 2 * t - 1, 2 * t)?;
    let den = falling_factorial(n + t - 1, t)?;
    Ok(BigRational::new(BigInt::from(num), BigInt::from(&den * &den)))
}

pub fn falling_ratio_check(n: u64, t: u64) -> Result<FallingRatio> {
    let r = falling_ratio(n, t)?;
    let eps_bound = 4.0 * (t * t) as f64 / n as f64;
    let one_plus = BigRational::from_integer(BigInt::from(1))
        + BigRational::new(BigInt::from(4 * t * t), BigInt::from(n));
    Ok(FallingRatio {
        n,
        t,
        ratio: format!("{}/{}", r.numer(), r.denom()),
        ratio_value: r.to_f64().unwrap_or(f64::INFINITY),
        eps_bound,
        within_bound: r <= one_plus,
    })
}

/// `Tr(P_N(π) X)` for `X` on `[N]^t`, `t = π.size()`.
fn perm_trace(n: usize, p: &Permutation, x: &Operator) -> Result<f64> {
    let map = basis_map(n, p)?;
    let m = x.matrix();
    Ok(map.iter().enumerate().map(|(y, &py)| m[(y, py)]).sum::<num_complex::Complex64>().re)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductPermReport {
    pub n: usize,
    pub t: usize,
    pub trials: usize,
    /// min over trials of `Σ_{Sym_2t} − Σ_{Sym_t × Sym_t}`
    pub min_gap: f64,
    /// min over trials of `Σ_{Sym_t × Sym_t}`
    pub min_product: f64,
    pub pass: bool,
}

/// `Σ_{π ∈ Sym_2t} Tr(P(π) M⊗N) ≥ Σ_{π_A,π_B} Tr(P(π_A)⊗P(π_B) M⊗N) ≥ 0` on
/// random unit-trace PSD `M`, `N`.
pub fn check_product_perm(n: usize, t: usize, trials: usize, seed: u64) -> Result<ProductPermReport> {
    if n == 0 || t == 0 || 2 * t > 8 {
        return domain_err(format!("product-perm check needs N >= 1 and 1 <= t <= 4, got N={n}, t={t}"));
    }
    let side = checked_pow(n, t)?;
    check_budget("product-perm operand", side)?;
    let big: Vec<(Vec<usize>, usize)> = enumerate_symmetric_group(2 * t)?
        .iter()
        .map(|p| Ok((basis_map(n, p)?, side)))
        .collect::<Result<_>>()?;
    let small = enumerate_symmetric_group(t)?;
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, "bounds/product_perm", i as u64);
            let m = random_density(&vec![n; t], &mut rng)?;
            let nb = random_density(&vec![n; t], &mut rng)?;
            let (mm, nm) = (m.matrix(), nb.matrix());
            let mut joint = 0.0;
            for (map, side) in &big {
                for (y, &py) in map.iter().enumerate() {
                    joint += (mm[(y / side, py / side)] * nm[(y % side, py % side)]).re;
                }
            }
            let mut ta = 0.0;
            let mut tb = 0.0;
            for p in &small {
                ta += perm_trace(n, p, &m)?;
                tb += perm_trace(n, p, &nb)?;
            }
            let product = ta * tb;
            Ok((joint - product, product))
        })
        .collect::<Result<_>>()?;
    let min_gap = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_product = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(ProductPermReport {
        n,
        t,
        trials,
        min_gap,
        min_product,
        pass: min_gap >= -1e-9 && min_product >= -1e-9,
    })
}

/// Eigenvalues of `Σ w_p P_N(p)` (which must be Hermitian), computed on
/// the orbits of the basis under the listed permutations.
pub fn permutation_combination_spectrum(n: usize, terms: &[(Permutation, f64)]) -> Result<Vec<f64>> {
    let Some(first) = terms.first() else {
        return Ok(vec![]);
    };
    let regs = first.0.size();
    if terms.iter().any(|(p, _)| p.size() != regs) {
        return Err(Error::Dimension("mixed permutation sizes".into()));
    }
    let dim = checked_pow(n, regs)?;
    let maps: Vec<Vec<usize>> = terms.iter().map(|(p, _)| basis_map(n, p)).collect::<Result<_>>()?;
    // orbit decomposition by union-find
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for map in &maps {
        for (x, &y) in map.iter().enumerate() {
            let (a, b) = (find(&mut parent, x), find(&mut parent, y));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; dim];
    let mut local = vec![0usize; dim];
    for x in 0..dim {
        let r = find(&mut parent, x);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        local[x] = blocks[slot[r]].len();
        blocks[slot[r]].push(x);
    }
    let block_of: Vec<usize> = (0..dim).map(|x| slot[find(&mut parent, x)]).collect();
    let spectra: Vec<Vec<f64>> = blocks
        .par_iter()
        .enumerate()
        .map(|(bi, members)| {
            let k = members.len();
            let mut m = DMatrix::<f64>::zeros(k, k);
            for ((_, w), map) in terms.iter().zip(&maps) {
                for &x in members {
                    let y = map[x];
                    debug_assert_eq!(block_of[y], bi);
                    m[(local[y], local[x])] += w;
                }
            }
            let sym = (&m + m.transpose()) * 0.5;
            sym.symmetric_eigenvalues().iter().copied().collect()
        })
        .collect();
    let mut out: Vec<f64> = spectra.into_iter().flatten().collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    /// min eigenvalue of Choi((1+ε)Φ_a − Φ_H)
    pub min_eig_upper: f64,
    /// min eigenvalue of Choi(Φ_H − (1−ε)Φ_a)
    pub min_eig_lower: f64,
    pub pass: bool,
}

/// Choi operators of `(1+ε)Φ_a − Φ_H` and `Φ_H − (1−ε)Φ_a` with `ε = k²/N`.
/// Both are combinations `Σ c_{πτ} P(τ) ⊗ P(π)` (input registers first), so
/// the spectrum is computed on permutation orbits.
pub fn check_sandwich(k: usize, n: usize) -> Result<SandwichReport> {
    let table = weingarten_table(k, n)?;
    let perms = table.permutations();
    let eps = (k * k) as f64 / n as f64;
    let approx = 1.0 / (n as f64).powi(k as i32);
    let terms = |upper: bool| -> Vec<(Permutation, f64)> {
        let mut out = Vec::with_capacity(perms.len() * perms.len());
        for pi in perms {
            for tau in perms {
                let haar = table.wg_pair(pi, tau);
                let a = if pi == tau { approx } else { 0.0 };
                let w = if upper { (1.0 + eps) * a - haar } else { haar - (1.0 - eps) * a };
                out.push((tau.direct_sum(pi), w));
            }
        }
        out
    };
    let min_eig_upper = permutation_combination_spectrum(n, &terms(true))?[0];
    let min_eig_lower = permutation_combination_spectrum(n, &terms(false))?[0];
    Ok(SandwichReport {
        k,
        n,
        eps,
        min_eig_upper,
        min_eig_lower,
        pass: min_eig_upper >= -1e-9 && min_eig_lower >= -1e-9,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedAdditiveEntry {
    pub n: usize,
    /// max over the input family of `TD(ρ^twirl, ρ^approx)`
    pub trace_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedAdditiveReport {
    pub k: usize,
    pub entries: Vec<MixedAdditiveEntry>,
    pub non_increasing: bool,
}

/// Pure inputs on `A ⊗ B ⊗ C` (C a qubit) used for the additive-gap check:
/// `|Ω⟩/√N ⊗ |0⟩`, `|0,0,0⟩`, `|0,1,0⟩`, and two seeded random states.
pub fn mixed_gap_inputs(n: usize, seed: u64) -> Vec<Operator> {
    let dims = vec![n, n, 2];
    let d = n * n * 2;
    let mut out = Vec::new();
    let mut omega = crate::qlinalg::CVector::zeros(d);
    for i in 0..n {
        omega[(i * n + i) * 2] = num_complex::Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    }
    out.push(omega);
    let mut zero = crate::qlinalg::CVector::zeros(d);
    zero[0] = num_complex::Complex64::new(1.0, 0.0);
    out.push(zero);
    let mut off = crate::qlinalg::CVector::zeros(d);
    off[2] = num_complex::Complex64::new(1.0, 0.0);
    out.push(off);
    for i in 0..2 {
        let mut rng = task_rng(seed, "bounds/mixed_inputs", i);
        out.push(random_pure_state(d, &mut rng));
    }
    out.into_iter()
        .map(|v| Operator::from_ket(dims.clone(), &v).expect("dims match"))
        .collect()
}

/// `TD(ρ^twirl, ρ^approx)` for the mixed twirl at order `k` over `ns`.
pub fn check_mixed_additive(k: usize, ns: &[usize], seed: u64) -> Result<MixedAdditiveReport> {
    if k != 1 {
        return domain_err("mixed additive check is implemented for k = 1 (exact mixed twirl needs 2k <= 4 with ancilla)");
    }
    let mut entries = Vec::new();
    for &n in ns {
        let mut worst: f64 = 0.0;
        for rho in mixed_gap_inputs(n, seed) {
            let exact = exact_mixed_twirl(&rho, k, n)?;
            let approx = approx_mixed_twirl(&rho, k, n)?;
            worst = worst.max(trace_distance(&exact, &approx)?);
        }
        entries.push(MixedAdditiveEntry { n, trace_distance: worst });
    }
    let non_increasing = entries.windows(2).all(|w| w[1].trace_distance <= w[0].trace_distance + 1e-12);
    Ok(MixedAdditiveReport { k, entries, non_increasing })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdenVsIndepReport {
    pub n: usize,
    pub t: usize,
    pub eps: f64,
    /// `(1+ε)²/(1−ε)`
    pub factor: f64,
    pub trials: usize,
    /// min over trials of `factor · joint − product`
    pub min_slack: f64,
    pub pass: bool,
}

/// `E_U[Tr(UρU† M)] · E_V[Tr(VσV† N)] ≤ (1+ε)²/(1−ε) · E_U[Tr((UρU† ⊗ UσU†)(M ⊗ N))]`
/// with `ε = (2t)²/N`, on random PSD operators with a qubit side register
/// on each party.
pub fn check_iden_vs_indep(n: usize, t: usize, trials: usize, seed: u64) -> Result<IdenVsIndepReport> {
    let eps = (4 * t * t) as f64 / n as f64;
    if eps >= 1.0 {
        return domain_err(format!(
            "identical-vs-independent bound needs (2t)^2 < N, got N={n}, t={t}"
        ));
    }
    if t != 1 {
        return domain_err("identical-vs-independent check is implemented for t = 1");
    }
    let factor = (1.0 + eps).powi(2) / (1.0 - eps);
    let slacks: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, "bounds/iden_vs_indep", i as u64);
            let dims = vec![n, 2];
            let rho = random_density(&dims, &mut rng)?;
            let sigma = random_density(&dims, &mut rng)?;
            let m = random_density(&dims, &mut rng)?;
            let nb = random_density(&dims, &mut rng)?;
            let a = exact_twirl_with_ancilla(&rho, &[0], 1, n)?.trace_product(&m)?.re;
            let b = exact_twirl_with_ancilla(&sigma, &[0], 1, n)?.trace_product(&nb)?.re;
            let joint_in = rho.tensor(&sigma)?;
            let joint = exact_twirl_with_ancilla(&joint_in, &[0, 2], 2, n)?
                .trace_product(&m.tensor(&nb)?)?
                .re;
            Ok(factor * joint - a * b)
        })
        .collect::<Result<_>>()?;
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(IdenVsIndepReport { n, t, eps, factor, trials, min_slack, pass: min_slack >= -1e-9 })
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdPropagationReport {
    pub dims: [usize; 3],
    pub trials: usize,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// `Tr_Y((M_XY ⊗ id_Z)(id_X ⊗ Θ_Z(ρ_YZ))) ⪰ 0` for random PSD `M`, `ρ`.
pub fn check_psd_propagation(dims: [usize; 3], trials: usize, seed: u64) -> Result<PsdPropagationReport> {
    let [dx, dy, dz] = dims;
    let min_eigenvalue = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, "bounds/psd_propagation", i as u64);
            let m = random_density(&[dx, dy], &mut rng)?;
            let rho = random_density(&[dy, dz], &mut rng)?;
            let left = m.tensor(&Operator::identity(vec![dz])?)?;
            let right = Operator::identity(vec![dx])?.tensor(&rho.partial_transpose(&[1])?)?;
            let out = left.mul(&right)?.partial_trace(&[0, 2])?;
            if !out.is_hermitian(1e-9) {
                return Err(Error::Domain("propagated operator is not Hermitian".into()));
            }
            min_eigenvalue(&out.hermitian_part())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(PsdPropagationReport { dims, trials, min_eigenvalue, pass: min_eigenvalue >= -1e-9 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permops::permutation_operator;
    use crate::qlinalg::{hermitian_eigenvalues, omega};
    use crate::weingarten::approx_twirl_with_ancilla;

    #[test]
    fn closed_form_examples() {
        assert_eq!(lp_closed_form(0.0).unwrap(), 0.5);
        assert!((lp_closed_form(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((lp_closed_form(0.1).unwrap() - (0.5 + 0.31 / 2.42)).abs() < 1e-15);
        assert!(lp_closed_form(-0.1).is_err());
    }

    #[test]
    fn lp_matches_closed_form_below_one() {
        for eps in [0.0, 0.01, 0.1, 0.5, 0.9, 1.0] {
            let s = lp_solve(eps).unwrap();
            let cf = lp_closed_form(eps).unwrap();
            assert!((s.value - cf).abs() <= 1e-9, "eps={eps}: {} vs {cf}", s.value);
        }
    }

    #[test]
    fn lp_optimal_vertex_activity() {
        let s = lp_solve(0.5).unwrap();
        assert!(s.active.contains(&"ratio p11 <= c p10".to_string()), "{:?}", s.active);
        assert!(s.active.contains(&"p01 >= 0".to_string()));
        assert!(!s.active.contains(&"ratio p01 <= c p00".to_string()));
    }

    #[test]
    fn lp_beyond_one_has_no_ratio_information() {
        let s = lp_solve(2.0).unwrap();
        assert!(!s.ratio_constraints_used);
        assert_eq!(s.value, 1.0);
        // the closed form exceeds any probability there
        assert!(lp_closed_form(2.0).unwrap() > 1.0);
    }

    #[test]
    fn falling_ratio_examples() {
        let r = falling_ratio_check(4, 1).unwrap();
        assert_eq!(r.ratio, "5/4");
        let seq: Vec<f64> = [16, 32, 64].iter().map(|&n| falling_ratio_check(n, 2).unwrap().ratio_value).collect();
        assert!(seq[0] > seq[1] && seq[1] > seq[2] && seq[2] > 1.0);
        for n in 1..20 {
            for t in 1..4 {
                assert!(falling_ratio(n, t).unwrap() >= BigRational::from_integer(1.into()));
            }
        }
    }

    #[test]
    fn product_perm_small() {
        let r = check_product_perm(2, 1, 200, 1).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_product_perm(2, 2, 50, 2).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn orbit_spectrum_matches_dense() {
        let perms = enumerate_symmetric_group(3).unwrap();
        let terms: Vec<(Permutation, f64)> = perms
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), if p.inverse() == *p { i as f64 } else { 1.5 }))
            .collect();
        let mut dense = Operator::zeros(vec![3; 3]).unwrap();
        for (p, w) in &terms {
            dense = dense.add(&permutation_operator(3, p).unwrap().scale(*w)).unwrap();
        }
        let a = permutation_combination_spectrum(3, &terms).unwrap();
        let b = hermitian_eigenvalues(&dense).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn sandwich_choi_matches_channel_route() {
        // Choi built by twirling half of |Ω⟩⟨Ω|
        for (k, n) in [(1usize, 4usize), (2, 4)] {
            let d = n.pow(k as u32);
            let om = omega(d);
            let mut dims = vec![n; k];
            dims.extend(vec![n; k]);
            let proj = Operator::from_ket(dims, &om).unwrap();
            let out_regs: Vec<usize> = (k..2 * k).collect();
            let jh = exact_twirl_with_ancilla(&proj, &out_regs, k, n).unwrap();
            let ja = approx_twirl_with_ancilla(&proj, &out_regs, k, n).unwrap();
            let eps = (k * k) as f64 / n as f64;
            let upper = ja.scale(1.0 + eps).sub(&jh).unwrap();
            let dense_min = min_eigenvalue(&upper).unwrap();
            let r = check_sandwich(k, n).unwrap();
            assert!((dense_min - r.min_eig_upper).abs() < 1e-10, "{dense_min} vs {}", r.min_eig_upper);
            let lower = jh.sub(&ja.scale(1.0 - eps)).unwrap();
            assert!((min_eigenvalue(&lower).unwrap() - r.min_eig_lower).abs() < 1e-10);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn mixed_additive_small() {
        let r = check_mixed_additive(1, &[2, 4], 1).unwrap();
        assert!(r.entries.iter().all(|e| e.trace_distance > 0.0));
        assert!(r.non_increasing, "{r:?}");
    }

    #[test]
    fn iden_vs_indep() {
        assert!(check_iden_vs_indep(3, 1, 5, 1).is_err());
        for n in [5, 8] {
            let r = check_iden_vs_indep(n, 1, 10, 3).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn psd_propagation() {
        let r = check_psd_propagation([2, 3, 2], 50, 4).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
