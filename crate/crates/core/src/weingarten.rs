//! Haar moment calculus: Weingarten tables from Gram-matrix inversion, the
//! exact and approximate `k`-fold twirls, the mixed `U^{⊗k} ⊗ U^{†⊗k}`
//! twirl, and Monte Carlo oracles for all of them.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::permops::{basis_map, checked_pow, enumerate_symmetric_group, Permutation};
use crate::qlinalg::{c, check_budget, haar_unitary, CMatrix, Operator, C64};
use crate::seeds::{par_chunks, task_rng, TaskRng};

pub const MAX_ORDER: usize = 6;

/// `Wg(π, N)` for every `π ∈ Sym_k`, with the Gram matrix it came from.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    k: usize,
    n: usize,
    perms: Vec<Permutation>,
    values: Vec<f64>,
    gram: DMatrix<f64>,
}

impl WeingartenTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Sym_k` in lexicographic order; also the row order of the Gram matrix.
    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn wg(&self, p: &Permutation) -> f64 {
        self.values[p.lex_rank()]
    }

    /// `Wg(π, τ, N) = Wg(π⁻¹τ, N)`.
    pub fn wg_pair(&self, pi: &Permutation, tau: &Permutation) -> f64 {
        let pinv = pi.inverse();
        let rel: Vec<usize> = tau.zero_based().iter().map(|&i| pinv.zero_based()[i]).collect();
        self.values[Permutation::from_zero_based(rel).lex_rank()]
    }

    /// Largest `|Σ_τ G[π,τ] Wg(τ) − [π = id]|`.
    pub fn residual(&self) -> f64 {
        let g = &self.gram * DMatrix::from_column_slice(self.values.len(), 1, &self.values);
        (0..self.values.len())
            .map(|i| (g[(i, 0)] - if i == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

fn relative(pi: &Permutation, tau_inv: &Permutation) -> Permutation {
    Permutation::from_zero_based(
        tau_inv
            .zero_based()
            .iter()
            .map(|&i| pi.zero_based()[i])
            .collect(),
    )
}

/// Solves `G·wg = e_id` with `G[π,τ] = N^{#cycles(πτ⁻¹)}`; Moore–Penrose
/// pseudo-inverse when `N < k` makes `G` singular.
pub fn weingarten_table(k: usize, n: usize) -> Result<WeingartenTable> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::SizeLimit {
            what: format!("Weingarten order {k}"),
            requested: k as u128,
            limit: MAX_ORDER as u128,
        });
    }
    if n == 0 {
        return Err(Error::Domain("Weingarten table needs N >= 1".into()));
    }
    let perms = enumerate_symmetric_group(k)?;
    let m = perms.len();
    let inverses: Vec<Permutation> = perms.iter().map(|p| p.inverse()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| {
        (n as f64).powi(relative(&perms[i], &inverses[j]).cycle_count() as i32)
    });
    let mut rhs = DMatrix::zeros(m, 1);
    rhs[(0, 0)] = 1.0;
    let solution = if n >= k {
        let chol = gram.clone().cholesky().ok_or_else(|| {
            Error::Domain(format!("Gram matrix for k={k}, N={n} not positive definite"))
        })?;
        chol.solve(&rhs)
    } else {
        let scale = gram.amax();
        let pinv = gram
            .clone()
            .pseudo_inverse(1e-10 * scale)
            .map_err(|e| Error::Domain(e.to_string()))?;
        pinv * rhs
    };
    Ok(WeingartenTable {
        k,
        n,
        perms,
        values: solution.column(0).iter().copied().collect(),
        gram,
    })
}

/// `Σ_{π,τ} coeff[π][τ] · P(π)_A ⊗ Tr_A((P(τ)ᵀ ⊗ id) ρ)` where `A` is the
/// ordered register list `twirled`, each of dimension `n`, and the
/// permutations act on those registers.
fn permutation_sum(
    rho: &Operator,
    twirled: &[usize],
    n: usize,
    perms: &[Permutation],
    coeff: &DMatrix<f64>,
) -> Result<Operator> {
    let dims = rho.dims().to_vec();
    let r = dims.len();
    if twirled.iter().any(|&t| t >= r || dims[t] != n) {
        return dim_err(format!(
            "twirled registers {twirled:?} must have dimension {n} in {dims:?}"
        ));
    }
    let mut uniq = twirled.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != twirled.len() {
        return Err(Error::Index(format!("repeated register in {twirled:?}")));
    }
    let mut order = twirled.to_vec();
    order.extend((0..r).filter(|i| !twirled.contains(i)));
    let moved = rho.permute_subsystems(&order)?;
    let m = twirled.len();
    let da = checked_pow(n, m)?;
    let db = moved.dim() / da;
    let rm = moved.matrix();

    // C_τ[b,b'] = Σ_y ρ[(y,b),(τ⁻¹·y,b')]
    let partials: Vec<CMatrix> = perms
        .par_iter()
        .map(|tau| {
            let map = basis_map(n, &tau.inverse()).expect("checked size");
            let mut ct = CMatrix::zeros(db, db);
            for (y, &ty) in map.iter().enumerate() {
                for bp in 0..db {
                    for b in 0..db {
                        ct[(b, bp)] += rm[(y * db + b, ty * db + bp)];
                    }
                }
            }
            ct
        })
        .collect();

    let blocks: Vec<(Vec<usize>, CMatrix)> = perms
        .par_iter()
        .enumerate()
        .filter_map(|(i, pi)| {
            let mut d = CMatrix::zeros(db, db);
            let mut any = false;
            for (j, ct) in partials.iter().enumerate() {
                let w = coeff[(i, j)];
                if w != 0.0 {
                    d += ct * c(w, 0.0);
                    any = true;
                }
            }
            any.then(|| (basis_map(n, pi).expect("checked size"), d))
        })
        .collect();

    let mut out = CMatrix::zeros(moved.dim(), moved.dim());
    for (map, d) in &blocks {
        for (y, &py) in map.iter().enumerate() {
            for bp in 0..db {
                for b in 0..db {
                    out[(py * db + b, y * db + bp)] += d[(b, bp)];
                }
            }
        }
    }
    let mut back = vec![0usize; r];
    for (pos, &o) in order.iter().enumerate() {
        back[o] = pos;
    }
    let moved_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    Operator::new(moved_dims, out)?
        .permute_subsystems(&back)
        .map(|op| op.hermitian_part())
}

fn check_plain(rho: &Operator, regs: usize, n: usize) -> Result<()> {
    if rho.dims() != vec![n; regs].as_slice() {
        return dim_err(format!(
            "expected dims {:?}, got {:?}",
            vec![n; regs],
            rho.dims()
        ));
    }
    Ok(())
}

/// `E_U[U^{⊗k} ρ U^{†⊗k}]` for `ρ` on `(C^N)^{⊗k}`.
pub fn exact_twirl(rho: &Operator, k: usize, n: usize) -> Result<Operator> {
    check_plain(rho, k, n)?;
    exact_twirl_with_ancilla(rho, &(0..k).collect::<Vec<_>>(), k, n)
}

/// Twirl on the registers `twirled` (in that order), identity elsewhere.
pub fn exact_twirl_with_ancilla(
    rho: &Operator,
    twirled: &[usize],
    k: usize,
    n: usize,
) -> Result<Operator> {
    if twirled.len() != k {
        return dim_err(format!("{} twirled registers for order {k}", twirled.len()));
    }
    let table = weingarten_table(k, n)?;
    let perms = table.permutations();
    let coeff = DMatrix::from_fn(perms.len(), perms.len(), |i, j| {
        table.wg_pair(&perms[i], &perms[j])
    });
    permutation_sum(rho, twirled, n, perms, &coeff)
}

/// `N^{-k} Σ_π Tr(P(π)ᵀ ρ) P(π)`; not trace preserving.
pub fn approx_twirl(rho: &Operator, k: usize, n: usize) -> Result<Operator> {
    check_plain(rho, k, n)?;
    approx_twirl_with_ancilla(rho, &(0..k).collect::<Vec<_>>(), k, n)
}

pub fn approx_twirl_with_ancilla(
    rho: &Operator,
    twirled: &[usize],
    k: usize,
    n: usize,
) -> Result<Operator> {
    if twirled.len() != k {
        return dim_err(format!("{} twirled registers for order {k}", twirled.len()));
    }
    let perms = enumerate_symmetric_group(k)?;
    let scale = (n as f64).powi(-(k as i32));
    let coeff = DMatrix::from_fn(perms.len(), perms.len(), |i, j| {
        if i == j {
            scale
        } else {
            0.0
        }
    });
    permutation_sum(rho, twirled, n, &perms, &coeff)
}

fn check_mixed(rho: &Operator, k: usize, n: usize) -> Result<()> {
    if k == 0 || 2 * k > 4 {
        return Err(Error::SizeLimit {
            what: format!("mixed twirl of order {k}"),
            requested: k as u128,
            limit: 2,
        });
    }
    let dims = rho.dims();
    if dims.len() < 2 * k || dims[..2 * k].iter().any(|&d| d != n) {
        return dim_err(format!(
            "mixed twirl needs {} leading registers of dimension {n}, got {dims:?}",
            2 * k
        ));
    }
    Ok(())
}

/// `E_U[(U^{⊗k} ⊗ U^{†⊗k}) ρ (U^{⊗k} ⊗ U^{†⊗k})†]`. Registers `0..k` see
/// `U`, registers `k..2k` see `U†`, anything after is untouched ancilla.
///
/// Evaluated by the degree-`2k` moment formula
/// `E[Π U_{i_m j_m} Π Ū_{i'_m j'_m}] = Σ_{σ,τ} Π δ(i_m, i'_{σ(m)}) δ(j_m, j'_{τ(m)}) Wg(στ⁻¹)`.
pub fn exact_mixed_twirl(rho: &Operator, k: usize, n: usize) -> Result<Operator> {
    check_mixed(rho, k, n)?;
    let deg = 2 * k;
    let table = weingarten_table(deg, n)?;
    let perms = table.permutations().to_vec();
    let dims = rho.dims();
    let dc: usize = dims[deg..].iter().product();
    let side = rho.dim();
    // stride of main register r inside the full index (ancilla last)
    let reg_stride = |r: usize| checked_pow(n, deg - 1 - r).unwrap() * dc;

    // (target, stride) with target 0 = output row, 1 = output column,
    // 2 = input row, 3 = input column.
    let u_row = |m: usize| if m < k { (0, reg_stride(m)) } else { (3, reg_stride(m)) };
    let ubar_row = |m: usize| if m < k { (2, reg_stride(k + m)) } else { (1, reg_stride(m - k)) };
    let u_col = |m: usize| if m < k { (2, reg_stride(m)) } else { (1, reg_stride(m)) };
    let ubar_col = |m: usize| if m < k { (0, reg_stride(k + m)) } else { (3, reg_stride(m - k)) };

    let rm = rho.matrix();
    let total = checked_pow(n, 2 * deg)?;
    let partials: Vec<CMatrix> = perms
        .par_iter()
        .map(|sigma| {
            let mut out = CMatrix::zeros(side, side);
            for tau in &perms {
                // Wg(στ⁻¹)
                let w = table.wg(&relative(sigma, &tau.inverse()));
                if w == 0.0 {
                    continue;
                }
                let mut contrib = Vec::with_capacity(2 * deg);
                for m in 0..deg {
                    let mut s = [0usize; 4];
                    let (a, x) = u_row(m);
                    s[a] += x;
                    let (b, y) = ubar_row(sigma.zero_based()[m]);
                    s[b] += y;
                    contrib.push(s);
                }
                for m in 0..deg {
                    let mut s = [0usize; 4];
                    let (a, x) = u_col(m);
                    s[a] += x;
                    let (b, y) = ubar_col(tau.zero_based()[m]);
                    s[b] += y;
                    contrib.push(s);
                }
                let wc = c(w, 0.0);
                let mut digits = vec![0usize; contrib.len()];
                let mut idx = [0usize; 4];
                for _ in 0..total {
                    for e in 0..dc {
                        for ep in 0..dc {
                            out[(idx[0] + e, idx[1] + ep)] += wc * rm[(idx[2] + e, idx[3] + ep)];
                        }
                    }
                    for v in (0..contrib.len()).rev() {
                        digits[v] += 1;
                        for (slot, s) in idx.iter_mut().zip(contrib[v]) {
                            *slot += s;
                        }
                        if digits[v] < n {
                            break;
                        }
                        digits[v] = 0;
                        for (slot, s) in idx.iter_mut().zip(contrib[v]) {
                            *slot -= n * s;
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut out = CMatrix::zeros(side, side);
    for p in &partials {
        out += p;
    }
    Ok(Operator::new(dims.to_vec(), out)?.hermitian_part())
}

/// `N^{-2k} Σ_{π,τ} P(π)_A ⊗ P(τ)_B ⊗ Tr_AB((P(π)ᵀ ⊗ P(τ)ᵀ) ρ)`.
pub fn approx_mixed_twirl(rho: &Operator, k: usize, n: usize) -> Result<Operator> {
    check_mixed(rho, k, n)?;
    let sym = enumerate_symmetric_group(k)?;
    let mut perms = Vec::with_capacity(sym.len() * sym.len());
    for a in &sym {
        for b in &sym {
            perms.push(a.direct_sum(b));
        }
    }
    let scale = (n as f64).powi(-(2 * k as i32));
    let coeff = DMatrix::from_fn(perms.len(), perms.len(), |i, j| {
        if i == j {
            scale
        } else {
            0.0
        }
    });
    permutation_sum(rho, &(0..2 * k).collect::<Vec<_>>(), n, &perms, &coeff)
}

/// `E_{ψ∼Haar} |ψ⟩⟨ψ|^{⊗t} = Σ_{π ∈ Sym_t} P_N(π) / (N+t−1)^{↓t}`.
pub fn symmetric_average_state(n: usize, t: usize) -> Result<Operator> {
    let dim = checked_pow(n, t)?;
    check_budget("symmetric average state", dim)?;
    let perms = enumerate_symmetric_group(t)?;
    let norm = crate::permops::falling_factorial_f64(n + t - 1, t);
    let w = c(1.0 / norm, 0.0);
    let mut op = Operator::zeros(vec![n; t])?;
    for p in &perms {
        for (x, &y) in basis_map(n, p)?.iter().enumerate() {
            let v = op.get(y, x) + w;
            op.set(y, x, v);
        }
    }
    Ok(op)
}

/// Empirical mean of a random operator with per-entry standard errors of the
/// real and imaginary parts.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub mean: Operator,
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
    pub shots: usize,
}

/// Entrywise comparison against an exact value.
#[derive(Clone, Debug, Serialize)]
pub struct McComparison {
    /// Largest `|deviation| / stderr` over entries with nonzero spread.
    pub max_z: f64,
    /// Largest deviation on entries whose samples never varied.
    pub max_fixed_dev: f64,
    pub pass: bool,
}

impl McEstimate {
    /// Passes when every entry is within `sigmas` standard errors, with
    /// `floor` as absolute slack for entries that are constant across shots.
    pub fn compare(&self, exact: &Operator, sigmas: f64, floor: f64) -> Result<McComparison> {
        if exact.dim() != self.mean.dim() {
            return dim_err("McEstimate::compare: dimension mismatch");
        }
        let d = exact.dim();
        let (mut max_z, mut max_fixed, mut pass): (f64, f64, bool) = (0.0, 0.0, true);
        for i in 0..d {
            for j in 0..d {
                let dev = self.mean.get(i, j) - exact.get(i, j);
                for (delta, se) in [
                    (dev.re.abs(), self.stderr_re[(i, j)]),
                    (dev.im.abs(), self.stderr_im[(i, j)]),
                ] {
                    if se > floor {
                        max_z = max_z.max(delta / se);
                        pass &= delta <= sigmas * se + floor;
                    } else {
                        max_fixed = max_fixed.max(delta);
                        pass &= delta <= floor;
                    }
                }
            }
        }
        Ok(McComparison {
            max_z,
            max_fixed_dev: max_fixed,
            pass,
        })
    }
}

const MC_CHUNK: usize = 512;

fn monte_carlo<F>(rho: &Operator, shots: usize, seed: u64, domain: &str, sample: F) -> Result<McEstimate>
where
    F: Fn(&mut TaskRng) -> Result<Operator> + Sync,
{
    if shots == 0 {
        return Err(Error::Domain("Monte Carlo needs shots >= 1".into()));
    }
    let d = rho.dim();
    let chunks = par_chunks(shots, MC_CHUNK, |range| -> Result<_> {
        let mut sum = CMatrix::zeros(d, d);
        let mut sq_re = DMatrix::<f64>::zeros(d, d);
        let mut sq_im = DMatrix::<f64>::zeros(d, d);
        for shot in range {
            let mut rng = task_rng(seed, domain, shot as u64);
            let x = sample(&mut rng)?;
            for (idx, z) in x.matrix().iter().enumerate() {
                sum[idx] += z;
                sq_re[idx] += z.re * z.re;
                sq_im[idx] += z.im * z.im;
            }
        }
        Ok((sum, sq_re, sq_im))
    });
    let mut sum = CMatrix::zeros(d, d);
    let mut sq_re = DMatrix::<f64>::zeros(d, d);
    let mut sq_im = DMatrix::<f64>::zeros(d, d);
    for ch in chunks {
        let (s, r, i) = ch?;
        sum += s;
        sq_re += r;
        sq_im += i;
    }
    let nf = shots as f64;
    let mean = &sum / c(nf, 0.0);
    let se = |sq: &DMatrix<f64>, part: fn(&C64) -> f64| {
        DMatrix::from_fn(d, d, |i, j| {
            let m = part(&mean[(i, j)]);
            if shots < 2 {
                return 0.0;
            }
            let var = (sq[(i, j)] / nf - m * m).max(0.0) * nf / (nf - 1.0);
            (var / nf).sqrt()
        })
    };
    let stderr_re = se(&sq_re, |z| z.re);
    let stderr_im = se(&sq_im, |z| z.im);
    Ok(McEstimate {
        mean: Operator::new(rho.dims().to_vec(), mean)?.hermitian_part(),
        stderr_re,
        stderr_im,
        shots,
    })
}

/// Monte Carlo `E[U^{⊗k} ρ U^{†⊗k}]` with unitaries drawn by `sampler`.
pub fn mc_twirl_with<S>(
    rho: &Operator,
    k: usize,
    n: usize,
    shots: usize,
    seed: u64,
    sampler: S,
) -> Result<McEstimate>
where
    S: Fn(&mut TaskRng) -> CMatrix + Sync,
{
    check_plain(rho, k, n)?;
    monte_carlo(rho, shots, seed, "mc-twirl", |rng| {
        let u = sampler(rng);
        let mut x = rho.clone();
        for r in 0..k {
            x = x.conjugate_subsystem(r, &u)?;
        }
        Ok(x)
    })
}

pub fn mc_twirl(rho: &Operator, k: usize, n: usize, shots: usize, seed: u64) -> Result<McEstimate> {
    mc_twirl_with(rho, k, n, shots, seed, |rng| haar_unitary(n, rng))
}

/// Monte Carlo mixed twirl, same register convention as
/// [`exact_mixed_twirl`].
pub fn mc_mixed_twirl_with<S>(
    rho: &Operator,
    k: usize,
    n: usize,
    shots: usize,
    seed: u64,
    sampler: S,
) -> Result<McEstimate>
where
    S: Fn(&mut TaskRng) -> CMatrix + Sync,
{
    check_mixed(rho, k, n)?;
    monte_carlo(rho, shots, seed, "mc-mixed-twirl", |rng| {
        let u = sampler(rng);
        let ud = u.adjoint();
        let mut x = rho.clone();
        for r in 0..k {
            x = x.conjugate_subsystem(r, &u)?;
            x = x.conjugate_subsystem(k + r, &ud)?;
        }
        Ok(x)
    })
}

pub fn mc_mixed_twirl(rho: &Operator, k: usize, n: usize, shots: usize, seed: u64) -> Result<McEstimate> {
    mc_mixed_twirl_with(rho, k, n, shots, seed, |rng| haar_unitary(n, rng))
}

/// Monte Carlo `E |ψ⟩⟨ψ|^{⊗t}` over Haar-random states `U|0⟩`.
pub fn mc_symmetric_average(n: usize, t: usize, shots: usize, seed: u64) -> Result<McEstimate> {
    let zero = Operator::zeros(vec![n; t])?;
    monte_carlo(&zero, shots, seed, "mc-sym-average", |rng: &mut TaskRng| {
        let u = haar_unitary(n, rng);
        let psi = crate::qlinalg::CVector::from_fn(n, |i, _| u[(i, 0)]);
        let mut v = psi.clone();
        for _ in 1..t {
            v = v.kronecker(&psi);
        }
        Operator::from_ket(vec![n; t], &v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permops::permutation_operator;
    use crate::qlinalg::{max_abs, omega, random_density, random_pure_state, tensor, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn swap(n: usize) -> Operator {
        permutation_operator(n, &Permutation::transposition(2, 1, 2).unwrap()).unwrap()
    }

    #[test]
    fn table_examples() {
        for n in 1..6 {
            let t = weingarten_table(1, n).unwrap();
            assert!((t.values()[0] - 1.0 / n as f64).abs() < 1e-15);
        }
        let t = weingarten_table(2, 3).unwrap();
        assert!((t.values()[0] - 1.0 / 8.0).abs() < 1e-14);
        assert!((t.values()[1] + 1.0 / 24.0).abs() < 1e-14);
        assert!(t.residual() < 1e-12);
        assert!(weingarten_table(7, 3).is_err());
    }

    #[test]
    fn table_below_threshold_uses_pseudo_inverse() {
        // N = 2 < k = 3: the Gram matrix has a kernel; the table still
        // reproduces the twirl of a symmetric input.
        let t = weingarten_table(3, 2).unwrap();
        assert!(t.values().iter().all(|v| v.is_finite()));
        let z = Operator::basis_projector(vec![2, 2, 2], 0).unwrap();
        let tw = exact_twirl(&z, 3, 2).unwrap();
        let want = symmetric_average_state(2, 3).unwrap();
        assert!(tw.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn gram_is_symmetric_psd() {
        for (k, n) in [(2, 2), (3, 2), (3, 4), (4, 3)] {
            let g = weingarten_table(k, n).unwrap().gram().clone();
            assert_eq!(g, g.transpose());
            let min = g.symmetric_eigenvalues().min();
            assert!(min >= -1e-9 * g.amax(), "{k} {n} {min}");
        }
    }

    #[test]
    fn twirl_k1_is_depolarizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&[4], &mut rng).unwrap();
        let tw = exact_twirl(&rho, 1, 4).unwrap();
        let want = Operator::identity(vec![4]).unwrap().scale(0.25);
        assert!(tw.max_abs_diff(&want).unwrap() < 1e-15);
        let ap = approx_twirl(&rho, 1, 4).unwrap();
        assert!(ap.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn twirl_of_product_zero_state() {
        let z = Operator::basis_projector(vec![2, 2], 0).unwrap();
        let tw = exact_twirl(&z, 2, 2).unwrap();
        let want = Operator::identity(vec![2, 2])
            .unwrap()
            .add(&swap(2))
            .unwrap()
            .scale(1.0 / 6.0);
        assert!(tw.max_abs_diff(&want).unwrap() < 1e-14);
        assert!(tw.max_abs_diff(&symmetric_average_state(2, 2).unwrap()).unwrap() < 1e-14);
    }

    #[test]
    fn twirl_matches_monte_carlo_k2() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&[2, 2], &mut rng).unwrap();
        let exact = exact_twirl(&rho, 2, 2).unwrap();
        let mc = mc_twirl(&rho, 2, 2, 20_000, 5).unwrap();
        let cmp = mc.compare(&exact, 5.0, 1e-12).unwrap();
        assert!(cmp.pass, "{cmp:?}");
    }

    #[test]
    fn injected_identity_gives_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&[3, 3], &mut rng).unwrap();
        let mc = mc_twirl_with(&rho, 2, 3, 1, 0, |_| CMatrix::identity(3, 3)).unwrap();
        assert!(mc.mean.max_abs_diff(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn ancilla_variant_reduces_and_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&[3, 3], &mut rng).unwrap();
        let sigma = random_density(&[2], &mut rng).unwrap();
        let joint = tensor(&rho, &sigma).unwrap();
        let out = exact_twirl_with_ancilla(&joint, &[0, 1], 2, 3).unwrap();
        let want = tensor(&exact_twirl(&rho, 2, 3).unwrap(), &sigma).unwrap();
        assert!(out.max_abs_diff(&want).unwrap() < 1e-14);
        // ancilla placed first, registers out of order
        let joint2 = tensor(&sigma, &rho).unwrap();
        let out2 = exact_twirl_with_ancilla(&joint2, &[2, 1], 2, 3).unwrap();
        let swapped = rho.permute_subsystems(&[1, 0]).unwrap();
        let tw = exact_twirl(&swapped, 2, 3).unwrap().permute_subsystems(&[1, 0]).unwrap();
        let want2 = tensor(&sigma, &tw).unwrap();
        assert!(out2.max_abs_diff(&want2).unwrap() < 1e-14);
        // trivial ancilla
        let one = Operator::identity(vec![1]).unwrap();
        let with_one = tensor(&rho, &one).unwrap();
        let o = exact_twirl_with_ancilla(&with_one, &[0, 1], 2, 3).unwrap();
        assert!(max_abs(&(o.matrix() - exact_twirl(&rho, 2, 3).unwrap().matrix())) < 1e-15);
    }

    #[test]
    fn entangled_ancilla_k1() {
        let om = Operator::from_ket(vec![2, 2], &omega(2)).unwrap().scale(0.5);
        let out = exact_twirl_with_ancilla(&om, &[0], 1, 2).unwrap();
        let reduced = out.partial_trace(&[0]).unwrap();
        let want = Operator::identity(vec![2]).unwrap().scale(0.5);
        assert!(reduced.max_abs_diff(&want).unwrap() < 1e-15);
        // in fact the whole output is maximally mixed
        let full = Operator::identity(vec![2, 2]).unwrap().scale(0.25);
        assert!(out.max_abs_diff(&full).unwrap() < 1e-15);
    }

    #[test]
    fn approx_twirl_trace_defect() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_pure_state(2, &mut rng);
        let b = random_pure_state(2, &mut rng);
        let rho = Operator::from_ket(vec![2, 2], &a.kronecker(&b)).unwrap();
        let ap = approx_twirl(&rho, 2, 2).unwrap();
        let sw = swap(2);
        // Tr P(swap) = N, so the defect is Tr(P(swap)ᵀρ)/N
        let want = 1.0 + sw.transpose().trace_product(&rho).unwrap().re / 2.0;
        assert!((ap.trace().re - want).abs() < 1e-14);
        assert!((ap.trace().re - 1.0).abs() > 1e-3);
    }

    #[test]
    fn mixed_twirl_against_monte_carlo() {
        let z = Operator::basis_projector(vec![2, 2], 0).unwrap();
        let exact = exact_mixed_twirl(&z, 1, 2).unwrap();
        let mc = mc_mixed_twirl(&z, 1, 2, 20_000, 9).unwrap();
        assert!(mc.compare(&exact, 5.0, 1e-12).unwrap().pass);
        assert!((exact.trace().re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mixed_twirl_of_omega_is_not_fixed() {
        // U ⊗ U† sends Σ|ii⟩ to vec(U·Ū), which is not invariant; the
        // twirl still agrees with sampling.
        for n in [2, 3] {
            let om = Operator::from_ket(vec![n, n], &omega(n)).unwrap().scale(1.0 / n as f64);
            let exact = exact_mixed_twirl(&om, 1, n).unwrap();
            let mc = mc_mixed_twirl(&om, 1, n, 20_000, 10).unwrap();
            assert!(mc.compare(&exact, 5.0, 1e-12).unwrap().pass, "N={n}");
            assert!(trace_distance(&exact, &om).unwrap() > 0.1);
        }
    }

    #[test]
    fn mixed_twirl_with_ancilla_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(&[2, 2, 2], &mut rng).unwrap();
        let exact = exact_mixed_twirl(&rho, 1, 2).unwrap();
        let mc = mc_mixed_twirl(&rho, 1, 2, 20_000, 12).unwrap();
        assert!(mc.compare(&exact, 5.0, 1e-12).unwrap().pass);
    }

    #[test]
    fn plain_twirl_via_contraction_engine() {
        // U on register 0 and U† on register 1 of ρ ⊗ ancilla; tracing the
        // second register of ρ⊗I/2 leaves the ordinary k = 1 twirl.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(&[3, 3], &mut rng).unwrap();
        let exact = exact_mixed_twirl(&rho, 1, 3).unwrap();
        let reduced = exact.partial_trace(&[0]).unwrap();
        let want = Operator::identity(vec![3]).unwrap().scale(1.0 / 3.0);
        assert!(reduced.max_abs_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn approx_mixed_examples() {
        let mixed = Operator::identity(vec![3, 3]).unwrap().scale(1.0 / 9.0);
        let out = approx_mixed_twirl(&mixed, 1, 3).unwrap();
        assert!(out.max_abs_diff(&mixed).unwrap() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rho = random_density(&[2, 2, 2, 2], &mut rng).unwrap();
        let out = approx_mixed_twirl(&rho, 2, 2).unwrap();
        assert!(out.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn symmetric_average_examples() {
        let s1 = symmetric_average_state(5, 1).unwrap();
        assert!(s1.max_abs_diff(&Operator::identity(vec![5]).unwrap().scale(0.2)).unwrap() < 1e-15);
        let s2 = symmetric_average_state(2, 2).unwrap();
        let want = Operator::identity(vec![2, 2])
            .unwrap()
            .add(&swap(2))
            .unwrap()
            .scale(1.0 / 6.0);
        assert!(s2.max_abs_diff(&want).unwrap() < 1e-15);
        let rank = crate::qlinalg::hermitian_eigenvalues(&s2)
            .unwrap()
            .iter()
            .filter(|l| l.abs() > 1e-12)
            .count();
        assert_eq!(rank, 3);
        let s3 = symmetric_average_state(3, 3).unwrap();
        assert!((s3.trace().re - 1.0).abs() < 1e-13);
        let mc = mc_symmetric_average(2, 2, 20_000, 3).unwrap();
        assert!(mc.compare(&s2, 5.0, 1e-12).unwrap().pass);
    }
}
