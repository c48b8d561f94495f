use super::{c, check_budget, spectral, CMatrix, CVector, Operator, C64};
use crate::error::{dim_err, Result};

/// A linear map `X ↦ Σ_a L_a X R_a†`. Completely positive when every
/// `R_a = L_a`; general pairs also cover differences of channels.
#[derive(Clone, Debug)]
pub struct Channel {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    terms: Vec<(CMatrix, CMatrix)>,
}

impl Channel {
    pub fn new(
        input_dims: Vec<usize>,
        output_dims: Vec<usize>,
        terms: Vec<(CMatrix, CMatrix)>,
    ) -> Result<Self> {
        let din: usize = input_dims.iter().product();
        let dout: usize = output_dims.iter().product();
        for (i, (l, r)) in terms.iter().enumerate() {
            for m in [l, r] {
                if m.nrows() != dout || m.ncols() != din {
                    return dim_err(format!(
                        "term {i} is {}x{}, expected {dout}x{din}",
                        m.nrows(),
                        m.ncols()
                    ));
                }
            }
        }
        Ok(Channel {
            input_dims,
            output_dims,
            terms,
        })
    }

    /// Kraus form `X ↦ Σ K X K†`.
    pub fn from_kraus(input_dims: Vec<usize>, output_dims: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        Self::new(
            input_dims,
            output_dims,
            kraus.into_iter().map(|k| (k.clone(), k)).collect(),
        )
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        Self::from_kraus(dims.clone(), dims, vec![CMatrix::identity(d, d)])
    }

    pub fn unitary(u: &Operator) -> Result<Self> {
        Self::from_kraus(u.dims().to_vec(), u.dims().to_vec(), vec![u.matrix().clone()])
    }

    /// `X ↦ Tr(X)·I/d`.
    pub fn completely_depolarizing(dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        let s = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = CMatrix::zeros(d, d);
                k[(i, j)] = c(s, 0.0);
                kraus.push(k);
            }
        }
        Self::from_kraus(dims.clone(), dims, kraus)
    }

    /// Rebuilds a Hermiticity-preserving map from its (unnormalized, input
    /// first) Choi matrix through the spectral decomposition.
    pub fn from_choi(choi: &Operator, input_dims: Vec<usize>, output_dims: Vec<usize>) -> Result<Self> {
        let din: usize = input_dims.iter().product();
        let dout: usize = output_dims.iter().product();
        if choi.dim() != din * dout {
            return dim_err(format!(
                "Choi of side {} does not match {din}x{dout}",
                choi.dim()
            ));
        }
        let eig = choi.hermitian_part().into_matrix().symmetric_eigen();
        let mut terms = Vec::new();
        for (a, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(a);
            // v[(i, o)] = K[o, i]
            let k = CMatrix::from_fn(dout, din, |o, i| v[i * dout + o]);
            terms.push((&k * c(lambda, 0.0), k));
        }
        Self::new(input_dims, output_dims, terms)
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn input_dim(&self) -> usize {
        self.input_dims.iter().product()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dims.iter().product()
    }

    pub fn terms(&self) -> &[(CMatrix, CMatrix)] {
        &self.terms
    }

    /// `Σ_i w_i Φ_i` over channels with equal dims.
    pub fn linear_combination(parts: &[(f64, &Channel)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return dim_err("empty linear combination");
        };
        let mut terms = Vec::new();
        for (w, ch) in parts {
            if ch.input_dims != first.input_dims || ch.output_dims != first.output_dims {
                return dim_err("linear combination of channels with different dims");
            }
            for (l, r) in &ch.terms {
                terms.push((l * c(*w, 0.0), r.clone()));
            }
        }
        Self::new(first.input_dims.clone(), first.output_dims.clone(), terms)
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.input_dim() {
            return dim_err(format!(
                "channel input {} vs operator {}",
                self.input_dim(),
                x.dim()
            ));
        }
        let d = self.output_dim();
        let mut out = CMatrix::zeros(d, d);
        for (l, r) in &self.terms {
            out += l * x.matrix() * r.adjoint();
        }
        Operator::new(self.output_dims.clone(), out)
    }

    /// Matrix `S` with `vec(Φ(X)) = S·vec(X)` for row-major `vec`.
    pub fn superoperator(&self) -> Result<CMatrix> {
        let side = self.input_dim() * self.output_dim();
        check_budget("superoperator", side)?;
        let (din, dout) = (self.input_dim(), self.output_dim());
        let mut s = CMatrix::zeros(dout * dout, din * din);
        for (l, r) in &self.terms {
            s += l.kronecker(&r.map(|z| z.conj()));
        }
        Ok(s)
    }

    pub fn apply_superoperator(&self, x: &Operator) -> Result<Operator> {
        let s = self.superoperator()?;
        let din = self.input_dim();
        let v = CVector::from_fn(din * din, |k, _| x.get(k / din, k % din));
        let w = s * v;
        let dout = self.output_dim();
        Operator::new(
            self.output_dims.clone(),
            CMatrix::from_fn(dout, dout, |i, j| w[i * dout + j]),
        )
    }

    /// Unnormalized Choi matrix `(id ⊗ Φ)(|Ω⟩⟨Ω|)`, input register first.
    pub fn choi(&self) -> Result<Operator> {
        let (din, dout) = (self.input_dim(), self.output_dim());
        check_budget("Choi matrix", din * dout)?;
        let mut j = CMatrix::zeros(din * dout, din * dout);
        for (l, r) in &self.terms {
            let vl = CVector::from_fn(din * dout, |k, _| l[(k % dout, k / dout)]);
            let vr = CVector::from_fn(din * dout, |k, _| r[(k % dout, k / dout)]);
            j += &vl * vr.adjoint();
        }
        let mut dims = self.input_dims.clone();
        dims.extend(&self.output_dims);
        Operator::new(dims, j)
    }
}

/// Choi-matrix bounds on `‖c0 − c1‖_◇`: `((1/d)‖J0−J1‖₁, ‖J0−J1‖₁)`.
pub fn diamond_distance_bounds(c0: &Channel, c1: &Channel) -> Result<(f64, f64)> {
    if c0.input_dims != c1.input_dims || c0.output_dims != c1.output_dims {
        return dim_err("diamond_distance_bounds: channel dims differ");
    }
    let j = c0.choi()?.sub(&c1.choi()?)?;
    let norm = spectral::trace_norm(&j);
    Ok((norm / c0.input_dim() as f64, norm))
}

/// Exact `‖E_U − E_V‖_◇` for unitary channels: `2·sqrt(1 − r²)` where `r`
/// is the distance from the origin to the convex hull of the spectrum of
/// `U†V`.
pub fn unitary_diamond_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return dim_err("unitary_diamond_distance: shape mismatch");
    }
    let w = u.adjoint() * v;
    let eig = w
        .schur()
        .eigenvalues()
        .ok_or_else(|| crate::error::Error::Domain("Schur form did not converge".into()))?;
    let mut angles: Vec<f64> = eig.iter().map(|z: &C64| z.arg()).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let two_pi = std::f64::consts::TAU;
    let mut largest_gap: f64 = 0.0;
    for i in 0..angles.len() {
        let next = if i + 1 < angles.len() {
            angles[i + 1]
        } else {
            angles[0] + two_pi
        };
        largest_gap = largest_gap.max(next - angles[i]);
    }
    let arc = two_pi - largest_gap;
    if arc >= std::f64::consts::PI {
        return Ok(2.0);
    }
    Ok(2.0 * (arc / 2.0).sin())
}
