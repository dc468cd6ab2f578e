//! Lindblad models, their Liouvillians and the composite Hamiltonian.
//!
//! Density matrices are vectorized row-major: entry `(m, n)` of a `d x d`
//! matrix sits at `m * d + n`, so `(A ⊗ B) vec(ρ) = vec(A ρ Bᵀ)`.

use faer::Mat;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{
    self, block_eigenvalues, check_square, cmp_complex, eig_biortho, similarity_factor,
    BiorthoEigensystem, ComplexMatrix, C64, EIG_TOL, I, ZERO,
};

/// A jump operator with its nonnegative rate.
#[derive(Clone, Debug)]
pub struct Channel {
    pub rate: f64,
    pub op: ComplexMatrix,
}

#[derive(Clone, Debug)]
enum Coherent {
    Hermitian(ComplexMatrix),
    Effective(ComplexMatrix),
}

/// `ρ' = -i[H0, ρ] + Σ κ (F ρ F† - ½{F†F, ρ})`, or its effective-Hamiltonian
/// variant `ρ' = -i(H ρ - ρ H†) + Σ κ F ρ F†` where `H` is supplied directly.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    dim: usize,
    coherent: Coherent,
    channels: Vec<Channel>,
}

impl LindbladModel {
    /// Model with Hermitian `h0`; the anti-Hermitian loss part is derived.
    pub fn new(h0: ComplexMatrix, channels: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        let dim = h0.rows();
        check_square(&h0, dim)?;
        let tol = 1e-12 * h0.norm_max().max(1.0);
        if !h0.is_hermitian(tol) {
            return Err(Error::InvalidParameter("H0 is not Hermitian".into()));
        }
        Ok(Self {
            dim,
            coherent: Coherent::Hermitian(h0),
            channels: check_channels(dim, channels)?,
        })
    }

    /// Model whose non-Hermitian Hamiltonian is given as is.
    ///
    /// No `-(i/2) Σ κ F†F` term is added, so the dynamics need not
    /// preserve the trace.
    pub fn with_effective_hamiltonian(
        h_eff: ComplexMatrix,
        channels: Vec<(f64, ComplexMatrix)>,
    ) -> Result<Self> {
        let dim = h_eff.rows();
        check_square(&h_eff, dim)?;
        if !h_eff.is_finite() {
            return Err(Error::NonFinite("effective Hamiltonian"));
        }
        Ok(Self {
            dim,
            coherent: Coherent::Effective(h_eff),
            channels: check_channels(dim, channels)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Hermitian part as supplied, or the full effective Hamiltonian.
    pub fn hamiltonian(&self) -> &ComplexMatrix {
        match &self.coherent {
            Coherent::Hermitian(h) | Coherent::Effective(h) => h,
        }
    }

    pub fn is_trace_preserving(&self) -> bool {
        matches!(self.coherent, Coherent::Hermitian(_))
    }

    /// `Σ κ F†F`.
    pub fn loss_operator(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for ch in &self.channels {
            let ff = &ch.op.adjoint() * &ch.op;
            acc = &acc + &ff.scale(C64::new(ch.rate, 0.0));
        }
        acc
    }

    /// Same model with every jump rate multiplied by `factor` while the
    /// effective Hamiltonian is kept fixed.
    pub fn with_jump_scale(&self, factor: f64) -> Result<Self> {
        let h = self.effective_nh_hamiltonian();
        let channels = self
            .channels
            .iter()
            .map(|c| (c.rate * factor, c.op.clone()))
            .collect();
        Self::with_effective_hamiltonian(h, channels)
    }

    /// `H0 - (i/2) Σ κ F†F`, or the supplied effective Hamiltonian.
    pub fn effective_nh_hamiltonian(&self) -> ComplexMatrix {
        match &self.coherent {
            Coherent::Hermitian(h0) => h0 - &self.loss_operator().scale(C64::new(0.0, 0.5)),
            Coherent::Effective(h) => h.clone(),
        }
    }
}

fn check_channels(dim: usize, channels: Vec<(f64, ComplexMatrix)>) -> Result<Vec<Channel>> {
    channels
        .into_iter()
        .map(|(rate, op)| {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("jump rate {rate}")));
            }
            check_square(&op, dim)?;
            if !op.is_finite() {
                return Err(Error::NonFinite("jump operator"));
            }
            Ok(Channel { rate, op })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Full,
    NoJump,
    Composite,
}

/// Superoperator on row-major vectorized density matrices.
///
/// `Full` and `NoJump` hold a Liouvillian `L`; `Composite` holds `i L`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    pub kind: Kind,
    pub matrix: ComplexMatrix,
    /// Hilbert-space dimension.
    pub dim: usize,
    pub trace_preserving: bool,
}

impl Superoperator {
    /// Generator `i L` of `ψ(t) = exp(-i H̃ t) ψ(0)`.
    pub fn composite_matrix(&self) -> ComplexMatrix {
        match self.kind {
            Kind::Composite => self.matrix.clone(),
            _ => self.matrix.scale(I),
        }
    }

    /// Liouvillian `L` with `vec(ρ)' = L vec(ρ)`.
    pub fn liouvillian(&self) -> ComplexMatrix {
        match self.kind {
            Kind::Composite => self.matrix.scale(-I),
            _ => self.matrix.clone(),
        }
    }
}

fn nonzeros(m: &ComplexMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for (c, &z) in m.row(r).iter().enumerate() {
            if z != ZERO {
                out.push((r, c, z));
            }
        }
    }
    out
}

fn coherent_part(h: &ComplexMatrix, out: &mut ComplexMatrix) {
    let d = h.rows();
    for (i, j, z) in nonzeros(h) {
        for k in 0..d {
            out[(i * d + k, j * d + k)] += -I * z;
            out[(k * d + i, k * d + j)] += I * z.conj();
        }
    }
}

fn jump_part(channels: &[Channel], scale: f64, out: &mut ComplexMatrix) {
    let d = out.rows().isqrt();
    for ch in channels {
        let kappa = ch.rate * scale;
        if kappa == 0.0 {
            continue;
        }
        let nz = nonzeros(&ch.op);
        for &(i, j, a) in &nz {
            for &(k, l, b) in &nz {
                out[(i * d + k, j * d + l)] += a * b.conj() * kappa;
            }
        }
    }
}

/// `L = -i(H ⊗ I - I ⊗ H*) + Σ κ F ⊗ F*`.
pub fn build_full(model: &LindbladModel) -> Superoperator {
    let d = model.dim;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    coherent_part(&model.effective_nh_hamiltonian(), &mut m);
    jump_part(&model.channels, 1.0, &mut m);
    Superoperator {
        kind: Kind::Full,
        matrix: m,
        dim: d,
        trace_preserving: model.is_trace_preserving(),
    }
}

/// `L = -i(H ⊗ I - I ⊗ H*)`, dropping the jump terms.
pub fn build_nojump(model: &LindbladModel) -> Superoperator {
    let d = model.dim;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    coherent_part(&model.effective_nh_hamiltonian(), &mut m);
    Superoperator {
        kind: Kind::NoJump,
        matrix: m,
        dim: d,
        trace_preserving: false,
    }
}

/// `H̃ = i L_full = H̃0 + V` together with the biorthogonal product basis
/// that diagonalizes `H̃0`.
#[derive(Clone, Debug)]
pub struct CompositeHamiltonian {
    model: LindbladModel,
    eigensystem: BiorthoEigensystem,
    product: BiorthoEigensystem,
    similarity: ComplexMatrix,
}

impl CompositeHamiltonian {
    pub fn model(&self) -> &LindbladModel {
        &self.model
    }

    /// Biorthogonal eigensystem of the effective Hamiltonian.
    pub fn eigensystem(&self) -> &BiorthoEigensystem {
        &self.eigensystem
    }

    /// Eigensystem of `H̃0` in `(m, n) -> m * d + n` order.
    pub fn product(&self) -> &BiorthoEigensystem {
        &self.product
    }

    /// Similarity factor `A` of the effective Hamiltonian.
    pub fn similarity(&self) -> &ComplexMatrix {
        &self.similarity
    }

    pub fn superoperator(&self) -> Superoperator {
        let mut s = build_full(&self.model);
        s.matrix = s.matrix.scale(I);
        s.kind = Kind::Composite;
        s
    }

    /// `H̃0 = H ⊗ I - I ⊗ H*`.
    pub fn free(&self) -> ComplexMatrix {
        build_nojump(&self.model).matrix.scale(I)
    }

    /// `V = i Σ κ F ⊗ F*`.
    pub fn coupling(&self) -> ComplexMatrix {
        let d = self.model.dim;
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        jump_part(&self.model.channels, 1.0, &mut m);
        m.scale(I)
    }

    /// Diagonal of `H̃0` in the product basis: `E_m - E_n*`.
    pub fn free_biortho(&self) -> &[C64] {
        self.product.eigenvalues()
    }

    /// `S^{-1} V S` with `S = A ⊗ A*`.
    pub fn coupling_biortho(&self) -> ComplexMatrix {
        let ainv = self.eigensystem.left().adjoint();
        let a = &self.similarity;
        kron_sandwich(&ainv, &ainv.conj(), &self.coupling(), a, &a.conj())
    }

    /// `S^{-1} H̃ S`; diagonal equals `free_biortho` up to roundoff.
    pub fn composite_biortho(&self) -> ComplexMatrix {
        let ainv = self.eigensystem.left().adjoint();
        let a = &self.similarity;
        let full = self.superoperator().matrix;
        kron_sandwich(&ainv, &ainv.conj(), &full, a, &a.conj())
    }
}

/// Composite Hamiltonian over the eigensystem `es` of the model's effective
/// Hamiltonian.
pub fn build_composite(
    model: &LindbladModel,
    es: &BiorthoEigensystem,
) -> Result<CompositeHamiltonian> {
    if es.dim() != model.dim {
        return Err(dim_err(model.dim, es.dim()));
    }
    let eigensystem = es.clone();
    let similarity = similarity_factor(&eigensystem, EIG_TOL)?;
    let product = eigensystem.composite();
    Ok(CompositeHamiltonian {
        model: model.clone(),
        eigensystem,
        product,
        similarity,
    })
}

/// Diagonalizes the effective Hamiltonian and builds the composite.
pub fn composite_hamiltonian(model: &LindbladModel) -> Result<CompositeHamiltonian> {
    let es = eig_biortho(&model.effective_nh_hamiltonian(), EIG_TOL)?;
    build_composite(model, &es)
}

/// `(P ⊗ Q) X (R ⊗ S)` for `d x d` factors, in `O(d^5)` work.
pub fn kron_sandwich(
    p: &ComplexMatrix,
    q: &ComplexMatrix,
    x: &ComplexMatrix,
    r: &ComplexMatrix,
    s: &ComplexMatrix,
) -> ComplexMatrix {
    let left = kron_left(p, q, x);
    kron_left(&r.transpose(), &s.transpose(), &left.transpose()).transpose()
}

fn kron_left(p: &ComplexMatrix, q: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    let d = p.rows();
    let big = d * d;
    let data = x.data();
    // (P ⊗ I) X: rows of X grouped as (a, b) with a outermost.
    let xr = Mat::<C64>::from_fn(d, d * big, |a, k| data[a * d * big + k]);
    let y1 = linalg::to_faer(p) * xr;
    // (I ⊗ Q) on each block of d rows.
    let fq = linalg::to_faer(q);
    let mut out = ComplexMatrix::zeros(big, big);
    for a in 0..d {
        let blk = Mat::<C64>::from_fn(d, big, |b, c| y1[(a, b * big + c)]);
        let y2 = &fq * blk;
        for b in 0..d {
            for c in 0..big {
                out[(a * d + b, c)] = y2[(b, c)];
            }
        }
    }
    out
}

/// Components `ρ_mn = ⟨l_m|ρ|l_n⟩` at index `m * d + n`.
pub fn map_rho_to_state(rho: &ComplexMatrix, es: &BiorthoEigensystem) -> Result<Vec<C64>> {
    check_square(rho, es.dim())?;
    let l = es.left();
    Ok((&(&l.adjoint() * rho) * l).into_data())
}

/// Inverse of [`map_rho_to_state`]: `ρ = Σ ρ_mn |r_m⟩⟨r_n|`.
pub fn map_state_to_rho(psi: &[C64], es: &BiorthoEigensystem) -> Result<ComplexMatrix> {
    let d = es.dim();
    if psi.len() != d * d {
        return Err(dim_err(d * d, psi.len()));
    }
    let c = ComplexMatrix::new(d, d, psi.to_vec())?;
    let r = es.right();
    Ok(&(r * &c) * &r.adjoint())
}

pub fn vectorize(rho: &ComplexMatrix) -> Vec<C64> {
    rho.data().to_vec()
}

pub fn unvectorize(v: &[C64], dim: usize) -> Result<ComplexMatrix> {
    ComplexMatrix::new(dim, dim, v.to_vec())
}

/// Eigenvalues of the superoperator matrix, sorted by real then imaginary
/// part, computed over the connected blocks of its nonzero pattern.
pub fn spectrum(s: &Superoperator) -> Result<Vec<C64>> {
    block_eigenvalues(&s.matrix)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectraMatch {
    pub max_distance: f64,
    pub tol: f64,
    pub matched: bool,
    /// For each sorted element of `a`, the index of its partner in `b`.
    pub pairing: Vec<usize>,
}

/// Greedy nearest-neighbour pairing of two spectra.
pub fn spectra_match(a: &[C64], b: &[C64], tol: f64) -> Result<SpectraMatch> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut sa = a.to_vec();
    sa.sort_by(cmp_complex);
    let mut used = vec![false; b.len()];
    let mut pairing = Vec::with_capacity(a.len());
    let mut max_distance: f64 = 0.0;
    for z in &sa {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, w) in b.iter().enumerate() {
            if !used[j] {
                let d = (z - w).norm();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        pairing.push(best);
        max_distance = max_distance.max(best_d);
    }
    Ok(SpectraMatch {
        max_distance,
        tol,
        matched: max_distance <= tol,
        pairing,
    })
}
