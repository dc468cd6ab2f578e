//! Perturbation theory in the jump term of the composite Hamiltonian.
//!
//! `H̃ = H̃0 + V` where `H̃0` is diagonal in the product basis
//! `|r_m⟩ ⊗ |r_n⟩*` with eigenvalues `e_k = E_m - E_n*`, and
//! `V = i Σ κ F ⊗ F*`. All coupling elements below are taken in that basis.

use crate::dynamics::{check_times, validate_density, TimeSeries, MIN_TRACE};
use crate::error::{Error, Result};
use crate::linalg::{
    degenerate_groups, eig_biortho, BiorthoEigensystem, ComplexMatrix, C64, EIG_TOL, I, ZERO,
};
use crate::liouvillian::{composite_hamiltonian, CompositeHamiltonian, LindbladModel};

/// Relative spread of `e_k` below which modes are treated as degenerate.
pub const DEGENERATE_REL_TOL: f64 = 1e-9;

/// Overlaps `⟨l_n|r_n⟩` below this cannot be normalized.
pub const MIN_OVERLAP: f64 = 1e-12;

/// Unperturbed product basis with the coupling diagonalized inside each
/// degenerate group.
#[derive(Clone, Debug)]
pub struct PerturbationBasis {
    e0: Vec<C64>,
    group: Vec<usize>,
    coupling: ComplexMatrix,
    right: ComplexMatrix,
    left: ComplexMatrix,
}

impl PerturbationBasis {
    pub fn new(comp: &CompositeHamiltonian) -> Result<Self> {
        Self::from_eigensystem(comp.product(), comp.coupling_biortho())
    }

    /// Basis for a bare pair `(H0, V)` outside the composite setting.
    pub fn from_matrices(h0: &ComplexMatrix, v: &ComplexMatrix) -> Result<Self> {
        let es = eig_biortho(h0, EIG_TOL)?;
        crate::linalg::check_square(v, es.dim())?;
        let coupling = &(&es.left().adjoint() * v) * es.right();
        Self::from_eigensystem(&es, coupling)
    }

    fn from_eigensystem(product: &BiorthoEigensystem, coupling: ComplexMatrix) -> Result<Self> {
        let e0 = product.eigenvalues().to_vec();
        let mut coupling = coupling;
        let mut right = product.right().clone();
        let mut left = product.left().clone();
        let dim = e0.len();

        // Group degenerate unperturbed energies.
        let radius = e0.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| crate::linalg::cmp_complex(&e0[a], &e0[b]));
        let sorted: Vec<C64> = order.iter().map(|&k| e0[k]).collect();
        let mut group = vec![0; dim];
        let mut groups = Vec::new();
        for (gid, g) in degenerate_groups(&sorted, DEGENERATE_REL_TOL * radius)
            .into_iter()
            .enumerate()
        {
            let mut members: Vec<usize> = g.into_iter().map(|i| order[i]).collect();
            members.sort_unstable();
            for &k in &members {
                group[k] = gid;
            }
            groups.push(members);
        }

        let scale = coupling.norm_max().max(1e-300);
        for members in groups.iter().filter(|g| g.len() > 1) {
            let block = coupling.submatrix(members);
            let off = (0..members.len())
                .flat_map(|i| (0..members.len()).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .map(|(i, j)| block[(i, j)].norm())
                .fold(0.0, f64::max);
            if off <= 1e-14 * scale {
                continue;
            }
            let es = eig_biortho(&block, EIG_TOL).map_err(|e| match e {
                Error::DefectiveMatrix { residual } => Error::DegenerateCoupling { residual },
                other => other,
            })?;
            rotate_group(&mut coupling, &mut right, &mut left, members, &es);
        }

        Ok(Self {
            e0,
            group,
            coupling,
            right,
            left,
        })
    }

    pub fn dim(&self) -> usize {
        self.e0.len()
    }

    pub fn e0(&self) -> &[C64] {
        &self.e0
    }

    /// Coupling `⟨⟨l_k|V|r_n⟩⟩` after the degenerate rotation.
    pub fn coupling(&self) -> &ComplexMatrix {
        &self.coupling
    }

    /// Product right vectors as columns.
    pub fn right(&self) -> &ComplexMatrix {
        &self.right
    }

    /// Product left vectors as columns.
    pub fn left(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn same_group(&self, a: usize, b: usize) -> bool {
        self.group[a] == self.group[b]
    }

    /// `1 / (e_n - e_k)`, or zero inside a degenerate group.
    fn inv_gap(&self, n: usize, k: usize) -> C64 {
        if self.same_group(n, k) {
            ZERO
        } else {
            (self.e0[n] - self.e0[k]).inv()
        }
    }
}

/// Replaces the group's columns by `X`-rotated ones, where `X` holds the
/// right eigenvectors of the coupling block.
fn rotate_group(
    coupling: &mut ComplexMatrix,
    right: &mut ComplexMatrix,
    left: &mut ComplexMatrix,
    members: &[usize],
    es: &BiorthoEigensystem,
) {
    let g = members.len();
    let x = es.right();
    let xinv = es.left().adjoint();
    let n = coupling.rows();
    // Columns: M X.
    let rotate_cols = |m: &mut ComplexMatrix, x: &ComplexMatrix| {
        for r in 0..m.rows() {
            let old: Vec<C64> = members.iter().map(|&c| m[(r, c)]).collect();
            for (j, &c) in members.iter().enumerate() {
                m[(r, c)] = (0..g).map(|i| old[i] * x[(i, j)]).sum();
            }
        }
    };
    rotate_cols(coupling, x);
    rotate_cols(right, x);
    rotate_cols(left, &xinv.adjoint());
    // Rows: X^{-1} M.
    for c in 0..n {
        let old: Vec<C64> = members.iter().map(|&r| coupling[(r, c)]).collect();
        for (i, &r) in members.iter().enumerate() {
            coupling[(r, c)] = (0..g).map(|j| xinv[(i, j)] * old[j]).sum();
        }
    }
}

/// Per-mode energies up to the requested order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedMode {
    pub index: usize,
    pub e0: C64,
    pub e1: C64,
    pub e2: Option<C64>,
}

impl PerturbedMode {
    pub fn energy(&self) -> C64 {
        self.e0 + self.e1 + self.e2.unwrap_or(ZERO)
    }
}

/// First-order energies and expansion coefficients.
///
/// `right[(k, n)]` multiplies `|r_k⟩⟩` in the correction to mode `n`;
/// `left[(n, k)]` multiplies `⟨⟨l_k|` in the correction to mode `n`.
#[derive(Clone, Debug)]
pub struct FirstOrder {
    pub e1: Vec<C64>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct SecondOrder {
    pub e2: Vec<C64>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
}

/// `e1_n = V_nn`, `C1_kn = V_kn / (e_n - e_k)`, `D1_nk = V_nk / (e_n - e_k)`.
pub fn correct_first_order(basis: &PerturbationBasis) -> FirstOrder {
    let n = basis.dim();
    let v = &basis.coupling;
    let e1 = v.diagonal();
    let right = ComplexMatrix::from_fn(n, n, |k, m| v[(k, m)] * basis.inv_gap(m, k));
    let left = ComplexMatrix::from_fn(n, n, |m, k| v[(m, k)] * basis.inv_gap(m, k));
    FirstOrder { e1, right, left }
}

/// Rayleigh-Schrödinger second order for a non-Hermitian coupling.
pub fn correct_second_order(basis: &PerturbationBasis, first: &FirstOrder) -> SecondOrder {
    let n = basis.dim();
    let v = &basis.coupling;
    let e2 = (0..n)
        .map(|m| (0..n).map(|k| first.left[(m, k)] * v[(k, m)]).sum())
        .collect();
    let vc1 = v * &first.right;
    let d1v = &first.left * v;
    let right = ComplexMatrix::from_fn(n, n, |k, m| {
        let g = basis.inv_gap(m, k);
        vc1[(k, m)] * g - v[(m, m)] * v[(k, m)] * g * g
    });
    let left = ComplexMatrix::from_fn(n, n, |m, k| {
        let g = basis.inv_gap(m, k);
        d1v[(m, k)] * g - v[(m, m)] * v[(m, k)] * g * g
    });
    SecondOrder { e2, right, left }
}

/// Directly corrected right and left vectors of mode `n`, unnormalized,
/// as vectors in the vectorized space.
pub fn corrected_pair(
    basis: &PerturbationBasis,
    first: &FirstOrder,
    second: Option<&SecondOrder>,
    n: usize,
) -> (Vec<C64>, Vec<C64>) {
    let dim = basis.dim();
    let mut cr: Vec<C64> = (0..dim).map(|k| first.right[(k, n)]).collect();
    let mut dl: Vec<C64> = (0..dim).map(|k| first.left[(n, k)]).collect();
    if let Some(s) = second {
        for k in 0..dim {
            cr[k] += s.right[(k, n)];
            dl[k] += s.left[(n, k)];
        }
    }
    cr[n] += C64::new(1.0, 0.0);
    dl[n] += C64::new(1.0, 0.0);
    let right = basis.right.matvec(&cr).expect("square basis");
    let conj: Vec<C64> = dl.iter().map(|z| z.conj()).collect();
    let left = basis.left.matvec(&conj).expect("square basis");
    (right, left)
}

/// Corrected eigensystem of `H̃`.
///
/// Left vectors are the exact duals of the corrected right vectors. The
/// overlaps `⟨l_n|r_n⟩` of the directly corrected pairs are kept as a
/// normalization diagnostic, with `|𝒩_n|² = 1 / ⟨l_n|r_n⟩`.
#[derive(Clone, Debug)]
pub struct PerturbedEigensystem {
    pub order: usize,
    pub modes: Vec<PerturbedMode>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
    pub overlap: Vec<C64>,
}

impl PerturbedEigensystem {
    pub fn energies(&self) -> Vec<C64> {
        self.modes.iter().map(PerturbedMode::energy).collect()
    }

    pub fn as_biortho(&self) -> BiorthoEigensystem {
        BiorthoEigensystem::from_parts(self.energies(), self.right.clone(), self.left.clone())
    }

    /// `ρ(t) = Σ_n c_n exp(-i e_n t) ρ_n` with `c = R^{-1} vec(ρ0)`,
    /// normalized to unit trace.
    pub fn evolve(&self, rho0: &ComplexMatrix, times: &[f64]) -> Result<TimeSeries<ComplexMatrix>> {
        check_times(times)?;
        let d = rho0.rows();
        let big = self.right.rows();
        if d * d != big {
            return Err(crate::error::dim_err(big, d * d));
        }
        let c0 = self.left.adjoint().matvec(rho0.data())?;
        let energies = self.energies();
        let mut values = Vec::with_capacity(times.len());
        for &t in times {
            let w: Vec<C64> = c0
                .iter()
                .zip(&energies)
                .map(|(c, e)| c * (-I * e * t).exp())
                .collect();
            let v = self.right.matvec(&w)?;
            let rho = ComplexMatrix::new(d, d, v).map_err(|_| Error::NonFinite("perturbative state"))?;
            let tr = rho.trace();
            if !(tr.norm() >= MIN_TRACE) {
                return Err(Error::VanishingNorm { trace: tr.norm() });
            }
            values.push(rho.scale(tr.inv()));
        }
        Ok(TimeSeries {
            times: times.to_vec(),
            values,
        })
    }
}

pub fn assemble(
    basis: &PerturbationBasis,
    first: &FirstOrder,
    second: Option<&SecondOrder>,
) -> Result<PerturbedEigensystem> {
    let n = basis.dim();
    let mut cr = first.right.clone();
    let mut dl = first.left.clone();
    if let Some(s) = second {
        cr = &cr + &s.right;
        dl = &dl + &s.left;
    }
    for k in 0..n {
        cr[(k, k)] += C64::new(1.0, 0.0);
        dl[(k, k)] += C64::new(1.0, 0.0);
    }
    let right = &basis.right * &cr;
    let left_rows = &dl * &basis.left.adjoint();

    let mut overlap = Vec::with_capacity(n);
    for m in 0..n {
        let o: C64 = (0..n).map(|i| left_rows[(m, i)] * right[(i, m)]).sum();
        if !(o.norm() >= MIN_OVERLAP) {
            return Err(Error::SingularNormalization { overlap: o.norm() });
        }
        overlap.push(o);
    }
    let dual = right
        .inverse()
        .map_err(|_| Error::SingularNormalization { overlap: 0.0 })?;

    let modes = (0..n)
        .map(|m| PerturbedMode {
            index: m,
            e0: basis.e0[m],
            e1: first.e1[m],
            e2: second.map(|s| s.e2[m]),
        })
        .collect();
    Ok(PerturbedEigensystem {
        order: if second.is_some() { 2 } else { 1 },
        modes,
        right,
        left: dual.adjoint(),
        overlap,
    })
}

/// Builds the corrected eigensystem of the model's composite Hamiltonian.
pub fn perturbed_eigensystem(model: &LindbladModel, order: usize) -> Result<PerturbedEigensystem> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!("order {order}")));
    }
    let comp = composite_hamiltonian(model)?;
    let basis = PerturbationBasis::new(&comp)?;
    let first = correct_first_order(&basis);
    let second = (order == 2).then(|| correct_second_order(&basis, &first));
    assemble(&basis, &first, second.as_ref())
}

/// Perturbative density-matrix evolution to first or second order.
pub fn perturbative_evolve(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    times: &[f64],
    order: usize,
) -> Result<TimeSeries<ComplexMatrix>> {
    validate_density(rho0, model.dim())?;
    perturbed_eigensystem(model, order)?.evolve(rho0, times)
}
