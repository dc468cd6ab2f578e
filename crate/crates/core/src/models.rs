//! Two-level system, Hatano-Nelson chain and dissipative BCS pair model.

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};
use crate::liouvillian::LindbladModel;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} = {x}")));
    }
    Ok(())
}

/// Pauli matrices in the basis `{|0⟩ = up, |1⟩ = down}`.
pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
}

/// `σ+ = |0⟩⟨1|`.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap()
}

/// `σ- = |1⟩⟨0|`.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap()
}

/// Pure state `|ψ⟩⟨ψ|`, normalized.
pub fn pure_state(psi: &[C64]) -> Result<ComplexMatrix> {
    let n = crate::linalg::norm2(psi);
    if !(n > 0.0) {
        return Err(Error::InvalidState("zero vector".into()));
    }
    let d = psi.len();
    Ok(ComplexMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (n * n)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlsParams {
    pub omega: f64,
    pub gamma_p: f64,
    pub gamma_x: f64,
    pub gamma_z: f64,
}

impl TlsParams {
    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::InvalidParameter("omega".into()));
        }
        check_rate("gamma_p", self.gamma_p)?;
        check_rate("gamma_x", self.gamma_x)?;
        check_rate("gamma_z", self.gamma_z)
    }
}

/// `H0 = (ω/2) σz` with channels `(γp, σ-)`, `(γx, σx)`, `(γz, σz)`.
pub fn tls_model(p: &TlsParams) -> Result<LindbladModel> {
    p.validate()?;
    let h0 = sigma_z().scale(c(p.omega / 2.0, 0.0));
    LindbladModel::new(
        h0,
        vec![
            (p.gamma_p, sigma_minus()),
            (p.gamma_x, sigma_x()),
            (p.gamma_z, sigma_z()),
        ],
    )
}

/// Closed-form corrections for the two-level system.
///
/// Mode `2a + b` is the product state `|a⟩|b⟩*` with `a, b ∈ {0 = up, 1 = down}`.
/// `psi1[n][k]` is the coefficient of unperturbed mode `k` in the first-order
/// correction to mode `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TlsReference {
    pub e0: [C64; 4],
    pub e1: [C64; 4],
    pub e2: [C64; 4],
    pub psi1: [[C64; 4]; 4],
    pub psi2: [[C64; 4]; 4],
}

pub fn tls_reference(p: &TlsParams) -> TlsReference {
    let (w, gp, gx, gz) = (p.omega, p.gamma_p, p.gamma_x, p.gamma_z);
    let e0 = [
        c(0.0, -(gp + gx + gz)),
        c(w, -(gp / 2.0 + gx + gz)),
        c(-w, -(gp / 2.0 + gx + gz)),
        c(0.0, -(gx + gz)),
    ];
    let e1 = [c(0.0, gz), c(0.0, -gz), c(0.0, -gz), c(0.0, gz)];
    let e2 = [
        c(0.0, -gx * (gp + gx) / gp),
        c(-gx * gx / (2.0 * w), 0.0),
        c(gx * gx / (2.0 * w), 0.0),
        c(0.0, gx * (gp + gx) / gp),
    ];
    let mut psi1 = [[ZERO; 4]; 4];
    psi1[0][3] = c(-(gp + gx) / gp, 0.0);
    psi1[1][2] = c(0.0, gx / (2.0 * w));
    psi1[2][1] = c(0.0, -gx / (2.0 * w));
    psi1[3][0] = c(gx / gp, 0.0);
    TlsReference {
        e0,
        e1,
        e2,
        psi1,
        psi2: [[ZERO; 4]; 4],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatanoNelsonParams {
    pub n_sites: usize,
    pub j: f64,
    pub kappa: f64,
    pub boundary: Boundary,
    pub max_particles: usize,
}

impl HatanoNelsonParams {
    /// Bonds `(j, j+1)`, with `(n-1, 0)` appended for periodic chains.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut b: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            b.push((n - 1, 0));
        }
        b
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParameter("n_sites must be at least 2".into()));
        }
        if !self.j.is_finite() {
            return Err(Error::InvalidParameter("J".into()));
        }
        check_rate("kappa", self.kappa)
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.n_sites, self.max_particles)
    }
}

/// Hopping chain with one loss channel `c_j - i c_{j+1}` per bond.
pub fn hatano_nelson(p: &HatanoNelsonParams) -> Result<LindbladModel> {
    p.validate()?;
    let space = p.space()?;
    let d = space.dim();
    let ann: Vec<ComplexMatrix> = (0..p.n_sites)
        .map(|s| space.annihilator(s))
        .collect::<Result<_>>()?;
    let mut h0 = ComplexMatrix::zeros(d, d);
    let mut channels = Vec::new();
    for (a, b) in p.bonds() {
        let hop = &ann[b].adjoint() * &ann[a];
        h0 = &h0 - &(&hop + &hop.adjoint()).scale(c(p.j, 0.0));
        channels.push((p.kappa, &ann[a] - &ann[b].scale(I)));
    }
    LindbladModel::new(h0, channels)
}

/// `c_a† c_b† |0⟩⟨0| c_b c_a` in the capped space.
pub fn pair_state(space: &FockSpace, a: usize, b: usize) -> Result<ComplexMatrix> {
    let vac = space
        .index_of(0)
        .ok_or(Error::InvalidState("vacuum missing".into()))?;
    let mut psi = vec![ZERO; space.dim()];
    psi[vac] = ONE;
    let psi = space.creator(b)?.matvec(&psi)?;
    let psi = space.creator(a)?.matvec(&psi)?;
    pure_state(&psi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcsParams {
    pub j: f64,
    pub mu: f64,
    pub u0: f64,
    pub kappa: f64,
    pub n: usize,
    /// Coupling in the gap equation; `U0 + iκ/2` when absent.
    pub u1: Option<C64>,
}

impl BcsParams {
    pub fn new(j: f64, mu: f64, u0: f64, kappa: f64, n: usize) -> Self {
        Self {
            j,
            mu,
            u0,
            kappa,
            n,
            u1: None,
        }
    }

    pub fn u1(&self) -> C64 {
        self.u1.unwrap_or(c(self.u0, self.kappa / 2.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter("N must be at least 2".into()));
        }
        check_rate("kappa", self.kappa)?;
        if !self.j.is_finite() || !self.mu.is_finite() || !self.u0.is_finite() {
            return Err(Error::InvalidParameter("non-finite J, mu or U0".into()));
        }
        if self.u1().norm() == 0.0 {
            return Err(Error::InvalidParameter("U1 must be nonzero".into()));
        }
        Ok(())
    }

    /// `k_m = π m / (N - 1)`.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|m| std::f64::consts::PI * m as f64 / (n - 1) as f64)
            .collect()
    }

    /// `ξ_k = -2J cos k - μ`.
    pub fn xi(&self) -> Vec<f64> {
        self.momenta()
            .iter()
            .map(|k| -2.0 * self.j * k.cos() - self.mu)
            .collect()
    }

    /// Default Newton starting point `0.1 J (1 + iκ / 2|U0|)`.
    pub fn default_init(&self) -> C64 {
        let ratio = if self.u0 == 0.0 {
            0.0
        } else {
            self.kappa / (2.0 * self.u0.abs())
        };
        c(0.1 * self.j, 0.1 * self.j * ratio)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSolution {
    pub delta: C64,
    pub residual: f64,
    pub iterations: usize,
}

fn gap_energy(xi: f64, delta: C64) -> C64 {
    (c(xi * xi, 0.0) + delta * delta).sqrt()
}

fn gap_residual(xi: &[f64], delta: C64, target: C64) -> C64 {
    xi.iter().map(|&x| 0.5 / gap_energy(x, delta)).sum::<C64>() - target
}

/// Solves `N / U1 = Σ_k 1 / (2 sqrt(ξ_k² + Δ²))` by damped complex Newton
/// iteration. The returned root has `Re Δ ≥ 0`.
pub fn bcs_gap_solve(
    p: &BcsParams,
    init: Option<C64>,
    tol: f64,
    max_iter: usize,
) -> Result<GapSolution> {
    p.validate()?;
    let xi = p.xi();
    let target = c(p.n as f64, 0.0) / p.u1();
    let mut delta = init.unwrap_or_else(|| p.default_init());
    let mut f = gap_residual(&xi, delta, target);
    let mut iterations = 0;
    while !(f.norm() <= tol) {
        if iterations >= max_iter || !f.norm().is_finite() {
            return Err(Error::NoConvergence {
                iterations,
                residual: f.norm(),
            });
        }
        iterations += 1;
        let df: C64 = xi
            .iter()
            .map(|&x| {
                let e = gap_energy(x, delta);
                -delta / (2.0 * e * e * e)
            })
            .sum();
        let step = f / df;
        let mut damp = 1.0;
        loop {
            let trial = delta - step * damp;
            let ft = gap_residual(&xi, trial, target);
            if ft.norm() < f.norm() || damp < 1e-6 {
                delta = trial;
                f = ft;
                break;
            }
            damp *= 0.5;
        }
    }
    if delta.re < 0.0 {
        delta = -delta;
    }
    for &x in &xi {
        let e = gap_energy(x, delta);
        if e.re.abs() < 1e-12 {
            return Err(Error::BranchAmbiguity { re: e.re, im: e.im });
        }
    }
    Ok(GapSolution {
        delta,
        residual: gap_residual(&xi, delta, target).norm(),
        iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcsMode {
    pub k: f64,
    pub xi: f64,
    pub e: C64,
    pub u: C64,
    pub v: C64,
}

/// Quasiparticle energies and coherence factors on the momentum grid.
///
/// `u = sqrt((E+ξ)/2E)` and `v = -sqrt((E-ξ)/2E)`, principal roots, so that
/// `u² + v² = 1` and `Re v ≤ 0`.
pub fn bcs_modes(p: &BcsParams, delta: C64) -> Result<Vec<BcsMode>> {
    p.validate()?;
    p.momenta()
        .into_iter()
        .zip(p.xi())
        .map(|(k, xi)| {
            let e = gap_energy(xi, delta);
            if e.re.abs() < 1e-12 {
                return Err(Error::BranchAmbiguity { re: e.re, im: e.im });
            }
            let u = ((e + xi) / (2.0 * e)).sqrt();
            let v = -((e - xi) / (2.0 * e)).sqrt();
            Ok(BcsMode { k, xi, e, u, v })
        })
        .collect()
}

/// Ground state plus one pair excitation per grid mode.
///
/// Index 0 is the ground state and index `1 + k` the excitation of mode `k`.
#[derive(Clone, Debug)]
pub struct BcsRestricted {
    pub model: LindbladModel,
    pub h_mf: ComplexMatrix,
    pub jumps: Vec<ComplexMatrix>,
    pub kappa: f64,
}

impl BcsRestricted {
    pub fn dim(&self) -> usize {
        self.h_mf.rows()
    }

    pub fn ground_state(&self) -> ComplexMatrix {
        let mut rho = ComplexMatrix::zeros(self.dim(), self.dim());
        rho[(0, 0)] = ONE;
        rho
    }

    /// `diag(0, 2, ..., 2)`.
    pub fn quasiparticle_number(&self) -> ComplexMatrix {
        let mut d = vec![c(2.0, 0.0); self.dim()];
        d[0] = ZERO;
        ComplexMatrix::from_diag(&d)
    }

    /// `H_MF + (iκ/2) Σ L†L`.
    pub fn energy_operator(&self) -> ComplexMatrix {
        &self.h_mf + &self.model.loss_operator().scale(c(0.0, 0.5))
    }
}

/// Jump matrix of mode `k` on the restricted space.
pub fn bcs_jump(modes: &[BcsMode], k: usize) -> ComplexMatrix {
    let d = modes.len() + 1;
    let m = &modes[k];
    let uv = m.u * m.v;
    let mut l = ComplexMatrix::zeros(d, d);
    l[(0, 0)] = uv;
    l[(0, 1 + k)] = m.u * m.u;
    l[(1 + k, 0)] = -m.v * m.v;
    for j in 0..modes.len() {
        l[(1 + j, 1 + j)] = if j == k { -uv } else { uv };
    }
    l
}

/// Restricted model with `H_MF = diag(0, 2E_k)` taken as the effective
/// Hamiltonian and one channel `(κ, L_k)` per mode.
pub fn bcs_restricted_model(p: &BcsParams, modes: &[BcsMode]) -> Result<BcsRestricted> {
    p.validate()?;
    if modes.len() != p.n {
        return Err(Error::LengthMismatch {
            left: p.n,
            right: modes.len(),
        });
    }
    let mut diag = vec![ZERO];
    diag.extend(modes.iter().map(|m| 2.0 * m.e));
    let h_mf = ComplexMatrix::from_diag(&diag);
    let jumps: Vec<ComplexMatrix> = (0..modes.len()).map(|k| bcs_jump(modes, k)).collect();
    let model = LindbladModel::with_effective_hamiltonian(
        h_mf.clone(),
        jumps.iter().map(|l| (p.kappa, l.clone())).collect(),
    )?;
    Ok(BcsRestricted {
        model,
        h_mf,
        jumps,
        kappa: p.kappa,
    })
}

/// `E0 = -2 Σ Im E_k` and `E1 = -κ Σ |u_k|² |v_k|²`.
pub fn bcs_ground_corrections(p: &BcsParams, modes: &[BcsMode]) -> (f64, f64) {
    let e0 = -2.0 * modes.iter().map(|m| m.e.im).sum::<f64>();
    let e1 = -p.kappa * modes.iter().map(|m| m.u.norm_sqr() * m.v.norm_sqr()).sum::<f64>();
    (e0, e1)
}

/// First-order corrected ground pair on the composite restricted space,
/// indexed `a * (N+1) + b`.
#[derive(Clone, Debug)]
pub struct BcsGroundStates {
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// `|𝒩0|²`, the inverse of `⟨l|r⟩`.
    pub norm_sq: C64,
}

pub fn bcs_first_order_states(p: &BcsParams, modes: &[BcsMode]) -> Result<BcsGroundStates> {
    let d = modes.len() + 1;
    let kappa = p.kappa;
    let mut right = vec![ZERO; d * d];
    let mut left = vec![ZERO; d * d];
    right[0] = ONE;
    left[0] = ONE;
    let mut denom = ONE;
    for (k, m) in modes.iter().enumerate() {
        if m.e.im.abs() < 1e-14 {
            return Err(Error::VanishingDissipation);
        }
        let (u, v, e) = (m.u, m.v, m.e);
        let a = 1 + k;
        right[a] = -I * kappa * u * v * v.conj() * v.conj() / (2.0 * e.conj());
        right[a * d] = I * kappa * u.conj() * v.conj() * v * v / (2.0 * e);
        right[a * d + a] = c(-kappa * v.norm_sqr().powi(2) / (4.0 * e.im), 0.0);
        left[a] = -I * kappa * u.conj() * v.conj() * u * u / (2.0 * e);
        left[a * d] = I * kappa * u.conj() * u.conj() * u * v / (2.0 * e.conj());
        left[a * d + a] = c(-kappa * u.norm_sqr().powi(2) / (4.0 * e.im), 0.0);
        let w = kappa * kappa * u.norm_sqr().powi(2) * v.norm_sqr().powi(2);
        denom += w / (4.0 * e.conj() * e.conj()) + w / (4.0 * e * e) + w / (16.0 * e.im * e.im);
    }
    Ok(BcsGroundStates {
        right,
        left,
        norm_sq: denom.inv(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcsObservables {
    pub e_aver: f64,
    pub p0: f64,
    pub pk: Vec<f64>,
}

/// Energy `Re Tr[ρ (H_MF + (iκ/2) Σ L†L)] / Tr ρ` and populations.
pub fn bcs_observables(rho: &ComplexMatrix, sys: &BcsRestricted) -> Result<BcsObservables> {
    crate::linalg::check_square(rho, sys.dim())?;
    let tr = rho.trace();
    let e = crate::dynamics::expectation(&sys.energy_operator(), rho) / tr;
    Ok(BcsObservables {
        e_aver: e.re,
        p0: (rho[(0, 0)] / tr).re,
        pk: (1..sys.dim()).map(|a| (rho[(a, a)] / tr).re).collect(),
    })
}
