//! Exact master-equation and no-jump evolution.

use faer::Side;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{
    self, check_square, connected_blocks, eig_biortho, expm, BiorthoEigensystem, ComplexMatrix,
    C64, EIG_TOL, I, ZERO,
};
use crate::liouvillian::{build_full, LindbladModel, Superoperator};

/// Tolerance for density-matrix validation.
pub const STATE_TOL: f64 = 1e-10;

/// Traces below this are treated as zero.
pub const MIN_TRACE: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            times: self.times.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// `points` evenly spaced times from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|k| start + step * k as f64).collect()
        }
    }
}

pub fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Checks that `rho` is Hermitian, positive semidefinite and of unit trace.
pub fn validate_density(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    check_square(rho, dim)?;
    if !rho.is_finite() {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    if !rho.is_hermitian(STATE_TOL) {
        return Err(Error::InvalidState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {:.6e}", tr.re)));
    }
    let herm = ComplexMatrix::from_fn(dim, dim, |r, c| 0.5 * (rho[(r, c)] + rho[(c, r)].conj()));
    let evs = linalg::to_faer(&herm)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::InvalidState("eigenvalues did not converge".into()))?;
    if let Some(min) = evs.iter().copied().reduce(f64::min) {
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
    }
    Ok(())
}

/// `Tr(O ρ)`.
pub fn expectation(obs: &ComplexMatrix, rho: &ComplexMatrix) -> C64 {
    let n = obs.rows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += obs[(i, j)] * rho[(j, i)];
        }
    }
    acc
}

/// `Σ_n ⟨l_n|O ρ|r_n⟩ = Tr(A^{-1} O ρ A)`, which equals `Tr(O ρ)`.
pub fn expectation_biortho(
    obs: &ComplexMatrix,
    rho: &ComplexMatrix,
    es: &BiorthoEigensystem,
) -> Result<C64> {
    check_square(obs, es.dim())?;
    linalg::mixed_trace(&(obs * rho), es)
}

fn normalize_trace(rho: &mut ComplexMatrix) -> Result<()> {
    let tr = rho.trace();
    if !(tr.norm() >= MIN_TRACE) {
        return Err(Error::VanishingNorm { trace: tr.norm() });
    }
    *rho = rho.scale(tr.inv());
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SpectralMode {
    /// Eigenvalue `e_n` of `H̃ = i L`; the mode evolves as `exp(-i e_n t)`.
    pub eigenvalue: C64,
    pub coefficient: C64,
    pub rho: ComplexMatrix,
}

/// `ρ(t) = Σ_n c_n exp(-i e_n t) ρ_n`.
///
/// Only blocks of the generator that the initial state touches contribute;
/// modes from other blocks have identically vanishing coefficients.
#[derive(Clone, Debug)]
pub struct SpectralModes {
    pub dim: usize,
    pub modes: Vec<SpectralMode>,
}

impl SpectralModes {
    pub fn at(&self, t: f64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for m in &self.modes {
            let w = m.coefficient * (-I * m.eigenvalue * t).exp();
            if w == ZERO {
                continue;
            }
            for (o, r) in out.data_mut().iter_mut().zip(m.rho.data()) {
                *o += w * r;
            }
        }
        out
    }
}

/// Indices of the generator's connected blocks that intersect the support
/// of `v`.
fn active_indices(h: &ComplexMatrix, v: &[C64]) -> Vec<Vec<usize>> {
    connected_blocks(h)
        .into_iter()
        .filter(|b| b.iter().any(|&i| v[i] != ZERO))
        .collect()
}

/// Eigenmodes of `H̃ = i L` carrying the initial state.
///
/// For trace-preserving generators every mode with nonzero eigenvalue must
/// be traceless, and stationary modes are scaled to unit trace.
pub fn spectral_modes(s: &Superoperator, rho0: &ComplexMatrix) -> Result<SpectralModes> {
    let d = s.dim;
    check_square(rho0, d)?;
    let h = s.composite_matrix();
    let v0 = rho0.data();
    let scale = h.norm_max().max(1.0);
    let mut modes = Vec::new();
    for block in active_indices(&h, v0) {
        let es = eig_biortho(&h.submatrix(&block), EIG_TOL)?;
        let sub: Vec<C64> = block.iter().map(|&i| v0[i]).collect();
        for n in 0..es.dim() {
            let l = es.left_vector(n);
            let mut coefficient = linalg::vdot(&l, &sub);
            let mut rho = ComplexMatrix::zeros(d, d);
            for (k, &i) in block.iter().enumerate() {
                rho[(i / d, i % d)] = es.right()[(k, n)];
            }
            let e = es.eigenvalues()[n];
            if s.trace_preserving {
                let tr = rho.trace();
                if e.norm() > 1e-8 * scale {
                    if tr.norm() > 1e-8 {
                        return Err(Error::DefectiveMatrix { residual: tr.norm() });
                    }
                } else if tr.norm() > 1e-12 {
                    rho = rho.scale(tr.inv());
                    coefficient *= tr;
                }
            }
            modes.push(SpectralMode {
                eigenvalue: e,
                coefficient,
                rho,
            });
        }
    }
    Ok(SpectralModes { dim: d, modes })
}

/// Evolves `rho0` under `vec(ρ)' = L vec(ρ)`.
///
/// Uses the spectral decomposition when the active blocks are small and
/// diagonalizable, a Padé matrix exponential when they are defective, and
/// the sparse Taylor action beyond `SPECTRAL_MAX_DIM`. States of
/// non-trace-preserving generators are renormalized to unit trace.
pub fn evolve_superoperator(
    s: &Superoperator,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<TimeSeries<ComplexMatrix>> {
    check_times(times)?;
    check_square(rho0, s.dim)?;
    let active: usize = active_indices(&s.matrix, rho0.data()).iter().map(Vec::len).sum();
    let mut values = if active > SPECTRAL_MAX_DIM {
        evolve_taylor(s, rho0, times)?
    } else {
        match spectral_modes(s, rho0) {
            Ok(modes) => times.iter().map(|&t| modes.at(t)).collect(),
            Err(Error::DefectiveMatrix { .. }) => evolve_expm(s, rho0, times)?,
            Err(e) => return Err(e),
        }
    };
    if !s.trace_preserving {
        for rho in values.iter_mut() {
            normalize_trace(rho)?;
        }
    }
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
    })
}

/// Matrix-exponential propagation restricted to the active blocks.
pub fn evolve_expm(
    s: &Superoperator,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    let d = s.dim;
    let l = s.liouvillian();
    let v0 = rho0.data();
    let idx: Vec<usize> = {
        let mut v: Vec<usize> = active_indices(&l, v0).into_iter().flatten().collect();
        v.sort_unstable();
        v
    };
    let sub = l.submatrix(&idx);
    let start: Vec<C64> = idx.iter().map(|&i| v0[i]).collect();
    let embed = |v: &[C64]| {
        let mut rho = ComplexMatrix::zeros(d, d);
        for (k, &i) in idx.iter().enumerate() {
            rho[(i / d, i % d)] = v[k];
        }
        rho
    };
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let uniform = times.len() > 2 && {
        let dt = times[1] - times[0];
        times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt.abs().max(times[0].abs()))
    };
    let mut out = Vec::with_capacity(times.len());
    if uniform {
        let dt = times[1] - times[0];
        let step = expm(&sub.scale(C64::new(dt, 0.0)))?;
        let mut v = expm(&sub.scale(C64::new(times[0], 0.0)))?.matvec(&start)?;
        out.push(embed(&v));
        for _ in 1..times.len() {
            v = step.matvec(&v)?;
            out.push(embed(&v));
        }
    } else {
        for &t in times {
            let v = expm(&sub.scale(C64::new(t, 0.0)))?.matvec(&start)?;
            out.push(embed(&v));
        }
    }
    Ok(out)
}

/// Active dimension above which dense diagonalization is skipped.
pub const SPECTRAL_MAX_DIM: usize = 1024;

struct Csr {
    ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<C64>,
}

impl Csr {
    fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = (self.ptr[r]..self.ptr[r + 1])
                .map(|k| self.val[k] * x[self.col[k]])
                .sum();
        }
    }
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Truncated Taylor action `exp(hA) v` with `|h| ‖A‖₁ ≤ 1`.
fn taylor_step(a: &Csr, v: &[C64], h: f64) -> Vec<C64> {
    let mut sum = v.to_vec();
    let mut term = v.to_vec();
    let mut next = vec![ZERO; v.len()];
    let mut small = 0;
    for k in 1..=60 {
        a.apply(&term, &mut next);
        let f = h / k as f64;
        for (t, n) in term.iter_mut().zip(&next) {
            *t = n * f;
        }
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if inf_norm(&term) <= 1e-17 * inf_norm(&sum) {
            small += 1;
            if small == 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    sum
}

/// Sparse Taylor propagation restricted to the active blocks.
pub fn evolve_taylor(
    s: &Superoperator,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    let d = s.dim;
    let l = s.liouvillian();
    let v0 = rho0.data();
    let mut idx: Vec<usize> = active_indices(&l, v0).into_iter().flatten().collect();
    idx.sort_unstable();
    let mut local = vec![usize::MAX; l.rows()];
    for (k, &i) in idx.iter().enumerate() {
        local[i] = k;
    }
    let mut csr = Csr {
        ptr: vec![0],
        col: Vec::new(),
        val: Vec::new(),
    };
    let mut colsum = vec![0.0; idx.len()];
    for &i in &idx {
        for (j, &z) in l.row(i).iter().enumerate() {
            if z != ZERO && local[j] != usize::MAX {
                csr.col.push(local[j]);
                csr.val.push(z);
                colsum[local[j]] += z.norm();
            }
        }
        csr.ptr.push(csr.col.len());
    }
    let norm = colsum.iter().copied().fold(0.0, f64::max);
    let embed = |v: &[C64]| {
        let mut rho = ComplexMatrix::zeros(d, d);
        for (k, &i) in idx.iter().enumerate() {
            rho[(i / d, i % d)] = v[k];
        }
        rho
    };
    let mut v: Vec<C64> = idx.iter().map(|&i| v0[i]).collect();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        let steps = (span.abs() * norm).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        if span != 0.0 {
            for _ in 0..steps {
                v = taylor_step(&csr, &v, h);
            }
        }
        now = t;
        out.push(embed(&v));
    }
    Ok(out)
}

/// Exact Lindblad evolution of a validated initial state.
pub fn evolve_master(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<TimeSeries<ComplexMatrix>> {
    validate_density(rho0, model.dim())?;
    evolve_superoperator(&build_full(model), rho0, times)
}

/// `exp(-iHt) ρ0 exp(iH†t) / Tr(...)` with `H` the effective Hamiltonian.
pub fn evolve_nh(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    times: &[f64],
) -> Result<TimeSeries<ComplexMatrix>> {
    validate_density(rho0, model.dim())?;
    check_times(times)?;
    let h = model.effective_nh_hamiltonian();
    let propagator: Box<dyn Fn(f64) -> Result<ComplexMatrix>> = match eig_biortho(&h, EIG_TOL) {
        Ok(es) => {
            let lt = es.left().adjoint();
            let r = es.right().clone();
            let ev = es.eigenvalues().to_vec();
            Box::new(move |t| {
                let phases: Vec<C64> = ev.iter().map(|e| (-I * e * t).exp()).collect();
                let scaled = ComplexMatrix::from_fn(r.rows(), r.cols(), |i, j| r[(i, j)] * phases[j]);
                Ok(&scaled * &lt)
            })
        }
        Err(Error::DefectiveMatrix { .. }) => {
            let h = h.clone();
            Box::new(move |t| expm(&h.scale(-I * t)))
        }
        Err(e) => return Err(e),
    };
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let u = propagator(t)?;
        let mut rho = &(&u * rho0) * &u.adjoint();
        normalize_trace(&mut rho)?;
        values.push(rho);
    }
    Ok(TimeSeries {
        times: times.to_vec(),
        values,
    })
}

/// Expectation values of `obs` along a trajectory; the real part is kept.
pub fn observable_series(obs: &ComplexMatrix, series: &TimeSeries<ComplexMatrix>) -> Result<Vec<f64>> {
    series
        .values
        .iter()
        .map(|rho| {
            if rho.rows() != obs.rows() {
                return Err(dim_err(obs.rows(), rho.rows()));
            }
            Ok(expectation(obs, rho).re)
        })
        .collect()
}
