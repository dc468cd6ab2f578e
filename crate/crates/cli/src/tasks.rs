use std::collections::BTreeMap;

use nhjump_core::dynamics::{evolve_master, evolve_nh, TimeSeries};
use nhjump_core::fock::number_operator;
use nhjump_core::linalg::{completeness_residual, eig_biortho, ComplexMatrix, EIG_TOL};
use nhjump_core::liouvillian::{
    build_full, build_nojump, composite_hamiltonian, spectra_match, spectrum, LindbladModel,
};
use nhjump_core::models::{
    bcs_gap_solve, bcs_ground_corrections, bcs_modes, bcs_observables, bcs_restricted_model,
    hatano_nelson, pair_state, pure_state, sigma_z, tls_model, tls_reference, BcsMode,
    BcsParams,
};
use nhjump_core::perturbation::{
    correct_first_order, correct_second_order, perturbed_eigensystem, PerturbationBasis,
};
use nhjump_core::{Result, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ModelSpec, Scenario, Source, Task, TlsInitial};

/// Tolerance for matching full and no-jump spectra.
pub const SPECTRUM_MATCH_TOL: f64 = 1e-8;

const GAP_TOL: f64 = 1e-13;
const GAP_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, headers: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            headers,
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, f64>,
}

type Extractor = Box<dyn Fn(&ComplexMatrix) -> Result<Vec<f64>> + Sync>;

/// One observable group written to its own CSV.
struct Observable {
    name: &'static str,
    columns: Vec<String>,
    extract: Extractor,
}

struct Prepared {
    model: LindbladModel,
    rho0: ComplexMatrix,
    observables: Vec<Observable>,
    bcs: Option<(BcsParams, Vec<BcsMode>, f64, usize)>,
}

fn solve_bcs(params: &BcsParams) -> Result<(Vec<BcsMode>, f64, usize, C64)> {
    let sol = bcs_gap_solve(params, None, GAP_TOL, GAP_MAX_ITER)?;
    let modes = bcs_modes(params, sol.delta)?;
    Ok((modes, sol.residual, sol.iterations, sol.delta))
}

fn prepare(spec: &ModelSpec) -> Result<Prepared> {
    match spec {
        ModelSpec::Tls { params, initial } => {
            let model = tls_model(params)?;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let psi = match initial {
                TlsInitial::Up => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                TlsInitial::Down => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                TlsInitial::Plus => [C64::new(s, 0.0), C64::new(s, 0.0)],
            };
            let sz = sigma_z();
            Ok(Prepared {
                model,
                rho0: pure_state(&psi)?,
                observables: vec![Observable {
                    name: "sigma_z",
                    columns: vec!["sigma_z".into()],
                    extract: Box::new(move |rho| Ok(vec![expect_re(&sz, rho)])),
                }],
                bcs: None,
            })
        }
        ModelSpec::HatanoNelson { params, pair } => {
            let model = hatano_nelson(params)?;
            let space = params.space()?;
            let number = number_operator(&space);
            Ok(Prepared {
                model,
                rho0: pair_state(&space, pair[0], pair[1])?,
                observables: vec![Observable {
                    name: "number",
                    columns: vec!["number".into()],
                    extract: Box::new(move |rho| Ok(vec![expect_re(&number, rho)])),
                }],
                bcs: None,
            })
        }
        ModelSpec::Bcs { params } => {
            let (modes, residual, iterations, _) = solve_bcs(params)?;
            let sys = std::sync::Arc::new(bcs_restricted_model(params, &modes)?);
            let n = modes.len();
            let energy_sys = sys.clone();
            let pop_sys = sys.clone();
            let mut pop_cols = vec!["p0".to_string()];
            pop_cols.extend((1..=n).map(|k| format!("p{k}")));
            Ok(Prepared {
                model: sys.model.clone(),
                rho0: sys.ground_state(),
                observables: vec![
                    Observable {
                        name: "e_aver",
                        columns: vec!["e_aver".into()],
                        extract: Box::new(move |rho| {
                            Ok(vec![bcs_observables(rho, &energy_sys)?.e_aver])
                        }),
                    },
                    Observable {
                        name: "populations",
                        columns: pop_cols,
                        extract: Box::new(move |rho| {
                            let o = bcs_observables(rho, &pop_sys)?;
                            let mut v = vec![o.p0];
                            v.extend(o.pk);
                            Ok(v)
                        }),
                    },
                ],
                bcs: Some((params.clone(), modes, residual, iterations)),
            })
        }
    }
}

fn expect_re(obs: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    nhjump_core::dynamics::expectation(obs, rho).re
}

fn trajectory(
    p: &Prepared,
    source: Source,
    times: &[f64],
    order: usize,
    residuals: &mut BTreeMap<String, f64>,
) -> Result<TimeSeries<ComplexMatrix>> {
    match source {
        Source::Exact => evolve_master(&p.model, &p.rho0, times),
        Source::Nh => {
            if let Ok(es) = eig_biortho(&p.model.effective_nh_hamiltonian(), EIG_TOL) {
                residuals.insert("nh_biorthogonality".into(), es.biorthogonality_residual());
                residuals.insert("nh_completeness".into(), completeness_residual(&es));
            }
            evolve_nh(&p.model, &p.rho0, times)
        }
        Source::Pert => {
            let es = perturbed_eigensystem(&p.model, order)?;
            residuals.insert("pert_biorthogonality".into(), es.as_biortho().biorthogonality_residual());
            let min_overlap = es.overlap.iter().map(|o| o.norm()).fold(f64::INFINITY, f64::min);
            residuals.insert("pert_min_overlap".into(), min_overlap);
            es.evolve(&p.rho0, times)
        }
    }
}

fn evolve(spec: &ModelSpec, sc: &Scenario) -> Result<Outcome> {
    let times = sc.eval_times().expect("validated evolution times");
    let p = prepare(spec)?;
    let mut out = Outcome::default();
    if let Some((_, _, residual, iterations)) = &p.bcs {
        out.residuals.insert("gap_residual".into(), *residual);
        out.results.insert("gap_iterations".into(), json!(iterations));
    }
    let mut series = Vec::new();
    for &s in &sc.sources {
        series.push((s, trajectory(&p, s, times, sc.order, &mut out.residuals)?));
    }
    for obs in &p.observables {
        let mut headers = vec!["t".to_string()];
        for col in &obs.columns {
            for (s, _) in &series {
                headers.push(format!("{col}_{}", s.as_str()));
            }
        }
        let mut table = Table::new(obs.name, headers);
        let mut values: Vec<Vec<Vec<f64>>> = Vec::new();
        for (_, ts) in &series {
            values.push(ts.values.iter().map(|r| (obs.extract)(r)).collect::<Result<_>>()?);
        }
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![t];
            for c in 0..obs.columns.len() {
                for v in &values {
                    row.push(v[i][c]);
                }
            }
            table.rows.push(row);
        }
        out.tables.push(table);
    }
    Ok(out)
}

fn spectra(spec: &ModelSpec) -> Result<Outcome> {
    let p = prepare(spec)?;
    let full = spectrum(&build_full(&p.model))?;
    let nojump = spectrum(&build_nojump(&p.model))?;
    let m = spectra_match(&full, &nojump, SPECTRUM_MATCH_TOL)?;
    let mut out = Outcome::default();
    for (name, ev) in [("spectrum_full", &full), ("spectrum_nojump", &nojump)] {
        let mut t = Table::new(name, vec!["re".into(), "im".into()]);
        t.rows = ev.iter().map(|z| vec![z.re, z.im]).collect();
        out.tables.push(t);
    }
    out.results.insert("match".into(), json!({
        "matched": m.matched,
        "max_distance": m.max_distance,
        "tol": m.tol,
        "size": full.len(),
    }));
    Ok(out)
}

fn gap(spec: &ModelSpec) -> Result<Outcome> {
    let ModelSpec::Bcs { params } = spec else {
        unreachable!("gap is validated to need bcs")
    };
    let (modes, residual, iterations, delta) = solve_bcs(params)?;
    let (e0, e1) = bcs_ground_corrections(params, &modes);
    let mut out = Outcome::default();
    out.results.insert("delta0_re".into(), json!(delta.re));
    out.results.insert("delta0_im".into(), json!(delta.im));
    out.results.insert("iterations".into(), json!(iterations));
    out.results.insert("u1_re".into(), json!(params.u1().re));
    out.results.insert("u1_im".into(), json!(params.u1().im));
    out.results.insert("ground_e0".into(), json!(e0));
    out.results.insert("ground_e1".into(), json!(e1));
    out.residuals.insert("gap_residual".into(), residual);
    let headers = ["k", "xi", "e_re", "e_im", "u_re", "u_im", "v_re", "v_im"];
    let mut t = Table::new("modes", headers.iter().map(|s| s.to_string()).collect());
    t.rows = modes
        .iter()
        .map(|m| vec![m.k, m.xi, m.e.re, m.e.im, m.u.re, m.u.im, m.v.re, m.v.im])
        .collect();
    out.tables.push(t);
    Ok(out)
}

/// Computational-basis label of each product right vector.
fn labels(basis: &PerturbationBasis) -> Vec<usize> {
    (0..basis.dim())
        .map(|n| {
            let col = basis.right().column(n);
            (0..col.len())
                .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
                .unwrap_or(0)
        })
        .collect()
}

fn corrections(spec: &ModelSpec, order: usize) -> Result<Outcome> {
    let p = prepare(spec)?;
    let comp = composite_hamiltonian(&p.model)?;
    let basis = PerturbationBasis::new(&comp)?;
    let first = correct_first_order(&basis);
    let second = (order == 2).then(|| correct_second_order(&basis, &first));
    let label = labels(&basis);
    let mut headers: Vec<String> = ["mode", "basis", "e0_re", "e0_im", "e1_re", "e1_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if second.is_some() {
        headers.extend(["e2_re".into(), "e2_im".into()]);
    }
    let mut t = Table::new("corrections", headers);
    for n in 0..basis.dim() {
        let mut row = vec![
            n as f64,
            label[n] as f64,
            basis.e0()[n].re,
            basis.e0()[n].im,
            first.e1[n].re,
            first.e1[n].im,
        ];
        if let Some(s) = &second {
            row.extend([s.e2[n].re, s.e2[n].im]);
        }
        t.rows.push(row);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    match spec {
        ModelSpec::Tls { params, .. } => {
            let r = tls_reference(params);
            let mut dev: f64 = 0.0;
            for n in 0..4 {
                let pn = label[n];
                dev = dev
                    .max((basis.e0()[n] - r.e0[pn]).norm())
                    .max((first.e1[n] - r.e1[pn]).norm());
                if let Some(s) = &second {
                    dev = dev.max((s.e2[n] - r.e2[pn]).norm());
                }
                for k in 0..4 {
                    dev = dev.max((first.right[(k, n)] - r.psi1[pn][label[k]]).norm());
                }
            }
            out.residuals.insert("reference_deviation".into(), dev);
        }
        ModelSpec::Bcs { params } => {
            let (modes, residual) = p.bcs.as_ref().map(|b| (&b.1, b.2)).expect("bcs data");
            let (e0, e1) = bcs_ground_corrections(params, modes);
            let ground = label.iter().position(|&l| l == 0).unwrap_or(0);
            let engine = C64::new(0.0, 1.0) * first.e1[ground];
            out.results.insert("ground_e0".into(), json!(e0));
            out.results.insert("ground_e1".into(), json!(e1));
            out.results.insert("engine_ground_e1".into(), json!([engine.re, engine.im]));
            out.residuals.insert("gap_residual".into(), residual);
        }
        ModelSpec::HatanoNelson { .. } => {}
    }
    Ok(out)
}

fn run_single(spec: &ModelSpec, sc: &Scenario) -> Result<Outcome> {
    match sc.task {
        Task::Spectrum => spectra(spec),
        Task::Gap => gap(spec),
        Task::Corrections => corrections(spec, sc.order),
        Task::EvolveMaster | Task::EvolveNh | Task::EvolvePerturb => evolve(spec, sc),
    }
}

/// Runs a scenario, parallel over sweep values.
pub fn run(sc: &Scenario) -> Result<Outcome> {
    let Some(sweep) = &sc.sweep else {
        return run_single(&sc.model, sc);
    };
    let parts: Vec<Outcome> = sweep
        .values
        .par_iter()
        .map(|&v| run_single(&sc.model.with_sweep(sweep.param, v), sc))
        .collect::<Result<_>>()?;
    let key = sweep.param.as_str();
    // Tables whose columns change across the sweep are written per value.
    let uniform = |name: &str| {
        let mut heads = parts
            .iter()
            .flat_map(|p| p.tables.iter().filter(|t| t.name == name).map(|t| &t.headers));
        let first = heads.next();
        heads.all(|h| Some(h) == first)
    };
    let mut out = Outcome::default();
    for (&v, part) in sweep.values.iter().zip(&parts) {
        let label = format!("{key}={v}");
        for table in &part.tables {
            if !uniform(&table.name) {
                let mut t = table.clone();
                t.name = format!("{}_{key}{v}", table.name);
                out.tables.push(t);
                continue;
            }
            let merged = match out.tables.iter_mut().position(|t| t.name == table.name) {
                Some(i) => &mut out.tables[i],
                None => {
                    let mut headers = vec![key.to_string()];
                    headers.extend(table.headers.iter().cloned());
                    out.tables.push(Table::new(&table.name, headers));
                    out.tables.last_mut().unwrap()
                }
            };
            for row in &table.rows {
                let mut r = vec![v];
                r.extend(row);
                merged.rows.push(r);
            }
        }
        for (k, val) in &part.results {
            out.results.insert(format!("{label}/{k}"), val.clone());
        }
        for (k, val) in &part.residuals {
            out.residuals.insert(format!("{label}/{k}"), *val);
        }
    }
    Ok(out)
}

/// Builds every model of the scenario without running the task.
pub fn dry_run(sc: &Scenario) -> Result<()> {
    match &sc.sweep {
        Some(s) => {
            for &v in &s.values {
                prepare(&sc.model.with_sweep(s.param, v))?;
            }
        }
        None => {
            prepare(&sc.model)?;
        }
    }
    Ok(())
}
