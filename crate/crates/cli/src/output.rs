use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Scenario;
use crate::tasks::{Outcome, Table};

/// Scientific notation with 16 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.15e}")
}

pub fn write_table(path: &Path, table: &Table) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| format_value(x)))?;
    }
    w.flush()
}

const CONVENTIONS: &[&str] = &[
    "vec(rho) is row-major: (m, n) -> m * d + n",
    "composite Hamiltonian H~ = i L with L the Liouvillian",
    "right eigenvectors unit norm with largest entry real positive; left vectors dual",
    "eigenvalues sorted by real part, then imaginary part",
    "times and energies in units of omega (tls) or J (hatano-nelson, bcs)",
    "bcs grid k_m = pi m / (N - 1); U1 = U0 + i kappa / 2 unless given",
    "bcs modes m and N-1-m share E; populations are per grid mode",
    "bcs v is minus the principal root (Re v <= 0)",
];

pub fn metadata(sc: &Scenario, outcome: &Outcome, files: &[String]) -> Value {
    let sweep = sc.sweep.as_ref().map(|s| {
        json!({
            "param": s.param.as_str(),
            "values": s.values,
            "sample_times": s.sample_times,
        })
    });
    json!({
        "scenario": sc.name,
        "description": sc.description,
        "model": sc.model.kind().as_str(),
        "task": sc.task.as_str(),
        "order": sc.order,
        "sources": sc.sources.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        "params": sc.params,
        "sweep": sweep,
        "version": env!("CARGO_PKG_VERSION"),
        "conventions": CONVENTIONS,
        "results": outcome.results,
        "residuals": outcome.residuals,
        "files": files,
    })
}

/// Writes `<dir>/<name>_<table>.csv` per table and `<dir>/<name>.json`.
pub fn write_outcome(dir: &Path, sc: &Scenario, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut names = Vec::new();
    for table in &outcome.tables {
        let file = format!("{}_{}.csv", sc.name, table.name);
        let path = dir.join(&file);
        write_table(&path, table)?;
        names.push(file);
        written.push(path);
    }
    let meta = metadata(sc, outcome, &names);
    let path = dir.join(format!("{}.json", sc.name));
    let mut text = serde_json::to_string_pretty(&meta).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_keep_sixteen_digits() {
        assert_eq!(format_value(0.1), "1.000000000000000e-1");
        assert_eq!(format_value(-2.5e-12), "-2.500000000000000e-12");
        assert_eq!(format_value(0.0), "0.000000000000000e0");
    }
}
