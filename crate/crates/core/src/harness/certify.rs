//! Re-check every inequality on the rows of a trajectory table.

use serde::Serialize;

use super::csvio::Table;
use crate::bounds::{entanglement_witness_k, k_producibility_variance_bound, BoundReport, BOUND_ABS_TOL, BOUND_REL_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub row: usize,
    pub t: f64,
    pub bound: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub rows: usize,
    pub checks: Vec<String>,
    /// Checks whose input columns are absent from the table.
    pub skipped: Vec<String>,
    pub violations: Vec<Violation>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Cols {
    idx: std::collections::HashMap<String, usize>,
}

impl Cols {
    fn get(&self, row: &[Option<f64>], name: &str) -> Option<f64> {
        self.idx.get(name).and_then(|&i| row[i])
    }

    fn has(&self, names: &[&str]) -> bool {
        names.iter().all(|n| self.idx.contains_key(*n))
    }
}

/// Run every applicable bound on every row.
pub fn certify_rows(table: &Table) -> Result<CertifyReport> {
    let cols = Cols { idx: table.header.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect() };
    for required in ["t", "P", "var_HB", "I_E"] {
        if !cols.has(&[required]) {
            return Err(Error::validation(format!("trajectory table lacks column {required}")));
        }
    }
    type Check = (&'static str, &'static [&'static str]);
    let all: [Check; 7] = [
        ("corollary1", &["P", "var_HB", "I_E"]),
        ("heisenberg", &["P", "var_HB", "var_HC"]),
        ("fisher_vs_generator", &["I_E", "var_HC"]),
        ("fisher_vs_qfi", &["I_E", "I_Q"]),
        ("theorem1_m2", &["var_HB2", "dHB2_dt", "I_E"]),
        ("corollary2", &["P", "var_HB", "I_E", "n_cells"]),
        ("observation1", &["E", "E_upper", "E_lower"]),
    ];
    let (checks, skipped): (Vec<Check>, Vec<Check>) = all.into_iter().partition(|(_, need)| cols.has(need));
    let mut violations = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        let t = cols.get(row, "t").unwrap_or(f64::NAN);
        let mut push = |bound: &str, rep: BoundReport| {
            if !rep.satisfied {
                violations.push(Violation { row: r, t, bound: bound.to_string(), lhs: rep.lhs, rhs: rep.rhs });
            }
        };
        let v = |name: &str| cols.get(row, name).unwrap_or(f64::NAN);
        for (name, _) in &checks {
            match *name {
                "corollary1" => push(name, BoundReport::new(t, v("P").powi(2), v("var_HB") * v("I_E"))),
                "heisenberg" => push(name, BoundReport::new(t, v("P").powi(2), 4.0 * v("var_HB") * v("var_HC"))),
                "fisher_vs_generator" => push(name, BoundReport::new(t, v("I_E"), 4.0 * v("var_HC"))),
                "fisher_vs_qfi" => push(name, BoundReport::new(t, v("I_E"), v("I_Q"))),
                "theorem1_m2" => push(name, BoundReport::new(t, v("dHB2_dt").powi(2), v("var_HB2") * v("I_E"))),
                "corollary2" => {
                    let n = v("n_cells");
                    if !(n >= 1.0) {
                        push(name, BoundReport::new(t, f64::NAN, f64::NAN));
                        continue;
                    }
                    let n = n.round() as usize;
                    match entanglement_witness_k(v("var_HB").max(0.0), n) {
                        Ok(k) => {
                            let rhs = k_producibility_variance_bound(n, k)? * v("I_E");
                            push(name, BoundReport::new(t, v("P").powi(2), rhs));
                        }
                        Err(_) => push(name, BoundReport::new(t, v("var_HB"), (n * n) as f64 / 4.0)),
                    }
                }
                "observation1" => {
                    let e = v("E");
                    let span = (v("E_upper") - v("E_lower")).abs();
                    let tol = BOUND_REL_TOL * span + BOUND_ABS_TOL;
                    push("observation1_store", BoundReport::new(t, e, v("E_upper") + tol));
                    push("observation1_extract", BoundReport::new(t, v("E_lower") - tol, e));
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(CertifyReport {
        rows: table.rows.len(),
        checks: checks.iter().map(|c| c.0.to_string()).collect(),
        skipped: skipped.iter().map(|c| c.0.to_string()).collect(),
        violations,
    })
}
