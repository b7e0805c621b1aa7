//! Regeneration of the numeric tables for temporal delays, normalization
//! factors, cumulants and Koenderink parameters.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{
    cumulants_logarithmic, cumulants_uniform, koenderink_map_finite_k, koenderink_map_limit, tmax_numeric, StageCount,
};
use crate::normalization::{
    default_k_ref, deviation_from_limit, discrete_cascade, lp_norm_factor_discrete, variance_norm_factor,
};
use crate::scales::{self, mean_logarithmic, mean_uniform};

/// Distribution parameters of the table columns after the uniform one.
pub const TABLE_C: [f64; 3] = [std::f64::consts::SQRT_2, 1.681_792_830_507_429, 2.0];

/// Which table to regenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// Temporal means.
    T1,
    /// Positions of the kernel maxima.
    T2,
    /// First-order normalization factors.
    T3,
    /// Second-order normalization factors.
    T4,
    /// Relative deviation of the normalization factors from their limit.
    T5,
    Cumulants,
    Koenderink,
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(TableId::T1),
            "t2" => Ok(TableId::T2),
            "t3" => Ok(TableId::T3),
            "t4" => Ok(TableId::T4),
            "t5" => Ok(TableId::T5),
            "cumulants" => Ok(TableId::Cumulants),
            "koenderink" => Ok(TableId::Koenderink),
            other => Err(Error::param(format!("unknown table {other}"))),
        }
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// First row whose leading columns equal `key`.
    pub fn row(&self, key: &[f64]) -> Option<&[f64]> {
        self.rows.iter().find(|r| r.iter().zip(key).all(|(a, b)| a == b)).map(|r| r.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

const DIST_COLUMNS: [&str; 4] = ["uni", "c=sqrt2", "c=2^(3/4)", "c=2"];

fn distribution(tau: f64, column: usize, stages: usize) -> Result<scales::ScaleDistribution> {
    if column == 0 {
        scales::uniform_time_constants(tau, stages)
    } else {
        scales::logarithmic_time_constants(tau, TABLE_C[column - 1], stages)
    }
}

fn column_c(column: usize) -> Option<f64> {
    (column > 0).then(|| TABLE_C[column - 1])
}

/// Temporal means at unit variance for `K = 2..=12`.
pub fn table_means() -> Result<Table> {
    let mut t = Table::new(&["K", "uni", "c=sqrt2", "c=2^(3/4)", "c=2"]);
    for k in 2..=12 {
        let mut row = vec![k as f64, mean_uniform(1.0, k)];
        for c in TABLE_C {
            row.push(mean_logarithmic(1.0, c, k)?);
        }
        t.rows.push(row);
    }
    Ok(t)
}

/// Positions of the kernel maxima at unit variance for `K = 2..=12`.
pub fn table_tmax() -> Result<Table> {
    let mut t = Table::new(&["K", "uni", "c=sqrt2", "c=2^(3/4)", "c=2"]);
    let rows: Result<Vec<Vec<f64>>> = (2..=12usize)
        .into_par_iter()
        .map(|k| {
            let mut row = vec![k as f64];
            for col in 0..4 {
                row.push(tmax_numeric(&distribution(1.0, col, k)?)?);
            }
            Ok(row)
        })
        .collect();
    t.rows = rows?;
    Ok(t)
}

/// `L_1` normalization factors of order `n` for the discrete cascades.
pub fn table_normalization(n: usize) -> Result<Table> {
    let mut headers = vec!["tau", "K", "variance"];
    headers.extend(DIST_COLUMNS);
    let mut t = Table::new(&headers);
    let keys: Vec<(f64, usize)> =
        [1.0, 16.0, 256.0].iter().flat_map(|&tau| [2, 3, 4, 5, 6, 7, 8, 16].map(|k| (tau, k))).collect();
    let rows: Result<Vec<Vec<f64>>> = keys
        .par_iter()
        .map(|&(tau, k)| {
            let mut row = vec![tau, k as f64, variance_norm_factor(tau, n, 1.0)];
            for col in 0..4 {
                row.push(lp_norm_factor_discrete(&discrete_cascade(tau, column_c(col), k)?, n, 1.0)?);
            }
            Ok(row)
        })
        .collect();
    t.rows = rows?;
    Ok(t)
}

/// Relative deviation from the many-stage reference at `tau = 256`.
pub fn table_deviation() -> Result<Table> {
    let mut headers = vec!["n", "K"];
    headers.extend(DIST_COLUMNS);
    let mut t = Table::new(&headers);
    let keys: Vec<(usize, usize)> = [1, 2].iter().flat_map(|&n| [2, 4, 8, 16, 32].map(|k| (n, k))).collect();
    let rows: Result<Vec<Vec<f64>>> = keys
        .par_iter()
        .map(|&(n, k)| {
            let mut row = vec![n as f64, k as f64];
            for col in 0..4 {
                let c = column_c(col);
                row.push(deviation_from_limit(n, 256.0, c, k, default_k_ref(c))?);
            }
            Ok(row)
        })
        .collect();
    t.rows = rows?;
    Ok(t)
}

/// Cumulants and shape measures at unit variance; `K = 0` marks the limit.
pub fn table_cumulants() -> Result<Table> {
    let mut t = Table::new(&["c", "K", "kappa1", "kappa2", "kappa3", "kappa4", "skewness", "kurtosis"]);
    let push = |t: &mut Table, c: f64, k: usize, r: crate::kernels::CumulantReport| {
        let mut row = vec![c, k as f64];
        row.extend(r.kappa);
        row.extend([r.gamma1, r.gamma2]);
        t.rows.push(row);
    };
    for k in [2, 4, 8, 16] {
        push(&mut t, 1.0, k, cumulants_uniform(1.0, k)?);
    }
    for c in TABLE_C {
        for k in [2, 4, 8, 16] {
            push(&mut t, c, k, cumulants_logarithmic(1.0, c, StageCount::Finite(k))?);
        }
        push(&mut t, c, 0, cumulants_logarithmic(1.0, c, StageCount::Limit)?);
    }
    Ok(t)
}

/// Koenderink kernel parameters matched to the cascades at unit variance; `K = 0` marks the limit.
pub fn table_koenderink() -> Result<Table> {
    let mut t = Table::new(&["c", "K", "sigma", "delta"]);
    for c in TABLE_C {
        for k in [2, 4, 8, 16] {
            let p = koenderink_map_finite_k(1.0, c, k)?;
            t.rows.push(vec![c, k as f64, p.sigma, p.delta]);
        }
        let p = koenderink_map_limit(1.0, c)?;
        t.rows.push(vec![c, 0.0, p.sigma, p.delta]);
    }
    Ok(t)
}

pub fn table(id: TableId) -> Result<Table> {
    match id {
        TableId::T1 => table_means(),
        TableId::T2 => table_tmax(),
        TableId::T3 => table_normalization(1),
        TableId::T4 => table_normalization(2),
        TableId::T5 => table_deviation(),
        TableId::Cumulants => table_cumulants(),
        TableId::Koenderink => table_koenderink(),
    }
}
