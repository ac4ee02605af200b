//! Parameter sweeps over the unbiased qubit family `Z(η)` and the six-outcome
//! family, emitted as CSV.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, ComplexMatrix};
use crate::measures::{robustness_of_measurement, roi_channel_povm, MeasureOptions};
use crate::quantum::{ChoiChannel, Povm};
use crate::tradeoff::{hm_bound, prop3_bound};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    UnbiasedEta,
    SixfoldP,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UnbiasedEta => "unbiased-eta",
            Family::SixfoldP => "sixfold-p",
        }
    }

    /// Frozen column order of the CSV output.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Family::UnbiasedEta => &["eta", "rom", "roi_id_povm", "bound_corollary", "bound_hm"],
            Family::SixfoldP => &[
                "p",
                "rom",
                "bound_corollary",
                "bound_hm",
                "effect_norm",
                "complement_norm",
            ],
        }
    }

    fn povm(&self, t: f64) -> Result<Povm> {
        match self {
            Family::UnbiasedEta => Povm::unbiased_qubit(t),
            Family::SixfoldP => Povm::sixfold(t),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased-eta" => Ok(Family::UnbiasedEta),
            "sixfold-p" => Ok(Family::SixfoldP),
            other => Err(Error::domain(format!("unknown sweep family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Columns to emit, in this order. Empty means all columns.
    pub columns: Vec<String>,
}

impl SweepSpec {
    pub fn new(family: Family, start: f64, end: f64, steps: usize) -> Self {
        SweepSpec {
            family,
            start,
            end,
            steps,
            columns: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::domain(format!(
                "a sweep needs at least 2 steps, got {}",
                self.steps
            )));
        }
        if !(self.start < self.end) {
            return Err(Error::domain(format!(
                "sweep start {} must be below end {}",
                self.start, self.end
            )));
        }
        if self.start < 0.0 || self.end > 1.0 {
            return Err(Error::domain(format!(
                "sweep range [{}, {}] leaves [0, 1]",
                self.start, self.end
            )));
        }
        let known = self.family.columns();
        for c in &self.columns {
            if !known.contains(&c.as_str()) {
                return Err(Error::domain(format!(
                    "column {c:?} is not available for {}; expected one of {}",
                    self.family.name(),
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.end
                } else {
                    self.start + (self.end - self.start) * k as f64 / last
                }
            })
            .collect()
    }

    pub fn selected_columns(&self) -> Vec<&str> {
        if self.columns.is_empty() {
            self.family.columns().to_vec()
        } else {
            self.columns.iter().map(String::as_str).collect()
        }
    }
}

/// One grid point, values in the family's full column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
}

fn evaluate(family: Family, t: f64, wanted: &[&str], opts: &MeasureOptions) -> Result<SweepRow> {
    let e = family.povm(t)?;
    let mut values = Vec::with_capacity(family.columns().len());
    for &col in family.columns() {
        let v = if !wanted.contains(&col) {
            f64::NAN
        } else {
            match col {
                "eta" | "p" => t,
                "rom" => robustness_of_measurement(&e)?,
                "roi_id_povm" => roi_channel_povm(&ChoiChannel::identity(e.dim()), &e, opts)?.value,
                "bound_corollary" => 2.0 * prop3_bound(&e)?,
                "bound_hm" => hm_bound(&e)?,
                "effect_norm" => operator_norm(e.effect(0))?,
                "complement_norm" => {
                    operator_norm(&(&ComplexMatrix::identity(e.dim()) - e.effect(0)))?
                }
                _ => unreachable!("column list is fixed per family"),
            }
        };
        values.push(v);
    }
    Ok(SweepRow { values })
}

/// Evaluates every grid point, on up to `jobs` threads. Rows come back in
/// grid order.
pub fn run_sweep(spec: &SweepSpec, opts: &MeasureOptions, jobs: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    let wanted = spec.selected_columns();
    let jobs = jobs.clamp(1, grid.len());
    if jobs == 1 {
        return grid
            .iter()
            .map(|&t| evaluate(spec.family, t, &wanted, opts))
            .collect();
    }
    let mut slots: Vec<Option<Result<SweepRow>>> = vec![None; grid.len()];
    let chunk = grid.len().div_ceil(jobs);
    std::thread::scope(|s| {
        for (points, out) in grid.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            let wanted = &wanted;
            s.spawn(move || {
                for (&t, slot) in points.iter().zip(out.iter_mut()) {
                    *slot = Some(evaluate(spec.family, t, wanted, opts));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect()
}

/// Decimal rendering with 12 significant digits and no exponent.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v == 0.0 {
            "0".into()
        } else {
            format!("{v}")
        };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 40) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// CSV with a header line and the selected columns of every row.
pub fn to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let all = spec.family.columns();
    let cols = spec.selected_columns();
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| all.iter().position(|a| a == c).expect("validated column"))
        .collect();
    let mut out = cols.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = idx
            .iter()
            .map(|&i| format_significant(row.values[i]))
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0), "0");
        assert_eq!(format_significant(1.0), "1");
        assert_eq!(format_significant(0.1), "0.1");
        assert_eq!(format_significant(2.0f64.sqrt()), "1.41421356237");
        assert_eq!(
            format_significant(-0.000123456789012345),
            "-0.000123456789012"
        );
        assert_eq!(format_significant(1234.5), "1234.5");
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = SweepSpec::new(Family::UnbiasedEta, 0.0, 1.0, 11).grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[10], 1.0);
        assert!((g[3] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SweepSpec::new(Family::SixfoldP, 0.0, 1.0, 1),
            SweepSpec::new(Family::SixfoldP, 0.5, 0.5, 3),
            SweepSpec::new(Family::SixfoldP, -0.1, 0.5, 3),
            SweepSpec::new(Family::SixfoldP, 0.1, 1.5, 3),
            SweepSpec {
                columns: vec!["roi_id_povm".into()],
                ..SweepSpec::new(Family::SixfoldP, 0.0, 1.0, 3)
            },
        ] {
            assert!(matches!(spec.validate(), Err(Error::Domain(_))), "{spec:?}");
        }
    }

    #[test]
    fn threaded_rows_match_sequential() {
        let spec = SweepSpec::new(Family::SixfoldP, 0.0, 1.0, 7);
        let opts = MeasureOptions::default();
        let a = run_sweep(&spec, &opts, 1).unwrap();
        let b = run_sweep(&spec, &opts, 3).unwrap();
        assert_eq!(to_csv(&spec, &a), to_csv(&spec, &b));
    }

    #[test]
    fn column_subset() {
        let spec = SweepSpec {
            columns: vec!["bound_hm".into(), "eta".into()],
            ..SweepSpec::new(Family::UnbiasedEta, 0.0, 1.0, 2)
        };
        let rows = run_sweep(&spec, &MeasureOptions::default(), 1).unwrap();
        assert_eq!(to_csv(&spec, &rows), "bound_hm,eta\n0,0\n0.0625,1\n");
    }
}
