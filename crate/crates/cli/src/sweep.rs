//! Rigidity sweeps over one-parameter families of equal-measure domains.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use talenti_core::analysis::{rigidity_gap_sweep, RigidityEntry};
use talenti_core::SolverConfig;

use crate::datum::DatumSource;
use crate::domains::build_mesh;
use crate::scenario::{Domain, Scenario};
use crate::{check_interrupt, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Ellipses with semi-axes `ratio : 1`.
    Ellipse,
    /// Rectangles with sides `ratio : 1`.
    Rectangle,
}

impl FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ellipse" => Ok(Family::Ellipse),
            "rectangle" => Ok(Family::Rectangle),
            _ => Err(CliError::Config(format!("unknown family {s:?} (ellipse or rectangle)"))),
        }
    }
}

impl Family {
    pub fn domain(self, ratio: f64) -> Domain {
        match self {
            Family::Ellipse => Domain::Ellipse { a: ratio, b: 1.0 },
            Family::Rectangle => Domain::Rectangle { a: ratio, b: 1.0 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub family: Family,
    pub ratios: Vec<f64>,
    pub k: f64,
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    pub mesh_h: f64,
    pub entries: Vec<RigidityEntry<f64>>,
    /// Whether the gaps increase with the ratio; reported, not asserted.
    pub monotone: bool,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.failure.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "label,ratio,area,isoperimetric_defect,norm_u,norm_v,gap,relative_gap,quadrature_error,failure")?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
        for (e, r) in self.entries.iter().zip(&self.ratios) {
            writeln!(
                w,
                "\"{}\",{r},{:.16e},{:.16e},{},{},{},{},{},{}",
                e.label,
                e.area,
                e.isoperimetric_defect,
                opt(e.norm_u),
                opt(e.norm_v),
                opt(e.gap),
                opt(e.relative_gap()),
                opt(e.quadrature_error),
                e.failure.clone().unwrap_or_default().replace(',', ";")
            )?;
        }
        Ok(())
    }
}

/// Solves `base` on each family member and reports the Lorentz-norm gaps at
/// the largest `k` of the scenario.
pub fn run_sweep(base: &Scenario, family: Family, ratios: &[f64]) -> Result<SweepReport, CliError> {
    if ratios.is_empty() || ratios.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(CliError::Config("ratios must be positive numbers".into()));
    }
    let mut probe = base.clone();
    probe.checks.clear();
    probe.domain = family.domain(ratios[0]);
    probe.validate()?;
    if base.n != 2 {
        return Err(CliError::Config("sweeps need planar solves (n = 2)".into()));
    }
    let params = base.params()?;
    let k = base.k_values()?.last().copied().unwrap_or(1.0);
    let source = DatumSource::load(&base.datum)?;
    let mut members = Vec::with_capacity(ratios.len());
    for &r in ratios {
        check_interrupt()?;
        let domain = family.domain(r);
        let label = Scenario { domain: domain.clone(), ..base.clone() }.label();
        members.push((label, Arc::new(build_mesh(&domain, base.area, base.mesh_h)?)));
    }
    let config = SolverConfig::for_exponent(params.p);
    let entries = rigidity_gap_sweep(&members, |m| source.on(m).map_err(CliError::into_core), &params, k, base.f_is_one(), &config)?;
    let gaps: Vec<Option<f64>> = entries.iter().map(|e| e.gap).collect();
    let monotone = gaps.windows(2).all(|w| matches!(w, [Some(a), Some(b)] if b > a));
    Ok(SweepReport { family, ratios: ratios.to_vec(), k, n: base.n, p: base.p, beta: base.beta, mesh_h: base.mesh_h, entries, monotone })
}

/// Writes `gaps.csv` and `sweep.json` into `out_dir`.
pub fn write_sweep(report: &SweepReport, out_dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let io = |e: std::io::Error| CliError::from(talenti_core::Error::from(e));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    let csv = out_dir.join("gaps.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&csv).map_err(io)?);
    report.write_csv(&mut w).map_err(io)?;
    w.flush().map_err(io)?;
    let json = out_dir.join("sweep.json");
    let text = serde_json::to_string_pretty(report).map_err(talenti_core::Error::from)?;
    std::fs::write(&json, text + "\n").map_err(io)?;
    Ok((csv, json))
}
