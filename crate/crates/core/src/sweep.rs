//! Pulse-area sweeps over the closed-form stages, the fourteen figure
//! datasets, and CSV output.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::analytic::{
    after_c1, after_c2, after_data, after_r1, after_r2_cdr, after_r2_dr, StageAreas,
};
use crate::error::{Error, Result};
use crate::state::DensityMatrix;

/// Closed-form stage a sweep evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepStage {
    AfterData,
    AfterR1,
    /// Bare double rephasing (no control pair).
    AfterR2Dr,
    AfterC1,
    AfterC2,
    /// Full controlled double rephasing.
    AfterR2Cdr,
}

impl SweepStage {
    pub const ALL: [SweepStage; 6] = [
        SweepStage::AfterData,
        SweepStage::AfterR1,
        SweepStage::AfterR2Dr,
        SweepStage::AfterC1,
        SweepStage::AfterC2,
        SweepStage::AfterR2Cdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepStage::AfterData => "after_data",
            SweepStage::AfterR1 => "after_r1",
            SweepStage::AfterR2Dr => "after_r2_dr",
            SweepStage::AfterC1 => "after_c1",
            SweepStage::AfterC2 => "after_c2",
            SweepStage::AfterR2Cdr => "after_r2_cdr",
        }
    }

    pub fn uses(self) -> &'static [AreaName] {
        use AreaName::*;
        match self {
            SweepStage::AfterData => &[PhiD],
            SweepStage::AfterR1 => &[PhiD, PhiR1],
            SweepStage::AfterR2Dr => &[PhiD, PhiR1, PhiR2],
            SweepStage::AfterC1 => &[PhiD, PhiR1, PhiC1],
            SweepStage::AfterC2 => &[PhiD, PhiR1, PhiC1, PhiC2],
            SweepStage::AfterR2Cdr => &[PhiD, PhiR1, PhiC1, PhiC2, PhiR2],
        }
    }

    pub fn evaluate(self, a: &StageAreas) -> DensityMatrix {
        match self {
            SweepStage::AfterData => after_data(a.phi_d),
            SweepStage::AfterR1 => after_r1(a.phi_d, a.phi_r1),
            SweepStage::AfterR2Dr => after_r2_dr(a.phi_d, a.phi_r1, a.phi_r2),
            SweepStage::AfterC1 => after_c1(a.phi_d, a.phi_r1, a.phi_c1),
            SweepStage::AfterC2 => after_c2(a.phi_d, a.phi_r1, a.phi_c1, a.phi_c2),
            SweepStage::AfterR2Cdr => after_r2_cdr(a.phi_d, a.phi_r1, a.phi_c1, a.phi_c2, a.phi_r2),
        }
    }
}

impl FromStr for SweepStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStage(s.to_string()))
    }
}

impl fmt::Display for SweepStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AreaName {
    PhiD,
    PhiR1,
    PhiC1,
    PhiC2,
    PhiR2,
}

impl AreaName {
    pub const ALL: [AreaName; 5] = [
        AreaName::PhiD,
        AreaName::PhiR1,
        AreaName::PhiC1,
        AreaName::PhiC2,
        AreaName::PhiR2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AreaName::PhiD => "phi_d",
            AreaName::PhiR1 => "phi_r1",
            AreaName::PhiC1 => "phi_c1",
            AreaName::PhiC2 => "phi_c2",
            AreaName::PhiR2 => "phi_r2",
        }
    }

    pub fn get(self, a: &StageAreas) -> f64 {
        match self {
            AreaName::PhiD => a.phi_d,
            AreaName::PhiR1 => a.phi_r1,
            AreaName::PhiC1 => a.phi_c1,
            AreaName::PhiC2 => a.phi_c2,
            AreaName::PhiR2 => a.phi_r2,
        }
    }

    pub fn set(self, a: &mut StageAreas, value: f64) {
        match self {
            AreaName::PhiD => a.phi_d = value,
            AreaName::PhiR1 => a.phi_r1 = value,
            AreaName::PhiC1 => a.phi_c1 = value,
            AreaName::PhiC2 => a.phi_c2 = value,
            AreaName::PhiR2 => a.phi_r2 = value,
        }
    }
}

impl FromStr for AreaName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownArea(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSpec {
    pub stage: SweepStage,
    pub varying: AreaName,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub fixed: StageAreas,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidSweep(format!(
                "steps must be >= 2, got {}",
                self.steps
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidSweep(format!(
                "need lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !self.fixed.is_finite() {
            return Err(Error::InvalidSweep("fixed areas must be finite".into()));
        }
        if !self.stage.uses().contains(&self.varying) {
            return Err(Error::InvalidSweep(format!(
                "{} does not depend on {}",
                self.stage,
                self.varying.name()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n as f64)
            .collect()
    }
}

/// Column-labelled numeric table with `# key=value` metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Value of `column` in the row whose first column is closest to `x`.
    pub fn value_at(&self, x: f64, column: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.rows
            .iter()
            .min_by(|a, b| (a[0] - x).abs().total_cmp(&(b[0] - x).abs()))
            .map(|r| r[idx])
    }

    pub fn select(&self, columns: &[&str]) -> Option<Table> {
        let idx: Option<Vec<usize>> = columns
            .iter()
            .map(|c| self.columns.iter().position(|k| k == c))
            .collect();
        let idx = idx?;
        Some(Table {
            metadata: self.metadata.clone(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
        })
    }
}

pub const COL_IM_RHO12: &str = "im_rho12";
pub const COL_RE_RHO13: &str = "re_rho13";
pub const COL_RHO11: &str = "rho11";
pub const COL_RHO22: &str = "rho22";
pub const COL_RHO33: &str = "rho33";

fn fmt_area(x: f64) -> String {
    format_float(x)
}

/// Evaluates the stage over the sweep grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let rows = spec
        .grid()
        .into_iter()
        .map(|x| {
            let mut a = spec.fixed;
            spec.varying.set(&mut a, x);
            let s = spec.stage.evaluate(&a);
            vec![
                x,
                s.rho12().im,
                s.rho13().re,
                s.rho11(),
                s.rho22(),
                s.rho33(),
            ]
        })
        .collect();

    let mut metadata = vec![
        ("stage".to_string(), spec.stage.name().to_string()),
        ("varying".to_string(), spec.varying.name().to_string()),
    ];
    for area in spec.stage.uses().iter().filter(|a| **a != spec.varying) {
        metadata.push((area.name().to_string(), fmt_area(area.get(&spec.fixed))));
    }
    Ok(Table {
        metadata,
        columns: vec![
            spec.varying.name().to_string(),
            COL_IM_RHO12.into(),
            COL_RE_RHO13.into(),
            COL_RHO11.into(),
            COL_RHO22.into(),
            COL_RHO33.into(),
        ],
        rows,
    })
}

/// Datasets behind each published figure panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Fig4a,
    Fig4b,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig5d,
}

/// Every sweep spans 0..4π in steps of π/100.
pub const FIGURE_STEPS: usize = 401;
pub const FIGURE_RANGE: (f64, f64) = (0.0, 4.0 * PI);

impl FigureId {
    pub const ALL: [FigureId; 14] = [
        FigureId::Fig2a,
        FigureId::Fig2b,
        FigureId::Fig2c,
        FigureId::Fig2d,
        FigureId::Fig3a,
        FigureId::Fig3b,
        FigureId::Fig3c,
        FigureId::Fig3d,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::Fig5a,
        FigureId::Fig5b,
        FigureId::Fig5c,
        FigureId::Fig5d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig2c => "fig2c",
            FigureId::Fig2d => "fig2d",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
            FigureId::Fig3c => "fig3c",
            FigureId::Fig3d => "fig3d",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::Fig5a => "fig5a",
            FigureId::Fig5b => "fig5b",
            FigureId::Fig5c => "fig5c",
            FigureId::Fig5d => "fig5d",
        }
    }

    pub fn sweep(self) -> SweepSpec {
        use FigureId::*;
        let phi_d = match self {
            Fig5a | Fig5b | Fig5c | Fig5d => 0.5 * PI,
            _ => 0.1 * PI,
        };
        let (stage, varying) = match self {
            Fig2a | Fig2b | Fig5a => (SweepStage::AfterR1, AreaName::PhiR1),
            Fig2c | Fig2d => (SweepStage::AfterR2Dr, AreaName::PhiR2),
            Fig3a | Fig3b | Fig5b => (SweepStage::AfterC1, AreaName::PhiC1),
            Fig3c | Fig3d | Fig5c => (SweepStage::AfterC2, AreaName::PhiC2),
            Fig4a | Fig4b | Fig5d => (SweepStage::AfterR2Cdr, AreaName::PhiR2),
        };
        SweepSpec {
            stage,
            varying,
            lo: FIGURE_RANGE.0,
            hi: FIGURE_RANGE.1,
            steps: FIGURE_STEPS,
            fixed: StageAreas::with_data(phi_d),
        }
    }

    /// Data columns shown in the panel (after the area column).
    pub fn columns(self) -> &'static [&'static str] {
        use FigureId::*;
        match self {
            Fig2a | Fig2c | Fig3c | Fig4a | Fig5a | Fig5b | Fig5c | Fig5d => &[COL_IM_RHO12],
            Fig3a => &[COL_IM_RHO12, COL_RE_RHO13],
            Fig2b | Fig2d => &[COL_RHO11, COL_RHO22],
            Fig3b | Fig3d | Fig4b => &[COL_RHO11, COL_RHO22, COL_RHO33],
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn figure_dataset(id: FigureId) -> Table {
    let spec = id.sweep();
    let full = run_sweep(&spec).expect("figure sweeps are valid by construction");
    let mut cols = vec![spec.varying.name()];
    cols.extend_from_slice(id.columns());
    let mut table = full.select(&cols).expect("figure columns exist");
    table
        .metadata
        .insert(0, ("figure".to_string(), id.name().to_string()));
    table
}

/// 12 significant digits in scientific notation; −0 prints as 0.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Renders the CSV: metadata line, header line, data rows, LF endings.
pub fn to_csv_string(table: &Table) -> Result<String> {
    let mut out = String::new();
    if !table.metadata.is_empty() {
        let meta: Vec<String> = table
            .metadata
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        out.push_str("# ");
        out.push_str(&meta.join(" "));
        out.push('\n');
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let mut cells = Vec::with_capacity(row.len());
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    column: table.columns.get(j).cloned().unwrap_or_default(),
                    value: v,
                });
            }
            cells.push(format_float(v));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let text = to_csv_string(table)?;
    fs::write(path, text)?;
    Ok(())
}
