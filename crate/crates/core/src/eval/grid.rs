use std::io::Write;

use log::warn;

use crate::corpus::HeldOutItem;
use crate::error::{Error, Result};
use crate::model::{Mode, ModelConfig, Trainer, TrainingData};

use super::{fmt_score, mean_pseudo, PseudoReading};

pub const GRID_REPORT_HEADER: &str =
    "#format=1\tmode\tK\tW\tE\tvalid_pseudo_ll\ttest_pseudo_ll\tepochs_run\tselected";

/// One configuration of the selection grid. `eq_window` is `None` for the
/// baseline, which has no word-equation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub mode: Mode,
    pub dim: usize,
    pub word_window: usize,
    pub eq_window: Option<usize>,
}

impl GridPoint {
    /// `base` with this point's dimension and windows. The equation context
    /// window follows the word-equation window.
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut config = ModelConfig {
            dim: self.dim,
            word_window: self.word_window,
            ..base.clone()
        };
        if let Some(e) = self.eq_window {
            config.eq_window = e;
            config.eq_context_window = e;
        } else {
            config.eq_window = config.eq_window.max(self.word_window);
        }
        config
    }
}

/// Every (mode, K, W, E) combination with `E >= W`.
pub fn grid_configs(modes: &[Mode], dims: &[usize], word_windows: &[usize], eq_windows: &[usize]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &mode in modes {
        for &dim in dims {
            for &w in word_windows {
                if mode == Mode::Baseline {
                    out.push(GridPoint {
                        mode,
                        dim,
                        word_window: w,
                        eq_window: None,
                    });
                    continue;
                }
                for &e in eq_windows.iter().filter(|&&e| e >= w) {
                    out.push(GridPoint {
                        mode,
                        dim,
                        word_window: w,
                        eq_window: Some(e),
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: GridPoint,
    pub valid: Option<f64>,
    pub test: Option<f64>,
    pub epochs_run: usize,
    /// Best validation score within its (mode, K) group.
    pub selected: bool,
    pub error: Option<String>,
}

/// Train every grid point and mark the validation-best configuration of
/// each (mode, K). A failing run is recorded and the grid continues.
pub fn grid_select(
    data: &TrainingData,
    test: &[HeldOutItem],
    base: &ModelConfig,
    points: &[GridPoint],
    reading: PseudoReading,
) -> Vec<GridRow> {
    let mut rows: Vec<GridRow> = points
        .iter()
        .map(|point| {
            let config = point.apply(base);
            let mut row = GridRow {
                point: *point,
                valid: None,
                test: None,
                epochs_run: 0,
                selected: false,
                error: None,
            };
            let outcome = config.validate().and_then(|_| {
                let mut trainer = Trainer::new(data, point.mode, config)?;
                let result = trainer.run();
                row.epochs_run = trainer.epochs_run();
                result.map(|_| trainer.into_model())
            });
            match outcome {
                Ok(model) => {
                    let tables = model.tables();
                    row.valid = mean_pseudo(&data.validation, &tables, reading).mean;
                    row.test = mean_pseudo(test, &tables, reading).mean;
                }
                Err(e) => {
                    warn!("grid point {point:?} failed: {e}");
                    row.error = Some(e.to_string());
                }
            }
            row
        })
        .collect();
    for i in 0..rows.len() {
        let key = (rows[i].point.mode, rows[i].point.dim);
        let best = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| (r.point.mode, r.point.dim) == key && r.valid.is_some())
            .fold(None::<(usize, f64)>, |best, (j, r)| {
                let v = r.valid.unwrap();
                match best {
                    Some((_, b)) if b >= v => best,
                    _ => Some((j, v)),
                }
            });
        rows[i].selected = best.is_some_and(|(j, _)| j == i);
    }
    rows
}

/// TSV report, one row per configuration.
pub fn write_grid_report<W: Write>(out: &mut W, rows: &[GridRow], config_echo: &str) -> Result<()> {
    let io = |e| Error::io("<report>", e);
    writeln!(out, "{GRID_REPORT_HEADER}").map_err(io)?;
    let echo: Vec<&str> = config_echo.lines().filter(|l| !l.is_empty()).collect();
    writeln!(out, "#config\t{}", echo.join(";")).map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.point.mode,
            r.point.dim,
            r.point.word_window,
            r.point.eq_window.map_or_else(|| "NA".to_string(), |e| e.to_string()),
            fmt_score(r.valid),
            fmt_score(r.test),
            r.epochs_run,
            u8::from(r.selected)
        )
        .map_err(io)?;
    }
    Ok(())
}
