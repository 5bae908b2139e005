//! `estimate-proxy`: rolling informativeness estimation over a stock panel.

use std::path::PathBuf;

use uirp_core::calendar::YearMonth;
use uirp_core::panel::load_stock_csv;
use uirp_core::proxy_er::{ProxyEstimator, RSquaredPanel};

use crate::config::{self, EstimateConfig};
use crate::output::OutputSet;
use crate::{CliError, CliResult, CommonArgs};

pub fn run(common: &CommonArgs, stocks_flag: Option<PathBuf>) -> CliResult<()> {
    let cfg: EstimateConfig = config::load(common)?;
    let stocks_path = config::require_path(stocks_flag, &cfg.stocks, "stocks CSV")?;

    let requested: Option<(YearMonth, YearMonth)> = match &cfg.months {
        None => None,
        Some([start, end]) => {
            let parse = |s: &str| {
                s.parse::<YearMonth>()
                    .map_err(|e| CliError::Config(e.to_string()))
            };
            let (start, end) = (parse(start)?, parse(end)?);
            if start > end {
                return Err(CliError::config("months range start exceeds end"));
            }
            Some((start, end))
        }
    };

    let panel = load_stock_csv(&stocks_path).map_err(anyhow::Error::from)?;
    let estimator = ProxyEstimator::new(&panel).map_err(anyhow::Error::from)?;
    let feasible = estimator.feasible_months();
    if feasible.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "panel too short: no month has a full 12-month history"
        )));
    }
    let months: Vec<YearMonth> = match requested {
        None => feasible,
        Some((start, end)) => {
            let selected: Vec<YearMonth> = feasible
                .into_iter()
                .filter(|m| *m >= start && *m <= end)
                .collect();
            if selected.is_empty() {
                return Err(CliError::Runtime(anyhow::anyhow!(
                    "no feasible estimation month inside {start}..{end}"
                )));
            }
            selected
        }
    };

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for &month in &months {
        let estimate = estimator.estimate_month(month);
        skipped += estimate.skipped.len();
        rows.extend(estimate.rows);
    }
    let panel_rows = RSquaredPanel::from_rows(rows).map_err(anyhow::Error::from)?;

    let notes = vec![
        format!(
            "market index anchored at the panel's first date {}",
            panel.first_date().expect("non-empty panel")
        ),
        format!(
            "{} stock-months estimated over {} months, {} skipped (below {} surviving observations or rank-deficient)",
            panel_rows.len(),
            months.len(),
            skipped,
            uirp_core::proxy_er::MIN_OBSERVATIONS
        ),
    ];

    let mut out = OutputSet::new(config::out_dir(common));
    out.add("proxy_er.csv", panel_rows.to_csv_string());
    out.add_run_meta("estimate-proxy", &cfg, None, &notes);
    out.commit()
}
