//! `build-uirp`: monthly reference-portfolio construction.

use std::path::PathBuf;

use uirp_core::panel::load_stock_csv;
use uirp_core::proxy_er::load_r2_csv;
use uirp_core::uirp::build_uirp;

use crate::config::{self, BuildUirpConfig};
use crate::output::OutputSet;
use crate::{CliResult, CommonArgs};

pub fn run(
    common: &CommonArgs,
    stocks_flag: Option<PathBuf>,
    r2_flag: Option<PathBuf>,
) -> CliResult<()> {
    let cfg: BuildUirpConfig = config::load(common)?;
    let stocks_path = config::require_path(stocks_flag, &cfg.stocks, "stocks CSV")?;
    let r2_path = config::require_path(r2_flag, &cfg.r2, "informativeness CSV")?;

    let panel = load_stock_csv(&stocks_path).map_err(anyhow::Error::from)?;
    let r2 = load_r2_csv(&r2_path).map_err(anyhow::Error::from)?;
    let series = build_uirp(&panel, &r2);
    if series.is_empty() {
        return Err(crate::CliError::Runtime(anyhow::anyhow!(
            "stock panel has no month with any return"
        )));
    }

    let covered_months = series
        .rows()
        .iter()
        .filter(|r| r.deviation.is_some())
        .count();
    let notes = vec![format!(
        "{} months built, {} with informativeness coverage",
        series.len(),
        covered_months
    )];

    let mut out = OutputSet::new(config::out_dir(common));
    out.add("uirp.csv", series.to_csv_string());
    out.add_run_meta("build-uirp", &cfg, None, &notes);
    out.commit()
}
