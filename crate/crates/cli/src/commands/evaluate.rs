//! `evaluate`: performance models for fund portfolios, selectivity windows,
//! and the cumulative-value series behind the headline figure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use uirp_core::calendar::YearMonth;
use uirp_core::panel::{load_factor_csv, load_fund_csv, FactorPanel, FundPanel};
use uirp_core::performance::{
    alpha_report, decile_portfolios, reports_to_csv, selectivity_r2, tna_weighted_portfolio,
    Characteristic, ModelSpec, PerfError, PerformanceReport, Reference, SelectivityPanel,
};
use uirp_core::uirp::{load_uirp_csv, UirpSeries};

use crate::config::{self, EvaluateConfig};
use crate::output::OutputSet;
use crate::{CliError, CliResult, CommonArgs};

pub fn run(
    common: &CommonArgs,
    funds_flag: Option<PathBuf>,
    factors_flag: Option<PathBuf>,
    uirp_flag: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg: EvaluateConfig = config::load(common)?;
    if common.uirp_excess {
        cfg.uirp_excess = true;
    }
    for group in &cfg.groups {
        if !matches!(
            group.as_str(),
            "all" | "style" | "expense" | "turnover" | "tna" | "selectivity"
        ) {
            return Err(CliError::Config(format!("unknown group {group:?}")));
        }
    }
    let funds_path = config::require_path(funds_flag, &cfg.funds, "funds CSV")?;
    let factors_path = config::require_path(factors_flag, &cfg.factors, "factors CSV")?;
    let uirp_path = config::require_path(uirp_flag, &cfg.uirp, "uirp CSV")?;

    let mut funds = load_fund_csv(&funds_path).map_err(anyhow::Error::from)?;
    let factors = load_factor_csv(&factors_path).map_err(anyhow::Error::from)?;
    let uirp = load_uirp_csv(&uirp_path).map_err(anyhow::Error::from)?;

    if cfg.exclude_index_funds {
        let keep: Vec<_> = funds
            .funds()
            .filter(|(_, recs)| recs.iter().all(|r| r.index_flag.is_none()))
            .flat_map(|(_, recs)| recs.iter().cloned())
            .collect();
        funds = FundPanel::from_records(keep).map_err(anyhow::Error::from)?;
    }
    if funds.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("fund panel is empty")));
    }

    let specs = [
        ModelSpec {
            reference: Reference::Uirp,
            factors: Vec::new(),
            uirp_excess: cfg.uirp_excess,
        },
        ModelSpec {
            reference: Reference::Uirp,
            factors: uirp_core::performance::Factor::CARHART.to_vec(),
            uirp_excess: cfg.uirp_excess,
        },
        ModelSpec::one_factor(Reference::Market),
        ModelSpec::four_factor(Reference::Market),
    ];

    let selectivity = selectivity_r2(&funds, &factors);
    let mut portfolios: Vec<(String, BTreeMap<YearMonth, f64>)> = Vec::new();
    for group in &cfg.groups {
        match group.as_str() {
            "all" => {
                portfolios.push(("all".into(), tna_weighted_portfolio(&funds, |_, _| true).returns));
            }
            "style" => {
                let styles: BTreeSet<String> = funds
                    .funds()
                    .flat_map(|(_, recs)| recs.iter().map(|r| r.style.clone()))
                    .collect();
                for style in styles {
                    let series = tna_weighted_portfolio(&funds, |id, month| {
                        funds
                            .record(id, month)
                            .is_some_and(|r| r.style == style)
                    });
                    portfolios.push((format!("style:{style}"), series.returns));
                }
            }
            "expense" | "turnover" | "tna" => {
                let characteristic = match group.as_str() {
                    "expense" => Characteristic::Expense,
                    "turnover" => Characteristic::Turnover,
                    _ => Characteristic::Tna,
                };
                for (i, series) in decile_portfolios(&funds, characteristic).into_iter().enumerate()
                {
                    portfolios.push((format!("{group}_d{:02}", i + 1), series.returns));
                }
            }
            "selectivity" => {
                for (label, four_factor) in [("r2sel1f", false), ("r2sel4f", true)] {
                    for (i, series) in
                        selectivity_deciles(&funds, &selectivity, four_factor).into_iter().enumerate()
                    {
                        portfolios.push((format!("{label}_d{:02}", i + 1), series));
                    }
                }
            }
            _ => unreachable!("validated above"),
        }
    }

    let mut reports: Vec<PerformanceReport> = Vec::new();
    let mut notes = Vec::new();
    for (name, series) in &portfolios {
        for spec in &specs {
            match alpha_report(name, series, &factors, Some(&uirp), spec) {
                Ok(report) => reports.push(report),
                Err(PerfError::InsufficientData { needed, got }) => {
                    notes.push(format!(
                        "skipped {name} [{} {}]: {got} of {needed} required months",
                        spec.reference,
                        if spec.factors.is_empty() { "1f" } else { "4f" }
                    ));
                }
                Err(e) => return Err(CliError::Runtime(e.into())),
            }
        }
    }
    if cfg.uirp_excess {
        notes.push("reference portfolio entered net of the risk-free rate".into());
    }

    let mut out = OutputSet::new(config::out_dir(common));
    out.add("alphas.csv", reports_to_csv(&reports));
    out.add("selectivity.csv", selectivity.to_csv_string());
    out.add("cumvalue.csv", cumulative_values(&funds, &factors, &uirp));
    out.add_run_meta("evaluate", &cfg, None, &notes);
    out.commit()
}

/// Ten TNA-weighted portfolios ranked monthly by the in-force selectivity R².
fn selectivity_deciles(
    funds: &FundPanel,
    selectivity: &SelectivityPanel,
    four_factor: bool,
) -> Vec<BTreeMap<YearMonth, f64>> {
    let mut assignments: BTreeMap<YearMonth, BTreeMap<String, usize>> = BTreeMap::new();
    for month in funds.months() {
        let mut ranked: Vec<(String, f64)> = funds
            .fund_ids()
            .filter_map(|id| {
                selectivity
                    .value_asof(id, month, four_factor)
                    .map(|v| (id.to_string(), v))
            })
            .collect();
        ranked.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let n = ranked.len();
        if n == 0 {
            continue;
        }
        let map = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (id, _))| (id, (10 * (i + 1)).div_ceil(n) - 1))
            .collect();
        assignments.insert(month, map);
    }
    (0..10)
        .map(|d| {
            tna_weighted_portfolio(funds, |id, month| {
                assignments
                    .get(&month)
                    .and_then(|m| m.get(id))
                    .is_some_and(|&decile| decile == d)
            })
            .returns
        })
        .collect()
}

/// Value of one unit invested in each reference series, compounded monthly
/// over the months where every series is available.
fn cumulative_values(funds: &FundPanel, factors: &FactorPanel, uirp: &UirpSeries) -> String {
    let tna_all = tna_weighted_portfolio(funds, |_, _| true).returns;
    let mut months: Vec<YearMonth> = tna_all
        .keys()
        .copied()
        .filter(|m| factors.get(*m).is_some() && uirp.get(*m).is_some())
        .collect();
    months.sort();

    let mut out = String::from("month,uirp,market,fund_tna,fund_eq,smb,hml,umd\n");
    let mut acc = [1.0f64; 7];
    for month in months {
        let f = factors.get(month).expect("filtered");
        let u = uirp.get(month).expect("filtered");
        let eq = equal_weighted(funds, month);
        let rets = [
            u.uirp_ret,
            f.mkt_excess + f.rf,
            tna_all[&month],
            eq,
            f.smb,
            f.hml,
            f.umd,
        ];
        for (slot, r) in acc.iter_mut().zip(rets) {
            *slot *= 1.0 + r;
        }
        writeln!(
            out,
            "{month},{},{},{},{},{},{},{}",
            acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], acc[6]
        )
        .unwrap();
    }
    out
}

fn equal_weighted(funds: &FundPanel, month: YearMonth) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for id in funds.fund_ids() {
        if let Some(rec) = funds.record(id, month) {
            sum += rec.net_ret;
            count += 1;
        }
    }
    if count > 0 {
        sum / count as f64
    } else {
        0.0
    }
}
