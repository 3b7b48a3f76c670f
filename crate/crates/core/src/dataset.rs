//! Bank-year panel ingestion and the raw CAMELS ratios.
//!
//! A panel is read from a comma-separated file whose headers are mapped onto
//! [`Field`]s through a [`ColumnMap`]. Rows that cannot enter the ratio
//! computation are dropped and recorded in an [`ExclusionLog`] rather than
//! failing the whole load; structural problems (missing columns, garbage in a
//! numeric cell, duplicate bank-years) are hard errors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Columns of the bank-year input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    BankId,
    Country,
    Year,
    Mve,
    Bvl,
    Nta,
    Equity,
    TotalAssets,
    Loans,
    Deposits,
    LoanLossAllowances,
    LoanLossProvisions,
    NonInterestExpense,
    Income,
    LiquidAssets,
    Roa,
    Roe,
    Beta,
    LoanGrowth,
    GdpGrowth,
}

impl Field {
    pub const ALL: [Field; 20] = [
        Field::BankId,
        Field::Country,
        Field::Year,
        Field::Mve,
        Field::Bvl,
        Field::Nta,
        Field::Equity,
        Field::TotalAssets,
        Field::Loans,
        Field::Deposits,
        Field::LoanLossAllowances,
        Field::LoanLossProvisions,
        Field::NonInterestExpense,
        Field::Income,
        Field::LiquidAssets,
        Field::Roa,
        Field::Roe,
        Field::Beta,
        Field::LoanGrowth,
        Field::GdpGrowth,
    ];

    /// Fields without which a row cannot be used at all.
    pub const REQUIRED: [Field; 9] = [
        Field::BankId,
        Field::Country,
        Field::Year,
        Field::Mve,
        Field::Bvl,
        Field::Nta,
        Field::TotalAssets,
        Field::Loans,
        Field::Deposits,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::BankId => "bank_id",
            Field::Country => "country",
            Field::Year => "year",
            Field::Mve => "mve",
            Field::Bvl => "bvl",
            Field::Nta => "nta",
            Field::Equity => "equity",
            Field::TotalAssets => "total_assets",
            Field::Loans => "loans",
            Field::Deposits => "deposits",
            Field::LoanLossAllowances => "loan_loss_allowances",
            Field::LoanLossProvisions => "loan_loss_provisions",
            Field::NonInterestExpense => "non_interest_expense",
            Field::Income => "income",
            Field::LiquidAssets => "liquid_assets",
            Field::Roa => "roa",
            Field::Roe => "roe",
            Field::Beta => "beta",
            Field::LoanGrowth => "loan_growth",
            Field::GdpGrowth => "gdp_growth",
        }
    }

    pub fn is_required(self) -> bool {
        Field::REQUIRED.contains(&self)
    }
}

/// Maps each [`Field`] onto a header name in the input file. Fields absent
/// from the map use their own snake_case name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap(pub BTreeMap<Field, String>);

impl ColumnMap {
    pub fn header_for(&self, field: Field) -> &str {
        self.0.get(&field).map(String::as_str).unwrap_or(field.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankYear {
    pub bank_id: String,
    pub country: String,
    pub year: i32,
    /// Market value of equity.
    pub mve: f64,
    /// Book value of liabilities.
    pub bvl: f64,
    /// Book value of assets net of goodwill.
    pub nta: f64,
    pub equity: Option<f64>,
    pub total_assets: f64,
    pub loans: f64,
    pub deposits: f64,
    pub loan_loss_allowances: Option<f64>,
    pub loan_loss_provisions: Option<f64>,
    pub non_interest_expense: Option<f64>,
    pub income: Option<f64>,
    pub liquid_assets: Option<f64>,
    pub roa: Option<f64>,
    pub roe: Option<f64>,
    pub beta: Option<f64>,
    pub loan_growth: Option<f64>,
    pub gdp_growth: Option<f64>,
    /// 1-based line in the source file (0 for generated rows).
    pub line: u64,
}

/// Inclusive year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i32,
    pub end: i32,
}

impl Window {
    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }
}

impl Default for Window {
    fn default() -> Self {
        Window { start: 2005, end: 2016 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub rows: Vec<BankYear>,
    /// Hex SHA-256 digest of the source bytes.
    pub provenance: String,
    pub window: Window,
}

impl Panel {
    /// Builds a panel from in-memory rows, checking (bank_id, year) uniqueness.
    pub fn new(rows: Vec<BankYear>, provenance: impl Into<String>, window: Window) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for r in &rows {
            if !seen.insert((r.bank_id.as_str(), r.year)) {
                return Err(Error::DuplicateBankYear {
                    bank_id: r.bank_id.clone(),
                    year: r.year,
                });
            }
        }
        Ok(Panel {
            rows,
            provenance: provenance.into(),
            window,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn with_rows(&self, rows: Vec<BankYear>) -> Panel {
        Panel {
            rows,
            provenance: self.provenance.clone(),
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    /// Source line of the row.
    pub row_id: u64,
    pub bank_id: String,
    pub year: Option<i32>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionLog(pub Vec<Exclusion>);

impl ExclusionLog {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, row_id: u64, bank_id: &str, year: Option<i32>, reason: impl Into<String>) {
        self.0.push(Exclusion {
            row_id,
            bank_id: bank_id.to_string(),
            year,
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: ExclusionLog) {
        self.0.extend(other.0);
    }

    /// CSV with columns `row_id,bank_id,year,reason`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row_id", "bank_id", "year", "reason"])?;
        for e in &self.0 {
            let year = e.year.map(|y| y.to_string()).unwrap_or_default();
            w.write_record([e.row_id.to_string().as_str(), &e.bank_id, &year, &e.reason])?;
        }
        w.flush().map_err(|e| Error::io("<exclusions>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Ingest {
    pub panel: Panel,
    pub exclusions: ExclusionLog,
}

/// Reads a bank-year CSV.
///
/// Blank cells in required columns, non-positive denominators among the
/// required balance-sheet items and years outside `window` exclude the row.
/// Blank cells in optional columns become `None`.
pub fn load_panel(path: &Path, schema: &ColumnMap, window: Window) -> Result<Ingest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_panel(&bytes, schema, window)
}

pub fn parse_panel(bytes: &[u8], schema: &ColumnMap, window: Window) -> Result<Ingest> {
    let provenance = hex_digest(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers()?.clone();

    let mut index: BTreeMap<Field, usize> = BTreeMap::new();
    for field in Field::ALL {
        let header = schema.header_for(field);
        match headers.iter().position(|h| h == header) {
            Some(i) => {
                index.insert(field, i);
            }
            None if field.is_required() => {
                return Err(Error::Schema(format!(
                    "missing required column `{header}` (field {})",
                    field.name()
                )))
            }
            None => {}
        }
    }

    let mut rows = Vec::new();
    let mut exclusions = ExclusionLog::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let cell = |f: Field| -> Option<&str> { index.get(&f).and_then(|&i| record.get(i)).filter(|s| !s.is_empty()) };
        let num = |f: Field| -> Result<Option<f64>> {
            match cell(f) {
                None => Ok(None),
                Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                    line,
                    column: schema.header_for(f).to_string(),
                    value: s.to_string(),
                }),
            }
        };

        let bank_id = cell(Field::BankId).unwrap_or("").to_string();
        let year = match cell(Field::Year) {
            None => None,
            Some(s) => Some(s.parse::<i32>().map_err(|_| Error::Parse {
                line,
                column: schema.header_for(Field::Year).to_string(),
                value: s.to_string(),
            })?),
        };

        // Parse every numeric cell first so garbage is reported even in rows
        // that would be excluded anyway.
        let mut values: BTreeMap<Field, Option<f64>> = BTreeMap::new();
        for f in Field::ALL {
            if matches!(f, Field::BankId | Field::Country | Field::Year) {
                continue;
            }
            values.insert(f, num(f)?);
        }

        let missing: Vec<&str> = Field::REQUIRED
            .iter()
            .filter(|&&f| match f {
                Field::BankId | Field::Country => cell(f).is_none(),
                Field::Year => year.is_none(),
                _ => values[&f].is_none(),
            })
            .map(|f| f.name())
            .collect();
        if !missing.is_empty() {
            exclusions.push(line, &bank_id, year, format!("missing {}", missing.join("+")));
            continue;
        }
        let year = year.expect("checked above");
        if !window.contains(year) {
            exclusions.push(line, &bank_id, Some(year), "year outside sample window");
            continue;
        }
        let v = |f: Field| values[&f];
        let req = |f: Field| values[&f].expect("checked above");
        let (nta, total_assets, loans, deposits) = (
            req(Field::Nta),
            req(Field::TotalAssets),
            req(Field::Loans),
            req(Field::Deposits),
        );
        let invalid = [
            (nta <= 0.0, "nta <= 0"),
            (total_assets <= 0.0, "total_assets <= 0"),
            (loans < 0.0, "loans < 0"),
            (deposits <= 0.0, "deposits <= 0"),
        ];
        if let Some((_, why)) = invalid.iter().find(|(bad, _)| *bad) {
            exclusions.push(line, &bank_id, Some(year), *why);
            continue;
        }

        rows.push(BankYear {
            bank_id,
            country: cell(Field::Country).unwrap_or("").to_string(),
            year,
            mve: req(Field::Mve),
            bvl: req(Field::Bvl),
            nta,
            equity: v(Field::Equity),
            total_assets,
            loans,
            deposits,
            loan_loss_allowances: v(Field::LoanLossAllowances),
            loan_loss_provisions: v(Field::LoanLossProvisions),
            non_interest_expense: v(Field::NonInterestExpense),
            income: v(Field::Income),
            liquid_assets: v(Field::LiquidAssets),
            roa: v(Field::Roa),
            roe: v(Field::Roe),
            beta: v(Field::Beta),
            loan_growth: v(Field::LoanGrowth),
            gdp_growth: v(Field::GdpGrowth),
            line,
        });
    }

    let panel = Panel::new(rows, provenance, window)?;
    Ok(Ingest { panel, exclusions })
}

/// Writes a panel in the default column layout (inverse of [`parse_panel`]
/// with an empty [`ColumnMap`]).
pub fn write_panel_csv<W: Write>(panel: &Panel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(Field::ALL.iter().map(|f| f.name()))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &panel.rows {
        w.write_record([
            r.bank_id.clone(),
            r.country.clone(),
            r.year.to_string(),
            r.mve.to_string(),
            r.bvl.to_string(),
            r.nta.to_string(),
            opt(r.equity),
            r.total_assets.to_string(),
            r.loans.to_string(),
            r.deposits.to_string(),
            opt(r.loan_loss_allowances),
            opt(r.loan_loss_provisions),
            opt(r.non_interest_expense),
            opt(r.income),
            opt(r.liquid_assets),
            opt(r.roa),
            opt(r.roe),
            opt(r.beta),
            opt(r.loan_growth),
            opt(r.gdp_growth),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<panel>", e))?;
    Ok(())
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tobin's Q: (market value of equity + book liabilities) / book assets net
/// of goodwill.
pub fn tobin_q(mve: f64, bvl: f64, nta: f64) -> Result<f64> {
    if !(nta > 0.0) {
        return Err(Error::Domain(format!("nta must be positive, got {nta}")));
    }
    Ok((mve + bvl) / nta)
}

/// Raw (unrescaled) proxy variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawField {
    CapitalRatio,
    AllowancesToLoans,
    ProvisionsToLoans,
    /// Loan growth minus nominal GDP growth.
    GrowthGap,
    CostIncome,
    ExpenseToAssets,
    Roa,
    Roe,
    LoansToDeposits,
    LiquidToAssets,
    Beta,
}

impl RawField {
    pub const ALL: [RawField; 11] = [
        RawField::CapitalRatio,
        RawField::AllowancesToLoans,
        RawField::ProvisionsToLoans,
        RawField::GrowthGap,
        RawField::CostIncome,
        RawField::ExpenseToAssets,
        RawField::Roa,
        RawField::Roe,
        RawField::LoansToDeposits,
        RawField::LiquidToAssets,
        RawField::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RawField::CapitalRatio => "capital_ratio",
            RawField::AllowancesToLoans => "allowances_to_loans",
            RawField::ProvisionsToLoans => "provisions_to_loans",
            RawField::GrowthGap => "growth_gap",
            RawField::CostIncome => "cost_income",
            RawField::ExpenseToAssets => "expense_to_assets",
            RawField::Roa => "roa",
            RawField::Roe => "roe",
            RawField::LoansToDeposits => "loans_to_deposits",
            RawField::LiquidToAssets => "liquid_to_assets",
            RawField::Beta => "beta",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RawField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One bank-year's raw proxies. Unavailable ratios (missing inputs or a
/// non-positive denominator) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawProxyRow {
    /// Index into `Panel::rows`.
    pub row: usize,
    pub bank_id: String,
    pub year: i32,
    pub q: f64,
    values: [Option<f64>; 11],
}

impl RawProxyRow {
    pub fn get(&self, field: RawField) -> Option<f64> {
        self.values[field.index()]
    }

    pub fn capital_ratio(&self) -> Option<f64> {
        self.get(RawField::CapitalRatio)
    }

    pub fn loans_to_deposits(&self) -> Option<f64> {
        self.get(RawField::LoansToDeposits)
    }

    pub fn growth_gap(&self) -> Option<f64> {
        self.get(RawField::GrowthGap)
    }
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => Some(n / d).filter(|v| v.is_finite()),
        _ => None,
    }
}

/// Raw proxies for one row, without any exclusion.
pub fn raw_proxy_row(index: usize, r: &BankYear) -> Result<RawProxyRow> {
    let q = tobin_q(r.mve, r.bvl, r.nta)?;
    let mut values = [None; 11];
    let ta = Some(r.total_assets);
    let loans = Some(r.loans);
    values[RawField::CapitalRatio.index()] = ratio(r.equity, ta);
    values[RawField::AllowancesToLoans.index()] = ratio(r.loan_loss_allowances, loans);
    values[RawField::ProvisionsToLoans.index()] = ratio(r.loan_loss_provisions, loans);
    values[RawField::GrowthGap.index()] = match (r.loan_growth, r.gdp_growth) {
        (Some(l), Some(g)) => Some(l - g).filter(|v| v.is_finite()),
        _ => None,
    };
    values[RawField::CostIncome.index()] = ratio(r.non_interest_expense, r.income);
    values[RawField::ExpenseToAssets.index()] = ratio(r.non_interest_expense, ta);
    values[RawField::Roa.index()] = r.roa.filter(|v| v.is_finite());
    values[RawField::Roe.index()] = r.roe.filter(|v| v.is_finite());
    values[RawField::LoansToDeposits.index()] = ratio(loans, Some(r.deposits));
    values[RawField::LiquidToAssets.index()] = ratio(r.liquid_assets, ta);
    values[RawField::Beta.index()] = r.beta.filter(|v| v.is_finite());
    Ok(RawProxyRow {
        row: index,
        bank_id: r.bank_id.clone(),
        year: r.year,
        q,
        values,
    })
}

#[derive(Debug, Clone)]
pub struct RawProxies {
    pub rows: Vec<RawProxyRow>,
    pub exclusions: ExclusionLog,
}

/// Computes the raw proxies for every row. A row is dropped only when one
/// of the `active` proxies is unavailable for it.
pub fn compute_raw_proxies(panel: &Panel, active: &[RawField]) -> RawProxies {
    let mut rows = Vec::with_capacity(panel.len());
    let mut exclusions = ExclusionLog::default();
    for (i, r) in panel.rows.iter().enumerate() {
        let row = match raw_proxy_row(i, r) {
            Ok(row) => row,
            Err(e) => {
                exclusions.push(r.line, &r.bank_id, Some(r.year), e.to_string());
                continue;
            }
        };
        let missing: Vec<&str> = active
            .iter()
            .filter(|&&f| row.get(f).is_none())
            .map(|f| f.name())
            .collect();
        if missing.is_empty() {
            rows.push(row);
        } else {
            exclusions.push(
                r.line,
                &r.bank_id,
                Some(r.year),
                format!("unavailable {}", missing.join("+")),
            );
        }
    }
    RawProxies { rows, exclusions }
}

/// OLS slope of bank returns on market returns.
pub fn compute_beta(bank_log_returns: &[f64], market_log_returns: &[f64]) -> Result<f64> {
    if bank_log_returns.len() != market_log_returns.len() {
        return Err(Error::Domain(format!(
            "return series differ in length ({} vs {})",
            bank_log_returns.len(),
            market_log_returns.len()
        )));
    }
    let n = bank_log_returns.len();
    if n < 2 {
        return Err(Error::Domain("beta needs at least two returns".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mb, mm) = (mean(bank_log_returns), mean(market_log_returns));
    let mut cov = 0.0;
    let mut var = 0.0;
    for (b, m) in bank_log_returns.iter().zip(market_log_returns) {
        cov += (b - mb) * (m - mm);
        var += (m - mm) * (m - mm);
    }
    if !(var > 0.0) {
        return Err(Error::Degenerate("market returns have zero variance".into()));
    }
    Ok(cov / var)
}

/// Daily closing prices: one market column and one column per bank.
#[derive(Debug, Clone, Default)]
pub struct PriceTable {
    pub years: Vec<i32>,
    pub market: Vec<Option<f64>>,
    pub banks: BTreeMap<String, Vec<Option<f64>>>,
}

impl PriceTable {
    /// Reads a CSV with a `date` column (`YYYY-MM-DD`), a `market` column and
    /// one column per bank id. Rows must be in chronological order.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers = reader.headers()?.clone();
        let date_col = headers
            .iter()
            .position(|h| h == "date")
            .ok_or_else(|| Error::Schema("price file needs a `date` column".into()))?;
        let market_col = headers
            .iter()
            .position(|h| h == "market")
            .ok_or_else(|| Error::Schema("price file needs a `market` column".into()))?;
        let mut table = PriceTable::default();
        let bank_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_col && *i != market_col)
            .map(|(i, h)| (i, h.to_string()))
            .collect();
        for (_, name) in &bank_cols {
            table.banks.insert(name.clone(), Vec::new());
        }
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let date = record.get(date_col).unwrap_or("");
            let year = date
                .get(..4)
                .and_then(|y| y.parse::<i32>().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    column: "date".into(),
                    value: date.into(),
                })?;
            let price = |i: usize, col: &str| -> Result<Option<f64>> {
                match record.get(i).filter(|s| !s.is_empty()) {
                    None => Ok(None),
                    Some(s) => s.parse().map(Some).map_err(|_| Error::Parse {
                        line,
                        column: col.to_string(),
                        value: s.to_string(),
                    }),
                }
            };
            table.years.push(year);
            table.market.push(price(market_col, "market")?);
            for (i, name) in &bank_cols {
                let p = price(*i, name)?;
                table.banks.get_mut(name).expect("inserted").push(p);
            }
        }
        Ok(table)
    }

    /// Beta of `bank` in `year` from consecutive-day log returns.
    pub fn beta_for(&self, bank: &str, year: i32) -> Result<f64> {
        let prices = self
            .banks
            .get(bank)
            .ok_or_else(|| Error::Domain(format!("no prices for bank {bank}")))?;
        let mut rb = Vec::new();
        let mut rm = Vec::new();
        for t in 1..self.years.len() {
            if self.years[t] != year || self.years[t - 1] != year {
                continue;
            }
            if let (Some(b0), Some(b1), Some(m0), Some(m1)) =
                (prices[t - 1], prices[t], self.market[t - 1], self.market[t])
            {
                if b0 > 0.0 && b1 > 0.0 && m0 > 0.0 && m1 > 0.0 {
                    rb.push((b1 / b0).ln());
                    rm.push((m1 / m0).ln());
                }
            }
        }
        compute_beta(&rb, &rm)
    }
}

/// Fills `beta` from the price table where the column is blank. A supplied
/// column value always wins; a warning is logged when both exist.
pub fn attach_betas(panel: &mut Panel, prices: &PriceTable) {
    for r in &mut panel.rows {
        let computed = prices.beta_for(&r.bank_id, r.year);
        match (r.beta, computed) {
            (Some(_), Ok(_)) => log::warn!(
                "bank {} year {}: beta supplied as column and computable from prices; using column",
                r.bank_id,
                r.year
            ),
            (None, Ok(b)) => r.beta = Some(b),
            (_, Err(_)) => {}
        }
    }
}

pub const PIGS: [&str; 4] = ["GR", "IE", "PT", "ES"];

fn is_pigs(country: &str) -> bool {
    let c = country.trim().to_ascii_uppercase();
    PIGS.contains(&c.as_str()) || c == "EL" || matches!(c.as_str(), "GREECE" | "IRELAND" | "PORTUGAL" | "SPAIN")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountryGroup {
    Pigs,
    NonPigs,
    List(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeHalf {
    /// Total assets strictly below the median.
    Small,
    /// Total assets at or above the median.
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    All,
    Years { start: i32, end: i32 },
    Countries(CountryGroup),
    Size(SizeHalf),
}

/// Median with linear interpolation (average of the two middle values for
/// even n).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn filter_subsample(panel: &Panel, criterion: &Criterion) -> Result<Panel> {
    let rows: Vec<BankYear> = match criterion {
        Criterion::All => panel.rows.clone(),
        Criterion::Years { start, end } => panel
            .rows
            .iter()
            .filter(|r| *start <= r.year && r.year <= *end)
            .cloned()
            .collect(),
        Criterion::Countries(group) => panel
            .rows
            .iter()
            .filter(|r| match group {
                CountryGroup::Pigs => is_pigs(&r.country),
                CountryGroup::NonPigs => !is_pigs(&r.country),
                CountryGroup::List(list) => list.iter().any(|c| c.eq_ignore_ascii_case(&r.country)),
            })
            .cloned()
            .collect(),
        Criterion::Size(half) => {
            let assets: Vec<f64> = panel.rows.iter().map(|r| r.total_assets).collect();
            let med = median(&assets).unwrap_or(0.0);
            panel
                .rows
                .iter()
                .filter(|r| match half {
                    SizeHalf::Small => r.total_assets < med,
                    SizeHalf::Large => r.total_assets >= med,
                })
                .cloned()
                .collect()
        }
    };
    if rows.is_empty() {
        return Err(Error::EmptySubsample(format!("{criterion:?} selects no rows")));
    }
    Ok(panel.with_rows(rows))
}

/// Applies criteria in order; each size split uses the median of the panel
/// it receives.
pub fn filter_all(panel: &Panel, criteria: &[Criterion]) -> Result<Panel> {
    criteria.iter().try_fold(panel.clone(), |p, c| filter_subsample(&p, c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when n = 1.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// False when n = 1 and the standard deviation is undefined.
    pub std_dev_defined: bool,
}

pub fn summary_stats(values: &[f64]) -> Result<Summary> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Domain("summary of an empty series".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let (std_dev, defined) = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        ((ss / (n - 1) as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary {
        n,
        mean,
        std_dev,
        min,
        max,
        std_dev_defined: defined,
    })
}
