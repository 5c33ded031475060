use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_distr::{Normal, Zipf};

use super::GeneratorSpec;
use crate::error::{Error, Result};
use crate::storage::{Catalog, ColumnMeta};
use crate::value::{Row, Value};

/// Normalized Zipf weights for ranks 1..=n.
pub fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-s)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub(crate) fn weighted(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| Error::InvalidSpec(format!("bad weights: {e}")))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation, ties averaged.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

const TICKERS: [(&str, &str); 5] = [
    ("APPL", "Apple"),
    ("GOOG", "Alphabet"),
    ("MSFT", "Microsoft"),
    ("AMZN", "Amazon"),
    ("TSLA", "Tesla"),
];

/// companies(id, symbol, company) with uniform keys; trades(id, company_id,
/// shares) with company_id drawn from Zipf(s) so company 1 trades most.
pub(crate) fn stocks(spec: &GeneratorSpec) -> Result<Catalog> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let n_companies = spec.size("companies");
    let n_trades = spec.size("trades");
    let companies: Vec<Row> = (1..=n_companies)
        .map(|id| {
            let (sym, name) = TICKERS
                .get(id - 1)
                .map(|(s, c)| (s.to_string(), c.to_string()))
                .unwrap_or_else(|| (format!("S{id:04}"), format!("Company {id}")));
            vec![Value::Int(id as i64), Value::text(sym), Value::text(name)]
        })
        .collect();
    let zipf =
        Zipf::new(n_companies as f64, spec.zipf_s.max(1e-9)).map_err(|e| Error::InvalidSpec(format!("zipf: {e}")))?;
    let trades: Vec<Row> = (1..=n_trades)
        .map(|id| {
            let company = zipf.sample(&mut rng) as i64;
            let shares = rng.random_range(1..=1000i64);
            vec![Value::Int(id as i64), Value::Int(company), Value::Int(shares)]
        })
        .collect();
    let mut cat = Catalog::new();
    cat.create_table(
        "companies",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::text("symbol"),
            ColumnMeta::text("company"),
        ],
        companies,
    )?;
    cat.create_table(
        "trades",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("company_id"),
            ColumnMeta::int("shares"),
        ],
        trades,
    )?;
    Ok(cat)
}

const DEPARTMENTS: [&str; 6] = ["engineering", "sales", "support", "finance", "legal", "research"];

/// employees(id, age, salary, dept): a Gaussian copula whose Spearman
/// correlation between age and salary is `correlation_rho`.
pub(crate) fn employees(spec: &GeneratorSpec) -> Result<Catalog> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let n = spec.size("employees");
    let r = 2.0 * (std::f64::consts::PI * spec.correlation_rho / 6.0).sin();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let rows: Vec<Row> = (1..=n)
        .map(|id| {
            let z1: f64 = normal.sample(&mut rng);
            let e: f64 = normal.sample(&mut rng);
            let z2 = r * z1 + (1.0 - r * r).max(0.0).sqrt() * e;
            let age = (42.0 + 11.0 * z1).round().clamp(18.0, 75.0) as i64;
            let salary = (65_000.0 + 22_000.0 * z2).round().max(12_000.0) as i64;
            let dept = DEPARTMENTS[rng.random_range(0..DEPARTMENTS.len())];
            vec![
                Value::Int(id as i64),
                Value::Int(age),
                Value::Int(salary),
                Value::text(dept),
            ]
        })
        .collect();
    let mut cat = Catalog::new();
    cat.create_table(
        "employees",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("age"),
            ColumnMeta::int("salary"),
            ColumnMeta::text("dept"),
        ],
        rows,
    )?;
    Ok(cat)
}

/// region → store → sale. A tenth of the regions are `flagship`; their
/// stores receive far more sales, so a filter on region.tier changes the
/// fan-out two joins away. `correlation_rho` scales the effect.
pub(crate) fn chain(spec: &GeneratorSpec) -> Result<Catalog> {
    let mut rng = StdRng::seed_from_u64(spec.seed);
    let n_region = spec.size("region");
    let n_store = spec.size("store");
    let n_sale = spec.size("sale");
    let flagship = (n_region / 10).max(1);
    let regions: Vec<Row> = (1..=n_region)
        .map(|id| {
            let tier = if id <= flagship { "flagship" } else { "standard" };
            vec![
                Value::Int(id as i64),
                Value::text(format!("region-{id:03}")),
                Value::text(tier),
            ]
        })
        .collect();
    let store_region: Vec<usize> = (0..n_store).map(|i| i % n_region + 1).collect();
    let stores: Vec<Row> = store_region
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            vec![
                Value::Int(i as i64 + 1),
                Value::Int(r as i64),
                Value::text(format!("city-{:04}", rng.random_range(0..500))),
            ]
        })
        .collect();
    let boost = 1.0 + 49.0 * spec.correlation_rho.abs();
    let weights: Vec<f64> = store_region
        .iter()
        .map(|&r| if r <= flagship { boost } else { 1.0 })
        .collect();
    let pick = weighted(&weights)?;
    let sales: Vec<Row> = (1..=n_sale)
        .map(|id| {
            let store = pick.sample(&mut rng) + 1;
            vec![
                Value::Int(id as i64),
                Value::Int(store as i64),
                Value::Int(rng.random_range(1..=500)),
            ]
        })
        .collect();
    let mut cat = Catalog::new();
    cat.create_table(
        "region",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::text("name"),
            ColumnMeta::text("tier"),
        ],
        regions,
    )?;
    cat.create_table(
        "store",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("region_id"),
            ColumnMeta::text("city"),
        ],
        stores,
    )?;
    cat.create_table(
        "sale",
        vec![
            ColumnMeta::int("id").primary_key(),
            ColumnMeta::int("store_id"),
            ColumnMeta::int("amount"),
        ],
        sales,
    )?;
    Ok(cat)
}
