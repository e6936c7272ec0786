//! Price CSV to percent log returns with descriptive statistics.

use std::io::Cursor;

use vollab::market_data::{self, describe, to_log_returns};

fn main() -> vollab::Result<()> {
    let csv = "date,close\n\
               2024-01-02,100.0\n2024-01-03,101.2\n2024-01-04,100.4\n\
               2024-01-05,102.9\n2024-01-08,102.1\n2024-01-09,103.8\n";
    let prices = market_data::read_prices(Cursor::new(csv))?;
    let returns = to_log_returns(&prices);
    let mut out = Vec::new();
    market_data::write_returns(&returns, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out));

    let s = describe(returns.values())?;
    println!("n = {}  mean = {:.4}  variance = {:.4}", s.n, s.mean, s.variance);
    println!("skewness = {:?}  kurtosis = {:?}", s.skewness, s.kurtosis);
    println!("annualized volatility = {:.2}%", s.annualized_vol_pct);
    Ok(())
}
