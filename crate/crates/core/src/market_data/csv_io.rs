use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::{PricePoint, PriceSeries};
use crate::{Error, Result};

const HEADER: [&str; 3] = ["ticker", "date", "adj_close"];

/// Loads a long-format `ticker,date,adj_close` file into one series per ticker.
pub fn load_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, PriceSeries>> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<BTreeMap<String, PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!(
                "expected header `ticker,date,adj_close`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows: BTreeMap<String, Vec<(PricePoint, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::MalformedRow { line, message: format!("expected 3 fields, found {}", record.len()) });
        }
        let ticker = record[0].to_string();
        if ticker.is_empty() {
            return Err(Error::MalformedRow { line, message: "empty ticker".into() });
        }
        let date = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d")
            .map_err(|e| Error::MalformedRow { line, message: format!("bad date `{}`: {e}", &record[1]) })?;
        let price: f64 = record[2]
            .parse()
            .map_err(|e| Error::MalformedRow { line, message: format!("bad price `{}`: {e}", &record[2]) })?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::NonPositivePrice { line, ticker, price });
        }
        rows.entry(ticker).or_default().push((PricePoint { date, adj_close: price }, line));
    }

    let mut out = BTreeMap::new();
    for (ticker, mut pts) in rows {
        pts.sort_by_key(|(p, _)| p.date);
        if let Some(w) = pts.windows(2).find(|w| w[0].0.date == w[1].0.date) {
            return Err(Error::DuplicateDate { line: w[1].1.max(w[0].1), ticker, date: w[1].0.date.to_string() });
        }
        let series = PriceSeries::new(ticker.clone(), pts.into_iter().map(|(p, _)| p).collect())?;
        out.insert(ticker, series);
    }
    Ok(out)
}

/// Writes series in the same long format, tickers in map order, dates ascending.
pub fn write_csv<'a, W: Write>(writer: W, series: impl IntoIterator<Item = &'a PriceSeries>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER)?;
    for s in series {
        for p in s.points() {
            wtr.write_record([s.ticker.as_str(), &p.date.to_string(), &format!("{}", p.adj_close)])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_one_ticker() {
        let data = "ticker,date,adj_close\nAAA,2020-01-02,10.5\nAAA,2020-01-03,11\n";
        let m = read_csv(data.as_bytes()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["AAA"].len(), 2);
    }

    #[test]
    fn zero_price_names_line() {
        let data = "ticker,date,adj_close\nAAA,2020-01-02,10.5\nAAA,2020-01-03,0.0\n";
        match read_csv(data.as_bytes()) {
            Err(Error::NonPositivePrice { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_line() {
        let data = "ticker,date,adj_close\nAAA,2020-01-02,10.5\nAAA,not-a-date,3\n";
        match read_csv(data.as_bytes()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let data = "ticker,date,adj_close\nAAA,2020-01-02\n";
        assert!(matches!(read_csv(data.as_bytes()), Err(Error::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn duplicate_dates_rejected() {
        let data = "ticker,date,adj_close\nAAA,2020-01-02,1\nBBB,2020-01-02,1\nAAA,2020-01-02,2\n";
        assert!(matches!(read_csv(data.as_bytes()), Err(Error::DuplicateDate { line: 4, .. })));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_csv("sym,date,close\nA,2020-01-02,1\n".as_bytes()).is_err());
    }
}
