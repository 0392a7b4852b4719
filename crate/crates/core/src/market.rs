//! Exchange-rate tables and the weighted currency graph built from them.
//!
//! A rate `rates[i][j]` is the number of units of currency `j` received for
//! one unit of currency `i`. Zero means the pair cannot be traded directly.
//! Edge weights are `-ln(rate)`, so a cycle with negative total weight is a
//! profitable round trip.

use std::collections::HashMap;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFormat {
    Csv,
    Json,
}

impl FromStr for RateFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RateFormat::Csv),
            "json" => Ok(RateFormat::Json),
            other => Err(Error::Matrix(format!("unknown rate format {other:?}"))),
        }
    }
}

impl RateFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => RateFormat::Json,
            _ => RateFormat::Csv,
        }
    }
}

/// Validated N×N exchange-rate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeMatrix {
    currencies: Vec<String>,
    rates: Vec<Vec<f64>>,
    timestamp: Option<String>,
}

#[derive(Deserialize)]
struct JsonMatrix {
    currencies: Vec<String>,
    rates: Vec<Vec<f64>>,
    #[serde(default)]
    timestamp: Option<String>,
}

fn check_code(code: &str) -> Result<()> {
    let ok = !code.is_empty()
        && code
            .chars()
            .all(|c| c.is_ascii_digit() || c.is_ascii_uppercase());
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidCurrency(code.to_string()))
    }
}

fn parse_rate(cell: &str, row: usize, col: usize) -> Result<f64> {
    let malformed = || Error::MalformedNumber {
        row,
        col,
        value: cell.to_string(),
    };
    let trimmed = cell.trim();
    // Rust's float grammar is locale independent, but it also accepts
    // "inf"/"nan" spellings, which are not rates.
    if trimmed.is_empty()
        || !trimmed
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
    {
        return Err(malformed());
    }
    let v = f64::from_str(trimmed).map_err(|_| malformed())?;
    if !v.is_finite() {
        return Err(malformed());
    }
    Ok(v)
}

impl ExchangeMatrix {
    /// Validates and builds a matrix. Row `i` of `rates` belongs to
    /// `currencies[i]`.
    pub fn new(
        currencies: Vec<String>,
        rates: Vec<Vec<f64>>,
        timestamp: Option<String>,
    ) -> Result<Self> {
        let n = currencies.len();
        if n < 2 {
            return Err(Error::Matrix(format!("need at least 2 currencies, got {n}")));
        }
        let mut seen = HashMap::with_capacity(n);
        for code in &currencies {
            check_code(code)?;
            if seen.insert(code.as_str(), ()).is_some() {
                return Err(Error::DuplicateCurrency(code.clone()));
            }
        }
        if rates.len() != n {
            return Err(Error::NotSquare {
                row: rates.len().min(n),
                found: rates.len(),
                expected: n,
            });
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    row: i,
                    found: row.len(),
                    expected: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::MalformedNumber {
                        row: i,
                        col: j,
                        value: v.to_string(),
                    });
                }
                if i == j {
                    if v != 1.0 {
                        return Err(Error::Diagonal { index: i, value: v });
                    }
                } else if v < 0.0 {
                    return Err(Error::NegativeRate { row: i, col: j, value: v });
                }
            }
        }
        Ok(Self {
            currencies,
            rates,
            timestamp,
        })
    }

    /// Parses a rate table. Coordinates in errors are 0-based matrix indices.
    pub fn parse<R: Read>(mut source: R, format: RateFormat) -> Result<Self> {
        match format {
            RateFormat::Json => {
                let raw: JsonMatrix = serde_json::from_reader(source)?;
                Self::new(raw.currencies, raw.rates, raw.timestamp)
            }
            RateFormat::Csv => {
                let mut text = String::new();
                source.read_to_string(&mut text)?;
                Self::parse_csv(&text)
            }
        }
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::parse_csv(text)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file), RateFormat::from_path(path))
    }

    fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Matrix("empty input".into()))??;
        let currencies: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let n = currencies.len();
        let mut index = HashMap::with_capacity(n);
        for (i, code) in currencies.iter().enumerate() {
            check_code(code)?;
            if index.insert(code.clone(), i).is_some() {
                return Err(Error::DuplicateCurrency(code.clone()));
            }
        }

        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut count = 0usize;
        for record in records {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let label = record.get(0).unwrap_or_default().to_string();
            let row = *index
                .get(&label)
                .ok_or_else(|| Error::Matrix(format!("row label {label:?} is not in the header")))?;
            if rows[row].is_some() {
                return Err(Error::DuplicateCurrency(label));
            }
            if record.len() - 1 != n {
                return Err(Error::NotSquare {
                    row,
                    found: record.len() - 1,
                    expected: n,
                });
            }
            let values = record
                .iter()
                .skip(1)
                .enumerate()
                .map(|(col, cell)| parse_rate(cell, row, col))
                .collect::<Result<Vec<_>>>()?;
            rows[row] = Some(values);
            count += 1;
        }
        if count != n {
            return Err(Error::NotSquare {
                row: count,
                found: count,
                expected: n,
            });
        }
        let rates = rows.into_iter().map(Option::unwrap).collect();
        Self::new(currencies, rates, None)
    }

    /// The bundled 14-currency table.
    pub fn table_one() -> Self {
        Self::from_csv_str(crate::RATES_14_CSV).expect("bundled dataset is valid")
    }

    pub fn len(&self) -> usize {
        self.currencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currencies.is_empty()
    }

    pub fn currencies(&self) -> &[String] {
        &self.currencies
    }

    pub fn code(&self, i: usize) -> &str {
        &self.currencies[i]
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.currencies.iter().position(|c| c == code)
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    pub fn timestamp(&self) -> Option<&str> {
        self.timestamp.as_deref()
    }

    /// Number of off-diagonal pairs with a positive rate.
    pub fn tradable_pairs(&self) -> usize {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.rates[i][j] > 0.0)
            .count()
    }
}

/// Directed currency graph with `-ln(rate)` edge weights and a target cycle
/// length `K`.
#[derive(Debug, Clone)]
pub struct ArbitrageInstance {
    matrix: ExchangeMatrix,
    edges: Vec<(usize, usize)>,
    weights: Vec<Vec<Option<f64>>>,
    cycle_len: usize,
}

impl ArbitrageInstance {
    pub fn new(matrix: ExchangeMatrix, cycle_len: usize) -> Result<Self> {
        let n = matrix.len();
        if cycle_len < 2 || cycle_len > n {
            return Err(Error::KOutOfRange { k: cycle_len, n });
        }
        let mut edges = Vec::new();
        let mut weights = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                let rate = matrix.rate(i, j);
                if i != j && rate > 0.0 {
                    edges.push((i, j));
                    weights[i][j] = Some(-rate.ln());
                }
            }
        }
        Ok(Self {
            matrix,
            edges,
            weights,
            cycle_len,
        })
    }

    pub fn matrix(&self) -> &ExchangeMatrix {
        &self.matrix
    }

    /// Number of currencies N.
    pub fn num_currencies(&self) -> usize {
        self.matrix.len()
    }

    /// Cycle length K.
    pub fn cycle_len(&self) -> usize {
        self.cycle_len
    }

    /// Directed edges in row-major order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.weights[from][to].is_some()
    }

    /// `-ln(rate)` for an edge, `None` for a non-edge or the diagonal.
    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.weights[from][to]
    }

    /// Same graph, different cycle length.
    pub fn with_cycle_len(&self, cycle_len: usize) -> Result<Self> {
        Self::new(self.matrix.clone(), cycle_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_by_two(off: f64) -> String {
        format!(",AAA,BBB\nAAA,1,{off}\nBBB,{off},1\n")
    }

    #[test]
    fn parses_bundled_table() {
        let m = ExchangeMatrix::table_one();
        assert_eq!(m.len(), 14);
        let usd = m.index_of("USD").unwrap();
        let eur = m.index_of("EUR").unwrap();
        assert_eq!(m.rate(usd, eur), 0.8892);
        assert_eq!(m.tradable_pairs(), 86);
    }

    #[test]
    fn zero_off_diagonals_give_no_edges() {
        let m = ExchangeMatrix::from_csv_str(&two_by_two(0.0)).unwrap();
        assert_eq!(m.tradable_pairs(), 0);
        let inst = ArbitrageInstance::new(m, 2).unwrap();
        assert!(inst.edges().is_empty());
    }

    #[test]
    fn json_and_csv_agree() {
        let json = r#"{"currencies":["AAA","BBB"],"rates":[[1,0.5],[2.0,1]],"timestamp":"t0"}"#;
        let a = ExchangeMatrix::parse(json.as_bytes(), RateFormat::Json).unwrap();
        let b = ExchangeMatrix::from_csv_str(",AAA,BBB\nAAA,1,0.5\nBBB,2.0,1\n").unwrap();
        assert_eq!(a.rates(), b.rates());
        assert_eq!(a.timestamp(), Some("t0"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = ExchangeMatrix::from_csv_str(",AAA,BBB\nAAA,1,0.5\nBBB,2,1.5\n").unwrap_err();
        assert!(matches!(err, Error::Diagonal { index: 1, .. }), "{err}");

        let err = ExchangeMatrix::from_csv_str(",AAA,BBB\nAAA,1,-0.5\nBBB,2,1\n").unwrap_err();
        assert!(matches!(err, Error::NegativeRate { row: 0, col: 1, .. }));

        let err = ExchangeMatrix::from_csv_str(",AAA,AAA\nAAA,1,0.5\nAAA,2,1\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateCurrency(_)));

        let err = ExchangeMatrix::from_csv_str(",AAA,BBB\nAAA,1,0,5\nBBB,2,1\n").unwrap_err();
        assert!(matches!(err, Error::NotSquare { row: 0, found: 3, expected: 2 }));

        let err = ExchangeMatrix::from_csv_str(",AAA,BBB\nAAA,1,0.5\n").unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));

        for bad in ["1,5", "abc", "nan", "inf", ""] {
            let text = format!(",AAA,BBB\nAAA,1,\"{bad}\"\nBBB,2,1\n");
            let err = ExchangeMatrix::from_csv_str(&text).unwrap_err();
            assert!(
                matches!(err, Error::MalformedNumber { row: 0, col: 1, .. }),
                "{bad:?}: {err}"
            );
        }

        let err = ExchangeMatrix::from_csv_str(",usd,BBB\nusd,1,1\nBBB,1,1\n").unwrap_err();
        assert!(matches!(err, Error::InvalidCurrency(_)));

        let err = ExchangeMatrix::from_csv_str(",AAA\nAAA,1\n").unwrap_err();
        assert!(matches!(err, Error::Matrix(_)));
    }

    #[test]
    fn row_order_does_not_matter() {
        let a = ExchangeMatrix::from_csv_str(",AAA,BBB,CCC\nAAA,1,2,3\nBBB,0.5,1,0\nCCC,0.25,4,1\n").unwrap();
        let b = ExchangeMatrix::from_csv_str(",AAA,BBB,CCC\nCCC,0.25,4,1\nAAA,1,2,3\nBBB,0.5,1,0\n").unwrap();
        assert_eq!(a, b);
        let ia = ArbitrageInstance::new(a, 3).unwrap();
        let ib = ArbitrageInstance::new(b, 3).unwrap();
        assert_eq!(ia.edges(), ib.edges());
    }

    #[test]
    fn instance_weights() {
        let m = ExchangeMatrix::table_one();
        let chf = m.index_of("CHF").unwrap();
        let jpy = m.index_of("JPY").unwrap();
        let inst = ArbitrageInstance::new(m, 5).unwrap();
        assert_eq!(inst.edges().len(), 86);
        assert_eq!(inst.weight(chf, jpy), Some(-(173.576f64).ln()));
        assert_eq!(inst.weight(chf, chf), None);
        for &(i, j) in inst.edges() {
            let back = (-inst.weight(i, j).unwrap()).exp();
            assert_relative_eq!(back, inst.matrix().rate(i, j), max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_rate_has_zero_weight() {
        let m = ExchangeMatrix::from_csv_str(&two_by_two(1.0)).unwrap();
        let inst = ArbitrageInstance::new(m, 2).unwrap();
        assert_eq!(inst.weight(0, 1), Some(0.0));
    }

    #[test]
    fn cycle_length_bounds() {
        let m = ExchangeMatrix::table_one();
        assert!(matches!(
            ArbitrageInstance::new(m.clone(), 15),
            Err(Error::KOutOfRange { k: 15, n: 14 })
        ));
        assert!(ArbitrageInstance::new(m.clone(), 1).is_err());
        assert!(ArbitrageInstance::new(m, 14).is_ok());
    }
}
