use std::io::Read;

use super::AuditError;
use crate::model::ActionModel;
use crate::rational;

/// Integer rows ordered like the model's features.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub rows: Vec<Vec<i64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reads CSV with a header of feature names. Extra columns are ignored;
/// cells must hold integers (`3` or `3.0`).
pub fn read_dataset(reader: impl Read, m: &ActionModel) -> Result<Dataset, AuditError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| AuditError::Dataset(e.to_string()))?.clone();
    let columns: Vec<usize> = m
        .features
        .iter()
        .map(|f| {
            header
                .iter()
                .position(|h| h == f.name)
                .ok_or_else(|| AuditError::Dataset(format!("missing column '{}'", f.name)))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (n, record) in csv.records().enumerate() {
        let record = record.map_err(|e| AuditError::Dataset(e.to_string()))?;
        let row = columns
            .iter()
            .map(|&c| {
                let cell = record.get(c).unwrap_or("");
                rational::parse(cell)
                    .ok()
                    .filter(rational::is_integer)
                    .and_then(|v| rational::to_i64(&v))
                    .ok_or_else(|| {
                        AuditError::Dataset(format!("row {}: '{}' is not an integer in column '{}'", n + 2, cell, &header[c]))
                    })
            })
            .collect::<Result<Vec<i64>, _>>()?;
        rows.push(row);
    }
    Ok(Dataset { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;

    #[test]
    fn reorders_columns_and_rejects_fractions() {
        let m = parse_problem(
            r#"{"classifier": {"weights": [1, 1], "intercept": 0},
                "features": [{"name": "a", "lower": 0, "upper": 9, "actionability": "free"},
                             {"name": "b", "lower": 0, "upper": 9, "actionability": "free"}]}"#,
        )
        .unwrap()
        .model;
        let d = read_dataset("label,b,a\n1,2,3\n0, 4.0 ,5\n".as_bytes(), &m).unwrap();
        assert_eq!(d.rows, vec![vec![3, 2], vec![5, 4]]);
        assert!(read_dataset("a,b\n1,2.5\n".as_bytes(), &m).is_err());
        assert!(read_dataset("a\n1\n".as_bytes(), &m).is_err());
    }
}
