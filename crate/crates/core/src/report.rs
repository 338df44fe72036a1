//! Tabular reports of convergence studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First line of every CSV report.
pub const CSV_HEADER: &str = "#wavelet-rg-report v1";

/// One step of a flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub scheme: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub value: f64,
    pub defect: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    Divergent,
    Inconclusive,
}

/// A flow with its limit and the projective-consistency residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub rows: Vec<FlowRow>,
    pub limit: Option<f64>,
    pub limit_tail: Option<f64>,
    pub consistency_defect: f64,
    pub status: FlowStatus,
}

impl FlowReport {
    pub fn terminal_defect(&self) -> f64 {
        self.rows.last().map(|r| r.defect).unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

/// CSV with the versioned header line.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Invalid(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(format!("{CSV_HEADER}\n{body}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let r = FlowReport {
            rows: vec![FlowRow {
                scheme: "point".into(),
                d: 1,
                n: 0,
                m: 2,
                value: 0.5,
                defect: 0.25,
                tail_bound: 0.0,
            }],
            limit: None,
            limit_tail: None,
            consistency_defect: 0.0,
            status: FlowStatus::Inconclusive,
        };
        let s = r.to_csv().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "scheme,d,N,M,value,defect,tail_bound");
        assert_eq!(lines[2], "point,1,0,2,0.5,0.25,0.0");
    }
}
