//! Timeline export as CSV or the stored JSON document.

use std::str::FromStr;

use super::AppError;
use crate::model::{rfc3339, Feature, TimelineSeries};
use crate::store::{PairId, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(AppError::user("UnsupportedFormat", format!("unsupported export format {other:?} (json, csv)"))),
        }
    }
}

/// One row per point: time, sim, sim_text, sim_meta, then every feature
/// score (empty when undefined).
pub fn timeline_csv(series: &TimelineSeries) -> Result<String, AppError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_owned(), "revision1".into(), "revision2".into(), "sim".into(), "sim_text".into(), "sim_meta".into()];
    header.extend(Feature::ALL.iter().map(|f| f.as_str().to_owned()));
    let csv_err = |e: csv::Error| AppError::internal("Export", e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for p in &series.points {
        let mut row = vec![
            rfc3339::format(&p.time),
            p.revision1.to_string(),
            p.revision2.to_string(),
            p.sim.to_string(),
            p.sim_text.to_string(),
            p.sim_meta.to_string(),
        ];
        for f in Feature::ALL {
            row.push(match p.features.iter().find(|s| s.feature == f) {
                Some(s) if s.defined => s.value.to_string(),
                _ => String::new(),
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::internal("Export", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| AppError::internal("Export", e.to_string()))
}

pub fn export_timeline(store: &Store, pair: &PairId, format: ExportFormat) -> Result<String, AppError> {
    match format {
        ExportFormat::Json => {
            store.get_timeline(pair)?;
            Ok(store.read_raw(&store.timeline_path(pair))?)
        }
        ExportFormat::Csv => timeline_csv(&store.get_timeline(pair)?),
    }
}
