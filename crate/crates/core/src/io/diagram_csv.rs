//! Persistence diagram CSV: header `dim,birth,death`, one row per pair,
//! essential deaths written as `inf`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Level;
use crate::ph::{PersistenceDiagram, PersistencePair};

#[derive(Debug, Error)]
pub enum DiagramCsvError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad death value {0:?}")]
    BadDeath(String),
}

impl DiagramCsvError {
    pub fn is_io(&self) -> bool {
        match self {
            DiagramCsvError::Io(_) => true,
            DiagramCsvError::Csv(e) => e.is_io_error(),
            DiagramCsvError::BadDeath(_) => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    dim: u8,
    birth: Level,
    death: String,
}

pub fn encode_diagram(pd: &PersistenceDiagram) -> Result<Vec<u8>, DiagramCsvError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for p in pd.pairs() {
        let death = p.death.map_or_else(|| "inf".to_string(), |d| d.to_string());
        w.serialize(Row { dim: p.dim, birth: p.birth, death })?;
    }
    if pd.is_empty() {
        w.write_record(["dim", "birth", "death"])?;
    }
    w.into_inner().map_err(|e| DiagramCsvError::Io(e.into_error()))
}

pub fn decode_diagram(bytes: &[u8], l_max: Level) -> Result<PersistenceDiagram, DiagramCsvError> {
    let mut r = csv::Reader::from_reader(bytes);
    let pairs = r
        .deserialize::<Row>()
        .map(|row| {
            let row = row?;
            let death = match row.death.as_str() {
                "inf" => None,
                s => Some(s.parse().map_err(|_| DiagramCsvError::BadDeath(s.to_string()))?),
            };
            Ok(PersistencePair { dim: row.dim, birth: row.birth, death })
        })
        .collect::<Result<Vec<_>, DiagramCsvError>>()?;
    Ok(PersistenceDiagram::new(pairs, l_max))
}

pub fn write_diagram(pd: &PersistenceDiagram, path: impl AsRef<Path>) -> Result<(), DiagramCsvError> {
    super::write_atomic(path.as_ref(), &encode_diagram(pd)?)?;
    Ok(())
}

pub fn read_diagram(path: impl AsRef<Path>, l_max: Level) -> Result<PersistenceDiagram, DiagramCsvError> {
    decode_diagram(&std::fs::read(path)?, l_max)
}
