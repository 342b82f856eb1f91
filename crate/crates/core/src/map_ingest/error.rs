use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml { line: usize, column: usize, message: String },

    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },

    #[error("way {way} references missing node {node}")]
    MissingNode { way: i64, node: i64 },

    #[error("map contains no buildings and no roads")]
    EmptyMap,

    #[error("feature {index}: unsupported geometry type `{kind}`")]
    UnsupportedGeometry { index: usize, kind: String },

    #[error("feature {index}: {reason}")]
    InvalidFeature { index: usize, reason: String },

    #[error("invalid coordinate lon={lon} lat={lat} ({context})")]
    InvalidCoordinate { lon: f64, lat: f64, context: String },

    #[error("elevation grid: missing header key `{0}`")]
    MissingHeader(&'static str),

    #[error("elevation grid, line {line}: {message}")]
    Grid { line: usize, message: String },

    #[error("elevation grid has no valid cells")]
    UnusableGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_column(bytes: &[u8], offset: usize) -> (usize, usize) {
    let offset = offset.min(bytes.len());
    let before = &bytes[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = match before.iter().rposition(|&b| b == b'\n') {
        Some(nl) => offset - nl,
        None => offset + 1,
    };
    (line, column)
}
