use thiserror::Error;

use crate::map_ingest::FeatureId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ring has fewer than 3 vertices")]
    TooFewVertices,

    #[error("ring is self-intersecting")]
    SelfIntersecting,

    #[error("feature {id}: {source}")]
    Feature {
        id: FeatureId,
        #[source]
        source: Box<GeometryError>,
    },

    #[error("building id {0} appears more than once")]
    DuplicateId(FeatureId),
}

impl GeometryError {
    pub(crate) fn at(self, id: FeatureId) -> GeometryError {
        GeometryError::Feature {
            id,
            source: Box::new(self),
        }
    }
}
