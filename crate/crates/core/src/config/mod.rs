//! Deployment descriptors, annotation facts and the merged URL mapping table.

mod annotations;
mod descriptors;
mod mapping;

pub use annotations::{collect_annotations, AnnotatedBean, AnnotatedServlet, AnnotationFacts};
pub use descriptors::{
    parse_ejb_jar, parse_faces_config, parse_tld, parse_web_xml, AttributeSpec, BeanDecl, EjbJar, EjbRefDecl,
    ServletDecl, TagLibrary, TagSpec, UrlPatternDecl, WebXml,
};
pub use mapping::{build_mapping, MappedTarget, MappingParts, MappingSource, Target, UrlMappingTable};

use crate::graph::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: malformed XML: {message}")]
    Xml { path: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
