//! Object-oriented frontend for a Java subset.

pub mod ast;
pub mod extract;
pub mod index;
pub mod lexer;
pub mod parser;
pub mod sites;

pub use parser::{parse_unit, ParsedUnit, SyntaxError};
pub use extract::{extract_oo_graph, ExternalsPolicy};
pub use index::{LoweredOrigin, PositionMap, ProjectIndex, SourceUnit, Ty};
pub use sites::{collect_lookup_sites, collect_string_writes, LookupSite, StringWriteSite, HOLE};
