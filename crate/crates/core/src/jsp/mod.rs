//! Template pages: segmentation and lowering to servlet classes.

pub mod lower;
pub mod template;

pub use lower::{
    add_page_entity, capitalize_property, lower_page, register_page, synthetic_class_name, LoweredUnit, LoweringError,
    Origin, OriginMap,
};
pub use template::{parse_template, NodeKind, TagForm, TemplateError, TemplateNode, TemplatePage};
