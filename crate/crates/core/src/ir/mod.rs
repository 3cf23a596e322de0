//! The three intermediate representations and their validation.

pub mod codec;
pub mod data_model;
pub mod skeleton;
pub mod storyboard;
mod validate;

pub use codec::{
    decode_value, deserialize_ir, ir_from_value, parse_json_text, serialize_ir, to_canonical_text, IrDocument,
    IrError, SchemaError, SCHEMA_VERSION,
};
pub use data_model::{validate_data_model, DataEntity, DataModel, EntityField};
pub use skeleton::{
    is_data_ref, validate_skeleton, Action, ActionHandler, ElementKind, GuiSkeleton, SkeletonElement,
};
pub use storyboard::{
    apply_storyboard_change, derive_view_name, is_valid_type_identifier, reachable_nodes, validate_storyboard, NodeId, Storyboard,
    StoryboardChange, StoryboardError, StoryboardNode,
};
pub use validate::validate_project;
