//! GUI skeletons: per-screen pseudocode trees of containers, elements and
//! descriptive action handlers.
//!
//! The JSON shape nests each element under its kind:
//! `{"Button": {"Label": "Edit", "OnTap": {"Navigate": {"Destination": "EditNoteView"}}}}`.
//! String-valued keys are attributes, `Elements` holds children, keys of the
//! form `On<Event>` hold the action, and object-valued keys are single nested
//! children (as `NavigationBar` inside `Navigation`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::codec::SchemaError;
use super::storyboard::NodeId;
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementKind {
    MainContainer,
    List,
    HStack,
    VStack,
    Navigation,
    Text,
    Button,
    Image,
    TextField,
    Custom(String),
}

impl ElementKind {
    pub fn parse(s: &str) -> Self {
        match s {
            "MainContainer" => Self::MainContainer,
            "List" => Self::List,
            "HStack" => Self::HStack,
            "VStack" => Self::VStack,
            "Navigation" => Self::Navigation,
            "Text" => Self::Text,
            "Button" => Self::Button,
            "Image" => Self::Image,
            "TextField" => Self::TextField,
            other => Self::Custom(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Self::MainContainer => "MainContainer",
            Self::List => "List",
            Self::HStack => "HStack",
            Self::VStack => "VStack",
            Self::Navigation => "Navigation",
            Self::Text => "Text",
            Self::Button => "Button",
            Self::Image => "Image",
            Self::TextField => "TextField",
            Self::Custom(s) => s,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Self::Text | Self::Button | Self::Image | Self::TextField)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a handler does. Never executable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionHandler {
    Describe(String),
    Navigate { destination: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    /// The event key, e.g. `OnTap`.
    pub trigger: String,
    pub handler: ActionHandler,
}

impl Action {
    pub fn navigate(trigger: &str, destination: &str) -> Self {
        Self {
            trigger: trigger.to_string(),
            handler: ActionHandler::Navigate {
                destination: destination.to_string(),
            },
        }
    }

    pub fn describe(trigger: &str, text: &str) -> Self {
        Self {
            trigger: trigger.to_string(),
            handler: ActionHandler::Describe(text.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonElement {
    pub kind: ElementKind,
    pub attributes: BTreeMap<String, String>,
    pub action: Option<Action>,
    pub children: Vec<SkeletonElement>,
}

impl SkeletonElement {
    pub fn new(kind: ElementKind) -> Self {
        Self {
            kind,
            attributes: BTreeMap::new(),
            action: None,
            children: Vec::new(),
        }
    }

    pub fn attr(mut self, key: &str, value: &str) -> Self {
        self.attributes.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_action(mut self, action: Action) -> Self {
        self.action = Some(action);
        self
    }

    pub fn child(mut self, child: SkeletonElement) -> Self {
        self.children.push(child);
        self
    }

    fn walk<'a>(&'a self, path: String, out: &mut Vec<(String, &'a SkeletonElement)>) {
        out.push((path.clone(), self));
        for (idx, child) in self.children.iter().enumerate() {
            child.walk(format!("{path}.elements[{idx}]"), out);
        }
    }

    pub fn to_value(&self) -> Value {
        let mut body = Map::new();
        for (k, v) in &self.attributes {
            body.insert(k.clone(), Value::String(v.clone()));
        }
        if let Some(action) = &self.action {
            let handler = match &action.handler {
                ActionHandler::Describe(text) => Value::String(text.clone()),
                ActionHandler::Navigate { destination } => serde_json::json!({
                    "Navigate": { "Destination": destination }
                }),
            };
            body.insert(action.trigger.clone(), handler);
        }
        if !self.children.is_empty() {
            body.insert(
                "Elements".to_string(),
                Value::Array(self.children.iter().map(Self::to_value).collect()),
            );
        }
        let mut outer = Map::new();
        outer.insert(self.kind.as_str().to_string(), Value::Object(body));
        Value::Object(outer)
    }

    pub fn from_value(value: &Value, path: &str) -> Result<Self, SchemaError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::new(path, "element must be an object"))?;
        if obj.len() != 1 {
            return Err(SchemaError::new(
                path,
                "element must have exactly one key naming its kind",
            ));
        }
        let (kind, body) = obj.iter().next().expect("one entry");
        Self::from_kind_body(kind, body, &format!("{path}.{kind}"))
    }

    fn from_kind_body(kind: &str, body: &Value, path: &str) -> Result<Self, SchemaError> {
        let mut element = SkeletonElement::new(ElementKind::parse(kind));
        let body = match body {
            Value::Object(map) => map,
            // `{"Text": "Hello"}` shorthand.
            Value::String(s) => {
                element.attributes.insert("Value".to_string(), s.clone());
                return Ok(element);
            }
            Value::Null => return Ok(element),
            _ => return Err(SchemaError::new(path, "element body must be an object")),
        };
        for (key, value) in body {
            let at = format!("{path}.{key}");
            if key == "Elements" {
                let items = value
                    .as_array()
                    .ok_or_else(|| SchemaError::new(&at, "Elements must be an array"))?;
                for (idx, item) in items.iter().enumerate() {
                    element
                        .children
                        .push(Self::from_value(item, &format!("{at}[{idx}]"))?);
                }
            } else if is_action_key(key) {
                if element.action.is_some() {
                    return Err(SchemaError::new(&at, "an element carries at most one action"));
                }
                element.action = Some(Action {
                    trigger: key.clone(),
                    handler: parse_handler(value, &at)?,
                });
            } else {
                match value {
                    Value::String(s) => {
                        element.attributes.insert(key.clone(), s.clone());
                    }
                    Value::Number(n) => {
                        element.attributes.insert(key.clone(), n.to_string());
                    }
                    Value::Bool(b) => {
                        element.attributes.insert(key.clone(), b.to_string());
                    }
                    Value::Object(_) => {
                        element.children.push(Self::from_kind_body(key, value, &at)?);
                    }
                    _ => {
                        return Err(SchemaError::new(
                            &at,
                            "attribute values must be strings, numbers or booleans",
                        ))
                    }
                }
            }
        }
        Ok(element)
    }
}

fn is_action_key(key: &str) -> bool {
    key.strip_prefix("On")
        .and_then(|rest| rest.chars().next())
        .is_some_and(|c| c.is_ascii_uppercase())
}

fn parse_handler(value: &Value, path: &str) -> Result<ActionHandler, SchemaError> {
    match value {
        Value::String(s) => Ok(ActionHandler::Describe(s.clone())),
        Value::Object(map) => {
            let nav = map.get("Navigate").ok_or_else(|| {
                SchemaError::new(path, "action object must be a Navigate record")
            })?;
            let destination = match nav {
                Value::String(s) => s.clone(),
                Value::Object(inner) => inner
                    .get("Destination")
                    .and_then(Value::as_str)
                    .ok_or_else(|| {
                        SchemaError::new(&format!("{path}.Navigate"), "missing Destination")
                    })?
                    .to_string(),
                _ => return Err(SchemaError::new(path, "malformed Navigate record")),
            };
            Ok(ActionHandler::Navigate { destination })
        }
        _ => Err(SchemaError::new(
            path,
            "handler must be a description string or a Navigate record",
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuiSkeleton {
    pub view_name: String,
    pub node_id: NodeId,
    pub state_variables: Vec<String>,
    /// Root elements of the layout, in order.
    pub layout: Vec<SkeletonElement>,
}

impl GuiSkeleton {
    pub fn new(view_name: &str, node_id: impl Into<NodeId>) -> Self {
        Self {
            view_name: view_name.to_string(),
            node_id: node_id.into(),
            state_variables: Vec::new(),
            layout: Vec::new(),
        }
    }

    pub fn with_state(mut self, vars: &[&str]) -> Self {
        self.state_variables = vars.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_root(mut self, root: SkeletonElement) -> Self {
        self.layout.push(root);
        self
    }

    /// Every element with its path, in pre-order.
    pub fn elements(&self) -> Vec<(String, &SkeletonElement)> {
        let mut out = Vec::new();
        for (idx, root) in self.layout.iter().enumerate() {
            root.walk(format!("layout[{idx}]"), &mut out);
        }
        out
    }

    /// `(path, destination)` for every Navigate action in the tree.
    pub fn navigates(&self) -> Vec<(String, &str)> {
        self.elements()
            .into_iter()
            .filter_map(|(path, el)| match &el.action {
                Some(Action {
                    handler: ActionHandler::Navigate { destination },
                    trigger,
                }) => Some((format!("{path}.{trigger}"), destination.as_str())),
                _ => None,
            })
            .collect()
    }

    /// `(path, value)` for every attribute that carries a dotted data reference.
    pub fn data_refs(&self) -> Vec<(String, &str)> {
        self.elements()
            .into_iter()
            .flat_map(|(path, el)| {
                el.attributes
                    .iter()
                    .filter(|(k, v)| DATA_ATTRIBUTES.contains(&k.as_str()) && is_data_ref(v))
                    .map(move |(k, v)| (format!("{path}.{k}"), v.as_str()))
            })
            .collect()
    }

    pub fn to_value(&self) -> Value {
        let mut layout = Map::new();
        let unique_kinds: BTreeSet<&str> = self.layout.iter().map(|e| e.kind.as_str()).collect();
        let layout_value = if unique_kinds.len() == self.layout.len() {
            for root in &self.layout {
                if let Value::Object(mut single) = root.to_value() {
                    let (k, v) = single.iter_mut().next().map(|(k, v)| (k.clone(), v.take())).expect("one key");
                    layout.insert(k, v);
                }
            }
            Value::Object(layout)
        } else {
            Value::Array(self.layout.iter().map(SkeletonElement::to_value).collect())
        };
        serde_json::json!({
            "viewName": self.view_name,
            "id": self.node_id,
            "guiSkeleton": {
                "StateVariables": self.state_variables,
                "Layout": layout_value,
            }
        })
    }

    pub fn from_value(value: &Value) -> Result<Self, SchemaError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::new("", "skeleton must be an object"))?;
        let view_name = obj
            .get("viewName")
            .ok_or_else(|| SchemaError::missing("", "viewName"))?
            .as_str()
            .ok_or_else(|| SchemaError::new("viewName", "must be a string"))?
            .to_string();
        let node_id = match obj.get("id") {
            None | Some(Value::Null) => NodeId::UNASSIGNED,
            Some(v) => NodeId(
                v.as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .ok_or_else(|| SchemaError::new("id", "must be a non-negative integer"))?,
            ),
        };
        let body = obj
            .get("guiSkeleton")
            .ok_or_else(|| SchemaError::missing("", "guiSkeleton"))?
            .as_object()
            .ok_or_else(|| SchemaError::new("guiSkeleton", "must be an object"))?;
        let state_variables = match body.get("StateVariables") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_str().map(str::to_string).ok_or_else(|| {
                        SchemaError::new(
                            &format!("guiSkeleton.StateVariables[{i}]"),
                            "must be a string",
                        )
                    })
                })
                .collect::<Result<_, _>>()?,
            Some(_) => {
                return Err(SchemaError::new(
                    "guiSkeleton.StateVariables",
                    "must be an array of names",
                ))
            }
        };
        let layout = match body.get("Layout") {
            None => return Err(SchemaError::missing("guiSkeleton", "Layout")),
            Some(Value::Object(map)) => map
                .iter()
                .map(|(k, v)| {
                    SkeletonElement::from_kind_body(k, v, &format!("guiSkeleton.Layout.{k}"))
                })
                .collect::<Result<_, _>>()?,
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| SkeletonElement::from_value(v, &format!("guiSkeleton.Layout[{i}]")))
                .collect::<Result<_, _>>()?,
            Some(_) => {
                return Err(SchemaError::new(
                    "guiSkeleton.Layout",
                    "must be an object or array",
                ))
            }
        };
        Ok(Self {
            view_name,
            node_id,
            state_variables,
            layout,
        })
    }

    /// SwiftUI-like text rendering for reading and editing.
    pub fn to_pseudocode(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "// {} (node {})", self.view_name, self.node_id);
        for var in &self.state_variables {
            let _ = writeln!(out, "@State var {var}");
        }
        for root in &self.layout {
            write_pseudo(root, 0, &mut out);
        }
        out
    }
}

fn write_pseudo(el: &SkeletonElement, depth: usize, out: &mut String) {
    let indent = "    ".repeat(depth);
    let attrs = el
        .attributes
        .iter()
        .map(|(k, v)| format!("{k}: {v:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    let _ = write!(out, "{indent}{}", el.kind);
    if !attrs.is_empty() {
        let _ = write!(out, "({attrs})");
    }
    if let Some(action) = &el.action {
        match &action.handler {
            ActionHandler::Describe(text) => {
                let _ = write!(out, " .{}({text:?})", action.trigger);
            }
            ActionHandler::Navigate { destination } => {
                let _ = write!(out, " .{}(Navigate -> {destination})", action.trigger);
            }
        }
    }
    if el.children.is_empty() {
        out.push('\n');
    } else {
        out.push_str(" {\n");
        for child in &el.children {
            write_pseudo(child, depth + 1, out);
        }
        let _ = writeln!(out, "{indent}}}");
    }
}

/// Attributes whose values are treated as data bindings rather than literal text.
pub const DATA_ATTRIBUTES: &[&str] = &[
    "Value",
    "DataSource",
    "Binding",
    "Source",
    "Data",
    "Items",
    "Selection",
];

/// `note.title`, `order.customer.name`: a lowercase-first instance name
/// followed by one or more dotted identifiers.
pub fn is_data_ref(s: &str) -> bool {
    let mut parts = s.split('.');
    let Some(head) = parts.next() else {
        return false;
    };
    let ident = |p: &str| {
        let mut cs = p.chars();
        cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
    };
    let rest: Vec<&str> = parts.collect();
    head.starts_with(|c: char| c.is_ascii_lowercase())
        && ident(head)
        && !rest.is_empty()
        && rest.iter().all(|p| ident(p))
}

/// Checks of a single skeleton in isolation.
pub fn validate_skeleton(skel: &GuiSkeleton, prefix: &str) -> ValidationReport {
    let mut report = ValidationReport::new();
    if skel.view_name.trim().is_empty() {
        report.push(Finding::error(
            "empty_view_name",
            format!("{prefix}viewName"),
            "skeleton has no view name",
        ));
    }
    let state: BTreeSet<&str> = skel.state_variables.iter().map(String::as_str).collect();
    for (path, el) in skel.elements() {
        let at = format!("{prefix}{path}");
        if el.kind.is_leaf() && !el.children.is_empty() {
            report.push(Finding::error(
                "leaf_with_children",
                at.clone(),
                format!("{} cannot contain elements", el.kind),
            ));
        }
        if el.kind == ElementKind::List {
            match el.attributes.get("DataSource") {
                None => report.push(Finding::error(
                    "list_missing_data_source",
                    at.clone(),
                    "List has no DataSource",
                )),
                Some(src) if !src.contains('.') && !state.contains(src.as_str()) => {
                    report.push(Finding::warning(
                        "unknown_state_variable",
                        format!("{at}.DataSource"),
                        format!("'{src}' is not a declared state variable"),
                    ))
                }
                _ => {}
            }
        }
        if let Some(Action {
            handler: ActionHandler::Navigate { destination },
            trigger,
        }) = &el.action
        {
            if destination.trim().is_empty() {
                report.push(Finding::error(
                    "empty_destination",
                    format!("{at}.{trigger}"),
                    "Navigate has no destination",
                ));
            }
        }
    }
    report
}

impl Serialize for GuiSkeleton {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GuiSkeleton {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        GuiSkeleton::from_value(&value).map_err(D::Error::custom)
    }
}
