//! Design scaffold, per-view design specs and the navigation plan.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::ir::{decode_value, NodeId, Storyboard};
use crate::report::{Finding, ValidationReport};

/// A JSON number that prints without a fraction when it has none.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Size(pub f64);

impl Serialize for Size {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            s.serialize_i64(self.0 as i64)
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Size {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neutral {
    pub dark: String,
    pub medium: String,
    pub light: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Colors {
    pub primary: String,
    pub secondary: String,
    pub accent: String,
    pub neutral: Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontRole {
    pub weight: String,
    pub size: Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Typography {
    pub font: String,
    pub h1: FontRole,
    pub h2: FontRole,
    pub body: FontRole,
    pub caption: FontRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ButtonStyle {
    pub bg_color: String,
    pub text_color: String,
    pub radius: Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButtonStyles {
    pub standard: ButtonStyle,
    pub primary: ButtonStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextStyle {
    pub font_size: Size,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NavBarStyle {
    pub bg_color: String,
    pub title: TextStyle,
    pub button: TextStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TabBarStyle {
    pub bg_color: String,
    pub icon_color: String,
    pub selected_color: String,
    pub label_font_size: Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Shadow {
    pub color: String,
    pub opacity: f64,
    pub offset_y: Size,
    pub blur: Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardStyle {
    pub bg_color: String,
    pub radius: Size,
    pub shadow: Shadow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Components {
    pub button: ButtonStyles,
    pub nav_bar: NavBarStyle,
    pub tab_bar: TabBarStyle,
    pub card: CardStyle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Icons {
    pub style: String,
    pub sizes: Vec<Size>,
    pub system: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Animations {
    pub duration: String,
    pub easing: String,
    pub style: String,
}

/// App-wide styling handed to code generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignScaffold {
    pub colors: Colors,
    pub typography: Typography,
    pub components: Components,
    pub icons: Icons,
    pub animations: Animations,
}

static HEX_COLOR: LazyLock<Regex> = LazyLock::new(|| Regex::new("^#[0-9A-Fa-f]{6}$").expect("regex"));

pub fn is_hex_color(s: &str) -> bool {
    HEX_COLOR.is_match(s)
}

impl DesignScaffold {
    /// Parses and validates, accepting a `{"designScaffold": {...}}` wrapper.
    pub fn from_value(value: Value) -> Result<Self, ValidationReport> {
        let value = unwrap_key(value, "designScaffold");
        let scaffold: DesignScaffold = decode_value(value).map_err(|e| e.to_report())?;
        let report = validate_scaffold(&scaffold);
        if report.is_ok() {
            Ok(scaffold)
        } else {
            Err(report)
        }
    }
}

pub(crate) fn unwrap_key(value: Value, key: &str) -> Value {
    match value {
        Value::Object(mut map) if map.len() == 1 && map.get(key).is_some_and(Value::is_object) => {
            map.remove(key).unwrap_or_default()
        }
        other => other,
    }
}

pub fn validate_scaffold(s: &DesignScaffold) -> ValidationReport {
    let mut report = ValidationReport::new();
    let c = &s.components;
    let colors = [
        ("colors.primary", &s.colors.primary),
        ("colors.secondary", &s.colors.secondary),
        ("colors.accent", &s.colors.accent),
        ("colors.neutral.dark", &s.colors.neutral.dark),
        ("colors.neutral.medium", &s.colors.neutral.medium),
        ("colors.neutral.light", &s.colors.neutral.light),
        ("components.button.standard.bgColor", &c.button.standard.bg_color),
        ("components.button.standard.textColor", &c.button.standard.text_color),
        ("components.button.primary.bgColor", &c.button.primary.bg_color),
        ("components.button.primary.textColor", &c.button.primary.text_color),
        ("components.navBar.bgColor", &c.nav_bar.bg_color),
        ("components.navBar.title.color", &c.nav_bar.title.color),
        ("components.navBar.button.color", &c.nav_bar.button.color),
        ("components.tabBar.bgColor", &c.tab_bar.bg_color),
        ("components.tabBar.iconColor", &c.tab_bar.icon_color),
        ("components.tabBar.selectedColor", &c.tab_bar.selected_color),
        ("components.card.bgColor", &c.card.bg_color),
        ("components.card.shadow.color", &c.card.shadow.color),
    ];
    for (path, value) in colors {
        if !is_hex_color(value) {
            report.push(Finding::error(
                "invalid_color",
                path,
                format!("'{value}' is not a #RRGGBB color"),
            ));
        }
    }
    let mut sizes = vec![
        ("typography.h1.size", s.typography.h1.size),
        ("typography.h2.size", s.typography.h2.size),
        ("typography.body.size", s.typography.body.size),
        ("typography.caption.size", s.typography.caption.size),
        ("components.button.standard.radius", c.button.standard.radius),
        ("components.button.primary.radius", c.button.primary.radius),
        ("components.navBar.title.fontSize", c.nav_bar.title.font_size),
        ("components.navBar.button.fontSize", c.nav_bar.button.font_size),
        ("components.tabBar.labelFontSize", c.tab_bar.label_font_size),
        ("components.card.radius", c.card.radius),
    ];
    let icon_paths: Vec<String> = (0..s.icons.sizes.len()).map(|i| format!("icons.sizes[{i}]")).collect();
    for (path, size) in icon_paths.iter().zip(&s.icons.sizes) {
        sizes.push((path.as_str(), *size));
    }
    for (path, size) in sizes {
        if size.0.is_nan() || size.0 <= 0.0 {
            report.push(Finding::error("invalid_size", path, format!("size {} must be positive", size.0)));
        }
    }
    if !(0.0..=1.0).contains(&c.card.shadow.opacity) {
        report.push(Finding::error(
            "invalid_size",
            "components.card.shadow.opacity",
            "opacity must be between 0 and 1",
        ));
    }
    if c.card.shadow.blur.0 < 0.0 {
        report.push(Finding::error("invalid_size", "components.card.shadow.blur", "blur must not be negative"));
    }
    report
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Interactions {
    pub gestures: String,
    pub feedback: String,
    pub keyboard: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct ViewNavigation {
    pub entry_point: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewActions {
    pub primary: String,
    pub secondary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Visual {
    pub colors: Map<String, Value>,
    pub typography: Map<String, Value>,
    pub animations: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub style: String,
    pub validation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorPresentation {
    pub message: String,
    pub visual: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Loading {
    pub indicator: String,
}

/// Free-text design notes for one view.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewDesignSpec {
    pub purpose: String,
    pub layout: String,
    pub interactions: Interactions,
    pub navigation: ViewNavigation,
    pub actions: ViewActions,
    pub visual: Visual,
    pub inputs: Inputs,
    pub errors: ErrorPresentation,
    pub loading: Loading,
}

impl ViewDesignSpec {
    pub fn from_value(value: Value) -> Result<Self, ValidationReport> {
        let spec: ViewDesignSpec = decode_value(value).map_err(|e| e.to_report())?;
        if spec.purpose.trim().is_empty() {
            return Err(ValidationReport::single(Finding::error(
                "empty_purpose",
                "purpose",
                "view design needs a purpose",
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TransitionType {
    Push,
    Sheet,
    FullScreen,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataPass {
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transition {
    pub destination: String,
    #[serde(rename = "type")]
    pub kind: TransitionType,
    #[serde(default)]
    pub trigger: String,
    #[serde(default)]
    pub data_pass: DataPass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewTransitions {
    #[serde(default)]
    pub id: NodeId,
    #[serde(default)]
    pub name: String,
    #[serde(rename = "swiftUIViewName")]
    pub swift_ui_view_name: String,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

/// Transient navigation design used while generating the first skeletons.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigationPlan {
    pub views: Vec<ViewTransitions>,
}

impl NavigationPlan {
    pub fn from_value(value: Value, sb: &Storyboard) -> Result<Self, ValidationReport> {
        let value = unwrap_key(value, "navigationPlan");
        let plan: NavigationPlan = decode_value(value).map_err(|e| e.to_report())?;
        let report = validate_navigation_plan(&plan, sb);
        if report.is_ok() {
            Ok(plan)
        } else {
            Err(report)
        }
    }

    pub fn transition_count(&self) -> usize {
        self.views.iter().map(|v| v.transitions.len()).sum()
    }
}

/// Every transition must follow a storyboard edge.
pub fn validate_navigation_plan(plan: &NavigationPlan, sb: &Storyboard) -> ValidationReport {
    let mut report = ValidationReport::new();
    for (vi, view) in plan.views.iter().enumerate() {
        let source = sb.node_by_view(&view.swift_ui_view_name);
        if source.is_none() && !view.transitions.is_empty() {
            report.push(Finding::error(
                "plan_edge_mismatch",
                format!("views[{vi}].swiftUIViewName"),
                format!("'{}' is not a storyboard view", view.swift_ui_view_name),
            ));
            continue;
        }
        for (ti, t) in view.transitions.iter().enumerate() {
            let path = format!("views[{vi}].transitions[{ti}]");
            let ok = match (source, sb.node_by_view(&t.destination)) {
                (Some(s), Some(d)) => sb.has_edge(s.id, d.id),
                _ => false,
            };
            if !ok {
                report.push(Finding::error(
                    "plan_edge_mismatch",
                    path,
                    format!(
                        "transition {} -> {} is not a storyboard edge",
                        view.swift_ui_view_name, t.destination
                    ),
                ));
            }
        }
    }
    report
}
