//! Lexical navigation-conformance checking of generated views against the
//! storyboard.
//!
//! For every edge A -> B the source of A is scanned for a navigation
//! construct (`NavigationLink`, `.navigationDestination`, `.sheet`,
//! `.fullScreenCover`, `path.append`) whose argument window instantiates
//! `B(`. Push constructs also need a navigation container in A's file or in
//! the file of a screen that leads to A. Unsatisfied edges are classified in
//! this order:
//!
//! 1. `WrongDestinationView`: A has a construct targeting a storyboard view
//!    that is not one of A's destinations.
//! 2. `MissingNavigationView`: a push construct for B exists but no container
//!    is available.
//! 3. `APIMisuse`: `B(` appears outside any construct window.
//! 4. `NavigationClosureEmpty`: an empty `{}` handler on a line naming B.
//! 5. `NavigationComment`: a comment with a navigation keyword naming B.
//! 6. `MissingNavigationLink`: a container is available but nothing links B.
//! 7. `NoNavigationLogic`: none of the above.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::codegen::GeneratedProject;
use crate::ir::{NodeId, Storyboard};
use crate::swift::{lex, Lexed};

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NavigationCategory {
    MissingNavigationLink,
    NavigationComment,
    NavigationClosureEmpty,
    MissingNavigationView,
    APIMisuse,
    NoNavigationLogic,
    WrongDestinationView,
}

impl NavigationCategory {
    pub const ALL: [NavigationCategory; 7] = [
        NavigationCategory::MissingNavigationLink,
        NavigationCategory::NavigationComment,
        NavigationCategory::NavigationClosureEmpty,
        NavigationCategory::MissingNavigationView,
        NavigationCategory::APIMisuse,
        NavigationCategory::NoNavigationLogic,
        NavigationCategory::WrongDestinationView,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NavigationCategory::MissingNavigationLink => "MissingNavigationLink",
            NavigationCategory::NavigationComment => "NavigationComment",
            NavigationCategory::NavigationClosureEmpty => "NavigationClosureEmpty",
            NavigationCategory::MissingNavigationView => "MissingNavigationView",
            NavigationCategory::APIMisuse => "APIMisuse",
            NavigationCategory::NoNavigationLogic => "NoNavigationLogic",
            NavigationCategory::WrongDestinationView => "WrongDestinationView",
        }
    }

    /// Row label as printed in error tables.
    pub fn label(self) -> &'static str {
        match self {
            NavigationCategory::MissingNavigationLink => "Missing Navigation Link",
            NavigationCategory::NavigationComment => "Navigation Comment",
            NavigationCategory::NavigationClosureEmpty => "Navigation Closure Empty",
            NavigationCategory::MissingNavigationView => "Missing Navigation View",
            NavigationCategory::APIMisuse => "API Misuse",
            NavigationCategory::NoNavigationLogic => "No Navigation Logic",
            NavigationCategory::WrongDestinationView => "Wrong Destination View",
        }
    }
}

impl fmt::Display for NavigationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NavigationFinding {
    pub category: NavigationCategory,
    pub source_view: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_destination: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub evidence: String,
}

impl fmt::Display for NavigationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source_view)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        write!(f, ": {}", self.category)?;
        if let Some(dest) = &self.expected_destination {
            write!(f, " (expected {dest})")?;
        }
        if !self.evidence.is_empty() {
            write!(f, ": {}", self.evidence)?;
        }
        Ok(())
    }
}

static CONSTRUCT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\bNavigationLink\b|\.(?:navigationDestination|sheet|fullScreenCover)\b|\b\w*[pP]ath\s*\.\s*append\b")
        .expect("construct regex")
});
static CONTAINER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:NavigationStack|NavigationView|NavigationSplitView)\b").expect("container regex")
});
static EMPTY_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{\s*\}").expect("block regex"));
static LABELED_CLOSURE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*[A-Za-z_]\w*\s*:\s*\{").expect("label regex"));

const NAV_KEYWORDS: &[&str] = &[
    "navigat", "go to", "goes to", "push", "present", "segue", "transition", "route", "link",
    "open", "show", "move to", "take the user", "takes the user", "redirect", "todo",
];

#[derive(Debug, Clone)]
struct Construct {
    modal: bool,
    start: usize,
    end: usize,
    line: usize,
    /// Storyboard views instantiated inside the window.
    targets: BTreeSet<String>,
}

struct ViewScan {
    lexed: Lexed,
    code: String,
    constructs: Vec<Construct>,
    container_line: Option<usize>,
}

/// End of a construct's argument window: consecutive bracketed groups and
/// labelled trailing closures after the token.
fn window_end(masked: &str, from: usize) -> usize {
    let bytes = masked.as_bytes();
    let mut pos = from;
    loop {
        let mut next = pos;
        while next < bytes.len() && bytes[next].is_ascii_whitespace() {
            next += 1;
        }
        if next >= bytes.len() {
            return pos;
        }
        match bytes[next] {
            b'(' | b'{' | b'[' => pos = balanced_end(bytes, next),
            _ => match LABELED_CLOSURE.find(&masked[next..]) {
                Some(m) if pos > from => pos = balanced_end(bytes, next + m.end() - 1),
                _ => return pos,
            },
        }
    }
}

fn balanced_end(bytes: &[u8], open: usize) -> usize {
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        match b {
            b'(' | b'{' | b'[' => depth += 1,
            b')' | b'}' | b']' => {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            _ => {}
        }
    }
    bytes.len()
}

fn instantiation_regex(view: &str) -> Regex {
    Regex::new(&format!(r"\b{}\s*\(", regex::escape(view))).expect("instantiation regex")
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Normalized spellings under which a screen may be mentioned in prose.
fn mention_keys(view: &str, name: &str) -> Vec<String> {
    let mut keys = vec![normalize(view)];
    if let Some(stem) = view.strip_suffix("View") {
        keys.push(normalize(stem));
    }
    keys.push(normalize(name));
    keys.retain(|k| k.len() >= 3);
    keys.sort();
    keys.dedup();
    keys
}

fn mentions(text: &str, keys: &[String]) -> bool {
    let n = normalize(text);
    keys.iter().any(|k| n.contains(k.as_str()))
}

fn scan_view(code: &str, instantiations: &[(String, Regex)]) -> ViewScan {
    let lexed = lex(code);
    let masked = &lexed.masked;
    let mut constructs = Vec::new();
    for m in CONSTRUCT.find_iter(masked) {
        let end = window_end(masked, m.end());
        let window = &masked[m.start()..end];
        let targets = instantiations
            .iter()
            .filter(|(_, re)| re.is_match(window))
            .map(|(v, _)| v.clone())
            .collect();
        let token = m.as_str();
        constructs.push(Construct {
            modal: token.contains("sheet") || token.contains("fullScreenCover"),
            start: m.start(),
            end,
            line: lexed.line_of(m.start()),
            targets,
        });
    }
    let container_line = CONTAINER.find(masked).map(|m| lexed.line_of(m.start()));
    ViewScan {
        code: code.to_string(),
        lexed,
        constructs,
        container_line,
    }
}

fn line_text(code: &str, line: usize) -> String {
    code.lines().nth(line - 1).unwrap_or("").trim().to_string()
}

/// Findings for every storyboard edge the generated code does not implement.
pub fn check_navigation(gp: &GeneratedProject, sb: &Storyboard) -> Vec<NavigationFinding> {
    let views: BTreeMap<NodeId, (&str, &str)> = sb
        .nodes
        .iter()
        .map(|n| (n.id, (n.swift_ui_view_name.as_str(), n.name.as_str())))
        .collect();
    let instantiations: Vec<(String, Regex)> = sb
        .nodes
        .iter()
        .map(|n| (n.swift_ui_view_name.clone(), instantiation_regex(&n.swift_ui_view_name)))
        .collect();
    let scans: BTreeMap<NodeId, ViewScan> = sb
        .nodes
        .iter()
        .filter_map(|n| {
            gp.view(&n.swift_ui_view_name)
                .map(|v| (n.id, scan_view(&v.view_code, &instantiations)))
        })
        .collect();

    let mut findings = Vec::new();
    for node in &sb.nodes {
        let Some(scan) = scans.get(&node.id) else { continue };
        let source = node.swift_ui_view_name.as_str();
        let container_available = scan.container_line.is_some()
            || ancestors(sb, node.id)
                .iter()
                .any(|a| scans.get(a).is_some_and(|s| s.container_line.is_some()));
        let destinations: BTreeSet<&str> = node
            .outgoing_edges
            .iter()
            .filter_map(|e| views.get(e).map(|(v, _)| *v))
            .collect();

        let unsatisfied: Vec<NodeId> = node
            .outgoing_edges
            .iter()
            .copied()
            .filter(|e| {
                let Some((dest, _)) = views.get(e) else { return false };
                !scan
                    .constructs
                    .iter()
                    .any(|c| c.targets.contains(*dest) && (c.modal || container_available))
            })
            .collect();

        // Constructs that only target views this screen has no edge to.
        let mut wrong: Vec<(&Construct, String)> = scan
            .constructs
            .iter()
            .filter_map(|c| {
                let bad: Vec<&String> = c
                    .targets
                    .iter()
                    .filter(|t| !destinations.contains(t.as_str()) && t.as_str() != source)
                    .collect();
                (!bad.is_empty() && !c.targets.iter().any(|t| destinations.contains(t.as_str())))
                    .then(|| (c, bad[0].clone()))
            })
            .collect();
        wrong.reverse();

        for edge in &unsatisfied {
            let (dest, dest_name) = views[edge];
            let keys = mention_keys(dest, dest_name);
            let finding = |category, line: Option<usize>, evidence: String| NavigationFinding {
                category,
                source_view: source.to_string(),
                expected_destination: Some(dest.to_string()),
                line,
                evidence,
            };

            if let Some((c, target)) = wrong.pop() {
                findings.push(finding(
                    NavigationCategory::WrongDestinationView,
                    Some(c.line),
                    format!("navigates to {target}: {}", line_text(&scan.code, c.line)),
                ));
                continue;
            }
            if let Some(c) = scan.constructs.iter().find(|c| !c.modal && c.targets.contains(dest)) {
                findings.push(finding(
                    NavigationCategory::MissingNavigationView,
                    Some(c.line),
                    line_text(&scan.code, c.line),
                ));
                continue;
            }
            let re = &instantiations.iter().find(|(v, _)| v == dest).expect("dest regex").1;
            let stray = re.find_iter(&scan.lexed.masked).find(|m| {
                !scan
                    .constructs
                    .iter()
                    .any(|c| m.start() >= c.start && m.start() < c.end)
            });
            if let Some(m) = stray {
                let line = scan.lexed.line_of(m.start());
                findings.push(finding(NavigationCategory::APIMisuse, Some(line), line_text(&scan.code, line)));
                continue;
            }
            let empty = EMPTY_BLOCK.find_iter(&scan.lexed.masked).find_map(|m| {
                let line = scan.lexed.line_of(m.start());
                let text = line_text(&scan.code, line);
                mentions(&text, &keys).then_some((line, text))
            });
            if let Some((line, text)) = empty {
                findings.push(finding(NavigationCategory::NavigationClosureEmpty, Some(line), text));
                continue;
            }
            let comment = scan.lexed.comments.iter().find(|c| {
                let lower = c.text.to_ascii_lowercase();
                NAV_KEYWORDS.iter().any(|k| lower.contains(k)) && mentions(&c.text, &keys)
            });
            if let Some(c) = comment {
                findings.push(finding(
                    NavigationCategory::NavigationComment,
                    Some(c.line),
                    c.text.trim().to_string(),
                ));
                continue;
            }
            if container_available {
                findings.push(finding(
                    NavigationCategory::MissingNavigationLink,
                    scan.container_line,
                    format!("no link to {dest}"),
                ));
            } else {
                findings.push(finding(
                    NavigationCategory::NoNavigationLogic,
                    None,
                    format!("no navigation code for {dest}"),
                ));
            }
        }
        while let Some((c, target)) = wrong.pop() {
            findings.push(NavigationFinding {
                category: NavigationCategory::WrongDestinationView,
                source_view: source.to_string(),
                expected_destination: None,
                line: Some(c.line),
                evidence: format!("navigates to {target}: {}", line_text(&scan.code, c.line)),
            });
        }
    }
    findings.sort_by(|a, b| {
        (&a.source_view, a.line.unwrap_or(usize::MAX), a.category, &a.expected_destination).cmp(&(
            &b.source_view,
            b.line.unwrap_or(usize::MAX),
            b.category,
            &b.expected_destination,
        ))
    });
    findings
}

/// Screens with a path to `id`, excluding `id` itself.
fn ancestors(sb: &Storyboard, id: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![id];
    while let Some(current) = stack.pop() {
        for pred in sb.incoming(current) {
            if pred != id && seen.insert(pred) {
                stack.push(pred);
            }
        }
    }
    seen
}
