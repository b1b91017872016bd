//! OpenMP directive text and its clause list.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed OpenMP directive `{text}`: {reason}")]
pub struct DirectiveError {
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    To,
    From,
    ToFrom,
    Alloc,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::To => "to",
            MapKind::From => "from",
            MapKind::ToFrom => "tofrom",
            MapKind::Alloc => "alloc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "to" => Some(MapKind::To),
            "from" => Some(MapKind::From),
            "tofrom" => Some(MapKind::ToFrom),
            "alloc" => Some(MapKind::Alloc),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    Collapse(u32),
    NumTeams(String),
    NumThreads(String),
    Map { kind: MapKind, items: Vec<String> },
    Schedule { kind: String, chunk: Option<String> },
    Other { name: String, args: Option<String> },
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Collapse(n) => write!(f, "collapse({n})"),
            Clause::NumTeams(e) => write!(f, "num_teams({e})"),
            Clause::NumThreads(e) => write!(f, "num_threads({e})"),
            Clause::Map { kind, items } => write!(f, "map({}: {})", kind.as_str(), items.join(", ")),
            Clause::Schedule { kind, chunk: None } => write!(f, "schedule({kind})"),
            Clause::Schedule { kind, chunk: Some(c) } => write!(f, "schedule({kind}, {c})"),
            Clause::Other { name, args: None } => f.write_str(name),
            Clause::Other { name, args: Some(a) } => write!(f, "{name}({a})"),
        }
    }
}

const CONSTRUCT_WORDS: &[&str] = &[
    "parallel", "for", "target", "teams", "distribute", "simd", "data", "enter", "exit",
    "update", "loop", "single", "master", "critical", "atomic", "barrier", "sections",
    "section", "task", "taskloop", "declare",
];

/// A parsed `#pragma omp` line. `text` keeps the raw (whitespace-normalized)
/// directive; `constructs` and `clauses` are derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub text: String,
    pub constructs: Vec<String>,
    pub clauses: Vec<Clause>,
}

impl Directive {
    pub fn parse(text: &str) -> Result<Self, DirectiveError> {
        let err = |reason: &str| DirectiveError { text: text.to_string(), reason: reason.to_string() };
        let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
        let body = normalized
            .strip_prefix("#pragma omp")
            .ok_or_else(|| err("does not start with `#pragma omp`"))?;
        if !body.is_empty() && !body.starts_with(' ') {
            return Err(err("missing space after `omp`"));
        }
        let items = split_items(body.trim()).map_err(|r| err(&r))?;
        let mut constructs = Vec::new();
        let mut clauses = Vec::new();
        for (name, args) in items {
            if clauses.is_empty() && args.is_none() && CONSTRUCT_WORDS.contains(&name.as_str()) {
                constructs.push(name);
                continue;
            }
            clauses.push(parse_clause(&name, args).map_err(|r| err(&r))?);
        }
        if constructs.is_empty() {
            return Err(err("no directive name"));
        }
        Ok(Directive { text: normalized, constructs, clauses })
    }

    /// Canonical spelling rebuilt from constructs and clauses.
    pub fn render(&self) -> String {
        let mut out = String::from("#pragma omp");
        for c in &self.constructs {
            out.push(' ');
            out.push_str(c);
        }
        for c in &self.clauses {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out
    }

    pub fn has_construct(&self, word: &str) -> bool {
        self.constructs.iter().any(|c| c == word)
    }

    pub fn is_target(&self) -> bool {
        self.has_construct("target")
    }

    /// True for worksharing-loop directives (`parallel for`,
    /// `target teams distribute parallel for`, ...).
    pub fn is_loop_worksharing(&self) -> bool {
        self.has_construct("for")
    }

    /// No schedule clause means static scheduling.
    pub fn is_static_schedule(&self) -> bool {
        self.clauses.iter().all(|c| match c {
            Clause::Schedule { kind, .. } => kind == "static",
            _ => true,
        })
    }

    pub fn collapse(&self) -> u32 {
        self.clauses
            .iter()
            .find_map(|c| match c {
                Clause::Collapse(n) => Some(*n),
                _ => None,
            })
            .unwrap_or(1)
    }

    pub fn has_map(&self) -> bool {
        self.clauses.iter().any(|c| matches!(c, Clause::Map { .. }))
    }

    pub fn num_threads(&self) -> Option<&str> {
        self.clauses.iter().find_map(|c| match c {
            Clause::NumThreads(e) => Some(e.as_str()),
            _ => None,
        })
    }

    pub fn num_teams(&self) -> Option<&str> {
        self.clauses.iter().find_map(|c| match c {
            Clause::NumTeams(e) => Some(e.as_str()),
            _ => None,
        })
    }
}

fn split_items(body: &str) -> Result<Vec<(String, Option<String>)>, String> {
    let chars: Vec<char> = body.chars().collect();
    let mut items = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == ' ' || chars[i] == ',' {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        if start == i {
            return Err(format!("unexpected character `{}`", chars[i]));
        }
        let name: String = chars[start..i].iter().collect();
        let mut j = i;
        while j < chars.len() && chars[j] == ' ' {
            j += 1;
        }
        if j < chars.len() && chars[j] == '(' {
            let mut depth = 0usize;
            let open = j;
            loop {
                if j >= chars.len() {
                    return Err(format!("unbalanced parentheses in `{name}`"));
                }
                match chars[j] {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                j += 1;
            }
            let args: String = chars[open + 1..j].iter().collect();
            items.push((name, Some(args.trim().to_string())));
            i = j + 1;
        } else {
            items.push((name, None));
        }
    }
    Ok(items)
}

fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        if ch == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_clause(name: &str, args: Option<String>) -> Result<Clause, String> {
    let need = |args: Option<String>| args.filter(|a| !a.is_empty()).ok_or(format!("`{name}` needs an argument"));
    match name {
        "collapse" => {
            let a = need(args)?;
            let n: u32 = a.parse().map_err(|_| format!("collapse depth `{a}` is not a positive integer"))?;
            if n == 0 {
                return Err("collapse depth must be positive".into());
            }
            Ok(Clause::Collapse(n))
        }
        "num_teams" => Ok(Clause::NumTeams(need(args)?)),
        "num_threads" => Ok(Clause::NumThreads(need(args)?)),
        "map" => {
            let a = need(args)?;
            let (kind, rest) = match a.split_once(':') {
                Some((k, rest)) => {
                    let kind = MapKind::parse(k.trim()).ok_or(format!("unknown map kind `{}`", k.trim()))?;
                    (kind, rest)
                }
                None => (MapKind::ToFrom, a.as_str()),
            };
            let items = split_top_level(rest);
            if items.is_empty() {
                return Err("map clause lists no variables".into());
            }
            Ok(Clause::Map { kind, items })
        }
        "schedule" => {
            let a = need(args)?;
            let mut parts = split_top_level(&a).into_iter();
            let kind = parts.next().unwrap_or_default();
            let chunk = parts.next();
            Ok(Clause::Schedule { kind, chunk })
        }
        _ => Ok(Clause::Other { name: name.to_string(), args }),
    }
}
