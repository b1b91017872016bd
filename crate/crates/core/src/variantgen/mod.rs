//! Source-to-source generation of the six OpenMP variants of a serial
//! kernel.
//!
//! A kernel marks its outermost parallel loop with a `// @kernel` comment on
//! the line before it. Generation replaces that line with the directive, so
//! the serial source and every variant stay line-aligned.

mod corpus;
mod harness;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{parse_source, Ast, FrontendError, NodeId, NodeKind};

pub use corpus::builtin_kernels;
pub use harness::harness_source;
pub use manifest::{read_manifest, write_variants, Manifest, ManifestEntry, MANIFEST_SCHEMA_VERSION};

pub const KERNEL_MARKER: &str = "// @kernel";

#[derive(Debug, Error)]
pub enum VariantError {
    #[error("kernel `{kernel}` does not parse: {source}")]
    Frontend { kernel: String, source: FrontendError },
    #[error("kernel `{0}` has no `{KERNEL_MARKER}` line")]
    MissingMarker(String),
    #[error("kernel `{0}` has more than one `{KERNEL_MARKER}` line")]
    MultipleMarkers(String),
    #[error("the `{KERNEL_MARKER}` line of `{0}` is not followed by a for loop")]
    MarkerNotOnLoop(String),
    #[error("kernel `{0}` already contains OpenMP directives")]
    AlreadyAnnotated(String),
    #[error("{kind} needs a collapsible loop nest, but kernel `{kernel}` is not collapsible")]
    NotCollapsible { kernel: String, kind: VariantKind },
    #[error("invalid kernel spec `{kernel}`: {reason}")]
    InvalidSpec { kernel: String, reason: String },
    #[error("missing value for size parameter `{0}`")]
    MissingSize(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    To,
    From,
    ToFrom,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::To => "to",
            Direction::From => "from",
            Direction::ToFrom => "tofrom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataArray {
    pub name: String,
    pub element_type: String,
    /// C expression for the number of elements, e.g. `n*n`.
    pub extent: String,
    pub direction: Direction,
}

/// A serial kernel plus what the generator needs to know about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel_name: String,
    pub source: String,
    pub loop_nest_depth: u32,
    pub collapsible: bool,
    /// Function parameters bound to the problem size of each grid point.
    pub size_params: Vec<String>,
    pub data_arrays: Vec<DataArray>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Cpu,
    CpuCollapse,
    Gpu,
    GpuCollapse,
    GpuMem,
    GpuCollapseMem,
}

impl VariantKind {
    pub const ALL: [VariantKind; 6] = [
        VariantKind::Cpu,
        VariantKind::CpuCollapse,
        VariantKind::Gpu,
        VariantKind::GpuCollapse,
        VariantKind::GpuMem,
        VariantKind::GpuCollapseMem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Cpu => "cpu",
            VariantKind::CpuCollapse => "cpu_collapse",
            VariantKind::Gpu => "gpu",
            VariantKind::GpuCollapse => "gpu_collapse",
            VariantKind::GpuMem => "gpu_mem",
            VariantKind::GpuCollapseMem => "gpu_collapse_mem",
        }
    }

    pub fn needs_collapse(self) -> bool {
        matches!(self, VariantKind::CpuCollapse | VariantKind::GpuCollapse | VariantKind::GpuCollapseMem)
    }

    pub fn is_gpu(self) -> bool {
        !matches!(self, VariantKind::Cpu | VariantKind::CpuCollapse)
    }

    pub fn maps_data(self) -> bool {
        matches!(self, VariantKind::GpuMem | VariantKind::GpuCollapseMem)
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown variant kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantParams {
    pub sizes: BTreeMap<String, i64>,
    pub num_teams: u32,
    pub num_threads: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelVariant {
    pub kernel_name: String,
    pub kind: VariantKind,
    pub source: String,
    pub params: VariantParams,
}

impl KernelVariant {
    /// Stable file stem, e.g. `matmul_gpu_collapse_n256_g4_t64`.
    pub fn stem(&self) -> String {
        let sizes: String = self.params.sizes.iter().map(|(k, v)| format!("_{k}{v}")).collect();
        format!(
            "{}_{}{}_g{}_t{}",
            self.kernel_name, self.kind, sizes, self.params.num_teams, self.params.num_threads
        )
    }
}

impl KernelSpec {
    fn invalid(&self, reason: impl Into<String>) -> VariantError {
        VariantError::InvalidSpec { kernel: self.kernel_name.clone(), reason: reason.into() }
    }

    fn marker_line(&self) -> Result<usize, VariantError> {
        let mut hits = self.source.lines().enumerate().filter(|(_, l)| l.trim() == KERNEL_MARKER);
        let (idx, _) = hits.next().ok_or_else(|| VariantError::MissingMarker(self.kernel_name.clone()))?;
        if hits.next().is_some() {
            return Err(VariantError::MultipleMarkers(self.kernel_name.clone()));
        }
        Ok(idx)
    }

    /// The source with the marker line replaced by `line` (indentation kept).
    fn with_marker(&self, line: &str) -> Result<String, VariantError> {
        let idx = self.marker_line()?;
        let mut out = String::with_capacity(self.source.len() + line.len());
        for (i, l) in self.source.lines().enumerate() {
            if i == idx {
                let indent = &l[..l.len() - l.trim_start().len()];
                out.push_str(indent);
                out.push_str(line);
            } else {
                out.push_str(l);
            }
            out.push('\n');
        }
        Ok(out)
    }

    fn parse(&self, src: &str) -> Result<Ast, VariantError> {
        parse_source(src).map_err(|source| VariantError::Frontend { kernel: self.kernel_name.clone(), source })
    }

    /// Parses the kernel with a placeholder directive on the marked loop and
    /// returns the AST and the marked `ForStmt`.
    pub fn kernel_loop(&self) -> Result<(Ast, NodeId), VariantError> {
        let serial = self.parse(&self.source)?;
        if serial.ids_of_kind(NodeKind::OmpDirective).next().is_some() {
            return Err(VariantError::AlreadyAnnotated(self.kernel_name.clone()));
        }
        let ast = self.parse(&self.with_marker("#pragma omp parallel for")?)?;
        let dir = ast
            .ids_of_kind(NodeKind::OmpDirective)
            .next()
            .ok_or_else(|| VariantError::MarkerNotOnLoop(self.kernel_name.clone()))?;
        let target = ast.children(dir)[0];
        if ast.kind(target) != NodeKind::ForStmt {
            return Err(VariantError::MarkerNotOnLoop(self.kernel_name.clone()));
        }
        Ok((ast, target))
    }

    /// Checks the spec against its own source.
    pub fn validate(&self) -> Result<(), VariantError> {
        if self.kernel_name.is_empty() || !self.kernel_name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(self.invalid("kernel_name must be a non-empty identifier"));
        }
        if self.loop_nest_depth < 1 {
            return Err(self.invalid("loop_nest_depth must be at least 1"));
        }
        let (ast, lp) = self.kernel_loop()?;
        if self.collapsible && (self.loop_nest_depth < 2 || !detect_collapsible(&ast, lp)) {
            return Err(self.invalid("marked collapsible, but the two outer loops are not perfectly nested"));
        }
        let func = ast
            .nodes()
            .iter()
            .find(|n| n.kind == NodeKind::FunctionDecl && n.label.as_deref() == Some(self.kernel_name.as_str()))
            .ok_or_else(|| self.invalid("no function with the kernel's name"))?;
        let params: Vec<&str> = func
            .children
            .iter()
            .filter(|&&c| ast.kind(c) == NodeKind::ParmVarDecl)
            .filter_map(|&c| ast.node(c).label.as_deref())
            .collect();
        for p in &params {
            let known = self.size_params.iter().any(|s| s == p) || self.data_arrays.iter().any(|a| a.name == *p);
            if !known {
                return Err(self.invalid(format!("parameter `{p}` is neither a size parameter nor a data array")));
            }
        }
        for name in self.size_params.iter().chain(self.data_arrays.iter().map(|a| &a.name)) {
            if !params.contains(&name.as_str()) {
                return Err(self.invalid(format!("`{name}` is not a parameter of the kernel")));
            }
        }
        Ok(())
    }

    /// Kernel parameters in declaration order.
    pub(crate) fn parameters(&self) -> Result<Vec<String>, VariantError> {
        let ast = self.parse(&self.source)?;
        let func = ast
            .nodes()
            .iter()
            .find(|n| n.kind == NodeKind::FunctionDecl && n.label.as_deref() == Some(self.kernel_name.as_str()))
            .ok_or_else(|| self.invalid("no function with the kernel's name"))?;
        Ok(func
            .children
            .iter()
            .filter(|&&c| ast.kind(c) == NodeKind::ParmVarDecl)
            .filter_map(|&c| ast.node(c).label.clone())
            .collect())
    }

    pub fn from_json(text: &str) -> Result<Self, VariantError> {
        let spec: KernelSpec = serde_json::from_str(text).map_err(|e| VariantError::InvalidSpec {
            kernel: "<json>".into(),
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

fn references_decl(ast: &Ast, root: NodeId, decl: NodeId) -> bool {
    ast.subtree(root).into_iter().any(|n| ast.node(n).decl_ref == Some(decl))
}

/// True iff the loop body is a block holding exactly one `for` loop whose
/// header does not mention the outer induction variable.
pub fn detect_collapsible(ast: &Ast, kernel_loop: NodeId) -> bool {
    if ast.kind(kernel_loop) != NodeKind::ForStmt {
        return false;
    }
    let outer = ast.children(kernel_loop);
    let body = outer[2];
    let inner = match (ast.kind(body), ast.children(body)) {
        (NodeKind::CompoundStmt, &[only]) if ast.kind(only) == NodeKind::ForStmt => only,
        (NodeKind::ForStmt, _) => body,
        _ => return false,
    };
    let outer_vars: Vec<NodeId> = ast.subtree(outer[0]).into_iter().filter(|&n| ast.kind(n).is_decl()).collect();
    let outer_vars = if outer_vars.is_empty() {
        // `i = 0` style initializer: the induction variable is the assigned one.
        let init = ast.node(outer[0]);
        init.children.first().and_then(|&l| ast.node(ast.skip_casts(l)).decl_ref).into_iter().collect()
    } else {
        outer_vars
    };
    let header = ast.children(inner);
    let header = [header[0], header[1], header[3]];
    !outer_vars.iter().any(|&v| header.iter().any(|&h| references_decl(ast, h, v)))
}

/// The directive line for one variant.
pub fn directive_text(spec: &KernelSpec, kind: VariantKind, params: &VariantParams) -> String {
    let collapse = if kind.needs_collapse() { " collapse(2)" } else { "" };
    let mut d = if kind.is_gpu() {
        format!(
            "#pragma omp target teams distribute parallel for{collapse} num_teams({}) num_threads({})",
            params.num_teams, params.num_threads
        )
    } else {
        format!("#pragma omp parallel for{collapse} num_threads({})", params.num_threads)
    };
    if kind.maps_data() {
        for a in &spec.data_arrays {
            d.push_str(&format!(" map({}: {}[0:{}])", a.direction.as_str(), a.name, a.extent));
        }
    }
    d
}

/// Inserts the directive for `kind` before the marked loop.
pub fn generate_variant(
    spec: &KernelSpec,
    kind: VariantKind,
    params: &VariantParams,
) -> Result<KernelVariant, VariantError> {
    if kind.needs_collapse() && !spec.collapsible {
        return Err(VariantError::NotCollapsible { kernel: spec.kernel_name.clone(), kind });
    }
    for s in &spec.size_params {
        if !params.sizes.contains_key(s) {
            return Err(VariantError::MissingSize(s.clone()));
        }
    }
    let source = spec.with_marker(&directive_text(spec, kind, params))?;
    let params = VariantParams { num_teams: if kind.is_gpu() { params.num_teams } else { 1 }, ..params.clone() };
    Ok(KernelVariant { kernel_name: spec.kernel_name.clone(), kind, source, params })
}

/// Every applicable (kind, size, teams, threads) combination, in that
/// nesting order. CPU kinds use a single team.
pub fn enumerate_dataset_points(
    spec: &KernelSpec,
    size_grid: &[i64],
    teams_grid: &[u32],
    threads_grid: &[u32],
) -> Result<Vec<KernelVariant>, VariantError> {
    let mut out = Vec::new();
    for kind in VariantKind::ALL {
        if kind.needs_collapse() && !spec.collapsible {
            continue;
        }
        let teams: &[u32] = if kind.is_gpu() { teams_grid } else { &[1] };
        for &size in size_grid {
            let sizes: BTreeMap<String, i64> = spec.size_params.iter().map(|p| (p.clone(), size)).collect();
            for &num_teams in teams {
                for &num_threads in threads_grid {
                    let params = VariantParams { sizes: sizes.clone(), num_teams, num_threads };
                    out.push(generate_variant(spec, kind, &params)?);
                }
            }
        }
    }
    Ok(out)
}
