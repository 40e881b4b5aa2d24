//! Fitness specifications: one string grammar naming every landscape.
//!
//! ```text
//! onemax:<n>
//! jump:<m>:<n>
//! dicut:<path>[:undirected]
//! dicut+matroid:<path>[:undirected]:<constraint>
//! mi:<csv>:<k>[:literal]
//!
//! constraint = uniform:<k> | partition:<blockfile>
//! ```

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::graph_io::{read_edge_list_file, DirectedGraph, GraphError, ParseOptions};
use crate::landscapes::{Jump, JumpParams, OneMax};
use crate::matroid::{ConstrainedFitness, Matroid, MatroidError, PartitionMatroid, UniformMatroid};
use crate::mutual_info::{covariance, temporal_diff, MiError, MiFitness, MiVariant, TimeSeriesPanel, DEFAULT_JITTER};
use crate::set_function::SetFunction;
use crate::submodular::CutFunction;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid fitness spec `{spec}`: {reason}")]
    Syntax { spec: String, reason: String },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: GraphError },
    #[error("{path}: {source}")]
    Matroid { path: PathBuf, source: MatroidError },
    #[error("{path}: {source}")]
    Panel { path: PathBuf, source: MiError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    Uniform { k: usize },
    Partition { path: PathBuf },
}

impl FromStr for ConstraintSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| SpecError::Syntax {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        match s.split_once(':') {
            Some(("uniform", k)) => Ok(Self::Uniform {
                k: k.parse().map_err(|_| bad("expected `uniform:<k>`"))?,
            }),
            Some(("partition", path)) if !path.is_empty() => Ok(Self::Partition { path: path.into() }),
            _ => Err(bad("expected `uniform:<k>` or `partition:<blockfile>`")),
        }
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { k } => write!(f, "uniform:{k}"),
            Self::Partition { path } => write!(f, "partition:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitnessSpec {
    OneMax {
        n: usize,
    },
    Jump {
        m: usize,
        n: usize,
    },
    Dicut {
        path: PathBuf,
        undirected: bool,
    },
    DicutMatroid {
        path: PathBuf,
        undirected: bool,
        constraint: ConstraintSpec,
    },
    Mi {
        path: PathBuf,
        k: usize,
        variant: MiVariant,
    },
}

impl FromStr for FitnessSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| SpecError::Syntax {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |tok: &str, what: &str| {
            tok.parse::<usize>()
                .map_err(|_| bad(&format!("`{tok}` is not a valid {what}")))
        };
        match parts.as_slice() {
            ["onemax", n] => Ok(Self::OneMax { n: int(n, "length")? }),
            ["jump", m, n] => {
                let (m, n) = (int(m, "gap width")?, int(n, "length")?);
                JumpParams::new(m, n).map_err(|e| bad(&e.to_string()))?;
                Ok(Self::Jump { m, n })
            }
            ["dicut", path] if !path.is_empty() => Ok(Self::Dicut {
                path: path.into(),
                undirected: false,
            }),
            ["dicut", path, "undirected"] if !path.is_empty() => Ok(Self::Dicut {
                path: path.into(),
                undirected: true,
            }),
            ["dicut+matroid", path, rest @ ..] if !path.is_empty() && !rest.is_empty() => {
                let (undirected, rest) = match rest {
                    ["undirected", tail @ ..] => (true, tail),
                    _ => (false, rest),
                };
                Ok(Self::DicutMatroid {
                    path: path.into(),
                    undirected,
                    constraint: rest.join(":").parse()?,
                })
            }
            ["mi", path, k] if !path.is_empty() => Ok(Self::Mi {
                path: path.into(),
                k: int(k, "subset size")?,
                variant: MiVariant::LogForm,
            }),
            ["mi", path, k, "literal"] if !path.is_empty() => Ok(Self::Mi {
                path: path.into(),
                k: int(k, "subset size")?,
                variant: MiVariant::PaperLiteral,
            }),
            _ => Err(bad("expected onemax:<n>, jump:<m>:<n>, dicut:<path>[:undirected], \
                 dicut+matroid:<path>[:undirected]:<constraint> or mi:<csv>:<k>[:literal]")),
        }
    }
}

impl fmt::Display for FitnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let und = |u: &bool| if *u { ":undirected" } else { "" };
        match self {
            Self::OneMax { n } => write!(f, "onemax:{n}"),
            Self::Jump { m, n } => write!(f, "jump:{m}:{n}"),
            Self::Dicut { path, undirected } => write!(f, "dicut:{}{}", path.display(), und(undirected)),
            Self::DicutMatroid {
                path,
                undirected,
                constraint,
            } => write!(f, "dicut+matroid:{}{}:{constraint}", path.display(), und(undirected)),
            Self::Mi { path, k, variant } => {
                let lit = if *variant == MiVariant::PaperLiteral {
                    ":literal"
                } else {
                    ""
                };
                write!(f, "mi:{}:{k}{lit}", path.display())
            }
        }
    }
}

/// A loaded landscape ready for the EA.
#[derive(Clone)]
pub struct Instance {
    pub label: String,
    /// What the EA maximizes (penalized when constrained).
    pub fitness: Arc<dyn SetFunction>,
    /// The unconstrained objective.
    pub objective: Arc<dyn SetFunction>,
    pub constraint: Option<Arc<dyn Matroid>>,
    /// Known optimum, when the landscape has one in closed form.
    pub optimum: Option<f64>,
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("label", &self.label)
            .field("n", &self.fitness.ground_size())
            .field("constrained", &self.constraint.is_some())
            .field("optimum", &self.optimum)
            .finish()
    }
}

impl Instance {
    pub fn ground_size(&self) -> usize {
        self.fitness.ground_size()
    }

    /// Whether `set` satisfies the constraint (always true when unconstrained).
    pub fn is_feasible(&self, set: &crate::bitstring::BitString) -> bool {
        self.constraint.as_ref().is_none_or(|m| m.is_independent(set))
    }
}

fn load_graph(path: &PathBuf, undirected: bool) -> Result<DirectedGraph, SpecError> {
    let opts = ParseOptions {
        undirected,
        ..ParseOptions::default()
    };
    read_edge_list_file(path, &opts).map_err(|source| SpecError::Graph {
        path: path.clone(),
        source,
    })
}

fn load_constraint(spec: &ConstraintSpec, graph: &DirectedGraph) -> Result<Arc<dyn Matroid>, SpecError> {
    let n = graph.vertex_count();
    Ok(match spec {
        ConstraintSpec::Uniform { k } => Arc::new(UniformMatroid::new(n, *k)),
        ConstraintSpec::Partition { path } => {
            let file = File::open(path).map_err(|source| SpecError::Io {
                path: path.clone(),
                source,
            })?;
            let m = PartitionMatroid::from_block_file(file, n, |id| graph.vertex_of(id)).map_err(|source| {
                SpecError::Matroid {
                    path: path.clone(),
                    source,
                }
            })?;
            Arc::new(m)
        }
    })
}

fn constrained(label: String, objective: Arc<dyn SetFunction>, m: Arc<dyn Matroid>) -> Instance {
    Instance {
        label,
        fitness: Arc::new(ConstrainedFitness::new(objective.clone(), m.clone())),
        objective,
        constraint: Some(m),
        optimum: None,
    }
}

impl ConstraintSpec {
    fn rebase(&mut self, base: &Path) {
        if let Self::Partition { path } = self {
            *path = base.join(&*path);
        }
    }
}

impl FitnessSpec {
    /// Interprets relative file paths as relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        match self {
            Self::OneMax { .. } | Self::Jump { .. } => {}
            Self::Dicut { path, .. } | Self::Mi { path, .. } => *path = base.join(&*path),
            Self::DicutMatroid { path, constraint, .. } => {
                *path = base.join(&*path);
                constraint.rebase(base);
            }
        }
    }

    pub fn load(&self) -> Result<Instance, SpecError> {
        let label = self.to_string();
        match self {
            Self::OneMax { n } => {
                let f: Arc<dyn SetFunction> = Arc::new(OneMax::new(*n));
                Ok(Instance {
                    label,
                    fitness: f.clone(),
                    objective: f,
                    constraint: None,
                    optimum: Some(*n as f64),
                })
            }
            Self::Jump { m, n } => {
                let params = JumpParams::new(*m, *n).map_err(|e| SpecError::Invalid(e.to_string()))?;
                let f: Arc<dyn SetFunction> = Arc::new(Jump::new(params));
                Ok(Instance {
                    label,
                    fitness: f.clone(),
                    objective: f,
                    constraint: None,
                    optimum: Some((m + n) as f64),
                })
            }
            Self::Dicut { path, undirected } => {
                let f: Arc<dyn SetFunction> = Arc::new(CutFunction::new(Arc::new(load_graph(path, *undirected)?)));
                Ok(Instance {
                    label,
                    fitness: f.clone(),
                    objective: f,
                    constraint: None,
                    optimum: None,
                })
            }
            Self::DicutMatroid {
                path,
                undirected,
                constraint,
            } => {
                let graph = load_graph(path, *undirected)?;
                let m = load_constraint(constraint, &graph)?;
                Ok(constrained(label, Arc::new(CutFunction::new(Arc::new(graph))), m))
            }
            Self::Mi { path, k, variant } => {
                let file = File::open(path).map_err(|source| SpecError::Io {
                    path: path.clone(),
                    source,
                })?;
                let panel_err = |source| SpecError::Panel {
                    path: path.clone(),
                    source,
                };
                let panel = TimeSeriesPanel::from_csv(file).map_err(panel_err)?;
                let sigma = covariance(&temporal_diff(&panel).map_err(panel_err)?).map_err(panel_err)?;
                let f: Arc<dyn SetFunction> =
                    Arc::new(MiFitness::new(sigma, *k, *variant, DEFAULT_JITTER).map_err(panel_err)?);
                Ok(Instance {
                    label,
                    fitness: f.clone(),
                    objective: f,
                    constraint: None,
                    optimum: None,
                })
            }
        }
    }

    /// Loads the spec and adds a further matroid constraint on top.
    pub fn load_with_constraint(&self, constraint: &ConstraintSpec) -> Result<Instance, SpecError> {
        match self {
            Self::Dicut { path, undirected } => Self::DicutMatroid {
                path: path.clone(),
                undirected: *undirected,
                constraint: constraint.clone(),
            }
            .load(),
            Self::OneMax { .. } | Self::Jump { .. } | Self::Mi { .. } => {
                let base = self.load()?;
                let m: Arc<dyn Matroid> = match constraint {
                    ConstraintSpec::Uniform { k } => Arc::new(UniformMatroid::new(base.ground_size(), *k)),
                    ConstraintSpec::Partition { .. } => {
                        return Err(SpecError::Invalid(
                            "partition constraints need a graph instance to resolve member ids".into(),
                        ))
                    }
                };
                Ok(constrained(format!("{}+{constraint}", base.label), base.objective, m))
            }
            Self::DicutMatroid { .. } => Err(SpecError::Invalid("instance is already constrained".into())),
        }
    }
}
