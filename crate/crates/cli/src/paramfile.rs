//! TOML parameter files: model specification, node labels and every
//! parameter block at full precision.

use std::fs;
use std::path::Path;

use meg_core::{model::component_name, model::parse_component, Block, Layout, ModelSpec, Params};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ingest::Labels;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFile {
    pub spec: ModelSpec,
    pub labels: Labels,
    pub params: Params<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Repr {
    model: ModelRepr,
    graph: GraphRepr,
    params: BlocksRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    main: String,
    interaction: String,
    dim: usize,
    tau: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sources: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    destinations: Option<Vec<String>>,
}

type Rows = Option<Vec<Vec<f64>>>;

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlocksRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu_dst: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_dst: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma_dst: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu_dst: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_dst: Rows,
}

impl BlocksRepr {
    fn vector(&mut self, block: Block) -> Option<&mut Option<Vec<f64>>> {
        Some(match block {
            Block::Alpha => &mut self.alpha,
            Block::Mu => &mut self.mu,
            Block::Phi => &mut self.phi,
            Block::Beta => &mut self.beta,
            Block::MuDst => &mut self.mu_dst,
            Block::PhiDst => &mut self.phi_dst,
            _ => return None,
        })
    }

    fn matrix(&mut self, block: Block) -> Option<&mut Rows> {
        Some(match block {
            Block::Gamma => &mut self.gamma,
            Block::Nu => &mut self.nu,
            Block::Theta => &mut self.theta,
            Block::GammaDst => &mut self.gamma_dst,
            Block::NuDst => &mut self.nu_dst,
            Block::ThetaDst => &mut self.theta_dst,
            _ => return None,
        })
    }
}

impl ParamFile {
    pub fn to_toml(&self) -> String {
        let layout = Layout::new(self.labels.kind(), self.spec);
        let mut blocks = BlocksRepr::default();
        for b in Block::ALL {
            let (rows, cols) = layout.shape(b);
            if rows == 0 {
                continue;
            }
            let values = self.params.block(b);
            if let Some(slot) = blocks.vector(b) {
                *slot = Some(values.to_vec());
            } else if let Some(slot) = blocks.matrix(b) {
                *slot = Some(values.chunks(cols).map(<[f64]>::to_vec).collect());
            }
        }
        let graph = match &self.labels {
            Labels::Directed(nodes) => GraphRepr {
                kind: "directed".into(),
                nodes: Some(nodes.clone()),
                sources: None,
                destinations: None,
            },
            Labels::Bipartite { sources, destinations } => GraphRepr {
                kind: "bipartite".into(),
                nodes: None,
                sources: Some(sources.clone()),
                destinations: Some(destinations.clone()),
            },
        };
        let repr = Repr {
            model: ModelRepr {
                main: component_name(self.spec.main),
                interaction: component_name(self.spec.interaction),
                dim: self.spec.dim,
                tau: self.spec.tau.to_string(),
            },
            graph,
            params: blocks,
        };
        toml::to_string(&repr).expect("parameter files contain only strings, integers and finite floats")
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let format_err = |message: String| CliError::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut repr: Repr = toml::from_str(text).map_err(|e| format_err(e.to_string()))?;
        let m = &repr.model;
        let spec = ModelSpec::new(
            parse_component(&m.main)?,
            parse_component(&m.interaction)?,
            m.dim,
            m.tau.parse()?,
        )?;
        let g = &repr.graph;
        let labels =
            match (g.kind.as_str(), &g.nodes, &g.sources, &g.destinations) {
                ("directed", Some(nodes), None, None) => Labels::Directed(nodes.clone()),
                ("bipartite", None, Some(s), Some(d)) => Labels::Bipartite {
                    sources: s.clone(),
                    destinations: d.clone(),
                },
                _ => return Err(format_err(
                    "graph needs kind = \"directed\" with nodes, or kind = \"bipartite\" with sources and destinations"
                        .into(),
                )),
            };
        let layout = Layout::new(labels.kind(), spec);
        let mut flat = Vec::with_capacity(layout.len());
        for b in Block::ALL {
            let (rows, cols) = layout.shape(b);
            let values: Option<Vec<f64>> = if b.is_matrix() {
                match repr.params.matrix(b).and_then(Option::take) {
                    Some(matrix) => {
                        if matrix.iter().any(|r| r.len() != cols) {
                            return Err(format_err(format!("every row of {} needs {cols} entries", b.name())));
                        }
                        Some(matrix.concat())
                    }
                    None => None,
                }
            } else {
                repr.params.vector(b).and_then(Option::take)
            };
            match (rows, values) {
                (0, None) => {}
                (0, Some(_)) => return Err(format_err(format!("block {} is not part of this model", b.name()))),
                (_, None) => return Err(format_err(format!("missing block {}", b.name()))),
                (_, Some(v)) if v.len() != rows * cols => {
                    return Err(format_err(format!(
                        "block {} has {} entries, expected {}",
                        b.name(),
                        v.len(),
                        rows * cols
                    )))
                }
                (_, Some(v)) => flat.extend(v),
            }
        }
        let params = Params::from_flat(&layout, &flat)?;
        params.validate(&layout)?;
        Ok(Self { spec, labels, params })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| CliError::io(path, e))
    }
}
