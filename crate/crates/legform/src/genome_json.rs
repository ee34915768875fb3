//! JSON persistence for both genome families.
//!
//! CPPN: `{"nodes":[{"id","role","activation"}],"connections":[{"innovation","source","target","weight","enabled"}]}`
//! Bezier: `{"splines":[{"points":[[x,y,z],...],"thickness":k}]}`

use legform_core::{ActivationKind, BezierGenome, ConnGene, ControlPoint, CppnGenome, GridDims, NodeGene, NodeRole, Spline};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenomeJsonError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid genome: {0}")]
    Validation(String),
}

impl From<serde_json::Error> for GenomeJsonError {
    fn from(e: serde_json::Error) -> Self {
        GenomeJsonError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    role: String,
    activation: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnDoc {
    innovation: u32,
    source: u32,
    target: u32,
    weight: f64,
    enabled: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CppnDoc {
    nodes: Vec<NodeDoc>,
    connections: Vec<ConnDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineDoc {
    points: Vec<[f64; 3]>,
    thickness: u8,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BezierDoc {
    splines: Vec<SplineDoc>,
}

/// A genome of either family, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum Genome {
    Cppn(CppnGenome),
    Bezier(BezierGenome),
}

impl Genome {
    pub fn to_json(&self) -> String {
        match self {
            Genome::Cppn(g) => cppn_to_json(g),
            Genome::Bezier(g) => bezier_to_json(g),
        }
    }
}

pub fn cppn_to_json(genome: &CppnGenome) -> String {
    let doc = CppnDoc {
        nodes: genome
            .nodes()
            .iter()
            .map(|n| NodeDoc { id: n.id, role: n.role.name().to_string(), activation: n.activation.map(|a| a.name().to_string()) })
            .collect(),
        connections: genome
            .connections()
            .iter()
            .map(|c| ConnDoc { innovation: c.innovation, source: c.source, target: c.target, weight: c.weight, enabled: c.enabled })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("genome document serialises")
}

pub fn cppn_from_json(text: &str) -> Result<CppnGenome, GenomeJsonError> {
    let doc: CppnDoc = serde_json::from_str(text)?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            let role = NodeRole::from_name(&n.role)
                .ok_or_else(|| GenomeJsonError::Validation(format!("node {}: unknown role {:?}", n.id, n.role)))?;
            let activation = match n.activation {
                None => None,
                Some(a) => Some(
                    ActivationKind::from_name(&a)
                        .ok_or_else(|| GenomeJsonError::Validation(format!("node {}: unknown activation {a:?}", n.id)))?,
                ),
            };
            Ok(NodeGene { id: n.id, role, activation })
        })
        .collect::<Result<Vec<_>, GenomeJsonError>>()?;
    let connections = doc
        .connections
        .into_iter()
        .map(|c| ConnGene { innovation: c.innovation, source: c.source, target: c.target, weight: c.weight, enabled: c.enabled })
        .collect();
    CppnGenome::new(nodes, connections).map_err(|e| GenomeJsonError::Validation(e.to_string()))
}

pub fn bezier_to_json(genome: &BezierGenome) -> String {
    let doc = BezierDoc {
        splines: genome
            .splines
            .iter()
            .map(|s| SplineDoc { points: s.points.iter().map(|p| [p.x, p.y, p.z]).collect(), thickness: s.thickness })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("genome document serialises")
}

pub fn bezier_from_json(text: &str, dims: GridDims) -> Result<BezierGenome, GenomeJsonError> {
    let doc: BezierDoc = serde_json::from_str(text)?;
    let genome = BezierGenome {
        splines: doc
            .splines
            .into_iter()
            .map(|s| Spline {
                points: s.points.into_iter().map(|[x, y, z]| ControlPoint::new(x, y, z)).collect(),
                thickness: s.thickness,
            })
            .collect(),
    };
    genome.validate(dims).map_err(|e| GenomeJsonError::Validation(e.to_string()))?;
    Ok(genome)
}

/// Reads either family, telling them apart by their top-level key.
pub fn genome_from_json(text: &str, dims: GridDims) -> Result<Genome, GenomeJsonError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("splines").is_some() {
        Ok(Genome::Bezier(bezier_from_json(text, dims)?))
    } else if value.get("nodes").is_some() {
        Ok(Genome::Cppn(cppn_from_json(text)?))
    } else {
        Err(GenomeJsonError::Validation("expected a \"nodes\" or \"splines\" document".into()))
    }
}
