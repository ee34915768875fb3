//! Compositional pattern producing networks and their decoding into voxel
//! grids, including the two repairs that make a decoded leg span the grid:
//! adaptive thresholding and largest-component rescaling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::voxel::{GridDims, VoxelGrid};

/// Output threshold used when no repair is involved.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Decrement applied per adaptive-threshold retry.
pub const THRESHOLD_STEP: f64 = 0.05;

pub const INPUT_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CppnError {
    #[error("network contains a cycle")]
    CyclicGenome,
    #[error("invalid genome: {0}")]
    Invalid(&'static str),
    #[error("connection {innovation} references missing node {node}")]
    MissingNode { innovation: u32, node: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ActivationKind {
    Sine,
    Cosine,
    Identity,
    Gaussian,
    Absolute,
    Sigmoid,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Sine,
        ActivationKind::Cosine,
        ActivationKind::Identity,
        ActivationKind::Gaussian,
        ActivationKind::Absolute,
        ActivationKind::Sigmoid,
    ];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sine => libm::sin(x),
            ActivationKind::Cosine => libm::cos(x),
            ActivationKind::Identity => x,
            ActivationKind::Gaussian => libm::exp(-x * x),
            ActivationKind::Absolute => libm::fabs(x),
            ActivationKind::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Sine => "sine",
            ActivationKind::Cosine => "cosine",
            ActivationKind::Identity => "identity",
            ActivationKind::Gaussian => "gaussian",
            ActivationKind::Absolute => "absolute",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Input,
    Hidden,
    Output,
}

impl NodeRole {
    pub fn name(self) -> &'static str {
        match self {
            NodeRole::Input => "input",
            NodeRole::Hidden => "hidden",
            NodeRole::Output => "output",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [NodeRole::Input, NodeRole::Hidden, NodeRole::Output]
            .into_iter()
            .find(|r| r.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub id: u32,
    pub role: NodeRole,
    /// `None` for inputs, which pass their coordinate through unchanged.
    pub activation: Option<ActivationKind>,
}

impl NodeGene {
    pub fn input(id: u32) -> Self {
        Self { id, role: NodeRole::Input, activation: None }
    }

    pub fn hidden(id: u32, activation: ActivationKind) -> Self {
        Self { id, role: NodeRole::Hidden, activation: Some(activation) }
    }

    pub fn output(id: u32, activation: ActivationKind) -> Self {
        Self { id, role: NodeRole::Output, activation: Some(activation) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnGene {
    pub innovation: u32,
    pub source: u32,
    pub target: u32,
    pub weight: f64,
    pub enabled: bool,
}

impl ConnGene {
    pub fn new(innovation: u32, source: u32, target: u32, weight: f64) -> Self {
        Self { innovation, source, target, weight, enabled: true }
    }
}

/// A feed-forward CPPN with three coordinate inputs and one output.
///
/// Input nodes, ordered by id, receive x, y and z. Connections are kept
/// sorted by innovation id. Every connection, enabled or not, respects the
/// acyclic ordering, so toggling `enabled` can never introduce a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CppnGenome {
    pub(crate) nodes: Vec<NodeGene>,
    pub(crate) connections: Vec<ConnGene>,
}

impl CppnGenome {
    /// Builds and validates a genome. Connections are sorted by innovation id.
    pub fn new(nodes: Vec<NodeGene>, mut connections: Vec<ConnGene>) -> Result<Self, CppnError> {
        connections.sort_by_key(|c| c.innovation);
        let genome = Self { nodes, connections };
        genome.validate()?;
        Ok(genome)
    }

    /// Inputs 0, 1, 2 wired to output 3 with connection innovations 0, 1, 2.
    pub fn minimal(output: ActivationKind, weights: [f64; 3]) -> Self {
        let nodes = vec![
            NodeGene::input(0),
            NodeGene::input(1),
            NodeGene::input(2),
            NodeGene::output(3, output),
        ];
        let connections = (0..3).map(|i| ConnGene::new(i, i, 3, weights[i as usize])).collect();
        Self { nodes, connections }
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn connections(&self) -> &[ConnGene] {
        &self.connections
    }

    pub fn node(&self, id: u32) -> Option<&NodeGene> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn output_id(&self) -> u32 {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Output)
            .map(|n| n.id)
            .expect("validated genome has an output node")
    }

    pub fn input_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.nodes.iter().filter(|n| n.role == NodeRole::Input).map(|n| n.id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn has_connection(&self, source: u32, target: u32) -> bool {
        self.connections.iter().any(|c| c.source == source && c.target == target)
    }

    /// True if `to` is reachable from `from` along any connection.
    pub fn reaches(&self, from: u32, to: u32) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.connections.iter().filter(|c| c.source == n).map(|c| c.target));
            }
        }
        false
    }

    pub fn validate(&self) -> Result<(), CppnError> {
        let mut ids = BTreeMap::new();
        for n in &self.nodes {
            if ids.insert(n.id, n.role).is_some() {
                return Err(CppnError::Invalid("duplicate node id"));
            }
            match (n.role, n.activation) {
                (NodeRole::Input, Some(_)) => return Err(CppnError::Invalid("input node with activation")),
                (NodeRole::Hidden | NodeRole::Output, None) => {
                    return Err(CppnError::Invalid("non-input node without activation"))
                }
                _ => {}
            }
        }
        let inputs = self.nodes.iter().filter(|n| n.role == NodeRole::Input).count();
        let outputs = self.nodes.iter().filter(|n| n.role == NodeRole::Output).count();
        if inputs != INPUT_COUNT {
            return Err(CppnError::Invalid("genome needs exactly 3 input nodes"));
        }
        if outputs != 1 {
            return Err(CppnError::Invalid("genome needs exactly 1 output node"));
        }

        let mut pairs = BTreeSet::new();
        let mut last_innovation = None;
        for c in &self.connections {
            if last_innovation.is_some_and(|last| c.innovation <= last) {
                return Err(CppnError::Invalid("connection innovations must be unique and ascending"));
            }
            last_innovation = Some(c.innovation);
            for node in [c.source, c.target] {
                if !ids.contains_key(&node) {
                    return Err(CppnError::MissingNode { innovation: c.innovation, node });
                }
            }
            if c.source == c.target {
                return Err(CppnError::Invalid("self-loop connection"));
            }
            if ids[&c.target] == NodeRole::Input {
                return Err(CppnError::Invalid("connection into an input node"));
            }
            if ids[&c.source] == NodeRole::Output {
                return Err(CppnError::Invalid("connection out of the output node"));
            }
            if !pairs.insert((c.source, c.target)) {
                return Err(CppnError::Invalid("duplicate (source, target) connection"));
            }
            if !c.weight.is_finite() {
                return Err(CppnError::Invalid("non-finite connection weight"));
            }
        }
        if topological_order(&self.nodes, self.connections.iter()).is_none() {
            return Err(CppnError::CyclicGenome);
        }
        Ok(())
    }

    /// Evaluation plan over the enabled connections.
    pub fn compile(&self) -> Result<CompiledCppn, CppnError> {
        CompiledCppn::new(self)
    }

    /// Network output at normalised coordinates, clamped to `[0, 1]`.
    pub fn query(&self, x: f64, y: f64, z: f64) -> Result<f64, CppnError> {
        let net = self.compile()?;
        Ok(net.query(x, y, z, &mut Vec::new()))
    }

    fn compiled(&self) -> CompiledCppn {
        self.compile().expect("validated genome is acyclic")
    }

    /// Network output at every voxel centre, in canonical grid order.
    pub fn sample_field(&self, dims: GridDims) -> Vec<f64> {
        let net = self.compiled();
        let xs: Vec<f64> = (0..dims.nx).map(|i| normalized_coordinate(i, dims.nx)).collect();
        let ys: Vec<f64> = (0..dims.ny).map(|i| normalized_coordinate(i, dims.ny)).collect();
        let zs: Vec<f64> = (0..dims.nz).map(|i| normalized_coordinate(i, dims.nz)).collect();
        let mut scratch = Vec::new();
        let mut field = Vec::with_capacity(dims.cell_count());
        for &y in &ys {
            for &z in &zs {
                for &x in &xs {
                    field.push(net.query(x, y, z, &mut scratch));
                }
            }
        }
        field
    }

    /// Voxel is full iff the output at its centre is `>= threshold`.
    pub fn decode(&self, dims: GridDims, threshold: f64) -> VoxelGrid {
        threshold_field(&self.sample_field(dims), dims, threshold)
    }

    /// Lowers the threshold from 0.5 in steps of 0.05 until the decoded grid
    /// is compliant. Returns the grid and the threshold that produced it.
    pub fn decode_adaptive_threshold(&self, dims: GridDims) -> (VoxelGrid, f64) {
        adaptive_threshold(&self.sample_field(dims), dims)
    }

    /// Decodes at 0.5; a non-compliant result keeps only its largest
    /// component, rescaled to fill the grid. An empty decode first goes
    /// through adaptive thresholding.
    pub fn decode_scaled(&self, dims: GridDims) -> VoxelGrid {
        let field = self.sample_field(dims);
        let grid = threshold_field(&field, dims, DEFAULT_THRESHOLD);
        if grid.is_compliant() {
            return grid;
        }
        let grid = if grid.is_empty() { adaptive_threshold(&field, dims).0 } else { grid };
        let labeling = grid.connected_components();
        let largest = labeling.largest_component().expect("decode is non-empty here");
        labeling
            .isolate(largest)
            .and_then(|g| g.scale_to_fill())
            .expect("isolated component is a single non-empty component")
    }

    pub fn decode_with(&self, dims: GridDims, method: ConstraintMethod) -> VoxelGrid {
        match method {
            ConstraintMethod::Threshold => self.decode_adaptive_threshold(dims).0,
            ConstraintMethod::Scale => self.decode_scaled(dims),
        }
    }
}

/// How a CPPN decode is repaired into a compliant leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ConstraintMethod {
    Threshold,
    Scale,
}

/// Cell-centre coordinate normalised to `[-1, 1]`.
#[inline]
pub fn normalized_coordinate(i: usize, n: usize) -> f64 {
    2.0 * (i as f64 + 0.5) / n as f64 - 1.0
}

fn threshold_field(field: &[f64], dims: GridDims, threshold: f64) -> VoxelGrid {
    let cells = field.iter().map(|&v| v >= threshold).collect();
    VoxelGrid::from_cells(dims, cells).expect("field has one value per cell")
}

fn adaptive_threshold(field: &[f64], dims: GridDims) -> (VoxelGrid, f64) {
    // thresholds are k/20 for k = 10, 9, .., 0, computed without accumulated rounding
    const STEPS_PER_UNIT: f64 = 20.0;
    let steps = libm::round(DEFAULT_THRESHOLD * STEPS_PER_UNIT) as u32;
    for k in 0..=steps {
        let threshold = (steps - k) as f64 / STEPS_PER_UNIT;
        let grid = threshold_field(field, dims, threshold);
        if grid.is_compliant() {
            return (grid, threshold);
        }
    }
    unreachable!("threshold 0 fills the grid, which is always compliant")
}

fn topological_order<'a>(nodes: &[NodeGene], conns: impl Iterator<Item = &'a ConnGene> + Clone) -> Option<Vec<u32>> {
    let mut indegree: BTreeMap<u32, usize> = nodes.iter().map(|n| (n.id, 0)).collect();
    for c in conns.clone() {
        *indegree.get_mut(&c.target)? += 1;
    }
    let mut ready: Vec<u32> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
    ready.reverse();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(n) = ready.pop() {
        order.push(n);
        for c in conns.clone().filter(|c| c.source == n) {
            let d = indegree.get_mut(&c.target)?;
            *d -= 1;
            if *d == 0 {
                ready.push(c.target);
            }
        }
    }
    (order.len() == nodes.len()).then_some(order)
}

#[derive(Debug, Clone)]
struct PlannedNode {
    activation: ActivationKind,
    inputs: Vec<(usize, f64)>,
}

/// A genome flattened into slot order for repeated queries.
#[derive(Debug, Clone)]
pub struct CompiledCppn {
    inputs: [usize; INPUT_COUNT],
    // (slot, node) pairs in topological order
    plan: Vec<(usize, PlannedNode)>,
    output: usize,
    slots: usize,
}

impl CompiledCppn {
    fn new(genome: &CppnGenome) -> Result<Self, CppnError> {
        let enabled = genome.connections.iter().filter(|c| c.enabled);
        let order = topological_order(&genome.nodes, enabled.clone()).ok_or(CppnError::CyclicGenome)?;
        let slot_of: BTreeMap<u32, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let input_ids = genome.input_ids();
        if input_ids.len() != INPUT_COUNT {
            return Err(CppnError::Invalid("genome needs exactly 3 input nodes"));
        }
        let inputs = [slot_of[&input_ids[0]], slot_of[&input_ids[1]], slot_of[&input_ids[2]]];

        let mut plan = Vec::new();
        for &id in &order {
            let node = genome.node(id).expect("ordered ids come from the node list");
            let Some(activation) = node.activation else { continue };
            let inputs = enabled
                .clone()
                .filter(|c| c.target == id)
                .map(|c| (slot_of[&c.source], c.weight))
                .collect();
            plan.push((slot_of[&id], PlannedNode { activation, inputs }));
        }
        Ok(Self { inputs, plan, output: slot_of[&genome.output_id()], slots: order.len() })
    }

    /// Clamped output; non-finite values read as 0.
    pub fn query(&self, x: f64, y: f64, z: f64, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.resize(self.slots, 0.0);
        scratch[self.inputs[0]] = x;
        scratch[self.inputs[1]] = y;
        scratch[self.inputs[2]] = z;
        for (slot, node) in &self.plan {
            let sum: f64 = node.inputs.iter().map(|&(src, w)| scratch[src] * w).sum();
            scratch[*slot] = node.activation.apply(sum);
        }
        let out = scratch[self.output];
        if out.is_nan() {
            0.0
        } else {
            out.clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(output: ActivationKind, weight: f64) -> CppnGenome {
        let nodes = vec![NodeGene::input(0), NodeGene::input(1), NodeGene::input(2), NodeGene::output(3, output)];
        CppnGenome::new(nodes, vec![ConnGene::new(0, 0, 3, weight)]).unwrap()
    }

    /// Output = `value` everywhere: a cosine node with no inputs emits 1.
    fn constant(value: f64) -> CppnGenome {
        let nodes = vec![
            NodeGene::input(0),
            NodeGene::input(1),
            NodeGene::input(2),
            NodeGene::output(3, ActivationKind::Identity),
            NodeGene::hidden(4, ActivationKind::Cosine),
        ];
        CppnGenome::new(nodes, vec![ConnGene::new(0, 4, 3, value)]).unwrap()
    }

    #[test]
    fn activation_formulas() {
        assert_eq!(ActivationKind::Sigmoid.apply(0.0), 0.5);
        assert_eq!(ActivationKind::Gaussian.apply(0.0), 1.0);
        assert!((ActivationKind::Gaussian.apply(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(ActivationKind::Absolute.apply(-2.5), 2.5);
        assert_eq!(ActivationKind::Identity.apply(-2.5), -2.5);
        assert_eq!(ActivationKind::Cosine.apply(0.0), 1.0);
        assert_eq!(ActivationKind::Sine.apply(0.0), 0.0);
        for a in ActivationKind::ALL {
            assert_eq!(ActivationKind::from_name(a.name()), Some(a));
        }
    }

    #[test]
    fn query_examples() {
        assert_eq!(single(ActivationKind::Sigmoid, 0.0).query(0.0, 0.0, 0.0).unwrap(), 0.5);
        let abs = single(ActivationKind::Absolute, -1.0).query(0.3, 0.0, 0.0).unwrap();
        assert!((abs - 0.3).abs() < 1e-15);
        assert_eq!(single(ActivationKind::Identity, 5.0).query(1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(single(ActivationKind::Identity, 5.0).query(-1.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn nodes_without_inputs_emit_activation_of_zero() {
        let nodes = vec![
            NodeGene::input(0),
            NodeGene::input(1),
            NodeGene::input(2),
            NodeGene::output(3, ActivationKind::Sigmoid),
        ];
        let g = CppnGenome::new(nodes, vec![]).unwrap();
        assert_eq!(g.query(0.7, -0.2, 0.9).unwrap(), 0.5);
        let mut disabled = single(ActivationKind::Gaussian, 3.0);
        disabled.connections[0].enabled = false;
        assert_eq!(disabled.query(1.0, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn decode_threshold_comparison_is_inclusive() {
        let d = GridDims::new(4, 6, 3, 5.0).unwrap();
        let g = constant(0.5);
        assert_eq!(g.decode(d, 0.5), VoxelGrid::full(d));
        assert!(g.decode(d, 0.5001).is_empty());
        assert_eq!(g.decode(d, 0.5), g.decode(d, 0.5));
    }

    #[test]
    fn decode_uses_cell_centres() {
        assert_eq!(normalized_coordinate(0, 2), -0.5);
        assert_eq!(normalized_coordinate(1, 2), 0.5);
        // output = sigmoid(8x): x<0 half empty at threshold 0.5
        let d = GridDims::new(4, 2, 2, 5.0).unwrap();
        let g = single(ActivationKind::Sigmoid, 8.0).decode(d, 0.5);
        assert_eq!(g, VoxelGrid::from_fn(d, |x, _, _| x >= 2));
    }

    #[test]
    fn adaptive_threshold_trace() {
        let d = GridDims::default();
        // hand trace: 0.5, 0.45, 0.4, 0.35, 0.3, 0.25 fail; 0.2 <= 0.2 passes
        let (grid, t) = constant(0.2).decode_adaptive_threshold(d);
        assert_eq!(t, 0.2);
        assert_eq!(grid, VoxelGrid::full(d));

        let (_, t) = constant(0.7).decode_adaptive_threshold(d);
        assert_eq!(t, 0.5);

        let (grid, t) = constant(0.0).decode_adaptive_threshold(d);
        assert_eq!(t, 0.0);
        assert!(grid.is_compliant());
    }

    #[test]
    fn decode_scaled_skips_repair_when_compliant() {
        let d = GridDims::default();
        let g = constant(0.9);
        assert_eq!(g.decode_scaled(d), g.decode(d, 0.5));
        // empty at 0.5 falls back to adaptive thresholding
        let low = constant(0.1);
        assert!(low.decode(d, 0.5).is_empty());
        assert_eq!(low.decode_scaled(d), VoxelGrid::full(d));
    }

    #[test]
    fn validation_rejects_bad_structure() {
        let base = || vec![NodeGene::input(0), NodeGene::input(1), NodeGene::input(2), NodeGene::output(3, ActivationKind::Sine)];
        assert!(CppnGenome::new(base(), vec![ConnGene::new(0, 3, 3, 1.0)]).is_err());
        assert!(CppnGenome::new(base(), vec![ConnGene::new(0, 0, 9, 1.0)]).is_err());
        assert!(CppnGenome::new(base(), vec![ConnGene::new(0, 0, 3, 1.0), ConnGene::new(1, 0, 3, 1.0)]).is_err());
        assert!(CppnGenome::new(base(), vec![ConnGene::new(0, 0, 3, 1.0), ConnGene::new(0, 1, 3, 1.0)]).is_err());
        assert!(CppnGenome::new(base(), vec![ConnGene::new(0, 3, 0, 1.0)]).is_err());
        assert!(CppnGenome::new(base()[..3].to_vec(), vec![]).is_err());

        let mut nodes = base();
        nodes.push(NodeGene::hidden(4, ActivationKind::Sine));
        nodes.push(NodeGene::hidden(5, ActivationKind::Sine));
        let mut back = ConnGene::new(2, 5, 4, 1.0);
        back.enabled = false;
        let cyclic = vec![ConnGene::new(0, 4, 5, 1.0), ConnGene::new(1, 5, 3, 1.0), back];
        assert_eq!(CppnGenome::new(nodes, cyclic), Err(CppnError::CyclicGenome));
    }

    #[test]
    fn constructor_sorts_connections() {
        let g = CppnGenome::new(
            vec![NodeGene::input(0), NodeGene::input(1), NodeGene::input(2), NodeGene::output(3, ActivationKind::Sine)],
            vec![ConnGene::new(5, 1, 3, 1.0), ConnGene::new(2, 0, 3, 1.0)],
        )
        .unwrap();
        assert_eq!(g.connections().iter().map(|c| c.innovation).collect::<Vec<_>>(), vec![2, 5]);
    }

    #[test]
    fn field_is_resolution_independent() {
        let g = CppnGenome::minimal(ActivationKind::Sine, [1.3, -0.7, 2.1]);
        let net = g.compile().unwrap();
        let coarse = GridDims::new(2, 4, 2, 5.0).unwrap();
        let fine = GridDims::new(4, 8, 4, 5.0).unwrap();
        // cell 1 at n=2 and cell 3 at n=4 have different centres; the field value
        // only depends on the normalised coordinate actually sampled
        let a = g.sample_field(coarse);
        let b = g.sample_field(fine);
        let mut scratch = Vec::new();
        assert_eq!(a[coarse.index(1, 2, 0)], net.query(0.5, 0.25, -0.5, &mut scratch));
        assert_eq!(b[fine.index(3, 5, 1)], net.query(0.75, 0.375, -0.25, &mut scratch));
    }
}
