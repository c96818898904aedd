//! Round schedules for square-grid and all-to-all hardware.
//!
//! On the square grid every site keeps the cell it has in the patch grid.
//! Horizontal bonds (colours 1, 2) and vertical bonds (colour 3) are grid
//! neighbours. Diagonal bonds (4) and bonds skipping a column (5) become
//! neighbours after swapping each apex with the full site to its right:
//!
//! ```text
//! interact 1, interact 2, interact 3, swap, interact 4, interact 5, swap
//! ```
//!
//! Qubit ids in a schedule are physical: qubit `q` starts out holding site
//! `q`. Swaps move sites between qubits; every round ends with the initial
//! placement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{cell_role, colour_edges, CellRole, ColouringScheme, GridCell, KagomePatch};
use crate::statevec::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Interact,
    Swap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub n_qubits: usize,
    pub layers: Vec<Layer>,
}

impl RoundSchedule {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_swaps(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.kind == LayerKind::Swap)
            .map(|l| l.pairs.len())
            .sum()
    }

    pub fn n_interactions(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.kind == LayerKind::Interact)
            .map(|l| l.pairs.len())
            .sum()
    }

    /// Whether no qubit appears twice within a layer.
    pub fn layers_disjoint(&self) -> bool {
        self.layers.iter().all(|l| {
            let mut seen = BTreeSet::new();
            l.pairs.iter().all(|&(a, b)| a != b && seen.insert(a) && seen.insert(b))
        })
    }

    /// Site held by each qubit after all layers.
    pub fn net_permutation(&self) -> Vec<usize> {
        let mut holds: Vec<usize> = (0..self.n_qubits).collect();
        for l in self.layers.iter().filter(|l| l.kind == LayerKind::Swap) {
            for &(a, b) in &l.pairs {
                holds.swap(a, b);
            }
        }
        holds
    }

    /// Site pairs interacting in each interact layer, normalised `a < b`.
    pub fn realised_edges(&self) -> Vec<Vec<(usize, usize)>> {
        let mut holds: Vec<usize> = (0..self.n_qubits).collect();
        let mut out = Vec::new();
        for l in &self.layers {
            match l.kind {
                LayerKind::Swap => l.pairs.iter().for_each(|&(a, b)| holds.swap(a, b)),
                LayerKind::Interact => out.push(
                    l.pairs
                        .iter()
                        .map(|&(a, b)| (holds[a].min(holds[b]), holds[a].max(holds[b])))
                        .collect(),
                ),
            }
        }
        out
    }

    /// Whether every edge of `patch` interacts exactly once and nothing else does.
    pub fn covers_exactly(&self, patch: &KagomePatch) -> bool {
        let mut realised: Vec<_> = self.realised_edges().into_iter().flatten().collect();
        realised.sort_unstable();
        realised == patch.edges
    }

    /// Apply one round: every interaction as `exp(-i angle G)`, swaps as SWAP.
    pub fn simulate(&self, state: &mut StateVector, angle: f64) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(state.dim(), 1 << self.n_qubits));
        }
        for l in &self.layers {
            for &(a, b) in &l.pairs {
                match l.kind {
                    LayerKind::Interact => state.apply_heisenberg(a, b, angle)?,
                    LayerKind::Swap => state.apply_swap(a, b)?,
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }
}

/// Placement of a patch on the square grid together with its round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareEmbedding {
    pub patch: String,
    /// Grid cell of each site, indexed by site id.
    pub placement: Vec<GridCell>,
    /// `(rows, cols)` of the bounding box.
    pub bounds: (usize, usize),
    pub swap_pairs: Vec<(usize, usize)>,
    pub rounds: RoundSchedule,
}

impl SquareEmbedding {
    pub fn grid_adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = self.placement[a];
        let (rb, cb) = self.placement[b];
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }

    /// Whether every two-qubit gate acts on grid neighbours.
    pub fn nearest_neighbour(&self) -> bool {
        self.rounds
            .layers
            .iter()
            .flat_map(|l| &l.pairs)
            .all(|&(a, b)| self.grid_adjacent(a, b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serialises")
    }
}

fn embed_error(patch: &KagomePatch, reason: impl Into<String>) -> Error {
    Error::Embed {
        patch: patch.name.clone(),
        reason: reason.into(),
    }
}

fn push_layer(layers: &mut Vec<Layer>, kind: LayerKind, mut pairs: Vec<(usize, usize)>) {
    if !pairs.is_empty() {
        pairs.sort_unstable();
        layers.push(Layer { kind, pairs });
    }
}

/// Place a grid-backed patch on the square lattice and build its round.
pub fn embed_square(patch: &KagomePatch) -> Result<SquareEmbedding> {
    let cells = patch
        .grid()
        .ok_or_else(|| embed_error(patch, "patch has no square-grid placement"))?
        .to_vec();
    let at: BTreeMap<GridCell, usize> = cells.iter().enumerate().map(|(q, &c)| (c, q)).collect();
    if at.len() != cells.len() {
        return Err(embed_error(patch, "two sites share a grid cell"));
    }
    let colouring = colour_edges(patch, ColouringScheme::Square5)?;
    let slot = |r: usize, c: usize| at.get(&(r, c)).copied();

    let mut direct: [Vec<(usize, usize)>; 3] = Default::default();
    let mut swaps = BTreeSet::new();
    let mut diag = Vec::new();
    let mut skip = Vec::new();
    for (&(a, b), &colour) in patch.edges.iter().zip(&colouring.colours) {
        let (ra, ca) = cells[a];
        let (rb, cb) = cells[b];
        match colour {
            1..=3 => {
                if ra.abs_diff(rb) + ca.abs_diff(cb) != 1 {
                    return Err(embed_error(
                        patch,
                        format!("edge ({a}, {b}) of colour {colour} is not a grid bond"),
                    ));
                }
                direct[colour as usize - 1].push((a, b));
            }
            4 => {
                // apex one row below and one column left of its partner
                let (apex, full) = if ra > rb { (a, b) } else { (b, a) };
                let (r, c) = cells[apex];
                if cells[full] != (r.wrapping_sub(1), c + 1) {
                    return Err(embed_error(patch, format!("edge ({a}, {b}) is not a diagonal bond")));
                }
                let right =
                    slot(r, c + 1).ok_or_else(|| embed_error(patch, format!("no site to the right of apex {apex}")))?;
                swaps.insert((apex, right));
                diag.push((right, full));
            }
            5 => {
                let (left, far) = if ca < cb { (a, b) } else { (b, a) };
                let (r, c) = cells[left];
                if cells[far] != (r, c + 2) {
                    return Err(embed_error(patch, format!("edge ({a}, {b}) does not skip one column")));
                }
                let mid =
                    slot(r, c + 1).ok_or_else(|| embed_error(patch, format!("no site between {left} and {far}")))?;
                swaps.insert((mid, far));
                skip.push((left, mid));
            }
            _ => return Err(embed_error(patch, format!("unexpected colour {colour}"))),
        }
    }
    for &(apex, full) in &swaps {
        let (r, c) = cells[apex];
        if cell_role(r as i64, c as i64) != CellRole::Apex {
            return Err(embed_error(
                patch,
                format!("swap ({apex}, {full}) does not move an apex"),
            ));
        }
    }
    let swap_pairs: Vec<_> = swaps.into_iter().collect();

    let mut layers = Vec::new();
    let [h1, h2, v] = direct;
    push_layer(&mut layers, LayerKind::Interact, h1);
    push_layer(&mut layers, LayerKind::Interact, h2);
    push_layer(&mut layers, LayerKind::Interact, v);
    push_layer(&mut layers, LayerKind::Swap, swap_pairs.clone());
    push_layer(&mut layers, LayerKind::Interact, diag);
    push_layer(&mut layers, LayerKind::Interact, skip);
    push_layer(&mut layers, LayerKind::Swap, swap_pairs.clone());

    let rounds = RoundSchedule {
        n_qubits: patch.n_sites(),
        layers,
    };
    if !rounds.layers_disjoint() {
        return Err(embed_error(patch, "layers are not qubit-disjoint"));
    }
    let bounds = (
        cells.iter().map(|c| c.0).max().map_or(0, |r| r + 1),
        cells.iter().map(|c| c.1).max().map_or(0, |c| c + 1),
    );
    Ok(SquareEmbedding {
        patch: patch.name.clone(),
        placement: cells,
        bounds,
        swap_pairs,
        rounds,
    })
}

/// One interact layer per colour of a four-colouring.
pub fn schedule_all_to_all(patch: &KagomePatch) -> Result<RoundSchedule> {
    let colouring = colour_edges(patch, ColouringScheme::AllToAll4)?;
    let mut layers = Vec::new();
    for colour in 1..=colouring.max_colour() {
        push_layer(&mut layers, LayerKind::Interact, colouring.class(patch, colour));
    }
    Ok(RoundSchedule {
        n_qubits: patch.n_sites(),
        layers,
    })
}

/// Apply the five bond groups of the square colouring in order 1..5 with a
/// common angle, without any routing.
pub fn apply_direct_round(patch: &KagomePatch, state: &mut StateVector, angle: f64) -> Result<()> {
    let colouring = colour_edges(patch, ColouringScheme::Square5)?;
    for colour in 1..=5 {
        for (a, b) in colouring.class(patch, colour) {
            state.apply_heisenberg(a, b, angle)?;
        }
    }
    Ok(())
}

/// How two-qubit gates are counted in depth reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateAccounting {
    /// Every interaction and every SWAP is one gate.
    #[default]
    Logical,
    /// An interaction is two native gates, a SWAP three.
    Native,
}

impl GateAccounting {
    fn weight(self, kind: LayerKind) -> usize {
        match (self, kind) {
            (GateAccounting::Logical, _) => 1,
            (GateAccounting::Native, LayerKind::Interact) => 2,
            (GateAccounting::Native, LayerKind::Swap) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthStats {
    pub rounds: usize,
    pub accounting: GateAccounting,
    pub layers_per_round: usize,
    pub two_qubit_gates_per_round: usize,
    pub total_depth: usize,
    pub total_two_qubit_gates: usize,
}

impl fmt::Display for DepthStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28}{:>10}",
            "accounting",
            format!("{:?}", self.accounting).to_lowercase()
        )?;
        writeln!(f, "{:<28}{:>10}", "rounds", self.rounds)?;
        writeln!(f, "{:<28}{:>10}", "layers per round", self.layers_per_round)?;
        writeln!(
            f,
            "{:<28}{:>10}",
            "2-qubit gates per round", self.two_qubit_gates_per_round
        )?;
        writeln!(f, "{:<28}{:>10}", "total depth", self.total_depth)?;
        write!(f, "{:<28}{:>10}", "total 2-qubit gates", self.total_two_qubit_gates)
    }
}

pub fn depth_report(schedule: &RoundSchedule, rounds: usize, accounting: GateAccounting) -> DepthStats {
    let layers_per_round = schedule.layers.iter().map(|l| accounting.weight(l.kind)).sum();
    let two_qubit_gates_per_round = schedule
        .layers
        .iter()
        .map(|l| accounting.weight(l.kind) * l.pairs.len())
        .sum();
    DepthStats {
        rounds,
        accounting,
        layers_per_round,
        two_qubit_gates_per_round,
        total_depth: rounds * layers_per_round,
        total_two_qubit_gates: rounds * two_qubit_gates_per_round,
    }
}
