//! Hamiltonian-variational circuits.
//!
//! One layer applies the five colour groups of the target Hamiltonian in the
//! order 4, 5, 1, 2, 3 and then the dimer Hamiltonian `H_0`; layer 1 acts
//! first. The four schemes share this gate sequence (except `PerEdgeColorII`,
//! which drops the `H_0` gates) and differ only in how gate angles are tied
//! to parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{colour_edges, dimer_covering, ColouringScheme, KagomePatch};
use crate::statevec::StateVector;

/// Colour groups in application order within a layer.
pub const COLOUR_ORDER: [u8; 5] = [4, 5, 1, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    PerHamiltonian,
    PerEdgeColor,
    PerEdgeColorII,
    PerEdge,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::PerHamiltonian,
        Scheme::PerEdgeColor,
        Scheme::PerEdgeColorII,
        Scheme::PerEdge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::PerHamiltonian => "per_hamiltonian",
            Scheme::PerEdgeColor => "per_edge_color",
            Scheme::PerEdgeColorII => "per_edge_color_ii",
            Scheme::PerEdge => "per_edge",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "perhamiltonian" => Ok(Scheme::PerHamiltonian),
            "peredgecolor" | "peredgecolour" => Ok(Scheme::PerEdgeColor),
            "peredgecolorii" | "peredgecolourii" => Ok(Scheme::PerEdgeColorII),
            "peredge" => Ok(Scheme::PerEdge),
            _ => Err(Error::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

/// How `PerEdge` parametrises the dimer factor of each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimerTying {
    /// One angle for the whole `H_0` evolution of a layer.
    #[default]
    Shared,
    /// One angle per dimer.
    PerDimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// Lattice bond of the given colour.
    Bond(u8),
    Dimer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub pair: (usize, usize),
    pub kind: GateKind,
    /// Zero-based layer.
    pub layer: usize,
    pub param: usize,
}

/// Whether a parameter drives the initial or the target Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamRole {
    Initial,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    pub patch: String,
    pub scheme: Scheme,
    pub p: usize,
    pub n_qubits: usize,
    pub dimer_tying: DimerTying,
    pub gates: Vec<Gate>,
    /// Role and layer of each parameter.
    pub params: Vec<(ParamRole, usize)>,
}

#[derive(Serialize)]
struct SpecJson<'a> {
    scheme: Scheme,
    p: usize,
    patch: &'a str,
    n_params: usize,
}

pub fn make_spec(patch: &KagomePatch, scheme: Scheme, p: usize) -> Result<AnsatzSpec> {
    make_spec_with(patch, scheme, p, DimerTying::Shared)
}

pub fn make_spec_with(patch: &KagomePatch, scheme: Scheme, p: usize, dimer_tying: DimerTying) -> Result<AnsatzSpec> {
    let colouring = colour_edges(patch, ColouringScheme::Square5)?;
    let dimers = dimer_covering(patch)?.dimers;
    let n_edges = patch.n_edges();
    let per_dimer = scheme == Scheme::PerEdge && dimer_tying == DimerTying::PerDimer;

    // local parameter layout of one layer
    let local: Vec<ParamRole> = match scheme {
        Scheme::PerHamiltonian => vec![ParamRole::Initial, ParamRole::Target],
        Scheme::PerEdgeColor => {
            let mut v = vec![ParamRole::Initial];
            v.extend([ParamRole::Target; 5]);
            v
        }
        Scheme::PerEdgeColorII => vec![ParamRole::Target; 5],
        Scheme::PerEdge if per_dimer => {
            let mut v = vec![ParamRole::Target; n_edges];
            v.extend(vec![ParamRole::Initial; dimers.len()]);
            v
        }
        Scheme::PerEdge => {
            let mut v = vec![ParamRole::Initial];
            v.extend(vec![ParamRole::Target; n_edges]);
            v
        }
    };
    let block = local.len();

    let bond_param = |edge: usize, colour: u8| -> usize {
        match scheme {
            Scheme::PerHamiltonian => 1,
            Scheme::PerEdgeColor => colour as usize,
            Scheme::PerEdgeColorII => colour as usize - 1,
            Scheme::PerEdge if per_dimer => edge,
            Scheme::PerEdge => 1 + edge,
        }
    };
    let dimer_param = |d: usize| -> usize {
        if per_dimer {
            n_edges + d
        } else {
            0
        }
    };

    let mut gates = Vec::new();
    for layer in 0..p {
        let offset = layer * block;
        for colour in COLOUR_ORDER {
            for (e, (&pair, &c)) in patch.edges.iter().zip(&colouring.colours).enumerate() {
                if c == colour {
                    gates.push(Gate {
                        pair,
                        kind: GateKind::Bond(c),
                        layer,
                        param: offset + bond_param(e, c),
                    });
                }
            }
        }
        if scheme != Scheme::PerEdgeColorII {
            for (d, &pair) in dimers.iter().enumerate() {
                gates.push(Gate {
                    pair,
                    kind: GateKind::Dimer,
                    layer,
                    param: offset + dimer_param(d),
                });
            }
        }
    }
    let params = (0..p)
        .flat_map(|layer| local.iter().map(move |&r| (r, layer)))
        .collect();
    Ok(AnsatzSpec {
        patch: patch.name.clone(),
        scheme,
        p,
        n_qubits: patch.n_sites(),
        dimer_tying,
        gates,
        params,
    })
}

impl AnsatzSpec {
    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpecJson {
            scheme: self.scheme,
            p: self.p,
            patch: &self.patch,
            n_params: self.n_params(),
        })
        .expect("spec serialises")
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::ParameterLength {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Angle of every gate under the tying map.
    pub fn gate_angles(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        Ok(self.gates.iter().map(|g| theta[g.param]).collect())
    }

    /// Apply the circuit to `state` in place.
    pub fn apply(&self, state: &mut StateVector, theta: &[f64]) -> Result<()> {
        self.check_params(theta)?;
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(state.dim(), 1 << self.n_qubits));
        }
        for g in &self.gates {
            state.apply_heisenberg(g.pair.0, g.pair.1, theta[g.param])?;
        }
        Ok(())
    }
}

/// Symmetry sector of the initial product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Singlets on every dimer, total `S^z = 0`.
    Sz0,
    /// First dimer in `|up up>`, singlets elsewhere: `S^z = 2` in Pauli
    /// units, or `3` for odd site counts where the leftover spin is also up.
    SzPlus,
    /// Odd site count: singlets plus one down spin, `S^z = -1`.
    OddDefault,
}

impl Sector {
    /// Default sector for a patch of `n` sites.
    pub fn default_for(n: usize) -> Self {
        if n % 2 == 0 {
            Sector::Sz0
        } else {
            Sector::OddDefault
        }
    }

    /// Total `S^z` in Pauli units on `n` sites.
    pub fn sz(&self, n: usize) -> i64 {
        match self {
            Sector::Sz0 => 0,
            Sector::SzPlus if n % 2 == 1 => 3,
            Sector::SzPlus => 2,
            Sector::OddDefault => -1,
        }
    }

    /// Whether the state also lies in the zero sectors of `S^x` and `S^y`.
    pub fn is_singlet_sector(&self) -> bool {
        *self == Sector::Sz0
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().replace('-', "_").as_str() {
            "sz0" => Ok(Sector::Sz0),
            "sz_plus" | "szplus" => Ok(Sector::SzPlus),
            "odd_default" | "odddefault" => Ok(Sector::OddDefault),
            _ => Err(Error::Config(format!("unknown sector `{s}`"))),
        }
    }
}

pub fn initial_state(patch: &KagomePatch, sector: Sector) -> Result<StateVector> {
    let n = patch.n_sites();
    let even = n % 2 == 0;
    let ok = match sector {
        Sector::Sz0 => even,
        Sector::SzPlus => n >= 2,
        Sector::OddDefault => !even,
    };
    if !ok {
        return Err(Error::SectorParity {
            sector: format!("{sector:?}"),
            n,
        });
    }
    let covering = dimer_covering(patch)?;
    let dimers = covering.dimers;
    let mut state = StateVector::basis(n, 0)?;
    if let (Sector::SzPlus, Some(free)) = (sector, covering.uncovered) {
        state.apply_x(free)?;
    }
    for (d, &(a, b)) in dimers.iter().enumerate() {
        if d == 0 && sector == Sector::SzPlus {
            state.apply_x(a)?;
            state.apply_x(b)?;
        } else {
            state.apply_singlet_prep(a, b)?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdiag::{build_hamiltonian, TermSubset};
    use crate::lattice::build_patch;
    use crate::statevec::Axis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_counts() {
        let p24 = build_patch("2x4").unwrap();
        assert_eq!(make_spec(&p24, Scheme::PerEdgeColor, 3).unwrap().n_params(), 18);
        assert_eq!(make_spec(&p24, Scheme::PerHamiltonian, 5).unwrap().n_params(), 10);
        assert_eq!(make_spec(&p24, Scheme::PerEdgeColorII, 4).unwrap().n_params(), 20);
        let e = p24.n_edges();
        assert_eq!(make_spec(&p24, Scheme::PerEdge, 2).unwrap().n_params(), 2 * (e + 1));
        let spec = make_spec_with(&p24, Scheme::PerEdge, 2, DimerTying::PerDimer).unwrap();
        assert_eq!(spec.n_params(), 2 * (e + 4));
        assert_eq!(make_spec(&p24, Scheme::PerEdge, 0).unwrap().n_params(), 0);
    }

    #[test]
    fn gate_sequence_is_shared_across_schemes() {
        let patch = build_patch("2x6").unwrap();
        let seq =
            |s| -> Vec<(usize, usize)> { make_spec(&patch, s, 3).unwrap().gates.iter().map(|g| g.pair).collect() };
        let reference = seq(Scheme::PerEdge);
        assert_eq!(seq(Scheme::PerHamiltonian), reference);
        assert_eq!(seq(Scheme::PerEdgeColor), reference);
        let layer = patch.n_edges() + patch.n_sites() / 2;
        assert_eq!(reference.len(), 3 * layer);
    }

    #[test]
    fn colour_order_within_layer() {
        let patch = build_patch("2x6").unwrap();
        let spec = make_spec(&patch, Scheme::PerEdgeColor, 2).unwrap();
        let kinds: Vec<GateKind> = spec.gates.iter().filter(|g| g.layer == 0).map(|g| g.kind).collect();
        let mut last = 0;
        let rank = |k: GateKind| match k {
            GateKind::Bond(c) => COLOUR_ORDER.iter().position(|&x| x == c).unwrap(),
            GateKind::Dimer => 5,
        };
        for k in kinds {
            assert!(rank(k) >= last);
            last = rank(k);
        }
        assert_eq!(spec.gates.first().unwrap().kind, GateKind::Bond(4));
        assert_eq!(spec.gates[spec.gates.len() / 2 - 1].kind, GateKind::Dimer);
    }

    #[test]
    fn zero_angles_are_identity() {
        let patch = build_patch("2x4").unwrap();
        let init = initial_state(&patch, Sector::Sz0).unwrap();
        for scheme in Scheme::ALL {
            let spec = make_spec(&patch, scheme, 3).unwrap();
            let mut s = init.clone();
            spec.apply(&mut s, &vec![0.0; spec.n_params()]).unwrap();
            assert!(s.overlap(&init).unwrap().re > 1.0 - 1e-14);
        }
    }

    #[test]
    fn length_mismatch() {
        let patch = build_patch("2x4").unwrap();
        let spec = make_spec(&patch, Scheme::PerHamiltonian, 2).unwrap();
        let mut s = initial_state(&patch, Sector::Sz0).unwrap();
        assert!(matches!(
            spec.apply(&mut s, &[0.1; 3]),
            Err(Error::ParameterLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn tying_expansion_agrees() {
        let patch = build_patch("2x4").unwrap();
        let colour = make_spec(&patch, Scheme::PerEdgeColor, 2).unwrap();
        let edge = make_spec(&patch, Scheme::PerEdge, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta: Vec<f64> = (0..colour.n_params()).map(|_| rng.gen::<f64>()).collect();
        let angles = colour.gate_angles(&theta).unwrap();
        let mut expanded = vec![0.0; edge.n_params()];
        for (g, a) in edge.gates.iter().zip(&angles) {
            expanded[g.param] = *a;
        }
        assert_eq!(edge.gate_angles(&expanded).unwrap(), angles);
        let init = initial_state(&patch, Sector::Sz0).unwrap();
        let (mut a, mut b) = (init.clone(), init);
        colour.apply(&mut a, &theta).unwrap();
        edge.apply(&mut b, &expanded).unwrap();
        assert!((a.overlap(&b).unwrap().re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn per_hamiltonian_embeds_in_per_edge_color() {
        let patch = build_patch("2x6").unwrap();
        let ham = make_spec(&patch, Scheme::PerHamiltonian, 2).unwrap();
        let col = make_spec(&patch, Scheme::PerEdgeColor, 2).unwrap();
        let theta = [0.3, 0.7, -0.2, 0.45];
        let mut lifted = Vec::new();
        for layer in theta.chunks(2) {
            lifted.push(layer[0]);
            lifted.extend([layer[1]; 5]);
        }
        let init = initial_state(&patch, Sector::Sz0).unwrap();
        let (mut a, mut b) = (init.clone(), init);
        ham.apply(&mut a, &theta).unwrap();
        col.apply(&mut b, &lifted).unwrap();
        assert!(a.approx_eq_up_to_phase(&b, 1e-13));
    }

    #[test]
    fn initial_states() {
        let p24 = build_patch("2x4").unwrap();
        let s = initial_state(&p24, Sector::Sz0).unwrap();
        let h0 = build_hamiltonian(&p24, &TermSubset::Dimers).unwrap();
        assert!((h0.expectation(&s).unwrap() + 12.0).abs() < 1e-12);
        for axis in Axis::ALL {
            assert!(s.sector_check(axis, 0.0, 1e-12));
        }
        let plus = initial_state(&p24, Sector::SzPlus).unwrap();
        assert!(plus.sector_check(Axis::Z, 2.0, 1e-12));
        let tri = build_patch("tri1").unwrap();
        let odd = initial_state(&tri, Sector::OddDefault).unwrap();
        assert!(odd.sector_check(Axis::Z, -1.0, 1e-12));
        let odd_plus = initial_state(&tri, Sector::SzPlus).unwrap();
        assert!(odd_plus.sector_check(Axis::Z, 3.0, 1e-12));
        assert_eq!(Sector::SzPlus.sz(15), 3);
        assert!(matches!(
            initial_state(&tri, Sector::Sz0),
            Err(Error::SectorParity { .. })
        ));
        assert!(matches!(
            initial_state(&p24, Sector::OddDefault),
            Err(Error::SectorParity { .. })
        ));
    }

    #[test]
    fn random_circuits_keep_sector() {
        let patch = build_patch("2x4").unwrap();
        let init = initial_state(&patch, Sector::Sz0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for scheme in Scheme::ALL {
            let spec = make_spec(&patch, scheme, 2).unwrap();
            let theta: Vec<f64> = (0..spec.n_params()).map(|_| rng.gen::<f64>() * 3.0).collect();
            let mut s = init.clone();
            spec.apply(&mut s, &theta).unwrap();
            for axis in Axis::ALL {
                assert!(s.sector_check(axis, 0.0, 1e-10), "{scheme} {axis}");
            }
        }
    }

    #[test]
    fn gate_is_periodic_up_to_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
        let psi = StateVector::from_real(&amps).unwrap();
        let (mut a, mut b) = (psi.clone(), psi);
        a.apply_heisenberg(0, 1, 0.4).unwrap();
        b.apply_heisenberg(0, 1, 0.4 + std::f64::consts::FRAC_PI_2).unwrap();
        assert!(a.approx_eq_up_to_phase(&b, 1e-14));
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("PerEdgeColorII".parse::<Scheme>().unwrap(), Scheme::PerEdgeColorII);
        assert!("per_vertex".parse::<Scheme>().is_err());
        let json = make_spec(&build_patch("2x4").unwrap(), Scheme::PerEdge, 1)
            .unwrap()
            .to_json();
        assert_eq!(json, r#"{"scheme":"per_edge","p":1,"patch":"2x4","n_params":11}"#);
    }
}
