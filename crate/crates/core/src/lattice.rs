//! Finite kagome patches, their edge colourings and dimer coverings.
//!
//! Rectangular patches live on a square grid: grid row `r` holds one straight
//! kagome line together with the apex sites of the triangles hanging below it,
//! arranged in repeating `full, apex, full` blocks that shift by one column per
//! row. Every horizontal grid bond is a kagome bond; the remaining kagome bonds
//! are vertical, diagonal, or skip one column inside a row. This fixes both
//! the geometry and the five-way split of the Hamiltonian used by the ansatz.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest patch accepted by [`build_patch`] for generic `RxC` strips.
pub const MAX_PATCH_SITES: usize = 30;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A lattice site with its position in units of the nearest-neighbour spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

/// Square-grid cell of a site, `(row, col)`.
pub type GridCell = (usize, usize);

/// Role of a grid cell inside its `full, apex, full` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    LeftFull,
    Apex,
    RightFull,
}

/// Role of the cell at `(row, col)` in the global grid pattern.
pub fn cell_role(row: i64, col: i64) -> CellRole {
    match (col - row + 2).rem_euclid(3) {
        0 => CellRole::LeftFull,
        1 => CellRole::Apex,
        _ => CellRole::RightFull,
    }
}

/// Kagome position of the grid cell at `(row, col)`.
pub fn cell_position(row: i64, col: i64) -> (f64, f64) {
    let t = col - row + 2;
    let block = t.div_euclid(3);
    let (dx, dy) = match t.rem_euclid(3) {
        0 => (0.0, 0.0),
        1 => (0.5, -SQRT3 / 2.0),
        _ => (1.0, 0.0),
    };
    ((2 * block + row) as f64 + dx, row as f64 * SQRT3 + dy)
}

/// A finite patch of the kagome lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct KagomePatch {
    pub name: String,
    pub sites: Vec<Site>,
    /// Sorted, each pair with `a < b`.
    pub edges: Vec<(usize, usize)>,
    grid: Option<Vec<GridCell>>,
    marked_path: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PatchJson {
    name: String,
    sites: Vec<Site>,
    edges: Vec<[usize; 2]>,
}

impl KagomePatch {
    /// Build and validate a patch from explicit sites and edges.
    pub fn new(name: impl Into<String>, positions: &[(f64, f64)], edges: &[(usize, usize)]) -> Result<Self> {
        let sites = positions
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| Site { id, x, y })
            .collect();
        let patch = Self {
            name: name.into(),
            sites,
            edges: normalise_edges(edges),
            grid: None,
            marked_path: None,
        };
        patch.validate()?;
        Ok(patch)
    }

    fn with_grid(name: String, cells: Vec<GridCell>, edges: &[(usize, usize)]) -> Result<Self> {
        let positions: Vec<_> = cells.iter().map(|&(r, c)| cell_position(r as i64, c as i64)).collect();
        let mut patch = Self::new(name, &positions, edges)?;
        let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let path_row = (rows - 1) / 2;
        let path: Vec<usize> = cells
            .iter()
            .enumerate()
            .filter(|(_, &(r, c))| r == path_row && cell_role(r as i64, c as i64) != CellRole::Apex)
            .map(|(id, _)| id)
            .collect();
        patch.grid = Some(cells);
        patch.marked_path = (path.len() >= 2).then_some(path);
        Ok(patch)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Square-grid placement, present for rectangular patches only.
    pub fn grid(&self) -> Option<&[GridCell]> {
        self.grid.as_deref()
    }

    /// Sites along one straight lattice line, used for correlation profiles.
    pub fn marked_path(&self) -> Option<&[usize]> {
        self.marked_path.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_sites()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == site {
                    Some(b)
                } else if b == site {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// All triangles `(a, b, c)` with `a < b < c`.
    pub fn triangles(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            for c in (b + 1)..self.n_sites() {
                if self.has_edge(a, c) && self.has_edge(b, c) {
                    out.push((a, b, c));
                }
            }
        }
        out
    }

    /// Triangles whose corners all have full coordination and whose three
    /// neighbouring hexagons lie inside the patch.
    pub fn enclosed_triangles(&self) -> usize {
        let deg = self.degrees();
        self.triangles()
            .into_iter()
            .filter(|&(a, b, c)| [a, b, c].iter().all(|&s| deg[s] == 4))
            .filter(|&(a, b, c)| [(a, b), (b, c), (a, c)].iter().all(|&(u, v)| self.closes_hexagon(u, v)))
            .count()
    }

    // Whether the bond (u, v) lies on a six-cycle whose vertices are at unit
    // distance from a common centre.
    fn closes_hexagon(&self, u: usize, v: usize) -> bool {
        let (pu, pv) = (&self.sites[u], &self.sites[v]);
        let (mx, my) = ((pu.x + pv.x) / 2.0, (pu.y + pv.y) / 2.0);
        let (dx, dy) = (pv.x - pu.x, pv.y - pu.y);
        // the hexagon centre sits at distance sqrt(3)/2 from the bond midpoint
        [1.0, -1.0].iter().any(|&sign| {
            let cx = mx - sign * dy * SQRT3 / 2.0;
            let cy = my + sign * dx * SQRT3 / 2.0;
            let ring = self
                .sites
                .iter()
                .filter(|s| ((s.x - cx).powi(2) + (s.y - cy).powi(2) - 1.0).abs() < 1e-9)
                .count();
            ring == 6
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n == 0 {
            return Err(Error::InvalidPatch("patch has no sites".into()));
        }
        for w in self.edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidPatch(format!("duplicate edge {:?}", w[0])));
            }
        }
        for &(a, b) in &self.edges {
            if a == b || b >= n {
                return Err(Error::InvalidPatch(format!("bad edge ({a}, {b})")));
            }
        }
        let deg = self.degrees();
        if let Some(s) = deg.iter().position(|&d| d > 4) {
            return Err(Error::InvalidPatch(format!("site {s} has degree {}", deg[s])));
        }
        if !self.is_connected() {
            return Err(Error::InvalidPatch("patch is not connected".into()));
        }
        let tris = self.triangles();
        for &(a, b) in &self.edges {
            let in_triangle = tris
                .iter()
                .any(|&(x, y, z)| [x, y, z].contains(&a) && [x, y, z].contains(&b));
            if !in_triangle && deg[a] == 4 && deg[b] == 4 {
                return Err(Error::InvalidPatch(format!(
                    "interior edge ({a}, {b}) is not part of a triangle"
                )));
            }
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let n = self.n_sites();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for t in self.neighbours(s) {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    pub fn to_json(&self) -> String {
        let view = PatchJson {
            name: self.name.clone(),
            sites: self.sites.clone(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string_pretty(&view).expect("patch serialises")
    }

    /// Parse a patch from its JSON form. Grid placement is restored when the
    /// name refers to a known rectangular patch with identical geometry.
    pub fn from_json(text: &str) -> Result<Self> {
        let view: PatchJson = serde_json::from_str(text).map_err(|e| Error::InvalidPatch(e.to_string()))?;
        let positions: Vec<_> = view.sites.iter().map(|s| (s.x, s.y)).collect();
        let edges: Vec<_> = view.edges.iter().map(|e| (e[0], e[1])).collect();
        let patch = Self::new(view.name.clone(), &positions, &edges)?;
        if let Ok(known) = build_patch(&view.name) {
            if known.edges == patch.edges && known.sites == patch.sites {
                return Ok(known);
            }
        }
        Ok(patch)
    }
}

impl fmt::Display for KagomePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} sites, {} edges)", self.name, self.n_sites(), self.n_edges())
    }
}

fn normalise_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    out.sort_unstable();
    out
}

/// Names accepted by [`build_patch`] besides generic `RxC` strips.
pub const NAMED_PATCHES: &[&str] = &[
    "2x4", "2x6", "2x8", "3x6", "2x10", "3x8", "tri1", "tri2", "tri3", "edge", "triangle",
];

/// Construct a named patch, or a generic `RxC` strip.
pub fn build_patch(name: &str) -> Result<KagomePatch> {
    let literal = match name {
        "2x4" => Some((2, 4, EDGES_2X4)),
        "2x6" => Some((2, 6, EDGES_2X6)),
        "2x8" => Some((2, 8, EDGES_2X8)),
        "3x6" => Some((3, 6, EDGES_3X6)),
        "2x10" => Some((2, 10, EDGES_2X10)),
        "3x8" => Some((3, 8, EDGES_3X8)),
        _ => None,
    };
    if let Some((rows, cols, edges)) = literal {
        return KagomePatch::with_grid(name.to_string(), rect_cells(rows, cols), edges);
    }
    let offgrid = match name {
        "tri1" => Some((CELLS_TRI1, EDGES_TRI1)),
        "tri2" => Some((CELLS_TRI2, EDGES_TRI2)),
        "tri3" => Some((CELLS_TRI3, EDGES_TRI3)),
        _ => None,
    };
    if let Some((cells, edges)) = offgrid {
        let positions: Vec<_> = cells.iter().map(|&(r, c)| cell_position(r as i64, c as i64)).collect();
        return KagomePatch::new(name, &positions, edges);
    }
    match name {
        "edge" => KagomePatch::new(name, &[(0.0, 0.0), (1.0, 0.0)], &[(0, 1)]),
        "triangle" => KagomePatch::new(
            name,
            &[(0.0, 0.0), (1.0, 0.0), (0.5, SQRT3 / 2.0)],
            &[(0, 1), (0, 2), (1, 2)],
        ),
        _ => {
            let (rows, cols) = parse_strip(name)?;
            strip(rows, cols)
        }
    }
}

fn parse_strip(name: &str) -> Result<(usize, usize)> {
    let (r, c) = name
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::UnknownPatch(name.to_string()))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::UnknownPatch(name.to_string()))
    };
    Ok((parse(r)?, parse(c)?))
}

fn rect_cells(rows: usize, cols: usize) -> Vec<GridCell> {
    (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect()
}

/// Generate the `rows x cols` rectangular patch of the square-grid embedding.
pub fn strip(rows: usize, cols: usize) -> Result<KagomePatch> {
    if rows < 1 || cols < 1 {
        return Err(Error::Spec(format!("{rows}x{cols}: rows and cols must be >= 1")));
    }
    if rows * cols > MAX_PATCH_SITES {
        return Err(Error::Spec(format!(
            "{rows}x{cols} has more than {MAX_PATCH_SITES} sites"
        )));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            match cell_role(r as i64, c as i64) {
                CellRole::LeftFull if c + 2 < cols => edges.push((id(r, c), id(r, c + 2))),
                CellRole::Apex if r > 0 => {
                    edges.push((id(r - 1, c), id(r, c)));
                    if c + 1 < cols {
                        edges.push((id(r - 1, c + 1), id(r, c)));
                    }
                }
                _ => {}
            }
        }
    }
    KagomePatch::with_grid(format!("{rows}x{cols}"), rect_cells(rows, cols), &edges)
}

/// Edge colouring schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ColouringScheme {
    /// Five groups matching the square-grid round: horizontal bonds on even
    /// and odd columns (1, 2), vertical bonds (3), diagonals (4) and bonds
    /// skipping one column (5).
    Square5,
    /// Proper colouring with at most four colours.
    AllToAll4,
}

/// Colour label per edge, parallel to `patch.edges`. Labels start at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColouring {
    pub scheme: ColouringScheme,
    pub colours: Vec<u8>,
}

impl EdgeColouring {
    pub fn max_colour(&self) -> u8 {
        self.colours.iter().copied().max().unwrap_or(0)
    }

    /// Edges carrying `colour`, in patch edge order.
    pub fn class(&self, patch: &KagomePatch, colour: u8) -> Vec<(usize, usize)> {
        patch
            .edges
            .iter()
            .zip(&self.colours)
            .filter(|(_, &c)| c == colour)
            .map(|(&e, _)| e)
            .collect()
    }

    pub fn is_proper(&self, patch: &KagomePatch) -> bool {
        let mut seen = BTreeSet::new();
        patch
            .edges
            .iter()
            .zip(&self.colours)
            .all(|(&(a, b), &c)| seen.insert((a, c)) && seen.insert((b, c)))
    }
}

/// Colour the edges of `patch` under `scheme`.
pub fn colour_edges(patch: &KagomePatch, scheme: ColouringScheme) -> Result<EdgeColouring> {
    let colours = match scheme {
        ColouringScheme::Square5 => match patch.grid() {
            Some(cells) => patch
                .edges
                .iter()
                .map(|&(a, b)| grid_colour(cells[a], cells[b]))
                .collect(),
            None => offgrid_square5(patch)?,
        },
        ColouringScheme::AllToAll4 => {
            let fixed = vec![None; patch.n_edges()];
            backtrack_colouring(patch, &fixed, 1, 4)
                .ok_or_else(|| Error::InvalidPatch(format!("{} has no proper 4-edge-colouring", patch.name)))?
        }
    };
    Ok(EdgeColouring { scheme, colours })
}

fn grid_colour(a: GridCell, b: GridCell) -> u8 {
    let (ra, ca) = (a.0 as i64, a.1 as i64);
    let (rb, cb) = (b.0 as i64, b.1 as i64);
    match (ra == rb, (ca - cb).abs()) {
        (true, 1) if ca.min(cb) % 2 == 0 => 1,
        (true, 1) => 2,
        (true, _) => 5,
        (false, 0) => 3,
        (false, _) => 4,
    }
}

// Off-grid patches: colour 1 is a maximum near-perfect matching that leaves
// the lowest possible site uncovered; the other edges take colours 2..=5.
fn offgrid_square5(patch: &KagomePatch) -> Result<Vec<u8>> {
    let (dimers, _) = near_perfect_matching(patch)
        .ok_or_else(|| Error::Covering(format!("{} admits no (near-)perfect matching", patch.name)))?;
    let fixed: Vec<Option<u8>> = patch.edges.iter().map(|e| dimers.contains(e).then_some(1)).collect();
    backtrack_colouring(patch, &fixed, 2, 5)
        .ok_or_else(|| Error::InvalidPatch(format!("{} cannot be 5-edge-coloured", patch.name)))
}

fn backtrack_colouring(patch: &KagomePatch, fixed: &[Option<u8>], lo: u8, hi: u8) -> Option<Vec<u8>> {
    let n = patch.n_sites();
    // used[site] bitmask of colours
    let mut used = vec![0u32; n];
    let mut colours: Vec<u8> = vec![0; patch.n_edges()];
    for (i, (&(a, b), f)) in patch.edges.iter().zip(fixed).enumerate() {
        if let Some(c) = *f {
            if used[a] & (1 << c) != 0 || used[b] & (1 << c) != 0 {
                return None;
            }
            used[a] |= 1 << c;
            used[b] |= 1 << c;
            colours[i] = c;
        }
    }
    let free: Vec<usize> = (0..patch.n_edges()).filter(|&i| fixed[i].is_none()).collect();
    fn go(
        k: usize,
        free: &[usize],
        edges: &[(usize, usize)],
        used: &mut [u32],
        colours: &mut [u8],
        lo: u8,
        hi: u8,
    ) -> bool {
        let Some(&i) = free.get(k) else {
            return true;
        };
        let (a, b) = edges[i];
        for c in lo..=hi {
            let bit = 1u32 << c;
            if (used[a] | used[b]) & bit == 0 {
                used[a] |= bit;
                used[b] |= bit;
                colours[i] = c;
                if go(k + 1, free, edges, used, colours, lo, hi) {
                    return true;
                }
                used[a] &= !bit;
                used[b] &= !bit;
            }
        }
        false
    }
    go(0, &free, &patch.edges, &mut used, &mut colours, lo, hi).then_some(colours)
}

/// Perfect matching (even `N`) or matching of size `(N-1)/2` leaving the
/// lowest-id coverable site out (odd `N`). Returns the dimers in edge order.
fn near_perfect_matching(patch: &KagomePatch) -> Option<(Vec<(usize, usize)>, Option<usize>)> {
    let n = patch.n_sites();
    let search = |skip: Option<usize>| {
        let mut matched = vec![false; n];
        if let Some(s) = skip {
            matched[s] = true;
        }
        let mut chosen = Vec::new();
        perfect_matching(patch, &mut matched, &mut chosen).then_some(chosen)
    };
    if n % 2 == 0 {
        search(None).map(|mut m| {
            m.sort_unstable();
            (m, None)
        })
    } else {
        (0..n).find_map(|s| {
            search(Some(s)).map(|mut m| {
                m.sort_unstable();
                (m, Some(s))
            })
        })
    }
}

fn perfect_matching(patch: &KagomePatch, matched: &mut [bool], chosen: &mut Vec<(usize, usize)>) -> bool {
    let Some(s) = matched.iter().position(|&m| !m) else {
        return true;
    };
    let mut partners = patch.neighbours(s);
    partners.sort_unstable();
    for t in partners {
        if !matched[t] {
            matched[s] = true;
            matched[t] = true;
            chosen.push((s.min(t), s.max(t)));
            if perfect_matching(patch, matched, chosen) {
                return true;
            }
            chosen.pop();
            matched[s] = false;
            matched[t] = false;
        }
    }
    false
}

/// Dimers carrying the initial Hamiltonian, drawn from the colour-1 edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimerCovering {
    pub dimers: Vec<(usize, usize)>,
    pub uncovered: Option<usize>,
}

pub fn dimer_covering(patch: &KagomePatch) -> Result<DimerCovering> {
    let colouring = colour_edges(patch, ColouringScheme::Square5)?;
    let dimers = colouring.class(patch, 1);
    let n = patch.n_sites();
    let mut covered = vec![false; n];
    for &(a, b) in &dimers {
        if covered[a] || covered[b] {
            return Err(Error::Covering(format!("colour-1 edges of {} overlap", patch.name)));
        }
        covered[a] = true;
        covered[b] = true;
    }
    if dimers.len() != n / 2 {
        return Err(Error::Covering(format!(
            "{}: colour-1 edges give {} dimers, need {}",
            patch.name,
            dimers.len(),
            n / 2
        )));
    }
    let uncovered = covered.iter().position(|&c| !c);
    Ok(DimerCovering { dimers, uncovered })
}

// Rectangular patches, row-major site ids on the square grid.
const EDGES_2X4: &[(usize, usize)] = &[
    (0, 1),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (3, 7),
    (4, 5),
    (5, 6),
    (6, 7),
];
const EDGES_2X6: &[(usize, usize)] = &[
    (0, 1),
    (0, 6),
    (1, 2),
    (1, 3),
    (1, 6),
    (2, 3),
    (3, 4),
    (3, 9),
    (4, 5),
    (4, 9),
    (6, 7),
    (7, 8),
    (8, 9),
    (8, 10),
    (9, 10),
    (10, 11),
];
const EDGES_2X8: &[(usize, usize)] = &[
    (0, 1),
    (0, 8),
    (1, 2),
    (1, 3),
    (1, 8),
    (2, 3),
    (3, 4),
    (3, 11),
    (4, 5),
    (4, 6),
    (4, 11),
    (5, 6),
    (6, 7),
    (6, 14),
    (7, 14),
    (8, 9),
    (9, 10),
    (10, 11),
    (10, 12),
    (11, 12),
    (12, 13),
    (13, 14),
    (13, 15),
    (14, 15),
];
const EDGES_3X6: &[(usize, usize)] = &[
    (0, 1),
    (0, 6),
    (1, 2),
    (1, 3),
    (1, 6),
    (2, 3),
    (3, 4),
    (3, 9),
    (4, 5),
    (4, 9),
    (6, 7),
    (7, 8),
    (7, 13),
    (8, 9),
    (8, 10),
    (8, 13),
    (9, 10),
    (10, 11),
    (10, 16),
    (11, 16),
    (12, 13),
    (12, 14),
    (13, 14),
    (14, 15),
    (15, 16),
    (15, 17),
    (16, 17),
];
const EDGES_2X10: &[(usize, usize)] = &[
    (0, 1),
    (0, 10),
    (1, 2),
    (1, 3),
    (1, 10),
    (2, 3),
    (3, 4),
    (3, 13),
    (4, 5),
    (4, 6),
    (4, 13),
    (5, 6),
    (6, 7),
    (6, 16),
    (7, 8),
    (7, 9),
    (7, 16),
    (8, 9),
    (9, 19),
    (10, 11),
    (11, 12),
    (12, 13),
    (12, 14),
    (13, 14),
    (14, 15),
    (15, 16),
    (15, 17),
    (16, 17),
    (17, 18),
    (18, 19),
];
const EDGES_3X8: &[(usize, usize)] = &[
    (0, 1),
    (0, 8),
    (1, 2),
    (1, 3),
    (1, 8),
    (2, 3),
    (3, 4),
    (3, 11),
    (4, 5),
    (4, 6),
    (4, 11),
    (5, 6),
    (6, 7),
    (6, 14),
    (7, 14),
    (8, 9),
    (9, 10),
    (9, 17),
    (10, 11),
    (10, 12),
    (10, 17),
    (11, 12),
    (12, 13),
    (12, 20),
    (13, 14),
    (13, 15),
    (13, 20),
    (14, 15),
    (15, 23),
    (16, 17),
    (16, 18),
    (17, 18),
    (18, 19),
    (19, 20),
    (19, 21),
    (20, 21),
    (21, 22),
    (22, 23),
];
// Off-grid triangle patches: global grid cells (for positions) and edges.
const CELLS_TRI1: &[(i32, i32)] = &[
    (0, 1),
    (0, 3),
    (0, 4),
    (0, 6),
    (1, 0),
    (1, 1),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (2, 1),
    (2, 2),
    (2, 3),
    (2, 4),
];
const EDGES_TRI1: &[(usize, usize)] = &[
    (0, 1),
    (0, 4),
    (1, 2),
    (1, 7),
    (2, 3),
    (2, 7),
    (3, 10),
    (4, 5),
    (5, 6),
    (5, 11),
    (6, 7),
    (6, 8),
    (6, 11),
    (7, 8),
    (8, 9),
    (8, 14),
    (9, 10),
    (9, 14),
    (11, 12),
    (12, 13),
    (13, 14),
];
const CELLS_TRI2: &[(i32, i32)] = &[
    (0, 4),
    (0, 6),
    (0, 7),
    (0, 9),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (1, 7),
    (1, 8),
    (1, 9),
    (2, 1),
    (2, 2),
    (2, 3),
    (2, 4),
    (2, 5),
    (2, 6),
    (2, 7),
];
const EDGES_TRI2: &[(usize, usize)] = &[
    (0, 1),
    (0, 5),
    (1, 2),
    (1, 8),
    (2, 3),
    (2, 8),
    (3, 11),
    (4, 5),
    (4, 6),
    (4, 12),
    (5, 6),
    (6, 7),
    (6, 15),
    (7, 8),
    (7, 9),
    (7, 15),
    (8, 9),
    (9, 10),
    (9, 18),
    (10, 11),
    (10, 18),
    (12, 13),
    (13, 14),
    (14, 15),
    (14, 16),
    (15, 16),
    (16, 17),
    (17, 18),
];
const CELLS_TRI3: &[(i32, i32)] = &[
    (0, 4),
    (0, 6),
    (0, 7),
    (0, 9),
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (1, 6),
    (1, 7),
    (1, 8),
    (1, 9),
    (1, 10),
    (2, 1),
    (2, 2),
    (2, 3),
    (2, 4),
    (2, 5),
    (2, 6),
    (2, 7),
    (2, 8),
    (2, 9),
    (2, 10),
];
const EDGES_TRI3: &[(usize, usize)] = &[
    (0, 1),
    (0, 5),
    (1, 2),
    (1, 8),
    (2, 3),
    (2, 8),
    (3, 11),
    (4, 5),
    (4, 6),
    (4, 13),
    (5, 6),
    (6, 7),
    (6, 16),
    (7, 8),
    (7, 9),
    (7, 16),
    (8, 9),
    (9, 10),
    (9, 19),
    (10, 11),
    (10, 12),
    (10, 19),
    (11, 12),
    (12, 22),
    (13, 14),
    (14, 15),
    (15, 16),
    (15, 17),
    (16, 17),
    (17, 18),
    (18, 19),
    (18, 20),
    (19, 20),
    (20, 21),
    (21, 22),
];
