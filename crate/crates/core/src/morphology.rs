//! Binary mathematical morphology on bounded grids: erosion, dilation,
//! hit-or-miss, sequential thinning/thickening over a rotation chain of
//! 3x3 structuring elements, skeletonization to a fixpoint, and pruning.
//!
//! Border policy: probes outside the raster read the grid's border value
//! (background for an ordinary grid, foreground for a complemented one),
//! so complemented grids behave as the true plane complement and the
//! thinning/thickening duality holds cell-exactly.

use serde::{Deserialize, Serialize};

use crate::error::{EalmError, Result};
use crate::grid::BinaryGrid;

/// One cell of a 3x3 structuring-element mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Fg,
    Bg,
    DontCare,
}

/// 3x3 probe mask with the origin fixed at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    /// mask[row][col], row 0 printed at the top (positive y offset).
    pub mask: [[Cell; 3]; 3],
}

/// Ring positions in clockwise order starting at the top-left corner.
const RING: [(usize, usize); 8] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (2, 1),
    (2, 0),
    (1, 0),
];

impl StructuringElement {
    pub fn new(mask: [[Cell; 3]; 3]) -> Self {
        StructuringElement { mask }
    }

    /// Parses three lines of three characters from {1, 0, *}.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 3 {
            return Err(EalmError::BadElementText(format!(
                "expected 3 lines, found {}",
                lines.len()
            )));
        }
        let mut mask = [[Cell::DontCare; 3]; 3];
        for (r, line) in lines.iter().enumerate() {
            let chars: Vec<char> = line.trim().chars().filter(|c| !c.is_whitespace()).collect();
            if chars.len() != 3 {
                return Err(EalmError::BadElementText(format!(
                    "line {} must have 3 cells",
                    r + 1
                )));
            }
            for (c, ch) in chars.iter().enumerate() {
                mask[r][c] = match ch {
                    '1' => Cell::Fg,
                    '0' => Cell::Bg,
                    '*' => Cell::DontCare,
                    other => {
                        return Err(EalmError::BadElementText(format!(
                            "unexpected character `{other}`"
                        )))
                    }
                };
            }
        }
        Ok(StructuringElement { mask })
    }

    /// 45-degree clockwise rotation: ring cells shift one position, the
    /// center stays.
    pub fn rotate45(&self) -> Self {
        let mut mask = self.mask;
        for i in 0..8 {
            let (fr, fc) = RING[i];
            let (tr, tc) = RING[(i + 1) % 8];
            mask[tr][tc] = self.mask[fr][fc];
        }
        StructuringElement { mask }
    }

    /// Interchanges foreground and background cells.
    pub fn swap_fg_bg(&self) -> Self {
        let mut mask = self.mask;
        for row in mask.iter_mut() {
            for cell in row.iter_mut() {
                *cell = match *cell {
                    Cell::Fg => Cell::Bg,
                    Cell::Bg => Cell::Fg,
                    Cell::DontCare => Cell::DontCare,
                };
            }
        }
        StructuringElement { mask }
    }

    /// Offsets (dx, dy) of the foreground cells; mask row 0 is dy = +1.
    pub fn fg_offsets(&self) -> Vec<(isize, isize)> {
        self.offsets(Cell::Fg)
    }

    /// Offsets (dx, dy) of the background cells.
    pub fn bg_offsets(&self) -> Vec<(isize, isize)> {
        self.offsets(Cell::Bg)
    }

    fn offsets(&self, kind: Cell) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        for (r, row) in self.mask.iter().enumerate() {
            for (c, &cell) in row.iter().enumerate() {
                if cell == kind {
                    out.push((c as isize - 1, 1 - r as isize));
                }
            }
        }
        out
    }
}

/// Ordered chain of eight elements, each a 45-degree spin of the previous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SEChain {
    pub elements: Vec<StructuringElement>,
}

impl SEChain {
    /// Builds the full rotation chain from its first element.
    pub fn from_first(first: StructuringElement) -> Self {
        let mut elements = vec![first];
        for i in 1..8 {
            elements.push(elements[i - 1].rotate45());
        }
        SEChain { elements }
    }

    pub fn swap_fg_bg(&self) -> Self {
        SEChain {
            elements: self.elements.iter().map(|e| e.swap_fg_bg()).collect(),
        }
    }
}

/// The built-in chains: thickening masks as printed, thinning masks with
/// all foreground/background cells interchanged.
pub fn fig14_chains() -> (SEChain, SEChain) {
    use Cell::{Bg as O, DontCare as D, Fg as I};
    let thickening_first = StructuringElement::new([[I, I, I], [D, O, D], [O, O, O]]);
    let thickening = SEChain::from_first(thickening_first);
    let thinning = thickening.swap_fg_bg();
    (thickening, thinning)
}

/// Cell survives iff every offset probe lands on foreground.
pub fn erode(a: &BinaryGrid, offsets: &[(isize, isize)]) -> Result<BinaryGrid> {
    if offsets.is_empty() {
        return Err(EalmError::EmptyStructuringElement);
    }
    let mut out = BinaryGrid::empty(*a.spec());
    for r in 0..a.height() {
        for c in 0..a.width() {
            let hit = offsets
                .iter()
                .all(|&(dx, dy)| a.probe(c as isize + dx, r as isize + dy));
            out.set(c, r, hit);
        }
    }
    out.set_border(a.border());
    Ok(out)
}

/// Cell survives iff the reflected offset set placed there intersects `a`.
pub fn dilate(a: &BinaryGrid, offsets: &[(isize, isize)]) -> Result<BinaryGrid> {
    if offsets.is_empty() {
        return Err(EalmError::EmptyStructuringElement);
    }
    let mut out = BinaryGrid::empty(*a.spec());
    for r in 0..a.height() {
        for c in 0..a.width() {
            let hit = offsets
                .iter()
                .any(|&(dx, dy)| a.probe(c as isize - dx, r as isize - dy));
            out.set(c, r, hit);
        }
    }
    out.set_border(a.border());
    Ok(out)
}

pub fn reflect(offsets: &[(isize, isize)]) -> Vec<(isize, isize)> {
    offsets.iter().map(|&(dx, dy)| (-dx, -dy)).collect()
}

/// Simultaneous pattern match: foreground cells of the element must land
/// on foreground, background cells on background. Outside-raster probes
/// read background.
pub fn hit_or_miss(a: &BinaryGrid, se: &StructuringElement) -> Result<BinaryGrid> {
    let fg = se.fg_offsets();
    let bg = se.bg_offsets();
    if fg.is_empty() && bg.is_empty() {
        return Err(EalmError::DegenerateStructuringElement);
    }
    let mut out = BinaryGrid::empty(*a.spec());
    for r in 0..a.height() {
        for c in 0..a.width() {
            let hit = fg
                .iter()
                .all(|&(dx, dy)| a.probe(c as isize + dx, r as isize + dy))
                && bg
                    .iter()
                    .all(|&(dx, dy)| !a.probe(c as isize + dx, r as isize + dy));
            out.set(c, r, hit);
        }
    }
    // far from the raster every probe reads the border value
    out.set_border(if a.border() {
        bg.is_empty()
    } else {
        fg.is_empty()
    });
    Ok(out)
}

/// A minus its hit-or-miss matches.
pub fn thin_once(a: &BinaryGrid, se: &StructuringElement) -> Result<BinaryGrid> {
    Ok(a.difference(&hit_or_miss(a, se)?))
}

/// One sequential sweep of the chain: the output of each element feeds
/// the next.
pub fn thin_pass(a: &BinaryGrid, chain: &SEChain) -> Result<BinaryGrid> {
    let mut g = a.clone();
    for se in &chain.elements {
        g = thin_once(&g, se)?;
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct SkeletonResult {
    pub grid: BinaryGrid,
    pub converged: bool,
    pub passes: usize,
}

pub const DEFAULT_MAX_PASSES: usize = 256;

/// Iterates thinning passes until the grid stops changing (the skeleton)
/// or the pass budget runs out.
pub fn thin_to_skeleton(a: &BinaryGrid, chain: &SEChain, max_passes: usize) -> Result<SkeletonResult> {
    let mut g = a.clone();
    for pass in 1..=max_passes.max(1) {
        let next = thin_pass(&g, chain)?;
        if next == g {
            return Ok(SkeletonResult {
                grid: next,
                converged: true,
                passes: pass,
            });
        }
        g = next;
    }
    Ok(SkeletonResult {
        grid: g,
        converged: false,
        passes: max_passes,
    })
}

/// A union its hit-or-miss matches.
pub fn thicken_once(a: &BinaryGrid, se: &StructuringElement) -> Result<BinaryGrid> {
    Ok(a.union(&hit_or_miss(a, se)?))
}

/// One sequential sweep of the thickening chain.
pub fn thicken_pass(a: &BinaryGrid, chain: &SEChain) -> Result<BinaryGrid> {
    let mut g = a.clone();
    for se in &chain.elements {
        g = thicken_once(&g, se)?;
    }
    Ok(g)
}

/// `passes` sequential sweeps of the thickening chain.
pub fn thicken(a: &BinaryGrid, chain: &SEChain, passes: usize) -> Result<BinaryGrid> {
    let mut g = a.clone();
    for _ in 0..passes.max(1) {
        g = thicken_pass(&g, chain)?;
    }
    Ok(g)
}

fn neighbor_count(g: &BinaryGrid, c: usize, r: usize) -> usize {
    let mut n = 0;
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            if (dx, dy) != (0, 0) && g.probe(c as isize + dx, r as isize + dy) {
                n += 1;
            }
        }
    }
    n
}

/// Number of maximal foreground arcs in the cyclic 8-neighborhood ring.
/// 1 for a stroke end, 2 for a through-path cell, >= 3 at a branch point.
fn ring_arcs(g: &BinaryGrid, c: usize, r: usize) -> usize {
    const RING_OFFS: [(isize, isize); 8] = [
        (-1, 1),
        (0, 1),
        (1, 1),
        (1, 0),
        (1, -1),
        (0, -1),
        (-1, -1),
        (-1, 0),
    ];
    let vals: Vec<bool> = RING_OFFS
        .iter()
        .map(|&(dx, dy)| g.probe(c as isize + dx, r as isize + dy))
        .collect();
    let mut arcs = 0;
    for i in 0..8 {
        if vals[i] && !vals[(i + 7) % 8] {
            arcs += 1;
        }
    }
    arcs
}

/// Removes open-ended spurs of length <= `spur_length`: from every end
/// point (exactly one 8-neighbor), walk along the stroke; if a branch
/// point (a cell whose foreground ring splits into >= 3 arcs) is reached
/// within the budget, the walked cells are deleted. Isolated single cells
/// are removed whenever `spur_length >= 1`. Free-standing strokes that
/// never meet a branch point are kept whole.
pub fn prune(a: &BinaryGrid, spur_length: usize) -> BinaryGrid {
    if spur_length == 0 {
        return a.clone();
    }
    let mut g = a.clone();
    loop {
        let mut to_clear: Vec<(usize, usize)> = Vec::new();
        for r in 0..g.height() {
            for c in 0..g.width() {
                if !g.get(c, r) {
                    continue;
                }
                match neighbor_count(&g, c, r) {
                    0 => to_clear.push((c, r)),
                    1 => {
                        if let Some(path) = spur_walk(&g, c, r, spur_length) {
                            to_clear.extend(path);
                        }
                    }
                    _ => {}
                }
            }
        }
        if to_clear.is_empty() {
            return g;
        }
        for (c, r) in to_clear {
            g.set(c, r, false);
        }
    }
}

/// Walks from an end point along the stroke. Returns the spur cells if a
/// branch point is reached within `budget` steps, None otherwise.
fn spur_walk(g: &BinaryGrid, c: usize, r: usize, budget: usize) -> Option<Vec<(usize, usize)>> {
    let mut path = vec![(c, r)];
    let mut prev: Option<(usize, usize)> = None;
    let (mut cc, mut cr) = (c, r);
    loop {
        if path.len() > budget {
            return None;
        }
        let mut next = Vec::new();
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let (nc, nr) = (cc as isize + dx, cr as isize + dy);
                if nc >= 0
                    && nr >= 0
                    && g.probe(nc, nr)
                    && Some((nc as usize, nr as usize)) != prev
                    && !path.contains(&(nc as usize, nr as usize))
                {
                    next.push((nc as usize, nr as usize));
                }
            }
        }
        match next.len() {
            0 => return None, // reached the far end: a free stroke, not a spur
            1 => {
                let (nc, nr) = next[0];
                if ring_arcs(g, nc, nr) >= 3 {
                    return Some(path); // next cell is the branch point; keep it
                }
                prev = Some((cc, cr));
                cc = nc;
                cr = nr;
                path.push((cc, cr));
            }
            _ => return Some(path), // current cell abuts a branching region
        }
    }
}

/// Number of 8-connected foreground components.
pub fn components8(g: &BinaryGrid) -> usize {
    let (w, h) = (g.width(), g.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for r in 0..h {
        for c in 0..w {
            if !g.get(c, r) || seen[r * w + c] {
                continue;
            }
            count += 1;
            let mut stack = vec![(c, r)];
            seen[r * w + c] = true;
            while let Some((cc, cr)) = stack.pop() {
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nc, nr) = (cc as isize + dx, cr as isize + dy);
                        if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= h {
                            continue;
                        }
                        let (nc, nr) = (nc as usize, nr as usize);
                        if g.get(nc, nr) && !seen[nr * w + nc] {
                            seen[nr * w + nc] = true;
                            stack.push((nc, nr));
                        }
                    }
                }
            }
        }
    }
    count
}
