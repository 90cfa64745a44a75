//! Combinatorial model of a post-critically finite self-similar set.
//!
//! A structure is described by its IFS arity `N`, the size of the boundary
//! `V_0`, the map fixing each boundary point, and the level-1 gluing rules
//! `F_i(q_a) = F_j(q_b)`. Points of `V_*` are addressed by pairs
//! `(word, label)` meaning `F_word(q_label)`; the canonical address of a point
//! is its shortlex-least representative, whose word length is the level at
//! which the point first appears.
//!
//! [`Hierarchy`] enumerates `V_0 ⊂ V_1 ⊂ … ⊂ V_max` with a stable vertex order
//! in which `V_n` is always a prefix of `V_{n+1}`, so a vertex index is valid
//! at every level at or above the level where the vertex appears.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Maximum IFS arity: words are written one alphanumeric digit per letter.
pub const MAX_ARITY: usize = 36;

/// A finite word over the IFS alphabet `{0, …, N-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: u8) {
        self.0.push(letter);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }

    pub fn suffix_from(&self, start: usize) -> Word {
        Word(self.0[start..].to_vec())
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Position of this word among all words of the same length, ordered
    /// lexicographically (base-`arity` digits, most significant first).
    pub fn index(&self, arity: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &l| acc * arity + l as usize)
    }

    pub fn from_index(mut index: usize, len: usize, arity: usize) -> Word {
        let mut letters = vec![0u8; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % arity) as u8;
            index /= arity;
        }
        Word(letters)
    }

    pub fn check_alphabet(&self, arity: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l as usize >= arity) {
            Some(l) => invalid(format!("letter {l} out of range for arity {arity}")),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            write!(f, "{}", DIGITS[l as usize] as char)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_digit(36) {
                Some(d) => Ok(d as u8),
                None => invalid(format!("invalid word letter {c:?}")),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Letters(Vec<u8>),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Letters(v) => Ok(Word(v)),
        }
    }
}

/// A point `F_word(q_label)` of `V_*`. Canonical when produced by
/// [`FractalStructure::canonicalize`]; then `word.len()` is the level at which
/// the point first appears.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    pub word: Word,
    pub label: usize,
}

impl Address {
    pub fn new(word: Word, label: usize) -> Self {
        Address { word, label }
    }

    pub fn boundary(label: usize) -> Self {
        Address {
            word: Word::empty(),
            label,
        }
    }

    /// Level of first appearance (meaningful for canonical addresses).
    pub fn level(&self) -> usize {
        self.word.len()
    }
}

/// `q<k>` for boundary points, `w<word>:<label>` otherwise.
impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            write!(f, "q{}", self.label)
        } else {
            write!(f, "w{}:{}", self.word, self.label)
        }
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('q') {
            let label = rest
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad boundary address {s:?}")))?;
            return Ok(Address::boundary(label));
        }
        if let Some(rest) = s.strip_prefix('w') {
            let (word, label) = rest
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("bad vertex address {s:?}")))?;
            let label = label
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad label in address {s:?}")))?;
            return Ok(Address::new(word.parse()?, label));
        }
        invalid(format!("vertex address {s:?} must look like q<k> or w<word>:<label>"))
    }
}

/// One gluing rule `F_{map_a}(q_{label_a}) = F_{map_b}(q_{label_b})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Gluing {
    pub map_a: usize,
    pub label_a: usize,
    pub map_b: usize,
    pub label_b: usize,
}

impl Gluing {
    pub fn new(map_a: usize, label_a: usize, map_b: usize, label_b: usize) -> Self {
        Gluing {
            map_a,
            label_a,
            map_b,
            label_b,
        }
    }

    fn normalized(self) -> Self {
        if (self.map_a, self.label_a) <= (self.map_b, self.label_b) {
            self
        } else {
            Gluing::new(self.map_b, self.label_b, self.map_a, self.label_a)
        }
    }
}

/// Planar display embedding: `F_i(x) = p_i + ratio_i (x - p_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub v0_coords: Vec<[f64; 2]>,
    pub map_fixed_points: Vec<[f64; 2]>,
    pub map_ratios: Vec<f64>,
}

impl Embedding {
    fn apply(&self, map: usize, x: [f64; 2]) -> [f64; 2] {
        let p = self.map_fixed_points[map];
        let r = self.map_ratios[map];
        [p[0] + r * (x[0] - p[0]), p[1] + r * (x[1] - p[1])]
    }
}

#[derive(Clone, Debug)]
pub struct FractalStructure {
    arity: usize,
    boundary_size: usize,
    gluings: Vec<Gluing>,
    measure_weights: Vec<f64>,
    fixed_maps: Vec<usize>,
    embedding: Option<Embedding>,
    // Level-1 pair index `i * b + a` -> least pair index of its gluing class.
    class_rep: Vec<usize>,
    class_members: Vec<Vec<usize>>,
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // Keeps the smaller index as root so roots are class minima.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl FractalStructure {
    /// Validates and builds a structure. `fixed_maps[a]` is the map whose fixed
    /// point is `q_a`; pass `None` for the usual convention `F_a(q_a) = q_a`.
    pub fn new(
        arity: usize,
        boundary_size: usize,
        gluings: Vec<Gluing>,
        measure_weights: Vec<f64>,
        fixed_maps: Option<Vec<usize>>,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidStructure(msg));
        if !(2..=MAX_ARITY).contains(&arity) {
            return bad(format!("arity must lie in [2, {MAX_ARITY}], got {arity}"));
        }
        if !(2..=255).contains(&boundary_size) {
            return bad(format!("boundary size must lie in [2, 255], got {boundary_size}"));
        }
        let fixed_maps = match fixed_maps {
            Some(f) => f,
            None if arity >= boundary_size => (0..boundary_size).collect(),
            None => {
                return bad("boundary_fixed_maps is required when arity < boundary_size".into())
            }
        };
        if fixed_maps.len() != boundary_size || fixed_maps.iter().any(|&m| m >= arity) {
            return bad("boundary_fixed_maps must name one map per boundary point".into());
        }
        let mut seen = vec![false; arity];
        for &m in &fixed_maps {
            if std::mem::replace(&mut seen[m], true) {
                return bad(format!("map {m} cannot fix two boundary points"));
            }
        }

        if measure_weights.len() != arity {
            return bad(format!("expected {arity} measure weights, got {}", measure_weights.len()));
        }
        if measure_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return bad("measure weights must be strictly positive".into());
        }
        let total: f64 = measure_weights.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return bad(format!("measure weights sum to {total}, not 1"));
        }

        let b = boundary_size;
        let mut rules: Vec<Gluing> = Vec::with_capacity(gluings.len());
        for g in gluings {
            if g.map_a >= arity || g.map_b >= arity || g.label_a >= b || g.label_b >= b {
                return bad(format!("gluing {g:?} out of range"));
            }
            if g.map_a == g.map_b {
                return bad(format!("gluing {g:?} identifies two points of the same map"));
            }
            if fixed_maps[g.label_a] == g.map_a || fixed_maps[g.label_b] == g.map_b {
                return bad(format!("gluing {g:?} involves a boundary point of V_0"));
            }
            rules.push(g.normalized());
        }
        rules.sort();
        rules.dedup();

        let mut dsu = Dsu::new(arity * b);
        for g in &rules {
            dsu.union(g.map_a * b + g.label_a, g.map_b * b + g.label_b);
        }
        let class_rep: Vec<usize> = (0..arity * b).map(|x| dsu.find(x)).collect();
        let mut class_members = vec![Vec::new(); arity * b];
        for (x, &r) in class_rep.iter().enumerate() {
            class_members[r].push(x);
        }
        for members in class_members.iter().filter(|m| m.len() > 1) {
            let mut maps: Vec<usize> = members.iter().map(|x| x / b).collect();
            maps.sort_unstable();
            if maps.windows(2).any(|w| w[0] == w[1]) {
                return bad("gluing closure identifies two distinct points of one cell".into());
            }
        }
        let class_members = (0..arity * b)
            .map(|x| class_members[class_rep[x]].clone())
            .collect();

        let s = FractalStructure {
            arity,
            boundary_size,
            gluings: rules,
            measure_weights,
            fixed_maps,
            embedding: None,
            class_rep,
            class_members,
        };
        s.check_connected()?;
        match embedding {
            Some(e) => s.with_embedding(e),
            None => Ok(s),
        }
    }

    /// The Sierpinski gasket: three maps, `F_i(q_j) = F_j(q_i)`, equal weights,
    /// embedded on the unit triangle.
    pub fn sierpinski() -> Self {
        let mut gluings = Vec::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                gluings.push(Gluing::new(i, j, j, i));
            }
        }
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        let embedding = Embedding {
            v0_coords: corners.to_vec(),
            map_fixed_points: corners.to_vec(),
            map_ratios: vec![0.5; 3],
        };
        FractalStructure::new(3, 3, gluings, vec![1.0 / 3.0; 3], None, Some(embedding))
            .expect("gasket preset is valid")
    }

    fn with_embedding(mut self, e: Embedding) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidStructure(msg));
        if e.v0_coords.len() != self.boundary_size
            || e.map_fixed_points.len() != self.arity
            || e.map_ratios.len() != self.arity
        {
            return bad("embedding dimensions do not match the structure".into());
        }
        if e.map_ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return bad("embedding ratios must lie in (0, 1)".into());
        }
        let close = |x: [f64; 2], y: [f64; 2]| (x[0] - y[0]).hypot(x[1] - y[1]) <= 1e-9;
        for (a, &m) in self.fixed_maps.iter().enumerate() {
            if !close(e.apply(m, e.v0_coords[a]), e.v0_coords[a]) {
                return bad(format!("q{a} is not fixed by map {m} in the embedding"));
            }
        }
        for g in &self.gluings {
            let pa = e.apply(g.map_a, e.v0_coords[g.label_a]);
            let pb = e.apply(g.map_b, e.v0_coords[g.label_b]);
            if !close(pa, pb) {
                return bad(format!("embedding disagrees with gluing {g:?}"));
            }
        }
        self.embedding = Some(e);
        Ok(self)
    }

    // Level-1 cells must form a connected network through their junctions.
    fn check_connected(&self) -> Result<()> {
        let b = self.boundary_size;
        let mut dsu = Dsu::new(self.arity);
        for g in &self.gluings {
            dsu.union(g.map_a, g.map_b);
        }
        let root = dsu.find(0);
        if (0..self.arity).any(|i| dsu.find(i) != root) {
            return Err(Error::InvalidStructure(format!(
                "level-1 network is disconnected ({} maps, {} boundary points)",
                self.arity, b
            )));
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn boundary_size(&self) -> usize {
        self.boundary_size
    }

    pub fn gluings(&self) -> &[Gluing] {
        &self.gluings
    }

    pub fn measure_weights(&self) -> &[f64] {
        &self.measure_weights
    }

    pub fn fixed_maps(&self) -> &[usize] {
        &self.fixed_maps
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    /// `μ_ω = Π μ_{ω_j}`.
    pub fn cell_measure(&self, word: &Word) -> f64 {
        word.letters()
            .iter()
            .map(|&l| self.measure_weights[l as usize])
            .product()
    }

    /// Canonical address of the point `F_word(q_label)`.
    pub fn canonicalize(&self, word: &Word, label: usize) -> Result<Address> {
        if label >= self.boundary_size {
            return invalid(format!(
                "label {label} out of range for boundary size {}",
                self.boundary_size
            ));
        }
        word.check_alphabet(self.arity)?;
        let fixed = self.fixed_maps[label] as u8;
        let mut letters = word.letters().to_vec();
        while letters.last() == Some(&fixed) {
            letters.pop();
        }
        let Some(&last) = letters.last() else {
            return Ok(Address::boundary(label));
        };
        let b = self.boundary_size;
        let rep = self.class_rep[last as usize * b + label];
        *letters.last_mut().unwrap() = (rep / b) as u8;
        Ok(Address::new(Word(letters), rep % b))
    }

    /// Every `(word, label)` pair with `|word| = level` naming the same point.
    pub fn representatives(&self, address: &Address, level: usize) -> Result<Vec<Address>> {
        let canon = self.canonicalize(&address.word, address.label)?;
        if canon.level() > level {
            return invalid(format!("{canon} does not belong to V_{level}"));
        }
        let b = self.boundary_size;
        let lift = |mut word: Word, label: usize| {
            let fixed = self.fixed_maps[label] as u8;
            while word.len() < level {
                word.push(fixed);
            }
            Address::new(word, label)
        };
        let Some(&last) = canon.word.letters().last() else {
            return Ok(vec![lift(Word::empty(), canon.label)]);
        };
        let stem = canon.word.prefix(canon.word.len() - 1);
        Ok(self.class_members[last as usize * b + canon.label]
            .iter()
            .map(|&pair| {
                let mut w = stem.clone();
                w.push((pair / b) as u8);
                lift(w, pair % b)
            })
            .collect())
    }

    /// Whether the point lies in the closed cell `C_cell`.
    pub fn cell_contains(&self, cell: &Word, address: &Address) -> Result<bool> {
        let canon = self.canonicalize(&address.word, address.label)?;
        let level = canon.level().max(cell.len());
        Ok(self
            .representatives(&canon, level)?
            .iter()
            .any(|r| r.word.starts_with(cell)))
    }

    /// Planar coordinates of a point; requires an embedding.
    pub fn coordinates(&self, address: &Address) -> Result<[f64; 2]> {
        let e = self
            .embedding
            .as_ref()
            .ok_or_else(|| Error::Unsupported("structure has no embedding".into()))?;
        if address.label >= self.boundary_size {
            return invalid(format!("label {} out of range", address.label));
        }
        address.word.check_alphabet(self.arity)?;
        Ok(address
            .word
            .letters()
            .iter()
            .rev()
            .fold(e.v0_coords[address.label], |x, &m| e.apply(m as usize, x)))
    }
}

/// Vertex set and cell incidence of one level `V_n`.
#[derive(Clone, Debug)]
pub struct Level {
    n: usize,
    arity: usize,
    boundary_size: usize,
    first_level: Vec<u8>,
    raw: Vec<usize>,
    // cells[c * b + a] = vertex index of F_{word(c)}(q_a)
    cells: Vec<usize>,
    incidence_ptr: Vec<usize>,
    incidence: Vec<usize>,
}

impl Level {
    fn base(s: &FractalStructure) -> Level {
        let b = s.boundary_size;
        Level::finish(s, 0, vec![0; b], (0..b).collect(), (0..b).collect())
    }

    fn refine(&self, s: &FractalStructure) -> Level {
        let (n_arity, b) = (s.arity, s.boundary_size);
        let cells_here = self.cell_count();
        let mut cells = vec![usize::MAX; cells_here * n_arity * b];
        let mut first_level = self.first_level.clone();
        let mut raw = self.raw.clone();
        for k in 0..cells_here {
            for i in 0..n_arity {
                for a in 0..b {
                    let r = (k * n_arity + i) * b + a;
                    cells[r] = if s.fixed_maps[a] == i {
                        self.cells[k * b + a]
                    } else {
                        let rep = s.class_rep[i * b + a];
                        let rr = (k * n_arity + rep / b) * b + rep % b;
                        if rr == r {
                            first_level.push((self.n + 1) as u8);
                            raw.push(r);
                            raw.len() - 1
                        } else {
                            cells[rr]
                        }
                    };
                }
            }
        }
        Level::finish(s, self.n + 1, first_level, raw, cells)
    }

    fn finish(
        s: &FractalStructure,
        n: usize,
        first_level: Vec<u8>,
        raw: Vec<usize>,
        cells: Vec<usize>,
    ) -> Level {
        let b = s.boundary_size;
        let nv = raw.len();
        let mut incidence_ptr = vec![0usize; nv + 1];
        for &v in &cells {
            incidence_ptr[v + 1] += 1;
        }
        for v in 0..nv {
            incidence_ptr[v + 1] += incidence_ptr[v];
        }
        let mut fill = incidence_ptr.clone();
        let mut incidence = vec![0usize; cells.len()];
        for (r, &v) in cells.iter().enumerate() {
            incidence[fill[v]] = r / b;
            fill[v] += 1;
        }
        Level {
            n,
            arity: s.arity,
            boundary_size: b,
            first_level,
            raw,
            cells,
            incidence_ptr,
            incidence,
        }
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.raw.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / self.boundary_size
    }

    /// Vertex indices of `F_word(V_0)` for the cell with the given index.
    pub fn cell_vertices(&self, cell: usize) -> &[usize] {
        let b = self.boundary_size;
        &self.cells[cell * b..(cell + 1) * b]
    }

    /// Indices of the level-n cells containing vertex `v`.
    pub fn cells_of(&self, v: usize) -> &[usize] {
        &self.incidence[self.incidence_ptr[v]..self.incidence_ptr[v + 1]]
    }

    pub fn address(&self, v: usize) -> Address {
        let k = self.first_level[v] as usize;
        let b = self.boundary_size;
        Address::new(
            Word::from_index(self.raw[v] / b, k, self.arity),
            self.raw[v] % b,
        )
    }

    /// Level at which vertex `v` first appears.
    pub fn first_level(&self, v: usize) -> usize {
        self.first_level[v] as usize
    }

    /// Range of level-n cell indices lying inside `C_prefix` (`|prefix| <= n`).
    pub fn cells_under(&self, prefix: &Word) -> std::ops::Range<usize> {
        let span = self.arity.pow((self.n - prefix.len()) as u32);
        let start = prefix.index(self.arity) * span;
        start..start + span
    }

    /// Distinct vertices `q != p` sharing a level-n cell with `p`.
    pub fn neighbors(&self, p: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .cells_of(p)
            .iter()
            .flat_map(|&c| self.cell_vertices(c).iter().copied())
            .filter(|&q| q != p)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// The nested vertex sets `V_0, …, V_max` of a structure, built eagerly.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    structure: FractalStructure,
    levels: Vec<Level>,
}

impl Hierarchy {
    pub fn new(structure: FractalStructure, max_level: usize) -> Self {
        let mut levels = vec![Level::base(&structure)];
        for _ in 0..max_level {
            let next = levels.last().unwrap().refine(&structure);
            levels.push(next);
        }
        Hierarchy { structure, levels }
    }

    pub fn structure(&self) -> &FractalStructure {
        &self.structure
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        self.levels.get(n).ok_or(Error::LevelOutOfRange {
            requested: n,
            max: self.max_level(),
        })
    }

    pub fn canonicalize(&self, word: &Word, label: usize) -> Result<Address> {
        self.structure.canonicalize(word, label)
    }

    /// `V_n` in its stable order.
    pub fn enumerate_vertices(&self, n: usize) -> Result<Vec<Address>> {
        let level = self.level(n)?;
        Ok((0..level.vertex_count()).map(|v| level.address(v)).collect())
    }

    /// Index of a point in the vertex order of `V_n`, if it belongs to `V_n`.
    pub fn index_of(&self, address: &Address, n: usize) -> Result<Option<usize>> {
        self.level(n)?;
        let canon = self.canonicalize(&address.word, address.label)?;
        let k = canon.level();
        if k > n {
            return Ok(None);
        }
        let b = self.structure.boundary_size;
        Ok(Some(self.levels[k].cells[canon.word.index(self.structure.arity) * b + canon.label]))
    }

    pub fn require_index(&self, address: &Address, n: usize) -> Result<usize> {
        self.index_of(address, n)?
            .ok_or_else(|| Error::InvalidInput(format!("{address} is not a vertex of V_{n}")))
    }

    /// The canonical vertices `F_word(V_0)` in boundary-label order.
    pub fn cell_boundary(&self, word: &Word) -> Result<Vec<Address>> {
        (0..self.structure.boundary_size)
            .map(|a| self.canonicalize(word, a))
            .collect()
    }

    pub fn neighbors(&self, p: &Address, n: usize) -> Result<Vec<Address>> {
        let v = self.require_index(p, n)?;
        let level = &self.levels[n];
        Ok(level.neighbors(v).into_iter().map(|q| level.address(q)).collect())
    }

    pub fn vertex_coordinates(&self, p: &Address) -> Result<[f64; 2]> {
        self.structure.coordinates(p)
    }

    /// `map[x]` = index in `V_n` of `F_word(x)` for each `x ∈ V_{n-|word|}`.
    pub fn cell_embedding(&self, word: &Word, n: usize) -> Result<Vec<usize>> {
        let fine = self.level(n)?;
        let Some(m) = n.checked_sub(word.len()) else {
            return invalid(format!("cell of length {} is finer than level {n}", word.len()));
        };
        word.check_alphabet(self.structure.arity)?;
        let coarse = &self.levels[m];
        let b = self.structure.boundary_size;
        let offset = fine.cells_under(word).start;
        let mut map = vec![usize::MAX; coarse.vertex_count()];
        for c in 0..coarse.cell_count() {
            for a in 0..b {
                map[coarse.cells[c * b + a]] = fine.cells[(offset + c) * b + a];
            }
        }
        Ok(map)
    }
}
