//! Finite abstract simplicial complexes, simplicial pairs and maps, open
//! stars, barycentric subdivision, coherent orientations, and full
//! subcomplexes.
//!
//! A complex fixes a total order on its vertices (their index order); every
//! simplex stores its vertices sorted ascending in that order, and all
//! chain-level signs downstream are taken relative to it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("duplicate vertex {name:?} within a simplex")]
    DuplicateVertex { name: String },
    #[error("vertex {name:?} is not in the declared universe")]
    UnknownVertex { name: String },
    #[error("simplex {simplex} is not in the complex")]
    NotInComplex { simplex: String },
    #[error("vertex map is not simplicial: image {image} of {simplex} is not a simplex of the target")]
    NotSimplicial { simplex: String, image: String },
    #[error("vertex map is missing an entry for vertex {name:?}")]
    UnmappedVertex { name: String },
    #[error("boundary subcomplex contains {simplex}, which is not in the total complex")]
    BoundaryNotContained { simplex: String },
    #[error("boundary subcomplex is not face-closed at {simplex}")]
    BoundaryNotClosed { simplex: String },
    #[error("orientation error: {0}")]
    Orientation(String),
}

/// A simplex: strictly increasing vertex indices of its complex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Simplex(Vec<u32>);

impl Simplex {
    pub fn new(mut vertices: Vec<u32>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        Simplex(vertices)
    }

    pub fn from_sorted(vertices: Vec<u32>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    pub fn vertex(v: u32) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.0.iter().all(|v| other.0.binary_search(v).is_ok())
    }

    /// All facets (codimension-one faces), in order of the dropped position.
    pub fn facets(&self) -> Vec<Simplex> {
        (0..self.0.len())
            .map(|i| {
                let mut v = self.0.clone();
                v.remove(i);
                Simplex(v)
            })
            .collect()
    }

    /// All nonempty proper faces.
    pub fn proper_faces(&self) -> Vec<Simplex> {
        let n = self.0.len();
        let mut out = Vec::new();
        for mask in 1u32..((1 << n) - 1) {
            let verts: Vec<u32> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| self.0[i])
                .collect();
            out.push(Simplex(verts));
        }
        out
    }

    /// Position of `v` in the sorted vertex list.
    pub fn position(&self, v: u32) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn union(&self, other: &Simplex) -> Simplex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Simplex::new(v)
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Dimension first, then lexicographic. This is the canonical simplex order
/// used for subdivision vertex numbering and all deterministic iteration.
impl Ord for Simplex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ">")
    }
}

pub type ComplexHandle = Arc<SimplicialComplex>;

/// A finite abstract simplicial complex with named vertices.
#[derive(Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    vertex_names: Vec<String>,
    simplices: BTreeSet<Simplex>,
    cofacets: BTreeMap<Simplex, Vec<Simplex>>,
}

impl fmt::Debug for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SimplicialComplex({} vertices, {} simplices, dim {:?})",
            self.vertex_names.len(),
            self.simplices.len(),
            self.dimension()
        )
    }
}

impl SimplicialComplex {
    /// Builds the face closure of the given maximal simplices. Vertex names
    /// double as the declared universe; their order fixes the vertex order.
    pub fn build(
        universe: Vec<String>,
        maximal: &[Vec<String>],
    ) -> Result<ComplexHandle, ComplexError> {
        let index: BTreeMap<&str, u32> = universe
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u32))
            .collect();
        let mut simplices = BTreeSet::new();
        for names in maximal {
            let mut ids = Vec::with_capacity(names.len());
            for name in names {
                let &id = index
                    .get(name.as_str())
                    .ok_or_else(|| ComplexError::UnknownVertex { name: name.clone() })?;
                if ids.contains(&id) {
                    return Err(ComplexError::DuplicateVertex { name: name.clone() });
                }
                ids.push(id);
            }
            ids.sort_unstable();
            let top = Simplex::from_sorted(ids);
            for face in top.proper_faces() {
                simplices.insert(face);
            }
            simplices.insert(top);
        }
        Ok(Arc::new(Self::from_closed_set(universe, simplices)))
    }

    /// Convenience builder with integer vertex labels 0..universe_size.
    pub fn build_indexed(
        universe_size: usize,
        maximal: &[Vec<u32>],
    ) -> Result<ComplexHandle, ComplexError> {
        let names: Vec<String> = (0..universe_size).map(|i| format!("v{i}")).collect();
        let maximal: Vec<Vec<String>> = maximal
            .iter()
            .map(|s| s.iter().map(|&v| format!("v{v}")).collect())
            .collect();
        Self::build(names, &maximal)
    }

    /// Wraps an already face-closed simplex set.
    pub fn from_closed_set(vertex_names: Vec<String>, simplices: BTreeSet<Simplex>) -> Self {
        debug_assert!(simplices
            .iter()
            .filter(|s| s.dim() > 0)
            .all(|s| s.facets().iter().all(|f| simplices.contains(f))));
        let mut cofacets: BTreeMap<Simplex, Vec<Simplex>> = BTreeMap::new();
        for s in &simplices {
            cofacets.entry(s.clone()).or_default();
            if s.dim() > 0 {
                for f in s.facets() {
                    cofacets.entry(f).or_default().push(s.clone());
                }
            }
        }
        SimplicialComplex {
            vertex_names,
            simplices,
            cofacets,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertex_name(&self, v: u32) -> &str {
        &self.vertex_names[v as usize]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn vertex_id(&self, name: &str) -> Option<u32> {
        self.vertex_names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32)
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.simplices.contains(s)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.simplices.iter().map(|s| s.dim()).max()
    }

    /// Covering relations upward: simplices having `s` as a facet.
    pub fn cofacets(&self, s: &Simplex) -> &[Simplex] {
        self.cofacets.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .map(|s| if s.dim() % 2 == 0 { 1 } else { -1 })
            .sum()
    }

    /// Key of a simplex in file formats: sorted vertex names joined by ','.
    pub fn simplex_key(&self, s: &Simplex) -> String {
        s.vertices()
            .iter()
            .map(|&v| self.vertex_name(v))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn simplex_from_key(&self, key: &str) -> Result<Simplex, ComplexError> {
        let mut ids = Vec::new();
        for name in key.split(',') {
            let id = self
                .vertex_id(name.trim())
                .ok_or_else(|| ComplexError::UnknownVertex {
                    name: name.trim().to_owned(),
                })?;
            ids.push(id);
        }
        let s = Simplex::new(ids);
        if !self.contains(&s) {
            return Err(ComplexError::NotInComplex {
                simplex: key.to_owned(),
            });
        }
        Ok(s)
    }
}

/// Open star, closed star and link of a simplex.
pub fn open_star(k: &SimplicialComplex, s: &Simplex) -> Result<Vec<Simplex>, ComplexError> {
    if !k.contains(s) {
        return Err(ComplexError::NotInComplex {
            simplex: k.simplex_key(s),
        });
    }
    Ok(k.simplices().filter(|t| s.is_face_of(t)).cloned().collect())
}

pub fn closed_star(k: &SimplicialComplex, s: &Simplex) -> Result<Vec<Simplex>, ComplexError> {
    let star = open_star(k, s)?;
    let mut out: BTreeSet<Simplex> = BTreeSet::new();
    for t in star {
        for f in t.proper_faces() {
            out.insert(f);
        }
        out.insert(t);
    }
    Ok(out.into_iter().collect())
}

pub fn link(k: &SimplicialComplex, s: &Simplex) -> Result<Vec<Simplex>, ComplexError> {
    let closed = closed_star(k, s)?;
    Ok(closed
        .into_iter()
        .filter(|t| t.vertices().iter().all(|v| s.position(*v).is_none()))
        .collect())
}

/// Full subcomplex on a vertex set: all simplices whose vertices lie in `vs`.
/// The vertex universe is kept, so `full_subcomplex(k, all vertices) == k`.
pub fn full_subcomplex(k: &SimplicialComplex, vs: &BTreeSet<u32>) -> SimplicialComplex {
    let simplices: BTreeSet<Simplex> = k
        .simplices()
        .filter(|s| s.vertices().iter().all(|v| vs.contains(v)))
        .cloned()
        .collect();
    SimplicialComplex::from_closed_set(k.vertex_names().to_vec(), simplices)
}

/// Subcomplex generated by a face-closed simplex set (same vertex universe).
pub fn subcomplex_from_set(k: &SimplicialComplex, set: &BTreeSet<Simplex>) -> SimplicialComplex {
    debug_assert!(set.iter().all(|s| k.contains(s)));
    SimplicialComplex::from_closed_set(k.vertex_names().to_vec(), set.clone())
}

/// A simplicial pair (L, L0): a complex together with a face-closed boundary
/// subcomplex. The carrier L - L0 models the underlying open space.
#[derive(Clone, PartialEq, Eq)]
pub struct SimplicialPair {
    pub complex: ComplexHandle,
    pub boundary: BTreeSet<Simplex>,
}

impl fmt::Debug for SimplicialPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SimplicialPair({:?}, boundary {} simplices)",
            self.complex,
            self.boundary.len()
        )
    }
}

impl SimplicialPair {
    pub fn new(
        complex: ComplexHandle,
        boundary: BTreeSet<Simplex>,
    ) -> Result<Self, ComplexError> {
        for s in &boundary {
            if !complex.contains(s) {
                return Err(ComplexError::BoundaryNotContained {
                    simplex: format!("{s:?}"),
                });
            }
            if s.dim() > 0 {
                for f in s.facets() {
                    if !boundary.contains(&f) {
                        return Err(ComplexError::BoundaryNotClosed {
                            simplex: format!("{s:?}"),
                        });
                    }
                }
            }
        }
        Ok(SimplicialPair { complex, boundary })
    }

    pub fn whole(complex: ComplexHandle) -> Self {
        SimplicialPair {
            complex,
            boundary: BTreeSet::new(),
        }
    }

    pub fn is_carrier(&self, s: &Simplex) -> bool {
        self.complex.contains(s) && !self.boundary.contains(s)
    }

    /// Simplices of the open part L - L0, in canonical order.
    pub fn carrier(&self) -> impl Iterator<Item = &Simplex> {
        self.complex
            .simplices()
            .filter(move |s| !self.boundary.contains(s))
    }

    pub fn carrier_count(&self) -> usize {
        self.complex.simplex_count() - self.boundary.len()
    }

    /// Covering relations of the carrier poset.
    pub fn carrier_covers(&self) -> Vec<(Simplex, Simplex)> {
        let mut out = Vec::new();
        for s in self.carrier() {
            for t in self.complex.cofacets(s) {
                if self.is_carrier(t) {
                    out.push((s.clone(), t.clone()));
                }
            }
        }
        out
    }

    /// Squares of covering relations s < t1 < u, s < t2 < u with t1 != t2.
    pub fn carrier_squares(&self) -> Vec<(Simplex, Simplex, Simplex, Simplex)> {
        let mut out = Vec::new();
        for s in self.carrier() {
            let ups: Vec<&Simplex> = self
                .complex
                .cofacets(s)
                .iter()
                .filter(|t| self.is_carrier(t))
                .collect();
            for (i, t1) in ups.iter().enumerate() {
                for t2 in ups.iter().skip(i + 1) {
                    let u = t1.union(t2);
                    if u.dim() == s.dim() + 2 && self.is_carrier(&u) && self.complex.contains(&u) {
                        out.push((s.clone(), (*t1).clone(), (*t2).clone(), u));
                    }
                }
            }
        }
        out
    }
}

/// A simplicial map: a vertex assignment whose image on every simplex is a
/// simplex of the target (possibly of lower dimension).
#[derive(Clone, PartialEq, Eq)]
pub struct SimplicialMap {
    pub source: ComplexHandle,
    pub target: ComplexHandle,
    vertex_map: Vec<u32>,
}

impl fmt::Debug for SimplicialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimplicialMap({:?} -> {:?})", self.source, self.target)
    }
}

impl SimplicialMap {
    pub fn new(
        source: ComplexHandle,
        target: ComplexHandle,
        vertex_map: Vec<u32>,
    ) -> Result<Self, ComplexError> {
        if vertex_map.len() != source.vertex_count() {
            return Err(ComplexError::UnmappedVertex {
                name: source
                    .vertex_names()
                    .get(vertex_map.len())
                    .cloned()
                    .unwrap_or_default(),
            });
        }
        let map = SimplicialMap {
            source,
            target,
            vertex_map,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn from_names(
        source: ComplexHandle,
        target: ComplexHandle,
        assoc: &BTreeMap<String, String>,
    ) -> Result<Self, ComplexError> {
        let mut vertex_map = Vec::with_capacity(source.vertex_count());
        for name in source.vertex_names() {
            let image = assoc
                .get(name)
                .ok_or_else(|| ComplexError::UnmappedVertex { name: name.clone() })?;
            let id = target
                .vertex_id(image)
                .ok_or_else(|| ComplexError::UnknownVertex {
                    name: image.clone(),
                })?;
            vertex_map.push(id);
        }
        Self::new(source, target, vertex_map)
    }

    pub fn identity(complex: ComplexHandle) -> Self {
        let n = complex.vertex_count() as u32;
        SimplicialMap {
            source: complex.clone(),
            target: complex,
            vertex_map: (0..n).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ComplexError> {
        for s in self.source.simplices() {
            let image = self.apply(s);
            if !self.target.contains(&image) {
                return Err(ComplexError::NotSimplicial {
                    simplex: self.source.simplex_key(s),
                    image: format!("{image:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn apply_vertex(&self, v: u32) -> u32 {
        self.vertex_map[v as usize]
    }

    pub fn apply(&self, s: &Simplex) -> Simplex {
        Simplex::new(s.vertices().iter().map(|&v| self.apply_vertex(v)).collect())
    }

    /// True when the image of `s` has the same dimension.
    pub fn is_nondegenerate_on(&self, s: &Simplex) -> bool {
        self.apply(s).dim() == s.dim()
    }

    pub fn compose(&self, after: &SimplicialMap) -> Result<Self, ComplexError> {
        assert_eq!(
            *self.target, *after.source,
            "composition requires matching complexes"
        );
        let vertex_map = self
            .vertex_map
            .iter()
            .map(|&v| after.apply_vertex(v))
            .collect();
        SimplicialMap::new(self.source.clone(), after.target.clone(), vertex_map)
    }

    pub fn vertex_entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.vertex_map.iter().enumerate().map(|(i, &v)| (i as u32, v))
    }
}

/// A chain of simplices of a base complex, strictly increasing in the face
/// order: a simplex of the first subdivision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainLabel(pub Vec<Simplex>);

impl ChainLabel {
    pub fn is_valid(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| w[0].is_face_of(&w[1]) && w[0] != w[1])
    }

    pub fn top(&self) -> &Simplex {
        self.0.last().expect("nonempty chain")
    }

    pub fn min(&self) -> &Simplex {
        self.0.first().expect("nonempty chain")
    }
}

/// The barycentric subdivision of a complex: one vertex per base simplex,
/// one simplex per strictly increasing chain.
#[derive(Clone)]
pub struct Subdivision {
    pub complex: ComplexHandle,
    /// subdivision vertex id -> base simplex it is the barycenter of
    vertex_label: Vec<Simplex>,
    label_index: BTreeMap<Simplex, u32>,
}

impl fmt::Debug for Subdivision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subdivision({:?})", self.complex)
    }
}

impl Subdivision {
    pub fn label(&self, v: u32) -> &Simplex {
        &self.vertex_label[v as usize]
    }

    pub fn vertex_for(&self, base: &Simplex) -> Option<u32> {
        self.label_index.get(base).copied()
    }

    /// Decodes a subdivision simplex as the chain of base simplices.
    pub fn chain_of(&self, s: &Simplex) -> ChainLabel {
        // vertex ids are assigned in (dim, lex) order, so the sorted vertex
        // list decodes to an ascending chain
        ChainLabel(
            s.vertices()
                .iter()
                .map(|&v| self.vertex_label[v as usize].clone())
                .collect(),
        )
    }

    /// The base simplex whose open cell contains the open cell of `s`.
    pub fn carrier_simplex(&self, s: &Simplex) -> Simplex {
        self.chain_of(s).top().clone()
    }
}

/// Computes the barycentric subdivision together with the vertex labels.
pub fn barycentric_subdivision(k: &SimplicialComplex) -> Subdivision {
    let base: Vec<Simplex> = k.simplices().cloned().collect();
    let label_index: BTreeMap<Simplex, u32> = base
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();
    // derived names must avoid the ',' and '|' delimiters of the file
    // formats' simplex and covering-relation keys
    let names: Vec<String> = base
        .iter()
        .map(|s| format!("b({})", k.simplex_key(s).replace(',', ".")))
        .collect();

    // chains_ending[i] = all chains whose maximum is base[i], as vertex id lists
    let mut simplices: BTreeSet<Simplex> = BTreeSet::new();
    let mut chains_ending: Vec<Vec<Vec<u32>>> = vec![Vec::new(); base.len()];
    for (i, s) in base.iter().enumerate() {
        let mut chains = vec![vec![i as u32]];
        for f in s.proper_faces() {
            if let Some(&j) = label_index.get(&f) {
                for c in &chains_ending[j as usize] {
                    let mut chain = c.clone();
                    chain.push(i as u32);
                    chains.push(chain);
                }
            }
        }
        for c in &chains {
            simplices.insert(Simplex::new(c.clone()));
        }
        chains_ending[i] = chains;
    }

    let complex = Arc::new(SimplicialComplex::from_closed_set(names, simplices));
    Subdivision {
        complex,
        vertex_label: base,
        label_index,
    }
}

/// Subdivides a pair: the boundary of the subdivision consists of the chains
/// lying entirely in the boundary (equivalently, whose top does).
pub fn subdivide_pair(pair: &SimplicialPair) -> (SimplicialPair, Subdivision) {
    let sub = barycentric_subdivision(&pair.complex);
    let boundary: BTreeSet<Simplex> = sub
        .complex
        .simplices()
        .filter(|s| pair.boundary.contains(sub.chain_of(s).top()))
        .cloned()
        .collect();
    (
        SimplicialPair::new(sub.complex.clone(), boundary).expect("subdivided boundary is closed"),
        sub,
    )
}

/// The subdivided map f1 : Y1 -> K1 with vertex rule b(t) -> b(f(t)).
pub fn subdivide_map(
    f: &SimplicialMap,
    source_sub: &Subdivision,
    target_sub: &Subdivision,
) -> Result<SimplicialMap, ComplexError> {
    let mut vertex_map = Vec::with_capacity(source_sub.complex.vertex_count());
    for v in 0..source_sub.complex.vertex_count() as u32 {
        let base = source_sub.label(v);
        let image = f.apply(base);
        let target_vertex =
            target_sub
                .vertex_for(&image)
                .ok_or_else(|| ComplexError::NotInComplex {
                    simplex: format!("{image:?}"),
                })?;
        vertex_map.push(target_vertex);
    }
    SimplicialMap::new(
        source_sub.complex.clone(),
        target_sub.complex.clone(),
        vertex_map,
    )
}

/// Coherent orientation data: a sign per top-dimensional simplex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    pub signs: BTreeMap<Simplex, i8>,
}

/// Violation report for orientation validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrientationViolation {
    NotPseudoManifold { ridge: Simplex, count: usize },
    MissingSign { top: Simplex },
    BadSign { top: Simplex, sign: i8 },
    Incoherent { ridge: Simplex },
    BoundaryTop { top: Simplex },
}

impl fmt::Display for OrientationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrientationViolation::NotPseudoManifold { ridge, count } => write!(
                f,
                "not a closed pseudo-manifold: ridge {ridge:?} lies in {count} top simplices"
            ),
            OrientationViolation::MissingSign { top } => {
                write!(f, "missing sign for top simplex {top:?}")
            }
            OrientationViolation::BadSign { top, sign } => {
                write!(f, "sign {sign} for {top:?} is not +1/-1")
            }
            OrientationViolation::Incoherent { ridge } => {
                write!(f, "incoherent induced orientations at ridge {ridge:?}")
            }
            OrientationViolation::BoundaryTop { top } => {
                write!(f, "top simplex {top:?} lies in the boundary subcomplex")
            }
        }
    }
}

/// Sign induced on the facet of `top` obtained by dropping the vertex at
/// `position`, relative to the sorted-vertex orientation.
pub fn induced_ridge_sign(sign: i8, position: usize) -> i8 {
    if position % 2 == 0 {
        sign
    } else {
        -sign
    }
}

/// Validates coherence of an orientation on a pair. Ridges in the carrier
/// must lie in exactly two top simplices with opposite induced orientations;
/// ridges in the boundary must lie in exactly one.
pub fn validate_orientation(
    pair: &SimplicialPair,
    o: &Orientation,
) -> Result<(), Vec<OrientationViolation>> {
    let k = &pair.complex;
    let Some(m) = k.dimension() else {
        return Ok(());
    };
    let mut violations = Vec::new();
    let tops: Vec<&Simplex> = k.simplices().filter(|s| s.dim() == m).collect();
    for top in &tops {
        if pair.boundary.contains(top) {
            violations.push(OrientationViolation::BoundaryTop { top: (*top).clone() });
        }
        match o.signs.get(top) {
            None => violations.push(OrientationViolation::MissingSign { top: (*top).clone() }),
            Some(&s) if s != 1 && s != -1 => {
                violations.push(OrientationViolation::BadSign {
                    top: (*top).clone(),
                    sign: s,
                })
            }
            _ => {}
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }
    if m == 0 {
        return Ok(());
    }
    for ridge in k.simplices().filter(|s| s.dim() == m - 1) {
        let cofacets = k.cofacets(ridge);
        let expected = if pair.boundary.contains(ridge) { 1 } else { 2 };
        if cofacets.len() != expected {
            violations.push(OrientationViolation::NotPseudoManifold {
                ridge: ridge.clone(),
                count: cofacets.len(),
            });
            continue;
        }
        if expected == 2 {
            let mut induced = Vec::new();
            for top in cofacets {
                let dropped = top
                    .vertices()
                    .iter()
                    .position(|v| ridge.position(*v).is_none())
                    .expect("ridge is a facet");
                induced.push(induced_ridge_sign(o.signs[top], dropped));
            }
            if induced[0] + induced[1] != 0 {
                violations.push(OrientationViolation::Incoherent {
                    ridge: ridge.clone(),
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Constructs a coherent orientation by propagation over the ridge-dual
/// graph, or reports why none exists.
pub fn propagate_orientation(pair: &SimplicialPair) -> Result<Orientation, ComplexError> {
    let k = &pair.complex;
    let m = k
        .dimension()
        .ok_or_else(|| ComplexError::Orientation("empty complex".into()))?;
    let tops: Vec<Simplex> = k.simplices().filter(|s| s.dim() == m).cloned().collect();
    let mut signs: BTreeMap<Simplex, i8> = BTreeMap::new();
    for seed in &tops {
        if signs.contains_key(seed) {
            continue;
        }
        signs.insert(seed.clone(), 1);
        let mut queue = vec![seed.clone()];
        while let Some(top) = queue.pop() {
            let sign = signs[&top];
            for (pos, _) in top.vertices().iter().enumerate() {
                let mut ridge_verts = top.vertices().to_vec();
                ridge_verts.remove(pos);
                let ridge = Simplex::from_sorted(ridge_verts);
                let cofacets = k.cofacets(&ridge);
                let expected = if pair.boundary.contains(&ridge) { 1 } else { 2 };
                if cofacets.len() != expected {
                    return Err(ComplexError::Orientation(format!(
                        "ridge {ridge:?} lies in {} top simplices, expected {expected}",
                        cofacets.len()
                    )));
                }
                for other in cofacets {
                    if *other == top {
                        continue;
                    }
                    let other_pos = other
                        .vertices()
                        .iter()
                        .position(|v| ridge.position(*v).is_none())
                        .expect("ridge is a facet");
                    let needed = -induced_ridge_sign(sign, pos);
                    let other_sign = if induced_ridge_sign(1, other_pos) == needed {
                        1
                    } else {
                        -1
                    };
                    match signs.get(other) {
                        None => {
                            signs.insert(other.clone(), other_sign);
                            queue.push(other.clone());
                        }
                        Some(&s) if s != other_sign => {
                            return Err(ComplexError::Orientation(format!(
                                "non-orientable: conflict at {other:?}"
                            )));
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(Orientation { signs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub fn octahedron() -> ComplexHandle {
        // vertices 0/1 = poles +-z, 2..5 = equator
        SimplicialComplex::build_indexed(
            6,
            &[
                vec![0, 2, 3],
                vec![0, 3, 4],
                vec![0, 4, 5],
                vec![0, 2, 5],
                vec![1, 2, 3],
                vec![1, 3, 4],
                vec![1, 4, 5],
                vec![1, 2, 5],
            ],
        )
        .unwrap()
    }

    pub fn cone_over_hexagon() -> ComplexHandle {
        // vertex 0 = center, 1..6 = hexagon
        let tris: Vec<Vec<u32>> = (0..6).map(|i| vec![0, 1 + i, 1 + (i + 1) % 6]).collect();
        SimplicialComplex::build_indexed(7, &tris).unwrap()
    }

    #[test]
    fn closure_counts() {
        let k = SimplicialComplex::build_indexed(3, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(k.simplex_count(), 7);

        let empty = SimplicialComplex::build_indexed(0, &[]).unwrap();
        assert_eq!(empty.simplex_count(), 0);

        let oct = octahedron();
        assert_eq!(oct.simplex_count(), 26);
        assert_eq!(oct.euler_characteristic(), 2);
    }

    #[test]
    fn duplicate_vertex_rejected() {
        let err = SimplicialComplex::build(
            vec!["a".into(), "b".into()],
            &[vec!["a".into(), "a".into()]],
        )
        .unwrap_err();
        assert!(matches!(err, ComplexError::DuplicateVertex { .. }));
    }

    #[test]
    fn stars_and_links() {
        let k = cone_over_hexagon();
        let center = Simplex::vertex(0);
        let star = open_star(&k, &center).unwrap();
        assert_eq!(star.len(), 13); // 1 vertex + 6 edges + 6 triangles

        let top = Simplex::new(vec![0, 1, 2]);
        assert_eq!(open_star(&k, &top).unwrap(), vec![top.clone()]);

        let lk = link(&k, &center).unwrap();
        assert_eq!(lk.len(), 12); // hexagon: 6 vertices + 6 edges

        assert!(open_star(&k, &Simplex::new(vec![1, 4])).is_err());
    }

    #[test]
    fn subdivision_of_edge_and_triangle() {
        let edge = SimplicialComplex::build_indexed(2, &[vec![0, 1]]).unwrap();
        let sub = barycentric_subdivision(&edge);
        assert_eq!(sub.complex.vertex_count(), 3);
        assert_eq!(
            sub.complex.simplices().filter(|s| s.dim() == 1).count(),
            2
        );

        let tri = SimplicialComplex::build_indexed(3, &[vec![0, 1, 2]]).unwrap();
        let sub = barycentric_subdivision(&tri);
        assert_eq!(sub.complex.vertex_count(), 7);
        assert_eq!(sub.complex.simplices().filter(|s| s.dim() == 1).count(), 12);
        assert_eq!(sub.complex.simplices().filter(|s| s.dim() == 2).count(), 6);
    }

    #[test]
    fn subdivision_f_vector_matches_chain_count() {
        // brute-force chain enumeration oracle on the octahedron boundary
        let oct = octahedron();
        let all: Vec<Simplex> = oct.simplices().cloned().collect();
        let mut chain_counts = [0usize; 3];
        let n = all.len();
        for i in 0..n {
            chain_counts[0] += 1;
            for j in 0..n {
                if all[i] != all[j] && all[i].is_face_of(&all[j]) {
                    chain_counts[1] += 1;
                    for l in 0..n {
                        if all[j] != all[l] && all[j].is_face_of(&all[l]) {
                            chain_counts[2] += 1;
                        }
                    }
                }
            }
        }
        let sub = barycentric_subdivision(&oct);
        for d in 0..3 {
            assert_eq!(
                sub.complex.simplices().filter(|s| s.dim() == d).count(),
                chain_counts[d],
                "f-vector mismatch in dimension {d}"
            );
        }
        assert_eq!(sub.complex.euler_characteristic(), oct.euler_characteristic());
    }

    #[test]
    fn subdivide_identity_and_constant_maps() {
        let k = cone_over_hexagon();
        let sub = barycentric_subdivision(&k);
        let id = SimplicialMap::identity(k.clone());
        let id1 = subdivide_map(&id, &sub, &sub).unwrap();
        assert_eq!(id1, SimplicialMap::identity(sub.complex.clone()));

        let point = SimplicialComplex::build_indexed(1, &[vec![0]]).unwrap();
        let constant =
            SimplicialMap::new(k.clone(), point.clone(), vec![0; k.vertex_count()]).unwrap();
        let point_sub = barycentric_subdivision(&point);
        let constant1 = subdivide_map(&constant, &sub, &point_sub).unwrap();
        for v in 0..sub.complex.vertex_count() as u32 {
            assert_eq!(constant1.apply_vertex(v), 0);
        }
    }

    #[test]
    fn subdivide_square_projection() {
        // boundary of the square [0,1]^2, projected onto an edge
        let square = SimplicialComplex::build_indexed(
            4,
            &[vec![0, 1], vec![2, 3], vec![0, 2], vec![1, 3]],
        )
        .unwrap();
        let edge = SimplicialComplex::build_indexed(2, &[vec![0, 1]]).unwrap();
        // (x, y) -> x with vertices 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1)
        let proj = SimplicialMap::new(square.clone(), edge.clone(), vec![0, 1, 0, 1]).unwrap();
        let ssub = barycentric_subdivision(&square);
        let esub = barycentric_subdivision(&edge);
        let proj1 = subdivide_map(&proj, &ssub, &esub).unwrap();
        proj1.validate().unwrap();
    }

    #[test]
    fn subdivide_map_respects_composition() {
        let k = cone_over_hexagon();
        let edge = SimplicialComplex::build_indexed(2, &[vec![0, 1]]).unwrap();
        let point = SimplicialComplex::build_indexed(1, &[vec![0]]).unwrap();
        let f = SimplicialMap::new(k.clone(), edge.clone(), vec![0, 1, 1, 1, 1, 1, 1]).unwrap();
        let g = SimplicialMap::new(edge.clone(), point.clone(), vec![0, 0]).unwrap();
        let ksub = barycentric_subdivision(&k);
        let esub = barycentric_subdivision(&edge);
        let psub = barycentric_subdivision(&point);
        let lhs = subdivide_map(&f.compose(&g).unwrap(), &ksub, &psub).unwrap();
        let rhs = subdivide_map(&f, &ksub, &esub)
            .unwrap()
            .compose(&subdivide_map(&g, &esub, &psub).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn orientation_of_octahedron() {
        let oct = octahedron();
        let pair = SimplicialPair::whole(oct.clone());
        let o = propagate_orientation(&pair).unwrap();
        validate_orientation(&pair, &o).unwrap();

        // flipping one sign breaks coherence at its three ridges
        let mut bad = o.clone();
        let first = bad.signs.keys().next().unwrap().clone();
        let s = bad.signs[&first];
        bad.signs.insert(first, -s);
        let violations = validate_orientation(&pair, &bad).unwrap_err();
        let incoherent = violations
            .iter()
            .filter(|v| matches!(v, OrientationViolation::Incoherent { .. }))
            .count();
        assert_eq!(incoherent, 3);
    }

    #[test]
    fn orientation_rejects_open_triangle() {
        let tri = SimplicialComplex::build_indexed(3, &[vec![0, 1, 2]]).unwrap();
        let pair = SimplicialPair::whole(tri.clone());
        let o = Orientation {
            signs: [(Simplex::new(vec![0, 1, 2]), 1)].into_iter().collect(),
        };
        let violations = validate_orientation(&pair, &o).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, OrientationViolation::NotPseudoManifold { .. })));
    }

    #[test]
    fn full_subcomplex_examples() {
        let oct = octahedron();
        let all: BTreeSet<u32> = (0..6).collect();
        assert_eq!(full_subcomplex(&oct, &all), *oct);

        let empty = full_subcomplex(&oct, &BTreeSet::new());
        assert_eq!(empty.simplex_count(), 0);

        let equator: BTreeSet<u32> = (2..6).collect();
        let cycle = full_subcomplex(&oct, &equator);
        assert_eq!(cycle.simplices().filter(|s| s.dim() == 0).count(), 4);
        assert_eq!(cycle.simplices().filter(|s| s.dim() == 1).count(), 4);
        assert_eq!(cycle.simplices().filter(|s| s.dim() == 2).count(), 0);
    }

    fn arb_complex() -> impl Strategy<Value = ComplexHandle> {
        proptest::collection::vec(proptest::collection::vec(0u32..6, 1..4), 1..5).prop_map(
            |maximal| {
                let maximal: Vec<Vec<u32>> = maximal
                    .into_iter()
                    .map(|mut s| {
                        s.sort_unstable();
                        s.dedup();
                        s
                    })
                    .collect();
                SimplicialComplex::build_indexed(6, &maximal).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn prop_star_antimonotone(k in arb_complex()) {
            // sigma <= tau implies st tau subset of st sigma
            let simplices: Vec<Simplex> = k.simplices().cloned().collect();
            for s in &simplices {
                for t in &simplices {
                    if s.is_face_of(t) {
                        let st_s: BTreeSet<Simplex> = open_star(&k, s).unwrap().into_iter().collect();
                        let st_t: BTreeSet<Simplex> = open_star(&k, t).unwrap().into_iter().collect();
                        prop_assert!(st_t.is_subset(&st_s));
                    }
                }
            }
        }

        #[test]
        fn prop_subdivision_preserves_euler(k in arb_complex()) {
            let sub = barycentric_subdivision(&k);
            prop_assert_eq!(sub.complex.euler_characteristic(), k.euler_characteristic());
        }

        #[test]
        fn prop_closure_idempotent(k in arb_complex()) {
            // rebuilding from all simplices as maximal gives the same complex
            let maximal: Vec<Vec<String>> = k
                .simplices()
                .map(|s| s.vertices().iter().map(|&v| k.vertex_name(v).to_owned()).collect())
                .collect();
            let rebuilt = SimplicialComplex::build(k.vertex_names().to_vec(), &maximal).unwrap();
            prop_assert_eq!(&*rebuilt, &*k);
        }
    }
}
