//! Constructible étale opens of a triangulated manifold.
//!
//! An étale open is presented by a simplicial pair (L, L0) and a simplicial
//! map psi : L -> K to the base triangulation (K, K0). The open part L - L0
//! is the actual space; L0 is frontier scaffolding. Validation enforces a
//! combinatorial local-homeomorphism criterion: nondegeneracy, the two
//! ridge-counting conditions, star injectivity everywhere on the open part,
//! and star bijectivity away from the frontier.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::simplicial::{
    ComplexError, Simplex, SimplicialComplex, SimplicialMap, SimplicialPair,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EtaleError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("étale open is invalid: {0:?}")]
    Invalid(Vec<EtaleViolation>),
    #[error("raw étale data inconsistent: {0}")]
    RawInconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EtaleViolation {
    /// psi collapses a simplex of L.
    Degenerate { simplex: String },
    /// An open simplex maps into the ideal boundary of the base.
    OpenIntoBoundary { simplex: String },
    /// A boundary simplex is not a proper face of an open simplex.
    BoundaryNotFrontier { simplex: String },
    /// Ridge-count conditions of the definition.
    BoundaryRidgeCount { simplex: String, count: usize },
    OpenRidgeCount { simplex: String, count: usize },
    /// An open simplex is not a face of a top-dimensional open simplex.
    NotPure { simplex: String },
    /// psi is not injective on the open star of an open simplex.
    StarNotInjective { simplex: String },
    /// psi misses part of the base star at an interior simplex.
    StarNotSurjective { simplex: String, missing: String },
}

impl fmt::Display for EtaleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaleViolation::Degenerate { simplex } => {
                write!(f, "psi collapses simplex {simplex}")
            }
            EtaleViolation::OpenIntoBoundary { simplex } => {
                write!(f, "open simplex {simplex} maps into the base boundary")
            }
            EtaleViolation::BoundaryNotFrontier { simplex } => write!(
                f,
                "boundary simplex {simplex} is not the face of an open simplex"
            ),
            EtaleViolation::BoundaryRidgeCount { simplex, count } => write!(
                f,
                "boundary ridge {simplex} lies in {count} open top simplices, expected 1"
            ),
            EtaleViolation::OpenRidgeCount { simplex, count } => write!(
                f,
                "open ridge {simplex} lies in {count} top simplices, expected 2"
            ),
            EtaleViolation::NotPure { simplex } => write!(
                f,
                "open simplex {simplex} is not a face of an open top simplex"
            ),
            EtaleViolation::StarNotInjective { simplex } => {
                write!(f, "psi is not injective on the star of {simplex}")
            }
            EtaleViolation::StarNotSurjective { simplex, missing } => write!(
                f,
                "psi misses {missing} in the base star of the interior simplex {simplex}"
            ),
        }
    }
}

/// A constructible étale open of the base pair: (L, L0) with psi : L -> K.
#[derive(Clone)]
pub struct EtaleOpen {
    pub pair: SimplicialPair,
    pub psi: SimplicialMap,
    pub base: SimplicialPair,
}

impl fmt::Debug for EtaleOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EtaleOpen({:?} over {:?})", self.pair, self.base)
    }
}

impl EtaleOpen {
    pub fn new(
        pair: SimplicialPair,
        psi: SimplicialMap,
        base: SimplicialPair,
    ) -> Result<Self, EtaleError> {
        assert_eq!(*pair.complex, *psi.source, "psi must start at L");
        assert_eq!(*base.complex, *psi.target, "psi must land in K");
        let open = EtaleOpen { pair, psi, base };
        validate_etale(&open).map_err(EtaleError::Invalid)?;
        Ok(open)
    }

    /// The identity étale open of the base.
    pub fn identity(base: SimplicialPair) -> Self {
        let psi = SimplicialMap::identity(base.complex.clone());
        EtaleOpen {
            pair: base.clone(),
            psi,
            base,
        }
    }

    /// Carrier simplices of the open part, in canonical order.
    pub fn open_simplices(&self) -> Vec<Simplex> {
        self.pair.carrier().cloned().collect()
    }
}

/// Checks the full constructible-étale-open criterion and itemizes every
/// violation found.
pub fn validate_etale(e: &EtaleOpen) -> Result<(), Vec<EtaleViolation>> {
    let l = &e.pair.complex;
    let mut violations = Vec::new();
    let key = |s: &Simplex| l.simplex_key(s);

    for s in l.simplices() {
        if !e.psi.is_nondegenerate_on(s) {
            violations.push(EtaleViolation::Degenerate { simplex: key(s) });
        }
    }
    for s in e.pair.carrier() {
        let image = e.psi.apply(s);
        if !e.base.is_carrier(&image) {
            violations.push(EtaleViolation::OpenIntoBoundary { simplex: key(s) });
        }
    }
    for s in &e.pair.boundary {
        let has_open_coface = e
            .pair
            .carrier()
            .any(|t| s.is_face_of(t) && s != t);
        if !has_open_coface {
            violations.push(EtaleViolation::BoundaryNotFrontier { simplex: key(s) });
        }
    }

    let Some(m) = e.base.complex.dimension() else {
        return if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        };
    };

    // purity of the open part
    let open_tops: Vec<&Simplex> = e.pair.carrier().filter(|s| s.dim() == m).collect();
    for s in e.pair.carrier() {
        if s.dim() < m && !open_tops.iter().any(|t| s.is_face_of(t)) {
            violations.push(EtaleViolation::NotPure { simplex: key(s) });
        }
    }

    // ridge counts
    if m >= 1 {
        for s in l.simplices().filter(|s| s.dim() == m - 1) {
            let open_cofacets = l
                .cofacets(s)
                .iter()
                .filter(|t| t.dim() == m && e.pair.is_carrier(t))
                .count();
            if e.pair.boundary.contains(s) {
                if open_cofacets != 1 {
                    violations.push(EtaleViolation::BoundaryRidgeCount {
                        simplex: key(s),
                        count: open_cofacets,
                    });
                }
            } else if e.pair.is_carrier(s) && open_cofacets != 2 {
                violations.push(EtaleViolation::OpenRidgeCount {
                    simplex: key(s),
                    count: open_cofacets,
                });
            }
        }
    }

    // star injectivity everywhere on the open part; bijectivity onto the
    // carrier part of the base star when the closed star avoids L0
    for s in e.pair.carrier() {
        let star: Vec<&Simplex> = l
            .simplices()
            .filter(|t| s.is_face_of(t))
            .collect();
        let mut images = BTreeSet::new();
        let mut injective = true;
        for t in &star {
            if !images.insert(e.psi.apply(t)) {
                injective = false;
            }
        }
        if !injective {
            violations.push(EtaleViolation::StarNotInjective { simplex: key(s) });
            continue;
        }
        let closed_star_hits_boundary = star.iter().any(|t| {
            e.pair.boundary.contains(t)
                || t.proper_faces().iter().any(|f| e.pair.boundary.contains(f))
        });
        if !closed_star_hits_boundary {
            let image = e.psi.apply(s);
            for u in e.base.complex.simplices() {
                if image.is_face_of(u) && e.base.is_carrier(u) && !images.contains(u) {
                    violations.push(EtaleViolation::StarNotSurjective {
                        simplex: key(s),
                        missing: e.base.complex.simplex_key(u),
                    });
                    break;
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Verifies that mu is an étale map a -> b: the triangle b.psi . mu = a.psi
/// holds vertexwise and mu carries the open part into the open part.
pub fn compose_etale(
    mu: &SimplicialMap,
    a: &EtaleOpen,
    b: &EtaleOpen,
) -> Result<(), Vec<String>> {
    let mut failures = Vec::new();
    if *mu.source != *a.pair.complex || *mu.target != *b.pair.complex {
        failures.push("mu does not connect the two étale complexes".to_owned());
        return Err(failures);
    }
    for v in 0..a.pair.complex.vertex_count() as u32 {
        let via_b = b.psi.apply_vertex(mu.apply_vertex(v));
        let direct = a.psi.apply_vertex(v);
        if via_b != direct {
            failures.push(format!(
                "triangle fails at vertex {}: psi_b(mu(v)) = {}, psi_a(v) = {}",
                a.pair.complex.vertex_name(v),
                b.base.complex.vertex_name(via_b),
                a.base.complex.vertex_name(direct),
            ));
        }
    }
    for s in a.pair.carrier() {
        let image = mu.apply(s);
        if !b.pair.is_carrier(&image) {
            failures.push(format!(
                "open simplex {} maps into the boundary of the target",
                a.pair.complex.simplex_key(s)
            ));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures)
    }
}

/// Raw étale data: abstract cells labeled by base simplices, with face
/// relations compatible with the labels.
#[derive(Clone, Debug)]
pub struct RawEtale {
    /// label of each cell: the base simplex it is a copy of
    pub labels: Vec<Simplex>,
    /// (face_cell, cell): the first cell is the face of the second lying
    /// over the face relation of their labels
    pub relations: Vec<(usize, usize)>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // keep the smaller root for determinism
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// A constructible completion together with the images of the raw cells.
#[derive(Clone)]
pub struct Completion {
    pub open: EtaleOpen,
    /// cell index -> the simplex of the completion carrying it
    pub cell_images: Vec<Simplex>,
}

impl fmt::Debug for Completion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Completion({:?})", self.open)
    }
}

/// The universal constructible completion of raw étale data: complete each
/// cell to a full simplex copy, then glue along the zigzag relation
/// identifying simplices with equal base image that share a face. The new
/// frontier faces form L0. Satisfies the universal property of the
/// constructible completion.
pub fn universal_constructible(
    raw: &RawEtale,
    base: &SimplicialPair,
) -> Result<Completion, EtaleError> {
    for label in &raw.labels {
        if !base.complex.contains(label) {
            return Err(EtaleError::RawInconsistent(format!(
                "cell label {label:?} is not a base simplex"
            )));
        }
        if !base.is_carrier(label) {
            return Err(EtaleError::RawInconsistent(format!(
                "cell label {label:?} lies in the base boundary"
            )));
        }
    }
    for &(face, cell) in &raw.relations {
        if face >= raw.labels.len() || cell >= raw.labels.len() {
            return Err(EtaleError::RawInconsistent("relation index out of range".into()));
        }
        let (lf, lc) = (&raw.labels[face], &raw.labels[cell]);
        if !lf.is_face_of(lc) || lf == lc {
            return Err(EtaleError::RawInconsistent(format!(
                "relation {face} <= {cell} does not respect labels {lf:?} <= {lc:?}"
            )));
        }
    }

    // vertices of the completion: (cell, base vertex) pairs, glued along the
    // declared face relations
    let mut slots: Vec<(usize, u32)> = Vec::new();
    let mut slot_of: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for (i, label) in raw.labels.iter().enumerate() {
        for &v in label.vertices() {
            slot_of.insert((i, v), slots.len());
            slots.push((i, v));
        }
    }
    let mut uf = UnionFind::new(slots.len());
    for &(face, cell) in &raw.relations {
        for &v in raw.labels[face].vertices() {
            let a = slot_of[&(face, v)];
            let b = slot_of[&(cell, v)];
            uf.union(a, b);
        }
    }

    // glue to a local embedding: identify simplices with equal base image
    // that share a vertex, matching vertices by their base image
    loop {
        let mut changed = false;
        // current simplices generated by the cells (full cell copies and all
        // of their faces), grouped by base image
        let mut by_image: BTreeMap<Simplex, Vec<Vec<usize>>> = BTreeMap::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for (i, label) in raw.labels.iter().enumerate() {
            let verts: Vec<(u32, usize)> = label
                .vertices()
                .iter()
                .map(|&v| (v, uf.find(slot_of[&(i, v)])))
                .collect();
            let n = verts.len();
            for mask in 1u32..(1 << n) {
                let sub: Vec<(u32, usize)> = (0..n)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| verts[b])
                    .collect();
                let image = Simplex::new(sub.iter().map(|&(v, _)| v).collect());
                let classes: Vec<usize> = sub.iter().map(|&(_, c)| c).collect();
                if seen.insert(classes.clone()) {
                    by_image.entry(image).or_default().push(classes);
                }
            }
        }
        for (_, group) in by_image {
            for i in 0..group.len() {
                for j in i + 1..group.len() {
                    let a = &group[i];
                    let b = &group[j];
                    if a.iter().any(|c| b.contains(c)) && a != b {
                        for (x, y) in a.iter().zip(b.iter()) {
                            if uf.union(*x, *y) {
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // build the quotient complex
    let mut class_ids: BTreeMap<usize, u32> = BTreeMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut base_image: Vec<u32> = Vec::new();
    for (idx, &(cell, v)) in slots.iter().enumerate() {
        let root = uf.find(idx);
        if root == idx {
            class_ids.insert(root, names.len() as u32);
            names.push(format!("s{cell}.{}", base.complex.vertex_name(v)));
            base_image.push(v);
        }
    }
    let mut simplices: BTreeSet<Simplex> = BTreeSet::new();
    let mut open_marks: BTreeSet<Simplex> = BTreeSet::new();
    let mut cell_images: Vec<Simplex> = Vec::with_capacity(raw.labels.len());
    for (i, label) in raw.labels.iter().enumerate() {
        let verts: Vec<u32> = label
            .vertices()
            .iter()
            .map(|&v| class_ids[&uf.find(slot_of[&(i, v)])])
            .collect();
        let full = Simplex::new(verts);
        if full.vertices().len() != label.vertices().len() {
            return Err(EtaleError::RawInconsistent(format!(
                "cell {i} degenerates after gluing"
            )));
        }
        for f in full.proper_faces() {
            simplices.insert(f);
        }
        simplices.insert(full.clone());
        open_marks.insert(full.clone());
        cell_images.push(full);
    }
    let complex = Arc::new(SimplicialComplex::from_closed_set(names, simplices));
    let boundary: BTreeSet<Simplex> = complex
        .simplices()
        .filter(|s| !open_marks.contains(s))
        .cloned()
        .collect();
    let pair = SimplicialPair::new(complex.clone(), boundary)?;
    let psi = SimplicialMap::new(
        complex.clone(),
        base.complex.clone(),
        base_image,
    )?;
    let open = EtaleOpen::new(pair, psi, base.clone())?;
    Ok(Completion { open, cell_images })
}

/// Spot check of the universal property of the constructible completion:
/// given a map of the raw cells into a constructible étale open (cell i
/// lands on a target simplex over its label), the completion factors it.
/// Returns the factoring vertex map, or `None` when the data does not
/// factor through the completion.
pub fn verify_universal_factoring(
    raw: &RawEtale,
    completion: &Completion,
    target: &EtaleOpen,
    nu: &BTreeMap<usize, Simplex>,
) -> Option<Vec<u32>> {
    // nu must respect labels and the raw face relations
    for (i, label) in raw.labels.iter().enumerate() {
        let image = nu.get(&i)?;
        if !target.pair.complex.contains(image) || target.psi.apply(image) != *label {
            return None;
        }
    }
    for &(face, cell) in &raw.relations {
        if !nu[&face].is_face_of(&nu[&cell]) {
            return None;
        }
    }
    // psi is nondegenerate, so each simplex has a unique vertex over a given
    // base vertex; send the completion vertex of cell i over v to the
    // target vertex of nu(i) over v, and demand consistency on glued classes
    let vertex_over = |open: &EtaleOpen, simplex: &Simplex, base_vertex: u32| -> Option<u32> {
        simplex
            .vertices()
            .iter()
            .copied()
            .find(|&w| open.psi.apply_vertex(w) == base_vertex)
    };
    let l = &completion.open.pair.complex;
    let mut eta: Vec<Option<u32>> = vec![None; l.vertex_count()];
    for (i, label) in raw.labels.iter().enumerate() {
        for &v in label.vertices() {
            let from = vertex_over(&completion.open, &completion.cell_images[i], v)?;
            let to = vertex_over(target, &nu[&i], v)?;
            match eta[from as usize] {
                None => eta[from as usize] = Some(to),
                Some(existing) if existing != to => return None,
                _ => {}
            }
        }
    }
    // every completion vertex arises from a cell slot
    let eta: Vec<u32> = eta.into_iter().collect::<Option<Vec<_>>>()?;
    let map = SimplicialMap::new(
        completion.open.pair.complex.clone(),
        target.pair.complex.clone(),
        eta.clone(),
    )
    .ok()?;
    match compose_etale(&map, &completion.open, target) {
        Ok(()) => Some(eta),
        Err(_) => None,
    }
}

/// Decides whether two étale opens over the same base are isomorphic: a
/// simplex-preserving vertex bijection commuting with the psi maps and
/// preserving the open parts. Backtracking search; intended for desk-scale
/// fixtures and the idempotence tests.
pub fn etale_isomorphic(a: &EtaleOpen, b: &EtaleOpen) -> bool {
    let (la, lb) = (&a.pair.complex, &b.pair.complex);
    if la.vertex_count() != lb.vertex_count()
        || la.simplex_count() != lb.simplex_count()
        || a.pair.boundary.len() != b.pair.boundary.len()
    {
        return false;
    }
    let n = la.vertex_count();
    let mut assignment: Vec<Option<u32>> = vec![None; n];
    let mut used = vec![false; n];
    fn extend(
        v: usize,
        a: &EtaleOpen,
        b: &EtaleOpen,
        assignment: &mut Vec<Option<u32>>,
        used: &mut Vec<bool>,
    ) -> bool {
        let n = assignment.len();
        if v == n {
            // full check of simplices and open parts
            for s in a.pair.complex.simplices() {
                let image = Simplex::new(
                    s.vertices()
                        .iter()
                        .map(|&x| assignment[x as usize].unwrap())
                        .collect(),
                );
                if image.vertices().len() != s.vertices().len()
                    || !b.pair.complex.contains(&image)
                    || a.pair.is_carrier(s) != b.pair.is_carrier(&image)
                {
                    return false;
                }
            }
            return true;
        }
        for w in 0..n as u32 {
            if used[w as usize] {
                continue;
            }
            if a.psi.apply_vertex(v as u32) != b.psi.apply_vertex(w) {
                continue;
            }
            assignment[v] = Some(w);
            used[w as usize] = true;
            if extend(v + 1, a, b, assignment, used) {
                return true;
            }
            assignment[v] = None;
            used[w as usize] = false;
        }
        false
    }
    extend(0, a, b, &mut assignment, &mut used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplicial::SimplicialComplex;

    fn disk_base() -> SimplicialPair {
        let tris: Vec<Vec<u32>> = (0..6).map(|i| vec![0, 1 + i, 1 + (i + 1) % 6]).collect();
        let k = SimplicialComplex::build_indexed(7, &tris).unwrap();
        let boundary = k
            .simplices()
            .filter(|s| s.vertices().iter().all(|&v| v != 0))
            .cloned()
            .collect();
        SimplicialPair::new(k, boundary).unwrap()
    }

    fn sphere_base() -> SimplicialPair {
        // double cone over a triangle: vertices 0 = south, 1 = north, 2..4 equator
        let mut tris = Vec::new();
        for i in 0..3 {
            tris.push(vec![0, 2 + i, 2 + (i + 1) % 3]);
            tris.push(vec![1, 2 + i, 2 + (i + 1) % 3]);
        }
        SimplicialPair::whole(SimplicialComplex::build_indexed(5, &tris).unwrap())
    }

    /// Annular étale open of the disk: delete the center from the open part.
    pub fn annulus_open(base: &SimplicialPair) -> EtaleOpen {
        let mut boundary = base.boundary.clone();
        boundary.insert(Simplex::vertex(0));
        let pair = SimplicialPair::new(base.complex.clone(), boundary).unwrap();
        EtaleOpen::new(pair, SimplicialMap::identity(base.complex.clone()), base.clone()).unwrap()
    }

    #[test]
    fn identity_open_validates() {
        let disk = disk_base();
        let id = EtaleOpen::identity(disk.clone());
        validate_etale(&id).unwrap();

        let sphere = sphere_base();
        validate_etale(&EtaleOpen::identity(sphere)).unwrap();
    }

    #[test]
    fn annulus_open_validates() {
        let disk = disk_base();
        let a = annulus_open(&disk);
        assert_eq!(a.pair.carrier_count(), 12);
    }

    #[test]
    fn double_cover_of_annulus_validates() {
        let disk = disk_base();
        // 12-gon cone: center c' and ring q0..q11; psi wraps twice
        let tris: Vec<Vec<u32>> = (0..12).map(|i| vec![0, 1 + i, 1 + (i + 1) % 12]).collect();
        let l = SimplicialComplex::build_indexed(13, &tris).unwrap();
        let boundary: BTreeSet<Simplex> = l
            .simplices()
            .filter(|s| {
                s.vertices().iter().all(|&v| v != 0)
                    || **s == Simplex::vertex(0)
            })
            .cloned()
            .collect();
        let pair = SimplicialPair::new(l.clone(), boundary).unwrap();
        let vertex_map: Vec<u32> = std::iter::once(0)
            .chain((0..12).map(|i| 1 + (i % 6) as u32))
            .collect();
        let psi = SimplicialMap::new(l, disk.complex.clone(), vertex_map).unwrap();
        let cover = EtaleOpen::new(pair, psi, disk.clone()).unwrap();
        assert_eq!(cover.pair.carrier_count(), 24);
    }

    #[test]
    fn collapsed_sheets_fail_star_injectivity() {
        // two triangles over the same base triangle sharing the whole edge
        // ring: psi not injective on the shared edge's star
        let disk = disk_base();
        let l = SimplicialComplex::build_indexed(4, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let boundary: BTreeSet<Simplex> = l
            .simplices()
            .filter(|s| s.dim() < 2 && !(**s == Simplex::new(vec![1, 2])))
            .cloned()
            .collect();
        let pair = SimplicialPair::new(l.clone(), boundary).unwrap();
        // both triangles map to base triangle {0,1,2}
        let psi = SimplicialMap::new(l, disk.complex.clone(), vec![0, 1, 2, 0]).unwrap();
        let open = EtaleOpen {
            pair,
            psi,
            base: disk.clone(),
        };
        let violations = validate_etale(&open).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, EtaleViolation::StarNotInjective { .. })));
    }

    #[test]
    fn compose_identity_and_violations() {
        let disk = disk_base();
        let id = EtaleOpen::identity(disk.clone());
        let mu = SimplicialMap::identity(disk.complex.clone());
        compose_etale(&mu, &id, &id).unwrap();

        // a vertex map breaking the triangle
        let mut vm: Vec<u32> = (0..7).collect();
        vm.swap(1, 2);
        // build a rotated self-map of the disk complex (1..6 shifted)
        let rot: Vec<u32> = std::iter::once(0).chain((0..6).map(|i| 1 + (i + 1) % 6)).collect();
        let mu_bad = SimplicialMap::new(disk.complex.clone(), disk.complex.clone(), rot).unwrap();
        let err = compose_etale(&mu_bad, &id, &id).unwrap_err();
        assert!(!err.is_empty());
        let _ = vm;
    }

    #[test]
    fn universal_completion_glues_shared_edge() {
        let disk = disk_base();
        // two cells over the same base triangle share one edge-cell over the
        // spoke; the spoke's other side is covered by the neighbor triangle
        let t = Simplex::new(vec![0, 1, 2]);
        let t_other = Simplex::new(vec![0, 1, 6]);
        let e = Simplex::new(vec![0, 1]);
        let raw = RawEtale {
            labels: vec![t.clone(), t.clone(), e.clone(), t_other],
            relations: vec![(2, 0), (2, 1), (2, 3)],
        };
        let completion = universal_constructible(&raw, &disk).unwrap();
        let open = &completion.open;
        // the two duplicate triangle cells glue into one sheet
        assert_eq!(open.pair.carrier().filter(|s| s.dim() == 2).count(), 2);
        assert_eq!(open.pair.carrier().filter(|s| s.dim() == 1).count(), 1);
        assert_eq!(completion.cell_images[0], completion.cell_images[1]);

        // universal property: mapping both duplicate cells onto the same
        // triangle of the identity open factors through the completion
        let id = EtaleOpen::identity(disk.clone());
        let nu: BTreeMap<usize, Simplex> = [
            (0usize, t.clone()),
            (1, t.clone()),
            (2, e.clone()),
            (3, Simplex::new(vec![0, 1, 6])),
        ]
        .into_iter()
        .collect();
        assert!(verify_universal_factoring(&raw, &completion, &id, &nu).is_some());
        // an inconsistent assignment does not factor
        let bad: BTreeMap<usize, Simplex> = [
            (0usize, t.clone()),
            (1, t.clone()),
            (2, Simplex::new(vec![0, 2])),
            (3, Simplex::new(vec![0, 1, 6])),
        ]
        .into_iter()
        .collect();
        assert!(verify_universal_factoring(&raw, &completion, &id, &bad).is_none());
    }

    #[test]
    fn universal_completion_disjoint_cells() {
        let disk = disk_base();
        let t1 = Simplex::new(vec![0, 1, 2]);
        let t2 = Simplex::new(vec![0, 3, 4]);
        let raw = RawEtale {
            labels: vec![t1, t2],
            relations: vec![],
        };
        let open = universal_constructible(&raw, &disk).unwrap().open;
        assert_eq!(open.pair.carrier().filter(|s| s.dim() == 2).count(), 2);
        // frontier faces were added to L0
        assert!(!open.pair.boundary.is_empty());
    }

    #[test]
    fn universal_completion_idempotent() {
        let disk = disk_base();
        let t = Simplex::new(vec![0, 1, 2]);
        let t_other = Simplex::new(vec![0, 1, 6]);
        let e = Simplex::new(vec![0, 1]);
        let raw = RawEtale {
            labels: vec![t.clone(), t.clone(), e.clone(), t_other],
            relations: vec![(2, 0), (2, 1), (2, 3)],
        };
        let once = universal_constructible(&raw, &disk).unwrap().open;
        // re-encode the open part of `once` as raw cells and recomplete
        let open: Vec<Simplex> = once.open_simplices();
        let index: BTreeMap<&Simplex, usize> =
            open.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut relations = Vec::new();
        for (i, s) in open.iter().enumerate() {
            for (j, t) in open.iter().enumerate() {
                if i != j && s.is_face_of(t) {
                    relations.push((i, j));
                }
            }
        }
        let raw2 = RawEtale {
            labels: open.iter().map(|s| once.psi.apply(s)).collect(),
            relations,
        };
        let twice = universal_constructible(&raw2, &disk).unwrap().open;
        assert!(etale_isomorphic(&once, &twice));
        let _ = index;
    }

    #[test]
    fn psi_image_is_up_closed() {
        // image of the open part under psi is up-closed in the base carrier
        let disk = disk_base();
        for open in [EtaleOpen::identity(disk.clone()), annulus_open(&disk)] {
            let image: BTreeSet<Simplex> =
                open.pair.carrier().map(|s| open.psi.apply(s)).collect();
            for s in &image {
                for t in disk.complex.simplices() {
                    if s.is_face_of(t) && disk.is_carrier(t) {
                        assert!(image.contains(t), "psi image not up-closed at {t:?}");
                    }
                }
            }
        }
    }
}
