//! Bisheaves, isofication, image local systems, persistent local systems
//! over étale opens, monodromy reports, and subquotient comparisons.
//!
//! A bisheaf couples a sheaf and a cosheaf on the same base through vertical
//! maps, one per simplex, subject to the commuting square over every
//! covering relation. Isofication applies epification and monofication and
//! conjugates the vertical maps; the image of the verticals of an
//! isobisheaf is a local system, reported through stalk dimensions and
//! spanning-tree monodromy generators.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::cellsheaf::{
    epify, induced_epi_map, induced_mono_map, monofy, CellCosheaf, CellSheaf, CosheafMap,
    CosheafQuotient, FunctorViolation, SheafMap, SheafSubfunctor,
};
use crate::etale::EtaleOpen;
use crate::exactlin::{image_basis, induced_map, kernel_basis, meet_join, InducedMode, Matrix, Subspace};
use crate::field::Field;
use crate::simplicial::{Simplex, SimplicialPair};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisheafError {
    #[error("bisheaf violation: {0}")]
    Violation(String),
    #[error("sheaf violation: {0}")]
    Sheaf(String),
    #[error("cosheaf violation: {0}")]
    Cosheaf(String),
    #[error("sheaf and cosheaf bases differ")]
    BaseMismatch,
    #[error("vertical map at {simplex} has shape {got:?}, expected {expected:?}")]
    VerticalShape {
        simplex: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("vertical square fails at {face} < {coface}: direct {direct:?}, composite {composite:?}")]
    VerticalSquare {
        face: String,
        coface: String,
        direct: Vec<Vec<String>>,
        composite: Vec<Vec<String>>,
    },
    #[error("étale open pullback: image simplex {simplex} missing from the bisheaf base")]
    PullbackImageMissing { simplex: String },
    #[error("étale open is over a different base than the bisheaf")]
    PullbackBaseMismatch,
    #[error("image transport along {face} < {coface} is not invertible; input was not a genuine isobisheaf")]
    TransportNotInvertible { face: String, coface: String },
    #[error("local system transport missing or not invertible at {face} < {coface}")]
    NotLocalSystem { face: String, coface: String },
    #[error("induced map failure: {0}")]
    Induced(String),
}

impl From<FunctorViolation> for BisheafError {
    fn from(v: FunctorViolation) -> Self {
        BisheafError::Violation(v.to_string())
    }
}

/// A constructible bisheaf: a sheaf, a cosheaf on the same base, and a
/// vertical map per simplex from the sheaf value to the cosheaf value.
#[derive(Clone)]
pub struct Bisheaf<S> {
    pub sheaf: CellSheaf<S>,
    pub cosheaf: CellCosheaf<S>,
    pub vertical: BTreeMap<Simplex, Matrix<S>>,
}

impl<S: Field> fmt::Debug for Bisheaf<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bisheaf({:?})", self.sheaf.base)
    }
}

impl<S: Field> Bisheaf<S> {
    pub fn base(&self) -> &SimplicialPair {
        &self.sheaf.base
    }

    pub fn vertical(&self, s: &Simplex) -> &Matrix<S> {
        &self.vertical[s]
    }

    /// Validates both functors and the vertical-compatibility square on
    /// every covering relation.
    pub fn validate(&self) -> Result<(), BisheafError> {
        self.sheaf
            .validate()
            .map_err(|v| BisheafError::Sheaf(v.to_string()))?;
        self.cosheaf
            .validate()
            .map_err(|v| BisheafError::Cosheaf(v.to_string()))?;
        if self.sheaf.base != self.cosheaf.base {
            return Err(BisheafError::BaseMismatch);
        }
        let complex = &self.sheaf.base.complex;
        for s in self.sheaf.base.carrier() {
            let expected = (self.cosheaf.dim(s), self.sheaf.dim(s));
            let phi = self
                .vertical
                .get(s)
                .ok_or_else(|| BisheafError::VerticalShape {
                    simplex: complex.simplex_key(s),
                    expected,
                    got: (0, 0),
                })?;
            if (phi.rows(), phi.cols()) != expected {
                return Err(BisheafError::VerticalShape {
                    simplex: complex.simplex_key(s),
                    expected,
                    got: (phi.rows(), phi.cols()),
                });
            }
        }
        for (s, t) in self.sheaf.base.carrier_covers() {
            let composite = self
                .cosheaf
                .extension(&s, &t)
                .mul(&self.vertical[&t].mul(self.sheaf.restriction(&s, &t)));
            if composite != self.vertical[&s] {
                return Err(BisheafError::VerticalSquare {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                    direct: self.vertical[&s].render_rows(),
                    composite: composite.render_rows(),
                });
            }
        }
        Ok(())
    }

    pub fn is_isobisheaf(&self) -> bool {
        self.sheaf.is_episheaf() && self.cosheaf.is_monocosheaf()
    }

    /// Keeps only the data over a sub-pair of the same complex.
    pub fn restrict_to_pair(&self, pair: &SimplicialPair) -> Self {
        let vertical = self
            .vertical
            .iter()
            .filter(|(s, _)| pair.is_carrier(s))
            .map(|(s, m)| (s.clone(), m.clone()))
            .collect();
        Bisheaf {
            sheaf: self.sheaf.restrict_to_pair(pair),
            cosheaf: self.cosheaf.restrict_to_pair(pair),
            vertical,
        }
    }
}

/// An isofied bisheaf together with the provenance that produced it.
#[derive(Clone)]
pub struct IsoBisheaf<S> {
    pub bisheaf: Bisheaf<S>,
    pub epi: SheafSubfunctor<S>,
    pub mono: CosheafQuotient<S>,
}

impl<S: Field> fmt::Debug for IsoBisheaf<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IsoBisheaf({:?})", self.bisheaf.sheaf.base)
    }
}

/// Isofication: epify the sheaf, monofy the cosheaf, conjugate the vertical
/// maps by the inclusion and projection. The output validates as a bisheaf
/// whose sheaf part is an episheaf and cosheaf part a monocosheaf.
pub fn isofy<S: Field>(b: &Bisheaf<S>) -> Result<IsoBisheaf<S>, BisheafError> {
    let epi = epify(&b.sheaf);
    let mono = monofy(&b.cosheaf);
    let sheaf = epi.materialize();
    let cosheaf = mono.materialize();
    let vertical = b
        .vertical
        .iter()
        .map(|(s, phi)| {
            let incl = epi.components[s].basis();
            let proj = mono.kernels[s].quotient_projection();
            (s.clone(), proj.mul(&phi.mul(incl)))
        })
        .collect();
    let out = Bisheaf {
        sheaf,
        cosheaf,
        vertical,
    };
    out.validate()?;
    debug_assert!(out.is_isobisheaf());
    Ok(IsoBisheaf {
        bisheaf: out,
        epi,
        mono,
    })
}

/// A cell-level local system: every transport invertible.
#[derive(Clone)]
pub struct LocalSystem<S> {
    pub base: SimplicialPair,
    pub stalks: BTreeMap<Simplex, usize>,
    /// transport for s < t maps the stalk at t to the stalk at s
    pub transport: BTreeMap<(Simplex, Simplex), Matrix<S>>,
}

impl<S: Field> fmt::Debug for LocalSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalSystem({} stalks)", self.stalks.len())
    }
}

impl<S: Field> LocalSystem<S> {
    /// Path-homotopy invariance: all transports invertible and every square
    /// of covering relations commutes (monodromy around the boundary of any
    /// 2-simplex of the order complex is the identity).
    pub fn validate(&self) -> Result<(), BisheafError> {
        let complex = &self.base.complex;
        for (s, t) in self.base.carrier_covers() {
            let m = self
                .transport
                .get(&(s.clone(), t.clone()))
                .ok_or_else(|| BisheafError::NotLocalSystem {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                })?;
            if m.rows() != m.cols() || m.rank() != m.rows() {
                return Err(BisheafError::NotLocalSystem {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                });
            }
        }
        for (s, t1, t2, u) in self.base.carrier_squares() {
            let via1 = self.transport[&(s.clone(), t1.clone())]
                .mul(&self.transport[&(t1.clone(), u.clone())]);
            let via2 = self.transport[&(s.clone(), t2.clone())]
                .mul(&self.transport[&(t2.clone(), u.clone())]);
            if via1 != via2 {
                return Err(BisheafError::Violation(format!(
                    "monodromy around the 2-cell over {} is not the identity",
                    complex.simplex_key(&u)
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.stalks.values().all(|&d| d == 0)
    }

    /// Connected components of the covering-relation graph of the carrier.
    pub fn components(&self) -> Vec<Vec<Simplex>> {
        covering_components(&self.base)
    }
}

fn covering_components(base: &SimplicialPair) -> Vec<Vec<Simplex>> {
    let carrier: Vec<Simplex> = base.carrier().cloned().collect();
    let mut adjacency: BTreeMap<&Simplex, Vec<&Simplex>> = BTreeMap::new();
    let covers = base.carrier_covers();
    for (s, t) in &covers {
        adjacency.entry(s).or_default().push(t);
        adjacency.entry(t).or_default().push(s);
    }
    let mut seen: BTreeSet<&Simplex> = BTreeSet::new();
    let mut components = Vec::new();
    for root in &carrier {
        if seen.contains(root) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = VecDeque::from([root]);
        seen.insert(root);
        while let Some(s) = queue.pop_front() {
            component.push(s.clone());
            if let Some(neighbors) = adjacency.get(s) {
                for n in neighbors {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        component.sort();
        components.push(component);
    }
    components
}

/// How the spanning tree for monodromy generation is grown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeStrategy {
    BreadthFirst,
    DepthFirst,
}

#[derive(Clone)]
pub struct LoopReport<S> {
    /// the non-tree covering relation that closes the loop
    pub edge: (Simplex, Simplex),
    /// monodromy along the loop, based at the component root
    pub matrix: Matrix<S>,
    pub trace: S,
    pub determinant: S,
    pub rank_minus_identity: usize,
}

#[derive(Clone)]
pub struct ComponentReport<S> {
    pub root: Simplex,
    pub simplex_count: usize,
    pub stalk_dim: usize,
    pub loops: Vec<LoopReport<S>>,
}

#[derive(Clone)]
pub struct MonodromyReport<S> {
    pub components: Vec<ComponentReport<S>>,
}

/// Spanning-tree monodromy report: per connected component, the stalk
/// dimension and one invertible matrix per independent loop of the
/// covering-relation graph.
pub fn monodromy_report<S: Field>(
    ls: &LocalSystem<S>,
) -> Result<MonodromyReport<S>, BisheafError> {
    monodromy_report_with(ls, TreeStrategy::BreadthFirst)
}

pub fn monodromy_report_with<S: Field>(
    ls: &LocalSystem<S>,
    strategy: TreeStrategy,
) -> Result<MonodromyReport<S>, BisheafError> {
    ls.validate()?;
    let covers = ls.base.carrier_covers();
    let mut adjacency: BTreeMap<&Simplex, Vec<(&Simplex, &Simplex, &Simplex)>> = BTreeMap::new();
    // adjacency entries carry the covering pair (s, t) to find the matrix
    for (s, t) in &covers {
        adjacency.entry(s).or_default().push((t, s, t));
        adjacency.entry(t).or_default().push((s, s, t));
    }
    let mut components = Vec::new();
    for component in covering_components(&ls.base) {
        let root = component[0].clone();
        // to_root[x]: stalk(x) -> stalk(root) along the tree
        let mut to_root: BTreeMap<Simplex, Matrix<S>> = BTreeMap::new();
        to_root.insert(root.clone(), Matrix::identity(ls.stalks[&root]));
        let mut tree_edges: BTreeSet<(Simplex, Simplex)> = BTreeSet::new();
        let mut frontier = VecDeque::from([root.clone()]);
        while let Some(node) = match strategy {
            TreeStrategy::BreadthFirst => frontier.pop_front(),
            TreeStrategy::DepthFirst => frontier.pop_back(),
        } {
            let Some(neighbors) = adjacency.get(&node) else {
                continue;
            };
            for (next, s, t) in neighbors {
                if to_root.contains_key(*next) {
                    continue;
                }
                let m = &ls.transport[&((*s).clone(), (*t).clone())];
                // transport maps stalk(t) -> stalk(s)
                let step = if *next == *t {
                    // entering from s upward: stalk(next) -> stalk(node) is m
                    m.clone()
                } else {
                    m.inverse()
                        .map_err(|_| BisheafError::NotLocalSystem {
                            face: ls.base.complex.simplex_key(s),
                            coface: ls.base.complex.simplex_key(t),
                        })?
                };
                let composite = to_root[&node].mul(&step);
                to_root.insert((*next).clone(), composite);
                tree_edges.insert(((*s).clone(), (*t).clone()));
                frontier.push_back((*next).clone());
            }
        }
        let mut loops = Vec::new();
        for (s, t) in &covers {
            if !component.contains(s) || tree_edges.contains(&(s.clone(), t.clone())) {
                continue;
            }
            let m = &ls.transport[&(s.clone(), t.clone())];
            let loop_matrix = to_root[s].mul(&m.mul(
                &to_root[t]
                    .inverse()
                    .map_err(|_| BisheafError::NotLocalSystem {
                        face: ls.base.complex.simplex_key(s),
                        coface: ls.base.complex.simplex_key(t),
                    })?,
            ));
            let rank_minus_identity = loop_matrix
                .sub(&Matrix::identity(loop_matrix.rows()))
                .rank();
            loops.push(LoopReport {
                edge: (s.clone(), t.clone()),
                trace: loop_matrix.trace(),
                determinant: loop_matrix.determinant(),
                rank_minus_identity,
                matrix: loop_matrix,
            });
        }
        components.push(ComponentReport {
            stalk_dim: ls.stalks[&root],
            simplex_count: component.len(),
            root,
            loops,
        });
    }
    Ok(MonodromyReport { components })
}

/// Equivalence of two local systems over the same base, at the implemented
/// granularity: stalk dimensions per simplex, and per-loop conjugacy
/// invariants (trace, determinant, rank of L - id) with a common spanning
/// tree.
pub fn local_systems_equivalent<S: Field>(
    a: &LocalSystem<S>,
    b: &LocalSystem<S>,
) -> Result<bool, BisheafError> {
    if a.base != b.base {
        return Ok(false);
    }
    if a.stalks != b.stalks {
        return Ok(false);
    }
    let ra = monodromy_report(a)?;
    let rb = monodromy_report(b)?;
    if ra.components.len() != rb.components.len() {
        return Ok(false);
    }
    for (ca, cb) in ra.components.iter().zip(&rb.components) {
        if ca.stalk_dim != cb.stalk_dim || ca.loops.len() != cb.loops.len() {
            return Ok(false);
        }
        for (la, lb) in ca.loops.iter().zip(&cb.loops) {
            if la.edge != lb.edge
                || la.trace != lb.trace
                || la.determinant != lb.determinant
                || la.rank_minus_identity != lb.rank_minus_identity
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Image local system of an isobisheaf: stalk at s is the image of the
/// vertical map, transport is the extension restricted to images. Every
/// transport is checked invertible rather than assumed.
pub fn image_local_system<S: Field>(iso: &IsoBisheaf<S>) -> Result<LocalSystem<S>, BisheafError> {
    let b = &iso.bisheaf;
    let complex = &b.sheaf.base.complex;
    let images: BTreeMap<Simplex, Subspace<S>> = b
        .vertical
        .iter()
        .map(|(s, phi)| (s.clone(), image_basis(phi)))
        .collect();
    let stalks = images.iter().map(|(s, im)| (s.clone(), im.dim())).collect();
    let mut transport = BTreeMap::new();
    for (s, t) in b.sheaf.base.carrier_covers() {
        let m = induced_map(
            b.cosheaf.extension(&s, &t),
            &images[&t],
            &images[&s],
            InducedMode::Sub,
        )
        .map_err(|e| BisheafError::Induced(e.to_string()))?;
        if m.rows() != m.cols() || m.rank() != m.rows() {
            return Err(BisheafError::TransportNotInvertible {
                face: complex.simplex_key(&s),
                coface: complex.simplex_key(&t),
            });
        }
        transport.insert((s, t), m);
    }
    let ls = LocalSystem {
        base: b.sheaf.base.clone(),
        stalks,
        transport,
    };
    ls.validate()?;
    Ok(ls)
}

/// Pulls a bisheaf back along a constructible étale open: the value at an
/// open simplex is the value at its psi image, maps copied along psi.
pub fn pullback_bisheaf<S: Field>(
    b: &Bisheaf<S>,
    a: &EtaleOpen,
) -> Result<Bisheaf<S>, BisheafError> {
    if a.base != *b.base() {
        return Err(BisheafError::PullbackBaseMismatch);
    }
    let pair = a.pair.clone();
    let mut sheaf_dims = BTreeMap::new();
    let mut cosheaf_dims = BTreeMap::new();
    let mut vertical = BTreeMap::new();
    for s in pair.carrier() {
        let image = a.psi.apply(s);
        if !b.sheaf.dims().contains_key(&image) {
            return Err(BisheafError::PullbackImageMissing {
                simplex: a.base.complex.simplex_key(&image),
            });
        }
        sheaf_dims.insert(s.clone(), b.sheaf.dim(&image));
        cosheaf_dims.insert(s.clone(), b.cosheaf.dim(&image));
        vertical.insert(s.clone(), b.vertical[&image].clone());
    }
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let (is, it) = (a.psi.apply(&s), a.psi.apply(&t));
        restrict.insert((s.clone(), t.clone()), b.sheaf.restriction(&is, &it).clone());
        extend.insert((s, t), b.cosheaf.extension(&is, &it).clone());
    }
    Ok(Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf: CellCosheaf::new(pair, cosheaf_dims, extend),
        vertical,
    })
}

/// The persistent local system of a bisheaf at an étale open:
/// image_local_system(isofy(pullback_bisheaf(b, a))).
pub fn pls<S: Field>(b: &Bisheaf<S>, a: &EtaleOpen) -> Result<LocalSystem<S>, BisheafError> {
    let pulled = pullback_bisheaf(b, a)?;
    let iso = isofy(&pulled)?;
    image_local_system(&iso)
}

/// A bisheaf map over a common base: a forward sheaf map and a backward
/// cosheaf map commuting with the vertical maps.
#[derive(Clone)]
pub struct BisheafMap<S> {
    pub source: Bisheaf<S>,
    pub target: Bisheaf<S>,
    /// per simplex: source sheaf value -> target sheaf value
    pub sheaf_fwd: BTreeMap<Simplex, Matrix<S>>,
    /// per simplex: target cosheaf value -> source cosheaf value
    pub cosheaf_bwd: BTreeMap<Simplex, Matrix<S>>,
}

impl<S: Field> BisheafMap<S> {
    pub fn validate(&self) -> Result<(), BisheafError> {
        let fwd = SheafMap {
            source: self.source.sheaf.clone(),
            target: self.target.sheaf.clone(),
            components: self.sheaf_fwd.clone(),
        };
        fwd.validate()?;
        let bwd = CosheafMap {
            source: self.target.cosheaf.clone(),
            target: self.source.cosheaf.clone(),
            components: self.cosheaf_bwd.clone(),
        };
        bwd.validate()?;
        for s in self.source.base().carrier() {
            let composite = self.cosheaf_bwd[s]
                .mul(&self.target.vertical[s].mul(&self.sheaf_fwd[s]));
            if composite != self.source.vertical[s] {
                return Err(BisheafError::VerticalSquare {
                    face: self.source.base().complex.simplex_key(s),
                    coface: "(bisheaf map square)".into(),
                    direct: self.source.vertical[s].render_rows(),
                    composite: composite.render_rows(),
                });
            }
        }
        Ok(())
    }
}

/// The data needed to compare two persistent local systems: the coarse and
/// fine isobisheaves over a common base, a sheaf map coarse -> fine, and a
/// cosheaf map fine -> coarse satisfying the bisheaf-map square.
#[derive(Clone)]
pub struct SubquotientContext<S> {
    pub coarse: IsoBisheaf<S>,
    pub fine: IsoBisheaf<S>,
    pub sheaf_fwd: BTreeMap<Simplex, Matrix<S>>,
    pub cosheaf_bwd: BTreeMap<Simplex, Matrix<S>>,
    /// Def 7.1 side conditions: stack maps want the sheaf part injective and
    /// the cosheaf part surjective. Checked and reported, not assumed.
    pub stack_conditions: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubquotientVerdict {
    /// The coarse system is realized as a quotient of a sublocal system of
    /// the fine system, with zero kernel and full image: an isomorphism.
    Isomorphic,
    /// The coarse system is a genuine subquotient of the fine system.
    Subquotient,
    /// No subquotient relation through the supplied maps.
    No { reason: String },
}

#[derive(Clone)]
pub struct SubquotientReport<S> {
    pub verdict: SubquotientVerdict,
    /// per simplex: the intermediate subspace I and its kernel part K
    pub witnesses: BTreeMap<Simplex, (Subspace<S>, Subspace<S>)>,
    /// stack side conditions (sheaf part injective, cosheaf part surjective)
    pub stack_conditions_hold: bool,
}

/// Verifies the subquotient relation between the image local systems of the
/// two isobisheaves: computes I = image(vertical . injection), K = I meet
/// ker(projection), and checks that I/K realizes the coarse system inside
/// the fine one, transport-compatibly.
pub fn compare_subquotient<S: Field>(
    ctx: &SubquotientContext<S>,
) -> Result<SubquotientReport<S>, BisheafError> {
    let p = &ctx.coarse.bisheaf;
    let q = &ctx.fine.bisheaf;
    if p.base() != q.base() {
        return Err(BisheafError::BaseMismatch);
    }
    let base = p.base().clone();
    let complex = &base.complex;

    let mut stack_conditions_hold = true;
    let mut witnesses = BTreeMap::new();
    let no = |reason: String, witnesses: BTreeMap<Simplex, (Subspace<S>, Subspace<S>)>, stack: bool| {
        Ok(SubquotientReport {
            verdict: SubquotientVerdict::No { reason },
            witnesses,
            stack_conditions_hold: stack,
        })
    };

    // naturality of the supplied maps
    let fwd = SheafMap {
        source: p.sheaf.clone(),
        target: q.sheaf.clone(),
        components: ctx.sheaf_fwd.clone(),
    };
    if let Err(v) = fwd.validate() {
        return no(format!("sheaf map not natural: {v}"), witnesses, stack_conditions_hold);
    }
    let bwd = CosheafMap {
        source: q.cosheaf.clone(),
        target: p.cosheaf.clone(),
        components: ctx.cosheaf_bwd.clone(),
    };
    if let Err(v) = bwd.validate() {
        return no(format!("cosheaf map not natural: {v}"), witnesses, stack_conditions_hold);
    }

    for s in base.carrier() {
        let inj = &ctx.sheaf_fwd[s];
        let proj = &ctx.cosheaf_bwd[s];
        if inj.rank() != inj.cols() || proj.rank() != proj.rows() {
            stack_conditions_hold = false;
        }
        // the Def 5.1 square
        let composite = proj.mul(&q.vertical[s].mul(inj));
        if composite != p.vertical[s] {
            return no(
                format!(
                    "square fails at {}: coarse vertical {:?} vs composite {:?}",
                    complex.simplex_key(s),
                    p.vertical[s].render_rows(),
                    composite.render_rows()
                ),
                witnesses,
                stack_conditions_hold,
            );
        }
        let intermediate = image_basis(&q.vertical[s].mul(inj));
        let fine_stalk = image_basis(&q.vertical[s]);
        if !fine_stalk.contains_subspace(&intermediate) {
            return no(
                format!("intermediate escapes the fine system at {}", complex.simplex_key(s)),
                witnesses,
                stack_conditions_hold,
            );
        }
        let (kernel_part, _) =
            meet_join(&intermediate, &kernel_basis(proj)).expect("same ambient");
        let coarse_rank = image_basis(&p.vertical[s]).dim();
        if intermediate.dim() != kernel_part.dim() + coarse_rank {
            return no(
                format!(
                    "dimension mismatch at {}: dim I = {}, dim K = {}, coarse stalk = {}",
                    complex.simplex_key(s),
                    intermediate.dim(),
                    kernel_part.dim(),
                    coarse_rank
                ),
                witnesses,
                stack_conditions_hold,
            );
        }
        // the projection carries I onto the coarse stalk
        let projected = Subspace::from_spanning(&proj.mul(intermediate.basis()));
        if projected != image_basis(&p.vertical[s]) {
            return no(
                format!("projection of I misses the coarse stalk at {}", complex.simplex_key(s)),
                witnesses,
                stack_conditions_hold,
            );
        }
        witnesses.insert(s.clone(), (intermediate, kernel_part));
    }

    // transport stability of I and K inside the fine system
    for (s, t) in base.carrier_covers() {
        let ext = q.cosheaf.extension(&s, &t);
        let (i_t, k_t) = &witnesses[&t];
        let (i_s, k_s) = &witnesses[&s];
        let moved_i = Subspace::from_spanning(&ext.mul(i_t.basis()));
        let moved_k = Subspace::from_spanning(&ext.mul(k_t.basis()));
        if moved_i != *i_s || moved_k != *k_s {
            return no(
                format!(
                    "witness subspaces not transport-stable along {} < {}",
                    complex.simplex_key(&s),
                    complex.simplex_key(&t)
                ),
                witnesses.clone(),
                stack_conditions_hold,
            );
        }
    }

    let isomorphic = base.carrier().all(|s| {
        let (i, k) = &witnesses[s];
        let fine_stalk = image_basis(&q.vertical[s]);
        k.is_zero() && *i == fine_stalk && i.dim() == image_basis(&p.vertical[s]).dim()
    });
    Ok(SubquotientReport {
        verdict: if isomorphic {
            SubquotientVerdict::Isomorphic
        } else {
            SubquotientVerdict::Subquotient
        },
        witnesses,
        stack_conditions_hold,
    })
}

/// Builds the comparison context induced by an étale map mu : inner -> outer
/// between two étale opens of the bisheaf's base (Example 7.2 of the stack
/// construction): the coarse side is the pullback along mu of the outer
/// isofication, the fine side is the isofication over the inner open, and
/// the connecting maps come from the universal property of Epi and Mono.
pub fn etale_restriction_context<S: Field>(
    b: &Bisheaf<S>,
    mu: &crate::simplicial::SimplicialMap,
    inner: &EtaleOpen,
    outer: &EtaleOpen,
) -> Result<SubquotientContext<S>, BisheafError> {
    crate::etale::compose_etale(mu, inner, outer)
        .map_err(|v| BisheafError::Violation(format!("étale triangle fails: {v:?}")))?;
    let outer_iso = isofy(&pullback_bisheaf(b, outer)?)?;
    let inner_pull = pullback_bisheaf(b, inner)?;
    let fine = isofy(&inner_pull)?;

    // pull the outer isofication back along mu to the inner carrier
    let pair = inner.pair.clone();
    let mut sheaf_dims = BTreeMap::new();
    let mut cosheaf_dims = BTreeMap::new();
    let mut vertical = BTreeMap::new();
    let mut components = BTreeMap::new();
    let mut kernels = BTreeMap::new();
    for s in pair.carrier() {
        let im = mu.apply(s);
        sheaf_dims.insert(s.clone(), outer_iso.bisheaf.sheaf.dim(&im));
        cosheaf_dims.insert(s.clone(), outer_iso.bisheaf.cosheaf.dim(&im));
        vertical.insert(s.clone(), outer_iso.bisheaf.vertical[&im].clone());
        components.insert(s.clone(), outer_iso.epi.components[&im].clone());
        kernels.insert(s.clone(), outer_iso.mono.kernels[&im].clone());
    }
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let (is, it) = (mu.apply(&s), mu.apply(&t));
        restrict.insert(
            (s.clone(), t.clone()),
            outer_iso.bisheaf.sheaf.restriction(&is, &it).clone(),
        );
        extend.insert((s, t), outer_iso.bisheaf.cosheaf.extension(&is, &it).clone());
    }
    let coarse_bisheaf = Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf: CellCosheaf::new(pair.clone(), cosheaf_dims, extend),
        vertical,
    };
    // provenance of the pulled-back isobisheaf, relative to the inner pullback
    let coarse = IsoBisheaf {
        bisheaf: coarse_bisheaf,
        epi: SheafSubfunctor {
            parent: inner_pull.sheaf.clone(),
            components: components.clone(),
        },
        mono: CosheafQuotient {
            parent: inner_pull.cosheaf.clone(),
            kernels: kernels.clone(),
        },
    };

    // connecting maps: Epi(outer)|inner includes into Epi(inner), and
    // Mono(inner) projects onto Mono(outer)|inner
    let mut sheaf_fwd = BTreeMap::new();
    let mut cosheaf_bwd = BTreeMap::new();
    for s in pair.carrier() {
        let incl = induced_map(
            &Matrix::identity(inner_pull.sheaf.dim(s)),
            &components[s],
            &fine.epi.components[s],
            InducedMode::Sub,
        )
        .map_err(|e| BisheafError::Induced(format!("Epi inclusion fails: {e}")))?;
        sheaf_fwd.insert(s.clone(), incl);
        let proj = induced_map(
            &Matrix::identity(inner_pull.cosheaf.dim(s)),
            &fine.mono.kernels[s],
            &kernels[s],
            InducedMode::Quotient,
        )
        .map_err(|e| BisheafError::Induced(format!("Mono projection fails: {e}")))?;
        cosheaf_bwd.insert(s.clone(), proj);
    }
    Ok(SubquotientContext {
        coarse,
        fine,
        sheaf_fwd,
        cosheaf_bwd,
        stack_conditions: true,
    })
}

/// Builds the comparison context induced by a bisheaf map over an étale
/// open: both sides are isofied pullbacks, the connecting maps are the
/// functorial images under Epi and Mono.
pub fn bisheaf_map_context<S: Field>(
    map: &BisheafMap<S>,
    open: &EtaleOpen,
) -> Result<SubquotientContext<S>, BisheafError> {
    let src_pull = pullback_bisheaf(&map.source, open)?;
    let tgt_pull = pullback_bisheaf(&map.target, open)?;
    let coarse = isofy(&src_pull)?;
    let fine = isofy(&tgt_pull)?;
    let mut fwd_components = BTreeMap::new();
    let mut bwd_components = BTreeMap::new();
    for s in open.pair.carrier() {
        let im = open.psi.apply(s);
        fwd_components.insert(s.clone(), map.sheaf_fwd[&im].clone());
        bwd_components.insert(s.clone(), map.cosheaf_bwd[&im].clone());
    }
    let fwd = SheafMap {
        source: src_pull.sheaf.clone(),
        target: tgt_pull.sheaf.clone(),
        components: fwd_components,
    };
    let bwd = CosheafMap {
        source: tgt_pull.cosheaf.clone(),
        target: src_pull.cosheaf.clone(),
        components: bwd_components,
    };
    let sheaf_fwd = induced_epi_map(&fwd, &coarse.epi, &fine.epi)?;
    let cosheaf_bwd = induced_mono_map(&bwd, &fine.mono, &coarse.mono)?;
    Ok(SubquotientContext {
        coarse,
        fine,
        sheaf_fwd,
        cosheaf_bwd,
        stack_conditions: false,
    })
}
