//! Subdivision transport of constructible data, the dilation map from the
//! second subdivision to the first, its pullback on bisheaves, the canonical
//! comparison map, shrinking of étale opens, and stability spans.
//!
//! Dilation coarsens constructible data: the pullback's value at a simplex
//! of the second subdivision is the first-subdivision value at its dilation
//! image, whose star is strictly larger. Shrinking retreats an étale open
//! two subdivision layers away from its frontier; the persistent local
//! system is invariant under the combination.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::bisheaf::{
    bisheaf_map_context, compare_subquotient, pls, Bisheaf, BisheafError, BisheafMap, LocalSystem,
    SubquotientReport,
};
use crate::cellsheaf::{CellCosheaf, CellSheaf};
use crate::etale::{compose_etale, EtaleError, EtaleOpen};
use crate::exactlin::Matrix;
use crate::field::Field;
use crate::simplicial::{
    subdivide_map, subdivide_pair, ChainLabel, ComplexError, Simplex, SimplicialMap,
    SimplicialPair, Subdivision,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DilationError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Etale(#[from] EtaleError),
    #[error("bisheaf error: {0}")]
    Bisheaf(#[from] BisheafError),
    #[error("witness star inclusion fails at {tau} (refinement simplex {rho})")]
    WitnessInclusion { tau: String, rho: String },
    #[error("witness anchors are not monotone along {face} < {coface}")]
    WitnessNotMonotone { face: String, coface: String },
    #[error("no commuting fill exists at {tau}: {reason}")]
    NoFill { tau: String, reason: String },
    #[error("unsupported witness: {0}")]
    UnsupportedWitness(String),
}

/// The dilation scaffolding of a base pair: both subdivisions and the
/// simplicial dilation map from the second to the first.
pub struct DilationData {
    pub base: SimplicialPair,
    pub first_pair: SimplicialPair,
    pub first_sub: Subdivision,
    pub second_pair: SimplicialPair,
    pub second_sub: Subdivision,
    /// the dilation map: second subdivision -> first subdivision
    pub sigma: SimplicialMap,
    /// (K^2, closed star of the subdivided boundary): the pair on which
    /// dilated data lives
    pub dilated_pair: SimplicialPair,
}

impl fmt::Debug for DilationData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DilationData({:?})", self.base)
    }
}

/// The base simplex at the bottom of a second-subdivision simplex: the
/// minimum of its minimal chain-vertex. This is also the carrier of the
/// dilation image's top, and it lies in the base carrier exactly when the
/// simplex avoids the closed star of the subdivided boundary.
pub fn anchor_simplex(dil: &DilationData, s: &Simplex) -> Simplex {
    let chain: ChainLabel = dil.second_sub.chain_of(s);
    let min_vertex_chain = dil.first_sub.chain_of(chain.min());
    min_vertex_chain.min().clone()
}

/// Builds both subdivisions of the base pair and the dilation map sending
/// each second-subdivision vertex (a chain of first-subdivision simplices)
/// to the first vertex of its minimal chain.
pub fn dilate_base(base: &SimplicialPair) -> DilationData {
    let (first_pair, first_sub) = subdivide_pair(base);
    let (second_pair, second_sub) = subdivide_pair(&first_pair);
    let vertex_map: Vec<u32> = (0..second_pair.complex.vertex_count() as u32)
        .map(|v| {
            // label of v is a first-subdivision simplex; its least vertex is
            // the barycenter of the minimal element of the chain
            second_sub.label(v).vertices()[0]
        })
        .collect();
    let sigma = SimplicialMap::new(
        second_pair.complex.clone(),
        first_pair.complex.clone(),
        vertex_map,
    )
    .expect("dilation is simplicial");

    let mut data = DilationData {
        base: base.clone(),
        first_pair,
        first_sub,
        second_pair: second_pair.clone(),
        second_sub,
        sigma,
        dilated_pair: second_pair.clone(),
    };
    let boundary: BTreeSet<Simplex> = second_pair
        .complex
        .simplices()
        .filter(|s| !data.base.is_carrier(&anchor_simplex(&data, s)))
        .cloned()
        .collect();
    data.dilated_pair =
        SimplicialPair::new(second_pair.complex.clone(), boundary).expect("closed-star closure");
    data
}

/// Transports a constructible bisheaf to the first subdivision: the value at
/// a chain is the value at its top element, maps are composites along the
/// top-element face relations.
pub fn subdivide_bisheaf<S: Field>(b: &Bisheaf<S>) -> (Bisheaf<S>, Subdivision) {
    let (pair1, sub) = subdivide_pair(b.base());
    let top = |s: &Simplex| sub.chain_of(s).top().clone();
    let sheaf_dims: BTreeMap<Simplex, usize> = pair1
        .carrier()
        .map(|s| (s.clone(), b.sheaf.dim(&top(s))))
        .collect();
    let cosheaf_dims: BTreeMap<Simplex, usize> = pair1
        .carrier()
        .map(|s| (s.clone(), b.cosheaf.dim(&top(s))))
        .collect();
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair1.carrier_covers() {
        let (bs, bt) = (top(&s), top(&t));
        restrict.insert(
            (s.clone(), t.clone()),
            b.sheaf.compose_restriction(&bs, &bt),
        );
        extend.insert((s, t), b.cosheaf.compose_extension(&bs, &bt));
    }
    let vertical = pair1
        .carrier()
        .map(|s| (s.clone(), b.vertical[&top(s)].clone()))
        .collect();
    (
        Bisheaf {
            sheaf: CellSheaf::new(pair1.clone(), sheaf_dims, restrict),
            cosheaf: CellCosheaf::new(pair1, cosheaf_dims, extend),
            vertical,
        },
        sub,
    )
}

/// Pulls a first-subdivision bisheaf back along the dilation map: the value
/// at a second-subdivision simplex is the value at its dilation image. The
/// result lives away from the closed star of the subdivided boundary.
pub fn dilation_pullback<S: Field>(b1: &Bisheaf<S>, dil: &DilationData) -> Bisheaf<S> {
    let pair = dil.dilated_pair.clone();
    let sigma = &dil.sigma;
    let sheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), b1.sheaf.dim(&sigma.apply(s))))
        .collect();
    let cosheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), b1.cosheaf.dim(&sigma.apply(s))))
        .collect();
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let (is, it) = (sigma.apply(&s), sigma.apply(&t));
        restrict.insert(
            (s.clone(), t.clone()),
            b1.sheaf.compose_restriction(&is, &it),
        );
        extend.insert((s, t), b1.cosheaf.compose_extension(&is, &it));
    }
    let vertical = pair
        .carrier()
        .map(|s| (s.clone(), b1.vertical[&sigma.apply(s)].clone()))
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf: CellCosheaf::new(pair, cosheaf_dims, extend),
        vertical,
    }
}

/// All the dilated data of one bisheaf: both subdivisions, the pullback, and
/// the second-subdivision transport of the bisheaf itself, on the common
/// dilated pair.
pub struct DilatedBisheaf<S> {
    pub dilation: DilationData,
    pub pulled: Bisheaf<S>,
    pub second: Bisheaf<S>,
}

/// The canonical bisheaf map from the dilation pullback to the
/// second-subdivision transport: the sheaf component at each simplex is the
/// restriction along the nested stars st tau inside st Sigma(tau); the
/// cosheaf component is the dual extension.
pub fn canonical_dilation_map<S: Field>(
    b: &Bisheaf<S>,
) -> Result<(DilatedBisheaf<S>, BisheafMap<S>), DilationError> {
    let dil = dilate_base(b.base());
    let (b1, _) = subdivide_bisheaf(b);
    let (b2_full, _) = subdivide_bisheaf(&b1);
    let pulled = dilation_pullback(&b1, &dil);
    let second = b2_full.restrict_to_pair(&dil.dilated_pair);

    let mut sheaf_fwd = BTreeMap::new();
    let mut cosheaf_bwd = BTreeMap::new();
    for s in dil.dilated_pair.carrier() {
        let image = dil.sigma.apply(s); // a first-subdivision simplex
        let top = dil.second_sub.chain_of(s).top().clone();
        debug_assert!(image.is_face_of(&top));
        sheaf_fwd.insert(s.clone(), b1.sheaf.compose_restriction(&image, &top));
        cosheaf_bwd.insert(s.clone(), b1.cosheaf.compose_extension(&image, &top));
    }
    let map = BisheafMap {
        source: pulled.clone(),
        target: second.clone(),
        sheaf_fwd,
        cosheaf_bwd,
    };
    map.validate()?;
    Ok((
        DilatedBisheaf {
            dilation: dil,
            pulled,
            second,
        },
        map,
    ))
}

/// A shrunken étale open together with the scaffolding relating it back to
/// the original: the second subdivision of the open and the canonical
/// inclusion, validated as an étale map.
pub struct Shrinking {
    /// the shrunken open, over the dilated base pair
    pub open: EtaleOpen,
    /// the second subdivision of the original open, over (K^2, K0^2)
    pub second: EtaleOpen,
    /// inclusion of the shrunken open part (identity on the complex)
    pub inclusion: SimplicialMap,
    /// subdivision scaffolding of the open's own complex
    pub open_first: Subdivision,
    pub open_second: Subdivision,
    pub base_dilation: DilationData,
}

/// The shrinking of an étale open: remove the closed star of the subdivided
/// frontier from the second subdivision. The open part consists of the
/// second-subdivision simplices whose anchor lies in the open carrier.
pub fn shrink(e: &EtaleOpen) -> Result<Shrinking, DilationError> {
    let base_dil = dilate_base(&e.base);
    let (l1_pair, l1_sub) = subdivide_pair(&e.pair);
    let (l2_pair, l2_sub) = subdivide_pair(&l1_pair);
    let psi1 = subdivide_map(&e.psi, &l1_sub, &base_dil.first_sub)?;
    let psi2 = subdivide_map(&psi1, &l2_sub, &base_dil.second_sub)?;

    let anchor = |s: &Simplex| -> Simplex {
        let chain = l2_sub.chain_of(s);
        l1_sub.chain_of(chain.min()).min().clone()
    };
    // open part: simplices avoiding the closed star of the subdivided
    // frontier; the shrunken complex is its face closure
    let open_part: BTreeSet<Simplex> = l2_pair
        .complex
        .simplices()
        .filter(|s| e.pair.is_carrier(&anchor(s)))
        .cloned()
        .collect();
    let mut closure = open_part.clone();
    for s in &open_part {
        for f in s.proper_faces() {
            closure.insert(f);
        }
    }
    let shrunk_complex = std::sync::Arc::new(crate::simplicial::subcomplex_from_set(
        &l2_pair.complex,
        &closure,
    ));
    let boundary: BTreeSet<Simplex> = closure
        .iter()
        .filter(|s| !open_part.contains(*s))
        .cloned()
        .collect();
    let shrunk_pair = SimplicialPair::new(shrunk_complex.clone(), boundary)?;
    let psi_shrunk = SimplicialMap::new(
        shrunk_complex.clone(),
        base_dil.second_pair.complex.clone(),
        psi2.vertex_entries().map(|(_, v)| v).collect(),
    )?;
    let open = EtaleOpen::new(
        shrunk_pair,
        psi_shrunk,
        base_dil.dilated_pair.clone(),
    )?;
    let second = EtaleOpen::new(l2_pair.clone(), psi2, base_dil.second_pair.clone())?;
    let inclusion = SimplicialMap::new(
        shrunk_complex,
        l2_pair.complex.clone(),
        (0..l2_pair.complex.vertex_count() as u32).collect(),
    )?;
    compose_etale(&inclusion, &open, &second)
        .map_err(|v| DilationError::Bisheaf(BisheafError::Violation(format!("{v:?}"))))?;
    Ok(Shrinking {
        open,
        second,
        inclusion,
        open_first: l1_sub,
        open_second: l2_sub,
        base_dilation: base_dil,
    })
}

/// Restricts a local system on an étale open to its shrinking: the stalk at
/// a second-subdivision simplex is the stalk at its carrier, transports are
/// composites.
pub fn restrict_local_system_to_shrinking<S: Field>(
    ls: &LocalSystem<S>,
    shrinking: &Shrinking,
) -> LocalSystem<S> {
    let pair = shrinking.open.pair.clone();
    let carrier = |s: &Simplex| -> Simplex {
        let top1 = shrinking.open_second.chain_of(s).top().clone();
        shrinking.open_first.chain_of(&top1).top().clone()
    };
    let stalks: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), ls.stalks[&carrier(s)]))
        .collect();
    let mut transport = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let (cs, ct) = (carrier(&s), carrier(&t));
        // composite transport from the stalk at ct down to cs
        let mut current = cs.clone();
        let mut acc = Matrix::identity(ls.stalks[&cs]);
        for &v in ct.vertices() {
            if current.position(v).is_some() {
                continue;
            }
            let mut verts = current.vertices().to_vec();
            verts.push(v);
            let next = Simplex::new(verts);
            acc = acc.mul(&ls.transport[&(current.clone(), next.clone())]);
            current = next;
        }
        transport.insert((s, t), acc);
    }
    LocalSystem {
        base: pair,
        stalks,
        transport,
    }
}

/// Report of the shrinking-invariance verification: the restricted original
/// persistent local system against the persistent local system of the
/// dilated bisheaf over the shrunken open.
pub struct ShrinkingReport<S> {
    pub equivalent: bool,
    pub restricted: LocalSystem<S>,
    pub dilated: LocalSystem<S>,
}

/// Verifies that the persistent local system of `b` at `e`, restricted to
/// the shrinking, is isomorphic (stalk dimensions and loop invariants) to
/// the persistent local system of the dilated bisheaf at the shrunken open.
pub fn verify_shrinking_invariance<S: Field>(
    b: &Bisheaf<S>,
    e: &EtaleOpen,
) -> Result<ShrinkingReport<S>, DilationError> {
    let shrinking = shrink(e)?;
    let original = pls(b, e)?;
    let restricted = restrict_local_system_to_shrinking(&original, &shrinking);

    let (b1, _) = subdivide_bisheaf(b);
    let pulled = dilation_pullback(&b1, &shrinking.base_dilation);
    let dilated = pls(&pulled, &shrinking.open)?;

    let equivalent = crate::bisheaf::local_systems_equivalent(&restricted, &dilated)?;
    Ok(ShrinkingReport {
        equivalent,
        restricted,
        dilated,
    })
}

/// Witness data for a stability span: the assignment of second-subdivision
/// simplices certifying the star inclusions, with an optional common
/// refinement carrying the carrier maps used for verification. The trivial
/// witness asserts f = g on the same base.
#[derive(Clone, Debug, Default)]
pub struct StabilityWitness {
    /// target-base simplex -> second-subdivision simplex with st tau
    /// contained in st w(tau); empty means the trivial self-witness
    pub assign: BTreeMap<Simplex, Simplex>,
    pub refinement: Option<WitnessRefinement>,
}

#[derive(Clone, Debug)]
pub struct WitnessRefinement {
    pub complex: crate::simplicial::ComplexHandle,
    /// refinement simplex -> target-base simplex whose open cell contains it
    pub to_target: BTreeMap<Simplex, Simplex>,
    /// refinement simplex -> second-subdivision simplex containing it
    pub to_dilated: BTreeMap<Simplex, Simplex>,
}

impl StabilityWitness {
    pub fn trivial() -> Self {
        StabilityWitness::default()
    }
}

/// A stability span: the canonical map to the second-subdivision transport
/// of the first bisheaf, and the constructed map to the second bisheaf, both
/// out of the dilation pullback on the common dilated pair.
pub struct StabilitySpan<S> {
    pub dilated: DilatedBisheaf<S>,
    pub to_first: BisheafMap<S>,
    pub to_second: BisheafMap<S>,
}

impl<S: Field> fmt::Debug for StabilitySpan<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StabilitySpan({:?})", self.dilated.dilation.base)
    }
}

fn verify_witness_inclusions(
    witness: &StabilityWitness,
    target_pair: &SimplicialPair,
) -> Result<(), DilationError> {
    let Some(refinement) = &witness.refinement else {
        return Ok(());
    };
    // carrier maps must be monotone
    for (rho, tau) in &refinement.to_target {
        for (rho2, tau2) in &refinement.to_target {
            if rho.is_face_of(rho2) && !tau.is_face_of(tau2) {
                return Err(DilationError::WitnessInclusion {
                    tau: target_pair.complex.simplex_key(tau),
                    rho: refinement.complex.simplex_key(rho),
                });
            }
        }
    }
    // st tau subset of st w(tau): every refinement simplex over a coface of
    // tau must sit over a coface of w(tau)
    for (tau, w) in &witness.assign {
        for (rho, carrier_t) in &refinement.to_target {
            if tau.is_face_of(carrier_t) {
                let carrier_d =
                    refinement
                        .to_dilated
                        .get(rho)
                        .ok_or_else(|| DilationError::WitnessInclusion {
                            tau: target_pair.complex.simplex_key(tau),
                            rho: refinement.complex.simplex_key(rho),
                        })?;
                if !w.is_face_of(carrier_d) {
                    return Err(DilationError::WitnessInclusion {
                        tau: target_pair.complex.simplex_key(tau),
                        rho: refinement.complex.simplex_key(rho),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Layout bookkeeping for flattening per-simplex matrix unknowns into one
/// vector.
struct UnknownLayout {
    offsets: BTreeMap<Simplex, usize>,
    shapes: BTreeMap<Simplex, (usize, usize)>,
    total: usize,
}

impl UnknownLayout {
    fn new(shapes: BTreeMap<Simplex, (usize, usize)>) -> Self {
        let mut offsets = BTreeMap::new();
        let mut total = 0;
        for (s, (r, c)) in &shapes {
            offsets.insert(s.clone(), total);
            total += r * c;
        }
        UnknownLayout {
            offsets,
            shapes,
            total,
        }
    }

    fn index(&self, s: &Simplex, row: usize, col: usize) -> usize {
        let (_, cols) = self.shapes[s];
        self.offsets[s] + row * cols + col
    }

    fn unflatten<S: Field>(&self, x: &[S]) -> BTreeMap<Simplex, Matrix<S>> {
        self.shapes
            .iter()
            .map(|(s, &(r, c))| {
                let offset = self.offsets[s];
                let data = x[offset..offset + r * c].to_vec();
                (s.clone(), Matrix::new(r, c, data))
            })
            .collect()
    }
}

/// Solves the fills of the span's second leg as one global linear problem:
/// the sheaf components range over the kernel of the naturality system (the
/// candidates are the canonical kernel basis vectors and their sum), and for
/// each candidate the cosheaf components are solved linearly from the
/// commuting squares together with their own naturality. The first candidate
/// admitting a solution wins; none existing is a fill obstruction.
fn solve_span_leg<S: Field>(
    pulled: &Bisheaf<S>,
    b_g: &Bisheaf<S>,
) -> Result<(BTreeMap<Simplex, Matrix<S>>, BTreeMap<Simplex, Matrix<S>>), DilationError> {
    let pair = pulled.base().clone();
    let covers = pair.carrier_covers();
    let a_layout = UnknownLayout::new(
        pair.carrier()
            .map(|s| (s.clone(), (b_g.sheaf.dim(s), pulled.sheaf.dim(s))))
            .collect(),
    );
    // sheaf naturality: restrictG(s,t) . A_s = A_t . restrictF(s,t)
    let mut rows: Vec<Vec<S>> = Vec::new();
    for (s, t) in &covers {
        let rg = b_g.sheaf.restriction(s, t);
        let rf = pulled.sheaf.restriction(s, t);
        let (rows_out, cols_out) = (b_g.sheaf.dim(t), pulled.sheaf.dim(s));
        for i in 0..rows_out {
            for j in 0..cols_out {
                let mut row = vec![S::zero(); a_layout.total];
                for k in 0..b_g.sheaf.dim(s) {
                    if !rg.get(i, k).is_zero() {
                        let idx = a_layout.index(s, k, j);
                        row[idx] = row[idx].clone() + rg.get(i, k).clone();
                    }
                }
                for k in 0..pulled.sheaf.dim(t) {
                    if !rf.get(k, j).is_zero() {
                        let idx = a_layout.index(t, i, k);
                        row[idx] = row[idx].clone() - rf.get(k, j).clone();
                    }
                }
                rows.push(row);
            }
        }
    }
    let a_system = if rows.is_empty() {
        Matrix::zero(0, a_layout.total)
    } else {
        Matrix::from_rows(rows)
    };
    let kernel = crate::exactlin::kernel_basis(&a_system);

    // candidate sheaf families: each kernel basis vector, their sum, and the
    // zero family (which works exactly when the dilated verticals vanish)
    let mut candidates: Vec<Vec<S>> = Vec::new();
    for i in 0..kernel.dim() {
        candidates.push(kernel.basis().col(i));
    }
    if kernel.dim() > 1 {
        let mut sum = vec![S::zero(); a_layout.total];
        for i in 0..kernel.dim() {
            for (acc, v) in sum.iter_mut().zip(kernel.basis().col(i)) {
                *acc = acc.clone() + v;
            }
        }
        candidates.push(sum);
    }
    candidates.push(vec![S::zero(); a_layout.total]);

    let b_layout = UnknownLayout::new(
        pair.carrier()
            .map(|s| (s.clone(), (pulled.cosheaf.dim(s), b_g.cosheaf.dim(s))))
            .collect(),
    );
    let mut last_reason = "no sheaf-natural family admits commuting squares".to_owned();
    for candidate in candidates {
        let a_components = a_layout.unflatten(&candidate);
        // cosheaf side: naturality B_s . extendG(s,t) = extendF(s,t) . B_t
        // plus squares B_tau . (phiG . A_tau) = phiF_tau, linear in B
        let mut rows: Vec<Vec<S>> = Vec::new();
        let mut rhs: Vec<S> = Vec::new();
        for (s, t) in &covers {
            let eg = b_g.cosheaf.extension(s, t);
            let ef = pulled.cosheaf.extension(s, t);
            for i in 0..pulled.cosheaf.dim(s) {
                for j in 0..b_g.cosheaf.dim(t) {
                    let mut row = vec![S::zero(); b_layout.total];
                    for k in 0..b_g.cosheaf.dim(s) {
                        if !eg.get(k, j).is_zero() {
                            let idx = b_layout.index(s, i, k);
                            row[idx] = row[idx].clone() + eg.get(k, j).clone();
                        }
                    }
                    for k in 0..pulled.cosheaf.dim(t) {
                        if !ef.get(i, k).is_zero() {
                            let idx = b_layout.index(t, k, j);
                            row[idx] = row[idx].clone() - ef.get(i, k).clone();
                        }
                    }
                    rows.push(row);
                    rhs.push(S::zero());
                }
            }
        }
        for s in pair.carrier() {
            let c_block = b_g.vertical[s].mul(&a_components[s]);
            let phi_f = &pulled.vertical[s];
            for i in 0..phi_f.rows() {
                for j in 0..phi_f.cols() {
                    let mut row = vec![S::zero(); b_layout.total];
                    for k in 0..b_g.cosheaf.dim(s) {
                        if !c_block.get(k, j).is_zero() {
                            let idx = b_layout.index(s, i, k);
                            row[idx] = row[idx].clone() + c_block.get(k, j).clone();
                        }
                    }
                    rows.push(row);
                    rhs.push(phi_f.get(i, j).clone());
                }
            }
        }
        let system = if rows.is_empty() {
            Matrix::zero(0, b_layout.total)
        } else {
            Matrix::from_rows(rows)
        };
        match system.solve(&rhs) {
            Some(y) => {
                let b_components = b_layout.unflatten(&y);
                return Ok((a_components, b_components));
            }
            None => {
                last_reason =
                    "cosheaf-side system inconsistent for every candidate sheaf family".to_owned();
            }
        }
    }
    Err(DilationError::NoFill {
        tau: "(global)".into(),
        reason: last_reason,
    })
}

/// Constructs the stability span of two bisheaves.
///
/// With the trivial witness the two bisheaves must share their base and the
/// constructed leg is the canonical dilation composite (f is close to
/// itself). With an explicit witness the second bisheaf must live on the
/// dilated pair of the first base with the identity assignment; the fills
/// are then solved per simplex from the commuting squares, normalized by a
/// deterministic rank factorization, and validated globally. Obstructions
/// are reported per simplex.
pub fn stability_span<S: Field>(
    b_f: &Bisheaf<S>,
    b_g: &Bisheaf<S>,
    witness: &StabilityWitness,
) -> Result<StabilitySpan<S>, DilationError> {
    let (dilated, to_first) = canonical_dilation_map(b_f)?;

    if witness.assign.is_empty() {
        // trivial self-witness: the second leg is the canonical composite
        if b_g.base() != b_f.base() {
            return Err(DilationError::UnsupportedWitness(
                "trivial witness requires both bisheaves on the same base".into(),
            ));
        }
        let (g1, _) = subdivide_bisheaf(b_g);
        let (g2_full, _) = subdivide_bisheaf(&g1);
        let g2 = g2_full.restrict_to_pair(&dilated.dilation.dilated_pair);
        let dil = &dilated.dilation;
        let mut sheaf_fwd = BTreeMap::new();
        let mut cosheaf_bwd = BTreeMap::new();
        for s in dil.dilated_pair.carrier() {
            let image = dil.sigma.apply(s);
            let top = dil.second_sub.chain_of(s).top().clone();
            sheaf_fwd.insert(s.clone(), g1.sheaf.compose_restriction(&image, &top));
            cosheaf_bwd.insert(s.clone(), g1.cosheaf.compose_extension(&image, &top));
        }
        let to_second = BisheafMap {
            source: dilated.pulled.clone(),
            target: g2,
            sheaf_fwd,
            cosheaf_bwd,
        };
        to_second.validate()?;
        return Ok(StabilitySpan {
            dilated,
            to_first,
            to_second,
        });
    }

    // explicit witness: the target bisheaf lives on the dilated pair with
    // the identity assignment
    if *b_g.base() != dilated.dilation.dilated_pair {
        return Err(DilationError::UnsupportedWitness(
            "explicit witnesses require the second bisheaf on the dilated pair".into(),
        ));
    }
    for (tau, w) in &witness.assign {
        if tau != w {
            return Err(DilationError::UnsupportedWitness(format!(
                "only the identity assignment on the dilated pair is supported, got {tau:?} -> {w:?}"
            )));
        }
    }
    verify_witness_inclusions(witness, b_g.base())?;

    // rank obstruction check per simplex before the global solve, so the
    // obstructed simplex is reported by name
    let pulled = &dilated.pulled;
    for s in dilated.dilation.dilated_pair.carrier() {
        let rank_f = pulled.vertical[s].rank();
        let rank_g = b_g.vertical[s].rank();
        if rank_f > rank_g {
            return Err(DilationError::NoFill {
                tau: b_g.base().complex.simplex_key(s),
                reason: format!(
                    "rank of the dilated vertical ({rank_f}) exceeds the target vertical rank ({rank_g})"
                ),
            });
        }
    }
    let (sheaf_fwd, cosheaf_bwd) = solve_span_leg(pulled, b_g)?;
    let to_second = BisheafMap {
        source: pulled.clone(),
        target: b_g.clone(),
        sheaf_fwd,
        cosheaf_bwd,
    };
    to_second.validate().map_err(|e| DilationError::NoFill {
        tau: "(global)".into(),
        reason: e.to_string(),
    })?;
    Ok(StabilitySpan {
        dilated,
        to_first,
        to_second,
    })
}

/// Runs the subquotient comparison of both span legs over the shrinking of
/// an étale open of the original base (the stack-level consequence of the
/// span).
pub fn span_verdicts<S: Field>(
    span: &StabilitySpan<S>,
    e: &EtaleOpen,
) -> Result<(SubquotientReport<S>, SubquotientReport<S>), DilationError> {
    let shrinking = shrink(e)?;
    let ctx1 = bisheaf_map_context(&span.to_first, &shrinking.open)?;
    let ctx2 = bisheaf_map_context(&span.to_second, &shrinking.open)?;
    Ok((compare_subquotient(&ctx1)?, compare_subquotient(&ctx2)?))
}
