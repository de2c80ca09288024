//! Test-support oracles, independent of the implementation paths they
//! check: exhaustive subspace enumeration over F2 for the fixed-point
//! algorithms.

use std::collections::BTreeMap;

use plsys::cellsheaf::{CellCosheaf, CellSheaf};
use plsys::exactlin::{Matrix, Subspace};
use plsys::field::Fp;
use plsys::simplicial::Simplex;

pub type F2 = Fp<2>;

/// All subspaces of F2^n (n <= 3), by brute enumeration of spanning sets.
pub fn all_subspaces(n: usize) -> Vec<Subspace<F2>> {
    let vectors: Vec<Vec<F2>> = (1u32..(1 << n))
        .map(|mask| {
            (0..n)
                .map(|i| F2::new(((mask >> i) & 1) as i64))
                .collect()
        })
        .collect();
    let mut out: Vec<Subspace<F2>> = vec![Subspace::zero(n)];
    for mask in 1u32..(1 << vectors.len()) {
        let spanning: Vec<Vec<F2>> = (0..vectors.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| vectors[i].clone())
            .collect();
        let sub = Subspace::from_vectors(n, &spanning);
        if !out.contains(&sub) {
            out.push(sub);
        }
    }
    out
}

fn image_of(m: &Matrix<F2>, s: &Subspace<F2>) -> Subspace<F2> {
    Subspace::from_spanning(&m.mul(s.basis()))
}

/// Components of the covering graph, as index sets over a fixed simplex
/// order.
fn covering_components(
    simplices: &[Simplex],
    covers: &[(Simplex, Simplex)],
) -> Vec<Vec<usize>> {
    let index: BTreeMap<&Simplex, usize> =
        simplices.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut parent: Vec<usize> = (0..simplices.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for (s, t) in covers {
        let (a, b) = (index[s], index[t]);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..simplices.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// The maximal sub-episheaf by exhaustive enumeration: families are searched
/// per covering-graph component with pruning; validity means every covering
/// restriction maps the component exactly onto the target component.
pub fn brute_force_max_sub_episheaf(
    sheaf: &CellSheaf<F2>,
) -> BTreeMap<Simplex, Subspace<F2>> {
    let simplices: Vec<Simplex> = sheaf.base.carrier().cloned().collect();
    let covers = sheaf.base.carrier_covers();
    let subspace_table: BTreeMap<usize, Vec<Subspace<F2>>> = simplices
        .iter()
        .map(|s| sheaf.dim(s))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|n| (n, all_subspaces(n)))
        .collect();

    let mut best: BTreeMap<Simplex, Subspace<F2>> = BTreeMap::new();
    for component in covering_components(&simplices, &covers) {
        let local_covers: Vec<&(Simplex, Simplex)> = covers
            .iter()
            .filter(|(s, _)| component.iter().any(|&i| simplices[i] == *s))
            .collect();
        let mut assignment: BTreeMap<Simplex, Subspace<F2>> = BTreeMap::new();
        let mut best_local: Option<(usize, BTreeMap<Simplex, Subspace<F2>>)> = None;
        search_epi(
            sheaf,
            &simplices,
            &component,
            0,
            &local_covers,
            &subspace_table,
            &mut assignment,
            &mut best_local,
        );
        let (_, family) = best_local.expect("the zero family is always valid");
        best.extend(family);
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn search_epi(
    sheaf: &CellSheaf<F2>,
    simplices: &[Simplex],
    component: &[usize],
    position: usize,
    covers: &[&(Simplex, Simplex)],
    table: &BTreeMap<usize, Vec<Subspace<F2>>>,
    assignment: &mut BTreeMap<Simplex, Subspace<F2>>,
    best: &mut Option<(usize, BTreeMap<Simplex, Subspace<F2>>)>,
) {
    if position == component.len() {
        let total: usize = assignment.values().map(|s| s.dim()).sum();
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            *best = Some((total, assignment.clone()));
        }
        return;
    }
    let simplex = &simplices[component[position]];
    for candidate in &table[&sheaf.dim(simplex)] {
        assignment.insert(simplex.clone(), candidate.clone());
        let consistent = covers.iter().all(|(s, t)| {
            match (assignment.get(s), assignment.get(t)) {
                (Some(es), Some(et)) => image_of(sheaf.restriction(s, t), es) == *et,
                _ => true,
            }
        });
        if consistent {
            search_epi(
                sheaf, simplices, component, position + 1, covers, table, assignment, best,
            );
        }
        assignment.remove(simplex);
    }
}

/// The minimal quotient-monocosheaf kernels by exhaustive enumeration:
/// validity means extensions carry kernels into kernels and the induced
/// quotient maps are injective.
pub fn brute_force_min_kernels(
    cosheaf: &CellCosheaf<F2>,
) -> BTreeMap<Simplex, Subspace<F2>> {
    let simplices: Vec<Simplex> = cosheaf.base.carrier().cloned().collect();
    let covers = cosheaf.base.carrier_covers();
    let subspace_table: BTreeMap<usize, Vec<Subspace<F2>>> = simplices
        .iter()
        .map(|s| cosheaf.dim(s))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|n| (n, all_subspaces(n)))
        .collect();

    let mut best: BTreeMap<Simplex, Subspace<F2>> = BTreeMap::new();
    for component in covering_components(&simplices, &covers) {
        let local_covers: Vec<&(Simplex, Simplex)> = covers
            .iter()
            .filter(|(s, _)| component.iter().any(|&i| simplices[i] == *s))
            .collect();
        let mut assignment: BTreeMap<Simplex, Subspace<F2>> = BTreeMap::new();
        let mut best_local: Option<(usize, BTreeMap<Simplex, Subspace<F2>>)> = None;
        search_mono(
            cosheaf,
            &simplices,
            &component,
            0,
            &local_covers,
            &subspace_table,
            &mut assignment,
            &mut best_local,
        );
        let (_, family) = best_local.expect("the full family is always valid");
        best.extend(family);
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn search_mono(
    cosheaf: &CellCosheaf<F2>,
    simplices: &[Simplex],
    component: &[usize],
    position: usize,
    covers: &[&(Simplex, Simplex)],
    table: &BTreeMap<usize, Vec<Subspace<F2>>>,
    assignment: &mut BTreeMap<Simplex, Subspace<F2>>,
    best: &mut Option<(usize, BTreeMap<Simplex, Subspace<F2>>)>,
) {
    if position == component.len() {
        let total: usize = assignment.values().map(|s| s.dim()).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, assignment.clone()));
        }
        return;
    }
    let simplex = &simplices[component[position]];
    for candidate in &table[&cosheaf.dim(simplex)] {
        assignment.insert(simplex.clone(), candidate.clone());
        let consistent = covers.iter().all(|(s, t)| {
            match (assignment.get(s), assignment.get(t)) {
                (Some(ks), Some(kt)) => {
                    let ext = cosheaf.extension(s, t);
                    // well-defined: extension image of the kernel stays in it
                    let well_defined = ks.contains_subspace(&image_of(ext, kt));
                    // injective: the preimage of the kernel is the kernel
                    let injective = plsys::exactlin::preimage(ext, ks)
                        .map(|pre| kt.contains_subspace(&pre))
                        .unwrap_or(false);
                    well_defined && injective
                }
                _ => true,
            }
        });
        if consistent {
            search_mono(
                cosheaf, simplices, component, position + 1, covers, table, assignment, best,
            );
        }
        assignment.remove(simplex);
    }
}
