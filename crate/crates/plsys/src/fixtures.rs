//! Ground-truth fixtures: desk models of the three worked examples, the
//! étale opens used to probe them, and seeded random generators for the
//! property suites. Fixture generators are code, not checked-in blobs, so
//! the desk models stay auditable.
//!
//! The plane with a marked origin is truncated to a disk: the cone over a
//! hexagon whose outer circle is the ideal frontier. Quotients by the
//! central fiber are realized by simplicial cones. The sphere examples live
//! on the five-vertex double cone over a triangle.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::Rng;

use crate::bisheaf::Bisheaf;
use crate::cellsheaf::{CellCosheaf, CellSheaf};
use crate::etale::EtaleOpen;
use crate::exactlin::Matrix;
use crate::field::Field;
use crate::simplicial::{
    ComplexHandle, Simplex, SimplicialComplex, SimplicialMap, SimplicialPair,
};

// ---------------------------------------------------------------------------
// bases

/// The truncated-plane base: cone over a hexagon with the outer circle as
/// ideal frontier. Vertex 0 is the origin; the carrier has 13 simplices.
pub fn disk_base() -> SimplicialPair {
    let names: Vec<String> = std::iter::once("c".to_owned())
        .chain((0..6).map(|i| format!("p{i}")))
        .collect();
    let tris: Vec<Vec<String>> = (0..6)
        .map(|i| {
            vec![
                "c".to_owned(),
                format!("p{i}"),
                format!("p{}", (i + 1) % 6),
            ]
        })
        .collect();
    let k = SimplicialComplex::build(names, &tris).unwrap();
    let boundary = k
        .simplices()
        .filter(|s| s.position(0).is_none())
        .cloned()
        .collect();
    SimplicialPair::new(k, boundary).unwrap()
}

/// The two-sphere base: double cone over a triangle. Vertex names: n, s,
/// e0, e1, e2; s plays the origin in the second Example 3 map.
pub fn sphere_base() -> SimplicialPair {
    let names: Vec<String> = ["n", "s", "e0", "e1", "e2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut tris = Vec::new();
    for i in 0..3 {
        tris.push(vec![
            "n".to_owned(),
            format!("e{i}"),
            format!("e{}", (i + 1) % 3),
        ]);
        tris.push(vec![
            "s".to_owned(),
            format!("e{i}"),
            format!("e{}", (i + 1) % 3),
        ]);
    }
    SimplicialPair::whole(SimplicialComplex::build(names, &tris).unwrap())
}

/// The small truncated-plane base used by the chain-level desk models: cone
/// over a triangle with the outer circle as ideal frontier.
pub fn small_disk_base() -> SimplicialPair {
    let names: Vec<String> = std::iter::once("c".to_owned())
        .chain((0..3).map(|i| format!("p{i}")))
        .collect();
    let tris: Vec<Vec<String>> = (0..3)
        .map(|i| {
            vec![
                "c".to_owned(),
                format!("p{i}"),
                format!("p{}", (i + 1) % 3),
            ]
        })
        .collect();
    let k = SimplicialComplex::build(names, &tris).unwrap();
    let boundary = k
        .simplices()
        .filter(|s| s.position(0).is_none())
        .cloned()
        .collect();
    SimplicialPair::new(k, boundary).unwrap()
}

// ---------------------------------------------------------------------------
// hand-encoded example bisheaves

/// Example 1: the bisheaf of (r, phi, theta) -> (r, theta) in degree one.
/// Sheaf 0 at the origin star and 1 elsewhere; cosheaf 2 at the origin star
/// and 1 elsewhere, extending by 1 -> (1, 0).
pub fn ex1_bisheaf<S: Field>() -> Bisheaf<S> {
    let pair = disk_base();
    let center = Simplex::vertex(0);
    let sheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), usize::from(*s != center)))
        .collect();
    let cosheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), if *s == center { 2 } else { 1 }))
        .collect();
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        restrict.insert(
            (s.clone(), t.clone()),
            if sheaf_dims[&s] == 1 {
                Matrix::identity(1)
            } else {
                Matrix::zero(1, 0)
            },
        );
        extend.insert(
            (s.clone(), t.clone()),
            if cosheaf_dims[&s] == 2 {
                Matrix::from_int_rows(&[&[1], &[0]])
            } else {
                Matrix::identity(1)
            },
        );
    }
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = if *s == center {
                Matrix::zero(2, 0)
            } else {
                Matrix::identity(1)
            };
            (s.clone(), phi)
        })
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf: CellCosheaf::new(pair, cosheaf_dims, extend),
        vertical,
    }
}

/// Example 2: the same map out of the quotient collapsing the central
/// torus. Sheaf 1 everywhere with identity restrictions; cosheaf 0 at the
/// origin star and 1 elsewhere.
pub fn ex2_bisheaf<S: Field>() -> Bisheaf<S> {
    let pair = disk_base();
    let center = Simplex::vertex(0);
    let sheaf = CellSheaf::constant(pair.clone(), 1);
    let cosheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), usize::from(*s != center)))
        .collect();
    let extend = pair
        .carrier_covers()
        .into_iter()
        .map(|(s, t)| {
            let m = if cosheaf_dims[&s] == 1 && cosheaf_dims[&t] == 1 {
                Matrix::identity(1)
            } else {
                Matrix::zero(cosheaf_dims[&s], cosheaf_dims[&t])
            };
            ((s, t), m)
        })
        .collect();
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = if *s == center {
                Matrix::zero(0, 1)
            } else {
                Matrix::identity(1)
            };
            (s.clone(), phi)
        })
        .collect();
    Bisheaf {
        sheaf,
        cosheaf: CellCosheaf::new(pair, cosheaf_dims, extend),
        vertical,
    }
}

/// Which stratum of the Example 3 sphere a simplex belongs to.
fn ex3_stratum(pair: &SimplicialPair, s: &Simplex) -> u8 {
    let k = &pair.complex;
    let names: Vec<&str> = s.vertices().iter().map(|&v| k.vertex_name(v)).collect();
    if names == ["e0"] {
        0 // the distinguished point
    } else if names.iter().all(|n| n.starts_with('e')) {
        1 // the rest of the equator circle
    } else if names.contains(&"s") {
        2 // southern disk
    } else {
        3 // northern disk
    }
}

/// Example 3, first map: the degree-zero bisheaf of the torus-with-two-disks
/// map. Sheaf dimension 2 on the equator strata and 1 on the polar ones;
/// cosheaf constant 1; verticals (1 0) on the equator and identity on the
/// poles.
pub fn ex3_f_bisheaf<S: Field>() -> Bisheaf<S> {
    let pair = sphere_base();
    let dims_for = |st: u8| if st <= 1 { 2 } else { 1 };
    let sheaf_dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), dims_for(ex3_stratum(&pair, s))))
        .collect();
    let restrict = pair
        .carrier_covers()
        .into_iter()
        .map(|(s, t)| {
            let (ds, dt) = (sheaf_dims[&s], sheaf_dims[&t]);
            let m = match (ds, dt) {
                (2, 2) => Matrix::identity(2),
                (2, 1) => Matrix::from_int_rows(&[&[1, 0]]),
                (1, 1) => Matrix::identity(1),
                _ => unreachable!("equator strata never lie above polar ones"),
            };
            ((s, t), m)
        })
        .collect();
    let cosheaf = CellCosheaf::constant(pair.clone(), 1);
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = if sheaf_dims[&s] == 2 {
                Matrix::from_int_rows(&[&[1, 0]])
            } else {
                Matrix::identity(1)
            };
            (s.clone(), phi)
        })
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf,
        vertical,
    }
}

/// Example 3, second map: everything except one disk collapses to the
/// origin (the south pole). Sheaf and cosheaf constant 1; the restriction
/// out of the origin star and its vertical map are zero.
pub fn ex3_h_bisheaf<S: Field>() -> Bisheaf<S> {
    let pair = sphere_base();
    let origin = pair.complex.vertex_id("s").unwrap();
    let origin_vertex = Simplex::vertex(origin);
    let sheaf_dims: BTreeMap<Simplex, usize> =
        pair.carrier().map(|s| (s.clone(), 1)).collect();
    let restrict = pair
        .carrier_covers()
        .into_iter()
        .map(|(s, t)| {
            let m = if s == origin_vertex {
                Matrix::zero(1, 1)
            } else {
                Matrix::identity(1)
            };
            ((s, t), m)
        })
        .collect();
    let cosheaf = CellCosheaf::constant(pair.clone(), 1);
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = if *s == origin_vertex {
                Matrix::zero(1, 1)
            } else {
                Matrix::identity(1)
            };
            (s.clone(), phi)
        })
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), sheaf_dims, restrict),
        cosheaf,
        vertical,
    }
}

// ---------------------------------------------------------------------------
// étale opens

/// The identity étale open of a base.
pub fn identity_open(base: &SimplicialPair) -> EtaleOpen {
    EtaleOpen::identity(base.clone())
}

/// Annular étale open of a disk-like base: the origin vertex joins the
/// frontier, leaving the open ring of spokes and triangles.
pub fn annulus_open(base: &SimplicialPair) -> EtaleOpen {
    let mut boundary = base.boundary.clone();
    boundary.insert(Simplex::vertex(0));
    let pair = SimplicialPair::new(base.complex.clone(), boundary).unwrap();
    EtaleOpen::new(
        pair,
        SimplicialMap::identity(base.complex.clone()),
        base.clone(),
    )
    .unwrap()
}

/// Two-sheet unrolled annulus over the hexagonal disk: a 12-gon cone whose
/// psi wraps twice around the ring.
pub fn double_cover_annulus(base: &SimplicialPair) -> EtaleOpen {
    let ring = base.complex.vertex_count() - 1;
    let names: Vec<String> = std::iter::once("cc".to_owned())
        .chain((0..2 * ring).map(|i| format!("q{i}")))
        .collect();
    let tris: Vec<Vec<String>> = (0..2 * ring)
        .map(|i| {
            vec![
                "cc".to_owned(),
                format!("q{i}"),
                format!("q{}", (i + 1) % (2 * ring)),
            ]
        })
        .collect();
    let l = SimplicialComplex::build(names, &tris).unwrap();
    let boundary: BTreeSet<Simplex> = l
        .simplices()
        .filter(|s| s.position(0).is_none() || **s == Simplex::vertex(0))
        .cloned()
        .collect();
    let pair = SimplicialPair::new(l.clone(), boundary).unwrap();
    let vertex_map: Vec<u32> = std::iter::once(0)
        .chain((0..2 * ring).map(|i| 1 + (i % ring) as u32))
        .collect();
    let psi = SimplicialMap::new(l, base.complex.clone(), vertex_map).unwrap();
    EtaleOpen::new(pair, psi, base.clone()).unwrap()
}

// ---------------------------------------------------------------------------
// chain-level desk models

fn grid_torus_names(rows: usize, cols: usize) -> Vec<String> {
    let mut names = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            names.push(format!("t{i}x{j}"));
        }
    }
    names
}

fn grid_torus_triangles(rows: usize, cols: usize) -> Vec<Vec<String>> {
    let name = |i: usize, j: usize| format!("t{}x{}", i % rows, j % cols);
    let mut tris = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            tris.push(vec![name(i, j), name(i + 1, j), name(i + 1, j + 1)]);
            tris.push(vec![name(i, j), name(i, j + 1), name(i + 1, j + 1)]);
        }
    }
    tris
}

/// Product-triangulates each 2-simplex prism between two levels with the
/// staircase induced by the global vertex order of the torus.
fn prism_tets(
    bottom: impl Fn(&str) -> String,
    top: impl Fn(&str) -> String,
    triangles: &[Vec<String>],
    torus_order: &BTreeMap<String, usize>,
) -> Vec<Vec<String>> {
    let mut tets = Vec::new();
    for tri in triangles {
        let mut sorted: Vec<&String> = tri.iter().collect();
        sorted.sort_by_key(|n| torus_order[*n]);
        let (a, b, c) = (sorted[0], sorted[1], sorted[2]);
        tets.push(vec![bottom(a), bottom(b), bottom(c), top(c)]);
        tets.push(vec![bottom(a), bottom(b), top(b), top(c)]);
        tets.push(vec![bottom(a), top(a), top(b), top(c)]);
    }
    tets
}

/// The Example 1 desk model: the thickened torus (3x3 grid torus times an
/// interval) projecting onto the small truncated disk. The bottom level maps
/// to the origin, the top level wraps the theta circle onto the frontier
/// ring.
pub fn ex1_desk_map() -> (SimplicialMap, SimplicialPair) {
    let base = small_disk_base();
    let torus_names = grid_torus_names(3, 3);
    let torus_order: BTreeMap<String, usize> = torus_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let triangles = grid_torus_triangles(3, 3);
    let mut names: Vec<String> = Vec::new();
    for n in &torus_names {
        names.push(format!("{n}b"));
    }
    for n in &torus_names {
        names.push(format!("{n}u"));
    }
    let tets = prism_tets(
        |n| format!("{n}b"),
        |n| format!("{n}u"),
        &triangles,
        &torus_order,
    );
    let mut maximal = tets;
    // the two torus levels themselves
    for tri in &triangles {
        maximal.push(tri.iter().map(|n| format!("{n}b")).collect());
        maximal.push(tri.iter().map(|n| format!("{n}u")).collect());
    }
    let y = SimplicialComplex::build(names, &maximal).unwrap();
    let assoc: BTreeMap<String, String> = y
        .vertex_names()
        .iter()
        .map(|n| {
            let image = if n.ends_with('b') {
                "c".to_owned()
            } else {
                // theta column j of txixj maps to ring vertex pj
                let core = n.trim_end_matches('u');
                let j = core.rsplit('x').next().unwrap();
                format!("p{j}")
            };
            (n.clone(), image)
        })
        .collect();
    let f = SimplicialMap::from_names(y, base.complex.clone(), &assoc).unwrap();
    (f, base)
}

/// The Example 2 desk model: the Example 1 source with its bottom torus
/// coned off (the quotient by the central fiber realized simplicially).
pub fn ex2_desk_map() -> (SimplicialMap, SimplicialPair) {
    let base = small_disk_base();
    let torus_names = grid_torus_names(3, 3);
    let torus_order: BTreeMap<String, usize> = torus_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let triangles = grid_torus_triangles(3, 3);
    let mut names: Vec<String> = vec!["apex".to_owned()];
    for n in &torus_names {
        names.push(format!("{n}b"));
    }
    for n in &torus_names {
        names.push(format!("{n}u"));
    }
    let mut maximal = prism_tets(
        |n| format!("{n}b"),
        |n| format!("{n}u"),
        &triangles,
        &torus_order,
    );
    for tri in &triangles {
        maximal.push(tri.iter().map(|n| format!("{n}b")).collect());
        maximal.push(tri.iter().map(|n| format!("{n}u")).collect());
        // cone over the bottom level
        let mut cone: Vec<String> = vec!["apex".to_owned()];
        cone.extend(tri.iter().map(|n| format!("{n}b")));
        maximal.push(cone);
    }
    let y = SimplicialComplex::build(names, &maximal).unwrap();
    let assoc: BTreeMap<String, String> = y
        .vertex_names()
        .iter()
        .map(|n| {
            let image = if n == "apex" || n.ends_with('b') {
                "c".to_owned()
            } else {
                let core = n.trim_end_matches('u');
                let j = core.rsplit('x').next().unwrap();
                format!("p{j}")
            };
            (n.clone(), image)
        })
        .collect();
    let f = SimplicialMap::from_names(y, base.complex.clone(), &assoc).unwrap();
    (f, base)
}

/// The Example 3 source: the grid torus in diagonal coordinates with two
/// disks coned onto its two generator circles. Returns the complex together
/// with both maps (f projects to the equator, h collapses all but one disk
/// onto the origin).
pub fn ex3_desk_maps() -> (SimplicialMap, SimplicialMap, SimplicialPair) {
    let base = sphere_base();
    let torus_names = grid_torus_names(3, 3);
    let triangles = grid_torus_triangles(3, 3);
    let mut names = torus_names.clone();
    names.push("a".to_owned());
    names.push("b".to_owned());
    let mut maximal: Vec<Vec<String>> = triangles;
    // disk A: cone over the diagonal circle (u, u)
    for t in 0..3 {
        maximal.push(vec![
            "a".to_owned(),
            format!("t{t}x{t}"),
            format!("t{}x{}", (t + 1) % 3, (t + 1) % 3),
        ]);
    }
    // disk B: cone over the horizontal circle (u, 0)
    for u in 0..3 {
        maximal.push(vec![
            "b".to_owned(),
            format!("t{u}x0"),
            format!("t{}x0", (u + 1) % 3),
        ]);
    }
    let y = SimplicialComplex::build(names, &maximal).unwrap();
    // f: torus vertex (u, w) -> equator e_u; a -> south; b -> north
    let f_assoc: BTreeMap<String, String> = y
        .vertex_names()
        .iter()
        .map(|n| {
            let image = match n.as_str() {
                "a" => "s".to_owned(),
                "b" => "n".to_owned(),
                _ => {
                    let u = n
                        .trim_start_matches('t')
                        .split('x')
                        .next()
                        .unwrap();
                    format!("e{u}")
                }
            };
            (n.clone(), image)
        })
        .collect();
    let f = SimplicialMap::from_names(y.clone(), base.complex.clone(), &f_assoc).unwrap();
    // h: everything except the B disk collapses to the origin s
    let h_assoc: BTreeMap<String, String> = y
        .vertex_names()
        .iter()
        .map(|n| {
            let image = match n.as_str() {
                "b" => "e0".to_owned(),
                _ => "s".to_owned(),
            };
            (n.clone(), image)
        })
        .collect();
    let h = SimplicialMap::from_names(y, base.complex.clone(), &h_assoc).unwrap();
    (f, h, base)
}

// ---------------------------------------------------------------------------
// random generators for the property suites

/// A random complex with at most `max_total` simplices, drawn from small
/// one-dimensional shapes (face-closed 2-simplices already exceed six
/// simplices).
pub fn random_small_complex(rng: &mut StdRng, max_total: usize) -> ComplexHandle {
    loop {
        let vertices = rng.gen_range(1..=4usize);
        let edge_count = rng.gen_range(0..=3usize);
        let mut maximal: Vec<Vec<u32>> = (0..vertices as u32).map(|v| vec![v]).collect();
        for _ in 0..edge_count {
            let a = rng.gen_range(0..vertices) as u32;
            let b = rng.gen_range(0..vertices) as u32;
            if a != b {
                maximal.push(vec![a, b]);
            }
        }
        let complex = SimplicialComplex::build_indexed(vertices, &maximal).unwrap();
        if complex.simplex_count() <= max_total && complex.simplex_count() > 0 {
            return complex;
        }
    }
}

/// A random matrix over F2.
pub fn random_f2_matrix(
    rng: &mut StdRng,
    rows: usize,
    cols: usize,
) -> Matrix<crate::field::Fp<2>> {
    let data = (0..rows * cols)
        .map(|_| crate::field::Fp::<2>::new(rng.gen_range(0..2)))
        .collect();
    Matrix::new(rows, cols, data)
}

/// A random F2 sheaf on a pair: random stalk dimensions up to `max_dim` and
/// random restriction matrices (one-dimensional bases have no commuting
/// squares to violate).
pub fn random_f2_sheaf(
    rng: &mut StdRng,
    pair: &SimplicialPair,
    max_dim: usize,
) -> CellSheaf<crate::field::Fp<2>> {
    let dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), rng.gen_range(0..=max_dim)))
        .collect();
    let restrict = pair
        .carrier_covers()
        .into_iter()
        .map(|(s, t)| {
            let m = random_f2_matrix(rng, dims[&t], dims[&s]);
            ((s, t), m)
        })
        .collect();
    CellSheaf::new(pair.clone(), dims, restrict)
}

pub fn random_f2_cosheaf(
    rng: &mut StdRng,
    pair: &SimplicialPair,
    max_dim: usize,
) -> CellCosheaf<crate::field::Fp<2>> {
    let dims: BTreeMap<Simplex, usize> = pair
        .carrier()
        .map(|s| (s.clone(), rng.gen_range(0..=max_dim)))
        .collect();
    let extend = pair
        .carrier_covers()
        .into_iter()
        .map(|(s, t)| {
            let m = random_f2_matrix(rng, dims[&s], dims[&t]);
            ((s, t), m)
        })
        .collect();
    CellCosheaf::new(pair.clone(), dims, extend)
}

fn random_invertible<S: Field>(rng: &mut StdRng, n: usize) -> Matrix<S> {
    // unit lower times unit upper triangular, entries in a small range
    let mut lower = Matrix::identity(n);
    let mut upper = Matrix::identity(n);
    for r in 0..n {
        for c in 0..n {
            if r > c {
                lower.set(r, c, S::from_int(rng.gen_range(-2..3)));
            } else if r < c {
                upper.set(r, c, S::from_int(rng.gen_range(-2..3)));
            }
        }
    }
    lower.mul(&upper)
}

/// A random isobisheaf: a conjugated constant functor pair with an
/// arbitrary (possibly degenerate) global vertical block.
pub fn random_conjugated_bisheaf<S: Field>(
    rng: &mut StdRng,
    pair: &SimplicialPair,
    dim: usize,
) -> Bisheaf<S> {
    let p: BTreeMap<Simplex, Matrix<S>> = pair
        .carrier()
        .map(|s| (s.clone(), random_invertible(rng, dim)))
        .collect();
    let q: BTreeMap<Simplex, Matrix<S>> = pair
        .carrier()
        .map(|s| (s.clone(), random_invertible(rng, dim)))
        .collect();
    let mut lambda = Matrix::zero(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            lambda.set(r, c, S::from_int(rng.gen_range(-1..2)));
        }
    }
    let dims: BTreeMap<Simplex, usize> = pair.carrier().map(|s| (s.clone(), dim)).collect();
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let r = p[&t].mul(&p[&s].inverse().expect("invertible"));
        restrict.insert((s.clone(), t.clone()), r);
        let e = q[&s].mul(&q[&t].inverse().expect("invertible"));
        extend.insert((s, t), e);
    }
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = q[s].mul(&lambda.mul(&p[s].inverse().expect("invertible")));
            (s.clone(), phi)
        })
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), dims.clone(), restrict),
        cosheaf: CellCosheaf::new(pair.clone(), dims, extend),
        vertical,
    }
}

/// A random rank-one bisheaf from node potentials: restriction and
/// extension scalars are potential quotients, the vertical scalar is a
/// global multiple of the compatible ratio (possibly zero).
pub fn random_rank_one_bisheaf<S: Field>(rng: &mut StdRng, pair: &SimplicialPair) -> Bisheaf<S> {
    let potential = |rng: &mut StdRng| -> S {
        let v = rng.gen_range(1..4i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        S::from_int(v)
    };
    let a: BTreeMap<Simplex, S> = pair.carrier().map(|s| (s.clone(), potential(rng))).collect();
    let b: BTreeMap<Simplex, S> = pair.carrier().map(|s| (s.clone(), potential(rng))).collect();
    let scale = S::from_int(rng.gen_range(0..3));
    let dims: BTreeMap<Simplex, usize> = pair.carrier().map(|s| (s.clone(), 1)).collect();
    let mut restrict = BTreeMap::new();
    let mut extend = BTreeMap::new();
    for (s, t) in pair.carrier_covers() {
        let r = a[&t].clone() * a[&s].inv().expect("nonzero potential");
        restrict.insert((s.clone(), t.clone()), Matrix::new(1, 1, vec![r]));
        let e = b[&s].clone() * b[&t].inv().expect("nonzero potential");
        extend.insert((s, t), Matrix::new(1, 1, vec![e]));
    }
    let vertical = pair
        .carrier()
        .map(|s| {
            let phi = b[s].clone() * a[s].inv().expect("nonzero") * scale.clone();
            (s.clone(), Matrix::new(1, 1, vec![phi]))
        })
        .collect();
    Bisheaf {
        sheaf: CellSheaf::new(pair.clone(), dims.clone(), restrict),
        cosheaf: CellCosheaf::new(pair.clone(), dims, extend),
        vertical,
    }
}

/// Random pseudo-manifold-with-frontier bases on which identity étale opens
/// validate: circles, open intervals, disks, and the two-sphere.
pub fn random_etale_base(rng: &mut StdRng) -> SimplicialPair {
    match rng.gen_range(0..4u8) {
        0 => {
            // circle with 3..6 vertices
            let n = rng.gen_range(3..=6usize);
            let edges: Vec<Vec<u32>> = (0..n)
                .map(|i| vec![i as u32, ((i + 1) % n) as u32])
                .collect();
            SimplicialPair::whole(SimplicialComplex::build_indexed(n, &edges).unwrap())
        }
        1 => {
            // open interval: a path with ideal endpoints
            let n = rng.gen_range(2..=5usize);
            let edges: Vec<Vec<u32>> = (0..n).map(|i| vec![i as u32, i as u32 + 1]).collect();
            let k = SimplicialComplex::build_indexed(n + 1, &edges).unwrap();
            let boundary: BTreeSet<Simplex> =
                [Simplex::vertex(0), Simplex::vertex(n as u32)].into_iter().collect();
            SimplicialPair::new(k, boundary).unwrap()
        }
        2 => {
            // disk: cone over a polygon with ideal frontier
            let n = rng.gen_range(3..=6usize);
            let tris: Vec<Vec<u32>> = (0..n)
                .map(|i| vec![0, 1 + i as u32, 1 + ((i + 1) % n) as u32])
                .collect();
            let k = SimplicialComplex::build_indexed(n + 1, &tris).unwrap();
            let boundary = k
                .simplices()
                .filter(|s| s.position(0).is_none())
                .cloned()
                .collect();
            SimplicialPair::new(k, boundary).unwrap()
        }
        _ => sphere_base(),
    }
}
