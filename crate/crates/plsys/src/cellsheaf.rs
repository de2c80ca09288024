//! Constructible sheaves and cosheaves as functors on the face poset of a
//! simplicial pair, valued in finite-dimensional vector spaces.
//!
//! A sheaf stores one matrix per covering relation s < t, mapping the value
//! on st s to the value on st t (st t is the smaller open). A cosheaf stores
//! the matrices in the opposite direction. Arbitrary nested-star maps are
//! compositions along saturated chains; validation checks that all such
//! compositions are path-independent.
//!
//! Epification computes the maximal sub-episheaf as the greatest fixed point
//! of two alternating shrink operators; monofication computes the minimal
//! quotient-monocosheaf as the order-dual least fixed point on kernels.

use std::collections::BTreeMap;
use std::fmt;

use crate::exactlin::{
    image_basis, induced_map, meet_join, preimage, InducedMode, Matrix, Subspace,
};
use crate::field::Field;
use crate::simplicial::{Simplex, SimplicialPair};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctorViolation {
    MissingDim {
        simplex: String,
    },
    MissingMap {
        face: String,
        coface: String,
    },
    WrongShape {
        face: String,
        coface: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Two composites around a covering square disagree. Both composite
    /// matrices are reported.
    NonCommutingSquare {
        base: String,
        mid1: String,
        mid2: String,
        top: String,
        composite1: Vec<Vec<String>>,
        composite2: Vec<Vec<String>>,
    },
    /// A sheaf/cosheaf map fails to commute with the structure maps.
    MapSquare {
        face: String,
        coface: String,
        composite1: Vec<Vec<String>>,
        composite2: Vec<Vec<String>>,
    },
    SubspaceNotPreserved {
        simplex: String,
        detail: String,
    },
}

impl fmt::Display for FunctorViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctorViolation::MissingDim { simplex } => {
                write!(f, "missing dimension entry for {simplex}")
            }
            FunctorViolation::MissingMap { face, coface } => {
                write!(f, "missing structure map for covering relation {face} < {coface}")
            }
            FunctorViolation::WrongShape {
                face,
                coface,
                expected,
                got,
            } => write!(
                f,
                "structure map for {face} < {coface} has shape {}x{}, expected {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            FunctorViolation::NonCommutingSquare {
                base,
                mid1,
                mid2,
                top,
                composite1,
                composite2,
            } => write!(
                f,
                "square {base} < {mid1},{mid2} < {top} does not commute: via {mid1} = {composite1:?}, via {mid2} = {composite2:?}"
            ),
            FunctorViolation::MapSquare {
                face,
                coface,
                composite1,
                composite2,
            } => write!(
                f,
                "map square at {face} < {coface} does not commute: {composite1:?} vs {composite2:?}"
            ),
            FunctorViolation::SubspaceNotPreserved { simplex, detail } => {
                write!(f, "subspace family not preserved at {simplex}: {detail}")
            }
        }
    }
}

fn render<S: Field>(m: &Matrix<S>) -> Vec<Vec<String>> {
    m.render_rows()
}

/// A constructible cellular sheaf: dimensions per carrier simplex and a
/// restriction matrix per covering relation, of shape dim(t) x dim(s) for
/// s < t (the value on st s restricts to the value on st t).
#[derive(Clone, PartialEq, Eq)]
pub struct CellSheaf<S> {
    pub base: SimplicialPair,
    dims: BTreeMap<Simplex, usize>,
    restrict: BTreeMap<(Simplex, Simplex), Matrix<S>>,
}

impl<S: Field> fmt::Debug for CellSheaf<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellSheaf({:?}, {} stalks)", self.base, self.dims.len())
    }
}

/// A constructible cellular cosheaf: extension matrices have shape
/// dim(s) x dim(t) for s < t (the value on st t extends to the value on
/// st s, since st t is contained in st s).
#[derive(Clone, PartialEq, Eq)]
pub struct CellCosheaf<S> {
    pub base: SimplicialPair,
    dims: BTreeMap<Simplex, usize>,
    extend: BTreeMap<(Simplex, Simplex), Matrix<S>>,
}

impl<S: Field> fmt::Debug for CellCosheaf<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellCosheaf({:?}, {} stalks)", self.base, self.dims.len())
    }
}

impl<S: Field> CellSheaf<S> {
    pub fn new(
        base: SimplicialPair,
        dims: BTreeMap<Simplex, usize>,
        restrict: BTreeMap<(Simplex, Simplex), Matrix<S>>,
    ) -> Self {
        CellSheaf {
            base,
            dims,
            restrict,
        }
    }

    /// Constant sheaf: every stalk `dim`, every restriction the identity.
    pub fn constant(base: SimplicialPair, dim: usize) -> Self {
        let dims = base.carrier().map(|s| (s.clone(), dim)).collect();
        let restrict = base
            .carrier_covers()
            .into_iter()
            .map(|pair| (pair, Matrix::identity(dim)))
            .collect();
        CellSheaf {
            base,
            dims,
            restrict,
        }
    }

    pub fn dim(&self, s: &Simplex) -> usize {
        self.dims[s]
    }

    pub fn dims(&self) -> &BTreeMap<Simplex, usize> {
        &self.dims
    }

    pub fn restriction(&self, face: &Simplex, coface: &Simplex) -> &Matrix<S> {
        &self.restrict[&(face.clone(), coface.clone())]
    }

    pub fn restrictions(&self) -> &BTreeMap<(Simplex, Simplex), Matrix<S>> {
        &self.restrict
    }

    /// Composite restriction along the canonical saturated chain from `from`
    /// to `to`; path independence is guaranteed by validation.
    pub fn compose_restriction(&self, from: &Simplex, to: &Simplex) -> Matrix<S> {
        assert!(from.is_face_of(to), "compose_restriction needs from <= to");
        let mut current = from.clone();
        let mut acc = Matrix::identity(self.dim(from));
        for &v in to.vertices() {
            if current.position(v).is_some() {
                continue;
            }
            let mut verts = current.vertices().to_vec();
            verts.push(v);
            let next = Simplex::new(verts);
            acc = self.restriction(&current, &next).mul(&acc);
            current = next;
        }
        acc
    }

    /// Keeps only the data over a sub-pair with the same total complex and a
    /// larger boundary.
    pub fn restrict_to_pair(&self, pair: &SimplicialPair) -> Self {
        assert_eq!(*self.base.complex, *pair.complex);
        let dims = self
            .dims
            .iter()
            .filter(|(s, _)| pair.is_carrier(s))
            .map(|(s, d)| (s.clone(), *d))
            .collect();
        let restrict = self
            .restrict
            .iter()
            .filter(|((s, t), _)| pair.is_carrier(s) && pair.is_carrier(t))
            .map(|(k, m)| (k.clone(), m.clone()))
            .collect();
        CellSheaf {
            base: pair.clone(),
            dims,
            restrict,
        }
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        let complex = &self.base.complex;
        for s in self.base.carrier() {
            if !self.dims.contains_key(s) {
                return Err(FunctorViolation::MissingDim {
                    simplex: complex.simplex_key(s),
                });
            }
        }
        for (s, t) in self.base.carrier_covers() {
            let Some(m) = self.restrict.get(&(s.clone(), t.clone())) else {
                return Err(FunctorViolation::MissingMap {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                });
            };
            let expected = (self.dims[&t], self.dims[&s]);
            if (m.rows(), m.cols()) != expected {
                return Err(FunctorViolation::WrongShape {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                    expected,
                    got: (m.rows(), m.cols()),
                });
            }
        }
        for (s, t1, t2, u) in self.base.carrier_squares() {
            let via1 = self.restriction(&t1, &u).mul(self.restriction(&s, &t1));
            let via2 = self.restriction(&t2, &u).mul(self.restriction(&s, &t2));
            if via1 != via2 {
                return Err(FunctorViolation::NonCommutingSquare {
                    base: complex.simplex_key(&s),
                    mid1: complex.simplex_key(&t1),
                    mid2: complex.simplex_key(&t2),
                    top: complex.simplex_key(&u),
                    composite1: render(&via1),
                    composite2: render(&via2),
                });
            }
        }
        Ok(())
    }

    /// True iff every covering restriction is surjective. Compositions of
    /// surjections are surjective, so this settles all nested basic opens.
    pub fn is_episheaf(&self) -> bool {
        self.base.carrier_covers().into_iter().all(|(s, t)| {
            let m = self.restriction(&s, &t);
            m.rank() == self.dims[&t]
        })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }
}

impl<S: Field> CellCosheaf<S> {
    pub fn new(
        base: SimplicialPair,
        dims: BTreeMap<Simplex, usize>,
        extend: BTreeMap<(Simplex, Simplex), Matrix<S>>,
    ) -> Self {
        CellCosheaf { base, dims, extend }
    }

    pub fn constant(base: SimplicialPair, dim: usize) -> Self {
        let dims = base.carrier().map(|s| (s.clone(), dim)).collect();
        let extend = base
            .carrier_covers()
            .into_iter()
            .map(|pair| (pair, Matrix::identity(dim)))
            .collect();
        CellCosheaf { base, dims, extend }
    }

    pub fn dim(&self, s: &Simplex) -> usize {
        self.dims[s]
    }

    pub fn dims(&self) -> &BTreeMap<Simplex, usize> {
        &self.dims
    }

    pub fn extension(&self, face: &Simplex, coface: &Simplex) -> &Matrix<S> {
        &self.extend[&(face.clone(), coface.clone())]
    }

    pub fn extensions(&self) -> &BTreeMap<(Simplex, Simplex), Matrix<S>> {
        &self.extend
    }

    /// Composite extension mapping the value at `to` down to the value at
    /// `from`, along the canonical saturated chain.
    pub fn compose_extension(&self, from: &Simplex, to: &Simplex) -> Matrix<S> {
        assert!(from.is_face_of(to), "compose_extension needs from <= to");
        let mut current = from.clone();
        let mut acc = Matrix::identity(self.dim(from));
        for &v in to.vertices() {
            if current.position(v).is_some() {
                continue;
            }
            let mut verts = current.vertices().to_vec();
            verts.push(v);
            let next = Simplex::new(verts);
            acc = acc.mul(self.extension(&current, &next));
            current = next;
        }
        acc
    }

    pub fn restrict_to_pair(&self, pair: &SimplicialPair) -> Self {
        assert_eq!(*self.base.complex, *pair.complex);
        let dims = self
            .dims
            .iter()
            .filter(|(s, _)| pair.is_carrier(s))
            .map(|(s, d)| (s.clone(), *d))
            .collect();
        let extend = self
            .extend
            .iter()
            .filter(|((s, t), _)| pair.is_carrier(s) && pair.is_carrier(t))
            .map(|(k, m)| (k.clone(), m.clone()))
            .collect();
        CellCosheaf {
            base: pair.clone(),
            dims,
            extend,
        }
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        let complex = &self.base.complex;
        for s in self.base.carrier() {
            if !self.dims.contains_key(s) {
                return Err(FunctorViolation::MissingDim {
                    simplex: complex.simplex_key(s),
                });
            }
        }
        for (s, t) in self.base.carrier_covers() {
            let Some(m) = self.extend.get(&(s.clone(), t.clone())) else {
                return Err(FunctorViolation::MissingMap {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                });
            };
            let expected = (self.dims[&s], self.dims[&t]);
            if (m.rows(), m.cols()) != expected {
                return Err(FunctorViolation::WrongShape {
                    face: complex.simplex_key(&s),
                    coface: complex.simplex_key(&t),
                    expected,
                    got: (m.rows(), m.cols()),
                });
            }
        }
        for (s, t1, t2, u) in self.base.carrier_squares() {
            let via1 = self.extension(&s, &t1).mul(self.extension(&t1, &u));
            let via2 = self.extension(&s, &t2).mul(self.extension(&t2, &u));
            if via1 != via2 {
                return Err(FunctorViolation::NonCommutingSquare {
                    base: complex.simplex_key(&s),
                    mid1: complex.simplex_key(&t1),
                    mid2: complex.simplex_key(&t2),
                    top: complex.simplex_key(&u),
                    composite1: render(&via1),
                    composite2: render(&via2),
                });
            }
        }
        Ok(())
    }

    /// True iff every covering extension is injective.
    pub fn is_monocosheaf(&self) -> bool {
        self.base.carrier_covers().into_iter().all(|(s, t)| {
            let m = self.extension(&s, &t);
            m.rank() == self.dims[&t]
        })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }
}

/// A subfunctor of a sheaf: one subspace of each stalk, carried into each
/// other by the restrictions.
#[derive(Clone, PartialEq, Eq)]
pub struct SheafSubfunctor<S> {
    pub parent: CellSheaf<S>,
    pub components: BTreeMap<Simplex, Subspace<S>>,
}

impl<S: Field> fmt::Debug for SheafSubfunctor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SheafSubfunctor(total dim {})", self.total_dim())
    }
}

impl<S: Field> SheafSubfunctor<S> {
    pub fn total_dim(&self) -> usize {
        self.components.values().map(|c| c.dim()).sum()
    }

    pub fn is_full(&self) -> bool {
        self.components.values().all(|c| c.is_full())
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        for (s, t) in self.parent.base.carrier_covers() {
            let image = Subspace::from_spanning(
                &self
                    .parent
                    .restriction(&s, &t)
                    .mul(self.components[&s].basis()),
            );
            if !self.components[&t].contains_subspace(&image) {
                return Err(FunctorViolation::SubspaceNotPreserved {
                    simplex: self.parent.base.complex.simplex_key(&t),
                    detail: "restriction image escapes the component".into(),
                });
            }
        }
        Ok(())
    }

    /// The subfunctor as a sheaf in the canonical component bases.
    pub fn materialize(&self) -> CellSheaf<S> {
        let dims = self
            .components
            .iter()
            .map(|(s, c)| (s.clone(), c.dim()))
            .collect();
        let restrict = self
            .parent
            .base
            .carrier_covers()
            .into_iter()
            .map(|(s, t)| {
                let m = induced_map(
                    self.parent.restriction(&s, &t),
                    &self.components[&s],
                    &self.components[&t],
                    InducedMode::Sub,
                )
                .expect("subfunctor components are restriction-closed");
                ((s, t), m)
            })
            .collect();
        CellSheaf {
            base: self.parent.base.clone(),
            dims,
            restrict,
        }
    }
}

/// A quotient of a cosheaf by a kernel family that the extensions preserve.
#[derive(Clone, PartialEq, Eq)]
pub struct CosheafQuotient<S> {
    pub parent: CellCosheaf<S>,
    pub kernels: BTreeMap<Simplex, Subspace<S>>,
}

impl<S: Field> fmt::Debug for CosheafQuotient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CosheafQuotient(total kernel dim {})", self.total_kernel_dim())
    }
}

impl<S: Field> CosheafQuotient<S> {
    pub fn total_kernel_dim(&self) -> usize {
        self.kernels.values().map(|c| c.dim()).sum()
    }

    pub fn is_zero_kernel(&self) -> bool {
        self.kernels.values().all(|c| c.is_zero())
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        for (s, t) in self.parent.base.carrier_covers() {
            let image = Subspace::from_spanning(
                &self
                    .parent
                    .extension(&s, &t)
                    .mul(self.kernels[&t].basis()),
            );
            if !self.kernels[&s].contains_subspace(&image) {
                return Err(FunctorViolation::SubspaceNotPreserved {
                    simplex: self.parent.base.complex.simplex_key(&s),
                    detail: "extension image of the kernel escapes the kernel".into(),
                });
            }
        }
        Ok(())
    }

    /// The quotient as a cosheaf in the canonical quotient bases.
    pub fn materialize(&self) -> CellCosheaf<S> {
        let dims = self
            .kernels
            .iter()
            .map(|(s, k)| (s.clone(), k.ambient_dim() - k.dim()))
            .collect();
        let extend = self
            .parent
            .base
            .carrier_covers()
            .into_iter()
            .map(|(s, t)| {
                let m = induced_map(
                    self.parent.extension(&s, &t),
                    &self.kernels[&t],
                    &self.kernels[&s],
                    InducedMode::Quotient,
                )
                .expect("kernel family is extension-closed");
                ((s, t), m)
            })
            .collect();
        CellCosheaf {
            base: self.parent.base.clone(),
            dims,
            extend,
        }
    }
}

/// Maximal sub-episheaf, as the greatest fixed point of the two shrink
/// operators (surjectivity repair and closure repair). The result is
/// independent of the sweep order.
pub fn epify<S: Field>(f: &CellSheaf<S>) -> SheafSubfunctor<S> {
    epify_with_order(f, &f.base.carrier_covers())
}

pub fn epify_with_order<S: Field>(
    f: &CellSheaf<S>,
    covers: &[(Simplex, Simplex)],
) -> SheafSubfunctor<S> {
    let mut components: BTreeMap<Simplex, Subspace<S>> = f
        .base
        .carrier()
        .map(|s| (s.clone(), Subspace::full(f.dim(s))))
        .collect();
    loop {
        let mut changed = false;
        // (A) surjectivity repair: E(t) <- E(t) meet restrict(E(s))
        for (s, t) in covers {
            let image =
                Subspace::from_spanning(&f.restriction(s, t).mul(components[s].basis()));
            let (meet, _) = meet_join(&components[t], &image).expect("same ambient");
            if meet != components[t] {
                components.insert(t.clone(), meet);
                changed = true;
            }
        }
        // (B) closure repair: E(s) <- E(s) meet preimage(restrict, E(t))
        for (s, t) in covers {
            let pre = preimage(f.restriction(s, t), &components[t]).expect("same ambient");
            let (meet, _) = meet_join(&components[s], &pre).expect("same ambient");
            if meet != components[s] {
                components.insert(s.clone(), meet);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // At the fixed point each covering restriction maps E(s) onto E(t).
    debug_assert!(covers.iter().all(|(s, t)| {
        let image = Subspace::from_spanning(&f.restriction(s, t).mul(components[s].basis()));
        image == components[t]
    }));
    SheafSubfunctor {
        parent: f.clone(),
        components,
    }
}

/// Minimal quotient-monocosheaf, as the least fixed point of the two grow
/// operators (well-definedness and injectivity repair) on kernel families.
pub fn monofy<S: Field>(f: &CellCosheaf<S>) -> CosheafQuotient<S> {
    monofy_with_order(f, &f.base.carrier_covers())
}

pub fn monofy_with_order<S: Field>(
    f: &CellCosheaf<S>,
    covers: &[(Simplex, Simplex)],
) -> CosheafQuotient<S> {
    let mut kernels: BTreeMap<Simplex, Subspace<S>> = f
        .base
        .carrier()
        .map(|s| (s.clone(), Subspace::zero(f.dim(s))))
        .collect();
    loop {
        let mut changed = false;
        // (A') well-definedness: kernel(s) <- kernel(s) join extend(kernel(t))
        for (s, t) in covers {
            let image = Subspace::from_spanning(&f.extension(s, t).mul(kernels[t].basis()));
            let (_, join) = meet_join(&kernels[s], &image).expect("same ambient");
            if join != kernels[s] {
                kernels.insert(s.clone(), join);
                changed = true;
            }
        }
        // (B') injectivity: kernel(t) <- kernel(t) join preimage(extend, kernel(s))
        for (s, t) in covers {
            let pre = preimage(f.extension(s, t), &kernels[s]).expect("same ambient");
            let (_, join) = meet_join(&kernels[t], &pre).expect("same ambient");
            if join != kernels[t] {
                kernels.insert(t.clone(), join);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    CosheafQuotient {
        parent: f.clone(),
        kernels,
    }
}

/// A sheaf map: a matrix per simplex commuting with the restrictions.
#[derive(Clone)]
pub struct SheafMap<S> {
    pub source: CellSheaf<S>,
    pub target: CellSheaf<S>,
    pub components: BTreeMap<Simplex, Matrix<S>>,
}

impl<S: Field> SheafMap<S> {
    pub fn identity(sheaf: &CellSheaf<S>) -> Self {
        let components = sheaf
            .dims()
            .iter()
            .map(|(s, &d)| (s.clone(), Matrix::identity(d)))
            .collect();
        SheafMap {
            source: sheaf.clone(),
            target: sheaf.clone(),
            components,
        }
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        for (s, t) in self.source.base.carrier_covers() {
            let via_target = self.target.restriction(&s, &t).mul(&self.components[&s]);
            let via_source = self.components[&t].mul(self.source.restriction(&s, &t));
            if via_target != via_source {
                return Err(FunctorViolation::MapSquare {
                    face: self.source.base.complex.simplex_key(&s),
                    coface: self.source.base.complex.simplex_key(&t),
                    composite1: render(&via_target),
                    composite2: render(&via_source),
                });
            }
        }
        Ok(())
    }

    /// Componentwise image, as a subfunctor of the target.
    pub fn image_subfunctor(&self) -> SheafSubfunctor<S> {
        let components = self
            .components
            .iter()
            .map(|(s, m)| (s.clone(), image_basis(m)))
            .collect();
        SheafSubfunctor {
            parent: self.target.clone(),
            components,
        }
    }
}

/// A cosheaf map: a matrix per simplex commuting with the extensions.
#[derive(Clone)]
pub struct CosheafMap<S> {
    pub source: CellCosheaf<S>,
    pub target: CellCosheaf<S>,
    pub components: BTreeMap<Simplex, Matrix<S>>,
}

impl<S: Field> CosheafMap<S> {
    pub fn identity(cosheaf: &CellCosheaf<S>) -> Self {
        let components = cosheaf
            .dims()
            .iter()
            .map(|(s, &d)| (s.clone(), Matrix::identity(d)))
            .collect();
        CosheafMap {
            source: cosheaf.clone(),
            target: cosheaf.clone(),
            components,
        }
    }

    pub fn validate(&self) -> Result<(), FunctorViolation> {
        for (s, t) in self.source.base.carrier_covers() {
            let via1 = self.components[&s].mul(self.source.extension(&s, &t));
            let via2 = self.target.extension(&s, &t).mul(&self.components[&t]);
            if via1 != via2 {
                return Err(FunctorViolation::MapSquare {
                    face: self.source.base.complex.simplex_key(&s),
                    coface: self.source.base.complex.simplex_key(&t),
                    composite1: render(&via1),
                    composite2: render(&via2),
                });
            }
        }
        Ok(())
    }
}

/// Map induced on maximal sub-episheaves by a sheaf map: the unique fill of
/// the inclusion square. Components are matrices in the canonical component
/// bases of the two subfunctors.
pub fn induced_epi_map<S: Field>(
    alpha: &SheafMap<S>,
    source_epi: &SheafSubfunctor<S>,
    target_epi: &SheafSubfunctor<S>,
) -> Result<BTreeMap<Simplex, Matrix<S>>, FunctorViolation> {
    let mut out = BTreeMap::new();
    for (s, m) in &alpha.components {
        let induced = induced_map(
            m,
            &source_epi.components[s],
            &target_epi.components[s],
            InducedMode::Sub,
        )
        .map_err(|e| FunctorViolation::SubspaceNotPreserved {
            simplex: alpha.source.base.complex.simplex_key(s),
            detail: e.to_string(),
        })?;
        out.insert(s.clone(), induced);
    }
    Ok(out)
}

/// Map induced on minimal quotient-monocosheaves by a cosheaf map: the
/// unique fill of the projection square, in the canonical quotient bases.
pub fn induced_mono_map<S: Field>(
    alpha: &CosheafMap<S>,
    source_mono: &CosheafQuotient<S>,
    target_mono: &CosheafQuotient<S>,
) -> Result<BTreeMap<Simplex, Matrix<S>>, FunctorViolation> {
    let mut out = BTreeMap::new();
    for (s, m) in &alpha.components {
        let induced = induced_map(
            m,
            &source_mono.kernels[s],
            &target_mono.kernels[s],
            InducedMode::Quotient,
        )
        .map_err(|e| FunctorViolation::SubspaceNotPreserved {
            simplex: alpha.source.base.complex.simplex_key(s),
            detail: e.to_string(),
        })?;
        out.insert(s.clone(), induced);
    }
    Ok(out)
}

/// Kernel subspace of the canonical quotient projection, fetched from the
/// quotient data (used when conjugating vertical maps).
pub fn quotient_data<S: Field>(q: &CosheafQuotient<S>, s: &Simplex) -> (Matrix<S>, usize) {
    let k = &q.kernels[s];
    (k.quotient_projection(), k.ambient_dim() - k.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rational;
    use crate::simplicial::{SimplicialComplex, SimplicialPair};
    use std::sync::Arc;

    type Q = Rational;
    type QM = Matrix<Q>;

    fn edge_pair() -> SimplicialPair {
        let k = SimplicialComplex::build_indexed(2, &[vec![0, 1]]).unwrap();
        SimplicialPair::whole(k)
    }

    fn triangle_pair() -> SimplicialPair {
        let k = SimplicialComplex::build_indexed(3, &[vec![0, 1, 2]]).unwrap();
        SimplicialPair::whole(k)
    }

    fn hexagon_cone_pair() -> SimplicialPair {
        // center vertex 0; ideal boundary = outer hexagon
        let tris: Vec<Vec<u32>> = (0..6).map(|i| vec![0, 1 + i, 1 + (i + 1) % 6]).collect();
        let k = SimplicialComplex::build_indexed(7, &tris).unwrap();
        let boundary = k
            .simplices()
            .filter(|s| s.vertices().iter().all(|&v| v != 0))
            .cloned()
            .collect();
        SimplicialPair::new(k, boundary).unwrap()
    }

    /// Example 1 shape: sheaf dim 0 at the center star, 1 elsewhere.
    fn ex1_sheaf() -> CellSheaf<Q> {
        let pair = hexagon_cone_pair();
        let center = Simplex::vertex(0);
        let dims: BTreeMap<Simplex, usize> = pair
            .carrier()
            .map(|s| (s.clone(), if *s == center { 0 } else { 1 }))
            .collect();
        let restrict = pair
            .carrier_covers()
            .into_iter()
            .map(|(s, t)| {
                let m = QM::zero(dims[&t], dims[&s]);
                let m = if dims[&s] == 1 && dims[&t] == 1 {
                    QM::identity(1)
                } else {
                    m
                };
                ((s, t), m)
            })
            .collect();
        CellSheaf::new(pair, dims, restrict)
    }

    #[test]
    fn constant_sheaf_validates_and_is_epi() {
        let f = CellSheaf::<Q>::constant(triangle_pair(), 1);
        f.validate().unwrap();
        assert!(f.is_episheaf());
        let c = CellCosheaf::<Q>::constant(triangle_pair(), 2);
        c.validate().unwrap();
        assert!(c.is_monocosheaf());
    }

    #[test]
    fn perturbed_square_reports_violation() {
        let mut f = CellSheaf::<Q>::constant(triangle_pair(), 1);
        let s = Simplex::vertex(0);
        let t = Simplex::new(vec![0, 1]);
        f.restrict
            .insert((s, t), QM::from_int_rows(&[&[2]]));
        let err = f.validate().unwrap_err();
        assert!(matches!(err, FunctorViolation::NonCommutingSquare { .. }));
    }

    #[test]
    fn epify_fixes_episheaf() {
        let f = CellSheaf::<Q>::constant(triangle_pair(), 2);
        let epi = epify(&f);
        assert!(epi.is_full());
        epi.validate().unwrap();
        assert!(epi.materialize().is_episheaf());
    }

    #[test]
    fn epify_collapses_ex1() {
        let f = ex1_sheaf();
        f.validate().unwrap();
        assert!(!f.is_episheaf());
        let epi = epify(&f);
        assert_eq!(epi.total_dim(), 0);
    }

    #[test]
    fn epify_sweep_order_independent() {
        let f = ex1_sheaf();
        let mut covers = f.base.carrier_covers();
        let forward = epify_with_order(&f, &covers);
        covers.reverse();
        let backward = epify_with_order(&f, &covers);
        assert_eq!(forward.components, backward.components);

        let g = CellSheaf::<Q>::constant(triangle_pair(), 2);
        let mut covers = g.base.carrier_covers();
        let fwd = epify_with_order(&g, &covers);
        covers.rotate_left(2);
        let rot = epify_with_order(&g, &covers);
        assert_eq!(fwd.components, rot.components);
    }

    #[test]
    fn epify_idempotent() {
        let f = ex1_sheaf();
        let once = epify(&f).materialize();
        let twice = epify(&once);
        assert!(twice.is_full());
    }

    #[test]
    fn monofy_fixes_monocosheaf() {
        let c = CellCosheaf::<Q>::constant(triangle_pair(), 2);
        let mono = monofy(&c);
        assert!(mono.is_zero_kernel());
        mono.validate().unwrap();
        assert!(mono.materialize().is_monocosheaf());
    }

    #[test]
    fn monofy_grows_kernel_and_propagates() {
        // edge a-b; dim 2 on the edge, 1 at a, 2 at b; extension to a kills
        // the second coordinate, so the kernel line propagates to b
        let pair = edge_pair();
        let a = Simplex::vertex(0);
        let b = Simplex::vertex(1);
        let ab = Simplex::new(vec![0, 1]);
        let dims: BTreeMap<_, _> = [(a.clone(), 1), (b.clone(), 2), (ab.clone(), 2)]
            .into_iter()
            .collect();
        let extend: BTreeMap<_, _> = [
            ((a.clone(), ab.clone()), QM::from_int_rows(&[&[1, 0]])),
            ((b.clone(), ab.clone()), QM::identity(2)),
        ]
        .into_iter()
        .collect();
        let c = CellCosheaf::new(pair, dims, extend);
        c.validate().unwrap();
        assert!(!c.is_monocosheaf());
        let mono = monofy(&c);
        let e1 = Subspace::from_vectors(
            2,
            &[vec![Q::from_int(0), Q::from_int(1)]],
        );
        assert_eq!(mono.kernels[&ab], e1);
        assert_eq!(mono.kernels[&b], e1);
        assert!(mono.kernels[&a].is_zero());
        assert!(mono.materialize().is_monocosheaf());
        mono.validate().unwrap();
    }

    #[test]
    fn monofy_collapses_ex2_style() {
        // dim 0 at the center star forces the whole quotient to zero
        let pair = hexagon_cone_pair();
        let center = Simplex::vertex(0);
        let dims: BTreeMap<Simplex, usize> = pair
            .carrier()
            .map(|s| (s.clone(), if *s == center { 0 } else { 1 }))
            .collect();
        let extend = pair
            .carrier_covers()
            .into_iter()
            .map(|(s, t)| {
                let m = if dims[&s] == 1 && dims[&t] == 1 {
                    QM::identity(1)
                } else {
                    QM::zero(dims[&s], dims[&t])
                };
                ((s, t), m)
            })
            .collect();
        let c = CellCosheaf::new(pair, dims, extend);
        c.validate().unwrap();
        let mono = monofy(&c);
        assert_eq!(mono.materialize().total_dim(), 0);
    }

    #[test]
    fn induced_maps_identity_and_zero() {
        let f = ex1_sheaf();
        let epi = epify(&f);
        let id = SheafMap::identity(&f);
        id.validate().unwrap();
        let induced = induced_epi_map(&id, &epi, &epi).unwrap();
        for (s, m) in &induced {
            assert_eq!(*m, QM::identity(epi.components[s].dim()));
        }

        let zero = SheafMap {
            source: f.clone(),
            target: f.clone(),
            components: f
                .dims()
                .iter()
                .map(|(s, &d)| (s.clone(), QM::zero(d, d)))
                .collect(),
        };
        zero.validate().unwrap();
        let induced = induced_epi_map(&zero, &epi, &epi).unwrap();
        for m in induced.values() {
            assert!(m.is_zero_matrix());
        }
    }

    #[test]
    fn image_of_episheaf_map_is_episheaf() {
        // Prop 3.5 shape: image of a map out of an episheaf is an episheaf
        let pair = triangle_pair();
        let e = CellSheaf::<Q>::constant(pair.clone(), 2);
        // target: dim 2 everywhere, maps identity; alpha collapses rank to 1
        let alpha = SheafMap {
            source: e.clone(),
            target: e.clone(),
            components: e
                .dims()
                .keys()
                .map(|s| (s.clone(), QM::from_int_rows(&[&[1, 0], &[0, 0]])))
                .collect(),
        };
        alpha.validate().unwrap();
        let image = alpha.image_subfunctor();
        image.validate().unwrap();
        assert!(image.materialize().is_episheaf());
    }

    #[test]
    fn restrict_to_pair_drops_boundary_data() {
        let f = ex1_sheaf();
        let mut boundary = f.base.boundary.clone();
        boundary.insert(Simplex::vertex(0));
        let smaller = SimplicialPair::new(f.base.complex.clone(), boundary).unwrap();
        let g = f.restrict_to_pair(&smaller);
        g.validate().unwrap();
        assert_eq!(g.dims().len(), f.dims().len() - 1);
        assert!(g.is_episheaf());
    }

    #[test]
    fn compose_restriction_walks_chains() {
        let f = CellSheaf::<Q>::constant(triangle_pair(), 1);
        let v = Simplex::vertex(0);
        let t = Simplex::new(vec![0, 1, 2]);
        assert_eq!(f.compose_restriction(&v, &t), QM::identity(1));
        assert_eq!(f.compose_restriction(&t, &t), QM::identity(1));
    }

    #[test]
    fn empty_complex_yields_empty_functors() {
        let k = SimplicialComplex::build_indexed(0, &[]).unwrap();
        let pair = SimplicialPair::whole(Arc::clone(&k));
        let f = CellSheaf::<Q>::constant(pair.clone(), 3);
        f.validate().unwrap();
        assert_eq!(f.total_dim(), 0);
        let epi = epify(&f);
        assert_eq!(epi.total_dim(), 0);
    }
}
