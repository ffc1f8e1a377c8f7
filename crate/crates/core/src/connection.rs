//! δ-connections on dg modules, twisted Atiyah cocycles and classes, flatness
//! and naturality of the Atiyah class.

use std::sync::Arc;

use crate::cohomology::is_coboundary;
use crate::derivation::{Derivation, DerivationMorphism};
use crate::error::{arg, Error, Result};
use crate::graded::{odd, sign_scalar, Degree, MultilinearMap};
use crate::module::{
    contract, dual_module, hom_module, hom_to_omega_end, end_module, tensor, tensor_elements, DgModule, ModuleElement,
    ModuleMorphism,
};
use crate::report::CheckReport;

/// A map `∇: E → Ω⊗E` over a derivation `D: A → Ω` of degree `r`, with
/// `∇(ae) = D(a)⊗e + (−1)^{r|a|} a∇(e)`. For `r = 0` this is a δ-connection,
/// for `r = −1` an h-connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    derivation: Derivation,
    module: Arc<DgModule>,
    dual: Arc<DgModule>,
    omega_e: Arc<DgModule>,
    values: Vec<ModuleElement>,
}

pub type DeltaConnection = Connection;

impl Connection {
    pub fn new(derivation: Derivation, module: Arc<DgModule>, values: Vec<ModuleElement>) -> Result<Self> {
        let omega = derivation.target().clone();
        if !omega.same_algebra(&module) {
            return arg("connection module and derivation live over different algebras");
        }
        if values.len() != module.rank() {
            return arg("one connection value per basis element required");
        }
        let omega_e = Arc::new(tensor(&omega, &module)?);
        let r = derivation.degree();
        for (i, v) in values.iter().enumerate() {
            if v.iter().any(|(j, _)| j >= omega_e.rank()) {
                return arg(format!("value on {} mentions an unknown basis index", module.basis().name(i)));
            }
            match v.degree(omega_e.basis()) {
                Degree::Zero => {}
                Degree::Homogeneous(d) if d == module.basis().degree(i) + r => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "connection value on {} must be homogeneous of degree {}",
                        module.basis().name(i),
                        module.basis().degree(i) + r
                    )))
                }
            }
        }
        let dual = Arc::new(dual_module(&omega));
        Ok(Connection { derivation, module, dual, omega_e, values })
    }

    /// The connection induced by the universal one with `∇(e_i) = 0`.
    pub fn trivial(derivation: Derivation, module: Arc<DgModule>) -> Self {
        let n = module.rank();
        Connection::new(derivation, module, vec![ModuleElement::zero(); n]).expect("zero values are valid")
    }

    pub fn derivation(&self) -> &Derivation {
        &self.derivation
    }

    pub fn degree(&self) -> i32 {
        self.derivation.degree()
    }

    pub fn module(&self) -> &Arc<DgModule> {
        &self.module
    }

    pub fn omega(&self) -> &Arc<DgModule> {
        self.derivation.target()
    }

    /// The dual `B` of `Ω`, whose elements are the directions of `∇_b`.
    pub fn directions(&self) -> &Arc<DgModule> {
        &self.dual
    }

    pub fn omega_tensor(&self) -> &Arc<DgModule> {
        &self.omega_e
    }

    pub fn values(&self) -> &[ModuleElement] {
        &self.values
    }

    pub fn extend(&self, v: &ModuleElement) -> ModuleElement {
        let omega = self.omega();
        let r = self.degree() as i64;
        let mut out = ModuleElement::zero();
        for (i, a) in v.iter() {
            let da = self.derivation.extend(a);
            if !da.is_zero() {
                out.add_assign(&tensor_elements(omega, &self.module, &da, &ModuleElement::basis(i)));
            }
            if self.values[i].is_zero() {
                continue;
            }
            for (deg, part) in a.by_degree() {
                out.add_signed(&self.values[i].left_mul(&part), odd(r * deg as i64));
            }
        }
        out
    }

    /// `∇_b v = ι_b ∇(v)`.
    pub fn covariant_derivative(&self, b: &ModuleElement, v: &ModuleElement) -> ModuleElement {
        contract(self.omega(), &self.module, b, &self.extend(v))
    }

    /// `(b, v) ↦ ∇_b v` over the k-bases of `B` and `E`.
    pub fn covariant_table(&self) -> MultilinearMap {
        let (b, e) = (&self.dual, &self.module);
        let images: Vec<ModuleElement> = (0..e.k_dim()).map(|v| self.extend(&e.k_element(v))).collect();
        MultilinearMap::from_fn(vec![b.k_degrees(), e.k_degrees()], e.k_degrees(), self.degree(), |t| {
            e.to_flat(&contract(self.omega(), e, &b.k_element(t[0]), &images[t[1]]))
        })
    }

    /// `∇ + Θ` for A-linear `Θ` given by its values on the basis.
    pub fn plus(&self, theta: &[ModuleElement]) -> Result<Connection> {
        if theta.len() != self.values.len() {
            return arg("one value per basis element required");
        }
        let values = self.values.iter().zip(theta).map(|(v, t)| v.add(t)).collect();
        Connection::new(self.derivation.clone(), self.module.clone(), values)
    }

    /// `∇ − ∇'` as an A-linear map `E → Ω⊗E`.
    pub fn difference(&self, other: &Connection) -> Result<ModuleMorphism> {
        if self.derivation != other.derivation || self.module != other.module {
            return arg("connections over different derivations or modules");
        }
        let images = self.values.iter().zip(&other.values).map(|(a, b)| a.sub(b)).collect();
        ModuleMorphism::new(self.module.clone(), self.omega_e.clone(), self.degree(), images)
    }
}

/// `At = ∇∘∂ − ∂∘∇` on the basis of `E`.
pub fn atiyah_values(conn: &Connection) -> Vec<ModuleElement> {
    let e = conn.module();
    (0..e.rank())
        .map(|l| {
            let mut v = conn.extend(e.diff_of(l));
            v.sub_assign(&conn.omega_tensor().apply_differential(conn.values().get(l).unwrap()));
            v
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AtiyahCocycle {
    /// `At` as a degree-1 A-linear map `E → Ω⊗E`.
    pub operator: ModuleMorphism,
    /// `Hom(E, Ω⊗E)`.
    pub hom: Arc<DgModule>,
    /// `At` in `Hom(E, Ω⊗E)`.
    pub hom_element: ModuleElement,
    /// `Ω ⊗ End(E)`.
    pub omega_end: Arc<DgModule>,
    /// `At` in `Ω ⊗ End(E)`.
    pub element: ModuleElement,
    /// `(b, e) ↦ (−1)^{|b|} ι_b At(e)` over the k-bases of `B` and `E`.
    pub bilinear: MultilinearMap,
}

pub fn atiyah_cocycle(conn: &Connection) -> Result<AtiyahCocycle> {
    if conn.degree() != 0 {
        return arg("Atiyah cocycles are defined for δ-connections (degree 0)");
    }
    let e = conn.module().clone();
    let omega_e = conn.omega_tensor().clone();
    let operator = ModuleMorphism::new(e.clone(), omega_e.clone(), 1, atiyah_values(conn))
        .map_err(|err| Error::Consistency(format!("Atiyah operator: {err}")))?;
    let hom = Arc::new(hom_module(&e, &omega_e)?);
    let hom_element = operator.as_hom_element();
    if !hom.apply_differential(&hom_element).is_zero() {
        return Err(Error::Consistency("Atiyah cocycle is not closed".into()));
    }
    let omega_end = Arc::new(tensor(conn.omega(), &end_module(&e)?)?);
    let element = hom_to_omega_end(conn.omega(), &e, &hom_element);
    if !omega_end.apply_differential(&element).is_zero() {
        return Err(Error::Consistency("Atiyah cocycle is not closed in Ω⊗End(E)".into()));
    }
    let b = conn.directions().clone();
    let images: Vec<ModuleElement> = (0..e.k_dim()).map(|v| operator.apply(&e.k_element(v))).collect();
    let bdeg = b.k_degrees();
    let bilinear = MultilinearMap::from_fn(vec![bdeg.clone(), e.k_degrees()], e.k_degrees(), 1, |t| {
        let v = contract(conn.omega(), &e, &b.k_element(t[0]), &images[t[1]]);
        e.to_flat(&v).scaled(&sign_scalar(odd(bdeg[t[0]] as i64)))
    });
    Ok(AtiyahCocycle { operator, hom, hom_element, omega_end, element, bilinear })
}

/// `∇_{∂b}e − ∂∇_b e + (−1)^{|b|}∇_b ∂e` over the k-bases, computed without
/// the Atiyah operator.
pub fn atiyah_bilinear_direct(conn: &Connection) -> MultilinearMap {
    let (b, e) = (conn.directions().clone(), conn.module().clone());
    let bdeg = b.k_degrees();
    MultilinearMap::from_fn(vec![bdeg.clone(), e.k_degrees()], e.k_degrees(), 1, |t| {
        let bb = b.k_element(t[0]);
        let ee = e.k_element(t[1]);
        let mut v = conn.covariant_derivative(&b.apply_differential(&bb), &ee);
        v.sub_assign(&e.apply_differential(&conn.covariant_derivative(&bb, &ee)));
        v.add_signed(&conn.covariant_derivative(&bb, &e.apply_differential(&ee)), odd(bdeg[t[0]] as i64));
        e.to_flat(&v)
    })
}

/// A cohomology class in `Hom(E, Ω⊗E)` together with its ambient complex.
#[derive(Debug, Clone)]
pub struct AtiyahClass {
    pub hom: Arc<DgModule>,
    pub representative: ModuleElement,
}

impl AtiyahClass {
    pub fn is_zero(&self) -> Result<bool> {
        Ok(is_coboundary(&self.hom, &self.representative)?.is_some())
    }

    pub fn equals(&self, other: &AtiyahClass) -> Result<bool> {
        if *self.hom != *other.hom {
            return arg("Atiyah classes live in different complexes");
        }
        Ok(is_coboundary(&self.hom, &self.representative.sub(&other.representative))?.is_some())
    }
}

pub fn atiyah_class(delta: &Derivation, e: &Arc<DgModule>) -> Result<AtiyahClass> {
    let c = atiyah_cocycle(&Connection::trivial(delta.clone(), e.clone()))?;
    Ok(AtiyahClass { hom: c.hom, representative: c.hom_element })
}

/// A δ-connection with vanishing Atiyah cocycle, if one exists. Since
/// `At^{∇+Θ} = At^∇ − ∂Θ`, this solves `∂Θ = At^∇` in `Hom(E, Ω⊗E)`.
pub fn flat_connection_exists(delta: &Derivation, e: &Arc<DgModule>) -> Result<Option<Connection>> {
    let base = Connection::trivial(delta.clone(), e.clone());
    let c = atiyah_cocycle(&base)?;
    let Some(theta) = is_coboundary(&c.hom, &c.hom_element)? else {
        return Ok(None);
    };
    let values = crate::module::hom_values(e, base.omega_tensor(), &theta);
    let flat = base.plus(&values)?;
    if !atiyah_values(&flat).iter().all(|v| v.is_zero()) {
        return Err(Error::Consistency("solved connection is not flat".into()));
    }
    Ok(Some(flat))
}

/// `φ⊗λ: Ω⊗E → Ω'⊗F` for degree-0 `φ`, with
/// `(φ⊗λ)(ω⊗e) = (−1)^{|λ||ω|} φ(ω)⊗λ(e)`.
pub fn tensor_morphism(phi: &ModuleMorphism, lambda: &ModuleMorphism) -> Result<ModuleMorphism> {
    if phi.degree() != 0 {
        return arg("tensor_morphism expects a degree-0 first factor");
    }
    let (om, e) = (phi.source(), lambda.source());
    let (om2, f) = (phi.target(), lambda.target());
    let source = Arc::new(tensor(om, e)?);
    let target = Arc::new(tensor(om2, f)?);
    let r = lambda.degree() as i64;
    let mut images = Vec::with_capacity(source.rank());
    for p in 0..om.rank() {
        for j in 0..e.rank() {
            let v = tensor_elements(om2, f, phi.image(p), lambda.image(j));
            images.push(v.scaled(&sign_scalar(odd(r * om.basis().degree(p) as i64))));
        }
    }
    ModuleMorphism::new(source, target, lambda.degree(), images)
}

/// Naturality of the Atiyah class along a dg morphism `λ: E → F` and a
/// derivation morphism `φ: δ → δ'` (identity when `None`), using the trivial
/// connections. The defect `(φ⊗λ)At_E − (−1)^{|λ|} At_F λ` must be exact; the
/// report also certifies the explicit primitive `−(−1)^{|λ|}((φ⊗λ)∇^E − ∇^F λ)`.
pub fn check_naturality(
    lambda: &ModuleMorphism,
    delta: &Derivation,
    phi: Option<&DerivationMorphism>,
) -> Result<CheckReport> {
    let ident;
    let phi = match phi {
        Some(p) => p,
        None => {
            ident = DerivationMorphism::identity(delta.clone());
            &ident
        }
    };
    if phi.source != *delta {
        return arg("derivation morphism does not start at the given derivation");
    }
    let mut report = CheckReport::new("Atiyah naturality");
    report.cases += 1;
    if !lambda.is_dg_morphism() {
        report.fail("λ", "not a dg morphism");
        return Ok(report);
    }
    let r = lambda.degree() as i64;
    let nabla_e = Connection::trivial(delta.clone(), lambda.source().clone());
    let nabla_f = Connection::trivial(phi.target.clone(), lambda.target().clone());
    let at_e = atiyah_cocycle(&nabla_e)?;
    let at_f = atiyah_cocycle(&nabla_f)?;
    let pl = tensor_morphism(&phi.phi, lambda)?;
    let lhs = pl.after(&at_e.operator)?;
    let rhs = at_f.operator.after(lambda)?;
    let defect: Vec<ModuleElement> = lhs.images().iter().zip(rhs.images()).map(|(a, b)| {
        let mut v = a.clone();
        v.add_signed(b, !odd(r));
        v
    }).collect();
    let defect = ModuleMorphism::new(lambda.source().clone(), pl.target().clone(), lambda.degree() + 1, defect)?;
    let hom = hom_module(lambda.source(), pl.target())?;
    report.cases += 1;
    if is_coboundary(&hom, &defect.as_hom_element())?.is_none() {
        report.fail("class", "defect is not a coboundary");
    }
    // explicit primitive, first checked to be A-linear on the k-basis
    let e = lambda.source();
    let prim_at = |v: &ModuleElement| {
        let mut out = pl.apply(&nabla_e.extend(v));
        out.sub_assign(&nabla_f.extend(&lambda.apply(v)));
        out
    };
    let images: Vec<ModuleElement> = (0..e.rank()).map(|i| prim_at(&ModuleElement::basis(i))).collect();
    let prim = ModuleMorphism::new(e.clone(), pl.target().clone(), lambda.degree(), images)?;
    for idx in 0..e.k_dim() {
        report.cases += 1;
        let v = e.k_element(idx);
        if prim_at(&v) != prim.apply(&v) {
            report.fail(e.k_basis().name(idx).to_string(), "primitive is not A-linear");
        }
    }
    let prim = prim.scaled(&sign_scalar(!odd(r)));
    report.cases += 1;
    let dprim = hom.apply_differential(&prim.as_hom_element());
    if dprim != defect.as_hom_element() {
        report.fail("primitive", "∂ of the explicit primitive differs from the defect");
    }
    Ok(report)
}
