//! Free dg modules over a [`Cdga`], with duals, tensor products, Hom modules,
//! contraction and dg morphisms.
//!
//! Elements are written `Σ a_i e_i` with algebra coefficients on the left. The
//! k-basis of a module is `m·e_i` for monomials `m` (in the algebra's monomial
//! order) and basis elements `e_i`, flattened as `mono_index * rank + i`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cdga::{mono_degree, mono_mul, mono_name, AlgebraElement, Cdga, Monomial};
use crate::error::{arg, Error, Result};
use crate::graded::{odd, Degree, Element, GradedBasis, Scalar};
use crate::report::CheckReport;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ModuleElement {
    coeffs: BTreeMap<usize, AlgebraElement>,
}

impl ModuleElement {
    pub fn zero() -> Self {
        ModuleElement::default()
    }

    pub fn basis(i: usize) -> Self {
        ModuleElement::term(i, AlgebraElement::one())
    }

    pub fn term(i: usize, a: AlgebraElement) -> Self {
        let mut v = ModuleElement::zero();
        v.add_term(i, &a);
        v
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, AlgebraElement)>) -> Self {
        let mut v = ModuleElement::zero();
        for (i, a) in terms {
            v.add_term(i, &a);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &AlgebraElement)> {
        self.coeffs.iter().map(|(i, a)| (*i, a))
    }

    pub fn coeff(&self, i: usize) -> AlgebraElement {
        self.coeffs.get(&i).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, i: usize, a: &AlgebraElement) {
        if a.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(i).or_default();
        slot.add_assign(a);
        if slot.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn add_signed(&mut self, other: &ModuleElement, negative: bool) {
        for (i, a) in other.iter() {
            if negative {
                self.add_term(i, &a.neg());
            } else {
                self.add_term(i, a);
            }
        }
    }

    pub fn add_assign(&mut self, other: &ModuleElement) {
        self.add_signed(other, false)
    }

    pub fn sub_assign(&mut self, other: &ModuleElement) {
        self.add_signed(other, true)
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &ModuleElement) -> ModuleElement {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> ModuleElement {
        self.scaled(&-num::one::<Scalar>())
    }

    pub fn scaled(&self, c: &Scalar) -> ModuleElement {
        ModuleElement::from_terms(self.iter().map(|(i, a)| (i, a.scaled(c))))
    }

    /// `a · v`.
    pub fn left_mul(&self, a: &AlgebraElement) -> ModuleElement {
        ModuleElement::from_terms(self.iter().map(|(i, c)| (i, a.mul(c))))
    }

    pub fn degree(&self, basis: &GradedBasis) -> Degree {
        let mut found = None;
        for (i, a) in self.iter() {
            for (m, _) in a.terms() {
                let d = mono_degree(m) + basis.degree(i);
                match found {
                    None => found = Some(d),
                    Some(f) if f != d => return Degree::Inhomogeneous,
                    _ => {}
                }
            }
        }
        found.map_or(Degree::Zero, Degree::Homogeneous)
    }

    pub fn display(&self, module: &DgModule) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let gens = module.algebra().generators();
        self.iter()
            .map(|(i, a)| {
                let n = module.basis().name(i);
                if a == &AlgebraElement::one() {
                    n.to_string()
                } else {
                    format!("({})·{}", a.display(gens), n)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DgModule {
    algebra: Arc<Cdga>,
    basis: GradedBasis,
    diff: Vec<ModuleElement>,
}

impl DgModule {
    /// `diff[i] = ∂(e_i)`. No checks here; see [`DgModule::validate`].
    pub fn new(algebra: Arc<Cdga>, basis: GradedBasis, diff: Vec<ModuleElement>) -> Result<Self> {
        if diff.len() != basis.len() {
            return arg("one differential value per basis element required");
        }
        if diff.iter().any(|v| v.iter().any(|(j, _)| j >= basis.len())) {
            return arg("differential mentions an unknown basis index");
        }
        Ok(DgModule { algebra, basis, diff })
    }

    /// Validated constructor: fails on the first degree or ∂² violation.
    pub fn checked(algebra: Arc<Cdga>, basis: GradedBasis, diff: Vec<ModuleElement>) -> Result<Self> {
        let m = DgModule::new(algebra, basis, diff)?;
        let r = m.validate();
        match r.first_failure() {
            None => Ok(m),
            Some(f) => Err(Error::Validation(format!("{} at {}: {}", r.name, f.location, f.detail))),
        }
    }

    pub fn zero_differential(algebra: Arc<Cdga>, basis: GradedBasis) -> Self {
        let n = basis.len();
        DgModule { algebra, basis, diff: vec![ModuleElement::zero(); n] }
    }

    /// Rank-1 module on a degree-0 generator with zero differential.
    pub fn unit(algebra: Arc<Cdga>) -> Self {
        DgModule::zero_differential(algebra, GradedBasis::new(vec![("1".into(), 0)]).unwrap())
    }

    pub fn algebra(&self) -> &Arc<Cdga> {
        &self.algebra
    }

    pub fn basis(&self) -> &GradedBasis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn diff_of(&self, i: usize) -> &ModuleElement {
        &self.diff[i]
    }

    pub fn diff_entry(&self, i: usize, j: usize) -> AlgebraElement {
        self.diff[i].coeff(j)
    }

    pub fn same_algebra(&self, other: &DgModule) -> bool {
        Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra
    }

    pub fn apply_differential(&self, v: &ModuleElement) -> ModuleElement {
        let mut out = ModuleElement::zero();
        for (i, a) in v.iter() {
            out.add_term(i, &self.algebra.apply_differential(a));
            for (deg, part) in a.by_degree() {
                let t = self.diff[i].left_mul(&part);
                out.add_signed(&t, odd(deg as i64));
            }
        }
        out
    }

    pub fn validate(&self) -> CheckReport {
        let mut report = CheckReport::new("dg module");
        for i in 0..self.rank() {
            for (j, a) in self.diff[i].iter() {
                report.cases += 1;
                let want = 1 + self.basis.degree(i) - self.basis.degree(j);
                if a.homogeneous_degree() != Some(want) {
                    report.fail(
                        format!("({},{})", self.basis.name(i), self.basis.name(j)),
                        format!("degree error: entry must have degree {want}"),
                    );
                }
            }
        }
        for i in 0..self.rank() {
            report.cases += 1;
            let dd = self.apply_differential(&self.diff[i]);
            if !dd.is_zero() {
                report.fail(self.basis.name(i).to_string(), format!("∂² = {}", dd.display(self)));
            }
        }
        report
    }

    pub fn k_dim(&self) -> usize {
        self.algebra.monomials().len() * self.rank()
    }

    pub fn k_index(&self, m: Monomial, i: usize) -> usize {
        self.algebra.mono_index(m) * self.rank() + i
    }

    pub fn k_decode(&self, idx: usize) -> (Monomial, usize) {
        (self.algebra.monomials()[idx / self.rank()], idx % self.rank())
    }

    pub fn k_degrees(&self) -> Vec<i32> {
        (0..self.k_dim())
            .map(|idx| {
                let (m, i) = self.k_decode(idx);
                mono_degree(m) + self.basis.degree(i)
            })
            .collect()
    }

    pub fn k_basis(&self) -> GradedBasis {
        let gens = self.algebra.generators();
        let entries = (0..self.k_dim())
            .map(|idx| {
                let (m, i) = self.k_decode(idx);
                let name = if m == 0 {
                    self.basis.name(i).to_string()
                } else {
                    format!("{}·{}", mono_name(m, gens), self.basis.name(i))
                };
                (name, mono_degree(m) + self.basis.degree(i))
            })
            .collect();
        GradedBasis::new(entries).expect("k-basis names are unique")
    }

    pub fn k_element(&self, idx: usize) -> ModuleElement {
        let (m, i) = self.k_decode(idx);
        ModuleElement::term(i, AlgebraElement::monomial(m, num::one()))
    }

    pub fn to_flat(&self, v: &ModuleElement) -> Element {
        let mut out = Element::zero();
        for (i, a) in v.iter() {
            for (m, c) in a.terms() {
                out.add_term(self.k_index(m, i), c);
            }
        }
        out
    }

    pub fn from_flat(&self, e: &Element) -> ModuleElement {
        let mut out = ModuleElement::zero();
        for (idx, c) in e.iter() {
            let (m, i) = self.k_decode(idx);
            out.add_term(i, &AlgebraElement::monomial(m, c.clone()));
        }
        out
    }

    /// `a · (k-basis element idx)` on flat coordinates, for a monomial `a`.
    pub fn k_left_mul(&self, a: Monomial, idx: usize) -> Option<(usize, bool)> {
        let (m, i) = self.k_decode(idx);
        mono_mul(a, m).map(|(p, neg)| (self.k_index(p, i), neg))
    }

    pub fn flat_left_mul(&self, a: Monomial, e: &Element) -> Element {
        let mut out = Element::zero();
        for (idx, c) in e.iter() {
            if let Some((j, neg)) = self.k_left_mul(a, idx) {
                out.add_term(j, &if neg { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// The differential on flat coordinates.
    pub fn flat_differential(&self, e: &Element) -> Element {
        self.to_flat(&self.apply_differential(&self.from_flat(e)))
    }
}

fn dual_name(n: &str) -> String {
    match n.strip_suffix('∨') {
        Some(s) => s.to_string(),
        None => format!("{n}∨"),
    }
}

/// Dual module: basis `β^i` of degree `−deg ω_i`, with the differential that
/// makes the pairing a cochain map:
/// `d⟨β,ω⟩ = ⟨∂β,ω⟩ + (−1)^{|β|}⟨β,∂ω⟩`.
pub fn dual_module(m: &DgModule) -> DgModule {
    let basis = GradedBasis::new(
        m.basis().entries().iter().map(|(n, d)| (dual_name(n), -d)).collect(),
    )
    .expect("dual names are unique");
    let n = m.rank();
    let mut diff = vec![ModuleElement::zero(); n];
    for j in 0..n {
        for (i, a) in m.diff_of(j).iter() {
            // ∂β^i gets −(−1)^{|β^i|(1+|a_ji|)} a_ji at β^j
            let beta = basis.degree(i) as i64;
            for (deg, part) in a.by_degree() {
                let neg = !odd(beta * (1 + deg as i64));
                diff[i].add_term(j, &if neg { part.neg() } else { part });
            }
        }
    }
    DgModule { algebra: m.algebra().clone(), basis, diff }
}

/// `⟨β, ω⟩` for `β` in the dual of `m` and `ω` in `m`, with
/// `⟨aβ^i, bω_j⟩ = (−1)^{|β^i||b|} ab δ_ij`.
pub fn pairing(m: &DgModule, beta: &ModuleElement, omega: &ModuleElement) -> AlgebraElement {
    let mut out = AlgebraElement::zero();
    for (i, a) in beta.iter() {
        let b = omega.coeff(i);
        if b.is_zero() {
            continue;
        }
        let bdeg = -(m.basis().degree(i) as i64);
        out.add_assign(&a.mul(&b.twisted(bdeg)));
    }
    out
}

pub fn tensor(m: &DgModule, n: &DgModule) -> Result<DgModule> {
    if !m.same_algebra(n) {
        return arg("tensor product of modules over different algebras");
    }
    let (rm, rn) = (m.rank(), n.rank());
    let mut entries = Vec::with_capacity(rm * rn);
    for p in 0..rm {
        for i in 0..rn {
            entries.push((
                format!("{}⊗{}", m.basis().name(p), n.basis().name(i)),
                m.basis().degree(p) + n.basis().degree(i),
            ));
        }
    }
    let basis = GradedBasis::new(entries)?;
    let mut diff = vec![ModuleElement::zero(); rm * rn];
    for p in 0..rm {
        for i in 0..rn {
            let out = &mut diff[p * rn + i];
            for (q, a) in m.diff_of(p).iter() {
                out.add_term(q * rn + i, a);
            }
            let mp = m.basis().degree(p) as i64;
            for (j, b) in n.diff_of(i).iter() {
                // (−1)^{|m_p|} m_p ⊗ b n_j = (−1)^{|m_p|(1+|b|)} b (m_p⊗n_j)
                out.add_term(p * rn + j, &b.twisted(mp).scaled(&crate::graded::sign_scalar(odd(mp))));
            }
        }
    }
    Ok(DgModule { algebra: m.algebra().clone(), basis, diff })
}

/// `x ⊗ y` in `m ⊗ n`: `(a m_p) ⊗ (b n_i) = (−1)^{|m_p||b|} ab (m_p⊗n_i)`.
pub fn tensor_elements(m: &DgModule, n: &DgModule, x: &ModuleElement, y: &ModuleElement) -> ModuleElement {
    let rn = n.rank();
    let mut out = ModuleElement::zero();
    for (p, a) in x.iter() {
        let mp = m.basis().degree(p) as i64;
        for (i, b) in y.iter() {
            out.add_term(p * rn + i, &a.mul(&b.twisted(mp)));
        }
    }
    out
}

/// `Hom(E, F)` with basis `H_{ij}: e_i ↦ f_j` (index `i * rank F + j`) of
/// degree `deg f_j − deg e_i`, and differential `∂φ = ∂_F φ − (−1)^{|φ|} φ ∂_E`.
pub fn hom_module(e: &DgModule, f: &DgModule) -> Result<DgModule> {
    if !e.same_algebra(f) {
        return arg("Hom between modules over different algebras");
    }
    let (re, rf) = (e.rank(), f.rank());
    let mut entries = Vec::with_capacity(re * rf);
    for i in 0..re {
        for j in 0..rf {
            entries.push((
                format!("[{}→{}]", e.basis().name(i), f.basis().name(j)),
                f.basis().degree(j) - e.basis().degree(i),
            ));
        }
    }
    let basis = GradedBasis::new(entries)?;
    let mut diff = vec![ModuleElement::zero(); re * rf];
    for i in 0..re {
        for j in 0..rf {
            let r = (f.basis().degree(j) - e.basis().degree(i)) as i64;
            let out = &mut diff[i * rf + j];
            for (jj, b) in f.diff_of(j).iter() {
                out.add_term(i * rf + jj, b);
            }
            // −(−1)^r H_ij(∂e_l) = −(−1)^{r(1+|a_li|)} a_li f_j
            for l in 0..re {
                let a = e.diff_entry(l, i);
                if a.is_zero() {
                    continue;
                }
                let t = a.twisted(r).scaled(&crate::graded::sign_scalar(!odd(r)));
                out.add_term(l * rf + j, &t);
            }
        }
    }
    Ok(DgModule { algebra: e.algebra().clone(), basis, diff })
}

pub fn end_module(e: &DgModule) -> Result<DgModule> {
    hom_module(e, e)
}

/// Evaluates `X ∈ Hom(E,F)` on `v ∈ E`:
/// `(c H_{lj})(a e_m) = δ_lm (−1)^{|H_{lj}||a|} c a f_j`.
pub fn hom_apply(e: &DgModule, f: &DgModule, x: &ModuleElement, v: &ModuleElement) -> ModuleElement {
    let rf = f.rank();
    let mut out = ModuleElement::zero();
    for (idx, c) in x.iter() {
        let (l, j) = (idx / rf, idx % rf);
        let a = v.coeff(l);
        if a.is_zero() {
            continue;
        }
        let hdeg = (f.basis().degree(j) - e.basis().degree(l)) as i64;
        out.add_term(j, &c.mul(&a.twisted(hdeg)));
    }
    out
}

/// The element of `Hom(E,F)` with `X(e_l) = values[l]`.
pub fn hom_from_values(f: &DgModule, values: &[ModuleElement]) -> ModuleElement {
    let rf = f.rank();
    let mut out = ModuleElement::zero();
    for (l, v) in values.iter().enumerate() {
        for (j, c) in v.iter() {
            out.add_term(l * rf + j, c);
        }
    }
    out
}

/// Reads `X(e_l)` off the coefficients of `X ∈ Hom(E,F)`.
pub fn hom_values(e: &DgModule, f: &DgModule, x: &ModuleElement) -> Vec<ModuleElement> {
    let rf = f.rank();
    let mut out = vec![ModuleElement::zero(); e.rank()];
    for (idx, c) in x.iter() {
        out[idx / rf].add_term(idx % rf, c);
    }
    out
}

/// Converts `X ∈ Hom(E, Ω⊗E)` into `Ω ⊗ End(E)` via
/// `H_{i,(p,j)} ↦ ω_p ⊗ H_{ij}`; this is an isomorphism of dg modules.
pub fn hom_to_omega_end(omega: &DgModule, e: &DgModule, x: &ModuleElement) -> ModuleElement {
    let re = e.rank();
    let rt = omega.rank() * re;
    let mut out = ModuleElement::zero();
    for (idx, c) in x.iter() {
        let (i, pj) = (idx / rt, idx % rt);
        let (p, j) = (pj / re, pj % re);
        out.add_term(p * re * re + i * re + j, c);
    }
    out
}

/// `ι_b(w)` for `b` in the dual of `Ω` and `w ∈ Ω ⊗ E`:
/// `ι_{cβ^q}(a(ω_p⊗e_j)) = c (−1)^{|β^q||a|} a δ_pq e_j`.
pub fn contract(omega: &DgModule, e: &DgModule, b: &ModuleElement, w: &ModuleElement) -> ModuleElement {
    let re = e.rank();
    let mut out = ModuleElement::zero();
    for (idx, a) in w.iter() {
        let (p, j) = (idx / re, idx % re);
        let c = b.coeff(p);
        if c.is_zero() {
            continue;
        }
        let beta = -(omega.basis().degree(p) as i64);
        out.add_term(j, &c.mul(&a.twisted(beta)));
    }
    out
}

/// A k-basis of the dg morphisms `E → F` of degree `r` (closed elements of
/// `Hom(E,F)`).
pub fn dg_morphisms(e: &Arc<DgModule>, f: &Arc<DgModule>, r: i32) -> Result<Vec<ModuleMorphism>> {
    let hom = hom_module(e, f)?;
    crate::cohomology::cocycle_basis(&hom, r)
        .iter()
        .map(|x| ModuleMorphism::new(e.clone(), f.clone(), r, hom_values(e, f, x)))
        .collect()
}

/// A-linear map of degree `r` given on basis elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleMorphism {
    source: Arc<DgModule>,
    target: Arc<DgModule>,
    degree: i32,
    images: Vec<ModuleElement>,
}

impl ModuleMorphism {
    pub fn new(source: Arc<DgModule>, target: Arc<DgModule>, degree: i32, images: Vec<ModuleElement>) -> Result<Self> {
        if images.len() != source.rank() {
            return arg("one image per source basis element required");
        }
        if !source.same_algebra(&target) {
            return arg("morphism between modules over different algebras");
        }
        for (i, v) in images.iter().enumerate() {
            if v.iter().any(|(j, _)| j >= target.rank()) {
                return arg("image mentions an unknown target basis index");
            }
            match v.degree(target.basis()) {
                Degree::Zero => {}
                Degree::Homogeneous(d) if d == source.basis().degree(i) + degree => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "image of {} is not homogeneous of degree {}",
                        source.basis().name(i),
                        source.basis().degree(i) + degree
                    )))
                }
            }
        }
        Ok(ModuleMorphism { source, target, degree, images })
    }

    pub fn identity(m: Arc<DgModule>) -> Self {
        let images = (0..m.rank()).map(ModuleElement::basis).collect();
        ModuleMorphism { source: m.clone(), target: m, degree: 0, images }
    }

    pub fn zero(source: Arc<DgModule>, target: Arc<DgModule>, degree: i32) -> Self {
        let n = source.rank();
        ModuleMorphism { source, target, degree, images: vec![ModuleElement::zero(); n] }
    }

    pub fn source(&self) -> &Arc<DgModule> {
        &self.source
    }

    pub fn target(&self) -> &Arc<DgModule> {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn image(&self, i: usize) -> &ModuleElement {
        &self.images[i]
    }

    pub fn images(&self) -> &[ModuleElement] {
        &self.images
    }

    /// `α(Σ a_i e_i) = Σ (−1)^{r|a_i|} a_i α(e_i)`.
    pub fn apply(&self, v: &ModuleElement) -> ModuleElement {
        let mut out = ModuleElement::zero();
        for (i, a) in v.iter() {
            out.add_assign(&self.images[i].left_mul(&a.twisted(self.degree as i64)));
        }
        out
    }

    pub fn scaled(&self, c: &Scalar) -> ModuleMorphism {
        ModuleMorphism { images: self.images.iter().map(|v| v.scaled(c)).collect(), ..self.clone() }
    }

    /// `self ∘ other`.
    pub fn after(&self, other: &ModuleMorphism) -> Result<ModuleMorphism> {
        if *other.target != *self.source {
            return arg("composition of non-composable morphisms");
        }
        let images = other.images.iter().map(|v| self.apply(v)).collect();
        Ok(ModuleMorphism {
            source: other.source.clone(),
            target: self.target.clone(),
            degree: self.degree + other.degree,
            images,
        })
    }

    /// The graded commutator `∂_F α − (−1)^r α ∂_E` on each basis element.
    pub fn commutator_with_differential(&self) -> Vec<ModuleElement> {
        (0..self.source.rank())
            .map(|i| {
                let mut v = self.target.apply_differential(&self.images[i]);
                let t = self.apply(self.source.diff_of(i));
                v.add_signed(&t, !odd(self.degree as i64));
                v
            })
            .collect()
    }

    pub fn is_dg_morphism(&self) -> bool {
        self.commutator_with_differential().iter().all(|v| v.is_zero())
    }

    pub fn as_hom_element(&self) -> ModuleElement {
        hom_from_values(&self.target, &self.images)
    }

    /// Dual of a degree-0 map `φ: Ω' → Ω`, as a map `Ω∨ → Ω'∨` with
    /// `φ∨(β)(ω') = β(φ(ω'))`. `dual_source` and `dual_target` must be the
    /// duals of the target and source of `self`.
    pub fn dual(&self, dual_source: Arc<DgModule>, dual_target: Arc<DgModule>) -> Result<ModuleMorphism> {
        if self.degree != 0 {
            return arg("only degree-0 morphisms are dualized");
        }
        let mut images = vec![ModuleElement::zero(); self.target.rank()];
        for p in 0..self.source.rank() {
            for (q, m) in self.images[p].iter() {
                let beta = -(self.target.basis().degree(q) as i64);
                images[q].add_term(p, &m.twisted(beta));
            }
        }
        ModuleMorphism::new(dual_source, dual_target, 0, images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdga::{affine2, ce_algebra};
    use crate::graded::int;

    fn affine_algebra() -> Arc<Cdga> {
        Arc::new(ce_algebra(&affine2()).unwrap())
    }

    /// Rank-2 CE module of the representation x ↦ diag(1,0), y ↦ e_{12} of
    /// [x,y]=y, with ∂v = Σ_a ξ^a ρ_a v.
    fn rep_module(alg: Arc<Cdga>, shift: i32) -> DgModule {
        let basis = GradedBasis::new(vec![("u".into(), shift), ("v".into(), shift)]).unwrap();
        let x = AlgebraElement::generator(0);
        let y = AlgebraElement::generator(1);
        // ρ_x u = u, ρ_x v = 0, ρ_y u = 0, ρ_y v = u
        let diff = vec![ModuleElement::term(0, x), ModuleElement::term(0, y)];
        DgModule::checked(alg, basis, diff).unwrap()
    }

    #[test]
    fn differential_examples() {
        let alg = affine_algebra();
        let m = DgModule::zero_differential(alg.clone(), GradedBasis::new(vec![("e".into(), 0)]).unwrap());
        assert!(m.apply_differential(&ModuleElement::basis(0)).is_zero());
        let v = ModuleElement::term(0, AlgebraElement::generator(1));
        assert_eq!(m.apply_differential(&v), ModuleElement::term(0, alg.apply_differential(&AlgebraElement::generator(1))));
    }

    #[test]
    fn validate_detects_degree_error() {
        let alg = affine_algebra();
        let basis = GradedBasis::new(vec![("a".into(), 0), ("b".into(), 0)]).unwrap();
        let bad = DgModule::new(alg, basis, vec![ModuleElement::term(1, AlgebraElement::one()), ModuleElement::zero()]).unwrap();
        let r = bad.validate();
        assert!(!r.passed());
        assert_eq!(r.failures[0].location, "(a,b)");
        assert!(r.failures[0].detail.contains("degree"));
    }

    #[test]
    fn dual_examples() {
        let alg = affine_algebra();
        let z = DgModule::zero_differential(alg.clone(), GradedBasis::new(vec![("e".into(), 2)]).unwrap());
        let dz = dual_module(&z);
        assert_eq!(dz.basis().degree(0), -2);
        assert!(dz.diff_of(0).is_zero());
        for shift in [0, 1, -1] {
            let m = rep_module(alg.clone(), shift);
            let d = dual_module(&m);
            assert!(d.validate().passed());
            assert_eq!(dual_module(&d), m);
        }
    }

    #[test]
    fn pairing_is_cochain_map() {
        let alg = affine_algebra();
        for shift in [0, 1, -1] {
            let m = rep_module(alg.clone(), shift);
            let d = dual_module(&m);
            for bi in 0..d.k_dim() {
                for wi in 0..m.k_dim() {
                    let b = d.k_element(bi);
                    let w = m.k_element(wi);
                    let bdeg = d.k_degrees()[bi] as i64;
                    let lhs = alg.apply_differential(&pairing(&m, &b, &w));
                    let mut rhs = pairing(&m, &d.apply_differential(&b), &w);
                    rhs.add_signed(&pairing(&m, &b, &m.apply_differential(&w)), odd(bdeg));
                    assert_eq!(lhs, rhs, "shift {shift} pair ({bi},{wi})");
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let alg = affine_algebra();
        let m = rep_module(alg.clone(), 1);
        let unit = DgModule::unit(alg.clone());
        let t = tensor(&m, &unit).unwrap();
        assert_eq!(t.rank(), m.rank());
        for i in 0..m.rank() {
            assert_eq!(t.diff_of(i), m.diff_of(i));
        }
        let n = dual_module(&rep_module(alg.clone(), 0));
        let mn = tensor(&m, &n).unwrap();
        assert!(mn.validate().passed());
        for p in 0..m.rank() {
            for i in 0..n.rank() {
                assert_eq!(mn.basis().degree(p * n.rank() + i), m.basis().degree(p) + n.basis().degree(i));
            }
        }
        // ∂(x⊗y) = ∂x⊗y + (−1)^{|x|} x⊗∂y on k-basis pairs
        for xi in 0..m.k_dim() {
            for yi in 0..n.k_dim() {
                let (x, y) = (m.k_element(xi), n.k_element(yi));
                let lhs = mn.apply_differential(&tensor_elements(&m, &n, &x, &y));
                let mut rhs = tensor_elements(&m, &n, &m.apply_differential(&x), &y);
                let xdeg = m.k_degrees()[xi] as i64;
                rhs.add_signed(&tensor_elements(&m, &n, &x, &n.apply_differential(&y)), odd(xdeg));
                assert_eq!(lhs, rhs);
            }
        }
        let other = Arc::new(ce_algebra(&crate::cdga::sl2()).unwrap());
        assert!(tensor(&m, &DgModule::unit(other)).is_err());
    }

    #[test]
    fn end_module_and_dg_morphisms() {
        let alg = affine_algebra();
        let m = Arc::new(rep_module(alg.clone(), 0));
        let end = end_module(&m).unwrap();
        assert!(end.validate().passed());
        assert!(ModuleMorphism::identity(m.clone()).is_dg_morphism());
        // ∂ is k-linear but not A-linear; as a k-linear operator it
        // graded-commutes with itself: [∂,∂] = 2∂² = 0
        for k in 0..m.k_dim() {
            let v = m.k_element(k);
            assert!(m.apply_differential(&m.apply_differential(&v)).is_zero());
        }
        let id = ModuleMorphism::identity(m.clone()).as_hom_element();
        assert!(end.apply_differential(&id).is_zero());
        // Hom differential agrees with the operator commutator on random-ish maps
        let images = vec![
            ModuleElement::term(1, AlgebraElement::generator(0)),
            ModuleElement::from_terms([(0, AlgebraElement::generator(1)), (1, AlgebraElement::generator(0).scaled(&int(3)))]),
        ];
        let alpha = ModuleMorphism::new(m.clone(), m.clone(), 1, images).unwrap();
        let comm = hom_from_values(&m, &alpha.commutator_with_differential());
        assert_eq!(end.apply_differential(&alpha.as_hom_element()), comm);
        // hom_apply agrees with morphism application
        for k in 0..m.k_dim() {
            let v = m.k_element(k);
            assert_eq!(hom_apply(&m, &m, &alpha.as_hom_element(), &v), alpha.apply(&v));
        }
    }

    #[test]
    fn omega_end_identification_commutes_with_differentials() {
        let alg = affine_algebra();
        let e = rep_module(alg.clone(), 0);
        let omega = dual_module(&rep_module(alg.clone(), -1));
        let oe = tensor(&omega, &e).unwrap();
        let hom = hom_module(&e, &oe).unwrap();
        let target = tensor(&omega, &end_module(&e).unwrap()).unwrap();
        for k in 0..hom.k_dim() {
            let x = hom.k_element(k);
            let lhs = hom_to_omega_end(&omega, &e, &hom.apply_differential(&x));
            let rhs = target.apply_differential(&hom_to_omega_end(&omega, &e, &x));
            assert_eq!(lhs, rhs, "k-basis element {k}");
        }
    }

    #[test]
    fn contract_examples() {
        let alg = affine_algebra();
        let omega = dual_module(&rep_module(alg.clone(), -1));
        let e = rep_module(alg.clone(), 0);
        let b_mod = dual_module(&omega);
        for p in 0..omega.rank() {
            for j in 0..e.rank() {
                let w = tensor_elements(&omega, &e, &ModuleElement::basis(p), &ModuleElement::basis(j));
                assert_eq!(contract(&omega, &e, &ModuleElement::basis(p), &w), ModuleElement::basis(j));
                assert!(contract(&omega, &e, &ModuleElement::basis(1 - p), &w).is_zero());
            }
        }
        // A-linearity in w: ι_b(a w) = (−1)^{|b||a|} a ι_b(w)
        let oe = tensor(&omega, &e).unwrap();
        for bi in 0..b_mod.k_dim() {
            for wi in 0..oe.k_dim() {
                for g in 0..alg.num_generators() {
                    let (b, w) = (b_mod.k_element(bi), oe.k_element(wi));
                    let a = AlgebraElement::generator(g);
                    let lhs = contract(&omega, &e, &b, &w.left_mul(&a));
                    let bdeg = b_mod.k_degrees()[bi] as i64;
                    let rhs = contract(&omega, &e, &b, &w).left_mul(&a).scaled(&crate::graded::sign_scalar(odd(bdeg)));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn dual_of_morphism_is_dg() {
        let alg = affine_algebra();
        let m = Arc::new(rep_module(alg.clone(), 1));
        let images = vec![ModuleElement::basis(0).scaled(&int(2)), ModuleElement::basis(1).scaled(&int(2))];
        let phi = ModuleMorphism::new(m.clone(), m.clone(), 0, images).unwrap();
        assert!(phi.is_dg_morphism());
        let dm = Arc::new(dual_module(&m));
        let dphi = phi.dual(dm.clone(), dm.clone()).unwrap();
        assert!(dphi.is_dg_morphism());
        // ⟨φ∨β, ω⟩ = ⟨β, φω⟩
        for bi in 0..dm.k_dim() {
            for wi in 0..m.k_dim() {
                let (b, w) = (dm.k_element(bi), m.k_element(wi));
                assert_eq!(pairing(&m, &dphi.apply(&b), &w), pairing(&m, &b, &phi.apply(&w)));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_morphism(m: Arc<DgModule>, coeffs: &[i64]) -> ModuleMorphism {
            // degree-0 maps of the shifted rep module commuting with ∂ are
            // spanned by id and the nilpotent u ↦ 0, v ↦ u composed suitably;
            // we only form scalar combinations of known dg morphisms.
            let id = ModuleMorphism::identity(m.clone());
            let images = vec![
                id.image(0).scaled(&int(coeffs[0])),
                id.image(1).scaled(&int(coeffs[0])),
            ];
            ModuleMorphism::new(m.clone(), m, 0, images).unwrap()
        }

        proptest! {
            #[test]
            fn dg_morphisms_compose(c1 in -3i64..=3, c2 in -3i64..=3, shift in -1i32..=1) {
                let alg = affine_algebra();
                let m = Arc::new(rep_module(alg, shift));
                let a = random_morphism(m.clone(), &[c1]);
                let b = random_morphism(m.clone(), &[c2]);
                prop_assert!(a.is_dg_morphism() && b.is_dg_morphism());
                prop_assert!(a.after(&b).unwrap().is_dg_morphism());
                prop_assert!(b.after(&a).unwrap().is_dg_morphism());
            }
        }
    }
}
