//! Module-valued derivations of a cdga, their homotopies and morphisms, and
//! Kähler differentials.

use std::sync::Arc;

use num::Zero;

use crate::cdga::{mono_generators, AlgebraElement, Cdga};
use crate::error::{arg, Error, Result};
use crate::graded::{odd, Degree, GradedBasis, Scalar};
use crate::linalg::Matrix;
use crate::module::{DgModule, ModuleElement, ModuleMorphism};
use crate::report::CheckReport;

/// A derivation `D: A → Ω` of degree `r` given on generators and extended by
/// `D(ab) = D(a)b + (−1)^{r|a|} a D(b)`. Degree 0 gives a dg derivation δ,
/// degree −1 a homotopy h.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    target: Arc<DgModule>,
    degree: i32,
    values: Vec<ModuleElement>,
}

pub type DgDerivation = Derivation;
pub type DerivationHomotopy = Derivation;

impl Derivation {
    pub fn new(target: Arc<DgModule>, degree: i32, values: Vec<ModuleElement>) -> Result<Self> {
        let gens = target.algebra().generators().clone();
        if values.len() != gens.len() {
            return arg("one value per generator required");
        }
        for (i, v) in values.iter().enumerate() {
            if v.iter().any(|(j, _)| j >= target.rank()) {
                return arg(format!("value on {} mentions an unknown basis index", gens.name(i)));
            }
            match v.degree(target.basis()) {
                Degree::Zero => {}
                Degree::Homogeneous(d) if d == 1 + degree => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "value on {} must be homogeneous of degree {}",
                        gens.name(i),
                        1 + degree
                    )))
                }
            }
        }
        Ok(Derivation { target, degree, values })
    }

    pub fn zero(target: Arc<DgModule>, degree: i32) -> Self {
        let n = target.algebra().num_generators();
        Derivation { target, degree, values: vec![ModuleElement::zero(); n] }
    }

    pub fn algebra(&self) -> &Arc<Cdga> {
        self.target.algebra()
    }

    pub fn target(&self) -> &Arc<DgModule> {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn value(&self, g: usize) -> &ModuleElement {
        &self.values[g]
    }

    pub fn values(&self) -> &[ModuleElement] {
        &self.values
    }

    /// Extension over exterior monomials: for `ξ_{i_1}…ξ_{i_k}` the t-th term is
    /// `(−1)^{r(t−1) + (1+r)(k−t)} (monomial without ξ_{i_t}) · D(ξ_{i_t})`.
    pub fn extend(&self, a: &AlgebraElement) -> ModuleElement {
        let r = self.degree as i64;
        let mut out = ModuleElement::zero();
        for (m, c) in a.terms() {
            let gens = mono_generators(m);
            let k = gens.len() as i64;
            for (t0, &g) in gens.iter().enumerate() {
                if self.values[g].is_zero() {
                    continue;
                }
                let t = t0 as i64 + 1;
                let neg = odd(r * (t - 1) + (1 + r) * (k - t));
                let rest = m & !(1 << g);
                let coeff = if neg { -c.clone() } else { c.clone() };
                out.add_assign(&self.values[g].left_mul(&AlgebraElement::monomial(rest, coeff)));
            }
        }
        out
    }

    pub fn scaled(&self, c: &Scalar) -> Derivation {
        Derivation { values: self.values.iter().map(|v| v.scaled(c)).collect(), ..self.clone() }
    }
}

/// Checks `δ(d_A ξ) = ∂(δ ξ)` on every generator. Both sides are derivations
/// of degree 1 relative to δ, so agreement on generators gives agreement on
/// all of A.
pub fn validate_dg_derivation(delta: &Derivation) -> CheckReport {
    let mut report = CheckReport::new("derivation compatibility");
    let alg = delta.algebra();
    for g in 0..alg.num_generators() {
        report.cases += 1;
        let lhs = delta.extend(alg.diff_on_generator(g));
        let rhs = delta.target.apply_differential(&delta.values[g]);
        let diff = lhs.sub(&rhs);
        if !diff.is_zero() {
            report.fail(
                alg.generators().name(g).to_string(),
                format!("δ(dξ) − ∂(δξ) = {}", diff.display(&delta.target)),
            );
        }
    }
    report
}

/// `Ω¹` on symbols `dξ_i` (degree 1) with `∂(dξ) = d_dR(d_A ξ)`, and `d_dR`.
pub fn kaehler_differentials(alg: &Arc<Cdga>) -> (Arc<DgModule>, Derivation) {
    let n = alg.num_generators();
    let basis = GradedBasis::new(
        (0..n).map(|i| (format!("d{}", alg.generators().name(i)), 1)).collect(),
    )
    .expect("unique names");
    let bare = Arc::new(DgModule::zero_differential(alg.clone(), basis.clone()));
    let values: Vec<ModuleElement> = (0..n).map(ModuleElement::basis).collect();
    let ddr0 = Derivation { target: bare, degree: 0, values: values.clone() };
    let diff = (0..n).map(|i| ddr0.extend(alg.diff_on_generator(i))).collect();
    let omega1 = Arc::new(DgModule::new(alg.clone(), basis, diff).expect("Kähler module"));
    let ddr = Derivation { target: omega1.clone(), degree: 0, values };
    (omega1, ddr)
}

/// A dg morphism `φ: Ω → Ω'` with `φ∘δ = δ'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationMorphism {
    pub source: Derivation,
    pub target: Derivation,
    pub phi: ModuleMorphism,
}

impl DerivationMorphism {
    pub fn new(source: Derivation, target: Derivation, phi: ModuleMorphism) -> Result<Self> {
        let m = DerivationMorphism { source, target, phi };
        let r = m.validate();
        match r.first_failure() {
            None => Ok(m),
            Some(f) => Err(Error::Validation(format!("{} at {}: {}", r.name, f.location, f.detail))),
        }
    }

    pub fn identity(delta: Derivation) -> Self {
        let phi = ModuleMorphism::identity(delta.target.clone());
        DerivationMorphism { source: delta.clone(), target: delta, phi }
    }

    pub fn validate(&self) -> CheckReport {
        let mut report = CheckReport::new("derivation morphism");
        report.cases += 1;
        if self.phi.degree() != 0 {
            report.fail("φ", "degree must be 0");
        }
        if **self.phi.source() != *self.source.target || **self.phi.target() != *self.target.target {
            report.fail("φ", "source/target modules do not match the derivations");
            return report;
        }
        if !self.phi.is_dg_morphism() {
            report.fail("φ", "not a dg morphism");
        }
        let alg = self.source.algebra();
        for g in 0..alg.num_generators() {
            report.cases += 1;
            if self.phi.apply(self.source.value(g)) != *self.target.value(g) {
                report.fail(alg.generators().name(g).to_string(), "φ(δξ) ≠ δ'(ξ)");
            }
        }
        report
    }

    /// `self ∘ other`: `other: δ₁ → δ₂`, `self: δ₂ → δ₃`.
    pub fn after(&self, other: &DerivationMorphism) -> Result<DerivationMorphism> {
        DerivationMorphism::new(other.source.clone(), self.target.clone(), self.phi.after(&other.phi)?)
    }
}

/// The morphism `δ̄: Ω¹ → Ω` with `δ̄(dξ) = δ(ξ)`.
pub fn universal_factorization(delta: &Derivation) -> Result<DerivationMorphism> {
    if delta.degree != 0 {
        return arg("universal factorization needs a degree-0 derivation");
    }
    let (omega1, ddr) = kaehler_differentials(delta.algebra());
    let phi = ModuleMorphism::new(omega1, delta.target.clone(), 0, delta.values.clone())?;
    if !phi.is_dg_morphism() {
        return Err(Error::Consistency("δ̄ is not a dg morphism".into()));
    }
    DerivationMorphism::new(ddr, delta.clone(), phi).map_err(|e| Error::Consistency(e.to_string()))
}

/// `δ' = δ + [∂, h]`, i.e. `δ'(ξ) = δξ + ∂(hξ) + h(d_A ξ)`.
pub fn homotopy_offset(delta: &Derivation, h: &Derivation) -> Result<Derivation> {
    if delta.target != h.target {
        return arg("derivation and homotopy have different targets");
    }
    if delta.degree != 0 || h.degree != -1 {
        return arg("homotopy_offset expects degrees 0 and −1");
    }
    let alg = delta.algebra();
    let values = (0..alg.num_generators())
        .map(|g| {
            let mut v = delta.values[g].clone();
            v.add_assign(&delta.target.apply_differential(&h.values[g]));
            v.add_assign(&h.extend(alg.diff_on_generator(g)));
            v
        })
        .collect();
    Derivation::new(delta.target.clone(), 0, values)
}

/// Solves `[∂,h](ξ) = δ'(ξ) − δ(ξ)` for the generator values of `h`.
pub fn find_homotopy(delta: &Derivation, delta2: &Derivation) -> Result<Option<Derivation>> {
    if delta.target != delta2.target {
        return arg("derivations have different targets");
    }
    let target = delta.target.clone();
    let alg = delta.algebra().clone();
    let n = alg.num_generators();
    let degs = target.k_degrees();
    // unknowns: degree-0 k-basis coordinates of h(ξ_g) for each generator g
    let slot: Vec<usize> = (0..target.k_dim()).filter(|i| degs[*i] == 0).collect();
    let eq: Vec<usize> = (0..target.k_dim()).filter(|i| degs[*i] == 1).collect();
    let mut eq_pos = vec![usize::MAX; target.k_dim()];
    for (p, &i) in eq.iter().enumerate() {
        eq_pos[i] = p;
    }
    let rows = n * eq.len();
    let mut columns = Vec::with_capacity(n * slot.len());
    let zero_delta = Derivation::zero(target.clone(), 0);
    for g in 0..n {
        for &s in &slot {
            let mut values = vec![ModuleElement::zero(); n];
            values[g] = target.k_element(s);
            let h = Derivation { target: target.clone(), degree: -1, values };
            let image = homotopy_offset(&zero_delta, &h)?;
            let mut col = vec![Scalar::zero(); rows];
            for (gg, v) in image.values.iter().enumerate() {
                for (i, c) in target.to_flat(v).iter() {
                    col[gg * eq.len() + eq_pos[i]] = c.clone();
                }
            }
            columns.push(col);
        }
    }
    let mut rhs = vec![Scalar::zero(); rows];
    for g in 0..n {
        let d = delta2.values[g].sub(&delta.values[g]);
        for (i, c) in target.to_flat(&d).iter() {
            rhs[g * eq.len() + eq_pos[i]] = c.clone();
        }
    }
    let Some(x) = Matrix::from_columns(rows, &columns).solve(&rhs) else {
        return Ok(None);
    };
    let mut values = vec![ModuleElement::zero(); n];
    for g in 0..n {
        for (k, &s) in slot.iter().enumerate() {
            let c = &x[g * slot.len() + k];
            if !c.is_zero() {
                values[g].add_assign(&target.k_element(s).scaled(c));
            }
        }
    }
    Ok(Some(Derivation { target, degree: -1, values }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdga::{affine2, ce_algebra, sl2};
    use crate::graded::int;
    use crate::module::dual_module;

    fn affine() -> Arc<Cdga> {
        Arc::new(ce_algebra(&affine2()).unwrap())
    }

    #[test]
    fn extend_examples() {
        let alg = affine();
        let (omega1, ddr) = kaehler_differentials(&alg);
        assert!(ddr.extend(&AlgebraElement::one()).is_zero());
        assert_eq!(ddr.extend(&AlgebraElement::generator(1)), ModuleElement::basis(1));
        // [x,y]=y: ∂(dy∨) = d_dR(−x∨y∨) = −(dx∨)y∨ − x∨ dy∨ = y∨·dx∨ − x∨·dy∨
        let expected = ModuleElement::from_terms([(0, AlgebraElement::generator(1)), (1, AlgebraElement::generator(0).neg())]);
        assert_eq!(*omega1.diff_of(1), expected);
        assert!(omega1.diff_of(0).is_zero());
        assert!(omega1.validate().passed());
        assert!(validate_dg_derivation(&ddr).passed());
    }

    #[test]
    fn abelian_kaehler_is_closed() {
        let alg = Arc::new(ce_algebra(&crate::cdga::abelian(&["a", "b", "c"])).unwrap());
        let (omega1, _) = kaehler_differentials(&alg);
        assert!((0..3).all(|i| omega1.diff_of(i).is_zero()));
    }

    #[test]
    fn derivation_rule_on_products() {
        let alg = Arc::new(ce_algebra(&sl2()).unwrap());
        let basis = GradedBasis::new(vec![("u".into(), 0), ("w".into(), 1)]).unwrap();
        let target = Arc::new(DgModule::zero_differential(alg, basis));
        let even: Vec<ModuleElement> = (0..3)
            .map(|g| ModuleElement::term(0, AlgebraElement::generator((g + 1) % 3)).add(&ModuleElement::basis(1).scaled(&int(g as i64))))
            .collect();
        let odd_values: Vec<ModuleElement> = (0..3).map(|g| ModuleElement::basis(0).scaled(&int(g as i64 + 1))).collect();
        for (r, values) in [(0, even), (-1, odd_values)] {
            let d = Derivation::new(target.clone(), r, values).unwrap();
            for m1 in 0u32..8 {
                for m2 in 0u32..8 {
                    let a = AlgebraElement::monomial(m1, int(1));
                    let b = AlgebraElement::monomial(m2, int(1));
                    let lhs = d.extend(&a.mul(&b));
                    // D(a)·b = (−1)^{(|a|+r)|b|} b·D(a)
                    let s1 = (m1.count_ones() as i64 + r as i64) * m2.count_ones() as i64;
                    let mut rhs = ModuleElement::zero();
                    rhs.add_signed(&d.extend(&a).left_mul(&b), odd(s1));
                    let s2 = r as i64 * m1.count_ones() as i64;
                    rhs.add_signed(&d.extend(&b).left_mul(&a), odd(s2));
                    assert_eq!(lhs, rhs, "r={r} m1={m1} m2={m2}");
                }
            }
        }
    }

    #[test]
    fn compatibility_on_generators_propagates() {
        let alg = Arc::new(ce_algebra(&sl2()).unwrap());
        let (omega1, ddr) = kaehler_differentials(&alg);
        // check δ∘d = ∂∘δ on all monomials, not just generators
        for m in 0u32..8 {
            let a = AlgebraElement::monomial(m, int(1));
            assert_eq!(ddr.extend(&alg.apply_differential(&a)), omega1.apply_differential(&ddr.extend(&a)));
        }
    }

    #[test]
    fn validation_failure_is_located() {
        let alg = affine();
        let (omega1, ddr) = kaehler_differentials(&alg);
        let mut values = ddr.values().to_vec();
        values[1] = values[1].neg();
        let bad = Derivation::new(omega1, 0, values).unwrap();
        let r = validate_dg_derivation(&bad);
        assert!(!r.passed());
        assert_eq!(r.failures[0].location, "y∨");
    }

    #[test]
    fn universal_factorization_examples() {
        let alg = affine();
        let (omega1, ddr) = kaehler_differentials(&alg);
        let f = universal_factorization(&ddr).unwrap();
        assert_eq!(f.phi, ModuleMorphism::identity(omega1.clone()));
        let zero = Derivation::zero(omega1.clone(), 0);
        let fz = universal_factorization(&zero).unwrap();
        assert!(fz.phi.images().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn homotopy_offset_examples() {
        let alg = affine();
        let (omega1, ddr) = kaehler_differentials(&alg);
        let h0 = Derivation::zero(omega1.clone(), -1);
        assert_eq!(homotopy_offset(&ddr, &h0).unwrap(), ddr);
        // δ = 0, h arbitrary: [∂,h] validates
        let omega = Arc::new(dual_module(&dual_module(&omega1)));
        let h = Derivation::new(
            omega.clone(),
            -1,
            vec![ModuleElement::zero(), ModuleElement::zero()],
        )
        .unwrap();
        let z = Derivation::zero(omega.clone(), 0);
        assert!(validate_dg_derivation(&homotopy_offset(&z, &h).unwrap()).passed());
    }

    #[test]
    fn find_homotopy_examples() {
        // target with a degree-0 generator so that homotopies exist
        let alg = affine();
        let basis = GradedBasis::new(vec![("u".into(), 0), ("v".into(), 0)]).unwrap();
        let diff = vec![
            ModuleElement::term(0, AlgebraElement::generator(0)),
            ModuleElement::term(0, AlgebraElement::generator(1)),
        ];
        let target = Arc::new(DgModule::checked(alg.clone(), basis, diff).unwrap());
        let delta = Derivation::zero(target.clone(), 0);
        let same = find_homotopy(&delta, &delta).unwrap().unwrap();
        assert!(same.values().iter().all(|v| v.is_zero()));
        let h0 = Derivation::new(target.clone(), -1, vec![ModuleElement::basis(1), ModuleElement::basis(0).scaled(&int(2))]).unwrap();
        let delta2 = homotopy_offset(&delta, &h0).unwrap();
        assert!(validate_dg_derivation(&delta2).passed());
        let h = find_homotopy(&delta, &delta2).unwrap().unwrap();
        assert_eq!(homotopy_offset(&delta, &h).unwrap(), delta2);
        // round trip with −h
        assert_eq!(homotopy_offset(&delta2, &h0.scaled(&int(-1))).unwrap(), delta);
    }
}
