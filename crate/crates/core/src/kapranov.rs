//! Kapranov brackets on `B = Ω∨`, the identities of Leibniz_∞[1] algebras,
//! their morphisms and modules, the morphism recursions, and the induced
//! brackets on cohomology.
//!
//! All structure maps are tables over k-basis tuples (see [`MultilinearMap`]).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::sync::Arc;

use num::Zero;
use rayon::prelude::*;

use crate::cohomology::CochainComplex;
use crate::connection::{atiyah_cocycle, Connection};
use crate::derivation::{homotopy_offset, DerivationMorphism};
use crate::error::{arg, Error, Result};
use crate::graded::{
    decode, koszul_parity, odd, ordered_partitions, shuffles, sign_scalar, Arg, Element, GradedBasis, MultilinearMap,
    Scalar,
};
use crate::module::{DgModule, ModuleElement, ModuleMorphism};
use crate::report::CheckReport;

/// A sparse element of a tensor power, keyed by k-basis tuples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TensorElement {
    terms: BTreeMap<Vec<usize>, Scalar>,
}

impl TensorElement {
    pub fn zero() -> Self {
        TensorElement::default()
    }

    pub fn basis(tuple: &[usize]) -> Self {
        let mut t = TensorElement::zero();
        t.add_term(tuple.to_vec(), &Scalar::from_integer(1.into()));
        t
    }

    /// `x_1 ⊗ … ⊗ x_n` expanded multilinearly.
    pub fn product(factors: &[&Element]) -> Self {
        let mut acc = TensorElement::basis(&[]);
        for f in factors {
            let mut next = TensorElement::zero();
            for (t, c) in acc.iter() {
                for (i, x) in f.iter() {
                    let mut nt = t.clone();
                    nt.push(i);
                    next.add_term(nt, &(c * x));
                }
            }
            acc = next;
        }
        acc
    }

    pub fn add_term(&mut self, tuple: Vec<usize>, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(tuple) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
        }
    }

    pub fn add_assign(&mut self, other: &TensorElement) {
        for (t, c) in other.iter() {
            self.add_term(t.clone(), c);
        }
    }

    pub fn scaled(&self, c: &Scalar) -> TensorElement {
        let mut out = TensorElement::zero();
        for (t, x) in self.iter() {
            out.add_term(t.clone(), &(x * c));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Scalar)> {
        self.terms.iter()
    }

    /// `self ⊗ other`.
    pub fn concat(&self, other: &TensorElement) -> TensorElement {
        let mut out = TensorElement::zero();
        for (t, c) in self.iter() {
            for (s, d) in other.iter() {
                let mut u = t.clone();
                u.extend(s);
                out.add_term(u, &(c * d));
            }
        }
        out
    }
}

/// `F` applied to a tensor.
pub fn eval_tensor(f: &MultilinearMap, t: &TensorElement) -> Element {
    let mut out = Element::zero();
    for (tuple, c) in t.iter() {
        out.add_scaled(f.get(tuple), c);
    }
    out
}

/// `Σ_i (−1)^{|op_{b}|(|v_1|+…+|v_{i−1}|)} v_1⊗…⊗op_b(v_i)⊗…⊗v_n`, where
/// `ops[i]` is the table `(b, v) ↦ op_b v` used on slot `i` and
/// `|op_b| = |b| + deg op`.
pub fn covariant_tensor_derivative(ops: &[&MultilinearMap], b: usize, t: &TensorElement) -> TensorElement {
    let mut out = TensorElement::zero();
    let Some(first) = ops.first() else { return out };
    let op_deg = first.slot_degrees(0)[b] as i64 + first.degree() as i64;
    for (tuple, c) in t.iter() {
        debug_assert_eq!(tuple.len(), ops.len());
        let mut before = 0i64;
        for (i, op) in ops.iter().enumerate() {
            let neg = odd(op_deg * before);
            for (j, x) in op.get(&[b, tuple[i]]).iter() {
                let mut nt = tuple.clone();
                nt[i] = j;
                let v = c * x;
                out.add_term(nt, &if neg { -v } else { v });
            }
            before += op.slot_degrees(1)[tuple[i]] as i64;
        }
    }
    out
}

fn apply_op(op: &MultilinearMap, b: usize, x: &Element) -> Element {
    op.eval_mixed(&[Arg::Basis(b), Arg::Elem(x)])
}

/// The table of `λ_1 = ∂` on the k-basis.
pub fn differential_table(m: &DgModule) -> MultilinearMap {
    MultilinearMap::from_fn(vec![m.k_degrees()], m.k_degrees(), 1, |t| m.flat_differential(&Element::basis(t[0])))
}

/// `λ_1, …, λ_N` on the k-basis of a carrier module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketFamily {
    carrier: Arc<DgModule>,
    brackets: Vec<MultilinearMap>,
}

impl BracketFamily {
    pub fn new(carrier: Arc<DgModule>, brackets: Vec<MultilinearMap>) -> Result<Self> {
        if brackets.is_empty() {
            return arg("a bracket family needs at least λ_1");
        }
        let degs = carrier.k_degrees();
        for (k0, m) in brackets.iter().enumerate() {
            if m.arity() != k0 + 1 || m.degree() != 1 {
                return arg(format!("λ_{} must have arity {} and degree 1", k0 + 1, k0 + 1));
            }
            if (0..m.arity()).any(|s| m.slot_degrees(s) != degs.as_slice()) || m.output_degrees() != degs.as_slice() {
                return arg(format!("λ_{} is not defined on the carrier's k-basis", k0 + 1));
            }
        }
        Ok(BracketFamily { carrier, brackets })
    }

    /// `(B, {∂, 0, 0, …})`.
    pub fn trivial(carrier: Arc<DgModule>, n: usize) -> Self {
        let degs = carrier.k_degrees();
        let mut brackets = vec![differential_table(&carrier)];
        for k in 2..=n {
            brackets.push(MultilinearMap::zero(vec![degs.clone(); k], degs.clone(), 1));
        }
        BracketFamily { carrier, brackets }
    }

    pub fn carrier(&self) -> &Arc<DgModule> {
        &self.carrier
    }

    pub fn max_arity(&self) -> usize {
        self.brackets.len()
    }

    /// `λ_k`, 1-based.
    pub fn bracket(&self, k: usize) -> &MultilinearMap {
        &self.brackets[k - 1]
    }

    pub fn brackets(&self) -> &[MultilinearMap] {
        &self.brackets
    }

    /// The same family with `λ_k` replaced.
    pub fn replace(&self, k: usize, map: MultilinearMap) -> Result<BracketFamily> {
        if k == 0 || k > self.brackets.len() {
            return arg(format!("no bracket of arity {k}"));
        }
        let mut brackets = self.brackets.clone();
        brackets[k - 1] = map;
        BracketFamily::new(self.carrier.clone(), brackets)
    }
}

fn check_regular(conn: &Connection) -> Result<()> {
    if conn.degree() != 0 {
        return arg("Kapranov brackets need a δ-connection (degree 0)");
    }
    if **conn.module() != **conn.directions() {
        return arg("the connection must live on B, the dual of the derivation's target");
    }
    Ok(())
}

/// Builds an arity-(k+1) table whose first slot ranges over `dir`.
fn extend_table<F>(prev: &MultilinearMap, dir: &[i32], degree: i32, f: F) -> MultilinearMap
where
    F: Fn(usize, &[usize]) -> Element + Sync,
{
    let mut slots = vec![dir.to_vec()];
    slots.extend((0..prev.arity()).map(|s| prev.slot_degrees(s).to_vec()));
    MultilinearMap::from_fn(slots, prev.output_degrees().to_vec(), degree, |t| f(t[0], &t[1..]))
}

/// `(b_0, rest) ↦ (−1)^{|b_0|}[outer_{b_0}, F](rest)`
/// `= (−1)^{|b_0|}(outer_{b_0} F(rest) − (−1)^{|b_0||F|} F(inner_{b_0}(rest)))`.
fn commutator_step(prev: &MultilinearMap, outer: &MultilinearMap, inner: &[&MultilinearMap]) -> MultilinearMap {
    let dir = outer.slot_degrees(0).to_vec();
    extend_table(prev, &dir, prev.degree(), |b0, rest| {
        let mut v = apply_op(outer, b0, prev.get(rest));
        let t = covariant_tensor_derivative(inner, b0, &TensorElement::basis(rest));
        // graded commutator: ∇_{b_0} passes the degree of F
        let koszul = odd(dir[b0] as i64 * prev.degree() as i64);
        v.add_signed(&eval_tensor(prev, &t), !koszul);
        if odd(dir[b0] as i64) {
            v.neg()
        } else {
            v
        }
    })
}

/// `R_1 = ∂`, `R_2 = ` the Atiyah bilinear form, and
/// `R_{k+1}(b_0,…,b_k) = (−1)^{|b_0|}[∇_{b_0}, R_k](b_1,…,b_k)`
/// `= (−1)^{|b_0|}(∇_{b_0}R_k(b_1,…,b_k) − (−1)^{|b_0|}R_k(∇_{b_0}(b_1⊗…⊗b_k)))`.
pub fn kapranov_brackets(conn: &Connection, n: usize) -> Result<BracketFamily> {
    check_regular(conn)?;
    if n == 0 {
        return arg("max arity must be at least 1");
    }
    let b = conn.module().clone();
    let mut brackets = vec![differential_table(&b)];
    if n >= 2 {
        brackets.push(atiyah_cocycle(conn)?.bilinear);
    }
    if n >= 3 {
        let nabla = conn.covariant_table();
        for k in 2..n {
            let inner = vec![&nabla; k];
            let next = commutator_step(&brackets[k - 1], &nabla, &inner);
            brackets.push(next);
        }
    }
    BracketFamily::new(b, brackets)
}

fn tuple_name(bases: &[&GradedBasis], t: &[usize]) -> String {
    let parts: Vec<&str> = t.iter().enumerate().map(|(s, &i)| bases[s.min(bases.len() - 1)].name(i)).collect();
    format!("({})", parts.join(", "))
}

/// A term of the shuffle sums: outer arity `i`, inner arity `j`, last inner
/// argument `v_k`, and `σ ∈ sh(k−j, j−1)` acting on `v_1..v_{k−1}`.
struct ShuffleTerm {
    i: usize,
    j: usize,
    k: usize,
    sigma: Vec<usize>,
}

fn shuffle_terms(n: usize) -> Vec<ShuffleTerm> {
    let mut out = Vec::new();
    for j in 1..=n {
        let i = n + 1 - j;
        for k in j..=n {
            for sigma in shuffles(k - j, j - 1) {
                out.push(ShuffleTerm { i, j, k, sigma });
            }
        }
    }
    out
}

/// The left side of the shuffle identity for the tuple `v` (0-based):
/// `Σ ε(σ)(−1)^{|v_σ(1)|+…+|v_σ(k−j)|} outer_i(v_σ(1..k−j), inner_j(v_σ(k−j+1..k−1), v_k), v_{k+1..n})`.
fn shuffle_residual<'a, I, O>(v: &[usize], vdeg: &[i32], terms: &[ShuffleTerm], inner: I, outer: O) -> Element
where
    I: Fn(usize, bool) -> &'a MultilinearMap,
    O: Fn(usize) -> &'a MultilinearMap,
{
    let n = v.len();
    let mut out = Element::zero();
    let mut args_inner = Vec::with_capacity(n);
    for t in terms {
        let (i, j, k) = (t.i, t.j, t.k);
        let head = k - j;
        args_inner.clear();
        args_inner.extend(t.sigma[head..].iter().map(|&p| v[p]));
        args_inner.push(v[k - 1]);
        let x = inner(j, k == n).get(&args_inner);
        if x.is_zero() {
            continue;
        }
        let mut parity = koszul_parity(&t.sigma, &vdeg[..k - 1]);
        let dagger: i64 = t.sigma[..head].iter().map(|&p| vdeg[p] as i64).sum();
        parity ^= odd(dagger);
        let mut args: Vec<Arg> = Vec::with_capacity(i);
        args.extend(t.sigma[..head].iter().map(|&p| Arg::Basis(v[p])));
        args.push(Arg::Elem(x));
        args.extend(v[k..].iter().map(|&p| Arg::Basis(p)));
        let val = outer(i).eval_mixed(&args);
        out.add_signed(&val, parity);
    }
    out
}

/// Runs `residual` on every tuple in parallel and records non-zero results
/// in tuple order.
fn check_all_tuples<F>(report: &mut CheckReport, dims: &[usize], label: &str, names: impl Fn(&[usize]) -> String, display: impl Fn(&Element) -> String, residual: F)
where
    F: Fn(&[usize]) -> Element + Sync,
{
    let total: usize = dims.iter().product();
    let bad: Vec<(usize, Element)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let r = residual(&decode(idx, dims));
            (!r.is_zero()).then_some((idx, r))
        })
        .collect();
    report.cases += total;
    for (idx, r) in bad {
        report.fail(format!("{label} {}", names(&decode(idx, dims))), format!("residual {}", display(&r)));
    }
}

/// Verifies the Leibniz_∞[1] identity for every `n ≤ n_max` on all k-basis
/// tuples.
pub fn check_leibniz_infinity(fam: &BracketFamily, n_max: usize) -> Result<CheckReport> {
    if n_max > fam.max_arity() {
        return arg(format!("family has brackets up to arity {}, not {n_max}", fam.max_arity()));
    }
    let names = fam.carrier.k_basis();
    let degs = fam.carrier.k_degrees();
    let mut report = CheckReport::new("Leibniz_∞[1] identities");
    for n in 1..=n_max {
        let terms = shuffle_terms(n);
        check_all_tuples(
            &mut report,
            &vec![degs.len(); n],
            &format!("n={n}"),
            |t| tuple_name(&[&names], t),
            |e| e.display(&names),
            |v| {
                let vdeg: Vec<i32> = v.iter().map(|&i| degs[i]).collect();
                shuffle_residual(v, &vdeg, &terms, |j, _| fam.bracket(j), |i| fam.bracket(i))
            },
        );
    }
    Ok(report)
}

/// Graded A-multilinearity: `F(…, a·v_s, …) = (−1)^{|a|(|F| + |v_1|+…+|v_{s−1}|)} a·F(…)`
/// for every generator `a`, slot and tuple.
pub fn check_a_multilinear(map: &MultilinearMap, slots: &[&DgModule], target: &DgModule) -> CheckReport {
    let mut report = CheckReport::new("A-multilinearity");
    let gens = target.algebra().num_generators();
    let dims = map.dims();
    let total: usize = dims.iter().product();
    let bad: Vec<(usize, usize, usize)> = (0..total)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let t = decode(idx, &dims);
            let mut out = Vec::new();
            let mut before = map.degree() as i64;
            for s in 0..t.len() {
                for g in 0..gens {
                    let a = 1u32 << g;
                    let mut lhs = Element::zero();
                    if let Some((j, neg)) = slots[s].k_left_mul(a, t[s]) {
                        let mut u = t.clone();
                        u[s] = j;
                        lhs.add_signed(map.get(&u), neg);
                    }
                    let mut rhs = Element::zero();
                    rhs.add_signed(&target.flat_left_mul(a, map.get(&t)), odd(before));
                    if lhs != rhs {
                        out.push((idx, s, g));
                    }
                }
                before += map.slot_degrees(s)[t[s]] as i64;
            }
            out
        })
        .collect();
    report.cases += total * dims.len() * gens;
    let bases: Vec<GradedBasis> = slots.iter().map(|m| m.k_basis()).collect();
    let refs: Vec<&GradedBasis> = bases.iter().collect();
    for (idx, s, g) in bad {
        report.fail(
            tuple_name(&refs, &decode(idx, &dims)),
            format!("slot {} fails for generator {}", s + 1, target.algebra().generators().name(g)),
        );
    }
    report
}

/// A-multilinearity of every `λ_k`, `k ≥ 2`.
pub fn check_family_a_linear(fam: &BracketFamily) -> CheckReport {
    let mut report = CheckReport::new("A-multilinearity of brackets");
    let b = &*fam.carrier;
    for k in 2..=fam.max_arity() {
        let slots = vec![b; k];
        let mut r = check_a_multilinear(fam.bracket(k), &slots, b);
        for f in &mut r.failures {
            f.location = format!("λ_{k} {}", f.location);
        }
        report.merge(r);
    }
    report
}

/// `f_1, …, f_N` from one bracket family to another.
#[derive(Debug, Clone)]
pub struct MorphismFamily {
    pub source: Arc<BracketFamily>,
    pub target: Arc<BracketFamily>,
    maps: Vec<MultilinearMap>,
    /// Whether the maps are claimed A-multilinear (false for trivializations).
    pub a_linear: bool,
}

impl MorphismFamily {
    pub fn new(source: Arc<BracketFamily>, target: Arc<BracketFamily>, maps: Vec<MultilinearMap>, a_linear: bool) -> Result<Self> {
        let sd = source.carrier.k_degrees();
        let td = target.carrier.k_degrees();
        for (k0, m) in maps.iter().enumerate() {
            if m.arity() != k0 + 1 || m.degree() != 0 {
                return arg(format!("f_{} must have arity {} and degree 0", k0 + 1, k0 + 1));
            }
            if (0..m.arity()).any(|s| m.slot_degrees(s) != sd.as_slice()) || m.output_degrees() != td.as_slice() {
                return arg(format!("f_{} does not match the source/target k-bases", k0 + 1));
            }
        }
        if maps.is_empty() {
            return arg("a morphism family needs at least f_1");
        }
        Ok(MorphismFamily { source, target, maps, a_linear })
    }

    pub fn identity(fam: Arc<BracketFamily>, n: usize) -> Self {
        let d = fam.carrier.k_degrees();
        let mut maps = vec![MultilinearMap::from_fn(vec![d.clone()], d.clone(), 0, |t| Element::basis(t[0]))];
        for k in 2..=n {
            maps.push(MultilinearMap::zero(vec![d.clone(); k], d.clone(), 0));
        }
        MorphismFamily { source: fam.clone(), target: fam, maps, a_linear: true }
    }

    pub fn max_arity(&self) -> usize {
        self.maps.len()
    }

    /// `f_k`, 1-based.
    pub fn map(&self, k: usize) -> &MultilinearMap {
        &self.maps[k - 1]
    }

    pub fn maps(&self) -> &[MultilinearMap] {
        &self.maps
    }

    pub fn replace(&self, k: usize, map: MultilinearMap) -> Result<MorphismFamily> {
        if k == 0 || k > self.maps.len() {
            return arg(format!("no map of arity {k}"));
        }
        let mut maps = self.maps.clone();
        maps[k - 1] = map;
        MorphismFamily::new(self.source.clone(), self.target.clone(), maps, self.a_linear)
    }

    pub fn check_a_linear(&self) -> CheckReport {
        let mut report = CheckReport::new("A-multilinearity of morphism");
        let (s, t) = (&*self.source.carrier, &*self.target.carrier);
        for k in 1..=self.max_arity() {
            let slots = vec![s; k];
            let mut r = check_a_multilinear(self.map(k), &slots, t);
            for f in &mut r.failures {
                f.location = format!("f_{k} {}", f.location);
            }
            report.merge(r);
        }
        report
    }
}

/// `Σ_I ε(I) λ_q(f_{|I^1|}(v_{I^1}), …, f_{|I^q|}(v_{I^q}))` over ordered
/// partitions with increasing block maxima.
fn partition_sum<'a, L, F>(v: &[usize], vdeg: &[i32], parts: &[Vec<Vec<usize>>], lambda: L, f: F) -> Element
where
    L: Fn(usize) -> Option<&'a MultilinearMap>,
    F: Fn(&[usize]) -> Option<Element>,
{
    let mut out = Element::zero();
    for blocks in parts {
        let Some(lam) = lambda(blocks.len()) else { continue };
        let mut args = Vec::with_capacity(blocks.len());
        let mut skip = false;
        for b in blocks {
            let t: Vec<usize> = b.iter().map(|&p| v[p]).collect();
            match f(&t) {
                Some(x) if !x.is_zero() => args.push(x),
                _ => {
                    skip = true;
                    break;
                }
            }
        }
        if skip {
            continue;
        }
        let order: Vec<usize> = blocks.iter().flatten().copied().collect();
        let parity = koszul_parity(&order, vdeg);
        let refs: Vec<&Element> = args.iter().collect();
        let val = lam.eval(&refs).expect("arity matches block count");
        out.add_signed(&val, parity);
    }
    out
}

/// Verifies the morphism equation for every `n ≤ n_max` on all tuples.
pub fn check_linfty_morphism(m: &MorphismFamily, n_max: usize) -> Result<CheckReport> {
    if n_max > m.max_arity() || n_max > m.source.max_arity() || n_max > m.target.max_arity() {
        return arg(format!("morphism check up to {n_max} needs maps and brackets of that arity"));
    }
    let names = m.source.carrier.k_basis();
    let tnames = m.target.carrier.k_basis();
    let degs = m.source.carrier.k_degrees();
    let mut report = CheckReport::new("Leibniz_∞[1] morphism equation");
    for n in 1..=n_max {
        let mut lhs_terms = Vec::new();
        for k in 0..n {
            for p in 0..n - k {
                for sigma in shuffles(k, p) {
                    lhs_terms.push((k, p, sigma));
                }
            }
        }
        let parts = ordered_partitions(n);
        check_all_tuples(
            &mut report,
            &vec![degs.len(); n],
            &format!("n={n}"),
            |t| tuple_name(&[&names], t),
            |e| e.display(&tnames),
            |v| {
                let vdeg: Vec<i32> = v.iter().map(|&i| degs[i]).collect();
                let mut out = Element::zero();
                for (k, p, sigma) in &lhs_terms {
                    let (k, p) = (*k, *p);
                    let mut inner_args: Vec<usize> = sigma[k..].iter().map(|&q| v[q]).collect();
                    inner_args.push(v[k + p]);
                    let x = m.source.bracket(p + 1).get(&inner_args);
                    if x.is_zero() {
                        continue;
                    }
                    let mut parity = koszul_parity(sigma, &vdeg[..k + p]);
                    parity ^= odd(sigma[..k].iter().map(|&q| vdeg[q] as i64).sum());
                    let mut args: Vec<Arg> = sigma[..k].iter().map(|&q| Arg::Basis(v[q])).collect();
                    args.push(Arg::Elem(x));
                    args.extend(v[k + p + 1..].iter().map(|&q| Arg::Basis(q)));
                    out.add_signed(&m.map(n - p).eval_mixed(&args), parity);
                }
                let rhs = partition_sum(v, &vdeg, &parts, |q| Some(m.target.bracket(q)), |t| Some(m.map(t.len()).get(t).clone()));
                out.sub(&rhs)
            },
        );
    }
    Ok(report)
}

/// `f_1 = φ∨`, `f_{k+1}(b_0,…,b_k) = ∇'_{f_1(b_0)} f_k(b_1,…,b_k) − f_k(∇_{b_0}(b_1⊗…⊗b_k))`,
/// from `Kap(δ)` to `Kap(δ')` for a derivation morphism `φ: δ' → δ`.
/// `conn` lives on the dual of `φ`'s target, `conn2` on the dual of its source.
pub fn kapranov_morphism(
    phi: &DerivationMorphism,
    conn: &Connection,
    conn2: &Connection,
    n: usize,
) -> Result<MorphismFamily> {
    check_regular(conn)?;
    check_regular(conn2)?;
    if conn.derivation() != &phi.target || conn2.derivation() != &phi.source {
        return arg("connections must live over the target and source derivations of φ");
    }
    let source = Arc::new(kapranov_brackets(conn, n)?);
    let target = Arc::new(kapranov_brackets(conn2, n)?);
    let f1m = phi.phi.dual(conn.module().clone(), conn2.module().clone())?;
    morphism_recursion(source, target, &f1m, conn, conn2, n)
}

fn morphism_recursion(
    source: Arc<BracketFamily>,
    target: Arc<BracketFamily>,
    f1m: &ModuleMorphism,
    conn: &Connection,
    conn2: &Connection,
    n: usize,
) -> Result<MorphismFamily> {
    let (b, b2) = (conn.module(), conn2.module());
    let f1 = MultilinearMap::from_fn(vec![b.k_degrees()], b2.k_degrees(), 0, |t| {
        b2.to_flat(&f1m.apply(&b.k_element(t[0])))
    });
    let nabla = conn.covariant_table();
    let nabla2 = conn2.covariant_table();
    let mut maps = vec![f1];
    for k in 1..n {
        let prev = &maps[k - 1];
        let f1 = &maps[0];
        let inner = vec![&nabla; k];
        let next = extend_table(prev, &b.k_degrees(), 0, |b0, rest| {
            let dir = f1.get(&[b0]);
            let mut v = nabla2.eval_mixed(&[Arg::Elem(dir), Arg::Elem(prev.get(rest))]);
            let t = covariant_tensor_derivative(&inner, b0, &TensorElement::basis(rest));
            v = v.sub(&eval_tensor(prev, &t));
            v
        });
        maps.push(next);
    }
    MorphismFamily::new(source, target, maps, true)
}

/// The connection-change family `g^{∇,∇̃}`: `g_1 = id`,
/// `g_{k+1}(b_0,…) = (∇̃_{b_0}∘g_k − g_k∘∇_{b_0})(b_1,…)`.
pub fn connection_change(conn: &Connection, conn2: &Connection, n: usize) -> Result<MorphismFamily> {
    if conn.derivation() != conn2.derivation() || conn.module() != conn2.module() {
        return arg("connection change needs two connections over the same derivation and module");
    }
    kapranov_morphism(&DerivationMorphism::identity(conn.derivation().clone()), conn, conn2, n)
}

/// `φ_1 = id`, `φ_{k+1}(b_0,…,b_k) = ∇_{b_0}φ_k(b_1,…,b_k)`: a k-linear
/// morphism from `(B, {∂,0,0,…})` to `(B, {R_k})`.
pub fn trivialization(conn: &Connection, n: usize) -> Result<MorphismFamily> {
    check_regular(conn)?;
    let b = conn.module().clone();
    let target = Arc::new(kapranov_brackets(conn, n)?);
    let source = Arc::new(BracketFamily::trivial(b.clone(), n));
    let nabla = conn.covariant_table();
    let d = b.k_degrees();
    let mut maps = vec![MultilinearMap::from_fn(vec![d.clone()], d.clone(), 0, |t| Element::basis(t[0]))];
    for k in 1..n {
        let prev = &maps[k - 1];
        let next = extend_table(prev, &d, 0, |b0, rest| apply_op(&nabla, b0, prev.get(rest)));
        maps.push(next);
    }
    MorphismFamily::new(source, target, maps, false)
}

/// `∇' = ∇ + [∂, ∇̂] = ∇ + ∂∇̂ + ∇̂∂`, a connection over `δ + [∂, h]`.
pub fn shifted_connection(conn: &Connection, hat: &Connection) -> Result<Connection> {
    if hat.degree() != -1 || conn.degree() != 0 {
        return arg("expected a δ-connection and an h-connection");
    }
    if conn.module() != hat.module() || conn.omega() != hat.omega() {
        return arg("δ- and h-connections must live on the same module and target");
    }
    let delta2 = homotopy_offset(conn.derivation(), hat.derivation())?;
    let e = conn.module();
    let values = (0..e.rank())
        .map(|i| {
            let mut v = conn.values()[i].clone();
            v.add_assign(&conn.omega_tensor().apply_differential(&hat.values()[i]));
            v.add_assign(&hat.extend(e.diff_of(i)));
            v
        })
        .collect();
    Connection::new(delta2, e.clone(), values)
}

/// The isomorphism `Kap(δ′) → Kap(δ)` for `δ′ = δ + [∂, h]`: `g_1 = id`,
/// `g_2 = 0` and
/// `g_{k+1}(b_0,…,b_k) = Σ_{p≥2} Σ_I ε(I) [∇̂_{b_0}, R_p](g(b_{I^1}),…,g(b_{I^p})) + [∇′_{b_0}, g_k](b_1,…,b_k)`,
/// with graded commutators `[∇̂_{b_0}, R_p] = ∇̂_{b_0}R_p − (−1)^{|b_0|−1}R_p∇̂_{b_0}` and
/// `[∇′_{b_0}, g_k] = ∇′_{b_0}g_k − g_k∇′_{b_0}`. A prefactor `(−1)^{|b_0|}` on
/// the partition sum breaks A-linearity and the morphism equation, so there is none.
pub fn homotopy_iso(conn: &Connection, hat: &Connection, n: usize) -> Result<MorphismFamily> {
    homotopy_iso_variant(
        conn,
        hat,
        n,
        GkConvention { commutator: GkVariant::PrimeBoth, prefix_parity: false, negate_sum: false, koszul_inner: true },
    )
}

/// Which connections enter the commutator term of the `g_k` recursion:
/// (outside, inside) = (target, source), (source, target), (∇', ∇'), (∇, ∇).
#[allow(dead_code)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GkVariant {
    TargetOutside,
    SourceOutside,
    PrimeBoth,
    PlainBoth,
}

/// Sign choices in the `g_k` recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct GkConvention {
    pub commutator: GkVariant,
    /// multiply the partition sum by `(−1)^{|b_0|}`
    pub prefix_parity: bool,
    /// multiply the partition sum by `−1`
    pub negate_sum: bool,
    /// use `(−1)^{|∇̂_{b_0}|}` in the commutator `[∇̂_{b_0}, R_p]`
    pub koszul_inner: bool,
}

pub(crate) fn homotopy_iso_variant(conn: &Connection, hat: &Connection, n: usize, conv: GkConvention) -> Result<MorphismFamily> {
    let variant = conv.commutator;
    check_regular(conn)?;
    if **hat.module() != **conn.module() {
        return arg("h-connection must live on B");
    }
    let conn2 = shifted_connection(conn, hat)?;
    let source = Arc::new(kapranov_brackets(&conn2, n)?);
    let target = Arc::new(kapranov_brackets(conn, n)?);
    if n >= 2 && source.bracket(2) != target.bracket(2) {
        return Err(Error::Consistency("R_2 changed under the homotopy".into()));
    }
    let b = conn.module().clone();
    let d = b.k_degrees();
    let nabla = conn.covariant_table();
    let nabla2 = conn2.covariant_table();
    let nhat = hat.covariant_table();
    let (outer, inner) = match variant {
        GkVariant::TargetOutside => (&nabla, &nabla2),
        GkVariant::SourceOutside => (&nabla2, &nabla),
        GkVariant::PrimeBoth => (&nabla2, &nabla2),
        GkVariant::PlainBoth => (&nabla, &nabla),
    };
    let mut maps = vec![MultilinearMap::from_fn(vec![d.clone()], d.clone(), 0, |t| Element::basis(t[0]))];
    if n >= 2 {
        maps.push(MultilinearMap::zero(vec![d.clone(); 2], d.clone(), 0));
    }
    for k in 2..n {
        let parts: Vec<Vec<Vec<usize>>> = ordered_partitions(k)
            .into_iter()
            .filter(|p| p.len() >= 2 && p.iter().all(|blk| blk.len() != 2))
            .collect();
        let prev = &maps[k - 1];
        let done = &maps;
        let inner_ops = vec![inner; k];
        let next = extend_table(prev, &d, 0, |b0, rest| {
            let vdeg: Vec<i32> = rest.iter().map(|&i| d[i]).collect();
            let hat_deg = d[b0] as i64 - 1;
            // Σ ε(I) [∇̂_{b_0}, R_p](g(b_{I^1}), …)
            let mut sum = Element::zero();
            for blocks in &parts {
                let p = blocks.len();
                let mut args = Vec::with_capacity(p);
                let mut arg_degs = Vec::with_capacity(p);
                for blk in blocks {
                    let t: Vec<usize> = blk.iter().map(|&q| rest[q]).collect();
                    args.push(done[t.len() - 1].get(&t).clone());
                    arg_degs.push(blk.iter().map(|&q| vdeg[q] as i64).sum::<i64>());
                }
                if args.iter().any(|a| a.is_zero()) {
                    continue;
                }
                let rp = target.bracket(p);
                let refs: Vec<&Element> = args.iter().collect();
                let mut c = apply_op(&nhat, b0, &rp.eval(&refs).expect("arity"));
                let mut before = 0i64;
                let mut inside = Element::zero();
                for s in 0..p {
                    let moved = apply_op(&nhat, b0, &args[s]);
                    if !moved.is_zero() {
                        let mut a2: Vec<&Element> = refs.clone();
                        a2[s] = &moved;
                        inside.add_signed(&rp.eval(&a2).expect("arity"), odd(hat_deg * before));
                    }
                    before += arg_degs[s];
                }
                c.add_signed(&inside, !(conv.koszul_inner && odd(hat_deg)));
                let order: Vec<usize> = blocks.iter().flatten().copied().collect();
                sum.add_signed(&c, koszul_parity(&order, &vdeg));
            }
            if (conv.prefix_parity && odd(d[b0] as i64)) ^ conv.negate_sum {
                sum = sum.neg();
            }
            let mut comm = apply_op(outer, b0, prev.get(rest));
            let t = covariant_tensor_derivative(&inner_ops, b0, &TensorElement::basis(rest));
            comm = comm.sub(&eval_tensor(prev, &t));
            sum.add(&comm)
        });
        maps.push(next);
    }
    MorphismFamily::new(source, target, maps, true)
}

/// `(g∘f)_n(b) = Σ_I ε(I) g_q(f_{|I^1|}(b_{I^1}), …, f_{|I^q|}(b_{I^q}))`.
pub fn compose_morphisms(g: &MorphismFamily, f: &MorphismFamily, n: usize) -> Result<MorphismFamily> {
    if n > g.max_arity() || n > f.max_arity() {
        return arg("composition beyond available arity");
    }
    if *f.target != *g.source {
        return arg("morphisms are not composable");
    }
    let sd = f.source.carrier.k_degrees();
    let td = g.target.carrier.k_degrees();
    let mut maps = Vec::with_capacity(n);
    for k in 1..=n {
        let parts = ordered_partitions(k);
        maps.push(MultilinearMap::from_fn(vec![sd.clone(); k], td.clone(), 0, |v| {
            let vdeg: Vec<i32> = v.iter().map(|&i| sd[i]).collect();
            partition_sum(v, &vdeg, &parts, |q| Some(g.map(q)), |t| Some(f.map(t.len()).get(t).clone()))
        }));
    }
    MorphismFamily::new(f.source.clone(), g.target.clone(), maps, f.a_linear && g.a_linear)
}

/// `μ_1, …, μ_N` with `μ_k: B^{⊗(k−1)} ⊗ E → E`.
#[derive(Debug, Clone)]
pub struct ModuleActionFamily {
    pub algebra: Arc<BracketFamily>,
    pub carrier: Arc<DgModule>,
    actions: Vec<MultilinearMap>,
}

impl ModuleActionFamily {
    pub fn new(algebra: Arc<BracketFamily>, carrier: Arc<DgModule>, actions: Vec<MultilinearMap>) -> Result<Self> {
        let bd = algebra.carrier.k_degrees();
        let ed = carrier.k_degrees();
        for (k0, m) in actions.iter().enumerate() {
            let k = k0 + 1;
            if m.arity() != k || m.degree() != 1 {
                return arg(format!("μ_{k} must have arity {k} and degree 1"));
            }
            let slots_ok = (0..k - 1).all(|s| m.slot_degrees(s) == bd.as_slice()) && m.slot_degrees(k - 1) == ed.as_slice();
            if !slots_ok || m.output_degrees() != ed.as_slice() {
                return arg(format!("μ_{k} is not defined on B^⊗{} ⊗ E", k - 1));
            }
        }
        if actions.is_empty() {
            return arg("a module family needs at least μ_1");
        }
        Ok(ModuleActionFamily { algebra, carrier, actions })
    }

    pub fn max_arity(&self) -> usize {
        self.actions.len()
    }

    /// `μ_k`, 1-based.
    pub fn action(&self, k: usize) -> &MultilinearMap {
        &self.actions[k - 1]
    }

    pub fn actions(&self) -> &[MultilinearMap] {
        &self.actions
    }

    pub fn replace(&self, k: usize, map: MultilinearMap) -> Result<ModuleActionFamily> {
        if k == 0 || k > self.actions.len() {
            return arg(format!("no action of arity {k}"));
        }
        let mut actions = self.actions.clone();
        actions[k - 1] = map;
        ModuleActionFamily::new(self.algebra.clone(), self.carrier.clone(), actions)
    }
}

/// The module identities for every `n ≤ n_max`: the shuffle identity with
/// `v_n = w ∈ E`, the inner map being `μ_j` when it contains `w` and `λ_j`
/// otherwise, and the outer map always `μ_i`.
pub fn check_module_identities(m: &ModuleActionFamily, n_max: usize) -> Result<CheckReport> {
    if n_max > m.max_arity() || n_max > m.algebra.max_arity() {
        return arg(format!("module check up to {n_max} needs maps of that arity"));
    }
    let bnames = m.algebra.carrier.k_basis();
    let enames = m.carrier.k_basis();
    let bd = m.algebra.carrier.k_degrees();
    let ed = m.carrier.k_degrees();
    let mut report = CheckReport::new("Leibniz_∞[1] module identities");
    for n in 1..=n_max {
        let terms = shuffle_terms(n);
        let mut dims = vec![bd.len(); n - 1];
        dims.push(ed.len());
        check_all_tuples(
            &mut report,
            &dims,
            &format!("n={n}"),
            |t| {
                let mut bases: Vec<&GradedBasis> = vec![&bnames; n - 1];
                bases.push(&enames);
                tuple_name(&bases, t)
            },
            |e| e.display(&enames),
            |v| {
                let mut vdeg: Vec<i32> = v[..n - 1].iter().map(|&i| bd[i]).collect();
                vdeg.push(ed[v[n - 1]]);
                shuffle_residual(
                    v,
                    &vdeg,
                    &terms,
                    |j, last| if last { m.action(j) } else { m.algebra.bracket(j) },
                    |i| m.action(i),
                )
            },
        );
    }
    Ok(report)
}

/// `μ_1 = ∂_E`, `μ_2 = ` the Atiyah bilinear form of `∇^E`, and
/// `μ_{k+1}(b_0,…,b_{k−1},e) = (−1)^{|b_0|}[∇^E_{b_0}, μ_k](b_1,…,b_{k−1},e)`,
/// with `∇` acting on the B-slots and `∇^E` on the last slot. The module
/// identities are verified up to `n` before returning.
pub fn kapranov_module(conn: &Connection, conn_e: &Connection, n: usize) -> Result<ModuleActionFamily> {
    check_regular(conn)?;
    if conn_e.derivation() != conn.derivation() || conn_e.degree() != 0 {
        return arg("module connection must be a δ-connection over the same δ");
    }
    let algebra = Arc::new(kapranov_brackets(conn, n)?);
    let e = conn_e.module().clone();
    let mut actions = vec![differential_table(&e)];
    if n >= 2 {
        actions.push(atiyah_cocycle(conn_e)?.bilinear);
    }
    if n >= 3 {
        let nabla = conn.covariant_table();
        let nabla_e = conn_e.covariant_table();
        for k in 2..n {
            let mut inner = vec![&nabla; k - 1];
            inner.push(&nabla_e);
            let next = commutator_step(&actions[k - 1], &nabla_e, &inner);
            actions.push(next);
        }
    }
    let fam = ModuleActionFamily::new(algebra, e, actions)?;
    let report = check_module_identities(&fam, n)?;
    if let Some(f) = report.first_failure() {
        return Err(Error::Consistency(format!("module identity fails at {}: {}", f.location, f.detail)));
    }
    Ok(fam)
}

/// Classes and a bilinear operation on them, in coordinates over fixed
/// representatives.
#[derive(Debug, Clone)]
pub struct ClassTable {
    /// Representatives of the left factor's classes, all degrees.
    pub left_reps: Vec<ModuleElement>,
    pub left_degrees: Vec<i32>,
    pub right_reps: Vec<ModuleElement>,
    pub right_degrees: Vec<i32>,
    /// `table[i][j]`: coordinates of `op(left_i, right_j)` over `right_reps`.
    pub table: Vec<Vec<Vec<Scalar>>>,
}

struct Classes {
    cx: CochainComplex,
    reps: Vec<Element>,
    degrees: Vec<i32>,
    /// positions of the representatives of each degree in `reps`
    by_degree: BTreeMap<i32, Vec<usize>>,
}

impl Classes {
    fn new(m: &DgModule) -> Self {
        let cx = CochainComplex::new(m);
        let mut reps = Vec::new();
        let mut degrees = Vec::new();
        let mut by_degree: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for d in cx.degrees_present() {
            for r in cx.cohomology_basis_flat(d) {
                by_degree.entry(d).or_default().push(reps.len());
                reps.push(r);
                degrees.push(d);
            }
        }
        Classes { cx, reps, degrees, by_degree }
    }

    fn coordinates(&self, d: i32, z: &Element) -> Result<Vec<Scalar>> {
        let mut out = vec![Scalar::zero(); self.reps.len()];
        let Some(pos) = self.by_degree.get(&d) else {
            return if self.cx.primitive_flat(d, z)?.is_some() || z.is_zero() {
                Ok(out)
            } else {
                Err(Error::Consistency("class outside the computed cohomology".into()))
            };
        };
        let reps: Vec<Element> = pos.iter().map(|&p| self.reps[p].clone()).collect();
        let c = self
            .cx
            .class_coordinates_flat(d, &reps, z)?
            .ok_or_else(|| Error::Consistency("closed element has no class coordinates".into()))?;
        for (k, &p) in pos.iter().enumerate() {
            out[p] = c[k].clone();
        }
        Ok(out)
    }
}

/// Evaluates a degree-1 bilinear `form` on cohomology representatives of
/// `left` and `right` and records class coordinates of
/// `(−1)^{|x|}form(x, y)` when `left_sign`, of `form(x, y)` otherwise.
pub fn class_table(left: &DgModule, right: &DgModule, form: &MultilinearMap, left_sign: bool) -> Result<ClassTable> {
    let lc = Classes::new(left);
    let rc = Classes::new(right);
    let mut table = Vec::with_capacity(lc.reps.len());
    for (i, x) in lc.reps.iter().enumerate() {
        let mut row = Vec::with_capacity(rc.reps.len());
        for (j, y) in rc.reps.iter().enumerate() {
            let mut v = form.eval(&[x, y])?;
            if left_sign && odd(lc.degrees[i] as i64) {
                v = v.neg();
            }
            if !right.flat_differential(&v).is_zero() {
                return Err(Error::Consistency("bracket of closed elements is not closed".into()));
            }
            row.push(rc.coordinates(lc.degrees[i] + rc.degrees[j] + 1, &v)?);
        }
        table.push(row);
    }
    Ok(ClassTable {
        left_reps: lc.reps.iter().map(|r| left.from_flat(r)).collect(),
        left_degrees: lc.degrees,
        right_reps: rc.reps.iter().map(|r| right.from_flat(r)).collect(),
        right_degrees: rc.degrees,
        table,
    })
}

/// `[[b_1],[b_2]] = (−1)^{|b_1|}[R_2(b_1,b_2)]` on `H(B)`.
pub fn cohomology_leibniz_bracket(conn: &Connection) -> Result<ClassTable> {
    check_regular(conn)?;
    let c = atiyah_cocycle(conn)?;
    class_table(conn.module(), conn.module(), &c.bilinear, true)
}

/// `[b] ▷ [e] = (−1)^{|b|}[At_E(b,e)]` of `H(B)` on `H(E)`.
pub fn cohomology_action(conn: &Connection, conn_e: &Connection) -> Result<ClassTable> {
    check_regular(conn)?;
    if conn_e.derivation() != conn.derivation() {
        return arg("module connection must live over the same derivation");
    }
    let c = atiyah_cocycle(conn_e)?;
    class_table(conn.module(), conn_e.module(), &c.bilinear, true)
}

impl ClassTable {
    fn product(&self, x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.right_reps.len()];
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                for (k, c) in self.table[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += a * b * c;
                    }
                }
            }
        }
        out
    }

    fn unit(n: usize, i: usize) -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); n];
        v[i] = Scalar::from_integer(1.into());
        v
    }

    /// Class-level Leibniz rule `x▷(y▷z) = [x,y]▷z + (−1)^{|x|'|y|'} y▷(x▷z)`,
    /// with `|x|' = |x| + 1`, using `bracket` for `[x,y]` and `self` for `▷`.
    pub fn check_leibniz(&self, bracket: &ClassTable) -> CheckReport {
        let mut report = CheckReport::new("class-level Leibniz rule");
        let nb = self.left_reps.len();
        let ne = self.right_reps.len();
        for x in 0..nb {
            for y in 0..nb {
                for z in 0..ne {
                    report.cases += 1;
                    let ez = Self::unit(ne, z);
                    let lhs = self.product(&Self::unit(nb, x), &self.product(&Self::unit(nb, y), &ez));
                    let xy = bracket.product(&Self::unit(nb, x), &Self::unit(nb, y));
                    let mut rhs = self.product(&xy, &ez);
                    let s = (self.left_degrees[x] as i64 + 1) * (self.left_degrees[y] as i64 + 1);
                    let t = self.product(&Self::unit(nb, y), &self.product(&Self::unit(nb, x), &ez));
                    for (r, v) in rhs.iter_mut().zip(t) {
                        *r += sign_scalar(odd(s)) * v;
                    }
                    if lhs != rhs {
                        report.fail(format!("({x},{y},{z})"), "class-level Leibniz rule fails");
                    }
                }
            }
        }
        report
    }

    /// A pair `(i, j)` with `[x_i, x_j] ≠ −(−1)^{|x_i|'|x_j|'}[x_j, x_i]`.
    pub fn skew_witness(&self) -> Option<(usize, usize)> {
        let n = self.left_reps.len();
        for i in 0..n {
            for j in i..n {
                let s = (self.left_degrees[i] as i64 + 1) * (self.left_degrees[j] as i64 + 1);
                let a = &self.table[i][j];
                let b = &self.table[j][i];
                let skew = a.iter().zip(b).all(|(p, q)| p + sign_scalar(odd(s)) * q == Scalar::zero());
                if !skew {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().flatten().flatten().all(|c| c.is_zero())
    }
}

/// `[b] ▷ λ(e) = λ([b] ▷ [e])` at class level for a degree-0 dg morphism `λ: E → F`.
pub fn check_action_naturality(act_e: &ClassTable, act_f: &ClassTable, lambda: &ModuleMorphism) -> Result<CheckReport> {
    let mut report = CheckReport::new("naturality of the cohomology action");
    let (e, f) = (lambda.source(), lambda.target());
    let fc = Classes::new(f);
    let ne = act_e.right_reps.len();
    for (bi, _) in act_e.left_reps.iter().enumerate() {
        for ei in 0..ne {
            report.cases += 1;
            let le = f.to_flat(&lambda.apply(&act_e.right_reps[ei]));
            let le_c = fc.coordinates(act_e.right_degrees[ei], &le)?;
            let lhs = act_f.product(&ClassTable::unit(act_f.left_reps.len(), bi), &le_c);
            // λ of the class b ▷ e
            let coords = &act_e.table[bi][ei];
            let mut image = Element::zero();
            for (k, c) in coords.iter().enumerate() {
                if !c.is_zero() {
                    image.add_scaled(&f.to_flat(&lambda.apply(&act_e.right_reps[k])), c);
                }
            }
            let deg = act_e.left_degrees[bi] + act_e.right_degrees[ei] + 1;
            let rhs = fc.coordinates(deg, &image)?;
            if lhs != rhs {
                report.fail(format!("({bi},{ei})"), "λ does not commute with the action");
            }
        }
    }
    let _ = e;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdga::{affine2, ce_algebra, sl2, Cdga};
    use crate::derivation::{kaehler_differentials, Derivation};
    use crate::module::dual_module;

    fn kaehler(alg: Arc<Cdga>) -> (Derivation, Connection) {
        let (om, ddr) = kaehler_differentials(&alg);
        let b = Arc::new(dual_module(&om));
        let conn = Connection::trivial(ddr.clone(), b);
        (ddr, conn)
    }

    #[test]
    fn tensor_derivation_rule() {
        let (_, conn) = kaehler(Arc::new(ce_algebra(&affine2()).unwrap()));
        let nabla = conn.covariant_table();
        let n = nabla.dims()[1];
        for b in 0..nabla.dims()[0] {
            for t in 0..n {
                for s in 0..n {
                    let whole = covariant_tensor_derivative(&[&nabla, &nabla], b, &TensorElement::basis(&[t, s]));
                    let left = covariant_tensor_derivative(&[&nabla], b, &TensorElement::basis(&[t]));
                    let right = covariant_tensor_derivative(&[&nabla], b, &TensorElement::basis(&[s]));
                    let op = nabla.slot_degrees(0)[b] as i64;
                    let mut want = left.concat(&TensorElement::basis(&[s]));
                    let sign = sign_scalar(odd(op * nabla.slot_degrees(1)[t] as i64));
                    want.add_assign(&TensorElement::basis(&[t]).concat(&right).scaled(&sign));
                    assert_eq!(whole, want);
                }
            }
        }
    }

    #[test]
    fn brackets_satisfy_leibniz_and_are_a_linear() {
        for alg in [ce_algebra(&affine2()).unwrap(), ce_algebra(&sl2()).unwrap()] {
            let (_, conn) = kaehler(Arc::new(alg));
            let fam = kapranov_brackets(&conn, 4).unwrap();
            let r = check_leibniz_infinity(&fam, 4).unwrap();
            assert!(r.passed(), "{:?}", r.first_failure());
            let r = check_family_a_linear(&fam);
            assert!(r.passed(), "{:?}", r.first_failure());
        }
    }

    #[test]
    fn corrupted_bracket_is_located() {
        let (_, conn) = kaehler(Arc::new(ce_algebra(&affine2()).unwrap()));
        let fam = kapranov_brackets(&conn, 3).unwrap();
        let mut r2 = fam.bracket(2).clone();
        let degs = fam.carrier().k_degrees();
        // find a slot pair whose output degree exists and perturb it
        let target = (0..degs.len()).find(|&o| degs[o] == 2 * degs[0] + 1);
        if let Some(o) = target {
            r2.set(&[0, 0], Element::basis(o));
            let bad = fam.replace(2, r2).unwrap();
            let rep = check_leibniz_infinity(&bad, 3).unwrap();
            assert!(!rep.passed());
        }
    }

    #[test]
    fn trivialization_is_a_morphism() {
        let (_, conn) = kaehler(Arc::new(ce_algebra(&affine2()).unwrap()));
        let t = trivialization(&conn, 4).unwrap();
        let r = check_linfty_morphism(&t, 4).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
    }

    #[test]
    fn identity_morphism_and_composition() {
        let (ddr, conn) = kaehler(Arc::new(ce_algebra(&affine2()).unwrap()));
        let id = kapranov_morphism(&DerivationMorphism::identity(ddr), &conn, &conn, 4).unwrap();
        assert!(check_linfty_morphism(&id, 4).unwrap().passed());
        assert!(id.check_a_linear().passed());
        for k in 2..=4 {
            assert!(id.map(k).is_zero());
        }
        let c = compose_morphisms(&id, &id, 4).unwrap();
        assert_eq!(c.maps(), id.maps());
    }
}

#[cfg(test)]
mod instance_tests {
    use super::*;
    use crate::builders::*;
    use crate::cdga::{affine2, ce_algebra, AlgebraElement};
    use crate::graded::int;
    use crate::module::ModuleElement;

    #[test]
    fn builtins_satisfy_leibniz_to_five() {
        for inst in builtin_instances().unwrap() {
            let fam = kapranov_brackets(&inst.connection, 5).unwrap();
            let r = check_leibniz_infinity(&fam, 5).unwrap();
            assert!(r.passed(), "{}: {:?}", inst.name, r.first_failure());
            assert!(check_family_a_linear(&fam).passed(), "{}", inst.name);
        }
    }

    #[test]
    fn linear_maps_closed_form() {
        // [x,y] = y, E = g, ψ = id: R_2(e_p, e_q) = −[e_p, e_q], R_k = 0 for k ≥ 3
        let o = linear_maps_example();
        let s = linear_map_object(&o).unwrap();
        let fam = kapranov_brackets(&s.connection, 6).unwrap();
        let b = fam.carrier();
        let r2 = fam.bracket(2);
        let g = affine2();
        for p in 0..2 {
            for q in 0..2 {
                let want = Element::from_terms((0..2).map(|k| (b.k_index(0, k), -g.constant(p, q, k).clone())));
                assert_eq!(*r2.get(&[b.k_index(0, p), b.k_index(0, q)]), want);
            }
        }
        assert_eq!(*r2.get(&[b.k_index(0, 0), b.k_index(0, 1)]), Element::basis(b.k_index(0, 1)).scaled(&int(-1)));
        assert!(check_family_a_linear(&fam).passed());
        for k in 3..=6 {
            assert!(fam.bracket(k).is_zero(), "R_{k}");
        }
    }

    fn cartan_like() -> (Connection, Connection) {
        use crate::cdga::AlgebraElement;
        use crate::derivation::Derivation;
        use crate::module::ModuleElement;
        // sl2 with A = span{e}; an arbitrary extension and an arbitrary h
        let p = LiePairData::standard(crate::cdga::sl2(), vec![1]);
        let s = lie_pair_setup(&p).unwrap();
        let n = s.bott.rank();
        let gamma = (0..n)
            .map(|q| (0..n).map(|pp| (0..n).map(|r| int((q + 2 * pp + r) as i64 % 3 - 1)).collect()).collect())
            .collect::<Vec<Vec<Vec<Scalar>>>>();
        let conn = bott_connection(&s, &gamma).unwrap();
        let hv = ModuleElement::term(0, AlgebraElement::scalar(int(3))).add(&ModuleElement::term(1, AlgebraElement::scalar(int(-2))));
        let h = Derivation::new(s.omega.clone(), -1, vec![hv]).unwrap();
        (conn, Connection::trivial(h, s.bott.clone()))
    }

    #[test]
    fn homotopy_iso_for_splittings() {
        let p = sl2_borel();
        let s = lie_pair_setup(&p).unwrap();
        let conn = bott_connection(&s, &canonical_gamma(&p)).unwrap();
        let h = splitting_homotopy(&p, &sl2_borel_shifted()).unwrap();
        let hat = Connection::trivial(h, s.bott.clone());
        let g = homotopy_iso(&conn, &hat, 4).unwrap();
        assert!(g.map(2).is_zero());
        let r = check_linfty_morphism(&g, 4).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(g.check_a_linear().passed());
        // the source is the Kapranov algebra of δ_{j′}
        let d2 = lie_pair_setup(&sl2_borel_shifted()).unwrap().delta;
        assert_eq!(shifted_connection(&conn, &hat).unwrap().derivation().values(), d2.values());
    }

    #[test]
    fn homotopy_iso_with_nonzero_higher_brackets() {
        let (conn, hat) = cartan_like();
        let g = homotopy_iso(&conn, &hat, 5).unwrap();
        assert!(!g.source.bracket(3).is_zero() && !g.target.bracket(4).is_zero());
        let r = check_linfty_morphism(&g, 5).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(g.check_a_linear().passed());
    }

    #[test]
    fn other_g_conventions_fail() {
        let (conn, hat) = cartan_like();
        let literal = GkConvention { commutator: GkVariant::PrimeBoth, prefix_parity: false, negate_sum: false, koszul_inner: true };
        let alternatives = [
            GkConvention { prefix_parity: true, ..literal },
            GkConvention { negate_sum: true, ..literal },
            GkConvention { commutator: GkVariant::PlainBoth, ..literal },
            GkConvention { commutator: GkVariant::TargetOutside, ..literal },
            GkConvention { commutator: GkVariant::SourceOutside, ..literal },
            GkConvention { koszul_inner: false, ..literal },
        ];
        for conv in alternatives {
            let g = homotopy_iso_variant(&conn, &hat, 4, conv).unwrap();
            assert!(!check_linfty_morphism(&g, 4).unwrap().passed(), "{conv:?}");
        }
    }

    #[test]
    fn zero_homotopy_gives_identity() {
        let (conn, hat) = cartan_like();
        let zero = Connection::trivial(crate::derivation::Derivation::zero(hat.omega().clone(), -1), hat.module().clone());
        let g = homotopy_iso(&conn, &zero, 4).unwrap();
        let id = MorphismFamily::identity(g.target.clone(), 4);
        assert_eq!(g.maps(), id.maps());
    }

    fn sl2_connection(gamma: i64) -> (LiePairSetup, Connection) {
        let s = lie_pair_setup(&sl2_borel()).unwrap();
        let c = bott_connection(&s, &[vec![vec![int(gamma)]]]).unwrap();
        (s, c)
    }

    #[test]
    fn sl2_borel_r2_and_r3() {
        let (s, conn) = sl2_connection(3);
        let fam = kapranov_brackets(&conn, 3).unwrap();
        let b = fam.carrier().clone();
        // R_2(f̄, f̄) = 2 e∨·f̄ for the torsion-free extension
        let want = ModuleElement::term(0, AlgebraElement::generator(1).scaled(&int(2)));
        let (_, conn0) = sl2_connection(0);
        let r2_0 = kapranov_brackets(&conn0, 2).unwrap();
        assert_eq!(b.from_flat(r2_0.bracket(2).get(&[0, 0])), want);
        // one step of the recursion written out on elements
        let degs = b.k_degrees();
        let r2 = fam.bracket(2);
        let n = degs.len();
        let mut nonzero = false;
        for t0 in 0..n {
            for t1 in 0..n {
                for t2 in 0..n {
                    let (e0, e1, e2) = (b.k_element(t0), b.k_element(t1), b.k_element(t2));
                    let flat = |m: &ModuleElement| b.to_flat(m);
                    let r = |x: &ModuleElement, y: &ModuleElement| r2.eval(&[&flat(x), &flat(y)]).unwrap();
                    let nab = |x: &ModuleElement| conn.covariant_derivative(&e0, x);
                    let outer = flat(&conn.covariant_derivative(&e0, &b.from_flat(&r(&e1, &e2))));
                    let mut inner = r(&nab(&e1), &e2);
                    inner.add_signed(&r(&e1, &nab(&e2)), odd(degs[t0] as i64 * degs[t1] as i64));
                    let mut v = outer;
                    v.add_signed(&inner, !odd(degs[t0] as i64));
                    if odd(degs[t0] as i64) {
                        v = v.neg();
                    }
                    nonzero |= !v.is_zero();
                    assert_eq!(&v, fam.bracket(3).get(&[t0, t1, t2]), "({t0},{t1},{t2})");
                }
            }
        }
        assert!(nonzero);
        let _ = s;
    }

    #[test]
    fn regular_module_is_the_algebra() {
        for inst in builtin_instances().unwrap() {
            let m = kapranov_module(&inst.connection, &inst.connection, 4).unwrap();
            for k in 1..=4 {
                assert_eq!(m.action(k), m.algebra.bracket(k), "{} μ_{k}", inst.name);
            }
        }
    }

    #[test]
    fn coadjoint_module_identities() {
        let s = linear_map_object(&linear_maps_example()).unwrap();
        let e = Arc::new(coadjoint_module(s.algebra.clone(), &crate::cdga::affine2()).unwrap());
        let ce = Connection::trivial(s.delta.clone(), e.clone());
        let m = kapranov_module(&s.connection, &ce, 4).unwrap();
        assert!(!m.action(2).is_zero());
        let r = check_module_identities(&m, 4).unwrap();
        assert!(r.passed() && r.cases > 0);
        let bd = m.algebra.carrier().clone();
        for k in 2..=4 {
            let mut slots: Vec<&DgModule> = vec![&bd; k - 1];
            slots.push(&e);
            assert!(check_a_multilinear(m.action(k), &slots, &e).passed(), "μ_{k}");
        }
        // a corrupted μ_2 (one extra table entry that is not closed) is caught at n = 2
        let ed = e.k_degrees();
        let mu2 = m.action(2);
        let mut caught = false;
        'search: for i in 0..mu2.len() {
            let t = mu2.tuple(i);
            let d = mu2.degree() + mu2.slot_degrees(0)[t[0]] + mu2.slot_degrees(1)[t[1]];
            for o in (0..ed.len()).filter(|&o| ed[o] == d) {
                let mut bad = mu2.clone();
                let mut v = bad.get(&t).clone();
                v.add_term(o, &int(1));
                bad.set(&t, v);
                let r = check_module_identities(&m.replace(2, bad).unwrap(), 2).unwrap();
                if let Some(f) = r.first_failure() {
                    assert!(f.location.starts_with("n=2"));
                    caught = true;
                    break 'search;
                }
            }
        }
        assert!(caught);
    }

    #[test]
    fn zero_derivation_module_is_trivial() {
        let alg = Arc::new(ce_algebra(&crate::cdga::affine2()).unwrap());
        let e = Arc::new(coadjoint_module(alg.clone(), &crate::cdga::affine2()).unwrap());
        let om = Arc::new(crate::builders::ce_module(alg, vec!["w".into()], 1, &[vec![vec![int(0)]], vec![vec![int(0)]]]).unwrap());
        let zero = crate::derivation::Derivation::zero(om.clone(), 0);
        let b = Arc::new(crate::module::dual_module(&om));
        let m = kapranov_module(&Connection::trivial(zero.clone(), b), &Connection::trivial(zero, e), 4).unwrap();
        for k in 2..=4 {
            assert!(m.action(k).is_zero());
        }
    }

    /// `g_{k+1}(b_0,…) = ∇̃_{b_0}g_k(…) − Σ_i ± g_k(…, ∇_{b_0}b_i, …)` on elements.
    fn connection_change_oracle(c1: &Connection, c2: &Connection) -> Vec<MultilinearMap> {
        let b = c1.module().clone();
        let d = b.k_degrees();
        let mut maps = vec![MultilinearMap::from_fn(vec![d.clone()], d.clone(), 0, |t| Element::basis(t[0]))];
        for k in 1..3 {
            let prev = maps[k - 1].clone();
            let next = MultilinearMap::from_fn(vec![d.clone(); k + 1], d.clone(), 0, |t| {
                let e0 = b.k_element(t[0]);
                let args: Vec<Element> = t[1..].iter().map(|&i| Element::basis(i)).collect();
                let refs: Vec<&Element> = args.iter().collect();
                let mut v = b.to_flat(&c2.covariant_derivative(&e0, &b.from_flat(&prev.eval(&refs).unwrap())));
                let mut before = 0i64;
                for i in 0..k {
                    let moved = b.to_flat(&c1.covariant_derivative(&e0, &b.k_element(t[1 + i])));
                    let mut a2 = refs.clone();
                    a2[i] = &moved;
                    v.add_signed(&prev.eval(&a2).unwrap(), !odd(d[t[0]] as i64 * before));
                    before += d[t[1 + i]] as i64;
                }
                v
            });
            maps.push(next);
        }
        maps
    }

    #[test]
    fn connection_change_family() {
        let p = LiePairData::standard(crate::cdga::sl2(), vec![1]);
        let s = lie_pair_setup(&p).unwrap();
        let c1 = bott_connection(&s, &canonical_gamma(&p)).unwrap();
        let n = s.bott.rank();
        let gamma = (0..n).map(|q| (0..n).map(|pp| (0..n).map(|r| int(((q * 5 + pp * 3 + r) % 4) as i64 - 2)).collect()).collect()).collect::<Vec<Vec<Vec<Scalar>>>>();
        let c2 = bott_connection(&s, &gamma).unwrap();
        let g = connection_change(&c1, &c2, 4).unwrap();
        assert_eq!(g.map(1), &MorphismFamily::identity(g.source.clone(), 1).maps()[0]);
        assert!(!g.map(2).is_zero());
        let r = check_linfty_morphism(&g, 4).unwrap();
        assert!(r.passed(), "{:?}", r.first_failure());
        assert!(g.check_a_linear().passed());
        let oracle = connection_change_oracle(&c1, &c2);
        assert_eq!(&g.maps()[..3], &oracle[..]);
    }

    #[test]
    fn functorial_morphisms_on_builtins() {
        for inst in builtin_instances().unwrap() {
            let phi = crate::derivation::universal_factorization(&inst.delta).unwrap();
            let b1 = Arc::new(crate::module::dual_module(phi.source.target()));
            let c1 = Connection::trivial(phi.source.clone(), b1);
            let f = kapranov_morphism(&phi, &inst.connection, &c1, 4).unwrap();
            let r = check_linfty_morphism(&f, 4).unwrap();
            assert!(r.passed(), "{}: {:?}", inst.name, r.first_failure());
            assert!(f.check_a_linear().passed());
            let id = kapranov_morphism(&DerivationMorphism::identity(inst.delta.clone()), &inst.connection, &inst.connection, 4).unwrap();
            assert!((2..=4).all(|k| id.map(k).is_zero()));
        }
    }

    #[test]
    fn composition_matches_composite() {
        // ψ: Ω¹ → Ω (universal) and φ = 2·id: δ → 2δ
        let (s, conn) = sl2_connection(1);
        let delta = s.delta.clone();
        let psi = crate::derivation::universal_factorization(&delta).unwrap();
        let two = int(2);
        let delta2 = delta.scaled(&two);
        let phi = DerivationMorphism::new(delta.clone(), delta2.clone(), ModuleMorphism::identity(s.omega.clone()).scaled(&two)).unwrap();
        let values2 = conn.values().iter().map(|v| v.scaled(&two)).collect();
        let conn2 = Connection::new(delta2, conn.module().clone(), values2).unwrap();
        let b1 = Arc::new(crate::module::dual_module(psi.source.target()));
        let c1 = Connection::trivial(psi.source.clone(), b1);
        let k_phi = kapranov_morphism(&phi, &conn2, &conn, 3).unwrap();
        let k_psi = kapranov_morphism(&psi, &conn, &c1, 3).unwrap();
        let k_comp = kapranov_morphism(&phi.after(&psi).unwrap(), &conn2, &c1, 3).unwrap();
        let composed = compose_morphisms(&k_psi, &k_phi, 3).unwrap();
        assert_eq!(composed.maps(), k_comp.maps());
        assert!(check_linfty_morphism(&composed, 3).unwrap().passed());
    }

    #[test]
    fn trivialization_dichotomy() {
        for inst in builtin_instances().unwrap() {
            let t = trivialization(&inst.connection, 4).unwrap();
            let r = check_linfty_morphism(&t, 4).unwrap();
            assert!(r.passed(), "{}: {:?}", inst.name, r.first_failure());
            let b = inst.connection.module().clone();
            let a_lin = check_a_multilinear(t.map(2), &[&b, &b], &b).passed();
            let delta_zero = inst.delta.values().iter().all(|v| v.is_zero());
            assert_eq!(a_lin, delta_zero, "{}", inst.name);
        }
        let (_, conn) = sl2_connection(0);
        let t = trivialization(&conn, 2).unwrap();
        assert_eq!(t.map(2), &conn.covariant_table());
    }

    fn negated(m: &MultilinearMap) -> MultilinearMap {
        let slots = (0..m.arity()).map(|k| m.slot_degrees(k).to_vec()).collect();
        MultilinearMap::from_fn(slots, m.output_degrees().to_vec(), m.degree(), |t| m.get(t).neg())
    }

    #[test]
    fn linear_map_bracket_is_minus_psi_product() {
        let mut nonzero = 0;
        for (name, o) in crate::builders::small_linear_map_family() {
            let st = crate::builders::linear_map_object(&o).unwrap();
            let b = st.connection.module();
            let r2 = atiyah_cocycle(&st.connection).unwrap().bilinear;
            let p = crate::builders::psi_product_form(&o, b);
            assert_eq!(r2, negated(&p), "{name}");
            if (0..p.len()).any(|i| !p.get(&p.tuple(i)).is_zero()) {
                nonzero += 1;
            }
            let t = cohomology_leibniz_bracket(&st.connection).unwrap();
            let q = class_table(b, b, &negated(&p), true).unwrap();
            assert_eq!(t.table, q.table, "{name}");
        }
        assert!(nonzero >= 10);
    }

    #[test]
    fn cohomology_bracket_vanishes_on_small_family() {
        let s = crate::builders::search_non_skew().unwrap();
        assert!(s.examined > 100 && s.with_cohomology > 100, "{s:?}");
        assert_eq!(s.nonzero_bracket, 0);
        assert_eq!(s.nonzero_psi_product, 0);
        assert!(s.witness.is_none());
    }

    fn family_member(prefix: &str) -> (crate::builders::LinearMapObject, crate::builders::LinearMapSetup) {
        let (_, o) = crate::builders::small_linear_map_family()
            .into_iter()
            .find(|(n, o)| n.starts_with(prefix) && o.psi.iter().flatten().any(|c| !c.is_zero()))
            .unwrap();
        let st = crate::builders::linear_map_object(&o).unwrap();
        (o, st)
    }

    #[test]
    fn zero_derivation_gives_zero_bracket() {
        let inst = builtin_instances().unwrap().into_iter().find(|i| i.name == "trivial").unwrap();
        let t = cohomology_leibniz_bracket(&inst.connection).unwrap();
        assert!(!t.left_reps.is_empty());
        assert!(t.is_zero());
        let r = kapranov_brackets(&inst.connection, 3).unwrap();
        assert!(r.brackets().iter().all(|m| (0..m.len()).all(|i| m.get(&m.tuple(i)).is_zero())));
    }

    #[test]
    fn regular_action_matches_bracket_and_leibniz_holds() {
        for prefix in ["abelian/J(0)", "affine/N(2)", "affine/adjoint+C(0)"] {
            let (_, st) = family_member(prefix);
            let c = &st.connection;
            let br = cohomology_leibniz_bracket(c).unwrap();
            let act = cohomology_action(c, c).unwrap();
            assert!(!br.left_reps.is_empty(), "{prefix}");
            assert_eq!(br.table, act.table, "{prefix}");
            assert!(act.check_leibniz(&br).passed(), "{prefix}");
        }
    }

    #[test]
    fn action_is_natural_under_dg_endomorphisms() {
        let (_, st) = family_member("abelian/J(0)");
        let c = &st.connection;
        let act = cohomology_action(c, c).unwrap();
        let morphs = crate::module::dg_morphisms(c.module(), c.module(), 0).unwrap();
        assert!(morphs.len() >= 2);
        for lambda in &morphs {
            assert!(check_action_naturality(&act, &act, lambda).unwrap().passed());
        }
    }

    #[test]
    fn class_table_detects_non_skew_and_non_leibniz() {
        let u = |v: &[i64]| v.iter().map(|&x| int(x)).collect::<Vec<_>>();
        // two classes of degree −1, [x_0, x_1] = x_0 and [x_1, x_0] = 0
        let t = ClassTable {
            left_reps: vec![ModuleElement::basis(0), ModuleElement::basis(1)],
            left_degrees: vec![-1, -1],
            right_reps: vec![ModuleElement::basis(0), ModuleElement::basis(1)],
            right_degrees: vec![-1, -1],
            table: vec![vec![u(&[0, 0]), u(&[1, 0])], vec![u(&[0, 0]), u(&[0, 0])]],
        };
        assert_eq!(t.skew_witness(), Some((0, 1)));
        assert!(!t.is_zero());
        // the left-regular action of a non-Leibniz table
        let mut bad = t.clone();
        bad.table[1][0] = u(&[0, 1]);
        assert!(!bad.check_leibniz(&bad).passed());
        // [x_1, x_1] = x_0 and nothing else: Leibniz but not skew
        let mut good = t.clone();
        good.table = vec![vec![u(&[0, 0]), u(&[0, 0])], vec![u(&[0, 0]), u(&[1, 0])]];
        assert!(good.check_leibniz(&good).passed());
        assert_eq!(good.skew_witness(), Some((1, 1)));
    }
}
