//! Exterior cdgas on degree-1 generators, and Chevalley–Eilenberg algebras.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::error::{arg, Error, Result};
use crate::graded::{int, odd, GradedBasis, Scalar};
use crate::report::CheckReport;

/// Exterior monomial as a bitmask over generator indices.
pub type Monomial = u32;

pub fn mono_degree(m: Monomial) -> i32 {
    m.count_ones() as i32
}

/// Product of two monomials: `None` if they share a generator, otherwise the
/// union together with the parity of the sorting sign.
#[inline]
pub fn mono_mul(m1: Monomial, m2: Monomial) -> Option<(Monomial, bool)> {
    if m1 & m2 != 0 {
        return None;
    }
    let mut inversions = 0u32;
    let mut rest = m2;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if j >= 31 { 0 } else { m1 >> (j + 1) };
        inversions += above.count_ones();
    }
    Some((m1 | m2, inversions % 2 == 1))
}

pub fn mono_generators(m: Monomial) -> Vec<usize> {
    (0..32).filter(|i| m & (1 << i) != 0).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AlgebraElement {
    terms: BTreeMap<Monomial, Scalar>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement::default()
    }

    pub fn one() -> Self {
        AlgebraElement::monomial(0, Scalar::one())
    }

    pub fn scalar(c: Scalar) -> Self {
        AlgebraElement::monomial(0, c)
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Self {
        let mut a = AlgebraElement::zero();
        a.add_term(m, &c);
        a
    }

    pub fn generator(i: usize) -> Self {
        AlgebraElement::monomial(1 << i, Scalar::one())
    }

    /// Product of generators in the given order, e.g. `[1, 0]` is ξ₁ξ₀ = −ξ₀ξ₁.
    pub fn word(gens: &[usize]) -> Self {
        gens.iter().fold(AlgebraElement::one(), |acc, &g| acc.mul(&AlgebraElement::generator(g)))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut a = AlgebraElement::zero();
        for (m, c) in terms {
            a.add_term(m, &c);
        }
        a
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &Scalar)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: Monomial) -> Scalar {
        self.terms.get(&m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Scalar::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add_assign(&mut self, other: &AlgebraElement) {
        for (m, c) in other.terms() {
            self.add_term(m, c);
        }
    }

    pub fn sub_assign(&mut self, other: &AlgebraElement) {
        for (m, c) in other.terms() {
            self.add_term(m, &-c);
        }
    }

    pub fn add_signed(&mut self, other: &AlgebraElement, negative: bool) {
        if negative {
            self.sub_assign(other)
        } else {
            self.add_assign(other)
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> AlgebraElement {
        self.scaled(&-Scalar::one())
    }

    pub fn scaled(&self, c: &Scalar) -> AlgebraElement {
        if c.is_zero() {
            return AlgebraElement::zero();
        }
        AlgebraElement { terms: self.terms.iter().map(|(m, v)| (*m, v * c)).collect() }
    }

    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (m1, c1) in self.terms() {
            for (m2, c2) in other.terms() {
                if let Some((m, neg)) = mono_mul(m1, m2) {
                    let c = c1 * c2;
                    out.add_term(m, &if neg { -c } else { c });
                }
            }
        }
        out
    }

    /// Degree if homogeneous; `None` for zero or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<i32> {
        let mut degs = self.terms.keys().map(|m| mono_degree(*m));
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    /// Splits into homogeneous components keyed by degree.
    pub fn by_degree(&self) -> BTreeMap<i32, AlgebraElement> {
        let mut out: BTreeMap<i32, AlgebraElement> = BTreeMap::new();
        for (m, c) in self.terms() {
            out.entry(mono_degree(m)).or_default().add_term(m, c);
        }
        out
    }

    /// Multiplies each term by `(-1)^(k * deg)`.
    pub fn twisted(&self, k: i64) -> AlgebraElement {
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, if odd(k * mono_degree(*m) as i64) { -c } else { c.clone() }))
                .collect(),
        }
    }

    pub fn display(&self, gens: &GradedBasis) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms()
            .map(|(m, c)| {
                let name = mono_name(m, gens);
                if m == 0 {
                    c.to_string()
                } else if c.is_one() {
                    name
                } else if *c == -Scalar::one() {
                    format!("-{name}")
                } else {
                    format!("{c}*{name}")
                }
            })
            .collect();
        parts.join(" + ")
    }
}

pub fn mono_name(m: Monomial, gens: &GradedBasis) -> String {
    if m == 0 {
        return "1".into();
    }
    mono_generators(m).iter().map(|&g| gens.name(g)).collect::<Vec<_>>().join("·")
}

/// Free graded-commutative algebra on degree-1 generators with a differential
/// given on generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cdga {
    generators: GradedBasis,
    diff: Vec<AlgebraElement>,
    monomials: Vec<Monomial>,
    mono_index: Vec<usize>,
}

pub const MAX_GENERATORS: usize = 12;

impl Cdga {
    /// Builds the presentation; only degrees are checked here, d² = 0 is left
    /// to [`Cdga::validate`].
    pub fn new(names: Vec<String>, diff: Vec<AlgebraElement>) -> Result<Self> {
        if names.len() != diff.len() {
            return arg("one differential value per generator required");
        }
        if names.len() > MAX_GENERATORS {
            return arg(format!("at most {MAX_GENERATORS} generators supported"));
        }
        for (i, d) in diff.iter().enumerate() {
            if !d.is_zero() && d.homogeneous_degree() != Some(2) {
                return Err(Error::Validation(format!("d({}) is not of degree 2", names[i])));
            }
            if d.terms().any(|(m, _)| m >> names.len() != 0) {
                return arg(format!("d({}) mentions an unknown generator", names[i]));
            }
        }
        let generators = GradedBasis::new(names.into_iter().map(|n| (n, 1)).collect())?;
        let n = generators.len();
        let mut monomials: Vec<Monomial> = (0..(1u32 << n)).collect();
        monomials.sort_by_key(|m| (m.count_ones(), mono_generators(*m)));
        let mut mono_index = vec![0; 1 << n];
        for (i, m) in monomials.iter().enumerate() {
            mono_index[*m as usize] = i;
        }
        Ok(Cdga { generators, diff, monomials, mono_index })
    }

    pub fn generators(&self) -> &GradedBasis {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn diff_on_generator(&self, i: usize) -> &AlgebraElement {
        &self.diff[i]
    }

    /// All monomials ordered by degree, then lexicographically.
    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn mono_index(&self, m: Monomial) -> usize {
        self.mono_index[m as usize]
    }

    pub fn apply_differential(&self, a: &AlgebraElement) -> AlgebraElement {
        let mut out = AlgebraElement::zero();
        for (m, c) in a.terms() {
            let gens = mono_generators(m);
            for (r, &g) in gens.iter().enumerate() {
                let pre = AlgebraElement::word(&gens[..r]);
                let suf = AlgebraElement::word(&gens[r + 1..]);
                let term = pre.mul(&self.diff[g]).mul(&suf);
                let s = if r % 2 == 1 { -c.clone() } else { c.clone() };
                out.add_assign(&term.scaled(&s));
            }
        }
        out
    }

    pub fn validate(&self) -> CheckReport {
        let mut report = CheckReport::new("cdga d^2 = 0");
        for i in 0..self.num_generators() {
            report.cases += 1;
            let dd = self.apply_differential(&self.diff[i]);
            if !dd.is_zero() {
                report.fail(
                    self.generators.name(i).to_string(),
                    format!("d(d({})) = {}", self.generators.name(i), dd.display(&self.generators)),
                );
            }
        }
        report
    }
}

/// Finite-dimensional Lie algebra by structure constants `c[i][j][k] = c^k_{ij}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieAlgebra {
    names: Vec<String>,
    c: Vec<Vec<Vec<Scalar>>>,
}

impl LieAlgebra {
    /// `brackets` lists `[x_i, x_j] = Σ_k c_k x_k`; the opposite order is implied.
    pub fn new(names: Vec<String>, brackets: &[(usize, usize, Vec<(usize, Scalar)>)]) -> Result<Self> {
        let n = names.len();
        let mut set = vec![vec![false; n]; n];
        let mut c = vec![vec![vec![Scalar::zero(); n]; n]; n];
        for (i, j, vals) in brackets {
            let (i, j) = (*i, *j);
            if i >= n || j >= n {
                return arg(format!("bracket index out of range ({i},{j})"));
            }
            let mut v = vec![Scalar::zero(); n];
            for (k, s) in vals {
                if *k >= n {
                    return arg(format!("bracket value index {k} out of range"));
                }
                v[*k] += s;
            }
            if i == j && v.iter().any(|s| !s.is_zero()) {
                return Err(Error::Validation(format!("[{0},{0}] must vanish", names[i])));
            }
            let neg: Vec<Scalar> = v.iter().map(|s| -s).collect();
            if (set[i][j] && c[i][j] != v) || (set[j][i] && c[j][i] != neg) {
                return Err(Error::Validation(format!(
                    "inconsistent brackets for ({},{})",
                    names[i], names[j]
                )));
            }
            set[i][j] = true;
            set[j][i] = true;
            c[i][j] = v;
            c[j][i] = neg;
        }
        Ok(LieAlgebra { names, c })
    }

    /// Takes the structure constants verbatim, skew-symmetric or not.
    pub fn from_constants(names: Vec<String>, c: Vec<Vec<Vec<Scalar>>>) -> Self {
        LieAlgebra { names, c }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> &Scalar {
        &self.c[i][j][k]
    }

    pub fn bracket_basis(&self, i: usize, j: usize) -> &[Scalar] {
        &self.c[i][j]
    }

    pub fn bracket(&self, x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
        let n = self.dim();
        let mut out = vec![Scalar::zero(); n];
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() {
                    continue;
                }
                let s = &x[i] * &y[j];
                for k in 0..n {
                    out[k] += &s * &self.c[i][j][k];
                }
            }
        }
        out
    }

    /// First `(i,j,k,l)` where the Jacobi sum is non-zero.
    pub fn jacobi_violation(&self) -> Option<(usize, usize, usize, usize)> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = Scalar::zero();
                        for m in 0..n {
                            s += &self.c[i][j][m] * &self.c[m][k][l];
                            s += &self.c[j][k][m] * &self.c[m][i][l];
                            s += &self.c[k][i][m] * &self.c[m][j][l];
                        }
                        if !s.is_zero() {
                            return Some((i, j, k, l));
                        }
                    }
                }
            }
        }
        None
    }

    pub fn check_jacobi(&self) -> Result<()> {
        match self.jacobi_violation() {
            None => Ok(()),
            Some((i, j, k, l)) => Err(Error::Validation(format!(
                "Jacobi identity fails at (i,j,k,l) = ({},{},{},{}) [{}, {}, {}; component {}]",
                i, j, k, l, self.names[i], self.names[j], self.names[k], self.names[l]
            ))),
        }
    }

    pub fn dual_names(&self) -> Vec<String> {
        self.names.iter().map(|n| format!("{n}∨")).collect()
    }
}

/// Chevalley–Eilenberg algebra with `d(ξ^k) = −Σ_{i<j} c^k_{ij} ξ^i ξ^j`.
pub fn ce_algebra(g: &LieAlgebra) -> Result<Cdga> {
    g.check_jacobi()?;
    ce_algebra_unchecked(g)
}

/// Same formula without the Jacobi precheck.
pub fn ce_algebra_unchecked(g: &LieAlgebra) -> Result<Cdga> {
    let n = g.dim();
    let mut diff = Vec::with_capacity(n);
    for k in 0..n {
        let mut d = AlgebraElement::zero();
        for i in 0..n {
            for j in i + 1..n {
                d.add_term((1 << i) | (1 << j), &-g.constant(i, j, k).clone());
            }
        }
        diff.push(d);
    }
    Cdga::new(g.dual_names(), diff)
}

pub fn sl2() -> LieAlgebra {
    LieAlgebra::new(
        vec!["h".into(), "e".into(), "f".into()],
        &[(0, 1, vec![(1, int(2))]), (0, 2, vec![(2, int(-2))]), (1, 2, vec![(0, int(1))])],
    )
    .expect("sl2 constants")
}

pub fn abelian(names: &[&str]) -> LieAlgebra {
    LieAlgebra::new(names.iter().map(|s| s.to_string()).collect(), &[]).expect("abelian")
}

/// The two-dimensional Lie algebra `[x,y] = y`.
pub fn affine2() -> LieAlgebra {
    LieAlgebra::new(vec!["x".into(), "y".into()], &[(0, 1, vec![(1, int(1))])]).expect("[x,y]=y")
}
