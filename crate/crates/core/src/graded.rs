//! Exact scalars, graded bases, sparse vectors, Koszul signs, shuffles and
//! multilinear tables.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{arg, Error, Result};

pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let t = s.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let q: BigInt = q.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Scalar::new(p, q))
}

pub fn format_scalar(c: &Scalar) -> String {
    c.to_string()
}

/// `(-1)^n` as a parity flag: true means negative.
#[inline]
pub fn odd(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

#[inline]
pub fn sign_scalar(negative: bool) -> Scalar {
    if negative {
        -Scalar::one()
    } else {
        Scalar::one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedBasis {
    entries: Vec<(String, i32)>,
}

impl GradedBasis {
    pub fn new(entries: Vec<(String, i32)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, _) in &entries {
            if !seen.insert(name.as_str()) {
                return arg(format!("duplicate basis name {name:?}"));
            }
        }
        Ok(GradedBasis { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].0
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.entries[i].1
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == name)
    }

    pub fn entries(&self) -> &[(String, i32)] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Zero,
    Homogeneous(i32),
    Inhomogeneous,
}

/// Sparse vector over a basis; zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Element {
    coeffs: BTreeMap<usize, Scalar>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn basis(i: usize) -> Self {
        let mut e = Element::zero();
        e.coeffs.insert(i, Scalar::one());
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, Scalar)>) -> Self {
        let mut e = Element::zero();
        for (i, c) in terms {
            e.add_term(i, &c);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.coeffs.get(&i).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> {
        self.coeffs.iter().map(|(i, c)| (*i, c))
    }

    pub fn add_term(&mut self, i: usize, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(i).or_insert_with(Scalar::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn add_scaled(&mut self, other: &Element, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (i, v) in other.iter() {
            self.add_term(i, &(v * c));
        }
    }

    /// Adds `other` or subtracts it when `negative`.
    pub fn add_signed(&mut self, other: &Element, negative: bool) {
        for (i, v) in other.iter() {
            if negative {
                self.add_term(i, &-v);
            } else {
                self.add_term(i, v);
            }
        }
    }

    pub fn scaled(&self, c: &Scalar) -> Element {
        let mut out = Element::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn neg(&self) -> Element {
        self.scaled(&-Scalar::one())
    }

    pub fn sub(&self, other: &Element) -> Element {
        let mut out = self.clone();
        out.add_signed(other, true);
        out
    }

    pub fn add(&self, other: &Element) -> Element {
        let mut out = self.clone();
        out.add_signed(other, false);
        out
    }

    pub fn degree(&self, degrees: &[i32]) -> Degree {
        let mut found = None;
        for i in self.coeffs.keys() {
            let d = degrees[*i];
            match found {
                None => found = Some(d),
                Some(f) if f != d => return Degree::Inhomogeneous,
                _ => {}
            }
        }
        match found {
            None => Degree::Zero,
            Some(d) => Degree::Homogeneous(d),
        }
    }

    /// Renders with basis names, e.g. `2*a - 1/3*b`.
    pub fn display(&self, basis: &GradedBasis) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (i, c)) in self.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if !a.is_one() {
                out.push_str(&format!("{a}*"));
            }
            out.push_str(basis.name(i));
        }
        out
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(i, c)| format!("{c}*[{i}]")).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Koszul parity of the arrangement `w_p = v_{sigma[p]}` (0-based): true when
/// the sign is -1. Each inverted pair of symbols contributes the product of
/// their degrees.
pub fn koszul_parity(sigma: &[usize], degs: &[i32]) -> bool {
    let mut parity = 0i64;
    for p in 0..sigma.len() {
        for q in p + 1..sigma.len() {
            if sigma[p] > sigma[q] {
                parity += (degs[sigma[p]] as i64) * (degs[sigma[q]] as i64);
            }
        }
    }
    odd(parity)
}

fn check_permutation(sigma: &[usize]) -> Result<()> {
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s >= sigma.len() || seen[s] {
            return arg(format!("{sigma:?} is not a permutation"));
        }
        seen[s] = true;
    }
    Ok(())
}

/// Koszul sign of rearranging graded symbols of degrees `degs` into the order
/// `degs[sigma[0]], degs[sigma[1]], ...`.
pub fn koszul_sign(sigma: &[usize], degs: &[i32]) -> Result<Scalar> {
    if sigma.len() != degs.len() {
        return arg(format!("permutation of {} symbols but {} degrees", sigma.len(), degs.len()));
    }
    check_permutation(sigma)?;
    Ok(sign_scalar(koszul_parity(sigma, degs)))
}

/// The arrangement obtained by first applying `tau` and then `sigma` to the
/// rearranged list: `(sigma . tau)[p] = tau[sigma[p]]`. With this order,
/// `eps(sigma . tau, d) = eps(sigma, d o tau) * eps(tau, d)`.
pub fn compose(sigma: &[usize], tau: &[usize]) -> Vec<usize> {
    sigma.iter().map(|&s| tau[s]).collect()
}

/// All (p,q)-shuffles as 0-based arrangements, ordered lexicographically by
/// the image of the first block.
pub fn shuffles(p: usize, q: usize) -> Vec<Vec<usize>> {
    let n = p + q;
    let mut out = Vec::new();
    let mut first: Vec<usize> = (0..p).collect();
    loop {
        let mut sigma = first.clone();
        let mut in_first = vec![false; n];
        for &f in &first {
            in_first[f] = true;
        }
        sigma.extend((0..n).filter(|i| !in_first[*i]));
        out.push(sigma);
        // next combination in lexicographic order
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if first[i] < n - p + i {
                first[i] += 1;
                for k in i + 1..p {
                    first[k] = first[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Set partitions of `{0..n-1}` with ascending blocks, listed block by block
/// in increasing order of block maxima.
pub fn ordered_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(pos: usize, max_label: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        let n = labels.len();
        if pos == n {
            let blocks = max_label;
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); blocks];
            for (i, &l) in labels.iter().enumerate() {
                parts[l].push(i);
            }
            parts.sort_by_key(|b| *b.last().unwrap());
            out.push(parts);
            return;
        }
        for l in 0..=max_label {
            labels[pos] = l;
            rec(pos + 1, max_label.max(l + 1), labels, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    rec(0, 0, &mut labels, &mut out);
    out
}

/// An argument to a multilinear evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Arg<'a> {
    Basis(usize),
    Elem(&'a Element),
}

/// A k-multilinear map stored as a dense table of sparse outputs indexed by
/// basis tuples (first slot most significant, so index order is lexicographic
/// tuple order). Zero outputs are empty elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearMap {
    slot_degrees: Vec<Vec<i32>>,
    output_degrees: Vec<i32>,
    degree: i32,
    strides: Vec<usize>,
    table: Vec<Element>,
}

impl MultilinearMap {
    pub fn zero(slot_degrees: Vec<Vec<i32>>, output_degrees: Vec<i32>, degree: i32) -> Self {
        let (strides, len) = strides_of(&slot_degrees);
        MultilinearMap { slot_degrees, output_degrees, degree, strides, table: vec![Element::zero(); len] }
    }

    /// Fills the table by evaluating `f` on every basis tuple, in parallel.
    pub fn from_fn<F>(slot_degrees: Vec<Vec<i32>>, output_degrees: Vec<i32>, degree: i32, f: F) -> Self
    where
        F: Fn(&[usize]) -> Element + Sync,
    {
        let (strides, len) = strides_of(&slot_degrees);
        let dims: Vec<usize> = slot_degrees.iter().map(|s| s.len()).collect();
        let table = (0..len)
            .into_par_iter()
            .map(|idx| f(&decode(idx, &dims)))
            .collect();
        MultilinearMap { slot_degrees, output_degrees, degree, strides, table }
    }

    pub fn arity(&self) -> usize {
        self.slot_degrees.len()
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn slot_degrees(&self, slot: usize) -> &[i32] {
        &self.slot_degrees[slot]
    }

    pub fn output_degrees(&self) -> &[i32] {
        &self.output_degrees
    }

    pub fn dims(&self) -> Vec<usize> {
        self.slot_degrees.iter().map(|s| s.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().zip(&self.strides).map(|(t, s)| t * s).sum()
    }

    pub fn tuple(&self, idx: usize) -> Vec<usize> {
        decode(idx, &self.dims())
    }

    pub fn get(&self, tuple: &[usize]) -> &Element {
        &self.table[self.index(tuple)]
    }

    pub fn get_index(&self, idx: usize) -> &Element {
        &self.table[idx]
    }

    pub fn set(&mut self, tuple: &[usize], value: Element) {
        let i = self.index(tuple);
        self.table[i] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|e| e.is_zero())
    }

    /// Non-zero entries in tuple order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &Element)> {
        let dims = self.dims();
        self.table
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(move |(i, e)| (decode(i, &dims), e))
    }

    /// Every output is homogeneous of degree (sum of input degrees + map degree).
    pub fn check_homogeneous(&self) -> Result<()> {
        let dims = self.dims();
        for (idx, out) in self.table.iter().enumerate() {
            if out.is_zero() {
                continue;
            }
            let t = decode(idx, &dims);
            let want: i32 = t.iter().enumerate().map(|(s, &b)| self.slot_degrees[s][b]).sum::<i32>() + self.degree;
            match out.degree(&self.output_degrees) {
                Degree::Homogeneous(d) if d == want => {}
                other => {
                    return Err(Error::Consistency(format!(
                        "output at {t:?} has degree {other:?}, expected {want}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Multilinear evaluation over sparse arguments, without extra signs.
    pub fn eval(&self, args: &[&Element]) -> Result<Element> {
        if args.len() != self.arity() {
            return arg(format!("map of arity {} applied to {} arguments", self.arity(), args.len()));
        }
        let a: Vec<Arg> = args.iter().map(|e| Arg::Elem(e)).collect();
        Ok(self.eval_mixed(&a))
    }

    /// Like [`eval`](Self::eval) but slots may be plain basis indices.
    pub fn eval_mixed(&self, args: &[Arg]) -> Element {
        debug_assert_eq!(args.len(), self.arity());
        let mut out = Element::zero();
        self.eval_rec(args, 0, 0, &Scalar::one(), &mut out);
        out
    }

    fn eval_rec(&self, args: &[Arg], slot: usize, offset: usize, coeff: &Scalar, out: &mut Element) {
        if slot == args.len() {
            out.add_scaled(&self.table[offset], coeff);
            return;
        }
        match args[slot] {
            Arg::Basis(b) => self.eval_rec(args, slot + 1, offset + b * self.strides[slot], coeff, out),
            Arg::Elem(e) => {
                for (b, c) in e.iter() {
                    let cc = coeff * c;
                    self.eval_rec(args, slot + 1, offset + b * self.strides[slot], &cc, out);
                }
            }
        }
    }
}

fn strides_of(slot_degrees: &[Vec<i32>]) -> (Vec<usize>, usize) {
    let mut strides = vec![0; slot_degrees.len()];
    let mut acc = 1usize;
    for s in (0..slot_degrees.len()).rev() {
        strides[s] = acc;
        acc *= slot_degrees[s].len();
    }
    (strides, acc)
}

pub fn decode(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut t = vec![0; dims.len()];
    for s in (0..dims.len()).rev() {
        if dims[s] == 0 {
            return t;
        }
        t[s] = idx % dims[s];
        idx /= dims[s];
    }
    t
}

/// Every tuple in `dims[0] x ... x dims[k-1]`, lexicographically.
pub fn all_tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let len: usize = dims.iter().product();
    (0..len).map(|i| decode(i, dims)).collect()
}
