//! Instance documents: JSON with rationals written as `"p/q"` strings.

use std::collections::BTreeMap;
use std::sync::Arc;

use kapranov_core::builders::{
    bott_connection, canonical_gamma, lie_pair_setup, linear_map_object, LiePairData, LinearMapObject,
};
use kapranov_core::cdga::{ce_algebra_unchecked, AlgebraElement, Cdga, LieAlgebra};
use kapranov_core::connection::Connection;
use kapranov_core::derivation::{kaehler_differentials, validate_dg_derivation, Derivation};
use kapranov_core::graded::parse_scalar;
use kapranov_core::module::{dual_module, DgModule, ModuleElement};
use kapranov_core::report::CheckReport;
use kapranov_core::{Error, GradedBasis, Result, Scalar};
use serde::Deserialize;

/// Name → coefficient.
pub type Terms = BTreeMap<String, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub field: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub lie_algebra: Option<LieAlgebraDoc>,
    #[serde(default)]
    pub lie_pair: Option<LiePairDoc>,
    #[serde(default)]
    pub linear_map_object: Option<LinearMapDoc>,
    #[serde(default)]
    pub raw: Option<RawDoc>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub max_arity: Option<usize>,
    #[serde(default)]
    pub degree: Option<i32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketDoc {
    pub left: String,
    pub right: String,
    pub value: Terms,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraDoc {
    pub basis: Vec<String>,
    #[serde(default)]
    pub brackets: Vec<BracketDoc>,
}

/// `extension[q][p]` holds `∇_{j(q)} p` in terms of the complement basis.
pub type ExtensionDoc = BTreeMap<String, BTreeMap<String, Terms>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiePairDoc {
    pub lie_algebra: LieAlgebraDoc,
    pub subalgebra: Vec<String>,
    /// `j(q)` for each complement basis vector `q`; defaults to `q` itself.
    #[serde(default)]
    pub splitting: Option<BTreeMap<String, Terms>>,
    #[serde(default)]
    pub alternate_splitting: Option<BTreeMap<String, Terms>>,
    /// Defaults to the torsion-free choice `pr_B[j q, j p]`.
    #[serde(default)]
    pub extension: Option<ExtensionDoc>,
    #[serde(default)]
    pub alternate_extension: Option<ExtensionDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationDoc {
    pub basis: Vec<String>,
    /// `action[x][r][c]`: the `e_r` coefficient of `x · e_c`; missing means zero.
    #[serde(default)]
    pub action: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearMapDoc {
    pub lie_algebra: LieAlgebraDoc,
    pub module: RepresentationDoc,
    /// `ψ(e)` in terms of the Lie algebra basis.
    #[serde(default)]
    pub psi: BTreeMap<String, Terms>,
    #[serde(default)]
    pub alternate_connection: Option<ConnectionDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisEntry {
    pub name: String,
    pub degree: i32,
}

/// Basis name → algebra element, the latter as monomial → coefficient.
/// Monomials are generator names separated by spaces, `"1"` for the unit.
pub type ModuleElementDoc = BTreeMap<String, Terms>;

/// `connection[b][ω]` is the `B`-valued coefficient of `ω` in `∇(b)`.
pub type ConnectionDoc = BTreeMap<String, BTreeMap<String, ModuleElementDoc>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModuleDoc {
    pub basis: Vec<BasisEntry>,
    #[serde(default)]
    pub differential: BTreeMap<String, ModuleElementDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDoc {
    pub generators: Vec<String>,
    #[serde(default)]
    pub differential: BTreeMap<String, Terms>,
    pub omega: RawModuleDoc,
    #[serde(default)]
    pub derivation: BTreeMap<String, ModuleElementDoc>,
    #[serde(default)]
    pub connection: Option<ConnectionDoc>,
    #[serde(default)]
    pub alternate_connection: Option<ConnectionDoc>,
}

/// Parses a document; syntax errors carry line and column.
pub fn parse_document(text: &str) -> Result<Document> {
    let doc: Document = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), strip_position(&e.to_string()))))?;
    if doc.field != "rational" {
        return Err(Error::Parse(format!("field must be \"rational\", found \"{}\"", doc.field)));
    }
    let sections = [doc.lie_algebra.is_some(), doc.lie_pair.is_some(), doc.linear_map_object.is_some(), doc.raw.is_some()];
    if sections.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::Parse(
            "exactly one of lie_algebra, lie_pair, linear_map_object, raw is required".into(),
        ));
    }
    Ok(doc)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// What kind of instance a document describes, with the data the
/// kind-specific checks need.
#[derive(Debug, Clone)]
pub enum Kind {
    LieAlgebra,
    LiePair { data: LiePairData, alternate: Option<LiePairData> },
    LinearMap { object: LinearMapObject },
    Raw,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: Kind,
    pub delta: Derivation,
    pub connection: Connection,
    pub alternate: Option<Connection>,
}

/// A loaded document: the structural checks run while building, and the
/// instance if they all passed.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub name: String,
    pub checks: Vec<CheckReport>,
    pub instance: Option<Instance>,
}

fn scalar(s: &str, what: &str) -> Result<Scalar> {
    parse_scalar(s).map_err(|_| Error::Validation(format!("{what}: \"{s}\" is not a rational number")))
}

fn index_of(names: &[String], name: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Validation(format!("unknown {what} \"{name}\"")))
}

fn vector(names: &[String], terms: &Terms, what: &str) -> Result<Vec<Scalar>> {
    let mut v = vec![Scalar::from_integer(0.into()); names.len()];
    for (k, c) in terms {
        let i = index_of(names, k, what)?;
        v[i] += scalar(c, what)?;
    }
    Ok(v)
}

fn unique(names: &[String], what: &str) -> Result<()> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::Validation(format!("duplicate {what} \"{n}\"")));
        }
    }
    Ok(())
}

fn lie_algebra(doc: &LieAlgebraDoc) -> Result<LieAlgebra> {
    unique(&doc.basis, "Lie algebra basis element")?;
    let mut brackets = Vec::new();
    for b in &doc.brackets {
        let i = index_of(&doc.basis, &b.left, "Lie algebra basis element")?;
        let j = index_of(&doc.basis, &b.right, "Lie algebra basis element")?;
        let v = vector(&doc.basis, &b.value, &format!("bracket [{}, {}]", b.left, b.right))?;
        brackets.push((i, j, v.into_iter().enumerate().collect()));
    }
    LieAlgebra::new(doc.basis.clone(), &brackets)
}

fn jacobi_check(g: &LieAlgebra) -> CheckReport {
    let mut r = CheckReport::new("Jacobi identity");
    r.cases = g.dim().pow(3);
    if let Some((i, j, k, l)) = g.jacobi_violation() {
        let n = g.names();
        r.fail(format!("({},{},{}) component {}", n[i], n[j], n[k], n[l]), "Jacobi sum is non-zero");
    }
    r
}

fn from_result(name: &str, res: Result<()>) -> CheckReport {
    let mut r = CheckReport::new(name);
    r.cases = 1;
    if let Err(e) = res {
        let msg = match e {
            Error::Validation(m) | Error::Argument(m) | Error::Consistency(m) | Error::Parse(m) => m,
        };
        // "… at (x, e)" names the offending entity; "A is not closed: …" too
        let location = match (msg.rfind(" at "), msg.find(": ")) {
            (Some(i), _) => msg[i + 4..].to_string(),
            (None, Some(i)) => msg[i + 2..].split(" has ").next().unwrap_or_default().to_string(),
            _ => name.to_string(),
        };
        r.fail(location, msg);
    }
    r
}

fn monomial(alg: &Cdga, word: &str, what: &str) -> Result<AlgebraElement> {
    let word = word.trim();
    if word.is_empty() || word == "1" {
        return Ok(AlgebraElement::one());
    }
    let gens = alg.generators();
    let mut idx = Vec::new();
    for g in word.split_whitespace() {
        idx.push(
            gens.index_of(g)
                .ok_or_else(|| Error::Validation(format!("{what}: unknown generator \"{g}\"")))?,
        );
    }
    Ok(AlgebraElement::word(&idx))
}

fn algebra_element(alg: &Cdga, terms: &Terms, what: &str) -> Result<AlgebraElement> {
    let mut out = AlgebraElement::zero();
    for (w, c) in terms {
        out.add_assign(&monomial(alg, w, what)?.scaled(&scalar(c, what)?));
    }
    Ok(out)
}

fn module_element(m: &DgModule, doc: &ModuleElementDoc, what: &str) -> Result<ModuleElement> {
    let mut out = ModuleElement::zero();
    for (b, terms) in doc {
        let i = m
            .basis()
            .index_of(b)
            .ok_or_else(|| Error::Validation(format!("{what}: unknown basis element \"{b}\"")))?;
        out.add_term(i, &algebra_element(m.algebra(), terms, what)?);
    }
    Ok(out)
}

fn connection(delta: &Derivation, b: &Arc<DgModule>, doc: &ConnectionDoc) -> Result<Connection> {
    let omega = delta.target();
    let mut values = vec![ModuleElement::zero(); b.rank()];
    for (name, parts) in doc {
        let i = b
            .basis()
            .index_of(name)
            .ok_or_else(|| Error::Validation(format!("connection: unknown basis element \"{name}\"")))?;
        for (w, coeff) in parts {
            let p = omega
                .basis()
                .index_of(w)
                .ok_or_else(|| Error::Validation(format!("connection on {name}: unknown basis element \"{w}\"")))?;
            let v = module_element(b, coeff, &format!("connection on {name}"))?;
            for (r, a) in v.iter() {
                values[i].add_term(p * b.rank() + r, a);
            }
        }
    }
    Connection::new(delta.clone(), b.clone(), values)
}

fn extension(p: &LiePairData, names: &[String], doc: &Option<ExtensionDoc>) -> Result<Vec<Vec<Vec<Scalar>>>> {
    let Some(doc) = doc else {
        return Ok(canonical_gamma(p));
    };
    let comp: Vec<String> = p.complement().iter().map(|&i| names[i].clone()).collect();
    let n = comp.len();
    let zero = Scalar::from_integer(0.into());
    let mut gamma = vec![vec![vec![zero; n]; n]; n];
    for (q, row) in doc {
        let qi = index_of(&comp, q, "extension direction")?;
        for (pp, terms) in row {
            let pi = index_of(&comp, pp, "extension section")?;
            gamma[qi][pi] = vector(&comp, terms, &format!("extension ∇_{q} {pp}"))?;
        }
    }
    Ok(gamma)
}

fn splitting(g: &LieAlgebra, sub: &[usize], doc: &Option<BTreeMap<String, Terms>>) -> Result<LiePairData> {
    let mut p = LiePairData::standard(g.clone(), sub.to_vec());
    if let Some(doc) = doc {
        let names = g.names().to_vec();
        let comp = p.complement();
        for (q, terms) in doc {
            let qi = index_of(&names, q, "splitting entry")?;
            let pos = comp
                .iter()
                .position(|&c| c == qi)
                .ok_or_else(|| Error::Validation(format!("splitting entry \"{q}\" lies in the subalgebra")))?;
            p.splitting[pos] = vector(&names, terms, &format!("j({q})"))?;
        }
    }
    Ok(p)
}

fn all_passed(checks: &[CheckReport]) -> bool {
    checks.iter().all(|c| c.passed())
}

/// Builds the instance. Semantic errors (unknown names, malformed values)
/// are returned as errors; structural failures become failed checks.
pub fn load(doc: &Document) -> Result<Loaded> {
    let mut checks = Vec::new();
    let (default_name, instance) = if let Some(g) = &doc.lie_algebra {
        ("lie-algebra", load_lie_algebra(g, &mut checks)?)
    } else if let Some(p) = &doc.lie_pair {
        ("lie-pair", load_lie_pair(p, &mut checks)?)
    } else if let Some(l) = &doc.linear_map_object {
        ("linear-map-object", load_linear_map(l, &mut checks)?)
    } else if let Some(r) = &doc.raw {
        ("raw", load_raw(r, &mut checks)?)
    } else {
        return Err(Error::Parse("no instance section".into()));
    };
    Ok(Loaded { name: doc.name.clone().unwrap_or_else(|| default_name.into()), checks, instance })
}

fn module_checks(delta: &Derivation, b: &DgModule, checks: &mut Vec<CheckReport>) {
    checks.push(delta.algebra().validate());
    let mut om = delta.target().validate();
    om.name = "Ω dg module".into();
    checks.push(om);
    if all_passed(checks) {
        checks.push(validate_dg_derivation(delta));
        let mut bm = b.validate();
        bm.name = "B dg module".into();
        checks.push(bm);
    }
}

fn load_lie_algebra(doc: &LieAlgebraDoc, checks: &mut Vec<CheckReport>) -> Result<Option<Instance>> {
    let g = lie_algebra(doc)?;
    checks.push(jacobi_check(&g));
    if !all_passed(checks) {
        return Ok(None);
    }
    let alg = Arc::new(ce_algebra_unchecked(&g)?);
    let (_, delta) = kaehler_differentials(&alg);
    let b = Arc::new(dual_module(delta.target()));
    module_checks(&delta, &b, checks);
    let connection = Connection::trivial(delta.clone(), b);
    Ok(all_passed(checks).then_some(Instance { kind: Kind::LieAlgebra, delta, connection, alternate: None }))
}

fn load_lie_pair(doc: &LiePairDoc, checks: &mut Vec<CheckReport>) -> Result<Option<Instance>> {
    let g = lie_algebra(&doc.lie_algebra)?;
    checks.push(jacobi_check(&g));
    if !all_passed(checks) {
        return Ok(None);
    }
    let names = g.names().to_vec();
    unique(&doc.subalgebra, "subalgebra element")?;
    let sub = doc
        .subalgebra
        .iter()
        .map(|s| index_of(&names, s, "subalgebra element"))
        .collect::<Result<Vec<_>>>()?;
    let data = splitting(&g, &sub, &doc.splitting)?;
    checks.push(from_result("Lie pair (closure and splitting)", data.validate()));
    let alternate = match &doc.alternate_splitting {
        Some(_) => {
            let alt = splitting(&g, &sub, &doc.alternate_splitting)?;
            checks.push(from_result("alternate splitting", alt.validate()));
            Some(alt)
        }
        None => None,
    };
    if !all_passed(checks) {
        return Ok(None);
    }
    let setup = lie_pair_setup(&data)?;
    module_checks(&setup.delta, &setup.bott, checks);
    if !all_passed(checks) {
        return Ok(None);
    }
    let connection = bott_connection(&setup, &extension(&data, &names, &doc.extension)?)?;
    let alt_conn = match &doc.alternate_extension {
        Some(_) => Some(bott_connection(&setup, &extension(&data, &names, &doc.alternate_extension)?)?),
        None => None,
    };
    Ok(Some(Instance {
        kind: Kind::LiePair { data, alternate },
        delta: setup.delta,
        connection,
        alternate: alt_conn,
    }))
}

fn load_linear_map(doc: &LinearMapDoc, checks: &mut Vec<CheckReport>) -> Result<Option<Instance>> {
    let g = lie_algebra(&doc.lie_algebra)?;
    checks.push(jacobi_check(&g));
    if !all_passed(checks) {
        return Ok(None);
    }
    let names = g.names().to_vec();
    let e = &doc.module.basis;
    unique(e, "module basis element")?;
    let r = e.len();
    let zero = Scalar::from_integer(0.into());
    let mut action = vec![vec![vec![zero.clone(); r]; r]; g.dim()];
    for (x, m) in &doc.module.action {
        let i = index_of(&names, x, "Lie algebra basis element")?;
        if m.len() != r || m.iter().any(|row| row.len() != r) {
            return Err(Error::Validation(format!("action of {x} must be a {r}×{r} matrix")));
        }
        for (a, row) in m.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                action[i][a][b] = scalar(c, &format!("action of {x}"))?;
            }
        }
    }
    let mut psi = vec![vec![zero; r]; g.dim()];
    for (q, terms) in &doc.psi {
        let qi = index_of(e, q, "module basis element")?;
        let v = vector(&names, terms, &format!("ψ({q})"))?;
        for (k, c) in v.into_iter().enumerate() {
            psi[k][qi] = c;
        }
    }
    let object = LinearMapObject { g, e_names: e.clone(), action, psi };
    checks.push(from_result("representation and equivariance", object.validate()));
    if !all_passed(checks) {
        return Ok(None);
    }
    let setup = linear_map_object(&object)?;
    let b = setup.connection.module().clone();
    module_checks(&setup.delta, &b, checks);
    if !all_passed(checks) {
        return Ok(None);
    }
    let alternate = match &doc.alternate_connection {
        Some(c) => Some(connection(&setup.delta, &b, c)?),
        None => None,
    };
    Ok(Some(Instance { kind: Kind::LinearMap { object }, delta: setup.delta, connection: setup.connection, alternate }))
}

fn load_raw(doc: &RawDoc, checks: &mut Vec<CheckReport>) -> Result<Option<Instance>> {
    unique(&doc.generators, "generator")?;
    let shell = Cdga::new(doc.generators.clone(), vec![AlgebraElement::zero(); doc.generators.len()])?;
    let mut diff = vec![AlgebraElement::zero(); doc.generators.len()];
    for (g, terms) in &doc.differential {
        let i = index_of(&doc.generators, g, "generator")?;
        diff[i] = algebra_element(&shell, terms, &format!("d({g})"))?;
    }
    let alg = Arc::new(Cdga::new(doc.generators.clone(), diff)?);
    let basis = GradedBasis::new(doc.omega.basis.iter().map(|b| (b.name.clone(), b.degree)).collect())?;
    let shell_m = DgModule::zero_differential(alg.clone(), basis.clone());
    let mut mdiff = vec![ModuleElement::zero(); basis.len()];
    for (w, v) in &doc.omega.differential {
        let i = basis
            .index_of(w)
            .ok_or_else(|| Error::Validation(format!("unknown Ω basis element \"{w}\"")))?;
        mdiff[i] = module_element(&shell_m, v, &format!("∂({w})"))?;
    }
    let omega = Arc::new(DgModule::new(alg.clone(), basis, mdiff)?);
    let mut values = vec![ModuleElement::zero(); doc.generators.len()];
    for (g, v) in &doc.derivation {
        let i = index_of(&doc.generators, g, "generator")?;
        values[i] = module_element(&omega, v, &format!("δ({g})"))?;
    }
    let delta = Derivation::new(omega.clone(), 0, values)?;
    let b = Arc::new(dual_module(&omega));
    module_checks(&delta, &b, checks);
    if !all_passed(checks) {
        return Ok(None);
    }
    let conn = match &doc.connection {
        Some(c) => connection(&delta, &b, c)?,
        None => Connection::trivial(delta.clone(), b.clone()),
    };
    let alternate = match &doc.alternate_connection {
        Some(c) => Some(connection(&delta, &b, c)?),
        None => None,
    };
    Ok(Some(Instance { kind: Kind::Raw, delta, connection: conn, alternate }))
}
