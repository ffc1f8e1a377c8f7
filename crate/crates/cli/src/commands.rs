use std::sync::Arc;

use kapranov_core::builders::{psi_product_form, splitting_homotopy, lie_pair_setup};
use kapranov_core::cohomology::CochainComplex;
use kapranov_core::connection::{atiyah_class, atiyah_cocycle, flat_connection_exists, Connection};
use kapranov_core::derivation::{find_homotopy, homotopy_offset, universal_factorization, DerivationMorphism};
use kapranov_core::kapranov::{
    check_a_multilinear, check_family_a_linear, check_leibniz_infinity, check_linfty_morphism,
    cohomology_leibniz_bracket, connection_change, homotopy_iso, kapranov_brackets, kapranov_morphism,
    trivialization, MorphismFamily,
};
use kapranov_core::module::dual_module;
use kapranov_core::report::CheckReport;
use kapranov_core::{Error, GradedBasis, MultilinearMap, Result, Scalar};
use serde_json::{json, Map, Value};

use crate::document::{load, parse_document, Instance, Kind};
use crate::report::{scalar_string, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Atiyah,
    Brackets,
    CheckLeibniz,
    Morphism,
    Homotopy,
    Cohomology,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Atiyah => "atiyah",
            Command::Brackets => "brackets",
            Command::CheckLeibniz => "check-leibniz",
            Command::Morphism => "morphism",
            Command::Homotopy => "homotopy",
            Command::Cohomology => "cohomology",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub max_arity: Option<usize>,
    pub degree: Option<i32>,
}

pub const DEFAULT_MAX_ARITY: usize = 4;
pub const MAX_ARITY_LIMIT: usize = 8;

/// Runs `command` on the document text.
pub fn run(command: Command, text: &str, opts: &RunOptions) -> Result<Report> {
    let doc = parse_document(text)?;
    let loaded = load(&doc)?;
    let max_arity = opts.max_arity.or(doc.options.max_arity).unwrap_or(DEFAULT_MAX_ARITY);
    if max_arity == 0 || max_arity > MAX_ARITY_LIMIT {
        return Err(Error::Argument(format!("max arity must be between 1 and {MAX_ARITY_LIMIT}")));
    }
    let degree = opts.degree.or(doc.options.degree);
    let mut report = Report::new(command.name(), &loaded.name);
    for c in loaded.checks {
        report.check(c);
    }
    let Some(inst) = loaded.instance else {
        return Ok(report);
    };
    match command {
        Command::Validate => validate(&inst, &mut report),
        Command::Atiyah => atiyah(&inst, &mut report)?,
        Command::Brackets => brackets(&inst, max_arity, &mut report)?,
        Command::CheckLeibniz => check_leibniz(&inst, max_arity, &mut report)?,
        Command::Morphism => morphism(&inst, max_arity, &mut report)?,
        Command::Homotopy => homotopy(&inst, max_arity, &mut report)?,
        Command::Cohomology => cohomology(&inst, degree, &mut report)?,
    }
    Ok(report)
}

fn single(name: &str, ok: bool, location: &str, detail: &str) -> CheckReport {
    let mut r = CheckReport::new(name);
    r.cases = 1;
    if !ok {
        r.fail(location, detail);
    }
    r
}

/// Nonzero entries of a table, in lexicographic tuple order.
fn table_json(map: &MultilinearMap, slots: &[&GradedBasis], out: &GradedBasis) -> Value {
    let mut entries = Vec::new();
    for i in 0..map.len() {
        let t = map.tuple(i);
        let v = map.get(&t);
        if v.is_zero() {
            continue;
        }
        let inputs: Vec<&str> = t.iter().enumerate().map(|(s, &x)| slots[s].name(x)).collect();
        entries.push(json!({ "inputs": inputs, "value": v.display(out) }));
    }
    json!({ "arity": map.arity(), "entries": entries })
}

fn bracket_table(map: &MultilinearMap, kb: &GradedBasis) -> Value {
    let slots = vec![kb; map.arity()];
    table_json(map, &slots, kb)
}

fn validate(inst: &Instance, report: &mut Report) {
    let closed = atiyah_cocycle(&inst.connection);
    report.check(single(
        "Atiyah cocycle closed",
        closed.is_ok(),
        "At",
        &closed.err().map(|e| e.to_string()).unwrap_or_default(),
    ));
}

fn atiyah(inst: &Instance, report: &mut Report) -> Result<()> {
    let conn = &inst.connection;
    let b = conn.module();
    let cocycle = match atiyah_cocycle(conn) {
        Ok(c) => c,
        Err(e) => {
            report.check(single("Atiyah cocycle closed", false, "At", &e.to_string()));
            return Ok(());
        }
    };
    report.check(single("Atiyah cocycle closed", true, "", ""));
    let oe = conn.omega_tensor();
    let values: Vec<Value> = (0..b.rank())
        .map(|i| json!({ "section": b.basis().name(i), "value": cocycle.operator.image(i).display(oe) }))
        .collect();
    let class_zero = atiyah_class(&inst.delta, b)?.is_zero()?;
    let flat = flat_connection_exists(&inst.delta, b)?;
    report.check(single(
        "flat connection exists iff the class vanishes",
        flat.is_some() == class_zero,
        "At",
        "flat connection search disagrees with class vanishing",
    ));
    let flat_json = flat.as_ref().map(|f| {
        (0..b.rank())
            .map(|i| json!({ "section": b.basis().name(i), "value": f.values()[i].display(oe) }))
            .collect::<Vec<_>>()
    });
    if let Some(alt) = &inst.alternate {
        report.check(cocycle_difference(conn, alt)?);
    }
    report.result("cocycle", Value::Array(values));
    report.result("class_zero", Value::Bool(class_zero));
    report.result("flat_connection", flat_json.map_or(Value::Null, Value::Array));
    Ok(())
}

/// `At^∇ − At^{∇′} = ∂_Hom(∇′ − ∇)`.
fn cocycle_difference(conn: &Connection, alt: &Connection) -> Result<CheckReport> {
    let c1 = atiyah_cocycle(conn)?;
    let c2 = atiyah_cocycle(alt)?;
    let theta = alt.difference(conn)?.as_hom_element();
    let lhs = c1.hom_element.sub(&c2.hom_element);
    let rhs = c1.hom.apply_differential(&theta);
    Ok(single(
        "cocycles of two connections differ by an exact term",
        lhs == rhs,
        "At",
        "At − At′ ≠ ∂(∇′ − ∇)",
    ))
}

fn brackets(inst: &Instance, n: usize, report: &mut Report) -> Result<()> {
    let fam = kapranov_brackets(&inst.connection, n)?;
    report.check(check_family_a_linear(&fam));
    let kb = fam.carrier().k_basis();
    let tables: Vec<Value> = (1..=n).map(|k| bracket_table(fam.bracket(k), &kb)).collect();
    report.result("max_arity", json!(n));
    report.result("brackets", Value::Array(tables));
    Ok(())
}

fn check_leibniz(inst: &Instance, n: usize, report: &mut Report) -> Result<()> {
    let fam = kapranov_brackets(&inst.connection, n)?;
    report.check(check_leibniz_infinity(&fam, n)?);
    let kb = fam.carrier().k_basis();
    if let Kind::LinearMap { object } = &inst.kind {
        if n >= 2 {
            let p = psi_product_form(object, fam.carrier());
            let r2 = fam.bracket(2);
            let mut r = CheckReport::new("R2 = −ψ(·)·");
            for i in 0..r2.len() {
                let t = r2.tuple(i);
                r.cases += 1;
                if *r2.get(&t) != p.get(&t).neg() {
                    r.fail(format!("({}, {})", kb.name(t[0]), kb.name(t[1])), "R2 differs from −ψ(b1)·b2");
                }
            }
            report.check(r);
        }
    }
    let vanishing: Vec<usize> = (2..=n).filter(|&k| fam.bracket(k).is_zero()).collect();
    report.result("max_arity", json!(n));
    if n >= 2 {
        report.result("r2", bracket_table(fam.bracket(2), &kb));
    }
    report.result("vanishing_arities", json!(vanishing));
    Ok(())
}

fn morphism_summary(m: &MorphismFamily) -> Value {
    let nonzero: Vec<usize> = (1..=m.max_arity()).filter(|&k| !m.map(k).is_zero()).collect();
    json!({ "nonzero_arities": nonzero })
}

fn morphism(inst: &Instance, n: usize, report: &mut Report) -> Result<()> {
    let conn = &inst.connection;
    let mut results = Map::new();

    let id = kapranov_morphism(&DerivationMorphism::identity(inst.delta.clone()), conn, conn, n)?;
    let mut r = check_linfty_morphism(&id, n)?;
    r.name = "identity morphism".into();
    report.check(r);
    report.check(single(
        "identity morphism has f_k = 0 for k ≥ 2",
        (2..=n).all(|k| id.map(k).is_zero()),
        "f_k",
        "a higher component is non-zero",
    ));

    let phi = universal_factorization(&inst.delta)?;
    let b1 = Arc::new(dual_module(phi.source.target()));
    let c1 = Connection::trivial(phi.source.clone(), b1);
    let f = kapranov_morphism(&phi, conn, &c1, n)?;
    let mut r = check_linfty_morphism(&f, n)?;
    r.name = "universal factorization morphism".into();
    report.check(r);
    let mut r = f.check_a_linear();
    r.name = "universal factorization morphism A-multilinear".into();
    report.check(r);
    results.insert("universal_factorization".into(), morphism_summary(&f));

    if let Some(alt) = &inst.alternate {
        let g = connection_change(conn, alt, n)?;
        let mut r = check_linfty_morphism(&g, n)?;
        r.name = "connection change morphism".into();
        report.check(r);
        let mut r = g.check_a_linear();
        r.name = "connection change morphism A-multilinear".into();
        report.check(r);
        results.insert("connection_change".into(), morphism_summary(&g));
    }

    let t = trivialization(conn, n)?;
    let mut r = check_linfty_morphism(&t, n)?;
    r.name = "trivialization morphism (k-multilinear)".into();
    report.check(r);
    let delta_zero = inst.delta.values().iter().all(|v| v.is_zero());
    let b = conn.module();
    let phi2_a_linear = n < 2 || check_a_multilinear(t.map(2), &[b, b], b).passed();
    report.check(single(
        "trivialization φ2 is A-bilinear exactly when δ = 0",
        n < 2 || phi2_a_linear == delta_zero,
        "φ2",
        "A-bilinearity of φ2 does not match δ = 0",
    ));
    results.insert("delta_zero".into(), json!(delta_zero));
    results.insert("trivialization_phi2_a_linear".into(), json!(phi2_a_linear));
    results.insert("max_arity".into(), json!(n));
    report.result("morphisms", Value::Object(results));
    Ok(())
}

fn homotopy(inst: &Instance, n: usize, report: &mut Report) -> Result<()> {
    let Kind::LiePair { data, alternate: Some(alt) } = &inst.kind else {
        return Err(Error::Argument("homotopy needs a lie_pair document with alternate_splitting".into()));
    };
    let conn = &inst.connection;
    let alt_setup = lie_pair_setup(alt)?;
    let h = splitting_homotopy(data, alt)?;
    let offset = homotopy_offset(&inst.delta, &h)?;
    report.check(single(
        "homotopy offset reproduces the alternate derivation",
        offset.values() == alt_setup.delta.values(),
        "h",
        "δ + [∂, h] ≠ δ′",
    ));
    let found = find_homotopy(&inst.delta, &alt_setup.delta)?;
    report.check(single("a homotopy between the derivations exists", found.is_some(), "h", "no homotopy found"));
    let hat = Connection::trivial(h.clone(), conn.module().clone());
    let g = homotopy_iso(conn, &hat, n)?;
    let mut r = check_linfty_morphism(&g, n)?;
    r.name = "homotopy isomorphism".into();
    report.check(r);
    let mut r = g.check_a_linear();
    r.name = "homotopy isomorphism A-multilinear".into();
    report.check(r);
    report.check(single("g2 = 0", n < 2 || g.map(2).is_zero(), "g2", "g2 is non-zero"));
    let c1 = atiyah_class(&inst.delta, conn.module())?;
    let c2 = atiyah_class(&alt_setup.delta, &alt_setup.bott)?;
    report.check(single("Atiyah classes agree", c1.equals(&c2)?, "At", "classes differ"));
    let omega = inst.delta.target();
    let hv: Vec<Value> = (0..omega.algebra().num_generators())
        .map(|i| json!({ "generator": omega.algebra().generators().name(i), "value": h.value(i).display(omega) }))
        .collect();
    report.result("homotopy", Value::Array(hv));
    report.result("morphism", morphism_summary(&g));
    Ok(())
}

fn cohomology(inst: &Instance, degree: Option<i32>, report: &mut Report) -> Result<()> {
    let b = inst.connection.module();
    let cx = CochainComplex::new(b);
    let kb = b.k_basis();
    let degrees: Vec<i32> = match degree {
        Some(d) => vec![d],
        None => cx.degrees_present(),
    };
    let mut dims = Vec::new();
    for &d in &degrees {
        let reps: Vec<String> = cx.cohomology_basis_flat(d).iter().map(|r| r.display(&kb)).collect();
        dims.push(json!({ "degree": d, "dimension": reps.len(), "representatives": reps }));
    }
    let t = cohomology_leibniz_bracket(&inst.connection)?;
    report.check(t.check_leibniz(&t));
    let classes: Vec<Value> = t
        .left_reps
        .iter()
        .zip(&t.left_degrees)
        .map(|(r, d)| json!({ "degree": d, "representative": r.display(b) }))
        .collect();
    let mut entries = Vec::new();
    for (i, row) in t.table.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.iter().any(|c| *c != Scalar::from_integer(0.into())) {
                entries.push(json!({ "left": i, "right": j, "coordinates": v.iter().map(scalar_string).collect::<Vec<_>>() }));
            }
        }
    }
    report.result("cohomology", Value::Array(dims));
    report.result("classes", Value::Array(classes));
    report.result("bracket", Value::Array(entries));
    report.result("bracket_zero", json!(t.is_zero()));
    report.result("skew_witness", t.skew_witness().map_or(Value::Null, |(i, j)| json!([i, j])));
    Ok(())
}
