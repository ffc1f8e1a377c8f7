//! Ready-made instances: Lie-algebra pairs `A ⊂ L` with a splitting
//! `j: L/A → L`, and linear maps `ψ: E → g` into a Lie algebra.
//!
//! The base is a point, so the function algebra is the base field and
//! everything is finite-dimensional.

use std::sync::Arc;

use num::Zero;

use crate::cdga::{ce_algebra, AlgebraElement, Cdga, LieAlgebra};
use crate::connection::Connection;
use crate::derivation::{homotopy_offset, validate_dg_derivation, Derivation};
use crate::error::{arg, Error, Result};
use crate::cdga::{mono_degree, mono_mul};
use crate::graded::{int, odd, sign_scalar, Element, GradedBasis, MultilinearMap, Scalar};
use crate::linalg::Matrix;
use crate::module::{dual_module, DgModule, ModuleElement};

/// `(L, A, j)`: `sub_indices` span `A`, and `splitting[q]` holds the
/// coordinates in `L` of `j(b_q)`, where `b_q` is the class of the `q`-th
/// basis vector of `L` outside `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiePairData {
    pub ambient: LieAlgebra,
    pub sub_indices: Vec<usize>,
    pub splitting: Vec<Vec<Scalar>>,
}

impl LiePairData {
    /// The pair with `j(b_q)` the basis vector itself.
    pub fn standard(ambient: LieAlgebra, sub_indices: Vec<usize>) -> Self {
        let n = ambient.dim();
        let comp: Vec<usize> = (0..n).filter(|i| !sub_indices.contains(i)).collect();
        let splitting = comp
            .iter()
            .map(|&c| (0..n).map(|i| if i == c { int(1) } else { Scalar::zero() }).collect())
            .collect();
        LiePairData { ambient, sub_indices, splitting }
    }

    /// Indices of `L` outside `A`, in order; these label the basis of `B = L/A`.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.ambient.dim()).filter(|i| !self.sub_indices.contains(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.ambient;
        let n = l.dim();
        l.check_jacobi()?;
        let mut seen = vec![false; n];
        for &i in &self.sub_indices {
            if i >= n || seen[i] {
                return Err(Error::Validation(format!("subalgebra index {i} is invalid or repeated")));
            }
            seen[i] = true;
        }
        for &i in &self.sub_indices {
            for &j in &self.sub_indices {
                for k in 0..n {
                    if !seen[k] && !l.constant(i, j, k).is_zero() {
                        return Err(Error::Validation(format!(
                            "A is not closed: [{}, {}] has a {} component",
                            l.names()[i],
                            l.names()[j],
                            l.names()[k]
                        )));
                    }
                }
            }
        }
        let comp = self.complement();
        if self.splitting.len() != comp.len() {
            return Err(Error::Validation("one splitting vector per basis element of L/A required".into()));
        }
        for (q, v) in self.splitting.iter().enumerate() {
            if v.len() != n {
                return Err(Error::Validation(format!("splitting vector {q} has the wrong length")));
            }
            for (p, &c) in comp.iter().enumerate() {
                let want = if p == q { int(1) } else { Scalar::zero() };
                if v[c] != want {
                    return Err(Error::Validation(format!(
                        "pr_B∘j ≠ id at {}",
                        bar_name(&l.names()[comp[q]])
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coordinates of `v ∈ L` in the adapted basis `(a_1,…,a_m, j(b_1),…,j(b_n))`.
    fn adapted(&self, v: &[Scalar]) -> Vec<Scalar> {
        let comp = self.complement();
        let beta: Vec<Scalar> = comp.iter().map(|&c| v[c].clone()).collect();
        let mut out: Vec<Scalar> = self
            .sub_indices
            .iter()
            .map(|&s| {
                let mut a = v[s].clone();
                for (q, b) in beta.iter().enumerate() {
                    a -= b * &self.splitting[q][s];
                }
                a
            })
            .collect();
        out.extend(beta);
        out
    }

    /// The adapted basis vectors in `L`-coordinates.
    fn adapted_basis(&self) -> Vec<Vec<Scalar>> {
        let n = self.ambient.dim();
        let mut out: Vec<Vec<Scalar>> = self
            .sub_indices
            .iter()
            .map(|&s| (0..n).map(|i| if i == s { int(1) } else { Scalar::zero() }).collect())
            .collect();
        out.extend(self.splitting.iter().cloned());
        out
    }

    /// Structure constants of `L` in the adapted basis.
    fn adapted_constants(&self) -> Vec<Vec<Vec<Scalar>>> {
        let basis = self.adapted_basis();
        basis
            .iter()
            .map(|x| basis.iter().map(|y| self.adapted(&self.ambient.bracket(x, y))).collect())
            .collect()
    }

    /// The subalgebra `A` with its own structure constants.
    pub fn subalgebra(&self) -> LieAlgebra {
        let c = self.adapted_constants();
        let m = self.sub_indices.len();
        let names = self.sub_indices.iter().map(|&s| self.ambient.names()[s].clone()).collect();
        let consts = (0..m).map(|i| (0..m).map(|j| c[i][j][..m].to_vec()).collect()).collect();
        LieAlgebra::from_constants(names, consts)
    }

    /// `bott[i][p][q]`: the `b_p` coefficient of `a_i · b_q = pr_B[a_i, j(b_q)]`.
    pub fn bott_matrices(&self) -> Vec<Vec<Vec<Scalar>>> {
        let c = self.adapted_constants();
        let m = self.sub_indices.len();
        let nb = self.splitting.len();
        (0..m)
            .map(|i| (0..nb).map(|p| (0..nb).map(|q| c[i][m + q][m + p].clone()).collect()).collect())
            .collect()
    }
}

fn bar_name(n: &str) -> String {
    format!("{n}\u{304}")
}

/// The output of [`lie_pair_setup`].
#[derive(Debug, Clone)]
pub struct LiePairSetup {
    pub algebra: Arc<Cdga>,
    /// `Ω = Ω_A(B∨)`, with `B∨` in degree 0 and the dual Bott differential.
    pub omega: Arc<DgModule>,
    pub delta: Derivation,
    /// `B = Ω∨`, the Bott module.
    pub bott: Arc<DgModule>,
}

/// The dg module of `g`-cochains valued in a representation: basis `m_c` of
/// degree `degree`, `∂m_c = Σ_{i,r} ρ_i[r][c] ξ^i m_r`, where
/// `x_i · m_c = Σ_r ρ_i[r][c] m_r`.
pub fn ce_module(algebra: Arc<Cdga>, names: Vec<String>, degree: i32, rho: &[Vec<Vec<Scalar>>]) -> Result<DgModule> {
    let basis = GradedBasis::new(names.into_iter().map(|n| (n, degree)).collect())?;
    let rank = basis.len();
    let diff = (0..rank)
        .map(|c| {
            let mut v = ModuleElement::zero();
            for (i, m) in rho.iter().enumerate() {
                for r in 0..rank {
                    if !m[r][c].is_zero() {
                        v.add_term(r, &AlgebraElement::generator(i).scaled(&m[r][c]));
                    }
                }
            }
            v
        })
        .collect();
    DgModule::checked(algebra, basis, diff)
}

/// `−ρ_i^T`, the dual representation.
pub fn dual_representation(rho: &[Vec<Vec<Scalar>>]) -> Vec<Vec<Vec<Scalar>>> {
    rho.iter()
        .map(|m| {
            let n = m.len();
            (0..n).map(|r| (0..n).map(|c| -m[c][r].clone()).collect()).collect()
        })
        .collect()
}

/// `ad_i[r][c] = c^r_{ic}`.
pub fn adjoint_representation(g: &LieAlgebra) -> Vec<Vec<Vec<Scalar>>> {
    let n = g.dim();
    (0..n).map(|i| (0..n).map(|r| (0..n).map(|c| g.constant(i, c, r).clone()).collect()).collect()).collect()
}

/// `CE(A)`, `Ω_A(B∨)`, the derivation `δ_j` and the Bott module `B`.
///
/// `δ_j(a_k∨) = −Σ_{i,q} c^{a_k}(a_i, j(b_q)) a_i∨·b_q∨`, the `A∨⊗B∨` part of
/// the Chevalley–Eilenberg differential of `L` written in the basis adapted
/// to `j`.
pub fn lie_pair_setup(p: &LiePairData) -> Result<LiePairSetup> {
    p.validate()?;
    let a = p.subalgebra();
    let algebra = Arc::new(ce_algebra(&a)?);
    let comp = p.complement();
    let names: Vec<String> = comp.iter().map(|&c| format!("{}∨", bar_name(&p.ambient.names()[c]))).collect();
    let bott = p.bott_matrices();
    let omega = Arc::new(ce_module(algebra.clone(), names, 0, &dual_representation(&bott))?);
    let c = p.adapted_constants();
    let m = p.sub_indices.len();
    let values = (0..m)
        .map(|k| {
            let mut v = ModuleElement::zero();
            for i in 0..m {
                for q in 0..comp.len() {
                    let coef = &c[i][m + q][k];
                    if !coef.is_zero() {
                        v.add_term(q, &AlgebraElement::generator(i).scaled(&-coef.clone()));
                    }
                }
            }
            v
        })
        .collect();
    let delta = Derivation::new(omega.clone(), 0, values)?;
    if let Some(f) = validate_dg_derivation(&delta).first_failure() {
        return Err(Error::Consistency(format!("δ_j is not a dg derivation at {}", f.location)));
    }
    let bott_module = Arc::new(dual_module(&omega));
    Ok(LiePairSetup { algebra, omega, delta, bott: bott_module })
}

/// `h|_{A∨} = −(j′ − j)∨`: `h(a_i∨) = −Σ_q ⟨a_i∨, (j′−j)(b_q)⟩ b_q∨`, so that
/// `δ_j + [∂, h] = δ_{j′}` (checked before returning).
pub fn splitting_homotopy(p: &LiePairData, j2: &LiePairData) -> Result<Derivation> {
    if p.ambient != j2.ambient || p.sub_indices != j2.sub_indices {
        return arg("splittings must belong to the same pair");
    }
    let s1 = lie_pair_setup(p)?;
    let s2 = lie_pair_setup(j2)?;
    let values = p
        .sub_indices
        .iter()
        .map(|&s| {
            let mut v = ModuleElement::zero();
            for q in 0..p.splitting.len() {
                let c = &j2.splitting[q][s] - &p.splitting[q][s];
                if !c.is_zero() {
                    v.add_term(q, &AlgebraElement::scalar(-c));
                }
            }
            v
        })
        .collect();
    let h = Derivation::new(s1.omega.clone(), -1, values)?;
    let offset = homotopy_offset(&s1.delta, &h)?;
    if offset.values() != s2.delta.values() {
        return Err(Error::Consistency("δ_j + [∂, h] differs from δ_{j′}".into()));
    }
    Ok(h)
}

/// The δ-connection on the Bott module matching the `L`-connection with
/// `∇_{j(b_q)} b_p = Σ_r gamma[q][p][r] b_r`. Its values are
/// `∇b_p = −Σ gamma[q][p][r] b_q∨⊗b_r`: the minus sign comes from `B∨` sitting
/// in degree 0 here but in degree 1 among the cochains of `L`.
pub fn bott_connection(setup: &LiePairSetup, gamma: &[Vec<Vec<Scalar>>]) -> Result<Connection> {
    let n = setup.bott.rank();
    let values = (0..n)
        .map(|p| {
            let mut v = ModuleElement::zero();
            for q in 0..n {
                for r in 0..n {
                    let c = &gamma[q][p][r];
                    if !c.is_zero() {
                        v.add_term(q * n + r, &AlgebraElement::scalar(-c.clone()));
                    }
                }
            }
            v
        })
        .collect();
    Connection::new(setup.delta.clone(), setup.bott.clone(), values)
}

/// The torsion-free choice `∇_{j(b_q)} b_p = pr_B[j(b_q), j(b_p)]`.
pub fn canonical_gamma(p: &LiePairData) -> Vec<Vec<Vec<Scalar>>> {
    let c = p.adapted_constants();
    let m = p.sub_indices.len();
    let n = p.splitting.len();
    (0..n).map(|q| (0..n).map(|pp| (0..n).map(|r| c[m + q][m + pp][m + r].clone()).collect()).collect()).collect()
}

/// The classical Lie-pair Atiyah cocycle computed from structure constants:
/// `α(a_i, b_q) b_p = ∇_{a_i}∇_{j b_q} b_p − ∇_{j b_q}∇_{a_i} b_p − ∇_{[a_i, j b_q]} b_p`,
/// with `∇_a` the Bott action and `∇_{j b}` given by `gamma`.
/// Returns `alpha[i][q][p][r]`, the `b_r` coefficient.
pub fn classical_atiyah(p: &LiePairData, gamma: &[Vec<Vec<Scalar>>]) -> Vec<Vec<Vec<Vec<Scalar>>>> {
    let c = p.adapted_constants();
    let bott = p.bott_matrices();
    let m = p.sub_indices.len();
    let n = p.splitting.len();
    let act_a = |i: usize, v: &[Scalar]| -> Vec<Scalar> {
        (0..n).map(|r| (0..n).map(|s| &bott[i][r][s] * &v[s]).sum()).collect()
    };
    let act_b = |q: usize, v: &[Scalar]| -> Vec<Scalar> {
        (0..n).map(|r| (0..n).map(|s| &gamma[q][s][r] * &v[s]).sum()).collect()
    };
    let unit = |pp: usize| -> Vec<Scalar> { (0..n).map(|r| if r == pp { int(1) } else { Scalar::zero() }).collect() };
    (0..m)
        .map(|i| {
            (0..n)
                .map(|q| {
                    (0..n)
                        .map(|pp| {
                            let e = unit(pp);
                            let t1 = act_a(i, &act_b(q, &e));
                            let t2 = act_b(q, &act_a(i, &e));
                            let br = &c[i][m + q];
                            let mut t3 = vec![Scalar::zero(); n];
                            for k in 0..m {
                                if !br[k].is_zero() {
                                    for (r, x) in act_a(k, &e).into_iter().enumerate() {
                                        t3[r] += &br[k] * x;
                                    }
                                }
                            }
                            for s in 0..n {
                                if !br[m + s].is_zero() {
                                    for (r, x) in act_b(s, &e).into_iter().enumerate() {
                                        t3[r] += &br[m + s] * x;
                                    }
                                }
                            }
                            (0..n).map(|r| &t1[r] - &t2[r] - &t3[r]).collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `ψ: E → g` with `E` a representation: `action[i][r][c]` is the `e_r`
/// coefficient of `x_i · e_c`, `psi[k][q]` the `x_k` coefficient of `ψ(e_q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMapObject {
    pub g: LieAlgebra,
    pub e_names: Vec<String>,
    pub action: Vec<Vec<Vec<Scalar>>>,
    pub psi: Vec<Vec<Scalar>>,
}

impl LinearMapObject {
    /// `E = g` with the adjoint action and `ψ = c·id`.
    pub fn adjoint(g: LieAlgebra, c: Scalar) -> Self {
        let n = g.dim();
        let action = adjoint_representation(&g);
        let psi = (0..n).map(|k| (0..n).map(|q| if k == q { c.clone() } else { Scalar::zero() }).collect()).collect();
        let e_names = g.names().to_vec();
        LinearMapObject { g, e_names, action, psi }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.g;
        g.check_jacobi()?;
        let n = g.dim();
        let r = self.e_names.len();
        if self.action.len() != n || self.action.iter().any(|m| m.len() != r || m.iter().any(|row| row.len() != r)) {
            return Err(Error::Validation("action needs one rank×rank matrix per Lie algebra basis element".into()));
        }
        if self.psi.len() != n || self.psi.iter().any(|row| row.len() != r) {
            return Err(Error::Validation("ψ must be a dim g × rank E matrix".into()));
        }
        let mul = |a: &Vec<Vec<Scalar>>, b: &Vec<Vec<Scalar>>| -> Vec<Vec<Scalar>> {
            (0..r).map(|i| (0..r).map(|j| (0..r).map(|k| &a[i][k] * &b[k][j]).sum()).collect()).collect()
        };
        for i in 0..n {
            for j in 0..n {
                let ab = mul(&self.action[i], &self.action[j]);
                let ba = mul(&self.action[j], &self.action[i]);
                for x in 0..r {
                    for y in 0..r {
                        let mut want = &ab[x][y] - &ba[x][y];
                        for k in 0..n {
                            want -= g.constant(i, j, k) * &self.action[k][x][y];
                        }
                        if !want.is_zero() {
                            return Err(Error::Validation(format!(
                                "not a representation at ({}, {})",
                                g.names()[i],
                                g.names()[j]
                            )));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for q in 0..r {
                // ψ(x_i · e_q) − [x_i, ψ(e_q)]
                for k in 0..n {
                    let mut v: Scalar = (0..r).map(|s| &self.psi[k][s] * &self.action[i][s][q]).sum();
                    for l in 0..n {
                        v -= g.constant(i, l, k) * &self.psi[l][q];
                    }
                    if !v.is_zero() {
                        return Err(Error::Validation(format!(
                            "ψ is not equivariant at ({}, {})",
                            g.names()[i],
                            self.e_names[q]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The output of [`linear_map_object`].
#[derive(Debug, Clone)]
pub struct LinearMapSetup {
    pub algebra: Arc<Cdga>,
    /// `Ω = C(g, E∨[−1])`: basis `e_q∨` in degree 1.
    pub omega: Arc<DgModule>,
    /// `δ(ξ^k) = ψ∨(ξ^k) = Σ_q ψ[k][q] e_q∨`.
    pub delta: Derivation,
    /// The trivial connection on `B = Ω∨ = C(g, E[1])`, with `E` in degree −1.
    pub connection: Connection,
}

pub fn linear_map_object(o: &LinearMapObject) -> Result<LinearMapSetup> {
    o.validate()?;
    let algebra = Arc::new(ce_algebra(&o.g)?);
    let names = o.e_names.iter().map(|n| format!("{n}∨")).collect();
    let omega = Arc::new(ce_module(algebra.clone(), names, 1, &dual_representation(&o.action))?);
    let values = o
        .psi
        .iter()
        .map(|row| {
            let mut v = ModuleElement::zero();
            for (q, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    v.add_term(q, &AlgebraElement::scalar(c.clone()));
                }
            }
            v
        })
        .collect();
    let delta = Derivation::new(omega.clone(), 0, values)?;
    if let Some(f) = validate_dg_derivation(&delta).first_failure() {
        return Err(Error::Consistency(format!("ψ∨ is not a dg derivation at {}", f.location)));
    }
    let b = Arc::new(dual_module(&omega));
    let connection = Connection::trivial(delta.clone(), b);
    Ok(LinearMapSetup { algebra, omega, delta, connection })
}

/// The coadjoint module `C(g, g∨)` in degree 0, basis `x*`.
pub fn coadjoint_module(algebra: Arc<Cdga>, g: &LieAlgebra) -> Result<DgModule> {
    let names = g.names().iter().map(|n| format!("{n}*")).collect();
    ce_module(algebra, names, 0, &dual_representation(&adjoint_representation(g)))
}

/// A named instance: a derivation with a connection on `B = Ω∨`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub delta: Derivation,
    pub connection: Connection,
}

pub fn sl2_borel() -> LiePairData {
    LiePairData::standard(crate::cdga::sl2(), vec![0, 1])
}

/// `j′(f̄) = f + e`.
pub fn sl2_borel_shifted() -> LiePairData {
    let mut p = sl2_borel();
    p.splitting = vec![vec![Scalar::zero(), int(1), int(1)]];
    p
}

pub fn affine_pair() -> LiePairData {
    LiePairData::standard(crate::cdga::affine2(), vec![0])
}

pub fn trivial_pair() -> LiePairData {
    LiePairData::standard(crate::cdga::abelian(&["x", "y"]), vec![0])
}

pub fn linear_maps_example() -> LinearMapObject {
    LinearMapObject::adjoint(crate::cdga::affine2(), int(1))
}

fn pair_instance(name: &str, p: &LiePairData) -> Result<Instance> {
    let s = lie_pair_setup(p)?;
    let connection = bott_connection(&s, &canonical_gamma(p))?;
    Ok(Instance { name: name.into(), delta: s.delta, connection })
}

/// sl2/Borel, the `[x,y]=y` pair, the linear-maps object and the abelian pair.
pub fn builtin_instances() -> Result<Vec<Instance>> {
    let lm = linear_map_object(&linear_maps_example())?;
    Ok(vec![
        pair_instance("sl2-borel", &sl2_borel())?,
        pair_instance("affine-pair", &affine_pair())?,
        Instance { name: "linear-maps".into(), delta: lm.delta, connection: lm.connection },
        pair_instance("trivial", &trivial_pair())?,
    ])
}

/// Basis of the equivariant maps `ψ: E → g` for a representation `action`,
/// each as a `dim g × rank E` matrix.
pub fn equivariant_maps(g: &LieAlgebra, action: &[Vec<Vec<Scalar>>]) -> Vec<Vec<Vec<Scalar>>> {
    let n = g.dim();
    let r = action.first().map_or(0, |m| m.len());
    let var = |k: usize, q: usize| k * r + q;
    // one row per (i, q, k): ψ(x_i·e_q)_k − [x_i, ψ(e_q)]_k
    let mut m = Matrix::zeros(n * r * n, n * r);
    for i in 0..n {
        for q in 0..r {
            for k in 0..n {
                let row = (i * r + q) * n + k;
                for s in 0..r {
                    let v = m.get(row, var(k, s)) + &action[i][s][q];
                    m.set(row, var(k, s), v);
                }
                for l in 0..n {
                    let v = m.get(row, var(l, q)) - g.constant(i, l, k);
                    m.set(row, var(l, q), v);
                }
            }
        }
    }
    m.kernel_basis()
        .into_iter()
        .map(|v| (0..n).map(|k| v[k * r..(k + 1) * r].to_vec()).collect())
        .collect()
}

/// `(b_1, b_2) ↦ ψ(b_1)·b_2` on `B = C(g, E[1])` as a degree-1 bilinear map,
/// extended from `E`: `(a e_p, a′ e_q) ↦ (−1)^{|a|} a a′ ψ(e_p)·e_q`.
pub fn psi_product_form(o: &LinearMapObject, b: &DgModule) -> MultilinearMap {
    let degs = b.k_degrees();
    let r = b.rank();
    let n = o.g.dim();
    MultilinearMap::from_fn(vec![degs.clone(), degs.clone()], degs, 1, |t| {
        let (m0, p) = b.k_decode(t[0]);
        let (m1, q) = b.k_decode(t[1]);
        let mut out = Element::zero();
        let Some((m, neg)) = mono_mul(m0, m1) else {
            return out;
        };
        let neg = neg ^ odd(mono_degree(m0) as i64);
        for k in 0..n {
            if o.psi[k][p].is_zero() {
                continue;
            }
            for s in 0..r {
                let c = &o.psi[k][p] * &o.action[k][s][q];
                if !c.is_zero() {
                    out.add_term(b.k_index(m, s), &(sign_scalar(neg) * c));
                }
            }
        }
        out
    })
}

fn two_dim_reps(g: &LieAlgebra, affine: bool) -> Vec<(String, Vec<Vec<Vec<Scalar>>>)> {
    let z = || Scalar::zero();
    let m2 = |a: [i64; 4]| vec![vec![int(a[0]), int(a[1])], vec![int(a[2]), int(a[3])]];
    let m1 = |a: i64| vec![vec![int(a)]];
    let mut reps: Vec<(String, Vec<Vec<Vec<Scalar>>>)> = Vec::new();
    if affine {
        // x acts semisimply, y nilpotently
        for l in [0, 1, -1] {
            reps.push((format!("C({l})"), vec![m1(l), vec![vec![z()]]]));
        }
        reps.push(("adjoint".into(), adjoint_representation(g)));
        for (a, b) in [(0, 1), (1, -1), (0, 0)] {
            reps.push((format!("C({a})+C({b})"), vec![m2([a, 0, 0, b]), m2([0; 4])]));
        }
        for a in [0, 2] {
            reps.push((format!("N({a})"), vec![m2([a, 0, 0, a - 1]), m2([0, 1, 0, 0])]));
        }
        let mut ad3 = adjoint_representation(g);
        for m in ad3.iter_mut() {
            for row in m.iter_mut() {
                row.push(z());
            }
            m.push(vec![z(), z(), z()]);
        }
        reps.push(("adjoint+C(0)".into(), ad3));
    } else {
        for (a, b) in [(0, 0), (1, 0), (1, 1)] {
            reps.push((format!("C({a},{b})"), vec![m1(a), m1(b)]));
        }
        reps.push(("J(0)".into(), vec![m2([0, 1, 0, 0]), m2([0; 4])]));
        reps.push(("J(1)".into(), vec![m2([1, 1, 0, 1]), m2([0; 4])]));
        reps.push(("C(0,0)+C(1,0)".into(), vec![m2([0, 0, 0, 1]), m2([0; 4])]));
        reps.push(("trivial2".into(), vec![m2([0; 4]), m2([0; 4])]));
    }
    reps
}

/// Linear-map objects over the abelian and the non-abelian two-dimensional
/// Lie algebras: a handful of small representations, each with every
/// equivariant `ψ` whose coordinates in a kernel basis lie in {−1, 0, 1}.
pub fn small_linear_map_family() -> Vec<(String, LinearMapObject)> {
    let mut out = Vec::new();
    for (gname, g, affine) in [("abelian", crate::cdga::abelian(&["x", "y"]), false), ("affine", crate::cdga::affine2(), true)] {
        for (rname, action) in two_dim_reps(&g, affine) {
            let r = action[0].len();
            let basis = equivariant_maps(&g, &action);
            let count = 3usize.pow(basis.len().min(4) as u32);
            for code in 0..count {
                let mut psi = vec![vec![Scalar::zero(); r]; g.dim()];
                let mut c = code;
                let mut label = Vec::new();
                for v in basis.iter().take(4) {
                    let coef = (c % 3) as i64 - 1;
                    c /= 3;
                    label.push(coef.to_string());
                    for (k, row) in v.iter().enumerate() {
                        for (q, x) in row.iter().enumerate() {
                            psi[k][q] += int(coef) * x;
                        }
                    }
                }
                let e_names = (0..r).map(|i| format!("e{}", i + 1)).collect();
                let o = LinearMapObject { g: g.clone(), e_names, action: action.clone(), psi };
                out.push((format!("{gname}/{rname}/ψ[{}]", label.join(",")), o));
            }
        }
    }
    out
}

/// What [`search_non_skew`] found.
#[derive(Debug, Clone)]
pub struct SkewSearch {
    pub examined: usize,
    /// objects whose `H(B)` is non-zero
    pub with_cohomology: usize,
    /// objects where `ψ(e_1)·e_2` has a non-zero class
    pub nonzero_psi_product: usize,
    /// objects where the cohomology bracket is non-zero
    pub nonzero_bracket: usize,
    /// first object with a non-skew cohomology bracket, with the class pair
    pub witness: Option<(String, usize, usize)>,
}

/// Searches [`small_linear_map_family`] for a Leibniz bracket on `H(B)`
/// that is not graded skew-symmetric.
pub fn search_non_skew() -> Result<SkewSearch> {
    let mut s = SkewSearch { examined: 0, with_cohomology: 0, nonzero_psi_product: 0, nonzero_bracket: 0, witness: None };
    for (name, o) in small_linear_map_family() {
        let setup = linear_map_object(&o)?;
        let t = crate::kapranov::cohomology_leibniz_bracket(&setup.connection)?;
        s.examined += 1;
        if t.left_reps.is_empty() {
            continue;
        }
        s.with_cohomology += 1;
        let b = setup.connection.module();
        let p = crate::kapranov::class_table(b, b, &psi_product_form(&o, b), false)?;
        if !p.is_zero() {
            s.nonzero_psi_product += 1;
        }
        if !t.is_zero() {
            s.nonzero_bracket += 1;
        }
        if s.witness.is_none() {
            if let Some((i, j)) = t.skew_witness() {
                s.witness = Some((name, i, j));
            }
        }
    }
    Ok(s)
}
