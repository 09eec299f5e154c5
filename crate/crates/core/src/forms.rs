//! Antisymmetric covariant tensors with Lorentzian contractions, the Hodge
//! star in 1+2 dimensions, wedge products and the exterior derivative.
//!
//! A rank-`r` form over `d` indices stores the components `P_I` for strictly
//! increasing `I`, in lexicographic order. Wedge products use
//! `P ∧ Q = ((p+q)!/(p!q!)) Alt(P ⊗ Q)`, so `(1/3) ϑ ∧ dϑ = Alt(ϑ ⊗ dϑ)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::{binomial, gradient, FieldKind, LatticeField, Stencil};
use crate::spinor::{METRIC, METRIC_4D};

const MAX_COMPONENTS: usize = 6;

type Basis = Vec<Vec<usize>>;

fn bases() -> &'static Vec<Vec<Basis>> {
    static TABLE: OnceLock<Vec<Vec<Basis>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=4).map(|dims| (0..=dims).map(|rank| combinations(dims, rank)).collect()).collect())
}

fn combinations(n: usize, k: usize) -> Basis {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Basis) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Sorted index tuples of the independent components.
pub fn basis(dims: usize, rank: usize) -> &'static [Vec<usize>] {
    &bases()[dims][rank]
}

/// Sign of the permutation sorting `idx`, or 0 when an index repeats.
pub fn permutation_sign(idx: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn metric(dims: usize) -> &'static [f64] {
    match dims {
        3 => &METRIC,
        4 => &METRIC_4D,
        _ => panic!("no Lorentzian metric in {dims} dimensions"),
    }
}

/// Position of a sorted tuple within the basis.
fn basis_position(dims: usize, sorted: &[usize]) -> usize {
    basis(dims, sorted.len()).iter().position(|b| b.as_slice() == sorted).expect("sorted tuple must be a basis element")
}

/// A single antisymmetric tensor value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Form {
    pub dims: usize,
    pub rank: usize,
    c: [f64; MAX_COMPONENTS],
}

impl Form {
    pub fn zero(dims: usize, rank: usize) -> Self {
        assert!(dims <= 4 && rank <= dims);
        Self { dims, rank, c: [0.0; MAX_COMPONENTS] }
    }

    pub fn from_components(dims: usize, rank: usize, comps: &[f64]) -> Self {
        let mut f = Self::zero(dims, rank);
        assert_eq!(comps.len(), binomial(dims, rank));
        f.c[..comps.len()].copy_from_slice(comps);
        f
    }

    pub fn scalar(dims: usize, v: f64) -> Self {
        Self::from_components(dims, 0, &[v])
    }

    pub fn covector(dims: usize, v: &[f64]) -> Self {
        Self::from_components(dims, 1, &v[..dims])
    }

    /// Basis form `dx^{i1} ∧ … ∧ dx^{ir}` for a sorted tuple.
    pub fn basis_element(dims: usize, sorted: &[usize]) -> Self {
        let mut f = Self::zero(dims, sorted.len());
        f.c[basis_position(dims, sorted)] = 1.0;
        f
    }

    pub fn components(&self) -> &[f64] {
        &self.c[..binomial(self.dims, self.rank)]
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        let n = binomial(self.dims, self.rank);
        &mut self.c[..n]
    }

    /// Component for an arbitrary index tuple, including the antisymmetry sign.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.rank);
        let sign = permutation_sign(idx);
        if sign == 0.0 {
            return 0.0;
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        sign * self.c[basis_position(self.dims, &sorted)]
    }

    pub fn add(&self, o: &Form) -> Form {
        assert!(self.dims == o.dims && self.rank == o.rank);
        let mut out = *self;
        for (a, b) in out.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, k: f64) -> Form {
        let mut out = *self;
        for a in out.c.iter_mut() {
            *a *= k;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Wedge product via the shuffle expansion.
    pub fn wedge(&self, q: &Form) -> Result<Form> {
        if self.dims != q.dims {
            return Err(Error::RankMismatch { left: format!("{}-dimensional form", self.dims), right: format!("{}-dimensional form", q.dims) });
        }
        let rank = self.rank + q.rank;
        if rank > self.dims {
            return Err(Error::RankOverflow { p: self.rank, q: q.rank, dims: self.dims });
        }
        let mut out = Form::zero(self.dims, rank);
        for (pos, idx) in basis(self.dims, rank).iter().enumerate() {
            let mut acc = 0.0;
            for (jpos, j) in basis(self.dims, self.rank).iter().enumerate() {
                if !j.iter().all(|a| idx.contains(a)) {
                    continue;
                }
                let k: Vec<usize> = idx.iter().copied().filter(|a| !j.contains(a)).collect();
                let kpos = basis_position(self.dims, &k);
                let mut perm = j.clone();
                perm.extend_from_slice(&k);
                acc += permutation_sign(&perm) * self.c[jpos] * q.c[kpos];
            }
            out.c[pos] = acc;
        }
        Ok(out)
    }

    /// `P·Q = (1/r!) P_{α…} Q_{β…} g^{αβ}…`; signed.
    pub fn dot(&self, q: &Form) -> Result<f64> {
        if self.dims != q.dims || self.rank != q.rank {
            return Err(Error::RankMismatch {
                left: format!("rank {} over {}", self.rank, self.dims),
                right: format!("rank {} over {}", q.rank, q.dims),
            });
        }
        let g = metric(self.dims);
        Ok(basis(self.dims, self.rank)
            .iter()
            .enumerate()
            .map(|(pos, idx)| {
                let w: f64 = idx.iter().map(|&a| g[a]).product();
                w * self.c[pos] * q.c[pos]
            })
            .sum())
    }

    pub fn norm_sqr(&self) -> Result<f64> {
        self.dot(self)
    }

    /// `(*R)_{α_{r+1}…α_3} = (r!)⁻¹ R^{α_1…α_r} ε_{α_1…α_3}` with `ε_{012} = +1`.
    pub fn hodge(&self) -> Result<Form> {
        if self.dims != 3 {
            return Err(Error::UnsupportedRank(format!("Hodge star is defined for 1+2 dimensions, got a {}-dimensional form", self.dims)));
        }
        let g = metric(3);
        let mut out = Form::zero(3, 3 - self.rank);
        for (opos, jdx) in basis(3, 3 - self.rank).iter().enumerate() {
            let idx: Vec<usize> = (0..3).filter(|a| !jdx.contains(a)).collect();
            let ipos = basis_position(3, &idx);
            let raise: f64 = idx.iter().map(|&a| g[a]).product();
            let mut perm = idx.clone();
            perm.extend_from_slice(jdx);
            out.c[opos] = raise * permutation_sign(&perm) * self.c[ipos];
        }
        Ok(out)
    }

    /// Inverse of [`Form::hodge`]; in signature −++ the double dual is −1.
    pub fn hodge_inverse(&self) -> Result<Form> {
        Ok(self.hodge()?.scale(-1.0))
    }
}

/// Total antisymmetrisation of a rank-3 tensor given as `t[a][b][c]`.
pub fn alternate3(dims: usize, t: &[f64]) -> Form {
    let mut out = Form::zero(dims, 3);
    let at = |a: usize, b: usize, c: usize| t[(a * dims + b) * dims + c];
    for (pos, idx) in basis(dims, 3).iter().enumerate() {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        let s = at(a, b, c) + at(b, c, a) + at(c, a, b) - at(b, a, c) - at(a, c, b) - at(c, b, a);
        out.c[pos] = s / 6.0;
    }
    out
}

fn form_kind(f: &LatticeField) -> Result<(usize, usize)> {
    match f.kind {
        FieldKind::Form { dims, rank } => Ok((dims, rank)),
        FieldKind::Scalar => Ok((f.spec.dims().max(3), 0)),
        other => Err(Error::UnsupportedRank(format!("{other:?} is not a differential form"))),
    }
}

fn form_at(f: &LatticeField, dims: usize, rank: usize, idx: usize) -> Form {
    Form::from_components(dims, rank, f.at(idx))
}

/// Pointwise Lorentzian dot product of two form fields.
pub fn lorentz_dot(p: &LatticeField, q: &LatticeField) -> Result<LatticeField> {
    let (pd, pr) = form_kind(p)?;
    let (qd, qr) = form_kind(q)?;
    if pd != qd || pr != qr {
        return Err(Error::RankMismatch { left: format!("{:?}", p.kind), right: format!("{:?}", q.kind) });
    }
    if p.spec != q.spec {
        return Err(Error::DimensionMismatch("fields live on different lattices".into()));
    }
    let mut out = p.map(FieldKind::Scalar, |_, _, _| {});
    out.margin = LatticeField::joint_margin(&[p, q]);
    for idx in 0..p.spec.len() {
        out.data[idx] = if p.spec.is_interior(idx, &out.margin) { form_at(p, pd, pr, idx).dot(&form_at(q, qd, qr, idx))? } else { f64::NAN };
    }
    Ok(out)
}

/// Pointwise Hodge dual of a form field over three form indices.
pub fn hodge_dual(r: &LatticeField) -> Result<LatticeField> {
    let (dims, rank) = form_kind(r)?;
    if dims != 3 {
        return Err(Error::UnsupportedRank(format!("Hodge dual needs 3 form indices, got {dims}")));
    }
    let kind = FieldKind::Form { dims: 3, rank: 3 - rank };
    let mut err = None;
    let out = r.map(kind, |_, v, dst| match Form::from_components(3, rank, v).hodge() {
        Ok(h) => dst.copy_from_slice(h.components()),
        Err(e) => err = Some(e),
    });
    err.map_or(Ok(out), Err)
}

/// Pointwise wedge product of two form fields.
pub fn wedge(p: &LatticeField, q: &LatticeField) -> Result<LatticeField> {
    let (pd, pr) = form_kind(p)?;
    let (qd, qr) = form_kind(q)?;
    if pd != qd {
        return Err(Error::RankMismatch { left: format!("{:?}", p.kind), right: format!("{:?}", q.kind) });
    }
    if pr + qr > pd {
        return Err(Error::RankOverflow { p: pr, q: qr, dims: pd });
    }
    let kind = FieldKind::Form { dims: pd, rank: pr + qr };
    let mut out = LatticeField::zeros(&p.spec, kind);
    out.margin = LatticeField::joint_margin(&[p, q]);
    let nc = kind.real_components();
    for idx in 0..p.spec.len() {
        let dst = &mut out.data[idx * nc..(idx + 1) * nc];
        if !p.spec.is_interior(idx, &out.margin) {
            dst.fill(f64::NAN);
            continue;
        }
        let w = form_at(p, pd, pr, idx).wedge(&form_at(q, qd, qr, idx))?;
        dst.copy_from_slice(w.components());
    }
    Ok(out)
}

/// Pointwise exterior derivative from precomputed partial derivatives.
pub fn exterior_derivative_from_partials(dims: usize, rank: usize, partials: &[Form]) -> Form {
    let mut out = Form::zero(dims, rank + 1);
    for (pos, idx) in basis(dims, rank + 1).iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &a)| a).collect();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * partials[idx[k]].get(&rest);
        }
        out.c[pos] = acc;
    }
    out
}

/// `(dP)_{α_0…α_r} = Σ_k (−1)^k ∂_{α_k} P_{…α̂_k…}` with stencil derivatives.
pub fn exterior_derivative(p: &LatticeField, stencil: Stencil) -> Result<LatticeField> {
    let (dims, rank) = form_kind(p)?;
    if rank + 1 > dims {
        return Err(Error::RankOverflow { p: rank, q: 1, dims });
    }
    if p.spec.dims() < dims {
        return Err(Error::DimensionMismatch(format!("{dims} form indices need at least {dims} lattice axes")));
    }
    let grads = gradient(p, dims, stencil)?;
    let refs: Vec<&LatticeField> = grads.iter().collect();
    let kind = FieldKind::Form { dims, rank: rank + 1 };
    let mut out = LatticeField::zeros(&p.spec, kind);
    out.margin = LatticeField::joint_margin(&refs);
    let nc = kind.real_components();
    for idx in 0..p.spec.len() {
        let dst = &mut out.data[idx * nc..(idx + 1) * nc];
        if !p.spec.is_interior(idx, &out.margin) {
            dst.fill(f64::NAN);
            continue;
        }
        let partials: Vec<Form> = grads.iter().map(|g| form_at(g, dims, rank, idx)).collect();
        dst.copy_from_slice(exterior_derivative_from_partials(dims, rank, &partials).components());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covector_dots() {
        let e0 = Form::covector(3, &[1.0, 0.0, 0.0]);
        let e1 = Form::covector(3, &[0.0, 1.0, 0.0]);
        assert_eq!(e0.norm_sqr().unwrap(), -1.0);
        assert_eq!(e1.norm_sqr().unwrap(), 1.0);
        let p12 = Form::basis_element(3, &[1, 2]);
        assert_eq!(p12.norm_sqr().unwrap(), 1.0);
        // the double contraction with 1/2! counts both orderings once
        let brute: f64 =
            (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| p12.get(&[a, b]).powi(2) * METRIC[a] * METRIC[b]).sum::<f64>() / 2.0;
        assert_eq!(brute, 1.0);
    }

    #[test]
    fn wedge_basis_cases() {
        let dx = |i| Form::basis_element(3, &[i]);
        let p = dx(0).wedge(&dx(1)).unwrap();
        assert_eq!(p.get(&[0, 1]), 1.0);
        assert_eq!(p.get(&[1, 0]), -1.0);
        let t = p.wedge(&dx(2)).unwrap();
        assert_eq!(t.get(&[0, 1, 2]), 1.0);
        let v = Form::covector(3, &[0.3, -1.2, 2.0]);
        assert_eq!(v.wedge(&v).unwrap().max_abs(), 0.0);
        assert!(matches!(p.wedge(&p), Err(Error::RankOverflow { .. })));
    }

    #[test]
    fn hodge_of_volume_form() {
        let t = Form::basis_element(3, &[0, 1, 2]);
        assert_eq!(t.hodge().unwrap().components(), &[-1.0]);
        let one = Form::scalar(3, 1.0);
        assert_eq!(one.hodge().unwrap().get(&[0, 1, 2]), 1.0);
        assert_eq!(Form::zero(3, 2).hodge().unwrap().max_abs(), 0.0);
        assert!(Form::zero(4, 2).hodge().is_err());
    }

    #[test]
    fn hodge_matches_brute_force_definition() {
        // (*R)_J = (1/r!) Σ_{all I} R^I ε_{IJ}
        for rank in 0..=3 {
            for b in basis(3, rank) {
                let r = Form::basis_element(3, b);
                let h = r.hodge().unwrap();
                for j in basis(3, 3 - rank) {
                    let mut acc = 0.0;
                    let mut fact = 1.0;
                    for k in 1..=rank {
                        fact *= k as f64;
                    }
                    let all: Vec<Vec<usize>> = tuples(3, rank);
                    for i in all {
                        let raise: f64 = i.iter().map(|&a| METRIC[a]).product();
                        let mut perm = i.clone();
                        perm.extend_from_slice(j);
                        acc += r.get(&i) * raise * permutation_sign(&perm);
                    }
                    assert_eq!(h.get(j), acc / fact);
                }
            }
        }
    }

    fn tuples(dims: usize, rank: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..rank {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..dims).map(move |a| {
                        let mut t = t.clone();
                        t.push(a);
                        t
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn double_dual_sign_law_on_all_basis_forms() {
        // ** = (−1)^{r(3−r)} · sign(det g) = −1 in signature −++
        for rank in 0..=3 {
            for b in basis(3, rank) {
                let r = Form::basis_element(3, b);
                let rr = r.hodge().unwrap().hodge().unwrap();
                let expect = -(-1f64).powi((rank * (3 - rank)) as i32);
                assert_eq!(rr, r.scale(expect));
                assert_eq!(r.hodge().unwrap().hodge_inverse().unwrap(), r);
            }
        }
    }

    #[test]
    fn alternation_of_tensor_product_matches_wedge() {
        let a = Form::covector(3, &[0.4, -0.2, 1.5]);
        let f = Form::from_components(3, 2, &[0.7, -1.1, 0.25]);
        let mut t = vec![0.0; 27];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t[(i * 3 + j) * 3 + k] = a.get(&[i]) * f.get(&[j, k]);
                }
            }
        }
        let alt = alternate3(3, &t);
        let w = a.wedge(&f).unwrap().scale(1.0 / 3.0);
        assert!((alt.get(&[0, 1, 2]) - w.get(&[0, 1, 2])).abs() < 1e-15);
    }
}
