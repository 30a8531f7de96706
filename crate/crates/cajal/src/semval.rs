//! The target semantic algebra: real 2-vectors, finite-support sequences,
//! and opaque linear-map values, closed under pointwise addition and scaling.
//!
//! Booleans denote vectors in R^2, naturals denote finite-support sequences
//! (an infinite-dimensional space represented sparsely, with no truncation
//! bound), and function types denote linear maps between the denotations of
//! their domain and codomain. Matrices enter only at the boundary: a linear
//! map between base types can be supplied or extracted as a dense matrix.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::ast::Ty;

/// Semantic types: the image of source types under type compilation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemTy {
    VBool,
    VNat,
    VFn(Box<SemTy>, Box<SemTy>),
}

impl SemTy {
    pub fn of_ty(ty: &Ty) -> SemTy {
        match ty {
            Ty::Bool => SemTy::VBool,
            Ty::Nat => SemTy::VNat,
            Ty::Fn(a, b) => SemTy::VFn(Box::new(SemTy::of_ty(a)), Box::new(SemTy::of_ty(b))),
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, SemTy::VBool | SemTy::VNat)
    }

    /// Dimension of a base type under truncation (`VNat` probes indices
    /// `0..trunc`).
    pub fn base_dim(&self, trunc: usize) -> Option<usize> {
        match self {
            SemTy::VBool => Some(2),
            SemTy::VNat => Some(trunc),
            SemTy::VFn(..) => None,
        }
    }
}

impl fmt::Display for SemTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemTy::VBool => write!(f, "R^2"),
            SemTy::VNat => write!(f, "Seq"),
            SemTy::VFn(a, b) => write!(f, "Lin({}, {})", a, b),
        }
    }
}

/// Bit-exact hashable key for a base-typed argument, used to memoize map
/// application. Function-typed arguments are not cached.
#[derive(PartialEq, Eq, Hash)]
enum ArgKey {
    Vec2(u64, u64),
    Seq(Vec<(u64, u64)>),
}

impl ArgKey {
    fn of(v: &SemValue) -> Option<ArgKey> {
        match v {
            SemValue::Vec2(a, b) => Some(ArgKey::Vec2(a.to_bits(), b.to_bits())),
            SemValue::Seq(entries) => Some(ArgKey::Seq(
                entries.iter().map(|(n, x)| (*n, x.to_bits())).collect(),
            )),
            SemValue::Map(_) => None,
        }
    }
}

/// An opaque linear map between semantic values. Applications at base-typed
/// arguments are memoized: nested soft branches and iterations build closures
/// that re-apply earlier states several times per call, and without caching
/// that cost compounds exponentially.
#[derive(Clone)]
pub struct MapValue {
    pub dom: SemTy,
    pub cod: SemTy,
    f: Arc<dyn Fn(&SemValue) -> SemValue + Send + Sync>,
    cache: Arc<std::sync::Mutex<std::collections::HashMap<ArgKey, SemValue>>>,
}

impl MapValue {
    pub fn new<F>(dom: SemTy, cod: SemTy, f: F) -> MapValue
    where
        F: Fn(&SemValue) -> SemValue + Send + Sync + 'static,
    {
        MapValue {
            dom,
            cod,
            f: Arc::new(f),
            cache: Arc::new(std::sync::Mutex::new(std::collections::HashMap::new())),
        }
    }

    pub fn apply(&self, v: &SemValue) -> Result<SemValue, SemError> {
        if v.sem_ty() != self.dom {
            return Err(SemError::ShapeMismatch {
                expected: self.dom.to_string(),
                found: v.sem_ty().to_string(),
            });
        }
        let key = ArgKey::of(v);
        if let Some(k) = &key {
            if let Some(hit) = self.cache.lock().unwrap().get(k) {
                return Ok(hit.clone());
            }
        }
        let out = (self.f)(v);
        if let Some(k) = key {
            self.cache.lock().unwrap().insert(k, out.clone());
        }
        Ok(out)
    }

    /// The identity map at a semantic type.
    pub fn identity(ty: SemTy) -> MapValue {
        MapValue::new(ty.clone(), ty, |v| v.clone())
    }

    /// A map between base types backed by a dense row-major matrix. Columns
    /// index the domain basis, rows the codomain basis. A `VNat` domain reads
    /// sequence entries `0..cols` (entries beyond the matrix are dropped).
    pub fn from_matrix(dom: SemTy, cod: SemTy, rows: usize, cols: usize, data: Vec<f64>) -> Result<MapValue, SemError> {
        if !dom.is_base() || !cod.is_base() {
            return Err(SemError::ShapeMismatch {
                expected: "base-to-base map".to_string(),
                found: format!("Lin({}, {})", dom, cod),
            });
        }
        if data.len() != rows * cols || (cod == SemTy::VBool && rows != 2) || (dom == SemTy::VBool && cols != 2) {
            return Err(SemError::ShapeMismatch {
                expected: format!("{}x{} matrix", rows, cols),
                found: format!("{} entries", data.len()),
            });
        }
        for x in &data {
            check_finite(*x)?;
        }
        let out_cod = cod.clone();
        Ok(MapValue::new(dom, cod, move |v| {
            let coords = v.base_coords(cols);
            let mut out = vec![0.0; rows];
            for (r, row) in out.iter_mut().enumerate() {
                for (c, x) in coords.iter().enumerate() {
                    *row += data[r * cols + c] * x;
                }
            }
            SemValue::from_base_coords(&out_cod, &out)
        }))
    }
}

impl fmt::Debug for MapValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MapValue({} -> {})", self.dom, self.cod)
    }
}

/// A semantic value: a 2-vector, a sparse finite-support sequence (indices
/// strictly increasing, no stored zeros), or a linear-map value.
#[derive(Debug, Clone)]
pub enum SemValue {
    Vec2(f64, f64),
    Seq(Vec<(u64, f64)>),
    Map(MapValue),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SemError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("non-finite scalar encountered")]
    NonFinite,
    #[error("invalid value encoding: {0}")]
    BadEncoding(String),
}

pub fn check_finite(x: f64) -> Result<(), SemError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SemError::NonFinite)
    }
}

impl SemValue {
    pub fn vec2(a: f64, b: f64) -> SemValue {
        SemValue::Vec2(a, b)
    }

    /// Build a sequence from (index, coefficient) pairs, sorting the support
    /// and dropping zeros.
    pub fn seq(entries: Vec<(u64, f64)>) -> SemValue {
        let mut map: std::collections::BTreeMap<u64, f64> = Default::default();
        for (i, c) in entries {
            *map.entry(i).or_insert(0.0) += c;
        }
        SemValue::Seq(map.into_iter().filter(|(_, c)| *c != 0.0).collect())
    }

    /// One-hot sequence at index `n`.
    pub fn one_hot(n: u64) -> SemValue {
        SemValue::Seq(vec![(n, 1.0)])
    }

    pub fn zero(ty: &SemTy) -> SemValue {
        match ty {
            SemTy::VBool => SemValue::Vec2(0.0, 0.0),
            SemTy::VNat => SemValue::Seq(vec![]),
            SemTy::VFn(a, b) => {
                let cod = (**b).clone();
                SemValue::Map(MapValue::new((**a).clone(), (**b).clone(), move |_| {
                    SemValue::zero(&cod)
                }))
            }
        }
    }

    pub fn sem_ty(&self) -> SemTy {
        match self {
            SemValue::Vec2(..) => SemTy::VBool,
            SemValue::Seq(..) => SemTy::VNat,
            SemValue::Map(m) => SemTy::VFn(Box::new(m.dom.clone()), Box::new(m.cod.clone())),
        }
    }

    /// Coefficient of a sequence at index `n` (0 when absent).
    pub fn seq_at(&self, n: u64) -> f64 {
        match self {
            SemValue::Seq(entries) => entries
                .iter()
                .find(|(i, _)| *i == n)
                .map(|(_, c)| *c)
                .unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// Dense coordinates of a base value: `[a, b]` for a 2-vector, the first
    /// `dim` sequence entries for a sequence.
    pub fn base_coords(&self, dim: usize) -> Vec<f64> {
        match self {
            SemValue::Vec2(a, b) => vec![*a, *b],
            SemValue::Seq(_) => (0..dim as u64).map(|i| self.seq_at(i)).collect(),
            SemValue::Map(_) => vec![],
        }
    }

    pub fn from_base_coords(ty: &SemTy, coords: &[f64]) -> SemValue {
        match ty {
            SemTy::VBool => SemValue::Vec2(coords[0], coords[1]),
            SemTy::VNat => SemValue::seq(
                coords
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i as u64, *c))
                    .collect(),
            ),
            SemTy::VFn(..) => panic!("from_base_coords on function type"),
        }
    }

    /// Basis vectors of a base semantic type (truncated for sequences).
    pub fn basis(ty: &SemTy, trunc: usize) -> Vec<SemValue> {
        match ty {
            SemTy::VBool => vec![SemValue::Vec2(1.0, 0.0), SemValue::Vec2(0.0, 1.0)],
            SemTy::VNat => (0..trunc as u64).map(SemValue::one_hot).collect(),
            SemTy::VFn(..) => vec![],
        }
    }

    /// Reject NaN/Inf anywhere in the (base-typed parts of the) value.
    pub fn check_finite(&self) -> Result<(), SemError> {
        match self {
            SemValue::Vec2(a, b) => {
                check_finite(*a)?;
                check_finite(*b)
            }
            SemValue::Seq(entries) => {
                for (_, c) in entries {
                    check_finite(*c)?;
                }
                Ok(())
            }
            SemValue::Map(_) => Ok(()),
        }
    }
}

/// Pointwise vector addition.
pub fn add(u: &SemValue, v: &SemValue) -> Result<SemValue, SemError> {
    match (u, v) {
        (SemValue::Vec2(a1, b1), SemValue::Vec2(a2, b2)) => Ok(SemValue::Vec2(a1 + a2, b1 + b2)),
        (SemValue::Seq(e1), SemValue::Seq(e2)) => {
            let mut entries = e1.clone();
            entries.extend(e2.iter().cloned());
            Ok(SemValue::seq(entries))
        }
        (SemValue::Map(m1), SemValue::Map(m2)) => {
            if m1.dom != m2.dom || m1.cod != m2.cod {
                return Err(SemError::ShapeMismatch {
                    expected: format!("Lin({}, {})", m1.dom, m1.cod),
                    found: format!("Lin({}, {})", m2.dom, m2.cod),
                });
            }
            let (m1, m2) = (m1.clone(), m2.clone());
            Ok(SemValue::Map(MapValue::new(
                m1.dom.clone(),
                m1.cod.clone(),
                move |x| {
                    let a = m1.apply(x).expect("map domain checked on entry");
                    let b = m2.apply(x).expect("map domain checked on entry");
                    add(&a, &b).expect("map codomains agree")
                },
            )))
        }
        _ => Err(SemError::ShapeMismatch {
            expected: u.sem_ty().to_string(),
            found: v.sem_ty().to_string(),
        }),
    }
}

/// Pointwise scalar multiplication.
pub fn scale(a: f64, v: &SemValue) -> SemValue {
    match v {
        SemValue::Vec2(x, y) => SemValue::Vec2(a * x, a * y),
        SemValue::Seq(entries) => {
            SemValue::seq(entries.iter().map(|(i, c)| (*i, a * c)).collect())
        }
        SemValue::Map(m) => {
            let m = m.clone();
            SemValue::Map(MapValue::new(m.dom.clone(), m.cod.clone(), move |x| {
                scale(a, &m.apply(x).expect("map domain checked on entry"))
            }))
        }
    }
}

/// Projection of a 2-vector (i is 1 or 2).
pub fn proj(i: usize, v: &SemValue) -> Result<f64, SemError> {
    match (i, v) {
        (1, SemValue::Vec2(a, _)) => Ok(*a),
        (2, SemValue::Vec2(_, b)) => Ok(*b),
        _ => Err(SemError::ShapeMismatch {
            expected: "R^2 with projection index 1 or 2".to_string(),
            found: format!("index {} on {}", i, v.sem_ty()),
        }),
    }
}

/// n-fold application of a map to a value; identity when `n = 0`.
pub fn power_apply(f: &MapValue, n: u64, v: &SemValue) -> Result<SemValue, SemError> {
    if f.dom != f.cod {
        return Err(SemError::ShapeMismatch {
            expected: "endomap".to_string(),
            found: format!("Lin({}, {})", f.dom, f.cod),
        });
    }
    let mut cur = v.clone();
    for _ in 0..n {
        cur = f.apply(&cur)?;
    }
    Ok(cur)
}

/// Approximate equality at base types: relative tolerance `rel`, absolute
/// fallback `abs` near zero. Sequences compare over the union of supports.
pub fn approx_eq(u: &SemValue, v: &SemValue, rel: f64, abs: f64) -> bool {
    fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
        let diff = (a - b).abs();
        diff <= abs || diff <= rel * a.abs().max(b.abs())
    }
    match (u, v) {
        (SemValue::Vec2(a1, b1), SemValue::Vec2(a2, b2)) => {
            close(*a1, *a2, rel, abs) && close(*b1, *b2, rel, abs)
        }
        (SemValue::Seq(e1), SemValue::Seq(e2)) => {
            let idxs: std::collections::BTreeSet<u64> = e1
                .iter()
                .chain(e2.iter())
                .map(|(i, _)| *i)
                .collect();
            idxs.iter()
                .all(|&i| close(u.seq_at(i), v.seq_at(i), rel, abs))
        }
        _ => false,
    }
}

pub const REL_TOL: f64 = 1e-9;
pub const ABS_TOL: f64 = 1e-12;

/// Default comparison at the module's documented tolerance.
pub fn sem_eq(u: &SemValue, v: &SemValue) -> bool {
    approx_eq(u, v, REL_TOL, ABS_TOL)
}

/// Dense matrix of a base-to-base map obtained by probing domain basis
/// vectors; column `j` is the image of basis vector `j`.
pub fn map_matrix(m: &MapValue, trunc: usize) -> Result<(usize, usize, Vec<f64>), SemError> {
    let cols = m.dom.base_dim(trunc).ok_or(SemError::ShapeMismatch {
        expected: "base domain".to_string(),
        found: m.dom.to_string(),
    })?;
    let rows = m.cod.base_dim(trunc).ok_or(SemError::ShapeMismatch {
        expected: "base codomain".to_string(),
        found: m.cod.to_string(),
    })?;
    let mut data = vec![0.0; rows * cols];
    for (j, e) in SemValue::basis(&m.dom, trunc).iter().enumerate() {
        let col = m.apply(e)?.base_coords(rows);
        for (i, x) in col.iter().enumerate() {
            data[i * cols + j] = *x;
        }
    }
    Ok((rows, cols, data))
}

/// JSON encoding of a value. Maps are only encodable as matrices between
/// base types, at the given truncation.
pub fn to_json(v: &SemValue, trunc: usize) -> Result<Json, SemError> {
    match v {
        SemValue::Vec2(a, b) => Ok(json!({"kind": "bool", "vec": [a, b]})),
        SemValue::Seq(entries) => Ok(json!({
            "kind": "nat",
            "support": entries.iter().map(|(i, c)| json!([i, c])).collect::<Vec<_>>(),
        })),
        SemValue::Map(m) => {
            let (rows, cols, data) = map_matrix(m, trunc)?;
            Ok(json!({"kind": "matrix", "rows": rows, "cols": cols, "data": data}))
        }
    }
}

/// Decode a JSON value. The matrix form requires the expected semantic type
/// to recover domain and codomain.
pub fn from_json(j: &Json, expected: &SemTy) -> Result<SemValue, SemError> {
    let kind = j
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| SemError::BadEncoding("missing \"kind\"".to_string()))?;
    let v = match kind {
        "bool" => {
            let vec = j
                .get("vec")
                .and_then(|v| v.as_array())
                .ok_or_else(|| SemError::BadEncoding("missing \"vec\"".to_string()))?;
            if vec.len() != 2 {
                return Err(SemError::BadEncoding("\"vec\" must have 2 entries".to_string()));
            }
            let a = vec[0].as_f64().ok_or_else(|| SemError::BadEncoding("non-numeric entry".to_string()))?;
            let b = vec[1].as_f64().ok_or_else(|| SemError::BadEncoding("non-numeric entry".to_string()))?;
            check_finite(a)?;
            check_finite(b)?;
            SemValue::Vec2(a, b)
        }
        "nat" => {
            let support = j
                .get("support")
                .and_then(|v| v.as_array())
                .ok_or_else(|| SemError::BadEncoding("missing \"support\"".to_string()))?;
            let mut entries = Vec::new();
            for pair in support {
                let pair = pair
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| SemError::BadEncoding("support entries must be [index, coeff] pairs".to_string()))?;
                let i = pair[0]
                    .as_u64()
                    .ok_or_else(|| SemError::BadEncoding("support index must be a natural".to_string()))?;
                let c = pair[1]
                    .as_f64()
                    .ok_or_else(|| SemError::BadEncoding("non-numeric coefficient".to_string()))?;
                check_finite(c)?;
                entries.push((i, c));
            }
            SemValue::seq(entries)
        }
        "matrix" => {
            let (dom, cod) = match expected {
                SemTy::VFn(a, b) if a.is_base() && b.is_base() => ((**a).clone(), (**b).clone()),
                other => {
                    return Err(SemError::BadEncoding(format!(
                        "matrix supplied where {} expected",
                        other
                    )))
                }
            };
            let rows = j.get("rows").and_then(|v| v.as_u64()).ok_or_else(|| SemError::BadEncoding("missing \"rows\"".to_string()))? as usize;
            let cols = j.get("cols").and_then(|v| v.as_u64()).ok_or_else(|| SemError::BadEncoding("missing \"cols\"".to_string()))? as usize;
            let data: Vec<f64> = j
                .get("data")
                .and_then(|v| v.as_array())
                .ok_or_else(|| SemError::BadEncoding("missing \"data\"".to_string()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| SemError::BadEncoding("non-numeric matrix entry".to_string())))
                .collect::<Result<_, _>>()?;
            SemValue::Map(MapValue::from_matrix(dom, cod, rows, cols, data)?)
        }
        other => {
            return Err(SemError::BadEncoding(format!("unknown kind \"{}\"", other)))
        }
    };
    if v.sem_ty() != *expected {
        return Err(SemError::ShapeMismatch {
            expected: expected.to_string(),
            found: v.sem_ty().to_string(),
        });
    }
    v.check_finite()?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn right_shift() -> MapValue {
        MapValue::new(SemTy::VNat, SemTy::VNat, |v| match v {
            SemValue::Seq(entries) => {
                SemValue::Seq(entries.iter().map(|(i, c)| (i + 1, *c)).collect())
            }
            _ => unreachable!(),
        })
    }

    #[test]
    fn add_examples() {
        let u = add(&SemValue::Vec2(1.0, 0.0), &SemValue::Vec2(0.0, 3.0)).unwrap();
        assert!(sem_eq(&u, &SemValue::Vec2(1.0, 3.0)));

        // cancellation drops the stored entry entirely
        let s = add(
            &SemValue::seq(vec![(0, 1.0)]),
            &SemValue::seq(vec![(0, -1.0)]),
        )
        .unwrap();
        match s {
            SemValue::Seq(entries) => assert!(entries.is_empty()),
            _ => panic!(),
        }

        // apply-then-add agrees with add-then-apply for maps
        let f = SemValue::Map(right_shift());
        let g = SemValue::Map(right_shift());
        let sum = add(&f, &g).unwrap();
        let x = SemValue::one_hot(0);
        let applied = match &sum {
            SemValue::Map(m) => m.apply(&x).unwrap(),
            _ => panic!(),
        };
        assert!(sem_eq(&applied, &SemValue::seq(vec![(1, 2.0)])));
    }

    #[test]
    fn scale_examples() {
        assert!(sem_eq(
            &scale(3.0, &SemValue::Vec2(1.0, 0.0)),
            &SemValue::Vec2(3.0, 0.0)
        ));
        match scale(0.0, &SemValue::seq(vec![(5, 2.0)])) {
            SemValue::Seq(entries) => assert!(entries.is_empty()),
            _ => panic!(),
        }
        let f = scale(2.0, &SemValue::Map(right_shift()));
        let applied = match &f {
            SemValue::Map(m) => m.apply(&SemValue::one_hot(3)).unwrap(),
            _ => panic!(),
        };
        assert!(sem_eq(&applied, &SemValue::seq(vec![(4, 2.0)])));
    }

    #[test]
    fn proj_examples() {
        assert_eq!(proj(1, &SemValue::Vec2(7.0, 8.0)).unwrap(), 7.0);
        assert_eq!(proj(2, &SemValue::Vec2(0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(proj(1, &SemValue::Vec2(0.0, 0.0)).unwrap(), 0.0);
        assert!(proj(1, &SemValue::one_hot(0)).is_err());
    }

    #[test]
    fn seq_at_examples() {
        let s = SemValue::seq(vec![(2, 1.0)]);
        assert_eq!(s.seq_at(2), 1.0);
        assert_eq!(s.seq_at(0), 0.0);
        assert_eq!(SemValue::seq(vec![]).seq_at(7), 0.0);
    }

    #[test]
    fn power_apply_examples() {
        // M = [[0,2],[3,0]], M^2 [1,0]^T = [6,0]^T
        let m = MapValue::from_matrix(
            SemTy::VBool,
            SemTy::VBool,
            2,
            2,
            vec![0.0, 2.0, 3.0, 0.0],
        )
        .unwrap();
        let out = power_apply(&m, 2, &SemValue::Vec2(1.0, 0.0)).unwrap();
        assert!(sem_eq(&out, &SemValue::Vec2(6.0, 0.0)));

        let v = SemValue::Vec2(0.4, -1.25);
        assert!(sem_eq(&power_apply(&m, 0, &v).unwrap(), &v));

        let out = power_apply(&right_shift(), 3, &SemValue::one_hot(0)).unwrap();
        assert!(sem_eq(&out, &SemValue::one_hot(3)));
    }

    #[test]
    fn power_apply_composes() {
        let m = MapValue::from_matrix(
            SemTy::VBool,
            SemTy::VBool,
            2,
            2,
            vec![0.3, -0.2, 0.7, 0.1],
        )
        .unwrap();
        let v = SemValue::Vec2(1.5, -2.0);
        for (a, b) in [(0u64, 5u64), (2, 3), (4, 1)] {
            let lhs = power_apply(&m, a + b, &v).unwrap();
            let rhs = power_apply(&m, a, &power_apply(&m, b, &v).unwrap()).unwrap();
            assert!(approx_eq(&lhs, &rhs, 1e-9, 1e-12));
        }
    }

    #[test]
    fn matrix_round_trip() {
        let m = MapValue::from_matrix(SemTy::VBool, SemTy::VBool, 2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let (rows, cols, data) = map_matrix(&m, 4).unwrap();
        assert_eq!((rows, cols), (2, 2));
        assert_eq!(data, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn json_round_trip() {
        let cases = vec![
            (SemValue::Vec2(0.5, -1.0), SemTy::VBool),
            (SemValue::seq(vec![(0, 1.0), (4, -2.5)]), SemTy::VNat),
        ];
        for (v, ty) in cases {
            let j = to_json(&v, 8).unwrap();
            let back = from_json(&j, &ty).unwrap();
            assert!(sem_eq(&v, &back));
        }
    }

    #[test]
    fn json_rejects_nonfinite() {
        let j = json!({"kind": "bool", "vec": [1.0, f64::NAN]});
        // serde_json maps NaN to null, which fails as non-numeric
        assert!(from_json(&j, &SemTy::VBool).is_err());
    }

    #[test]
    fn seq_stays_normalized() {
        let s = SemValue::seq(vec![(5, 1.0), (2, 0.0), (3, 2.0), (5, -1.0)]);
        match &s {
            SemValue::Seq(entries) => {
                assert_eq!(entries, &vec![(3, 2.0)]);
            }
            _ => panic!(),
        }
    }
}

#[cfg(test)]
mod axioms {
    //! Vector-space axioms on randomly generated values.
    use super::*;
    use proptest::prelude::*;

    fn arb_vec2() -> impl Strategy<Value = SemValue> {
        (any::<i16>(), any::<i16>())
            .prop_map(|(a, b)| SemValue::Vec2(a as f64 / 64.0, b as f64 / 64.0))
    }

    fn arb_seq() -> impl Strategy<Value = SemValue> {
        proptest::collection::vec((0u64..12, any::<i16>()), 0..6).prop_map(|entries| {
            SemValue::seq(
                entries
                    .into_iter()
                    .map(|(i, c)| (i, c as f64 / 64.0))
                    .collect(),
            )
        })
    }

    fn arb_base() -> impl Strategy<Value = (SemValue, SemValue, SemValue)> {
        prop_oneof![
            (arb_vec2(), arb_vec2(), arb_vec2()),
            (arb_seq(), arb_seq(), arb_seq()),
        ]
    }

    proptest! {
        #[test]
        fn add_commutes((u, v, _w) in arb_base()) {
            let a = add(&u, &v).unwrap();
            let b = add(&v, &u).unwrap();
            prop_assert!(approx_eq(&a, &b, 0.0, 1e-12));
        }

        #[test]
        fn add_associates((u, v, w) in arb_base()) {
            let a = add(&add(&u, &v).unwrap(), &w).unwrap();
            let b = add(&u, &add(&v, &w).unwrap()).unwrap();
            prop_assert!(approx_eq(&a, &b, 0.0, 1e-12));
        }

        #[test]
        fn scale_distributes((u, v, _w) in arb_base(), a in -4.0f64..4.0) {
            let lhs = scale(a, &add(&u, &v).unwrap());
            let rhs = add(&scale(a, &u), &scale(a, &v)).unwrap();
            prop_assert!(approx_eq(&lhs, &rhs, 0.0, 1e-12));
        }
    }
}
