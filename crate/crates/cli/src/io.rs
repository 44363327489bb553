//! JSON matrix and map files.
//!
//! Numbers are written with 17 significant digits, so a file that is loaded
//! and written again comes back byte for byte.

use std::sync::Arc;

use decomap::maps::LinearMap;
use decomap::opsys::OperatorSystem;
use decomap::{ComplexMatrix, DecomapError, Result, C64};
use serde_json::{json, Map, Number, Value};

/// Orthonormality slack accepted for a basis read from a file.
pub const BASIS_TOL: f64 = 1e-10;

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_string_unchecked(format!("{x:.16e}")))
    } else {
        Value::Null
    }
}

pub fn to_f64(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .or_else(|| n.as_str().parse().ok())
            .ok_or_else(|| parse_err(format!("number {n} is not representable"))),
        other => Err(parse_err(format!("expected a number, found {other}"))),
    }
}

pub fn to_usize(v: &Value) -> Result<usize> {
    let x = to_f64(v)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(parse_err(format!("expected a non-negative integer, found {v}")))
    }
}

pub fn parse_err(msg: impl Into<String>) -> DecomapError {
    DecomapError::Parse(msg.into())
}

pub fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("missing field {key:?}")))
}

pub fn entries_json(m: &ComplexMatrix) -> Value {
    let n = m.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| json!([num(m[(i, j)].re), num(m[(i, j)].im)])).collect()))
            .collect(),
    )
}

pub fn entries_from_json(v: &Value, dim: usize) -> Result<ComplexMatrix> {
    let rows = v.as_array().ok_or_else(|| parse_err("entries must be an array of rows"))?;
    if rows.len() != dim {
        return Err(parse_err(format!("{} rows for dim {dim}", rows.len())));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| parse_err(format!("row {i} is not an array")))?;
        if row.len() != dim {
            return Err(parse_err(format!("row {i} has {} entries for dim {dim}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            let pair = z
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| parse_err(format!("entry ({i}, {j}) is not a [re, im] pair")))?;
            data.push(C64::new(to_f64(&pair[0])?, to_f64(&pair[1])?));
        }
    }
    ComplexMatrix::from_vec(dim, data)
}

#[derive(Clone, Debug)]
pub struct MatrixFile {
    pub matrix: ComplexMatrix,
    pub outer_dim: Option<usize>,
    pub inner_dim: Option<usize>,
    pub name: Option<String>,
}

impl MatrixFile {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("dim".into(), json!(self.matrix.dim()));
        obj.insert("entries".into(), entries_json(&self.matrix));
        if let Some(o) = self.outer_dim {
            obj.insert("outer_dim".into(), json!(o));
        }
        if let Some(i) = self.inner_dim {
            obj.insert("inner_dim".into(), json!(i));
        }
        if let Some(name) = &self.name {
            obj.insert("name".into(), json!(name));
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        if !v.is_object() {
            return Err(parse_err("matrix file must be a JSON object"));
        }
        let dim = to_usize(field(v, "dim")?)?;
        if dim == 0 {
            return Err(parse_err("dim must be positive"));
        }
        let matrix = entries_from_json(field(v, "entries")?, dim)?;
        let opt = |k: &str| v.get(k).map(to_usize).transpose();
        let outer_dim = opt("outer_dim")?;
        let inner_dim = opt("inner_dim")?;
        let name = v.get("name").and_then(Value::as_str).map(str::to_string);
        if let (Some(o), Some(i)) = (outer_dim, inner_dim) {
            if o * i != dim {
                return Err(parse_err(format!("outer_dim {o} x inner_dim {i} != dim {dim}")));
            }
        }
        Ok(MatrixFile { matrix, outer_dim, inner_dim, name })
    }
}

/// Full domains list `φ(E_ij)` row-major under `"images"`; proper subsystems
/// list the images of the orthonormal basis stored under `"domain"`.
pub fn map_to_json(map: &LinearMap, name: Option<&str>) -> Value {
    let mut obj = Map::new();
    let d = map.domain_dim();
    obj.insert("codomain_dim".into(), json!(map.codomain_dim()));
    let images: Vec<ComplexMatrix> = if map.is_full_domain() {
        obj.insert("domain".into(), json!("full"));
        obj.insert("domain_dim".into(), json!(d));
        map.unit_images()
    } else {
        obj.insert(
            "domain".into(),
            json!({
                "ambient_dim": d,
                "basis": map.domain().basis().iter().map(entries_json).collect::<Vec<_>>(),
            }),
        );
        map.action().to_vec()
    };
    obj.insert("images".into(), Value::Array(images.iter().map(entries_json).collect()));
    if let Some(name) = name {
        obj.insert("name".into(), json!(name));
    }
    Value::Object(obj)
}

pub fn is_map_json(v: &Value) -> bool {
    v.get("images").is_some()
}

pub fn map_from_json(v: &Value) -> Result<LinearMap> {
    let n = to_usize(field(v, "codomain_dim")?)?;
    if n == 0 {
        return Err(parse_err("codomain_dim must be positive"));
    }
    let images = field(v, "images")?.as_array().ok_or_else(|| parse_err("images must be an array"))?;
    let domain = field(v, "domain")?;
    if domain.as_str() == Some("full") {
        let d = to_usize(field(v, "domain_dim")?)?;
        if d == 0 {
            return Err(parse_err("domain_dim must be positive"));
        }
        let images = images.iter().map(|m| entries_from_json(m, n)).collect::<Result<Vec<_>>>()?;
        return LinearMap::from_unit_images(d, n, &images);
    }
    if !domain.is_object() {
        return Err(parse_err("domain must be \"full\" or an object"));
    }
    let d = to_usize(field(domain, "ambient_dim")?)?;
    if d == 0 {
        return Err(parse_err("ambient_dim must be positive"));
    }
    let read_list = |key: &str| -> Result<Option<Vec<ComplexMatrix>>> {
        domain
            .get(key)
            .map(|list| {
                list.as_array()
                    .ok_or_else(|| parse_err(format!("{key} must be an array")))?
                    .iter()
                    .map(|m| entries_from_json(m, d))
                    .collect()
            })
            .transpose()
    };
    let system = match (read_list("basis")?, read_list("generators")?) {
        (Some(basis), _) => OperatorSystem::from_basis(basis, d, BASIS_TOL)?,
        (None, Some(generators)) => OperatorSystem::new(&generators, d)?,
        (None, None) => return Err(parse_err("domain needs \"basis\" or \"generators\"")),
    };
    let images = images.iter().map(|m| entries_from_json(m, n)).collect::<Result<Vec<_>>>()?;
    LinearMap::from_raw_images(Arc::new(system), n, images)
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn parse_text(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))
}
