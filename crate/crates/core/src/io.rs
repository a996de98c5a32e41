//! JSON formats: recovery instances, factor files and solution bundles.
//!
//! Matrices are always nested arrays of rows. Parse errors name the
//! offending field path together with the line and column.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_rows, to_rows, DenseMatrix, Vector};
use crate::lmi::{DualCertificate, LmiStatus, SdpSolution};
use crate::objective::{MeasurementOperator, RecoveryInstance, Scale};

/// Deserializes `text`, reporting the field path and position on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let field = if path == "." || path == "?" { String::new() } else { format!("field `{path}`: ") };
        Error::Parse(format!("{field}{inner}"))
    })?;
    de.end().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(value)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    r: usize,
    scale: Scale,
    #[serde(rename = "Z")]
    z: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
}

pub fn parse_instance(text: &str) -> Result<RecoveryInstance> {
    let file: InstanceFile = parse_json(text)?;
    let z = from_rows(&file.z).map_err(|e| Error::Parse(format!("field `Z`: {e}")))?;
    if z.shape() != (file.n, file.r) {
        return Err(Error::Parse(format!("field `Z`: expected {}x{}, got {}x{}", file.n, file.r, z.nrows(), z.ncols())));
    }
    if file.a.is_empty() {
        return Err(Error::Parse("field `A`: at least one measurement matrix is required".into()));
    }
    let mut mats = Vec::with_capacity(file.a.len());
    for (k, rows) in file.a.iter().enumerate() {
        let m = from_rows(rows).map_err(|e| Error::Parse(format!("field `A[{k}]`: {e}")))?;
        if m.shape() != (file.n, file.n) {
            return Err(Error::Parse(format!("field `A[{k}]`: expected {0}x{0}, got {1}x{2}", file.n, m.nrows(), m.ncols())));
        }
        mats.push(m);
    }
    RecoveryInstance::new(MeasurementOperator::from_matrices(mats)?, z, file.scale)
}

pub fn instance_to_json(inst: &RecoveryInstance) -> String {
    let file = InstanceFile { n: inst.n(), r: inst.r(), scale: inst.scale, z: to_rows(&inst.z), a: inst.operator.matrices().iter().map(to_rows).collect() };
    serde_json::to_string_pretty(&file).expect("finite data serializes")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FactorFile {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

/// A factor `X` or `Z`: a flat array is a single column, nested arrays are
/// rows.
pub fn parse_factor(text: &str) -> Result<DenseMatrix> {
    let file: FactorFile = parse_json(text).map_err(|_| Error::Parse("factor must be a flat array of numbers or an array of equal-length rows".into()))?;
    let m = match file {
        FactorFile::Flat(v) => {
            let m = DenseMatrix::from_column_slice(v.len(), 1, &v);
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse("non-finite factor entry".into()));
            }
            m
        }
        FactorFile::Rows(rows) => from_rows(&rows).map_err(|e| Error::Parse(e.to_string()))?,
    };
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Parse("factor is empty".into()));
    }
    Ok(m)
}

pub fn factor_to_json(m: &DenseMatrix) -> String {
    serde_json::to_string(&to_rows(m)).expect("finite data serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualFile {
    y: Vec<f64>,
    #[serde(rename = "U1")]
    u1: Vec<Vec<f64>>,
    #[serde(rename = "U2")]
    u2: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    delta: f64,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    dual: DualFile,
    gap: f64,
    status: String,
}

/// The serialized part of an [`SdpSolution`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub delta: f64,
    pub h: DenseMatrix,
    pub dual: DualCertificate,
    pub gap: f64,
    pub status: LmiStatus,
}

impl From<&SdpSolution> for SolutionBundle {
    fn from(sol: &SdpSolution) -> Self {
        Self { delta: sol.delta, h: sol.h.clone(), dual: sol.dual.clone(), gap: sol.gap, status: sol.status }
    }
}

pub fn bundle_to_json(b: &SolutionBundle) -> String {
    let file = BundleFile {
        delta: b.delta,
        h: to_rows(&b.h),
        dual: DualFile { y: b.dual.y.iter().copied().collect(), u1: to_rows(&b.dual.u1), u2: to_rows(&b.dual.u2), v: to_rows(&b.dual.v) },
        gap: b.gap,
        status: b.status.as_str().to_string(),
    };
    serde_json::to_string_pretty(&file).expect("finite data serializes")
}

pub fn parse_bundle(text: &str) -> Result<SolutionBundle> {
    let file: BundleFile = parse_json(text)?;
    let status = LmiStatus::parse(&file.status).ok_or_else(|| Error::Parse(format!("field `status`: unknown status `{}`", file.status)))?;
    let square = |name: &str, rows: &[Vec<f64>]| -> Result<DenseMatrix> {
        let m = from_rows(rows).map_err(|e| Error::Parse(format!("field `{name}`: {e}")))?;
        if m.nrows() != m.ncols() {
            return Err(Error::Parse(format!("field `{name}`: matrix must be square")));
        }
        Ok(m)
    };
    let h = square("H", &file.h)?;
    let u1 = square("dual.U1", &file.dual.u1)?;
    let u2 = square("dual.U2", &file.dual.u2)?;
    let v = square("dual.V", &file.dual.v)?;
    if u1.shape() != u2.shape() {
        return Err(Error::Parse("field `dual.U2`: shape differs from `dual.U1`".into()));
    }
    if !file.delta.is_finite() || !file.gap.is_finite() || file.dual.y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite scalar".into()));
    }
    Ok(SolutionBundle { delta: file.delta, h, dual: DualCertificate { y: Vector::from_vec(file.dual.y), u1, u2, v }, gap: file.gap, status })
}
