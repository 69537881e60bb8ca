//! Phase retrieval problem instances: generation, validation, serialization.
//!
//! An instance is a set of unit-norm sampling rows `a_i` together with the
//! observed magnitudes `b_i = |<a_i, x>|`. Synthetic instances keep the hidden
//! signal attached so experiments can measure true error; real instances omit
//! it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, UnitVector};
use crate::rng::Rng;

/// Ground-truth signal with its cached norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    x: Vec<f64>,
    norm: f64,
}

impl Signal {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidDimension("signal needs n >= 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let norm = geometry::norm(&x);
        if norm == 0.0 {
            return Err(Error::InvalidSignal);
        }
        Ok(Self { x, norm })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Magnitude this signal would produce against a unit row.
    pub fn magnitude(&self, row: &UnitVector) -> f64 {
        row.dot(&self.x).abs()
    }
}

/// Tag recording which generator produced an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorTag {
    UniformSphere,
    GaussianNormalized,
    External,
}

impl std::fmt::Display for GeneratorTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneratorTag::UniformSphere => write!(f, "uniform-sphere"),
            GeneratorTag::GaussianNormalized => write!(f, "gaussian-normalized"),
            GeneratorTag::External => write!(f, "external"),
        }
    }
}

/// Instance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub n: usize,
    pub m: usize,
    pub generator: GeneratorTag,
    pub seed: u64,
}

/// A phase retrieval problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    rows: Vec<UnitVector>,
    magnitudes: Vec<f64>,
    meta: InstanceMeta,
    signal: Option<Signal>,
}

impl MeasurementSet {
    /// Assembles an instance from parts, validating the invariants.
    pub fn from_parts(
        rows: Vec<UnitVector>,
        magnitudes: Vec<f64>,
        meta: InstanceMeta,
        signal: Option<Signal>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if rows.len() != magnitudes.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: magnitudes.len() });
        }
        let n = rows[0].dim();
        for r in &rows {
            if r.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.dim() });
            }
            if (geometry::norm(r.coords()) - 1.0).abs() > 1e-12 {
                return Err(Error::DegenerateRow);
            }
        }
        if magnitudes.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if let Some(sig) = &signal {
            if sig.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: sig.dim() });
            }
            for (r, &b) in rows.iter().zip(&magnitudes) {
                if (sig.magnitude(r) - b).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "magnitudes are inconsistent with the attached signal".into(),
                    ));
                }
            }
        }
        Ok(Self { rows, magnitudes, meta, signal })
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[UnitVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &UnitVector {
        &self.rows[i]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn signal(&self) -> Option<&Signal> {
        self.signal.as_ref()
    }

    /// Per-row residual `|<a_i, z>| - b_i`.
    pub fn residual_vector(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: z.len() });
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.magnitudes)
            .map(|(a, &b)| a.dot(z).abs() - b)
            .collect())
    }

    /// Amplitude flow loss `sum_i (|<a_i, z>| - b_i)^2`.
    pub fn loss(&self, z: &[f64]) -> Result<f64> {
        Ok(self.residual_vector(z)?.iter().map(|r| r * r).sum())
    }
}

/// Instance with rows i.i.d. uniform on the sphere and exact magnitudes.
pub fn generate_uniform_instance(
    n: usize,
    m: usize,
    signal: &Signal,
    rng: &mut Rng,
) -> Result<MeasurementSet> {
    generate(n, m, signal, rng, GeneratorTag::UniformSphere)
}

/// Instance with Gaussian rows normalized to unit length, magnitudes
/// recomputed after normalization.
pub fn generate_gaussian_rows(
    n: usize,
    m: usize,
    signal: &Signal,
    rng: &mut Rng,
) -> Result<MeasurementSet> {
    generate(n, m, signal, rng, GeneratorTag::GaussianNormalized)
}

fn generate(
    n: usize,
    m: usize,
    signal: &Signal,
    rng: &mut Rng,
    tag: GeneratorTag,
) -> Result<MeasurementSet> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be >= 1".into()));
    }
    if m == 0 {
        return Err(Error::InvalidDimension("m must be >= 1".into()));
    }
    if signal.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: signal.dim() });
    }
    let seed = rng.seed();
    let mut rows = Vec::with_capacity(m);
    let mut magnitudes = Vec::with_capacity(m);
    for _ in 0..m {
        // Both generators draw a Gaussian vector and store it normalized; the
        // tags are kept distinct because the file format records provenance.
        let row = geometry::sample_uniform_sphere(n, rng)?;
        magnitudes.push(signal.magnitude(&row));
        rows.push(row);
    }
    MeasurementSet::from_parts(
        rows,
        magnitudes,
        InstanceMeta { n, m, generator: tag, seed },
        Some(signal.clone()),
    )
}

/// On-disk schema for an instance. JSON, round-trip exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub generator: GeneratorTag,
    pub seed: u64,
    pub rows: Vec<Vec<f64>>,
    pub magnitudes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<Vec<f64>>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl InstanceFile {
    pub fn from_measurement_set(ms: &MeasurementSet) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: ms.n(),
            m: ms.m(),
            generator: ms.meta().generator,
            seed: ms.meta().seed,
            rows: ms.rows().iter().map(|r| r.coords().to_vec()).collect(),
            magnitudes: ms.magnitudes().to_vec(),
            signal: ms.signal().map(|s| s.x().to_vec()),
        }
    }

    pub fn into_measurement_set(self) -> Result<MeasurementSet> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let rows = self
            .rows
            .into_iter()
            .map(UnitVector::from_unit_coords)
            .collect::<Result<Vec<_>>>()?;
        let signal = self.signal.map(Signal::new).transpose()?;
        MeasurementSet::from_parts(
            rows,
            self.magnitudes,
            InstanceMeta { n: self.n, m: self.m, generator: self.generator, seed: self.seed },
            signal,
        )
    }

    pub fn to_json(&self) -> String {
        // serde_json renders floats in shortest round-trip form, so
        // parse(serialize(x)) is the identity bit for bit.
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
