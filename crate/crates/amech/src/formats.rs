//! JSON descriptions of constant charts and of principal bundle data.

use amech_core::atiyah::{PrincipalData, WongData};
use amech_core::linalg::{Matrix, Tensor3};
use amech_core::models::{magnetic_connection, smooth_so3_connection};
use amech_core::TensorField;
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

/// A chart with constant anchor and structure constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub m: usize,
    pub n: usize,
    /// `rho[i][alpha]`, `m` rows of length `n`.
    pub rho: Vec<Vec<f64>>,
    /// `C[gamma][alpha][beta]`.
    #[serde(rename = "C")]
    pub c: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub lagrangian: Option<QuadraticSpec>,
}

/// `L = ½ yᵀ K y - ½ k |x|²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub kinetic: Vec<Vec<f64>>,
    #[serde(default)]
    pub stiffness: f64,
}

pub fn matrix(rows: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<Matrix> {
    ensure!(
        rows.len() == r,
        "{what}: expected {r} rows, found {}",
        rows.len()
    );
    for (k, row) in rows.iter().enumerate() {
        ensure!(
            row.len() == c,
            "{what}: row {k} has {} entries, expected {c}",
            row.len()
        );
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    ensure!(
        data.iter().all(|v| v.is_finite()),
        "{what}: entries must be finite"
    );
    Ok(Matrix::from_row_major(r, c, data))
}

pub fn tensor(slabs: &[Vec<Vec<f64>>], n: usize, what: &str) -> Result<Tensor3> {
    ensure!(
        slabs.len() == n,
        "{what}: expected {n} slabs, found {}",
        slabs.len()
    );
    let mut data = Vec::with_capacity(n * n * n);
    for (k, slab) in slabs.iter().enumerate() {
        data.extend(matrix(slab, n, n, &format!("{what}[{k}]"))?.into_vec());
    }
    Ok(Tensor3::from_vec([n, n, n], data))
}

impl ChartSpec {
    pub fn anchor(&self) -> Result<Matrix> {
        matrix(&self.rho, self.m, self.n, "rho")
    }

    pub fn structure(&self) -> Result<Tensor3> {
        tensor(&self.c, self.n, "C")
    }
}

/// Named connection fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Zero,
    /// `A[a][i]`, constant.
    Constant {
        value: Vec<Vec<f64>>,
    },
    /// `A = (0, B₀ x¹)` on the plane with a one-dimensional group.
    Magnetic {
        field: f64,
    },
    /// A fixed smooth `so(3)`-valued connection on the plane.
    SmoothSo3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WongSpec {
    pub kappa: Vec<Vec<f64>>,
    /// Only the Euclidean base metric is available from a file.
    #[serde(default = "euclidean")]
    pub metric: String,
}

fn euclidean() -> String {
    "euclidean".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrincipalSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub m: usize,
    /// `c[c][a][b]`.
    pub c: Vec<Vec<Vec<f64>>>,
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub wong: Option<WongSpec>,
}

impl PrincipalSpec {
    pub fn build(&self) -> Result<(PrincipalData, WongData)> {
        let n_g = self.c.len();
        ensure!(n_g > 0, "c: the Lie algebra must have positive dimension");
        let c = tensor(&self.c, n_g, "c")?;
        let m = self.m;
        let connection = match &self.connection {
            ConnectionSpec::Zero => TensorField::constant(m, &[n_g, m], vec![0.0; n_g * m]),
            ConnectionSpec::Constant { value } => TensorField::constant(
                m,
                &[n_g, m],
                matrix(value, n_g, m, "connection")?.into_vec(),
            ),
            ConnectionSpec::Magnetic { field } => {
                ensure!(
                    m == 2 && n_g == 1,
                    "the magnetic connection needs m = 2 and a one-dimensional group"
                );
                magnetic_connection(*field)
            }
            ConnectionSpec::SmoothSo3 => {
                ensure!(
                    m == 2 && n_g == 3,
                    "the smooth-so3 connection needs m = 2 and n_g = 3"
                );
                smooth_so3_connection()
            }
        };
        let pd = PrincipalData::new(m, c, connection).context("invalid principal data")?;
        let (kappa, metric) = match &self.wong {
            Some(w) => (matrix(&w.kappa, n_g, n_g, "kappa")?, w.metric.as_str()),
            None => (Matrix::identity(n_g), "euclidean"),
        };
        if metric != "euclidean" {
            bail!("unknown base metric `{metric}`");
        }
        let g = TensorField::constant(m, &[m, m], Matrix::identity(m).into_vec());
        let wd = WongData::new(kappa, g).context("invalid Wong data")?;
        Ok((pd, wd))
    }
}

/// Either kind of model file, told apart by its keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Principal(PrincipalSpec),
    Chart(ChartSpec),
}

pub fn parse_model_file(text: &str) -> Result<ModelFile> {
    serde_json::from_str(text)
        .context("model file is neither a chart nor a principal bundle description")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_round_trip() {
        let text = r#"{"m": 1, "n": 2, "rho": [[1.0, 0.0]], "C": [[[0,0],[0,0]], [[0,1],[-1,0]]]}"#;
        let ModelFile::Chart(spec) = parse_model_file(text).unwrap() else {
            panic!("expected a chart")
        };
        assert_eq!(spec.structure().unwrap()[(1, 0, 1)], 1.0);
        assert_eq!(spec.anchor().unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn bad_shapes_are_reported() {
        let text = r#"{"m": 1, "n": 2, "rho": [[1.0]], "C": [[[0,0],[0,0]], [[0,1],[-1,0]]]}"#;
        let ModelFile::Chart(spec) = parse_model_file(text).unwrap() else {
            panic!("expected a chart")
        };
        assert!(spec.anchor().is_err());
        assert!(parse_model_file("{\"m\": 1}").is_err());
    }

    #[test]
    fn principal_file() {
        let text = r#"{"m": 2, "c": [[[0]]], "connection": {"kind": "magnetic", "field": 2.0}, "wong": {"kappa": [[1.0]]}}"#;
        let ModelFile::Principal(spec) = parse_model_file(text).unwrap() else {
            panic!("expected principal data")
        };
        let (pd, _) = spec.build().unwrap();
        assert_eq!(pd.rank(), 3);
    }
}
