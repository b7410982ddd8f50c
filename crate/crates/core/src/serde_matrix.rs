//! Serde adapter storing a dense matrix as `{rows, cols, data}` with `data`
//! in row-major order.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    Dense {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.transpose().as_slice().to_vec(),
    }
    .serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let dense = Dense::deserialize(d)?;
    if dense.rows * dense.cols != dense.data.len() {
        return Err(serde::de::Error::custom(format!(
            "{}x{} matrix needs {} entries, got {}",
            dense.rows,
            dense.cols,
            dense.rows * dense.cols,
            dense.data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(dense.rows, dense.cols, &dense.data))
}

/// The same encoding for a list of matrices.
pub mod vec {
    use super::*;

    struct Ref<'a>(&'a DMatrix<f64>);

    impl Serialize for Ref<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, s)
        }
    }

    #[derive(Deserialize)]
    struct Owned(#[serde(with = "super")] DMatrix<f64>);

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ms.iter().map(Ref))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        Ok(Vec::<Owned>::deserialize(d)?.into_iter().map(|o| o.0).collect())
    }
}
