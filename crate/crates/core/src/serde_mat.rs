//! JSON layout for matrices and vectors: `{ "rows", "cols", "data" }` with
//! `data` in row-major order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct Repr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    Repr {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.transpose().iter().copied().collect(),
    }
    .serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let r = Repr::deserialize(d)?;
    if r.data.len() != r.rows * r.cols {
        return Err(serde::de::Error::custom(format!(
            "matrix data has {} entries, expected {}×{}",
            r.data.len(),
            r.rows,
            r.cols
        )));
    }
    Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
}

pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
