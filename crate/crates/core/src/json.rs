//! Serde adapters: complex numbers as `[re, im]`, matrices as row-major
//! nested arrays, vectors as flat arrays.

use crate::linalg::{CMatrix, CVector, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<C64>]) -> Result<CMatrix, String> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err("ragged matrix rows".into());
    }
    let flat: Vec<C64> = rows.iter().flatten().copied().collect();
    Ok(CMatrix::from_row_slice(n, cols, &flat))
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        rows_to_matrix(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<C64>>>::deserialize(d)?;
        all.iter().map(|rows| rows_to_matrix(rows).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod vectors {
    use super::*;

    pub fn serialize<S: Serializer>(vs: &[CVector], s: S) -> Result<S::Ok, S::Error> {
        vs.iter().map(|v| v.iter().copied().collect::<Vec<C64>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
        let all = Vec::<Vec<C64>>::deserialize(d)?;
        Ok(all.into_iter().map(CVector::from_vec).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_rows};

    #[derive(Serialize, Deserialize)]
    struct Wrap {
        #[serde(with = "matrix")]
        m: CMatrix,
    }

    #[test]
    fn matrix_round_trip_row_major() {
        let m = from_rows(2, &[c(1.0, 0.0), c(2.0, -1.0), c(3.0, 0.5), c(4.0, 0.0)]);
        let text = serde_json::to_string(&Wrap { m: m.clone() }).unwrap();
        assert_eq!(text, r#"{"m":[[[1.0,0.0],[2.0,-1.0]],[[3.0,0.5],[4.0,0.0]]]}"#);
        let back: Wrap = serde_json::from_str(&text).unwrap();
        assert_eq!(back.m, m);
    }
}
