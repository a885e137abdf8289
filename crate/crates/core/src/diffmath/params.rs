//! Flat parameter vectors and their binary serialization.
//!
//! Networks flatten to a single `f64` vector in a documented fixed order
//! (see [`super::net`]); optimizers and trust-region algebra work on that
//! flat form. The on-disk encoding is a `u64` little-endian element count
//! followed by the elements as little-endian `f64`, which keeps checkpoints
//! byte-stable across platforms.

use crate::error::{CoreError, CoreResult};
use std::io::{Read, Write};

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(n: usize) -> Self {
        ParameterVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&(self.0.len() as u64).to_le_bytes())?;
        for v in &self.0 {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> CoreResult<Self> {
        let mut count = [0u8; 8];
        r.read_exact(&mut count)
            .map_err(|e| CoreError::contract(format!("parameter vector header: {e}")))?;
        let n = u64::from_le_bytes(count) as usize;
        let mut out = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for i in 0..n {
            r.read_exact(&mut buf).map_err(|e| {
                CoreError::contract(format!("parameter vector truncated at element {i}: {e}"))
            })?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(ParameterVector(out))
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        ParameterVector(v)
    }
}
