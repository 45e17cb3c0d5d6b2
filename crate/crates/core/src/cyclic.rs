//! Dense real-valued functions on Z_N.
//!
//! Serialisations:
//! * CSV with header `index,value`, one row per residue.
//! * Binary: N as 8-byte little-endian unsigned, then N little-endian f64.

use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CyclicFunction {
    modulus: usize,
    values: Vec<f64>,
}

impl CyclicFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid!("a function on Z_N needs N >= 1"));
        }
        Ok(Self {
            modulus: values.len(),
            values,
        })
    }

    pub fn constant(modulus: usize, c: f64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Self {
            modulus,
            values: vec![c; modulus],
        }
    }

    pub fn from_fn(modulus: usize, f: impl FnMut(usize) -> f64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Self {
            modulus,
            values: (0..modulus).map(f).collect(),
        }
    }

    /// Indicator of a subset of Z_N.
    pub fn indicator(modulus: usize, set: &[usize]) -> Self {
        let mut v = vec![0.0; modulus];
        for &a in set {
            v[a % modulus] = 1.0;
        }
        Self { modulus, values: v }
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `x mod N` for any signed `x`.
    #[inline]
    pub fn at(&self, x: i64) -> f64 {
        self.values[x.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.modulus as f64
    }

    pub fn l1_mean(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.modulus as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            modulus: self.modulus,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn same_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(invalid!("moduli differ: {} vs {}", self.modulus, other.modulus));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self {
            modulus: self.modulus,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// x ↦ f(x + shift).
    pub fn translate(&self, shift: i64) -> Self {
        Self::from_fn(self.modulus, |x| self.at(x as i64 + shift))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v:?}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "index,value" => {}
            _ => return Err(Error::Format("expected header `index,value`".into())),
        }
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (i, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("row {row}: expected two fields")))?;
            let i: usize = i.trim().parse().map_err(|_| Error::Format(format!("row {row}: bad index")))?;
            if i != values.len() {
                return Err(Error::Format(format!("row {row}: index {i} out of order")));
            }
            let v: f64 = v.trim().parse().map_err(|_| Error::Format(format!("row {row}: bad value")))?;
            values.push(v);
        }
        Self::new(values).map_err(|_| Error::Format("empty function".into()))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.modulus as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        if n == 0 || n > (1usize << 34) {
            return Err(Error::Format(format!("implausible modulus {n}")));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::new(values)
    }
}
