use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{alphabet_or_size, compose_markov, information_density, Alphabet, JointPmf, Kernel};

/// Value written in place of `+inf` in serialized tables.
pub const INFINITE_SENTINEL: f64 = 1e300;

/// Distortion table `d(x, z)`. Cells flagged infinite behave as `+inf` in every
/// computation; their stored value is [`INFINITE_SENTINEL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistortionRepr", into = "DistortionRepr")]
pub struct DistortionMeasure {
    x_alphabet: Alphabet,
    z_alphabet: Alphabet,
    values: Vec<f64>,
    infinite: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct DistortionRepr {
    #[serde(default)]
    x_alphabet: Option<Alphabet>,
    #[serde(default)]
    z_alphabet: Option<Alphabet>,
    values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    infinite: Option<Vec<Vec<bool>>>,
}

impl TryFrom<DistortionRepr> for DistortionMeasure {
    type Error = Error;
    fn try_from(r: DistortionRepr) -> Result<Self> {
        let xa = alphabet_or_size(r.x_alphabet, r.values.len())?;
        let za = alphabet_or_size(r.z_alphabet, r.values.first().map_or(0, Vec::len))?;
        let (nx, nz) = (xa.size(), za.size());
        if r.values.len() != nx || r.values.iter().any(|row| row.len() != nz) {
            return Err(Error::InvalidParameter(
                "distortion matrix shape does not match alphabets".into(),
            ));
        }
        let infinite = match r.infinite {
            Some(m) => {
                if m.len() != nx || m.iter().any(|row| row.len() != nz) {
                    return Err(Error::InvalidParameter(
                        "distortion mask shape does not match alphabets".into(),
                    ));
                }
                m.concat()
            }
            None => vec![false; nx * nz],
        };
        DistortionMeasure::with_mask(xa, za, r.values.concat(), infinite)
    }
}

impl From<DistortionMeasure> for DistortionRepr {
    fn from(d: DistortionMeasure) -> Self {
        let nz = d.z_alphabet.size();
        let any_inf = d.infinite.iter().any(|&b| b);
        DistortionRepr {
            values: d.values.chunks(nz).map(<[f64]>::to_vec).collect(),
            infinite: any_inf.then(|| d.infinite.chunks(nz).map(<[bool]>::to_vec).collect()),
            x_alphabet: Some(d.x_alphabet),
            z_alphabet: Some(d.z_alphabet),
        }
    }
}

impl DistortionMeasure {
    pub fn new(x_alphabet: Alphabet, z_alphabet: Alphabet, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::with_mask(x_alphabet, z_alphabet, values, vec![false; n])
    }

    pub fn with_mask(
        x_alphabet: Alphabet,
        z_alphabet: Alphabet,
        mut values: Vec<f64>,
        infinite: Vec<bool>,
    ) -> Result<Self> {
        let n = x_alphabet.size() * z_alphabet.size();
        if values.len() != n || infinite.len() != n {
            return Err(Error::InvalidParameter(format!(
                "distortion table needs {n} entries"
            )));
        }
        for (v, &inf) in values.iter_mut().zip(&infinite) {
            if inf {
                *v = INFINITE_SENTINEL;
            } else if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "distortion entry {v} is not finite and not masked"
                )));
            }
        }
        Ok(DistortionMeasure {
            x_alphabet,
            z_alphabet,
            values,
            infinite,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        let nz = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nz) {
            return Err(Error::InvalidParameter("ragged distortion matrix".into()));
        }
        Self::new(Alphabet::new(nx)?, Alphabet::new(nz)?, rows.concat())
    }

    /// `d(x, z) = 1{x != z}` on a square alphabet.
    pub fn hamming(size: usize) -> Result<Self> {
        let values = (0..size * size)
            .map(|i| f64::from(u8::from(i / size != i % size)))
            .collect();
        Self::new(Alphabet::new(size)?, Alphabet::new(size)?, values)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn z_alphabet(&self) -> &Alphabet {
        &self.z_alphabet
    }

    pub fn x_size(&self) -> usize {
        self.x_alphabet.size()
    }

    pub fn z_size(&self) -> usize {
        self.z_alphabet.size()
    }

    /// `+inf` on masked cells.
    #[inline]
    pub fn get(&self, x: usize, z: usize) -> f64 {
        let i = x * self.z_size() + z;
        if self.infinite[i] {
            f64::INFINITY
        } else {
            self.values[i]
        }
    }

    pub fn is_infinite(&self, x: usize, z: usize) -> bool {
        self.infinite[x * self.z_size() + z]
    }

    /// Stored values (sentinel on masked cells).
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn infinite_mask(&self) -> &[bool] {
        &self.infinite
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.infinite)
            .filter(|(_, &m)| !m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Surrogate distortion `d̄(y, z) = E[d(X, z) | Y = y]` over `(Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDistortion {
    pub measure: DistortionMeasure,
    /// Observation symbols with `P_Y(y) = 0`; their rows are zero and unused.
    pub unused_rows: Vec<usize>,
}

pub fn surrogate_distortion(p_xy: &JointPmf, d: &DistortionMeasure) -> Result<SurrogateDistortion> {
    if !p_xy.row_alphabet().compatible(d.x_alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "distortion has |X| = {} but the joint has {}",
            d.x_size(),
            p_xy.n_rows()
        )));
    }
    let (p_x_given_y, unused) = p_xy.row_given_col();
    let (ny, nz) = (p_xy.n_cols(), d.z_size());
    let mut values = vec![0.0; ny * nz];
    let mut infinite = vec![false; ny * nz];
    for y in 0..ny {
        if unused.contains(&y) {
            continue;
        }
        for z in 0..nz {
            let mut acc = 0.0;
            for (x, &pxy) in p_x_given_y.row(y).iter().enumerate() {
                if pxy > 0.0 {
                    if d.is_infinite(x, z) {
                        infinite[y * nz + z] = true;
                        break;
                    }
                    acc += pxy * d.get(x, z);
                }
            }
            values[y * nz + z] = acc;
        }
    }
    Ok(SurrogateDistortion {
        measure: DistortionMeasure::with_mask(
            p_xy.col_alphabet().clone(),
            d.z_alphabet().clone(),
            values,
            infinite,
        )?,
        unused_rows: unused,
    })
}

/// `d(x, u) = -ι_{X;U}(x; u)` for `U` produced from `Y` by `k`; infinite where
/// `P_{X,U}(x, u) = 0`.
pub fn neg_info_density_distortion(p_xy: &JointPmf, k: &Kernel) -> Result<DistortionMeasure> {
    let (xu, _) = compose_markov(p_xy, k)?;
    let t = information_density(&xu);
    let values: Vec<f64> = t
        .values()
        .iter()
        .zip(t.defined_mask())
        .map(|(v, &ok)| if ok { -v } else { 0.0 })
        .collect();
    let infinite = t.defined_mask().iter().map(|ok| !ok).collect();
    DistortionMeasure::with_mask(
        xu.row_alphabet().clone(),
        xu.col_alphabet().clone(),
        values,
        infinite,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Pmf;

    fn dsbs(p: f64) -> JointPmf {
        JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(p).unwrap())
            .unwrap()
    }

    #[test]
    fn surrogate_examples() {
        let d = DistortionMeasure::from_rows(vec![vec![0.0, 2.0, 1.0], vec![3.0, 0.5, 1.0]]).unwrap();
        let copy = JointPmf::from_rows(vec![vec![0.4, 0.0], vec![0.0, 0.6]]).unwrap();
        assert_eq!(surrogate_distortion(&copy, &d).unwrap().measure.raw_values(), d.raw_values());

        let ind = JointPmf::product(&Pmf::bernoulli(0.25).unwrap(), &Pmf::uniform(2).unwrap()).unwrap();
        let s = surrogate_distortion(&ind, &d).unwrap().measure;
        for z in 0..3 {
            let expect = 0.75 * d.get(0, z) + 0.25 * d.get(1, z);
            assert!((s.get(0, z) - expect).abs() < 1e-15);
            assert!((s.get(1, z) - expect).abs() < 1e-15);
        }

        let s = surrogate_distortion(&dsbs(0.1), &DistortionMeasure::hamming(2).unwrap())
            .unwrap()
            .measure;
        assert!((s.get(0, 0) - 0.1).abs() < 1e-15);
        assert!((s.get(0, 1) - 0.9).abs() < 1e-15);
        assert!((s.get(1, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn surrogate_flags_unused_rows() {
        let j = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        let s = surrogate_distortion(&j, &DistortionMeasure::hamming(2).unwrap()).unwrap();
        assert_eq!(s.unused_rows, vec![1]);
    }

    #[test]
    fn neg_info_density_examples() {
        let ind = JointPmf::product(&Pmf::uniform(2).unwrap(), &Pmf::uniform(2).unwrap()).unwrap();
        let d = neg_info_density_distortion(&ind, &Kernel::bsc(0.3).unwrap()).unwrap();
        assert!(d.raw_values().iter().all(|v| v.abs() < 1e-15));

        let d = neg_info_density_distortion(&dsbs(0.1), &Kernel::bsc(0.2).unwrap()).unwrap();
        // P_{X,U}(0,0) = 0.37 against marginals 1/2, 1/2
        assert!((d.get(0, 0) + 1.48f64.log2()).abs() < 1e-12);
        assert!((d.get(0, 0) + 0.565_597_176).abs() < 1e-8);
        assert_eq!(d.get(0, 0), d.get(1, 1));
        assert_eq!(d.get(0, 1), d.get(1, 0));

        let d = neg_info_density_distortion(&dsbs(0.0), &Kernel::identity(2).unwrap()).unwrap();
        assert!(d.is_infinite(0, 1));
        assert_eq!(d.get(0, 1), f64::INFINITY);
    }

    #[test]
    fn json_masks_roundtrip() {
        let d = neg_info_density_distortion(&dsbs(0.0), &Kernel::identity(2).unwrap()).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("infinite"));
        let back: DistortionMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
