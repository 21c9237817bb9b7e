use crate::error::{Error, Result};
use crate::model::Indicator;

/// Retained `γ` samples, stored slice-major as bytes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GammaTensor {
    p: usize,
    n: usize,
    data: Vec<u8>,
}

impl GammaTensor {
    pub fn new(p: usize) -> Self {
        Self { p, n: 0, data: Vec::new() }
    }

    pub fn with_capacity(p: usize, slices: usize) -> Self {
        Self { p, n: 0, data: Vec::with_capacity(p * p * slices) }
    }

    /// Builds a tensor from `p × p` slices.
    pub fn from_slices(p: usize, slices: &[Indicator]) -> Result<Self> {
        let mut t = Self::with_capacity(p, slices.len());
        for s in slices {
            t.push(s)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, slice: &Indicator) -> Result<()> {
        if slice.shape() != (self.p, self.p) {
            return Err(Error::Dimension(format!(
                "gamma slice is {:?}, expected {}×{}",
                slice.shape(),
                self.p,
                self.p
            )));
        }
        for i in 0..self.p {
            for j in 0..self.p {
                self.data.push(u8::from(slice[(i, j)] != 0));
            }
        }
        self.n += 1;
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of retained slices.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, s: usize) -> u8 {
        self.data[(s * self.p + i) * self.p + j]
    }

    pub fn slice(&self, s: usize) -> Indicator {
        Indicator::from_fn(self.p, self.p, |i, j| self.get(i, j, s))
    }

    /// Fraction of slices with edge `(i, j)` present.
    pub fn frequency(&self, i: usize, j: usize) -> f64 {
        let count: usize = (0..self.n).map(|s| self.get(i, j, s) as usize).sum();
        count as f64 / self.n as f64
    }
}

/// Posterior probability that the sampled network contains every edge of
/// `gamma`.
pub fn network_motif(gamma: &Indicator, gamma_pst: &GammaTensor) -> Result<f64> {
    let p = gamma_pst.p();
    if gamma.shape() != (p, p) {
        return Err(Error::Dimension(format!(
            "motif is {:?}, samples are {p}×{p}",
            gamma.shape()
        )));
    }
    if (0..p).any(|i| gamma[(i, i)] != 0) {
        return Err(Error::Domain("motif must have a zero diagonal".into()));
    }
    if gamma_pst.is_empty() {
        return Err(Error::Empty("no posterior samples".into()));
    }
    let edges: Vec<(usize, usize)> = gamma
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(idx, _)| (idx % p, idx / p))
        .collect();
    let hits = (0..gamma_pst.len())
        .filter(|&s| edges.iter().all(|&(i, j)| gamma_pst.get(i, j, s) == 1))
        .count();
    Ok(hits as f64 / gamma_pst.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice(p: usize, edges: &[(usize, usize)]) -> Indicator {
        let mut m = Indicator::zeros(p, p);
        for &(i, j) in edges {
            m[(i, j)] = 1;
        }
        m
    }

    #[test]
    fn motif_examples() {
        let slices = vec![
            slice(3, &[(0, 1), (1, 2)]),
            slice(3, &[(0, 1)]),
            slice(3, &[(0, 1), (1, 2), (2, 0)]),
            slice(3, &[]),
        ];
        let t = GammaTensor::from_slices(3, &slices).unwrap();
        assert_eq!(network_motif(&Indicator::zeros(3, 3), &t).unwrap(), 1.0);
        assert_eq!(network_motif(&slice(3, &[(0, 1), (1, 2)]), &t).unwrap(), 0.5);
        assert_eq!(network_motif(&slice(3, &[(1, 0)]), &t).unwrap(), 0.0);
    }

    #[test]
    fn motif_errors() {
        let t = GammaTensor::from_slices(2, &[slice(2, &[])]).unwrap();
        assert!(network_motif(&Indicator::zeros(3, 3), &t).is_err());
        assert!(network_motif(&slice(2, &[(0, 0)]), &t).is_err());
        assert!(network_motif(&Indicator::zeros(2, 2), &GammaTensor::new(2)).is_err());
    }

    #[test]
    fn tensor_layout() {
        let t = GammaTensor::from_slices(2, &[slice(2, &[(0, 1)]), slice(2, &[(1, 0)])]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(0, 1, 0), 1);
        assert_eq!(t.get(1, 0, 1), 1);
        assert_eq!(t.slice(1), slice(2, &[(1, 0)]));
        assert_eq!(t.frequency(0, 1), 0.5);
        let mut t = GammaTensor::new(2);
        assert!(t.push(&Indicator::zeros(3, 3)).is_err());
    }
}
