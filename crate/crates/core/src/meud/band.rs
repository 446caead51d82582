use crate::error::{Error, Result};
use crate::numerics::{fill_normal, Matrix, Rng};

/// Tridiagonal bottleneck-to-latent coupling.
///
/// Latent node `j` receives `diag[j]` times bottleneck node `j`, `sub[j-1]`
/// times node `j-1` and `sup[j]` times node `j+1`. Chain bands drop the
/// missing neighbours at both ends (`sub` and `sup` have `r - 1` entries);
/// ring bands wrap around (`r` entries each, with `sub[r-1]` coupling node
/// `r-1` into node 0 and `sup[r-1]` coupling node 0 into node `r-1`).
///
/// Only band entries are stored, so no update can create an off-band
/// coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct BandWeights {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
    pub sup: Vec<f64>,
    pub ring: bool,
}

impl BandWeights {
    pub fn new(diag: Vec<f64>, sub: Vec<f64>, sup: Vec<f64>, ring: bool) -> Result<Self> {
        let r = diag.len();
        let off = if ring { r } else { r.saturating_sub(1) };
        if sub.len() != off || sup.len() != off || (ring && r < 3) {
            return Err(Error::Config(format!(
                "band of size {r} (ring: {ring}) needs {off} off-diagonal weights, got {} and {}",
                sub.len(),
                sup.len()
            )));
        }
        Ok(BandWeights {
            diag,
            sub,
            sup,
            ring,
        })
    }

    pub fn identity(r: usize) -> Self {
        BandWeights {
            diag: vec![1.0; r],
            sub: vec![0.0; r.saturating_sub(1)],
            sup: vec![0.0; r.saturating_sub(1)],
            ring: false,
        }
    }

    pub fn zeros_like(&self) -> Self {
        BandWeights {
            diag: vec![0.0; self.diag.len()],
            sub: vec![0.0; self.sub.len()],
            sup: vec![0.0; self.sup.len()],
            ring: self.ring,
        }
    }

    /// Normal(0, std) entries drawn in the order diag, sub, sup.
    pub(crate) fn random(r: usize, ring: bool, std: f64, rng: &mut Rng) -> Self {
        let off = if ring { r } else { r.saturating_sub(1) };
        let mut draw = |len| fill_normal(1, len, 0.0, std, rng).into_vec();
        let diag = draw(r);
        let sub = draw(off);
        let sup = draw(off);
        BandWeights {
            diag,
            sub,
            sup,
            ring,
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn num_params(&self) -> usize {
        self.diag.len() + self.sub.len() + self.sup.len()
    }

    #[inline]
    fn left(&self, j: usize) -> Option<(usize, f64)> {
        let r = self.size();
        if j > 0 {
            Some((j - 1, self.sub[j - 1]))
        } else if self.ring {
            Some((r - 1, self.sub[r - 1]))
        } else {
            None
        }
    }

    #[inline]
    fn right(&self, j: usize) -> Option<(usize, f64)> {
        let r = self.size();
        if j + 1 < r {
            Some((j + 1, self.sup[j]))
        } else if self.ring {
            Some((0, self.sup[r - 1]))
        } else {
            None
        }
    }

    fn check(&self, op: &'static str, y: &Matrix) -> Result<()> {
        if y.cols() != self.size() {
            return Err(Error::shape(op, y.shape(), (self.size(), self.size())));
        }
        Ok(())
    }

    /// `y · B` for the dense expansion `B`, computed in O(3r) per row.
    pub fn apply(&self, y: &Matrix) -> Result<Matrix> {
        self.check("band_apply", y)?;
        let r = self.size();
        let mut out = Matrix::zeros(y.rows(), r);
        for i in 0..y.rows() {
            let src = y.row(i);
            let dst = out.row_mut(i);
            for j in 0..r {
                let mut acc = 0.0;
                if let Some((k, w)) = self.left(j) {
                    acc += w * src[k];
                }
                acc += self.diag[j] * src[j];
                if let Some((k, w)) = self.right(j) {
                    acc += w * src[k];
                }
                dst[j] = acc;
            }
        }
        Ok(out)
    }

    /// `delta · Bᵀ`: the gradient flowing back into the bottleneck.
    pub fn apply_transpose(&self, delta: &Matrix) -> Result<Matrix> {
        self.check("band_apply_transpose", delta)?;
        let r = self.size();
        let mut out = Matrix::zeros(delta.rows(), r);
        for i in 0..delta.rows() {
            let d = delta.row(i);
            let dst = out.row_mut(i);
            for j in 0..r {
                dst[j] += self.diag[j] * d[j];
                if let Some((k, w)) = self.left(j) {
                    dst[k] += w * d[j];
                }
                if let Some((k, w)) = self.right(j) {
                    dst[k] += w * d[j];
                }
            }
        }
        Ok(out)
    }

    /// Gradient of the band parameters given the bottleneck output `y` and
    /// the gradient `delta` at the latent pre-activation. Equal to
    /// `yᵀ · delta` restricted to the band.
    pub fn gradient(&self, y: &Matrix, delta: &Matrix) -> Result<BandWeights> {
        self.check("band_gradient", y)?;
        y.same_shape("band_gradient", delta)?;
        let r = self.size();
        let mut g = self.zeros_like();
        for i in 0..y.rows() {
            let (src, d) = (y.row(i), delta.row(i));
            for j in 0..r {
                g.diag[j] += src[j] * d[j];
                if let Some((k, _)) = self.left(j) {
                    g.sub[if j > 0 { j - 1 } else { r - 1 }] += src[k] * d[j];
                }
                if let Some((k, _)) = self.right(j) {
                    g.sup[j] += src[k] * d[j];
                }
            }
        }
        Ok(g)
    }

    /// Dense `r x r` matrix `B` with `y · B == self.apply(y)`.
    pub fn to_dense(&self) -> Matrix {
        let r = self.size();
        let mut m = Matrix::zeros(r, r);
        for j in 0..r {
            m.set(j, j, self.diag[j]);
            if let Some((k, w)) = self.left(j) {
                m.set(k, j, w);
            }
            if let Some((k, w)) = self.right(j) {
                m.set(k, j, w);
            }
        }
        m
    }

    /// Projects a dense `r x r` gradient onto the band positions.
    pub fn project(&self, dense: &Matrix) -> BandWeights {
        let r = self.size();
        let mut g = self.zeros_like();
        for j in 0..r {
            g.diag[j] = dense.get(j, j);
            if let Some((k, _)) = self.left(j) {
                g.sub[if j > 0 { j - 1 } else { r - 1 }] = dense.get(k, j);
            }
            if let Some((k, _)) = self.right(j) {
                g.sup[j] = dense.get(k, j);
            }
        }
        g
    }

    pub fn slices(&self) -> [&[f64]; 3] {
        [&self.diag, &self.sub, &self.sup]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.diag, &mut self.sub, &mut self.sup]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matmul, matmul_tn, randn_matrix, seeded_rng};

    fn random_band(r: usize, ring: bool, seed: u64) -> BandWeights {
        BandWeights::random(r, ring, 1.0, &mut seeded_rng(seed))
    }

    fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_band() {
        let y = randn_matrix(4, 6, 0.0, 1.0, 1);
        assert_eq!(BandWeights::identity(6).apply(&y).unwrap(), y);
    }

    #[test]
    fn three_term_sum() {
        let band = BandWeights::new(vec![1.0; 3], vec![1.0; 2], vec![1.0; 2], false).unwrap();
        let y = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(band.apply(&y).unwrap().row(0), &[3.0, 6.0, 5.0]);
    }

    #[test]
    fn matches_dense_expansion() {
        for ring in [false, true] {
            let band = random_band(7, ring, 3);
            let dense = band.to_dense();
            let y = randn_matrix(5, 7, 0.0, 1.0, 4);
            let d = randn_matrix(5, 7, 0.0, 1.0, 5);
            assert!(max_diff(&band.apply(&y).unwrap(), &matmul(&y, &dense).unwrap()) <= 1e-12);
            assert!(
                max_diff(
                    &band.apply_transpose(&d).unwrap(),
                    &matmul(&d, &dense.transpose()).unwrap()
                ) <= 1e-12
            );
            let g = band.gradient(&y, &d).unwrap();
            let dense_grad = matmul_tn(&y, &d).unwrap();
            let projected = band.project(&dense_grad);
            for (a, b) in g.slices().iter().zip(projected.slices()) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn chain_dense_is_tridiagonal() {
        let dense = random_band(6, false, 8).to_dense();
        for i in 0..6usize {
            for j in 0..6 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(dense.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn size_mismatch() {
        let band = BandWeights::identity(4);
        assert!(band.apply(&Matrix::zeros(2, 5)).is_err());
        assert!(BandWeights::new(vec![1.0; 3], vec![0.0; 3], vec![0.0; 2], false).is_err());
    }
}
