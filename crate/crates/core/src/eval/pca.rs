use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, orthonormalize_rows, symmetric_eigen, Matrix};
use crate::text::{LabeledTf, TfVector};

/// Extra directions carried along in the subspace iteration.
const OVERSAMPLE: usize = 10;
const MAX_ITER: usize = 3000;
const RESIDUAL_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

/// A data row that can enumerate its nonzero features in ascending order.
pub trait FeatureRow {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64));
}

impl FeatureRow for TfVector {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        for &(i, c) in self.entries() {
            f(i, f64::from(c));
        }
    }
}

impl FeatureRow for LabeledTf {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        self.tf.for_each_nonzero(f)
    }
}

impl FeatureRow for [f64] {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        for (i, x) in self.iter().enumerate() {
            if *x != 0.0 {
                f(i, *x);
            }
        }
    }
}

impl FeatureRow for Vec<f64> {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        self.as_slice().for_each_nonzero(f)
    }
}

/// Mean-centered principal directions of the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// One orthonormal direction per row, by decreasing variance.
    components: Matrix,
    explained_variance: Vec<f64>,
    rank: usize,
    // components · mean
    projected_mean: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    /// Variance along each component (covariance eigenvalues, divisor n − 1).
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Number of components with non-negligible variance.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// components · (row − mean).
    pub fn transform<R: FeatureRow + ?Sized>(&self, row: &R) -> Vec<f64> {
        let mut out: Vec<f64> = self.projected_mean.iter().map(|m| -m).collect();
        let dim = self.mean.len();
        row.for_each_nonzero(&mut |i, x| {
            if i < dim {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += self.components.get(j, i) * x;
                }
            }
        });
        out
    }
}

/// Fits the top `k` principal directions of `rows` (each of dimension `dim`).
///
/// At most `min(k, dim, rows.len())` components are returned. When fewer
/// than that many directions carry variance, the remaining components span
/// the null space, [`PcaModel::rank`] reports the shortfall and a warning is
/// logged.
pub fn pca_fit<R: FeatureRow>(rows: &[R], dim: usize, k: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 || dim == 0 || k == 0 {
        return Err(Error::InvalidArgument("PCA needs at least 2 rows, a positive dimension and k ≥ 1".into()));
    }
    let mut mean = vec![0.0; dim];
    for r in rows {
        let mut bad = None;
        r.for_each_nonzero(&mut |i, x| match mean.get_mut(i) {
            Some(m) => *m += x,
            None => bad = Some(i),
        });
        if let Some(i) = bad {
            return Err(Error::DimensionMismatch { expected: dim, found: i + 1 });
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let m = k.min(dim).min(n);
    if m < k {
        log::warn!("PCA: requested {k} components, only {m} available (dim {dim}, {n} rows)");
    }
    let block = (m + OVERSAMPLE).min(dim);
    let cov_times = |basis: &Matrix| covariance_product(rows, &mean, basis);

    let mut basis = Matrix::zeros(block, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9ca);
    for x in basis.as_mut_slice() {
        *x = rng.random::<f64>() - 0.5;
    }
    orthonormalize_rows(&mut basis);
    let mut image = cov_times(&basis);
    let mut values = Vec::new();
    for iter in 0..MAX_ITER {
        basis = image;
        orthonormalize_rows(&mut basis);
        let cb = cov_times(&basis);
        // Rayleigh–Ritz on the current subspace
        let t = Matrix::from_fn(block, block, |a, b| dot(basis.row(a), cb.row(b)));
        let t = Matrix::from_fn(block, block, |a, b| 0.5 * (t.get(a, b) + t.get(b, a)));
        let (ritz, rot) = symmetric_eigen(&t);
        basis = rotate(&rot, &basis);
        image = rotate(&rot, &cb);
        values = ritz;
        let top = values[0].abs();
        let residual = (0..m)
            .map(|a| {
                let r: Vec<f64> = image.row(a).iter().zip(basis.row(a)).map(|(y, b)| y - values[a] * b).collect();
                norm(&r)
            })
            .fold(0.0, f64::max);
        if residual <= RESIDUAL_TOL * top || top == 0.0 || block == dim {
            break;
        }
        if iter + 1 == MAX_ITER {
            log::warn!("PCA: subspace iteration stopped at residual {residual:e}");
        }
    }

    let mut components = Matrix::zeros(m, dim);
    for a in 0..m {
        let row = basis.row(a);
        let mut pivot = 0;
        for (i, x) in row.iter().enumerate() {
            if x.abs() > row[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (dst, x) in components.row_mut(a).iter_mut().zip(row) {
            *dst = sign * x;
        }
    }
    let explained_variance: Vec<f64> = values[..m].iter().map(|v| v.max(0.0)).collect();
    let top = explained_variance[0];
    let rank = explained_variance.iter().filter(|v| top > 0.0 && **v > RANK_TOL * top).count();
    if rank < m {
        log::warn!("PCA: data rank {rank} is below the {m} requested components");
    }
    let mut model = PcaModel { mean, components, explained_variance, rank, projected_mean: Vec::new() };
    let mut pm = vec![0.0; m];
    model.mean.as_slice().for_each_nonzero(&mut |i, x| {
        for (j, o) in pm.iter_mut().enumerate() {
            *o += model.components.get(j, i) * x;
        }
    });
    model.projected_mean = pm;
    Ok(model)
}

fn rotate(rot: &Matrix, m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(rot.rows(), m.cols());
    for a in 0..rot.rows() {
        let dst = out.row_mut(a);
        for b in 0..rot.cols() {
            let c = rot.get(a, b);
            for (d, x) in dst.iter_mut().zip(m.row(b)) {
                *d += c * x;
            }
        }
    }
    out
}

// Rows of the result are C·b for every row b of `basis`, where C is the
// sample covariance of the rows, without forming C.
fn covariance_product<R: FeatureRow>(rows: &[R], mean: &[f64], basis: &Matrix) -> Matrix {
    let (p, dim) = (basis.rows(), basis.cols());
    let basis_mean: Vec<f64> = (0..p).map(|j| dot(basis.row(j), mean)).collect();
    let mut out = Matrix::zeros(p, dim);
    let mut score_sum = vec![0.0; p];
    let mut score = vec![0.0; p];
    let mut nonzeros: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        nonzeros.clear();
        r.for_each_nonzero(&mut |i, x| nonzeros.push((i, x)));
        for j in 0..p {
            let b = basis.row(j);
            score[j] = nonzeros.iter().map(|&(i, x)| b[i] * x).sum::<f64>() - basis_mean[j];
            score_sum[j] += score[j];
        }
        for j in 0..p {
            let row = out.row_mut(j);
            for &(i, x) in &nonzeros {
                row[i] += score[j] * x;
            }
        }
    }
    let scale = 1.0 / (rows.len() - 1) as f64;
    for j in 0..p {
        for (o, mu) in out.row_mut(j).iter_mut().zip(mean) {
            *o = (*o - score_sum[j] * mu) * scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<Vec<f64>> {
        vec![
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, 3.0],
            vec![4.0, 2.0, 0.0],
            vec![1.0, 5.0, 2.0],
            vec![3.0, 3.0, 4.0],
        ]
    }

    #[test]
    fn matches_characteristic_polynomial_oracle() {
        // tests/oracles/oracles.py: roots of det(C − λI) and null vectors of C − λI
        let model = pca_fit(&toy(), 3, 3).unwrap();
        let eig = [4.203_698_301_379_902_104_3, 3.124_380_302_269_927_749_3, 1.371_921_396_350_170_146_4];
        let comps = [
            [-0.311_017_388_483_065_618_72, 0.788_983_894_237_757_961_02, 0.529_879_796_458_212_022_24],
            [0.698_143_333_801_525_430_69, 0.567_962_164_306_193_331_75, -0.435_906_945_786_731_515_26],
            [0.644_875_235_630_633_967_1, -0.234_357_407_713_191_369_09, 0.727_469_955_338_560_569_56],
        ];
        let proj = [0.683_100_406_093_726_048_76, -1.247_642_712_449_495_612_3, 0.129_466_201_250_564_876_29];
        for a in 0..3 {
            assert!((model.explained_variance()[a] - eig[a]).abs() < 1e-10);
            for i in 0..3 {
                assert!((model.components().get(a, i) - comps[a][i]).abs() < 1e-10);
            }
        }
        let got = model.transform(&vec![1.0, 2.0, 3.0]);
        for a in 0..3 {
            assert!((got[a] - proj[a]).abs() < 1e-10);
        }
    }

    #[test]
    fn collinear_points() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, i as f64]).collect();
        let model = pca_fit(&rows, 2, 2).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components().get(0, 0) - s).abs() < 1e-10);
        assert!((model.components().get(0, 1) - s).abs() < 1e-10);
        assert!(model.explained_variance()[1].abs() < 1e-10);
        assert_eq!(model.rank(), 1);
    }

    #[test]
    fn mean_projects_to_origin() {
        let model = pca_fit(&toy(), 3, 2).unwrap();
        for x in model.transform(&model.mean().to_vec()) {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn component_count_is_capped() {
        let model = pca_fit(&toy()[..2], 3, 3).unwrap();
        assert_eq!(model.n_components(), 2);
        assert!(pca_fit(&toy()[..1], 3, 1).is_err());
        assert!(matches!(pca_fit(&toy(), 2, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn subspace_iteration_agrees_with_dense_eigensolver() {
        // 40-dimensional sparse count data, block smaller than the dimension
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<TfVector> = (0..80)
            .map(|_| TfVector::from_pairs((0..40).map(|i| (i, rng.random_range(0..(1 + i % 7) as u32)))))
            .collect();
        let model = pca_fit(&rows, 40, 5).unwrap();
        let dense: Vec<Vec<f64>> = rows.iter().map(|r| r.to_dense(40)).collect();
        let mean = model.mean();
        let cov = Matrix::from_fn(40, 40, |a, b| {
            dense.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / 79.0
        });
        let (vals, vecs) = symmetric_eigen(&cov);
        for a in 0..5 {
            assert!((model.explained_variance()[a] - vals[a]).abs() < 1e-8 * vals[0]);
            let overlap = dot(model.components().row(a), vecs.row(a)).abs();
            assert!((overlap - 1.0).abs() < 1e-6, "component {a}: {overlap}");
        }
        let c = model.components();
        for a in 0..5 {
            for b in 0..5 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot(c.row(a), c.row(b)) - want).abs() < 1e-6);
            }
        }
        assert!(model.explained_variance().windows(2).all(|w| w[0] >= w[1]));
    }
}
