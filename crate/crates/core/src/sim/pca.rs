use crate::error::{Error, Result};
use crate::model::{DesignMask, Matrix};

const RANK_TOLERANCE: f64 = 1e-10;

/// Replaces each group of instrument columns by its leading principal
/// component scores. Groups are standardized first. Returns the compact matrix
/// and a block-diagonal mask giving group `r`'s components to response `r`.
pub fn pca_reduce(x: &Matrix, groups: &[Vec<usize>], n_components: usize) -> Result<(Matrix, DesignMask)> {
    let n = x.nrows();
    if groups.is_empty() || n_components == 0 {
        return Err(Error::Config("need at least one group and one component".into()));
    }
    if n <= n_components {
        return Err(Error::Config(format!("{n} rows cannot support {n_components} components")));
    }
    let mut out = Matrix::zeros(n, groups.len() * n_components);
    for (g, cols) in groups.iter().enumerate() {
        if cols.len() < n_components {
            return Err(Error::Config(format!(
                "group {g} has {} columns, fewer than {n_components}",
                cols.len()
            )));
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= x.ncols()) {
            return Err(Error::Dimension(format!("column {c} out of range")));
        }
        let mut z = x.select_columns(cols);
        for mut col in z.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / (n as f64 - 1.0)).sqrt();
            if !(sd > 0.0) {
                return Err(Error::Domain(format!("group {g} contains a constant column")));
            }
            col.unscale_mut(sd);
        }
        let cov = z.tr_mul(&z) / (n as f64 - 1.0);
        let eig = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..cols.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]].max(0.0);
        for (c, &idx) in order.iter().take(n_components).enumerate() {
            if !(eig.eigenvalues[idx] > RANK_TOLERANCE * top) {
                return Err(Error::Domain(format!(
                    "group {g} has rank below {n_components}"
                )));
            }
            let mut v = eig.eigenvectors.column(idx).into_owned();
            // Fix the sign so the largest loading is positive.
            let lead = v.iamax();
            if v[lead] < 0.0 {
                v.neg_mut();
            }
            out.set_column(g * n_components + c, &(&z * v));
        }
    }
    Ok((out, DesignMask::block(groups.len(), n_components)))
}
