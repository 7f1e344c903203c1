//! PCA-based ocular artifact removal.
//!
//! Components whose share of the total variance exceeds a threshold are
//! treated as artifacts (blinks and eye movements dominate the spatial
//! covariance) and projected out.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactRemoval {
    pub signal: Vec<Vec<f64>>,
    /// Number of principal components removed.
    pub removed: usize,
    /// Set when the input had no variance to decompose.
    pub degenerate: bool,
}

/// Removes principal components carrying more than `threshold` of the total
/// variance and reconstructs in the channel basis. Channel means are kept.
pub fn remove_artifacts_pca(signal: &[Vec<f64>], threshold: f64) -> ArtifactRemoval {
    let c = signal.len();
    let t = signal.first().map_or(0, Vec::len);
    let unchanged = |degenerate| ArtifactRemoval { signal: signal.to_vec(), removed: 0, degenerate };
    if c == 0 || t < 2 {
        return unchanged(true);
    }

    let means: Vec<f64> = signal.iter().map(|r| r.iter().sum::<f64>() / t as f64).collect();
    let centered = DMatrix::from_fn(c, t, |i, j| signal[i][j] - means[i]);
    let cov = (&centered * centered.transpose()) / (t as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) || !total.is_finite() {
        log::warn!("artifact removal skipped: input has no variance");
        return unchanged(true);
    }

    let artifacts: Vec<usize> = (0..c).filter(|&k| eig.eigenvalues[k].max(0.0) / total > threshold).collect();
    if artifacts.is_empty() {
        return unchanged(false);
    }
    let basis = DMatrix::from_fn(c, artifacts.len(), |i, j| eig.eigenvectors[(i, artifacts[j])]);
    let scores = basis.transpose() * &centered;
    let cleaned = centered - &basis * scores;
    let signal = (0..c).map(|i| (0..t).map(|j| cleaned[(i, j)] + means[i]).collect()).collect();
    ArtifactRemoval { signal, removed: artifacts.len(), degenerate: false }
}
