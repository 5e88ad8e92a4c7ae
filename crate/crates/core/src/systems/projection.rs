use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::SpectralSystem;
use crate::error::{Error, Result};
use crate::lrconstants::ProjectionFamily;

/// How many leading modes the `k`-th projection keeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum CutRule {
    /// `m(k) = k`.
    ModeCount,
    /// Keep every mode whose decay rate `−λ` is at most `k`.
    DecayAtMost,
    /// Explicit nested counts `m(1), m(2), …`.
    Counts { counts: Vec<usize> },
}

impl CutRule {
    fn counts(&self, spec: &SpectralSystem) -> Vec<(usize, usize)> {
        let n = spec.n_modes();
        match self {
            CutRule::ModeCount => (1..n).map(|k| (k, k)).collect(),
            CutRule::DecayAtMost => {
                let decay = spec.decay_rates();
                let top = decay[n - 1].max(1.0).ceil() as usize;
                (1..=top)
                    .map(|k| (k, decay.iter().filter(|&&d| d <= k as f64).count()))
                    .collect()
            }
            CutRule::Counts { counts } => counts.iter().enumerate().map(|(i, &m)| (i + 1, m)).collect(),
        }
    }
}

/// Coordinate projections onto leading eigenmodes.
///
/// Only cuts that keep at least one and discard at least one mode are
/// returned, and repeated cuts are merged (first `k` wins), so `α_k` is
/// strictly increasing. The tail semigroup is diagonal, hence `M_k = 1` and
/// `α_k` is the decay rate of the first discarded mode.
pub fn spectral_projection_family(spec: &SpectralSystem, rule: &CutRule) -> Result<ProjectionFamily> {
    let n = spec.n_modes();
    let decay = spec.decay_rates();
    let mut fam = ProjectionFamily::default();
    let mut last = 0usize;
    for (k, m) in rule.counts(spec) {
        if m == 0 || m >= n {
            continue;
        }
        if m < last {
            return Err(Error::InvalidArgument(format!("cut rule is not nested at k = {k}")));
        }
        if m == last {
            continue;
        }
        last = m;
        fam.ks.push(k);
        fam.projections.push((0..m).collect());
        fam.m_k.push(1.0);
        fam.alpha_k.push(decay[m]);
    }
    if fam.ks.is_empty() {
        return Err(Error::InvalidArgument(
            "cut rule keeps none or all of the modes for every k".into(),
        ));
    }
    // equal decay rates across a cut would break monotonicity
    if fam.alpha_k.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("decay rates are not increasing across cuts".into()));
    }
    Ok(fam)
}

/// Dense matrix of the coordinate projection onto `indices`.
pub fn projection_matrix(indices: &[usize], n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for &i in indices {
        p[(i, i)] = 1.0;
    }
    p
}
