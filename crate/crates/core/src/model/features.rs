use super::state::ModelState;
use crate::data::MultiViewDataset;
use crate::error::{Error, Result};

/// Squared row norms of one view's `W` and the feature indices sorted by
/// descending score (ties to the smaller index).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { scores, order }
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }
}

pub fn feature_scores(state: &ModelState) -> Vec<FeatureRanking> {
    state
        .w
        .iter()
        .map(|w| FeatureRanking::from_scores(w.row_iter().map(|r| r.norm_squared()).collect()))
        .collect()
}

/// Number of features kept from `m` at `percent`: `⌈percent·m/100⌉`.
pub fn selected_count(m: usize, percent: f64) -> usize {
    // absorb rounding such as 30% of 10 = 3.0000000000000004
    let raw = percent * m as f64 / 100.0;
    ((raw - 1e-9).ceil() as usize).clamp(1, m)
}

/// Keeps the top `⌈percent·m_v/100⌉` features of every view, in their
/// original order.
pub fn select_features(
    ds: &MultiViewDataset,
    rankings: &[FeatureRanking],
    percent: f64,
) -> Result<MultiViewDataset> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "selection percentage must lie in (0, 100], got {percent}"
        )));
    }
    if rankings.len() != ds.n_views() {
        return Err(Error::DimensionMismatch(format!(
            "{} rankings for {} views",
            rankings.len(),
            ds.n_views()
        )));
    }
    let mut views = Vec::with_capacity(ds.n_views());
    for (x, ranking) in ds.views().iter().zip(rankings) {
        if ranking.order.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "ranking covers {} features, view has {}",
                ranking.order.len(),
                x.nrows()
            )));
        }
        let mut keep = ranking.top(selected_count(x.nrows(), percent)).to_vec();
        keep.sort_unstable();
        views.push(x.select_rows(keep.iter()));
    }
    let out = MultiViewDataset::new(views, ds.labels().map(<[usize]>::to_vec))?;
    match ds.view_names() {
        Some(names) => out.with_view_names(names.to_vec()),
        None => Ok(out),
    }
}
