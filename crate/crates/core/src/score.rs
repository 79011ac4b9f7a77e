//! Detection-score providers: the abstraction standing in for the per-view
//! detector networks. A provider answers "what is the detection score at
//! this box in this view?" so that pooled candidates can be re-scored in
//! every view, including views where nothing was proposed initially.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::PixelBox;
use crate::store::Proposal;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("unknown view id {0:?}")]
    UnknownView(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
}

/// Where a provider's state comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// Built from a proposal file on disk.
    FileBacked,
    /// Built from generated in-memory observations.
    Synthetic,
}

/// Configuration of a kernel score provider. The detector weights of the
/// original networks are opaque provider state; here that state is the
/// proposal set plus these two shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreProviderConfig {
    pub kind: ProviderKind,
    /// Gaussian kernel bandwidth in pixels.
    pub sigma_px: f64,
    /// Floor score returned far from every proposal.
    pub floor: f64,
}

impl ScoreProviderConfig {
    pub fn new(kind: ProviderKind, sigma_px: f64, floor: f64) -> Result<Self, ScoreError> {
        if !(sigma_px > 0.0) {
            return Err(ScoreError::InvalidConfig(format!(
                "sigma_px must be > 0, got {sigma_px}"
            )));
        }
        if !floor.is_finite() {
            return Err(ScoreError::InvalidConfig(format!("floor must be finite, got {floor}")));
        }
        Ok(Self { kind, sigma_px, floor })
    }
}

impl Default for ScoreProviderConfig {
    fn default() -> Self {
        // sigma is a quarter of the 100 px aerial box; the floor sits low on
        // the detectors' logit-like scale
        Self { kind: ProviderKind::FileBacked, sigma_px: 25.0, floor: -5.0 }
    }
}

/// Answers score queries for boxes in known views.
pub trait ScoreProvider: Send + Sync {
    fn query_score(&self, view_id: &str, bbox: &PixelBox) -> Result<f64, ScoreError>;
    fn config(&self) -> &ScoreProviderConfig;
}

/// Dense-score surrogate over a sparse proposal set: the score at a query
/// box is the best proposal score attenuated by a Gaussian kernel of the
/// center distance, floored at `config.floor`. A peaked per-object score
/// map makes max (not sum) the right pooling: summation would double-count
/// overlapping proposals.
#[derive(Debug, Clone)]
pub struct KernelScoreProvider {
    config: ScoreProviderConfig,
    views: HashMap<String, Vec<(f64, f64, f64)>>,
}

impl KernelScoreProvider {
    /// Build from proposals. Every id in `known_views` is registered even if
    /// it has no proposals, so queries there return the floor score rather
    /// than an error.
    pub fn new<I, S>(
        config: ScoreProviderConfig,
        proposals: &[Proposal],
        known_views: I,
    ) -> Result<Self, ScoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut views: HashMap<String, Vec<(f64, f64, f64)>> = HashMap::new();
        for id in known_views {
            views.entry(id.into()).or_default();
        }
        for p in proposals {
            match views.get_mut(&p.view_id) {
                Some(list) => list.push((p.bbox.x, p.bbox.y, p.score)),
                None => return Err(ScoreError::UnknownView(p.view_id.clone())),
            }
        }
        Ok(Self { config, views })
    }
}

impl ScoreProvider for KernelScoreProvider {
    fn query_score(&self, view_id: &str, bbox: &PixelBox) -> Result<f64, ScoreError> {
        let list = self
            .views
            .get(view_id)
            .ok_or_else(|| ScoreError::UnknownView(view_id.to_string()))?;
        let two_sigma_sq = 2.0 * self.config.sigma_px * self.config.sigma_px;
        let best = list
            .iter()
            .map(|&(x, y, s)| {
                let d_sq = (bbox.x - x).powi(2) + (bbox.y - y).powi(2);
                s * (-d_sq / two_sigma_sq).exp()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best.max(self.config.floor))
    }

    fn config(&self) -> &ScoreProviderConfig {
        &self.config
    }
}
