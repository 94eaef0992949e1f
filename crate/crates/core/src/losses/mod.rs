//! Training objectives: feature, edge and pixel distances, the autoencoder
//! reconstruction losses, the balancing controller and the final loss.

mod feature;

pub use feature::{FeatureConfig, FeatureExtractor};

use std::fmt;
use std::str::FromStr;

use iegan_tensor::{Graph, Real, Var};
use serde::{Deserialize, Serialize};

use crate::edge::{soft_edge, SOFT_EDGE_SIGMA};
use crate::models::DiscAe;
use crate::params::Bound;
use crate::{CoreError, Result};

pub use crate::edge::binary_edge_loss;

pub const DEFAULT_R: f64 = 0.4;

fn same_shape<T: Real>(g: &Graph<T>, op: &'static str, a: Var, b: Var) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(CoreError::contract(op, format!("shapes differ: {:?} vs {:?}", g.shape(a), g.shape(b))));
    }
    Ok(())
}

/// Sum over channels of squared tapped-feature differences, divided by the
/// feature map area and averaged over the batch. Inputs in `[0, 1]`.
pub fn feature_loss<T: Real>(g: &mut Graph<T>, fx: &FeatureExtractor, a: Var, b: Var) -> Result<Var> {
    same_shape(g, "feature_loss", a, b)?;
    let fa = fx.features(g, a)?;
    let fb = fx.features(g, b)?;
    let channels = g.shape(fa)[1] as f64;
    let d = g.sub(fa, fb)?;
    let sq = g.square(d)?;
    let m = g.mean(sq)?;
    Ok(g.scale(m, channels)?)
}

/// Mean absolute difference of soft edge maps. Inputs in `[0, 1]`.
pub fn edge_loss<T: Real>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
    same_shape(g, "edge_loss", a, b)?;
    let ea = soft_edge(g, a, SOFT_EDGE_SIGMA)?;
    let eb = soft_edge(g, b, SOFT_EDGE_SIGMA)?;
    let d = g.sub(ea, eb)?;
    let d = g.abs(d)?;
    Ok(g.mean(d)?)
}

pub fn pixel_l1<T: Real>(g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
    same_shape(g, "pixel_l1", a, b)?;
    let d = g.sub(a, b)?;
    let d = g.abs(d)?;
    Ok(g.mean(d)?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "vgg")]
    Vgg,
    #[serde(rename = "l1")]
    L1,
    #[default]
    #[serde(rename = "canny+vgg")]
    CannyVgg,
    #[serde(rename = "canny+l1")]
    CannyL1,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Vgg, LossKind::L1, LossKind::CannyVgg, LossKind::CannyL1];

    pub fn uses_edge(self) -> bool {
        matches!(self, LossKind::CannyVgg | LossKind::CannyL1)
    }

    pub fn uses_features(self) -> bool {
        matches!(self, LossKind::Vgg | LossKind::CannyVgg)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Vgg => "VGG",
            LossKind::L1 => "L1",
            LossKind::CannyVgg => "Canny+VGG",
            LossKind::CannyL1 => "Canny+L1",
        })
    }
}

impl FromStr for LossKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "+").as_str() {
            "vgg" => Ok(LossKind::Vgg),
            "l1" => Ok(LossKind::L1),
            "canny+vgg" => Ok(LossKind::CannyVgg),
            "canny+l1" => Ok(LossKind::CannyL1),
            other => Err(CoreError::contract("loss_kind", format!("unknown loss {other:?}"))),
        }
    }
}

/// Edge and content terms of one comparison.
#[derive(Clone, Copy, Debug)]
pub struct ContentTerms {
    pub edge: Var,
    /// Feature loss, or pixel L1 for the L1 kinds.
    pub content: Var,
}

/// `r * edge + (1 - r) * content` for a loss kind. Kinds without an edge term
/// use an effective `r` of 0.
#[derive(Clone, Debug)]
pub struct ContentLoss {
    pub fx: FeatureExtractor,
    pub kind: LossKind,
    pub r: f64,
}

impl ContentLoss {
    pub fn new(fx: FeatureExtractor, kind: LossKind, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(CoreError::contract("content_distance", format!("r = {r} outside [0, 1]")));
        }
        Ok(ContentLoss { fx, kind, r })
    }

    pub fn effective_r(&self) -> f64 {
        if self.kind.uses_edge() {
            self.r
        } else {
            0.0
        }
    }

    /// Terms for network-domain inputs in `[-1, 1]`; both are mapped to
    /// `[0, 1]` first.
    pub fn terms<T: Real>(&self, g: &mut Graph<T>, a: Var, b: Var) -> Result<ContentTerms> {
        same_shape(g, "content_distance", a, b)?;
        let a = g.affine(a, 0.5, 0.5)?;
        let b = g.affine(b, 0.5, 0.5)?;
        let edge = edge_loss(g, a, b)?;
        let content = if self.kind.uses_features() { feature_loss(g, &self.fx, a, b)? } else { pixel_l1(g, a, b)? };
        Ok(ContentTerms { edge, content })
    }

    pub fn combine<T: Real>(&self, g: &mut Graph<T>, t: ContentTerms) -> Result<Var> {
        let r = self.effective_r();
        Ok(g.combine(&[(t.edge, r), (t.content, 1.0 - r)], 0.0)?)
    }

    pub fn distance<T: Real>(&self, g: &mut Graph<T>, a: Var, b: Var) -> Result<Var> {
        let t = self.terms(g, a, b)?;
        self.combine(g, t)
    }
}

/// `(l_real, l_fake)`: content distance between each input and its
/// reconstruction by `d`. Inputs in `[-1, 1]`.
pub fn reconstruction_losses<T: Real>(
    g: &mut Graph<T>,
    d: &DiscAe,
    bound: &Bound,
    loss: &ContentLoss,
    gt: Var,
    gen: Var,
) -> Result<(Var, Var)> {
    same_shape(g, "reconstruction_losses", gt, gen)?;
    let rec_gt = d.forward(g, bound, gt)?;
    let l_real = loss.distance(g, gt, rec_gt)?;
    let rec_gen = d.forward(g, bound, gen)?;
    let l_fake = loss.distance(g, gen, rec_gen)?;
    Ok((l_real, l_fake))
}

/// `|l_real - k * l_fake|`.
pub fn discriminator_objective(l_real: f64, l_fake: f64, k: f64) -> f64 {
    (l_real - k * l_fake).abs()
}

pub fn discriminator_objective_var<T: Real>(g: &mut Graph<T>, l_real: Var, l_fake: Var, k: f64) -> Result<Var> {
    let d = g.combine(&[(l_real, 1.0), (l_fake, -k)], 0.0)?;
    Ok(g.abs(d)?)
}

pub fn final_loss(edge: f64, feature: f64, l_d: f64, r: f64) -> f64 {
    r * edge + (1.0 - r) * feature + l_d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KState {
    pub k: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for KState {
    fn default() -> Self {
        KState { k: 0.0, lambda: 1e-3, gamma: 0.5 }
    }
}

/// `k + lambda * (gamma * l_real - l_fake)`, clamped to `[0, 1]`.
pub fn update_k(state: KState, l_real: f64, l_fake: f64) -> KState {
    let k = (state.k + state.lambda * (state.gamma * l_real - l_fake)).clamp(0.0, 1.0);
    KState { k, ..state }
}

/// One row of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub step: u64,
    pub edge: f64,
    pub feature: f64,
    pub l_d: f64,
    pub f_loss: f64,
    pub l_real: f64,
    pub l_fake: f64,
    /// Controller value after this step's update.
    pub k: f64,
    /// Edge weight in effect.
    pub r: f64,
}

pub const LOG_HEADER: &str = "step,edge,feature,l_d,f_loss,l_real,l_fake,k,r";

impl LossBreakdown {
    /// `|f_loss - (r * edge + (1 - r) * feature + l_d)|`.
    pub fn decomposition_error(&self) -> f64 {
        (self.f_loss - final_loss(self.edge, self.feature, self.l_d, self.r)).abs()
    }

    /// CSV row; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.step, self.edge, self.feature, self.l_d, self.f_loss, self.l_real, self.l_fake, self.k, self.r
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let bad = || CoreError::contract("loss_log", format!("malformed row {line:?}"));
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(bad());
        }
        let x = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
        Ok(LossBreakdown {
            step: f[0].parse().map_err(|_| bad())?,
            edge: x(1)?,
            feature: x(2)?,
            l_d: x(3)?,
            f_loss: x(4)?,
            l_real: x(5)?,
            l_fake: x(6)?,
            k: x(7)?,
            r: x(8)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        [self.edge, self.feature, self.l_d, self.f_loss, self.l_real, self.l_fake, self.k].iter().all(|v| v.is_finite())
    }
}

/// Parse a loss log written with [`LOG_HEADER`].
pub fn parse_log(text: &str) -> Result<Vec<LossBreakdown>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == LOG_HEADER => {}
        other => return Err(CoreError::contract("loss_log", format!("unexpected header {other:?}"))),
    }
    lines.filter(|l| !l.trim().is_empty()).map(LossBreakdown::from_csv).collect()
}
