//! Alternating optimization of the generator and discriminator, checkpoints
//! and the run loop.

mod adam;
mod checkpoint;
mod config;
mod run;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_generator, CHECKPOINT_FORMAT};
pub use config::{ReconMode, TrainConfig};
pub use run::{read_log, replay_k, resume, train, RunSummary, FINAL_CHECKPOINT, LOG_FILE};

use iegan_tensor::{Graph, NormMode, Var};

use crate::data::Batch;
use crate::losses::{
    discriminator_objective_var, reconstruction_losses, update_k, ContentLoss, FeatureExtractor, KState, LossBreakdown,
};
use crate::models::{DiscAe, DiscBinary, DiscKind, Discriminator, Generator};
use crate::params::Bound;
use crate::{CoreError, Result};

fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn build_feature_extractor(config: &TrainConfig) -> Result<FeatureExtractor> {
    match &config.feature_weights {
        Some(path) => FeatureExtractor::import(path, Some(config.features.tap)),
        None => FeatureExtractor::build(&config.features, config.feature_seed),
    }
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub config: TrainConfig,
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub adam_g: Adam,
    pub adam_d: Adam,
    pub k: KState,
    /// Completed steps.
    pub step: u64,
    pub loss: ContentLoss,
    /// Verify after every update that only the intended network changed.
    pub audit: bool,
}

impl PartialEq for TrainState {
    fn eq(&self, o: &Self) -> bool {
        self.config == o.config
            && self.generator == o.generator
            && self.discriminator == o.discriminator
            && self.adam_g == o.adam_g
            && self.adam_d == o.adam_d
            && self.k.k.to_bits() == o.k.k.to_bits()
            && self.k.lambda == o.k.lambda
            && self.k.gamma == o.k.gamma
            && self.step == o.step
    }
}

impl TrainState {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let generator = Generator::build(config.generator, derive_seed(config.seed, 1))?;
        let discriminator = match config.disc_kind {
            DiscKind::Dv1 => Discriminator::Ae(DiscAe::build(config.disc_ae(), derive_seed(config.seed, 2))?),
            DiscKind::Dv2 => Discriminator::Binary(DiscBinary::build(config.disc_binary(), derive_seed(config.seed, 2))?),
        };
        let loss = ContentLoss::new(build_feature_extractor(&config)?, config.loss_kind, config.r)?;
        Ok(TrainState {
            adam_g: Adam::new(config.adam, &generator.params),
            adam_d: Adam::new(config.adam, discriminator.params()),
            k: config.k_state(),
            step: 0,
            generator,
            discriminator,
            loss,
            audit: false,
            config,
        })
    }

    /// One generator update and one discriminator update on `batch`, both
    /// computed from the parameters at the start of the step, followed by the
    /// controller update. Returns the logged breakdown.
    pub fn train_step(&mut self, batch: &Batch) -> Result<LossBreakdown> {
        let step = self.step + 1;
        let k = self.k.k;
        let r = self.loss.effective_r();

        let mut gg = Graph::<f32>::new();
        let gb = self.generator.params.bind(&mut gg, true);
        let lr = gg.constant(batch.lr.clone());
        let gt = gg.constant(batch.gt.clone());
        let gen = self.generator.forward(&mut gg, &gb, lr, NormMode::Train)?;
        let gen_gt = if self.config.recon_mode == ReconMode::StrictLiteral {
            Some(self.generator.forward(&mut gg, &gb, gt, NormMode::Train)?)
        } else {
            None
        };

        let mut gd = Graph::<f32>::new();
        let db = self.discriminator.params().bind(&mut gd, true);
        let gt_d = gd.constant(batch.gt.clone());
        let gen_d = gd.constant(gg.value(gen).clone());
        let (d_loss, l_real, l_fake) = match &self.discriminator {
            Discriminator::Ae(d) => {
                let (lr_v, lf_v) = match gen_gt {
                    None => reconstruction_losses(&mut gd, d, &db, &self.loss, gt_d, gen_d)?,
                    Some(gen_gt) => {
                        let lr_d = gd.constant(batch.lr.clone());
                        let gen_gt_d = gd.constant(gg.value(gen_gt).clone());
                        strict_pair(&mut gd, d, &db, &self.loss, gt_d, gen_gt_d, lr_d, gen_d)?
                    }
                };
                let obj = discriminator_objective_var(&mut gd, lr_v, lf_v, k)?;
                (obj, gd.value(lr_v).item() as f64, gd.value(lf_v).item() as f64)
            }
            Discriminator::Binary(d) => {
                let real = d.logits(&mut gd, &db, gt_d)?;
                let fake = d.logits(&mut gd, &db, gen_d)?;
                let neg = gd.scale(real, -1.0)?;
                let sp_real = gd.softplus(neg)?;
                let l_real = gd.mean(sp_real)?;
                let sp_fake = gd.softplus(fake)?;
                let l_fake = gd.mean(sp_fake)?;
                let obj = gd.add(l_real, l_fake)?;
                (obj, gd.value(l_real).item() as f64, gd.value(l_fake).item() as f64)
            }
        };
        let d_grads = db.gradients(&gd.backward(d_loss)?);
        drop(gd);

        let db_g = self.discriminator.params().bind(&mut gg, false);
        let terms = self.loss.terms(&mut gg, gen, gt)?;
        let adversarial = match &self.discriminator {
            Discriminator::Ae(d) => {
                let (lr_v, lf_v) = match gen_gt {
                    None => {
                        let rec = d.forward(&mut gg, &db_g, gen)?;
                        let lf = self.loss.distance(&mut gg, gen, rec)?;
                        let lr_v = gg.constant(iegan_tensor::Tensor::scalar(l_real as f32));
                        (lr_v, lf)
                    }
                    Some(gen_gt) => strict_pair(&mut gg, d, &db_g, &self.loss, gt, gen_gt, lr, gen)?,
                };
                discriminator_objective_var(&mut gg, lr_v, lf_v, k)?
            }
            Discriminator::Binary(d) => {
                let logits = d.logits(&mut gg, &db_g, gen)?;
                let neg = gg.scale(logits, -1.0)?;
                let sp = gg.softplus(neg)?;
                gg.mean(sp)?
            }
        };
        let f = gg.combine(&[(terms.edge, r), (terms.content, 1.0 - r), (adversarial, 1.0)], 0.0)?;
        let next_k = update_k(self.k, l_real, l_fake);
        let value = |v: Var| gg.value(v).item() as f64;
        let breakdown = LossBreakdown {
            step,
            edge: value(terms.edge),
            feature: value(terms.content),
            l_d: value(adversarial),
            f_loss: value(f),
            l_real,
            l_fake,
            k: next_k.k,
            r,
        };
        if !breakdown.is_finite() || !l_real.is_finite() || !l_fake.is_finite() {
            return Err(CoreError::NonFinite { what: "loss", step, detail: format!("{breakdown:?}") });
        }
        let g_grads = gb.gradients(&gg.backward(f)?);

        let d_before = self.audit.then(|| self.discriminator.params().digest());
        self.adam_g.update(&mut self.generator.params, &g_grads, step)?;
        if let Some(before) = d_before {
            if before != self.discriminator.params().digest() {
                return Err(CoreError::contract("train_step", "generator update touched discriminator parameters"));
            }
        }
        let g_before = self.audit.then(|| self.generator.params.digest());
        self.adam_d.update(self.discriminator.params_mut(), &d_grads, step)?;
        if let Some(before) = g_before {
            if before != self.generator.params.digest() {
                return Err(CoreError::contract("train_step", "discriminator update touched generator parameters"));
            }
        }
        self.k = next_k;
        self.step = step;
        Ok(breakdown)
    }
}

/// Literal pairing: `(dist(D(gt), D(G(gt))), dist(D(lr), D(G(lr))))`.
#[allow(clippy::too_many_arguments)]
fn strict_pair(
    g: &mut Graph<f32>,
    d: &DiscAe,
    b: &Bound,
    loss: &ContentLoss,
    gt: Var,
    gen_gt: Var,
    lr: Var,
    gen_lr: Var,
) -> Result<(Var, Var)> {
    let (a, bb) = (d.forward(g, b, gt)?, d.forward(g, b, gen_gt)?);
    let l_real = loss.distance(g, a, bb)?;
    let (c, e) = (d.forward(g, b, lr)?, d.forward(g, b, gen_lr)?);
    let l_fake = loss.distance(g, c, e)?;
    Ok((l_real, l_fake))
}
