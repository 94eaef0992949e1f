//! Finite-difference audit of every differentiable operation and of the
//! composite generator objective, in 64-bit precision.

use iegan_tensor::{grad_check, GradCheckOptions, GradProbe, Graph, NormMode, Real, RunningMoments, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edge::{soft_edge, SOFT_EDGE_SIGMA};
use crate::losses::{discriminator_objective_var, edge_loss, feature_loss, pixel_l1, ContentLoss, FeatureConfig, FeatureExtractor, LossKind};
use crate::models::{DiscAe, DiscAeConfig, Generator, GeneratorConfig};
use crate::params::{is_buffer, Bound};
use crate::Result;

pub const OP_THRESHOLD: f64 = 1e-4;
pub const END_TO_END_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCase {
    pub name: String,
    pub max_relative_error: f64,
    pub threshold: f64,
    pub checked: usize,
}

impl GradCase {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.threshold
    }
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(lo..hi))
}

/// Values bounded away from zero, for ops with a kink there.
fn off_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| {
        let m: f64 = rng.gen_range(0.1..1.0);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// `sum(op(x) * projection)`; the projection gives each output element a
/// distinct weight.
struct Projected<F> {
    op: F,
    proj: Tensor<f64>,
}

impl<F> GradProbe for Projected<F>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> iegan_tensor::Result<Var>,
{
    fn eval<T: Real>(&self, g: &mut Graph<T>, x: &[Var]) -> iegan_tensor::Result<Var> {
        // The op closures are written for f64 graphs; the suite only runs in
        // 64-bit, so any other precision is a caller error.
        let g64 = (g as &mut dyn std::any::Any)
            .downcast_mut::<Graph<f64>>()
            .ok_or_else(|| iegan_tensor::TensorError::Contract { op: "gradsuite", detail: "64-bit graphs only".into() })?;
        let out = (self.op)(g64, x)?;
        let p = g64.constant(self.proj.clone());
        let w = g64.mul(out, p)?;
        g64.sum(w)
    }
}

fn case(name: &str, probe: &impl GradProbe, inputs: &[Tensor<f64>], opts: &GradCheckOptions, threshold: f64) -> Result<GradCase> {
    let r = grad_check(probe, inputs, opts)?;
    Ok(GradCase { name: name.to_string(), max_relative_error: r.max_relative_error, threshold, checked: r.checked })
}

fn op_case<F>(name: &str, rng: &mut ChaCha8Rng, out_shape: &[usize], inputs: &[Tensor<f64>], op: F) -> Result<GradCase>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> iegan_tensor::Result<Var>,
{
    let probe = Projected { op, proj: random(rng, out_shape, -1.0, 1.0) };
    case(name, &probe, inputs, &GradCheckOptions::default(), OP_THRESHOLD)
}

/// One case per graph operation.
pub fn op_cases(seed: u64) -> Result<Vec<GradCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = &mut rng;
    let x4 = |r: &mut ChaCha8Rng| random(r, &[2, 2, 4, 4], -1.0, 1.0);
    let mut out = Vec::new();

    let inputs = [random(r, &[1, 2, 5, 5], -1.0, 1.0), random(r, &[3, 2, 3, 3], -1.0, 1.0), random(r, &[3], -1.0, 1.0)];
    out.push(op_case("conv2d", r, &[1, 3, 5, 5], &inputs, |g, x| g.conv2d(x[0], x[1], Some(x[2]), 1, 1))?);
    out.push(op_case("conv2d/stride2", r, &[1, 3, 3, 3], &inputs, |g, x| g.conv2d(x[0], x[1], Some(x[2]), 2, 1))?);
    let inputs = [random(r, &[3, 2, 3, 3], -1.0, 1.0), random(r, &[2], 0.5, 1.5), random(r, &[2], -1.0, 1.0)];
    out.push(op_case("batch_norm", r, &[3, 2, 3, 3], &inputs, |g, x| {
        let mut m = RunningMoments::new(2);
        g.batch_norm(x[0], x[1], x[2], &mut m, NormMode::Train)
    })?);
    let k = [off_zero(r, &[2, 2, 4, 4])];
    out.push(op_case("leaky_relu", r, &[2, 2, 4, 4], &k, |g, x| g.leaky_relu(x[0], 0.2))?);
    out.push(op_case("relu", r, &[2, 2, 4, 4], &k, |g, x| g.relu(x[0]))?);
    out.push(op_case("abs", r, &[2, 2, 4, 4], &k, |g, x| g.abs(x[0]))?);
    let a = [x4(r)];
    out.push(op_case("tanh", r, &[2, 2, 4, 4], &a, |g, x| g.tanh(x[0]))?);
    out.push(op_case("sigmoid", r, &[2, 2, 4, 4], &a, |g, x| g.sigmoid(x[0]))?);
    out.push(op_case("softplus", r, &[2, 2, 4, 4], &a, |g, x| g.softplus(x[0]))?);
    out.push(op_case("square", r, &[2, 2, 4, 4], &a, |g, x| g.square(x[0]))?);
    out.push(op_case("affine", r, &[2, 2, 4, 4], &a, |g, x| g.affine(x[0], 0.5, 0.5))?);
    out.push(op_case("scale", r, &[2, 2, 4, 4], &a, |g, x| g.scale(x[0], -1.5))?);
    out.push(op_case("add_scalar", r, &[2, 2, 4, 4], &a, |g, x| g.add_scalar(x[0], 0.25))?);
    let pos = [random(r, &[2, 2, 4, 4], 0.2, 2.0)];
    out.push(op_case("sqrt", r, &[2, 2, 4, 4], &pos, |g, x| g.sqrt(x[0]))?);
    let ab = [x4(r), x4(r)];
    out.push(op_case("add", r, &[2, 2, 4, 4], &ab, |g, x| g.add(x[0], x[1]))?);
    out.push(op_case("sub", r, &[2, 2, 4, 4], &ab, |g, x| g.sub(x[0], x[1]))?);
    out.push(op_case("mul", r, &[2, 2, 4, 4], &ab, |g, x| g.mul(x[0], x[1]))?);
    out.push(op_case("combine", r, &[2, 2, 4, 4], &ab, |g, x| g.combine(&[(x[0], 0.4), (x[1], -1.3)], 0.2))?);
    out.push(op_case("sum", r, &[], &a, |g, x| g.sum(x[0]))?);
    out.push(op_case("mean", r, &[], &a, |g, x| g.mean(x[0]))?);
    let mx = [random(r, &[2, 1, 4, 4], 0.0, 3.0)];
    out.push(op_case("max_normalize", r, &[2, 1, 4, 4], &mx, |g, x| g.max_normalize(x[0], 1.0))?);
    let lin = [random(r, &[3, 5], -1.0, 1.0), random(r, &[4, 5], -1.0, 1.0), random(r, &[4], -1.0, 1.0)];
    out.push(op_case("linear", r, &[3, 4], &lin, |g, x| g.linear(x[0], x[1], Some(x[2])))?);
    let sh = [random(r, &[1, 8, 2, 3], -1.0, 1.0)];
    out.push(op_case("pixel_shuffle", r, &[1, 2, 4, 6], &sh, |g, x| g.pixel_shuffle(x[0], 2))?);
    let un = [random(r, &[1, 2, 4, 6], -1.0, 1.0)];
    out.push(op_case("pixel_unshuffle", r, &[1, 8, 2, 3], &un, |g, x| g.pixel_unshuffle(x[0], 2))?);
    let cc = [random(r, &[2, 1, 3, 3], -1.0, 1.0), random(r, &[2, 2, 3, 3], -1.0, 1.0)];
    out.push(op_case("concat_channels", r, &[2, 3, 3, 3], &cc, |g, x| g.concat_channels(x[0], x[1]))?);
    let sl = [random(r, &[2, 4, 3, 3], -1.0, 1.0)];
    out.push(op_case("slice_channels", r, &[2, 2, 3, 3], &sl, |g, x| g.slice_channels(x[0], 1, 2))?);
    out.push(op_case("reflect_pad", r, &[2, 2, 6, 6], &a, |g, x| g.reflect_pad(x[0], 1))?);
    out.push(op_case("avg_pool2", r, &[2, 2, 2, 2], &a, |g, x| g.avg_pool2(x[0]))?);
    out.push(op_case("upsample_nearest2", r, &[2, 2, 8, 8], &a, |g, x| g.upsample_nearest2(x[0]))?);
    out.push(op_case("reshape", r, &[4, 16], &a, |g, x| g.reshape(x[0], &[4, 16]))?);

    let img = [random(r, &[2, 3, 8, 8], 0.0, 1.0)];
    out.push(op_case("soft_edge", r, &[2, 1, 8, 8], &img, |g, x| {
        soft_edge(g, x[0], SOFT_EDGE_SIGMA).map_err(as_tensor_error)
    })?);
    Ok(out)
}

fn as_tensor_error(e: crate::CoreError) -> iegan_tensor::TensorError {
    match e {
        crate::CoreError::Tensor(t) => t,
        other => iegan_tensor::TensorError::Contract { op: "gradsuite", detail: other.to_string() },
    }
}

/// Small fixed networks shared by the end-to-end cases.
struct Fixture {
    loss: ContentLoss,
    fx: FeatureExtractor,
    disc: DiscAe,
    gen: Generator,
    gt: Tensor<f64>,
    lr: Tensor<f64>,
    l_real: f64,
    k: f64,
}

impl Fixture {
    fn new(seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = FeatureExtractor::build(&FeatureConfig::toy(), seed ^ 0xfeed)?;
        let loss = ContentLoss::new(fx.clone(), LossKind::CannyVgg, 0.4)?;
        let disc = DiscAe::build(DiscAeConfig { in_channels: 3, widths: [4, 4, 4] }, seed ^ 0xd15c)?;
        let gen = Generator::build(GeneratorConfig { base_channels: 2, depth: 1, p: 1, in_channels: 3, out_channels: 3 }, seed)?;
        Ok(Fixture {
            gt: random(&mut rng, &[1, 3, 8, 8], -0.9, 0.9),
            lr: random(&mut rng, &[1, 3, 4, 4], -0.9, 0.9),
            l_real: 0.7,
            k: 0.3,
            loss,
            fx,
            disc,
            gen,
        })
    }

    /// Generator objective for a generator output `gen`, with the
    /// discriminator held fixed.
    fn objective<T: Real>(&self, g: &mut Graph<T>, gen: Var) -> Result<Var> {
        let gt = g.constant(self.gt.cast());
        let db = self.disc.params.bind(g, false);
        let terms = self.loss.terms(g, gen, gt)?;
        let rec = self.disc.forward(g, &db, gen)?;
        let l_fake = self.loss.distance(g, gen, rec)?;
        let l_real = g.constant(Tensor::scalar(T::from_f64(self.l_real)));
        let l_d = discriminator_objective_var(g, l_real, l_fake, self.k)?;
        let r = self.loss.effective_r();
        Ok(g.combine(&[(terms.edge, r), (terms.content, 1.0 - r), (l_d, 1.0)], 0.0)?)
    }
}

struct ObjectiveWrtOutput<'a>(&'a Fixture);

impl GradProbe for ObjectiveWrtOutput<'_> {
    fn eval<T: Real>(&self, g: &mut Graph<T>, x: &[Var]) -> iegan_tensor::Result<Var> {
        self.0.objective(g, x[0]).map_err(as_tensor_error)
    }
}

/// Generator objective as a function of the LR input and every trainable
/// generator parameter.
struct ObjectiveWrtGenerator<'a> {
    fixture: &'a Fixture,
    names: Vec<String>,
}

impl GradProbe for ObjectiveWrtGenerator<'_> {
    fn eval<T: Real>(&self, g: &mut Graph<T>, x: &[Var]) -> iegan_tensor::Result<Var> {
        let f = self.fixture;
        let mut gen = f.gen.clone();
        let mut pairs: Vec<(String, Var)> = self.names.iter().cloned().zip(x[1..].iter().copied()).collect();
        for (name, t) in gen.params.iter().filter(|(n, _)| is_buffer(n)) {
            pairs.push((name.to_string(), g.constant(t.cast())));
        }
        let b = Bound::from_pairs(pairs);
        let out = gen.forward(g, &b, x[0], NormMode::Train).map_err(as_tensor_error)?;
        f.objective(g, out).map_err(as_tensor_error)
    }
}

struct LossProbe<'a> {
    fx: &'a FeatureExtractor,
    which: &'static str,
    target: Tensor<f64>,
}

impl GradProbe for LossProbe<'_> {
    fn eval<T: Real>(&self, g: &mut Graph<T>, x: &[Var]) -> iegan_tensor::Result<Var> {
        let t = g.constant(self.target.cast());
        let r = match self.which {
            "feature_loss" => feature_loss(g, self.fx, x[0], t),
            "edge_loss" => edge_loss(g, x[0], t),
            _ => pixel_l1(g, x[0], t),
        };
        r.map_err(as_tensor_error)
    }
}

/// Individual loss terms and the full generator objective on 8x8 fixtures.
pub fn end_to_end_cases(seed: u64) -> Result<Vec<GradCase>> {
    let f = Fixture::new(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let opts = GradCheckOptions { epsilon: 1e-6, ..Default::default() };
    let mut out = Vec::new();

    let a = random(&mut rng, &[1, 3, 8, 8], 0.05, 0.95);
    let b = random(&mut rng, &[1, 3, 8, 8], 0.05, 0.95);
    for which in ["feature_loss", "edge_loss", "pixel_l1"] {
        let probe = LossProbe { fx: &f.fx, which, target: b.clone() };
        out.push(case(which, &probe, std::slice::from_ref(&a), &opts, OP_THRESHOLD)?);
    }

    let gen = random(&mut rng, &[1, 3, 8, 8], -0.9, 0.9);
    out.push(case("f_loss/output", &ObjectiveWrtOutput(&f), &[gen], &opts, END_TO_END_THRESHOLD)?);

    let names: Vec<String> = f.gen.params.trainable_names().map(String::from).collect();
    let mut inputs = vec![f.lr.clone()];
    inputs.extend(names.iter().map(|n| f.gen.params.get(n).expect("listed").cast::<f64>()));
    let probe = ObjectiveWrtGenerator { fixture: &f, names };
    out.push(case("f_loss/generator", &probe, &inputs, &opts, END_TO_END_THRESHOLD)?);
    Ok(out)
}

/// The full suite: per-op cases followed by the end-to-end cases.
pub fn run(seed: u64) -> Result<Vec<GradCase>> {
    let mut cases = op_cases(seed)?;
    cases.extend(end_to_end_cases(seed)?);
    Ok(cases)
}
