use iegan_core::models::{DiscAe, DiscAeConfig, DiscBinary, DiscBinaryConfig, Generator, GeneratorConfig};
use iegan_core::params::ParamSet;
use iegan_core::trainer::{Adam, AdamConfig};
use iegan_imaging::synth;
use iegan_tensor::{Graph, NormMode, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patches(count: usize, size: usize, seed: u64) -> Vec<Tensor<f32>> {
    (0..count)
        .map(|i| {
            let img = synth::scene(size, size, seed + i as u64);
            Tensor::from_fn(&[1, 3, size, size], |j| {
                2.0 * img.get(j % size, (j / size) % size, j / (size * size)) - 1.0
            })
        })
        .collect()
}

fn stack(items: &[&Tensor<f32>]) -> Tensor<f32> {
    let mut shape = items[0].shape().to_vec();
    shape[0] = items.len();
    let data: Vec<f32> = items.iter().flat_map(|t| t.data().iter().copied()).collect();
    Tensor::new(&shape, data).unwrap()
}

fn step(params: &mut ParamSet, adam: &mut Adam, t: u64, loss: impl FnOnce(&mut Graph<f32>, &iegan_core::params::Bound) -> Var) -> f64 {
    let mut g = Graph::<f32>::new();
    let b = params.bind(&mut g, true);
    let l = loss(&mut g, &b);
    let value = g.value(l).item() as f64;
    let grads = g.backward(l).unwrap();
    adam.update(params, &b.gradients(&grads), t).unwrap();
    value
}

fn ae_error(d: &DiscAe, data: &[Tensor<f32>]) -> f64 {
    let refs: Vec<_> = data.iter().collect();
    let mut g = Graph::<f32>::new();
    let b = d.params.bind(&mut g, false);
    let x = g.constant(stack(&refs));
    let y = d.forward(&mut g, &b, x).unwrap();
    let diff = g.sub(y, x).unwrap();
    let a = g.abs(diff).unwrap();
    let m = g.mean(a).unwrap();
    g.value(m).item() as f64
}

#[test]
fn autoencoder_learns_to_reconstruct() {
    let data = patches(50, 16, 300);
    let mut d = DiscAe::build(DiscAeConfig { in_channels: 3, widths: [8, 8, 16] }, 1).unwrap();
    let before = ae_error(&d, &data);
    let mut adam = Adam::new(AdamConfig { lr: 1e-3, ..AdamConfig::default() }, &d.params);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 1..=200 {
        let batch: Vec<_> = (0..8).map(|_| &data[rng.gen_range(0..data.len())]).collect();
        let x = stack(&batch);
        let arch = d.clone();
        step(&mut d.params, &mut adam, t, |g, b| {
            let x = g.constant(x);
            let y = arch.forward(g, b, x).unwrap();
            let diff = g.sub(y, x).unwrap();
            let a = g.abs(diff).unwrap();
            g.mean(a).unwrap()
        });
    }
    let after = ae_error(&d, &data);
    assert!(after < 0.75 * before, "reconstruction error {before} -> {after}");
}

#[test]
fn binary_discriminator_separates_real_from_noise() {
    let real = patches(32, 16, 700);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise: Vec<_> = (0..32).map(|_| Tensor::from_fn(&[1, 3, 16, 16], |_| rng.gen_range(-1.0f32..1.0))).collect();
    let mut d = DiscBinary::build(DiscBinaryConfig { in_channels: 3, widths: [4, 8, 8], hidden: 16, patch: 16 }, 3).unwrap();
    let mut adam = Adam::new(AdamConfig { lr: 1e-3, ..AdamConfig::default() }, &d.params);
    for t in 1..=200u64 {
        let i = (t as usize * 4) % 32;
        let r = stack(&real[i..i + 4].iter().collect::<Vec<_>>());
        let f = stack(&noise[i..i + 4].iter().collect::<Vec<_>>());
        let arch = d.clone();
        step(&mut d.params, &mut adam, t, |g, b| {
            let (r, f) = (g.constant(r), g.constant(f));
            let lr = arch.logits(g, b, r).unwrap();
            let lf = arch.logits(g, b, f).unwrap();
            let neg = g.scale(lr, -1.0).unwrap();
            let sr = g.softplus(neg).unwrap();
            let sf = g.softplus(lf).unwrap();
            let total = g.add(sr, sf).unwrap();
            g.mean(total).unwrap()
        });
    }
    let mean = |v: Vec<f32>| v.iter().sum::<f32>() / v.len() as f32;
    let p_real = mean(d.probability(&stack(&real.iter().collect::<Vec<_>>())).unwrap());
    let p_noise = mean(d.probability(&stack(&noise.iter().collect::<Vec<_>>())).unwrap());
    assert!(p_real - p_noise > 0.3, "real {p_real} noise {p_noise}");
}

#[test]
fn generator_output_stays_in_range() {
    let x = stack(&patches(2, 8, 40).iter().collect::<Vec<_>>());
    for seed in 0..100 {
        let mut gen = Generator::build(GeneratorConfig { base_channels: 4, depth: 2, p: seed as usize % 3, ..Default::default() }, seed).unwrap();
        let mut g = Graph::<f32>::new();
        let b = gen.params.bind(&mut g, false);
        let v = g.constant(x.clone());
        let y = gen.forward(&mut g, &b, v, NormMode::Train).unwrap();
        let out = g.value(y);
        assert_eq!(out.shape(), &[2, 3, 8 << (seed % 3), 8 << (seed % 3)]);
        assert!(out.data().iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)), "seed {seed}");
    }
}

#[test]
fn skip_connection_carries_gradient() {
    let mut gen = Generator::build(GeneratorConfig { base_channels: 4, depth: 2, p: 0, ..Default::default() }, 9).unwrap();
    let x = stack(&patches(2, 8, 41).iter().collect::<Vec<_>>());
    let mut g = Graph::<f64>::new();
    let b = gen.params.bind(&mut g, true);
    let v = g.constant(x.cast());
    let y = gen.forward(&mut g, &b, v, NormMode::Train).unwrap();
    let l = g.mean(y).unwrap();
    let grads = g.backward(l).unwrap();
    // dec0.conv1 sees [upsampled deeper features | enc0 skip]; the skip
    // channels are the last `base` inputs of its weight.
    let w = grads.get(b.get("dec0.conv1.weight").unwrap()).unwrap();
    let (cout, cin) = (w.shape()[0], w.shape()[1]);
    let skip_norm: f64 = (0..cout)
        .flat_map(|o| (cin - 4..cin).map(move |i| (o, i)))
        .flat_map(|(o, i)| w.data()[(o * cin + i) * 9..(o * cin + i + 1) * 9].to_vec())
        .map(|v| v * v)
        .sum();
    assert!(skip_norm > 0.0);
    let first = grads.get(b.get("enc0.conv1.weight").unwrap()).unwrap();
    assert!(first.data().iter().any(|v| *v != 0.0));
}
