//! Rearrangements, padding and 2x resampling on NCHW tensors.

use crate::graph::{Graph, Var};
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

/// `(N, C*s*s, H, W) -> (N, C, s*H, s*W)`; channel `c*s*s + i*s + j` lands at
/// sub-pixel offset `(i, j)`.
pub(crate) fn shuffle_raw<T: Real>(x: &Tensor<T>, s: usize) -> Tensor<T> {
    let [n, cs, h, w] = x.dims4("pixel_shuffle").expect("checked");
    let c = cs / (s * s);
    let (oh, ow) = (h * s, w * s);
    let src = x.data();
    let mut out = vec![T::ZERO; src.len()];
    for b in 0..n {
        for ch in 0..c {
            for i in 0..s {
                for j in 0..s {
                    let ic = ch * s * s + i * s + j;
                    for y in 0..h {
                        let srow = ((b * cs + ic) * h + y) * w;
                        let drow = ((b * c + ch) * oh + y * s + i) * ow;
                        for xx in 0..w {
                            out[drow + xx * s + j] = src[srow + xx];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&[n, c, oh, ow], out).expect("shape law")
}

/// Exact inverse of [`shuffle_raw`].
pub(crate) fn unshuffle_raw<T: Real>(x: &Tensor<T>, s: usize) -> Tensor<T> {
    let [n, c, oh, ow] = x.dims4("pixel_unshuffle").expect("checked");
    let (h, w, cs) = (oh / s, ow / s, c * s * s);
    let src = x.data();
    let mut out = vec![T::ZERO; src.len()];
    for b in 0..n {
        for ch in 0..c {
            for i in 0..s {
                for j in 0..s {
                    let ic = ch * s * s + i * s + j;
                    for y in 0..h {
                        let drow = ((b * cs + ic) * h + y) * w;
                        let srow = ((b * c + ch) * oh + y * s + i) * ow;
                        for xx in 0..w {
                            out[drow + xx] = src[srow + xx * s + j];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(&[n, cs, h, w], out).expect("shape law")
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    r as usize
}

pub(crate) fn concat_backward<T: Real>(g: &Graph<T>, a: Var, b: Var, g_out: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
    let [n, ca, h, w] = g.value(a).dims4("concat").expect("checked");
    let cb = g.shape(b)[1];
    let hw = h * w;
    let go = g_out.data();
    let mut da = Vec::with_capacity(n * ca * hw);
    let mut db = Vec::with_capacity(n * cb * hw);
    for img in 0..n {
        let base = img * (ca + cb) * hw;
        da.extend_from_slice(&go[base..base + ca * hw]);
        db.extend_from_slice(&go[base + ca * hw..base + (ca + cb) * hw]);
    }
    vec![
        (a, Tensor::new(&[n, ca, h, w], da).expect("shape")),
        (b, Tensor::new(&[n, cb, h, w], db).expect("shape")),
    ]
}

pub(crate) fn slice_backward<T: Real>(x: &Tensor<T>, start: usize, g_out: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.dims4("slice_channels").expect("checked");
    let len = g_out.shape()[1];
    let hw = h * w;
    let mut dx = vec![T::ZERO; x.len()];
    for img in 0..n {
        let src = &g_out.data()[img * len * hw..(img + 1) * len * hw];
        dx[(img * c + start) * hw..(img * c + start + len) * hw].copy_from_slice(src);
    }
    Tensor::new(x.shape(), dx).expect("shape")
}

pub(crate) fn reflect_pad_backward<T: Real>(x: &Tensor<T>, pad: usize, g_out: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.dims4("reflect_pad").expect("checked");
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut dx = vec![0.0f64; x.len()];
    let go = g_out.data();
    for plane in 0..n * c {
        for y in 0..ph {
            let sy = reflect(y as isize - pad as isize, h);
            for xx in 0..pw {
                let sx = reflect(xx as isize - pad as isize, w);
                dx[(plane * h + sy) * w + sx] += go[(plane * ph + y) * pw + xx].to_f64();
            }
        }
    }
    Tensor::from_fn(x.shape(), |i| T::from_f64(dx[i]))
}

pub(crate) fn avg_pool2_backward<T: Real>(x: &Tensor<T>, g_out: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.dims4("avg_pool2").expect("checked");
    let (oh, ow) = (h / 2, w / 2);
    let go = g_out.data();
    Tensor::from_fn(&[n, c, h, w], |i| {
        let plane = i / (h * w);
        let (y, xx) = ((i % (h * w)) / w, i % w);
        T::from_f64(0.25 * go[(plane * oh + y / 2) * ow + xx / 2].to_f64())
    })
}

pub(crate) fn upsample_backward<T: Real>(x: &Tensor<T>, g_out: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.dims4("upsample_nearest2").expect("checked");
    let (oh, ow) = (2 * h, 2 * w);
    let go = g_out.data();
    Tensor::from_fn(&[n, c, h, w], |i| {
        let plane = i / (h * w);
        let (y, xx) = ((i % (h * w)) / w, i % w);
        let base = plane * oh * ow;
        let at = |dy: usize, dx: usize| go[base + (2 * y + dy) * ow + 2 * xx + dx].to_f64();
        T::from_f64((at(0, 0) + at(0, 1)) + (at(1, 0) + at(1, 1)))
    })
}

impl<T: Real> Graph<T> {
    pub fn pixel_shuffle(&mut self, input: Var, factor: usize) -> Result<Var> {
        let [_, c, _, _] = self.value(input).dims4("pixel_shuffle")?;
        if factor == 0 || c % (factor * factor) != 0 {
            return Err(TensorError::dim(
                "pixel_shuffle",
                format!("{c} channels not divisible by factor^2 = {}", factor * factor),
            ));
        }
        let value = shuffle_raw(self.value(input), factor);
        self.push(value, Op::PixelShuffle { input, factor }, "pixel_shuffle")
    }

    /// Inverse rearrangement of [`Graph::pixel_shuffle`].
    pub fn pixel_unshuffle(&mut self, input: Var, factor: usize) -> Result<Var> {
        let [_, _, h, w] = self.value(input).dims4("pixel_unshuffle")?;
        if factor == 0 || h % factor != 0 || w % factor != 0 {
            return Err(TensorError::dim(
                "pixel_unshuffle",
                format!("spatial size {h}x{w} not divisible by {factor}"),
            ));
        }
        let value = unshuffle_raw(self.value(input), factor);
        self.push(value, Op::PixelUnshuffle { input, factor }, "pixel_unshuffle")
    }

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let [na, ca, ha, wa] = self.value(a).dims4("concat_channels")?;
        let [nb, cb, hb, wb] = self.value(b).dims4("concat_channels")?;
        if (na, ha, wa) != (nb, hb, wb) {
            return Err(TensorError::dim(
                "concat_channels",
                format!("{:?} vs {:?} disagree on N, H, W", self.shape(a), self.shape(b)),
            ));
        }
        let hw = ha * wa;
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(da.len() + db.len());
        for img in 0..na {
            out.extend_from_slice(&da[img * ca * hw..(img + 1) * ca * hw]);
            out.extend_from_slice(&db[img * cb * hw..(img + 1) * cb * hw]);
        }
        let value = Tensor::new(&[na, ca + cb, ha, wa], out)?;
        self.push(value, Op::Concat { a, b }, "concat_channels")
    }

    pub fn slice_channels(&mut self, input: Var, start: usize, len: usize) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("slice_channels")?;
        if len == 0 || start + len > c {
            return Err(TensorError::dim("slice_channels", format!("range {start}..{} of {c} channels", start + len)));
        }
        let hw = h * w;
        let src = self.value(input).data();
        let mut out = Vec::with_capacity(n * len * hw);
        for img in 0..n {
            out.extend_from_slice(&src[(img * c + start) * hw..(img * c + start + len) * hw]);
        }
        let value = Tensor::new(&[n, len, h, w], out)?;
        self.push(value, Op::SliceChannels { input, start }, "slice_channels")
    }

    /// Mirror padding that does not repeat the border sample (`dcb|abcd|cba`).
    pub fn reflect_pad(&mut self, input: Var, pad: usize) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("reflect_pad")?;
        if pad >= h || pad >= w {
            return Err(TensorError::dim("reflect_pad", format!("pad {pad} too large for {h}x{w}")));
        }
        let (ph, pw) = (h + 2 * pad, w + 2 * pad);
        let src = self.value(input).data();
        let mut out = vec![T::ZERO; n * c * ph * pw];
        for plane in 0..n * c {
            for y in 0..ph {
                let sy = reflect(y as isize - pad as isize, h);
                for x in 0..pw {
                    let sx = reflect(x as isize - pad as isize, w);
                    out[(plane * ph + y) * pw + x] = src[(plane * h + sy) * w + sx];
                }
            }
        }
        let value = Tensor::new(&[n, c, ph, pw], out)?;
        self.push(value, Op::ReflectPad { input, pad }, "reflect_pad")
    }

    /// Non-overlapping 2x2 mean pooling; H and W must be even.
    pub fn avg_pool2(&mut self, input: Var) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("avg_pool2")?;
        if h % 2 != 0 || w % 2 != 0 {
            return Err(TensorError::dim("avg_pool2", format!("spatial size {h}x{w} must be even")));
        }
        let (oh, ow) = (h / 2, w / 2);
        let src = self.value(input).data();
        let value = Tensor::from_fn(&[n, c, oh, ow], |i| {
            let plane = i / (oh * ow);
            let (y, x) = ((i % (oh * ow)) / ow, i % ow);
            let at = |dy: usize, dx: usize| src[(plane * h + 2 * y + dy) * w + 2 * x + dx].to_f64();
            T::from_f64(0.25 * ((at(0, 0) + at(0, 1)) + (at(1, 0) + at(1, 1))))
        });
        self.push(value, Op::AvgPool2 { input }, "avg_pool2")
    }

    pub fn upsample_nearest2(&mut self, input: Var) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("upsample_nearest2")?;
        let (oh, ow) = (2 * h, 2 * w);
        let src = self.value(input).data();
        let value = Tensor::from_fn(&[n, c, oh, ow], |i| {
            let plane = i / (oh * ow);
            let (y, x) = ((i % (oh * ow)) / ow, i % ow);
            src[(plane * h + y / 2) * w + x / 2]
        });
        self.push(value, Op::UpsampleNearest2 { input }, "upsample_nearest2")
    }

    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(input).reshape(shape)?;
        self.push(value, Op::Reshape { input }, "reshape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_shape_law() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::zeros(&[1, 4, 2, 2]));
        let y = g.pixel_shuffle(x, 2).unwrap();
        assert_eq!(g.shape(y), &[1, 1, 4, 4]);
    }

    #[test]
    fn shuffle_rejects_indivisible_channels() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::zeros(&[1, 6, 2, 2]));
        assert!(matches!(g.pixel_shuffle(x, 2), Err(TensorError::Dimension { .. })));
    }

    #[test]
    fn concat_then_slice_recovers_first() {
        let mut g = Graph::<f32>::new();
        let data = Tensor::from_fn(&[2, 2, 3, 3], |i| i as f32);
        let a = g.constant(data.clone());
        let b = g.constant(Tensor::zeros(&[2, 3, 3, 3]));
        let c = g.concat_channels(a, b).unwrap();
        assert_eq!(g.shape(c), &[2, 5, 3, 3]);
        let s = g.slice_channels(c, 0, 2).unwrap();
        assert_eq!(g.value(s), &data);
    }

    #[test]
    fn concat_sum_backward_is_ones() {
        let mut g = Graph::<f64>::new();
        let a = g.leaf(Tensor::zeros(&[1, 2, 4, 4]), true);
        let b = g.leaf(Tensor::zeros(&[1, 3, 4, 4]), true);
        let c = g.concat_channels(a, b).unwrap();
        let s = g.sum(c).unwrap();
        let grads = g.backward(s).unwrap();
        assert!(grads.get(a).unwrap().data().iter().all(|&v| v == 1.0));
        assert!(grads.get(b).unwrap().data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn concat_spatial_mismatch_rejected() {
        let mut g = Graph::<f32>::new();
        let a = g.constant(Tensor::zeros(&[1, 2, 4, 4]));
        let b = g.constant(Tensor::zeros(&[1, 2, 4, 5]));
        assert!(matches!(g.concat_channels(a, b), Err(TensorError::Dimension { .. })));
    }

    #[test]
    fn reflect_pad_mirrors_without_border_repeat() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::new(&[1, 1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap_or_else(|_| unreachable!()));
        // height 1 cannot be padded by 1
        assert!(g.reflect_pad(x, 1).is_err());
        let x = g.constant(Tensor::from_fn(&[1, 1, 3, 3], |i| i as f32));
        let y = g.reflect_pad(x, 1).unwrap();
        let v = g.value(y).data();
        assert_eq!(&v[0..5], &[4.0, 3.0, 4.0, 5.0, 4.0]);
    }

    #[test]
    fn pool_and_upsample_shapes() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::from_fn(&[1, 1, 2, 2], |i| i as f32));
        let p = g.avg_pool2(x).unwrap();
        assert_eq!(g.value(p).data(), &[1.5]);
        let u = g.upsample_nearest2(p).unwrap();
        assert_eq!(g.value(u).data(), &[1.5; 4]);
    }
}
