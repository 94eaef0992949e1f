//! 2-D convolution (cross-correlation) via per-image im2col.

use crate::graph::{Graph, Var};
use crate::kernels::{axpy, axpy4, dot, store, sum};
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    k: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeom {
    fn ckk(&self) -> usize {
        self.c * self.k * self.k
    }
    fn positions(&self) -> usize {
        self.ho * self.wo
    }
}

pub(crate) struct Conv2dSaved<T> {
    pub input: Var,
    pub weight: Var,
    pub bias: Option<Var>,
    geom: ConvGeom,
    /// im2col buffers per image, kept when the weight needs a gradient.
    cols: Option<Vec<Vec<T>>>,
}

fn im2col<T: Real>(x: &[T], g: &ConvGeom, col: &mut [T]) {
    let p = g.positions();
    let (k, s, pad) = (g.k, g.stride, g.pad as isize);
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ki in 0..k {
            for kj in 0..k {
                let row = ((c * k + ki) * k + kj) * p;
                for oh in 0..g.ho {
                    let dst = &mut col[row + oh * g.wo..row + (oh + 1) * g.wo];
                    let ih = (oh * s + ki) as isize - pad;
                    if ih < 0 || ih >= g.h as isize {
                        dst.fill(T::ZERO);
                        continue;
                    }
                    let src = &plane[ih as usize * g.w..(ih as usize + 1) * g.w];
                    for (ow, d) in dst.iter_mut().enumerate() {
                        let iw = (ow * s + kj) as isize - pad;
                        *d = if iw >= 0 && iw < g.w as isize {
                            src[iw as usize]
                        } else {
                            T::ZERO
                        };
                    }
                }
            }
        }
    }
}

/// Scatter-adds one im2col row back onto the input-gradient plane.
fn col2im_row(row: &[f64], g: &ConvGeom, c: usize, ki: usize, kj: usize, dx: &mut [f64]) {
    let pad = g.pad as isize;
    let plane = &mut dx[c * g.h * g.w..(c + 1) * g.h * g.w];
    for oh in 0..g.ho {
        let ih = (oh * g.stride + ki) as isize - pad;
        if ih < 0 || ih >= g.h as isize {
            continue;
        }
        let dst = &mut plane[ih as usize * g.w..(ih as usize + 1) * g.w];
        for ow in 0..g.wo {
            let iw = (ow * g.stride + kj) as isize - pad;
            if iw >= 0 && iw < g.w as isize {
                dst[iw as usize] += row[oh * g.wo + ow];
            }
        }
    }
}

/// `out[o, :] = bias[o] + sum_k weight[o, k] * col[k, :]` for one image.
fn gemm_forward<T: Real>(weight: &[T], bias: Option<&[T]>, col: &[T], g: &ConvGeom, out: &mut [T]) {
    let (ckk, p) = (g.ckk(), g.positions());
    let mut acc = vec![0.0f64; 4 * p];
    let mut o = 0;
    while o < g.o {
        let rows = (g.o - o).min(4);
        for r in 0..4 {
            let b = if r < rows { bias.map_or(0.0, |b| b[o + r].to_f64()) } else { 0.0 };
            acc[r * p..(r + 1) * p].fill(b);
        }
        let (a01, a23) = acc.split_at_mut(2 * p);
        let (a0, a1) = a01.split_at_mut(p);
        let (a2, a3) = a23.split_at_mut(p);
        for kk in 0..ckk {
            let crow = &col[kk * p..(kk + 1) * p];
            let wv = |r: usize| if r < rows { weight[(o + r) * ckk + kk].to_f64() } else { 0.0 };
            axpy4([&mut *a0, &mut *a1, &mut *a2, &mut *a3], [wv(0), wv(1), wv(2), wv(3)], crow);
        }
        for r in 0..rows {
            store(&mut out[(o + r) * p..(o + r + 1) * p], &acc[r * p..(r + 1) * p]);
        }
        o += rows;
    }
}

impl<T: Real> Graph<T> {
    /// Zero-padded 2-D cross-correlation. `input` is NCHW, `weight` is
    /// `[out, in, k, k]` with odd `k`, `bias` is `[out]`.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("conv2d")?;
        let ws = self.value(weight).shape();
        let &[o, ci, kh, kw] = ws else {
            return Err(TensorError::dim("conv2d", format!("weight must be [O, I, K, K], got {ws:?}")));
        };
        if ci != c || kh != kw {
            return Err(TensorError::dim(
                "conv2d",
                format!("input {:?} incompatible with weight {:?}", self.shape(input), ws),
            ));
        }
        if kh % 2 == 0 {
            return Err(TensorError::contract("conv2d", format!("kernel size must be odd, got {kh}")));
        }
        if !(stride == 1 || stride == 2) {
            return Err(TensorError::contract("conv2d", format!("stride must be 1 or 2, got {stride}")));
        }
        if let Some(b) = bias {
            if self.shape(b) != [o] {
                return Err(TensorError::dim(
                    "conv2d",
                    format!("bias {:?} does not match weight {:?}", self.shape(b), ws),
                ));
            }
        }
        if h + 2 * padding < kh || w + 2 * padding < kw {
            return Err(TensorError::dim(
                "conv2d",
                format!("input {:?} smaller than kernel {:?} with padding {padding}", self.shape(input), ws),
            ));
        }
        let ho = (h + 2 * padding - kh) / stride + 1;
        let wo = (w + 2 * padding - kw) / stride + 1;
        let geom = ConvGeom { n, c, h, w, o, k: kh, stride, pad: padding, ho, wo };

        let keep_cols = self.requires_grad(weight);
        let x = self.value(input).data();
        let wt = self.value(weight).data();
        let bs = bias.map(|b| self.value(b).data());
        let (ckk, p) = (geom.ckk(), geom.positions());
        let mut out = vec![T::ZERO; n * o * p];
        let mut cols = Vec::with_capacity(if keep_cols { n } else { 0 });
        let mut col = vec![T::ZERO; ckk * p];
        for img in 0..n {
            im2col(&x[img * c * h * w..(img + 1) * c * h * w], &geom, &mut col);
            gemm_forward(wt, bs, &col, &geom, &mut out[img * o * p..(img + 1) * o * p]);
            if keep_cols {
                cols.push(col.clone());
            }
        }
        let value = Tensor::new(&[n, o, ho, wo], out)?;
        let saved = Conv2dSaved { input, weight, bias, geom, cols: keep_cols.then_some(cols) };
        self.push(value, Op::Conv2d(saved), "conv2d")
    }
}

pub(crate) fn backward<T: Real>(g: &Graph<T>, s: &Conv2dSaved<T>, g_out: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
    let geom = s.geom;
    let (ckk, p) = (geom.ckk(), geom.positions());
    let x = g.value(s.input).data();
    let wt = g.value(s.weight).data();
    let go = g_out.data();
    let mut result = Vec::new();

    if let Some(b) = s.bias.filter(|&b| g.requires_grad(b)) {
        let mut db = vec![0.0f64; geom.o];
        for img in 0..geom.n {
            for (o, d) in db.iter_mut().enumerate() {
                let base = (img * geom.o + o) * p;
                *d += sum(&go[base..base + p]);
            }
        }
        result.push((b, Tensor::from_fn(&[geom.o], |i| T::from_f64(db[i]))));
    }

    if g.requires_grad(s.weight) {
        let mut dw = vec![0.0f64; geom.o * ckk];
        let mut scratch = Vec::new();
        for img in 0..geom.n {
            let col: &[T] = match &s.cols {
                Some(cols) => &cols[img],
                None => {
                    scratch.resize(ckk * p, T::ZERO);
                    im2col(&x[img * geom.c * geom.h * geom.w..(img + 1) * geom.c * geom.h * geom.w], &geom, &mut scratch);
                    &scratch
                }
            };
            for o in 0..geom.o {
                let grow = &go[(img * geom.o + o) * p..(img * geom.o + o + 1) * p];
                for kk in 0..ckk {
                    dw[o * ckk + kk] += dot(grow, &col[kk * p..(kk + 1) * p]);
                }
            }
        }
        let shape = g.shape(s.weight).to_vec();
        result.push((s.weight, Tensor::from_fn(&shape, |i| T::from_f64(dw[i]))));
    }

    if g.requires_grad(s.input) {
        let chw = geom.c * geom.h * geom.w;
        let mut dx_all = vec![T::ZERO; geom.n * chw];
        let mut dx = vec![0.0f64; chw];
        let mut row = vec![0.0f64; p];
        for img in 0..geom.n {
            dx.fill(0.0);
            let gimg = &go[img * geom.o * p..(img + 1) * geom.o * p];
            for c in 0..geom.c {
                for ki in 0..geom.k {
                    for kj in 0..geom.k {
                        let kk = (c * geom.k + ki) * geom.k + kj;
                        row.fill(0.0);
                        for o in 0..geom.o {
                            axpy(&mut row, wt[o * ckk + kk].to_f64(), &gimg[o * p..(o + 1) * p]);
                        }
                        col2im_row(&row, &geom, c, ki, kj, &mut dx);
                    }
                }
            }
            store(&mut dx_all[img * chw..(img + 1) * chw], &dx);
        }
        let shape = g.shape(s.input).to_vec();
        result.push((s.input, Tensor::new(&shape, dx_all).expect("input shape")));
    }
    result
}
