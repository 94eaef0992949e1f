//! Inner loops shared by the ops. Every reduction runs in `f64` with a fixed
//! lane layout, so results do not depend on how the caller batches work.

use crate::Real;

const LANES: usize = 8;

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let mut ca = a.chunks_exact(LANES);
    let mut cb = b.chunks_exact(LANES);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        for l in 0..LANES {
            acc[l] += xa[l].to_f64() * xb[l].to_f64();
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x.to_f64() * y.to_f64();
    }
    fold(acc) + tail
}

#[inline]
pub(crate) fn sum<T: Real>(a: &[T]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let mut chunks = a.chunks_exact(LANES);
    for xa in &mut chunks {
        for l in 0..LANES {
            acc[l] += xa[l].to_f64();
        }
    }
    let tail: f64 = chunks.remainder().iter().map(|x| x.to_f64()).sum();
    fold(acc) + tail
}

#[inline]
fn fold(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// `acc += alpha * x`
#[inline]
pub(crate) fn axpy<T: Real>(acc: &mut [f64], alpha: f64, x: &[T]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += alpha * v.to_f64();
    }
}

/// Four simultaneous `acc_r += alpha_r * x` updates sharing the loads of `x`.
#[inline]
pub(crate) fn axpy4<T: Real>(acc: [&mut [f64]; 4], alpha: [f64; 4], x: &[T]) {
    let [a0, a1, a2, a3] = acc;
    let n = x.len();
    let (a0, a1, a2, a3) = (&mut a0[..n], &mut a1[..n], &mut a2[..n], &mut a3[..n]);
    for i in 0..n {
        let v = x[i].to_f64();
        a0[i] += alpha[0] * v;
        a1[i] += alpha[1] * v;
        a2[i] += alpha[2] * v;
        a3[i] += alpha[3] * v;
    }
}

pub(crate) fn store<T: Real>(dst: &mut [T], src: &[f64]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = T::from_f64(s);
    }
}
