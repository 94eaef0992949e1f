//! Central finite-difference gradient checking.

use crate::{Graph, Real, Result, Tensor, Var};

/// A scalar-valued computation that can be recorded at either precision.
pub trait GradProbe {
    fn eval<T: Real>(&self, g: &mut Graph<T>, inputs: &[Var]) -> Result<Var>;
}

/// Precision of the analytic pass. The numeric reference always runs in `f64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    pub precision: Precision,
    /// Upper bound on checked coordinates per input; evenly strided when hit.
    pub max_coords: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-4,
            precision: Precision::F64,
            max_coords: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// (input index, flat coordinate, analytic, numeric) of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub checked: usize,
}

fn analytic<T: Real, P: GradProbe>(probe: &P, inputs: &[Tensor<f64>]) -> Result<Vec<Tensor<f64>>> {
    let mut g = Graph::<T>::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.cast(), true)).collect();
    let loss = probe.eval(&mut g, &vars)?;
    let grads = g.backward(loss)?;
    Ok(vars.iter().map(|&v| grads.get(v).expect("leaf gradient").cast()).collect())
}

fn value<P: GradProbe>(probe: &P, inputs: &[Tensor<f64>]) -> Result<f64> {
    let mut g = Graph::<f64>::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let loss = probe.eval(&mut g, &vars)?;
    Ok(g.value(loss).item())
}

/// Max over checked coordinates of
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<P: GradProbe>(probe: &P, inputs: &[Tensor<f64>], opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let grads = match opts.precision {
        Precision::F32 => analytic::<f32, P>(probe, inputs)?,
        Precision::F64 => analytic::<f64, P>(probe, inputs)?,
    };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut report = GradCheckReport { max_relative_error: 0.0, worst: None, checked: 0 };
    for (which, grad) in grads.iter().enumerate() {
        let len = grad.len();
        let count = opts.max_coords.map_or(len, |m| m.min(len));
        for step in 0..count {
            let idx = step * len / count;
            let orig = work[which].data()[idx];
            work[which].data_mut()[idx] = orig + opts.epsilon;
            let plus = value(probe, &work)?;
            work[which].data_mut()[idx] = orig - opts.epsilon;
            let minus = value(probe, &work)?;
            work[which].data_mut()[idx] = orig;

            let numeric = (plus - minus) / (2.0 * opts.epsilon);
            let a = grad.data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((which, idx, a, numeric));
            }
        }
    }
    Ok(report)
}
