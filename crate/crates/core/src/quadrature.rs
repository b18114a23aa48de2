//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! Panels are bisected worst-error-first until the summed error estimate meets
//! `max(abs_tol, rel_tol * |I|)`. The per-panel error estimate follows QUADPACK's
//! QK15 heuristic, including its round-off floor, so integrals that cancel to
//! near zero terminate at the attainable precision instead of spinning.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_DEPTH: u32 = 40;
pub const DEFAULT_MAX_PANELS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
}

impl AdaptiveOptions {
    pub fn absolute(tol: f64) -> Self {
        AdaptiveOptions {
            abs_tol: tol,
            rel_tol: 0.0,
            max_depth: DEFAULT_MAX_DEPTH,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }

    pub fn relative(rel_tol: f64, abs_tol: f64) -> Self {
        AdaptiveOptions {
            abs_tol,
            rel_tol,
            max_depth: DEFAULT_MAX_DEPTH,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Result for a vector-valued integrand; `error` bounds every component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureN<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub evaluations: usize,
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn integrate_1d<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    integrate(&mut f, lo, hi, &AdaptiveOptions::absolute(tol))
}

pub fn integrate<F>(mut f: F, lo: f64, hi: f64, opts: &AdaptiveOptions) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    let r = try_integrate_vec(|x| Ok([f(x)]), lo, hi, opts)?;
    Ok(Quadrature {
        value: r.value[0],
        error: r.error,
        evaluations: r.evaluations,
    })
}

/// Fallible scalar integrand; the first integrand error aborts the integration.
pub fn try_integrate<F>(mut f: F, lo: f64, hi: f64, opts: &AdaptiveOptions) -> Result<Quadrature>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = try_integrate_vec(|x| f(x).map(|v| [v]), lo, hi, opts)?;
    Ok(Quadrature {
        value: r.value[0],
        error: r.error,
        evaluations: r.evaluations,
    })
}

struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    error: f64,
    resabs: f64,
    depth: u32,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Panel<N> {}

impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gk15<const N: usize, F>(f: &mut F, lo: f64, hi: f64, depth: u32) -> Result<Panel<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut resk = [0.0; N];
    let mut resg = [0.0; N];
    let mut resabs = [0.0; N];
    let mut fv1 = [[0.0; N]; 7];
    let mut fv2 = [[0.0; N]; 7];
    for c in 0..N {
        resk[c] = fc[c] * WGK[7];
        resg[c] = fc[c] * WG[3];
        resabs[c] = (fc[c] * WGK[7]).abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        for c in 0..N {
            resk[c] += WGK[j] * (f1[c] + f2[c]);
            resabs[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                resg[c] += WG[j / 2] * (f1[c] + f2[c]);
            }
        }
        fv1[j] = f1;
        fv2[j] = f2;
    }
    let mut value = [0.0; N];
    let mut error: f64 = 0.0;
    let mut total_abs: f64 = 0.0;
    for c in 0..N {
        let mean = resk[c] * 0.5;
        let mut resasc = WGK[7] * (fc[c] - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((fv1[j][c] - mean).abs() + (fv2[j][c] - mean).abs());
        }
        let width = half.abs();
        let result = resk[c] * half;
        let rabs = resabs[c] * width;
        let rasc = resasc * width;
        let mut err = ((resk[c] - resg[c]) * half).abs();
        if rasc != 0.0 && err != 0.0 {
            err = rasc * (200.0 * err / rasc).powf(1.5).min(1.0);
        }
        if rabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * rabs);
        }
        if !result.is_finite() || !err.is_finite() {
            return Err(Error::invalid(format!(
                "integrand is not finite on [{lo}, {hi}]"
            )));
        }
        value[c] = result;
        error = error.max(err);
        total_abs = total_abs.max(rabs);
    }
    Ok(Panel {
        lo,
        hi,
        value,
        error,
        resabs: total_abs,
        depth,
    })
}

/// Adaptive integration of an `N`-component integrand that may fail pointwise.
pub fn try_integrate_vec<const N: usize, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: &AdaptiveOptions,
) -> Result<QuadratureN<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
    }
    if !(opts.abs_tol >= 0.0 && opts.rel_tol >= 0.0) || (opts.abs_tol == 0.0 && opts.rel_tol == 0.0)
    {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }

    let root = gk15(&mut f, lo, hi, 0)?;
    let mut evaluations = 15;
    let mut sum = root.value;
    let mut err_sum = root.error;
    let mut abs_sum = root.resabs;
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel<N>> = Vec::new();
    heap.push(root);

    loop {
        let magnitude = sum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts
            .abs_tol
            .max(opts.rel_tol * magnitude)
            .max(100.0 * f64::EPSILON * abs_sum);
        if err_sum <= target {
            break;
        }
        if heap.len() + frozen.len() >= opts.max_panels {
            return Err(convergence(&heap, &frozen, err_sum, target));
        }
        let Some(worst) = heap.pop() else {
            return Err(convergence(&heap, &frozen, err_sum, target));
        };
        if worst.depth >= opts.max_depth {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = gk15(&mut f, worst.lo, mid, worst.depth + 1)?;
        let right = gk15(&mut f, mid, worst.hi, worst.depth + 1)?;
        evaluations += 30;
        for c in 0..N {
            sum[c] += left.value[c] + right.value[c] - worst.value[c];
        }
        err_sum += left.error + right.error - worst.error;
        abs_sum += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
    }

    let (value, error) = totals(&heap, &frozen);
    Ok(QuadratureN {
        value,
        error,
        evaluations,
    })
}

fn totals<const N: usize>(heap: &BinaryHeap<Panel<N>>, frozen: &[Panel<N>]) -> ([f64; N], f64) {
    let mut panels: Vec<&Panel<N>> = heap.iter().chain(frozen.iter()).collect();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut value = [0.0; N];
    let mut error = 0.0;
    for p in panels {
        for c in 0..N {
            value[c] += p.value[c];
        }
        error += p.error;
    }
    (value, error)
}

fn convergence<const N: usize>(
    heap: &BinaryHeap<Panel<N>>,
    frozen: &[Panel<N>],
    err: f64,
    target: f64,
) -> Error {
    let (value, _) = totals(heap, frozen);
    Error::Convergence {
        estimate: value[0],
        error: err,
        tolerance: target,
    }
}
