//! Comparison optimizers: uniform random search and Powell's direction-set
//! method with a bracketing golden-section line search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::trace::{EventTag, RunStatus, Trace, TraceRecorder};

const GOLDEN: f64 = 1.618_033_988_749_895;
const INV_GOLDEN: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub bounds: Vec<(f64, f64)>,
    pub budget: usize,
    pub seed: u64,
    /// Powell start in the caller's units; the box centre when `None`.
    pub start: Option<Vec<f64>>,
    /// Scaled units.
    pub line_tolerance: f64,
    pub max_line_evals: usize,
    /// First trial step of the bracketing phase, scaled units.
    pub initial_step: f64,
}

impl BaselineConfig {
    pub fn new(bounds: Vec<(f64, f64)>, budget: usize, seed: u64) -> Self {
        Self {
            bounds,
            budget,
            seed,
            start: None,
            line_tolerance: 1e-6,
            max_line_evals: 40,
            initial_step: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.bounds.is_empty() || self.bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::Config("every bound must satisfy lo < hi".into()));
        }
        if let Some(s) = &self.start {
            if s.len() != self.bounds.len() {
                return Err(Error::Config("start point has the wrong dimension".into()));
            }
            let inside = s.iter().zip(&self.bounds).all(|(x, (lo, hi))| lo <= x && x <= hi);
            if !inside {
                return Err(Error::Config("start point lies outside the bounds".into()));
            }
        }
        if !(self.line_tolerance > 0.0) || self.max_line_evals < 3 || !(self.initial_step > 0.0) {
            return Err(Error::Config("invalid line-search settings".into()));
        }
        Ok(())
    }
}

/// `budget` independent uniform points, each evaluated once.
pub fn random_search<F>(mut cost: F, config: &BaselineConfig) -> Result<Trace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut recorder = TraceRecorder::new(Trace::new("random_search", config.seed));
    for _ in 0..config.budget {
        let x: Vec<f64> = config
            .bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..=hi))
            .collect();
        match cost(&x) {
            Ok(v) => recorder.record(&x, v, EventTag::None),
            Err(e) => return Ok(recorder.finish(RunStatus::Aborted(e.to_string()))),
        }
    }
    Ok(recorder.finish(RunStatus::Completed))
}

enum Stop {
    Budget,
    Failed(String),
}

/// Budgeted evaluator in scaled coordinates.
struct Scaled<'a, F> {
    cost: F,
    bounds: &'a [(f64, f64)],
    budget: usize,
    recorder: TraceRecorder,
}

impl<F> Scaled<'_, F>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn eval(&mut self, x: &[f64]) -> std::result::Result<f64, Stop> {
        if self.recorder.trace.len() >= self.budget {
            return Err(Stop::Budget);
        }
        let point: Vec<f64> = x
            .iter()
            .zip(self.bounds)
            .map(|(&s, &(lo, hi))| (lo + s.clamp(0.0, 1.0) * (hi - lo)).clamp(lo, hi))
            .collect();
        let v = (self.cost)(&point).map_err(|e| Stop::Failed(e.to_string()))?;
        self.recorder.record(&point, v, EventTag::None);
        Ok(v)
    }
}

fn along(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Feasible step interval `[t_lo, t_hi]` keeping `x + t·d` in the unit box.
fn feasible_interval(x: &[f64], d: &[f64]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&xi, &di) in x.iter().zip(d) {
        if di > 0.0 {
            lo = lo.max(-xi / di);
            hi = hi.min((1.0 - xi) / di);
        } else if di < 0.0 {
            lo = lo.max((1.0 - xi) / di);
            hi = hi.min(-xi / di);
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

struct LineSearch<'a, 'b, F> {
    eval: &'a mut Scaled<'b, F>,
    x: &'a [f64],
    d: &'a [f64],
    used: usize,
    max: usize,
    best_t: f64,
    best_f: f64,
}

impl<F> LineSearch<'_, '_, F>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn f(&mut self, t: f64) -> std::result::Result<Option<f64>, Stop> {
        if self.used >= self.max {
            return Ok(None);
        }
        self.used += 1;
        let v = self.eval.eval(&along(self.x, self.d, t))?;
        if v < self.best_f {
            self.best_f = v;
            self.best_t = t;
        }
        Ok(Some(v))
    }
}

/// Minimizes along `d` from `x` (value `fx`): geometric bracketing then
/// golden-section, finished with one parabolic step through the final
/// bracket. Returns the best step and value found.
fn line_minimize<F>(
    eval: &mut Scaled<'_, F>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    config: &BaselineConfig,
) -> std::result::Result<(f64, f64), Stop>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (t_lo, t_hi) = feasible_interval(x, d);
    if t_hi - t_lo <= 0.0 {
        return Ok((0.0, fx));
    }
    let mut ls = LineSearch {
        eval,
        x,
        d,
        used: 0,
        max: config.max_line_evals,
        best_t: 0.0,
        best_f: fx,
    };

    // bracket (a, b, c) with f(b) below both ends, expanding away from 0
    let step = config.initial_step;
    let forward = step.min(t_hi);
    let f_forward = if forward > 0.0 { ls.f(forward)? } else { None };
    let (b, fb) = match f_forward {
        Some(v) if v < fx => (forward, v),
        _ => {
            let backward = (-step).max(t_lo);
            let f_backward = if backward < 0.0 { ls.f(backward)? } else { None };
            match f_backward {
                Some(v) if v < fx => (backward, v),
                // 0 is already bracketed by the two trial points
                _ if f_forward.is_some() || f_backward.is_some() => {
                    let lo = if f_backward.is_some() { backward } else { 0.0 };
                    let hi = if f_forward.is_some() { forward } else { 0.0 };
                    return golden(&mut ls, lo, hi, config);
                }
                _ => return Ok((ls.best_t, ls.best_f)),
            }
        }
    };
    let limit = if b > 0.0 { t_hi } else { t_lo };
    let (mut a, mut b, mut fb) = (0.0, b, fb);
    loop {
        let mut c = b + GOLDEN * (b - a);
        if (b > 0.0 && c >= limit) || (b < 0.0 && c <= limit) {
            c = limit;
        }
        if c == b {
            // still descending at the boundary
            return golden(&mut ls, a, b, config);
        }
        let Some(fc) = ls.f(c)? else {
            return Ok((ls.best_t, ls.best_f));
        };
        if fc >= fb {
            return golden(&mut ls, a, c, config);
        }
        a = b;
        b = c;
        fb = fc;
    }
}

/// Golden-section search on the interval spanned by `a` and `c`.
fn golden<F>(
    ls: &mut LineSearch<'_, '_, F>,
    a: f64,
    c: f64,
    config: &BaselineConfig,
) -> std::result::Result<(f64, f64), Stop>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let Some(mut f1) = ls.f(x1)? else {
        return Ok((ls.best_t, ls.best_f));
    };
    let Some(mut f2) = ls.f(x2)? else {
        return Ok((ls.best_t, ls.best_f));
    };
    while hi - lo > config.line_tolerance {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            match ls.f(x1)? {
                Some(v) => f1 = v,
                None => return Ok((ls.best_t, ls.best_f)),
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            match ls.f(x2)? {
                Some(v) => f2 = v,
                None => return Ok((ls.best_t, ls.best_f)),
            }
        }
    }
    // parabola through the two interior points and the midpoint-side end
    let (p, fp, q, fq) = (x1, f1, x2, f2);
    let m = 0.5 * (lo + hi);
    if let Some(fm) = ls.f(m)? {
        if let Some(t) = parabola_vertex((p, fp), (m, fm), (q, fq)) {
            if t > lo.min(p) && t < hi.max(q) && (t - ls.best_t).abs() > 0.0 {
                ls.f(t)?;
            }
        }
    }
    Ok((ls.best_t, ls.best_f))
}

fn parabola_vertex(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> Option<f64> {
    let (x1, y1) = p;
    let (x2, y2) = q;
    let (x3, y3) = r;
    let num = (x2 - x1).powi(2) * (y2 - y3) - (x2 - x3).powi(2) * (y2 - y1);
    let den = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1);
    if den.abs() < 1e-300 {
        return None;
    }
    let t = x2 - 0.5 * num / den;
    t.is_finite().then_some(t)
}

/// Powell's direction-set method inside the box.
pub fn powell<F>(cost: F, config: &BaselineConfig) -> Result<Trace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    let n = config.bounds.len();
    let mut eval = Scaled {
        cost,
        bounds: &config.bounds,
        budget: config.budget,
        recorder: TraceRecorder::new(Trace::new("powell", config.seed)),
    };
    let mut x: Vec<f64> = match &config.start {
        Some(s) => s
            .iter()
            .zip(&config.bounds)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect(),
        None => vec![0.5; n],
    };
    let status = match powell_loop(&mut eval, &mut x, config) {
        Ok(()) | Err(Stop::Budget) => RunStatus::Completed,
        Err(Stop::Failed(e)) => RunStatus::Aborted(e),
    };
    Ok(eval.recorder.finish(status))
}

fn powell_loop<F>(
    eval: &mut Scaled<'_, F>,
    x: &mut Vec<f64>,
    config: &BaselineConfig,
) -> std::result::Result<(), Stop>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut fx = eval.eval(x)?;
    loop {
        let x_start = x.clone();
        let f_start = fx;
        let mut biggest = (0usize, 0.0f64);
        for (i, d) in directions.iter().enumerate() {
            let (t, ft) = line_minimize(eval, x, fx, d, config)?;
            if fx - ft > biggest.1 {
                biggest = (i, fx - ft);
            }
            if ft < fx {
                *x = along(x, d, t);
                fx = ft;
            }
        }
        let net: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let len = net.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 0.0 {
            let d: Vec<f64> = net.iter().map(|v| v / len).collect();
            let (t, ft) = line_minimize(eval, x, fx, &d, config)?;
            if ft < fx {
                *x = along(x, &d, t);
                fx = ft;
            }
            directions[biggest.0] = d;
        }
        if f_start - fx < config.line_tolerance {
            return Ok(());
        }
    }
}
