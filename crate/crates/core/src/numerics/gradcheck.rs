//! Central finite-difference verification of analytic gradients.

use std::collections::BTreeSet;

use crate::numerics::{ParamStore, Rng};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub samples: usize,
    pub tol: f64,
    pub step: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { samples: 200, tol: 1e-4, step: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub passed: bool,
    pub tol: f64,
    pub worst: Option<Probe>,
    pub failures: Vec<Probe>,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} coordinates checked, {}", self.checked, if self.passed { "pass" } else { "FAIL" })?;
        if let Some(w) = &self.worst {
            write!(
                f,
                "; worst {}[{}]: analytic {:.6e}, numeric {:.6e}, rel err {:.3e} (tol {:.1e})",
                w.param, w.index, w.analytic, w.numeric, w.rel_err, self.tol
            )?;
        }
        Ok(())
    }
}

/// Compares `grad(params)` against central differences of `loss` at
/// `cfg.samples` distinct random coordinates (all of them if fewer exist).
///
/// The relative error is `|analytic − fd| / max(1, |fd|)`.
pub fn grad_check<L, G>(
    mut loss: L,
    grad: G,
    params: &ParamStore<f64>,
    cfg: GradCheckConfig,
    rng: &mut Rng,
) -> GradCheckReport
where
    L: FnMut(&ParamStore<f64>) -> f64,
    G: FnOnce(&ParamStore<f64>) -> ParamStore<f64>,
{
    let analytic = grad(params);
    let total = params.num_elements();
    let coords: BTreeSet<usize> = if total <= cfg.samples {
        (0..total).collect()
    } else {
        let mut s = BTreeSet::new();
        while s.len() < cfg.samples {
            s.insert(rng.below(total as u64) as usize);
        }
        s
    };

    let mut work = params.clone();
    let mut worst: Option<Probe> = None;
    let mut failures = Vec::new();
    for &flat in &coords {
        let (id, idx) = params.locate(flat).expect("coordinate in range");
        let orig = params.data(id)[idx];
        work.data_mut(id)[idx] = orig + cfg.step;
        let up = loss(&work);
        work.data_mut(id)[idx] = orig - cfg.step;
        let down = loss(&work);
        work.data_mut(id)[idx] = orig;

        let numeric = (up - down) / (2.0 * cfg.step);
        let a = analytic.data(id)[idx];
        let rel_err = (a - numeric).abs() / numeric.abs().max(1.0);
        let probe = Probe { param: params.name(id).to_string(), index: idx, analytic: a, numeric, rel_err };
        if !(rel_err <= cfg.tol) {
            failures.push(probe.clone());
        }
        if worst.as_ref().is_none_or(|w| !(probe.rel_err <= w.rel_err)) {
            worst = Some(probe);
        }
    }
    GradCheckReport { checked: coords.len(), passed: failures.is_empty(), tol: cfg.tol, worst, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Array;

    fn single(w: f64) -> ParamStore<f64> {
        let mut p = ParamStore::new();
        p.add("w", Array::from_vec(&[1], vec![w]).unwrap());
        p
    }

    #[test]
    fn quadratic_passes() {
        let p = single(3.0);
        let loss = |p: &ParamStore<f64>| p.data(p.id("w").unwrap())[0].powi(2);
        let grad = |p: &ParamStore<f64>| {
            let mut g = p.zeros_like();
            let id = p.id("w").unwrap();
            g.data_mut(id)[0] = 2.0 * p.data(id)[0];
            g
        };
        let r = grad_check(loss, grad, &p, GradCheckConfig::default(), &mut Rng::new(0));
        assert!(r.passed, "{r}");
        let w = r.worst.unwrap();
        assert_eq!(w.analytic, 6.0);
        assert!((w.numeric - 6.0).abs() < 1e-8);
    }

    #[test]
    fn corrupted_gradient_fails_with_details() {
        let p = single(3.0);
        let loss = |p: &ParamStore<f64>| p.data(p.id("w").unwrap())[0].powi(2);
        let grad = |p: &ParamStore<f64>| {
            let mut g = p.zeros_like();
            g.data_mut(p.id("w").unwrap())[0] = 7.0;
            g
        };
        let r = grad_check(loss, grad, &p, GradCheckConfig::default(), &mut Rng::new(0));
        assert!(!r.passed);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].param, "w");
        assert_eq!(r.failures[0].analytic, 7.0);
        assert!(r.to_string().contains("FAIL"));
    }
}
