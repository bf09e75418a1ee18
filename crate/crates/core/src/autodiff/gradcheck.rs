//! Central-difference gradient verification.

use crate::autodiff::{Dd, Graph, Var};
use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::scalar::Scalar;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Compares `analytic` (dense, per parameter in id order) with central
/// differences of `f` at every coordinate of every parameter.
///
/// Returns the max over coordinates of
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
/// Parameters are restored exactly after each probe.
pub fn finite_difference_check<T, F>(
    params: &mut ParamStore<T>,
    analytic: &[Vec<T>],
    eps: T,
    mut f: F,
) -> Result<T>
where
    T: Scalar,
    F: FnMut(&ParamStore<T>) -> Result<T>,
{
    if eps <= T::zero() {
        return Err(Error::InvalidInput("finite difference eps must be positive".into()));
    }
    if analytic.len() != params.len() {
        return Err(Error::InvalidInput(format!(
            "{} analytic gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    let floor = T::lit(1e-8);
    let two = T::lit(2.0);
    let mut worst = T::zero();
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        #[allow(clippy::needless_range_loop)]
        for j in 0..params.value(id).len() {
            let orig = params.value(id).data()[j];
            params.value_mut(id)[j] = orig + eps;
            let plus = f(params)?;
            params.value_mut(id)[j] = orig - eps;
            let minus = f(params)?;
            params.value_mut(id)[j] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective at perturbed {}[{j}]",
                    params.param(id).name
                )));
            }
            let numeric = (plus - minus) / (two * eps);
            let a = analytic[id.index()][j];
            let err = (a - numeric).abs() / floor.max(a.abs() + numeric.abs());
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Builds the objective with `build`, differentiates it, and runs
/// [`finite_difference_check`] against the same objective.
pub fn check_gradients<T, F>(params: &mut ParamStore<T>, eps: T, build: F) -> Result<T>
where
    T: Scalar,
    F: Fn(&mut Graph<'_, T>) -> Result<Var>,
{
    let analytic = {
        let mut g = Graph::new(params);
        let loss = build(&mut g)?;
        g.backward(loss)?.dense(params)
    };
    finite_difference_check(params, &analytic, eps, |p| {
        let mut g = Graph::new(p);
        let loss = build(&mut g)?;
        g.value(loss)
            .item()
            .ok_or_else(|| Error::InvalidInput("objective is not scalar".into()))
    })
}

/// A scalar objective that can be built at any precision.
pub trait Objective {
    fn build<T: Scalar>(&self, g: &mut Graph<'_, T>) -> Result<Var>;
}

/// Checks `f64` reverse-mode gradients against central differences of the
/// same objective evaluated in double-double precision.
///
/// Rounding noise in an `f64` objective is about `1e-16 |f| / eps`, which
/// swamps gradients that are exactly zero (for example a shift shared by
/// every softmax input). The extended-precision side keeps that noise far
/// below the `1e-8` floor of the relative error, so the result measures the
/// analytic gradient rather than the probe.
pub fn check_gradients_precise<O: Objective>(params: &ParamStore<f64>, eps: f64, objective: &O) -> Result<f64> {
    let analytic: Vec<Vec<Dd>> = {
        let mut g = Graph::new(params);
        let loss = objective.build(&mut g)?;
        g.backward(loss)?
            .dense(params)
            .into_iter()
            .map(|v| v.into_iter().map(Dd::new).collect())
            .collect()
    };
    let mut wide = params.cast::<Dd>();
    let err = finite_difference_check(&mut wide, &analytic, Dd::new(eps), |p| {
        let mut g = Graph::new(p);
        let loss = objective.build(&mut g)?;
        g.value(loss)
            .item()
            .ok_or_else(|| Error::InvalidInput("objective is not scalar".into()))
    })?;
    Ok(err.hi())
}
