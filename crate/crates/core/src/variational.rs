//! Numerical Euler–Lagrange oracle: central finite differences of a discrete
//! action with respect to the real and imaginary parts of each field value.

use crate::error::{Error, Result};
use crate::lagrangians::compensated_sum;
use crate::lattice::LatticeField;

/// Two-sided difference step.
pub const FD_STEP: f64 = 1e-6;

/// Which points to differentiate at.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSet {
    /// Every point whose whole neighbourhood has a defined density.
    Interior,
    Points(Vec<usize>),
}

/// A discrete action `S = Σ_q L_q ∏h` with a local density.
pub trait LocalDensity {
    /// Density at `q`, or `None` when its stencil leaves the lattice.
    fn density(&self, field: &LatticeField, q: usize) -> Result<Option<f64>>;

    /// Largest offset along any axis at which a change of the field at one
    /// point can affect the density.
    fn reach(&self) -> usize;
}

fn neighbourhood(field: &LatticeField, p: usize, reach: usize) -> Option<Vec<usize>> {
    let mut out = vec![p];
    for axis in 0..field.spec.dims() {
        for k in 1..=reach as isize {
            for off in [k, -k] {
                out.push(field.neighbour(p, axis, off)?.0);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

fn local_action(field: &LatticeField, density: &dyn LocalDensity, points: &[usize]) -> Result<Option<f64>> {
    let mut vals = Vec::with_capacity(points.len());
    for &q in points {
        match density.density(field, q)? {
            Some(v) => vals.push(v),
            None => return Ok(None),
        }
    }
    Ok(Some(compensated_sum(vals)))
}

/// `∂S/∂(component)` at each probe, divided by the cell volume so that it
/// approximates twice the continuum Euler–Lagrange expression. Points that
/// are not probed hold NaN.
pub fn action_gradient(field: &LatticeField, density: &dyn LocalDensity, probes: &ProbeSet) -> Result<LatticeField> {
    let reach = density.reach();
    let mut work = field.clone();
    let mut out = field.map(field.kind, |_, _, dst| dst.fill(f64::NAN));
    out.twisted = vec![false; field.spec.dims()];
    let nc = field.ncomp();
    let (points, strict) = match probes {
        ProbeSet::Interior => ((0..field.spec.len()).collect::<Vec<_>>(), false),
        ProbeSet::Points(p) => (p.clone(), true),
    };
    if !strict {
        for (axis, m) in out.margin.iter_mut().enumerate() {
            if !field.spec.periodic[axis] {
                *m += 2 * reach;
            }
        }
    }
    for p in points {
        let outside = || Error::ProbeOutsideInterior { index: field.spec.coords(p)[..field.spec.dims()].to_vec(), margin: 2 * reach };
        let nbhd = match neighbourhood(field, p, reach) {
            Some(n) => n,
            None if strict => return Err(outside()),
            None => continue,
        };
        let mut grad = vec![0.0; nc];
        let mut valid = true;
        for (c, g) in grad.iter_mut().enumerate() {
            let k = p * nc + c;
            let orig = work.data[k];
            work.data[k] = orig + FD_STEP;
            let plus = local_action(&work, density, &nbhd)?;
            work.data[k] = orig - FD_STEP;
            let minus = local_action(&work, density, &nbhd)?;
            work.data[k] = orig;
            match (plus, minus) {
                (Some(a), Some(b)) => *g = (a - b) / (2.0 * FD_STEP),
                _ => {
                    valid = false;
                    break;
                }
            }
        }
        if !valid {
            if strict {
                return Err(outside());
            }
            continue;
        }
        out.at_mut(p).copy_from_slice(&grad);
    }
    Ok(out)
}

/// Largest finite absolute component of a gradient field.
pub fn max_finite_abs(f: &LatticeField) -> f64 {
    f.data.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
}
