use rayon::prelude::*;

use super::{BoundarySampling, Side};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::medium::WaveContext;
use crate::specfun::green_radial;
use crate::C64;

/// Field values at targets plus a flag for targets closer than two node
/// spacings to the curve, where the smooth rule loses accuracy.
#[derive(Clone, Debug)]
pub struct Representation {
    pub values: Vec<C64>,
    pub too_close: Vec<bool>,
}

/// Green's representation from Dirichlet data `phi` and outward normal
/// derivative `psi`.
///
/// Interior: `u(x) = ∫ ψ Φ − φ ∂Φ/∂n_ξ ds`. Exterior: the negative.
pub fn eval_green_representation(
    ctx: &WaveContext,
    boundary: &BoundarySampling,
    phi: &[C64],
    psi: &[C64],
    targets: &[Point],
    side: Side,
) -> Result<Representation> {
    let p = boundary.len();
    if phi.len() != p || psi.len() != p {
        return Err(Error::ShapeMismatch(format!(
            "densities of length {} and {} on {p} nodes",
            phi.len(),
            psi.len()
        )));
    }
    let sign = match side {
        Side::Interior => 1.0,
        Side::Exterior => -1.0,
    };
    let k = ctx.k;
    let out: Vec<Result<(C64, bool)>> = targets
        .par_iter()
        .map(|&x| {
            let (dmin, wnear) = boundary.nearest_node(x);
            if dmin == 0.0 {
                return Err(Error::DomainError(format!("target ({}, {}) lies on a boundary node", x.x, x.y)));
            }
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..p {
                let d = x - boundary.nodes[j];
                let r = d.norm();
                let (g, gp) = green_radial(k, r);
                let dg_dn_xi = -gp * (d.dot(boundary.normals[j]) / r);
                acc += (psi[j] * g - phi[j] * dg_dn_xi) * boundary.weights[j];
            }
            Ok((acc * sign, dmin < 2.0 * wnear))
        })
        .collect();
    let mut values = Vec::with_capacity(targets.len());
    let mut too_close = Vec::with_capacity(targets.len());
    for r in out {
        let (v, f) = r?;
        values.push(v);
        too_close.push(f);
    }
    if too_close.iter().any(|&f| f) {
        log::warn!("{} targets lie within two node spacings of the boundary", too_close.iter().filter(|&&f| f).count());
    }
    Ok(Representation { values, too_close })
}
