use super::{
    solve_dirichlet_with, Boundary, DirichletProblem, EllipticError, Geometry, NewtonOptions, RadialProfile,
    Solution, Source,
};
use crate::fields::LiouvilleParams;

/// Solves `Δu = e^u` on the unit disk with `u = M` on the boundary for each
/// `M` in `m_list` (strictly increasing), using `n` radial nodes.
pub fn boundary_blowup_approx(n: usize, m_list: &[f64]) -> Result<Vec<RadialProfile>, EllipticError> {
    if m_list.is_empty() {
        return Err(EllipticError::InvalidProblem("empty boundary-value list".into()));
    }
    if m_list.windows(2).any(|w| !(w[1] > w[0])) || m_list.iter().any(|m| !m.is_finite()) {
        return Err(EllipticError::InvalidProblem("boundary values must be finite and strictly increasing".into()));
    }
    m_list
        .iter()
        .map(|&m| {
            let prob = DirichletProblem {
                geometry: Geometry::Disk { n },
                source: Source::Liouville(LiouvilleParams::unit()),
                boundary: Boundary::Constant(m),
            };
            match solve_dirichlet_with(&prob, None, &NewtonOptions::default())?.0 {
                Solution::Radial(p) => Ok(p),
                Solution::Field(_) => unreachable!("disk geometry yields a radial profile"),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centre_values_approach_ln8_monotonically() {
        let profs = boundary_blowup_approx(513, &[5.0, 8.0, 11.0]).unwrap();
        let gaps: Vec<f64> = profs.iter().map(|p| (p.center() - 8f64.ln()).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[2] <= 0.02, "{gaps:?}");
        for w in profs.windows(2) {
            assert!(w[0].u.iter().zip(&w[1].u).all(|(a, b)| b >= a));
        }
        assert_eq!(boundary_blowup_approx(65, &[5.0]).unwrap().len(), 1);
        assert!(boundary_blowup_approx(65, &[5.0, 5.0]).is_err());
    }
}
