use crate::mesh::{Mesh, Phase};
use crate::tensor::Vec2;

/// Symmetric triangle rule: barycentric points with weights summing to one.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureRule {
    pub points: &'static [([f64; 3], f64)],
}

const THIRD: f64 = 1.0 / 3.0;

/// Three interior points, exact for quadratic polynomials.
pub const ORDER2: QuadratureRule = QuadratureRule {
    points: &[
        ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], THIRD),
        ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], THIRD),
        ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], THIRD),
    ],
};

const A1: f64 = 0.445_948_490_915_965;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011;
const A2: f64 = 0.091_576_213_509_771;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = 0.109_951_743_655_322;

/// Six points, exact for quartic polynomials.
pub const ORDER4: QuadratureRule = QuadratureRule {
    points: &[
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ],
};

/// A quadrature point of one element, with its weight already scaled by the element area.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub element: usize,
    pub phase: Phase,
    pub bary: [f64; 3],
    pub x: Vec2,
    pub weight: f64,
}

impl QuadratureRule {
    pub(crate) fn points_of(&self, mesh: &Mesh, element: usize) -> impl Iterator<Item = QuadPoint> + '_ {
        let area = mesh.geometry(element).area;
        let phase = mesh.phases()[element];
        let t = mesh.triangles()[element];
        let n = mesh.nodes();
        let (p0, p1, p2) = (n[t[0]], n[t[1]], n[t[2]]);
        self.points.iter().map(move |&(b, w)| QuadPoint {
            element,
            phase,
            bary: b,
            x: [
                b[0] * p0[0] + b[1] * p1[0] + b[2] * p2[0],
                b[0] * p0[1] + b[1] * p1[1] + b[2] * p2[1],
            ],
            weight: w * area,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_monomial(rule: &QuadratureRule, i: i32, j: i32) -> f64 {
        // reference triangle (0,0),(1,0),(0,1): area 1/2, point = b1*e1 + b2*e2
        rule.points
            .iter()
            .map(|(b, w)| 0.5 * w * b[1].powi(i) * b[2].powi(j))
            .sum()
    }

    fn exact(i: i32, j: i32) -> f64 {
        // ∫ x^i y^j over the reference triangle = i! j! / (i + j + 2)!
        let f = |n: i32| (1..=n).map(|k| k as f64).product::<f64>();
        f(i) * f(j) / f(i + j + 2)
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for (rule, deg) in [(ORDER2, 2), (ORDER4, 4)] {
            for i in 0..=deg {
                for j in 0..=deg - i {
                    let got = integrate_monomial(&rule, i, j);
                    assert!((got - exact(i, j)).abs() < 1e-14, "degree ({i},{j})");
                }
            }
        }
    }
}
