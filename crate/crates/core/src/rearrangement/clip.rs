//! Sutherland–Hodgman clipping of a triangle by half-planes `{phi > 0}` of
//! linear functions given by their vertex values.

use crate::Real;

/// A polygon vertex carrying the values of the clipping functions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Node<T, const K: usize> {
    pub x: [T; 2],
    pub phi: [T; K],
}

pub(crate) fn clip<T: Real, const K: usize>(poly: &[Node<T, K>], which: usize, level: T) -> Vec<Node<T, K>> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let dc = cur.phi[which] - level;
        let dn = nxt.phi[which] - level;
        if dc > T::zero() {
            out.push(cur);
        }
        if (dc > T::zero()) != (dn > T::zero()) {
            let s = dc / (dc - dn);
            let phi: [T; K] = std::array::from_fn(|k| cur.phi[k] + s * (nxt.phi[k] - cur.phi[k]));
            out.push(Node { x: [cur.x[0] + s * (nxt.x[0] - cur.x[0]), cur.x[1] + s * (nxt.x[1] - cur.x[1])], phi });
        }
    }
    out
}

pub(crate) fn polygon_area<T: Real, const K: usize>(poly: &[Node<T, K>]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let mut s = T::zero();
    for i in 0..n {
        let a = poly[i].x;
        let b = poly[(i + 1) % n].x;
        s = s + (a[0] * b[1] - a[1] * b[0]);
    }
    (s / T::of(2.0)).abs()
}

/// Area of `{f > t} ∩ {g > tau}` inside the triangle `pts`.
pub(crate) fn intersection_area<T: Real>(pts: [[T; 2]; 3], f: [T; 3], g: [T; 3], t: T, tau: T) -> T {
    let poly: Vec<Node<T, 2>> = (0..3).map(|i| Node { x: pts[i], phi: [f[i], g[i]] }).collect();
    let poly = clip(&poly, 0, t);
    if poly.len() < 3 {
        return T::zero();
    }
    polygon_area(&clip(&poly, 1, tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_unit_triangle() {
        let pts: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // f = x, g = y: {x > 0.2, y > 0.3} inside the triangle has legs 0.5
        let a = intersection_area(pts, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 0.2, 0.3);
        assert!((a - 0.125).abs() < 1e-15);
        assert_eq!(intersection_area(pts, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 1.0, 0.0), 0.0);
        let all = intersection_area(pts, [1.0; 3], [1.0; 3], 0.0, 0.0);
        assert!((all - 0.5).abs() < 1e-15);
    }
}
