//! Convex hull volume of integer lattice points.
//!
//! Incremental hull with exact `i128` orientation tests, so coplanar and
//! collinear inputs (the norm for voxel centers) need no tolerances.

use std::collections::HashMap;

type P = [i64; 3];

fn sub(a: &P, b: &P) -> [i128; 3] {
    [i128::from(a[0] - b[0]), i128::from(a[1] - b[1]), i128::from(a[2] - b[2])]
}

fn cross(u: &[i128; 3], v: &[i128; 3]) -> [i128; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn dot(u: &[i128; 3], v: &[i128; 3]) -> i128 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Six times the signed volume of tetrahedron `(a, b, c, d)`; positive when
/// `d` lies on the side of `abc` its normal `(b - a) x (c - a)` points to.
fn orient(a: &P, b: &P, c: &P, d: &P) -> i128 {
    dot(&cross(&sub(b, a), &sub(c, a)), &sub(d, a))
}

/// Hull volume in lattice units cubed. Degenerate (flat) inputs give zero.
pub fn lattice_hull_volume(points: &[P]) -> f64 {
    six_volume(points) as f64 / 6.0
}

/// Six times the hull volume, exact.
pub fn six_volume(points: &[P]) -> i128 {
    let mut pts: Vec<P> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let Some(init) = initial_simplex(&pts) else { return 0 };

    let [i0, i1, i2, i3] = init;
    let mut faces: Vec<Option<[usize; 3]>> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let add_face = |faces: &mut Vec<Option<[usize; 3]>>, edges: &mut HashMap<(usize, usize), usize>, f: [usize; 3]| {
        let id = faces.len();
        faces.push(Some(f));
        for k in 0..3 {
            edges.insert((f[k], f[(k + 1) % 3]), id);
        }
    };
    // Orient the first face away from the fourth vertex.
    let (a, b) = if orient(&pts[i0], &pts[i1], &pts[i2], &pts[i3]) > 0 { (i1, i0) } else { (i0, i1) };
    for f in [[a, b, i2], [b, a, i3], [i2, b, i3], [a, i2, i3]] {
        add_face(&mut faces, &mut edges, f);
    }
    debug_assert!(faces.iter().flatten().all(|f| {
        let other = [i0, i1, i2, i3].into_iter().find(|v| !f.contains(v)).unwrap();
        orient(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[other]) < 0
    }));

    for p in 0..pts.len() {
        if init.contains(&p) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter_map(|(id, f)| f.filter(|f| orient(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[p]) > 0).map(|_| id))
            .collect();
        if visible.is_empty() {
            continue;
        }
        let is_visible = |id: usize| visible.binary_search(&id).is_ok();
        let mut horizon = Vec::new();
        for &id in &visible {
            let f = faces[id].unwrap();
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                let twin = edges[&(v, u)];
                if !is_visible(twin) {
                    horizon.push((u, v));
                }
            }
        }
        for &id in &visible {
            let f = faces[id].take().unwrap();
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if edges.get(&e) == Some(&id) {
                    edges.remove(&e);
                }
            }
        }
        for (u, v) in horizon {
            add_face(&mut faces, &mut edges, [u, v, p]);
        }
    }

    let origin = pts[i0];
    faces.iter().flatten().map(|f| orient(&origin, &pts[f[0]], &pts[f[1]], &pts[f[2]])).sum::<i128>().abs()
}

fn initial_simplex(pts: &[P]) -> Option<[usize; 4]> {
    let i0 = 0;
    let i1 = (1..pts.len()).find(|&i| pts[i] != pts[i0])?;
    let d01 = sub(&pts[i1], &pts[i0]);
    let i2 = (1..pts.len()).find(|&i| cross(&d01, &sub(&pts[i], &pts[i0])) != [0, 0, 0])?;
    let i3 = (1..pts.len()).find(|&i| orient(&pts[i0], &pts[i1], &pts[i2], &pts[i]) != 0)?;
    Some([i0, i1, i2, i3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_tetrahedron() {
        assert_eq!(six_volume(&[[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]), 1);
    }

    #[test]
    fn lattice_cube_and_box() {
        let mut pts = vec![];
        for x in 0..4 {
            for y in 0..3 {
                for z in 0..6 {
                    pts.push([x, y, z]);
                }
            }
        }
        assert_eq!(lattice_hull_volume(&pts), (3 * 2 * 5) as f64);
    }

    #[test]
    fn octahedron() {
        let pts = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1], [0, 0, 0]];
        assert_eq!(six_volume(&pts), 8);
    }

    #[test]
    fn flat_inputs_are_zero() {
        assert_eq!(six_volume(&[]), 0);
        assert_eq!(six_volume(&[[1, 1, 1]; 5]), 0);
        assert_eq!(six_volume(&[[0, 0, 0], [1, 1, 1], [2, 2, 2], [5, 5, 5]]), 0);
        assert_eq!(six_volume(&[[0, 0, 3], [4, 0, 3], [0, 7, 3], [2, 2, 3], [9, 9, 3]]), 0);
    }

    fn cloud() -> impl Strategy<Value = Vec<P>> {
        prop::collection::vec(prop::array::uniform3(-6i64..6), 4..40)
    }

    proptest! {
        #[test]
        fn order_and_translation_invariant(pts in cloud(), shift in prop::array::uniform3(-50i64..50)) {
            let v = six_volume(&pts);
            let mut rev = pts.clone();
            rev.reverse();
            prop_assert_eq!(six_volume(&rev), v);
            let moved: Vec<P> = pts.iter().map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]]).collect();
            prop_assert_eq!(six_volume(&moved), v);
            let doubled: Vec<P> = pts.iter().map(|p| [2 * p[0], 2 * p[1], 2 * p[2]]).collect();
            prop_assert_eq!(six_volume(&doubled), 8 * v);
        }

        #[test]
        fn adding_points_never_shrinks(pts in cloud(), extra in prop::array::uniform3(-8i64..8)) {
            let v = six_volume(&pts);
            let mut more = pts.clone();
            more.push(extra);
            prop_assert!(six_volume(&more) >= v);
            // Every tetrahedron of input points fits inside the hull.
            for w in pts.windows(4) {
                prop_assert!(orient(&w[0], &w[1], &w[2], &w[3]).abs() <= v);
            }
        }
    }
}
