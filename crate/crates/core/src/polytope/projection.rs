use crate::regret::WeightVector;

/// Euclidean projection onto the probability simplex (sort-and-threshold).
///
/// Panics if `v` is empty or contains non-finite entries.
pub fn project_simplex(v: &[f64]) -> WeightVector {
    assert!(!v.is_empty(), "cannot project an empty vector");
    assert!(v.iter().all(|x| x.is_finite()), "non-finite input to project_simplex");

    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-15 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    WeightVector::from_vec_unchecked(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn two_dimensional_case() {
        // active-set enumeration: both coordinates positive,
        // w = v - t with 2t = 0.5 + 0.7 - 1
        let w = project_simplex(&[0.5, 0.7]);
        assert!(close(w.as_slice(), &[0.4, 0.6], 1e-12));
    }

    #[test]
    fn already_on_simplex() {
        let w = project_simplex(&[1.0, 0.0, 0.0]);
        assert_eq!(w.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_input_gives_uniform() {
        let w = project_simplex(&[-5.0, -5.0]);
        assert!(close(w.as_slice(), &[0.5, 0.5], 1e-12));
    }

    /// Brute force: projection onto each face {w_i = 0 for i outside S} of the
    /// simplex, keeping the closest feasible candidate.
    fn projection_by_faces(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let shift = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut w = vec![0.0; n];
            for &i in &support {
                w[i] = v[i] - shift;
            }
            if w.iter().any(|&x| x < -1e-12) {
                continue;
            }
            let d: f64 = w.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, w));
            }
        }
        best.unwrap().1
    }

    proptest! {
        #[test]
        fn output_on_simplex_and_idempotent(v in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let w = project_simplex(&v);
            let s: f64 = w.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(w.as_slice().iter().all(|&x| x >= 0.0));
            let again = project_simplex(w.as_slice());
            prop_assert!(close(again.as_slice(), w.as_slice(), 1e-12));
        }

        #[test]
        fn matches_face_enumeration(v in prop::collection::vec(-3.0f64..3.0, 1..7)) {
            let w = project_simplex(&v);
            let oracle = projection_by_faces(&v);
            prop_assert!(close(w.as_slice(), &oracle, 1e-9));
        }
    }
}
