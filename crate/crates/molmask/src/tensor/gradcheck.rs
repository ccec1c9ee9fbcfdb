//! Finite-difference gradient oracle.
//!
//! Independent of the reverse-mode path: it only evaluates a forward
//! closure at perturbed inputs. Used by the unit and acceptance tests to
//! check every differentiable operation.

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let original = probe[i];
        probe[i] = original + h;
        let plus = f(&probe);
        probe[i] = original - h;
        let minus = f(&probe);
        probe[i] = original;
        grad.push((plus - minus) / (2.0 * h));
    }
    grad
}

/// Norm-based relative error: ||a - b|| / max(||a||, ||b||, tiny).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error: length mismatch");
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-12)
}
