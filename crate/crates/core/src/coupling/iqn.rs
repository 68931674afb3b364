//! Interface quasi-Newton with a least-squares inverse Jacobian (IQN-ILS).

use nalgebra::DVector;

use crate::linalg::IncrementalQr;

/// Input/output differences collected from previous coupling iterations.
///
/// `V` holds residual differences `ΔR`, `W` the matching solid-output
/// differences `Δd̃`. Columns are stored oldest first.
#[derive(Debug, Clone, Default)]
pub struct IqnHistory {
    v: Vec<DVector<f64>>,
    w: Vec<DVector<f64>>,
    ages: Vec<usize>,
    q: usize,
}

impl IqnHistory {
    /// History reusing columns from the `q` previous time steps.
    pub fn new(q: usize) -> Self {
        Self { q, ..Default::default() }
    }

    pub fn reuse_depth(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Time step in which each column was created.
    pub fn ages(&self) -> &[usize] {
        &self.ages
    }

    pub fn v(&self) -> &[DVector<f64>] {
        &self.v
    }

    pub fn w(&self) -> &[DVector<f64>] {
        &self.w
    }

    pub fn push(&mut self, dr: DVector<f64>, dd_tilde: DVector<f64>, step: usize) {
        assert_eq!(dr.len(), dd_tilde.len(), "V and W columns must have equal length");
        self.v.push(dr);
        self.w.push(dd_tilde);
        self.ages.push(step);
    }

    /// Drops columns created before step `step − q`; call at the start of `step`.
    pub fn evict(&mut self, step: usize) {
        let keep: Vec<bool> = self.ages.iter().map(|&a| a + self.q >= step).collect();
        let mut it = keep.iter();
        self.v.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.w.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        self.ages.retain(|_| *it.next().unwrap());
    }

    pub fn clear(&mut self) {
        self.v.clear();
        self.w.clear();
        self.ages.clear();
    }
}

fn filtered_qr(v: &[DVector<f64>], eps_fil: f64) -> (Vec<usize>, Option<IncrementalQr>) {
    let Some(first) = v.first() else {
        return (Vec::new(), None);
    };
    let mut qr = IncrementalQr::new(first.len());
    let mut kept = Vec::new();
    for j in (0..v.len()).rev() {
        if qr.try_push(&v[j], eps_fil) {
            kept.push(j);
        }
    }
    (kept, Some(qr))
}

/// QR1 filtering: columns are fed newest first (highest index first) through
/// a Householder QR and a column is dropped when `|R_jj| < eps_fil · ‖v_j‖₂`.
/// Returns the retained indices in ascending order.
pub fn qr_filter(v: &[DVector<f64>], eps_fil: f64) -> Vec<usize> {
    let mut kept = filtered_qr(v, eps_fil).0;
    kept.sort_unstable();
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqnUpdate {
    pub d_next: DVector<f64>,
    /// `‖W α‖₂`.
    pub increment_norm: f64,
    pub retained: usize,
}

/// `d^{k+1} = d̃^k + W α` with `α = argmin ‖V α + R^k‖₂` over the filtered
/// columns. Returns `None` when no column survives filtering; the caller then
/// relaxes instead.
pub fn iqn_ils_update(
    hist: &IqnHistory,
    r_k: &DVector<f64>,
    d_tilde_k: &DVector<f64>,
    eps_fil: f64,
) -> Option<IqnUpdate> {
    let (kept, qr) = filtered_qr(&hist.v, eps_fil);
    let qr = qr?;
    if kept.is_empty() {
        return None;
    }
    assert_eq!(r_k.len(), hist.v[0].len(), "residual and history lengths differ");
    let alpha = qr.least_squares(&(-r_k));
    let mut inc = DVector::zeros(r_k.len());
    for (a, &j) in alpha.iter().zip(&kept) {
        if *a != 0.0 {
            inc.axpy(*a, &hist.w[j], 1.0);
        }
    }
    Some(IqnUpdate { increment_norm: inc.norm(), d_next: d_tilde_k + inc, retained: kept.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn filter_examples() {
        let v = col(&[1.0, 2.0, 0.5]);
        assert_eq!(qr_filter(&[v.clone(), v.clone()], 1e-12).len(), 1);
        let orth = [col(&[1.0, 0.0, 0.0]), col(&[0.0, 2.0, 0.0]), col(&[0.0, 0.0, -3.0])];
        assert_eq!(qr_filter(&orth, 1e-12), vec![0, 1, 2]);
        let w = col(&[0.0, 1.0, -1.0]);
        let near = &v + &w * 1e-15;
        assert_eq!(qr_filter(&[v, near], 1e-12), vec![1]);
        assert!(qr_filter(&[], 1e-12).is_empty());
    }

    #[test]
    fn newest_column_survives() {
        let v = col(&[3.0, 4.0]);
        let kept = qr_filter(&[v.clone(), v.clone() * 2.0, v * -1.0], 1e-12);
        assert_eq!(kept, vec![2]);
    }

    #[test]
    fn secant_on_a_linear_scalar_map_is_exact() {
        // R(d̃) = 0.5 d̃ − 1 has its fixed point at d̃ = 2.
        let r = |x: f64| 0.5 * x - 1.0;
        let (x0, x1) = (0.0, 5.0);
        let mut h = IqnHistory::new(0);
        h.push(col(&[r(x1) - r(x0)]), col(&[x1 - x0]), 0);
        let up = iqn_ils_update(&h, &col(&[r(x1)]), &col(&[x1]), 1e-12).unwrap();
        assert!((up.d_next[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_or_fully_filtered_history_defers_to_relaxation() {
        let h = IqnHistory::new(0);
        assert!(iqn_ils_update(&h, &col(&[1.0]), &col(&[0.0]), 1e-12).is_none());
        let mut h = IqnHistory::new(0);
        h.push(col(&[0.0, 0.0]), col(&[1.0, 1.0]), 0);
        assert!(iqn_ils_update(&h, &col(&[1.0, 1.0]), &col(&[0.0, 0.0]), 1e-12).is_none());
    }

    #[test]
    fn eviction_by_age() {
        let mut h = IqnHistory::new(2);
        for step in 0..6 {
            h.evict(step);
            h.push(col(&[step as f64 + 1.0]), col(&[1.0]), step);
            h.push(col(&[step as f64 + 2.0]), col(&[1.0]), step);
            assert!(h.ages().iter().all(|&a| a + 2 >= step));
        }
        assert_eq!(h.ages(), &[3, 3, 4, 4, 5, 5]);
        h.evict(6);
        assert_eq!(h.ages(), &[4, 4, 5, 5]);
        assert_eq!(h.v().len(), h.w().len());
    }

    fn history_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..6, 1usize..5).prop_flat_map(|(n, cols)| {
            (
                proptest::collection::vec(proptest::collection::vec(-10.0..10.0_f64, n), cols),
                proptest::collection::vec(proptest::collection::vec(-10.0..10.0_f64, n), cols),
                proptest::collection::vec(-10.0..10.0_f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn zero_residual_gives_zero_increment((v, w, d) in history_strategy()) {
            let mut h = IqnHistory::new(0);
            for (a, b) in v.iter().zip(&w) {
                h.push(col(a), col(b), 0);
            }
            let d = col(&d);
            let zero = DVector::zeros(d.len());
            if let Some(up) = iqn_ils_update(&h, &zero, &d, 1e-12) {
                prop_assert_eq!(up.increment_norm, 0.0);
                prop_assert_eq!(up.d_next, d);
            }
        }

        #[test]
        fn retained_columns_are_independent((v, _w, _d) in history_strategy()) {
            let cols: Vec<_> = v.iter().map(|c| col(c)).collect();
            let kept = qr_filter(&cols, 1e-12);
            prop_assert!(kept.len() <= cols[0].len());
            let mut qr = IncrementalQr::new(cols[0].len());
            for &j in kept.iter().rev() {
                prop_assert!(qr.try_push(&cols[j], 1e-12));
            }
        }
    }
}
