//! Equivalent-time cost measure, zero-intercept regressions and error metrics.

use crate::error::CostError;
use crate::linalg::IncrementalQr;
use nalgebra::DVector;

/// Iteration totals `(N^c, N^f, N^s)`.
pub type Counts = (usize, usize, usize);

/// Cost coefficients in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFactors {
    /// Per coupling iteration (data transfer and interface update).
    pub c_couple: f64,
    /// Per flow solver call.
    pub c_fix_f: f64,
    /// Per flow inner iteration.
    pub c_iter_f: f64,
    /// Per solid solver call.
    pub c_fix_s: f64,
    /// Per solid inner iteration.
    pub c_iter_s: f64,
}

impl CostFactors {
    /// `Γ = c_couple + c_fix_f + c_fix_s`, the cost of one coupling iteration
    /// apart from the inner iterations.
    pub fn gamma(&self) -> f64 {
        self.c_couple + self.c_fix_f + self.c_fix_s
    }

    /// Factors with a given `Γ`, carried entirely by `c_couple`.
    pub fn from_gamma(gamma: f64, c_iter_f: f64, c_iter_s: f64) -> Self {
        Self { c_couple: gamma, c_fix_f: 0.0, c_iter_f, c_fix_s: 0.0, c_iter_s }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            c_couple: k * self.c_couple,
            c_fix_f: k * self.c_fix_f,
            c_iter_f: k * self.c_iter_f,
            c_fix_s: k * self.c_fix_s,
            c_iter_s: k * self.c_iter_s,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let all = [self.c_couple, self.c_fix_f, self.c_iter_f, self.c_fix_s, self.c_iter_s];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(CostError::InvalidInput("cost factors must be finite and non-negative".into()))
        }
    }
}

/// Hypothetical cost distributions for what-if studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `Γ = c_iter_f = c_iter_s = 1`: cost proportional to the iteration sum.
    AllOnes,
    /// `Γ = c_iter_s = 1`, `c_iter_f = 0.01`: cheap flow iterations.
    CheapFlow,
    /// `Γ = 120`, `c_iter_f = c_iter_s = 1`: coupling iterations dominate.
    ExpensiveCoupling,
}

impl Scenario {
    pub fn factors(self) -> CostFactors {
        match self {
            Scenario::AllOnes => CostFactors::from_gamma(1.0, 1.0, 1.0),
            Scenario::CheapFlow => CostFactors::from_gamma(1.0, 0.01, 1.0),
            Scenario::ExpensiveCoupling => CostFactors::from_gamma(120.0, 1.0, 1.0),
        }
    }
}

/// `C = N^c Γ + N^f c_iter_f + N^s c_iter_s`.
pub fn equivalent_time(counts: Counts, f: &CostFactors) -> f64 {
    let (c, fl, s) = counts;
    c as f64 * f.gamma() + fl as f64 * f.c_iter_f + s as f64 * f.c_iter_s
}

/// Cost measure assuming a constant cost per coupling iteration.
pub fn literature_measure(counts: Counts, cost_per_coupling_iter: f64) -> f64 {
    counts.0 as f64 * cost_per_coupling_iter
}

/// Equivalent time of every grid cell.
pub fn scenario_cost(grid: &[Counts], f: &CostFactors) -> Vec<f64> {
    grid.iter().map(|&c| equivalent_time(c, f)).collect()
}

/// Measured iteration totals and wall times of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSample {
    pub n_c: usize,
    pub n_f: usize,
    pub n_s: usize,
    pub t_f: f64,
    pub t_s: f64,
    pub t_c: f64,
}

impl TimingSample {
    pub fn counts(&self) -> Counts {
        (self.n_c, self.n_f, self.n_s)
    }

    pub fn total_time(&self) -> f64 {
        self.t_f + self.t_s + self.t_c
    }
}

/// Relative tolerance below which a design column counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Zero-intercept fit `T^p ≈ N^c c_fix + N^p c_iter` over samples
/// `(N^c, N^p, T^p)`, solved by QR. Returns `(c_fix, c_iter)`.
pub fn fit_solver_cost(samples: &[(f64, f64, f64)]) -> Result<(f64, f64), CostError> {
    if samples.len() < 2 {
        return Err(CostError::RankDeficient(format!("{} sample(s) cannot determine two cost factors", samples.len())));
    }
    if samples.iter().any(|s| !(s.0.is_finite() && s.1.is_finite() && s.2.is_finite())) {
        return Err(CostError::InvalidInput("non-finite sample".into()));
    }
    let nc = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.0));
    let np = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let t = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.2));
    let mut qr = IncrementalQr::new(samples.len());
    if !qr.try_push(&nc, RANK_TOL) || !qr.try_push(&np, RANK_TOL) {
        return Err(CostError::RankDeficient("coupling and subproblem iteration counts are collinear".into()));
    }
    let x = qr.least_squares(&t);
    Ok((x[0], x[1]))
}

/// Zero-intercept line `T^c ≈ N^c c`: `c = Σ N^c T^c / Σ (N^c)²`.
pub fn fit_coupling_cost(samples: &[(f64, f64)]) -> Result<f64, CostError> {
    let den: f64 = samples.iter().map(|s| s.0 * s.0).sum();
    if samples.is_empty() || den == 0.0 {
        return Err(CostError::RankDeficient("all coupling iteration counts are zero".into()));
    }
    let num: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    Ok(num / den)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), CostError> {
    if a.len() != b.len() {
        return Err(CostError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(CostError::InvalidInput("empty series".into()));
    }
    Ok(())
}

fn sq_err(a: &[f64], f: &[f64]) -> f64 {
    a.iter().zip(f).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `√(Σ|a − f|² / Σ|a|²)`.
pub fn rrmse(actual: &[f64], fitted: &[f64]) -> Result<f64, CostError> {
    check_lengths(actual, fitted)?;
    let den: f64 = actual.iter().map(|x| x * x).sum();
    if den == 0.0 {
        return Err(CostError::InvalidInput("RRMSE of an all-zero series".into()));
    }
    Ok((sq_err(actual, fitted) / den).sqrt())
}

/// `√(Σ|a − f|² / m)`.
pub fn rmse(actual: &[f64], fitted: &[f64]) -> Result<f64, CostError> {
    check_lengths(actual, fitted)?;
    Ok((sq_err(actual, fitted) / actual.len() as f64).sqrt())
}

/// Mean and maximum of `|a − p| / |a|`, as fractions.
pub fn mape_maxape(actual: &[f64], predicted: &[f64]) -> Result<(f64, f64), CostError> {
    check_lengths(actual, predicted)?;
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for (i, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if *a == 0.0 {
            return Err(CostError::InvalidInput(format!("actual value {i} is zero")));
        }
        let e = (a - p).abs() / a.abs();
        sum += e;
        max = max.max(e);
    }
    Ok((sum / actual.len() as f64, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Vector2};
    use proptest::prelude::*;

    fn tube_fe() -> CostFactors {
        CostFactors { c_couple: 0.1873, c_fix_f: 0.6459, c_iter_f: 1.4756, c_fix_s: 0.0128, c_iter_s: 0.2076 }
    }

    fn tube_fv() -> CostFactors {
        CostFactors { c_couple: 0.0795, c_fix_f: 1.1542, c_iter_f: 0.1068, c_fix_s: 0.1587, c_iter_s: 0.2510 }
    }

    #[test]
    fn equivalent_time_on_published_cells() {
        let f = tube_fe();
        assert!((f.gamma() - 0.8460).abs() < 5e-5);
        let capped = equivalent_time((920, 920, 920), &f);
        let full = equivalent_time((755, 1321, 1647), &f);
        assert!((capped - 2326.9).abs() < 0.05);
        assert!((full - 2930.0).abs() < 0.1);
        assert!(((capped / full) - 0.79).abs() < 0.005);
        let f = tube_fv();
        let r = equivalent_time((1189, 11457, 2175), &f) / equivalent_time((1028, 21282, 2543), &f);
        assert!((r - 0.789).abs() < 5e-4);
        assert_eq!(equivalent_time((0, 0, 0), &f), 0.0);
    }

    #[test]
    fn literature_baseline() {
        let rate = 3.098512158640545;
        assert!((literature_measure((2500, 0, 0), rate) - 7746.3).abs() < 0.05);
        assert_eq!(literature_measure((0, 7, 9), rate), 0.0);
        let f = CostFactors::from_gamma(rate, 0.0, 0.0);
        assert_eq!(literature_measure((123, 456, 789), rate), equivalent_time((123, 456, 789), &f));
    }

    fn normal_equations(samples: &[(f64, f64, f64)]) -> (f64, f64) {
        let mut ata = Matrix2::zeros();
        let mut atb = Vector2::zeros();
        for &(c, p, t) in samples {
            let row = Vector2::new(c, p);
            ata += row * row.transpose();
            atb += row * t;
        }
        let x = ata.lu().solve(&atb).unwrap();
        (x[0], x[1])
    }

    #[test]
    fn solver_cost_exact_recovery() {
        let samples: Vec<_> = [(10.0, 100.0), (20.0, 150.0), (5.0, 300.0), (40.0, 90.0)]
            .iter()
            .map(|&(c, p)| (c, p, 0.9 * c + 0.07 * p))
            .collect();
        let (cf, ci) = fit_solver_cost(&samples).unwrap();
        assert!((cf - 0.9).abs() < 1e-12 && (ci - 0.07).abs() < 1e-12);

        // (1.0, 0.07) generates T = 17, 30.5, 26 on these counts
        let exact = [(10.0, 100.0, 17.0), (20.0, 150.0, 30.5), (5.0, 300.0, 26.0)];
        let (cf, ci) = fit_solver_cost(&exact).unwrap();
        assert!((cf - 1.0).abs() < 1e-12 && (ci - 0.07).abs() < 1e-12);
    }

    #[test]
    fn solver_cost_matches_normal_equations_on_inexact_data() {
        let listed = [(10.0, 100.0, 17.0), (20.0, 150.0, 28.5), (5.0, 300.0, 25.5)];
        let mut perturbed = listed;
        perturbed[1].2 += 0.1;
        for s in [&listed[..], &perturbed[..]] {
            let (cf, ci) = fit_solver_cost(s).unwrap();
            let (of, oi) = normal_equations(s);
            assert!((cf - of).abs() < 1e-12 && (ci - oi).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_counts_are_rank_deficient() {
        let s: Vec<_> = (1..6).map(|i| (i as f64, 3.0 * i as f64, i as f64)).collect();
        assert!(matches!(fit_solver_cost(&s), Err(CostError::RankDeficient(_))));
        assert!(matches!(fit_solver_cost(&s[..1]), Err(CostError::RankDeficient(_))));
    }

    #[test]
    fn coupling_cost_examples() {
        assert_eq!(fit_coupling_cost(&[(100.0, 8.0)]).unwrap(), 0.08);
        assert!((fit_coupling_cost(&[(10.0, 1.0), (20.0, 1.0)]).unwrap() - 0.06).abs() < 1e-15);
        let slope = 0.0795;
        let s: Vec<_> = [512.0, 880.0, 1300.0].iter().map(|&n| (n, slope * n)).collect();
        assert_relative_eq!(fit_coupling_cost(&s).unwrap(), slope, max_relative = 1e-14);
        assert!(fit_coupling_cost(&[(0.0, 1.0)]).is_err());
        assert!(fit_coupling_cost(&[]).is_err());
    }

    #[test]
    fn error_metric_examples() {
        assert_eq!(rrmse(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert!((rrmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 12.5_f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 3.5355).abs() < 1e-4);
        assert!((rrmse(&[3.0, 4.0], &[3.0, 0.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!((rmse(&[3.0, 4.0], &[3.0, 0.0]).unwrap() - 2.828).abs() < 1e-3);
        assert!(rrmse(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(CostError::LengthMismatch(1, 2))));
    }

    #[test]
    fn percentage_error_examples() {
        assert_eq!(mape_maxape(&[10.0, 20.0], &[10.0, 20.0]).unwrap(), (0.0, 0.0));
        let (m, x) = mape_maxape(&[10.0, 20.0], &[9.0, 22.0]).unwrap();
        assert!((m - 0.10).abs() < 1e-15 && (x - 0.10).abs() < 1e-15);
        let (m, x) = mape_maxape(&[10.0, 20.0], &[8.0, 21.0]).unwrap();
        assert!((m - 0.125).abs() < 1e-15 && (x - 0.20).abs() < 1e-15);
        assert!(mape_maxape(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn scenarios() {
        let grid = [(10, 40, 30), (25, 25, 25), (60, 60, 60)];
        let ones = scenario_cost(&grid, &Scenario::AllOnes.factors());
        assert_eq!(ones, vec![80.0, 75.0, 180.0]);
        let heavy = scenario_cost(&grid, &Scenario::ExpensiveCoupling.factors());
        let argmin = |v: &[f64]| v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmin(&heavy), 0);
        let cheap = Scenario::CheapFlow.factors();
        assert_eq!((cheap.gamma(), cheap.c_iter_f, cheap.c_iter_s), (1.0, 0.01, 1.0));
        let f = tube_fv();
        let doubled = scenario_cost(&grid, &f.scaled(2.0));
        for (a, b) in scenario_cost(&grid, &f).iter().zip(&doubled) {
            assert_eq!(2.0 * a, *b);
        }
    }

    fn factors() -> impl Strategy<Value = CostFactors> {
        (0.0..5.0_f64, 0.0..5.0_f64, 0.0..5.0_f64, 0.0..5.0_f64, 0.0..5.0_f64).prop_map(|(a, b, c, d, e)| CostFactors {
            c_couple: a,
            c_fix_f: b,
            c_iter_f: c,
            c_fix_s: d,
            c_iter_s: e,
        })
    }

    fn counts() -> impl Strategy<Value = Counts> {
        (0usize..5000, 0usize..50000, 0usize..50000)
    }

    proptest! {
        #[test]
        fn gamma_is_the_exact_sum(f in factors()) {
            prop_assert_eq!(f.gamma(), f.c_couple + f.c_fix_f + f.c_fix_s);
        }

        #[test]
        fn equivalent_time_is_linear_and_homogeneous(f in factors(), a in counts(), b in counts(), k in 0.1..10.0_f64) {
            let sum = (a.0 + b.0, a.1 + b.1, a.2 + b.2);
            let lhs = equivalent_time(sum, &f);
            let rhs = equivalent_time(a, &f) + equivalent_time(b, &f);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
            let scaled = equivalent_time(a, &f.scaled(k));
            prop_assert!((scaled - k * equivalent_time(a, &f)).abs() <= 1e-9 * scaled.max(1.0));
        }

        #[test]
        fn normalized_ratios_ignore_uniform_scaling(f in factors(), a in counts(), r in counts()) {
            let base = equivalent_time(r, &f);
            prop_assume!(base > 0.0);
            let ratio = equivalent_time(a, &f) / base;
            let twice = f.scaled(2.0);
            prop_assert_eq!(equivalent_time(a, &twice) / equivalent_time(r, &twice), ratio);
        }

        #[test]
        fn fit_residual_is_orthogonal_to_the_design(
            rows in proptest::collection::vec((1.0..500.0_f64, 1.0..5000.0_f64, 0.0..1000.0_f64), 3..20)
        ) {
            if let Ok((cf, ci)) = fit_solver_cost(&rows) {
                let (mut x1, mut x2, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0);
                for &(c, p, t) in &rows {
                    let res = t - c * cf - p * ci;
                    x1 += c * res;
                    x2 += p * res;
                    b1 += c * t;
                    b2 += p * t;
                }
                let lhs = (x1 * x1 + x2 * x2).sqrt();
                let rhs = (b1 * b1 + b2 * b2).sqrt();
                prop_assert!(lhs <= 1e-10 * rhs.max(1.0), "{} vs {}", lhs, rhs);
            }
        }

        #[test]
        fn rrmse_rmse_identity(pairs in proptest::collection::vec((-100.0..100.0_f64, -100.0..100.0_f64), 1..30)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let f: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ss: f64 = a.iter().map(|x| x * x).sum();
            prop_assume!(ss > 0.0);
            let lhs = rrmse(&a, &f).unwrap().powi(2) * ss;
            let rhs = rmse(&a, &f).unwrap().powi(2) * a.len() as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.max(1.0));
        }
    }
}
