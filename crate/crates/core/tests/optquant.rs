use oclab::model::{mixture_joint, product_cost, Alphabet, DistortionMatrix, FiniteMixtureQuantizer, Pmf};
use oclab::optquant::{
    enumerate_quantizers, finite_randomization_experiment, p1_vs_ot_check, solve_p1, solve_p3, CellShape, LpStatus,
};
use oclab::transport::{ot_solve, Metric};
use proptest::prelude::*;

fn normalize(raw: Vec<f64>) -> Pmf<f64> {
    let total: f64 = raw.iter().sum();
    let mut m: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // push the rounding residue into the last cell
    let head: f64 = m[..m.len() - 1].iter().sum();
    *m.last_mut().unwrap() = 1.0 - head;
    Pmf::from_masses(m).unwrap()
}

fn instance() -> impl Strategy<Value = (Pmf<f64>, Pmf<f64>, DistortionMatrix<f64>)> {
    (2usize..=5, 2usize..=5).prop_flat_map(|(xs, ys)| {
        (
            prop::collection::vec(0.05f64..1.0, xs),
            prop::collection::vec(0.05f64..1.0, ys),
            prop::collection::vec(0.0f64..2.0, xs * ys),
        )
            .prop_map(move |(a, b, c)| (normalize(a), normalize(b), DistortionMatrix::new(xs, ys, c).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn full_budget_p1_is_transport((mu, psi, rho) in instance()) {
        let r = p1_vs_ot_check(&mu, &psi, &rho, psi.len(), 1e-8).unwrap();
        prop_assert!(r.pass, "{r:?}");
        prop_assert!(r.gap.abs() <= 1e-8);
    }

    #[test]
    fn budget_and_shape_orderings((mu, psi, rho) in instance()) {
        let mut last = f64::INFINITY;
        for m in 1..=psi.len() {
            let all = solve_p1(&mu, &psi, &rho, m, CellShape::All).unwrap();
            let v = all.objective.unwrap();
            prop_assert!(v <= last + 1e-9);
            last = v;
            prop_assert!(all.dual_residual <= 1e-8);
            prop_assert!(all.output_error <= 1e-9);
            let interval = solve_p1(&mu, &psi, &rho, m, CellShape::Interval).unwrap();
            prop_assert!(interval.objective.unwrap() >= v - 1e-9);
            // a valid mixture: x-marginal is mu, objective is the weighted cost
            let mix = all.mixture.unwrap();
            let joint = mixture_joint(&mix, &mu).unwrap();
            prop_assert!(joint.marginal_error(mu.mass(), psi.mass()) <= 1e-9);
        }
        let one = solve_p1(&mu, &psi, &rho, 1, CellShape::All).unwrap();
        prop_assert!((one.objective.unwrap() - product_cost(&mu, &psi, &rho).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn p3_is_monotone_in_the_radius_and_meets_p1() {
    let mu = Pmf::<f64>::from_masses(vec![0.2, 0.5, 0.3]).unwrap();
    let psi = Pmf::<f64>::from_masses(vec![0.6, 0.1, 0.3]).unwrap();
    let a = Alphabet::new(vec![0.0, 1.0, 2.0]).unwrap();
    let rho = DistortionMatrix::squared_error(&a, &a);
    let metric = Metric::absolute(&a);
    let p1 = solve_p1(&mu, &psi, &rho, 2, CellShape::All).unwrap().objective.unwrap();
    let mut last = f64::INFINITY;
    for delta in [0.0, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.0] {
        let s = solve_p3(&mu, &psi, &rho, 2, delta, &metric, CellShape::All).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        let v = s.objective.unwrap();
        assert!(v <= last + 1e-12, "delta {delta}");
        if delta == 0.0 {
            assert!((v - p1).abs() < 1e-9);
        }
        if delta < 1.0 {
            assert!(s.output_distance.unwrap() <= delta + 1e-8);
        }
        last = v;
    }
    // radius one: the cheapest single quantizer
    let cols = enumerate_quantizers(&mu, &a, &rho, 2, CellShape::All).unwrap();
    let best = cols.iter().map(|c| c.cost).fold(f64::INFINITY, f64::min);
    assert!((last - best).abs() < 1e-12);
}

#[test]
fn p3_binary_bracket() {
    let a = Alphabet::indices(2).unwrap();
    let mu = Pmf::<f64>::from_masses(vec![0.5, 0.5]).unwrap();
    let psi = Pmf::<f64>::from_masses(vec![0.25, 0.75]).unwrap();
    let rho = DistortionMatrix::hamming(&a, &a);
    let v = solve_p3(&mu, &psi, &rho, 2, 0.1, &Metric::discrete(2), CellShape::All)
        .unwrap()
        .objective
        .unwrap();
    // under the discrete metric the ball is |p0 - 0.25| <= 0.1
    let cheapest = (0..=2000)
        .map(|i| 0.15 + 0.2 * i as f64 / 2000.0)
        .map(|p0| {
            ot_solve(&mu, &Pmf::from_masses(vec![p0, 1.0 - p0]).unwrap(), &rho)
                .unwrap()
                .cost
        })
        .fold(f64::INFINITY, f64::min);
    assert!(v <= 0.25);
    assert!(v >= cheapest - 1e-9);
}

#[test]
fn finite_randomization_rate() {
    let a = Alphabet::new(vec![0.0, 1.0, 2.0]).unwrap();
    let mu = Pmf::<f64>::from_masses(vec![0.3, 0.4, 0.3]).unwrap();
    let rho = DistortionMatrix::squared_error(&a, &a);
    let cols = enumerate_quantizers(&mu, &a, &rho, 3, CellShape::All).unwrap();
    let pick = |map: &[usize]| {
        cols.iter()
            .find(|c| c.quantizer.map() == map)
            .unwrap()
            .quantizer
            .clone()
    };
    let target =
        FiniteMixtureQuantizer::new(a.clone(), vec![0.4, 0.6], vec![pick(&[0, 1, 2]), pick(&[1, 1, 1])]).unwrap();
    let table = finite_randomization_experiment(
        &target,
        &mu,
        &rho,
        &Metric::absolute(&a),
        &[10, 100, 1000, 10_000],
        400,
        8,
    )
    .unwrap();
    let slope = table.slope.unwrap();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
    for w in table.rows.windows(2) {
        assert!(w[1].prokhorov < w[0].prokhorov);
    }
}
