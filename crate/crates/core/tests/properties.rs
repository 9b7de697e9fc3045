use conjugate_core::conjugacy::{state_distance, CheckConfig, State};
use conjugate_core::continuous::{LikelihoodChannel, Obs};
use conjugate_core::discrete::*;
use conjugate_core::families::*;
use conjugate_core::suffstat::*;
use proptest::prelude::*;

fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    })
}

fn instance() -> impl Strategy<Value = (FiniteDist, DiscreteChannel, RandVarD)> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(nx, ny)| {
        (
            dist(nx),
            prop::collection::vec(dist(ny), nx),
            prop::collection::vec(0.0f64..3.0, ny),
        )
            .prop_map(move |(w, rows, r)| {
                let (x, y) = (Space::range(nx).unwrap(), Space::range(ny).unwrap());
                (
                    FiniteDist::new(x.clone(), w).unwrap(),
                    DiscreteChannel::new(x, y.clone(), rows).unwrap(),
                    RandVarD::new(y, r).unwrap(),
                )
            })
    })
}

fn row_sums(c: &DiscreteChannel) -> f64 {
    (0..c.input().len())
        .map(|i| {
            let s: f64 = (0..c.output().len()).map(|j| c.entry(i, j)).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn adjunction_holds((w, c, r) in instance()) {
        let lhs = validity(&w, &pull(&c, &r).unwrap()).unwrap();
        let rhs = validity(&push(&c, &w).unwrap(), &r).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn point_update_is_inversion_column((w, c, _r) in instance()) {
        let inv = inversion(&c, &w).unwrap();
        for j in 0..c.output().len() {
            let y = c.output().label(j);
            let upd = update(&w, &pull(&c, &RandVarD::point(c.output(), y).unwrap()).unwrap()).unwrap();
            prop_assert!(upd.max_diff(&inv.row(y).unwrap()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn channel_algebra_stays_stochastic((_w, c, _r) in instance(), (_v, d, _s) in instance()) {
        prop_assert!(row_sums(&tensor(&c, &d)) <= 1e-12);
        let back = inversion(&c, &push(&DiscreteChannel::identity(c.input()), &_w).unwrap()).unwrap();
        prop_assert!(row_sums(&compose(&back, &c).unwrap()) <= 1e-12);
        prop_assert!(row_sums(&tuple_channel(&c, &c).unwrap()) <= 1e-12);
    }

    #[test]
    fn updates_commute((w, _c, _r) in instance(), seed in 0u64..1000) {
        let n = w.space().len();
        let r = RandVarD::new(w.space().clone(), (0..n).map(|i| 0.1 + ((seed + i as u64) % 7) as f64).collect()).unwrap();
        let s = RandVarD::new(w.space().clone(), (0..n).map(|i| 0.2 + ((seed * 3 + i as u64) % 5) as f64).collect()).unwrap();
        let rs = update(&update(&w, &r).unwrap(), &s).unwrap();
        let sr = update(&update(&w, &s).unwrap(), &r).unwrap();
        let both = update(&w, &rv_and(&r, &s).unwrap()).unwrap();
        prop_assert!(rs.max_diff(&both).unwrap() <= 1e-12);
        prop_assert!(sr.max_diff(&both).unwrap() <= 1e-12);
    }

    #[test]
    fn beta_flip_fold_depends_on_counts(bits in prop::collection::vec(0u8..2, 0..12), a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let p0 = BetaParams::new(a, b).unwrap();
        let p = bits.iter().try_fold(p0, |p, &i| h_beta_flip(p, i)).unwrap();
        let ones = bits.iter().filter(|&&i| i == 1).count() as f64;
        prop_assert!((p.alpha - (a + ones)).abs() <= 1e-12);
        prop_assert!((p.beta - (b + bits.len() as f64 - ones)).abs() <= 1e-12);
    }

    #[test]
    fn normal_posterior_sd_shrinks(mu in -5.0f64..5.0, sigma in 0.01f64..10.0, nu in 0.01f64..10.0, y in -10.0f64..10.0) {
        let q = h_normal(NormalParams::new(mu, sigma).unwrap(), NoiseLevel::new(nu).unwrap(), y);
        prop_assert!(q.sigma < sigma && q.sigma < nu);
        prop_assert!(q.mu >= mu.min(y) - 1e-12 && q.mu <= mu.max(y) + 1e-12);
    }

    #[test]
    fn normal_stat_factorizes(ys in prop::collection::vec(-4.0f64..4.0, 1..=10), nu in 0.5f64..2.0) {
        let nu = NoiseLevel::new(nu).unwrap();
        let model = normal_likelihood(nu);
        let batch = ObsBatch::new(model.obs_space(), ys.iter().map(|&y| Obs::Real(y)).collect()).unwrap();
        let r = check_factorization(&normal_stat(ys.len(), nu).unwrap(), &model, &batch, &[-1.0, 0.0, 0.7, 2.0], 1e-9).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn beta_stat_factorizes(bits in prop::collection::vec(0usize..2, 1..=8)) {
        let model = flip_channel();
        let batch = ObsBatch::new(model.obs_space(), bits.iter().map(|&b| Obs::Index(b)).collect()).unwrap();
        let r = check_factorization(&beta_flip_stat(bits.len()).unwrap(), &model, &batch, &[0.0, 0.2, 0.5, 0.8, 1.0], 1e-12).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }
}

fn fused(
    model: &LikelihoodChannel,
    obs: Vec<Obs>,
    prior: &conjugate_core::continuous::PdfState,
) -> conjugate_core::continuous::PdfState {
    let batch = ObsBatch::new(model.obs_space(), obs).unwrap();
    multi_update(prior, model, &batch, &CheckConfig::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batch_order_does_not_matter(bits in prop::collection::vec(0usize..2, 1..=6), seed in any::<u64>()) {
        let cfg = CheckConfig::default();
        let prior = BetaParams::new(2.0, 2.0).unwrap().state().unwrap();
        let model = flip_channel();
        let mut shuffled = bits.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed % k as u64) as usize);
        shuffled.reverse();
        let a = fused(&model, bits.iter().map(|&b| Obs::Index(b)).collect(), &prior);
        let b = fused(&model, shuffled.iter().map(|&b| Obs::Index(b)).collect(), &prior);
        let pts: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0]).collect();
        prop_assert!(conjugate_core::continuous::sup_diff_on(&a, &b, &pts) <= 1e-8);
        let ones = bits.iter().sum::<usize>() as f64;
        let want = BetaParams::new(2.0 + ones, 2.0 + k as f64 - ones).unwrap().state().unwrap();
        prop_assert!(state_distance(&State::Pdf(a), &State::Pdf(want), &cfg).unwrap() <= 1e-6);
    }
}
