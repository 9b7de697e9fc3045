//! The verification suite: family law checks, sufficient-statistic checks, and property
//! groups, each producing one or more [`CheckReport`]s in a fixed order.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy::*;
use crate::continuous::*;
use crate::discrete::{self, DiscreteChannel, FiniteDist, RandVarD, Space};
use crate::error::{Error, Result};
use crate::families::*;
use crate::numerics::{Interval, SeededSampler};
use crate::suffstat::*;

/// Random discrete instances per discrete property.
pub const DISCRETE_INSTANCES: u64 = 200;

/// Which part of the suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BetaFlip,
    BetaBinom,
    DirichletMult,
    NormalNormal,
    All,
}

impl Family {
    pub const NAMES: [&'static str; 5] = [
        "beta-flip",
        "beta-binom",
        "dirichlet-mult",
        "normal-normal",
        "all",
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::BetaFlip => "beta-flip",
            Family::BetaBinom => "beta-binom",
            Family::DirichletMult => "dirichlet-mult",
            Family::NormalNormal => "normal-normal",
            Family::All => "all",
        }
    }

    fn includes(self, kind: PairKind) -> bool {
        matches!(
            (self, kind),
            (Family::All, _)
                | (Family::BetaFlip, PairKind::BetaFlip)
                | (Family::BetaBinom, PairKind::BetaBinom { .. })
                | (Family::DirichletMult, PairKind::DirichletMult { .. })
                | (Family::NormalNormal, PairKind::NormalNormal { .. })
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Family::BetaFlip,
            Family::BetaBinom,
            Family::DirichletMult,
            Family::NormalNormal,
            Family::All,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Options for one suite run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub family: Family,
    /// Replace every translator by one whose first output parameter is shifted by 0.5.
    pub inject_bad_translator: bool,
}

type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckReport>> + Send + Sync + 'a>;

/// Runs the selected checks. Groups run concurrently; the report order is fixed.
pub fn run_suite(opts: SuiteOptions, cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    cfg.validate()?;
    let pairs: Vec<ConjugatePair> = shipped_pairs()
        .into_iter()
        .filter(|p| opts.family.includes(p.kind))
        .map(|p| {
            if opts.inject_bad_translator {
                p.shifted(0.5)
            } else {
                p
            }
        })
        .collect();

    let mut jobs: Vec<Job> = Vec::new();
    for pair in &pairs {
        jobs.push(Box::new(move || family_reports(pair, cfg)));
    }
    let fam = opts.family;
    if matches!(fam, Family::BetaFlip | Family::All) {
        jobs.push(Box::new(move || beta_flip_stat_reports(cfg)));
    }
    if matches!(fam, Family::NormalNormal | Family::All) {
        jobs.push(Box::new(move || normal_stat_reports(cfg)));
    }
    if fam == Family::All {
        let pairs = &pairs;
        jobs.push(Box::new(move || batch_reports(pairs, cfg)));
        jobs.push(Box::new(move || Ok(vec![normalization(cfg)?])));
        jobs.push(Box::new(move || adjunction_continuous(cfg)));
        jobs.push(Box::new(move || scalar_invariance_continuous(cfg)));
        jobs.push(Box::new(move || update_fusion_continuous(cfg)));
        jobs.push(Box::new(move || Ok(vec![fubini(cfg)?])));
        jobs.push(Box::new(move || Ok(vec![inversion_joint_continuous(cfg)?])));
        jobs.push(Box::new(move || discrete_reports(cfg)));
        jobs.push(Box::new(move || deterministic_reports(cfg)));
    }
    let groups = jobs
        .par_iter()
        .map(|job| job())
        .collect::<Result<Vec<_>>>()?;
    Ok(groups.into_iter().flatten().collect())
}

fn boolean_report(name: String, ok: bool) -> CheckReport {
    CheckReport::single(name, if ok { 0.0 } else { 1.0 }, 0.0)
}

/// Law, inversion and update checks for one pair, plus whether the law and inversion
/// verdicts agree probe by probe.
pub fn family_reports(pair: &ConjugatePair, cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let law = check_pointwise_law(pair, cfg)?;
    let inv = check_inversion_equivalence(pair, cfg)?;
    let upd = check_update_equivalence(pair, cfg)?;
    let agree = boolean_report(
        format!("verdict-agreement[{}]", pair.name),
        verdicts_agree(&law, &inv),
    );
    let mut out = vec![law, inv, upd, agree];
    if matches!(pair.kind, PairKind::DirichletMult { .. }) {
        out.push(check_inversion_parameters(pair, cfg)?);
    }
    Ok(out)
}

fn coin_batch(bits: &[usize]) -> Result<ObsBatch> {
    ObsBatch::new(
        flip_channel().obs_space(),
        bits.iter().map(|&b| Obs::Index(b)).collect(),
    )
}

fn real_batch(model: &LikelihoodChannel, ys: &[f64]) -> Result<ObsBatch> {
    ObsBatch::new(
        model.obs_space(),
        ys.iter().map(|&y| Obs::Real(y)).collect(),
    )
}

fn merge(name: &str, tolerance: f64, reports: Vec<CheckReport>) -> CheckReport {
    let per_probe = reports.into_iter().flat_map(|r| r.per_probe).collect();
    CheckReport::from_errors(name, tolerance, per_probe)
}

fn beta_flip_stat_reports(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let model = flip_channel();
    let mut sampler = SeededSampler::with_counter(cfg.seed, 0x5f01);
    let probes = [0.0, 0.1, 0.37, 0.5, 0.9, 1.0];
    let mut facts = Vec::new();
    for _ in 0..20 {
        let m = 1 + sampler.below(8);
        let bits: Vec<usize> = (0..m).map(|_| sampler.below(2)).collect();
        let stat = beta_flip_stat(m)?;
        facts.push(check_factorization(
            &stat,
            &model,
            &coin_batch(&bits)?,
            &probes,
            cfg.tol(1e-12),
        )?);
    }
    let prior = BetaParams::new(2.0, 3.0)?.state()?;
    let mut upd = check_stat_update_equiv(
        &beta_flip_stat(3)?,
        &prior,
        &model,
        &coin_batch(&[1, 1, 0])?,
        cfg,
        cfg.tol(1e-6),
    )?;
    upd.check_name = "stat-update[beta-flip]".into();
    Ok(vec![
        merge("factorization[beta-flip]", cfg.tol(1e-12), facts),
        upd,
    ])
}

fn normal_stat_reports(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let nu = NoiseLevel::new(1.0)?;
    let model = normal_likelihood(nu);
    let mut sampler = SeededSampler::with_counter(cfg.seed, 0x5f02);
    let probes = [-1.0, 0.0, 0.5, 2.0];
    let mut facts = Vec::new();
    for m in 1..=10 {
        let ys: Vec<f64> = (0..m).map(|_| 1.0 + 2.0 * sampler.normal()).collect();
        facts.push(check_factorization(
            &normal_stat(m, nu)?,
            &model,
            &real_batch(&model, &ys)?,
            &probes,
            cfg.tol(1e-9),
        )?);
    }
    let prior = NormalParams::new(0.0, 1.0)?.state(&cfg.quad)?;
    let batch = real_batch(&model, &[1.0, 2.0, 3.0])?;
    let mut upd = check_stat_update_equiv(
        &normal_stat(3, nu)?,
        &prior,
        &model,
        &batch,
        cfg,
        cfg.tol(1e-6),
    )?;
    upd.check_name = "stat-update[normal]".into();

    // posterior depends on the batch only through (m, Σy)
    let other = real_batch(&model, &[0.0, 2.0, 4.0])?;
    let d = state_distance(
        &State::Pdf(multi_update(&prior, &model, &batch, cfg)?),
        &State::Pdf(multi_update(&prior, &model, &other, cfg)?),
        cfg,
    )?;
    Ok(vec![
        merge("factorization[normal]", cfg.tol(1e-9), facts),
        upd,
        CheckReport::single("summary-compression[normal]", d, cfg.tol(1e-9)),
    ])
}

/// A prior parameter and a batch for each pair kind.
fn batch_for(pair: &ConjugatePair) -> Result<(Vec<f64>, ObsBatch)> {
    let idx = |v: &[usize]| {
        ObsBatch::new(
            pair.model.obs_space(),
            v.iter().map(|&i| Obs::Index(i)).collect(),
        )
    };
    Ok(match pair.kind {
        PairKind::BetaFlip => (vec![2.0, 3.0], idx(&[1, 0, 0, 1, 1, 0])?),
        PairKind::BetaBinom { n } => {
            let n = n as usize;
            (vec![2.0, 3.0], idx(&[n, 0, n / 2, 1, n])?)
        }
        PairKind::DirichletMult { .. } => (vec![1.0, 1.0, 1.0], idx(&[0, 2, 2, 1])?),
        PairKind::NormalNormal { .. } => (
            vec![0.0, 1.0],
            real_batch(&pair.model, &[1.0, 2.0, 3.0, -0.5])?,
        ),
    })
}

fn grid_points(st: &PdfState, n: usize) -> Vec<Vec<f64>> {
    st.support()
        .first_axis()
        .grid(n)
        .into_iter()
        .map(|x| vec![x])
        .collect()
}

/// Multi-observation properties: translator folds against one conjunction update, order
/// invariance, and sequential against fused updates.
fn batch_reports(pairs: &[ConjugatePair], cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let mut consistency = Vec::new();
    for pair in pairs {
        let (p, batch) = batch_for(pair)?;
        let folded = pair.prior.at(&pair.fold(&p, batch.obs())?, &cfg.quad)?;
        let fused = multi_update(&pair.prior.at(&p, &cfg.quad)?, &pair.model, &batch, cfg)?;
        let d = state_distance(&State::Pdf(folded), &State::Pdf(fused), cfg)?;
        consistency.push(CheckReport::single(pair.name.clone(), d, cfg.tol(1e-6)));
    }

    let mut order = Vec::new();
    let mut fold_fuse = Vec::new();
    let flip = flip_channel();
    let nu1 = normal_likelihood(NoiseLevel::new(1.0)?);
    let cases = [
        (
            BetaParams::new(2.0, 3.0)?.state()?,
            flip.clone(),
            coin_batch(&[1, 0, 0, 1, 1, 0])?,
        ),
        (
            BetaParams::new(0.5, 0.5)?.state()?,
            flip,
            coin_batch(&[0, 0, 1, 0])?,
        ),
        (
            NormalParams::new(0.0, 1.0)?.state(&cfg.quad)?,
            nu1.clone(),
            real_batch(&nu1, &[1.0, 2.0, 3.0, -0.5, 0.25])?,
        ),
    ];
    let mut sampler = SeededSampler::with_counter(cfg.seed, 0x5f03);
    for (k, (prior, model, batch)) in cases.iter().enumerate() {
        let base = multi_update(prior, model, batch, cfg)?;
        let pts = grid_points(&base, cfg.grid_points);
        for _ in 0..3 {
            let mut perm: Vec<usize> = (0..batch.len()).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, sampler.below(i + 1));
            }
            let other = multi_update(prior, model, &batch.permuted(&perm)?, cfg)?;
            order.push(CheckReport::single(
                format!("case{k}"),
                sup_diff_on(&base, &other, &pts),
                cfg.tol(1e-8),
            ));
        }
        let seq = sequential_update(prior, model, batch, cfg)?;
        let d = state_distance(&State::Pdf(seq), &State::Pdf(base), cfg)?;
        fold_fuse.push(CheckReport::single(format!("case{k}"), d, cfg.tol(1e-7)));
    }
    Ok(vec![
        merge("translator-fold-consistency", cfg.tol(1e-6), consistency),
        merge("batch-order-invariance", cfg.tol(1e-8), order),
        merge("fold-fuse-agreement", cfg.tol(1e-7), fold_fuse),
    ])
}

fn beta_grid() -> Vec<BetaParams> {
    let g = [0.5, 1.0, 2.0, 5.0];
    g.iter()
        .flat_map(|&a| {
            g.iter()
                .map(move |&b| BetaParams::new(a, b).expect("positive"))
        })
        .collect()
}

fn normal_grid() -> Vec<NormalParams> {
    let mut v = Vec::new();
    for mu in [-2.0, 0.0, 3.0] {
        for sigma in [0.5, 1.0, 2.0] {
            v.push(NormalParams::new(mu, sigma).expect("positive"));
        }
    }
    v
}

/// Every state produced by the family constructors, inversions, updates and pushes
/// integrates (or sums) to one.
fn normalization(cfg: &CheckConfig) -> Result<CheckReport> {
    let q = &cfg.quad;
    let mut states: Vec<(String, PdfState)> = Vec::new();
    let flip = flip_channel();
    let binom = binom_channel(BinomConfig::new(4)?);
    for b in beta_grid() {
        let st = b.state()?;
        for y in 0..2 {
            states.push((
                format!("flip-inversion{b:?}#{y}"),
                inversion_pdf(&flip, &st, Obs::Index(y), q)?,
            ));
        }
        for y in 0..5 {
            states.push((
                format!("binom-inversion{b:?}#{y}"),
                inversion_pdf(&binom, &st, Obs::Index(y), q)?,
            ));
        }
        states.push((format!("{b:?}"), st));
    }
    let nu = normal_likelihood(NoiseLevel::new(1.0)?);
    for p in normal_grid() {
        let st = p.state(q)?;
        for y in [-1.0, 0.5, 2.0] {
            states.push((
                format!("normal-inversion{p:?}@{y}"),
                inversion_pdf(&nu, &st, Obs::Real(y), q)?,
            ));
        }
        if let PushedObs::Real(pushed) = push_likelihood(&nu, &st, q)? {
            states.push((format!("normal-push{p:?}"), pushed));
        }
        states.push((format!("{p:?}"), st));
    }
    let mult = mult_channel(["y0", "y1", "y2"])?;
    for a in [vec![1.0, 1.0, 1.0], vec![2.0, 3.0, 4.0]] {
        let st = DirichletParams::new(a.clone())?.state()?;
        states.push((
            format!("dirichlet-inversion{a:?}"),
            inversion_pdf(&mult, &st, Obs::Index(1), q)?,
        ));
        states.push((format!("dirichlet{a:?}"), st));
    }
    let uniform = BetaParams::new(1.0, 1.0)?.state()?;
    states.push((
        "coin-HTTT".into(),
        multi_update(&uniform, &flip, &coin_batch(&[1, 0, 0, 0])?, cfg)?,
    ));

    let mut per_probe = states
        .par_iter()
        .map(|(name, st)| {
            let err = (st.total_mass(q)? - 1.0).abs();
            Ok(ProbeVerdict {
                params: Vec::new(),
                obs: name.clone(),
                err,
                passed: err <= cfg.tol(NORM_TOL),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    for k in 0..DISCRETE_INSTANCES {
        let inst = random_instance(cfg.seed, k)?;
        let pushed = discrete::push(&inst.channel, &inst.omega)?;
        let inv = discrete::inversion(&inst.channel, &inst.omega)?;
        let mut err = (pushed.weights().iter().sum::<f64>() - 1.0).abs();
        for j in 0..inv.input().len() {
            err =
                err.max((inv.row(inv.input().label(j))?.weights().iter().sum::<f64>() - 1.0).abs());
        }
        per_probe.push(ProbeVerdict {
            params: Vec::new(),
            obs: format!("discrete#{k}"),
            err,
            passed: err <= cfg.tol(NORM_TOL),
        });
    }
    Ok(CheckReport::from_errors(
        "normalization",
        cfg.tol(NORM_TOL),
        per_probe,
    ))
}

/// `ω ⊨ c ≪ r` against `c ≫ ω ⊨ r` for Beta/Flip, Beta/Binom and Normal/Normal.
fn adjunction_continuous(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let q = &cfg.quad;
    let mut errs = Vec::new();
    let models = [
        ("flip", flip_channel()),
        ("binom4", binom_channel(BinomConfig::new(4)?)),
    ];
    for (name, model) in &models {
        let ObsSpace::Finite(space) = model.obs_space() else {
            unreachable!("finite models")
        };
        let vals: Vec<f64> = (0..space.len())
            .map(|j| 0.3 + 0.6 * j as f64 / space.len() as f64)
            .collect();
        let r = ObsRandVar::Finite(RandVarD::new(space.clone(), vals)?);
        for b in beta_grid() {
            let st = b.state()?;
            let lhs = validity_pdf(&st, &pull_pdf(model, &r, q)?, q)?;
            let rhs = validity_obs(&push_likelihood(model, &st, q)?, &r, q)?;
            errs.push((format!("{name}{b:?}"), (lhs - rhs).abs()));
        }
    }
    let nu = normal_likelihood(NoiseLevel::new(1.0)?);
    let r = ObsRandVar::Real(Arc::new(|y| 1.0 / (1.0 + y * y)));
    let normal_errs = normal_grid()
        .par_iter()
        .map(|p| {
            let st = p.state(q)?;
            let lhs = validity_pdf(&st, &pull_pdf(&nu, &r, q)?, q)?;
            let rhs = validity_obs(&push_likelihood(&nu, &st, q)?, &r, q)?;
            Ok((format!("normal{p:?}"), (lhs - rhs).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    errs.extend(normal_errs);
    Ok(vec![labelled(
        "adjunction[continuous]",
        cfg.tol(1e-6),
        errs,
    )])
}

fn labelled(name: &str, tolerance: f64, errs: Vec<(String, f64)>) -> CheckReport {
    CheckReport::from_errors(
        name,
        tolerance,
        errs.into_iter()
            .map(|(obs, err)| ProbeVerdict {
                params: Vec::new(),
                obs,
                err,
                passed: err <= tolerance,
            })
            .collect(),
    )
}

/// Updating by `r` and by `1000·r` gives the same state.
fn scalar_invariance_continuous(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let q = &cfg.quad;
    let mut errs = Vec::new();
    let r = RandVarC::new(|x| x[0] * (1.0 - x[0]) + 0.1);
    for b in beta_grid() {
        let st = b.state()?;
        let d = state_distance(
            &State::Pdf(update_pdf(&st, &r, q)?),
            &State::Pdf(update_pdf(&st, &r.scale(1e3), q)?),
            cfg,
        )?;
        errs.push((format!("{b:?}"), d));
    }
    let lik = normal_likelihood(NoiseLevel::new(1.0)?).likelihood(Obs::Real(1.5))?;
    for p in normal_grid() {
        let st = p.state(q)?;
        let d = state_distance(
            &State::Pdf(update_pdf(&st, &lik, q)?),
            &State::Pdf(update_pdf(&st, &lik.scale(1e3), q)?),
            cfg,
        )?;
        errs.push((format!("{p:?}"), d));
    }
    Ok(vec![labelled(
        "scalar-invariance[continuous]",
        cfg.tol(1e-9),
        errs,
    )])
}

/// `(ω|_r)|_s = ω|_{r&s}` in sup-norm on the comparison grid.
fn update_fusion_continuous(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let q = &cfg.quad;
    let mut errs = Vec::new();
    let r = RandVarC::new(|x| 0.5 + 0.5 * x[0]);
    let s = RandVarC::new(|x| (-x[0]).exp());
    for b in beta_grid() {
        let st = b.state()?;
        let seq = update_pdf(&update_pdf(&st, &r, q)?, &s, q)?;
        let fused = update_pdf(&st, &r.and(&s), q)?;
        errs.push((
            format!("{b:?}"),
            sup_diff_on(&seq, &fused, &grid_points(&st, cfg.grid_points)),
        ));
    }
    let nu = normal_likelihood(NoiseLevel::new(1.0)?);
    let (r, s) = (
        nu.likelihood(Obs::Real(1.0))?,
        nu.likelihood(Obs::Real(-0.5))?,
    );
    for p in normal_grid() {
        let st = p.state(q)?;
        let seq = update_pdf(&update_pdf(&st, &r, q)?, &s, q)?;
        let fused = update_pdf(&st, &r.and(&s), q)?;
        errs.push((
            format!("{p:?}"),
            sup_diff_on(&seq, &fused, &grid_points(&st, cfg.grid_points)),
        ));
    }
    Ok(vec![labelled(
        "update-fusion[continuous]",
        cfg.tol(1e-8),
        errs,
    )])
}

/// Both iterated integrals over `ω ⊗ ρ`, and the graph state of the constant channel,
/// give the same value.
fn fubini(cfg: &CheckConfig) -> Result<CheckReport> {
    let q = &cfg.quad;
    let omega = BetaParams::new(2.0, 3.0)?.state()?;
    let rho = NormalParams::new(0.5, 1.0)?.state(q)?;
    let h = |x: f64, y: f64| x * y * y + (x * y).cos();
    let a = integrate_product(&omega, &rho, &h, IterationOrder::FirstInner, q)?;
    let b = integrate_product(&omega, &rho, &h, IterationOrder::SecondInner, q)?;
    let joint = graph_push(&ContChannel::Pdf(constant_channel(&rho)?), &omega)?;
    let c = joint.expect(
        &|x, y| match y {
            Obs::Real(y) => h(x, y),
            Obs::Index(_) => f64::NAN,
        },
        q,
    )?;
    let err = (a - b).abs().max((a - c).abs()).max((b - c).abs());
    Ok(CheckReport::single(
        "fubini[product-state]",
        err,
        cfg.tol(1e-8),
    ))
}

/// Masses of `⟨id, c⟩ ≫ ω` and `⟨c†_ω, id⟩ ≫ (c ≫ ω)` on rectangles, Beta/Flip.
fn inversion_joint_continuous(cfg: &CheckConfig) -> Result<CheckReport> {
    let q = &cfg.quad;
    let flip = flip_channel();
    let cells = Interval::unit().cells(4);
    let events = [vec![0], vec![1], vec![0, 1]];
    let errs = beta_grid()
        .par_iter()
        .map(|b| {
            let st = b.state()?;
            let graph = graph_push(&ContChannel::Likelihood(flip.clone()), &st)?;
            let PushedObs::Finite(pushed) = push_likelihood(&flip, &st, q)? else {
                unreachable!("finite model")
            };
            let posts = (0..2)
                .map(|y| inversion_pdf(&flip, &st, Obs::Index(y), q))
                .collect::<Result<Vec<_>>>()?;
            let mut worst = 0.0_f64;
            for m in &cells {
                for n in &events {
                    let lhs = graph.mass(m, &ObsEvent::Labels(n.clone()), q)?;
                    let mut rhs = 0.0;
                    for &y in n {
                        rhs += pushed.weights()[y] * posts[y].mass(m, q)?;
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
            Ok((format!("{b:?}"), worst))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(labelled("inversion-joint[beta-flip]", cfg.tol(1e-5), errs))
}

/// A seeded random discrete instance: a prior, a channel, and two strictly positive
/// random variables (one on each side).
#[derive(Debug, Clone)]
pub struct DiscreteInstance {
    pub omega: FiniteDist,
    pub channel: DiscreteChannel,
    pub r_in: RandVarD,
    pub s_in: RandVarD,
    pub r_out: RandVarD,
}

/// Instance number `k` under `seed`; `|X|, |Y| ∈ 1..=5`.
pub fn random_instance(seed: u64, k: u64) -> Result<DiscreteInstance> {
    let mut s = SeededSampler::with_counter(seed, 0xd15c_0000 + k);
    let nx = 1 + s.below(5);
    let ny = 1 + s.below(5);
    let (x, y) = (Space::range(nx)?, Space::range(ny)?);
    let weights = |n: usize, s: &mut SeededSampler| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| s.open01()).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    };
    let omega = FiniteDist::from_unnormalized(x.clone(), weights(nx, &mut s))?;
    let rows = (0..nx).map(|_| weights(ny, &mut s)).collect();
    let channel = DiscreteChannel::new(x.clone(), y.clone(), rows)?;
    let r_in = RandVarD::new(x.clone(), (0..nx).map(|_| 2.0 * s.open01()).collect())?;
    let s_in = RandVarD::new(x, (0..nx).map(|_| 2.0 * s.open01()).collect())?;
    let r_out = RandVarD::new(y, (0..ny).map(|_| 2.0 * s.open01()).collect())?;
    Ok(DiscreteInstance {
        omega,
        channel,
        r_in,
        s_in,
        r_out,
    })
}

/// Errors of one discrete instance against brute-force sums:
/// `[adjunction, joint equality, point update, update fusion, scalar invariance]`.
pub fn discrete_errors(inst: &DiscreteInstance) -> Result<[f64; 5]> {
    let (w, c) = (inst.omega.weights(), &inst.channel);
    let (nx, ny) = (c.input().len(), c.output().len());
    // brute-force joint ω(x)·c(x)(y) and its marginal on Y
    let joint: Vec<Vec<f64>> = (0..nx)
        .map(|i| (0..ny).map(|j| w[i] * c.entry(i, j)).collect())
        .collect();
    let marginal: Vec<f64> = (0..ny)
        .map(|j| (0..nx).map(|i| joint[i][j]).sum())
        .collect();

    let lhs = discrete::validity(&inst.omega, &discrete::pull(c, &inst.r_out)?)?;
    let rhs = discrete::validity(&discrete::push(c, &inst.omega)?, &inst.r_out)?;
    let oracle: f64 = (0..ny).map(|j| marginal[j] * inst.r_out.values()[j]).sum();
    let adjunction = (lhs - rhs).abs().max((lhs - oracle).abs());

    let graph = discrete::push(
        &discrete::tuple_channel(&DiscreteChannel::identity(c.input()), c)?,
        &inst.omega,
    )?;
    let inv = discrete::inversion(c, &inst.omega)?;
    let pushed = discrete::push(c, &inst.omega)?;
    let product = Space::product(c.input(), c.output());
    let mut joint_err = 0.0_f64;
    let mut point_err = 0.0_f64;
    for j in 0..ny {
        let label = c.output().label(j);
        let upd = discrete::update(
            &inst.omega,
            &discrete::pull(c, &RandVarD::point(c.output(), label)?)?,
        )?;
        for i in 0..nx {
            let k = product.pair_index(i, j);
            let dagger = pushed.weights()[j] * inv.entry(j, i);
            joint_err = joint_err
                .max((graph.weights()[k] - joint[i][j]).abs())
                .max((dagger - joint[i][j]).abs());
            let oracle = joint[i][j] / marginal[j];
            point_err = point_err
                .max((upd.weights()[i] - oracle).abs())
                .max((inv.entry(j, i) - oracle).abs());
        }
    }

    let (r, s) = (&inst.r_in, &inst.s_in);
    let rs = discrete::update(&discrete::update(&inst.omega, r)?, s)?;
    let sr = discrete::update(&discrete::update(&inst.omega, s)?, r)?;
    let both = discrete::update(&inst.omega, &discrete::rv_and(r, s)?)?;
    let fusion = rs.max_diff(&both)?.max(sr.max_diff(&both)?);

    let scaled = discrete::update(&inst.omega, &discrete::rv_scale(1e3, r))?;
    let scalar = scaled.max_diff(&discrete::update(&inst.omega, r)?)?;
    Ok([adjunction, joint_err, point_err, fusion, scalar])
}

fn discrete_reports(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let names = [
        "adjunction[discrete]",
        "inversion-joint[discrete]",
        "point-update[discrete]",
        "update-fusion[discrete]",
        "scalar-invariance[discrete]",
    ];
    let errs = (0..DISCRETE_INSTANCES)
        .into_par_iter()
        .map(|k| discrete_errors(&random_instance(cfg.seed, k)?))
        .collect::<Result<Vec<_>>>()?;
    let tol = cfg.tol(1e-12);
    Ok(names
        .iter()
        .enumerate()
        .map(|(n, name)| {
            labelled(
                name,
                tol,
                errs.iter()
                    .enumerate()
                    .map(|(k, e)| (format!("instance{k}"), e[n]))
                    .collect(),
            )
        })
        .collect())
}

/// Point masses pass the copy equation; diffuse states must fail it.
fn deterministic_reports(cfg: &CheckConfig) -> Result<Vec<CheckReport>> {
    let point = check_deterministic_state(
        &State::Point(PointMass {
            at: 0.3,
            carrier: Interval::unit(),
        }),
        cfg,
    )?;
    let dirac =
        check_deterministic_state(&State::Finite(discrete::dirac(&coin_space(), "1")?), cfg)?;
    let diffuse = check_deterministic_state(&State::Pdf(BetaParams::new(2.0, 3.0)?.state()?), cfg)?;
    let mut point = merge("deterministic[point]", 0.0, vec![point, dirac]);
    point.check_name = "deterministic[point]".into();
    Ok(vec![
        point,
        boolean_report("non-deterministic[beta(2,3)]".into(), !diffuse.passed),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for name in Family::NAMES {
            assert_eq!(name.parse::<Family>().unwrap().name(), name);
        }
        assert!(matches!(
            "beta".parse::<Family>(),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn discrete_instances_are_exact() {
        for k in 0..20 {
            let e = discrete_errors(&random_instance(7, k).unwrap()).unwrap();
            assert!(e.iter().all(|v| *v <= 1e-12), "{k}: {e:?}");
        }
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instance(3, 9).unwrap();
        let b = random_instance(3, 9).unwrap();
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.r_out, b.r_out);
    }
}
