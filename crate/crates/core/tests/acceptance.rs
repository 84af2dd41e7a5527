//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::Instant;

use falva::cli::{cmd_check, ExitStatus, ProblemFile};
use falva::control::{
    embed_variational, energy_rate_at, pontryagin_gaps_at, solve_shooting, ControlJet, ControlProblem,
    ShootingConfig,
};
use falva::solvers::{compare_trajectories, solve_direct, solve_indirect, BoundaryMode, SolveConfig};
use falva::specquad::{gamma, jacobi_rule};
use falva::symexpr::{Expr, Jet, VarRef};
use falva::trajectory::Trajectory;
use falva::variational::{
    el_residual, friction_force, friction_force_first_order, friction_force_second_order, interior_nodes,
    verify_identities, FalvaProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Random polynomial Lagrangian in θ and `q_c^(d)`, `d ≤ m`, that always
/// depends on every top-order slot.
fn random_lagrangian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Expr {
    let slot = |rng: &mut ChaCha8Rng| -> Expr {
        if rng.random_bool(0.15) {
            Expr::theta()
        } else {
            Expr::var(VarRef::State(rng.random_range(0..n), rng.random_range(0..=m)))
        }
    };
    let mut terms: Vec<Expr> =
        (0..n).map(|c| Expr::mul(Expr::constant(0.5), Expr::powi(Expr::var(VarRef::State(c, m)), 2))).collect();
    for _ in 0..rng.random_range(2..5) {
        let coef = Expr::constant((rng.random_range(-100..=100) as f64) / 100.0);
        let factors = rng.random_range(1..4);
        let mut term = coef;
        for _ in 0..factors {
            term = Expr::mul(term, slot(rng));
        }
        terms.push(term);
    }
    Expr::sum(terms)
}

/// Degree-10 curve `Σ c_k (θ−a)^k / k!` with `|c_k| ≤ 1`.
fn taylor_trajectory(rng: &mut ChaCha8Rng, n: usize, interval: (f64, f64)) -> Trajectory {
    let coeffs: Vec<Vec<f64>> = (0..n).map(|_| (0..=10).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    Trajectory::interpolate(interval, 10, n, |th| {
        let s = th - interval.0;
        coeffs
            .iter()
            .map(|c| {
                let mut acc = 0.0;
                let mut p = 1.0;
                for (k, ck) in c.iter().enumerate() {
                    if k > 0 {
                        p *= s / k as f64;
                    }
                    acc += ck * p;
                }
                acc
            })
            .collect()
    })
    .unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=2);
        let alpha = [0.25, 0.5, 0.75, 1.0][rng.random_range(0..4)];
        let l = random_lagrangian(&mut rng, m, n);
        let pb = FalvaProblem::new(alpha, 0.0, 1.0, m, n, l, vec![vec![0.0; n]; m]).map_err(err)?;
        let tr = taylor_trajectory(&mut rng, n, (0.0, 1.0));
        let nodes = interior_nodes(&pb, &tr, 32, 1e-3);
        let report = verify_identities(&pb, &tr, &nodes).map_err(err)?;
        worst = worst.max(report.norms.identity_sup);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9 && secs < 30.0, format!("max identity gap {worst:.2e}, {secs:.2} s"))
}

fn random_jet(rng: &mut ChaCha8Rng, n: usize, order: usize) -> Jet {
    let q = (0..n).map(|_| (0..=order).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    Jet::new(rng.random_range(0.0..0.95), q)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let m = 1 + k % 2;
        let n = rng.random_range(1..=2);
        let alpha = rng.random_range(0.05..1.0);
        let pb = FalvaProblem::new(alpha, 0.0, 1.0, m, n, random_lagrangian(&mut rng, m, n), vec![vec![0.0; n]; m])
            .map_err(err)?;
        let jet = random_jet(&mut rng, n, 2 * m);
        let cond = pb.conditions();
        let general = cond.friction_from_towers(jet.theta, &cond.tower_values(&jet).map_err(err)?);
        let hand = if m == 1 { friction_force_first_order(&pb, &jet) } else { friction_force_second_order(&pb, &jet) }
            .map_err(err)?;
        for (g, h) in general.iter().zip(&hand) {
            worst = worst.max((g - h).abs() / h.abs().max(1.0));
        }
    }
    ensure(worst <= 1e-10, format!("max relative gap {worst:.2e} over 100 evaluations"))
}

fn criterion_3() -> Outcome {
    // L = ½q''² + ½q'² + ¼q⁴: EL = q³ − q'' + q'''', DR = q'·EL
    let pb = FalvaProblem::parse(1.0, 0.0, 1.0, 2, 1, "0.5*q0d2^2 + 0.5*q0d1^2 + 0.25*q0^4", vec![vec![0.0]; 2])
        .map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut el_gap, mut dr_gap, mut friction): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let tr = taylor_trajectory(&mut rng, 1, (0.0, 1.0));
        for _ in 0..5 {
            let th = rng.random_range(0.0..0.99);
            let j = tr.jet_at(th, 4).map_err(err)?;
            let q = &j.q[0];
            let el = q[0].powi(3) - q[2] + q[4];
            let pc = pb.conditions().evaluate(&j).map_err(err)?;
            el_gap = el_gap.max((pc.el[0] - el).abs());
            dr_gap = dr_gap.max((pc.dr - q[1] * el).abs());
            friction = friction.max(friction_force(&pb, &tr, th).map_err(err)?[0].abs());
            el_gap = el_gap.max((el_residual(&pb, &tr, th).map_err(err)?[0] - el).abs());
        }
    }
    ensure(
        friction == 0.0 && el_gap <= 1e-12 && dr_gap <= 1e-12,
        format!("F = {friction}, EL gap {el_gap:.2e}, DR gap {dr_gap:.2e}"),
    )
}

fn free_particle_q(theta: f64) -> f64 {
    2.0 / 3.0 * (1.0 - (1.0 - theta).powf(1.5))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let pb = FalvaProblem::parse(0.5, 0.0, 1.0, 1, 1, "0.5*q0d1^2", vec![vec![0.0]]).map_err(err)?;
    let theta_f = 0.999;
    let grid: Vec<f64> = (0..=999).map(|k| k as f64 * 1e-3).collect();

    let cfg = SolveConfig::new(BoundaryMode::InitialJet { higher: vec![vec![1.0]] }).with_degree(300);
    let ind = solve_indirect(&pb, &cfg).map_err(err)?;
    let qd = ind.trajectory.derivative(1);
    let ind_err = grid.iter().map(|&th| (qd.eval(th)[0] - (1.0 - th).sqrt()).abs()).fold(0.0, f64::max);

    let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![free_particle_q(theta_f)]] })
        .with_degree(120)
        .with_theta_f(theta_f);
    let dir = solve_direct(&pb, &cfg).map_err(err)?;
    let dir_err = grid.iter().map(|&th| (dir.trajectory.eval(th)[0] - free_particle_q(th)).abs()).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        ind.converged && ind_err <= 1e-6 && dir_err <= 1e-5 && secs < 5.0,
        format!("indirect q' error {ind_err:.2e}, direct q error {dir_err:.2e}, {secs:.2} s"),
    )
}

fn criterion_5() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for alpha in [0.5, 1.0] {
        let pb = FalvaProblem::parse(alpha, 0.0, 1.0, 1, 1, "0.5*q0d1^2 + 0.5*q0^2", vec![vec![0.0]]).map_err(err)?;
        let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![1.0]] }).with_degree(120);
        let direct = solve_direct(&pb, &cfg).map_err(err)?;
        let indirect = solve_indirect(&pb, &cfg).map_err(err)?;
        let cmp = compare_trajectories(&direct.trajectory, &indirect.trajectory, 1e-5);
        ok &= cmp.agree;
        details.push(format!("alpha {alpha}: gap {:.2e}", cmp.trajectory_gap));
    }
    ensure(ok, details.join(", "))
}

fn criterion_6() -> Outcome {
    let (mut exact_gap, mut sum_gap): (f64, f64) = (0.0, 0.0);
    for a10 in 1..=10 {
        let alpha = a10 as f64 / 10.0;
        for (a, t) in [(0.0, 1.0), (0.5, 2.0)] {
            for n in [1, 2, 5, 10, 20] {
                let rule = jacobi_rule(alpha, a, t, n).map_err(err)?;
                let h: f64 = t - a;
                sum_gap = sum_gap.max((rule.weight_sum() - h.powf(alpha) / alpha).abs() / (h.powf(alpha) / alpha));
                for k in 0..2 * n {
                    // ∫_a^t (θ−a)^k (t−θ)^(α−1) dθ = h^(k+α) Γ(k+1) Γ(α) / Γ(k+1+α)
                    let kf = k as f64;
                    let exact = h.powf(kf + alpha) * gamma(kf + 1.0).map_err(err)? * gamma(alpha).map_err(err)?
                        / gamma(kf + 1.0 + alpha).map_err(err)?;
                    let got = rule.integrate(|x| (x - a).powi(k as i32));
                    exact_gap = exact_gap.max((got - exact).abs() / exact);
                }
            }
        }
    }
    ensure(exact_gap <= 1e-12 && sum_gap <= 1e-12, format!("monomial error {exact_gap:.2e}, weight-sum error {sum_gap:.2e}"))
}

/// Closed-form LQ extremal for L = ½u², φ = u, q(0) = 0, t = 1.
fn lq_jet(alpha: f64, pbar: f64, theta: f64) -> ControlJet {
    let s: f64 = 1.0 - theta;
    ControlJet {
        theta,
        q: vec![-pbar * (1.0 - s.powf(2.0 - alpha)) / (2.0 - alpha)],
        q_dot: vec![-pbar * s.powf(1.0 - alpha)],
        u: vec![-pbar * s.powf(1.0 - alpha)],
        u_dot: vec![pbar * (1.0 - alpha) * s.powf(-alpha)],
        p: vec![pbar],
        p_dot: vec![0.0],
    }
}

fn criterion_7() -> Outcome {
    let (alpha, pbar) = (0.5, 0.7);
    let cp = ControlProblem::parse(alpha, 0.0, 1.0, 1, "0.5*u0^2", &["u0"], vec![0.0]).map_err(err)?;
    let (mut gap, mut energy, mut min_dtheta): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for k in 0..50 {
        let jet = lq_jet(alpha, pbar, 0.98 * k as f64 / 49.0);
        gap = gap.max(pontryagin_gaps_at(&cp, &jet).map_err(err)?.max());
        let rate = energy_rate_at(&cp, &jet).map_err(err)?;
        energy = energy.max(rate.gap());
        min_dtheta = min_dtheta.min(rate.d_theta.abs());
    }
    let cfg = ShootingConfig::default();
    let target = lq_jet(alpha, pbar, cfg.end(&cp)).q;
    let res = solve_shooting(&cp, &target, &cfg).map_err(err)?;
    let recovered = (res.costate_initial[0] - pbar).abs();
    ensure(
        gap <= 1e-9 && energy <= 1e-8 && recovered <= 1e-6 && min_dtheta > 1e-6,
        format!(
            "Pontryagin gap {gap:.2e}, energy gap {energy:.2e}, p error {recovered:.2e}, min |dH/dtheta| {min_dtheta:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let pb = FalvaProblem::parse(0.5, 0.0, 1.0, 1, 1, "0.5*q0d1^2", vec![vec![0.0]]).map_err(err)?;
    let cfg = SolveConfig::new(BoundaryMode::FixedEnds { final_values: vec![vec![1.0]] }).with_degree(300);
    let var = solve_indirect(&pb, &cfg).map_err(err)?;
    let cp = embed_variational(&pb).map_err(err)?;
    let shoot = solve_shooting(&cp, &[1.0], &ShootingConfig::default()).map_err(err)?;
    let cmp = compare_trajectories(&var.trajectory, &shoot.extremal.q, 1e-5);
    ensure(cmp.agree, format!("sup gap {:.2e}", cmp.trajectory_gap))
}

fn criterion_9() -> Outcome {
    let pb = FalvaProblem::parse(0.5, 0.0, 1.0, 1, 1, "0.5*q0d1^2", vec![vec![0.0]]).map_err(err)?;
    let exact = Trajectory::interpolate((0.0, 0.999), 300, 1, |th| vec![free_particle_q(th)]).map_err(err)?;
    let bump = Trajectory::interpolate((0.0, 0.999), 300, 1, |th| vec![0.05 * (3.0 * th).sin()]).map_err(err)?;
    let perturbed = bump.axpy(1.0, &exact).map_err(err)?;
    let nodes = interior_nodes(&pb, &perturbed, 64, 1e-3);
    let el = verify_identities(&pb, &perturbed, &nodes).map_err(err)?.norms.sup;

    let cp = ControlProblem::parse(0.5, 0.0, 1.0, 1, "0.5*u0^2", &["u0"], vec![0.0]).map_err(err)?;
    let mut jet = lq_jet(0.5, 0.7, 0.4);
    jet.u[0] += 0.1;
    let pontryagin = pontryagin_gaps_at(&cp, &jet).map_err(err)?.max();

    let file = ProblemFile::from_toml(
        "kind = \"variational\"\nalpha = 0.5\nt = 1.0\nm = 1\nstate_dim = 1\nlagrangian = \"0.5*q0d1^2\"\ninitial = [[0.0]]\n",
    )
    .map_err(err)?;
    let grid = perturbed.uniform_grid(201);
    let mut csv = String::from("theta,q0,q0d1,q0d2\n");
    for th in grid {
        let j = perturbed.jet_at(th, 2).map_err(err)?;
        csv.push_str(&format!("{th},{},{},{}\n", j.q[0][0], j.q[0][1], j.q[0][2]));
    }
    let status = cmd_check(&file, &csv, 1e-6).map_err(err)?.status;
    ensure(
        el > 1e-2 && pontryagin > 1e-2 && status == ExitStatus::ResidualFailure,
        format!("EL sup {el:.2e}, Pontryagin gap {pontryagin:.2e}, check exit {}", status.code()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("identity suite on 100 random problems", criterion_1),
        ("general vs hand-expanded friction force", criterion_2),
        ("classical limit", criterion_3),
        ("analytic fractional free particle", criterion_4),
        ("direct vs indirect solvers", criterion_5),
        ("Gauss-Jacobi exactness and weight sums", criterion_6),
        ("LQ control extremal and shooting", criterion_7),
        ("embedding consistency", criterion_8),
        ("negative controls", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}: {name} ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {name} ({detail})", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
