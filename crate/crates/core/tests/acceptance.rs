//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyhorizon::fields::{Quadratic, SinCos, SinSin};
use polyhorizon::geometry::regular_polygon;
use polyhorizon::operator::{
    apply_operator, c_n, energy_norm_sq, k_gamma_estimate, rescaled_apply, sigma_polygon,
    sigma_regular_constant, sigma_regular_peridynamic, taylor_residual, QuadratureSpec,
};
use polyhorizon::solver::{build_grid, Field, DEFAULT_REFINE};
use polyhorizon::study::{run_study, StudyConfig, StudyPath};
use polyhorizon::{Kernel, KernelFamily, NeighborhoodSpec, Point2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Constant-kernel second moment of the inscribed regular n-gon, summed over
/// its fan triangles with `int sec^4 = tan + tan^3 / 3`.
fn sigma_constant_by_triangles(n: usize) -> f64 {
    let a = PI / n as f64;
    let t = a.tan();
    4.0 / PI * n as f64 * a.cos().powi(4) / 4.0 * (t + t * t * t / 3.0)
}

fn sigma_closed_forms() -> Outcome {
    let constant = Kernel::constant_2d();
    let peri = Kernel::peridynamic_2d();
    let mut worst: f64 = 0.0;
    for n in [4, 6, 8, 16, 64] {
        let poly = regular_polygon(Point2::ORIGIN, 1.0, n, 0.0).unwrap();
        let (a, b) = sigma_polygon(&constant, &poly).unwrap();
        let want = sigma_regular_constant(n).unwrap();
        worst = worst.max((a - want).abs()).max((b - want).abs());
        let (a, b) = sigma_polygon(&peri, &poly).unwrap();
        let want = sigma_regular_peridynamic(n).unwrap();
        worst = worst.max((a - want).abs()).max((b - want).abs());
    }
    let s4 = sigma_regular_constant(4).unwrap();
    let formula_err = (s4 - 4.0 / (3.0 * PI)).abs();

    // Monte Carlo over [-1, 1]^2 with a membership test against the polygon itself.
    let square = regular_polygon(Point2::ORIGIN, 1.0, 4, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 10_000_000;
    let mut sum = 0.0;
    for _ in 0..samples {
        let p = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if square.contains(p) {
            sum += p.x * p.x;
        }
    }
    let mc = 4.0 / PI * 4.0 * sum / samples as f64;
    let mc_err = (mc - s4).abs();
    check(
        worst <= 1e-8 && formula_err <= 1e-12 && mc_err <= 1e-3,
        format!("max |quad - closed| = {worst:.2e}; sigma(4) - 4/(3pi) = {formula_err:.1e}; Monte Carlo {mc:.5} vs {s4:.5}"),
    )
}

fn kernel_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for (family, s) in [
            (KernelFamily::Constant, None),
            (KernelFamily::Linear, None),
            (KernelFamily::GaussianLike, None),
            (KernelFamily::Singular, Some(1.0)),
        ] {
            let k = Kernel::new(family, d, s).unwrap();
            worst = worst.max((k.second_moment(1.0).unwrap() - 1.0).abs());
        }
    }
    check(worst <= 1e-10, format!("max |second moment - 1| = {worst:.2e} over 4 kernels, d = 1..3"))
}

fn operator_consistency() -> Outcome {
    let k = Kernel::constant_2d();
    let q = QuadratureSpec::default();
    let x = Point2::new(0.45, 0.55);
    let c8 = c_n(8).unwrap();
    let mut ball_err: f64 = 0.0;
    let mut poly_err: f64 = 0.0;
    let mut rescaled_err: f64 = 0.0;
    for delta in [0.2, 0.1, 0.05] {
        let v = apply_operator(&Quadratic, x, &k, &NeighborhoodSpec::ball(delta), &q).unwrap();
        ball_err = ball_err.max((v - 4.0).abs());
        let nb = NeighborhoodSpec::regular(delta, 8);
        let v = apply_operator(&Quadratic, x, &k, &nb, &q).unwrap();
        poly_err = poly_err.max((v - c8).abs());
        let v = rescaled_apply(&Quadratic, x, &k, &nb, &q).unwrap();
        rescaled_err = rescaled_err.max((v - 4.0).abs());
    }
    let gap = 4.0 - c8;
    let oracle_gap = 4.0 - 4.0 * sigma_constant_by_triangles(8);
    let gap_err = (gap - oracle_gap).abs();
    check(
        ball_err <= 1e-8 && poly_err <= 1e-8 && rescaled_err <= 1e-8 && gap_err <= 1e-6 && gap > 0.0,
        format!(
            "ball {ball_err:.1e}, octagon vs C_8 {poly_err:.1e}, rescaled {rescaled_err:.1e}; gap 4 - C_8 = {gap:.7} (triangle oracle {oracle_gap:.7})"
        ),
    )
}

fn taylor_residual_decay() -> Outcome {
    let k = Kernel::constant_2d();
    let q = QuadratureSpec::with_order(24);
    let x = Point2::new(0.3, 0.4);
    let r1 = taylor_residual(&SinCos, x, &k, &NeighborhoodSpec::regular(0.2, 8), &q).unwrap();
    let r2 = taylor_residual(&SinCos, x, &k, &NeighborhoodSpec::regular(0.1, 8), &q).unwrap();
    let ratio = r1 / r2;
    check(
        (3.5..=4.5).contains(&ratio),
        format!("residual {r1:.3e} -> {r2:.3e}, ratio {ratio:.4}"),
    )
}

fn norm_sandwich() -> Outcome {
    let k = Kernel::constant_2d();
    let grid = build_grid(1.0 / 64.0, 0.125).unwrap();
    let nb = NeighborhoodSpec::regular(0.125, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = 0;
    for _ in 0..10 {
        let values = (0..grid.dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = Field::from_values(&grid, values).unwrap();
        let e = energy_norm_sq(&field, &k, &nb, DEFAULT_REFINE).unwrap();
        if e.truncated <= e.polygon && e.polygon <= e.ball {
            ok += 1;
        }
    }
    check(ok == 10, format!("{ok}/10 random fields satisfy truncated <= polygon <= ball"))
}

fn norm_limit() -> Outcome {
    let k = Kernel::constant_2d();
    let delta = 1.0 / 16.0;
    let grid = build_grid(1.0 / 256.0, delta).unwrap();
    let field = Field::sample(&grid, &SinSin);
    let exact = SinSin::DIRICHLET_ENERGY;
    let ball = energy_norm_sq(&field, &k, &NeighborhoodSpec::ball(delta), DEFAULT_REFINE).unwrap();
    let poly = energy_norm_sq(&field, &k, &NeighborhoodSpec::regular(delta, 64), DEFAULT_REFINE).unwrap();
    let rb = (ball.ball - exact).abs() / exact;
    let rp = (poly.polygon - exact).abs() / exact;
    check(
        rb <= 0.05 && rp <= 0.05,
        format!("ball {:.5} ({:.2}%), 64-gon {:.5} ({:.2}%), limit {exact:.7}", ball.ball, 100.0 * rb, poly.polygon, 100.0 * rp),
    )
}

fn study(path: StudyPath, configure: impl FnOnce(&mut StudyConfig)) -> Vec<f64> {
    let mut cfg = StudyConfig::new(path, vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]);
    cfg.beta = 1.5;
    cfg.refine = 16;
    configure(&mut cfg);
    run_study(&cfg).unwrap().errors()
}

fn convergence_diagram() -> Outcome {
    let ball = study(StudyPath::BallBaseline, |_| {});
    let fixed = study(StudyPath::FixedN, |c| c.n = Some(8));
    let tol = StudyConfig::new(StudyPath::FixedN, vec![1.0]).cg_tol;
    let growing = study(StudyPath::GrowingN, |c| {
        c.n_c = Some(0.5);
        c.n_p = Some(0.5);
        c.n_multiple = 4;
    });
    let decreasing = |e: &[f64]| e.windows(2).all(|w| w[1] < w[0]);
    let a = decreasing(&ball);
    let plateau = fixed[2] / fixed[1];
    let b = (0.8..=1.2).contains(&plateau) && fixed[2] > 100.0 * tol;
    let c = decreasing(&growing) && growing[2] < 0.5 * growing[0];
    let fmt = |e: &[f64]| e.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ");
    check(
        a && b && c,
        format!(
            "(a) ball [{}] {}; (b) n=8 [{}] e3/e2 = {plateau:.3} {}; (c) growing [{}] e3/e1 = {:.3} {}",
            fmt(&ball),
            if a { "ok" } else { "FAIL" },
            fmt(&fixed),
            if b { "ok" } else { "FAIL" },
            fmt(&growing),
            growing[2] / growing[0],
            if c { "ok" } else { "FAIL" },
        ),
    )
}

fn k_gamma() -> Outcome {
    let k = Kernel::constant_2d();
    let v1 = k_gamma_estimate(&k, &NeighborhoodSpec::regular(0.1, 8), 1).unwrap();
    let v2 = k_gamma_estimate(&k, &NeighborhoodSpec::regular(0.05, 8), 1).unwrap();
    // Constant kernel times the area between the circle and the octagon.
    let oracle = 4.0 / PI * (PI - 4.0 * (PI / 4.0).sin()) / (0.1 * 0.1);
    let ratio = v2 / v1;
    check(
        (v1 - 39.874).abs() <= 0.1 && (v1 - oracle).abs() <= 1e-6 && (ratio - 4.0).abs() <= 0.08,
        format!("K(0.1) = {v1:.4} (area oracle {oracle:.4}), K(0.05)/K(0.1) = {ratio:.4}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("sigma closed forms vs quadrature", sigma_closed_forms),
        ("kernel normalization", kernel_normalization),
        ("operator consistency and loss of AC", operator_consistency),
        ("Taylor residual O(delta^2)", taylor_residual_decay),
        ("energy norm sandwich", norm_sandwich),
        ("energy norm limit", norm_limit),
        ("convergence diagram", convergence_diagram),
        ("K(gamma) diagnostic", k_gamma),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
