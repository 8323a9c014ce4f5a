use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gl_selfdual::bogomolny::{build_pair, build_pair_with_guess, continuation_sweep, SolutionPair, SolverConfig};
use gl_selfdual::energetics::{energy_internal, gl_residual, kinetic_integral, m_e_closed_form, random_pair};
use gl_selfdual::field::ScalarField;
use gl_selfdual::landau::{apply_l_plus, eval_u0, locate_zero, rayleigh_quotient, ThetaParams};
use gl_selfdual::lattice::{Grid, Lattice};
use gl_selfdual::phase::{
    chi, classify_grid, default_h_grid, hc1_upper_bound, summarize_s, ChiRow, Phase, QuasimodeFamily,
};

const IDENTITY_FIELDS: [f64; 4] = [0.2, 0.3, 0.5, 0.65];

struct Outcome {
    pass: bool,
    detail: String,
}

struct Fixture {
    lattice: Lattice,
    grid64: Arc<Grid>,
    pairs64: Vec<SolutionPair>,
    sweep: Vec<SolutionPair>,
    sweep_time: Duration,
}

impl Fixture {
    fn new() -> Self {
        let lattice = Lattice::square();
        let grid64 = Arc::new(Grid::new(lattice, 64).unwrap());
        let cfg = SolverConfig::default();
        let pairs64 =
            IDENTITY_FIELDS.iter().map(|&h| build_pair(&lattice, &grid64, &cfg.theta, h, &cfg).unwrap()).collect();
        let start = Instant::now();
        let sweep = continuation_sweep(&lattice, &default_h_grid(), &cfg).into_result().unwrap();
        Self { lattice, grid64, pairs64, sweep, sweep_time: start.elapsed() }
    }
}

fn bkn_identity(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let theta = ThetaParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut worst = 0.0f64;
    for _ in 0..120 {
        let p = random_pair(&fx.lattice, &fx.grid64, &theta, &mut rng).unwrap();
        let h = rng.gen_range(0.02..2.0);
        worst = worst.max(energy_internal(&p.u, &p.a, FRAC_1_SQRT_2, h).unwrap().bkn_defect);
    }
    for p in fx.pairs64.iter().chain(&fx.sweep) {
        worst = worst.max(energy_internal(&p.u, &p.a, FRAC_1_SQRT_2, p.h_int).unwrap().bkn_defect);
    }
    let t = start.elapsed();
    Outcome {
        pass: worst < 1e-8 && t < Duration::from_secs(60),
        detail: format!(
            "max defect {worst:.3e} over 120 random + {} solved pairs, {:.2?}",
            fx.pairs64.len() + fx.sweep.len(),
            t
        ),
    }
}

fn self_dual_energies(fx: &Fixture) -> Outcome {
    let mut worst = 0.0f64;
    for p in &fx.pairs64 {
        let e = energy_internal(&p.u, &p.a, FRAC_1_SQRT_2, p.h_int).unwrap().internal;
        let x = p.h_int / SQRT_2;
        worst = worst.max((e - (x - x * x)).abs());
        worst = worst.max((e - m_e_closed_form(p.h_int).unwrap()).abs());
    }
    Outcome { pass: worst < 1e-6, detail: format!("max |E - m_E| {worst:.3e}") }
}

fn pair_identities(fx: &Fixture) -> Outcome {
    let (mut p_err, mut k_err, mut d_err) = (0.0f64, 0.0f64, 0.0f64);
    for p in &fx.pairs64 {
        let mu = p.mu;
        let mp = mu * PI;
        let ii = p.integrals;
        let rhs_p = mu * mu * (4.0 * PI * PI + ii.curl_energy);
        p_err = p_err.max(((ii.potential - rhs_p) / rhs_p).abs());
        let kin = kinetic_integral(&p.u, &p.a).unwrap();
        let lhs = 0.5 * mu * kin + 0.5 * mu * mu * ii.curl_energy;
        let rhs = mp - 2.0 * mp * mp;
        k_err = k_err.max(((lhs - rhs) / rhs).abs());
        d_err = d_err.max((ii.density - (1.0 - SQRT_2 * p.h_int)).abs());
    }
    Outcome {
        pass: p_err < 1e-6 && k_err < 1e-6 && d_err < 1e-6,
        detail: format!("potential rel {p_err:.3e}, kinetic rel {k_err:.3e}, density abs {d_err:.3e}"),
    }
}

fn chi_sweep(fx: &Fixture) -> Outcome {
    let rows: Vec<ChiRow> = fx.sweep.iter().map(ChiRow::from_pair).collect();
    let monotone = rows.windows(2).all(|w| w[1].chi > w[0].chi);
    let s = summarize_s(&rows).unwrap();
    let in_band = (0.74..=0.82).contains(&s.extrapolated);
    Outcome {
        pass: monotone && in_band && fx.sweep_time < Duration::from_secs(600),
        detail: format!(
            "monotone {monotone}, extrapolated S {:.6} (band [0.74, 0.82]), grid sup {:.6}, sweep {:.2?}",
            s.extrapolated, s.grid_sup, fx.sweep_time
        ),
    }
}

fn slope_sandwich(fx: &Fixture) -> Outcome {
    let family = QuasimodeFamily::from_pairs(&fx.sweep).unwrap();
    let s_grid = fx.sweep.iter().map(chi).fold(f64::NEG_INFINITY, f64::max);
    let tol = 2e-3;
    let anchor = (hc1_upper_bound(FRAC_1_SQRT_2, &family).unwrap().value - FRAC_1_SQRT_2).abs();
    let mut pass = anchor < 1e-9;
    let mut parts = vec![format!("anchor {anchor:.1e}")];
    for h in [0.01, 0.02, 0.05] {
        let d = hc1_upper_bound(FRAC_1_SQRT_2 + h, &family).unwrap().value - FRAC_1_SQRT_2;
        let ok = -h - tol <= d && d <= -s_grid * h + tol;
        pass &= ok;
        parts.push(format!("h={h}: {d:.6} in [{:.6}, {:.6}]", -h - tol, -s_grid * h + tol));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn residuals_and_uniqueness(fx: &Fixture) -> Outcome {
    let mut worst = 0.0f64;
    for p in fx.pairs64.iter().chain(&fx.sweep) {
        let b = p.bogomolny_residuals().unwrap();
        let (g1, g2) = gl_residual(&p.u, &p.a, FRAC_1_SQRT_2, p.h_int).unwrap();
        worst = worst.max(b.d_plus).max(b.field).max(g1).max(g2);
    }
    let cfg = SolverConfig::default();
    let reference = &fx.pairs64[1];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut spread = 0.0f64;
    for _ in 0..5 {
        let coeffs: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                )
            })
            .collect();
        let lat = fx.lattice;
        let init = ScalarField::from_fn(fx.grid64.clone(), |x, y| {
            let st = lat.to_lattice(x, y);
            coeffs.iter().map(|(p, q, c, d)| c * (2.0 * PI * (p * st[0] + q * st[1]) + d).cos()).sum()
        });
        let p = build_pair_with_guess(&fx.lattice, &fx.grid64, &cfg.theta, reference.h_int, &cfg, Some(&init)).unwrap();
        let diff = p.f.values().iter().zip(reference.f.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        spread = spread.max(diff);
    }
    Outcome {
        pass: worst < 1e-6 && spread < 1e-8,
        detail: format!("max residual {worst:.3e}, uniqueness spread {spread:.3e}"),
    }
}

fn ground_state(fx: &Fixture) -> Outcome {
    let theta = ThetaParams::default();
    let u0 = eval_u0(&fx.lattice, &fx.grid64, &theta).unwrap();
    let lplus = apply_l_plus(&u0).unwrap().max_modulus();
    let mass = (u0.norm_squared() - FRAC_1_SQRT_2).abs();
    let z = locate_zero(&u0).unwrap();
    let cell = 1.0 / fx.grid64.n() as f64;
    let zero_ok = z.total_winding == 1 && (z.point[0] - 0.5).abs() <= cell && (z.point[1] - 0.5).abs() <= cell;
    let rq = (rayleigh_quotient(&u0).unwrap() - 2.0 * PI).abs();
    Outcome {
        pass: lplus < 1e-10 && mass < 1e-10 && zero_ok && rq < 1e-8,
        detail: format!(
            "|L+u0| {lplus:.2e}, mass err {mass:.2e}, zero ({:.4}, {:.4}) winding {}, Rayleigh err {rq:.2e}",
            z.point[0], z.point[1], z.total_winding
        ),
    }
}

fn phase_rules(fx: &Fixture) -> Outcome {
    let family = QuasimodeFamily::from_pairs(&fx.sweep).unwrap();
    let points = classify_grid((0.3, 2.0), (0.05, 2.5), 20, 20, &family).unwrap();
    let mut contradictions = 0;
    for p in &points {
        let (k, h) = (p.k, p.h_ext);
        let bad = if k <= FRAC_1_SQRT_2 {
            (h <= FRAC_1_SQRT_2 && p.phase != Phase::Pure) || (h > FRAC_1_SQRT_2 && p.phase != Phase::Normal)
        } else if h >= k {
            p.phase != Phase::Normal
        } else {
            p.phase == Phase::Normal
        };
        contradictions += bad as usize;
    }
    Outcome { pass: contradictions == 0, detail: format!("{} points, {contradictions} contradictions", points.len()) }
}

fn main() {
    let fx = Fixture::new();
    let criteria: [(&str, fn(&Fixture) -> Outcome); 8] = [
        ("1 BKN identity", bkn_identity),
        ("2 self-dual energies", self_dual_energies),
        ("3 pair identities", pair_identities),
        ("4 chi sweep", chi_sweep),
        ("5 H_c1 slope sandwich", slope_sandwich),
        ("6 residuals and uniqueness", residuals_and_uniqueness),
        ("7 ground state", ground_state),
        ("8 phase rules", phase_rules),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check(&fx);
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
