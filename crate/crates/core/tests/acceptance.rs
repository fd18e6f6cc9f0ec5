//! Reproduction checks on 60-site chains. Prints one line per criterion and
//! exits nonzero if any fails. Takes tens of minutes in release mode.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{brute_force_concurrence, random_rho, random_unitary2, singlet_projector};
use nalgebra::Vector4;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxz_tebd::observables::concurrence;
use xxz_tebd::quench::{first_peak, onset, oracle_check, simulate, Protocol, QuenchConfig, PEAK_PROMINENCE};
use xxz_tebd::spin_model::Mat4;
use xxz_tebd::tebd::EvolutionRecord;
use xxz_tebd::{DensityMatrix4, SpinOperators};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, o: &Outcome) {
    println!("criterion {id}: {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

struct Run {
    label: String,
    config: QuenchConfig,
    record: EvolutionRecord,
}

fn run(protocol: Protocol, j_z: f64, max_bond_dim: usize, t_max: f64) -> Run {
    let config = QuenchConfig { protocol, j_z, max_bond_dim, t_max, ..QuenchConfig::default() };
    let label = format!("{} j_z={j_z} m={max_bond_dim} t_max={t_max}", protocol.name());
    let start = Instant::now();
    let record = simulate(&config).unwrap_or_else(|e| panic!("{label}: {e}"));
    eprintln!("  {label}: {:.0} s", start.elapsed().as_secs_f64());
    Run { label, config, record }
}

// 1-based bond i is the pair (i, i + 1)
fn series(r: &Run, bond: usize) -> Vec<f64> {
    r.record.bond_series(bond - 1)
}

fn oracle() -> Outcome {
    let jz = [0.0, 1.0, 2.0];
    let coarse = oracle_check(10, &jz, 0.025, 10.0, 1, SpinOperators::SpinHalf).unwrap();
    let fine = oracle_check(10, &jz, 0.0125, 10.0, 1, SpinOperators::SpinHalf).unwrap();
    let worst = coarse.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let ratios: Vec<f64> = coarse.iter().zip(&fine).map(|(a, b)| a.max_deviation / b.max_deviation).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    Outcome {
        pass: worst <= 5e-3 && ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        detail: format!("max |dC| {worst:.3e} (limit 5e-3), dt-halving ratios in [{lo:.3}, {hi:.3}] (need [3, 5])"),
    }
}

fn domain_wall_peaks(dw0: &Run, dw05: &Run) -> Outcome {
    let peak = |r: &Run| {
        let s = series(r, 25);
        first_peak(&s, PEAK_PROMINENCE).map(|k| (r.record.times[k], s[k]))
    };
    let (a, b) = (peak(dw0), peak(dw05));
    let ok = |p: Option<(f64, f64)>, target: f64| p.is_some_and(|(_, c)| (c - target).abs() <= 0.01);
    Outcome {
        pass: ok(a, 0.427) && ok(b, 0.259),
        detail: format!("C_25,26 first peak j_z=0: {a:?} (target 0.427), j_z=0.5: {b:?} (target 0.259)"),
    }
}

fn neel_bulk(neel1: &Run) -> Outcome {
    let times = &neel1.record.times;
    let mut peak_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut late_max = 0.0f64;
    let mut missing = 0;
    for bond in 11..50 {
        let s = series(neel1, bond);
        let Some(k) = first_peak(&s, PEAK_PROMINENCE) else {
            missing += 1;
            continue;
        };
        peak_range = (peak_range.0.min(times[k]), peak_range.1.max(times[k]));
        // past the peak means past the end of its descent
        let mut trough = k + 1;
        while trough + 1 < s.len() && s[trough + 1] < s[trough] {
            trough += 1;
        }
        late_max = late_max.max(s[trough..].iter().cloned().fold(0.0, f64::max));
    }
    Outcome {
        pass: missing == 0 && (peak_range.0 - 0.7).abs() <= 0.1 + 1e-9 && (peak_range.1 - 0.7).abs() <= 0.1 + 1e-9 && late_max <= 0.11,
        detail: format!(
            "bulk first-peak times in [{:.3}, {:.3}] (target 0.7 +- 0.1), {missing} bonds without a peak, max after the peak {late_max:.4} (limit 0.11)",
            peak_range.0, peak_range.1
        ),
    }
}

fn regimes(neel: &[Run]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in neel.iter().filter(|r| [0.0, 0.5, 1.5, 2.0].contains(&r.config.j_z)) {
        let s = series(r, 30);
        let Some(k) = first_peak(&s, PEAK_PROMINENCE) else {
            pass = false;
            parts.push(format!("j_z={}: no peak", r.config.j_z));
            continue;
        };
        let after = &s[k + 1..];
        if r.config.j_z < 1.0 {
            let last_above = after.iter().rposition(|&c| c >= 0.02);
            let settled = last_above.map_or(0, |i| i + 1);
            let ok = settled < after.len();
            pass &= ok;
            let t = if ok { r.record.times[k + 1 + settled] } else { f64::NAN };
            parts.push(format!("j_z={}: below 0.02 for good from t={t}", r.config.j_z));
        } else {
            let frac = after.iter().filter(|&&c| c > 0.02).count() as f64 / after.len() as f64;
            pass &= frac > 0.6;
            parts.push(format!("j_z={}: above 0.02 at {:.1}% of later times", r.config.j_z, 100.0 * frac));
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn mirror(runs: &[&Run]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let mut worst = 0.0f64;
        for row in &r.record.concurrence_profiles {
            let n = row.len();
            for b in 0..n {
                worst = worst.max((row[b] - row[n - 1 - b]).abs());
            }
        }
        pass &= worst <= 1e-4;
        parts.push(format!("{}: {worst:.2e}", r.label));
    }
    Outcome { pass, detail: format!("max |C_i - C_(N-i)| (limit 1e-4): {}", parts.join(", ")) }
}

fn light_cone(dw0: &Run) -> Outcome {
    let mut xs = Vec::new();
    let mut ts = Vec::new();
    for bond in 30..=40 {
        match onset(&series(dw0, bond), 0.05) {
            Some(k) => {
                xs.push((bond - 30) as f64);
                ts.push(dw0.record.times[k]);
            }
            None => return Outcome { pass: false, detail: format!("bond {bond} never exceeds 0.05") },
        }
    }
    let n = xs.len() as f64;
    let (mx, mt) = (xs.iter().sum::<f64>() / n, ts.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ts).map(|(x, t)| (x - mx) * (t - mt)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    Outcome {
        pass: r2 >= 0.95,
        detail: format!("onset slope {:.4} per site, R^2 {r2:.5} (need 0.95)", sxy / sxx),
    }
}

fn conservation(runs: &[&Run]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in runs {
        let rec = &r.record;
        let norm_dev = rec.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        let e0 = rec.energy[0];
        // relative to |E0|, with an absolute floor for states of zero energy
        let drift = rec.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1.0);
        let m0: f64 = rec.magnetization_profiles[0].iter().sum();
        let mag_dev =
            rec.magnetization_profiles.iter().map(|p| (p.iter().sum::<f64>() - m0).abs()).fold(0.0, f64::max);
        let ok = norm_dev <= 1e-8 && drift <= 1e-3 && mag_dev <= 1e-8;
        pass &= ok;
        parts.push(format!(
            "{}{}: norm {norm_dev:.1e}, energy {drift:.2e}, Sz {mag_dev:.1e}",
            if ok { "" } else { "[x] " },
            r.label
        ));
    }
    Outcome { pass, detail: format!("(limits 1e-8, 1e-3, 1e-8) {}", parts.join("; ")) }
}

fn truncation_control(m60: &Run, m40: &Run) -> Outcome {
    let mut worst = 0.0f64;
    for (t, row40) in m40.record.times.iter().zip(&m40.record.concurrence_profiles) {
        let k = m60.record.times.iter().position(|x| x == t).unwrap();
        for (a, b) in m60.record.concurrence_profiles[k].iter().zip(row40) {
            worst = worst.max((a - b).abs());
        }
    }
    Outcome { pass: worst <= 1e-4, detail: format!("max |C(m=60) - C(m=40)| for t <= 20: {worst:.3e} (limit 1e-4)") }
}

fn concurrence_units() -> Outcome {
    let c = |m: Mat4| concurrence(&DensityMatrix4::new(m).unwrap()).unwrap().value;
    let singlet = c(singlet_projector());

    let mut product_max = 0.0f64;
    for idx in 0..4 {
        product_max = product_max.max(c(Mat4::from_fn(|r, col| C64::from((r == idx && col == idx) as u8 as f64))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (u, v) = (random_unitary2(&mut rng), random_unitary2(&mut rng));
        let a = u.column(0).into_owned();
        let b = v.column(0).into_owned();
        let psi = Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]);
        product_max = product_max.max(c(psi * psi.adjoint()));
    }

    let p = 0.5;
    let werner = singlet_projector() * C64::from(p) + Mat4::identity() * C64::from((1.0 - p) / 4.0);
    let (w, w_brute) = (c(werner), brute_force_concurrence(&werner));

    let mut lu = 0.0f64;
    for _ in 0..100 {
        let rho = random_rho(&mut rng);
        let uv = random_unitary2(&mut rng).kronecker(&random_unitary2(&mut rng));
        lu = lu.max((c(rho) - c(uv * rho * uv.adjoint())).abs());
    }
    Outcome {
        pass: (singlet - 1.0).abs() <= 1e-12 && product_max <= 1e-12 && (w - 0.25).abs() <= 1e-10 && (w - w_brute).abs() <= 1e-10 && lu <= 1e-8,
        detail: format!(
            "singlet {singlet:.15}, products max {product_max:.1e}, Werner {w:.15} (brute force {w_brute:.15}), local-unitary spread {lu:.1e}"
        ),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results = Vec::new();
    let mut record = |id: u32, name: &'static str, o: Outcome| {
        eprintln!("  criterion {id} done");
        results.push((id, name, o));
    };

    record(1, "oracle equivalence", oracle());
    record(9, "concurrence units", concurrence_units());

    eprintln!("domain-wall runs");
    let dw0 = run(Protocol::DomainWall, 0.0, 60, 40.0);
    let dw05 = run(Protocol::DomainWall, 0.5, 60, 40.0);
    let dw1 = run(Protocol::DomainWall, 1.0, 60, 40.0);
    let dw1_m40 = run(Protocol::DomainWall, 1.0, 40, 20.0);
    record(2, "domain-wall first peaks", domain_wall_peaks(&dw0, &dw05));
    record(6, "light cone", light_cone(&dw0));
    record(8, "truncation control", truncation_control(&dw1, &dw1_m40));

    eprintln!("anisotropy-quench runs");
    let neel: Vec<Run> = [0.0, 0.5, 1.0, 1.5, 2.0].iter().map(|&j| run(Protocol::AnisotropyQuench, j, 60, 40.0)).collect();
    record(3, "bulk peak and plateau", neel_bulk(&neel[2]));
    record(4, "j_z regimes", regimes(&neel));

    let full: Vec<&Run> = [&dw0, &dw05, &dw1].into_iter().chain(neel.iter()).collect();
    record(5, "mirror symmetry", mirror(&full));
    record(7, "conservation", conservation(&full));

    results.sort_by_key(|r| r.0);
    for (id, name, o) in &results {
        report(*id, name, o);
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("{} of {} criteria passed ({:.0} s)", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
