//! Acceptance gate: runs every criterion and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};

use tlsctl::analysis::{fit_temperature_model, harmonic_mean, n_effective, quality_factor};
use tlsctl::bath::{BathState, TlsDefect};
use tlsctl::config::{build_world, load_config, RunConfig};
use tlsctl::decay::{gamma_lz, gaussian_average_survival, QubitSpec, Sweep, WaveformSpec};
use tlsctl::measurement::{fit_exponential, make_delays, run_t1_measurement, P1Curve, Spacing};
use tlsctl::protocols::{run_ac_sweep, run_interleave, ControlKind, T1Record};
use tlsctl::{io, Exec, World};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn reference_config() -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    load_config(&path).expect("reference config loads")
}

fn reference_world(seed: u64) -> World {
    let mut config = reference_config();
    config.run.seed = seed;
    build_world(&config, None).unwrap()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

fn hmean(v: &[f64]) -> f64 {
    v.len() as f64 / v.iter().map(|x| 1.0 / x).sum::<f64>()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn t1s(records: &[T1Record], kind: ControlKind) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.control.kind == kind)
        .filter_map(T1Record::usable_t1)
        .collect()
}

fn criterion_1() -> Outcome {
    let (mu, sigma) = (1.0, 0.5);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let normal = Normal::new(mu, sigma).unwrap();
    let rates: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [0.1, 0.5, 1.0] {
        let samples: Vec<f64> = rates.iter().map(|g| (-g * t).exp()).collect();
        let mc = mean(&samples);
        let se = std(&samples) / (n as f64).sqrt();
        let exact = gaussian_average_survival(mu, sigma, t).unwrap().value;
        let z = (mc - exact) / se;
        pass &= z.abs() < 3.0;
        parts.push(format!("t={t}: z={z:+.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_2() -> Outcome {
    let qubit = QubitSpec::new(4.5, 0.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, t1) in [100.0, 1000.0, 2500.0].into_iter().enumerate() {
        let grid = make_delays(Spacing::Log, 101, 10.0, 4.0 * t1).unwrap();
        let delays = grid.points();
        let mut rng = ChaCha8Rng::seed_from_u64(200 + k as u64);
        let errors: Vec<f64> = (0..200)
            .map(|_| {
                let p1: Vec<f64> = delays
                    .iter()
                    .map(|&t| {
                        let s = (-t / t1).exp();
                        let p = (1.0 - qubit.read_err_e) * s + qubit.read_err_g * (1.0 - s);
                        Binomial::new(400, p).unwrap().sample(&mut rng) as f64 / 400.0
                    })
                    .collect();
                let curve = P1Curve::new(delays.clone(), p1, vec![400; delays.len()]).unwrap();
                match fit_exponential(&curve).unwrap().t1() {
                    Some(fit) => (fit / t1 - 1.0).abs(),
                    None => f64::INFINITY,
                }
            })
            .collect();
        let med = median(errors);
        pass &= med < 0.03;
        parts.push(format!("T1={t1} us: median err {:.2}%", 100.0 * med));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_3() -> Outcome {
    let f_q: f64 = 4.5;
    let gamma0 = 4e-4;
    let delta0: f64 = 4.0;
    let eps0 = (f_q * f_q - delta0 * delta0).sqrt();
    let g_bare = 2.0 * PI * 39e-3;
    let gamma2 = 2.0 * PI * 10.0;
    let gain = 0.003;
    let defect = TlsDefect {
        epsilon0: eps0,
        delta0,
        dipole_gain: gain,
        g_bare,
        gamma2,
        diff_sigma: 0.0,
        diff_tau: 1.0,
    };
    let bath = BathState::from_defects(vec![defect], 3).unwrap();
    let qubit = QubitSpec::new(f_q, gamma0);
    let (vpp, f_ac) = (16.0, 0.1);

    // Dense-grid harmonic average of the instantaneous rate over the sweep.
    let n = 10_000;
    let rate_at = |v: f64| {
        let e = ((eps0 + gain * v).powi(2) + delta0 * delta0).sqrt();
        let g = g_bare * delta0 / e;
        let det = 2.0 * PI * 1e3 * (f_q - e);
        gamma0 + 2.0 * g * g * gamma2 / (gamma2 * gamma2 + det * det)
    };
    let mean_rate = (0..n)
        .map(|i| rate_at(-vpp / 2.0 + vpp * (i as f64 + 0.5) / n as f64))
        .sum::<f64>()
        / n as f64;
    let lz = gamma_lz(&qubit, &bath, Sweep { f_ac_hz: f_ac, vpp_v: vpp });
    let oracle_t1 = 1.0 / (mean_rate + lz);

    let mut world = World::new("single-tls", qubit, bath, 10.0, 3).unwrap();
    let settings = tlsctl::protocols::KindSettings::default().ac;
    let m = run_t1_measurement(&mut world, &WaveformSpec::Triangle { f_ac_hz: f_ac, vpp_v: vpp }, &settings).unwrap();
    let Some(t1) = m.fit.t1() else {
        return outcome(false, "AC fit did not converge");
    };
    let rel = t1 / oracle_t1 - 1.0;
    let spread = rate_at(0.0) / rate_at(vpp / 2.0);
    outcome(
        rel.abs() < 0.10,
        format!("fitted {t1:.1} us vs 1/<Gamma> {oracle_t1:.1} us ({:+.2}%), peak/edge rate {spread:.2}", 100.0 * rel),
    )
}

struct Campaign {
    seed: u64,
    records: Vec<T1Record>,
}

fn reference_campaigns() -> Vec<Campaign> {
    let config = reference_config();
    let schedule = config.protocol.interleave.clone();
    let settings = config.protocol.kind_settings();
    Exec::default().map(11, |i| {
        let seed = 1 + i as u64;
        let mut world = reference_world(seed).with_exec(Exec::Sequential);
        let records = run_interleave(&mut world, &schedule, &settings).unwrap();
        Campaign { seed, records }
    })
}

struct SeedStats {
    seed: u64,
    ac_mean: f64,
    ac_std: f64,
    nc_std: f64,
    fr_std: f64,
    fr_hmean: f64,
}

fn seed_stats(c: &Campaign) -> SeedStats {
    let ac = t1s(&c.records, ControlKind::Ac);
    let nc = t1s(&c.records, ControlKind::NoControl);
    let fr = t1s(&c.records, ControlKind::FastRandom);
    SeedStats {
        seed: c.seed,
        ac_mean: mean(&ac),
        ac_std: std(&ac),
        nc_std: std(&nc),
        fr_std: std(&fr),
        fr_hmean: hmean(&fr),
    }
}

fn criterion_4(stats: &[SeedStats]) -> Outcome {
    let r = &stats[0];
    let r_nc = r.nc_std / r.ac_std;
    let r_fr = r.fr_std / r.ac_std;
    let others: Vec<String> = stats
        .iter()
        .map(|s| format!("{}:{:.1}/{:.1}", s.seed, s.nc_std / s.ac_std, s.fr_std / s.ac_std))
        .collect();
    outcome(
        r_nc >= 5.0 && r_fr >= 5.0,
        format!(
            "seed {}: std(NC)/std(AC) = {r_nc:.2}, std(FR)/std(AC) = {r_fr:.2} (per seed NC/FR: {})",
            r.seed,
            others.join(" ")
        ),
    )
}

fn criterion_5(stats: &[SeedStats]) -> Outcome {
    let rel: Vec<f64> = stats.iter().map(|s| s.fr_hmean / s.ac_mean - 1.0).collect();
    let within10 = rel.iter().filter(|r| r.abs() < 0.10).count();
    let within30 = rel.iter().filter(|r| r.abs() < 0.30).count();
    let shown: Vec<String> = rel.iter().map(|r| format!("{:+.1}%", 100.0 * r)).collect();
    outcome(
        within10 >= 7 && within30 == stats.len(),
        format!("{within10}/{} within 10%, {within30}/{} within 30% [{}]", stats.len(), stats.len(), shown.join(" ")),
    )
}

fn criterion_6(stats: &[SeedStats]) -> Outcome {
    let n_eff: Vec<f64> = stats.iter().map(|s| n_effective(s.fr_std, s.ac_std).unwrap()).collect();
    let shown: Vec<String> = n_eff.iter().map(|n| format!("{n:.0}")).collect();
    outcome(
        n_eff[0] >= 50.0,
        format!("reference n_eff = {:.0} (per seed: {})", n_eff[0], shown.join(" ")),
    )
}

fn criterion_7() -> Outcome {
    let config = reference_config();
    let mut world = reference_world(config.run.seed);
    let settings = config.protocol.kind_settings().ac;
    let cells = run_ac_sweep(&mut world, &[4.0, 8.0, 16.0], &[0.1, 0.2, 0.4, 1.0, 10.0], 3, &settings).unwrap();
    let h = |vpp: f64, f: f64| {
        let cell = cells.iter().find(|c| c.vpp_v == vpp && c.f_ac_hz == f).unwrap();
        let t: Vec<f64> = cell.records.iter().filter_map(T1Record::usable_t1).collect();
        harmonic_mean(&t).unwrap()
    };
    let series = [h(16.0, 0.1), h(16.0, 1.0), h(16.0, 10.0)];
    let monotone = series.windows(2).all(|w| w[1] < w[0]);
    let pairs = [((8.0, 0.2), (16.0, 0.1)), ((4.0, 0.4), (8.0, 0.2))];
    let mut collapse = true;
    let mut parts = vec![format!(
        "16 V at 0.1/1/10 Hz: {:.0}/{:.0}/{:.0} us",
        series[0], series[1], series[2]
    )];
    for ((va, fa), (vb, fb)) in pairs {
        let rel = h(va, fa) / h(vb, fb) - 1.0;
        collapse &= rel.abs() < 0.10;
        parts.push(format!("({va} V,{fa} Hz) vs ({vb} V,{fb} Hz): {:+.1}%", 100.0 * rel));
    }
    outcome(monotone && collapse, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let f_q = 4.5;
    let (gamma0, gap) = (4e-4, 43.5);
    let temperatures = [10.0, 20.0, 30.0, 50.0, 70.0, 90.0, 110.0, 135.0, 150.0, 165.0, 180.0, 200.0];
    // Thermal quasiparticle rate written out independently of the library.
    let kb_over_h = 1.380_649e-23 / 6.626_070_15e-34 * 1e-3 * 1e-9;
    let qp = |t: f64| {
        let kt = kb_over_h * t;
        let x = (2.0 * PI * kt / gap).sqrt() * (-gap / kt).exp();
        x * 2.0 * f_q * 1e3 * (2.0 * gap / f_q).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut errors = Vec::with_capacity(100);
    let mut procedure_ok = true;
    for _ in 0..100 {
        let points: Vec<(f64, f64)> = temperatures
            .iter()
            .map(|&t| (t, (1.0 + noise.sample(&mut rng)) / (gamma0 + qp(t))))
            .collect();
        let fit = fit_temperature_model(&points, f_q).unwrap();
        errors.push((fit.gap_ghz / gap - 1.0).abs());
        procedure_ok &= fit
            .residuals
            .iter()
            .all(|r| r.used_in_fit == (r.temperature_mk >= 135.0));
    }
    let med = median(errors);
    outcome(
        med < 0.02 && procedure_ok,
        format!("median gap error {:.3}% over 100 trials; fit points restricted to T >= 135 mK: {procedure_ok}", 100.0 * med),
    )
}

fn criterion_9() -> Outcome {
    let q = quality_factor(4.459, 2713.0).unwrap();
    let q_ok = (q / 7.6e7 - 1.0).abs() < 0.005;
    let n = n_effective(10.0, 1.0).unwrap();
    let h = harmonic_mean(&[1.0, 2.0, 4.0]).unwrap();
    let exact = [
        quality_factor(1.0 / (2.0 * PI * 1e3), 1.0).unwrap() == 1.0,
        n == 100.0,
        (h - 12.0 / 7.0).abs() <= f64::EPSILON * 2.0,
    ];
    outcome(
        q_ok && exact.iter().all(|&b| b),
        format!("Q(4.459 GHz, 2713 us) = {q:.4e}, n_eff(10,1) = {n}, hmean(1,2,4) = {h}"),
    )
}

fn criterion_10() -> Outcome {
    let mut config = reference_config();
    config.run.seed = 7;
    config.protocol.interleave.cycles = Some(2);
    let dir = tempfile::tempdir().unwrap();
    let run = |exec: Exec, name: &str| {
        let mut world = build_world(&config, None).unwrap().with_exec(exec);
        let records = run_interleave(&mut world, &config.protocol.interleave, &config.protocol.kind_settings()).unwrap();
        let path = dir.path().join(name);
        io::write_records(&path, &records).unwrap();
        std::fs::read(path).unwrap()
    };
    let a = run(Exec::default(), "a.jsonl");
    let b = run(Exec::default(), "b.jsonl");
    let c = run(Exec::Sequential, "c.jsonl");
    outcome(
        !a.is_empty() && a == b && a == c,
        format!("{} bytes; repeat identical: {}; sequential identical: {}", a.len(), a == b, a == c),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, start: Instant, o: Outcome| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} [{verdict}] {name} ({:.1} s): {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };

    let t = Instant::now();
    report(1, "gaussian-average identity", t, criterion_1());
    let t = Instant::now();
    report(2, "fit recovery", t, criterion_2());
    let t = Instant::now();
    report(3, "AC harmonic-average law", t, criterion_3());

    let t = Instant::now();
    let campaigns = reference_campaigns();
    let stats: Vec<SeedStats> = campaigns.iter().map(seed_stats).collect();
    let shared = t.elapsed().as_secs_f64();
    println!("(reference campaigns, 11 seeds x 40 cycles: {shared:.1} s)");
    let t = Instant::now();
    report(4, "stabilization", t, criterion_4(&stats));
    report(5, "convergence", t, criterion_5(&stats));
    report(6, "n_eff magnitude", t, criterion_6(&stats));

    let t = Instant::now();
    report(7, "sweep-rate collapse", t, criterion_7());
    let t = Instant::now();
    report(8, "temperature fit", t, criterion_8());
    let t = Instant::now();
    report(9, "formula spot-checks", t, criterion_9());
    let t = Instant::now();
    report(10, "determinism", t, criterion_10());

    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
