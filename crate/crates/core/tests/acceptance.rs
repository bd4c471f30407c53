//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sqsa::automata::{build_family, k_threshold, min_word_length, FamilyConfig, Semiautomaton};
use sqsa::perm::{all_permutations, all_transpositions};
use sqsa::sq::{
    elimination_bound, pairwise_chi, query_lower_bound, sq_dim_certificate, u_inner_product,
    BuiltinQuery, ChiMethod, OracleSession,
};
use sqsa::symrep::{
    char_ratio, irrep_dim, std_matrix, transposition_character, Partition, StdCache,
};
use sqsa::walk::{
    deviation_from_expected, expected_operator, fix_fourier_check, mixing_scan, p_agree_bruteforce,
    p_agree_exact, symmetric_eigenvalues, CoupledWalk, DEFAULT_BRUTE_LIMIT,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(elapsed <= Duration::from_secs(limit_secs), || {
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn pair(n: usize, k: usize, seed: u64) -> (Semiautomaton, Semiautomaton) {
    let fam = build_family(&FamilyConfig {
        n,
        k,
        m: 2,
        p: 0.5,
        seed,
    })
    .unwrap();
    (fam.members()[0].clone(), fam.members()[1].clone())
}

fn factorial(n: u128) -> u128 {
    (1..=n).product()
}

fn agreement_formula() -> Outcome {
    let clock = Instant::now();
    let mut worst = 0.0_f64;
    for i in 0..100u64 {
        let n = [3, 4, 5][(i % 3) as usize];
        let k = [1, 2][((i / 3) % 2) as usize];
        let cache = StdCache::new(n).unwrap();
        let (a, b) = pair(n, k, i);
        for t in 0..=4 {
            let exact = p_agree_exact(&a, &b, t, &cache).unwrap().p_agree;
            let brute = p_agree_bruteforce(&a, &b, t, DEFAULT_BRUTE_LIMIT)
                .unwrap()
                .p_agree;
            worst = worst.max((exact - brute).abs());
        }
    }
    check(worst <= 1e-10, || {
        format!("max |exact - brute| = {worst:e}")
    })?;
    within(clock.elapsed(), 60)?;
    Ok(format!(
        "max |exact - brute| = {worst:.2e} over 500 evaluations"
    ))
}

fn expected_spectrum() -> Outcome {
    let clock = Instant::now();
    let mut worst = 0.0_f64;
    for n in 4..=8usize {
        let nf = n as f64;
        let blocks = [
            ((nf - 2.0) / (nf - 1.0), 1),
            ((2.0 * nf - 5.0) / (2.0 * (nf - 1.0)), n - 1),
            (
                (nf * nf - 3.0 * nf + 1.0) / (nf * (nf - 1.0)),
                n * (n - 3) / 2,
            ),
            ((nf - 3.0) / (nf - 1.0), (n - 1) * (n - 2) / 2),
        ];
        let mut target: Vec<f64> = blocks
            .iter()
            .flat_map(|&(v, mult)| std::iter::repeat_n(v, mult))
            .collect();
        target.sort_by(f64::total_cmp);
        let cache = StdCache::new(n).unwrap();
        let eigs =
            symmetric_eigenvalues(expected_operator(n, 0.5, &cache).unwrap().matrix()).unwrap();
        check(eigs.len() == target.len(), || {
            format!(
                "N={n}: {} eigenvalues, expected {}",
                eigs.len(),
                target.len()
            )
        })?;
        for (x, y) in eigs.iter().zip(&target) {
            worst = worst.max((x - y).abs());
        }
    }
    check(worst <= 1e-9, || format!("max eigenvalue error {worst:e}"))?;
    within(clock.elapsed(), 60)?;
    Ok(format!("N=4..8, max eigenvalue error {worst:.2e}"))
}

fn fix_fourier() -> Outcome {
    let clock = Instant::now();
    let mut notes = Vec::new();
    for n in 3..=5 {
        let r = fix_fourier_check(n).map_err(|e| e.to_string())?;
        check(r.std_std_relative_error <= 1e-6, || {
            format!(
                "N={n}: std⊗std relative error {:e}",
                r.std_std_relative_error
            )
        })?;
        check(r.triv_std_max <= 1e-8 && r.std_triv_max <= 1e-8, || {
            format!(
                "N={n}: cross sums {:e} / {:e}",
                r.triv_std_max, r.std_triv_max
            )
        })?;
        notes.push(format!("N={n} rel {:.1e}", r.std_std_relative_error));
    }
    within(clock.elapsed(), 300)?;
    Ok(notes.join(", "))
}

fn mixing_bounds() -> Outcome {
    let n = 5;
    let k = k_threshold(n).unwrap() as usize;
    let cache = StdCache::new(n).unwrap();
    let (mut violations, mut upper, mut lower) = (0, 0, 0);
    for seed in 0..200 {
        let (a, b) = pair(n, k, seed);
        let scan = mixing_scan(&a, &b, 200, &cache).unwrap();
        // recheck every row against the envelopes directly
        for row in &scan.rows {
            let t = row.t as i32;
            if scan.upper_applies && row.residual.abs() > (1.0 - 1.0 / 10.0f64).powi(t) {
                violations += 1;
            }
            if scan.lower_applies && row.residual < 0.5 * (1.0 - 3.0 / 5.0f64).powi(t) {
                violations += 1;
            }
        }
        violations += scan.violations;
        upper += usize::from(scan.upper_applies);
        lower += usize::from(scan.lower_applies);
    }
    check(violations == 0, || format!("{violations} bound violations"))?;
    Ok(format!(
        "k={k}, upper bound applied on {upper}/200 pairs, lower on {lower}/200, 0 violations"
    ))
}

fn concentration() -> Outcome {
    let n = 5;
    let k = k_threshold(n).unwrap() as usize;
    let cache = StdCache::new(n).unwrap();
    let mut exceed = 0;
    let mut worst = 0.0_f64;
    for seed in 0..200 {
        let (a, b) = pair(n, k, seed);
        let walk = CoupledWalk::new(&a, &b, &cache).unwrap();
        let dev = deviation_from_expected(walk.operator(), 0.5, &cache).unwrap();
        worst = worst.max(dev);
        exceed += usize::from(dev > 1.0 / (2.0 * n as f64));
    }
    check(exceed == 0, || {
        format!("{exceed}/200 pairs exceed 1/(2N); worst {worst}")
    })?;
    Ok(format!(
        "k={k}, 0/200 exceed 0.1, worst ‖M - E[M]‖ = {worst:.4}"
    ))
}

fn indistinguishability() -> Outcome {
    let clock = Instant::now();
    let n = 5;
    let k = k_threshold(n).unwrap() as usize;
    let t = min_word_length(n).unwrap() as usize;
    let fam = build_family(&FamilyConfig {
        n,
        k,
        m: 24,
        p: 0.5,
        seed: 0,
    })
    .unwrap();
    let cache = StdCache::new(n).unwrap();
    let cert = sq_dim_certificate(&fam, t, 24, &cache).map_err(|e| e.to_string())?;
    check(cert.pairs_checked == 276, || {
        format!("{} pairs checked", cert.pairs_checked)
    })?;
    check(cert.max_abs_chi <= 1.0 / 120.0, || {
        format!("max |p_agree - 1/5| = {:e} > 1/120", cert.max_abs_chi)
    })?;
    check(cert.passed, || "certificate at d=24 failed".into())?;
    within(clock.elapsed(), 600)?;
    Ok(format!(
        "k={k}, T={t}, max |χ| = {:.2e} over 276 pairs",
        cert.max_abs_chi
    ))
}

fn all_masks(n: usize, k: usize) -> Vec<Semiautomaton> {
    let bits = k * n * (n - 1) / 2;
    (0..1u32 << bits)
        .map(|m| {
            Semiautomaton::from_mask(n, k, (0..bits).map(|j| m >> j & 1 == 1).collect()).unwrap()
        })
        .collect()
}

/// Greedy subfamily with pairwise `|χ| ≤ 1/d_target`.
fn greedy_certified(
    pool: &[Semiautomaton],
    t: usize,
    d_target: usize,
    cache: &StdCache,
) -> Vec<Semiautomaton> {
    let mut chosen: Vec<Semiautomaton> = Vec::new();
    for cand in pool {
        let ok = chosen.iter().all(|c| {
            pairwise_chi(c, cand, t, ChiMethod::BruteForce, cache)
                .unwrap()
                .chi
                .abs()
                <= 1.0 / d_target as f64
        });
        if ok {
            chosen.push(cand.clone());
            if chosen.len() == d_target {
                break;
            }
        }
    }
    chosen
}

fn sq_machinery() -> Outcome {
    let n = 3;
    let cache = StdCache::new(n).unwrap();
    let k1 = all_masks(n, 1);
    let k2 = all_masks(n, 2);

    let mut worst = 0.0_f64;
    let mut pairs = 0;
    for t in 0..=3 {
        for pool in [&k1, &k2[..16]] {
            for f in pool.iter() {
                for g in pool.iter() {
                    let ip = u_inner_product(f, g, t).unwrap();
                    let chi = pairwise_chi(f, g, t, ChiMethod::BruteForce, &cache)
                        .unwrap()
                        .chi;
                    worst = worst.max((ip - chi).abs());
                    pairs += 1;
                }
            }
        }
    }
    check(worst <= 1e-12, || {
        format!("max |⟨u_f,u_g⟩ - χ| = {worst:e}")
    })?;

    // elimination counts on certified subfamilies
    let mut sessions = 0;
    let mut applicable = 0;
    for t in 1..=3 {
        for d_target in 2..=8 {
            let concepts = greedy_certified(&k2, t, d_target, &cache);
            let d = concepts.len();
            if d < 2 || d < d_target {
                continue;
            }
            for tau in [0.3, 0.5, 0.7, 0.9, 1.2, 1.5] {
                let Some(bound) = elimination_bound(d, tau, n) else {
                    continue;
                };
                applicable += 1;
                let mut s = OracleSession::new(concepts.clone(), t, tau).unwrap();
                let mut battery = vec![
                    BuiltinQuery::Constant { value: 1.0 },
                    BuiltinQuery::Parity {},
                ];
                battery.extend((0..n).map(|shift| BuiltinQuery::StartAgreement { shift }));
                battery.extend((0..d).map(|reference| BuiltinQuery::LabelIndicator { reference }));
                for q in &battery {
                    s.ask(q).unwrap();
                }
                // signed sums of concept indicators
                for sign_mask in 0u32..1 << d.min(6) {
                    let cs = concepts.clone();
                    let h = move |w: &[usize], x: usize, y: usize| {
                        let v: f64 = cs
                            .iter()
                            .enumerate()
                            .take(6)
                            .map(|(i, c)| {
                                let hit = f64::from(u8::from(c.run_word(w, x).unwrap() == y));
                                if sign_mask >> i & 1 == 1 {
                                    hit
                                } else {
                                    -hit
                                }
                            })
                            .sum();
                        (v / 6.0).clamp(-1.0, 1.0)
                    };
                    s.answer("signed-indicator-sum", serde_json::Value::Null, &h)
                        .unwrap();
                }
                for e in s.ledger() {
                    check(e.eliminated_ids.len() as f64 <= bound, || {
                        format!(
                            "T={t} d={d} τ={tau}: query {} eliminated {} > bound {bound}",
                            e.query_id,
                            e.eliminated_ids.len()
                        )
                    })?;
                }
                sessions += 1;
            }
        }
    }

    let tuples: [(usize, f64, usize, f64); 10] = [
        (120, 0.5, 5, 2975.0 / 960.0),
        (10, 1.0, 2, 3.6),
        (100, 0.5, 3, 5.445),
        (1000, 0.1, 5, 0.624375),
        (2, 0.5, 2, -0.375),
        (50, 0.25, 2, 0.55125),
        (64, 0.125, 4, -0.4921875),
        (1, 0.5, 3, 0.0),
        (400, 0.2, 10, 0.3325),
        (24, 0.75, 5, 195.5 / 192.0),
    ];
    for (d, tau, y, want) in tuples {
        let got = query_lower_bound(d, tau, y).unwrap();
        check((got - want).abs() <= 1e-12 * want.abs().max(1.0), || {
            format!("query_lower_bound({d}, {tau}, {y}) = {got}, expected {want}")
        })?;
    }
    Ok(format!(
        "{pairs} inner products (max err {worst:.1e}), {sessions}/{applicable} oracle sessions within elimination bound, 10 bound tuples"
    ))
}

fn representation_base() -> Outcome {
    for n in 1..=7usize {
        let sum: u128 = Partition::all(n)
            .iter()
            .map(|l| irrep_dim(l).unwrap().pow(2))
            .sum();
        check(sum == factorial(n as u128), || {
            format!("N={n}: Σ d² = {sum}")
        })?;
    }
    for n in 2..=5usize {
        for g in all_permutations(n) {
            let trace = std_matrix(&g).unwrap().trace();
            check((g.fix_count() as f64 - 1.0 - trace).abs() < 1e-12, || {
                format!("N={n}: χ_perm({g}) ≠ 1 + χ_std")
            })?;
        }
        let tau = all_transpositions(n).unwrap()[0].to_permutation(n).unwrap();
        let r_std = std_matrix(&tau).unwrap().trace() / (n - 1) as f64;
        let ratio = |p: &Partition| {
            let r = char_ratio(p).unwrap();
            *r.numer() as f64 / *r.denom() as f64
        };
        check(
            (ratio(&Partition::standard(n).unwrap()) - r_std).abs() < 1e-12,
            || format!("N={n}: r(std) mismatch"),
        )?;
        check(ratio(&Partition::trivial(n).unwrap()) == 1.0, || {
            format!("N={n}: r(triv) ≠ 1")
        })?;
    }
    for n in 4..=7usize {
        let parts = [
            Partition::trivial(n).unwrap(),
            Partition::standard(n).unwrap(),
            Partition::new(vec![n - 2, 2]).unwrap(),
            Partition::new(vec![n - 2, 1, 1]).unwrap(),
        ];
        let at_id: u128 = parts.iter().map(|p| irrep_dim(p).unwrap()).sum();
        let at_tau: i128 = parts
            .iter()
            .map(|p| transposition_character(p).unwrap())
            .sum();
        let chi_std_tau = n as i128 - 3;
        check(
            at_id == ((n - 1) * (n - 1)) as u128 && at_tau == chi_std_tau * chi_std_tau,
            || format!("N={n}: std⊗std character sums {at_id}, {at_tau}"),
        )?;
    }
    Ok("Σd²=N! (N≤7), χ_perm=1+χ_std (N≤5), ratios, std⊗std sums (N=4..7)".into())
}

fn run_cli(dir: &Path, args: &[&str], jobs: usize, out: &str) -> Result<Vec<u8>, String> {
    let out_path = dir.join(out);
    let status = Command::new(env!("CARGO_BIN_EXE_sqsa"))
        .current_dir(dir)
        .args(args)
        .args([
            "--jobs",
            &jobs.to_string(),
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || {
        format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        )
    })?;
    std::fs::read(&out_path).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = ["--n", "4", "--k", "2", "--m", "8", "--seed", "11"];
    let fam_args: Vec<&str> = ["family"]
        .iter()
        .chain(&base)
        .copied()
        .chain(["--family", "fam.bin"])
        .collect();
    let mut family_bytes = None;
    for jobs in [1, 3, 1] {
        run_cli(dir.path(), &fam_args, jobs, "family.json")?;
        let bytes = std::fs::read(dir.path().join("fam.bin")).map_err(|e| e.to_string())?;
        match &family_bytes {
            None => family_bytes = Some(bytes),
            Some(prev) => check(prev == &bytes, || {
                format!("family file differs at --jobs {jobs}")
            })?,
        }
    }

    let commands: Vec<Vec<&str>> = vec![
        vec!["family", "--family", "fam2.bin", "--n", "5", "--m", "6"],
        vec!["pagree", "--family", "fam.bin", "--t", "9"],
        vec![
            "pagree", "--family", "fam.bin", "--t", "4", "--method", "brute", "--format", "csv",
        ],
        vec![
            "pagree",
            "--family",
            "fam.bin",
            "--t",
            "30",
            "--method",
            "mc",
            "--samples",
            "20000",
        ],
        vec!["spectrum", "--n", "6"],
        vec![
            "spectrum", "--family", "fam.bin", "--method", "realized", "--pair", "2,5",
        ],
        vec!["mixing", "--family", "fam.bin", "--t-max", "60"],
        vec![
            "mixing", "--n", "5", "--m", "2", "--seed", "4", "--format", "json",
        ],
        vec!["certify", "--family", "fam.bin", "--t", "26"],
        vec![
            "oracle", "--family", "fam.bin", "--t", "4", "--tau", "0.2", "--d", "6",
        ],
        vec![
            "oracle",
            "--family",
            "fam.bin",
            "--t",
            "12",
            "--tau",
            "0.1",
            "--samples",
            "3000",
        ],
    ];
    for args in &commands {
        let first = run_cli(dir.path(), args, 1, "a.out")?;
        for jobs in [1, 2, 4] {
            let again = run_cli(dir.path(), args, jobs, "b.out")?;
            check(first == again, || {
                format!("{args:?} output differs at --jobs {jobs}")
            })?;
        }
    }
    check(
        std::fs::read(dir.path().join("fam.bin")).ok() == family_bytes,
        || "input family file was modified".into(),
    )?;
    Ok(format!(
        "{} commands byte-identical across --jobs 1,2,4",
        commands.len() + 1
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("agreement-formula equivalence", agreement_formula),
        ("expected spectrum", expected_spectrum),
        ("fix-Fourier summation", fix_fourier),
        ("mixing upper/lower bounds", mixing_bounds),
        ("concentration frequency", concentration),
        ("indistinguishability target", indistinguishability),
        ("SQ machinery", sq_machinery),
        ("representation-theory base", representation_base),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail}; {secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({why}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
