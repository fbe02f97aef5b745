//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signlab_core::concentration::{atom_spectrum, concentration, count_mitm, elo_ceiling, Method};
use signlab_core::exactcount::{census, CensusMode, CensusOptions, CensusRecord};
use signlab_core::hyperspec::sample_hyperplane;
use signlab_core::smoothing::{
    collision_probability, lazy_walk_zero_atom, sandwich_report, smoothing_modulus, t_of_hyperplane,
    LazyDistribution,
};
use signlab_core::{det_exact, Error, Limits, NormalVector, SignMatrix};

const FOURIER_TOL: f64 = 1e-9;
const PARITY_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-9;
const SMALL_CENSUS_BUDGET: Duration = Duration::from_secs(1);
const N6_CENSUS_BUDGET: Duration = Duration::from_secs(600);
const MC_BUDGET: Duration = Duration::from_secs(120);

type Row = HashMap<String, String>;
type Criterion = (&'static str, fn() -> String);

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn signlab(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("signlab").chain(args.iter().copied());
    let code = signlab_cli::run_with_io(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn parse_csv(text: &str) -> Vec<Row> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(str::to_string)).collect())
        .collect()
}

/// Runs a subcommand that must succeed and returns its CSV rows.
fn rows(args: &[&str]) -> Vec<Row> {
    let run = signlab(args);
    assert_eq!(run.code, 0, "signlab {args:?} failed: {}", run.stderr);
    parse_csv(&run.stdout)
}

fn int(row: &Row, key: &str) -> BigInt {
    row[key].parse().unwrap_or_else(|_| panic!("{key}={:?} is not an integer", row[key]))
}

fn float(row: &Row, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key}={:?} is not a float", row[key]))
}

fn ratio(row: &Row, num: &str, den: &str) -> BigRational {
    BigRational::new(int(row, num), int(row, den))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Singular count by exact determinants of every matrix.
fn brute_force_singular(n: usize) -> u64 {
    (0u64..1 << (n * n))
        .filter(|&index| {
            let rows: Vec<u64> = (0..n).map(|i| index >> (i * n) & ((1 << n) - 1)).collect();
            det_exact(&SignMatrix::from_row_bits(&rows).unwrap()).is_zero()
        })
        .count() as u64
}

fn census_record(n: usize) -> CensusRecord {
    let mode = if n <= 4 { CensusMode::Plain } else { CensusMode::SymmetryReduced };
    census(n, mode, &CensusOptions::default()).unwrap()
}

fn criterion_1_exact_census() -> String {
    let r2 = &rows(&["exact", "--n", "2"])[0];
    assert_eq!((int(r2, "singular"), int(r2, "total")), (8.into(), 16.into()));
    let r3 = &rows(&["exact", "--n", "3"])[0];
    assert_eq!((int(r3, "singular"), int(r3, "total")), (320.into(), 512.into()));

    let mut slowest = Duration::ZERO;
    for n in 1..=4usize {
        let ns = n.to_string();
        let started = Instant::now();
        let plain = &rows(&["exact", "--n", &ns, "--plain"])[0];
        slowest = slowest.max(started.elapsed());
        let oracle = brute_force_singular(n);
        assert_eq!(int(plain, "singular"), oracle.into(), "n={n} census vs brute force");
        if n >= 2 {
            let started = Instant::now();
            let sym = &rows(&["exact", "--n", &ns, "--symmetric"])[0];
            slowest = slowest.max(started.elapsed());
            assert_eq!(sym["mode"], "symmetric");
            for key in ["total", "singular", "p_n_num", "p_n_den", "sum_det_sq"] {
                assert_eq!(plain[key], sym[key], "n={n} {key}: plain vs symmetric");
            }
        }
    }
    assert!(slowest < SMALL_CENSUS_BUDGET, "n ≤ 4 census took {slowest:?}");

    let started = Instant::now();
    let r6 = &rows(&["exact", "--n", "6", "--symmetric"])[0];
    let t6 = started.elapsed();
    assert_eq!(int(r6, "total"), BigInt::one() << 36);
    assert!(t6 < N6_CENSUS_BUDGET, "n=6 symmetric census took {t6:?}");
    format!(
        "n=2 8/16, n=3 320/512, plain == symmetric == brute force for n ≤ 4 (slowest {:.3}s), n=6 symmetric {}/2^36 in {:.1}s",
        slowest.as_secs_f64(),
        r6["singular"],
        t6.as_secs_f64()
    )
}

fn criterion_2_moment_identity() -> String {
    let mut checked = Vec::new();
    for (n, mode) in [
        (1, "--plain"),
        (2, "--plain"),
        (3, "--plain"),
        (4, "--plain"),
        (2, "--symmetric"),
        (3, "--symmetric"),
        (4, "--symmetric"),
        (5, "--symmetric"),
        (6, "--symmetric"),
    ] {
        let ns = n.to_string();
        let row = &rows(&["exact", "--n", &ns, mode])[0];
        let expected = factorial(n) << (n * n);
        assert_eq!(int(row, "sum_det_sq"), expected, "n={n} {mode}");
        checked.push(format!("{n}{}", &mode[2..3]));
    }
    format!("sum det² == n!·2^(n²) exactly for {}", checked.join(" "))
}

fn criterion_3_concentration() -> String {
    let limits = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut odd, mut worst, mut nonzero_p) = (0usize, 0.0f64, 0usize);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=24usize);
        let coeffs: Vec<i64> = loop {
            let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-50..=50)).collect();
            if c.iter().any(|&x| x != 0) {
                break c;
            }
        };
        let a = NormalVector::from_i64(&coeffs).unwrap();
        let dp = atom_spectrum(&a, &limits).unwrap().count_at(0);
        let mitm = count_mitm(&a, &limits).unwrap();
        assert_eq!(dp, mitm, "dp vs mitm for {a}");
        let exact = concentration(&a, Method::Dp, None, &limits).unwrap().prob_float;
        let fourier = concentration(&a, Method::Fourier, None, &limits).unwrap().prob_float;
        let gap = (fourier - exact).abs();
        assert!(gap <= FOURIER_TOL, "fourier {fourier} vs {exact} for {a}");
        worst = worst.max(gap);
        if a.has_odd_sum() {
            odd += 1;
            assert_eq!(dp, 0, "parity-odd {a} has zero atom");
            assert!(fourier.abs() <= PARITY_TOL, "parity-odd fourier {fourier} for {a}");
        }
        nonzero_p += usize::from(dp > 0);
    }
    assert!(odd > 0 && nonzero_p > 0);
    format!("1000 normals: dp == mitm, max |fourier − exact| = {worst:e}, {odd} parity-odd all exactly 0")
}

fn criterion_4_elo_ceiling() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let limits = Limits::default();
    let (mut sampled, mut rejected, mut tightest) = (0usize, 0usize, 0.0f64);
    let dims: Vec<usize> = (6..=20).collect();
    while sampled < 10_000 {
        let n = dims[sampled % dims.len()];
        let a = sample_hyperplane(n, &mut rng).unwrap();
        if !a.all_nonzero() {
            rejected += 1;
            continue;
        }
        let p = concentration(&a, Method::Mitm, None, &limits).unwrap().probability.unwrap();
        let ceiling = elo_ceiling(n);
        assert!(p <= ceiling, "P(H) = {p} above ceiling {ceiling} for {a}");
        tightest = tightest.max((p / ceiling).to_f64().unwrap());
        sampled += 1;
    }
    for n in (2..=20).step_by(2) {
        let ones = NormalVector::from_i64(&vec![1; n]).unwrap();
        let p = concentration(&ones, Method::Mitm, None, &limits).unwrap().probability.unwrap();
        assert_eq!(p, elo_ceiling(n), "all-ones at n={n}");
    }
    format!(
        "10000 all-nonzero sampled normals (n = 6..20, {rejected} with zeros skipped): 0 violations, max P/ceiling = {tightest:.4}; all-ones attains it at even n ≤ 20"
    )
}

fn criterion_5_smoothing() -> String {
    let limits = Limits::default();
    let default = LazyDistribution::default();
    let wide = LazyDistribution::parse("1/2,1/8,1/8").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_walk, mut worst_collision, mut max_c) = (0.0f64, 0.0f64, 0.0f64);
    let mut degenerate = 0usize;
    for case in 0..500 {
        let n = rng.gen_range(1..=12usize);
        let coeffs: Vec<i64> = loop {
            let c: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
            if c.iter().any(|&x| x != 0) {
                break c;
            }
        };
        let a = NormalVector::from_i64(&coeffs).unwrap();
        for dist in [&default, &wide] {
            let q = smoothing_modulus(&a, dist).to_u64().unwrap();
            let t = t_of_hyperplane(&a, q, dist, &limits).unwrap();
            let walk = lazy_walk_zero_atom(&a, dist, &limits).unwrap().to_f64().unwrap();
            assert!((t - walk).abs() <= IDENTITY_TOL, "case {case} {a}: T {t} vs walk {walk}");
            worst_walk = worst_walk.max((t - walk).abs());
        }
        let q = smoothing_modulus(&a, &default).to_u64().unwrap();
        let t = t_of_hyperplane(&a, q, &default, &limits).unwrap();
        let collision = collision_probability(&a, &limits).unwrap().to_f64().unwrap();
        assert!((t - collision).abs() <= IDENTITY_TOL, "case {case} {a}: T {t} vs collision {collision}");
        worst_collision = worst_collision.max((t - collision).abs());
        let p = concentration(&a, Method::Dp, None, &limits).unwrap().prob_float;
        assert!(p * p <= t + IDENTITY_TOL, "case {case} {a}: P² {} > T {t}", p * p);
        match sandwich_report(&a, None, &default, &limits) {
            Ok(r) => {
                assert!(r.c_empirical * r.t_of_h >= r.p_float, "case {case} {a}: C·T < P");
                assert!(r.sandwich_ok_upper && r.ok_lower_bounds(), "case {case} {a}: report flags");
                max_c = max_c.max(r.c_empirical);
            }
            Err(Error::DegenerateAtom) => {
                assert_eq!(p, 0.0);
                degenerate += 1;
            }
            Err(e) => panic!("case {case} {a}: {e}"),
        }
    }
    format!(
        "500 normals: max |T − walk| = {worst_walk:e}, max |T − collision| = {worst_collision:e}, P² ≤ T everywhere, C·T ≥ P with max empirical C = {max_c:.3} ({degenerate} with P = 0)"
    )
}

fn criterion_6_hyperplane_sum() -> String {
    let r2 = &rows(&["sumh", "--n", "2"])[0];
    assert_eq!(ratio(r2, "sum_num", "sum_den"), rat(1, 1));
    assert_eq!(ratio(r2, "ratio_num", "ratio_den"), rat(1, 2));
    let mut notes = vec![];
    for n in [3, 4] {
        let ns = n.to_string();
        let r = &rows(&["sumh", "--n", &ns])[0];
        let sum = ratio(r, "sum_num", "sum_den");
        let p_n = ratio(r, "p_n_num", "p_n_den");
        let q = ratio(r, "ratio_num", "ratio_den");
        assert!(q > BigRational::zero() && q <= BigRational::one(), "n={n} ratio {q}");
        assert!(sum >= p_n, "n={n}: Σ {sum} < P_n {p_n}");
        assert_eq!(q, &p_n / &sum);
        notes.push(format!("n={n} Σ={sum} ratio={q}"));
    }
    format!("n=2 Σ=1 ratio=1/2; {}", notes.join("; "))
}

fn criterion_7_monte_carlo() -> String {
    let mut notes = vec![];
    for n in 2..=5usize {
        let exact = match n {
            2 => rat(1, 2),
            3 => rat(5, 8),
            _ => census_record(n).p_n(),
        };
        let ns = n.to_string();
        let started = Instant::now();
        let r = &rows(&["--seed", "7", "mc", "--n", &ns, "--trials", "1000000"])[0];
        let elapsed = started.elapsed();
        let target = exact.to_f64().unwrap();
        let (lo, hi) = (float(r, "ci_lo"), float(r, "ci_hi"));
        assert!(lo <= target && target <= hi, "n={n}: {target} outside [{lo}, {hi}]");
        assert!(int(r, "pair_hits") <= int(r, "singular_hits"), "n={n}: pair hits exceed singular hits");
        assert!(elapsed < MC_BUDGET, "n={n} took {elapsed:?}");
        notes.push(format!("n={n} {target:.5} in [{lo:.5}, {hi:.5}] ({:.1}s)", elapsed.as_secs_f64()));
    }
    notes.join("; ")
}

fn criterion_8_trend() -> String {
    let rs = rows(&["series", "--n-list", "8,12,16,20", "--trials", "2e6"]);
    assert_eq!(rs.len(), 4);
    // Exponent-scale half-width of the Wilson interval.
    let half_width = |r: &Row| {
        let n = float(r, "n");
        (float(r, "ci_hi").log2() - float(r, "ci_lo").log2()) / (2.0 * n)
    };
    for r in &rs {
        assert_eq!(r["guard_ok"], "true", "n={} expected hits {}", r["n"], r["expected_hits"]);
        assert!(int(r, "pair_hits") <= int(r, "singular_hits"));
    }
    for w in rs.windows(2) {
        let slack = 2.0 * half_width(&w[0]).max(half_width(&w[1]));
        assert!(
            float(&w[1], "exponent") >= float(&w[0], "exponent") - slack,
            "exponent drops from n={} to n={}",
            w[0]["n"],
            w[1]["n"]
        );
    }
    let cols: Vec<String> = rs
        .iter()
        .map(|r| format!("n={} exp={:.4} ratio_to_bound={:.3}", r["n"], float(r, "exponent"), float(r, "ratio_to_bound")))
        .collect();
    format!("guard ok, exponents nondecreasing within 2x CI: {}", cols.join(", "))
}

fn bodies(dir: &Path, args: &[&str], threads: usize) -> Vec<(String, Vec<u8>)> {
    let out = dir.join(format!("t{threads}.out"));
    let t = threads.to_string();
    let mut argv = vec!["--threads", &t, "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let run = signlab(&argv);
    assert_eq!(run.code, 0, "{args:?}: {}", run.stderr);
    let prefix = format!("t{threads}.out");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|name| name.starts_with(&prefix) && !name.ends_with(".manifest.json"))
        .map(|name| {
            let bytes = std::fs::read(dir.join(&name)).unwrap();
            (name[prefix.len()..].to_string(), bytes)
        })
        .collect();
    files.sort();
    files
}

fn criterion_9_determinism() -> String {
    let cases: Vec<Vec<&str>> = vec![
        vec!["exact", "--n", "4"],
        vec!["exact", "--n", "5", "--symmetric"],
        vec!["conc", "--a", "3,-1,4,1,5,-9,2,6", "--a", "1,1,1,1,1,1", "--method", "fourier"],
        vec!["conc", "--a", "3,-1,4,1,5,-9,2,6", "--a", "2,7,1,8,2,8,1,8,2,8,4,5,9,0,4,5", "--method", "mitm"],
        vec!["smooth", "--a", "1,2,3,4,5", "--a", "1,1,1", "--dist", "1/2,1/8,1/8"],
        vec!["spectrum", "--n", "12", "--samples", "600"],
        vec!["mc", "--n", "10", "--trials", "70000"],
        vec!["series", "--n-list", "6,9", "--trials", "40000"],
        vec!["sumh", "--n", "3"],
    ];
    let mut files = 0;
    for args in &cases {
        let dir = tempfile::tempdir().unwrap();
        let reference = bodies(dir.path(), args, 1);
        assert!(!reference.is_empty());
        for threads in [4, 8] {
            assert_eq!(bodies(dir.path(), args, threads), reference, "{args:?} at {threads} threads");
        }
        let again = tempfile::tempdir().unwrap();
        assert_eq!(bodies(again.path(), args, 1), reference, "{args:?} rerun");
        files += reference.len();
    }
    format!("{} subcommand runs, {files} output files byte-identical at 1, 4 and 8 threads and on rerun", cases.len())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 exact census", criterion_1_exact_census),
        ("2 moment identity", criterion_2_moment_identity),
        ("3 concentration cross-validation", criterion_3_concentration),
        ("4 ELO ceiling", criterion_4_elo_ceiling),
        ("5 smoothing identities", criterion_5_smoothing),
        ("6 hyperplane sum", criterion_6_hyperplane_sum),
        ("7 Monte Carlo calibration", criterion_7_monte_carlo),
        ("8 exponent trend", criterion_8_trend),
        ("9 determinism", criterion_9_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} [{secs:.1}s]: {detail}"),
            Err(payload) => {
                failed += 1;
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL criterion {name} [{secs:.1}s]: {msg}");
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
