//! One function per subcommand. Each returns the tables it produced; nothing
//! is written until every computation and cross-check has succeeded.

use std::time::Instant;

use num_traits::ToPrimitive;
use serde_json::{json, Value};
use signlab_core::concentration::{
    concentration, count_to_f64, elo_ceiling, zero_atom_count, Method, FOURIER_TOLERANCE,
};
use signlab_core::exactcount::{census, CensusMode, CensusOptions};
use signlab_core::hyperspec::{spectrum, sum_over_hyperplanes, ClassThresholds, GClass};
use signlab_core::montecarlo::{
    conjectured_bound, estimate_pn, exponent_nondecreasing, exponent_series, McEstimate,
};
use signlab_core::parallel::with_threads;
use signlab_core::smoothing::{
    default_epsilon, lazy_walk_zero_atom, sandwich_report, smoothing_modulus, t_of_hyperplane,
    IDENTITY_TOLERANCE,
};
use signlab_core::{Error, Limits, NormalVector, Seed};

use crate::output::{format_float, ratio_cells, ratio_string, Cell, Outcome, Table};
use crate::{Cli, CliError, Command};

/// Resolved parameters, with every default filled in.
pub struct Plan {
    pub subcommand: &'static str,
    pub params: Value,
    limits: Limits,
}

fn census_mode(n: usize, plain: bool, symmetric: bool, limits: &Limits) -> CensusMode {
    if plain {
        CensusMode::Plain
    } else if symmetric || n > limits.census_plain_max_n {
        CensusMode::SymmetryReduced
    } else {
        CensusMode::Plain
    }
}

fn normals_json(a: &[NormalVector]) -> Value {
    a.iter().map(ToString::to_string).collect()
}

pub fn plan(cli: &Cli) -> Result<Plan, CliError> {
    let limits = Limits::from_env();
    let lim = serde_json::to_value(&limits).expect("serializable");
    let (subcommand, params) = match &cli.command {
        Command::Exact {
            n,
            plain,
            symmetric,
            allow_n7,
            ..
        } => (
            "exact",
            json!({
                "n": n,
                "mode": census_mode(*n, *plain, *symmetric, &limits).as_str(),
                "allow_n7": allow_n7,
                "limits": lim,
            }),
        ),
        Command::Conc { a, method, q } => {
            if q.is_some() && *method != Method::Fourier {
                return Err(CliError::Usage("--q only applies to --method fourier".into()));
            }
            (
                "conc",
                json!({
                    "a": normals_json(a),
                    "method": method.as_str(),
                    "q": q.map_or(json!("sum|a|+1"), |q| json!(q)),
                    "limits": lim,
                }),
            )
        }
        Command::Smooth { a, eps, dist } => {
            if let Some(e) = eps {
                if !(e.is_finite() && *e > 0.0) {
                    return Err(CliError::Usage(format!("--eps must be positive, got {e}")));
                }
            }
            let dist = dist.clone().unwrap_or_default();
            (
                "smooth",
                json!({
                    "a": normals_json(a),
                    "eps": eps.map_or(json!("2^(-n/4)"), |e| json!(e)),
                    "dist": dist.to_string(),
                    "q": "radius*sum|a|+1",
                    "limits": lim,
                }),
            )
        }
        Command::Spectrum {
            n,
            samples,
            delta,
            theta_factor,
        } => (
            "spectrum",
            json!({
                "n": n,
                "samples": samples,
                "delta": delta,
                "theta_factor": theta_factor,
                "limits": lim,
            }),
        ),
        Command::Mc { n, trials } => ("mc", json!({ "n": n, "trials": trials })),
        Command::Series { n_list, trials } => {
            if n_list.is_empty() {
                return Err(CliError::Usage("--n-list is empty".into()));
            }
            ("series", json!({ "n_list": n_list, "trials": trials }))
        }
        Command::Sumh { n } => ("sumh", json!({ "n": n, "limits": lim })),
    };
    Ok(Plan {
        subcommand,
        params,
        limits,
    })
}

fn seconds_cell(timings: bool, seconds: f64) -> Cell {
    if timings {
        Cell::Float(seconds)
    } else {
        Cell::Empty
    }
}

pub fn execute(cli: &Cli, plan: &Plan, hash: &str) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let limits = &plan.limits;
    let hash_cell = || Cell::text(hash);
    let timed = |s: f64| seconds_cell(g.timings, s);
    match &cli.command {
        Command::Exact {
            n,
            plain,
            symmetric,
            allow_n7,
            checkpoint,
        } => {
            let mode = census_mode(*n, *plain, *symmetric, limits);
            let opts = CensusOptions {
                threads: g.threads,
                checkpoint: checkpoint.clone(),
                allow_n7: *allow_n7,
                limits: limits.clone(),
                ..CensusOptions::default()
            };
            let rec = census(*n, mode, &opts)?;
            rec.verify()?;
            let p = rec.p_n();
            let mut t = Table::new(&[
                "n", "mode", "total", "singular", "p_n_num", "p_n_den", "sum_det_sq", "seconds", "manifest_hash",
            ]);
            let [num, den] = ratio_cells(&p);
            t.push(vec![
                Cell::int(rec.n),
                Cell::text(mode.as_str()),
                Cell::int(rec.total),
                Cell::int(rec.singular_count),
                num,
                den,
                Cell::int(rec.sum_det_sq),
                timed(rec.wall_seconds),
                hash_cell(),
            ]);
            let mut hist = Table::new(&["det_abs", "count", "manifest_hash"]);
            for (d, c) in &rec.det_abs_histogram {
                hist.push(vec![Cell::int(d), Cell::int(c), hash_cell()]);
            }
            Ok(Outcome {
                summary: format!(
                    "exact n={} {}: {}/{} singular (P_n = {}), {} with a parallel pair, moment identity holds",
                    rec.n,
                    mode.as_str(),
                    rec.singular_count,
                    rec.total,
                    format_float(p.to_f64().unwrap_or(f64::NAN)),
                    rec.parallel_pair_count,
                ),
                primary: t,
                tables: vec![("hist", hist)],
                documents: vec![],
            })
        }
        Command::Conc { a, method, q } => {
            let mut t = Table::new(&[
                "normal", "n", "method", "m_count", "prob_num", "prob_den", "prob_float", "q", "seconds", "manifest_hash",
            ]);
            let mut checked = 0usize;
            with_threads(g.threads, || -> Result<(), CliError> {
                for normal in a {
                    let r = concentration(normal, *method, *q, limits)?;
                    if r.method == Method::Fourier {
                        match zero_atom_count(normal, limits) {
                            Ok((m, _)) => {
                                let exact = count_to_f64(m, normal.dim());
                                if (exact - r.prob_float).abs() > FOURIER_TOLERANCE {
                                    return Err(Error::CrossCheck(format!(
                                        "fourier {} vs exact {} for {normal}",
                                        format_float(r.prob_float),
                                        format_float(exact)
                                    ))
                                    .into());
                                }
                                checked += 1;
                            }
                            Err(Error::LimitExceeded { .. }) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                    let [num, den] = match &r.probability {
                        Some(p) => ratio_cells(p),
                        None => [Cell::Empty, Cell::Empty],
                    };
                    t.push(vec![
                        Cell::text(&r.normal),
                        Cell::int(r.normal.dim()),
                        Cell::text(r.method.as_str()),
                        Cell::opt(r.m_count, Cell::int),
                        num,
                        den,
                        Cell::Float(r.prob_float),
                        Cell::opt(r.modulus, Cell::int),
                        timed(r.seconds),
                        hash_cell(),
                    ]);
                }
                Ok(())
            })?;
            let first = &t.rows[0];
            let summary = if a.len() == 1 {
                format!(
                    "conc {} via {}: P(H) = {}",
                    a[0],
                    first[2].render(),
                    first[6].render()
                )
            } else {
                format!("conc: {} normals", a.len())
            };
            let summary = if checked > 0 {
                format!("{summary} (fourier matches exact count within {FOURIER_TOLERANCE:e})")
            } else {
                summary
            };
            Ok(Outcome {
                primary: t,
                tables: vec![],
                documents: vec![],
                summary,
            })
        }
        Command::Smooth { a, eps, dist } => {
            let dist = dist.clone().unwrap_or_default();
            let mut t = Table::new(&[
                "normal",
                "n",
                "q",
                "epsilon",
                "p_h",
                "t_h",
                "lambda_size",
                "restricted_sum",
                "c1_emp",
                "c_emp",
                "ok_upper",
                "ok_lower_bounds",
                "status",
                "manifest_hash",
            ]);
            let mut degenerate = 0usize;
            let mut max_c: f64 = 0.0;
            with_threads(g.threads, || -> Result<(), CliError> {
                for normal in a {
                    let t_exact = match lazy_walk_zero_atom(normal, &dist, limits) {
                        Ok(v) => v.to_f64(),
                        Err(Error::LimitExceeded { .. }) => None,
                        Err(e) => return Err(e.into()),
                    };
                    let check_t = |t_h: f64| -> Result<(), CliError> {
                        match t_exact {
                            Some(x) if (x - t_h).abs() > IDENTITY_TOLERANCE => Err(Error::CrossCheck(format!(
                                "T(H) by Fourier {} vs lazy walk {} for {normal}",
                                format_float(t_h),
                                format_float(x)
                            ))
                            .into()),
                            _ => Ok(()),
                        }
                    };
                    match sandwich_report(normal, *eps, &dist, limits) {
                        Ok(r) => {
                            check_t(r.t_of_h)?;
                            max_c = max_c.max(r.c_empirical);
                            t.push(vec![
                                Cell::text(&r.normal),
                                Cell::int(r.n),
                                Cell::int(r.q),
                                Cell::Float(r.epsilon),
                                Cell::Float(r.p_float),
                                Cell::Float(r.t_of_h),
                                Cell::int(r.lambda_size),
                                Cell::Float(r.restricted_sum),
                                Cell::Float(r.c1_empirical),
                                Cell::Float(r.c_empirical),
                                Cell::Bool(r.sandwich_ok_upper),
                                Cell::Bool(r.ok_lower_bounds()),
                                Cell::text("ok"),
                                hash_cell(),
                            ]);
                        }
                        Err(Error::DegenerateAtom) => {
                            degenerate += 1;
                            let n = normal.dim();
                            let q = smoothing_modulus(normal, &dist).to_u64();
                            let t_h = match q {
                                Some(q) => Some(t_of_hyperplane(normal, q, &dist, limits)?),
                                None => None,
                            };
                            if let Some(t_h) = t_h {
                                check_t(t_h)?;
                            }
                            t.push(vec![
                                Cell::text(normal),
                                Cell::int(n),
                                Cell::opt(q, Cell::int),
                                Cell::Float(eps.unwrap_or_else(|| default_epsilon(n))),
                                Cell::Float(0.0),
                                Cell::opt(t_h, Cell::Float),
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                Cell::Empty,
                                Cell::text("degenerate"),
                                hash_cell(),
                            ]);
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                Ok(())
            })?;
            Ok(Outcome {
                summary: format!(
                    "smooth: {} normals, {degenerate} with P(H) = 0, largest empirical C = {}",
                    a.len(),
                    format_float(max_c)
                ),
                primary: t,
                tables: vec![],
                documents: vec![],
            })
        }
        Command::Spectrum {
            n,
            samples,
            delta,
            theta_factor,
        } => {
            let th = ClassThresholds::new(*delta, *theta_factor)?;
            let report = with_threads(g.threads, || spectrum(*n, *samples, Seed::new(g.seed), &th, limits))?;
            let mass: u64 = report.histogram.iter().map(|b| b.count).sum();
            if mass != report.samples {
                return Err(Error::CrossCheck(format!("histogram mass {mass} != samples {}", report.samples)).into());
            }
            let mut records = Table::new(&["normal", "n", "p_num", "p_den", "p_float", "log2_p", "class", "manifest_hash"]);
            for r in &report.records {
                let [num, den] = ratio_cells(&r.p_of_h);
                records.push(vec![
                    Cell::text(&r.normal),
                    Cell::int(r.n),
                    num,
                    den,
                    Cell::Float(r.p_float),
                    Cell::Float(r.log2_p),
                    Cell::text(r.klass.as_str()),
                    hash_cell(),
                ]);
            }
            let mut hist = Table::new(&["bin_lo", "bin_hi", "count", "g1", "g2", "g3", "manifest_hash"]);
            for b in &report.histogram {
                let [g1, g2, g3] = b.class_counts;
                hist.push(vec![
                    Cell::opt(b.lo, Cell::int),
                    Cell::opt(b.lo, |lo| Cell::int(lo + 1)),
                    Cell::int(b.count),
                    Cell::int(g1),
                    Cell::int(g2),
                    Cell::int(g3),
                    hash_cell(),
                ]);
            }
            let classes: Vec<Value> = report
                .classes
                .iter()
                .map(|c| {
                    json!({
                        "class": c.klass.as_str(),
                        "count": c.count,
                        "max_p": c.max_p.as_ref().map(ratio_string),
                        "max_p_float": c.max_p.as_ref().and_then(|p| p.to_f64()),
                        "sum_p": ratio_string(&c.sum_p),
                        "sum_p_float": c.sum_p.to_f64(),
                    })
                })
                .collect();
            let summary_doc = json!({
                "n": report.n,
                "samples": report.samples,
                "seed": report.seed.master,
                "thresholds": {
                    "delta": report.thresholds.delta_small,
                    "theta_factor": report.thresholds.theta_large_factor,
                    "small_cutoff": report.small_cutoff,
                    "large_cutoff": report.large_cutoff,
                },
                "classes": classes,
                "max_p_all_nonzero": report.max_p_all_nonzero.as_ref().map(ratio_string),
                "elo_ceiling": ratio_string(&elo_ceiling(report.n)),
                "manifest_hash": hash,
            });
            let count = |k: GClass| report.classes.iter().find(|c| c.klass == k).map_or(0, |c| c.count);
            Ok(Outcome {
                summary: format!(
                    "spectrum n={} samples={}: G1 {} G2 {} G3 {}",
                    report.n,
                    report.samples,
                    count(GClass::G1),
                    count(GClass::G2),
                    count(GClass::G3)
                ),
                primary: records,
                tables: vec![("hist", hist)],
                documents: vec![("summary", summary_doc)],
            })
        }
        Command::Mc { n, trials } => {
            let est = estimate_pn(*n, *trials, Seed::new(g.seed), g.threads)?;
            check_containment(&est)?;
            let mut t = Table::new(MC_COLUMNS);
            t.push(mc_cells(&est, est.p_hat / conjectured_bound(est.n), g.timings, hash));
            Ok(Outcome {
                summary: format!(
                    "mc n={} trials={}: p_hat = {} in [{}, {}] (99% Wilson)",
                    est.n,
                    est.trials,
                    format_float(est.p_hat),
                    format_float(est.ci_lo),
                    format_float(est.ci_hi)
                ),
                primary: t,
                tables: vec![],
                documents: vec![],
            })
        }
        Command::Series { n_list, trials } => {
            let rows = exponent_series(n_list, *trials, Seed::new(g.seed), g.threads)?;
            let mut header = MC_COLUMNS.to_vec();
            header.splice(header.len() - 2.., ["bound", "expected_hits", "guard_ok", "seconds", "manifest_hash"]);
            let mut t = Table { header, rows: vec![] };
            for r in &rows {
                check_containment(&r.estimate)?;
                let mut cells = mc_cells(&r.estimate, r.ratio_to_bound, g.timings, hash);
                cells.splice(
                    cells.len() - 2..cells.len() - 2,
                    [Cell::Float(r.bound), Cell::Float(r.expected_hits), Cell::Bool(r.guard_ok)],
                );
                t.push(cells);
            }
            let guard = rows.iter().all(|r| r.guard_ok);
            let trend = exponent_nondecreasing(&rows);
            let exps: Vec<String> = rows
                .iter()
                .map(|r| format!("{}:{:.4}", r.estimate.n, r.estimate.exponent))
                .collect();
            Ok(Outcome {
                summary: format!(
                    "series exponents {}; trials guard {}; exponent nondecreasing within 2x CI: {}",
                    exps.join(" "),
                    if guard { "ok" } else { "FAILED (raise --trials)" },
                    if trend { "yes" } else { "no" }
                ),
                primary: t,
                tables: vec![],
                documents: vec![],
            })
        }
        Command::Sumh { n } => {
            let started = Instant::now();
            let s = with_threads(g.threads, || sum_over_hyperplanes(*n, limits))?;
            if s.sum < s.p_n {
                return Err(Error::CrossCheck(format!(
                    "sum of P(H) {} is below P_n {}",
                    ratio_string(&s.sum),
                    ratio_string(&s.p_n)
                ))
                .into());
            }
            let mut t = Table::new(&[
                "n",
                "hyperplanes",
                "sum_num",
                "sum_den",
                "sum_mult_num",
                "sum_mult_den",
                "p_n_num",
                "p_n_den",
                "ratio_num",
                "ratio_den",
                "ratio_float",
                "seconds",
                "manifest_hash",
            ]);
            let mut row = vec![Cell::int(s.n), Cell::int(s.terms.len())];
            for r in [&s.sum, &s.sum_with_multiplicity, &s.p_n, &s.ratio] {
                row.extend(ratio_cells(r));
            }
            row.extend([
                Cell::Float(s.ratio.to_f64().unwrap_or(f64::NAN)),
                timed(started.elapsed().as_secs_f64()),
                hash_cell(),
            ]);
            t.push(row);
            let mut planes = Table::new(&["normal", "multiplicity", "m_count", "p_num", "p_den", "manifest_hash"]);
            for h in &s.terms {
                let [num, den] = ratio_cells(&h.p_of_h);
                planes.push(vec![
                    Cell::text(&h.normal),
                    Cell::int(h.multiplicity),
                    Cell::int(h.m_count),
                    num,
                    den,
                    hash_cell(),
                ]);
            }
            Ok(Outcome {
                summary: format!(
                    "sumh n={}: {} hyperplanes, sum P(H) = {}, P_n = {}, ratio = {}",
                    s.n,
                    s.terms.len(),
                    ratio_string(&s.sum),
                    ratio_string(&s.p_n),
                    ratio_string(&s.ratio)
                ),
                primary: t,
                tables: vec![("hyperplanes", planes)],
                documents: vec![],
            })
        }
    }
}

const MC_COLUMNS: &[&str] = &[
    "n",
    "trials",
    "singular_hits",
    "pair_hits",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "exponent",
    "ratio_to_bound",
    "seed",
    "seconds",
    "manifest_hash",
];

fn mc_cells(e: &McEstimate, ratio: f64, timings: bool, hash: &str) -> Vec<Cell> {
    vec![
        Cell::int(e.n),
        Cell::int(e.trials),
        Cell::int(e.singular_hits),
        Cell::int(e.dependent_pair_hits),
        Cell::Float(e.p_hat),
        Cell::Float(e.ci_lo),
        Cell::Float(e.ci_hi),
        Cell::Float(e.exponent),
        Cell::Float(ratio),
        Cell::int(e.seed),
        seconds_cell(timings, e.seconds),
        Cell::text(hash),
    ]
}

/// A dependent pair forces singularity, so its hits can never exceed the singular hits.
fn check_containment(e: &McEstimate) -> Result<(), CliError> {
    if e.dependent_pair_hits > e.singular_hits {
        return Err(Error::CrossCheck(format!(
            "n={}: {} dependent-pair hits exceed {} singular hits",
            e.n, e.dependent_pair_hits, e.singular_hits
        ))
        .into());
    }
    Ok(())
}
