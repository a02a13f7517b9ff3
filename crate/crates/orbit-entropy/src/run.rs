//! Command dispatch. Each command fills tables, checks and comparisons of a
//! [`RunReport`]; rows that fail (budget exceeded, unsupported input) are
//! recorded with their error and the run continues.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Context};
use orbit_entropy_core::actions::{conjugate_action, power_action, Homeomorphism};
use orbit_entropy_core::bounds::{
    lipschitz_bound, single_endo_entropy, skew_bound, torus_preimage_bound, BoundReport, Spectrum,
    DET_AGREEMENT_TOL,
};
use orbit_entropy_core::orbit_space::{estimate_one, estimate_traditional_entropy, ScheduleEntry};
use orbit_entropy_core::preimage::{
    apply_exact, build_tree, check_union_cardinality, hi_one, hm_one, hurley_check, preimage_count,
    preimage_set, HurleyParams, TreeChoice,
};
use orbit_entropy_core::rational::RatPoint;
use orbit_entropy_core::sft::{
    build_matrix_block_with_budget, build_matrix_geometric_with_budget, injectivity_probe, is_irreducible,
    parry_measure, perron_root, sample_parry_path, shift_check,
};
use orbit_entropy_core::{Action, EntropyEstimate, GeneratorMap, IntMatrix, Space};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig};
use crate::report::{Artifact, Cell, Comparison, RunReport, Table};

const EXACT_TOL: f64 = 1e-9;
const SLACK: f64 = 1e-12;

/// Executes the configured command. Errors are configuration problems
/// (wrong kind of action for the command); row-level failures end up in
/// the report.
pub fn run(config: &ExperimentConfig) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let action = config.build_action().context("building the action")?;
    let mut report = RunReport::new(config.clone());
    match config.command {
        Command::Sft => sft(config, &action, &mut report)?,
        Command::Estimate => estimate(config, &action, &mut report),
        Command::Traditional => traditional(config, &action, &mut report),
        Command::Bounds => bounds(&action, &mut report),
        Command::Preimage => preimage(config, &action, &mut report),
        Command::Hurley => hurley(config, &action, &mut report)?,
        Command::PowerCheck => power_check(config, &action, &mut report),
        Command::ConjugacyCheck => conjugacy_check(config, &action, &mut report)?,
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

/// `ln sum L_i` for circle multipliers, `ln k` for pairwise distinct rotations.
pub fn exact_target(t: &Action) -> Option<f64> {
    if let Some(l) = t.circle_multipliers() {
        return Some((l.iter().sum::<i64>() as f64).ln());
    }
    let rotations = t.generators().iter().all(|g| matches!(g, GeneratorMap::CircleRotation(_)));
    rotations.then(|| (t.k() as f64).ln())
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, Cell) {
    let start = Instant::now();
    let out = f();
    let ms = timing.then(|| start.elapsed().as_millis() as i128);
    (out, ms.into())
}

/// `(epsilon, n)` pairs in output order: epsilon-major, n as listed.
fn entries(config: &ExperimentConfig) -> Vec<ScheduleEntry> {
    let s = &config.schedule;
    s.epsilon
        .iter()
        .flat_map(|&epsilon| s.n.iter().map(move |&n| ScheduleEntry { n, epsilon, grid: s.grid }))
        .collect()
}

fn joined<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn estimate_cells(e: &orbit_entropy_core::Result<EntropyEstimate>) -> [Cell; 2] {
    match e {
        Ok(e) => [e.count.into(), e.rate.into()],
        Err(_) => [Cell::Empty, Cell::Empty],
    }
}

fn status<T>(r: &orbit_entropy_core::Result<T>) -> Cell {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.to_string().into(),
    }
}

fn sft(config: &ExperimentConfig, t: &Action, report: &mut RunReport) -> anyhow::Result<()> {
    let Some(l) = t.circle_multipliers() else {
        bail!("the sft command needs circle generators of kind \"linear\"");
    };
    let s = &config.schedule;
    let mut table = Table::new(
        "sft",
        &[
            "L_list", "kM", "rho", "entropy_nats", "exact_target", "abs_err", "irreducible", "column_sums_ok",
            "geometric_match", "perron_residual", "parry_row_error", "parry_stationary_residual",
            "parry_entropy_rate", "seed", "paths", "path_length", "shift_checks_ok", "injectivity_fraction",
            "status",
        ],
    );
    let label = joined(&l, " ");
    let exact = (l.iter().sum::<i64>() as f64).ln();
    let sum = l.iter().sum::<i64>() as f64;

    let a = match build_matrix_block_with_budget(&l, s.budget) {
        Ok(a) => a,
        Err(e) => {
            report.row_errors.push(format!("sft L=({label}): {e}"));
            let mut row = vec![Cell::from(label.as_str())];
            row.extend(std::iter::repeat_n(Cell::Empty, 17));
            row.push(e.to_string().into());
            table.push(row);
            report.tables.push(table);
            return Ok(());
        }
    };
    let geometric = build_matrix_geometric_with_budget(&l, s.budget).is_ok_and(|g| g == a);
    let irreducible = is_irreducible(&a);
    let columns = a.column_sums_ok();
    report.check("irreducible", irreducible, format!("L=({label})"));
    report.check("column_sums", columns, format!("every column sums to {sum}"));
    report.check("geometric_match", geometric, "block and geometric constructions agree");

    let mut matrix = String::new();
    a.write_coordinate_list(&mut matrix).expect("writing to a String");
    report.artifacts.push(Artifact {
        file: format!("matrix_{}.coo", joined(&l, "_")),
        contents: matrix,
    });

    let perron = perron_root(&a);
    let parry = parry_measure(&a);
    let mut row: Vec<Cell> = vec![label.as_str().into(), a.size().into()];
    match &perron {
        Ok(p) => {
            let h = p.rho.ln();
            report.check("perron_root", (p.rho - sum).abs() <= EXACT_TOL, format!("rho = {}", p.rho));
            report.check("entropy", (h - exact).abs() <= EXACT_TOL, format!("log rho = {h}"));
            report.comparisons.push(Comparison::new(format!("log sum L, L=({label})"), exact, h));
            row.extend([p.rho.into(), h.into(), exact.into(), (h - exact).abs().into()]);
        }
        Err(e) => {
            report.check("perron_root", false, e.to_string());
            row.extend([Cell::Empty, Cell::Empty, exact.into(), Cell::Empty]);
        }
    }
    row.extend([
        irreducible.into(),
        columns.into(),
        geometric.into(),
        perron.as_ref().ok().map(|p| p.residual).into(),
    ]);

    match &parry {
        Ok(m) => {
            let rate = m.entropy_rate();
            report.check("parry_rows", m.row_sum_error() <= 1e-12, format!("{:e}", m.row_sum_error()));
            report.check(
                "parry_stationary",
                m.stationary_residual() < 1e-10,
                format!("{:e}", m.stationary_residual()),
            );
            report.check("parry_entropy_rate", (rate - exact).abs() <= EXACT_TOL, format!("{rate}"));
            report.comparisons.push(Comparison::new(format!("Parry entropy rate, L=({label})"), exact, rate));
            row.extend([m.row_sum_error().into(), m.stationary_residual().into(), rate.into()]);

            let shifts: Vec<bool> = (0..s.paths as u64)
                .into_par_iter()
                .map(|i| {
                    sample_parry_path(m, s.path_length.max(2), config.seed.wrapping_add(i))
                        .and_then(|p| shift_check(&p, &a))
                        .is_ok_and(|c| c.holds())
                })
                .collect();
            let ok = shifts.iter().filter(|&&b| b).count();
            report.check(
                "coding_commutes_with_shift",
                ok == shifts.len(),
                format!("{ok}/{} sampled paths", shifts.len()),
            );
            let injectivity = injectivity_probe(m, &l, s.paths.max(2), s.path_length.max(1), config.seed);
            row.extend([
                Cell::Int(config.seed as i128),
                s.paths.into(),
                s.path_length.max(2).into(),
                (ok == shifts.len()).into(),
                injectivity.as_ref().ok().copied().into(),
            ]);
        }
        Err(e) => {
            report.check("parry_measure", false, e.to_string());
            row.extend(std::iter::repeat_n(Cell::Empty, 8));
        }
    }
    row.push("ok".into());
    table.push(row);
    report.tables.push(table);
    Ok(())
}

fn estimate(config: &ExperimentConfig, t: &Action, report: &mut RunReport) {
    let budget = config.schedule.budget;
    let exact = exact_target(t);
    let rows: Vec<_> = entries(config)
        .par_iter()
        .map(|e| {
            let (r, ms) = timed(config.timing, || estimate_one(t, e, budget));
            (*e, r, ms)
        })
        .collect();
    let mut table = Table::new(
        "estimate",
        &["n", "epsilon", "grid", "count", "rate", "elapsed_ms", "depth", "candidates", "budget", "exact_target", "status"],
    );
    for (e, r, ms) in &rows {
        if let Err(err) = r {
            report.row_errors.push(format!("estimate n={} epsilon={}: {err}", e.n, e.epsilon));
        }
        let [count, rate] = estimate_cells(r);
        let ok = r.as_ref().ok();
        table.push(vec![
            e.n.into(),
            e.epsilon.into(),
            e.grid.into(),
            count,
            rate,
            ms.clone(),
            ok.map(|x| x.depth).into(),
            ok.map(|x| x.candidates).into(),
            budget.into(),
            exact.into(),
            status(r),
        ]);
    }
    if let Some(exact) = exact {
        for &eps in &config.schedule.epsilon {
            let best = rows
                .iter()
                .filter(|(e, r, _)| e.epsilon == eps && r.is_ok())
                .max_by_key(|(e, _, _)| e.n);
            if let Some((e, Ok(est), _)) = best {
                report.comparisons.push(Comparison::new(
                    format!("rate at n={} epsilon={eps}", e.n),
                    exact,
                    est.rate,
                ));
            }
        }
    }
    report.tables.push(table);
}

fn traditional(config: &ExperimentConfig, t: &Action, report: &mut RunReport) {
    let budget = config.schedule.budget;
    let rows: Vec<_> = entries(config)
        .par_iter()
        .map(|e| {
            let (r, ms) = timed(config.timing, || estimate_traditional_entropy(t, e.n, e.epsilon, e.grid, budget));
            (*e, r, ms)
        })
        .collect();
    let mut table = Table::new(
        "traditional",
        &["n", "epsilon", "grid", "count", "rate", "elapsed_ms", "k", "candidates", "budget", "status"],
    );
    for (e, r, ms) in rows {
        if let Err(err) = &r {
            report.row_errors.push(format!("traditional n={} epsilon={}: {err}", e.n, e.epsilon));
        }
        let [count, rate] = estimate_cells(&r);
        table.push(vec![
            e.n.into(),
            e.epsilon.into(),
            e.grid.into(),
            count,
            rate,
            ms,
            t.k().into(),
            r.as_ref().ok().map(|x| x.candidates).into(),
            budget.into(),
            status(&r),
        ]);
    }
    report.tables.push(table);
}

fn matrix_of(g: &GeneratorMap) -> Option<IntMatrix> {
    match g {
        GeneratorMap::CircleLinear(l) => Some(IntMatrix::diag(&[*l])),
        GeneratorMap::TorusMatrix(a) => Some(a.clone()),
        _ => None,
    }
}

fn bounds(t: &Action, report: &mut RunReport) {
    let d = t.space().ball_dimension();
    let exact = t.circle_multipliers().map(|l| (l.iter().sum::<i64>() as f64).ln());
    let mut table = Table::new(
        "bounds",
        &[
            "kind", "generator", "value", "ball_dimension", "lipschitz_plus", "determinants", "moduli", "boundary",
            "exact_target", "status",
        ],
    );
    let push = |table: &mut Table, generator: Cell, r: &orbit_entropy_core::Result<BoundReport>, kind: &str| {
        let ok = r.as_ref().ok();
        table.push(vec![
            kind.into(),
            generator,
            ok.map(|b| b.value).into(),
            ok.and_then(|b| b.ball_dimension).into(),
            ok.map(|b| joined(&b.lipschitz, " ")).into(),
            ok.map(|b| joined(&b.determinants, " ")).into(),
            ok.map(|b| b.moduli.iter().map(|m| joined(m, " ")).collect::<Vec<_>>().join("; ")).into(),
            ok.map(|b| b.boundary).into(),
            exact.into(),
            status(r),
        ]);
    };
    let lip = lipschitz_bound(t, d);
    let skew = skew_bound(t, d);
    push(&mut table, "all".into(), &lip, "lipschitz");
    push(&mut table, "all".into(), &skew, "skew");
    if let (Ok(l), Ok(s)) = (&lip, &skew) {
        report.check("skew_above_lipschitz", s.value + SLACK >= l.value, format!("{} >= {}", s.value, l.value));
    }
    let matrices: Option<Vec<IntMatrix>> = t.generators().iter().map(matrix_of).collect();
    if matrices.is_some() {
        let r = torus_preimage_bound(t);
        push(&mut table, "all".into(), &r, "torus_preimage");
        if let (Some(exact), Ok(b)) = (exact, &r) {
            report.check("preimage_bound_is_exact", (b.value - exact).abs() <= EXACT_TOL, format!("{}", b.value));
        }
    }
    if let (Some(exact), Ok(l)) = (exact, &lip) {
        report.check("lipschitz_above_exact", l.value + SLACK >= exact, format!("{} >= {exact}", l.value));
        report.comparisons.push(Comparison::new("lipschitz bound vs log sum L", exact, l.value));
    }
    for (i, m) in matrices.iter().flatten().enumerate() {
        let r = single_endo_entropy(m);
        push(&mut table, (i + 1).into(), &r, "single_endo");
        if let Ok(spec) = Spectrum::of(m) {
            report.check(
                format!("eigenvalues_match_det_{}", i + 1),
                spec.det_discrepancy() <= DET_AGREEMENT_TOL,
                format!("relative gap {:e}", spec.det_discrepancy()),
            );
            if let (true, Ok(b)) = (spec.is_expanding(), &r) {
                let target = (spec.det.unsigned_abs() as f64).ln();
                report.check(
                    format!("single_endo_is_log_det_{}", i + 1),
                    (b.value - target).abs() <= DET_AGREEMENT_TOL,
                    format!("{} vs {target}", b.value),
                );
            }
        }
    }
    for r in [&lip, &skew] {
        if let Err(e) = r {
            report.row_errors.push(format!("bounds: {e}"));
        }
    }
    report.tables.push(table);
}

fn preimage(config: &ExperimentConfig, t: &Action, report: &mut RunReport) {
    let s = &config.schedule;
    let roots = config.roots();
    let mut counts = Table::new("preimage", &["root", "generator", "count", "expected", "verified", "status"]);
    let mut unions = Table::new("preimage_union", &["root", "k", "union_count", "sum_counts", "generic"]);
    for x in &roots {
        let root = x.to_string();
        let mut sum = Some(0u128);
        for (i, g) in t.generators().iter().enumerate() {
            let expected = preimage_count(g);
            let set = preimage_set(g, x);
            let verified = set.as_ref().map_err(Clone::clone).and_then(|p| p.verify());
            let count = set.as_ref().ok().map(|p| p.len());
            let ok = matches!((&expected, count, &verified), (Ok(e), Some(c), Ok(true)) if *e == c as u128);
            report.check(format!("preimages root={root} generator={}", i + 1), ok, format!("{count:?} of {expected:?}"));
            sum = sum.zip(expected.as_ref().ok()).map(|(a, b)| a + b);
            counts.push(vec![
                root.as_str().into(),
                (i + 1).into(),
                count.into(),
                expected.as_ref().ok().map(|&e| e as i128).into(),
                verified.as_ref().ok().copied().into(),
                status(&set),
            ]);
        }
        let union = check_union_cardinality(t, x).ok();
        if let (Some(u), Some(total)) = (union, sum) {
            report.check(format!("union_bound root={root}"), u as u128 <= total, format!("{u} <= {total}"));
        }
        unions.push(vec![
            root.as_str().into(),
            t.k().into(),
            union.into(),
            sum.map(|v| v as i128).into(),
            union.zip(sum).map(|(u, v)| u as u128 == v).into(),
        ]);
    }

    let bound = t
        .generators()
        .iter()
        .map(preimage_count)
        .collect::<orbit_entropy_core::Result<Vec<_>>>()
        .ok()
        .map(|c| (c.iter().sum::<u128>() as f64).ln());
    let jobs: Vec<(&str, ScheduleEntry)> = entries(config)
        .into_iter()
        .flat_map(|e| [("h_m", e), ("h_i", e)])
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(q, e)| {
            timed(config.timing, || match *q {
                "h_m" => hm_one(t, e.n, e.epsilon, &roots, s.budget),
                _ => hi_one(t, e.n, e.epsilon, s.root_grid, s.budget),
            })
        })
        .collect();
    let mut entropy = Table::new(
        "preimage_entropy",
        &["quantity", "n", "epsilon", "grid", "roots", "count", "rate", "candidates", "elapsed_ms", "budget", "status"],
    );
    for ((q, e), (r, ms)) in jobs.iter().zip(results) {
        if let Err(err) = &r {
            report.row_errors.push(format!("{q} n={} epsilon={}: {err}", e.n, e.epsilon));
        }
        if let (&"h_m", Ok(est), Some(b)) = (q, &r, bound) {
            report.check(
                format!("h_m_bound n={} epsilon={}", e.n, e.epsilon),
                est.rate <= b + SLACK,
                format!("{} <= {b}", est.rate),
            );
        }
        let [count, rate] = estimate_cells(&r);
        let (grid, nroots): (Cell, Cell) = match *q {
            "h_m" => (Cell::Empty, roots.len().into()),
            _ => (s.root_grid.into(), r.as_ref().ok().map(|x| x.candidates).into()),
        };
        entropy.push(vec![
            (*q).into(),
            e.n.into(),
            e.epsilon.into(),
            grid,
            nroots,
            count,
            rate,
            r.as_ref().ok().map(|x| x.candidates).into(),
            ms,
            s.budget.into(),
            status(&r),
        ]);
    }

    let mut dump = String::new();
    for x in &roots {
        match build_tree(t, x, TreeChoice::AllSequences, s.depth, s.budget) {
            Ok(tree) => tree.write_dump(&mut dump).expect("writing to a String"),
            Err(e) => writeln!(dump, "tree root={x} depth={}: {e}", s.depth).expect("writing to a String"),
        }
    }
    report.artifacts.push(Artifact {
        file: "trees.txt".into(),
        contents: dump,
    });
    report.tables.extend([counts, unions, entropy]);
}

fn hurley(config: &ExperimentConfig, t: &Action, report: &mut RunReport) -> anyhow::Result<()> {
    if t.k() != 1 {
        bail!("the hurley command compares entropies of a single map; the action has {} generators", t.k());
    }
    let g = &t.generators()[0];
    let s = &config.schedule;
    let exact = matrix_of(g)
        .and_then(|m| single_endo_entropy(&m).ok())
        .map(|b| b.value);
    let rows: Vec<_> = entries(config)
        .par_iter()
        .map(|e| {
            let p = HurleyParams {
                n: e.n,
                epsilon: e.epsilon,
                grid: e.grid,
                root_grid: s.root_grid,
                samples: config.roots(),
                budget: s.budget,
            };
            let (r, ms) = timed(config.timing, || hurley_check(g, &p));
            (*e, r, ms)
        })
        .collect();
    let mut table = Table::new(
        "hurley",
        &[
            "n", "epsilon", "grid", "root_grid", "roots", "hm_count", "hm_rate", "h_count", "h_rate", "hi_count",
            "hi_rate", "holds", "exact_target", "elapsed_ms", "budget", "status",
        ],
    );
    for (e, r, ms) in &rows {
        let ok = r.as_ref().ok();
        match r {
            Ok(h) => report.check(
                format!("chain n={} epsilon={}", e.n, e.epsilon),
                h.holds,
                format!("{} <= {} <= {} + {}", h.h_m.rate, h.h.rate, h.h_m.rate, h.h_i.rate),
            ),
            Err(err) => report.row_errors.push(format!("hurley n={} epsilon={}: {err}", e.n, e.epsilon)),
        }
        table.push(vec![
            e.n.into(),
            e.epsilon.into(),
            e.grid.into(),
            s.root_grid.into(),
            s.roots.len().into(),
            ok.map(|h| h.h_m.count).into(),
            ok.map(|h| h.h_m.rate).into(),
            ok.map(|h| h.h.count).into(),
            ok.map(|h| h.h.rate).into(),
            ok.map(|h| h.h_i.count).into(),
            ok.map(|h| h.h_i.rate).into(),
            ok.map(|h| h.holds).into(),
            exact.into(),
            ms.clone(),
            s.budget.into(),
            status(r),
        ]);
    }
    if let (Some(exact), Some((e, Ok(h), _))) = (exact, rows.iter().filter(|r| r.1.is_ok()).max_by_key(|r| r.0.n)) {
        report.comparisons.push(Comparison::new(format!("h at n={} epsilon={}", e.n, e.epsilon), exact, h.h.rate));
    }
    report.tables.push(table);
    Ok(())
}

/// Largest discrepancy between the power generator and repeated application.
fn power_apply_error(g: &GeneratorMap, p: &GeneratorMap, m: u32, space: Space) -> orbit_entropy_core::Result<f64> {
    if g.is_integer() {
        for j in 0..64i64 {
            let pairs: Vec<(i64, i64)> = (0..space.dim() as i64).map(|c| ((j * (2 * c + 1)) % 61, 61 + 2 * c)).collect();
            let x = RatPoint::from_ratios(&pairs);
            let mut y = x.clone();
            for _ in 0..m {
                y = apply_exact(g, &y)?;
            }
            if apply_exact(p, &x)? != y {
                return Ok(f64::INFINITY);
            }
        }
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for x in orbit_entropy_core::actions::sample_grid(space.dim()) {
        let mut y = x.clone();
        for _ in 0..m {
            y = g.apply(&y)?;
        }
        worst = worst.max(space.distance(&p.apply(&x)?, &y)?);
    }
    Ok(worst)
}

fn power_check(config: &ExperimentConfig, t: &Action, report: &mut RunReport) {
    let multipliers = t.circle_multipliers();
    let mut table = Table::new(
        "power_check",
        &["m", "generators", "exact_power", "m_times_exact", "inequality_holds", "max_apply_error", "status"],
    );
    for &m in &config.schedule.powers {
        let p = power_action(t, m);
        let err: orbit_entropy_core::Result<f64> = p.as_ref().map_err(Clone::clone).and_then(|p| {
            t.generators()
                .iter()
                .zip(p.generators())
                .map(|(g, pg)| power_apply_error(g, pg, m, t.space()))
                .try_fold(0.0f64, |acc, e| Ok(acc.max(e?)))
        });
        if let Err(e) = &err {
            report.row_errors.push(format!("power m={m}: {e}"));
        }
        if let Ok(e) = &err {
            report.check(format!("power_apply m={m}"), *e <= SLACK, format!("max error {e:e}"));
        }
        let exact = multipliers.as_ref().map(|l| {
            let lhs = l.iter().map(|&x| (x as f64).powi(m as i32)).sum::<f64>().ln();
            let rhs = m as f64 * (l.iter().sum::<i64>() as f64).ln();
            (lhs, rhs)
        });
        if let Some((lhs, rhs)) = exact {
            report.check(format!("power_rule m={m}"), lhs <= rhs + SLACK, format!("{lhs} <= {rhs}"));
        }
        table.push(vec![
            m.into(),
            p.as_ref()
                .ok()
                .map(|p| p.generators().iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
                .into(),
            exact.map(|e| e.0).into(),
            exact.map(|e| e.1).into(),
            exact.map(|e| e.0 <= e.1 + SLACK).into(),
            err.as_ref().ok().copied().into(),
            match (&p, &err) {
                (Err(e), _) | (_, Err(e)) => e.to_string().into(),
                _ => "ok".into(),
            },
        ]);
    }
    report.tables.push(table);
}

fn conjugacy_check(config: &ExperimentConfig, t: &Action, report: &mut RunReport) -> anyhow::Result<()> {
    if t.space() != Space::Circle {
        bail!("the conjugacy check uses a circle diffeomorphism; the action is on {}", t.space());
    }
    let c = &config.conjugacy;
    let h = Homeomorphism::circle_sine(c.amplitude);
    let conj = conjugate_action(t, &h).context("conjugating the action")?;
    let budget = config.schedule.budget;
    let rows: Vec<_> = entries(config)
        .par_iter()
        .map(|e| {
            let ((a, b), ms) = timed(config.timing, || (estimate_one(t, e, budget), estimate_one(&conj, e, budget)));
            (*e, a, b, ms)
        })
        .collect();
    let mut table = Table::new(
        "conjugacy_check",
        &[
            "n", "epsilon", "grid", "amplitude", "count", "rate", "conj_count", "conj_rate", "abs_diff", "tolerance",
            "holds", "elapsed_ms", "budget", "status",
        ],
    );
    for (e, a, b, ms) in rows {
        let diff = match (&a, &b) {
            (Ok(x), Ok(y)) => Some((x.rate - y.rate).abs()),
            _ => None,
        };
        if let Some(d) = diff {
            report.check(
                format!("conjugacy n={} epsilon={}", e.n, e.epsilon),
                d <= c.tolerance,
                format!("|rate difference| = {d}"),
            );
        }
        let status = match (&a, &b) {
            (Err(err), _) | (_, Err(err)) => {
                report.row_errors.push(format!("conjugacy n={} epsilon={}: {err}", e.n, e.epsilon));
                err.to_string().into()
            }
            _ => Cell::from("ok"),
        };
        let [count, rate] = estimate_cells(&a);
        let [conj_count, conj_rate] = estimate_cells(&b);
        table.push(vec![
            e.n.into(),
            e.epsilon.into(),
            e.grid.into(),
            c.amplitude.into(),
            count,
            rate,
            conj_count,
            conj_rate,
            diff.into(),
            c.tolerance.into(),
            diff.map(|d| d <= c.tolerance).into(),
            ms,
            budget.into(),
            status,
        ]);
    }
    report.tables.push(table);
    Ok(())
}
