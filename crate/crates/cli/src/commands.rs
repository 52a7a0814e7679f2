//! The experiment commands. Each returns its CSV table plus optional summary
//! and human-readable notes; writing is left to the caller.

use std::sync::Arc;

use anyhow::{bail, Result};
use symdom::calculus::{composition_check, integral_calculus_many, series_calculus};
use symdom::exec::map_indexed;
use symdom::hilbert::{
    commutator_rows, default_window, permissive_transform, OperatorTuple, ProfileRow, QuotientModel, SubmoduleSpec,
    Symbol,
};
use symdom::kernel::{closed_form_norms, kernel_eval, TruncatedBasis};
use symdom::koszul::{grid_scan, joint_eigenvalue_estimate, joint_eigenvalues, spectral_mapping_check};
use symdom::linalg::{c64, hermitian_eigenvalues, op_norm, real, CMatrix, C64};
use symdom::quadrature::shilov_quadrature;
use symdom::sampling::{
    random_diagonalizable_tuple, random_interior_point, random_nonnormal_tuple, random_triangular_tuple, seeded_rng,
    CommutingSample, SeededRng,
};
use symdom::{DomainKind, DomainSpec, ExecMode, MobiusMap, Point};

use crate::cache::BasisCache;
use crate::config::{ExperimentConfig, TupleKind};
use crate::output::{fmt_c64, fmt_f64, fmt_point, Table};

/// Residual bound for composition rows.
pub const COMPOSITION_TOL: f64 = 1e-9;
/// Hausdorff bound for spectral mapping rows.
pub const SPECTRAL_MAPPING_TOL: f64 = 1e-6;
/// Points this close to a known joint eigenvalue are expected singular.
pub const ORACLE_EXACT_TOL: f64 = 1e-9;
/// The same for eigenvalues obtained numerically.
pub const ORACLE_ESTIMATE_TOL: f64 = 1e-6;
/// Points farther than this from every joint eigenvalue are expected regular.
pub const ORACLE_GAP: f64 = 1e-3;

pub struct Run {
    pub config: ExperimentConfig,
    pub cache: BasisCache,
    pub mode: ExecMode,
}

impl Run {
    fn basis(&self, d: usize) -> Result<Arc<TruncatedBasis>> {
        Ok(Arc::new(self.cache.basis(&self.config.domain, self.config.lambda, d, self.mode)?))
    }

    fn quotient(&self, d: usize) -> Result<QuotientModel> {
        let basis = self.basis(d)?;
        let gens = self.config.generator_polys()?;
        Ok(if gens.is_empty() {
            QuotientModel::full(basis)?
        } else {
            QuotientModel::new(basis, &SubmoduleSpec::new(gens)?)?
        })
    }
}

pub struct Report {
    pub table: Table,
    pub summary: Option<Table>,
    pub notes: Vec<String>,
}

fn collect<T>(v: Vec<Result<T>>) -> Result<Vec<T>> {
    v.into_iter().collect()
}

fn sample_tuple(
    dom: &DomainSpec,
    kind: TupleKind,
    size: usize,
    radius: f64,
    repeated: bool,
    rng: &mut SeededRng,
) -> CommutingSample {
    match kind {
        TupleKind::Diagonal => random_diagonalizable_tuple(dom, size, radius, repeated, rng),
        TupleKind::Triangular => random_triangular_tuple(dom, size, radius, rng),
        TupleKind::Nonnormal => random_nonnormal_tuple(dom, size, radius, rng),
        TupleKind::Quotient => unreachable!("rejected by validation"),
    }
}

pub fn kernel(run: &Run) -> Result<Report> {
    let cfg = &run.config;
    let dom = cfg.domain;
    let mut rng = seeded_rng(cfg.seed);
    let pairs: Vec<(Point, Point)> = (0..cfg.kernel.pairs)
        .map(|_| {
            let z = random_interior_point(&dom, cfg.kernel.radius, &mut rng);
            (z, random_interior_point(&dom, cfg.kernel.radius, &mut rng))
        })
        .collect();
    let exact = pairs.iter().map(|(z, w)| kernel_eval(&dom, cfg.lambda, z, w)).collect::<symdom::Result<Vec<C64>>>()?;
    let rows = collect(map_indexed(run.mode, cfg.d_list.len(), |k| -> Result<Vec<String>> {
        let d = cfg.d_list[k];
        let basis = run.basis(d)?;
        let mut err = 0.0f64;
        for ((z, w), &e) in pairs.iter().zip(&exact) {
            err = err.max((basis.partial_kernel(z, w)? - e).norm() / e.norm());
        }
        let (oracle, dev, ratio) = gram_check(&basis)?;
        Ok(vec![
            dom.to_string(),
            fmt_f64(cfg.lambda),
            d.to_string(),
            basis.dim().to_string(),
            pairs.len().to_string(),
            fmt_f64(err),
            oracle.into(),
            fmt_f64(dev),
            fmt_f64(ratio),
        ])
    }))?;
    let mut table = Table::new([
        "domain",
        "lambda",
        "D",
        "dim",
        "pairs",
        "max_partial_sum_error",
        "gram_oracle",
        "max_gram_deviation",
        "gram_min_eig_ratio",
    ]);
    let mut worst = 0.0f64;
    for r in rows {
        worst = worst.max(r[7].parse().unwrap_or(f64::NAN));
        table.push(r);
    }
    Ok(Report { table, summary: None, notes: vec![format!("max Gram deviation over all D: {}", fmt_f64(worst))] })
}

/// Gram blocks against the closed-form monomial norms where they exist,
/// otherwise against hermitian symmetry. Also the smallest ratio of
/// extreme eigenvalues over the blocks, which is positive for a valid Gram
/// matrix.
fn gram_check(basis: &TruncatedBasis) -> Result<(&'static str, f64, f64)> {
    let dom = basis.domain();
    let closed = !matches!(dom.kind(), DomainKind::MatrixBall { .. });
    let mut dev = 0.0f64;
    let mut ratio = f64::INFINITY;
    for d in 0..=basis.max_degree() {
        let g = basis.gram_block(d);
        let eig = hermitian_eigenvalues(&((g + g.adjoint()) * real(0.5)));
        let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        ratio = ratio.min(lo / hi);
        if closed {
            let norms = basis
                .monomials_of(d)
                .iter()
                .map(|a| closed_form_norms(dom, basis.lambda(), a))
                .collect::<symdom::Result<Vec<f64>>>()?;
            for (i, ni) in norms.iter().enumerate() {
                for (j, nj) in norms.iter().enumerate() {
                    let oracle = if i == j { *ni } else { 0.0 };
                    dev = dev.max((g[(i, j)] - real(oracle)).norm() / (ni * nj).sqrt());
                }
            }
        } else {
            dev = dev.max(op_norm(&(g - g.adjoint())) / op_norm(g));
        }
    }
    Ok((if closed { "closed_form" } else { "hermitian_pd" }, dev, ratio))
}

struct SpectrumCase {
    d: Option<usize>,
    ops: Vec<CMatrix>,
    eig: Vec<Point>,
    tol: f64,
}

fn distinct(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for p in points {
        if out.iter().all(|q| q.dist(p) > ORACLE_EXACT_TOL) {
            out.push(p.clone());
        }
    }
    out
}

fn oracle(z: &Point, eig: &[Point], tol: f64) -> &'static str {
    let d = eig.iter().map(|e| e.dist(z)).fold(f64::INFINITY, f64::min);
    if d <= tol {
        "singular"
    } else if d > ORACLE_GAP {
        "regular"
    } else {
        "unknown"
    }
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let Some(g) = &cfg.spectrum.grid else { return Vec::new() };
    let vals: Vec<f64> = if g.steps == 1 {
        vec![g.min]
    } else {
        (0..g.steps).map(|k| g.min + (g.max - g.min) * k as f64 / (g.steps - 1) as f64).collect()
    };
    let cvals: Vec<C64> = vals.iter().flat_map(|&y| vals.iter().map(move |&x| c64(x, y))).collect();
    let n = cfg.nvars();
    let m = cvals.len();
    (0..m.pow(n as u32)).map(|idx| Point::from_fn(n, |i| cvals[(idx / m.pow(i as u32)) % m])).collect()
}

fn spectrum_cases(run: &Run) -> Result<Vec<SpectrumCase>> {
    let cfg = &run.config;
    let s = &cfg.spectrum;
    if s.tuple != TupleKind::Quotient {
        let mut rng = seeded_rng(cfg.seed);
        let sample = sample_tuple(&cfg.domain, s.tuple, s.size, s.radius, s.repeated, &mut rng);
        return Ok(vec![SpectrumCase {
            d: None,
            ops: sample.ops,
            eig: sample.joint_eigenvalues,
            tol: ORACLE_EXACT_TOL,
        }]);
    }
    collect(map_indexed(run.mode, cfg.d_list.len(), |k| {
        let d = cfg.d_list[k];
        let ops = run.quotient(d)?.tuple().to_vec();
        let (eig, tol) = match joint_eigenvalues(&ops, cfg.seed) {
            Ok(e) => (e, ORACLE_EXACT_TOL),
            Err(_) => (joint_eigenvalue_estimate(&ops, cfg.seed)?, ORACLE_ESTIMATE_TOL),
        };
        Ok(SpectrumCase { d: Some(d), ops, eig, tol })
    }))
}

pub fn spectrum(run: &Run) -> Result<Report> {
    let cfg = &run.config;
    let n = cfg.nvars();
    let mut header = vec!["D".to_string(), "source".to_string()];
    header.extend((1..=n).map(|i| format!("w{i}")));
    header.extend(["verdict", "oracle", "min_defect"].map(String::from));
    let mut table = Table::new(header);
    let grid = grid_points(cfg);
    let (mut agree, mut disagree, mut unknown) = (0usize, 0usize, 0usize);
    for case in spectrum_cases(run)? {
        let eig = distinct(&case.eig);
        let mut points: Vec<(&str, Point)> = eig.iter().map(|e| ("eigenvalue", e.clone())).collect();
        points.extend(cfg.spectrum.points.iter().map(|p| ("point", p.clone())));
        points.extend(grid.iter().map(|p| ("grid", p.clone())));
        let pts: Vec<Point> = points.iter().map(|(_, p)| p.clone()).collect();
        let scan = grid_scan(&case.ops, &pts, cfg.spectrum.rank_tol, run.mode)?;
        for ((source, z), row) in points.iter().zip(scan) {
            let expected = if *source == "eigenvalue" { "singular" } else { oracle(z, &eig, case.tol) };
            let verdict = row.verdict.to_string();
            match expected {
                "unknown" => unknown += 1,
                e if e == verdict => agree += 1,
                _ => disagree += 1,
            }
            let mut r = vec![case.d.map(|d| d.to_string()).unwrap_or_default(), source.to_string()];
            r.extend(z.coords().iter().map(|&c| fmt_c64(c)));
            r.extend([verdict, expected.to_string(), fmt_f64(row.min_defect)]);
            table.push(r);
        }
    }
    let notes =
        vec![format!("point tests: {agree} agree with the oracle, {disagree} disagree, {unknown} without oracle")];
    Ok(Report { table, summary: None, notes })
}

fn calculus_row(
    check: &str,
    tuple: &str,
    detail: String,
    level: String,
    nodes: String,
    residual: f64,
    tol: f64,
) -> Vec<String> {
    vec![
        check.into(),
        tuple.into(),
        detail,
        level,
        nodes,
        fmt_f64(residual),
        fmt_f64(tol),
        (residual <= tol).to_string(),
    ]
}

pub fn calculus(run: &Run) -> Result<Report> {
    let cfg = &run.config;
    let dom = cfg.domain;
    let fs = cfg.calculus_polys()?;
    let mut rng = seeded_rng(cfg.seed);
    let tuples: Vec<(String, Vec<CMatrix>)> = cfg
        .calculus
        .tuples
        .iter()
        .enumerate()
        .map(|(k, t)| {
            (format!("{}#{k}", t.kind), sample_tuple(&dom, t.kind, t.size, t.radius, t.repeated, &mut rng).ops)
        })
        .collect();
    let centers = if cfg.symbols.mobius.is_empty() {
        vec![random_interior_point(&dom, 0.5, &mut rng)]
    } else {
        cfg.symbols.mobius.clone()
    };
    let levels = cfg.levels();
    let mut table = Table::new(["check", "tuple", "detail", "level", "nodes", "residual", "tolerance", "pass"]);
    for (name, ops) in &tuples {
        for &level in &levels {
            let quad = shilov_quadrature(&dom, level)?;
            let integrals = integral_calculus_many(ops, &fs, &quad, &dom, run.mode)?;
            for (f, m) in fs.iter().zip(integrals) {
                let series = series_calculus(ops, f)?;
                let residual = op_norm(&(&m - &series)) / op_norm(&series).max(1.0);
                let (lv, nodes) = (level.to_string(), quad.len().to_string());
                table.push(calculus_row("integral", name, f.to_string(), lv, nodes, residual, quad.tolerance_class()));
            }
        }
        for z0 in &centers {
            let residual = composition_check(ops, z0, &dom)?;
            table.push(calculus_row(
                "composition",
                name,
                fmt_point(z0),
                String::new(),
                String::new(),
                residual,
                COMPOSITION_TOL,
            ));
        }
        let map = spectral_mapping_check(ops, &fs, cfg.seed)?;
        let label = fs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        table.push(calculus_row(
            "spectral_mapping",
            name,
            label,
            String::new(),
            String::new(),
            map.distance,
            SPECTRAL_MAPPING_TOL,
        ));
    }
    if levels.is_empty() {
        eprintln!("note: no boundary quadrature on {dom}; integral rows skipped");
    }
    let pass = table.column("pass").expect("pass column");
    let failed = table.rows.iter().filter(|r| r[pass] == "false").count();
    Ok(Report { notes: vec![format!("{} checks, {failed} above tolerance", table.rows.len())], table, summary: None })
}

struct Family {
    name: String,
    symbols: Vec<Symbol>,
}

fn families(cfg: &ExperimentConfig) -> Result<Vec<Family>> {
    let n = cfg.nvars();
    let mut out = Vec::new();
    if cfg.symbols.coordinates {
        out.push(Family { name: "coordinates".into(), symbols: (0..n).map(|i| Symbol::coordinate(n, i)).collect() });
    }
    for z0 in &cfg.symbols.mobius {
        let g = MobiusMap::new(z0, &cfg.domain)?;
        let symbols = g.rational_components().into_iter().map(Symbol::Rational).collect();
        out.push(Family { name: format!("mobius({})", fmt_point(z0)), symbols });
    }
    if out.is_empty() {
        bail!("invariance needs coordinate symbols or at least one Moebius center");
    }
    Ok(out)
}

struct Labeled {
    family: String,
    c: f64,
    window: usize,
    row: ProfileRow,
}

pub fn invariance(run: &Run) -> Result<Report> {
    let cfg = &run.config;
    let fams = families(cfg)?;
    let all: Vec<Symbol> = fams.iter().flat_map(|f| f.symbols.clone()).collect();
    let w = cfg.window.unwrap_or_else(|| default_window(&all));
    let per_d = collect(map_indexed(run.mode, cfg.d_list.len(), |k| -> Result<Vec<Labeled>> {
        let qm = run.quotient(cfg.d_list[k])?;
        let mut out = Vec::new();
        for fam in &fams {
            let labels: Vec<String> = fam.symbols.iter().map(Symbol::label).collect();
            let ops = collect(map_indexed(run.mode, fam.symbols.len(), |i| Ok(qm.compress_symbol(&fam.symbols[i])?)))?;
            let mut variants = vec![(1.0, ops.clone())];
            if let Some(s) = &cfg.scaling {
                let d = s.d.clone().unwrap_or_else(|| Point::zeros(cfg.nvars()));
                let t = permissive_transform(&OperatorTuple::new(ops)?, s.c, d.coords(), &cfg.domain)?;
                variants.push((s.c, t.ops));
            }
            for (c, mats) in &variants {
                for &p in &cfg.p {
                    for row in commutator_rows(&qm, &labels, mats, p, w, run.mode)? {
                        out.push(Labeled { family: fam.name.clone(), c: *c, window: w, row });
                    }
                }
            }
        }
        Ok(out)
    }))?;
    let rows: Vec<Labeled> = per_d.into_iter().flatten().collect();
    let mut table = Table::new([
        "family",
        "c",
        "domain",
        "lambda",
        "D",
        "symbol_i",
        "symbol_j",
        "p",
        "schatten_full",
        "schatten_windowed",
        "dim_quotient",
        "window",
    ]);
    for l in &rows {
        let r = &l.row;
        table.push(vec![
            l.family.clone(),
            fmt_f64(l.c),
            r.domain.clone(),
            fmt_f64(r.lambda),
            r.d.to_string(),
            r.symbol_i.clone(),
            r.symbol_j.clone(),
            fmt_f64(r.p),
            fmt_f64(r.schatten_full),
            fmt_f64(r.schatten_windowed),
            r.dim_quotient.to_string(),
            l.window.to_string(),
        ]);
    }
    let (summary, worst) = stabilization(&rows);
    let notes = match worst {
        Some(x) => vec![format!("largest relative change of windowed norms between the two largest D: {}", fmt_f64(x))],
        None => vec!["stabilization needs at least two distinct D".to_string()],
    };
    Ok(Report { table, summary: Some(summary), notes })
}

fn relative_change(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Per cell, the change between the two largest truncation degrees.
fn stabilization(rows: &[Labeled]) -> (Table, Option<f64>) {
    let mut table = Table::new([
        "family",
        "c",
        "symbol_i",
        "symbol_j",
        "p",
        "D_prev",
        "D_last",
        "windowed_prev",
        "windowed_last",
        "relative_change_windowed",
        "full_prev",
        "full_last",
        "relative_change_full",
    ]);
    let mut ds: Vec<usize> = rows.iter().map(|l| l.row.d).collect();
    ds.sort_unstable();
    ds.dedup();
    let [.., prev, last] = ds[..] else { return (table, None) };
    let key = |l: &Labeled| {
        (l.family.clone(), l.c.to_bits(), l.row.symbol_i.clone(), l.row.symbol_j.clone(), l.row.p.to_bits())
    };
    let mut worst = 0.0f64;
    for a in rows.iter().filter(|l| l.row.d == prev) {
        let Some(b) = rows.iter().find(|l| l.row.d == last && key(l) == key(a)) else { continue };
        let cw = relative_change(a.row.schatten_windowed, b.row.schatten_windowed);
        worst = worst.max(cw);
        table.push(vec![
            a.family.clone(),
            fmt_f64(a.c),
            a.row.symbol_i.clone(),
            a.row.symbol_j.clone(),
            fmt_f64(a.row.p),
            prev.to_string(),
            last.to_string(),
            fmt_f64(a.row.schatten_windowed),
            fmt_f64(b.row.schatten_windowed),
            fmt_f64(cw),
            fmt_f64(a.row.schatten_full),
            fmt_f64(b.row.schatten_full),
            fmt_f64(relative_change(a.row.schatten_full, b.row.schatten_full)),
        ]);
    }
    (table, Some(worst))
}
