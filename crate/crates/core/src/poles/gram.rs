//! Gram-matrix pole certificate over a regularisation ladder.
//!
//! For monomials `u^m`, `|m|_1 <= D`, assemble moment matrices
//! `G_delta[m, m'] = int_{B(loc, eps)} u^{m+m'} / (s(u) + delta) du`
//! along a decreasing delta ladder. Directions whose energy diverges as
//! `delta -> 0` show up as generalised eigenvalues of consecutive ladder
//! pairs with a growth factor bounded away from one; the remaining
//! eigenvectors span the polynomials with bounded local energy.
//!
//! The order `k` has a pole exactly when the coordinate vector `e_k` is
//! orthogonal to that bounded span. Finite-delta spans are contaminated at
//! order `sqrt(delta)`, so the projection norms are extrapolated to the
//! `delta -> 0` limit before the tolerance test. A NoPole verdict ships a
//! witness polynomial whose energy is re-validated by an independent shell
//! ladder; a witness that fails validation demotes the verdict.

use std::cell::RefCell;
use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{PoleVerdict, Witness};
use crate::error::{Result, RigidityError};
use crate::index::{multi_indices_up_to, MultiIndex};
use crate::spectral::density::SpectralDensity;
use crate::spectral::ladder::{inward_shell_ladder, probe_directions, LadderConfig, LadderVerdict};
use crate::spectral::quad::{integrate, QuadOptions};

/// Tuning for [`gram_pole_test`].
#[derive(Debug, Clone)]
pub struct GramConfig {
    /// Monomial degree cap `|m|_1 <= degree`.
    pub degree: u32,
    /// Ball radius; the test also runs at `eps / 2` and demands agreement.
    pub eps: f64,
    /// Regularisation ladder, strictly decreasing.
    pub deltas: Vec<f64>,
    /// Generalised eigenvalues at or below this factor count as bounded.
    pub growth_threshold: f64,
    /// Pole verdict when the extrapolated projection norm is below this.
    pub projection_tol: f64,
    /// Minimum principal-angle cosine between the spans at the two radii.
    pub angle_tol: f64,
    /// Condition-number ceiling for the ladder Gram matrices.
    pub cond_limit: f64,
    /// Relative tolerance of the moment quadratures.
    pub quad_rel_tol: f64,
    /// Sample count of the per-slice minimum scan that seeds breakpoints.
    pub scan_points: usize,
    /// Ladder used to re-validate witness energies.
    pub witness_ladder: LadderConfig,
}

impl Default for GramConfig {
    fn default() -> Self {
        GramConfig {
            degree: 2,
            eps: 0.5,
            deltas: vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12],
            growth_threshold: 2.0,
            projection_tol: 1e-8,
            angle_tol: 0.99,
            cond_limit: 1e14,
            quad_rel_tol: 1e-12,
            scan_points: 256,
            witness_ladder: LadderConfig {
                sphere_directions: 128,
                ..LadderConfig::default()
            },
        }
    }
}

/// Why the test did or did not reach per-order verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GramStatus {
    Resolved,
    /// Some ladder Gram matrix was numerically singular or beyond the
    /// condition ceiling.
    IllConditioned,
    /// The bounded span did not stabilise across ladder pairs or radii.
    UnstableSpan,
}

/// Verdict and diagnostics for one monomial order.
#[derive(Debug, Clone, Serialize)]
pub struct GramEntry {
    pub k: MultiIndex,
    pub verdict: PoleVerdict,
    /// Extrapolated distance from `e_k` to the orthogonal complement of the
    /// bounded span.
    pub projection: f64,
    /// Raw projection norms along the ladder pairs (coarse to fine).
    pub projection_sequence: Vec<f64>,
    pub witness: Option<Witness>,
    /// Shell-ladder verdict on the witness energy, when a witness exists.
    pub witness_check: Option<LadderVerdict>,
}

/// Full outcome of the Gram certificate at one location.
#[derive(Debug, Clone, Serialize)]
pub struct GramPoleReport {
    pub location: Vec<f64>,
    pub degree: u32,
    pub eps: [f64; 2],
    pub deltas: Vec<f64>,
    pub monomials: Vec<MultiIndex>,
    pub status: GramStatus,
    /// Dimension of the bounded-energy polynomial span.
    pub bounded_dim: usize,
    /// Generalised eigenvalues of the finest ladder pair, ascending.
    pub growth_factors: Vec<f64>,
    /// Orthonormal basis of the bounded span (finest pair, smaller radius),
    /// one coefficient vector per row.
    pub span: Vec<Vec<f64>>,
    /// Smallest principal-angle cosine between the spans at the two radii.
    pub span_alignment: f64,
    pub entries: Vec<GramEntry>,
    pub notes: Vec<String>,
}

impl GramPoleReport {
    /// Verdict row for the order `k`, when `|k|_1 <= degree`.
    pub fn entry(&self, k: &MultiIndex) -> Option<&GramEntry> {
        let i = self.monomials.iter().position(|m| m == k)?;
        Some(&self.entries[i])
    }
}

/// Run the Gram certificate for every monomial order up to the configured
/// degree at once.
pub fn gram_pole_test(
    s: &SpectralDensity,
    location: &[f64],
    cfg: &GramConfig,
) -> Result<GramPoleReport> {
    let d = s.dim();
    if location.len() != d {
        return Err(RigidityError::InvalidInput(
            "location dimension does not match the density".into(),
        ));
    }
    if d > 3 {
        return Err(RigidityError::InvalidInput(
            "gram certificate supports dimensions 1..=3".into(),
        ));
    }
    if !(cfg.eps > 0.0) {
        return Err(RigidityError::InvalidInput("gram eps must be positive".into()));
    }
    if cfg.deltas.len() < 3 || cfg.deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RigidityError::InvalidInput(
            "delta ladder must be strictly decreasing with >= 3 levels".into(),
        ));
    }
    let monomials = multi_indices_up_to(d, cfg.degree);
    let n = monomials.len();
    let eps_levels = [cfg.eps, 0.5 * cfg.eps];

    let mut notes = Vec::new();
    let mut per_eps: Vec<EpsLevel> = Vec::new();
    let mut status = GramStatus::Resolved;
    for &eps in &eps_levels {
        let grams = gram_ladder(s, location, eps, &monomials, cfg)?;
        match analyse_ladder(&grams, cfg) {
            Ok(level) => per_eps.push(level),
            Err(LadderProblem::IllConditioned(c)) => {
                notes.push(format!(
                    "gram ladder at eps {eps:.3} has condition number {c:.3e}"
                ));
                status = GramStatus::IllConditioned;
            }
            Err(LadderProblem::UnstableCount(counts)) => {
                notes.push(format!(
                    "bounded count not stable along the ladder at eps {eps:.3}: {counts:?}"
                ));
                status = GramStatus::UnstableSpan;
            }
        }
        if status != GramStatus::Resolved {
            break;
        }
    }

    let mut bounded_dim = 0;
    let mut growth_factors = Vec::new();
    let mut span_rows: Vec<Vec<f64>> = Vec::new();
    let mut span_alignment = 1.0;
    let mut entries: Vec<GramEntry> = monomials
        .iter()
        .map(|k| GramEntry {
            k: k.clone(),
            verdict: PoleVerdict::Undetermined,
            projection: f64::NAN,
            projection_sequence: vec![],
            witness: None,
            witness_check: None,
        })
        .collect();

    if status == GramStatus::Resolved {
        let [coarse, fine] = [&per_eps[0], &per_eps[1]];
        if coarse.rank != fine.rank {
            notes.push(format!(
                "bounded dimension differs between radii: {} vs {}",
                coarse.rank, fine.rank
            ));
            status = GramStatus::UnstableSpan;
        } else {
            span_alignment = span_cosine(coarse.spans.last().unwrap(), fine.spans.last().unwrap());
            if span_alignment < cfg.angle_tol {
                notes.push(format!(
                    "bounded spans at the two radii misaligned (cos {span_alignment:.4})"
                ));
                status = GramStatus::UnstableSpan;
            }
        }
        if status == GramStatus::Resolved {
            bounded_dim = fine.rank;
            growth_factors = fine.mus.last().unwrap().clone();
            let q_last = fine.spans.last().unwrap();
            span_rows = (0..bounded_dim)
                .map(|c| (0..n).map(|r| q_last[(r, c)]).collect())
                .collect();
            for (i, k) in monomials.iter().enumerate() {
                let seq: Vec<f64> = fine
                    .spans
                    .iter()
                    .map(|q| q.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
                    .collect();
                let projection = extrapolate_to_limit(&seq);
                let mut verdict;
                let mut witness = None;
                let mut witness_check = None;
                if projection.abs() <= cfg.projection_tol {
                    verdict = PoleVerdict::Pole;
                } else {
                    verdict = PoleVerdict::NoPole;
                    let w = extrapolated_witness(&fine.spans, i, &monomials);
                    match w {
                        Some(wit) => {
                            let check = witness_energy(s, location, &wit, cfg)?;
                            witness_check = Some(check);
                            if check != LadderVerdict::Convergent {
                                verdict = PoleVerdict::Undetermined;
                                notes.push(format!(
                                    "witness for {k} failed the energy ladder ({check:?})"
                                ));
                            }
                            witness = Some(wit);
                        }
                        None => {
                            verdict = PoleVerdict::Undetermined;
                            notes.push(format!("witness extrapolation for {k} degenerated"));
                        }
                    }
                }
                entries[i] = GramEntry {
                    k: k.clone(),
                    verdict,
                    projection,
                    projection_sequence: seq,
                    witness,
                    witness_check,
                };
            }
        }
    }

    Ok(GramPoleReport {
        location: location.to_vec(),
        degree: cfg.degree,
        eps: eps_levels,
        deltas: cfg.deltas.clone(),
        monomials,
        status,
        bounded_dim,
        growth_factors,
        span: span_rows,
        span_alignment,
        entries,
        notes,
    })
}

/// Bounded spans extracted at one radius: one span per ladder pair.
struct EpsLevel {
    rank: usize,
    /// Orthonormal `n x rank` span per ladder pair, coarse to fine.
    spans: Vec<DMatrix<f64>>,
    /// Generalised eigenvalues per ladder pair, ascending.
    mus: Vec<Vec<f64>>,
}

enum LadderProblem {
    IllConditioned(f64),
    UnstableCount(Vec<usize>),
}

/// Pencil analysis of consecutive ladder pairs.
fn analyse_ladder(grams: &[DMatrix<f64>], cfg: &GramConfig) -> std::result::Result<EpsLevel, LadderProblem> {
    let mut spans = Vec::new();
    let mut mus = Vec::new();
    let mut counts = Vec::new();
    for w in grams.windows(2) {
        let (b, a) = (&w[0], &w[1]);
        let pair = pencil_span(a, b, cfg.growth_threshold, cfg.cond_limit)
            .map_err(LadderProblem::IllConditioned)?;
        counts.push(pair.0.ncols());
        spans.push(pair.0);
        mus.push(pair.1);
    }
    // the coarsest pair may be pre-asymptotic; the rest must agree
    let tail = &counts[1..];
    let rank = *tail.last().unwrap();
    if tail.iter().any(|&c| c != rank) {
        return Err(LadderProblem::UnstableCount(counts));
    }
    // keep only the stable pairs for extrapolation
    Ok(EpsLevel {
        rank,
        spans: spans.split_off(1),
        mus: mus.split_off(1),
    })
}

/// Bounded span and growth factors of the pencil `A x = mu B x`.
pub(crate) fn pencil_span(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    growth_threshold: f64,
    cond_limit: f64,
) -> std::result::Result<(DMatrix<f64>, Vec<f64>), f64> {
    let n = b.nrows();
    let eig_b = b.clone().symmetric_eigen();
    let bmax = eig_b.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let bmin = eig_b.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let cond = if bmin > 0.0 { bmax / bmin } else { f64::INFINITY };
    if !(cond < cond_limit) {
        return Err(cond);
    }
    let chol = match b.clone().cholesky() {
        Some(c) => c,
        None => return Err(f64::INFINITY),
    };
    let l = chol.l();
    // M = L^{-1} A L^{-T}, symmetrised against round-off
    let x = l
        .solve_lower_triangular(a)
        .ok_or(f64::INFINITY)?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(f64::INFINITY)?;
    let m = 0.5 * (&m + m.transpose());
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mus: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let r = mus.iter().filter(|&&m| m <= growth_threshold).count();
    // map bounded eigenvectors back to coefficient space: x = L^{-T} y
    let mut xs = DMatrix::zeros(n, r);
    for (c, &i) in order.iter().take(r).enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = l
            .transpose()
            .solve_upper_triangular(&y)
            .ok_or(f64::INFINITY)?;
        xs.set_column(c, &x);
    }
    Ok((orthonormalize(&xs), mus))
}

/// Orthonormal basis of the column space (columns with negligible singular
/// values are dropped).
pub(crate) fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd requested u");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv > 1e-12 * smax)
        .map(|(i, _)| i)
        .collect();
    let mut q = DMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        q.set_column(c, &u.column(i));
    }
    q
}

/// Smallest principal-angle cosine between two orthonormal spans.
pub(crate) fn span_cosine(q1: &DMatrix<f64>, q2: &DMatrix<f64>) -> f64 {
    if q1.ncols() == 0 && q2.ncols() == 0 {
        return 1.0;
    }
    if q1.ncols() != q2.ncols() {
        return 0.0;
    }
    let prod = q1.transpose() * q2;
    let svd = prod.svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Limit of a sequence contaminated by decaying power-law terms: iterated
/// Aitken extrapolation with a geometric tail correction.
pub(crate) fn extrapolate_to_limit(seq: &[f64]) -> f64 {
    let mut cur: Vec<f64> = seq.to_vec();
    while cur.len() >= 3 {
        let mut next = Vec::with_capacity(cur.len() - 2);
        for w in cur.windows(3) {
            let (x0, x1, x2) = (w[0], w[1], w[2]);
            let den = (x2 - x1) - (x1 - x0);
            if den.abs() <= 1e-14 * (x0.abs() + x1.abs() + x2.abs()).max(1e-300) {
                next.push(x2);
            } else {
                next.push(x2 - (x2 - x1) * (x2 - x1) / den);
            }
        }
        cur = next;
    }
    if cur.len() == 2 {
        let (x1, x2) = (cur[0], cur[1]);
        if x1.abs() > 1e-300 {
            let r = x2 / x1;
            if r.abs() < 0.9 {
                // continue a geometrically decaying tail to its limit
                return x2 + (x2 - x1) * r / (1.0 - r);
            }
        }
        return x2;
    }
    *cur.last().unwrap_or(&f64::NAN)
}

/// Coefficientwise extrapolated projection of `e_i` onto the bounded span,
/// normalised to unit length.
fn extrapolated_witness(
    spans: &[DMatrix<f64>],
    i: usize,
    monomials: &[MultiIndex],
) -> Option<Witness> {
    let n = monomials.len();
    // per-pair projections Q Q^T e_i
    let projs: Vec<DVector<f64>> = spans
        .iter()
        .map(|q| {
            let row = q.row(i).transpose();
            q * row
        })
        .collect();
    let mut coeffs = vec![0.0; n];
    for (c, coeff) in coeffs.iter_mut().enumerate() {
        let seq: Vec<f64> = projs.iter().map(|p| p[c]).collect();
        *coeff = extrapolate_to_limit(&seq);
    }
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return None;
    }
    for c in coeffs.iter_mut() {
        *c /= norm;
    }
    Some(Witness {
        monomials: monomials.to_vec(),
        coefficients: coeffs,
    })
}

/// Independent shell-ladder check that the witness energy is finite.
fn witness_energy(
    s: &SpectralDensity,
    location: &[f64],
    w: &Witness,
    cfg: &GramConfig,
) -> Result<LadderVerdict> {
    let d = s.dim();
    let dirs = probe_directions(d, cfg.witness_ladder.sphere_directions, s.flags().isotropic)?;
    let inv_n = 1.0 / dirs.len() as f64;
    let profile = |rho: f64| {
        let mut mean = 0.0;
        let mut p = vec![0.0; d];
        let mut local = vec![0.0; d];
        for v in &dirs {
            for i in 0..d {
                local[i] = rho * v[i];
                p[i] = location[i] + local[i];
            }
            let sv = s.eval(&p);
            if sv <= 0.0 {
                return f64::INFINITY;
            }
            let pv = w.eval(&local);
            mean += inv_n * pv * pv / sv;
        }
        mean
    };
    let report = inward_shell_ladder(&profile, d, 0.5 * cfg.eps, &cfg.witness_ladder)?;
    Ok(report.verdict)
}

/// Assemble the Gram matrix ladder at one radius. Entries with odd total
/// exponent vanish by the central symmetry of the ball and the evenness of
/// the density and are set to zero analytically.
fn gram_ladder(
    s: &SpectralDensity,
    location: &[f64],
    eps: f64,
    monomials: &[MultiIndex],
    cfg: &GramConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let n = monomials.len();
    let mut needed: Vec<Vec<u32>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let alpha: Vec<u32> = monomials[i]
                .0
                .iter()
                .zip(&monomials[j].0)
                .map(|(a, b)| a + b)
                .collect();
            if alpha.iter().sum::<u32>() % 2 == 0 && !needed.contains(&alpha) {
                needed.push(alpha);
            }
        }
    }
    needed.sort();

    let jobs: Vec<(usize, Vec<u32>)> = cfg
        .deltas
        .iter()
        .enumerate()
        .flat_map(|(di, _)| needed.iter().map(move |a| (di, a.clone())))
        .collect();
    let computed: Vec<Result<((usize, Vec<u32>), f64)>> = jobs
        .par_iter()
        .map(|(di, alpha)| {
            let v = ball_moment(s, location, eps, cfg.deltas[*di], alpha, cfg)?;
            Ok(((*di, alpha.clone()), v))
        })
        .collect();
    let mut table: BTreeMap<(usize, Vec<u32>), f64> = BTreeMap::new();
    for r in computed {
        let (key, v) = r?;
        table.insert(key, v);
    }

    let mut out = Vec::with_capacity(cfg.deltas.len());
    for di in 0..cfg.deltas.len() {
        let g = DMatrix::from_fn(n, n, |i, j| {
            let alpha: Vec<u32> = monomials[i]
                .0
                .iter()
                .zip(&monomials[j].0)
                .map(|(a, b)| a + b)
                .collect();
            if alpha.iter().sum::<u32>() % 2 == 1 {
                0.0
            } else {
                table[&(di, alpha)]
            }
        });
        out.push(g);
    }
    Ok(out)
}

/// Positions of local minima of `f` on `[a, b]`, smallest values first,
/// used as quadrature breakpoints so narrow ridges are not stepped over.
pub(crate) fn scan_minima<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(8);
    let step = (b - a) / n as f64;
    let mut vals = Vec::with_capacity(n);
    for i in 0..n {
        let t = a + (i as f64 + 0.5) * step;
        vals.push((f(t), t));
    }
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 1..n - 1 {
        if vals[i].0 <= vals[i - 1].0 && vals[i].0 <= vals[i + 1].0 {
            minima.push(vals[i]);
        }
    }
    minima.sort_by(|x, y| x.0.total_cmp(&y.0));
    minima.truncate(4);
    minima.into_iter().map(|(_, t)| t).collect()
}

fn powu(t: f64, e: u32) -> f64 {
    t.powi(e as i32)
}

/// `int_{B(loc, eps)} prod (u_i - loc_i)^{alpha_i} / (s(u) + delta) du` by
/// iterated adaptive quadrature with scanned breakpoints on the inner axes.
fn ball_moment(
    s: &SpectralDensity,
    loc: &[f64],
    eps: f64,
    delta: f64,
    alpha: &[u32],
    cfg: &GramConfig,
) -> Result<f64> {
    let inner_opt = |bps: Vec<f64>| QuadOptions {
        rel_tol: cfg.quad_rel_tol,
        abs_tol: 1e-300,
        max_panels: 4096,
        breakpoints: bps,
    };
    // outer tolerances track the inner noise floor
    let outer_opt = |bps: Vec<f64>| QuadOptions {
        rel_tol: cfg.quad_rel_tol * 30.0,
        abs_tol: 1e-300,
        max_panels: 2048,
        breakpoints: bps,
    };
    match loc.len() {
        1 => {
            let line = |t: f64| s.eval(&[loc[0] + t]);
            let mut bps = scan_minima(&line, -eps, eps, cfg.scan_points);
            bps.push(0.0);
            let g = |t: f64| powu(t, alpha[0]) / (line(t).max(0.0) + delta);
            integrate(&g, -eps, eps, &inner_opt(bps))
        }
        2 => {
            let center = |t: f64| s.eval(&[loc[0] + t, loc[1]]);
            let mut obps = scan_minima(&center, -eps, eps, cfg.scan_points);
            obps.push(0.0);
            let err: RefCell<Option<RigidityError>> = RefCell::new(None);
            let outer = |t1: f64| -> f64 {
                let w = (eps * eps - t1 * t1).max(0.0).sqrt();
                if w <= 0.0 {
                    return 0.0;
                }
                let slice = |t2: f64| s.eval(&[loc[0] + t1, loc[1] + t2]);
                let mut bps = scan_minima(&slice, -w, w, cfg.scan_points);
                bps.push(0.0);
                let g = |t2: f64| {
                    powu(t1, alpha[0]) * powu(t2, alpha[1]) / (slice(t2).max(0.0) + delta)
                };
                match integrate(&g, -w, w, &inner_opt(bps)) {
                    Ok(v) => v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let v = integrate(&outer, -eps, eps, &outer_opt(obps))?;
            match err.into_inner() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        3 => {
            // 3D moments only scan the innermost axis; oblique ridges in
            // three dimensions may need caller-provided configurations
            let scan_n = cfg.scan_points.min(64);
            let center0 = |t: f64| s.eval(&[loc[0] + t, loc[1], loc[2]]);
            let mut obps = scan_minima(&center0, -eps, eps, scan_n);
            obps.push(0.0);
            let err: RefCell<Option<RigidityError>> = RefCell::new(None);
            let outer = |t1: f64| -> f64 {
                let w1 = (eps * eps - t1 * t1).max(0.0).sqrt();
                if w1 <= 0.0 {
                    return 0.0;
                }
                let center1 = |t: f64| s.eval(&[loc[0] + t1, loc[1] + t, loc[2]]);
                let mut mbps = scan_minima(&center1, -w1, w1, scan_n);
                mbps.push(0.0);
                let middle = |t2: f64| -> f64 {
                    let w2 = (w1 * w1 - t2 * t2).max(0.0).sqrt();
                    if w2 <= 0.0 {
                        return 0.0;
                    }
                    let slice = |t3: f64| s.eval(&[loc[0] + t1, loc[1] + t2, loc[2] + t3]);
                    let mut bps = scan_minima(&slice, -w2, w2, scan_n);
                    bps.push(0.0);
                    let g = |t3: f64| {
                        powu(t1, alpha[0]) * powu(t2, alpha[1]) * powu(t3, alpha[2])
                            / (slice(t3).max(0.0) + delta)
                    };
                    match integrate(&g, -w2, w2, &inner_opt(bps)) {
                        Ok(v) => v,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                };
                match integrate(&middle, -w1, w1, &outer_opt(mbps)) {
                    Ok(v) => v,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let v = integrate(&outer, -eps, eps, &outer_opt(obps))?;
            match err.into_inner() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        _ => unreachable!("dimension validated above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::builtins;

    #[test]
    fn positive_density_has_full_bounded_span() {
        let s = builtins::white_noise(1).unwrap();
        let rep = gram_pole_test(&s, &[0.0], &GramConfig::default()).unwrap();
        assert_eq!(rep.status, GramStatus::Resolved);
        assert_eq!(rep.bounded_dim, rep.monomials.len());
        for e in &rep.entries {
            assert_eq!(e.verdict, PoleVerdict::NoPole, "order {}", e.k);
            assert_eq!(e.witness_check, Some(LadderVerdict::Convergent));
        }
    }

    #[test]
    fn quadratic_zero_blocks_only_the_constant() {
        // s = u^2: polynomials with finite energy must vanish at 0
        let s = builtins::radial_power(1, 2.0, 1.0).unwrap();
        let rep = gram_pole_test(&s, &[0.0], &GramConfig::default()).unwrap();
        assert_eq!(rep.status, GramStatus::Resolved, "notes: {:?}", rep.notes);
        assert_eq!(rep.bounded_dim, 2);
        let k0 = rep.entry(&MultiIndex::new(vec![0])).unwrap();
        assert_eq!(k0.verdict, PoleVerdict::Pole, "projection {:?}", k0);
        let k1 = rep.entry(&MultiIndex::new(vec![1])).unwrap();
        assert_eq!(k1.verdict, PoleVerdict::NoPole);
        let w = k1.witness.as_ref().unwrap();
        assert!((w.coefficient(&MultiIndex::new(vec![1])).abs() - 1.0).abs() < 1e-6);
        let k2 = rep.entry(&MultiIndex::new(vec![2])).unwrap();
        assert_eq!(k2.verdict, PoleVerdict::NoPole);
    }

    #[test]
    fn quartic_zero_blocks_the_linear_order_too() {
        // s = u^4: the energy of any polynomial with a linear component
        // diverges like delta^{-1/4}; growth factor 100^{1/4} ~ 3.16 per
        // ladder step must be classified as divergent
        let s = builtins::radial_power(1, 4.0, 1.0).unwrap();
        let rep = gram_pole_test(&s, &[0.0], &GramConfig::default()).unwrap();
        assert_eq!(rep.status, GramStatus::Resolved, "notes: {:?}", rep.notes);
        assert_eq!(rep.bounded_dim, 1);
        assert_eq!(
            rep.entry(&MultiIndex::new(vec![0])).unwrap().verdict,
            PoleVerdict::Pole
        );
        assert_eq!(
            rep.entry(&MultiIndex::new(vec![1])).unwrap().verdict,
            PoleVerdict::Pole
        );
        let k2 = rep.entry(&MultiIndex::new(vec![2])).unwrap();
        assert_eq!(k2.verdict, PoleVerdict::NoPole);
        let w = k2.witness.as_ref().unwrap();
        assert!((w.coefficient(&MultiIndex::new(vec![2])).abs() - 1.0).abs() < 1e-6);
    }
}
