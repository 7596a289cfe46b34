//! Coordinated beamforming by WMMSE block ascent under per-BS power limits
//! and AU interference-temperature limits.
//!
//! Interference limits enter through Lagrange multipliers `mu_l`. For fixed
//! multipliers the `(u, v, w)` block updates ascend
//! `F_mu = sum_k ln(1 + gamma_k) - sum_l mu_l rho_l` monotonically; between
//! rounds the multipliers take a projected subgradient step. Multipliers are
//! kept in units of `1 / I_max` internally so that step sizes are
//! dimensionless.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{add_outer, gain, inner, norm_sqr, CMat, CVec};
use crate::phy::{compute_rate, AssociationMap, BeamformerSet, POWER_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WmmseConfig {
    /// Relative change of `F_mu` that ends a block-ascent round.
    pub tol: f64,
    pub max_inner: usize,
    pub max_rounds: usize,
    /// Initial dual step in normalized units.
    pub dual_step: f64,
    /// Relative slack on `P_max` accepted from the `eta` bisection.
    pub eta_tol: f64,
    /// Relative excess over `I_max` tolerated when deciding to stop.
    pub feasibility_tol: f64,
    /// Scale all beams down when the dual loop ends infeasible.
    pub back_off: bool,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_inner: 200,
            max_rounds: 200,
            dual_step: 0.5,
            eta_tol: 1e-8,
            feasibility_tol: 1e-4,
            back_off: true,
        }
    }
}

/// Inputs of one beamforming problem. Channels are indexed `[bs][user]`.
#[derive(Clone, Copy, Debug)]
pub struct WmmseProblem<'a> {
    pub assoc: &'a AssociationMap,
    pub tu: &'a [Vec<CVec>],
    pub au: &'a [Vec<CVec>],
    pub sigma2: &'a [f64],
    pub p_max: f64,
    pub i_max: f64,
}

/// State after one `(u, v, w)` update.
#[derive(Clone, Debug, PartialEq)]
pub struct WmmseIterate {
    pub round: usize,
    /// Sum rate in bits/s/Hz.
    pub sum_rate: f64,
    /// `F_mu` in nats.
    pub lagrangian: f64,
    pub max_rho_ratio: f64,
    pub max_bs_power: f64,
    /// Normalized multipliers `mu_l * I_max` used in this iterate.
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct WmmseOutcome {
    pub bf: BeamformerSet,
    /// Multipliers in W^-1.
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub trace: Vec<WmmseIterate>,
    pub converged: bool,
    /// Uniform amplitude factor applied at the end, if any.
    pub back_off: Option<f64>,
}

impl WmmseOutcome {
    pub fn final_sum_rate(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.sum_rate)
    }
}

struct Eval {
    gamma: Vec<f64>,
    /// Desired plus interference plus noise per TU.
    total: Vec<f64>,
    rho: Vec<f64>,
}

fn evaluate(p: &WmmseProblem, w: &[CVec]) -> Eval {
    let k_count = p.assoc.num_tu();
    let mut gamma = vec![0.0; k_count];
    let mut total = vec![0.0; k_count];
    for k in 0..k_count {
        let mut sum = p.sigma2[k];
        let mut desired = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let g = gain(&p.tu[p.assoc.serving(i)][k], wi);
            sum += g;
            if i == k {
                desired = g;
            }
        }
        total[k] = sum;
        gamma[k] = desired / (sum - desired).max(POWER_FLOOR);
    }
    let n_au = p.au.first().map_or(0, Vec::len);
    let mut rho = vec![0.0; n_au];
    for (k, wk) in w.iter().enumerate() {
        for (l, r) in rho.iter_mut().enumerate() {
            *r += gain(&p.au[p.assoc.serving(k)][l], wk);
        }
    }
    Eval { gamma, total, rho }
}

fn rho_ratio(rho: f64, i_max: f64) -> f64 {
    if i_max.is_infinite() {
        0.0
    } else {
        rho / i_max
    }
}

fn record(p: &WmmseProblem, w: &[CVec], e: &Eval, mu_hat: &[f64], round: usize) -> WmmseIterate {
    let nats: f64 = e.gamma.iter().map(|g| g.ln_1p()).sum();
    let penalty: f64 = e.rho.iter().zip(mu_hat).map(|(r, m)| if *m == 0.0 { 0.0 } else { m * rho_ratio(*r, p.i_max) }).sum();
    let mut bs_power = vec![0.0; p.assoc.num_bs()];
    for (k, wk) in w.iter().enumerate() {
        bs_power[p.assoc.serving(k)] += norm_sqr(wk);
    }
    WmmseIterate {
        round,
        sum_rate: compute_rate(&e.gamma).iter().sum(),
        lagrangian: nats - penalty,
        max_rho_ratio: e.rho.iter().map(|&r| rho_ratio(r, p.i_max)).fold(0.0, f64::max),
        max_bs_power: bs_power.into_iter().fold(0.0, f64::max),
        mu: mu_hat.to_vec(),
    }
}

/// Maximum-ratio beams with the BS power split evenly over its TUs.
pub fn mrt_init(assoc: &AssociationMap, tu: &[Vec<CVec>], p_max: f64) -> BeamformerSet {
    let loads = assoc.loads();
    let w = (0..assoc.num_tu())
        .map(|k| {
            let n = assoc.serving(k);
            let h = &tu[n][k];
            let norm = norm_sqr(h).sqrt();
            if norm == 0.0 {
                CVec::zeros(h.len())
            } else {
                h * Complex64::from((p_max / loads[n] as f64).sqrt() / norm)
            }
        })
        .collect();
    BeamformerSet::new(w)
}

/// Scales a warm start so that every BS transmits exactly `P_max`. BSs with
/// a zero beam among their TUs restart from MRT.
fn prepare_init(p: &WmmseProblem, init: Option<&BeamformerSet>) -> Vec<CVec> {
    let mrt = mrt_init(p.assoc, p.tu, p.p_max);
    let Some(init) = init.filter(|b| b.len() == p.assoc.num_tu()) else {
        return mrt.into_inner();
    };
    let mut w = Vec::with_capacity(init.len());
    let mut bs_power = vec![0.0; p.assoc.num_bs()];
    let mut use_mrt = vec![false; p.assoc.num_bs()];
    for k in 0..init.len() {
        let n = p.assoc.serving(k);
        let pk = init.power(k);
        if !(pk > 0.0) || !pk.is_finite() || init.w(k).len() != p.tu[n][k].len() {
            use_mrt[n] = true;
        }
        bs_power[n] += pk;
    }
    for (flag, &total) in use_mrt.iter_mut().zip(&bs_power) {
        // Rescaling a nearly silent BS up to P_max amplifies rounding noise.
        if total < p.p_max * 1e-12 {
            *flag = true;
        }
    }
    for k in 0..init.len() {
        let n = p.assoc.serving(k);
        if use_mrt[n] {
            w.push(mrt.w(k).clone());
        } else {
            w.push(init.w(k) * Complex64::from((p.p_max / bs_power[n]).sqrt()));
        }
    }
    w
}

/// Solves `min_{eta >= 0}` such that `sum_k ||(A + eta I)^-1 b_k||^2 <= P_max`
/// and returns `(eta, beams)`.
fn constrained_solve(a: &CMat, rhs: &[CVec], p_max: f64, eta_tol: f64) -> (f64, Vec<CVec>) {
    let eig = SymmetricEigen::new(a.clone());
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    let coeffs: Vec<CVec> = rhs.iter().map(|b| eig.eigenvectors.adjoint() * b).collect();
    let weights: Vec<f64> =
        (0..lambda.len()).map(|j| coeffs.iter().map(|c| c[j].norm_sqr()).sum()).collect();
    let power = |eta: f64| -> f64 {
        lambda.iter().zip(&weights).map(|(l, w)| if *w == 0.0 { 0.0 } else { w / (l + eta).powi(2) }).sum()
    };
    let singular = lambda.iter().zip(&weights).any(|(l, w)| *w > 0.0 && *l <= 1e-14 * lmax.max(f64::MIN_POSITIVE));
    let eta = if !singular && power(0.0) <= p_max {
        0.0
    } else {
        let total: f64 = weights.iter().sum();
        let (mut lo, mut hi) = (0.0, (total / p_max).sqrt());
        for _ in 0..200 {
            if p_max - power(hi) <= eta_tol * p_max {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if power(mid) > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let beams = coeffs
        .iter()
        .map(|c| {
            let scaled = CVec::from_iterator(
                c.len(),
                c.iter().zip(&lambda).map(|(cj, l)| if l + eta > 0.0 { cj / (l + eta) } else { Complex64::new(0.0, 0.0) }),
            );
            &eig.eigenvectors * scaled
        })
        .collect();
    (eta, beams)
}

/// One `(u, v, w)` update at fixed normalized multipliers. Returns the
/// per-BS `eta`.
fn block_step(p: &WmmseProblem, w: &mut [CVec], e: &Eval, mu_hat: &[f64], cfg: &WmmseConfig) -> Result<Vec<f64>> {
    let k_count = p.assoc.num_tu();
    let mut v = vec![Complex64::new(0.0, 0.0); k_count];
    let mut alpha = vec![0.0; k_count];
    for k in 0..k_count {
        let h = &p.tu[p.assoc.serving(k)][k];
        v[k] = inner(h, &w[k]) * (1.0 + e.gamma[k]).sqrt() / e.total[k];
        alpha[k] = v[k].norm_sqr();
    }
    let mut eta = vec![0.0; p.assoc.num_bs()];
    for n in 0..p.assoc.num_bs() {
        let served = p.assoc.served_by(n);
        if served.is_empty() {
            continue;
        }
        let m = p.tu[n][0].len();
        let mut a = CMat::zeros(m, m);
        for (i, &ai) in alpha.iter().enumerate() {
            add_outer(&mut a, &p.tu[n][i], ai);
        }
        if !p.i_max.is_infinite() {
            for (l, &mh) in mu_hat.iter().enumerate() {
                if mh > 0.0 {
                    add_outer(&mut a, &p.au[n][l], mh / p.i_max);
                }
            }
        }
        let rhs: Vec<CVec> =
            served.iter().map(|&k| &p.tu[n][k] * (v[k] * (1.0 + e.gamma[k]).sqrt())).collect();
        let (eta_n, beams) = constrained_solve(&a, &rhs, p.p_max, cfg.eta_tol);
        if beams.iter().any(|b| b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Singular(n));
        }
        eta[n] = eta_n;
        for (&k, b) in served.iter().zip(beams) {
            w[k] = b;
        }
    }
    Ok(eta)
}

fn check_problem(p: &WmmseProblem) -> Result<()> {
    if !(p.p_max > 0.0) {
        return Err(Error::InvalidArgument(format!("P_max must be positive, got {}", p.p_max)));
    }
    if !(p.i_max > 0.0) {
        return Err(Error::InvalidArgument(format!("I_max must be positive, got {}", p.i_max)));
    }
    if p.tu.len() != p.assoc.num_bs() || p.au.len() != p.assoc.num_bs() {
        return Err(Error::InvalidArgument("channel rows must match the number of BSs".into()));
    }
    if p.sigma2.len() != p.assoc.num_tu() || p.sigma2.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument("need one positive noise power per TU".into()));
    }
    Ok(())
}

pub fn wmmse_cbf(p: &WmmseProblem, init: Option<&BeamformerSet>, cfg: &WmmseConfig) -> Result<WmmseOutcome> {
    check_problem(p)?;
    let n_au = p.au.first().map_or(0, Vec::len);
    let mut w = prepare_init(p, init);
    let mut mu_hat = vec![0.0; n_au];
    let mut eta = vec![0.0; p.assoc.num_bs()];
    let mut trace = Vec::new();
    let mut e = evaluate(p, &w);
    trace.push(record(p, &w, &e, &mu_hat, 0));
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        let mut settled = false;
        let mut prev = record(p, &w, &e, &mu_hat, round).lagrangian;
        for _ in 0..cfg.max_inner {
            eta = block_step(p, &mut w, &e, &mu_hat, cfg)?;
            e = evaluate(p, &w);
            let it = record(p, &w, &e, &mu_hat, round);
            if !it.lagrangian.is_finite() {
                return Err(Error::NonFinite("WMMSE objective"));
            }
            let delta = (it.lagrangian - prev).abs();
            prev = it.lagrangian;
            trace.push(it);
            if delta <= cfg.tol * prev.abs().max(1e-12) {
                settled = true;
                break;
            }
        }
        let ratios: Vec<f64> = e.rho.iter().map(|&r| rho_ratio(r, p.i_max)).collect();
        let feasible = ratios.iter().all(|&r| r <= 1.0 + cfg.feasibility_tol);
        let slack_ok = ratios.iter().zip(&mu_hat).all(|(&r, &m)| m == 0.0 || r >= 1.0 - 1e-2);
        if settled && feasible && slack_ok {
            converged = true;
            break;
        }
        if round == cfg.max_rounds {
            break;
        }
        let step = cfg.dual_step / (round as f64).sqrt();
        for (m, &r) in mu_hat.iter_mut().zip(&ratios) {
            let sub = (r - 1.0).clamp(-0.9, 10.0);
            *m = (*m + step * m.max(1.0) * sub).max(0.0);
        }
    }
    if !converged {
        log::debug!("WMMSE stopped at the round cap without meeting the stopping test");
    }

    let mut back_off = None;
    let worst = e.rho.iter().map(|&r| rho_ratio(r, p.i_max)).fold(0.0, f64::max);
    if cfg.back_off && worst > 1.0 {
        let c = (1.0 / worst).sqrt();
        log::debug!("WMMSE ended {:.3e} above I_max; scaling beams by {c:.6}", worst - 1.0);
        for wk in w.iter_mut() {
            *wk *= Complex64::from(c);
        }
        e = evaluate(p, &w);
        trace.push(record(p, &w, &e, &mu_hat, cfg.max_rounds + 1));
        back_off = Some(c);
    }
    let mu = mu_hat.iter().map(|m| if p.i_max.is_infinite() { 0.0 } else { m / p.i_max }).collect();
    Ok(WmmseOutcome { bf: BeamformerSet::new(w), mu, eta, trace, converged, back_off })
}

/// MRT at full power, scaled down uniformly until every AU limit holds.
pub fn truncated_mrt(p: &WmmseProblem) -> BeamformerSet {
    let mut w = mrt_init(p.assoc, p.tu, p.p_max).into_inner();
    let e = evaluate(p, &w);
    let worst = e.rho.iter().map(|&r| rho_ratio(r, p.i_max)).fold(0.0, f64::max);
    if worst > 1.0 {
        let c = Complex64::from((1.0 / worst).sqrt());
        for wk in w.iter_mut() {
            *wk *= c;
        }
    }
    BeamformerSet::new(w)
}
