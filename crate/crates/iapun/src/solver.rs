//! The main certified proximal-point loop.
//!
//! Each epoch regularizes the envelope around the previous anchor,
//! `hat_Phi(x) = Phi(x) + alpha |x - p|^2`, and minimizes it with inexact
//! accelerated proximal steps as if it were convex. After every step a
//! certificate ([`certify`]) checks whether the trajectory still looks
//! convex; the first non-null verdict ends the epoch and dictates how the
//! next anchor is chosen — directly from a certified proximal solution, from
//! the best iterate seen, or by walking along an explicit negative-curvature
//! direction extracted from the failure ([`exploit_ncvx`]). Every epoch is
//! guaranteed to decrease the envelope by a fixed amount until the anchor is
//! `eps`-stationary.

use crate::error::{Error, Result};
use crate::oracle::{phi_oracle_warm, InexactEval};
use crate::problem::{MinimaxProblem, OracleCounts, OracleSession, SmoothnessSpec};
use crate::solvers::{saddle_prox_solve, Ball, SubproblemSpec};
use crate::vec_ops::{dist, dist_sq, extrapolate, norm, norm_inf, sub};

/// Fully derived parameter set for one solve at target stationarity `eps`.
///
/// Constructed through [`IapunParams::derive`] (the theoretical schedule) or
/// [`IapunParams::with_tolerances`] (custom tolerances); both verify the ten
/// inequalities tying the tolerances together, so a constructed value is
/// always internally consistent.
#[derive(Debug, Clone)]
pub struct IapunParams {
    /// Target stationarity: the run stops when `|grad Phi| <= eps` is
    /// certified.
    pub eps: f64,
    /// Outer proximal weight.
    pub alpha: f64,
    /// Inner proximal weight; at least `ell`.
    pub gamma: f64,
    /// Condition number `gamma / alpha` of the regularized subproblems.
    pub kappa_x: f64,
    /// Momentum coefficient `(2 sqrt(kappa_x) - 1) / (2 sqrt(kappa_x) + 1)`.
    pub omega: f64,
    /// Negative-curvature step length `alpha / l2`.
    pub d: f64,
    /// Certification slack absorbing all inexactness along one epoch.
    pub chi: f64,
    /// Certified gap for every proximal subproblem solve.
    pub delta_x: f64,
    /// Envelope value accuracy for every evaluation.
    pub delta_y: f64,
    /// Envelope gradient accuracy for every evaluation.
    pub big_delta_y: f64,
    /// Smoothness constants these parameters were derived for.
    pub smooth: SmoothnessSpec,
}

impl IapunParams {
    /// The theoretical schedule: `alpha = sqrt(l2 * eps)`, `gamma = ell`,
    /// and tolerance formulas chosen so all ten inequalities hold with wide
    /// margins.
    ///
    /// Requires `0 < eps <= ell^2 / l2`.
    pub fn derive(spec: &SmoothnessSpec, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "target accuracy eps must be finite and positive, got {eps}"
            )));
        }
        let (ell, l2) = (spec.ell, spec.l2);
        if eps > ell * ell / l2 {
            return Err(Error::InvalidParameter(format!(
                "target accuracy eps = {eps} exceeds ell^2 / l2 = {}; the schedule needs \
                 eps <= ell^2 / l2",
                ell * ell / l2
            )));
        }
        let alpha = (l2 * eps).sqrt();
        let gamma = ell;
        let kappa_x = gamma / alpha;
        let kappa_y = spec.kappa_y();
        let delta_x = (l2 * l2 * eps.powi(4) / (1e10 * kappa_y * kappa_y * ell * ell))
            .min(eps * eps / (1e6 * kappa_x.powf(1.5) * ell));
        let delta_y = delta_x / 2.0;
        let big_delta_y = (l2 * eps * eps / (4.0 * 1e5 * kappa_y * ell.sqrt()))
            .min(eps / (3.0 * 1e3 * kappa_x.powf(0.75)));
        Self::with_tolerances(spec, eps, alpha, gamma, delta_x, delta_y, big_delta_y)
    }

    /// General constructor: validates positivity, `gamma >= ell`,
    /// `alpha <= gamma`, and the ten inequalities, computing the dependent
    /// quantities (`kappa_x`, `omega`, `d`, `chi`).
    pub fn with_tolerances(
        spec: &SmoothnessSpec,
        eps: f64,
        alpha: f64,
        gamma: f64,
        delta_x: f64,
        delta_y: f64,
        big_delta_y: f64,
    ) -> Result<Self> {
        for (v, name) in [
            (eps, "eps"),
            (alpha, "alpha"),
            (gamma, "gamma"),
            (delta_x, "delta_x"),
            (delta_y, "delta_y"),
            (big_delta_y, "big_delta_y"),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "parameter {name} must be finite and positive, got {v}"
                )));
            }
        }
        let (ell, l2) = (spec.ell, spec.l2);
        if gamma < ell {
            return Err(Error::InvalidParameter(format!(
                "gamma must be at least ell = {ell}, got {gamma}"
            )));
        }
        if alpha > gamma {
            return Err(Error::InvalidParameter(format!(
                "alpha must not exceed gamma (kappa_x >= 1), got alpha = {alpha}, gamma = {gamma}"
            )));
        }

        let kappa_x = gamma / alpha;
        let omega = (2.0 * kappa_x.sqrt() - 1.0) / (2.0 * kappa_x.sqrt() + 1.0);
        let d = alpha / l2;
        let l1 = spec.envelope_smoothness();
        let prox_rms = (2.0 * delta_x / (gamma + 2.0 * alpha)).sqrt();
        let chi = 6.0 * kappa_x.sqrt()
            * (11.0 * kappa_x * delta_x + (2.0 * ell + l1 + alpha) * prox_rms * d);

        let cube = alpha.powi(3) / (l2 * l2);
        let checks: [(&'static str, f64, f64); 10] = [
            (
                "chi + delta_x + delta_y <= eps^2 / (3200 gamma)",
                chi + delta_x + delta_y,
                eps * eps / (3200.0 * gamma),
            ),
            (
                "chi + delta_x + 4 delta_y <= alpha^3 / (32 l2^2)",
                chi + delta_x + 4.0 * delta_y,
                cube / 32.0,
            ),
            (
                "chi + delta_x + 4 delta_y <= eps^2 / (50 alpha)",
                chi + delta_x + 4.0 * delta_y,
                eps * eps / (50.0 * alpha),
            ),
            (
                "chi + delta_x + 8 delta_y <= alpha^3 / (72 l2^2)",
                chi + delta_x + 8.0 * delta_y,
                cube / 72.0,
            ),
            (
                "chi + 4 delta_y <= alpha^3 / (72 l2^2)",
                chi + 4.0 * delta_y,
                cube / 72.0,
            ),
            ("2 delta_y <= delta_x", 2.0 * delta_y, delta_x),
            ("big_delta_y <= eps / 4", big_delta_y, eps / 4.0),
            (
                "2 big_delta_y / ell <= sqrt(2 delta_x / (gamma + 2 alpha))",
                2.0 * big_delta_y / ell,
                prox_rms,
            ),
            (
                "sqrt(2 delta_x / (gamma + 2 alpha)) <= eps / (20 (L1 + 2 gamma))",
                prox_rms,
                eps / (20.0 * (l1 + 2.0 * gamma)),
            ),
            (
                "sqrt(2 delta_x / (gamma + 2 alpha)) <= alpha / (24 l2)",
                prox_rms,
                alpha / (24.0 * l2),
            ),
        ];
        for (name, lhs, rhs) in checks {
            if !(lhs <= rhs) {
                return Err(Error::ParameterInequality { name, lhs, rhs });
            }
        }

        Ok(Self {
            eps,
            alpha,
            gamma,
            kappa_x,
            omega,
            d,
            chi,
            delta_x,
            delta_y,
            big_delta_y,
            smooth: *spec,
        })
    }

    /// Descent threshold `alpha^3 / (32 l2^2)` a candidate must clear.
    pub fn candidate_cut(&self) -> f64 {
        self.alpha * self.d * self.d / 32.0
    }

    /// Guaranteed per-epoch envelope descent
    /// `min(eps^2 / (50 alpha), alpha^3 / (72 l2^2))`.
    pub fn epoch_descent(&self) -> f64 {
        (self.eps * self.eps / (50.0 * self.alpha)).min(self.alpha * self.d * self.d / 72.0)
    }

    /// Radius `alpha / (4 l2)` of the recomputation ball around the epoch
    /// start.
    pub fn ball_radius(&self) -> f64 {
        self.d / 4.0
    }

    /// Smallest gradient norms the inner certificates must resolve:
    /// `(theta_x, theta_y, theta_dual)` for the proximal solves, the
    /// envelope evaluations, and the dual ascent loop respectively.
    pub fn certificate_thresholds(&self) -> (f64, f64, f64) {
        let (ell, mu) = (self.smooth.ell, self.smooth.mu);
        let strong_x = 2.0 * (self.alpha + self.gamma) - ell;
        let tau_terminal =
            (self.delta_x / 4.0).min(mu * strong_x * self.delta_x / (128.0 * ell * ell));
        let theta_x = (2.0 * strong_x * tau_terminal).sqrt();
        let acc = self
            .delta_y
            .min(mu * self.big_delta_y * self.big_delta_y / (2.0 * ell * ell));
        let theta_y = (mu * acc / 2.0).sqrt();
        let theta_dual = (mu * self.delta_x).sqrt();
        (theta_x, theta_y, theta_dual)
    }

    /// Checks that the certificate thresholds stay above the f64 noise
    /// floor of this problem at the intended start point, probing the raw
    /// oracle once at `(p0, 0)`. Fails with
    /// [`Error::UncertifiableTolerance`] when an inner stopping test could
    /// not be measured reliably.
    pub fn ensure_certifiable(&self, problem: &MinimaxProblem, p0: &[f64]) -> Result<()> {
        let y0 = vec![0.0; problem.dim_y()];
        let f0 = problem.raw_value(p0, &y0)?;
        let gx = problem.raw_grad_x(p0, &y0)?;
        let gy = problem.raw_grad_y(p0, &y0)?;
        self.check_floor(f0, &gx, &gy, p0)
    }

    fn check_floor(&self, f0: f64, gx: &[f64], gy: &[f64], p0: &[f64]) -> Result<()> {
        let scale = (f0.abs() / (1.0 + norm_inf(p0)))
            .max(norm_inf(gx))
            .max(norm_inf(gy));
        let floor = 1e3 * f64::EPSILON * scale;
        let (theta_x, theta_y, theta_dual) = self.certificate_thresholds();
        for (threshold, context) in [
            (theta_x, "proximal subproblem gradient test"),
            (theta_y, "envelope evaluation gradient test"),
            (theta_dual, "dual ascent gradient test"),
        ] {
            if threshold < floor {
                return Err(Error::UncertifiableTolerance {
                    context,
                    threshold,
                    floor,
                });
            }
        }
        Ok(())
    }
}

/// Verdict of one certification call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    /// Trajectory still consistent with convexity; keep iterating.
    Null,
    /// An earlier iterate already achieved the required descent.
    PriorDescent,
    /// The regularized value rose although the iterate stayed near the
    /// epoch start: negative curvature nearby.
    RiseNearStart,
    /// The ball-constrained recomputation found a certified descent point.
    BallDescent,
    /// The proximal solution contracted slower than convexity allows:
    /// negative curvature along the trajectory.
    SlowContraction,
    /// The proximal solution barely moved: the anchor is near-stationary.
    ProxStationary,
}

impl Flag {
    /// Numeric code: `Null` is 0, the rest are 1-5 in declaration order.
    pub fn code(self) -> u8 {
        match self {
            Flag::Null => 0,
            Flag::PriorDescent => 1,
            Flag::RiseNearStart => 2,
            Flag::BallDescent => 3,
            Flag::SlowContraction => 4,
            Flag::ProxStationary => 5,
        }
    }

    /// Short stable label for traces and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Flag::Null => "null",
            Flag::PriorDescent => "prior-descent",
            Flag::RiseNearStart => "rise-near-start",
            Flag::BallDescent => "ball-descent",
            Flag::SlowContraction => "slow-contraction",
            Flag::ProxStationary => "prox-stationary",
        }
    }
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Flag plus the certified point backing it. `w` is present exactly for
/// flags 2-5; `Null` and `PriorDescent` carry no point.
#[derive(Debug, Clone)]
pub struct FlagOutcome {
    pub flag: Flag,
    pub w: Option<Vec<f64>>,
}

/// A certified negative-curvature pair: the envelope violates
/// `alpha`-strong-convexity between `u` and `v`.
#[derive(Debug, Clone)]
pub struct NcPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Everything [`certify`] needs to judge iteration `t` of an epoch.
pub struct CertifyState<'a> {
    /// Anchor `p` of the outer proximal term.
    pub prox_center: &'a [f64],
    /// Epoch start `x_0`.
    pub start: &'a [f64],
    /// Envelope evaluation at `start`, from epoch start.
    pub start_eval: &'a InexactEval,
    /// Current iterate `x_t`.
    pub current: &'a [f64],
    /// Envelope evaluation at `current`.
    pub current_eval: &'a InexactEval,
    /// The momentum point that served as the inner proximal center
    /// producing `current`.
    pub momentum_center: &'a [f64],
    /// Iteration index within the epoch, starting at 1.
    pub t: usize,
    /// `min` of envelope values at iterates `1..t-1`; `f64::INFINITY` at
    /// `t = 1` (empty set).
    pub best_prior_phi: f64,
}

/// Full result of one certification, including the internal solves the
/// caller can reuse (replacement iterate, proximal probe, dual warm start).
pub struct Certification {
    /// Public verdict.
    pub outcome: FlagOutcome,
    /// Envelope evaluation at `outcome.w` when present.
    pub w_eval: Option<InexactEval>,
    /// Ball-recomputed final iterate replacing `current` (taken whenever
    /// the increase test fired outside the ball), with its evaluation.
    pub replacement: Option<(Vec<f64>, InexactEval)>,
    /// Contraction baseline `E_k` when the no-increase path ran.
    pub e_k: Option<f64>,
    /// Dual warm start carried through the internal solves.
    pub y_warm: Vec<f64>,
}

/// Judges whether the epoch trajectory is still consistent with convexity.
///
/// Mirrors the certification procedure exactly: if the regularized value at
/// `x_t` rose more than `chi + 2 delta_y` above the epoch start, it returns
/// `PriorDescent` (an earlier iterate already descended enough),
/// `RiseNearStart` (the rise happened within the trust ball — itself a
/// negative-curvature certificate), or recomputes the iterate constrained
/// to the ball and returns `RiseNearStart` or `BallDescent` by re-testing.
/// Otherwise it solves the unconstrained proximal probe at `x_t`, forms the
/// contraction baseline `E_k`, and returns `SlowContraction` (probe moved
/// too far for a convex function), `ProxStationary` (probe barely moved),
/// or `Null`.
pub fn certify(
    session: &mut OracleSession,
    state: &CertifyState,
    params: &IapunParams,
    y_warm: Vec<f64>,
) -> Result<Certification> {
    debug_assert!(state.t >= 1);
    let alpha = params.alpha;
    let regularized =
        |eval: &InexactEval, x: &[f64]| eval.phi + alpha * dist_sq(x, state.prox_center);

    let hat_start = regularized(state.start_eval, state.start);
    let hat_current = regularized(state.current_eval, state.current);
    let rise_limit = hat_start + params.chi + 2.0 * params.delta_y;

    let mut y_warm = y_warm;

    if hat_current > rise_limit {
        if state.best_prior_phi <= state.start_eval.phi - params.candidate_cut() {
            return Ok(Certification {
                outcome: FlagOutcome { flag: Flag::PriorDescent, w: None },
                w_eval: None,
                replacement: None,
                e_k: None,
                y_warm,
            });
        }
        if dist(state.start, state.current) <= params.ball_radius() {
            return Ok(Certification {
                outcome: FlagOutcome {
                    flag: Flag::RiseNearStart,
                    w: Some(state.start.to_vec()),
                },
                w_eval: Some(state.start_eval.clone()),
                replacement: None,
                e_k: None,
                y_warm,
            });
        }
        // the iterate escaped the trust ball while the value rose: redo the
        // same proximal step constrained to the ball and re-test
        let ball_spec = SubproblemSpec {
            center_p: state.prox_center.to_vec(),
            center_tilde: state.momentum_center.to_vec(),
            alpha,
            gamma: params.gamma,
            ball: Some(Ball {
                center: state.start.to_vec(),
                radius: params.ball_radius(),
            }),
        };
        let sol = saddle_prox_solve(session, &ball_spec, &y_warm, params.delta_x)?;
        if let Some(y) = &sol.dual_point {
            y_warm = y.clone();
        }
        let (re_eval, y_next) = phi_oracle_warm(
            session,
            &sol.point,
            params.delta_y,
            params.big_delta_y,
            &y_warm,
        )?;
        y_warm = y_next;
        let hat_re = regularized(&re_eval, &sol.point);
        let replacement = Some((sol.point.clone(), re_eval.clone()));
        if hat_re > rise_limit {
            return Ok(Certification {
                outcome: FlagOutcome {
                    flag: Flag::RiseNearStart,
                    w: Some(state.start.to_vec()),
                },
                w_eval: Some(state.start_eval.clone()),
                replacement,
                e_k: None,
                y_warm,
            });
        }
        return Ok(Certification {
            outcome: FlagOutcome {
                flag: Flag::BallDescent,
                w: Some(sol.point),
            },
            w_eval: Some(re_eval),
            replacement,
            e_k: None,
            y_warm,
        });
    }

    // no suspicious increase: probe one more proximal step anchored at the
    // current iterate and measure how far it moves
    let probe_spec = SubproblemSpec {
        center_p: state.prox_center.to_vec(),
        center_tilde: state.current.to_vec(),
        alpha,
        gamma: params.gamma,
        ball: None,
    };
    let sol = saddle_prox_solve(session, &probe_spec, &y_warm, params.delta_x)?;
    if let Some(y) = &sol.dual_point {
        y_warm = y.clone();
    }
    let (w_eval, y_next) = phi_oracle_warm(
        session,
        &sol.point,
        params.delta_y,
        params.big_delta_y,
        &y_warm,
    )?;
    y_warm = y_next;

    let hat_w = regularized(&w_eval, &sol.point);
    let e_k = hat_start - hat_w + (alpha / 4.0) * dist_sq(&sol.point, state.start);
    let contraction = (1.0 - 1.0 / (6.0 * params.kappa_x.sqrt())).powi(state.t as i32);
    let move_sq = dist_sq(&sol.point, state.current);

    let flag = if params.gamma * move_sq
        > contraction * e_k + params.chi + params.delta_x + 2.0 * params.delta_y
    {
        Flag::SlowContraction
    } else if params.gamma * move_sq.sqrt() <= params.eps / 40.0 {
        Flag::ProxStationary
    } else {
        Flag::Null
    };

    match flag {
        Flag::Null => Ok(Certification {
            // the probe stays internal on a null verdict; only its dual
            // warm start is worth keeping
            outcome: FlagOutcome { flag: Flag::Null, w: None },
            w_eval: None,
            replacement: None,
            e_k: Some(e_k),
            y_warm,
        }),
        flag => Ok(Certification {
            outcome: FlagOutcome { flag, w: Some(sol.point) },
            w_eval: Some(w_eval),
            replacement: None,
            e_k: Some(e_k),
            y_warm,
        }),
    }
}

/// Result of one negative-curvature exploitation.
pub struct Exploited {
    /// The chosen descent point.
    pub point: Vec<f64>,
    /// Envelope evaluation at `point`.
    pub eval: InexactEval,
    /// The pair that witnessed negative curvature.
    pub pair: NcPair,
    /// Dual warm start after the probe evaluations.
    pub y_warm: Vec<f64>,
}

/// Extracts a certified negative-curvature pair from an epoch's iterates
/// and walks a fixed step along the pair direction, returning whichever
/// endpoint has the lower envelope value.
///
/// Scans pairs `(x_{t-1}, x_t)` then `(w, x_t)` for `t = 1..T` and selects
/// the first pair where the strong-convexity test
/// `zeta(x, x') < -2 delta_y - big_delta_y |x - x'|` fails (with `zeta`
/// formed from the regularized values and gradients around `prox_center`).
/// `w` is `None` exactly when the epoch ended with `PriorDescent`.
///
/// Errors with an invariant violation if no pair qualifies: the
/// certification that routed the epoch here guarantees one exists.
pub fn exploit_ncvx(
    session: &mut OracleSession,
    prox_center: &[f64],
    iterates: &[Vec<f64>],
    evals: &[InexactEval],
    w: Option<(&[f64], &InexactEval)>,
    params: &IapunParams,
    y_warm: Vec<f64>,
) -> Result<Exploited> {
    debug_assert_eq!(iterates.len(), evals.len());
    debug_assert!(iterates.len() >= 2);
    let alpha = params.alpha;
    let hat_phi = |x: &[f64], eval: &InexactEval| eval.phi + alpha * dist_sq(x, prox_center);
    // zeta(a, b) tests alpha-strong-convexity of the regularized envelope
    // between a and b using only measured values and gradients
    let zeta = |a: &[f64], ea: &InexactEval, b: &[f64], eb: &InexactEval| {
        let diff = sub(a, b);
        let hat_g_dot: f64 = eb
            .g
            .iter()
            .zip(b)
            .zip(prox_center)
            .zip(&diff)
            .map(|(((gi, bi), pi), di)| (gi + 2.0 * alpha * (bi - pi)) * di)
            .sum();
        let d2 = dist_sq(a, b);
        (
            hat_phi(a, ea) - hat_phi(b, eb) - hat_g_dot - (alpha / 2.0) * d2,
            d2.sqrt(),
        )
    };

    let mut found: Option<(usize, bool)> = None;
    'scan: for t in 1..iterates.len() {
        let (z, dist_ab) = zeta(&iterates[t - 1], &evals[t - 1], &iterates[t], &evals[t]);
        if z < -2.0 * params.delta_y - params.big_delta_y * dist_ab {
            found = Some((t, false));
            break 'scan;
        }
        if let Some((wx, we)) = w {
            let (z, dist_ab) = zeta(wx, we, &iterates[t], &evals[t]);
            if z < -2.0 * params.delta_y - params.big_delta_y * dist_ab {
                found = Some((t, true));
                break 'scan;
            }
        }
    }
    let (t, from_w) = found.ok_or_else(|| {
        Error::InvariantViolation(
            "negative-curvature exploitation found no qualifying pair; \
             certification should have guaranteed one"
                .into(),
        )
    })?;
    let (u, v): (&[f64], &[f64]) = if from_w {
        (w.expect("w-pair selected").0, &iterates[t])
    } else {
        (&iterates[t - 1], &iterates[t])
    };

    let dir = sub(u, v);
    let dir_norm = norm(&dir);
    debug_assert!(dir_norm > 0.0, "qualifying pair cannot coincide");
    let eta = params.d;
    let probe = |sign: f64| -> Vec<f64> {
        u.iter()
            .zip(&dir)
            .map(|(ui, di)| ui + sign * eta * di / dir_norm)
            .collect()
    };
    let x_plus = probe(1.0);
    let x_minus = probe(-1.0);

    let (eval_plus, y_warm) = phi_oracle_warm(
        session,
        &x_plus,
        params.delta_y,
        params.big_delta_y,
        &y_warm,
    )?;
    let (eval_minus, y_warm) = phi_oracle_warm(
        session,
        &x_minus,
        params.delta_y,
        params.big_delta_y,
        &y_warm,
    )?;

    let pair = NcPair { u: u.to_vec(), v: v.to_vec() };
    if eval_plus.phi <= eval_minus.phi {
        Ok(Exploited { point: x_plus, eval: eval_plus, pair, y_warm })
    } else {
        Ok(Exploited { point: x_minus, eval: eval_minus, pair, y_warm })
    }
}

/// Which rule produced the epoch's new anchor.
#[derive(Debug, Clone)]
pub enum EpochBranch {
    /// Anchor taken directly from the certified proximal solution
    /// (`BallDescent` and `ProxStationary` verdicts).
    ProxSolution,
    /// Anchor is the best candidate by envelope value; `index` counts
    /// through the epoch iterates, `from_probe` marks the certify solution
    /// instead.
    Candidate { index: usize, from_probe: bool },
    /// Anchor produced by negative-curvature exploitation of the pair.
    NegativeCurvature { pair: NcPair },
}

impl EpochBranch {
    /// Short stable label for traces and CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            EpochBranch::ProxSolution => "prox",
            EpochBranch::Candidate { .. } => "candidate",
            EpochBranch::NegativeCurvature { .. } => "exploit",
        }
    }
}

/// Record of one completed epoch.
#[derive(Debug, Clone)]
pub struct EpochTrace {
    /// Epoch index, starting at 1.
    pub k: usize,
    /// Epoch length: number of inner proximal steps taken.
    pub t_k: usize,
    /// Per-step verdicts; all `Null` except possibly the last.
    pub flags: Vec<FlagOutcome>,
    /// Iterates `x_0 ..= x_T` (with the ball recomputation applied when it
    /// happened).
    pub iterates: Vec<Vec<f64>>,
    /// Epoch start (the previous anchor).
    pub start: Vec<f64>,
    /// New anchor chosen by this epoch.
    pub end: Vec<f64>,
    /// Measured envelope descent `phi(p_k) - phi(p_{k-1})`.
    pub descent_est: f64,
    /// Cumulative oracle counts at epoch end.
    pub oracle_calls: OracleCounts,
    /// Which rule produced the anchor.
    pub branch: EpochBranch,
    /// Contraction baseline from the last certification that computed one.
    pub e_k: Option<f64>,
}

impl EpochTrace {
    /// The verdict that ended the epoch.
    pub fn final_flag(&self) -> Flag {
        self.flags.last().map(|f| f.flag).unwrap_or(Flag::Null)
    }
}

/// Hard safety limits for one run; the certified per-epoch bound is always
/// enforced in addition.
#[derive(Debug, Clone)]
pub struct RunCaps {
    /// Maximum number of epochs.
    pub max_epochs: usize,
    /// Maximum inner steps within one epoch.
    pub max_inner: usize,
}

impl Default for RunCaps {
    fn default() -> Self {
        Self {
            max_epochs: 100_000,
            max_inner: 10_000,
        }
    }
}

/// Successful run result.
#[derive(Debug)]
pub struct RunOutcome {
    /// Final anchor with certified `|grad Phi(p)| <= eps`.
    pub p: Vec<f64>,
    /// Envelope evaluation at `p` (its `g` passed the `3 eps / 4` test).
    pub final_eval: InexactEval,
    /// One trace per completed epoch.
    pub epochs: Vec<EpochTrace>,
    /// Total oracle calls.
    pub counts: OracleCounts,
}

/// A failed run, carrying everything completed before the failure.
#[derive(Debug)]
pub struct RunError {
    pub error: Error,
    pub epochs: Vec<EpochTrace>,
    pub counts: OracleCounts,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} completed epochs, {} oracle calls)",
            self.error,
            self.epochs.last().map(|e| e.k).unwrap_or(0),
            self.counts.total()
        )
    }
}

impl std::error::Error for RunError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs the certified proximal-point method from `p0` until the anchor is
/// certified `eps`-stationary.
///
/// Returns the stationary anchor, its final evaluation, and one trace per
/// epoch. The spent oracle calls are exact: every `f`, `grad_x`, and
/// `grad_y` query of every inner solve went through one counted session.
///
/// Fails (with partial traces attached) if an inner solver stalls, a hard
/// cap is hit, or an epoch exceeds four times its certified length bound —
/// any of which signals the problem violates the declared smoothness
/// constants or the tolerances are not certifiable at this scale.
pub fn run(
    problem: &MinimaxProblem,
    p0: &[f64],
    params: &IapunParams,
    caps: &RunCaps,
) -> std::result::Result<RunOutcome, RunError> {
    let mut session = OracleSession::new(problem);
    let mut epochs: Vec<EpochTrace> = Vec::new();

    match run_inner(&mut session, p0, params, caps, &mut epochs) {
        Ok((p, final_eval)) => Ok(RunOutcome {
            p,
            final_eval,
            epochs,
            counts: session.counts(),
        }),
        Err(error) => Err(RunError {
            error,
            epochs,
            counts: session.counts(),
        }),
    }
}

fn run_inner(
    session: &mut OracleSession,
    p0: &[f64],
    params: &IapunParams,
    caps: &RunCaps,
    epochs: &mut Vec<EpochTrace>,
) -> Result<(Vec<f64>, InexactEval)> {
    let problem = session.problem();
    if p0.len() != problem.dim_x() {
        return Err(Error::DimensionMismatch {
            context: "run start point",
            expected: problem.dim_x(),
            actual: p0.len(),
        });
    }
    crate::vec_ops::ensure_finite(p0, "run start point")?;

    // probe the oracle scale once to confirm the certificate thresholds are
    // measurable in f64 before spending any real work
    let y_origin = vec![0.0; problem.dim_y()];
    let f_probe = session.value(p0, &y_origin)?;
    let gx_probe = session.grad_x(p0, &y_origin)?;
    let gy_probe = session.grad_y(p0, &y_origin)?;
    params.check_floor(f_probe, &gx_probe, &gy_probe, p0)?;

    let grad_goal = 0.75 * params.eps;
    let mut y_warm = y_origin;

    let (p_eval, y_next) =
        phi_oracle_warm(session, p0, params.delta_y, params.big_delta_y, &y_warm)?;
    y_warm = y_next;
    let mut p = p0.to_vec();
    let mut p_eval = p_eval;
    if norm(&p_eval.g) <= grad_goal {
        return Ok((p, p_eval));
    }

    // the best envelope value observed anywhere, standing in for the
    // unknown minimum in the certified epoch-length bound
    let mut best_phi_seen = p_eval.phi;

    for k in 1..=caps.max_epochs {
        let mut iterates: Vec<Vec<f64>> = vec![p.clone()];
        let mut evals: Vec<InexactEval> = vec![p_eval.clone()];
        let mut flags: Vec<FlagOutcome> = Vec::new();
        let mut x_tilde = p.clone();
        let mut best_prior_phi = f64::INFINITY;
        let mut last_e_k = None;

        let final_cert: Certification = loop {
            let t = iterates.len(); // iteration index: iterates holds x_0..x_{t-1}
            if t > caps.max_inner {
                return Err(Error::SolverStall {
                    context: "epoch inner-step hard cap",
                    iterations: t - 1,
                    residual: norm(&evals.last().expect("nonempty").g),
                });
            }
            // certified length bound with a 4x margin; the unknown minimum
            // is replaced by the running best value, floored by the
            // measured contraction baseline (any null verdict forces
            // E_k >= eps^2 / (3200 gamma) at the current contraction, so
            // this argument keeps the cap ahead of a null trajectory)
            let gap = (evals[0].phi - best_phi_seen)
                .max(last_e_k.unwrap_or(0.0))
                .max(0.0)
                + 2.0 * params.delta_y;
            let bound_arg = 3200.0 * params.gamma * gap / (params.eps * params.eps);
            let certified_len =
                1.0 + 6.0 * params.kappa_x.sqrt() * bound_arg.max(1.0).ln().max(0.0);
            if t as f64 > 4.0 * certified_len {
                return Err(Error::SolverStall {
                    context: "epoch exceeded certified length bound",
                    iterations: t - 1,
                    residual: norm(&evals.last().expect("nonempty").g),
                });
            }

            let step_spec = SubproblemSpec {
                center_p: p.clone(),
                center_tilde: x_tilde.clone(),
                alpha: params.alpha,
                gamma: params.gamma,
                ball: None,
            };
            let sol = saddle_prox_solve(session, &step_spec, &y_warm, params.delta_x)?;
            if let Some(y) = &sol.dual_point {
                y_warm = y.clone();
            }
            let (eval_t, y_next) = phi_oracle_warm(
                session,
                &sol.point,
                params.delta_y,
                params.big_delta_y,
                &y_warm,
            )?;
            y_warm = y_next;
            iterates.push(sol.point);
            evals.push(eval_t);

            let state = CertifyState {
                prox_center: &p,
                start: &iterates[0],
                start_eval: &evals[0],
                current: &iterates[t],
                current_eval: &evals[t],
                momentum_center: &x_tilde,
                t,
                best_prior_phi,
            };
            let cert = certify(session, &state, params, std::mem::take(&mut y_warm))?;
            y_warm = cert.y_warm.clone();
            flags.push(cert.outcome.clone());
            if let Some(e) = cert.e_k {
                last_e_k = Some(e);
            }
            if let Some((xr, er)) = &cert.replacement {
                *iterates.last_mut().expect("nonempty") = xr.clone();
                *evals.last_mut().expect("nonempty") = er.clone();
            }
            best_phi_seen = best_phi_seen.min(evals[t].phi);

            if cert.outcome.flag != Flag::Null {
                break cert;
            }
            best_prior_phi = best_prior_phi.min(evals[t].phi);
            x_tilde = extrapolate(&iterates[t], &iterates[t - 1], params.omega);
        };

        let t_k = iterates.len() - 1;
        let flag = final_cert.outcome.flag;

        let (p_next, p_next_eval, branch) = match flag {
            Flag::BallDescent | Flag::ProxStationary => {
                let w = final_cert.outcome.w.clone().expect("flags 3/5 carry w");
                let we = final_cert.w_eval.clone().expect("flags 3/5 carry eval");
                (w, we, EpochBranch::ProxSolution)
            }
            Flag::PriorDescent | Flag::RiseNearStart | Flag::SlowContraction => {
                // candidate scan over the epoch iterates plus the certify
                // solution (absent for PriorDescent); earliest index wins
                let mut best_idx = 0usize;
                for (i, e) in evals.iter().enumerate() {
                    if e.phi < evals[best_idx].phi {
                        best_idx = i;
                    }
                }
                let w_entry = if flag == Flag::PriorDescent {
                    None
                } else {
                    let w = final_cert.outcome.w.as_deref().expect("flags 2/4 carry w");
                    let we = final_cert.w_eval.as_ref().expect("flags 2/4 carry eval");
                    Some((w, we))
                };
                let probe_better = w_entry
                    .map(|(_, we)| we.phi < evals[best_idx].phi)
                    .unwrap_or(false);
                let best_phi = if probe_better {
                    w_entry.expect("probe better").1.phi
                } else {
                    evals[best_idx].phi
                };

                if best_phi < evals[0].phi - params.candidate_cut() {
                    if probe_better {
                        let (w, we) = w_entry.expect("probe better");
                        (
                            w.to_vec(),
                            we.clone(),
                            EpochBranch::Candidate { index: t_k, from_probe: true },
                        )
                    } else {
                        (
                            iterates[best_idx].clone(),
                            evals[best_idx].clone(),
                            EpochBranch::Candidate { index: best_idx, from_probe: false },
                        )
                    }
                } else {
                    let exploited = exploit_ncvx(
                        session,
                        &p,
                        &iterates,
                        &evals,
                        w_entry,
                        params,
                        std::mem::take(&mut y_warm),
                    )?;
                    y_warm = exploited.y_warm;
                    (
                        exploited.point,
                        exploited.eval,
                        EpochBranch::NegativeCurvature { pair: exploited.pair },
                    )
                }
            }
            Flag::Null => unreachable!("loop breaks only on non-null verdicts"),
        };

        best_phi_seen = best_phi_seen.min(p_next_eval.phi);
        let descent_est = p_next_eval.phi - evals[0].phi;
        epochs.push(EpochTrace {
            k,
            t_k,
            flags,
            iterates,
            start: p.clone(),
            end: p_next.clone(),
            descent_est,
            oracle_calls: session.counts(),
            branch,
            e_k: last_e_k,
        });

        p = p_next;
        p_eval = p_next_eval;
        if norm(&p_eval.g) <= grad_goal {
            return Ok((p, p_eval));
        }
    }

    Err(Error::SolverStall {
        context: "epoch hard cap",
        iterations: caps.max_epochs,
        residual: norm(&p_eval.g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{SaddleOracle, SmoothnessSpec};

    fn spec(ell: f64, mu: f64, l2: f64) -> SmoothnessSpec {
        SmoothnessSpec::new(ell, mu, l2).unwrap()
    }

    #[test]
    fn schedule_matches_stated_formulas() {
        let s = spec(1.0, 1.0, 1.0);
        let p = IapunParams::derive(&s, 0.01).unwrap();
        assert!((p.alpha - 0.1).abs() < 1e-15);
        assert_eq!(p.gamma, 1.0);
        assert!((p.kappa_x - 10.0).abs() < 1e-12);
        let omega = (2.0 * 10.0f64.sqrt() - 1.0) / (2.0 * 10.0f64.sqrt() + 1.0);
        assert!((p.omega - omega).abs() < 1e-15);
        assert!((p.d - 0.1).abs() < 1e-15);
        assert_eq!(p.delta_y, p.delta_x / 2.0);
    }

    #[test]
    fn schedule_tolerances_take_stated_minima() {
        let s = spec(1.0, 0.1, 1.0); // kappa_y = 10
        let eps = 0.01;
        let p = IapunParams::derive(&s, eps).unwrap();
        let kappa_y = 10.0f64;
        let kappa_x: f64 = 1.0 / (1.0f64 * eps).sqrt();
        let dx_a = eps.powi(4) / (1e10 * kappa_y * kappa_y);
        let dx_b = eps * eps / (1e6 * kappa_x.powf(1.5));
        assert!((p.delta_x - dx_a.min(dx_b)).abs() <= 1e-18 * p.delta_x.max(1.0));
        let dy_a = eps * eps / (4.0 * 1e5 * kappa_y);
        let dy_b = eps / (3.0 * 1e3 * kappa_x.powf(0.75));
        assert!((p.big_delta_y - dy_a.min(dy_b)).abs() <= 1e-18);
    }

    #[test]
    fn eps_beyond_precondition_rejected() {
        let s = spec(1.0, 1.0, 1.0);
        let err = IapunParams::derive(&s, 2.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn violated_inequality_is_named() {
        let s = spec(1.0, 1.0, 1.0);
        // enormous delta_x breaks the first inequality family
        let err =
            IapunParams::with_tolerances(&s, 0.01, 0.1, 1.0, 1.0, 0.5, 1e-9).unwrap_err();
        match err {
            Error::ParameterInequality { name, .. } => {
                assert!(name.contains("chi"), "unexpected inequality: {name}");
            }
            other => panic!("expected inequality violation, got {other:?}"),
        }
    }

    #[test]
    fn gamma_below_ell_rejected() {
        let s = spec(2.0, 1.0, 1.0);
        let err =
            IapunParams::with_tolerances(&s, 0.01, 0.1, 1.0, 1e-12, 5e-13, 1e-7).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn flag_codes_and_labels() {
        assert_eq!(Flag::Null.code(), 0);
        assert_eq!(Flag::PriorDescent.code(), 1);
        assert_eq!(Flag::RiseNearStart.code(), 2);
        assert_eq!(Flag::BallDescent.code(), 3);
        assert_eq!(Flag::SlowContraction.code(), 4);
        assert_eq!(Flag::ProxStationary.code(), 5);
        assert_eq!(Flag::ProxStationary.label(), "prox-stationary");
    }

    // f(x, y) = q(x) + sum_i b_i x_i y_i - mu/2 |y|^2 with strongly convex
    // q(x) = a/2 |x - c|^2: the envelope is strongly convex, so a run from
    // anywhere must terminate via prox-stationary epochs
    struct ConvexToy {
        a: f64,
        c: Vec<f64>,
        b: Vec<f64>,
        mu: f64,
    }

    impl SaddleOracle for ConvexToy {
        fn value(&self, x: &[f64], y: &[f64]) -> f64 {
            let q: f64 = x.iter().zip(&self.c).map(|(xi, ci)| 0.5 * self.a * (xi - ci).powi(2)).sum();
            let cpl: f64 = x.iter().zip(y).zip(&self.b).map(|((xi, yi), bi)| bi * xi * yi).sum();
            let yy: f64 = y.iter().map(|v| v * v).sum();
            q + cpl - 0.5 * self.mu * yy
        }
        fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
            x.iter()
                .zip(&self.c)
                .zip(y.iter().zip(&self.b))
                .map(|((xi, ci), (yi, bi))| self.a * (xi - ci) + bi * yi)
                .collect()
        }
        fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
            x.iter()
                .zip(y)
                .zip(&self.b)
                .map(|((xi, yi), bi)| bi * xi - self.mu * yi)
                .collect()
        }
    }

    fn convex_toy() -> MinimaxProblem {
        let (a, mu): (f64, f64) = (1.0, 1.0);
        let b = vec![0.5, -0.5];
        let c = vec![1.0, -1.0];
        let ell = a.max(mu) + 0.5;
        let s = SmoothnessSpec::new(ell, mu, 1.0).unwrap();
        MinimaxProblem::new(2, 2, s, Box::new(ConvexToy { a, c, b, mu })).unwrap()
    }

    fn toy_grad_phi(x: &[f64]) -> Vec<f64> {
        // envelope gradient: a (x - c) + b^2 x / mu
        let (a, mu) = (1.0, 1.0);
        let b = [0.5, -0.5];
        let c = [1.0, -1.0];
        x.iter()
            .zip(&c)
            .zip(&b)
            .map(|((xi, ci), bi)| a * (xi - ci) + bi * bi * xi / mu)
            .collect()
    }

    #[test]
    fn stationary_start_returns_without_epochs() {
        let problem = convex_toy();
        // solve a (x - c) + b^2 x / mu = 0 per coordinate
        let p0 = [1.0 / 1.25, -1.0 / 1.25];
        let params = IapunParams::derive(problem.spec(), 0.05).unwrap();
        let out = run(&problem, &p0, &params, &RunCaps::default()).unwrap();
        assert!(out.epochs.is_empty());
        assert_eq!(out.p, p0.to_vec());
        assert!(norm(&toy_grad_phi(&out.p)) <= 0.05);
    }

    #[test]
    fn convex_run_terminates_with_certified_gradient() {
        let problem = convex_toy();
        let p0 = [6.0, 4.0];
        let params = IapunParams::derive(problem.spec(), 0.05).unwrap();
        let out = run(&problem, &p0, &params, &RunCaps::default()).unwrap();
        assert!(!out.epochs.is_empty());
        assert!(norm(&out.final_eval.g) <= 0.75 * 0.05);
        // true gradient within eps thanks to big_delta_y <= eps / 4
        assert!(norm(&toy_grad_phi(&out.p)) <= 0.05);
        // every epoch on a convex envelope ends via the proximal branch
        for e in &out.epochs {
            assert!(
                matches!(e.final_flag(), Flag::ProxStationary),
                "epoch {} ended {:?}",
                e.k,
                e.final_flag()
            );
            assert!(matches!(e.branch, EpochBranch::ProxSolution));
            assert!(e.t_k >= 1);
            assert_eq!(e.flags.len(), e.t_k);
            assert_eq!(e.iterates.len(), e.t_k + 1);
        }
        // oracle counters are cumulative along epochs
        for w in out.epochs.windows(2) {
            assert!(w[1].oracle_calls.total() > w[0].oracle_calls.total());
        }
        assert!(out.counts.total() >= out.epochs.last().unwrap().oracle_calls.total());
    }

    #[test]
    fn non_terminal_epochs_descend(){
        let problem = convex_toy();
        let p0 = [6.0, 4.0];
        let params = IapunParams::derive(problem.spec(), 0.05).unwrap();
        let out = run(&problem, &p0, &params, &RunCaps::default()).unwrap();
        let bound = params.epoch_descent();
        for e in &out.epochs[..out.epochs.len() - 1] {
            assert!(
                e.descent_est <= -bound + 4.0 * params.delta_y,
                "epoch {} descent {} vs bound {}",
                e.k,
                e.descent_est,
                -bound
            );
        }
    }

    #[test]
    fn epoch_cap_stalls_honestly() {
        let problem = convex_toy();
        let p0 = [6.0, 4.0];
        let params = IapunParams::derive(problem.spec(), 0.05).unwrap();
        let caps = RunCaps { max_epochs: 1, max_inner: 10_000 };
        let err = run(&problem, &p0, &params, &caps).unwrap_err();
        assert!(matches!(err.error, Error::SolverStall { .. }));
        assert_eq!(err.epochs.len(), 1);
        assert!(err.counts.total() > 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let problem = convex_toy();
        let p0 = [6.0, 4.0];
        let params = IapunParams::derive(problem.spec(), 0.05).unwrap();
        let a = run(&problem, &p0, &params, &RunCaps::default()).unwrap();
        let b = run(&problem, &p0, &params, &RunCaps::default()).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.epochs.len(), b.epochs.len());
        for (ea, eb) in a.epochs.iter().zip(&b.epochs) {
            assert_eq!(ea.iterates, eb.iterates);
            assert_eq!(ea.descent_est, eb.descent_est);
        }
    }

    #[test]
    fn uncertifiable_tolerances_fail_loudly() {
        // a huge constant offset leaves all smoothness constants intact but
        // drowns the required value differences in f64 rounding
        struct Offset;
        impl SaddleOracle for Offset {
            fn value(&self, x: &[f64], y: &[f64]) -> f64 {
                1e18 + x[0] * x[0] + 0.5 * x[0] * y[0] - y[0] * y[0]
            }
            fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
                vec![2.0 * x[0] + 0.5 * y[0]]
            }
            fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
                vec![0.5 * x[0] - 2.0 * y[0]]
            }
        }
        let s = SmoothnessSpec::new(2.5, 2.0, 1.0).unwrap();
        let problem = MinimaxProblem::new(1, 1, s, Box::new(Offset)).unwrap();
        let params = IapunParams::derive(problem.spec(), 1e-3).unwrap();
        params
            .ensure_certifiable(&problem, &[1.0])
            .expect_err("offset scale must defeat the thresholds");
        let err = run(&problem, &[1.0], &params, &RunCaps::default()).unwrap_err();
        assert!(
            matches!(err.error, Error::UncertifiableTolerance { .. }),
            "got {:?}",
            err.error
        );
    }
}
