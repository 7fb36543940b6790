//! Ready-made two-qubit engine scenarios and purity sweeps.
//!
//! Two engines share one working medium. The entangling engine prepares a
//! coherent excitation and lets the exchange coupling correlate the qubits
//! unitarily; the thermally correlated engine lets a structured bath relax
//! the medium into the matching classical mixture. Both then run the same
//! measurement-plus-feedback cycle.

use num_complex::Complex64;

use crate::engine::{run_cycle, CycleConfig, EnergyLedger, PrepMode, SwapRule};
use crate::error::{Error, Result};
use crate::measurement::{CorrelationScheme, MeasurementKind};
use crate::model::{purity_to_beta, thermal_state, DensityOp, PointerSpec, SystemSpec};
use crate::qmath::CMat;
use crate::tol;

/// Parameters of the shared two-qubit scenario.
///
/// Qubit A has gap `omega_a`, qubit B has gap `omega_a + delta`, the
/// exchange coupling is `delta * tan(theta)`, the medium carries a Gibbs
/// admixture of weight `q` at inverse temperature `beta`, and the pointer
/// is a qubit with gap `e_p` attached to B.
#[derive(Clone, Copy, Debug)]
pub struct TwoQubitConfig {
    omega_a: f64,
    delta: f64,
    theta: f64,
    q: f64,
    beta: f64,
    e_p: f64,
    scheme: MeasurementKind,
}

impl TwoQubitConfig {
    pub fn new(
        omega_a: f64,
        delta: f64,
        theta: f64,
        q: f64,
        beta: f64,
        e_p: f64,
        scheme: MeasurementKind,
    ) -> Result<Self> {
        if !omega_a.is_finite() || omega_a < 0.0 {
            return Err(Error::Spec(format!(
                "qubit A gap must be finite and nonnegative, got {omega_a}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::Spec(format!(
                "gap detuning must be finite and positive, got {delta}"
            )));
        }
        if !theta.is_finite() || theta <= 0.0 || theta >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Spec(format!(
                "mixing angle must lie strictly inside (0, pi/2), got {theta}"
            )));
        }
        if !q.is_finite() || q <= 0.0 || q > 1.0 {
            return Err(Error::Spec(format!(
                "thermal admixture must lie in (0, 1]; q = 0 would make the \
                 medium rank deficient, got {q}"
            )));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::Spec(format!(
                "bath inverse temperature must be finite and positive, got {beta}"
            )));
        }
        if !e_p.is_finite() || e_p <= 0.0 {
            return Err(Error::Spec(format!(
                "pointer gap must be finite and positive, got {e_p}"
            )));
        }
        Ok(TwoQubitConfig {
            omega_a,
            delta,
            theta,
            q,
            beta,
            e_p,
            scheme,
        })
    }

    /// Reference operating point used by the test suite and as CLI default:
    /// gaps 10 and 60, mixing angle pi/5, admixture 0.05, bath inverse
    /// temperature 1/30 in units of the unit pointer gap.
    pub fn reference(scheme: MeasurementKind) -> Self {
        TwoQubitConfig::new(
            10.0,
            50.0,
            0.2 * std::f64::consts::PI,
            0.05,
            1.0 / 30.0,
            1.0,
            scheme,
        )
        .expect("reference parameters are valid")
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn e_p(&self) -> f64 {
        self.e_p
    }

    pub fn scheme(&self) -> MeasurementKind {
        self.scheme
    }

    /// Exchange coupling `delta * tan(theta)`.
    pub fn g(&self) -> f64 {
        self.delta * self.theta.tan()
    }

    /// Half exchange period `pi / sqrt(g^2 + delta^2)`: the time at which
    /// an A excitation has moved to B with probability `sin^2(theta)`.
    pub fn t1(&self) -> f64 {
        std::f64::consts::PI / (self.g().powi(2) + self.delta.powi(2)).sqrt()
    }

    pub fn system(&self) -> SystemSpec {
        SystemSpec::two_qubit(self.omega_a, self.delta, self.g())
            .expect("validated parameters build a valid medium")
    }

    /// Qubit pointer prepared at purity `p`.
    pub fn pointer(&self, p: f64) -> Result<PointerSpec> {
        let beta_prime = purity_to_beta(p, self.e_p)?;
        PointerSpec::qubit_on_b(self.e_p, self.beta, beta_prime)
    }

    pub fn correlation_scheme(&self) -> CorrelationScheme {
        CorrelationScheme::new(self.scheme, 2, 2).expect("qubit scheme is always valid")
    }
}

/// Index of the basis state with A excited, B ground.
const A_EXCITED: usize = 2;
/// Index of the basis state with A ground, B excited.
const B_EXCITED: usize = 1;

/// Pre-entangling state of the entangling engine: excitation loaded into A,
/// mixed with a Gibbs admixture of weight `q`.
pub fn eme_initial(cfg: &TwoQubitConfig) -> Result<DensityOp> {
    let sys = cfg.system();
    let layout = sys.layout();
    let gibbs = thermal_state(&sys.h_loc(), cfg.beta(), &layout)?;
    let loaded = CMat::basis_projector(4, A_EXCITED);
    let mat = &loaded.scale(1.0 - cfg.q()) + &gibbs.mat().scale(cfg.q());
    DensityOp::new(mat, layout)
}

/// Evolve the medium under the full Hamiltonian for the half exchange
/// period, converting the loaded excitation into an entangled pair.
pub fn eme_entangle(cfg: &TwoQubitConfig, rho0: &DensityOp) -> Result<DensityOp> {
    let sys = cfg.system();
    if rho0.layout() != &sys.layout() {
        return Err(Error::Dimension(format!(
            "medium state layout {:?} does not match two qubits",
            rho0.layout().dims()
        )));
    }
    let evolved = crate::qmath::evolve_unitary(rho0.mat(), &sys.h_total(), cfg.t1())?;
    DensityOp::new(evolved, sys.layout())
}

/// How the thermally correlated engine fixes its bath occupation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NthMode {
    /// Choose the occupation so the dissipative mixture reproduces the
    /// entangling engine's populations: `tan^2(theta) = n / (n + 1)`.
    MatchEme,
    /// Planck occupation of the bath at the medium detuning:
    /// `1 / (exp(beta delta) - 1)`.
    FromBath,
}

/// Bath parameters of the thermally correlated engine.
#[derive(Clone, Copy, Debug)]
pub struct TcmeBathConfig {
    n_th_mode: NthMode,
    gamma: f64,
    gamma_prime: f64,
}

impl TcmeBathConfig {
    pub fn new(n_th_mode: NthMode, gamma: f64, gamma_prime: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::Spec(format!(
                "pump rate must be finite and positive, got {gamma}"
            )));
        }
        if !gamma_prime.is_finite() || gamma_prime <= 0.0 {
            return Err(Error::Spec(format!(
                "exchange rate must be finite and positive, got {gamma_prime}"
            )));
        }
        Ok(TcmeBathConfig {
            n_th_mode,
            gamma,
            gamma_prime,
        })
    }

    pub fn n_th_mode(&self) -> NthMode {
        self.n_th_mode
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime
    }

    /// Bath occupation number for the given scenario.
    pub fn n_th(&self, cfg: &TwoQubitConfig) -> Result<f64> {
        match self.n_th_mode {
            NthMode::MatchEme => {
                let t2 = cfg.theta().tan().powi(2);
                if t2 >= 1.0 {
                    return Err(Error::Domain(format!(
                        "matching the entangling populations needs a mixing angle \
                         below pi/4, got {}",
                        cfg.theta()
                    )));
                }
                Ok(t2 / (1.0 - t2))
            }
            NthMode::FromBath => Ok(1.0 / ((cfg.beta() * cfg.delta()).exp() - 1.0)),
        }
    }

    /// Mixing angle of the dissipative fixed point,
    /// `tan^2(angle) = n / (n + 1)`.
    pub fn mixing_angle(&self, cfg: &TwoQubitConfig) -> Result<f64> {
        match self.n_th_mode {
            NthMode::MatchEme => {
                // Validated by n_th; returns the configured angle exactly.
                self.n_th(cfg)?;
                Ok(cfg.theta())
            }
            NthMode::FromBath => {
                let n = self.n_th(cfg)?;
                Ok((n / (n + 1.0)).sqrt().atan())
            }
        }
    }
}

/// Steady correlated mixture of the thermally correlated engine:
/// `(1 - q)(cos^2 |A exc> + sin^2 |B exc>) + q Gibbs`.
pub fn tcme_state(cfg: &TwoQubitConfig, bath: &TcmeBathConfig) -> Result<DensityOp> {
    let angle = bath.mixing_angle(cfg)?;
    let (c2, s2) = (angle.cos().powi(2), angle.sin().powi(2));
    let sys = cfg.system();
    let layout = sys.layout();
    let gibbs = thermal_state(&sys.h_loc(), cfg.beta(), &layout)?;
    let mut mixture = CMat::zeros(4, 4);
    mixture[(A_EXCITED, A_EXCITED)] = Complex64::new(c2, 0.0);
    mixture[(B_EXCITED, B_EXCITED)] = Complex64::new(s2, 0.0);
    let mat = &mixture.scale(1.0 - cfg.q()) + &gibbs.mat().scale(cfg.q());
    DensityOp::new(mat, layout)
}

fn jump_operators(n_th: f64, gamma: f64, gamma_prime: f64) -> Vec<(f64, CMat)> {
    let ket_bra = |to: usize, from: usize| {
        let mut m = CMat::zeros(4, 4);
        m[(to, from)] = Complex64::ONE;
        m
    };
    vec![
        // Pump: load the A excitation from either end of the spectrum.
        (gamma, ket_bra(A_EXCITED, 0)),
        (gamma, ket_bra(A_EXCITED, 3)),
        // Correlated exchange with the structured bath.
        (gamma_prime * n_th, ket_bra(B_EXCITED, A_EXCITED)),
        (gamma_prime * (n_th + 1.0), ket_bra(A_EXCITED, B_EXCITED)),
    ]
}

/// Generator of the thermally correlated engine's relaxation:
/// `-i [h_loc, rho]` plus the structured-bath dissipators.
pub fn lindblad_rhs(rho: &CMat, cfg: &TwoQubitConfig, bath: &TcmeBathConfig) -> Result<CMat> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Dimension(format!(
            "two-qubit medium state must be 4x4, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let n_th = bath.n_th(cfg)?;
    let h = cfg.system().h_loc();
    let commutator = &(&h * rho) - &(rho * &h);
    let mut out = commutator.scale_c(Complex64::new(0.0, -1.0));
    for (rate, l) in jump_operators(n_th, bath.gamma(), bath.gamma_prime()) {
        let l_rho_ld = rho.conjugate_by(&l);
        let ld_l = &l.dagger() * &l;
        let anti = &(&ld_l * rho) + &(rho * &ld_l);
        out = &out + &(&l_rho_ld.scale(rate) - &anti.scale(rate / 2.0));
    }
    Ok(out)
}

/// One recorded instant of a relaxation trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: DensityOp,
}

/// Integrate the relaxation from `rho0` with a fixed-step fourth-order
/// Runge-Kutta scheme, recording every step including the initial state.
///
/// The step size must satisfy `dt * max(rates, spectral width) <= 0.1`;
/// larger steps are rejected rather than silently integrated.
pub fn lindblad_evolve(
    cfg: &TwoQubitConfig,
    bath: &TcmeBathConfig,
    rho0: &DensityOp,
    dt: f64,
    t_max: f64,
) -> Result<Vec<TrajectoryPoint>> {
    if rho0.dim() != 4 {
        return Err(Error::Dimension(format!(
            "two-qubit medium state must be 4x4, got {}x{}",
            rho0.dim(),
            rho0.dim()
        )));
    }
    if !dt.is_finite() || dt <= 0.0 || !t_max.is_finite() || t_max <= 0.0 {
        return Err(Error::Domain(format!(
            "step size and horizon must be finite and positive, got dt = {dt}, \
             t_max = {t_max}"
        )));
    }
    let n_th = bath.n_th(cfg)?;
    let sys = cfg.system();
    let energies: Vec<f64> = sys.h_loc().diag().iter().map(|e| e.re).collect();
    let spectral_width = energies.iter().cloned().fold(f64::MIN, f64::max)
        - energies.iter().cloned().fold(f64::MAX, f64::min);
    let fastest = bath
        .gamma()
        .max(bath.gamma_prime() * (n_th + 1.0))
        .max(spectral_width);
    if dt * fastest > tol::RK4_GUARD {
        return Err(Error::StepSize(format!(
            "dt = {dt} times the fastest scale {fastest:.3} exceeds the \
             stability guard {}; use dt <= {:.3e}",
            tol::RK4_GUARD,
            tol::RK4_GUARD / fastest
        )));
    }

    let steps = (t_max / dt).ceil() as usize;
    let layout = rho0.layout().clone();
    let mut state = rho0.mat().clone();
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(TrajectoryPoint {
        t: 0.0,
        state: rho0.clone(),
    });
    for i in 1..=steps {
        let k1 = lindblad_rhs(&state, cfg, bath)?;
        if k1.trace().norm() > tol::TRACELESS {
            return Err(Error::State(format!(
                "generator output has trace {:.3e}, expected 0",
                k1.trace().norm()
            )));
        }
        let k2 = lindblad_rhs(&(&state + &k1.scale(dt / 2.0)), cfg, bath)?;
        let k3 = lindblad_rhs(&(&state + &k2.scale(dt / 2.0)), cfg, bath)?;
        let k4 = lindblad_rhs(&(&state + &k3.scale(dt)), cfg, bath)?;
        let increment = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
        state = &state + &increment.scale(dt / 6.0);
        // Symmetrize: the generator preserves Hermiticity exactly, so this
        // only removes accumulated floating-point skew.
        state = (&state + &state.dagger()).scale(0.5);
        trajectory.push(TrajectoryPoint {
            t: i as f64 * dt,
            state: DensityOp::new(state.clone(), layout.clone())?,
        });
    }
    let drift = (state.trace() - Complex64::ONE).norm();
    if drift > tol::TRACE_DRIFT {
        return Err(Error::State(format!(
            "trace drifted by {drift:.3e} over the trajectory, tolerance {:.1e}",
            tol::TRACE_DRIFT
        )));
    }
    Ok(trajectory)
}

/// Which engine drives the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    /// Entangling engine: coherent exchange prepares the correlations.
    Eme,
    /// Thermally correlated engine: a structured bath prepares them.
    Tcme,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::Eme => "eme",
            EngineKind::Tcme => "tcme",
        }
    }
}

/// One sweep row: either a full ledger or an error tag, never both.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub scheme: MeasurementKind,
    pub engine: EngineKind,
    pub p: f64,
    pub beta_prime: Option<f64>,
    pub ledger: Option<EnergyLedger>,
    pub error: Option<String>,
}

/// Evenly spaced purity grid from `p_min` to `p_max` inclusive.
pub fn p_grid(p_min: f64, p_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Domain("grid needs at least one point".into()));
    }
    if !p_min.is_finite() || !p_max.is_finite() || p_min > p_max {
        return Err(Error::Domain(format!(
            "grid bounds must be finite with p_min <= p_max, got [{p_min}, {p_max}]"
        )));
    }
    if steps == 1 {
        return Ok(vec![p_min]);
    }
    let span = p_max - p_min;
    Ok((0..steps)
        .map(|i| p_min + i as f64 * span / (steps - 1) as f64)
        .collect())
}

/// Run both engine cycles across a pointer-purity grid.
///
/// Rows are returned sorted by (scheme, engine, purity). A row that fails
/// anywhere carries the stage-tagged error message instead of a ledger.
pub fn sweep(
    cfg: &TwoQubitConfig,
    bath: &TcmeBathConfig,
    grid: &[f64],
    engines: &[EngineKind],
    rule: SwapRule,
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(grid.len() * engines.len());
    for &engine in engines {
        // The medium states do not depend on the pointer purity: build them
        // once per engine and reuse across the grid.
        let prepared: Result<(DensityOp, DensityOp, PrepMode)> = match engine {
            EngineKind::Eme => eme_initial(cfg).and_then(|reference| {
                let working = eme_entangle(cfg, &reference)?;
                Ok((reference, working, PrepMode::FromReference))
            }),
            EngineKind::Tcme => tcme_state(cfg, bath)
                .map(|steady| (steady.clone(), steady, PrepMode::DissipativeDirect)),
        };
        let prepared = prepared.map_err(|e| e.in_stage("prep"));

        for &p in grid {
            let row = match &prepared {
                Err(e) => Err(e.to_string()),
                Ok((reference, working, prep_mode)) => cfg
                    .pointer(p)
                    .map_err(|e| e.in_stage("cool"))
                    .and_then(|pointer| {
                        let cycle = CycleConfig {
                            system: cfg.system(),
                            pointer,
                            scheme: cfg.correlation_scheme(),
                            rho_ref: reference.clone(),
                            rho_work: working.clone(),
                            prep_mode: *prep_mode,
                            swap_rule: rule,
                        };
                        run_cycle(&cycle)
                    })
                    .map_err(|e| e.to_string()),
            };
            rows.push(SweepRow {
                scheme: cfg.scheme(),
                engine,
                p,
                beta_prime: purity_to_beta(p, cfg.e_p()).ok(),
                ledger: row.as_ref().ok().copied(),
                error: row.err(),
            });
        }
    }
    rows.sort_by(|a, b| {
        (a.scheme.as_str(), a.engine.as_str())
            .cmp(&(b.scheme.as_str(), b.engine.as_str()))
            .then(a.p.partial_cmp(&b.p).unwrap_or(std::cmp::Ordering::Equal))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::real_trace_product;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn reference() -> TwoQubitConfig {
        TwoQubitConfig::reference(MeasurementKind::NonInvasive)
    }

    fn bath() -> TcmeBathConfig {
        TcmeBathConfig::new(NthMode::MatchEme, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation_rejects_degenerate_parameters() {
        let ok = |theta: f64, q: f64| {
            TwoQubitConfig::new(
                10.0,
                50.0,
                theta,
                q,
                1.0 / 30.0,
                1.0,
                MeasurementKind::NonInvasive,
            )
        };
        assert!(ok(0.2 * PI, 0.0).is_err());
        assert!(ok(0.2 * PI, 1.1).is_err());
        assert!(ok(0.0, 0.05).is_err());
        assert!(ok(PI / 2.0, 0.05).is_err());
        assert!(ok(0.2 * PI, 1.0).is_ok());
        assert!(TwoQubitConfig::new(
            10.0,
            0.0,
            0.2 * PI,
            0.05,
            1.0 / 30.0,
            1.0,
            MeasurementKind::NonInvasive
        )
        .is_err());
        assert!(TwoQubitConfig::new(
            10.0,
            50.0,
            0.2 * PI,
            0.05,
            0.0,
            1.0,
            MeasurementKind::NonInvasive
        )
        .is_err());
        assert!(TwoQubitConfig::new(
            10.0,
            50.0,
            0.2 * PI,
            0.05,
            1.0 / 30.0,
            0.0,
            MeasurementKind::NonInvasive
        )
        .is_err());
    }

    #[test]
    fn derived_quantities_match_closed_forms() {
        let cfg = reference();
        assert_abs_diff_eq!(cfg.g(), 50.0 * (0.2 * PI).tan(), epsilon = 1e-12);
        // t1 = pi cos(theta) / delta.
        assert_abs_diff_eq!(cfg.t1(), PI * (0.2 * PI).cos() / 50.0, epsilon = 1e-15);
    }

    #[test]
    fn loaded_state_mixes_excitation_with_gibbs() {
        let cfg = reference();
        let rho = eme_initial(&cfg).unwrap();
        assert!(rho.is_full_rank());
        let diag = rho.diag_real();
        // Gibbs weights over energies (0, 60, 10, 70) at beta = 1/30.
        let w: Vec<f64> = [0.0, 60.0, 10.0, 70.0]
            .iter()
            .map(|e| (-cfg.beta() * e).exp())
            .collect();
        let z: f64 = w.iter().sum();
        assert_abs_diff_eq!(diag[0], 0.05 * w[0] / z, epsilon = 1e-14);
        assert_abs_diff_eq!(diag[2], 0.95 + 0.05 * w[2] / z, epsilon = 1e-14);
        // No coherences before the exchange stroke.
        assert_eq!(rho.mat()[(1, 2)], Complex64::ZERO);
    }

    #[test]
    fn entangling_stroke_conserves_total_energy_and_prices_prep_locally() {
        let cfg = reference();
        let rho0 = eme_initial(&cfg).unwrap();
        let rho1 = eme_entangle(&cfg, &rho0).unwrap();
        let sys = cfg.system();
        // The generator is conserved under its own flow.
        let before = real_trace_product(&sys.h_total(), rho0.mat());
        let after = real_trace_product(&sys.h_total(), rho1.mat());
        assert_abs_diff_eq!(before, after, epsilon = 1e-9);
        // The initial state has no exchange energy, so the local preparation
        // cost is exactly the exchange energy stored in the evolved state.
        let e_prep = real_trace_product(&sys.h_loc(), rho1.mat())
            - real_trace_product(&sys.h_loc(), rho0.mat());
        let stored = -real_trace_product(&sys.h_int(), rho1.mat());
        assert_abs_diff_eq!(e_prep, stored, epsilon = 1e-9);
        // The exchange moves population toward B with weight sin^2(theta).
        let s2 = (0.2 * PI).sin().powi(2);
        assert_abs_diff_eq!(
            rho1.diag_real()[1],
            0.95 * s2 + (rho0_gibbs_mix(&cfg, s2)),
            epsilon = 1e-12
        );

        fn rho0_gibbs_mix(cfg: &TwoQubitConfig, s2: f64) -> f64 {
            let w: Vec<f64> = [0.0, 60.0, 10.0, 70.0]
                .iter()
                .map(|e| (-cfg.beta() * e).exp())
                .collect();
            let z: f64 = w.iter().sum();
            cfg.q() * ((1.0 - s2) * w[1] / z + s2 * w[2] / z)
        }
    }

    #[test]
    fn bath_occupation_frozen_values() {
        let cfg = reference();
        let matched = TcmeBathConfig::new(NthMode::MatchEme, 1.0, 1.0).unwrap();
        // tan^2(pi/5) / (1 - tan^2(pi/5)) = sqrt(5)/2.
        assert_abs_diff_eq!(
            matched.n_th(&cfg).unwrap(),
            5.0f64.sqrt() / 2.0,
            epsilon = 1e-12
        );
        assert_eq!(matched.mixing_angle(&cfg).unwrap(), cfg.theta());

        let planck = TcmeBathConfig::new(NthMode::FromBath, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            planck.n_th(&cfg).unwrap(),
            1.0 / ((50.0 / 30.0f64).exp() - 1.0),
            epsilon = 1e-15
        );

        // Matching is impossible once the exchange branch dominates.
        let steep = TwoQubitConfig::new(
            10.0,
            50.0,
            0.3 * PI,
            0.05,
            1.0 / 30.0,
            1.0,
            MeasurementKind::NonInvasive,
        )
        .unwrap();
        assert!(matched.n_th(&steep).is_err());
        assert!(planck.n_th(&steep).is_ok());
    }

    #[test]
    fn dissipative_mixture_matches_populations_without_coherence() {
        let cfg = reference();
        let rho = tcme_state(&cfg, &bath()).unwrap();
        assert!(rho.is_full_rank());
        let diag = rho.diag_real();
        let (c2, s2) = ((0.2 * PI).cos().powi(2), (0.2 * PI).sin().powi(2));
        let w: Vec<f64> = [0.0, 60.0, 10.0, 70.0]
            .iter()
            .map(|e| (-cfg.beta() * e).exp())
            .collect();
        let z: f64 = w.iter().sum();
        assert_abs_diff_eq!(diag[2], 0.95 * c2 + 0.05 * w[2] / z, epsilon = 1e-14);
        assert_abs_diff_eq!(diag[1], 0.95 * s2 + 0.05 * w[1] / z, epsilon = 1e-14);
        assert_eq!(rho.mat()[(1, 2)], Complex64::ZERO);
    }

    #[test]
    fn relaxation_pumps_out_of_the_ground_state_at_the_pump_rate() {
        let cfg = reference();
        let ground = CMat::basis_projector(4, 0);
        let rhs = lindblad_rhs(&ground, &cfg, &bath()).unwrap();
        assert_abs_diff_eq!(rhs[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rhs[(2, 2)].re, 1.0, epsilon = 1e-14);
        assert!(rhs.trace().norm() < 1e-14);
    }

    #[test]
    fn correlated_mixture_is_a_fixed_point_of_the_relaxation() {
        let cfg = reference();
        let (c2, s2) = ((0.2 * PI).cos().powi(2), (0.2 * PI).sin().powi(2));
        let mut fixed = CMat::zeros(4, 4);
        fixed[(2, 2)] = Complex64::new(c2, 0.0);
        fixed[(1, 1)] = Complex64::new(s2, 0.0);
        let rhs = lindblad_rhs(&fixed, &cfg, &bath()).unwrap();
        assert!(rhs.max_abs() < 1e-13);
    }

    #[test]
    fn oversized_integration_steps_are_rejected() {
        let cfg = reference();
        let rho0 = tcme_state(&cfg, &bath()).unwrap();
        // Spectral width is 70, so dt = 0.01 exceeds the 0.1 guard.
        let err = lindblad_evolve(&cfg, &bath(), &rho0, 0.01, 1.0).unwrap_err();
        assert!(matches!(err, Error::StepSize(_)));
        assert!(lindblad_evolve(&cfg, &bath(), &rho0, 1e-3, 0.05).is_ok());
    }

    #[test]
    fn relaxation_walks_the_population_ratio_toward_its_target() {
        let cfg = reference();
        let sys = cfg.system();
        let gibbs = thermal_state(&sys.h_loc(), cfg.beta(), &sys.layout()).unwrap();
        let trajectory = lindblad_evolve(&cfg, &bath(), &gibbs, 1e-3, 2.0).unwrap();
        assert_eq!(trajectory.len(), 2001);
        assert_abs_diff_eq!(trajectory.last().unwrap().t, 2.0, epsilon = 1e-12);

        let target = (0.2 * PI).tan().powi(2);
        let ratio = |point: &TrajectoryPoint| {
            let d = point.state.diag_real();
            d[1] / d[2]
        };
        let start = (ratio(&trajectory[0]) - target).abs();
        let end = (ratio(trajectory.last().unwrap()) - target).abs();
        assert!(end < start / 10.0, "ratio must close in on tan^2(theta)");
    }

    #[test]
    fn purity_grid_is_inclusive_and_even() {
        let grid = p_grid(0.501, 0.999, 499).unwrap();
        assert_eq!(grid.len(), 499);
        assert_abs_diff_eq!(grid[0], 0.501, epsilon = 1e-15);
        assert_abs_diff_eq!(grid[498], 0.999, epsilon = 1e-15);
        assert_abs_diff_eq!(grid[1] - grid[0], 1e-3, epsilon = 1e-12);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p_grid(0.6, 0.6, 1).unwrap(), vec![0.6]);
        assert!(p_grid(0.9, 0.6, 10).is_err());
        assert!(p_grid(0.6, 0.9, 0).is_err());
    }

    #[test]
    fn sweep_produces_sorted_complete_rows() {
        let cfg = reference();
        let rows = sweep(
            &cfg,
            &bath(),
            &[0.9, 0.6],
            &[EngineKind::Tcme, EngineKind::Eme],
            SwapRule::RawIndex,
        );
        assert_eq!(rows.len(), 4);
        // Sorted by engine then purity despite shuffled inputs.
        let keys: Vec<(&str, f64)> = rows.iter().map(|r| (r.engine.as_str(), r.p)).collect();
        assert_eq!(
            keys,
            vec![("eme", 0.6), ("eme", 0.9), ("tcme", 0.6), ("tcme", 0.9)]
        );
        for row in &rows {
            assert!(row.error.is_none());
            let ledger = row.ledger.expect("clean rows carry ledgers");
            assert!(ledger.e_meas > 0.0);
            assert_abs_diff_eq!(
                row.beta_prime.unwrap(),
                purity_to_beta(row.p, 1.0).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn sweep_tags_rows_that_cannot_run() {
        let cfg = reference();
        let rows = sweep(
            &cfg,
            &bath(),
            &[0.3, 0.9],
            &[EngineKind::Eme],
            SwapRule::RawIndex,
        );
        assert_eq!(rows.len(), 2);
        let bad = &rows[0];
        assert_abs_diff_eq!(bad.p, 0.3, epsilon = 1e-15);
        assert!(bad.ledger.is_none());
        assert!(bad.beta_prime.is_none());
        let message = bad.error.as_ref().unwrap();
        assert!(message.contains("cool"), "unexpected tag: {message}");
        assert!(rows[1].ledger.is_some());
    }
}
