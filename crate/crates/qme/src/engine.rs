//! The engine cycle: prepare, cool, correlate, feed back, reset, and the
//! energy ledger that prices each stroke.
//!
//! Feedback is conditioned on the pointer alone (its levels are never
//! destructively read out), so it is a pointer-block-controlled exchange
//! channel rather than a projective-measurement branch.

use crate::error::{Error, Result};
use crate::measurement::{
    build_u_corr, c_max, cooling_cost, correlate, CorrelationScheme, OutcomeProjectors,
};
use crate::model::{joint_hamiltonian, DensityOp, PointerSpec, SystemSpec};
use crate::qmath::{permutation_matrix, real_trace_product, CMat};

/// How the working medium reaches its pre-measurement state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepMode {
    /// Driven preparation out of the reference state; costs the local
    /// energy difference between working and reference states.
    FromReference,
    /// The bath dissipates the medium into the working state for free.
    DissipativeDirect,
}

/// How pointer levels decide whether the feedback exchange fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapRule {
    /// Compare raw pointer level indices.
    RawIndex,
    /// Compare decoded outcome blocks (indices divided by the block size).
    DecodedBlock,
}

/// Everything one engine cycle needs.
#[derive(Clone, Debug)]
pub struct CycleConfig {
    pub system: SystemSpec,
    pub pointer: PointerSpec,
    pub scheme: CorrelationScheme,
    /// State the medium is reset toward at the end of the cycle.
    pub rho_ref: DensityOp,
    /// Pre-measurement working state of the medium.
    pub rho_work: DensityOp,
    pub prep_mode: PrepMode,
    pub swap_rule: SwapRule,
}

/// Energy bookkeeping of one cycle. Negative work means extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLedger {
    /// Cost of preparing the working state from the reference state.
    pub e_prep: f64,
    /// Cost of preparing the pointer at its working temperature.
    pub e_cool: f64,
    /// Energy drawn while correlating medium and pointer.
    pub e_corr: f64,
    /// Work exchanged during conditional feedback.
    pub w: f64,
    /// Local energy needed to restore the reference state.
    pub e_reset: f64,
    /// Reset cost with energy given up to the bath priced at zero.
    pub e_reset_clamped: f64,
    /// Total measurement cost: prep + cool + correlation + clamped reset.
    pub e_meas: f64,
    /// Extraction efficiency `-w / e_meas`, defined only when the cycle
    /// extracts work and the measurement had a positive cost.
    pub eta: Option<f64>,
    /// Decoding confidence of the pointer outcome blocks.
    pub c_max: f64,
}

/// Exchange unitary of the two medium subsystems, `|i j> -> |j i>`.
pub fn swap_unitary(n: usize) -> CMat {
    permutation_matrix(n * n, |f| (f % n) * n + f / n)
}

fn should_swap(ptr_digits: &[usize], nu: usize, rule: SwapRule) -> bool {
    match ptr_digits {
        [l] => l / nu >= 1,
        [k, l] => match rule {
            SwapRule::RawIndex => k < l,
            SwapRule::DecodedBlock => k / nu < l / nu,
        },
        _ => unreachable!("pointer layouts have one or two registers"),
    }
}

/// Kraus operators of the feedback channel: one per pointer level, each a
/// medium exchange (or identity) tensored with that level's projector.
pub fn feedback_kraus(system: &SystemSpec, pointer: &PointerSpec, rule: SwapRule) -> Vec<CMat> {
    let n = system.n_levels();
    let nu = pointer.register_dim() / n;
    let swap = swap_unitary(n);
    let ident = CMat::identity(n * n);
    let ptr_layout = pointer.layout();
    let dp = ptr_layout.total_dim();
    (0..dp)
        .map(|p| {
            let digits = ptr_layout.decompose(p);
            let medium_op = if should_swap(&digits, nu, rule) {
                &swap
            } else {
                &ident
            };
            medium_op.kron(&CMat::basis_projector(dp, p))
        })
        .collect()
}

/// Apply the pointer-conditioned exchange channel to the joint state.
pub fn feedback_channel(
    rho_sp: &DensityOp,
    system: &SystemSpec,
    pointer: &PointerSpec,
    rule: SwapRule,
) -> Result<DensityOp> {
    let n = system.n_levels();
    let expected = system.layout().concat(&pointer.layout());
    if rho_sp.layout() != &expected {
        return Err(Error::Dimension(format!(
            "joint state layout {:?} does not match medium plus pointer {:?}",
            rho_sp.layout().dims(),
            expected.dims()
        )));
    }
    if !pointer.register_dim().is_multiple_of(n) {
        return Err(Error::Spec(format!(
            "pointer dimension {} is not an integer multiple of system dimension {n}",
            pointer.register_dim()
        )));
    }
    let kraus = feedback_kraus(system, pointer, rule);
    let mut out = CMat::zeros(rho_sp.dim(), rho_sp.dim());
    for k in &kraus {
        out = &out + &rho_sp.mat().conjugate_by(k);
    }
    DensityOp::new(out, expected)
}

/// Cost of driving the medium from the reference into the working state.
pub fn prep_cost(rho_work: &DensityOp, rho_ref: &DensityOp, h_loc: &CMat, mode: PrepMode) -> f64 {
    match mode {
        PrepMode::DissipativeDirect => 0.0,
        PrepMode::FromReference => {
            real_trace_product(h_loc, rho_work.mat()) - real_trace_product(h_loc, rho_ref.mat())
        }
    }
}

/// Work exchanged across the feedback stroke, measured against the local
/// medium-plus-pointer Hamiltonian. Negative values are extracted work.
pub fn work(
    rho_sp: &DensityOp,
    rho_fb: &DensityOp,
    system: &SystemSpec,
    pointer: &PointerSpec,
) -> f64 {
    let h_joint = joint_hamiltonian(system, pointer);
    real_trace_product(&h_joint, rho_fb.mat()) - real_trace_product(&h_joint, rho_sp.mat())
}

/// Local energy required to restore the reference state from the
/// post-feedback medium.
pub fn reset_cost(rho_fb: &DensityOp, rho_ref: &DensityOp, h_loc: &CMat) -> Result<f64> {
    let keep: Vec<usize> = (0..2).collect();
    let medium = rho_fb.reduce(&keep)?;
    Ok(real_trace_product(h_loc, rho_ref.mat()) - real_trace_product(h_loc, medium.mat()))
}

fn staged<T>(stage: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(stage))
}

/// Run one full engine cycle and return its energy ledger.
///
/// Errors are tagged with the stage they occur in: `prep`, `cool`,
/// `correlate`, `feedback`, or `reset`.
pub fn run_cycle(cfg: &CycleConfig) -> Result<EnergyLedger> {
    // Preparation: both medium states must live on the medium layout and,
    // for a non-ideal engine, be strictly full rank.
    let sys_layout = cfg.system.layout();
    for (name, state) in [("reference", &cfg.rho_ref), ("working", &cfg.rho_work)] {
        if state.layout() != &sys_layout {
            return Err(Error::Dimension(format!(
                "{name} state layout {:?} does not match medium layout {:?}",
                state.layout().dims(),
                sys_layout.dims()
            ))
            .in_stage("prep"));
        }
        if !state.is_full_rank() {
            return Err(Error::State(format!(
                "{name} state is not full rank (smallest eigenvalue {:.3e})",
                state.min_eigenvalue()
            ))
            .in_stage("prep"));
        }
    }
    let h_loc = cfg.system.h_loc();
    let e_prep = prep_cost(&cfg.rho_work, &cfg.rho_ref, &h_loc, cfg.prep_mode);

    let e_cool = cooling_cost(&cfg.pointer);

    let u_corr = staged(
        "correlate",
        build_u_corr(&cfg.scheme, &cfg.system, &cfg.pointer),
    )?;
    let (rho_sp, e_corr) = staged(
        "correlate",
        correlate(&cfg.rho_work, &cfg.system, &cfg.pointer, &u_corr),
    )?;
    let projectors = staged(
        "correlate",
        OutcomeProjectors::new(cfg.system.n_levels(), cfg.pointer.register_dim()),
    )?;
    let confidence = staged("correlate", c_max(&rho_sp, &projectors))?;

    let rho_fb = staged(
        "feedback",
        feedback_channel(&rho_sp, &cfg.system, &cfg.pointer, cfg.swap_rule),
    )?;
    let w = work(&rho_sp, &rho_fb, &cfg.system, &cfg.pointer);

    let e_reset = staged("reset", reset_cost(&rho_fb, &cfg.rho_ref, &h_loc))?;
    let e_reset_clamped = e_reset.max(0.0);

    let e_meas = e_prep + e_cool + e_corr + e_reset_clamped;
    let eta = if w < 0.0 && e_meas > 0.0 {
        Some(-w / e_meas)
    } else {
        None
    };

    Ok(EnergyLedger {
        e_prep,
        e_cool,
        e_corr,
        w,
        e_reset,
        e_reset_clamped,
        e_meas,
        eta,
        c_max: confidence,
    })
}
