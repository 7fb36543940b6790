//! Correlating measurement unitaries, outcome statistics, and the
//! faithfulness diagnostics of a finite-temperature pointer.
//!
//! The pointer starts in a full-rank thermal state, so no measurement here
//! is projective: outcome blocks of the pointer merely correlate with
//! system labels, and the quality of that correlation is summarized by the
//! decoding confidence together with bias and invasiveness residuals.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{joint_hamiltonian, DensityOp, PointerSpec, PointerTopology, SystemSpec};
use crate::qmath::{permutation_matrix, real_trace_product, CMat};

/// Which correlating unitary the engine uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// Pointer blocks shift conditioned on the system label; system
    /// populations are untouched.
    NonInvasive,
    /// System and pointer roles are exchanged after correlating, removing
    /// outcome bias at the price of disturbing the system.
    Unbiased,
}

/// A validated measurement configuration: kind plus register dimensions.
#[derive(Clone, Copy, Debug)]
pub struct CorrelationScheme {
    kind: MeasurementKind,
    n_s: usize,
    n_p: usize,
}

impl MeasurementKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementKind::NonInvasive => "noninvasive",
            MeasurementKind::Unbiased => "unbiased",
        }
    }
}

impl CorrelationScheme {
    /// Validate a scheme for `n_s`-level subsystems and `n_p`-level pointer
    /// registers. The pointer dimension must be an integer multiple of the
    /// subsystem dimension; the unbiased kind additionally requires the
    /// block size to be exactly 1.
    pub fn new(kind: MeasurementKind, n_s: usize, n_p: usize) -> Result<Self> {
        if n_s < 2 || n_p < 2 {
            return Err(Error::Spec(format!(
                "system and pointer dimensions must be at least 2, got {n_s} and {n_p}"
            )));
        }
        if !n_p.is_multiple_of(n_s) {
            return Err(Error::Spec(format!(
                "pointer dimension {n_p} is not an integer multiple of system dimension {n_s}"
            )));
        }
        let nu = n_p / n_s;
        if kind == MeasurementKind::Unbiased && nu != 1 {
            return Err(Error::Unsupported(format!(
                "the unbiased correlator is defined only for pointer block size 1, got {nu}"
            )));
        }
        Ok(CorrelationScheme { kind, n_s, n_p })
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    /// Pointer levels per outcome block.
    pub fn nu(&self) -> usize {
        self.n_p / self.n_s
    }
}

/// Index map of the block-swap permutation for `outcome`: exchanges pointer
/// block 0 with block `outcome`, leaving all other blocks in place.
fn block_swap_index(outcome: usize, nu: usize, l: usize) -> usize {
    let lo = outcome * nu;
    if l < nu {
        lo + l
    } else if l >= lo && l < lo + nu {
        l - lo
    } else {
        l
    }
}

/// Pointer-register unitary for one outcome: swaps the rest block (block 0)
/// with the block labeled `outcome`. Outcome 0 is the identity.
pub fn faithful_block_unitary(outcome: usize, n_s: usize, n_p: usize) -> Result<CMat> {
    if !n_p.is_multiple_of(n_s) {
        return Err(Error::Spec(format!(
            "pointer dimension {n_p} is not an integer multiple of system dimension {n_s}"
        )));
    }
    if outcome >= n_s {
        return Err(Error::Spec(format!(
            "outcome label {outcome} out of range for {n_s} system levels"
        )));
    }
    let nu = n_p / n_s;
    Ok(permutation_matrix(n_p, |l| {
        block_swap_index(outcome, nu, l)
    }))
}

/// Build the correlating unitary for the given scheme over medium and
/// pointer. Every returned matrix is a basis permutation of the joint
/// product basis.
pub fn build_u_corr(
    scheme: &CorrelationScheme,
    system: &SystemSpec,
    pointer: &PointerSpec,
) -> Result<CMat> {
    let n = system.n_levels();
    if scheme.n_s() != n {
        return Err(Error::Dimension(format!(
            "scheme expects {}-level subsystems, medium has {n}",
            scheme.n_s()
        )));
    }
    if scheme.n_p() != pointer.register_dim() {
        return Err(Error::Dimension(format!(
            "scheme expects {}-level pointer registers, pointer has {}",
            scheme.n_p(),
            pointer.register_dim()
        )));
    }
    let n_p = scheme.n_p();
    let nu = scheme.nu();
    let joint_layout = system.layout().concat(&pointer.layout());
    let dim = joint_layout.total_dim();

    // The conditional block shift, written as one joint permutation.
    let shift = match pointer.topology() {
        PointerTopology::SingleOnB { .. } => permutation_matrix(dim, |flat| {
            let d = joint_layout.decompose(flat);
            let (a, b, l) = (d[0], d[1], d[2]);
            joint_layout.compose(&[a, b, block_swap_index(b, nu, l)])
        }),
        PointerTopology::BipartiteFull { .. } => permutation_matrix(dim, |flat| {
            let d = joint_layout.decompose(flat);
            let (a, b, k, l) = (d[0], d[1], d[2], d[3]);
            joint_layout.compose(&[a, b, block_swap_index(a, nu, k), block_swap_index(b, nu, l)])
        }),
    };

    match scheme.kind() {
        MeasurementKind::NonInvasive => Ok(shift),
        MeasurementKind::Unbiased => {
            // Block size is 1 (enforced at scheme construction), so the
            // measured subsystems and their pointer registers have equal
            // dimension and can be exchanged outright after correlating.
            debug_assert_eq!(nu, 1);
            debug_assert_eq!(n_p, n);
            let swap = match pointer.topology() {
                PointerTopology::SingleOnB { .. } => permutation_matrix(dim, |flat| {
                    let d = joint_layout.decompose(flat);
                    joint_layout.compose(&[d[0], d[2], d[1]])
                }),
                PointerTopology::BipartiteFull { .. } => permutation_matrix(dim, |flat| {
                    let d = joint_layout.decompose(flat);
                    joint_layout.compose(&[d[2], d[3], d[0], d[1]])
                }),
            };
            Ok(&swap * &shift)
        }
    }
}

/// Attach the cooled pointer and apply the correlating unitary.
///
/// Returns the joint post-correlation state together with the energy drawn
/// while correlating, `Re tr[(h_loc + h_pointer)(rho_sp - rho_s (x) tau)]`.
pub fn correlate(
    rho_s: &DensityOp,
    system: &SystemSpec,
    pointer: &PointerSpec,
    u_corr: &CMat,
) -> Result<(DensityOp, f64)> {
    if rho_s.layout() != &system.layout() {
        return Err(Error::Dimension(format!(
            "working-medium state has layout {:?}, spec implies {:?}",
            rho_s.layout().dims(),
            system.layout().dims()
        )));
    }
    let tau = pointer.cooled_state()?;
    let joint_in = rho_s.tensor(&tau)?;
    let dim = joint_in.dim();
    if u_corr.rows() != dim || u_corr.cols() != dim {
        return Err(Error::Dimension(format!(
            "correlation operator is {}x{}, joint space has dimension {dim}",
            u_corr.rows(),
            u_corr.cols()
        )));
    }
    let gram = &u_corr.dagger() * u_corr;
    if gram.max_abs_diff(&CMat::identity(dim)) > 1e-10 {
        return Err(Error::Spec("correlation operator is not unitary".into()));
    }

    let rho_sp_mat = joint_in.mat().conjugate_by(u_corr);
    let h_joint = joint_hamiltonian(system, pointer);
    let e_corr =
        real_trace_product(&h_joint, &rho_sp_mat) - real_trace_product(&h_joint, joint_in.mat());
    let rho_sp = DensityOp::new(rho_sp_mat, joint_in.layout().clone())?;
    Ok((rho_sp, e_corr))
}

/// Projectors onto the pointer outcome blocks of one register.
#[derive(Clone, Debug)]
pub struct OutcomeProjectors {
    n_s: usize,
    n_p: usize,
    projectors: Vec<CMat>,
}

impl OutcomeProjectors {
    pub fn new(n_s: usize, n_p: usize) -> Result<Self> {
        if n_s < 2 || !n_p.is_multiple_of(n_s) {
            return Err(Error::Spec(format!(
                "pointer dimension {n_p} does not split into {n_s} equal outcome blocks"
            )));
        }
        let nu = n_p / n_s;
        let projectors = (0..n_s)
            .map(|o| {
                let mut p = CMat::zeros(n_p, n_p);
                for x in 0..nu {
                    p[(o * nu + x, o * nu + x)] = Complex64::ONE;
                }
                p
            })
            .collect();
        Ok(OutcomeProjectors {
            n_s,
            n_p,
            projectors,
        })
    }

    pub fn len(&self) -> usize {
        self.n_s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nu(&self) -> usize {
        self.n_p / self.n_s
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn get(&self, outcome: usize) -> &CMat {
        &self.projectors[outcome]
    }

    /// Outcome label whose block contains pointer level `l`.
    pub fn block_of(&self, l: usize) -> usize {
        l / self.nu()
    }
}

/// Joint outcome statistics: system labels crossed with pointer levels.
///
/// For a single pointer register the system part is the label of the
/// measured subsystem (B); for the bipartite topology it is the label pair.
#[derive(Clone, Debug)]
pub struct JointProbTable {
    sys_dims: Vec<usize>,
    ptr_dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointProbTable {
    fn new(sys_dims: Vec<usize>, ptr_dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let expect: usize = sys_dims.iter().product::<usize>() * ptr_dims.iter().product::<usize>();
        if probs.len() != expect {
            return Err(Error::Dimension(format!(
                "probability table has {} entries, dims imply {expect}",
                probs.len()
            )));
        }
        if let Some(&p) = probs.iter().find(|&&p| p < -crate::tol::STATE) {
            return Err(Error::State(format!(
                "negative outcome probability {p:.3e}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::State(format!(
                "outcome probabilities sum to {total:.15}, expected 1"
            )));
        }
        Ok(JointProbTable {
            sys_dims,
            ptr_dims,
            probs,
        })
    }

    pub fn sys_dims(&self) -> &[usize] {
        &self.sys_dims
    }

    pub fn ptr_dims(&self) -> &[usize] {
        &self.ptr_dims
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dims.iter().product()
    }

    pub fn ptr_dim(&self) -> usize {
        self.ptr_dims.iter().product()
    }

    /// Probability of flat system label `s` together with flat pointer
    /// level `p`.
    pub fn prob(&self, s: usize, p: usize) -> f64 {
        self.probs[s * self.ptr_dim() + p]
    }

    /// Marginal probability of flat system label `s`.
    pub fn sys_marginal(&self, s: usize) -> f64 {
        (0..self.ptr_dim()).map(|p| self.prob(s, p)).sum()
    }

    /// Largest entry-wise deviation from another table of equal shape.
    pub fn max_abs_diff(&self, other: &JointProbTable) -> f64 {
        assert_eq!(self.sys_dims, other.sys_dims);
        assert_eq!(self.ptr_dims, other.ptr_dims);
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn split_layout(rho_sp: &DensityOp, pointer: &PointerSpec) -> Result<(usize, Vec<usize>)> {
    let dims = rho_sp.layout().dims();
    let pdims = pointer.layout();
    let expected = 2 + pdims.num_factors();
    if dims.len() != expected || dims[2..] != *pdims.dims() || dims[0] != dims[1] {
        return Err(Error::Dimension(format!(
            "joint state layout {dims:?} does not match two medium factors plus pointer {:?}",
            pdims.dims()
        )));
    }
    Ok((dims[0], dims[2..].to_vec()))
}

/// Outcome statistics read directly off the joint post-correlation state.
pub fn joint_probs(rho_sp: &DensityOp, pointer: &PointerSpec) -> Result<JointProbTable> {
    let (n, pdims) = split_layout(rho_sp, pointer)?;
    let layout = rho_sp.layout();
    let diag = rho_sp.diag_real();
    match pointer.topology() {
        PointerTopology::SingleOnB { .. } => {
            let n_p = pdims[0];
            let mut probs = vec![0.0f64; n * n_p];
            for (flat, &d) in diag.iter().enumerate() {
                let digits = layout.decompose(flat);
                probs[digits[1] * n_p + digits[2]] += d;
            }
            JointProbTable::new(vec![n], vec![n_p], probs)
        }
        PointerTopology::BipartiteFull { .. } => {
            let n_p = pdims[0];
            let mut probs = vec![0.0f64; n * n * n_p * n_p];
            for (flat, &d) in diag.iter().enumerate() {
                let digits = layout.decompose(flat);
                let s = digits[0] * n + digits[1];
                let p = digits[2] * n_p + digits[3];
                probs[s * n_p * n_p + p] += d;
            }
            JointProbTable::new(vec![n, n], vec![n_p, n_p], probs)
        }
    }
}

fn medium_checks(rho_s: &DensityOp, pointer: &PointerSpec) -> Result<(usize, usize, usize)> {
    let dims = rho_s.layout().dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::Dimension(format!(
            "working-medium state must have two equal factors, got {dims:?}"
        )));
    }
    let n = dims[0];
    let n_p = pointer.register_dim();
    if !n_p.is_multiple_of(n) {
        return Err(Error::Spec(format!(
            "pointer dimension {n_p} is not an integer multiple of system dimension {n}"
        )));
    }
    Ok((n, n_p, n_p / n))
}

/// Closed-form outcome statistics of the block-shift correlator, computed
/// from populations and thermal weights alone. Serves as an independent
/// cross-check of the unitary pipeline.
pub fn noninvasive_psp(rho_s: &DensityOp, pointer: &PointerSpec) -> Result<JointProbTable> {
    let (n, n_p, nu) = medium_checks(rho_s, pointer)?;
    let diag = rho_s.diag_real();
    let regs = pointer.register_thermal_diags(pointer.beta_prime());
    match pointer.topology() {
        PointerTopology::SingleOnB { .. } => {
            let tau = &regs[0];
            let p_b: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|a| diag[a * n + j]).sum())
                .collect();
            let mut probs = vec![0.0f64; n * n_p];
            for j in 0..n {
                for l in 0..n_p {
                    probs[j * n_p + l] = p_b[j] * tau[block_swap_index(j, nu, l)];
                }
            }
            JointProbTable::new(vec![n], vec![n_p], probs)
        }
        PointerTopology::BipartiteFull { .. } => {
            let (tau_a, tau_b) = (&regs[0], &regs[1]);
            let mut probs = vec![0.0f64; n * n * n_p * n_p];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n_p {
                        for l in 0..n_p {
                            let s = i * n + j;
                            let p = k * n_p + l;
                            probs[s * n_p * n_p + p] = diag[i * n + j]
                                * tau_a[block_swap_index(i, nu, k)]
                                * tau_b[block_swap_index(j, nu, l)];
                        }
                    }
                }
            }
            JointProbTable::new(vec![n, n], vec![n_p, n_p], probs)
        }
    }
}

/// Closed-form outcome statistics of the unbiased correlator (block size 1):
/// the roles of system label and pointer level are exchanged relative to the
/// block-shift form.
pub fn unbiased_psp(rho_s: &DensityOp, pointer: &PointerSpec) -> Result<JointProbTable> {
    let (n, n_p, nu) = medium_checks(rho_s, pointer)?;
    if nu != 1 {
        return Err(Error::Unsupported(format!(
            "the unbiased correlator is defined only for pointer block size 1, got {nu}"
        )));
    }
    let diag = rho_s.diag_real();
    let regs = pointer.register_thermal_diags(pointer.beta_prime());
    match pointer.topology() {
        PointerTopology::SingleOnB { .. } => {
            let tau = &regs[0];
            let p_b: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|a| diag[a * n + j]).sum())
                .collect();
            let mut probs = vec![0.0f64; n * n_p];
            for j in 0..n {
                for l in 0..n_p {
                    probs[j * n_p + l] = p_b[l] * tau[block_swap_index(l, 1, j)];
                }
            }
            JointProbTable::new(vec![n], vec![n_p], probs)
        }
        PointerTopology::BipartiteFull { .. } => {
            let (tau_a, tau_b) = (&regs[0], &regs[1]);
            let mut probs = vec![0.0f64; n * n * n_p * n_p];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n_p {
                        for l in 0..n_p {
                            let s = i * n + j;
                            let p = k * n_p + l;
                            probs[s * n_p * n_p + p] = diag[k * n + l]
                                * tau_a[block_swap_index(k, 1, i)]
                                * tau_b[block_swap_index(l, 1, j)];
                        }
                    }
                }
            }
            JointProbTable::new(vec![n, n], vec![n_p, n_p], probs)
        }
    }
}

/// Decoding confidence: total probability that the pointer blocks decode to
/// exactly the system labels they are correlated with.
pub fn c_max(rho_sp: &DensityOp, projectors: &OutcomeProjectors) -> Result<f64> {
    let dims = rho_sp.layout().dims();
    let nu = projectors.nu();
    let ok = match dims {
        [_, n, p] => *n == projectors.len() && *p == projectors.n_p(),
        [m, n, pa, pb] => {
            m == n && *n == projectors.len() && *pa == projectors.n_p() && *pb == projectors.n_p()
        }
        _ => false,
    };
    if !ok {
        return Err(Error::Dimension(format!(
            "joint layout {dims:?} does not match {} outcome blocks of size {nu}",
            projectors.len()
        )));
    }
    let layout = rho_sp.layout();
    let mut confidence = 0.0f64;
    for (flat, &d) in rho_sp.diag_real().iter().enumerate() {
        let digits = layout.decompose(flat);
        let hit = match digits.len() {
            3 => projectors.block_of(digits[2]) == digits[1],
            _ => {
                projectors.block_of(digits[2]) == digits[0]
                    && projectors.block_of(digits[3]) == digits[1]
            }
        };
        if hit {
            confidence += d;
        }
    }
    Ok(confidence)
}

/// Faithfulness diagnostics of one correlating measurement.
#[derive(Clone, Copy, Debug)]
pub struct AxiomReport {
    /// Largest deviation between a decoded outcome probability and the
    /// matching pre-measurement population.
    pub bias_residual: f64,
    /// Largest change of any working-medium population across the
    /// correlation step.
    pub invasive_residual: f64,
    /// Decoding confidence of the outcome blocks.
    pub c_max: f64,
}

/// Compare pre- and post-correlation statistics: outcome bias, population
/// disturbance, and decoding confidence.
pub fn axiom_report(
    rho_s: &DensityOp,
    rho_sp: &DensityOp,
    projectors: &OutcomeProjectors,
) -> Result<AxiomReport> {
    let n = rho_s.layout().dims()[0];
    if rho_s.layout().dims() != &rho_sp.layout().dims()[..2] {
        return Err(Error::Dimension(format!(
            "medium layout {:?} does not prefix joint layout {:?}",
            rho_s.layout().dims(),
            rho_sp.layout().dims()
        )));
    }
    let layout = rho_sp.layout();
    let joint_diag = rho_sp.diag_real();
    let medium_diag = rho_s.diag_real();

    // Decoded-outcome marginals from the pointer blocks.
    let single = layout.num_factors() == 3;
    let mut decoded = vec![0.0f64; if single { n } else { n * n }];
    for (flat, &d) in joint_diag.iter().enumerate() {
        let digits = layout.decompose(flat);
        if single {
            decoded[projectors.block_of(digits[2])] += d;
        } else {
            decoded[projectors.block_of(digits[2]) * n + projectors.block_of(digits[3])] += d;
        }
    }
    // Reference populations the decoded outcomes should reproduce.
    let mut bias_residual = 0.0f64;
    if single {
        for j in 0..n {
            let p_b: f64 = (0..n).map(|a| medium_diag[a * n + j]).sum();
            bias_residual = bias_residual.max((decoded[j] - p_b).abs());
        }
    } else {
        for s in 0..n * n {
            bias_residual = bias_residual.max((decoded[s] - medium_diag[s]).abs());
        }
    }

    // Population disturbance of the medium across the correlation step.
    let after = rho_sp.reduce(&[0, 1])?;
    let invasive_residual = after
        .diag_real()
        .iter()
        .zip(&medium_diag)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    Ok(AxiomReport {
        bias_residual,
        invasive_residual,
        c_max: c_max(rho_sp, projectors)?,
    })
}

/// Energy spent preparing the pointer at `beta_prime` out of the ambient
/// bath at `beta`: `(beta'/beta - 1) (<H>_beta - <H>_beta')`.
///
/// Both factors change sign together, so the cost is nonnegative for every
/// prepared temperature and vanishes exactly at `beta' = beta`.
pub fn cooling_cost(pointer: &PointerSpec) -> f64 {
    let (beta, beta_prime) = (pointer.beta(), pointer.beta_prime());
    (beta_prime / beta - 1.0) * (pointer.mean_energy(beta) - pointer.mean_energy(beta_prime))
}
