//! Physical specifications: the bipartite working medium, the measurement
//! pointer, validated density operators, and thermal-state construction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmath::{herm_eigen, partial_trace, CMat, FactorLayout};
use crate::tol;

/// Bipartite working medium: two `n`-level subsystems A and B with local
/// energies and resonant exchange couplings between level pairs.
///
/// Level gaps of B strictly dominate those of A (for all i > j:
/// `E_B[i] - E_B[j] > E_A[i] - E_A[j] >= 0`), so an exchanged excitation
/// always carries net energy from A to B. Both ground energies are gauged
/// to zero.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    energies_a: Vec<f64>,
    energies_b: Vec<f64>,
    // Dense symmetric coupling table, zero diagonal, row-major n*n.
    couplings: Vec<f64>,
}

impl SystemSpec {
    /// Validate and build a working-medium specification.
    ///
    /// `couplings` lists exchange strengths as `(i, j, g)` with `i < j` and
    /// `g >= 0`; level pair (i, j) exchanges `|j i> <-> |i j>` (A drops from
    /// j to i while B rises from i to j).
    pub fn new(
        energies_a: Vec<f64>,
        energies_b: Vec<f64>,
        couplings: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = energies_a.len();
        if n < 2 {
            return Err(Error::Spec(format!(
                "subsystems need at least 2 levels, got {n}"
            )));
        }
        if energies_b.len() != n {
            return Err(Error::Spec(format!(
                "subsystem level counts differ: A has {n}, B has {}",
                energies_b.len()
            )));
        }
        if energies_a.iter().chain(&energies_b).any(|e| !e.is_finite()) {
            return Err(Error::Spec("subsystem energies must be finite".into()));
        }
        if energies_a[0] != 0.0 || energies_b[0] != 0.0 {
            return Err(Error::Spec(format!(
                "ground energies must be gauged to zero, got A: {}, B: {}",
                energies_a[0], energies_b[0]
            )));
        }
        for i in 1..n {
            for j in 0..i {
                let gap_a = energies_a[i] - energies_a[j];
                let gap_b = energies_b[i] - energies_b[j];
                if gap_a < 0.0 || gap_b <= gap_a {
                    return Err(Error::Spec(format!(
                        "level pair (i={i}, j={j}): need B gap > A gap >= 0, \
                         got A gap {gap_a}, B gap {gap_b}"
                    )));
                }
            }
        }

        let mut table = vec![0.0f64; n * n];
        for &(i, j, g) in couplings {
            if i >= j || j >= n {
                return Err(Error::Spec(format!(
                    "coupling indices must satisfy i < j < {n}, got ({i}, {j})"
                )));
            }
            if !g.is_finite() || g < 0.0 {
                return Err(Error::Spec(format!(
                    "coupling g[{i}][{j}] must be finite and nonnegative, got {g}"
                )));
            }
            if table[i * n + j] != 0.0 {
                return Err(Error::Spec(format!(
                    "coupling ({i}, {j}) specified more than once"
                )));
            }
            table[i * n + j] = g;
            table[j * n + i] = g;
        }
        Ok(SystemSpec {
            energies_a,
            energies_b,
            couplings: table,
        })
    }

    /// Two qubits: A with gap `omega_a`, B with gap `omega_a + delta`, and a
    /// single exchange coupling `g` between the excited-level pair.
    pub fn two_qubit(omega_a: f64, delta: f64, g: f64) -> Result<Self> {
        SystemSpec::new(vec![0.0, omega_a], vec![0.0, omega_a + delta], &[(0, 1, g)])
    }

    /// Levels per subsystem.
    pub fn n_levels(&self) -> usize {
        self.energies_a.len()
    }

    pub fn energy_a(&self, i: usize) -> f64 {
        self.energies_a[i]
    }

    pub fn energy_b(&self, i: usize) -> f64 {
        self.energies_b[i]
    }

    /// Exchange strength for a level pair, symmetric in its arguments.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n_levels() + j]
    }

    /// Tensor-factor layout [n, n] of the joint medium.
    pub fn layout(&self) -> FactorLayout {
        let n = self.n_levels();
        FactorLayout::new(vec![n, n]).expect("n >= 2 by construction")
    }

    /// Local Hamiltonian: diagonal with entries `E_A[i] + E_B[j]`.
    pub fn h_loc(&self) -> CMat {
        let n = self.n_levels();
        let diag: Vec<f64> = (0..n * n)
            .map(|f| self.energies_a[f / n] + self.energies_b[f % n])
            .collect();
        CMat::from_real_diag(&diag)
    }

    /// Exchange Hamiltonian: element `g/2` between `|j i>` and `|i j>` for
    /// every coupled pair i < j.
    pub fn h_int(&self) -> CMat {
        let n = self.n_levels();
        let mut h = CMat::zeros(n * n, n * n);
        for i in 0..n {
            for j in (i + 1)..n {
                let g = self.coupling(i, j);
                if g == 0.0 {
                    continue;
                }
                let up = i * n + j; // A in i, B in j
                let down = j * n + i; // A in j, B in i
                h[(up, down)] = Complex64::new(g / 2.0, 0.0);
                h[(down, up)] = Complex64::new(g / 2.0, 0.0);
            }
        }
        h
    }

    /// Full medium Hamiltonian `h_loc + h_int`.
    pub fn h_total(&self) -> CMat {
        &self.h_loc() + &self.h_int()
    }
}

/// How the pointer attaches to the working medium.
#[derive(Clone, Debug)]
pub enum PointerTopology {
    /// One pointer register correlated with subsystem B only.
    SingleOnB { energies: Vec<f64> },
    /// Two pointer registers, one per subsystem.
    BipartiteFull {
        energies_a: Vec<f64>,
        energies_b: Vec<f64>,
    },
}

/// Measurement pointer: register topology, ambient inverse temperature
/// `beta`, and prepared (post-cooling) inverse temperature `beta_prime`.
#[derive(Clone, Debug)]
pub struct PointerSpec {
    topology: PointerTopology,
    beta: f64,
    beta_prime: f64,
}

fn validate_pointer_energies(label: &str, energies: &[f64]) -> Result<()> {
    if energies.len() < 2 {
        return Err(Error::Spec(format!(
            "pointer register {label} needs at least 2 levels, got {}",
            energies.len()
        )));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Spec(format!(
            "pointer register {label} energies must be finite"
        )));
    }
    if energies[0] != 0.0 {
        return Err(Error::Spec(format!(
            "pointer register {label} ground energy must be zero, got {}",
            energies[0]
        )));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Spec(format!(
            "pointer register {label} energies must be nondecreasing"
        )));
    }
    Ok(())
}

impl PointerSpec {
    /// Validate and build a pointer specification.
    pub fn new(topology: PointerTopology, beta: f64, beta_prime: f64) -> Result<Self> {
        match &topology {
            PointerTopology::SingleOnB { energies } => {
                validate_pointer_energies("P", energies)?;
            }
            PointerTopology::BipartiteFull {
                energies_a,
                energies_b,
            } => {
                validate_pointer_energies("PA", energies_a)?;
                validate_pointer_energies("PB", energies_b)?;
                if energies_a.len() != energies_b.len() {
                    return Err(Error::Spec(format!(
                        "pointer registers must have equal dimension, got {} and {}",
                        energies_a.len(),
                        energies_b.len()
                    )));
                }
            }
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::Spec(format!(
                "ambient inverse temperature must be positive and finite, got {beta}"
            )));
        }
        if !beta_prime.is_finite() || beta_prime <= 0.0 {
            return Err(Error::Spec(format!(
                "prepared inverse temperature must be positive and finite, got {beta_prime}"
            )));
        }
        Ok(PointerSpec {
            topology,
            beta,
            beta_prime,
        })
    }

    /// Qubit pointer with gap `e_p` attached to subsystem B.
    pub fn qubit_on_b(e_p: f64, beta: f64, beta_prime: f64) -> Result<Self> {
        if !e_p.is_finite() || e_p <= 0.0 {
            return Err(Error::Spec(format!(
                "pointer gap must be positive and finite, got {e_p}"
            )));
        }
        PointerSpec::new(
            PointerTopology::SingleOnB {
                energies: vec![0.0, e_p],
            },
            beta,
            beta_prime,
        )
    }

    pub fn topology(&self) -> &PointerTopology {
        &self.topology
    }

    pub fn is_bipartite(&self) -> bool {
        matches!(self.topology, PointerTopology::BipartiteFull { .. })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }

    /// Dimension of each pointer register.
    pub fn register_dim(&self) -> usize {
        match &self.topology {
            PointerTopology::SingleOnB { energies } => energies.len(),
            PointerTopology::BipartiteFull { energies_a, .. } => energies_a.len(),
        }
    }

    /// Tensor-factor layout of the pointer space.
    pub fn layout(&self) -> FactorLayout {
        let d = self.register_dim();
        let dims = if self.is_bipartite() {
            vec![d, d]
        } else {
            vec![d]
        };
        FactorLayout::new(dims).expect("register dims >= 2 by construction")
    }

    /// Total pointer dimension (product over registers).
    pub fn total_dim(&self) -> usize {
        self.layout().total_dim()
    }

    /// Energy of each flat pointer basis state, i.e. the diagonal of the
    /// pointer Hamiltonian.
    pub fn energies_flat(&self) -> Vec<f64> {
        match &self.topology {
            PointerTopology::SingleOnB { energies } => energies.clone(),
            PointerTopology::BipartiteFull {
                energies_a,
                energies_b,
            } => {
                let mut out = Vec::with_capacity(energies_a.len() * energies_b.len());
                for ea in energies_a {
                    for eb in energies_b {
                        out.push(ea + eb);
                    }
                }
                out
            }
        }
    }

    /// Pointer Hamiltonian (diagonal in the register basis).
    pub fn h_pointer(&self) -> CMat {
        CMat::from_real_diag(&self.energies_flat())
    }

    /// Thermal populations of the pointer at inverse temperature `beta`.
    pub fn thermal_diag(&self, beta: f64) -> Vec<f64> {
        let energies = self.energies_flat();
        let weights: Vec<f64> = energies.iter().map(|e| (-beta * e).exp()).collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }

    /// Thermal populations of each register separately (the pointer state
    /// factorizes because registers do not interact).
    pub fn register_thermal_diags(&self, beta: f64) -> Vec<Vec<f64>> {
        let normalize = |energies: &[f64]| -> Vec<f64> {
            let weights: Vec<f64> = energies.iter().map(|e| (-beta * e).exp()).collect();
            let z: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / z).collect()
        };
        match &self.topology {
            PointerTopology::SingleOnB { energies } => vec![normalize(energies)],
            PointerTopology::BipartiteFull {
                energies_a,
                energies_b,
            } => vec![normalize(energies_a), normalize(energies_b)],
        }
    }

    /// Mean pointer energy at inverse temperature `beta`.
    pub fn mean_energy(&self, beta: f64) -> f64 {
        self.energies_flat()
            .iter()
            .zip(self.thermal_diag(beta))
            .map(|(e, p)| e * p)
            .sum()
    }

    /// Thermal pointer state at the ambient temperature.
    pub fn ambient_state(&self) -> Result<DensityOp> {
        self.thermal_state_at(self.beta)
    }

    /// Thermal pointer state at the prepared (post-cooling) temperature.
    pub fn cooled_state(&self) -> Result<DensityOp> {
        self.thermal_state_at(self.beta_prime)
    }

    fn thermal_state_at(&self, beta: f64) -> Result<DensityOp> {
        let diag = self.thermal_diag(beta);
        DensityOp::new(CMat::from_real_diag(&diag), self.layout())
    }
}

/// Joint local Hamiltonian of medium plus pointer:
/// `h_loc (x) 1 + 1 (x) h_pointer`. The exchange term is switched off
/// outside the entangling stroke and is deliberately not included.
pub fn joint_hamiltonian(system: &SystemSpec, pointer: &PointerSpec) -> CMat {
    let hs = system.h_loc();
    let hp = pointer.h_pointer();
    let ds = hs.rows();
    let dp = hp.rows();
    &hs.kron(&CMat::identity(dp)) + &CMat::identity(ds).kron(&hp)
}

/// A validated density operator with its tensor-factor layout.
///
/// Construction checks Hermiticity, unit trace, and positivity, and caches
/// the smallest eigenvalue so full-rank queries are free afterwards.
#[derive(Clone, Debug)]
pub struct DensityOp {
    mat: CMat,
    layout: FactorLayout,
    min_eig: f64,
}

impl DensityOp {
    /// Validate `mat` as a density operator over `layout`.
    pub fn new(mat: CMat, layout: FactorLayout) -> Result<Self> {
        let n = layout.total_dim();
        if mat.rows() != n || mat.cols() != n {
            return Err(Error::Dimension(format!(
                "state is {}x{} but layout implies dimension {n}",
                mat.rows(),
                mat.cols()
            )));
        }
        let defect = mat.herm_defect();
        if defect > tol::STATE {
            return Err(Error::NotHermitian {
                defect,
                tol: tol::STATE,
            });
        }
        let trace = mat.trace();
        if (trace - Complex64::ONE).norm() > tol::STATE {
            return Err(Error::State(format!(
                "trace must be 1, got {:.6e} + {:.1e}i",
                trace.re, trace.im
            )));
        }
        let (values, _) = herm_eigen(&mat)?;
        let min_eig = values[0];
        if min_eig < tol::EIG_FLOOR {
            return Err(Error::State(format!(
                "negative eigenvalue {min_eig:.3e} below floor {:.1e}",
                tol::EIG_FLOOR
            )));
        }
        Ok(DensityOp {
            mat,
            layout,
            min_eig,
        })
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Smallest eigenvalue found at validation time.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    /// True when every eigenvalue is strictly positive.
    pub fn is_full_rank(&self) -> bool {
        self.min_eig > 0.0
    }

    /// Real parts of the diagonal (populations in the product basis).
    pub fn diag_real(&self) -> Vec<f64> {
        self.mat.diag().iter().map(|e| e.re).collect()
    }

    /// Reduced state over the kept factors (strictly increasing indices).
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityOp> {
        let red = partial_trace(&self.mat, &self.layout, keep)?;
        let dims: Vec<usize> = keep.iter().map(|&f| self.layout.dims()[f]).collect();
        DensityOp::new(red, FactorLayout::new(dims)?)
    }

    /// Tensor product with another state, `self` most significant.
    pub fn tensor(&self, other: &DensityOp) -> Result<DensityOp> {
        DensityOp::new(self.mat.kron(&other.mat), self.layout.concat(&other.layout))
    }
}

/// Gibbs state `exp(-beta h) / Z` over the given layout.
///
/// `beta = 0` yields the maximally mixed state; negative `beta` is rejected.
pub fn thermal_state(h: &CMat, beta: f64, layout: &FactorLayout) -> Result<DensityOp> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::Domain(format!(
            "inverse temperature must be finite and nonnegative, got {beta}"
        )));
    }
    let (values, vectors) = herm_eigen(h)?;
    // Shift by the ground energy before exponentiating so large spectra
    // cannot overflow; the shift cancels in the normalization.
    let ground = values[0];
    let weights: Vec<f64> = values
        .iter()
        .map(|v| (-beta * (v - ground)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.into_iter().map(|w| w / z).collect();
    let rho = CMat::from_real_diag(&normalized).conjugate_by(&vectors);
    DensityOp::new(rho, layout.clone())
}

/// Inverse temperature at which a qubit with gap `e_p` has ground
/// population (purity) `p`: `ln(p / (1 - p)) / e_p`, defined for
/// `1/2 < p < 1`.
pub fn purity_to_beta(p: f64, e_p: f64) -> Result<f64> {
    if !e_p.is_finite() || e_p <= 0.0 {
        return Err(Error::Domain(format!(
            "pointer gap must be positive and finite, got {e_p}"
        )));
    }
    if !p.is_finite() || p <= 0.5 || p >= 1.0 {
        return Err(Error::Domain(format!(
            "pointer purity must lie strictly inside (1/2, 1), got {p}"
        )));
    }
    Ok((p / (1.0 - p)).ln() / e_p)
}
