//! Heralding and state construction: the conditional measurement on the
//! trigger mode, assembly of the cat state and its incoherent mixture from
//! the conditional blocks, the 45°-basis herald, and the second conditional
//! measurement that isolates the d₊ mode.
//!
//! The physical six-mode problem factorizes into two identical three-mode
//! groups, so a single group run supplies the blocks for both tensor
//! factors. All cat/mixture observables are computed factor-wise from the
//! blocks; materializing the four-mode state is only done at small cutoffs
//! to validate that path.

use num_complex::Complex64;

use crate::fock::{FockDensityMatrix, OpLetter};
use crate::phase_space::ComplexAmplitudePair;
use crate::{OpoError, Result};

/// One term of an observable on the four-mode cat: a complex coefficient
/// and one operator word per group block (modes within a block: 0 = the
/// direction-2 mode, 1 = the direction-3 mode).
pub type CrossTerm = (Complex64, Vec<OpLetter>, Vec<OpLetter>);

/// The three conditional blocks of a single group, sliced on the trigger
/// mode: ρ⁽¹⁾ = ⟨1|ρ|1⟩₁, ρ⁽⁰⁾ = ⟨0|ρ|0⟩₁, ρ⁽ⁱⁿᵗ⁾ = ⟨1|ρ|0⟩₁. Blocks are
/// stored unnormalized; the traces are recorded separately.
#[derive(Debug, Clone)]
pub struct ConditionalBlocks {
    pub rho0: FockDensityMatrix,
    pub rho1: FockDensityMatrix,
    /// Not a state: the interference block has zero trace and is not
    /// Hermitian.
    pub rho_int: FockDensityMatrix,
    pub trace0: f64,
    pub trace1: f64,
}

/// Slice the trigger mode (index 0) of a three-mode state into the
/// conditional blocks on the remaining two modes.
pub fn conditional_blocks(rho123: &FockDensityMatrix) -> Result<ConditionalBlocks> {
    if rho123.basis().n_modes() != 3 {
        return Err(OpoError::InvalidParams("conditional_blocks expects a 3-mode state".into()));
    }
    if rho123.basis().cutoffs()[0] < 1 {
        return Err(OpoError::InvalidParams("trigger-mode cutoff must be at least 1".into()));
    }
    let rho1 = rho123.slice_mode(0, 1, 1)?;
    let rho0 = rho123.slice_mode(0, 0, 0)?;
    let rho_int = rho123.slice_mode(0, 1, 0)?;
    let trace1 = rho1.trace().re;
    let trace0 = rho0.trace().re;
    Ok(ConditionalBlocks { rho0, rho1, rho_int, trace0, trace1 })
}

/// Which four-mode combination to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatKind {
    /// All four dyads, including the interference pair.
    Cat,
    /// Diagonal dyads only; no interference.
    Mixture,
}

/// Mode basis the assembly is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyBasis {
    /// Crystal e/o basis: blocks on (2e,3o) and (2o,3e).
    EO,
    /// ±45° rotated basis.
    Pm45,
    /// d± combined basis.
    Dpm,
}

/// The heralded four-mode state in factorized form: identical blocks for
/// both groups, the herald probability P = Tr[ρ⁽¹⁾]·Tr[ρ⁽⁰⁾], and the
/// polarization-projection factor (1/2) reported separately.
#[derive(Debug, Clone)]
pub struct CatAssembly {
    blocks: ConditionalBlocks,
    rho_int_dag: FockDensityMatrix,
    p_herald: f64,
    mode_basis: AssemblyBasis,
}

/// Success probability of the π/4 polarization projection alone.
pub const POLARIZATION_SUCCESS: f64 = 0.5;

/// Build the cat/mixture assembly from one group's blocks (the two groups
/// are identical by construction).
pub fn assemble_cat_and_mixture(blocks: ConditionalBlocks) -> Result<CatAssembly> {
    if blocks.trace1 <= 0.0 {
        return Err(OpoError::ZeroHeraldProbability);
    }
    let rho_int_dag = blocks.rho_int.dagger();
    let p_herald = blocks.trace1 * blocks.trace0;
    Ok(CatAssembly { blocks, rho_int_dag, p_herald, mode_basis: AssemblyBasis::EO })
}

impl CatAssembly {
    pub fn blocks(&self) -> &ConditionalBlocks {
        &self.blocks
    }

    /// Full herald probability P(π/4) = Tr[ρ⁽¹⁾]·Tr[ρ⁽⁰⁾].
    pub fn p_herald(&self) -> f64 {
        self.p_herald
    }

    pub fn mode_basis(&self) -> AssemblyBasis {
        self.mode_basis
    }

    pub fn with_basis(mut self, basis: AssemblyBasis) -> Self {
        self.mode_basis = basis;
        self
    }

    /// The four dyads (A-factor, B-factor) of the cat in assembly order;
    /// the mixture keeps only the first two.
    fn dyads(&self, kind: CatKind) -> Vec<(&FockDensityMatrix, &FockDensityMatrix)> {
        let mut d = vec![(&self.blocks.rho1, &self.blocks.rho0), (&self.blocks.rho0, &self.blocks.rho1)];
        if kind == CatKind::Cat {
            d.push((&self.blocks.rho_int, &self.rho_int_dag));
            d.push((&self.rho_int_dag, &self.blocks.rho_int));
        }
        d
    }

    /// Expectation of a sum of cross terms on the normalized cat or
    /// mixture, computed factor-wise: each dyad contributes
    /// Tr[ρ_A·w_A]·Tr[ρ_B·w_B], and the assembly normalization is
    /// 1/(2·Tr[ρ⁽¹⁾]·Tr[ρ⁽⁰⁾]).
    pub fn expectation(&self, terms: &[CrossTerm], kind: CatKind) -> Result<Complex64> {
        let mut total = Complex64::ZERO;
        for (coeff, word_a, word_b) in terms {
            let mut term_sum = Complex64::ZERO;
            for (block_a, block_b) in self.dyads(kind) {
                let tr_a = block_a.moment(word_a)?;
                let tr_b = block_b.moment(word_b)?;
                term_sum += tr_a * tr_b;
            }
            total += coeff * term_sum;
        }
        Ok(total / (2.0 * self.p_herald))
    }

    /// Materialize the normalized four-mode state, ordered
    /// (A: modes 2e, 3o) ⊗ (B: modes 2o, 3e). Intended for small cutoffs;
    /// used to validate the factor-wise path.
    pub fn materialize(&self, kind: CatKind) -> Result<FockDensityMatrix> {
        let mut out: Option<FockDensityMatrix> = None;
        for (block_a, block_b) in self.dyads(kind) {
            let prod = block_a.tensor(block_b)?;
            out = Some(match out {
                None => prod,
                Some(mut acc) => {
                    acc.add_assign_scaled(&prod, Complex64::ONE)?;
                    acc
                }
            });
        }
        let mut state = out.expect("at least two dyads");
        state.scale(1.0 / (2.0 * self.p_herald));
        Ok(state)
    }
}

/// Herald in the +45° basis: the conditional detection of exactly one
/// photon in the rotated trigger mode. Because the ±45° groups obey the
/// same master equation as the e/o groups, the input is a three-mode run
/// in the rotated basis, and the result is the normalized
/// ρ⁽¹⁾ on modes (+45,2; +45,3).
pub fn herald_45basis(rho_plus123: &FockDensityMatrix) -> Result<FockDensityMatrix> {
    if rho_plus123.basis().n_modes() != 3 {
        return Err(OpoError::InvalidParams("herald_45basis expects a 3-mode state".into()));
    }
    let rho1 = rho_plus123.slice_mode(0, 1, 1)?;
    let tr = rho1.trace().re;
    if tr <= 0.0 {
        return Err(OpoError::ZeroHeraldProbability);
    }
    let mut out = rho1;
    out.scale(1.0 / tr);
    Ok(out)
}

/// Combine the two +45° modes into d± = (a₊₄₅,₂ ± a₊₄₅,₃)/√2, project the
/// d₋ mode onto α|0⟩ + β|1⟩, and return the normalized d₊ state together
/// with the conditional success probability.
///
/// The pair is embedded to the summed cutoff before the beam-splitter so
/// the mix is exact on the state's entire support.
pub fn to_dpm_and_condition(
    rho45: &FockDensityMatrix,
    amps: &ComplexAmplitudePair,
) -> Result<(FockDensityMatrix, f64)> {
    if rho45.basis().n_modes() != 2 {
        return Err(OpoError::InvalidParams("to_dpm_and_condition expects a 2-mode state".into()));
    }
    let tr_in = rho45.trace().re;
    if tr_in <= 0.0 {
        return Err(OpoError::ZeroHeraldProbability);
    }
    let c_sum = rho45.basis().cutoffs()[0] + rho45.basis().cutoffs()[1];
    let embedded = rho45.embed(&[c_sum, c_sum])?;
    let mixed = embedded.apply_balanced_mix(0, 1)?;

    let d_minus_dim = mixed.basis().dims()[1];
    let mut ket = vec![Complex64::ZERO; d_minus_dim];
    ket[0] = amps.alpha();
    ket[1] = amps.beta();
    let projected = mixed.project_mode(1, &ket)?;
    let p_cond = projected.trace().re / tr_in;
    if p_cond <= 0.0 {
        return Err(OpoError::ZeroHeraldProbability);
    }
    let d_plus = projected.normalized()?;
    Ok((d_plus, p_cond))
}
