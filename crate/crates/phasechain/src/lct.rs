//! Generalized linear chain trick: compile a [`DelaySystem`] into the
//! padded augmented linear ODE `dy/dt = C y`.
//!
//! Each memory term `b K(t-s) ⋆ x_j` with a phase-type kernel is traded for
//! an auxiliary block `gamma` obeying `dgamma/dt = Gᵀ gamma + alpha x_j`;
//! the convolution is recovered as `1ᵀ gamma`. The augmented operator is
//! laid out as `[[A, B'], [E, G']]` and zero-padded so that every row of
//! the original system owns `s` uniform slots of width `g`.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::phasetype::PhaseType;
use crate::sparse::CooMatrix;
use crate::C64;

/// How kernels that do not integrate to one are handled.
///
/// The augmented dynamics recovers the convolution against the *raw*
/// survival function, which integrates to the kernel's mean. `Auto`
/// rescales the term weight by `1/mean` so the effective memory term is
/// always `weight` times the unit-mass kernel; `Strict` rejects kernels
/// whose mean differs from one by more than `1e-9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Auto,
    Strict,
}

/// One memory coupling `b K(t-s) ⋆ x_col` feeding row `row`.
///
/// Indices are zero-based. Multiple terms on the same `(row, col)` pair are
/// allowed; each occupies its own slot in the augmented layout.
#[derive(Debug, Clone)]
pub struct KernelTerm {
    pub row: usize,
    pub col: usize,
    pub weight: C64,
    pub kernel: PhaseType,
}

/// Sparsity accounting of a delay system: `s_a` is the max nonzeros per row
/// of `A`, `s_b` the max number of kernel terms per row, `g` the largest
/// kernel dimension, and `s` the slot count of the padded layout (equal to
/// `s_b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityInfo {
    pub s_a: usize,
    pub s_b: usize,
    pub g: usize,
    pub s: usize,
}

/// A linear distributed-delay system
/// `dx/dt = A x + sum_terms b (K ⋆ x_col)`.
#[derive(Debug, Clone)]
pub struct DelaySystem {
    dim: usize,
    a: CooMatrix,
    terms: Vec<KernelTerm>,
    normalization: Normalization,
    /// Per-term weight actually applied to the raw survival kernel.
    effective_weights: Vec<C64>,
}

impl DelaySystem {
    pub fn new(
        dim: usize,
        a_triplets: Vec<(usize, usize, C64)>,
        terms: Vec<KernelTerm>,
        normalization: Normalization,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("system dimension must be >= 1".into()));
        }
        let a = CooMatrix::from_triplets(dim, dim, a_triplets)?;
        let mut effective_weights = Vec::with_capacity(terms.len());
        for (idx, term) in terms.iter().enumerate() {
            if term.row >= dim || term.col >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "kernel term {idx} references ({}, {}) outside dimension {dim}",
                    term.row, term.col
                )));
            }
            let report = term.kernel.validate()?;
            if !report.is_valid() {
                return Err(Error::InvalidPhaseType(format!(
                    "kernel term {idx}: {}",
                    report.violations.join("; ")
                )));
            }
            let mean = term.kernel.mean()?;
            let w = match normalization {
                Normalization::Strict => {
                    if (mean - 1.0).abs() > 1e-9 {
                        return Err(Error::Spec(format!(
                            "kernel term {idx} has mean {mean}; strict normalization requires \
                             unit-mass kernels (use auto normalization or rescale)"
                        )));
                    }
                    term.weight
                }
                Normalization::Auto => term.weight / mean,
            };
            effective_weights.push(w);
        }
        Ok(Self { dim, a, terms, normalization, effective_weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &CooMatrix {
        &self.a
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Weight applied to the raw survival function of term `idx` (the user
    /// weight divided by the kernel mean under `Auto`).
    pub fn effective_weight(&self, idx: usize) -> C64 {
        self.effective_weights[idx]
    }

    pub fn sparsity(&self) -> SparsityInfo {
        let mut per_row = vec![0usize; self.dim];
        let mut g = 0usize;
        for term in &self.terms {
            per_row[term.row] += 1;
            g = g.max(term.kernel.dim());
        }
        let s_b = per_row.iter().copied().max().unwrap_or(0);
        SparsityInfo { s_a: self.a.max_row_nnz(), s_b, g, s: s_b }
    }
}

/// One auxiliary slot in the padded layout: which term it carries and the
/// kernel's true dimension (columns beyond it are padding).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub col: usize,
    pub kernel_dim: usize,
    pub term_index: usize,
}

/// Index layout of the padded augmented vector
/// `(x, gamma^{(0,·)}, ..., gamma^{(N-1,·)})` of dimension `N (1 + g s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub g: usize,
    pub s: usize,
    /// `slots[i]` lists the occupied slots of row `i`, in term order.
    pub slots: Vec<Vec<Slot>>,
}

impl Layout {
    /// Padded dimension `N (1 + g s)`.
    pub fn dim(&self) -> usize {
        self.n * (1 + self.g * self.s)
    }

    /// Total auxiliary dimension before padding, `M = sum dim(alpha)`.
    pub fn aux_dim_unpadded(&self) -> usize {
        self.slots.iter().flatten().map(|slot| slot.kernel_dim).sum()
    }

    /// Flat index of component `comp` of the auxiliary vector in `slot` of
    /// row `row` (all zero-based): `N + row·gs + slot·g + comp`.
    pub fn index_of(&self, row: usize, slot: usize, comp: usize) -> Result<usize> {
        if row >= self.n {
            return Err(Error::DimensionMismatch(format!("row {row} outside 0..{}", self.n)));
        }
        let slots = &self.slots[row];
        if slot >= slots.len() {
            return Err(Error::DimensionMismatch(format!(
                "slot {slot} exceeds the {} occupied slots of row {row}",
                slots.len()
            )));
        }
        if comp >= slots[slot].kernel_dim {
            return Err(Error::DimensionMismatch(format!(
                "component {comp} exceeds kernel dimension {} of row {row} slot {slot}",
                slots[slot].kernel_dim
            )));
        }
        Ok(self.n + row * self.g * self.s + slot * self.g + comp)
    }
}

/// The compiled augmented system `dy/dt = Cbar y`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub cbar: CooMatrix,
    pub layout: Layout,
}

/// Unpadded blocks of the augmented operator, in slot order:
/// `C = [[A, B'], [E, G']]` of dimension `N + M`.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub n: usize,
    pub m: usize,
    pub a: CooMatrix,
    pub bprime: CooMatrix,
    pub e: CooMatrix,
    pub gprime: CooMatrix,
}

impl Blocks {
    /// Assemble the dense unpadded operator `[[A, B'], [E, G']]`.
    pub fn to_dense_c(&self) -> ndarray::Array2<C64> {
        let dim = self.n + self.m;
        let mut c = ndarray::Array2::zeros((dim, dim));
        for &(r, col, v) in self.a.triplets() {
            c[[r, col]] = v;
        }
        for &(r, col, v) in self.bprime.triplets() {
            c[[r, self.n + col]] = v;
        }
        for &(r, col, v) in self.e.triplets() {
            c[[self.n + r, col]] = v;
        }
        for &(r, col, v) in self.gprime.triplets() {
            c[[self.n + r, self.n + col]] = v;
        }
        c
    }
}

fn build_layout(sys: &DelaySystem) -> Result<Layout> {
    if sys.terms().is_empty() {
        return Err(Error::NoMemoryTerms);
    }
    let info = sys.sparsity();
    let mut slots: Vec<Vec<Slot>> = vec![Vec::new(); sys.dim()];
    for (idx, term) in sys.terms().iter().enumerate() {
        slots[term.row].push(Slot {
            col: term.col,
            kernel_dim: term.kernel.dim(),
            term_index: idx,
        });
    }
    Ok(Layout { n: sys.dim(), g: info.g, s: info.s, slots })
}

/// Unpadded block assembly. The auxiliary coordinates are concatenated in
/// slot order (row-major over the original system, then slot, then kernel
/// component).
pub fn assemble_blocks(sys: &DelaySystem) -> Result<Blocks> {
    let layout = build_layout(sys)?;
    let n = sys.dim();
    let m = layout.aux_dim_unpadded();

    let mut bprime = Vec::new();
    let mut e = Vec::new();
    let mut gprime = Vec::new();

    let mut offset = 0usize; // running index into the unpadded aux block
    for slots in &layout.slots {
        for slot in slots {
            let term = &sys.terms()[slot.term_index];
            let w = sys.effective_weight(slot.term_index);
            let gk = slot.kernel_dim;
            let alpha = term.kernel.alpha();
            let gen = term.kernel.generator();
            for k in 0..gk {
                // x-row: b * 1ᵀ gamma
                bprime.push((term.row, offset + k, w));
                // gamma-row: alpha x_col + Gᵀ gamma
                e.push((offset + k, term.col, C64::new(alpha[k], 0.0)));
                for k2 in 0..gk {
                    let gv = gen[[k2, k]]; // (Gᵀ)[k, k2]
                    if gv != 0.0 {
                        gprime.push((offset + k, offset + k2, C64::new(gv, 0.0)));
                    }
                }
            }
            offset += gk;
        }
    }

    Ok(Blocks {
        n,
        m,
        a: sys.a().clone(),
        bprime: CooMatrix::from_triplets(n, m, bprime)?,
        e: CooMatrix::from_triplets(m, n, e)?,
        gprime: CooMatrix::from_triplets(m, m, gprime)?,
    })
}

/// Compile a delay system into its padded augmented operator.
pub fn augment(sys: &DelaySystem) -> Result<AugmentedSystem> {
    let layout = build_layout(sys)?;
    let dim = layout.dim();
    let mut triplets: Vec<(usize, usize, C64)> =
        sys.a().triplets().iter().copied().collect();

    for (i, slots) in layout.slots.iter().enumerate() {
        for (slot_idx, slot) in slots.iter().enumerate() {
            let term = &sys.terms()[slot.term_index];
            let w = sys.effective_weight(slot.term_index);
            let alpha = term.kernel.alpha();
            let gen = term.kernel.generator();
            for k in 0..slot.kernel_dim {
                let idx = layout.index_of(i, slot_idx, k)?;
                triplets.push((i, idx, w));
                triplets.push((idx, term.col, C64::new(alpha[k], 0.0)));
                for k2 in 0..slot.kernel_dim {
                    let gv = gen[[k2, k]];
                    if gv != 0.0 {
                        let idx2 = layout.index_of(i, slot_idx, k2)?;
                        triplets.push((idx, idx2, C64::new(gv, 0.0)));
                    }
                }
            }
        }
    }

    Ok(AugmentedSystem { cbar: CooMatrix::from_triplets(dim, dim, triplets)?, layout })
}

/// Pad an initial state: `y0 = (x0, 0, ..., 0)`; the auxiliary variables
/// always start at zero.
pub fn initial_augmented(x0: &ArrayView1<C64>, layout: &Layout) -> Result<Array1<C64>> {
    if x0.len() != layout.n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {} but the system dimension is {}",
            x0.len(),
            layout.n
        )));
    }
    let mut y = Array1::zeros(layout.dim());
    y.slice_mut(ndarray::s![..layout.n]).assign(x0);
    Ok(y)
}

/// First `N` components of a padded vector.
pub fn extract_x(y: &ArrayView1<C64>, layout: &Layout) -> Result<Array1<C64>> {
    if y.len() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "padded vector has length {} but the layout dimension is {}",
            y.len(),
            layout.dim()
        )));
    }
    Ok(y.slice(ndarray::s![..layout.n]).to_owned())
}
