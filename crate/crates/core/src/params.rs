//! Node-specific model parameters and their canonical flat layout.

use ndarray::Array2;

use crate::error::{MegError, Result};
use crate::events::GraphKind;
use crate::model::ModelSpec;
use crate::scalar::Real;

/// The twelve parameter blocks, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Alpha,
    Mu,
    Phi,
    Beta,
    MuDst,
    PhiDst,
    Gamma,
    Nu,
    Theta,
    GammaDst,
    NuDst,
    ThetaDst,
}

impl Block {
    pub const ALL: [Block; 12] = [
        Block::Alpha,
        Block::Mu,
        Block::Phi,
        Block::Beta,
        Block::MuDst,
        Block::PhiDst,
        Block::Gamma,
        Block::Nu,
        Block::Theta,
        Block::GammaDst,
        Block::NuDst,
        Block::ThetaDst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Alpha => "alpha",
            Block::Mu => "mu",
            Block::Phi => "phi",
            Block::Beta => "beta",
            Block::MuDst => "mu_dst",
            Block::PhiDst => "phi_dst",
            Block::Gamma => "gamma",
            Block::Nu => "nu",
            Block::Theta => "theta",
            Block::GammaDst => "gamma_dst",
            Block::NuDst => "nu_dst",
            Block::ThetaDst => "theta_dst",
        }
    }

    pub fn from_name(name: &str) -> Option<Block> {
        Block::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn is_matrix(self) -> bool {
        matches!(
            self,
            Block::Gamma | Block::Nu | Block::Theta | Block::GammaDst | Block::NuDst | Block::ThetaDst
        )
    }

    pub fn is_source_side(self) -> bool {
        matches!(
            self,
            Block::Alpha | Block::Mu | Block::Phi | Block::Gamma | Block::Nu | Block::Theta
        )
    }
}

/// Which blocks exist, and their shapes, for a graph and model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_src: usize,
    pub n_dst: usize,
    pub dim: usize,
    pub spec: ModelSpec,
}

impl Layout {
    pub fn new(kind: GraphKind, spec: ModelSpec) -> Self {
        Self {
            n_src: kind.n_src(),
            n_dst: kind.n_dst(),
            dim: spec.dim,
            spec,
        }
    }

    /// `(rows, cols)` of a block; zero rows when the block is absent.
    pub fn shape(&self, block: Block) -> (usize, usize) {
        let present = match block {
            Block::Alpha | Block::Beta => self.spec.main.is_some(),
            Block::Mu | Block::Phi | Block::MuDst | Block::PhiDst => self.spec.main_excites(),
            Block::Gamma | Block::GammaDst => self.spec.interaction.is_some(),
            Block::Nu | Block::Theta | Block::NuDst | Block::ThetaDst => self.spec.interaction_excites(),
        };
        let rows = match (present, block.is_source_side()) {
            (false, _) => 0,
            (true, true) => self.n_src,
            (true, false) => self.n_dst,
        };
        let cols = if block.is_matrix() { self.dim } else { 1 };
        (rows, cols)
    }

    pub fn block_len(&self, block: Block) -> usize {
        let (r, c) = self.shape(block);
        r * c
    }

    pub fn len(&self) -> usize {
        Block::ALL.iter().map(|&b| self.block_len(b)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of the first entry of `block` in the flat vector.
    pub fn offset(&self, block: Block) -> usize {
        Block::ALL
            .iter()
            .take_while(|&&b| b != block)
            .map(|&b| self.block_len(b))
            .sum()
    }

    /// Human-readable name of every flat entry, e.g. `gamma[3,1]`.
    pub fn entry_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.len());
        for block in Block::ALL {
            let (rows, cols) = self.shape(block);
            for r in 0..rows {
                if block.is_matrix() {
                    for q in 0..cols {
                        names.push(format!("{}[{r},{q}]", block.name()));
                    }
                } else {
                    names.push(format!("{}[{r}]", block.name()));
                }
            }
        }
        names
    }
}

/// All node-specific parameters. Absent components carry empty blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<S> {
    pub alpha: Vec<S>,
    pub mu: Vec<S>,
    pub phi: Vec<S>,
    pub beta: Vec<S>,
    pub mu_dst: Vec<S>,
    pub phi_dst: Vec<S>,
    pub gamma: Array2<S>,
    pub nu: Array2<S>,
    pub theta: Array2<S>,
    pub gamma_dst: Array2<S>,
    pub nu_dst: Array2<S>,
    pub theta_dst: Array2<S>,
}

impl<S: Real> Params<S> {
    /// Every present entry set to `value`.
    pub fn filled(layout: &Layout, value: S) -> Self {
        Self::from_fn(layout, |_, _, _| value)
    }

    /// Builds each present entry from `(block, row, col)`.
    pub fn from_fn(layout: &Layout, mut f: impl FnMut(Block, usize, usize) -> S) -> Self {
        let mut vec_block = |b: Block| {
            let (rows, _) = layout.shape(b);
            (0..rows).map(|r| f(b, r, 0)).collect::<Vec<S>>()
        };
        let alpha = vec_block(Block::Alpha);
        let mu = vec_block(Block::Mu);
        let phi = vec_block(Block::Phi);
        let beta = vec_block(Block::Beta);
        let mu_dst = vec_block(Block::MuDst);
        let phi_dst = vec_block(Block::PhiDst);
        let mut mat_block = |b: Block| {
            let (rows, cols) = layout.shape(b);
            Array2::from_shape_fn((rows, cols), |(r, q)| f(b, r, q))
        };
        Self {
            alpha,
            mu,
            phi,
            beta,
            mu_dst,
            phi_dst,
            gamma: mat_block(Block::Gamma),
            nu: mat_block(Block::Nu),
            theta: mat_block(Block::Theta),
            gamma_dst: mat_block(Block::GammaDst),
            nu_dst: mat_block(Block::NuDst),
            theta_dst: mat_block(Block::ThetaDst),
        }
    }

    pub fn block(&self, block: Block) -> &[S] {
        match block {
            Block::Alpha => &self.alpha,
            Block::Mu => &self.mu,
            Block::Phi => &self.phi,
            Block::Beta => &self.beta,
            Block::MuDst => &self.mu_dst,
            Block::PhiDst => &self.phi_dst,
            Block::Gamma => self.gamma.as_slice().expect("standard layout"),
            Block::Nu => self.nu.as_slice().expect("standard layout"),
            Block::Theta => self.theta.as_slice().expect("standard layout"),
            Block::GammaDst => self.gamma_dst.as_slice().expect("standard layout"),
            Block::NuDst => self.nu_dst.as_slice().expect("standard layout"),
            Block::ThetaDst => self.theta_dst.as_slice().expect("standard layout"),
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [S] {
        match block {
            Block::Alpha => &mut self.alpha,
            Block::Mu => &mut self.mu,
            Block::Phi => &mut self.phi,
            Block::Beta => &mut self.beta,
            Block::MuDst => &mut self.mu_dst,
            Block::PhiDst => &mut self.phi_dst,
            Block::Gamma => self.gamma.as_slice_mut().expect("standard layout"),
            Block::Nu => self.nu.as_slice_mut().expect("standard layout"),
            Block::Theta => self.theta.as_slice_mut().expect("standard layout"),
            Block::GammaDst => self.gamma_dst.as_slice_mut().expect("standard layout"),
            Block::NuDst => self.nu_dst.as_slice_mut().expect("standard layout"),
            Block::ThetaDst => self.theta_dst.as_slice_mut().expect("standard layout"),
        }
    }

    /// Flat vector in canonical block order.
    pub fn to_flat(&self) -> Vec<S> {
        Block::ALL.iter().flat_map(|&b| self.block(b).iter().copied()).collect()
    }

    pub fn from_flat(layout: &Layout, flat: &[S]) -> Result<Self> {
        if flat.len() != layout.len() {
            return Err(MegError::InvalidParams(format!(
                "flat vector has {} entries, layout needs {}",
                flat.len(),
                layout.len()
            )));
        }
        let mut params = Self::filled(layout, S::zero());
        let mut at = 0;
        for b in Block::ALL {
            let dst = params.block_mut(b);
            dst.copy_from_slice(&flat[at..at + dst.len()]);
            at += dst.len();
        }
        Ok(params)
    }

    /// Applies `f` entrywise.
    pub fn map(&self, mut f: impl FnMut(S) -> S) -> Self {
        let mut out = self.clone();
        for b in Block::ALL {
            out.block_mut(b).iter_mut().for_each(|v| *v = f(*v));
        }
        out
    }

    pub fn cast<T: Real>(&self) -> Params<T> {
        let conv = |v: &[S]| {
            v.iter()
                .map(|x| T::from_f64_lossy(x.to_f64_lossy()))
                .collect::<Vec<T>>()
        };
        let conv_m = |m: &Array2<S>| m.mapv(|x| T::from_f64_lossy(x.to_f64_lossy()));
        Params {
            alpha: conv(&self.alpha),
            mu: conv(&self.mu),
            phi: conv(&self.phi),
            beta: conv(&self.beta),
            mu_dst: conv(&self.mu_dst),
            phi_dst: conv(&self.phi_dst),
            gamma: conv_m(&self.gamma),
            nu: conv_m(&self.nu),
            theta: conv_m(&self.theta),
            gamma_dst: conv_m(&self.gamma_dst),
            nu_dst: conv_m(&self.nu_dst),
            theta_dst: conv_m(&self.theta_dst),
        }
    }

    /// Checks block shapes against the layout and strict positivity.
    pub fn validate(&self, layout: &Layout) -> Result<()> {
        for b in Block::ALL {
            let (rows, cols) = layout.shape(b);
            let ok = if b.is_matrix() {
                let m = match b {
                    Block::Gamma => &self.gamma,
                    Block::Nu => &self.nu,
                    Block::Theta => &self.theta,
                    Block::GammaDst => &self.gamma_dst,
                    Block::NuDst => &self.nu_dst,
                    _ => &self.theta_dst,
                };
                m.dim() == (rows, cols) || (rows == 0 && m.is_empty())
            } else {
                self.block(b).len() == rows
            };
            if !ok {
                return Err(MegError::InvalidParams(format!(
                    "block {} has the wrong shape (expected {rows}x{cols})",
                    b.name()
                )));
            }
            if let Some((k, v)) = self
                .block(b)
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > S::zero()))
            {
                return Err(MegError::InvalidParams(format!(
                    "{}[{k}] = {v} is not a finite positive number",
                    b.name()
                )));
            }
        }
        Ok(())
    }

    /// Constant part of the edge intensity: main baselines plus the inner product.
    pub fn baseline(&self, i: usize, j: usize) -> S {
        self.main_baseline(i, j) + self.inner_product(i, j)
    }

    /// `alpha_i + beta_j` (zero when main effects are absent).
    pub fn main_baseline(&self, i: usize, j: usize) -> S {
        if self.alpha.is_empty() {
            S::zero()
        } else {
            self.alpha[i] + self.beta[j]
        }
    }

    /// `gamma_i . gamma'_j` (zero when interactions are absent).
    pub fn inner_product(&self, i: usize, j: usize) -> S {
        if self.gamma.is_empty() {
            return S::zero();
        }
        self.gamma
            .row(i)
            .iter()
            .zip(self.gamma_dst.row(j))
            .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// Source-node decay rate `mu_i + phi_i`.
    pub fn src_decay(&self, i: usize) -> S {
        self.mu[i] + self.phi[i]
    }

    /// Destination-node decay rate `mu'_j + phi'_j`.
    pub fn dst_decay(&self, j: usize) -> S {
        self.mu_dst[j] + self.phi_dst[j]
    }

    /// Interaction decay rate `(nu_iq + theta_iq)(nu'_jq + theta'_jq)`.
    pub fn interaction_decay(&self, i: usize, j: usize, q: usize) -> S {
        (self.nu[[i, q]] + self.theta[[i, q]]) * (self.nu_dst[[j, q]] + self.theta_dst[[j, q]])
    }

    /// Interaction jump `nu_iq nu'_jq`.
    pub fn interaction_jump(&self, i: usize, j: usize, q: usize) -> S {
        self.nu[[i, q]] * self.nu_dst[[j, q]]
    }
}
