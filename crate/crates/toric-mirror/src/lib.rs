//! A-model and B-model sides of toric-orbifold mirror symmetry at desk scale.
//!
//! The crate builds a toric Deligne-Mumford stack from integer initial data
//! (rank of the torus lattice, ray weights, a stability vector), computes its
//! orbifold cohomology and Gamma-class integral structure, expands the
//! I/H hypergeometric series with exact rational coefficients, constructs the
//! Landau-Ginzburg mirror potential, and verifies the central-charge
//! identities between the two sides -- exactly where arithmetic permits,
//! numerically (with certified quadrature estimates) where it does not.
//!
//! Modules mirror the pipeline:
//! - [`lattice`]: Smith normal form, cokernels with torsion, exact cone membership
//! - [`stack`]: anticones, stacky fan, Box sectors, ages, nef basis, K_eff
//! - [`cohomology`]: sector rings, integration, orbifold Poincare pairing
//! - [`chern`]: Chern character, Gamma/Todd classes, Riemann-Roch, K-framing
//! - [`hypergeom`]: I-function, mirror map, GKZ operators, H-function, central charges
//! - [`mirror_lg`]: LG potential, Batyrev ring, critical points, residue series
//! - [`oscint`]: oscillatory integrals over the real thimble and compact torus

pub mod chern;
pub mod cohomology;
pub mod error;
pub mod hypergeom;
pub mod lattice;
pub mod mirror_lg;
pub mod oscint;
pub mod rational;
pub mod special;
pub mod stack;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod fixtures;

/// Session-wide configuration.
#[derive(Debug, Clone)]
pub struct Options {
    /// Hypergeometric modules refuse to run without the weak-Fano hypothesis.
    pub weak_fano: bool,
    /// Requested decimal digits for the special-function evaluators.
    pub digits: u32,
    /// Height bound for the nef-basis search.
    pub basis_height: i64,
}

impl Default for Options {
    fn default() -> Self {
        Options { weak_fano: true, digits: 12, basis_height: 8 }
    }
}

/// A validated stack with its nef basis and cohomology, the input to the
/// characteristic-class, hypergeometric and mirror modules.
#[derive(Debug, Clone)]
pub struct Model {
    pub inertia: stack::InertiaData,
    pub basis: stack::NefBasis,
    pub coh: cohomology::Cohomology,
    pub opts: Options,
}

impl Model {
    pub fn build(
        data: stack::StackInitialData,
        user_basis: Option<&lattice::IntMatrix>,
        opts: Options,
    ) -> Result<Model> {
        special::check_digits(opts.digits)?;
        let inertia = stack::validate(data)?;
        let basis = stack::select_nef_basis(&inertia, user_basis, opts.basis_height, opts.weak_fano)?;
        if opts.weak_fano && !basis.weak_fano.rho_in_extended_cone {
            return Err(Error::NotWeakFano);
        }
        let coh = cohomology::Cohomology::build(&inertia, &basis)?;
        Ok(Model { inertia, basis, coh, opts })
    }

    pub fn n(&self) -> usize {
        self.inertia.n
    }
}
