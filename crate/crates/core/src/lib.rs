//! Numerical laboratory for homoclinic tangencies of saddles, index
//! variation under unfolding, and blenders.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectra`] classifies saddle multipliers and the rotation family.
//! * [`local_model`] holds the linearised neighbourhood, the transition map
//!   near a tangency, strips, return maps and the expansion experiments.
//! * [`unfolding`] adds the parameters `(t, alpha, beta)`, finds single-round
//!   saddles and searches for heterodimensional-cycle witnesses.
//! * [`blender`] checks covering and superposition for affine blenders and
//!   product blenders, and locates tangencies with a foliation.
//! * [`entropy`] evaluates the entropy-gap inequalities on horseshoes.
//! * [`cones`] verifies dominated splittings and cone invariance.
//! * [`cli`] is the batch front-end used by the `blenderlab` binary.

pub mod blender;
pub mod cli;
pub mod cones;
pub mod entropy;
pub mod geometry;
pub mod linalg;
pub mod local_model;
pub mod presets;
pub mod spectra;
pub mod unfolding;

use thiserror::Error;

/// Any domain error raised by one of the modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spectra(#[from] spectra::SpectraError),
    #[error(transparent)]
    Model(#[from] local_model::ModelError),
    #[error(transparent)]
    Unfolding(#[from] unfolding::UnfoldingError),
    #[error(transparent)]
    Blender(#[from] blender::BlenderError),
    #[error(transparent)]
    Entropy(#[from] entropy::EntropyError),
    #[error(transparent)]
    Cones(#[from] cones::ConeError),
}

impl Error {
    /// Name of the underlying error variant, e.g. `"UnitModulus"`.
    pub fn name(&self) -> String {
        let dbg = match self {
            Error::Spectra(e) => format!("{e:?}"),
            Error::Model(e) => format!("{e:?}"),
            Error::Unfolding(e) => match e {
                unfolding::UnfoldingError::Model(inner) => format!("{inner:?}"),
                other => format!("{other:?}"),
            },
            Error::Blender(e) => format!("{e:?}"),
            Error::Entropy(e) => format!("{e:?}"),
            Error::Cones(e) => format!("{e:?}"),
        };
        variant_name(&dbg)
    }
}

fn variant_name(debug: &str) -> String {
    debug
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or_default()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_names_are_variant_names() {
        let e: Error = spectra::SpectraError::UnitModulus { index: 0, modulus: 1.0 }.into();
        assert_eq!(e.name(), "UnitModulus");
        let e: Error = spectra::SpectraError::NotSimple.into();
        assert_eq!(e.name(), "NotSimple");
        let e: Error = local_model::ModelError::LeftNeighborhood(3).into();
        assert_eq!(e.name(), "LeftNeighborhood");
    }
}
