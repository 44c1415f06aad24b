//! Light sources: downconversion biphotons and classically correlated beams.

pub mod classical;
pub mod spdc;

pub use classical::{ClassicalSpectrum, SpectrumShape};
pub use spdc::{
    b_integral, c_integral, entangled_rate_constant, phase_mismatch, sinc, spdc_spectrum, NuQuadrature, SpdcParams,
};

/// A correlated-photon source.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Spdc(SpdcParams),
    Classical(ClassicalSpectrum),
}

impl SourceSpec {
    pub fn kind(&self) -> SourceKind {
        match self {
            SourceSpec::Spdc(_) => SourceKind::Spdc,
            SourceSpec::Classical(_) => SourceKind::Classical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Spdc,
    Classical,
}
