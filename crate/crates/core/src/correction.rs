use serde::{Deserialize, Serialize};

/// Bookkeeping attached to every energy correction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest zeroth-order denominator magnitude encountered.
    pub min_denominator: Option<f64>,
    /// Distinct external determinants (perturbation) or external amplitudes
    /// (coupled cluster).
    pub external_size: Option<usize>,
    pub iterations: Option<usize>,
    /// Free-form settings that affect the number, e.g. `h0=capp-density`.
    pub settings: Vec<String>,
}

/// A reference energy plus a correction.
///
/// The stored `delta_e` is `e_total − e_reference` recomputed after rounding
/// `e_total`, so both `e_reference + delta_e == e_total` and
/// `e_total − delta_e == e_reference` hold bit-exactly whenever the two
/// energies are within a factor of two of each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub e_reference: f64,
    pub delta_e: f64,
    pub e_total: f64,
    pub method: String,
    pub diagnostics: Diagnostics,
}

impl CorrectionResult {
    pub fn new(method: impl Into<String>, e_reference: f64, delta_e: f64, diagnostics: Diagnostics) -> Self {
        let e_total = e_reference + delta_e;
        Self {
            e_reference,
            delta_e: e_total - e_reference,
            e_total,
            method: method.into(),
            diagnostics,
        }
    }
}
