/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Entrywise comparisons (Hermiticity, trace, partial-transpose invariance).
    pub entrywise: f64,
    /// Spectral comparisons (PSD tests, eigen-residuals).
    pub spectral: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        entrywise: 1e-12,
        spectral: 1e-10,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
