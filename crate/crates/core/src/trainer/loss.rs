//! Margin contrastive loss on cosine similarity.
//!
//! ```text
//! l = 1 - cos            for same-sentiment pairs  (y = +1)
//! l = max(0, cos - m)    for different-sentiment pairs (y = -1)
//! ```

use crate::{Error, Result};

/// Contrastive margin, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Margin(f64);

impl Margin {
    pub const DEFAULT: Margin = Margin(0.5);

    pub fn new(m: f64) -> Result<Self> {
        if m > 0.0 && m < 1.0 {
            Ok(Margin(m))
        } else {
            Err(Error::invalid("margin", alloc::format!("{m} is outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Margin {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// `y` of a training pair: +1 for same sentiment, -1 for different.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Similar,
    Dissimilar,
}

impl PairLabel {
    pub fn from_value(y: i64) -> Result<Self> {
        match y {
            1 => Ok(PairLabel::Similar),
            -1 => Ok(PairLabel::Dissimilar),
            other => Err(Error::InvalidPairLabel(other)),
        }
    }

    pub fn value(self) -> i64 {
        match self {
            PairLabel::Similar => 1,
            PairLabel::Dissimilar => -1,
        }
    }

    pub fn loss(self, cosine: f64, margin: Margin) -> f64 {
        match self {
            PairLabel::Similar => 1.0 - cosine,
            PairLabel::Dissimilar => (cosine - margin.0).max(0.0),
        }
    }

    /// d loss / d cosine. The hinge is flat at exactly `cos = m`.
    pub fn slope(self, cosine: f64, margin: Margin) -> f64 {
        match self {
            PairLabel::Similar => -1.0,
            PairLabel::Dissimilar if cosine > margin.0 => 1.0,
            PairLabel::Dissimilar => 0.0,
        }
    }
}

/// Loss for a raw label value `y` in `{-1, 1}` and margin `m` in `(0, 1)`.
pub fn contrastive_loss(cosine: f64, y: i64, m: f64) -> Result<f64> {
    let label = PairLabel::from_value(y)?;
    Ok(label.loss(cosine, Margin::new(m)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_table() {
        let cases = [(1.0, 1, 0.0), (0.3, -1, 0.0), (0.8, -1, 0.3), (0.25, 1, 0.75)];
        for (c, y, want) in cases {
            let got = contrastive_loss(c, y, 0.5).unwrap();
            assert!((got - want).abs() < 1e-12, "c={c} y={y}: {got} != {want}");
        }
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(contrastive_loss(0.5, 0, 0.5), Err(Error::InvalidPairLabel(0)));
        assert!(contrastive_loss(0.5, 1, 1.0).is_err());
        assert!(contrastive_loss(0.5, 1, 0.0).is_err());
    }

    #[test]
    fn slopes() {
        let m = Margin::DEFAULT;
        assert_eq!(PairLabel::Similar.slope(0.9, m), -1.0);
        assert_eq!(PairLabel::Dissimilar.slope(0.7, m), 1.0);
        assert_eq!(PairLabel::Dissimilar.slope(0.5, m), 0.0);
        assert_eq!(PairLabel::Dissimilar.slope(0.1, m), 0.0);
    }
}
