use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, NumAssign};

/// Element precision of a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Binary32,
    Binary64,
}

impl Precision {
    /// Unit roundoff `u` (half the machine epsilon).
    pub fn unit_roundoff(self) -> f64 {
        match self {
            Precision::Binary32 => (2.0f64).powi(-24),
            Precision::Binary64 => (2.0f64).powi(-53),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Precision::Binary32 => "f32",
            Precision::Binary64 => "f64",
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f32" | "binary32" | "single" => Ok(Precision::Binary32),
            "f64" | "binary64" | "double" => Ok(Precision::Binary64),
            other => Err(format!("unknown precision '{other}' (expected f32 or f64)")),
        }
    }
}

/// Real scalar backing a complex matrix: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    const PRECISION: Precision;
    const UNIT_ROUNDOFF: Self;

    fn of_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;

    fn of_usize(n: usize) -> Self {
        Self::of_f64(n as f64)
    }
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Binary32;
    const UNIT_ROUNDOFF: f32 = 5.960_464_5e-8;

    fn of_f64(x: f64) -> Self {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Binary64;
    const UNIT_ROUNDOFF: f64 = 1.110_223_024_625_156_5e-16;

    fn of_f64(x: f64) -> Self {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundoff_constants_match_powers_of_two() {
        assert_eq!(f32::UNIT_ROUNDOFF as f64, Precision::Binary32.unit_roundoff());
        assert_eq!(f64::UNIT_ROUNDOFF, Precision::Binary64.unit_roundoff());
        assert_eq!(f64::UNIT_ROUNDOFF, f64::EPSILON / 2.0);
        assert_eq!(f32::UNIT_ROUNDOFF, f32::EPSILON / 2.0);
    }

    #[test]
    fn parses_precision_names() {
        assert_eq!("f32".parse::<Precision>().unwrap(), Precision::Binary32);
        assert_eq!("binary64".parse::<Precision>().unwrap(), Precision::Binary64);
        assert!("f16".parse::<Precision>().is_err());
    }
}
