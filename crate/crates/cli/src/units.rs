//! Config numbers with optional SI-unit suffixes.
//!
//! A quantity is written either as a bare number (already in SI base units)
//! or as a string such as `"271.5G"`, `"7ms"` or `"10um"`. Each field
//! declares its dimension, and a suffix from another dimension is rejected.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub trait Dimension {
    const NAME: &'static str;
    /// Accepted suffixes with their factor to SI.
    const UNITS: &'static [(&'static str, f64)];
}

macro_rules! dimension {
    ($ty:ident, $name:expr, [$(($u:expr, $f:expr)),* $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $ty;
        impl Dimension for $ty {
            const NAME: &'static str = $name;
            const UNITS: &'static [(&'static str, f64)] = &[$(($u, $f)),*];
        }
    };
}

dimension!(Time, "time", [("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9), ("ps", 1e-12)]);
dimension!(Frequency, "frequency", [("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)]);
dimension!(Rate, "rate", [("rad/s", 1.0), ("krad/s", 1e3), ("/s", 1.0)]);
dimension!(Field, "magnetic field", [("T", 1.0), ("mT", 1e-3), ("uT", 1e-6), ("µT", 1e-6), ("nT", 1e-9), ("G", 1e-4), ("mG", 1e-7)]);
dimension!(Length, "length", [("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)]);
dimension!(Angle, "angle", [("rad", 1.0), ("mrad", 1e-3), ("urad", 1e-6), ("deg", std::f64::consts::PI / 180.0)]);
dimension!(Temperature, "temperature", [("K", 1.0), ("mK", 1e-3)]);
dimension!(Torque, "torque", [("Nm", 1.0), ("N*m", 1.0), ("pNm", 1e-12), ("fNm", 1e-15), ("aNm", 1e-18), ("aN*m", 1e-18)]);
dimension!(Inertia, "moment of inertia", [("kg*m^2", 1.0), ("kgm2", 1.0)]);
dimension!(Density, "density", [("kg/m^3", 1.0), ("g/cm^3", 1e3)]);
dimension!(CountRate, "count rate", [("/s", 1.0), ("/ms", 1e3), ("cps", 1.0)]);
// Count rate per radian of tilt.
dimension!(CountSlope, "count-rate slope", [("/s/rad", 1.0)]);
dimension!(GyroRatio, "gyromagnetic ratio", [("Hz/T", 1.0), ("GHz/T", 1e9), ("MHz/G", 1e10)]);
dimension!(Number, "number", [("%", 1e-2)]);

/// A value in SI base units, tagged with its dimension.
pub struct Q<D> {
    value: f64,
    _dim: PhantomData<D>,
}

impl<D> Q<D> {
    pub const fn new(value: f64) -> Self {
        Q { value, _dim: PhantomData }
    }

    pub fn get(&self) -> f64 {
        self.value
    }
}

impl<D> Clone for Q<D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<D> Copy for Q<D> {}

impl<D> PartialEq for Q<D> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<D> fmt::Debug for Q<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl<D> Default for Q<D> {
    fn default() -> Self {
        Q::new(0.0)
    }
}

impl<D> From<f64> for Q<D> {
    fn from(v: f64) -> Self {
        Q::new(v)
    }
}

/// Parses `"<number><unit>"` (whitespace allowed between the two).
pub fn parse_quantity<D: Dimension>(text: &str) -> Result<f64, String> {
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let mut units: Vec<&(&str, f64)> = D::UNITS.iter().collect();
    units.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    for (unit, factor) in units {
        if let Some(number) = s.strip_suffix(unit) {
            let number = number.trim_end();
            if let Ok(v) = number.parse::<f64>() {
                return Ok(v * factor);
            }
        }
    }
    let accepted: Vec<&str> = D::UNITS.iter().map(|(u, _)| *u).collect();
    Err(format!("cannot read `{text}` as a {}; expected a number or one of the units {}", D::NAME, accepted.join(", ")))
}

impl<'de, D: Dimension> Deserialize<'de> for Q<D> {
    fn deserialize<De: Deserializer<'de>>(deserializer: De) -> Result<Self, De::Error> {
        struct V<D>(PhantomData<D>);

        impl<D: Dimension> Visitor<'_> for V<D> {
            type Value = Q<D>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} (number in SI units or a string with a unit suffix)", D::NAME)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Q<D>, E> {
                Ok(Q::new(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Q<D>, E> {
                Ok(Q::new(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Q<D>, E> {
                Ok(Q::new(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Q<D>, E> {
                parse_quantity::<D>(v).map(Q::new).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(V(PhantomData))
    }
}

impl<D> Serialize for Q<D> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert!((parse_quantity::<Field>("271.5G").unwrap() - 0.02715).abs() < 1e-15);
        assert_eq!(parse_quantity::<Time>("7ms").unwrap(), 7e-3);
        assert!((parse_quantity::<Length>("10um").unwrap() - 1e-5).abs() < 1e-20);
        assert_eq!(parse_quantity::<Frequency>("2.87 GHz").unwrap(), 2.87e9);
        assert_eq!(parse_quantity::<Time>("1e-3").unwrap(), 1e-3);
        assert!((parse_quantity::<Torque>("56.5aNm").unwrap() - 56.5e-18).abs() < 1e-30);
        assert!((parse_quantity::<Angle>("45deg").unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let e = parse_quantity::<Field>("7ms").unwrap_err();
        assert!(e.contains("magnetic field") && e.contains("mT"), "{e}");
        assert!(parse_quantity::<Time>("ms").is_err());
        assert!(parse_quantity::<Time>("").is_err());
        assert!(parse_quantity::<Frequency>("3 furlongs").is_err());
    }
}
