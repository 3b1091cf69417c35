//! Constellations and symbol generation.
//!
//! QAM alphabets are square grids with odd-integer coordinates scaled to unit
//! average power; PSK alphabets are the `M`-th roots of unity. The even
//! moments `E|s|^2p` are evaluated by enumerating the integer grid, so the
//! only rounding is a single final division.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::C64;

/// Modulation family whose level is being classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModClass {
    Qam,
    Psk,
}

impl fmt::Display for ModClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModClass::Qam => "qam",
            ModClass::Psk => "psk",
        })
    }
}

impl FromStr for ModClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qam" => Ok(ModClass::Qam),
            "psk" => Ok(ModClass::Psk),
            other => Err(Error::Parse(format!("unknown modulation class '{other}'"))),
        }
    }
}

/// Even absolute moments of an equiprobable alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `E|s|^2`
    pub m2: f64,
    /// `E|s|^4`
    pub m4: f64,
    /// `E|s|^6`
    pub m6: f64,
}

/// A unit-power, zero-mean symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    mod_class: ModClass,
    order: usize,
    points: Vec<C64>,
    moments: Moments,
}

impl Constellation {
    /// Builds the alphabet for `(mod_class, order)`.
    ///
    /// QAM orders must be even perfect squares (4, 16, 64, 256); PSK orders
    /// 2, 4, 8 or 16.
    pub fn new(mod_class: ModClass, order: usize) -> Result<Self> {
        match mod_class {
            ModClass::Qam => Self::square_qam(order),
            ModClass::Psk => Self::psk(order),
        }
    }

    fn square_qam(order: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(Error::Config(format!("unsupported QAM order {order}")));
        }
        let side = (order as f64).sqrt().round() as i64;
        let coords: Vec<i64> = (0..side).map(|k| 2 * k - side + 1).collect();
        let energies: Vec<u128> = coords
            .iter()
            .flat_map(|&a| coords.iter().map(move |&b| (a * a + b * b) as u128))
            .collect();
        let n = order as u128;
        // Average symbol energy of the unscaled grid, 2(side^2 - 1)/3.
        let e1: u128 = energies.iter().sum();
        let e2: u128 = energies.iter().map(|e| e * e).sum();
        let e3: u128 = energies.iter().map(|e| e * e * e).sum();
        let mean = e1 as f64 / n as f64;
        let moments = Moments {
            m2: 1.0,
            m4: (e2 * n) as f64 / (e1 * e1) as f64,
            m6: (e3 * n * n) as f64 / (e1 * e1 * e1) as f64,
        };
        let scale = mean.sqrt().recip();
        let points = coords
            .iter()
            .flat_map(|&a| {
                coords
                    .iter()
                    .map(move |&b| C64::new(a as f64 * scale, b as f64 * scale))
            })
            .collect();
        Ok(Self {
            mod_class: ModClass::Qam,
            order,
            points,
            moments,
        })
    }

    fn psk(order: usize) -> Result<Self> {
        if !matches!(order, 2 | 4 | 8 | 16) {
            return Err(Error::Config(format!("unsupported PSK order {order}")));
        }
        let points = (0..order)
            .map(|m| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / order as f64))
            .collect();
        Ok(Self {
            mod_class: ModClass::Psk,
            order,
            points,
            moments: Moments {
                m2: 1.0,
                m4: 1.0,
                m6: 1.0,
            },
        })
    }

    pub fn mod_class(&self) -> ModClass {
        self.mod_class
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    /// True when every point has the same modulus (4-QAM and all PSK).
    pub fn is_constant_modulus(&self) -> bool {
        let r0 = self.points[0].norm_sqr();
        self.points.iter().all(|p| (p.norm_sqr() - r0).abs() < 1e-12)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Distinct point magnitudes with their probability mass, ascending.
    pub fn magnitude_rings(&self) -> Vec<(f64, f64)> {
        let mut radii: Vec<f64> = self.points.iter().map(|p| p.norm()).collect();
        radii.sort_by(f64::total_cmp);
        let weight = 1.0 / self.order as f64;
        let mut rings: Vec<(f64, f64)> = Vec::new();
        for r in radii {
            match rings.last_mut() {
                Some((last, w)) if (r - *last).abs() < 1e-12 => *w += weight,
                _ => rings.push((r, weight)),
            }
        }
        rings
    }

    /// Mean of `x^a conj(x)^b` over the equiprobable alphabet.
    pub fn mixed_moment(&self, a: u32, b: u32) -> C64 {
        self.points
            .iter()
            .map(|p| p.powu(a) * p.conj().powu(b))
            .sum::<C64>()
            / self.order as f64
    }

    /// Draws `n` independent, uniformly chosen symbols.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<C64> {
        (0..n)
            .map(|_| self.points[rng.random_range(0..self.order)])
            .collect()
    }
}
