use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::normalization::spatial_norm_factor;
use crate::spatial::{spatial_difference, SpatialOp};

/// Index of a partial derivative `L_{x^mx y^my t^nt}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partial {
    pub x: u8,
    pub y: u8,
    pub t: u8,
}

pub const fn partial(x: u8, y: u8, t: u8) -> Partial {
    Partial { x, y, t }
}

impl fmt::Display for Partial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L")?;
        for (c, n) in [('x', self.x), ('y', self.y), ('t', self.t)] {
            for _ in 0..n {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// Scale-normalization applied to the partials of a jet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetNormalization {
    pub s: f64,
    pub tau: f64,
    pub gamma_s: f64,
    /// Factors for temporal orders 0, 1 and 2.
    pub temporal: [f64; 3],
}

impl JetNormalization {
    /// No normalization at all.
    pub fn identity() -> Self {
        JetNormalization { s: 1.0, tau: 1.0, gamma_s: 0.0, temporal: [1.0; 3] }
    }

    pub fn factor(&self, p: Partial) -> f64 {
        spatial_norm_factor(self.s, p.x as usize, p.y as usize, self.gamma_s) * self.temporal[p.t as usize]
    }
}

/// Scale-normalized partial derivatives at one spatio-temporal scale and one frame.
#[derive(Debug, Clone)]
pub struct JetSlice {
    width: usize,
    height: usize,
    partials: BTreeMap<Partial, Image>,
    pub normalization: JetNormalization,
}

impl JetSlice {
    /// Builds the requested partials from the smoothed frame and its temporal differences.
    ///
    /// `temporal[n]` holds the `n`-th temporal difference of the smoothed frame.
    pub fn from_temporal(
        temporal: [Option<&Image>; 3],
        required: &BTreeSet<Partial>,
        normalization: JetNormalization,
    ) -> Result<Self> {
        let base = temporal.iter().flatten().next().ok_or_else(|| Error::MissingPartial("L".into()))?;
        let (width, height) = base.dims();
        let mut partials = BTreeMap::new();
        for &p in required {
            let src =
                temporal.get(p.t as usize).copied().flatten().ok_or_else(|| Error::MissingPartial(p.to_string()))?;
            if src.dims() != (width, height) {
                return Err(Error::State(format!(
                    "{p} has dimensions {:?}, expected {:?}",
                    src.dims(),
                    (width, height)
                )));
            }
            let raw =
                if p.x == 0 && p.y == 0 { src.clone() } else { spatial_difference(src, SpatialOp::new(p.x, p.y))? };
            let f = normalization.factor(p);
            partials.insert(p, if f == 1.0 { raw } else { raw.map(|v| v * f) });
        }
        Ok(JetSlice { width, height, partials, normalization })
    }

    /// Wraps already computed (and already normalized) partials.
    pub fn from_partials(partials: BTreeMap<Partial, Image>, normalization: JetNormalization) -> Result<Self> {
        let first = partials.values().next().ok_or_else(|| Error::MissingPartial("any".into()))?;
        let (width, height) = first.dims();
        if partials.values().any(|img| img.dims() != (width, height)) {
            return Err(Error::State("jet partials differ in size".into()));
        }
        Ok(JetSlice { width, height, partials, normalization })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, p: Partial) -> Result<&Image> {
        self.partials.get(&p).ok_or_else(|| Error::MissingPartial(p.to_string()))
    }

    pub fn contains(&self, p: Partial) -> bool {
        self.partials.contains_key(&p)
    }

    pub fn partials(&self) -> impl Iterator<Item = (&Partial, &Image)> {
        self.partials.iter()
    }

    /// Pixel slices of the listed partials, in order.
    pub(crate) fn slices<const N: usize>(&self, ps: [Partial; N]) -> Result<[&[f64]; N]> {
        let mut out = [&[][..]; N];
        for (o, p) in out.iter_mut().zip(ps) {
            *o = self.get(p)?.pixels();
        }
        Ok(out)
    }
}
