//! Normalised log-products of `|sec(pi l x)|` and `|csc(pi l x)|`.

use alloc::vec::Vec;

use crate::diophantine::{Phase, RealSpec};
use crate::error::{Error, Result};
use crate::sigloc::Neumaier;

/// Reduced arguments closer than this to a pole are rejected.
pub const POLE_DISTANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrigKind {
    Sec,
    Csc,
    /// `csc(pi l x + pi y)`; exploratory, with no known asymptotics.
    CscShifted,
}

impl core::str::FromStr for TrigKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sec" => Ok(TrigKind::Sec),
            "csc" => Ok(TrigKind::Csc),
            "csc-shifted" => Ok(TrigKind::CscShifted),
            _ => Err(Error::Parse(alloc::format!("unknown product kind `{s}`"))),
        }
    }
}

impl TrigKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrigKind::Sec => "sec",
            TrigKind::Csc => "csc",
            TrigKind::CscShifted => "csc-shifted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductTrace {
    pub kind: TrigKind,
    pub x: RealSpec,
    pub shift: f64,
    pub k_max: usize,
    /// `(k, (1/k) sum_{l <= k} ln|f(pi l x + pi y)|)`.
    pub cumulative: Vec<(usize, f64)>,
    /// `x` is rational, so no rate statement applies.
    pub rational: bool,
    /// Shifted products carry no asymptotic guarantee.
    pub no_guarantee: bool,
}

impl ProductTrace {
    pub fn last(&self) -> f64 {
        self.cumulative.last().map(|c| c.1).unwrap_or(0.0)
    }
}

/// Running normalised log-products, with `l x mod 2` stepped exactly.
pub fn trig_log_product(kind: TrigKind, x: &RealSpec, y: f64, k_max: usize) -> Result<ProductTrace> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    if kind != TrigKind::CscShifted && y != 0.0 {
        return Err(Error::Domain("a shift is only meaningful for the csc-shifted product".into()));
    }
    let step = x.phase();
    // |sec t| = 1/|sin(t + pi/2)|
    let offset = match kind {
        TrigKind::Sec => Phase::HALF,
        TrigKind::Csc => Phase::ZERO,
        TrigKind::CscShifted => Phase::from_f64(y),
    };
    let mut arg = offset;
    let mut acc = Neumaier::new();
    let mut cumulative = Vec::with_capacity(k_max);
    for l in 1..=k_max {
        arg = arg + step;
        let (_, g) = arg.folded();
        let g = g.to_f64();
        if g < POLE_DISTANCE {
            return Err(Error::Singularity { l: l as u64 });
        }
        acc.add(-libm::log(libm::sin(core::f64::consts::PI * g)));
        cumulative.push((l, acc.value() / l as f64));
    }
    Ok(ProductTrace {
        kind,
        x: x.clone(),
        shift: y,
        k_max,
        cumulative,
        rational: x.value().is_rational(),
        no_guarantee: kind == TrigKind::CscShifted,
    })
}

/// Final normalised value; tends to `ln 2` for `x` outside the exceptional set and the rationals.
pub fn lemma1_rate(x: &RealSpec, kind: TrigKind, k_max: usize) -> Result<f64> {
    if x.value().is_rational() {
        return Err(Error::Domain("the rate statement needs an irrational x".into()));
    }
    Ok(trig_log_product(kind, x, 0.0, k_max)?.last())
}
