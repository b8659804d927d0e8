use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Gbm,
    Cir,
    Qtsm,
    Heston,
    ThreeHalves,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gbm => "GBM",
            ModelKind::Cir => "CIR",
            ModelKind::Qtsm => "QTSM",
            ModelKind::Heston => "Heston",
            ModelKind::ThreeHalves => "Model32LETF",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gbm" => Ok(ModelKind::Gbm),
            "cir" => Ok(ModelKind::Cir),
            "qtsm" => Ok(ModelKind::Qtsm),
            "heston" => Ok(ModelKind::Heston),
            "model32letf" | "three_halves" | "3/2" | "32" => Ok(ModelKind::ThreeHalves),
            other => Err(Error::InvalidParameter(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Geometric Brownian motion `dS = μS dt + σS dW` with constant rate `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct GbmParams<S> {
    pub mu: S,
    pub sigma: S,
    pub r: S,
}

/// Square-root short rate `dr = (θ - a r) dt + σ√r dW`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirParams<S> {
    pub theta: S,
    pub a: S,
    pub sigma: S,
}

/// Quadratic term structure model: `dX = (b + BX) dt + σ dW`,
/// `r(x) = β + ⟨α, x⟩ + ⟨Γx, x⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct QtsmParams<S> {
    pub b: Vec<S>,
    pub big_b: Matrix<S>,
    pub sigma: Matrix<S>,
    pub beta: S,
    pub alpha: Vec<S>,
    pub gamma: Matrix<S>,
}

impl<S: Scalar> QtsmParams<S> {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `a = σσᵀ`.
    pub fn a(&self) -> Matrix<S> {
        &self.sigma * &self.sigma.transpose()
    }
}

/// Heston asset/variance pair with zero discounting:
/// `dX = μX dt + √v X dZ`, `dv = (γ - βv) dt + δ√v dW`, `d⟨Z,W⟩ = ρ dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct HestonParams<S> {
    pub mu: S,
    pub gamma: S,
    pub beta: S,
    pub delta: S,
    pub rho: S,
}

/// 3/2 underlying `dX = (θ - aX)X dt + σX^{3/2} dW` with a leveraged fund
/// of ratio `leverage` and power utility exponent `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeHalvesParams<S> {
    pub theta: S,
    pub a: S,
    pub sigma: S,
    pub r: S,
    pub leverage: S,
    pub alpha: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams<S> {
    Gbm(GbmParams<S>),
    Cir(CirParams<S>),
    Qtsm(QtsmParams<S>),
    Heston(HestonParams<S>),
    ThreeHalves(ThreeHalvesParams<S>),
}

impl<S: Scalar> ModelParams<S> {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Gbm(_) => ModelKind::Gbm,
            ModelParams::Cir(_) => ModelKind::Cir,
            ModelParams::Qtsm(_) => ModelKind::Qtsm,
            ModelParams::Heston(_) => ModelKind::Heston,
            ModelParams::ThreeHalves(_) => ModelKind::ThreeHalves,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelParams::Qtsm(q) => q.dim(),
            ModelParams::Heston(_) => 2,
            _ => 1,
        }
    }
}

/// A named perturbation direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    Mu,
    Sigma,
    R,
    Theta,
    A,
    Beta,
    Gamma,
    Delta,
    Rho,
    Leverage,
    Alpha,
    /// Entry of the QTSM drift intercept `b`.
    B(usize),
    /// Entry of the QTSM drift matrix `B`.
    BigB(usize, usize),
    /// Entry of the QTSM volatility matrix `σ`.
    SigmaEntry(usize, usize),
    /// Entry of the QTSM linear rate loading `α`.
    AlphaVec(usize),
    /// Multiplicative scale of the QTSM quadratic loading, `Γ → (1+ε)Γ`.
    GammaScale,
    /// Coordinate of the initial state.
    Xi(usize),
}

impl Param {
    /// Initial-state parameters have an instantaneous (delta-type) limit.
    pub fn is_initial_state(self) -> bool {
        matches!(self, Param::Xi(_))
    }
}

fn parse_indices(s: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let open = rest.strip_prefix('[')?;
        let close = open.find(']')?;
        out.push(open[..close].trim().parse().ok()?);
        rest = &open[close + 1..];
    }
    Some(out)
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, idx) = match s.find('[') {
            Some(p) => (&s[..p], parse_indices(&s[p..])),
            None => (s, Some(Vec::new())),
        };
        let idx = idx.ok_or_else(|| Error::InvalidParameter(format!("malformed index in '{s}'")))?;
        let p = match (head, idx.as_slice()) {
            ("mu", []) => Param::Mu,
            ("sigma", []) => Param::Sigma,
            ("r", []) => Param::R,
            ("theta", []) => Param::Theta,
            ("a", []) => Param::A,
            ("beta", []) => Param::Beta,
            ("gamma", []) => Param::Gamma,
            ("delta", []) => Param::Delta,
            ("rho", []) => Param::Rho,
            ("leverage", []) => Param::Leverage,
            ("alpha", []) => Param::Alpha,
            ("Gamma_scale", []) => Param::GammaScale,
            ("r0" | "s0" | "S0" | "x0" | "X0", []) => Param::Xi(0),
            ("v0", []) => Param::Xi(1),
            ("b", [i]) => Param::B(*i),
            ("B", [i, j]) => Param::BigB(*i, *j),
            ("sigma", [i, j]) => Param::SigmaEntry(*i, *j),
            ("alpha", [i]) => Param::AlphaVec(*i),
            ("xi", [i]) => Param::Xi(*i),
            _ => return Err(Error::InvalidParameter(format!("unknown parameter '{s}'"))),
        };
        Ok(p)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Mu => write!(f, "mu"),
            Param::Sigma => write!(f, "sigma"),
            Param::R => write!(f, "r"),
            Param::Theta => write!(f, "theta"),
            Param::A => write!(f, "a"),
            Param::Beta => write!(f, "beta"),
            Param::Gamma => write!(f, "gamma"),
            Param::Delta => write!(f, "delta"),
            Param::Rho => write!(f, "rho"),
            Param::Leverage => write!(f, "leverage"),
            Param::Alpha => write!(f, "alpha"),
            Param::B(i) => write!(f, "b[{i}]"),
            Param::BigB(i, j) => write!(f, "B[{i}][{j}]"),
            Param::SigmaEntry(i, j) => write!(f, "sigma[{i}][{j}]"),
            Param::AlphaVec(i) => write!(f, "alpha[{i}]"),
            Param::GammaScale => write!(f, "Gamma_scale"),
            Param::Xi(i) => write!(f, "xi[{i}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_names_round_trip() {
        for name in ["mu", "b[1]", "B[0][1]", "sigma[1][0]", "alpha[2]", "Gamma_scale", "xi[3]"] {
            let p: Param = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
        }
        assert_eq!("v0".parse::<Param>().unwrap(), Param::Xi(1));
        assert!("B[0]".parse::<Param>().is_err());
        assert!("nope".parse::<Param>().is_err());
    }
}
