//! Material parameters of the mixture.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric binary friction coefficients `b_ij(theta) = b0_ij * theta^exponent`.
///
/// Only the off-diagonal entries of `base` are used.
#[derive(Debug, Clone, PartialEq)]
pub struct Friction {
    base: DMatrix<f64>,
    exponent: f64,
}

impl Friction {
    pub fn new(base: DMatrix<f64>, exponent: f64) -> Result<Self> {
        let n = base.nrows();
        if base.ncols() != n {
            return Err(Error::Params(format!(
                "friction matrix must be square, got {}x{}",
                n,
                base.ncols()
            )));
        }
        if !exponent.is_finite() {
            return Err(Error::Params("friction exponent must be finite".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = base[(i, j)];
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::Params(format!("b_{}{} = {b} must be positive", i + 1, j + 1)));
                }
                let bt = base[(j, i)];
                if (b - bt).abs() > 1e-14 * b.abs().max(bt.abs()) {
                    return Err(Error::Params(format!(
                        "friction must be symmetric: b_{}{} = {b}, b_{}{} = {bt}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { base, exponent })
    }

    /// Constant coefficient `b` for every pair.
    pub fn uniform(n: usize, b: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(n, n, b), 0.0)
    }

    /// Builds the matrix from the strict upper triangle, row-major:
    /// `b_12, b_13, ..., b_1n, b_23, ...`.
    pub fn from_upper(n: usize, upper: &[f64], exponent: f64) -> Result<Self> {
        let expected = n * (n.saturating_sub(1)) / 2;
        if upper.len() != expected {
            return Err(Error::Params(format!(
                "expected {expected} friction coefficients for {n} species, got {}",
                upper.len()
            )));
        }
        let mut base = DMatrix::zeros(n, n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let b = *it.next().expect("length checked");
                base[(i, j)] = b;
                base[(j, i)] = b;
            }
        }
        Self::new(base, exponent)
    }

    pub fn upper(&self) -> Vec<f64> {
        let n = self.base.nrows();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.base[(i, j)]);
            }
        }
        out
    }

    pub fn species(&self) -> usize {
        self.base.nrows()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    #[inline]
    pub fn coefficient(&self, i: usize, j: usize, theta: f64) -> f64 {
        if self.exponent == 0.0 {
            self.base[(i, j)]
        } else {
            self.base[(i, j)] * theta.powf(self.exponent)
        }
    }
}

/// Thermal conductivity `kappa = coefficient * (1 + theta^2)` with the
/// admissible band `lower <= coefficient <= upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductivity {
    pub coefficient: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Conductivity {
    pub fn new(coefficient: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower && upper.is_finite()) {
            return Err(Error::Params(format!(
                "conductivity bounds must satisfy 0 < c_k <= C_k, got c_k = {lower}, C_k = {upper}"
            )));
        }
        if !(coefficient >= lower && coefficient <= upper) {
            return Err(Error::Params(format!(
                "conductivity coefficient {coefficient} outside [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            coefficient,
            lower,
            upper,
        })
    }

    /// Sits on the lower bound.
    pub fn at_lower_bound(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, lower, upper)
    }

    #[inline]
    pub fn kappa(&self, theta: f64) -> f64 {
        self.coefficient * (1.0 + theta * theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    molar_masses: Vec<f64>,
    heat_capacity: f64,
    friction: Friction,
    epsilon: f64,
    conductivity: Conductivity,
}

impl MixtureParams {
    pub fn new(
        molar_masses: Vec<f64>,
        heat_capacity: f64,
        friction: Friction,
        epsilon: f64,
        conductivity: Conductivity,
    ) -> Result<Self> {
        if molar_masses.is_empty() {
            return Err(Error::Params("at least one species is required".into()));
        }
        for (i, &m) in molar_masses.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Params(format!("molar mass m_{} = {m} must be positive", i + 1)));
            }
        }
        if !(heat_capacity > 0.0 && heat_capacity.is_finite()) {
            return Err(Error::Params(format!("heat capacity c_w = {heat_capacity} must be positive")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Params(format!("epsilon = {epsilon} must be positive")));
        }
        if friction.species() != molar_masses.len() {
            return Err(Error::Params(format!(
                "friction matrix is {0}x{0} but there are {1} species",
                friction.species(),
                molar_masses.len()
            )));
        }
        Ok(Self {
            molar_masses,
            heat_capacity,
            friction,
            epsilon,
            conductivity,
        })
    }

    pub fn species(&self) -> usize {
        self.molar_masses.len()
    }

    pub fn molar_masses(&self) -> &[f64] {
        &self.molar_masses
    }

    pub fn molar_mass(&self, i: usize) -> f64 {
        self.molar_masses[i]
    }

    pub fn heat_capacity(&self) -> f64 {
        self.heat_capacity
    }

    pub fn friction(&self) -> &Friction {
        &self.friction
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn conductivity(&self) -> &Conductivity {
        &self.conductivity
    }

    pub fn min_molar_mass(&self) -> f64 {
        self.molar_masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = self.clone();
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Params(format!("epsilon = {epsilon} must be positive")));
        }
        p.epsilon = epsilon;
        Ok(p)
    }

    pub fn with_conductivity(&self, conductivity: Conductivity) -> Self {
        let mut p = self.clone();
        p.conductivity = conductivity;
        p
    }
}
