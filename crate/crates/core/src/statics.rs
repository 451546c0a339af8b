//! Closed-form comparative statics of the symmetric CNE without cross-side
//! externalities, plus a finite-difference oracle that works everywhere.
//!
//! Each derivative is a ratio of two sums `sum_m c_m e^{m z*}` whose
//! coefficients are polynomials in `(beta_k, phi_kk, N)`, evaluated at the
//! solved `z*` of the side.

use crate::demand::omega;
use crate::equilibrium::{self, SymmetricEquilibrium};
use crate::model::{MarketParams, Side};
use crate::series;
use crate::{Error, Result};

/// Coefficient families. Names follow `n_*` (numerator) / `d_*` (denominator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Slope of the decoupled FOC, m = 0..6.
    A,
    /// Second derivative of profit in own share, m = 0..7.
    S,
    NPU,
    DPU,
    NPiU,
    DPiU,
    NCsU,
    DCsU,
    NP,
    D,
    NNx,
    DNx,
    NCsk,
    DCsk,
    NPik,
    DPik,
    /// Cubic in `beta` bounding the CS numerator; indexed by powers of `beta`.
    Y,
}

impl Family {
    pub const ALL: [Family; 17] = [
        Family::A,
        Family::S,
        Family::NPU,
        Family::DPU,
        Family::NPiU,
        Family::DPiU,
        Family::NCsU,
        Family::DCsU,
        Family::NP,
        Family::D,
        Family::NNx,
        Family::DNx,
        Family::NCsk,
        Family::DCsk,
        Family::NPik,
        Family::DPik,
        Family::Y,
    ];

    /// Index of the first coefficient.
    pub fn lo(self) -> usize {
        match self {
            Family::NPU | Family::NPiU | Family::NCsU | Family::NNx => 1,
            Family::NP | Family::NPik => 2,
            _ => 0,
        }
    }

    pub fn needs_extras(self) -> bool {
        self == Family::NPik
    }
}

/// Inputs that only some families need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extras {
    pub u0: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    pub family: Family,
    pub lo: usize,
    pub coeffs: Vec<f64>,
    pub beta: f64,
    pub phi: f64,
    pub n: f64,
    pub extras: Option<Extras>,
}

impl CoeffSeries {
    /// `sum_m c_m e^{m z}` over the family's index range.
    pub fn eval(&self, z: f64) -> f64 {
        series::eval(&self.coeffs, self.lo, z)
    }

    /// `c_m` by power index, zero outside the range.
    pub fn get(&self, m: usize) -> f64 {
        if m < self.lo {
            return 0.0;
        }
        self.coeffs.get(m - self.lo).copied().unwrap_or(0.0)
    }
}

fn a_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (b * (6.0 * n - 1.0) - 4.0 * f),
        b * (b * b * (15.0 * n * n - 6.0 * n + 1.0) + 4.0 * b * (1.0 - 4.0 * n) * f + 5.0 * f * f),
        2.0 * n * b.powi(3) * (10.0 * n * n - 7.0 * n + 2.0) + b * b * f * (-24.0 * n * n + 11.0 * n - 1.0)
            + b * f * f * (10.0 * n - 3.0)
            - 2.0 * f.powi(3),
        b * n * (n * b * b * (15.0 * n * n - 16.0 * n + 6.0) + b * f * (-16.0 * n * n + 10.0 * n - 2.0) + (5.0 * n - 2.0) * f * f),
        b * n * n * (n * b * b * (6.0 * n * n - 9.0 * n + 4.0) + b * f * (-4.0 * n * n + 3.0 * n - 1.0) + f * f),
        b.powi(3) * (n - 1.0).powi(2) * n.powi(4),
    ]
}

fn s_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        -b.powi(4),
        b.powi(3) * (5.0 * f + b * (1.0 - 7.0 * n)),
        -3.0 * b * b * (b * b * n * (7.0 * n - 2.0) + b * f * (2.0 - 9.0 * n) + 3.0 * f * f),
        b * (5.0 * b.powi(3) * n * n * (3.0 - 7.0 * n) + 4.0 * b * b * (n * (15.0 * n - 7.0) + 1.0) * f
            + 3.0 * b * (3.0 - 11.0 * n) * f * f
            + 7.0 * f.powi(3)),
        5.0 * b.powi(4) * n.powi(3) * (4.0 - 7.0 * n) + 2.0 * b.powi(3) * n * (n * (35.0 * n - 26.0) + 7.0) * f
            + b * b * ((26.0 - 45.0 * n) * n - 5.0) * f * f
            + b * (13.0 * n - 4.0) * f.powi(3)
            - 2.0 * f.powi(4),
        b * (3.0 * b.powi(3) * (5.0 - 7.0 * n) * n.powi(4) + 3.0 * b * b * (n * (15.0 * n - 16.0) + 6.0) * n * n * f
            + b * ((25.0 - 27.0 * n) * n - 10.0) * n * f * f
            + (6.0 * n * n - 4.0 * n + 1.0) * f.powi(3)),
        b * n * (b.powi(3) * (6.0 - 7.0 * n) * n.powi(4) + b * b * (n * (15.0 * n - 22.0) + 10.0) * n * n * f
            + b * (-6.0 * n * n + 8.0 * n - 5.0) * n * f * f
            + f.powi(3)),
        -b.powi(3) * (n - 1.0) * n.powi(4) * (b * n * n + 2.0 * (1.0 - n) * f),
    ]
}

fn npu_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b * b * (b - f),
        2.0 * b * (2.0 * b * b * n - 2.0 * b * n * f + f * f),
        6.0 * b.powi(3) * n * n - n * b * b * (6.0 * n + 1.0) * f + f * f * b * (4.0 * n - 1.0) - f.powi(3),
        2.0 * b * n * n * (b - f) * (2.0 * b * n - f),
        b * n * n * (b * b * n * n - f * n * b * (n + 1.0) + f * f),
    ]
}

fn npiu_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (5.0 * b * n - 4.0 * f),
        b * (10.0 * b * b * n * n + 2.0 * b * (1.0 - 7.0 * n) * f + 5.0 * f * f),
        10.0 * b.powi(3) * n.powi(3) + 2.0 * n * b * b * (2.0 - 9.0 * n) * f + b * (9.0 * n - 2.0) * f * f - 2.0 * f.powi(3),
        b * n * (5.0 * b * b * n.powi(3) + 2.0 * n * b * (1.0 - 5.0 * n) * f + (4.0 * n - 1.0) * f * f),
        b * n * n * (b * b * n.powi(3) - 2.0 * b * n * n * f + f * f),
    ]
}

fn dpiu_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (b * (7.0 * n - 1.0) - 4.0 * f),
        b * (b * b * (21.0 * n * n - 7.0 * n + 1.0) + 4.0 * b * (1.0 - 5.0 * n) * f + 5.0 * f * f),
        n * b.powi(3) * (35.0 * n * n - 20.0 * n + 5.0) + b * b * (-40.0 * n * n + 15.0 * n - 1.0) * f
            + b * (15.0 * n - 3.0) * f * f
            - 2.0 * f.powi(3),
        n * n * b.powi(3) * (35.0 * n * n - 30.0 * n + 10.0) + n * b * b * (-40.0 * n * n + 21.0 * n - 3.0) * f
            + 5.0 * n * b * (3.0 * n - 1.0) * f * f
            - 2.0 * n * f.powi(3),
        b * n * n * (n * b * b * (21.0 * n * n - 25.0 * n + 10.0) + b * (-20.0 * n * n + 13.0 * n - 3.0) * f + (5.0 * n - 1.0) * f * f),
        b * n.powi(3) * (n * b * b * (7.0 * n * n - 11.0 * n + 5.0) + b * (-4.0 * n * n + 3.0 * n - 1.0) * f + f * f),
        b.powi(3) * (n - 1.0).powi(2) * n.powi(5),
    ]
}

fn ncsu_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b * b * (b - 2.0 * f),
        2.0 * b * (2.0 * b * b * n + b * (1.0 - 4.0 * n) * f + 2.0 * f * f),
        6.0 * b.powi(3) * n * n + b * b * (-12.0 * n * n + 5.0 * n - 1.0) * f + b * (8.0 * n - 3.0) * f * f - 2.0 * f.powi(3),
        2.0 * b * n * (2.0 * b * b * n * n + b * (-4.0 * n * n + 2.0 * n - 1.0) * f + (2.0 * n - 1.0) * f * f),
        b * n * n * (b * b * n * n + b * (-2.0 * n * n + n - 1.0) * f + f * f),
    ]
}

fn np_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3) * (f - b),
        -b * b * (4.0 * b * b * n + b * f * (1.0 - 4.0 * n) + 2.0 * f * f),
        b * (-6.0 * b.powi(3) * n * n + 2.0 * b * b * f * n * (3.0 * n - 1.0) + b * f * f * (3.0 - 4.0 * n) + f.powi(3)),
        -b * (4.0 * b.powi(3) * n.powi(3) + b * b * f * n * n * (1.0 - 4.0 * n) + b * f * f * n * (2.0 * n - 3.0) + f.powi(3)),
        b.powi(3) * n.powi(4) * (f - b),
    ]
}

fn nnx_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (b * (5.0 * n - 1.0) - 4.0 * f),
        b * (b * b * (10.0 * n * n - 4.0 * n + 1.0) + 2.0 * b * (2.0 - 7.0 * n) * f + 5.0 * f * f),
        b.powi(3) * n * (10.0 * n * n - 6.0 * n + 3.0) + b * b * f * (-18.0 * n * n + 10.0 * n - 1.0)
            + 3.0 * b * f * f * (3.0 * n - 1.0)
            - 2.0 * f.powi(3),
        b * n * (b * b * n * (5.0 * n * n - 4.0 * n + 3.0) + 2.0 * b * f * (-5.0 * n * n + 4.0 * n - 1.0) + (4.0 * n - 3.0) * f * f),
        b * b * n * n * (b * n * (n * n - n + 1.0) - (2.0 * n * n - 2.0 * n + 1.0) * f),
    ]
}

fn dnx_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (b * (7.0 * n - 1.0) - 4.0 * f),
        b * (b * b * (21.0 * n * n - 7.0 * n + 1.0) + 4.0 * b * (1.0 - 5.0 * n) * f + 5.0 * f * f),
        5.0 * b.powi(3) * n * (7.0 * n * n - 4.0 * n + 1.0) + b * b * f * (-40.0 * n * n + 15.0 * n - 1.0)
            + 3.0 * b * (5.0 * n - 1.0) * f * f
            - 2.0 * f.powi(3),
        n * (5.0 * b.powi(3) * n * (7.0 * n * n - 6.0 * n + 2.0) + b * b * f * (-40.0 * n * n + 21.0 * n - 3.0)
            + 5.0 * b * (3.0 * n - 1.0) * f * f
            - 2.0 * f.powi(3)),
        b * n * n * (b * b * n * (21.0 * n * n - 25.0 * n + 10.0) + b * (-20.0 * n * n + 13.0 * n - 3.0) * f + (5.0 * n - 1.0) * f * f),
        b * n.powi(3) * (b * b * n * (7.0 * n * n - 11.0 * n + 5.0) + b * (-4.0 * n * n + 3.0 * n - 1.0) * f + f * f),
        b.powi(3) * (n - 1.0).powi(2) * n.powi(5),
    ]
}

fn ncsk_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(4),
        b.powi(3) * (b * (6.0 * n - 1.0) - 4.0 * f),
        b * b * (b * b * (15.0 * n * n - 5.0 * n + 2.0) + 2.0 * b * (1.0 - 9.0 * n) * f + 5.0 * f * f),
        b * (b.powi(3) * n * (20.0 * n * n - 10.0 * n + 8.0) + b * b * f * (-32.0 * n * n + 6.0 * n + 2.0)
            + b * f * f * (14.0 * n + 1.0)
            - 2.0 * f.powi(3)),
        b * (b.powi(3) * n * n * (15.0 * n * n - 10.0 * n + 12.0)
            + b * b * f * (-28.0 * n.powi(3) + 6.0 * n * n + 5.0 * n - 1.0)
            + b * f * f * (13.0 * n * n + 2.0 * n - 4.0)
            - 2.0 * (n + 1.0) * f.powi(3)),
        b * b * n * (b * b * n * n * (6.0 * n * n - 5.0 * n + 8.0) + b * f * (-12.0 * n.powi(3) + 2.0 * n * n + 4.0 * n - 2.0)
            + f * f * (4.0 * n * n + n - 4.0)),
        b.powi(3) * n * n * (b * n * n * (n * n - n + 2.0) + (n - 1.0 - 2.0 * n.powi(3)) * f),
    ]
}

fn dcsk_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    let k = n + 1.0;
    vec![
        b.powi(3) * k,
        b * b * k * (b * (6.0 * n - 1.0) - 4.0 * f),
        b * k * (b * b * (15.0 * n * n - 6.0 * n + 1.0) + 4.0 * b * (1.0 - 4.0 * n) * f + 5.0 * f * f),
        k * (b.powi(3) * n * (20.0 * n * n - 14.0 * n + 4.0) + b * b * f * (-24.0 * n * n + 11.0 * n - 1.0)
            + b * f * f * (10.0 * n - 3.0)
            - 2.0 * f.powi(3)),
        b * n * k * (b * b * n * (15.0 * n * n - 16.0 * n + 6.0) + b * f * (-16.0 * n * n + 10.0 * n - 2.0) + (5.0 * n - 2.0) * f * f),
        b * n * n * k * (b * b * n * (6.0 * n * n - 9.0 * n + 4.0) + b * f * (-4.0 * n * n + 3.0 * n - 1.0) + f * f),
        b.powi(3) * (n - 1.0).powi(2) * n.powi(4) * k,
    ]
}

fn npik_coeffs(b: f64, f: f64, n: f64, u: f64, z: f64) -> Vec<f64> {
    vec![
        b.powi(3) * (u + b * z),
        b * b * (b * b * ((5.0 * n - 2.0) * z - 1.0) + b * ((5.0 * n - 2.0) * u - 2.0 * z * f) - 2.0 * u * f),
        b * (b.powi(3) * (10.0 * n * n * z - 2.0 * n * (4.0 * z + 2.0) + z) + b * b * ((10.0 * n * n - 8.0 * n + 1.0) * u + (z + 1.0 - 6.0 * n * z) * f))
            + b * (b * (u * (1.0 - 6.0 * n) * f + z * f * f) + u * f * f),
        b * (b.powi(3) * n * (10.0 * n * n * z - 12.0 * n * z - 6.0 * n + 3.0 * z)
            + b * b * (n * (10.0 * n * n - 12.0 * n + 3.0) * u + (2.0 * n * z + 4.0 * n - 1.0) * f - 6.0 * n * n * z * f))
            + b * (b * f * (n * (2.0 - 6.0 * n) * u + (n * z + z + 2.0) * f) + (n + 1.0) * u * f * f),
        b * (b.powi(3) * n * n * (5.0 * n * n * z - 2.0 * n * (4.0 * z + 2.0) + 3.0 * z)
            + b * b * (n * n * (5.0 * n * n - 8.0 * n + 3.0) * u + (n * n * z - 2.0 * n.powi(3) * z + 5.0 * n * n - 2.0 * n) * f))
            + b * (b * f * n * (-2.0 * n * n * u + n * u + (z + 2.0) * f) + (n * u - 2.0 * f) * f * f),
        b.powi(3) * n * n * (b * n * (n * n * z - 2.0 * n * z + z - n) + n * u + 2.0 * n * f - f + n.powi(3) * u - 2.0 * n * n * u),
    ]
}

fn dpik_coeffs(b: f64, f: f64, n: f64) -> Vec<f64> {
    vec![
        b.powi(3),
        b * b * (b * (7.0 * n - 1.0) - 4.0 * f),
        b * (b * b * (21.0 * n * n - 7.0 * n + 1.0) + 4.0 * b * (1.0 - 5.0 * n) * f + 5.0 * f * f),
        b.powi(3) * n * (35.0 * n * n - 20.0 * n + 5.0) + b * b * (-40.0 * n * n + 15.0 * n - 1.0) * f
            + b * (15.0 * n - 3.0) * f * f
            - 2.0 * f.powi(3),
        n * (b.powi(3) * n * (35.0 * n * n - 30.0 * n + 10.0) + b * b * (-40.0 * n * n + 21.0 * n - 3.0) * f
            + b * (15.0 * n - 5.0) * f * f
            - 2.0 * f.powi(3)),
        b * n * n * (b * b * n * (21.0 * n * n - 25.0 * n + 10.0) + b * (-20.0 * n * n + 13.0 * n - 3.0) * f + (5.0 * n - 1.0) * f * f),
        b * n.powi(3) * (b * b * n * (7.0 * n * n - 11.0 * n + 5.0) + b * (-4.0 * n * n + 3.0 * n - 1.0) * f + f * f),
        b.powi(3) * (n - 1.0).powi(2) * n.powi(5),
    ]
}

/// Coefficients of the cubic in `beta` used for the CS decrease region.
pub fn y_coeffs(f: f64, n: f64) -> [f64; 4] {
    [
        -4.0 * (n + 2.0) * f.powi(3),
        4.0 * (2.0 * n.powi(3) + 7.0 * n * n + 6.0 * n + 1.0) * f * f,
        -(2.0 * n.powi(5) + 24.0 * n.powi(4) + 51.0 * n.powi(3) + 45.0 * n * n + 18.0 * n + 2.0) * f,
        n.powi(6) + 11.0 * n.powi(5) + 22.0 * n.powi(4) + 36.0 * n.powi(3) + 34.0 * n * n + 18.0 * n + 3.0,
    ]
}

/// Coefficients for raw inputs `(beta_k, phi_kk, N)`.
pub fn coeffs_for(family: Family, b: f64, f: f64, n: f64, extras: Option<Extras>) -> Result<CoeffSeries> {
    let coeffs = match family {
        Family::A | Family::DPU | Family::DCsU | Family::D => a_coeffs(b, f, n),
        Family::S => s_coeffs(b, f, n),
        Family::NPU => npu_coeffs(b, f, n),
        Family::NPiU => npiu_coeffs(b, f, n),
        Family::DPiU => dpiu_coeffs(b, f, n),
        Family::NCsU => ncsu_coeffs(b, f, n),
        Family::NP => np_coeffs(b, f, n),
        Family::NNx => nnx_coeffs(b, f, n),
        Family::DNx => dnx_coeffs(b, f, n),
        Family::NCsk => ncsk_coeffs(b, f, n),
        Family::DCsk => dcsk_coeffs(b, f, n),
        Family::DPik => dpik_coeffs(b, f, n),
        Family::NPik => {
            let x = extras.ok_or(Error::MissingArgument("u0 and z* for n_pik"))?;
            npik_coeffs(b, f, n, x.u0, x.z)
        }
        Family::Y => y_coeffs(f, n).to_vec(),
    };
    Ok(CoeffSeries { family, lo: family.lo(), coeffs, beta: b, phi: f, n, extras })
}

pub fn build_coeffs(family: Family, params: &MarketParams, side: Side, extras: Option<Extras>) -> Result<CoeffSeries> {
    let k = side.idx();
    coeffs_for(family, params.beta[k], params.phi[k][k], params.n(), extras)
}

// (1 + N e)^2 D(e)^2 as a polynomial in e
fn dm_dz_denominator(b: f64, f: f64, n: f64) -> Vec<f64> {
    let d = [b, b * (2.0 * n - 1.0) - f, b * n * (n - 1.0)];
    let a = [1.0, n];
    let ad = series::poly_mul(&a, &d);
    series::poly_mul(&ad, &ad)
}

/// Slope of the decoupled CNE condition in `z`.
pub fn dm_dz(z: f64, b: f64, f: f64, n: f64) -> f64 {
    -series::ratio(&a_coeffs(b, f, n), 0, &dm_dz_denominator(b, f, n), 0, z)
}

/// `e^z D(e)^3` as a polynomial in `e`, starting at power 1.
pub(crate) fn soc_denominator(b: f64, f: f64, n: f64) -> Vec<f64> {
    let d = [b, b * (2.0 * n - 1.0) - f, b * n * (n - 1.0)];
    series::poly_mul(&series::poly_mul(&d, &d), &d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Price,
    Profit,
    ConsumerSurplus,
    Participation,
    Z,
}

impl Quantity {
    pub const ALL: [Quantity; 5] =
        [Quantity::Price, Quantity::Profit, Quantity::ConsumerSurplus, Quantity::Participation, Quantity::Z];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Price => "price",
            Quantity::Profit => "profit",
            Quantity::ConsumerSurplus => "cs",
            Quantity::Participation => "participation",
            Quantity::Z => "z",
        }
    }

    /// Value for `side` in a solved equilibrium. Profit is the side's
    /// contribution `p_k x_k`.
    pub fn of(self, eq: &SymmetricEquilibrium, side: Side) -> f64 {
        let k = side.idx();
        match self {
            Quantity::Price => eq.prices[k],
            Quantity::Profit => eq.profit_per_side[k],
            Quantity::ConsumerSurplus => eq.consumer_surplus[k],
            Quantity::Participation => eq.participation[k],
            Quantity::Z => eq.z[k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wrt {
    OutsideUtility,
    NumPlatforms,
}

impl Wrt {
    pub fn label(self) -> &'static str {
        match self {
            Wrt::OutsideUtility => "u0",
            Wrt::NumPlatforms => "n",
        }
    }

    pub fn default_step(self) -> f64 {
        match self {
            Wrt::OutsideUtility => 1e-5,
            Wrt::NumPlatforms => 1e-4,
        }
    }
}

/// Side data plus the solved `z*`.
#[derive(Debug, Clone, Copy)]
struct Point {
    b: f64,
    f: f64,
    n: f64,
    u0: f64,
    z: f64,
}

fn point(params: &MarketParams, side: Side) -> Result<Point> {
    if !params.cross_free() {
        return Err(Error::CrossExternalities);
    }
    let k = side.idx();
    let z = equilibrium::cne_decoupled_root(params, side)?;
    Ok(Point { b: params.beta[k], f: params.phi[k][k], n: params.n(), u0: params.u0[k], z })
}

fn checked_ratio(num: &[f64], nlo: usize, den: &[f64], dlo: usize, z: f64) -> Result<f64> {
    let (r, d) = series::ratio_checked(num, nlo, den, dlo, z);
    if d == 0.0 || !r.is_finite() {
        return Err(Error::VanishingDenominator);
    }
    Ok(r)
}

impl Point {
    fn dz_du0(&self) -> Result<f64> {
        let m = dm_dz(self.z, self.b, self.f, self.n);
        if !(m.abs() >= 1e-14) {
            return Err(Error::VanishingDenominator);
        }
        Ok(1.0 / m)
    }

    fn value(&self, q: Quantity, w: Wrt) -> Result<f64> {
        let (b, f, n, z) = (self.b, self.f, self.n, self.z);
        let a = a_coeffs(b, f, n);
        let e = z.exp();
        let dw = e / (1.0 + n * e).powi(2);
        Ok(match (q, w) {
            (Quantity::Z, Wrt::OutsideUtility) => self.dz_du0()?,
            (Quantity::Price, Wrt::OutsideUtility) => -checked_ratio(&npu_coeffs(b, f, n), 1, &a, 0, z)?,
            (Quantity::Profit, Wrt::OutsideUtility) => {
                -checked_ratio(&npiu_coeffs(b, f, n), 1, &dpiu_coeffs(b, f, n), 0, z)?
            }
            (Quantity::ConsumerSurplus, Wrt::OutsideUtility) => checked_ratio(&ncsu_coeffs(b, f, n), 1, &a, 0, z)?,
            (Quantity::Participation, Wrt::OutsideUtility) => n * dw * self.dz_du0()?,
            (Quantity::Price, Wrt::NumPlatforms) => checked_ratio(&np_coeffs(b, f, n), 2, &a, 0, z)?,
            (Quantity::Participation, Wrt::NumPlatforms) => {
                checked_ratio(&nnx_coeffs(b, f, n), 1, &dnx_coeffs(b, f, n), 0, z)?
            }
            (Quantity::ConsumerSurplus, Wrt::NumPlatforms) => {
                checked_ratio(&ncsk_coeffs(b, f, n), 0, &dcsk_coeffs(b, f, n), 0, z)?
            }
            (Quantity::Profit, Wrt::NumPlatforms) => {
                checked_ratio(&npik_coeffs(b, f, n, self.u0, z), 2, &dpik_coeffs(b, f, n), 0, z)?
            }
            (Quantity::Z, Wrt::NumPlatforms) => {
                // d(N omega)/dN = omega + N omega' dz/dN
                let dnx = self.value(Quantity::Participation, Wrt::NumPlatforms)?;
                (dnx - omega(z, n)) / (n * dw)
            }
        })
    }
}

/// `[dM_k/dz_k]^{-1}` at `z*`.
pub fn dz_du0(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.dz_du0()
}

pub fn dprice_du0(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::Price, Wrt::OutsideUtility)
}

pub fn dprofit_du0(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::Profit, Wrt::OutsideUtility)
}

pub fn dcs_du0(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::ConsumerSurplus, Wrt::OutsideUtility)
}

pub fn dprice_dn(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::Price, Wrt::NumPlatforms)
}

pub fn dparticipation_dn(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::Participation, Wrt::NumPlatforms)
}

pub fn dcs_dn(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::ConsumerSurplus, Wrt::NumPlatforms)
}

pub fn dprofit_dn(params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(Quantity::Profit, Wrt::NumPlatforms)
}

/// Closed-form derivative of any quantity (needs zero cross externalities).
pub fn analytic(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side) -> Result<f64> {
    point(params, side)?.value(quantity, wrt)
}

/// Same as [`analytic`] at a known `z*`, skipping the solve.
pub fn analytic_at(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side, z: f64) -> Result<f64> {
    if !params.cross_free() {
        return Err(Error::CrossExternalities);
    }
    let k = side.idx();
    Point { b: params.beta[k], f: params.phi[k][k], n: params.n(), u0: params.u0[k], z }.value(quantity, wrt)
}

fn perturbed(params: &MarketParams, side: Side, wrt: Wrt, delta: f64) -> Result<MarketParams> {
    match wrt {
        Wrt::OutsideUtility => {
            let mut p = params.clone();
            p.u0[side.idx()] += delta;
            Ok(p)
        }
        Wrt::NumPlatforms => params.clone().with_real_n(params.n() + delta),
    }
}

/// Central difference of the solved CNE quantity. `N` is moved as a real.
pub fn fd_derivative(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side, h: f64) -> Result<f64> {
    let tol = 1e-10;
    let up = equilibrium::solve_cne(&perturbed(params, side, wrt, h)?, tol)?;
    let down = equilibrium::solve_cne(&perturbed(params, side, wrt, -h)?, tol)?;
    Ok((quantity.of(&up, side) - quantity.of(&down, side)) / (2.0 * h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub quantity: Quantity,
    pub wrt: Wrt,
    pub side: Side,
    pub analytic: Option<f64>,
    pub finite_difference: f64,
    /// `|analytic - fd| / |analytic|`, absent without an analytic value.
    pub agreement: Option<f64>,
}

pub fn derivative_bundle(quantity: Quantity, wrt: Wrt, params: &MarketParams, side: Side) -> Result<DerivativeBundle> {
    let fd = fd_derivative(quantity, wrt, params, side, wrt.default_step())?;
    let analytic = if params.cross_free() { Some(analytic(quantity, wrt, params, side)?) } else { None };
    let agreement = analytic.map(|a| if a == 0.0 { fd.abs() } else { (a - fd).abs() / a.abs() });
    Ok(DerivativeBundle { quantity, wrt, side, analytic, finite_difference: fd, agreement })
}

/// Limits of price and profit as `u0 -> -inf` (`_u`) and `u0 -> +inf` (`_e`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLimits {
    pub p_u: f64,
    pub p_e: f64,
    pub pi_u: f64,
    pub pi_e: f64,
}

pub fn asymptotic_limits(params: &MarketParams, side: Side) -> Result<AsymptoticLimits> {
    if !params.cross_free() {
        return Err(Error::CrossExternalities);
    }
    let k = side.idx();
    let (b, f, n) = (params.beta[k], params.phi[k][k], params.n());
    Ok(AsymptoticLimits {
        p_u: n * b / (n - 1.0) - f / (n - 1.0),
        p_e: b,
        pi_u: b / (n - 1.0) - f / ((n - 1.0) * n),
        pi_e: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_spot_values() {
        let p = MarketParams::symmetric(2, 1.0, 0.0, 0.0).unwrap();
        let a = build_coeffs(Family::A, &p, Side::Buyer, None).unwrap();
        assert_eq!(a.get(0), 1.0);
        assert_eq!(a.get(1), 11.0);
        assert_eq!(a.get(6), 16.0);
        let s = build_coeffs(Family::S, &p, Side::Buyer, None).unwrap();
        assert_eq!(s.get(0), -1.0);
        assert!(build_coeffs(Family::NPik, &p, Side::Buyer, None).is_err());
    }

    #[test]
    fn family_lengths() {
        let p = MarketParams::symmetric(3, 0.9, 0.4, 0.1).unwrap();
        let x = Some(Extras { u0: 0.1, z: -0.5 });
        let want = |f: Family| match f {
            Family::A | Family::DPU | Family::DCsU | Family::D | Family::DCsk | Family::NCsk => (0, 6),
            Family::S | Family::DPiU | Family::DNx | Family::DPik => (0, 7),
            Family::NPU | Family::NCsU => (1, 5),
            Family::NPiU | Family::NNx => (1, 6),
            Family::NP => (2, 6),
            Family::NPik => (2, 7),
            Family::Y => (0, 3),
        };
        for f in Family::ALL {
            let c = build_coeffs(f, &p, Side::Seller, x).unwrap();
            let (lo, hi) = want(f);
            assert_eq!(c.lo, lo, "{f:?}");
            assert_eq!(c.lo + c.coeffs.len() - 1, hi, "{f:?}");
        }
        let dpu = build_coeffs(Family::DPU, &p, Side::Buyer, None).unwrap();
        let dcsu = build_coeffs(Family::DCsU, &p, Side::Buyer, None).unwrap();
        assert_eq!(dpu.coeffs, dcsu.coeffs);
    }

    #[test]
    fn base_case_frozen_derivatives() {
        let p = MarketParams::symmetric(2, 1.0, 0.0, 0.0).unwrap();
        let s = Side::Buyer;
        assert!((dz_du0(&p, s).unwrap() + 0.85082).abs() < 1e-5);
        assert!((dprice_du0(&p, s).unwrap() + 0.149179).abs() < 1e-6);
        assert!((dprice_dn(&p, s).unwrap() + 0.0437457).abs() < 1e-7);
        assert!((dparticipation_dn(&p, s).unwrap() - 0.126701).abs() < 1e-6);
        assert!((dcs_dn(&p, s).unwrap() - 0.377079).abs() < 1e-6);
    }

    #[test]
    fn refuses_cross_externalities() {
        let p = MarketParams::new(2, [1.0; 2], [0.0; 2], [[0.0, 0.1], [0.0, 0.0]], [0.0; 2]).unwrap();
        assert_eq!(dprice_du0(&p, Side::Buyer), Err(Error::CrossExternalities));
        assert!(fd_derivative(Quantity::Price, Wrt::OutsideUtility, &p, Side::Buyer, 1e-5).unwrap().is_finite());
    }

    #[test]
    fn dz_du0_vanishes_for_large_beta() {
        let p = MarketParams::symmetric(2, 1e3, 0.0, 0.0).unwrap();
        let v = dz_du0(&p, Side::Buyer).unwrap();
        assert!(v < 0.0 && v.abs() < 2e-3);
    }

    #[test]
    fn limits_base() {
        let p = MarketParams::symmetric(2, 1.0, 0.0, 0.0).unwrap();
        let l = asymptotic_limits(&p, Side::Buyer).unwrap();
        assert_eq!((l.p_u, l.p_e, l.pi_u, l.pi_e), (2.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn fd_is_second_order() {
        let p = MarketParams::symmetric(3, 0.8, 0.5, -0.4).unwrap();
        let f = |h| fd_derivative(Quantity::Price, Wrt::OutsideUtility, &p, Side::Buyer, h).unwrap();
        let exact = dprice_du0(&p, Side::Buyer).unwrap();
        let e1 = (f(1e-2) - exact).abs();
        let e2 = (f(5e-3) - exact).abs();
        assert!(e2 < 0.3 * e1, "{e1} {e2}");
    }
}
