//! Differential invariants over scale-normalized spatio-temporal jets.
//!
//! Every partial stored in a [`JetSlice`] is already multiplied by its
//! scale-normalization factor, so the operators below are written in terms of
//! normalized partials and carry no explicit powers of the scale parameters.

mod jet;
mod warp;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use jet::{partial, JetNormalization, JetSlice, Partial};
pub use warp::{cubic_sample, unwarp_frame, velocity_warp, warp_frame};

use crate::error::{Error, Result};
use crate::image::Image;

const L_X: Partial = partial(1, 0, 0);
const L_Y: Partial = partial(0, 1, 0);
const L_T: Partial = partial(0, 0, 1);
const L_XX: Partial = partial(2, 0, 0);
const L_XY: Partial = partial(1, 1, 0);
const L_YY: Partial = partial(0, 2, 0);
const L_XT: Partial = partial(1, 0, 1);
const L_YT: Partial = partial(0, 1, 1);
const L_TT: Partial = partial(0, 0, 2);
const L_XXT: Partial = partial(2, 0, 1);
const L_XYT: Partial = partial(1, 1, 1);
const L_YYT: Partial = partial(0, 2, 1);
const L_XTT: Partial = partial(1, 0, 2);
const L_YTT: Partial = partial(0, 1, 2);
const L_XXTT: Partial = partial(2, 0, 2);
const L_XYTT: Partial = partial(1, 1, 2);
const L_YYTT: Partial = partial(0, 2, 2);

/// Blending constant between first- and second-order terms of quasi quadrature measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureConstant {
    TwoThirds,
    QuarterE,
    Custom(f64),
}

impl QuadratureConstant {
    pub fn value(&self) -> f64 {
        match *self {
            QuadratureConstant::TwoThirds => 2.0 / 3.0,
            QuadratureConstant::QuarterE => std::f64::consts::E / 4.0,
            QuadratureConstant::Custom(c) => c,
        }
    }
}

impl FromStr for QuadratureConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2/3" => Ok(QuadratureConstant::TwoThirds),
            "e/4" => Ok(QuadratureConstant::QuarterE),
            other => {
                other.parse::<f64>().ok().filter(|c| *c >= 0.0).map(QuadratureConstant::Custom).ok_or_else(|| {
                    Error::param(format!("quadrature constant must be 2/3, e/4 or a number, got {other}"))
                })
            }
        }
    }
}

/// Parameters shared by the feature operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub c: QuadratureConstant,
    /// Relative weight of temporal against spatial derivatives.
    pub kappa: f64,
    /// Image velocity in pixels per frame.
    pub velocity: (f64, f64),
    /// Orientation for directional derivatives, in radians.
    pub phi: f64,
    /// Typical magnitude of the input data, used by the singularity guard.
    pub data_scale: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { c: QuadratureConstant::TwoThirds, kappa: 1.0, velocity: (0.0, 0.0), phi: 0.0, data_scale: 1.0 }
    }
}

/// Relative threshold on `|L_t|` below which the Gaussian curvature is reported as 0.
pub const CURVATURE_GUARD: f64 = 1e-9;

/// Features the pipeline can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    GradMag,
    Laplacian,
    DetHessian,
    Kappa,
    QuasiQ,
    DtLaplacian,
    DttLaplacian,
    QtLaplacian,
    DtDetHessian,
    DttDetHessian,
    QtDetHessian,
    DetHessian3,
    GaussCurvature,
    StLaplacian,
    Q1,
    Q2,
    Q3,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 17] = [
        FeatureKind::GradMag,
        FeatureKind::Laplacian,
        FeatureKind::DetHessian,
        FeatureKind::Kappa,
        FeatureKind::QuasiQ,
        FeatureKind::DtLaplacian,
        FeatureKind::DttLaplacian,
        FeatureKind::QtLaplacian,
        FeatureKind::DtDetHessian,
        FeatureKind::DttDetHessian,
        FeatureKind::QtDetHessian,
        FeatureKind::DetHessian3,
        FeatureKind::GaussCurvature,
        FeatureKind::StLaplacian,
        FeatureKind::Q1,
        FeatureKind::Q2,
        FeatureKind::Q3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::GradMag => "gradmag",
            FeatureKind::Laplacian => "laplacian",
            FeatureKind::DetHessian => "dethessian",
            FeatureKind::Kappa => "kappa",
            FeatureKind::QuasiQ => "quasiq",
            FeatureKind::DtLaplacian => "dtlap",
            FeatureKind::DttLaplacian => "dttlap",
            FeatureKind::QtLaplacian => "qtlap",
            FeatureKind::DtDetHessian => "dtdeth",
            FeatureKind::DttDetHessian => "dttdeth",
            FeatureKind::QtDetHessian => "qtdeth",
            FeatureKind::DetHessian3 => "deth3",
            FeatureKind::GaussCurvature => "gausscurv",
            FeatureKind::StLaplacian => "stlap",
            FeatureKind::Q1 => "q1",
            FeatureKind::Q2 => "q2",
            FeatureKind::Q3 => "q3",
        }
    }

    /// Partials the feature is computed from.
    pub fn required_partials(&self) -> Vec<Partial> {
        use FeatureKind::*;
        match self {
            GradMag => vec![L_X, L_Y],
            Laplacian => vec![L_XX, L_YY],
            DetHessian => vec![L_XX, L_XY, L_YY],
            Kappa => vec![L_X, L_Y, L_XX, L_XY, L_YY],
            QuasiQ => vec![L_X, L_Y, L_XX, L_XY, L_YY],
            DtLaplacian => vec![L_XXT, L_YYT],
            DttLaplacian | QtLaplacian => vec![L_XXT, L_YYT, L_XXTT, L_YYTT],
            DtDetHessian => vec![L_XX, L_XY, L_YY, L_XXT, L_XYT, L_YYT],
            DttDetHessian | QtDetHessian => vec![L_XX, L_XY, L_YY, L_XXT, L_XYT, L_YYT, L_XXTT, L_XYTT, L_YYTT],
            DetHessian3 | StLaplacian => vec![L_XX, L_XY, L_YY, L_XT, L_YT, L_TT],
            GaussCurvature => vec![L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_XT, L_YT, L_TT],
            Q1 => vec![L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_XT, L_YT, L_TT],
            Q2 => vec![L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_TT],
            Q3 => vec![L_XT, L_YT, L_XXT, L_XYT, L_YYT, L_XTT, L_YTT, L_XXTT, L_XYTT, L_YYTT],
        }
    }

    /// Highest temporal derivative order the feature needs.
    pub fn temporal_order(&self) -> u8 {
        self.required_partials().iter().map(|p| p.t).max().unwrap_or(0)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::param(format!("unknown feature {s}")))
    }
}

/// Union of the partials needed by a set of features.
pub fn required_partials(features: &[FeatureKind]) -> BTreeSet<Partial> {
    features.iter().flat_map(|f| f.required_partials()).collect()
}

fn pointwise<const N: usize>(jet: &JetSlice, ps: [Partial; N], f: impl Fn([f64; N]) -> f64) -> Result<Image> {
    let slices = jet.slices(ps)?;
    let (w, h) = jet.dims();
    let pixels = (0..w * h).map(|i| f(slices.map(|s| s[i]))).collect();
    Image::new(w, h, pixels)
}

/// Purely spatial invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialInvariant {
    GradMag,
    Laplacian,
    DetHessian,
    Kappa,
    QuasiQ,
}

/// Evaluates a spatial invariant of the (normalized) jet.
pub fn spatial_invariant(jet: &JetSlice, which: SpatialInvariant, params: &FeatureParams) -> Result<Image> {
    let c = params.c.value();
    match which {
        SpatialInvariant::GradMag => pointwise(jet, [L_X, L_Y], |[x, y]| (x * x + y * y).sqrt()),
        SpatialInvariant::Laplacian => pointwise(jet, [L_XX, L_YY], |[xx, yy]| xx + yy),
        SpatialInvariant::DetHessian => pointwise(jet, [L_XX, L_XY, L_YY], |[xx, xy, yy]| xx * yy - xy * xy),
        SpatialInvariant::Kappa => pointwise(jet, [L_X, L_Y, L_XX, L_XY, L_YY], |[x, y, xx, xy, yy]| {
            (x * x * yy + y * y * xx) - 2.0 * (x * y) * xy
        }),
        SpatialInvariant::QuasiQ => pointwise(jet, [L_X, L_Y, L_XX, L_XY, L_YY], |[x, y, xx, xy, yy]| {
            (x * x + y * y) + c * ((xx * xx + yy * yy) + 2.0 * xy * xy)
        }),
    }
}

/// Temporal derivatives of the spatial Laplacian and their quasi quadrature.
#[derive(Debug, Clone)]
pub struct LgnResponses {
    pub dt_laplacian: Image,
    pub dtt_laplacian: Image,
    pub qt_laplacian: Image,
}

pub fn lgn_operators(jet: &JetSlice, params: &FeatureParams) -> Result<LgnResponses> {
    let c = params.c.value();
    let dt_laplacian = pointwise(jet, [L_XXT, L_YYT], |[a, b]| a + b)?;
    let dtt_laplacian = pointwise(jet, [L_XXTT, L_YYTT], |[a, b]| a + b)?;
    let qt_laplacian = pointwise(jet, [L_XXT, L_YYT, L_XXTT, L_YYTT], |[a, b, aa, bb]| {
        let (d1, d2) = (a + b, aa + bb);
        d1 * d1 + c * d2 * d2
    })?;
    Ok(LgnResponses { dt_laplacian, dtt_laplacian, qt_laplacian })
}

/// Temporal derivatives of the spatial Hessian determinant and their quasi quadrature.
#[derive(Debug, Clone)]
pub struct DetHessianTemporal {
    pub dt: Image,
    pub dtt: Image,
    pub qt: Image,
}

fn dt_det_hessian(v: [f64; 6]) -> f64 {
    let [xx, xy, yy, xxt, xyt, yyt] = v;
    (xxt * yy + xx * yyt) - 2.0 * xy * xyt
}

fn dtt_det_hessian(v: [f64; 9]) -> f64 {
    let [xx, xy, yy, xxt, xyt, yyt, xxtt, xytt, yytt] = v;
    (xxtt * yy + xx * yytt) + 2.0 * xxt * yyt - 2.0 * xyt * xyt - 2.0 * xy * xytt
}

const DETH_T: [Partial; 6] = [L_XX, L_XY, L_YY, L_XXT, L_XYT, L_YYT];
const DETH_TT: [Partial; 9] = [L_XX, L_XY, L_YY, L_XXT, L_XYT, L_YYT, L_XXTT, L_XYTT, L_YYTT];

pub fn dethessian_temporal(jet: &JetSlice, params: &FeatureParams) -> Result<DetHessianTemporal> {
    let c = params.c.value();
    let dt = pointwise(jet, DETH_T, dt_det_hessian)?;
    let dtt = pointwise(jet, DETH_TT, dtt_det_hessian)?;
    let qt = pointwise(jet, DETH_TT, |v| {
        let d1 = dt_det_hessian([v[0], v[1], v[2], v[3], v[4], v[5]]);
        let d2 = dtt_det_hessian(v);
        d1 * d1 + c * d2 * d2
    })?;
    Ok(DetHessianTemporal { dt, dtt, qt })
}

/// Genuinely spatio-temporal second-order operators.
#[derive(Debug, Clone)]
pub struct SpatioTemporal {
    pub det_hessian: Image,
    pub gauss_curvature: Image,
    pub laplacian: Image,
}

fn det_hessian3(v: [f64; 6]) -> f64 {
    let [xx, xy, yy, xt, yt, tt] = v;
    (xx * yy * tt + 2.0 * xy * xt * yt) - (xx * yt * yt + yy * xt * xt + tt * xy * xy)
}

/// Gaussian curvature of the space-time surface `t = const` level sets, rescaled.
pub fn gauss_curvature_point(v: [f64; 9], guard: f64) -> f64 {
    let [x, y, t, xx, xy, yy, xt, yt, tt] = v;
    if t.abs() < guard {
        return 0.0;
    }
    let a = t * (xx * t - 2.0 * x * xt) + x * x * tt;
    let b = t * (yy * t - 2.0 * y * yt) + y * y * tt;
    let m = t * (-x * yt + xy * t - xt * y) + x * y * tt;
    (a * b - m * m) / (t * t)
}

pub fn spatiotemporal_operators(jet: &JetSlice, params: &FeatureParams) -> Result<SpatioTemporal> {
    let k2 = params.kappa * params.kappa;
    let guard = CURVATURE_GUARD * params.data_scale;
    let det_hessian = pointwise(jet, [L_XX, L_XY, L_YY, L_XT, L_YT, L_TT], det_hessian3)?;
    let laplacian = pointwise(jet, [L_XX, L_YY, L_TT], |[xx, yy, tt]| (xx + yy) + k2 * tt)?;
    let gauss_curvature =
        pointwise(jet, [L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_XT, L_YT, L_TT], |v| gauss_curvature_point(v, guard))?;
    Ok(SpatioTemporal { det_hessian, gauss_curvature, laplacian })
}

/// Spatio-temporal quasi quadrature measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuasiQuadrature {
    /// Joint first- and second-order energy over space and time.
    Q1,
    /// Product of a temporal and a spatial quasi quadrature.
    Q2,
    /// Spatial quasi quadrature of the first and second temporal derivatives.
    Q3,
}

pub fn quasi_quadrature(jet: &JetSlice, which: QuasiQuadrature, params: &FeatureParams) -> Result<Image> {
    let c = params.c.value();
    let k2 = params.kappa * params.kappa;
    match which {
        QuasiQuadrature::Q1 => pointwise(jet, [L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_XT, L_YT, L_TT], |v| {
            let [x, y, t, xx, xy, yy, xt, yt, tt] = v;
            let first = (x * x + y * y) + k2 * t * t;
            let second = ((xx * xx + yy * yy) + 2.0 * xy * xy) + k2 * (xt * xt + yt * yt) + k2 * k2 * tt * tt;
            first + c * second
        }),
        QuasiQuadrature::Q2 => pointwise(jet, [L_X, L_Y, L_T, L_XX, L_XY, L_YY, L_TT], |v| {
            let [x, y, t, xx, xy, yy, tt] = v;
            let temporal = t * t + c * tt * tt;
            let spatial = (x * x + y * y) + c * ((xx * xx + yy * yy) + 2.0 * xy * xy);
            temporal * spatial
        }),
        QuasiQuadrature::Q3 => {
            pointwise(jet, [L_XT, L_YT, L_XXT, L_XYT, L_YYT, L_XTT, L_YTT, L_XXTT, L_XYTT, L_YYTT], |v| {
                let [xt, yt, xxt, xyt, yyt, xtt, ytt, xxtt, xytt, yytt] = v;
                let first = (xt * xt + yt * yt) + c * ((xxt * xxt + yyt * yyt) + 2.0 * xyt * xyt);
                let second = (xtt * xtt + ytt * ytt) + c * ((xxtt * xxtt + yytt * yytt) + 2.0 * xytt * xytt);
                first + c * second
            })
        }
    }
}

/// Directional derivative `d_phi^m1 d_perp^m2 d_t^n` from Cartesian partials.
///
/// `d_phi = cos(phi) d_x + sin(phi) d_y` and `d_perp = sin(phi) d_x - cos(phi) d_y`.
pub fn directional_derivative(jet: &JetSlice, phi: f64, m1: u8, m2: u8, n: u8) -> Result<Image> {
    let (s, c) = phi.sin_cos();
    // coeffs[a]: weight of d_x^a d_y^(order - a)
    let mut coeffs = vec![1.0];
    for (cx, cy, count) in [(c, s, m1), (s, -c, m2)] {
        for _ in 0..count {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (a, w) in coeffs.iter().enumerate() {
                next[a + 1] += w * cx;
                next[a] += w * cy;
            }
            coeffs = next;
        }
    }
    let order = (m1 + m2) as usize;
    let (w, h) = jet.dims();
    let mut out = vec![0.0; w * h];
    for (a, weight) in coeffs.iter().enumerate() {
        if *weight == 0.0 {
            continue;
        }
        let img = jet.get(partial(a as u8, (order - a) as u8, n))?;
        for (o, v) in out.iter_mut().zip(img.pixels()) {
            *o += weight * v;
        }
    }
    Image::new(w, h, out)
}

/// Evaluates a single feature.
pub fn evaluate(kind: FeatureKind, jet: &JetSlice, params: &FeatureParams) -> Result<Image> {
    use FeatureKind::*;
    let c = params.c.value();
    match kind {
        GradMag => spatial_invariant(jet, SpatialInvariant::GradMag, params),
        Laplacian => spatial_invariant(jet, SpatialInvariant::Laplacian, params),
        DetHessian => spatial_invariant(jet, SpatialInvariant::DetHessian, params),
        Kappa => spatial_invariant(jet, SpatialInvariant::Kappa, params),
        QuasiQ => spatial_invariant(jet, SpatialInvariant::QuasiQ, params),
        DtLaplacian => pointwise(jet, [L_XXT, L_YYT], |[a, b]| a + b),
        DttLaplacian => pointwise(jet, [L_XXTT, L_YYTT], |[a, b]| a + b),
        QtLaplacian => pointwise(jet, [L_XXT, L_YYT, L_XXTT, L_YYTT], |[a, b, aa, bb]| {
            let (d1, d2) = (a + b, aa + bb);
            d1 * d1 + c * d2 * d2
        }),
        DtDetHessian => pointwise(jet, DETH_T, dt_det_hessian),
        DttDetHessian => pointwise(jet, DETH_TT, dtt_det_hessian),
        QtDetHessian => Ok(dethessian_temporal(jet, params)?.qt),
        DetHessian3 => pointwise(jet, [L_XX, L_XY, L_YY, L_XT, L_YT, L_TT], det_hessian3),
        GaussCurvature => Ok(spatiotemporal_operators(jet, params)?.gauss_curvature),
        StLaplacian => {
            let k2 = params.kappa * params.kappa;
            pointwise(jet, [L_XX, L_YY, L_TT], |[xx, yy, tt]| (xx + yy) + k2 * tt)
        }
        Q1 => quasi_quadrature(jet, QuasiQuadrature::Q1, params),
        Q2 => quasi_quadrature(jet, QuasiQuadrature::Q2, params),
        Q3 => quasi_quadrature(jet, QuasiQuadrature::Q3, params),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn jet_from(values: &[(Partial, f64)]) -> JetSlice {
        let map: BTreeMap<Partial, Image> = values.iter().map(|(p, v)| (*p, Image::filled(1, 1, *v))).collect();
        JetSlice::from_partials(map, JetNormalization::identity()).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for k in FeatureKind::ALL {
            assert_eq!(k.name().parse::<FeatureKind>().unwrap(), k);
        }
        assert!("nope".parse::<FeatureKind>().is_err());
        assert_eq!(FeatureKind::Q3.temporal_order(), 2);
        assert_eq!(FeatureKind::DetHessian.temporal_order(), 0);
    }

    #[test]
    fn missing_partial_is_reported() {
        let jet = jet_from(&[(L_XX, 1.0)]);
        assert!(matches!(
            spatial_invariant(&jet, SpatialInvariant::Laplacian, &FeatureParams::default()),
            Err(Error::MissingPartial(_))
        ));
    }

    #[test]
    fn det_hessian3_of_diagonal_hessian() {
        let jet = jet_from(&[(L_XX, 2.0), (L_YY, 2.0), (L_TT, 2.0), (L_XY, 0.0), (L_XT, 0.0), (L_YT, 0.0)]);
        let out = evaluate(FeatureKind::DetHessian3, &jet, &FeatureParams::default()).unwrap();
        assert_eq!(out.pixels()[0], 8.0);
    }

    #[test]
    fn st_laplacian_without_time_weight() {
        let jet = jet_from(&[(L_XX, 1.5), (L_YY, -0.25), (L_TT, 9.0)]);
        let params = FeatureParams { kappa: 0.0, ..Default::default() };
        assert_eq!(evaluate(FeatureKind::StLaplacian, &jet, &params).unwrap().pixels()[0], 1.25);
    }

    #[test]
    fn curvature_guard() {
        let v = [0.3, -0.2, 1e-12, 1.0, 0.1, 0.5, 0.2, 0.3, 0.4];
        assert_eq!(gauss_curvature_point(v, 1e-9), 0.0);
    }

    #[test]
    fn directional_first_order() {
        let jet = jet_from(&[(L_X, 0.7), (L_Y, -1.3), (L_XX, 0.2), (L_XY, 0.5), (L_YY, -0.4)]);
        let lx = directional_derivative(&jet, 0.0, 1, 0, 0).unwrap().pixels()[0];
        assert_eq!(lx, 0.7);
        let ly = directional_derivative(&jet, std::f64::consts::FRAC_PI_2, 1, 0, 0).unwrap().pixels()[0];
        assert!((ly + 1.3).abs() < 1e-15);
        let lxy = directional_derivative(&jet, 0.0, 1, 1, 0).unwrap().pixels()[0];
        assert!((lxy + 0.5).abs() < 1e-15);
        for i in 0..16 {
            let phi = i as f64 * 0.4;
            let a = directional_derivative(&jet, phi, 1, 0, 0).unwrap().pixels()[0];
            let b = directional_derivative(&jet, phi, 0, 1, 0).unwrap().pixels()[0];
            assert!((a * a + b * b - (0.49 + 1.69)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_constant_parsing() {
        assert_eq!("2/3".parse::<QuadratureConstant>().unwrap().value(), 2.0 / 3.0);
        assert_eq!("e/4".parse::<QuadratureConstant>().unwrap().value(), std::f64::consts::E / 4.0);
        assert!("-1".parse::<QuadratureConstant>().is_err());
    }
}
