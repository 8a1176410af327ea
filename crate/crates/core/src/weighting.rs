//! Density-derived per-sample loss weights.
//!
//! The density of sample `i` is `s_i = sum_j exp(-gamma_s * ||x_i - x_j||^2)`
//! over every training sample, the `j = i` term included, so `s_i >= 1`.
//! The signed variant multiplies each term by `y_i * y_j`: neighbours with
//! the same label add, neighbours with the other label subtract.
//!
//! A weighting [`Scheme`] maps the density to the weight `w_i` that scales
//! the slack penalty of sample `i` (or its term in a regression loss).

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Result, WlossError};
use crate::kernel::{check_gamma, check_uniform_dim, rbf_unchecked};
use crate::rng::seeded_rng;

/// Lower bound applied to signed-density weights, which can be zero or negative.
pub const SIGNED_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// `w = 1`: the standard C-SVM.
    None,
    /// 1: `sqrt(s)`
    Sqrt,
    /// 2: `s`
    Identity,
    /// 3: `s^2`
    Square,
    /// 4: `1 / sqrt(s)`
    InvSqrt,
    /// 5: `1 / s`
    Inv,
    /// 6: `1 / s^2`
    InvSquare,
    /// 7: signed density, floored at [`SIGNED_WEIGHT_FLOOR`]
    Signed,
    /// 8: `1 + U[0, 1]`, independent of the data
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::None,
        Scheme::Sqrt,
        Scheme::Identity,
        Scheme::Square,
        Scheme::InvSqrt,
        Scheme::Inv,
        Scheme::InvSquare,
        Scheme::Signed,
        Scheme::Random,
    ];

    /// The seven schemes computed from the training density.
    pub const DENSITY: [Scheme; 7] = [
        Scheme::Sqrt,
        Scheme::Identity,
        Scheme::Square,
        Scheme::InvSqrt,
        Scheme::Inv,
        Scheme::InvSquare,
        Scheme::Signed,
    ];

    /// Short identifier: `none` or the scheme number `1`..`8`.
    pub fn id(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::Sqrt => "1",
            Scheme::Identity => "2",
            Scheme::Square => "3",
            Scheme::InvSqrt => "4",
            Scheme::Inv => "5",
            Scheme::InvSquare => "6",
            Scheme::Signed => "7",
            Scheme::Random => "8",
        }
    }

    pub fn uses_density(self) -> bool {
        !matches!(self, Scheme::None | Scheme::Random)
    }

    pub fn needs_signed(self) -> bool {
        self == Scheme::Signed
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = WlossError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .or_else(|| {
                let named = match s.as_str() {
                    "sqrt" => Scheme::Sqrt,
                    "identity" => Scheme::Identity,
                    "square" => Scheme::Square,
                    "inv_sqrt" => Scheme::InvSqrt,
                    "inv" => Scheme::Inv,
                    "inv_square" => Scheme::InvSquare,
                    "signed" => Scheme::Signed,
                    "random" => Scheme::Random,
                    _ => return None,
                };
                Some(named)
            })
            .ok_or_else(|| WlossError::InvalidParameter(format!("unknown weighting scheme {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub s: Vec<f64>,
    pub sy: Option<Vec<f64>>,
    pub gamma_s: f64,
}

impl DensityVector {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

fn accumulate<S: AsRef<[f64]>>(x: &[S], y: Option<&[f64]>, gamma_s: f64) -> Result<DensityVector> {
    check_uniform_dim(x)?;
    check_gamma(gamma_s, "gamma_s")?;
    let l = x.len();
    let mut s = vec![1.0; l];
    let mut sy = y.map(|_| vec![1.0; l]);
    for i in 0..l {
        for j in (i + 1)..l {
            let k = rbf_unchecked(x[i].as_ref(), x[j].as_ref(), gamma_s);
            s[i] += k;
            s[j] += k;
            if let (Some(sy), Some(y)) = (sy.as_mut(), y) {
                let signed = y[i] * y[j] * k;
                sy[i] += signed;
                sy[j] += signed;
            }
        }
    }
    Ok(DensityVector { s, sy, gamma_s })
}

/// Kernel density of every sample with respect to the whole set.
pub fn density<S: AsRef<[f64]>>(x: &[S], gamma_s: f64) -> Result<DensityVector> {
    accumulate(x, None, gamma_s)
}

/// Density plus its label-signed counterpart.
pub fn signed_density<S: AsRef<[f64]>>(x: &[S], y: &[f64], gamma_s: f64) -> Result<DensityVector> {
    if x.len() != y.len() {
        return Err(WlossError::LengthMismatch {
            what: "labels",
            expected: x.len(),
            found: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(WlossError::InvalidParameter(format!(
            "signed density needs labels in {{-1, +1}}, got {bad}"
        )));
    }
    accumulate(x, Some(y), gamma_s)
}

/// Per-sample loss weights and how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    pub scheme: Scheme,
    pub gamma_s: Option<f64>,
    pub seed: Option<u64>,
    pub values: Vec<f64>,
}

impl SampleWeights {
    pub fn uniform(l: usize) -> Self {
        SampleWeights {
            scheme: Scheme::None,
            gamma_s: None,
            seed: None,
            values: vec![1.0; l],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rescales the weights to mean 1.
    pub fn normalized(mut self) -> Self {
        let mean = self.values.iter().sum::<f64>() / self.values.len().max(1) as f64;
        if mean > 0.0 {
            self.values.iter_mut().for_each(|w| *w /= mean);
        }
        self
    }

    /// Weights restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        SampleWeights {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            ..self.clone()
        }
    }

    /// One value per line.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|v| format!("{v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).map_err(|e| WlossError::io(path, e))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| WlossError::io(path, e))
    }
}

/// Maps a density vector to loss weights.
///
/// `dv` is required for the density schemes and must carry the signed
/// density for [`Scheme::Signed`]. `seed` only matters for [`Scheme::Random`].
pub fn make_weights(
    l: usize,
    dv: Option<&DensityVector>,
    scheme: Scheme,
    seed: u64,
) -> Result<SampleWeights> {
    let base = SampleWeights {
        scheme,
        gamma_s: None,
        seed: None,
        values: Vec::new(),
    };
    match scheme {
        Scheme::None => Ok(SampleWeights::uniform(l)),
        Scheme::Random => {
            let mut rng = seeded_rng(seed);
            let values = (0..l).map(|_| 1.0 + rng.gen_range(0.0..=1.0)).collect();
            Ok(SampleWeights {
                seed: Some(seed),
                values,
                ..base
            })
        }
        _ => {
            let dv = dv.ok_or_else(|| {
                WlossError::InvalidParameter(format!("scheme {scheme} needs a density vector"))
            })?;
            if dv.len() != l {
                return Err(WlossError::LengthMismatch {
                    what: "density vector",
                    expected: l,
                    found: dv.len(),
                });
            }
            let values: Vec<f64> = if scheme == Scheme::Signed {
                let sy = dv.sy.as_ref().ok_or_else(|| {
                    WlossError::InvalidParameter("scheme 7 needs the signed density".into())
                })?;
                sy.iter().map(|&v| v.max(SIGNED_WEIGHT_FLOOR)).collect()
            } else {
                dv.s.iter().map(|&s| apply(scheme, s)).collect()
            };
            Ok(SampleWeights {
                gamma_s: Some(dv.gamma_s),
                values,
                ..base
            })
        }
    }
}

fn apply(scheme: Scheme, s: f64) -> f64 {
    match scheme {
        Scheme::Sqrt => s.sqrt(),
        Scheme::Identity => s,
        Scheme::Square => s * s,
        Scheme::InvSqrt => 1.0 / s.sqrt(),
        Scheme::Inv => 1.0 / s,
        Scheme::InvSquare => 1.0 / (s * s),
        _ => unreachable!("not a density scheme"),
    }
}

/// Density (signed when needed) and weights in one call.
pub fn weights_for<S: AsRef<[f64]>>(
    x: &[S],
    y: &[f64],
    scheme: Scheme,
    gamma_s: Option<f64>,
    seed: u64,
) -> Result<SampleWeights> {
    if !scheme.uses_density() {
        return make_weights(x.len(), None, scheme, seed);
    }
    let gamma_s = gamma_s
        .ok_or_else(|| WlossError::InvalidParameter(format!("scheme {scheme} needs gamma_s")))?;
    let dv = if scheme.needs_signed() {
        signed_density(x, y, gamma_s)?
    } else {
        density(x, gamma_s)?
    };
    make_weights(x.len(), Some(&dv), scheme, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(s: Vec<f64>) -> DensityVector {
        DensityVector {
            s,
            sy: None,
            gamma_s: 1.0,
        }
    }

    #[test]
    fn single_sample_density_is_one() {
        assert_eq!(density(&[[3.0, 1.0]], 2.0).unwrap().s, vec![1.0]);
    }

    #[test]
    fn three_collinear_points() {
        let d = density(&[[0.0], [1.0], [2.0]], 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        let e4 = (-4.0f64).exp();
        let expected = [1.0 + e1 + e4, 1.0 + 2.0 * e1, 1.0 + e1 + e4];
        for (a, b) in d.s.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_gamma_counts_the_set() {
        let x = [[0.0, 1.0], [3.0, -2.0], [0.5, 0.5], [10.0, 4.0]];
        let d = density(&x, 1e-12).unwrap();
        for s in d.s {
            assert!((s - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn signed_density_of_one_class_equals_density() {
        let x = [[0.0], [0.4], [2.0]];
        let d = signed_density(&x, &[1.0, 1.0, 1.0], 0.7).unwrap();
        assert_eq!(d.sy.unwrap(), d.s);
    }

    #[test]
    fn signed_density_two_opposite_points() {
        let r: f64 = 1.5;
        let g = 0.3;
        let d = signed_density(&[[0.0], [r]], &[1.0, -1.0], g).unwrap();
        let expected = 1.0 - (-g * r * r).exp();
        for v in d.sy.unwrap() {
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn scheme_arithmetic() {
        let d = dv(vec![4.0]);
        let w = |sc| make_weights(1, Some(&d), sc, 0).unwrap().values[0];
        assert_eq!(w(Scheme::Sqrt), 2.0);
        assert_eq!(w(Scheme::Identity), 4.0);
        assert_eq!(w(Scheme::Square), 16.0);
        assert_eq!(w(Scheme::InvSqrt), 0.5);
        assert_eq!(w(Scheme::Inv), 0.25);
        assert_eq!(w(Scheme::InvSquare), 0.0625);
    }

    #[test]
    fn none_is_all_ones() {
        let w = make_weights(3, None, Scheme::None, 0).unwrap();
        assert_eq!(w.values, vec![1.0; 3]);
        assert_eq!(w.gamma_s, None);
    }

    #[test]
    fn random_weights_are_in_range_and_reproducible() {
        let a = make_weights(1000, None, Scheme::Random, 17).unwrap();
        let b = make_weights(1000, None, Scheme::Random, 17).unwrap();
        let c = make_weights(1000, None, Scheme::Random, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.values.iter().all(|&w| (1.0..=2.0).contains(&w)));
        assert_eq!(a.seed, Some(17));
    }

    #[test]
    fn signed_scheme_needs_sy_and_is_floored() {
        let err = make_weights(1, Some(&dv(vec![2.0])), Scheme::Signed, 0);
        assert!(err.is_err());
        let d = DensityVector {
            s: vec![2.0, 2.0],
            sy: Some(vec![-0.5, 0.5]),
            gamma_s: 1.0,
        };
        let w = make_weights(2, Some(&d), Scheme::Signed, 0).unwrap();
        assert_eq!(w.values, vec![SIGNED_WEIGHT_FLOOR, 0.5]);
    }

    #[test]
    fn density_schemes_need_a_density() {
        assert!(make_weights(2, None, Scheme::Inv, 0).is_err());
        assert!(make_weights(3, Some(&dv(vec![1.0, 2.0])), Scheme::Inv, 0).is_err());
        assert!(weights_for(&[[0.0], [1.0]], &[1.0, -1.0], Scheme::Inv, None, 0).is_err());
    }

    #[test]
    fn scheme_ids_round_trip() {
        for sc in Scheme::ALL {
            assert_eq!(sc.id().parse::<Scheme>().unwrap(), sc);
        }
        assert_eq!("inv".parse::<Scheme>().unwrap(), Scheme::Inv);
        assert!("9".parse::<Scheme>().is_err());
    }

    #[test]
    fn normalized_weights_have_unit_mean() {
        let w = SampleWeights {
            values: vec![1.0, 3.0],
            ..SampleWeights::uniform(2)
        }
        .normalized();
        assert_eq!(w.values, vec![0.5, 1.5]);
    }

    #[test]
    fn export_is_one_value_per_line() {
        let w = make_weights(2, Some(&dv(vec![4.0, 1.0])), Scheme::Sqrt, 0).unwrap();
        assert_eq!(w.to_text(), "2\n1\n");
    }

    fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..9)
    }

    proptest! {
        #[test]
        fn density_is_permutation_equivariant(x in points(), g in 0.05f64..3.0, rot in 0usize..8) {
            let n = x.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let px: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
            let s = density(&x, g).unwrap().s;
            let ps = density(&px, g).unwrap().s;
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((ps[k] - s[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn density_is_translation_invariant(x in points(), g in 0.05f64..3.0, t in -5.0f64..5.0) {
            let shifted: Vec<Vec<f64>> = x.iter().map(|p| p.iter().map(|v| v + t).collect()).collect();
            let a = density(&x, g).unwrap().s;
            let b = density(&shifted, g).unwrap().s;
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }

        #[test]
        fn density_bounds(x in points(), g in 0.05f64..3.0, signs in prop::collection::vec(any::<bool>(), 9)) {
            let y: Vec<f64> = (0..x.len()).map(|i| if signs[i] { 1.0 } else { -1.0 }).collect();
            let d = signed_density(&x, &y, g).unwrap();
            let sy = d.sy.unwrap();
            for (s, sy) in d.s.iter().zip(&sy) {
                prop_assert!(*s >= 1.0);
                prop_assert!(*s <= x.len() as f64 + 1e-12);
                prop_assert!(sy.abs() <= *s + 1e-12);
            }
        }

        #[test]
        fn schemes_are_monotone_in_density(a in 1.0f64..50.0, b in 1.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d = dv(vec![lo, hi]);
            for sc in [Scheme::Sqrt, Scheme::Identity, Scheme::Square] {
                let w = make_weights(2, Some(&d), sc, 0).unwrap().values;
                prop_assert!(w[0] <= w[1]);
            }
            for sc in [Scheme::InvSqrt, Scheme::Inv, Scheme::InvSquare] {
                let w = make_weights(2, Some(&d), sc, 0).unwrap().values;
                prop_assert!(w[0] >= w[1]);
                prop_assert!(w[1] > 0.0);
            }
        }
    }
}
