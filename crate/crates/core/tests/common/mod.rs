#![allow(dead_code)]

use quadrant_harmonic::WalkModel;

pub fn weighted_simple() -> WalkModel {
    WalkModel::from_triples(&[(0, 1, 0.375), (0, -1, 0.375), (1, 0, 0.125), (-1, 0, 0.125)]).unwrap()
}

pub fn tandem() -> WalkModel {
    let t = 1.0 / 3.0;
    WalkModel::from_triples(&[(1, 0, t), (0, -1, t), (-1, 1, t)]).unwrap()
}

pub fn reverse_tandem() -> WalkModel {
    let t = 1.0 / 3.0;
    WalkModel::from_triples(&[(0, 1, t), (-1, 0, t), (1, -1, t)]).unwrap()
}

pub fn diagonal_p11() -> WalkModel {
    WalkModel::from_triples(&[(1, 1, 0.25), (-1, 1, 0.25), (0, -1, 0.5)]).unwrap()
}

/// Symmetric `p01 = p10` model with a non-integer exponent `pi / theta`.
pub fn five_step() -> WalkModel {
    WalkModel::from_triples(&[(0, 1, 0.2), (1, 0, 0.2), (-1, 1, 0.2), (0, -1, 0.4)]).unwrap()
}

pub fn self_intersecting() -> WalkModel {
    let u = 1.0 / 14.0;
    WalkModel::from_triples(&[(0, 1, 8.0 * u), (1, 0, u), (-1, 0, 3.0 * u), (1, -4, 2.0 * u)]).unwrap()
}

pub fn same_orientation() -> WalkModel {
    WalkModel::from_triples(&[(-1, 0, 0.2), (1, -3, 0.2), (0, 1, 0.6)]).unwrap()
}

pub fn segment_curve() -> WalkModel {
    WalkModel::from_triples(&[(0, 1, 0.25), (0, -1, 0.25), (-1, 1, 0.25), (1, -1, 0.25)]).unwrap()
}

pub fn cusp() -> WalkModel {
    WalkModel::from_triples(&[(0, 1, 0.5), (-1, 0, 0.25), (1, 0, 0.125), (1, -4, 0.125)]).unwrap()
}

/// Small-jump models that satisfy the curve hypotheses.
pub fn corpus() -> Vec<(&'static str, WalkModel)> {
    vec![
        ("weighted_simple", weighted_simple()),
        ("tandem", tandem()),
        ("diagonal_p11", diagonal_p11()),
        ("reverse_tandem", reverse_tandem()),
        ("five_step", five_step()),
    ]
}

/// Zero-drift building blocks; any non-negative combination has zero drift.
const BLOCKS: [&[(i32, i32)]; 8] = [
    &[(1, 0), (-1, 0)],
    &[(0, 1), (0, -1)],
    &[(1, 1), (-1, -1)],
    &[(1, -1), (-1, 1)],
    &[(1, 0), (0, -1), (-1, 1)],
    &[(0, 1), (-1, 0), (1, -1)],
    &[(1, 1), (-1, 0), (0, -1)],
    &[(-1, -1), (1, 0), (0, 1)],
];

/// Small-jump zero-drift model from block weights; `None` when all weights vanish.
pub fn model_from_blocks(w: &[f64]) -> Option<WalkModel> {
    let mut acc = std::collections::BTreeMap::new();
    for (block, &wi) in BLOCKS.iter().zip(w) {
        for &step in block.iter() {
            *acc.entry(step).or_insert(0.0) += wi;
        }
    }
    let total: f64 = acc.values().sum();
    if total <= 0.0 {
        return None;
    }
    let triples: Vec<_> = acc.into_iter().filter(|e| e.1 > 0.0).map(|((k, l), p)| (k, l, p / total)).collect();
    WalkModel::from_triples(&triples).ok().map(|m| m.renormalized())
}

/// Strategy over zero-drift small-jump models with at least two blocks present.
pub fn zero_drift_models() -> impl proptest::strategy::Strategy<Value = WalkModel> {
    use proptest::prelude::*;
    proptest::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], 8)
        .prop_filter("need at least two blocks", |w| w.iter().filter(|&&x| x > 0.0).count() >= 2)
        .prop_filter_map("degenerate", |w| model_from_blocks(&w))
}

/// [`zero_drift_models`] restricted to walks without the step `(1, 1)`.
pub fn p11_zero_models() -> impl proptest::strategy::Strategy<Value = WalkModel> {
    use proptest::prelude::*;
    proptest::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], 8)
        .prop_map(|mut w| {
            w[2] = 0.0;
            w[6] = 0.0;
            w
        })
        .prop_filter("need at least two blocks", |w| w.iter().filter(|&&x| x > 0.0).count() >= 2)
        .prop_filter_map("degenerate", |w| model_from_blocks(&w))
}
