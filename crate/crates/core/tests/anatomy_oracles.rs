use std::collections::BTreeSet;
use std::f64::consts::PI;

use scarforge_core::anatomy::{
    candidate_region, location_to_segments, AnatomyMaps, Extent, SliceLevel, WallDepth, WallLocation,
};
use scarforge_core::phantoms::{make_annulus, place_rvips};
use scarforge_core::raster::{LabeledMask, Point2};
use scarforge_core::rng::seeded_rng;

fn annulus(n: usize, c: Point2, r_in: f64, r_out: f64) -> LabeledMask {
    make_annulus(c, r_in, r_out, (n, n), 1.0, 0.0, &mut seeded_rng(0)).unwrap().1
}

fn maps(myo: &LabeledMask, c: Point2, r_out: f64, level: SliceLevel) -> AnatomyMaps {
    let (a, i) = place_rvips(c, r_out, -1.733, 2.071);
    AnatomyMaps::compute(myo, c, a, i, level).unwrap()
}

#[test]
fn basal_segments_have_equal_populations() {
    let c = Point2::new(80.0, 80.0);
    let myo = annulus(160, c, 40.0, 60.0);
    let m = maps(&myo, c, 60.0, SliceLevel::Basal);
    let total = myo.count_nonzero() as f64;
    for id in 1..=6 {
        let n = m.segments.count(id) as f64;
        assert!((n - total / 6.0).abs() <= 0.02 * total / 6.0, "segment {id}: {n} of {total}");
    }
}

#[test]
fn layer_thirds_follow_annular_areas() {
    for (r_in, r_out) in [(20.0, 30.0), (60.0, 70.0)] {
        let c = Point2::new(80.0, 80.0);
        let myo = annulus(160, c, r_in, r_out);
        let m = maps(&myo, c, r_out, SliceLevel::Mid);
        let w = r_out - r_in;
        let area = |a: f64, b: f64| PI * (b * b - a * a);
        let counts: Vec<f64> = (1..=3).map(|l| m.layers.count(l) as f64).collect();
        for (k, &n) in counts.iter().enumerate() {
            let k = k as f64;
            let expected = area(r_in + k * w / 3.0, r_in + (k + 1.0) * w / 3.0);
            assert!((n - expected).abs() <= 0.06 * expected, "layer {k} of [{r_in}, {r_out}]: {n} vs {expected:.1}");
        }
        if r_in == 60.0 {
            // Thin wall relative to its radius: thirds are nearly equal.
            let mean = counts.iter().sum::<f64>() / 3.0;
            assert!(counts.iter().all(|n| (n - mean).abs() <= 0.1 * mean), "{counts:?}");
        }
    }
}

#[test]
fn layer_index_is_monotone_in_depth() {
    let c = Point2::new(50.3, 48.9);
    let myo = LabeledMask::from_fn(100, 100, |x, y| {
        let (dx, dy) = ((x as f64 - c.x) / 1.3, y as f64 - c.y);
        let r = dx.hypot(dy);
        u32::from((15.0..=27.0).contains(&r))
    });
    let depth = WallDepth::compute(&myo).unwrap();
    let layers = depth.layer_map();
    let mut range = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for (x, y) in myo.pixels_with(1) {
        let t = depth.relative_depth(x, y).unwrap();
        let l = layers.get(x, y) as usize;
        assert!((1..=3).contains(&l));
        range[l - 1].0 = range[l - 1].0.min(t);
        range[l - 1].1 = range[l - 1].1.max(t);
    }
    assert!(range[0].1 < range[1].0 && range[1].1 < range[2].0, "{range:?}");
}

#[test]
fn boundary_thickness_matches_opposing_boundary() {
    // Elliptical ring, so the wall is not uniform.
    let c = Point2::new(60.0, 55.0);
    let inside = |x: f64, y: f64, a: f64, b: f64| ((x - c.x) / a).powi(2) + ((y - c.y) / b).powi(2) <= 1.0;
    let myo = LabeledMask::from_fn(120, 110, |x, y| {
        let (x, y) = (x as f64, y as f64);
        u32::from(inside(x, y, 40.0, 32.0) && !inside(x, y, 28.0, 24.0))
    });
    let depth = WallDepth::compute(&myo).unwrap();
    let cavity: Vec<(usize, usize)> = myo
        .pixels_with(0)
        .into_iter()
        .filter(|&(x, y)| inside(x as f64, y as f64, 28.0, 24.0))
        .collect();
    let mut checked = 0;
    for (x, y) in myo.pixels_with(1) {
        let on_outer_edge = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            myo.get(nx as usize, ny as usize) == 0 && !inside(nx as f64, ny as f64, 28.0, 24.0)
        });
        if !on_outer_edge {
            continue;
        }
        let opposing = cavity
            .iter()
            .map(|&(cx, cy)| (cx as f64 - x as f64).hypot(cy as f64 - y as f64))
            .fold(f64::INFINITY, f64::min);
        let th = depth.thickness(x, y).unwrap();
        assert!((th - opposing).abs() <= 1.0, "({x},{y}): th {th} vs {opposing}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn candidates_nest_inside_transmural() {
    let c = Point2::new(56.0, 56.0);
    let myo = annulus(112, c, 20.0, 32.0);
    for level in SliceLevel::ALL {
        let m = maps(&myo, c, 32.0, level);
        for loc in WallLocation::all() {
            let segs = location_to_segments(loc, level);
            let full = candidate_region(&myo, &segs, Extent::Transmural, &m.segments, &m.layers).unwrap();
            for e in Extent::ALL {
                let part = candidate_region(&myo, &segs, e, &m.segments, &m.layers).unwrap();
                assert!(part.labels().iter().zip(full.labels()).all(|(&p, &f)| p == 0 || f != 0));
            }
        }
    }
}

#[test]
fn sub_endocardial_segment_three_is_an_eighteenth() {
    let c = Point2::new(80.0, 80.0);
    let myo = annulus(160, c, 60.0, 70.0);
    let m = maps(&myo, c, 70.0, SliceLevel::Basal);
    let cand = candidate_region(&myo, &BTreeSet::from([3]), Extent::SubEndocardial, &m.segments, &m.layers).unwrap();
    let ratio = cand.count_nonzero() as f64 / (myo.count_nonzero() as f64 / 18.0);
    assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");
}
