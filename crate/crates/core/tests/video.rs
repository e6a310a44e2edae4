use std::f64::consts::PI;

use selagg_core::metrics::ncc;
use selagg_core::proxy::RESPIRATORY_BAND_HZ;
use selagg_core::signal::SampledSignal;
use selagg_core::spectrum::dominant_frequency;
use selagg_core::video::{
    analyze, extract_pts, frame_proxy, prune, render_synthetic, FrameSequence, RenderConfig,
    VideoConfig,
};

fn breathing(rate: f64, fps: f64, secs: f64) -> SampledSignal {
    let n = (fps * secs) as usize;
    SampledSignal::new(
        (0..n)
            .map(|k| (2.0 * PI * rate * k as f64 / fps).cos())
            .collect(),
        fps,
        0.0,
    )
    .unwrap()
}

fn render(secs: f64, seed: u64) -> selagg_core::video::RenderedVideo {
    let mut cfg = RenderConfig::new(160, 120, 30.0, secs);
    cfg.texture_seed = seed;
    cfg.noise_sigma = 2.0;
    render_synthetic(&cfg, &breathing(0.25, 30.0, secs)).unwrap()
}

#[test]
fn pruned_pixels_sit_on_the_moving_patch() {
    let v = render(20.0, 3);
    let sel = prune(&v.frames, RESPIRATORY_BAND_HZ.0, 80.0).unwrap();
    let w = v.frames.width();
    let inside = sel
        .indices
        .iter()
        .filter(|(r, c)| v.moving_mask[r * w + c])
        .count();
    let frac = inside as f64 / sel.indices.len() as f64;
    assert!(frac >= 0.9, "{frac}");
    assert_eq!(
        prune(&v.frames, RESPIRATORY_BAND_HZ.0, 0.0)
            .unwrap()
            .indices
            .len(),
        160 * 120
    );
}

#[test]
fn prune_ignores_a_constant_brightness_offset() {
    let v = render(12.0, 5);
    // renderer keeps gray levels within [30, 225] plus noise, so +20 does not saturate
    let max = v
        .frames
        .frames()
        .iter()
        .flat_map(|f| f.iter())
        .copied()
        .max()
        .unwrap();
    assert!(max < 235);
    let brighter: Vec<Vec<u8>> = v
        .frames
        .frames()
        .iter()
        .map(|f| f.iter().map(|p| p + 20).collect())
        .collect();
    let seq = FrameSequence::new(
        v.frames.width(),
        v.frames.height(),
        v.frames.fps(),
        brighter,
    )
    .unwrap();
    assert_eq!(
        prune(&v.frames, 0.1, 80.0).unwrap(),
        prune(&seq, 0.1, 80.0).unwrap()
    );
}

#[test]
fn moving_pixels_vary_more_than_background() {
    let v = render(20.0, 9);
    let w = v.frames.width();
    let h = v.frames.height();
    let all = selagg_core::video::PixelSelection {
        indices: (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect(),
        threshold_percentile: 0.0,
    };
    let m = extract_pts(&v.frames, &all).unwrap();
    let var = |i: usize| m.row(i).iter().map(|x| x * x).sum::<f64>() / m.n_samples() as f64;
    let mut bg: Vec<f64> = (0..w * h).filter(|&i| !v.moving_mask[i]).map(var).collect();
    let mut fg: Vec<f64> = (0..w * h).filter(|&i| v.moving_mask[i]).map(var).collect();
    bg.sort_by(f64::total_cmp);
    fg.sort_by(f64::total_cmp);
    let bg99 = bg[(bg.len() * 99) / 100];
    let fg_median = fg[fg.len() / 2];
    assert!(
        fg_median > bg99,
        "moving median {fg_median} vs background p99 {bg99}"
    );
}

#[test]
fn proxy_carries_the_breathing_rate() {
    let v = render(40.0, 1);
    let p = frame_proxy(&v.frames).unwrap();
    let (f, df) = dominant_frequency(&p.samples, p.sample_rate).unwrap();
    assert!((f - 0.25).abs() <= df, "{f}");
}

#[test]
fn small_moving_region_still_works() {
    let secs = 30.0;
    let mut cfg = RenderConfig::new(160, 120, 30.0, secs).lateral();
    cfg.texture_seed = 4;
    cfg.noise_sigma = 2.0;
    let v = render_synthetic(&cfg, &breathing(0.25, 30.0, secs)).unwrap();
    let full = {
        let mut c = RenderConfig::new(160, 120, 30.0, secs);
        c.texture_seed = 4;
        c.noise_sigma = 2.0;
        render_synthetic(&c, &breathing(0.25, 30.0, secs)).unwrap()
    };
    let vc = VideoConfig::default();
    let a = analyze(&v.frames, &vc).unwrap();
    let b = analyze(&full.frames, &vc).unwrap();
    let r = ncc(a.estimate().samples(), v.rp.samples(), 30).unwrap();
    assert!(r > 0.9, "{r}");
    assert!(a.output.best().membership.cardinality() < b.output.best().membership.cardinality());
}
