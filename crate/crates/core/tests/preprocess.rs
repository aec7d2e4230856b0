use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use streamwatch_core::preprocess::{crop, diff_window, motion_energy, remove_borders, transpose, ContentRect};
use streamwatch_core::sim::{gen_synthetic_frames, SyntheticSpec, BLOCK_INTENSITY};
use streamwatch_core::{DiffWindow, EventTimeline, Frame, FrameWindow, Interval, StreamId};

fn sid() -> StreamId {
    StreamId::new("cam").unwrap()
}

fn seeded(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Brute-force content rect: rows and columns whose max exceeds the threshold.
fn rect_oracle(f: &Frame, t: u8) -> ContentRect {
    let (w, h) = f.dims();
    let rows: Vec<usize> = (0..h).filter(|&y| (0..w).any(|x| f.get(x, y) > t)).collect();
    let cols: Vec<usize> = (0..w).filter(|&x| (0..h).any(|y| f.get(x, y) > t)).collect();
    if rows.is_empty() {
        return ContentRect { x0: 0, y0: 0, w, h };
    }
    ContentRect {
        x0: cols[0],
        y0: rows[0],
        w: cols[cols.len() - 1] - cols[0] + 1,
        h: rows[rows.len() - 1] - rows[0] + 1,
    }
}

fn frame_from(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Frame {
    let px = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
    Frame::new(w, h, 0, px).unwrap()
}

fn window_of(frames: Vec<Frame>) -> FrameWindow {
    let frames = frames.into_iter().enumerate().map(|(i, f)| f.with_index(i as u64)).collect();
    FrameWindow::new(sid(), frames).unwrap()
}

fn arb_frame(max_w: usize, max_h: usize) -> impl Strategy<Value = Frame> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |px| Frame::new(w, h, 0, px).unwrap())
    })
}

fn arb_window(max_len: usize) -> impl Strategy<Value = FrameWindow> {
    (1usize..6, 1usize..6, 1..=max_len).prop_flat_map(|(w, h, len)| {
        prop::collection::vec(prop::collection::vec(any::<u8>(), w * h), len + 1).prop_map(move |fs| {
            window_of(fs.into_iter().map(|px| Frame::new(w, h, 0, px).unwrap()).collect())
        })
    })
}

#[test]
fn letterboxed_content_rect() {
    let f = frame_from(10, 10, |x, y| if (3..9).contains(&x) && (2..8).contains(&y) { 200 } else { 0 });
    assert_eq!(remove_borders(&f, 10), ContentRect { x0: 3, y0: 2, w: 6, h: 6 });
}

#[test]
fn borderless_and_all_dark_give_full_rect() {
    let uniform = Frame::filled(7, 5, 0, 128).unwrap();
    assert_eq!(remove_borders(&uniform, 10), ContentRect::full(&uniform));
    let dark = Frame::filled(7, 5, 0, 0).unwrap();
    assert_eq!(remove_borders(&dark, 10), ContentRect::full(&dark));
}

#[test]
fn crop_ramp() {
    let ramp = frame_from(4, 4, |x, y| (4 * y + x) as u8);
    let c = crop(&ramp, ContentRect { x0: 1, y0: 1, w: 2, h: 2 }).unwrap();
    assert_eq!(c.dims(), (2, 2));
    assert_eq!(c.pixels(), &[5, 6, 9, 10]);
    let one = crop(&ramp, ContentRect { x0: 0, y0: 0, w: 1, h: 1 }).unwrap();
    assert_eq!(one.pixels(), &[0]);
    assert_eq!(crop(&ramp, ContentRect::full(&ramp)).unwrap(), ramp);
    assert!(crop(&ramp, ContentRect { x0: 3, y0: 0, w: 2, h: 1 }).is_err());
}

#[test]
fn transpose_swaps_indices() {
    let f = Frame::new(3, 2, 0, vec![1, 2, 3, 4, 5, 6]).unwrap();
    let t = transpose(&f);
    assert_eq!(t.dims(), (2, 3));
    assert_eq!(t.pixels(), &[1, 4, 2, 5, 3, 6]);
    let single = Frame::filled(1, 1, 0, 9).unwrap();
    assert_eq!(transpose(&single), single);
}

#[test]
fn identical_frames_give_zero_diffs() {
    let f = Frame::filled(8, 8, 0, 77).unwrap();
    let dw = diff_window(&window_of(vec![f; 21]));
    assert_eq!(dw.len(), 20);
    assert!(dw.diffs().iter().all(|d| d.pixels().iter().all(|&p| p == 0)));
    assert_eq!(motion_energy(&dw), 0.0);
}

#[test]
fn alternating_frames_diff_uniformly() {
    let frames = (0..9).map(|i| Frame::filled(4, 3, 0, if i % 2 == 0 { 10 } else { 12 }).unwrap()).collect();
    let dw = diff_window(&window_of(frames));
    assert!(dw.diffs().iter().all(|d| d.pixels().iter().all(|&p| p == 2)));
}

#[test]
fn energy_examples() {
    let uniform = |v: u8| DiffWindow::new(sid(), vec![Frame::filled(5, 5, 0, v).unwrap(); 3]).unwrap();
    assert_eq!(motion_energy(&uniform(0)), 0.0);
    assert_eq!(motion_energy(&uniform(255)), 1.0);
    assert!((motion_energy(&uniform(51)) - 0.04).abs() < 1e-15);
}

#[test]
fn quiet_synthetic_window_without_noise_is_still() {
    let tl = EventTimeline::new(vec![(sid(), vec![])]).unwrap();
    let spec = SyntheticSpec {
        noise: 0,
        ..SyntheticSpec::default()
    };
    let w = gen_synthetic_frames(&sid(), 3, &tl, &spec, 1).unwrap();
    assert_eq!(w.len(), 20);
    assert_eq!(motion_energy(&diff_window(&w)), 0.0);
}

#[test]
fn violent_synthetic_window_energy_matches_pixel_oracle() {
    let tl = EventTimeline::new(vec![(sid(), vec![Interval { start: 0, end: 10 }])]).unwrap();
    let spec = SyntheticSpec {
        width: 16,
        height: 16,
        len: 20,
        noise: 0,
        background_max: 0,
    };
    let w = gen_synthetic_frames(&sid(), 2, &tl, &spec, 9).unwrap();
    // each frame holds one 8x8 block at 255, shifted right by 2 with wrap
    let block_cols = |f: &Frame| -> Vec<usize> {
        (0..16).filter(|&x| (0..16).any(|y| f.get(x, y) == BLOCK_INTENSITY)).collect()
    };
    for f in w.frames() {
        assert_eq!(f.pixels().iter().filter(|&&p| p == BLOCK_INTENSITY).count(), 64);
        assert_eq!(block_cols(f).len(), 8);
    }
    let mut total = 0.0;
    for pair in w.frames().windows(2) {
        let mut changed = 0usize;
        for i in 0..256 {
            let d = pair[1].pixels()[i].abs_diff(pair[0].pixels()[i]);
            assert!(d == 0 || d == 255);
            changed += usize::from(d == 255);
        }
        // two columns vacated plus two entered, eight rows tall
        assert_eq!(changed, 4 * 8);
        total += changed as f64 / 256.0;
    }
    let oracle = total / 20.0;
    assert_eq!(oracle, 0.125);
    assert!((motion_energy(&diff_window(&w)) - oracle).abs() < 1e-15);
}

#[test]
fn synthetic_frames_are_deterministic() {
    let tl = EventTimeline::new(vec![(sid(), vec![Interval { start: 4, end: 6 }])]).unwrap();
    let spec = SyntheticSpec::default();
    for cycle in [0, 4, 5, 9] {
        let a = gen_synthetic_frames(&sid(), cycle, &tl, &spec, 3).unwrap();
        let b = gen_synthetic_frames(&sid(), cycle, &tl, &spec, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frames()[0].index(), cycle * 20);
    }
}

proptest! {
    #![proptest_config(seeded(1000, 0x5eed_0002))]

    #[test]
    fn transpose_is_an_involution(f in arb_frame(12, 12)) {
        prop_assert_eq!(transpose(&transpose(&f)), f);
    }

    #[test]
    fn diff_commutes_with_reversal(w in arb_window(6)) {
        let forward = diff_window(&w);
        let backward = diff_window(&w.reversed());
        let mut rev: Vec<Vec<u8>> = forward.diffs().iter().map(|d| d.pixels().to_vec()).collect();
        rev.reverse();
        let got: Vec<Vec<u8>> = backward.diffs().iter().map(|d| d.pixels().to_vec()).collect();
        prop_assert_eq!(got, rev);
    }

    #[test]
    fn diffs_match_per_pixel_oracle(w in arb_window(4)) {
        let dw = diff_window(&w);
        prop_assert_eq!(dw.len(), w.len());
        for (k, d) in dw.diffs().iter().enumerate() {
            let (a, b) = (&w.frames()[k], &w.frames()[k + 1]);
            for i in 0..d.pixels().len() {
                let expect = (i16::from(b.pixels()[i]) - i16::from(a.pixels()[i])).unsigned_abs() as u8;
                prop_assert_eq!(d.pixels()[i], expect);
            }
        }
    }

    #[test]
    fn letterbox_rect_matches_brute_force(
        (w, h) in (1usize..14, 1usize..14),
        bounds in (0usize..14, 0usize..14, 0usize..14, 0usize..14),
        t in 0u8..40,
        noise_seed in any::<u64>(),
    ) {
        let (x0, x1) = (bounds.0 % w, bounds.1 % w);
        let (y0, y1) = (bounds.2 % h, bounds.3 % h);
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        let f = frame_from(w, h, |x, y| {
            let inside = (xa..=xb).contains(&x) && (ya..=yb).contains(&y);
            let jitter = ((noise_seed >> ((x * 7 + y * 3) % 56)) & 0xff) as u8;
            if inside { jitter } else { jitter.min(t) }
        });
        let r = remove_borders(&f, t);
        prop_assert_eq!(r, rect_oracle(&f, t));
        // idempotent: the cropped frame has no border left
        let c = crop(&f, r).unwrap();
        prop_assert_eq!(remove_borders(&c, t), ContentRect::full(&c));
    }

    #[test]
    fn crop_commutes_with_transpose(f in arb_frame(10, 10), r in (0usize..10, 0usize..10, 1usize..10, 1usize..10)) {
        let (w, h) = f.dims();
        let rect = ContentRect { x0: r.0 % w, y0: r.1 % h, w: 1 + (r.2 - 1) % (w - r.0 % w), h: 1 + (r.3 - 1) % (h - r.1 % h) };
        let a = transpose(&crop(&f, rect).unwrap());
        let b = crop(&transpose(&f), rect.transposed()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn energy_in_unit_range_and_monotone_in_scale(
        px in prop::collection::vec(0u8..=127, 16),
        k in 1u8..=2,
    ) {
        let d = Frame::new(4, 4, 0, px.clone()).unwrap();
        let scaled = Frame::new(4, 4, 0, px.iter().map(|&p| p * k).collect()).unwrap();
        let e = motion_energy(&DiffWindow::new(sid(), vec![d]).unwrap());
        let es = motion_energy(&DiffWindow::new(sid(), vec![scaled]).unwrap());
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!(es >= e);
    }
}
