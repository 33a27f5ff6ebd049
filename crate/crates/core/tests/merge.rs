mod common;

use common::{luma_f64, naive_greedy, random_stream, rng};
use rand::Rng;
use stereorig::merge::{
    anaglyph_with, compose_all, decode_ppm, encode_ppm, merge_streams, pair_by_timestamp, pair_frames, side_by_side,
    write_manifest, write_ppm, Eye, Frame, FramePair, ManifestEntry, MergeMode,
};
use stereorig::Exec;

fn random_frame(r: &mut rand_chacha::ChaCha8Rng, w: u32, h: u32, eye: Eye) -> Frame {
    let pixels = (0..w * h * 3).map(|_| r.random()).collect();
    Frame::new(w, h, pixels, 0.0, eye).unwrap()
}

fn random_pair(r: &mut rand_chacha::ChaCha8Rng) -> FramePair {
    let (l, rt) = (random_frame(r, 8, 8, Eye::Left), random_frame(r, 8, 8, Eye::Right));
    FramePair { left: l, right: rt, timestamp_skew: 0.0 }
}

#[test]
fn anaglyph_matches_per_pixel_oracle() {
    let mut r = rng(71);
    for _ in 0..100 {
        let p = random_pair(&mut r);
        for exec in [Exec::Sequential, Exec::Parallel] {
            let out = anaglyph_with(&p, exec).unwrap();
            for y in 0..8 {
                for x in 0..8 {
                    let want = [luma_f64(p.right.pixel(x, y)), 0, luma_f64(p.left.pixel(x, y))];
                    assert_eq!(out.pixel(x, y), want, "({x}, {y})");
                }
            }
        }
    }
}

#[test]
fn sbs_matches_per_pixel_oracle() {
    let mut r = rng(73);
    for _ in 0..100 {
        let p = random_pair(&mut r);
        let out = side_by_side(&p).unwrap();
        assert_eq!((out.width, out.height), (16, 8));
        for y in 0..8 {
            for x in 0..16 {
                let want = if x < 8 { p.left.pixel(x, y) } else { p.right.pixel(x - 8, y) };
                assert_eq!(out.pixel(x, y), want);
            }
        }
    }
}

#[test]
fn pairing_matches_naive_greedy_and_accounts_for_every_frame() {
    let mut r = rng(79);
    for case in 0..200 {
        let n = r.random_range(0..=1000);
        let left = random_stream(&mut r, n, 33.3, 10.0);
        let m = r.random_range(0..=1000);
        let right = random_stream(&mut r, m, 33.3, 10.0);
        let tol = r.random_range(0.0..25.0);
        let got = pair_by_timestamp(&left, &right, tol).unwrap();
        let (pairs, dl, dr) = naive_greedy(&left, &right, tol);
        assert_eq!(got.pairs, pairs, "case {case}");
        assert_eq!(got.dropped_left, dl);
        assert_eq!(got.dropped_right, dr);
        assert_eq!(got.pairs.len() + got.dropped_left.len(), left.len());
        assert_eq!(got.pairs.len() + got.dropped_right.len(), right.len());
        for &(i, j) in &got.pairs {
            assert!((left[i] - right[j]).abs() <= tol);
        }
    }
}

#[test]
fn pair_frames_carries_skew() {
    let mk = |t: f64, eye| Frame::filled(2, 2, [1, 2, 3], t, eye);
    let left = vec![mk(0.0, Eye::Left), mk(33.0, Eye::Left), mk(66.0, Eye::Left)];
    let right = vec![mk(2.0, Eye::Right), mk(70.0, Eye::Right)];
    let p = pair_frames(left, right, 5.0).unwrap();
    assert_eq!(p.pairs.len(), 2);
    assert_eq!((p.dropped_left, p.dropped_right), (1, 0));
    assert_eq!(p.pairs[0].timestamp_skew, 2.0);
    assert_eq!(p.pairs[1].left.timestamp, 66.0);
}

#[test]
fn compose_all_keeps_order_in_both_modes() {
    let mut r = rng(83);
    let pairs: Vec<FramePair> = (0..40)
        .map(|i| {
            let mut p = random_pair(&mut r);
            p.left.timestamp = f64::from(i);
            p
        })
        .collect();
    for mode in [MergeMode::Sbs, MergeMode::Anaglyph] {
        let seq = compose_all(&pairs, mode, Exec::Sequential).unwrap();
        let par = compose_all(&pairs, mode, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
        assert!(seq.iter().enumerate().all(|(i, f)| f.timestamp == i as f64));
    }
}

#[test]
fn ppm_round_trips_random_frames() {
    let mut r = rng(89);
    for _ in 0..50 {
        let (w, h) = (r.random_range(1..20), r.random_range(1..20));
        let f = random_frame(&mut r, w, h, Eye::Left);
        assert_eq!(decode_ppm(&encode_ppm(&f), 0.0, Eye::Left).unwrap(), f);
    }
}

#[test]
fn merge_streams_writes_frames_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(97);
    for (eye, name, offset) in [(Eye::Left, "left", 0.0), (Eye::Right, "right", 3.0)] {
        let mut entries = Vec::new();
        for i in 0..5 {
            let mut f = random_frame(&mut r, 4, 3, eye);
            f.timestamp = f64::from(i) * 33.0 + offset;
            let path = format!("{name}_{i}.ppm");
            write_ppm(&dir.path().join(&path), &f).unwrap();
            entries.push(ManifestEntry { timestamp: f.timestamp, path: path.into() });
        }
        write_manifest(&dir.path().join(format!("{name}.txt")), &entries).unwrap();
    }
    let out = dir.path().join("out");
    let report = merge_streams(
        &dir.path().join("left.txt"),
        &dir.path().join("right.txt"),
        MergeMode::Anaglyph,
        5.0,
        &out,
        Exec::default(),
    )
    .unwrap();
    assert_eq!(report.pairs, 5);
    assert_eq!(report.outputs.len(), 5);
    assert!(report.outputs.iter().all(|p| p.exists()));
    let manifest = std::fs::read_to_string(report.manifest).unwrap();
    assert_eq!(manifest.lines().count(), 5);
    assert!(manifest.starts_with("0 frame_00000.ppm"));
}
