mod common;

use common::{brute_modes, brute_pick, random_caps, rng};
use proptest::prelude::*;
use stereorig::registry::negotiate_sets;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn negotiation_properties(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_caps(&mut r), random_caps(&mut r));
        let ab = negotiate_sets(&a, &b).unwrap();
        prop_assert_eq!(&ab, &negotiate_sets(&b, &a).unwrap());

        let aa = negotiate_sets(&a, &a).unwrap();
        prop_assert_eq!(aa.resolution, *a.resolutions.last().unwrap());
        prop_assert_eq!(aa.frame_rate, *a.frame_rates.last().unwrap());
        prop_assert_eq!(&aa.focus_modes, &a.focus_modes);
        prop_assert_eq!(&aa.capture_modes, &a.capture_modes);

        prop_assert_eq!(ab.resolution, brute_pick(&a.resolutions, &b.resolutions));
        prop_assert_eq!(ab.frame_rate, brute_pick(&a.frame_rates, &b.frame_rates));
        prop_assert_eq!(&ab.focus_modes, &brute_modes(&a.focus_modes, &b.focus_modes));
        prop_assert_eq!(&ab.capture_modes, &brute_modes(&a.capture_modes, &b.capture_modes));

        // Never above what the weaker side can do.
        prop_assert!(ab.frame_rate <= *a.frame_rates.last().unwrap().min(b.frame_rates.last().unwrap()));
        prop_assert!(ab.resolution <= *a.resolutions.last().unwrap().min(b.resolutions.last().unwrap()));
    }
}

#[test]
fn disjoint_frame_rates_take_the_lower_maximum() {
    let mut r = rng(1);
    let mut a = random_caps(&mut r);
    let mut b = a.clone();
    a.frame_rates = [24, 30].into();
    b.frame_rates = [25, 60].into();
    assert_eq!(negotiate_sets(&a, &b).unwrap().frame_rate, 30);
}
