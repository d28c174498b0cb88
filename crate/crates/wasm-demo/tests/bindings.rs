use onestep_wasm::{classification, decay, region_mask};

#[test]
fn mask_has_one_byte_per_cell() {
    let mask = region_mask(2, &[2.0 / 3.0, 1.0], (-10.0, 2.0), (-6.0, 6.0), 40).unwrap();
    assert_eq!(mask.len(), 1600);
    assert!(mask.iter().all(|&b| b <= 1));
    // A-stable: every cell left of the imaginary axis is inside.
    for row in 0..40 {
        assert!(mask[row * 40..row * 40 + 33].iter().all(|&b| b == 1));
    }
}

#[test]
fn mask_rejects_bad_input() {
    assert!(region_mask(2, &[0.5, 0.5], (-1.0, 1.0), (-1.0, 1.0), 8).is_err());
    assert!(region_mask(2, &[1.0], (-1.0, 1.0), (-1.0, 1.0), 8).is_err());
    assert!(region_mask(4, &[1.0, 2.0], (-1.0, 1.0), (-1.0, 1.0), 8).is_err());
    assert!(region_mask(2, &[1.0, 2.0], (1.0, -1.0), (-1.0, 1.0), 8).is_err());
}

#[test]
fn classification_json() {
    let v: serde_json::Value = serde_json::from_str(&classification(2, &[2.0 / 3.0, 1.0]).unwrap()).unwrap();
    assert_eq!(v["provably_a_stable"], true);
    assert_eq!(v["l_stable"], true);
    let v: serde_json::Value = serde_json::from_str(&classification(2, &[1.0 / 3.0, 0.5]).unwrap()).unwrap();
    assert_eq!(v["provably_a_stable"], false);
    let v: serde_json::Value = serde_json::from_str(&classification(3, &[0.0, 0.5, 1.0]).unwrap()).unwrap();
    assert_eq!(v["condition_applicable"], true);
}

#[test]
fn decay_trajectory_follows_stability_function() {
    // R(-1) = 5/13 for the (2/3, 1) pair.
    let u = decay(1.0, 1.0, 3, 2.0 / 3.0, 1.0).unwrap();
    assert_eq!(u.len(), 4);
    for (k, v) in u.iter().enumerate() {
        assert!((v - (5.0f64 / 13.0).powi(k as i32)).abs() < 1e-14);
    }
    assert!(decay(-1.0, 0.1, 3, 1.0, 2.0).is_err());
}
