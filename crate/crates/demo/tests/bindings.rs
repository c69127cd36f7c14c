use wormsim_demo::{score, similarity, Scenario};

#[test]
fn scores_match_the_hand_computed_values() {
    // mean 3, population sigma sqrt(2)
    let z = score(&[1.0, 2.0, 3.0, 4.0, 5.0], "standard").unwrap();
    let s = 2f64.sqrt();
    for (got, want) in z.iter().zip([-2.0 / s, -1.0 / s, 0.0, 1.0 / s, 2.0 / s]) {
        assert!((got - want).abs() < 1e-12);
    }
    // median 3, MAD 1
    let m = score(&[1.0, 2.0, 3.0, 4.0, 100.0], "modified").unwrap();
    assert!((m[4] - 0.6745 * 97.0).abs() < 1e-9);
    assert_eq!(score(&[4.0, 4.0, 4.0], "standard").unwrap(), vec![0.0; 3]);
}

#[test]
fn similarity_strips_the_pair() {
    assert_eq!(similarity(0, &[1, 2, 3], 1, &[0, 2, 3]), 1.0);
    assert_eq!(similarity(0, &[2, 3], 1, &[4, 5]), 0.0);
    assert!((similarity(0, &[2, 3, 4], 1, &[3, 4, 5]) - 0.5).abs() < 1e-12);
}

#[test]
fn scenario_steps_forward() {
    let mut s = Scenario::new(58, "epidemic", 1, true).unwrap();
    assert_eq!(s.positions().len(), 2 * 58);
    assert_eq!(s.classes().iter().filter(|c| **c > 0).count(), 10);
    s.step(1800.0);
    assert!(s.now() >= 1800.0);
    assert!(s.relay_counts().iter().sum::<u32>() > 0);
    assert!(s.contacts().chunks(2).all(|c| c[0] < c[1]));
    let clean = Scenario::new(58, "prophet", 1, false).unwrap();
    assert!(clean.classes().iter().all(|c| *c == 0));
}
