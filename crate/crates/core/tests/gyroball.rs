use hyperdoc::gyroball::*;
use proptest::prelude::*;

fn ball_vec(dim: usize, max_norm: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(move |v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > max_norm {
            v.iter().map(|x| x * max_norm / n).collect()
        } else {
            v
        }
    })
}

fn pair(max_norm: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(move |d| (ball_vec(d, max_norm), ball_vec(d, max_norm)))
}

fn p(v: &[f64]) -> BallPoint {
    BallPoint::unit(v.to_vec()).unwrap()
}

fn close(a: &BallPoint, b: &BallPoint, tol: f64) -> bool {
    a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #[test]
    fn outputs_stay_in_ball((a, b) in pair(0.9999), r in -20.0f64..20.0, t in 0.0f64..=1.0) {
        let s = BallParams::default();
        let (a, b) = (p(&a), p(&b));
        prop_assert!(mobius_add(&a, &b, &s).unwrap().norm() < 1.0);
        prop_assert!(mobius_scale(r, &a, &s).unwrap().norm() < 1.0);
        prop_assert!(geodesic_point(&a, &b, t, &s).unwrap().norm() < 1.0);
    }

    #[test]
    fn right_identity_and_inverse((a, _b) in pair(0.9)) {
        let s = BallParams::default();
        let a = p(&a);
        let o = BallPoint::origin(a.dim());
        prop_assert!(close(&mobius_add(&a, &o, &s).unwrap(), &a, 1e-9));
        prop_assert!(close(&mobius_add(&a, &mobius_neg(&a), &s).unwrap(), &o, 1e-9));
    }

    #[test]
    fn distance_is_a_metric((a, b) in pair(0.9), c in ball_vec(2, 0.9)) {
        let (pa, pb) = (p(&a), p(&b));
        let dab = poincare_distance(&pa, &pb).unwrap();
        prop_assert!(dab >= 0.0);
        prop_assert_eq!(dab, poincare_distance(&pb, &pa).unwrap());
        prop_assert_eq!(poincare_distance(&pa, &pa).unwrap(), 0.0);
        if a.len() == 2 {
            let pc = p(&c);
            let via = poincare_distance(&pa, &pc).unwrap() + poincare_distance(&pc, &pb).unwrap();
            prop_assert!(dab <= via + 1e-9);
        }
    }

    #[test]
    fn midpoint_is_equidistant((a, b) in pair(0.9)) {
        let (a, b) = (p(&a), p(&b));
        let m = midpoint(&a, &b, &BallParams::default()).unwrap();
        let (da, db) = (poincare_distance(&a, &m).unwrap(), poincare_distance(&m, &b).unwrap());
        prop_assert!((da - db).abs() <= 1e-9 * (1.0 + da));
    }

    #[test]
    fn scaled_ball_distance_matches_unit_ball((a, b) in pair(0.9), s in 0.5f64..4.0) {
        let params = BallParams::new(s, 1e-7).unwrap();
        let big = |v: &[f64]| BallPoint::new(v.iter().map(|x| x * s).collect(), &params).unwrap();
        let d_scaled = poincare_distance_scaled(&big(&a), &big(&b), &params).unwrap();
        let d_unit = poincare_distance(&p(&a), &p(&b)).unwrap();
        prop_assert!((d_scaled - d_unit).abs() <= 1e-9 * (1.0 + d_unit));
    }
}

#[test]
fn mobius_addition_is_not_commutative() {
    let s = BallParams::default();
    let a = p(&[0.5, 0.1]);
    let b = p(&[-0.2, 0.6]);
    let ab = mobius_add(&a, &b, &s).unwrap();
    let ba = mobius_add(&b, &a, &s).unwrap();
    let gap = ab.coords().iter().zip(ba.coords()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert!(gap > 1e-3);
}

#[test]
fn radius_two_ball_examples() {
    // With s = 2 the 1-D addition is (u + v) / (1 + uv/4).
    let s = BallParams::new(2.0, 1e-7).unwrap();
    let a = BallPoint::new(vec![1.0], &s).unwrap();
    let r = mobius_add(&a, &a, &s).unwrap();
    assert!((r.coords()[0] - 1.6).abs() < 1e-15);
    let h = mobius_scale(0.5, &r, &s).unwrap();
    assert!((h.coords()[0] - 1.0).abs() < 1e-14);
}

#[test]
fn construction_rejects_far_outside_points() {
    let s = BallParams::default();
    assert!(BallPoint::new(vec![1.5, 0.0], &s).is_err());
    assert!(BallPoint::new(vec![f64::NAN], &s).is_err());
    assert!(BallPoint::new(vec![], &s).is_err());
    let near = BallPoint::new(vec![1.0 + 1e-8, 0.0], &s).unwrap();
    assert!(near.norm() < 1.0);
}
