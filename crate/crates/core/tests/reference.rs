use mqrk::harness::elliptic::sn_cn_dn;
use mqrk::harness::{fine_integration, find_problem, reference, ReferenceKind, DUFFING_K, DUFFING_OMEGA};

/// Hand-differentiated exact solutions.
fn exact_derivative(id: &str, t: f64) -> Vec<f64> {
    match id {
        "eg1" => vec![-1.0 / (t + 1.0).powi(2)],
        "eg2" => vec![-4.0 * t.powi(3) / (t.powi(4) + 1.0).powi(2)],
        "eg3" => {
            let r = (1.0 / (t * t) + 4.0 * t - 4.0).sqrt();
            vec![-1.0 / (t * t) + (-2.0 / t.powi(3) + 4.0) / (2.0 * r)]
        }
        "eg4" => {
            let d = (-2.0 * t).exp();
            vec![(4.0 * t - 4.0) * d, (4.0 * t - 8.0 / 3.0) * d - t.exp() / 3.0]
        }
        "eg5" => {
            let w = DUFFING_OMEGA;
            let m = (DUFFING_K / w).powi(2);
            let (s, c, d) = sn_cn_dn(w * t, m);
            vec![-w * w * s * (d * d + m * c * c), w * c * d]
        }
        _ => unreachable!(),
    }
}

#[test]
fn exact_solutions_satisfy_their_equations() {
    for id in ["eg1", "eg2", "eg3", "eg4", "eg5"] {
        let p = find_problem(id).unwrap();
        for k in 0..100 {
            let t = p.t0 + (p.t_end - p.t0) * k as f64 / 99.0;
            let u = p.exact(t).unwrap();
            let f = p.rhs(t, &u).unwrap();
            for (a, b) in exact_derivative(id, t).iter().zip(&f) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{id} at t={t}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn sn_matches_frozen_high_precision_values() {
    let table = [
        (0.5, 0.3, 0.47421562271182063, 0.88040873642646243, 0.9656789647459512),
        (2.0, 0.7, 0.99914705171773373, 0.041293692542085856, 0.54881109530569097),
        (10.0, 0.5, 0.85881250595277873, -0.51229003466699252, 0.79449388909516113),
        (200.0, 9.0e-6, -0.87351690959841924, 0.48679380506085641, 0.99999656635104393),
        (-3.3, 0.99, -0.99917621027634137, 0.040582025797247508, 0.10784447973647227),
        (1.0, 1.0e-8, 0.84147098407126011, 0.54030230701538293, 0.99999999645963291),
    ];
    for (x, m, s, c, d) in table {
        let (gs, gc, gd) = sn_cn_dn(x, m);
        assert!((gs - s).abs() < 1e-13, "sn({x}|{m}) = {gs}, expected {s}");
        assert!((gc - c).abs() < 1e-13, "cn({x}|{m}) = {gc}, expected {c}");
        assert!((gd - d).abs() < 1e-13, "dn({x}|{m}) = {gd}, expected {d}");
    }
}

#[test]
fn sn_small_parameter_series() {
    // sn(x|m) = sin x - (m/4)(x - sin x cos x) cos x + O(m²x²)
    let m = 1e-8;
    for k in 0..200 {
        let x = -20.0 + 0.2 * k as f64;
        let series = x.sin() - m / 4.0 * (x - x.sin() * x.cos()) * x.cos();
        assert!((sn_cn_dn(x, m).0 - series).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn duffing_reference_kinds_agree() {
    let p = find_problem("eg5").unwrap();
    let closed = reference("eg5").unwrap();
    assert_eq!(closed.kind, ReferenceKind::JacobiSn);
    assert_eq!(reference("eg1").unwrap().kind, ReferenceKind::ClosedForm);
    let fine = fine_integration(&p, 1e-4).unwrap();
    assert_eq!(fine.kind, ReferenceKind::FineIntegration);
    for t in [0.0, 3.7, 11.0, 20.0] {
        for (a, b) in closed.at(t).iter().zip(fine.at(t)) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "t={t}: {a} vs {b}");
        }
    }
    let end = closed.at(20.0);
    assert!((end[1] + 0.87351690959841924).abs() < 1e-13);
    assert!((end[0] - 4.8679213358181584).abs() < 1e-11);
}
