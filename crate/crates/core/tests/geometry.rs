use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, TAU};

use wildsim::geometry::{collision_frames, dot, frame, norm, select_chart, z_rotation, Chart};

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let r = norm(v);
    (r > 1e-6).then(|| v.map(|x| x / r))
}

proptest! {
    #[test]
    fn every_direction_has_a_chart(v in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(unit(v).is_some());
        let u = unit(v).unwrap();
        let chart = select_chart(u).unwrap();
        prop_assert!(chart.contains(u));
        let b = frame(u).unwrap();
        prop_assert!(b.orthogonality_error() < 1e-12);
        prop_assert!((b.det() - 1.0).abs() < 1e-12);
        let e3 = b.column(2);
        prop_assert!((0..3).all(|i| (e3[i] - u[i]).abs() < 1e-12));
    }

    #[test]
    fn charts_agree_on_the_axis(v in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(unit(v).is_some());
        let u = unit(v).unwrap();
        for c in Chart::ALL {
            if let Ok(b) = c.basis(u) {
                prop_assert!(b.orthogonality_error() < 1e-12);
                prop_assert!((dot(b.column(2), u) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frames_shift_with_z_rotation(phi in 0.0f64..FRAC_PI_2 - 1e-4, theta in 0.0f64..TAU, alpha in 0.0f64..TAU) {
        let (l0, r0) = collision_frames(phi, theta);
        let (l1, r1) = collision_frames(phi, theta + alpha);
        let rot = z_rotation(alpha);
        prop_assert!((rot * l0).max_abs_diff(&l1) < 1e-12);
        prop_assert!((rot * r0).max_abs_diff(&r1) < 1e-12);
    }
}

#[test]
fn frame_columns_are_orthonormal_at_poles() {
    for u in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]] {
        let b = frame(u).unwrap();
        assert!(b.orthogonality_error() < 1e-14);
        assert!((dot(b.column(2), u) - 1.0).abs() < 1e-14);
    }
}
