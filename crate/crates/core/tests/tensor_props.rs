use std::f64::consts::PI;

use orifield::linalg::{axial_distance, Matrix2};
use orifield::tensor::{
    afbf_tensor_closed, closed_form_tensor, deformed_orientation, orientation_of, structure_tensor_quadrature,
    DEFAULT_DEGENERACY_TOL,
};
use orifield::{AnisotropySpec, Hurst};
use proptest::prelude::*;

fn rotation(t: f64) -> Matrix2 {
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

fn svd_matrix() -> impl Strategy<Value = Matrix2> {
    (-PI..PI, -PI..PI, 0.3f64..3.0, 0.3f64..3.0, any::<bool>()).prop_map(|(u, v, s1, s2, flip)| {
        let s = Matrix2::new(s1, 0.0, 0.0, if flip { -s2 } else { s2 });
        rotation(u).mul(&s).mul(&rotation(v).transpose())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deformed_orientation_composes(a in -PI..PI, l1 in svd_matrix(), l2 in svd_matrix()) {
        let n = [a.cos(), a.sin()];
        let two_steps = deformed_orientation(deformed_orientation(n, &l1).unwrap(), &l2).unwrap();
        let at_once = deformed_orientation(n, &l2.mul(&l1)).unwrap();
        prop_assert!((two_steps[0] - at_once[0]).abs() < 1e-12 && (two_steps[1] - at_once[1]).abs() < 1e-12);
    }

    #[test]
    fn cone_tensor_is_psd_with_unit_trace(a in -PI..PI, d in 0.001f64..1.57) {
        let j = afbf_tensor_closed(a, d).unwrap();
        prop_assert!((j.trace() - 1.0).abs() < 1e-14);
        prop_assert!(j.is_psd(1e-14));
        let o = orientation_of(&j, DEFAULT_DEGENERACY_TOL).unwrap();
        prop_assert!(axial_distance(o.angle, a) < 1e-12);
    }

    #[test]
    fn orthogonal_maps_act_by_congruence(a in -PI..PI, d in 0.05f64..1.0, t in -PI..PI, flip in any::<bool>(), h in 0.1f64..0.9) {
        let q = if flip { rotation(t).mul(&Matrix2::new(1.0, 0.0, 0.0, -1.0)) } else { rotation(t) };
        let spec = AnisotropySpec::linearly_transformed(AnisotropySpec::cone(a, d).unwrap(), Hurst::new(h).unwrap(), q).unwrap();
        let closed = closed_form_tensor(&spec).unwrap();
        let quad = structure_tensor_quadrature(&spec, 4096).unwrap();
        prop_assert!(closed.max_abs_diff(&quad) < 1e-8, "{:?} vs {:?}", closed, quad);
        let expect = afbf_tensor_closed(a, d).unwrap().congruent(&q);
        prop_assert!(closed.max_abs_diff(&expect) < 1e-12);
    }
}
