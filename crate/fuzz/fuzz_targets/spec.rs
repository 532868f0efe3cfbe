#![no_main]

use libfuzzer_sys::fuzz_target;
use uncert_core::io;
use uncert_core::qmath::max_abs;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = io::spec_from_slice(data) {
        let text = io::spec_to_string(&spec);
        let again = io::spec_from_str(&text).expect("accepted spec reparses");
        assert_eq!(again.dims, spec.dims);
        assert_eq!(again.s, spec.s);
        assert_eq!(again.p, spec.p);
        assert_eq!(again.q, spec.q);
        match (&again.side_blocks, &spec.side_blocks) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(b) {
                    assert_eq!(max_abs(&(x - y)), 0.0);
                }
            }
            _ => panic!("side_blocks presence changed"),
        }
        match (&again.omega_terms, &spec.omega_terms) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(b) {
                    assert_eq!((x.s, x.beta, x.gamma), (y.s, y.beta, y.gamma));
                    assert_eq!(x.weight, y.weight);
                    assert_eq!(max_abs(&(&x.side - &y.side)), 0.0);
                }
            }
            _ => panic!("omega_terms presence changed"),
        }
    }
});
