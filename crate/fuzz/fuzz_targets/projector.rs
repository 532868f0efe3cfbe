#![no_main]

use libfuzzer_sys::fuzz_target;
use uncert_core::io;
use uncert_core::qmath::max_abs;

fuzz_target!(|data: &[u8]| {
    if let Ok(pi) = io::projector_from_slice(data) {
        let text = io::projector_to_string(&pi);
        let again = io::projector_from_str(&text).expect("accepted projector reparses");
        assert_eq!(max_abs(&(&again - &pi)), 0.0);
    }
});
