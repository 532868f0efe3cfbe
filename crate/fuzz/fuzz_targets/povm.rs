#![no_main]

use libfuzzer_sys::fuzz_target;
use uncert_core::io;
use uncert_core::qmath::max_abs;

fuzz_target!(|data: &[u8]| {
    if let Ok(povm) = io::povm_from_slice(data) {
        let text = io::povm_to_string(&povm);
        let again = io::povm_from_str(&text).expect("accepted povm reparses");
        assert_eq!(again.n(), povm.n());
        for (a, b) in again.elements().iter().zip(povm.elements()) {
            assert_eq!(max_abs(&(a - b)), 0.0);
        }
    }
});
