#![no_main]

use libfuzzer_sys::fuzz_target;
use uncert_core::io;
use uncert_core::qmath::max_abs;

fuzz_target!(|data: &[u8]| {
    if let Ok(state) = io::state_from_slice(data) {
        let text = io::state_to_string(&state);
        let again = io::state_from_str(&text).expect("accepted state reparses");
        assert_eq!(again.dims(), state.dims());
        assert_eq!(again.labels(), state.labels());
        assert_eq!(max_abs(&(again.matrix() - state.matrix())), 0.0);
    }
});
