#![no_main]

use libfuzzer_sys::fuzz_target;
use uncert_core::io;
use uncert_core::qmath::max_abs;

fuzz_target!(|data: &[u8]| {
    if let Ok(basis) = io::basis_from_slice(data) {
        let text = io::basis_to_string(&basis);
        let again = io::basis_from_str(&text).expect("accepted basis reparses");
        assert_eq!(again.name(), basis.name());
        assert_eq!(max_abs(&(again.kets() - basis.kets())), 0.0);
    }
});
