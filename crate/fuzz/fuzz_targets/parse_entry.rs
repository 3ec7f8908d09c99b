#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(phi) = fraclap::testfuncs::parse_entry(data) {
        let x = phi.point.clone();
        if phi.check_point(&x).is_ok() {
            let _ = phi.eval(&x);
            let _ = phi.eta(&x);
        }
    }
});
