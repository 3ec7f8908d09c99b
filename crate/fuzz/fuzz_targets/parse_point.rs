#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = fraclap::config::parse_point(data) {
        assert!((1..=3).contains(&p.len()));
        assert!(p.iter().all(|v| v.is_finite()));
    }
});
