#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = fraclap::config::parse_config(data) {
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(fraclap::config::parse_config(&text).unwrap(), cfg);
    }
});
