#![no_main]

use libfuzzer_sys::fuzz_target;
use lehmberg::runner::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        // Accepted configs must stay valid and enumerable.
        config.validate().expect("parsed config validates");
        let points = config.point_count();
        if points <= 4096 {
            assert_eq!(config.points().len(), points);
        }
        assert_eq!(config.hash().len(), 64);
    }
});
