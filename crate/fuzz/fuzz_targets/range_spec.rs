#![no_main]

use libfuzzer_sys::fuzz_target;
use lehmberg::runner::RangeSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<RangeSpec>() {
        let again: RangeSpec = spec.to_string().parse().expect("displayed range parses");
        assert_eq!(spec, again);
        if spec.points <= 100_000 {
            let values = spec.values();
            assert_eq!(values.len(), spec.points);
            assert_eq!(values[0], spec.start);
            assert_eq!(values[spec.points - 1], spec.stop);
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
