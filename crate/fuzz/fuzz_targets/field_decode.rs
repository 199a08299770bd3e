#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_cli::field_io;

fuzz_target!(|data: &[u8]| {
    let Ok((header, body)) = field_io::decode_header(data) else { return };
    assert_eq!(Some(body.len()), header.value_count().map(|n| n * 8));
    if let Ok(field) = field_io::decode(data) {
        // Header spelling may differ from the canonical one, but one
        // encode/decode cycle must reach a fixed point.
        let canonical = field_io::encode(&field);
        let again = field_io::decode(&canonical).expect("canonical form decodes");
        assert_eq!(field_io::encode(&again), canonical);
    }
});
