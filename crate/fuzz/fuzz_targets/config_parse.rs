#![no_main]

use libfuzzer_sys::fuzz_target;
use tpns_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::parse(text) {
        // The canonical form must parse back to the same entries.
        assert_eq!(Config::parse(&cfg.to_string()).as_ref(), Ok(&cfg));
        for key in cfg.keys() {
            let _ = cfg.parse_opt::<f64>(key);
            let _ = cfg.parse_list::<f64>(key);
        }
    }
});
