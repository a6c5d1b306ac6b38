//! Parse a run file, print the derived couplings, and emit the canonical form.
//!
//! Usage: config_roundtrip [file]. Defaults to configs/cavity.conf.

use std::path::PathBuf;

use qnd_squeeze::config::{emit_config, parse_config, parse_config_str};

fn main() -> qnd_squeeze::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/cavity.conf")));
    let cfg = parse_config(&path)?;
    let c = cfg.physical.couplings();
    println!("# {}", path.display());
    println!("# chi1 {:.4e}  chi2 {:.4e}  mu {:.4e}", c.chi1, c.chi2, c.mu);
    println!("# lambda {:.4e}  zeta {:.4e}  photons {:.4e}", c.lambda, c.zeta, c.n_photons);
    let text = emit_config(&cfg);
    print!("{text}");
    assert_eq!(parse_config_str(&text)?, cfg);
    Ok(())
}
