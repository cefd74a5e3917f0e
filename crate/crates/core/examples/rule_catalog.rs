//! Lists every rule the tool knows, marking the critical ones.

use embermine::rules::{catalog, RuleConfig};

fn main() {
    let cfg = RuleConfig::default();
    for r in catalog() {
        let crit = if cfg.is_critical(r.id) { "*" } else { " " };
        println!("{crit} {:<26} {:?} {:<12} {}", r.id, r.source, r.severity, r.description);
    }
}
