use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

/// Rounds to 12 significant digits and prints the shortest form that
/// round-trips, so output does not depend on the last bits of a sum.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if rounded == 0.0 {
        "0".into()
    } else if !(1e-6..1e16).contains(&mag) {
        format!("{rounded:e}")
    } else {
        rounded.to_string()
    }
}

pub fn config_hash(json: &str) -> String {
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

/// CSV document with a leading `#` provenance line.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &str, columns: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "{header}").unwrap();
        writeln!(text, "{}", columns.join(",")).unwrap();
        Self { text }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        writeln!(self.text, "{}", line.join(",")).unwrap();
    }

    pub fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").unwrap();
    }

    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(path) => std::fs::write(path, &self.text),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(self.text.as_bytes())?;
                stdout.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_rounded_to_twelve_digits() {
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1e-20), "1e-20");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(1.5e-3), "0.0015");
    }

    #[test]
    fn hash_is_sixteen_hex_digits() {
        let h = config_hash("{}");
        assert_eq!(h.len(), 16);
        assert_eq!(h, config_hash("{}"));
        assert_ne!(h, config_hash("{ }"));
    }
}
