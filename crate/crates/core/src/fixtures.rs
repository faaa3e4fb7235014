//! Group descriptors bundled with the crate.

use crate::error::{LabError, Result};
use crate::groups::MarkedGroup;

pub const NAMES: [&str; 7] = ["f2", "z2", "z", "f2xz", "racg-fig1", "zz2-free-z", "dinf"];

pub fn json(name: &str) -> Option<&'static str> {
    let name = name.trim_end_matches(".json");
    let name = name.rsplit('/').next().unwrap_or(name);
    Some(match name {
        "f2" => include_str!("../fixtures/f2.json"),
        "z2" => include_str!("../fixtures/z2.json"),
        "z" => include_str!("../fixtures/z.json"),
        "f2xz" => include_str!("../fixtures/f2xz.json"),
        "racg-fig1" => include_str!("../fixtures/racg-fig1.json"),
        "zz2-free-z" => include_str!("../fixtures/zz2-free-z.json"),
        "dinf" => include_str!("../fixtures/dinf.json"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Result<MarkedGroup> {
    let text =
        json(name).ok_or_else(|| LabError::malformed(format!("no bundled group named {name}")))?;
    MarkedGroup::from_json(text)
}
