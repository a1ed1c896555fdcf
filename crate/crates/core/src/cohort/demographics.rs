//! Demographic groupings shared by cohort summaries, stratification and the
//! categorical model inputs. Index 0 of every categorical is "unknown".

pub const GENDERS: [&str; 2] = ["Female", "Male"];
pub const RACES: [&str; 5] = ["White", "Black", "Hispanic", "Asian", "Other"];
pub const AGE_BINS: [&str; 4] = ["18-49", "50-64", "65-77", "78+"];

/// Cardinalities of (gender, race, acuity) including the unknown slot.
pub const CARDINALITIES: [usize; 3] = [GENDERS.len() + 1, RACES.len() + 1, 6];

pub fn gender_index(g: &str) -> usize {
    match g.trim().to_ascii_uppercase().as_str() {
        "F" | "FEMALE" => 1,
        "M" | "MALE" => 2,
        _ => 0,
    }
}

/// Maps free-text race/ethnicity to the five reporting groups; declined or
/// unknown answers map to 0.
pub fn race_index(r: &str) -> usize {
    let r = r.trim().to_ascii_uppercase();
    if r.is_empty()
        || r.starts_with("UNKNOWN")
        || r.starts_with("UNABLE")
        || r.contains("DECLINED")
    {
        return 0;
    }
    if r.starts_with("WHITE") {
        1
    } else if r.starts_with("BLACK") {
        2
    } else if r.starts_with("HISPANIC") || r.contains("LATINO") {
        3
    } else if r.starts_with("ASIAN") {
        4
    } else {
        5
    }
}

pub fn acuity_index(a: Option<u8>) -> usize {
    match a {
        Some(v @ 1..=5) => v as usize,
        _ => 0,
    }
}

pub fn age_bin(age: u32) -> usize {
    match age {
        0..=49 => 0,
        50..=64 => 1,
        65..=77 => 2,
        _ => 3,
    }
}
