//! Exact rationals and their JSON form: integers stay integers, everything
//! else is the string "p/q".

use num_rational::Ratio;
use serde::{de, Deserialize, Deserializer, Serializer};

use crate::error::{LabError, Result};

pub type Rat = Ratio<i64>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

pub fn parse_rat(text: &str) -> Result<Rat> {
    let t = text.trim();
    let bad = || LabError::malformed(format!("not a rational: {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    if let Ok(n) = t.parse::<i64>() {
        return Ok(rat(n));
    }
    // Finite decimals only, read exactly.
    let (int, frac) = t.split_once('.').ok_or_else(bad)?;
    if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let neg = int.starts_with('-');
    let int_abs: i64 = int.trim_start_matches('-').parse().unwrap_or(0);
    let den = 10i64.pow(frac.len() as u32);
    let f: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let v = Rat::new(int_abs * den + f, den);
    Ok(if neg { -v } else { v })
}

pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    if r.is_integer() {
        s.serialize_i64(*r.numer())
    } else {
        s.serialize_str(&format_rat(r))
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Int(n) => Ok(rat(n)),
        Raw::Float(f) => parse_rat(&format!("{f}")).map_err(de::Error::custom),
        Raw::Text(t) => parse_rat(&t).map_err(de::Error::custom),
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => super::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rat>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super")] Rat);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_three_spellings() {
        assert_eq!(parse_rat("3").unwrap(), rat(3));
        assert_eq!(parse_rat("3/6").unwrap(), Rat::new(1, 2));
        assert_eq!(parse_rat("-1.25").unwrap(), Rat::new(-5, 4));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn json_round_trip() {
        #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
        struct H(#[serde(with = "super")] Rat);
        for r in [rat(2), Rat::new(7, 3), Rat::new(-1, 2)] {
            let s = serde_json::to_string(&H(r)).unwrap();
            assert_eq!(serde_json::from_str::<H>(&s).unwrap(), H(r));
        }
        assert_eq!(serde_json::from_str::<H>("1.5").unwrap(), H(Rat::new(3, 2)));
    }
}
