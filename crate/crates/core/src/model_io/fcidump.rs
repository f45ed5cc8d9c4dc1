use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::IntegralSet;
use crate::error::{Error, Result};

/// Header fields other than `NORB`, `NELEC` and `MS2`, kept verbatim, plus any
/// warnings produced while parsing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FcidumpMetadata {
    pub fields: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl FcidumpMetadata {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|(_, v)| v.as_str())
    }
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<(IntegralSet, FcidumpMetadata)> {
    let text = std::fs::read_to_string(path)?;
    parse_fcidump(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Constant,
    OneBody(usize),
    TwoBody(usize),
    OrbitalEnergy(usize),
}

/// Parses Molpro-convention FCIDUMP text.
pub fn parse_fcidump(text: &str) -> Result<(IntegralSet, FcidumpMetadata)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    // Header: everything from `&FCI` up to `&END` or `/`.
    let mut header = String::new();
    let mut header_end_line = 0;
    let mut started = false;
    for (lineno, line) in lines.by_ref() {
        let trimmed = line.trim();
        if !started {
            if trimmed.is_empty() {
                continue;
            }
            if !trimmed.to_ascii_uppercase().starts_with("&FCI") {
                return Err(Error::Parse {
                    line: lineno,
                    message: "expected '&FCI' header".into(),
                });
            }
            started = true;
            header.push_str(&trimmed[4..]);
        } else {
            header.push(' ');
            header.push_str(trimmed);
        }
        let upper = header.to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| upper.rfind('/')) {
            header.truncate(pos);
            header_end_line = lineno;
            break;
        }
    }
    if !started || header_end_line == 0 {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "unterminated or missing FCIDUMP header".into(),
        });
    }

    let fields = parse_header_fields(&header).map_err(|message| Error::Parse {
        line: header_end_line,
        message,
    })?;
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0i32;
    let mut meta = FcidumpMetadata::default();
    for (key, value) in fields {
        let bad = |what: &str| Error::Parse {
            line: header_end_line,
            message: format!("invalid {what} value '{value}'"),
        };
        match key.as_str() {
            "NORB" => norb = Some(value.parse::<usize>().map_err(|_| bad("NORB"))?),
            "NELEC" => nelec = Some(value.parse::<usize>().map_err(|_| bad("NELEC"))?),
            "MS2" => ms2 = value.parse::<i32>().map_err(|_| bad("MS2"))?,
            _ => meta.fields.push((key, value)),
        }
    }
    let missing = |k: &str| Error::Parse {
        line: header_end_line,
        message: format!("header lacks {k}"),
    };
    let norb = norb.ok_or_else(|| missing("NORB"))?;
    let nelec = nelec.ok_or_else(|| missing("NELEC"))?;
    let mut ints = IntegralSet::zeros(norb, nelec, ms2).map_err(|e| Error::Parse {
        line: header_end_line,
        message: e.to_string(),
    })?;

    let mut seen: std::collections::HashMap<(u8, usize), f64> = std::collections::HashMap::new();
    let mut orbital_energies: Option<Vec<f64>> = None;

    for (lineno, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 'value p q r s', found {} fields", toks.len()),
            });
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid value '{}'", toks[0]),
            })?;
        let mut idx = [0usize; 4];
        for (k, t) in toks[1..].iter().enumerate() {
            let v: i64 = t.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid index '{t}'"),
            })?;
            if v < 0 || v as usize > norb {
                return Err(Error::Index {
                    line: lineno,
                    message: format!("index {v} outside [0, {norb}]"),
                });
            }
            idx[k] = v as usize;
        }
        let [p, q, r, s] = idx;
        let slot = match (p, q, r, s) {
            (0, 0, 0, 0) => Slot::Constant,
            (p, 0, 0, 0) => Slot::OrbitalEnergy(p - 1),
            (p, q, 0, 0) if p > 0 && q > 0 => Slot::OneBody(super::pair_index(p - 1, q - 1)),
            (p, q, r, s) if p > 0 && q > 0 && r > 0 && s > 0 => {
                Slot::TwoBody(super::eri_index(p - 1, q - 1, r - 1, s - 1))
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unrecognised index pattern {p} {q} {r} {s}"),
                })
            }
        };
        if let Some(old) = seen.insert(key_of(slot), value) {
            if old != value {
                    let msg = format!(
                        "line {lineno}: duplicate record {p} {q} {r} {s} changes {old:e} to {value:e}; keeping the later value"
                    );
                    warn!("{msg}");
                meta.warnings.push(msg);
            }
        }
        match slot {
            Slot::Constant => ints.e_nuc = value,
            Slot::OrbitalEnergy(k) => {
                orbital_energies.get_or_insert_with(|| vec![0.0; norb])[k] = value
            }
            Slot::OneBody(_) => ints.set_h(p - 1, q - 1, value),
            Slot::TwoBody(_) => ints.set_eri(p - 1, q - 1, r - 1, s - 1, value),
        }
    }
    ints.orbital_energies = orbital_energies;
    Ok((ints, meta))
}

fn key_of(slot: Slot) -> (u8, usize) {
    match slot {
        Slot::Constant => (0, 0),
        Slot::OneBody(k) => (1, k),
        Slot::TwoBody(k) => (2, k),
        Slot::OrbitalEnergy(k) => (3, k),
    }
}

/// Splits `KEY=v1,v2, KEY2=v` into upper-cased keys and comma-joined values.
fn parse_header_fields(header: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let flat = header.replace(',', " ");
    let mut tokens = flat.split_whitespace().peekable();
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    while let Some(tok) = tokens.next() {
        if let Some((k, v)) = tok.split_once('=') {
            let key = k.trim().to_ascii_uppercase();
            if key.is_empty() {
                return Err(format!("malformed header token '{tok}'"));
            }
            let mut values = Vec::new();
            if !v.is_empty() {
                values.push(v.to_string());
            }
            out.push((key, values));
        } else if tok == "=" {
            continue;
        } else if let Some(last) = out.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(format!("header value '{tok}' precedes any key"));
        }
    }
    Ok(out.into_iter().map(|(k, v)| (k, v.join(","))).collect())
}

/// Emits FCIDUMP text. Only the canonical member of every symmetry class is
/// written and zero integrals are skipped; values carry 17 significant digits.
pub fn write_fcidump(ints: &IntegralSet, meta: &FcidumpMetadata) -> String {
    let n = ints.n_orb;
    let mut out = String::new();
    let _ = writeln!(
        out,
        " &FCI NORB={},NELEC={},MS2={},",
        n, ints.n_electrons, ints.ms2
    );
    let orbsym = meta
        .get("ORBSYM")
        .map(str::to_string)
        .unwrap_or_else(|| vec!["1"; n].join(","));
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM={},", meta.get("ISYM").unwrap_or("1"));
    for (k, v) in &meta.fields {
        if k != "ORBSYM" && k != "ISYM" {
            let _ = writeln!(out, "  {k}={v},");
        }
    }
    out.push_str(" &END\n");
    let mut record = |v: f64, p: usize, q: usize, r: usize, s: usize| {
        let _ = writeln!(out, "{v:25.16e} {p:4} {q:4} {r:4} {s:4}");
    };
    for (p, q, r, s, v) in ints.eri_classes() {
        if v != 0.0 {
            record(v, p + 1, q + 1, r + 1, s + 1);
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = ints.h(p, q);
            if v != 0.0 {
                record(v, p + 1, q + 1, 0, 0);
            }
        }
    }
    if let Some(eps) = &ints.orbital_energies {
        for (p, &e) in eps.iter().enumerate() {
            record(e, p + 1, 0, 0, 0);
        }
    }
    record(ints.e_nuc, 0, 0, 0, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::random_integrals;
    use proptest::prelude::*;

    const SIMPLE: &str = "&FCI NORB=1,NELEC=2,MS2=0,\n ORBSYM=1,\n ISYM=1,\n&END\n  0.5 1 1 0 0\n  0.7 1 1 1 1\n  1.0 0 0 0 0\n";

    #[test]
    fn parses_direct_field_mapping() {
        let (ints, meta) = parse_fcidump(SIMPLE).unwrap();
        assert_eq!(ints.n_orb, 1);
        assert_eq!(ints.n_electrons, 2);
        assert_eq!(ints.h(0, 0), 0.5);
        assert_eq!(ints.eri(0, 0, 0, 0), 0.7);
        assert_eq!(ints.e_nuc, 1.0);
        assert_eq!(meta.get("ORBSYM"), Some("1"));
        assert!(meta.warnings.is_empty());
    }

    #[test]
    fn constant_only_file_is_all_zero() {
        let (ints, _) = parse_fcidump("&FCI NORB=2,NELEC=2 /\n0.0 0 0 0 0\n").unwrap();
        assert_eq!(ints, IntegralSet::zeros(2, 2, 0).unwrap());
    }

    #[test]
    fn multiline_header_and_fortran_exponents() {
        let text = " &FCI NORB=  2,\n  NELEC= 2, MS2=0,\n  ORBSYM=1,1,\n  ISYM=1\n &END\n 1.0D-1 2 1 0 0\n -2.5 1 0 0 0\n";
        let (ints, meta) = parse_fcidump(text).unwrap();
        assert_eq!(ints.h(0, 1), 0.1);
        assert_eq!(ints.h(1, 0), 0.1);
        assert_eq!(ints.orbital_energies.as_deref(), Some(&[-2.5, 0.0][..]));
        assert_eq!(meta.get("orbsym"), Some("1,1"));
    }

    #[test]
    fn malformed_header_reports_line() {
        match parse_fcidump("\n\nNORB=2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_fcidump("&FCI NELEC=2 &END\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_fcidump("&FCI NORB=1,NELEC=2 &END\n0.1 1 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn out_of_range_index_is_index_error() {
        let r = parse_fcidump("&FCI NORB=2,NELEC=2 &END\n0.1 3 1 0 0\n");
        assert!(matches!(r, Err(Error::Index { line: 2, .. })));
        let r = parse_fcidump("&FCI NORB=2,NELEC=2 &END\n0.1 -1 1 0 0\n");
        assert!(matches!(r, Err(Error::Index { line: 2, .. })));
    }

    #[test]
    fn conflicting_duplicates_keep_last_with_warning() {
        let text = "&FCI NORB=2,NELEC=2 &END\n0.3 1 2 1 1\n0.4 2 1 1 1\n0.3 1 1 0 0\n0.3 1 1 0 0\n";
        let (ints, meta) = parse_fcidump(text).unwrap();
        assert_eq!(ints.eri(0, 1, 0, 0), 0.4);
        assert_eq!(meta.warnings.len(), 1);
    }

    #[test]
    fn writer_emits_one_record_per_class() {
        let mut ints = IntegralSet::zeros(2, 2, 0).unwrap();
        ints.set_eri(0, 1, 0, 0, 0.25);
        let text = write_fcidump(&ints, &FcidumpMetadata::default());
        let records: Vec<&str> = text.lines().skip_while(|l| !l.contains("&END")).skip(1).collect();
        assert_eq!(records.len(), 2);
        assert!(records[0].trim_end().ends_with("2    1    1    1"));
        assert!(records[1].trim_end().ends_with("0    0    0    0"));
    }

    #[test]
    fn zero_set_writes_header_and_constant() {
        let ints = IntegralSet::zeros(3, 2, 0).unwrap();
        let text = write_fcidump(&ints, &FcidumpMetadata::default());
        let after: Vec<&str> = text.lines().skip_while(|l| !l.contains("&END")).skip(1).collect();
        assert_eq!(after.len(), 1);
        assert_eq!(parse_fcidump(&text).unwrap().0, ints);
    }

    #[test]
    fn metadata_survives_round_trip() {
        let (ints, meta) = parse_fcidump(SIMPLE).unwrap();
        let (again, meta2) = parse_fcidump(&write_fcidump(&ints, &meta)).unwrap();
        assert_eq!(again, ints);
        assert_eq!(meta2.get("ORBSYM"), Some("1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn parse_inverts_write(seed in any::<u64>(), n in 1usize..6, with_eps in any::<bool>()) {
            let mut ints = random_integrals(n, 1, seed);
            if with_eps {
                ints.orbital_energies = Some((0..n).map(|p| p as f64 * -0.37 + 1e-3 / 3.0).collect());
            }
            let text = write_fcidump(&ints, &FcidumpMetadata::default());
            let (back, meta) = parse_fcidump(&text).unwrap();
            prop_assert_eq!(back, ints);
            prop_assert!(meta.warnings.is_empty());
        }
    }
}
