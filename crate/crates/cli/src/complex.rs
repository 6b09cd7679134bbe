//! Parsing of complex literals like `0+1e-6i`, `-2.5i`, `3`.

use num_complex::Complex64;

/// Parses `a+bi` with optional signs and scientific notation. Accepts pure
/// real (`3`, `-1e2`) and pure imaginary (`i`, `-2.5e-3i`) forms.
pub fn parse_complex(input: &str) -> Result<Complex64, String> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(body) = s.strip_suffix(['i', 'I']) {
        // Split off the real part at the last top-level sign.
        if let Some(idx) = split_index(body) {
            let re = parse_part(&body[..idx])?;
            let im = parse_coeff(&body[idx..])?;
            Ok(Complex64::new(re, im))
        } else {
            Ok(Complex64::new(0.0, parse_coeff(body)?))
        }
    } else {
        Ok(Complex64::new(parse_part(&s)?, 0.0))
    }
}

/// Index of the sign separating real and imaginary parts, if any: a `+`/`-`
/// that is neither leading nor part of an exponent.
fn split_index(body: &str) -> Option<usize> {
    let bytes = body.as_bytes();
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-')
            && !matches!(bytes[i - 1], b'e' | b'E')
        {
            return Some(i);
        }
    }
    None
}

fn parse_part(s: &str) -> Result<f64, String> {
    s.parse()
        .map_err(|e| format!("bad number {s:?} in complex literal: {e}"))
}

/// Imaginary coefficient; an empty or bare-sign coefficient means one.
fn parse_coeff(s: &str) -> Result<f64, String> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        other => parse_part(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(s: &str, re: f64, im: f64) {
        let z = parse_complex(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert_eq!(z.re, re, "{s}");
        assert_eq!(z.im, im, "{s}");
    }

    #[test]
    fn accepted_forms() {
        ok("3", 3.0, 0.0);
        ok("-1.5e-3", -1.5e-3, 0.0);
        ok("2i", 0.0, 2.0);
        ok("i", 0.0, 1.0);
        ok("-i", 0.0, -1.0);
        ok("0+1e-6i", 0.0, 1e-6);
        ok("0+1e-9i", 0.0, 1e-9);
        ok("1e-6+1e-6i", 1e-6, 1e-6);
        ok("-1.5e-3-2.7e-4i", -1.5e-3, -2.7e-4);
        ok("2.5+i", 2.5, 1.0);
        ok("2.5-i", 2.5, -1.0);
        ok(" 1 + 2 i ", 1.0, 2.0);
        ok("1E+3+2E-3i", 1e3, 2e-3);
    }

    #[test]
    fn rejected_forms() {
        assert!(parse_complex("").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+2j").is_err());
        assert!(parse_complex("1++2i").is_err());
    }
}
