use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unparseable strength '{atv}': {why}")]
pub struct UnparseableStrength {
    pub atv: String,
    pub why: &'static str,
}

/// Split an `RXN_STRENGTH` value such as `"7.5 MG/ML"` into amount and unit.
///
/// Grammar: one unsigned decimal (`12`, `0.25`), a whitespace run, one unit
/// token. The unit comes back uppercased; the amount is normalized so that
/// `7.50` and `7.5` compare and print the same.
pub fn extract_strength(atv: &str) -> Result<(Decimal, String), UnparseableStrength> {
    let fail = |why| UnparseableStrength {
        atv: atv.to_owned(),
        why,
    };
    let trimmed = atv.trim();
    if trimmed.is_empty() {
        return Err(fail("empty value"));
    }
    let Some((amount, rest)) = trimmed.split_once(|c: char| c.is_whitespace()) else {
        return Err(fail("missing amount or unit"));
    };
    let unit = rest.trim_start();
    if unit.is_empty() {
        return Err(fail("missing unit"));
    }
    if unit.chars().any(char::is_whitespace) {
        return Err(fail("unit must be a single token"));
    }
    if !is_plain_decimal(amount) {
        return Err(fail("amount is not a plain decimal number"));
    }
    let amount = Decimal::from_str(amount).map_err(|_| fail("amount out of range"))?;
    Ok((amount.normalize(), unit.to_uppercase()))
}

/// `digits` or `digits.digits`; no sign, exponent or bare dot.
pub(crate) fn is_plain_decimal(s: &str) -> bool {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}
