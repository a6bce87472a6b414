//! ILU code model, check-digit arithmetic and verification.
//!
//! An ILU code is a 4-letter owner key, a 6-digit registration number and a
//! check digit. The check digit uses the ISO 6346 scheme: letters take the
//! values 10..=38 skipping multiples of 11, position `i` is weighted `2^i`,
//! and the weighted sum is reduced mod 11 then mod 10. Everything that
//! depends on that scheme lives in [`char_value`] and [`check_remainder`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OWNER_LEN: usize = 4;
pub const REGISTRATION_LEN: usize = 6;
pub const PREFIX_LEN: usize = OWNER_LEN + REGISTRATION_LEN;
pub const CODE_LEN: usize = PREFIX_LEN + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse ILU code {input:?}: {kind} at position {position}")]
pub struct ParseError {
    pub input: String,
    /// Index into the normalized text where the first violation was found.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    InvalidCharacter(char),
    ExpectedLetter,
    ExpectedDigit,
    TooShort,
    TooLong,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::InvalidCharacter(c) => write!(f, "invalid character {c:?}"),
            ParseErrorKind::ExpectedLetter => f.write_str("expected a letter A-Z"),
            ParseErrorKind::ExpectedDigit => f.write_str("expected a digit 0-9"),
            ParseErrorKind::TooShort => f.write_str("text too short"),
            ParseErrorKind::TooLong => f.write_str("text too long"),
        }
    }
}

/// Numeric value of a code character: digits are themselves, letters run
/// from A=10 upward skipping 11, 22 and 33, so Z=38.
pub fn char_value(c: char) -> Result<u32, ParseError> {
    match c {
        '0'..='9' => Ok(c as u32 - '0' as u32),
        'A'..='Z' => {
            let mut v = 10 + (c as u32 - 'A' as u32);
            for skipped in [11, 22, 33] {
                if v >= skipped {
                    v += 1;
                }
            }
            Ok(v)
        }
        _ => Err(ParseError {
            input: c.to_string(),
            position: 0,
            kind: ParseErrorKind::InvalidCharacter(c),
        }),
    }
}

/// Weighted sum of the 10-character prefix reduced mod 11 (0..=10).
pub fn check_remainder(prefix: &str) -> Result<u32, ParseError> {
    validate_prefix(prefix)?;
    let sum: u32 = prefix
        .chars()
        .enumerate()
        .map(|(i, c)| char_value(c).map(|v| v << i))
        .sum::<Result<u32, _>>()?;
    Ok(sum % 11)
}

pub fn compute_check_digit(prefix: &str) -> Result<u8, ParseError> {
    Ok((check_remainder(prefix)? % 10) as u8)
}

fn validate_prefix(prefix: &str) -> Result<(), ParseError> {
    let err = |position, kind| ParseError {
        input: prefix.to_string(),
        position,
        kind,
    };
    let mut n = 0;
    for (i, c) in prefix.chars().enumerate() {
        n = i + 1;
        if i >= PREFIX_LEN {
            return Err(err(i, ParseErrorKind::TooLong));
        }
        if i < OWNER_LEN && !c.is_ascii_uppercase() {
            return Err(err(i, ParseErrorKind::ExpectedLetter));
        }
        if i >= OWNER_LEN && !c.is_ascii_digit() {
            return Err(err(i, ParseErrorKind::ExpectedDigit));
        }
    }
    if n < PREFIX_LEN {
        return Err(err(n, ParseErrorKind::TooShort));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IluCode {
    owner_key: String,
    registration: String,
    check_digit: u8,
}

impl IluCode {
    pub fn new(owner_key: &str, registration: &str, check_digit: u8) -> Result<Self, ParseError> {
        validate_prefix(&format!("{owner_key}{registration}"))?;
        if owner_key.len() != OWNER_LEN || check_digit > 9 {
            return Err(ParseError {
                input: format!("{owner_key}{registration}{check_digit}"),
                position: PREFIX_LEN,
                kind: ParseErrorKind::ExpectedDigit,
            });
        }
        Ok(Self {
            owner_key: owner_key.to_string(),
            registration: registration.to_string(),
            check_digit,
        })
    }

    /// Builds a code from a 10-character prefix with its correct check digit.
    pub fn with_computed_check(prefix: &str) -> Result<Self, ParseError> {
        let check = compute_check_digit(prefix)?;
        Self::new(&prefix[..OWNER_LEN], &prefix[OWNER_LEN..], check)
    }

    pub fn owner_key(&self) -> &str {
        &self.owner_key
    }

    pub fn registration(&self) -> &str {
        &self.registration
    }

    pub fn check_digit(&self) -> u8 {
        self.check_digit
    }

    pub fn prefix(&self) -> String {
        format!("{}{}", self.owner_key, self.registration)
    }

    /// `KKKKDDDDDDC`
    pub fn canonical(&self) -> String {
        format!("{}{}{}", self.owner_key, self.registration, self.check_digit)
    }

    /// `KKKK DDDDDD [C]`
    pub fn display_form(&self) -> String {
        format!("{} {} [{}]", self.owner_key, self.registration, self.check_digit)
    }
}

impl fmt::Display for IluCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl std::str::FromStr for IluCode {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_ilu(s)
    }
}

impl TryFrom<String> for IluCode {
    type Error = ParseError;

    fn try_from(s: String) -> Result<Self, ParseError> {
        parse_ilu(&s)
    }
}

impl From<IluCode> for String {
    fn from(c: IluCode) -> String {
        c.canonical()
    }
}

/// Uppercases and drops whitespace, hyphens and square brackets.
pub fn normalize_code_text(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace() && !matches!(c, '-' | '[' | ']'))
        .flat_map(char::to_uppercase)
        .collect()
}

pub fn parse_ilu(raw: &str) -> Result<IluCode, ParseError> {
    let text = normalize_code_text(raw);
    let err = |position, kind| ParseError {
        input: raw.to_string(),
        position,
        kind,
    };
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if i >= CODE_LEN {
            return Err(err(i, ParseErrorKind::TooLong));
        }
        if !c.is_ascii_alphanumeric() {
            return Err(err(i, ParseErrorKind::InvalidCharacter(c)));
        }
        if i < OWNER_LEN && !c.is_ascii_uppercase() {
            return Err(err(i, ParseErrorKind::ExpectedLetter));
        }
        if i >= OWNER_LEN && !c.is_ascii_digit() {
            return Err(err(i, ParseErrorKind::ExpectedDigit));
        }
    }
    if chars.len() < CODE_LEN {
        return Err(err(chars.len(), ParseErrorKind::TooShort));
    }
    Ok(IluCode {
        owner_key: text[..OWNER_LEN].to_string(),
        registration: text[OWNER_LEN..PREFIX_LEN].to_string(),
        check_digit: chars[PREFIX_LEN] as u8 - b'0',
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationMethod {
    /// Whole ROI read once; its own trailing digit is the reference.
    SinglePass,
    /// Prefix and check digit read from separate crops and compared.
    SplitPass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    ParseFailure,
    ChecksumMismatch,
    CrossCheckDisagreement,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::ParseFailure => "parse_failure",
            RejectionReason::ChecksumMismatch => "checksum_mismatch",
            RejectionReason::CrossCheckDisagreement => "cross_check_disagreement",
        }
    }
}

/// Outcome of checking one reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiedReading {
    /// Absent only when the recognized text could not be parsed.
    pub code: Option<IluCode>,
    pub computed_check: Option<u8>,
    pub verified: bool,
    pub method: VerificationMethod,
    pub rejection_reason: Option<RejectionReason>,
}

impl VerifiedReading {
    pub fn parse_failure(method: VerificationMethod) -> Self {
        Self {
            code: None,
            computed_check: None,
            verified: false,
            method,
            rejection_reason: Some(RejectionReason::ParseFailure),
        }
    }
}

/// Options for check-digit acceptance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckPolicy {
    /// Reject prefixes whose raw remainder is 10 (check digit folds to 0).
    pub strict: bool,
}

impl CheckPolicy {
    pub fn accepts(&self, prefix: &str, check_digit: u8) -> Result<(u8, bool), ParseError> {
        let rem = check_remainder(prefix)?;
        let computed = (rem % 10) as u8;
        let ok = computed == check_digit && !(self.strict && rem == 10);
        Ok((computed, ok))
    }
}

pub fn verify_code(code: &IluCode) -> VerifiedReading {
    verify_code_with(code, CheckPolicy::default())
}

pub fn verify_code_with(code: &IluCode, policy: CheckPolicy) -> VerifiedReading {
    let (computed, ok) = policy
        .accepts(&code.prefix(), code.check_digit)
        .expect("IluCode prefixes are always well-formed");
    VerifiedReading {
        code: Some(code.clone()),
        computed_check: Some(computed),
        verified: ok,
        method: VerificationMethod::SinglePass,
        rejection_reason: (!ok).then_some(RejectionReason::ChecksumMismatch),
    }
}

/// Verifies separately recognized prefix and check-digit texts against
/// each other.
pub fn cross_check(left_text: &str, right_text: &str, policy: CheckPolicy) -> VerifiedReading {
    let prefix = normalize_code_text(left_text);
    let digits = normalize_code_text(right_text);
    if validate_prefix(&prefix).is_err() || digits.len() != 1 || !digits.as_bytes()[0].is_ascii_digit() {
        return VerifiedReading::parse_failure(VerificationMethod::SplitPass);
    }
    let read_check = digits.as_bytes()[0] - b'0';
    let (computed, ok) = policy
        .accepts(&prefix, read_check)
        .expect("prefix validated above");
    VerifiedReading {
        code: Some(IluCode::new(&prefix[..OWNER_LEN], &prefix[OWNER_LEN..], read_check).expect("validated")),
        computed_check: Some(computed),
        verified: ok,
        method: VerificationMethod::SplitPass,
        rejection_reason: (!ok).then_some(RejectionReason::CrossCheckDisagreement),
    }
}
