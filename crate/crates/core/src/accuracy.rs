use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A percentage stored exactly in hundredths, e.g. `6667` for `66.67`.
///
/// Log files carry accuracies at two decimals; keeping them as integers makes
/// export/import and replay comparisons exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Percent2(i64);

impl Percent2 {
    pub const fn from_hundredths(h: i64) -> Self {
        Self(h)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    /// `100 * num / den` rounded half away from zero to two decimals.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "ratio with zero denominator");
        let scaled = 10_000u128 * num as u128;
        let den = den as u128;
        let (q, r) = (scaled / den, scaled % den);
        let rounded = if 2 * r >= den { q + 1 } else { q };
        Self(rounded as i64)
    }

    /// Rounds a floating percentage half away from zero.
    pub fn from_f64(x: f64) -> Self {
        Self((x * 100.0).round() as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a two-decimal percentage")]
pub struct ParsePercentError(pub String);

impl FromStr for Percent2 {
    type Err = ParsePercentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePercentError(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() || frac.len() > 2 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole: i64 = whole.parse().map_err(|_| err())?;
        let frac: i64 = format!("{frac:0<2}").parse().map_err(|_| err())?;
        let h = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Self(if neg { -h } else { h }))
    }
}

impl Serialize for Percent2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Percent2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Self::from_f64)
    }
}

/// Running tally of correct predictions against the session target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyState {
    pub n_total: u64,
    pub n_correct: u64,
    pub target: f64,
}

impl AccuracyState {
    pub fn new(target: f64) -> Self {
        Self {
            n_total: 0,
            n_correct: 0,
            target,
        }
    }

    pub fn record(&mut self, correct: bool) {
        self.n_total += 1;
        if correct {
            self.n_correct += 1;
        }
    }

    /// Current accuracy in percent; `0.0` before the first trial.
    pub fn current(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            100.0 * self.n_correct as f64 / self.n_total as f64
        }
    }

    pub fn current_percent2(&self) -> Option<Percent2> {
        (self.n_total > 0).then(|| Percent2::from_ratio(self.n_correct, self.n_total))
    }

    /// Signed distance from target, `None` before the first trial.
    pub fn deviation(&self) -> Option<f64> {
        (self.n_total > 0).then(|| self.current() - self.target)
    }

    /// Two-decimal readout, or `–` when nothing has been recorded.
    pub fn display(&self) -> String {
        match self.current_percent2() {
            Some(p) => p.to_string(),
            None => "–".to_string(),
        }
    }
}
