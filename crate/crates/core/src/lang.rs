//! Language taxonomy: which languages the verifier was trained on and which
//! are held out, plus per-language formatting defaults.

use serde::{Deserialize, Serialize};

/// Languages with verifier training data.
pub const SEEN_LANGUAGES: [&str; 7] = ["en", "de", "es", "fr", "ru", "sw", "zh"];

/// Held-out evaluation languages.
pub const UNSEEN_LANGUAGES: [&str; 4] = ["bn", "ja", "te", "th"];

/// Column order used by report emitters: seen languages first, then unseen.
pub const REPORT_LANGUAGE_ORDER: [&str; 11] = [
    "en", "de", "es", "fr", "ru", "sw", "zh", "ja", "bn", "te", "th",
];

/// Languages whose conventional decimal separator is a comma.
const DECIMAL_COMMA_LANGUAGES: [&str; 4] = ["de", "es", "fr", "ru"];

/// Which side of the train/held-out split a language falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Seen,
    Unseen,
    Other,
}

/// An ISO 639-1 style language code. The partition is derived from the code,
/// never stored, so the two can't drift apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Self {
        LanguageCode(code.into())
    }

    pub fn code(&self) -> &str {
        &self.0
    }

    /// Codes outside both lists classify as `Other`; this function is total.
    pub fn partition(&self) -> Partition {
        let code = self.0.as_str();
        if SEEN_LANGUAGES.contains(&code) {
            Partition::Seen
        } else if UNSEEN_LANGUAGES.contains(&code) {
            Partition::Unseen
        } else {
            Partition::Other
        }
    }

    /// Whether answers in this language are parsed with a decimal comma by
    /// default. Callers can override per run.
    pub fn decimal_comma_default(&self) -> bool {
        DECIMAL_COMMA_LANGUAGES.contains(&self.0.as_str())
    }
}

impl std::fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LanguageCode {
    fn from(code: &str) -> Self {
        LanguageCode::new(code)
    }
}

/// Classifies a language code. Unknown codes become `Other`-partition codes
/// rather than errors so that corpora with stray languages still load.
pub fn classify_language(code: &str) -> LanguageCode {
    LanguageCode::new(code)
}
