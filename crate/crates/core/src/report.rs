//! Structured pass/fail records for identity and rank checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::tensor::TensorField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub pass: bool,
    /// Decimal digits in the numerator of the largest-magnitude residual
    /// coefficient; 0 when the residual vanishes.
    pub max_abs_residual_num_digits: usize,
    pub residual: Option<TensorField>,
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    /// Passes iff `residual` is identically zero. The residual tensor is kept
    /// only on failure.
    pub fn from_residual(check: impl Into<String>, residual: TensorField) -> Self {
        let max = residual.max_abs_coeff();
        let pass = residual.is_zero();
        let digits = if pass {
            0
        } else {
            max.numer().to_string().trim_start_matches('-').len()
        };
        VerificationReport {
            check: check.into(),
            params: BTreeMap::new(),
            pass,
            max_abs_residual_num_digits: digits,
            residual: (!pass).then_some(residual),
            rank: None,
            note: None,
        }
    }

    /// A check with no residual tensor, such as a table validation.
    pub fn from_outcome(check: impl Into<String>, pass: bool) -> Self {
        VerificationReport {
            check: check.into(),
            params: BTreeMap::new(),
            pass,
            max_abs_residual_num_digits: 0,
            residual: None,
            rank: None,
            note: None,
        }
    }

    pub fn from_rank(check: impl Into<String>, expected: usize, observed: usize) -> Self {
        let mut params = BTreeMap::new();
        params.insert("expected".to_owned(), Value::from(expected));
        VerificationReport {
            check: check.into(),
            params,
            pass: expected == observed,
            max_abs_residual_num_digits: 0,
            residual: None,
            rank: Some(observed),
            note: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Drops the residual tensor, keeping the digit count.
    pub fn without_residual(mut self) -> Self {
        self.residual = None;
        self
    }
}
