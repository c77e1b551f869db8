//! The saturating term-frequency weight used for every document, title,
//! article, anchor and concept-in-document weight:
//!
//! `tf / (tf + 0.5 + 1.5 * len / avg_len)`

const LENGTH_BASE: f64 = 0.5;
const LENGTH_SLOPE: f64 = 1.5;

/// Length relative to the collection average. A collection whose average is
/// zero only holds zero-length units, which all count as average.
#[inline]
pub fn length_ratio(len: usize, avg_len: f64) -> f64 {
    if avg_len > 0.0 {
        len as f64 / avg_len
    } else {
        1.0
    }
}

#[inline]
pub fn saturating(tf: u32, len: usize, avg_len: f64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = tf as f64;
    tf / (tf + LENGTH_BASE + LENGTH_SLOPE * length_ratio(len, avg_len))
}

/// Query-side term weight `tf / (tf + 2)`.
#[inline]
pub fn query_term(tf: u32) -> f64 {
    let tf = tf as f64;
    tf / (tf + 2.0)
}
