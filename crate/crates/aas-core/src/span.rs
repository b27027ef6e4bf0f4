//! Inclusive integer frame intervals.

use serde::{Deserialize, Serialize};

/// An inclusive frame interval `[start, end]`, 1-indexed.
///
/// `start == end` is a single frame; `start <= end` always holds for
/// constructed spans (raw backend output is kept as signed pairs until
/// projection, see [`crate::segmenter`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub fn new(start: u32, end: u32) -> Self {
        debug_assert!(start <= end, "span start must not exceed end");
        Span { start, end }
    }

    /// Number of frames covered, counting both endpoints.
    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false // an inclusive span always covers at least one frame
    }

    /// Frames shared with `other`.
    pub fn intersection_len(&self, other: &Span) -> u32 {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo <= hi {
            hi - lo + 1
        } else {
            0
        }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn len_counts_inclusively() {
        assert_eq!(Span::new(10, 20).len(), 11);
        assert_eq!(Span::new(5, 5).len(), 1);
    }

    #[test]
    fn intersection_handles_disjoint_and_nested() {
        assert_eq!(Span::new(1, 5).intersection_len(&Span::new(10, 12)), 0);
        assert_eq!(Span::new(10, 20).intersection_len(&Span::new(15, 25)), 6);
        assert_eq!(Span::new(1, 100).intersection_len(&Span::new(40, 50)), 11);
    }
}
