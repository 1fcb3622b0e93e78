use serde::{Deserialize, Serialize};

/// Truncation window for checks on infinite-dimensional objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    /// Largest weight inspected.
    pub weight: u32,
    /// Largest total polynomial degree of a monomial.
    pub poly_degree: u32,
    /// Inclusive range of cohomological degrees.
    pub degree_lo: i32,
    pub degree_hi: i32,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            weight: 3,
            poly_degree: 4,
            degree_lo: -4,
            degree_hi: 0,
        }
    }
}

impl Window {
    pub fn new(weight: u32, poly_degree: u32) -> Self {
        Window {
            weight,
            poly_degree,
            ..Window::default()
        }
    }

    pub fn contains_degree(&self, d: i32) -> bool {
        (self.degree_lo..=self.degree_hi).contains(&d)
    }
}
