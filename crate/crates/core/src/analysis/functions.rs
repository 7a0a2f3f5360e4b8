use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::rank_view;

/// Named test functions for ergodic averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    One,
    /// `x_i`, one-based.
    Coordinate(usize),
    /// `x_(k)`, one-based.
    Ranked(usize),
    /// `x_(k) − x_(k+1)`, one-based.
    Gap(usize),
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::One => 1.0,
            TestFunction::Coordinate(i) => x[i - 1],
            TestFunction::Ranked(k) => rank_view(x).expect("finite state").ranked[k - 1],
            TestFunction::Gap(k) => {
                let r = rank_view(x).expect("finite state").ranked;
                r[k - 1] - r[k]
            }
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        let ok = match *self {
            TestFunction::One => true,
            TestFunction::Coordinate(i) | TestFunction::Ranked(i) => (1..=d).contains(&i),
            TestFunction::Gap(k) => (1..d).contains(&k),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!("test function {self} is out of range for d = {d}")))
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::One => write!(f, "one"),
            TestFunction::Coordinate(i) => write!(f, "x{i}"),
            TestFunction::Ranked(k) => write!(f, "x({k})"),
            TestFunction::Gap(k) => write!(f, "gap{k}"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// Accepts `one`, `x3`, `x(1)` and `gap2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameters(format!("unknown test function '{s}'"));
        let index = |t: &str| t.parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
        if s == "one" || s == "1" {
            Ok(TestFunction::One)
        } else if let Some(rest) = s.strip_prefix("gap") {
            index(rest).map(TestFunction::Gap)
        } else if let Some(inner) = s.strip_prefix("x(").and_then(|r| r.strip_suffix(')')) {
            index(inner).map(TestFunction::Ranked)
        } else if let Some(rest) = s.strip_prefix('x') {
            index(rest).map(TestFunction::Coordinate)
        } else {
            Err(bad())
        }
    }
}
