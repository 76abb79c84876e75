use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Where tags sit inside each subinterval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TagRule {
    Left,
    Midpoint,
    Right,
    /// Fractional position in `[0, 1]` within the subinterval.
    Fraction(f64),
}

/// Breakpoints `σ_0 < … < σ_N` with one tag per subinterval.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedPartition<T: Real> {
    breakpoints: Vec<T>,
    tags: Vec<T>,
}

impl<T: Real> TaggedPartition<T> {
    pub fn new(breakpoints: Vec<T>, tags: Vec<T>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidInput("partition needs at least two breakpoints".into()));
        }
        if tags.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} tags, got {}",
                breakpoints.len() - 1,
                tags.len()
            )));
        }
        for (j, w) in breakpoints.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
            }
            if tags[j] < w[0] || tags[j] > w[1] {
                return Err(Error::InvalidInput(format!("tag {j} lies outside its subinterval")));
            }
        }
        Ok(Self { breakpoints, tags })
    }

    /// Tags placed by `rule` on the given breakpoints.
    pub fn with_rule(breakpoints: Vec<T>, rule: TagRule) -> Result<Self> {
        let frac = match rule {
            TagRule::Left => 0.0,
            TagRule::Midpoint => 0.5,
            TagRule::Right => 1.0,
            TagRule::Fraction(f) => f.clamp(0.0, 1.0),
        };
        let tags = breakpoints
            .windows(2)
            .map(|w| {
                if frac == 1.0 {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * lit(frac)
                }
            })
            .collect();
        Self::new(breakpoints, tags)
    }

    pub fn uniform(a: T, b: T, n: usize, rule: TagRule) -> Result<Self> {
        if n == 0 || !(a < b) {
            return Err(Error::InvalidInput("uniform partition needs n >= 1 and a < b".into()));
        }
        let step = (b - a) / from_usize::<T>(n);
        let mut pts: Vec<T> = (0..n).map(|k| a + step * from_usize(k)).collect();
        pts.push(b);
        Self::with_rule(pts, rule)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn tags(&self) -> &[T] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn start(&self) -> T {
        self.breakpoints[0]
    }

    pub fn end(&self) -> T {
        *self.breakpoints.last().expect("non-empty partition")
    }

    /// Largest subinterval length.
    pub fn mesh(&self) -> T {
        self.breakpoints
            .windows(2)
            .fold(T::zero(), |m, w| m.max(w[1] - w[0]))
    }
}
