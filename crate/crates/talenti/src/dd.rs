//! Double-double arithmetic (~31 significant digits) for the few places
//! where plain `f64` rounding dominates the error budget: nodal profile
//! values feeding tight finite-difference residual checks, and the
//! amplitude parameter of the threshold bisection, which must resolve
//! separations far below one ulp of the amplitude itself.
//!
//! Standard error-free transformations (Dekker/Knuth two-sum, FMA-based
//! two-product) with the usual renormalization; this is the classic
//! "double-double" subset, not arbitrary precision.

/// Unevaluated sum `hi + lo` with `|lo| ≤ ½ ulp(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Renormalized construction from an unevaluated pair.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s2, e2) = quick_two_sum(s, e + t);
        Dd::new(s2, e2 + f)
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::new(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        Dd::new(s, e + self.lo)
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        Dd::new(p, e + self.lo * x)
    }

    pub fn recip(self) -> Dd {
        Dd::ONE.div(self)
    }

    /// One double-double Newton refinement of the hardware square root.
    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        let y = self.hi.sqrt();
        let yd = Dd::from_f64(y);
        let resid = self.sub(yd.mul(yd));
        yd.add(Dd::from_f64(resid.to_f64() / (2.0 * y)))
    }

    /// Integer power by binary exponentiation.
    pub fn powi(self, mut k: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            k >>= 1;
        }
        acc
    }

    /// Quarter-integer power `x^{q/4}` for `x > 0`, via `(x^q)^{1/4}`
    /// decomposed as integer power times up to two square roots.
    pub fn pow_quarter(self, q: u32) -> Dd {
        let whole = self.powi(q / 4);
        match q % 4 {
            0 => whole,
            1 => whole.mul(self.sqrt().sqrt()),
            2 => whole.mul(self.sqrt()),
            _ => whole.mul(self.sqrt().mul(self.sqrt().sqrt())),
        }
    }

    #[inline]
    pub fn lt(self, o: Dd) -> bool {
        self.hi < o.hi || (self.hi == o.hi && self.lo < o.lo)
    }

    /// Midpoint, exact to double-double precision.
    pub fn midpoint(self, o: Dd) -> Dd {
        self.add(o).mul_f64(0.5)
    }
}
