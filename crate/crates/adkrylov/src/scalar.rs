//! Scalar contract for the solver kernels, plus a forward-mode dual number.
//!
//! Every numeric kernel in this crate (sparse products, Krylov recurrences,
//! norm computations) is written once against [`Scalar`] and instantiated at
//! plain reals (`f32`, `f64`) and at [`Dual`]. Running a solver on duals is
//! what a source-transformation forward-mode tool would produce from the
//! solver source: every multiplication applies the product rule, every
//! division the quotient rule, and so on, one tangent slot per scalar.
//!
//! Two rules keep dual runs honest with respect to the undifferentiated
//! solver:
//!
//! * **Control flow is primal-only.** Comparisons and branch decisions go
//!   through [`Scalar::primal_cmp`]/[`Scalar::primal_is_finite`], which look
//!   only at the primal part. A dual run therefore takes exactly the branch
//!   sequence of the plain-real run on the same primal data.
//! * **Primal arithmetic is untouched.** The primal half of every dual
//!   operation is the identical floating-point expression the real
//!   instantiation executes, so primal iterates of a dual run match the plain
//!   run bit for bit.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float, FromPrimitive, NumAssignOps, One, Zero};

/// Plain real scalars (`f32`, `f64`): the tangent-free floor of the contract.
///
/// Every [`Scalar`] names the real type its primal and tangent parts live in;
/// plain reals are scalars over themselves with a tangent that is always zero.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssignOps
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
    + Scalar<Real = Self>
{
}

impl Real for f32 {}
impl Real for f64 {}

/// The operations the solver kernels need from a scalar type.
///
/// Required by every generic kernel in the crate. The contract is small on
/// purpose: ring operations, square root and absolute value (for norms and
/// Givens rotations), conversion from a real literal, and primal-only
/// extraction, comparison, and finiteness.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Zero
    + One
    + Send
    + Sync
    + 'static
{
    /// Real type of the primal and tangent parts.
    type Real: Real;

    /// Whether values of this type carry a meaningful tangent slot.
    /// Observers use this to decide if a tangent view is worth reporting.
    const CARRIES_TANGENT: bool;

    /// Embeds a real literal as a constant (zero tangent).
    fn from_real(value: Self::Real) -> Self;

    /// The primal (value) part.
    fn primal(self) -> Self::Real;

    /// The tangent part; identically zero for plain reals.
    fn tangent(self) -> Self::Real;

    /// Square root, differentiated where applicable.
    fn sqrt(self) -> Self;

    /// Absolute value, differentiated where applicable (sign convention:
    /// `sign(0) = 0`).
    fn abs(self) -> Self;

    /// Finiteness of the primal part only. Tangent blow-ups do not count:
    /// they must not alter control flow.
    fn primal_is_finite(self) -> bool;

    /// Ordering of the primal parts; `None` when either primal is NaN
    /// (unordered). Solver control flow must use this, never the tangent.
    fn primal_cmp(self, other: Self) -> Option<Ordering>;

    /// `self <= other` on primal parts; `false` when unordered.
    #[inline]
    fn primal_le(self, other: Self) -> bool {
        matches!(
            self.primal_cmp(other),
            Some(Ordering::Less) | Some(Ordering::Equal)
        )
    }

    /// `self < other` on primal parts; `false` when unordered.
    #[inline]
    fn primal_lt(self, other: Self) -> bool {
        matches!(self.primal_cmp(other), Some(Ordering::Less))
    }

    /// `self == other` on primal parts; `false` when unordered.
    #[inline]
    fn primal_eq(self, other: Self) -> bool {
        matches!(self.primal_cmp(other), Some(Ordering::Equal))
    }

    /// Whether the primal part is exactly zero.
    #[inline]
    fn primal_is_zero(self) -> bool {
        self.primal() == Self::Real::zero()
    }
}

macro_rules! impl_scalar_for_real {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            const CARRIES_TANGENT: bool = false;

            #[inline]
            fn from_real(value: $t) -> Self {
                value
            }
            #[inline]
            fn primal(self) -> $t {
                self
            }
            #[inline]
            fn tangent(self) -> $t {
                0.0
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn primal_is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline]
            fn primal_cmp(self, other: Self) -> Option<Ordering> {
                self.partial_cmp(&other)
            }
        }
    };
}

impl_scalar_for_real!(f32);
impl_scalar_for_real!(f64);

/// First-order dual number: a value and one directional tangent.
///
/// `Dual { value: v, tangent: t }` represents `v + t·ε` with `ε² = 0`; the
/// tangent slot carries `∂(value)/∂u` for the single scalar parameter `u`
/// being differentiated against. Arithmetic applies the usual forward-mode
/// rules; the primal half of every operation is exactly the plain-real
/// expression.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual<R> {
    /// Primal part.
    pub value: R,
    /// Tangent part (directional derivative with respect to `u`).
    pub tangent: R,
}

impl<R: Real> Dual<R> {
    /// A dual with both parts given.
    #[inline]
    pub fn new(value: R, tangent: R) -> Self {
        Dual { value, tangent }
    }

    /// A constant: zero tangent.
    #[inline]
    pub fn constant(value: R) -> Self {
        Dual {
            value,
            tangent: R::zero(),
        }
    }

    /// The independent variable: unit tangent.
    #[inline]
    pub fn variable(value: R) -> Self {
        Dual {
            value,
            tangent: R::one(),
        }
    }
}

impl<R: Real> From<R> for Dual<R> {
    #[inline]
    fn from(value: R) -> Self {
        Dual::constant(value)
    }
}

impl<R: Real> Add for Dual<R> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual {
            value: self.value + rhs.value,
            tangent: self.tangent + rhs.tangent,
        }
    }
}

impl<R: Real> Sub for Dual<R> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual {
            value: self.value - rhs.value,
            tangent: self.tangent - rhs.tangent,
        }
    }
}

impl<R: Real> Mul for Dual<R> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual {
            value: self.value * rhs.value,
            tangent: self.tangent * rhs.value + self.value * rhs.tangent,
        }
    }
}

impl<R: Real> Div for Dual<R> {
    type Output = Self;
    /// Quotient rule in the factored form `(ṡ − q·ṙ)/r` with `q = s/r`: the
    /// textbook `(ṡr − sṙ)/r²` squares the denominator, which underflows to
    /// zero for subnormal-scale `r` and turns exactly-zero tangents into
    /// `0/0` NaNs while the primal quotient is still finite.
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let value = self.value / rhs.value;
        Dual {
            value,
            tangent: (self.tangent - value * rhs.tangent) / rhs.value,
        }
    }
}

impl<R: Real> Neg for Dual<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            value: -self.value,
            tangent: -self.tangent,
        }
    }
}

impl<R: Real> AddAssign for Dual<R> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<R: Real> SubAssign for Dual<R> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<R: Real> MulAssign for Dual<R> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<R: Real> DivAssign for Dual<R> {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<R: Real> Zero for Dual<R> {
    #[inline]
    fn zero() -> Self {
        Dual {
            value: R::zero(),
            tangent: R::zero(),
        }
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.value.is_zero() && self.tangent.is_zero()
    }
}

impl<R: Real> One for Dual<R> {
    #[inline]
    fn one() -> Self {
        Dual {
            value: R::one(),
            tangent: R::zero(),
        }
    }
}

impl<R: Real> Scalar for Dual<R> {
    type Real = R;
    const CARRIES_TANGENT: bool = true;

    #[inline]
    fn from_real(value: R) -> Self {
        Dual::constant(value)
    }

    #[inline]
    fn primal(self) -> R {
        self.value
    }

    #[inline]
    fn tangent(self) -> R {
        self.tangent
    }

    /// `d/du √v = v̇ / (2√v)`. An exactly zero tangent stays exactly zero, so
    /// constants never manufacture spurious NaNs at `v = 0`; a nonzero
    /// tangent at `v = 0` divides by zero and the resulting non-finite
    /// tangent propagates (callers poll finiteness and record a breakdown).
    #[inline]
    fn sqrt(self) -> Self {
        let value = Float::sqrt(self.value);
        let tangent = if self.tangent.is_zero() {
            R::zero()
        } else {
            self.tangent / ((R::one() + R::one()) * value)
        };
        Dual { value, tangent }
    }

    /// `d/du |v| = sign(v)·v̇` with `sign(0) = 0`, so the tangent at a kink
    /// is the symmetric subgradient choice rather than an arbitrary ±1.
    #[inline]
    fn abs(self) -> Self {
        let sign = if self.value > R::zero() {
            R::one()
        } else if self.value < R::zero() {
            -R::one()
        } else {
            R::zero()
        };
        Dual {
            value: Float::abs(self.value),
            tangent: self.tangent * sign,
        }
    }

    #[inline]
    fn primal_is_finite(self) -> bool {
        self.value.is_finite()
    }

    #[inline]
    fn primal_cmp(self, other: Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl<R: Real> fmt::Display for Dual<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.value, self.tangent)
    }
}
