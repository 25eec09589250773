use std::fmt;

/// The value algebra a circuit is evaluated over. Values are unsigned
/// integers of the circuit's alphabet width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semiring {
    /// Integers modulo a prime.
    PlusTimes { modulus: u64 },
    /// Tropical `(min, +)` with `infinity` as the additive identity;
    /// multiplication saturates at `infinity`.
    MinPlus { infinity: u64 },
    /// Integers modulo `2^bits`.
    Wrapping { bits: u32 },
}

impl Semiring {
    /// `(+, x)` modulo the largest prime below `2^bits`.
    pub fn plus_times(bits: u32) -> Self {
        assert!((2..=62).contains(&bits), "alphabet width {bits} unsupported");
        let mut p = (1u64 << bits) - 1;
        while !is_prime(p) {
            p -= 1;
        }
        Self::PlusTimes { modulus: p }
    }

    pub fn tropical(bits: u32) -> Self {
        assert!((1..=63).contains(&bits), "alphabet width {bits} unsupported");
        Self::MinPlus { infinity: (1u64 << bits) - 1 }
    }

    pub fn wrapping(bits: u32) -> Self {
        assert!((1..=63).contains(&bits), "alphabet width {bits} unsupported");
        Self::Wrapping { bits }
    }

    pub fn zero(self) -> u64 {
        match self {
            Self::PlusTimes { .. } | Self::Wrapping { .. } => 0,
            Self::MinPlus { infinity } => infinity,
        }
    }

    pub fn one(self) -> u64 {
        match self {
            Self::PlusTimes { .. } | Self::Wrapping { .. } => 1,
            Self::MinPlus { .. } => 0,
        }
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        match self {
            Self::PlusTimes { modulus } => ((a as u128 + b as u128) % modulus as u128) as u64,
            Self::MinPlus { .. } => a.min(b),
            Self::Wrapping { bits } => a.wrapping_add(b) & mask(bits),
        }
    }

    pub fn mul(self, a: u64, b: u64) -> u64 {
        match self {
            Self::PlusTimes { modulus } => ((a as u128 * b as u128) % modulus as u128) as u64,
            Self::MinPlus { infinity } => a.saturating_add(b).min(infinity),
            Self::Wrapping { bits } => a.wrapping_mul(b) & mask(bits),
        }
    }

    /// Additive inverse where one exists.
    pub fn neg(self, a: u64) -> Option<u64> {
        match self {
            Self::PlusTimes { modulus } => Some(if a == 0 { 0 } else { modulus - a }),
            Self::Wrapping { bits } => Some(a.wrapping_neg() & mask(bits)),
            Self::MinPlus { .. } => None,
        }
    }

    /// Maps a signed integer coefficient into the ring.
    pub fn from_i64(self, v: i64) -> Option<u64> {
        let mag = v.unsigned_abs();
        let reduced = match self {
            Self::PlusTimes { modulus } => mag % modulus,
            Self::Wrapping { bits } => mag & mask(bits),
            Self::MinPlus { .. } => return (v >= 0).then_some(mag),
        };
        if v < 0 {
            self.neg(reduced)
        } else {
            Some(reduced)
        }
    }

    /// Whether `v` is a canonical element.
    pub fn contains(self, v: u64) -> bool {
        match self {
            Self::PlusTimes { modulus } => v < modulus,
            Self::MinPlus { infinity } => v <= infinity,
            Self::Wrapping { bits } => v <= mask(bits),
        }
    }

    /// Number of distinct canonical elements, saturating at `u64::MAX`.
    pub fn size(self) -> u64 {
        match self {
            Self::PlusTimes { modulus } => modulus,
            Self::MinPlus { infinity } => infinity.saturating_add(1),
            Self::Wrapping { bits } => mask(bits).saturating_add(1),
        }
    }

    pub fn is_ring(self) -> bool {
        !matches!(self, Self::MinPlus { .. })
    }
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PlusTimes { modulus } => write!(f, "plus-times:{modulus}"),
            Self::MinPlus { infinity } => write!(f, "min-plus:{infinity}"),
            Self::Wrapping { bits } => write!(f, "wrapping:{bits}"),
        }
    }
}

impl std::str::FromStr for Semiring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| format!("bad semiring `{s}`"))?;
        let arg: u64 = arg.parse().map_err(|_| format!("bad semiring parameter in `{s}`"))?;
        match kind {
            "plus-times" if arg >= 2 => Ok(Self::PlusTimes { modulus: arg }),
            "min-plus" => Ok(Self::MinPlus { infinity: arg }),
            "wrapping" if (1..=63).contains(&arg) => Ok(Self::Wrapping { bits: arg as u32 }),
            _ => Err(format!("bad semiring `{s}`")),
        }
    }
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial_division(n), "{n}");
        }
        assert!(is_prime((1 << 61) - 1));
    }

    #[test]
    fn plus_times_picks_largest_prime_below_power() {
        assert_eq!(Semiring::plus_times(12), Semiring::PlusTimes { modulus: 4093 });
        assert_eq!(Semiring::plus_times(4), Semiring::PlusTimes { modulus: 13 });
    }

    #[test]
    fn tropical_identities() {
        let t = Semiring::tropical(8);
        assert_eq!(t.add(t.zero(), 17), 17);
        assert_eq!(t.mul(t.one(), 17), 17);
        assert_eq!(t.mul(t.zero(), 17), t.zero());
        assert_eq!(t.mul(200, 100), 255);
    }

    #[test]
    fn signed_coefficients() {
        let r = Semiring::PlusTimes { modulus: 13 };
        assert_eq!(r.from_i64(-1), Some(12));
        assert_eq!(r.add(r.from_i64(-5).unwrap(), 5), 0);
        assert_eq!(Semiring::tropical(4).from_i64(-1), None);
    }

    #[test]
    fn display_roundtrip() {
        for s in [Semiring::plus_times(12), Semiring::tropical(12), Semiring::wrapping(9)] {
            assert_eq!(s.to_string().parse::<Semiring>().unwrap(), s);
        }
    }

    fn check_laws(s: Semiring, a: u64, b: u64, c: u64) -> Result<(), TestCaseError> {
        prop_assert_eq!(s.add(a, b), s.add(b, a));
        prop_assert_eq!(s.add(s.add(a, b), c), s.add(a, s.add(b, c)));
        prop_assert_eq!(s.mul(s.mul(a, b), c), s.mul(a, s.mul(b, c)));
        prop_assert_eq!(s.mul(a, s.add(b, c)), s.add(s.mul(a, b), s.mul(a, c)));
        prop_assert_eq!(s.add(a, s.zero()), a);
        prop_assert_eq!(s.mul(a, s.one()), a);
        Ok(())
    }

    proptest! {
        #[test]
        fn plus_times_laws(a in 0..4093u64, b in 0..4093u64, c in 0..4093u64) {
            check_laws(Semiring::plus_times(12), a, b, c)?;
        }

        #[test]
        fn tropical_laws(a in 0..=4095u64, b in 0..=4095u64, c in 0..=4095u64) {
            check_laws(Semiring::tropical(12), a, b, c)?;
        }

        #[test]
        fn wrapping_laws(a in 0..4096u64, b in 0..4096u64, c in 0..4096u64) {
            check_laws(Semiring::wrapping(12), a, b, c)?;
        }
    }
}
