//! Exact factorial-type quantities over the integers and rationals.

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;

pub fn factorial(n: u64) -> UBig {
    (2..=n).fold(UBig::ONE, |acc, i| acc * UBig::from(i))
}

pub fn binomial(n: u64, k: u64) -> UBig {
    if k > n {
        return UBig::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = UBig::ONE;
    for i in 0..k {
        // exact at every step: acc = C(n, i+1) after the division
        acc = acc * UBig::from(n - i) / UBig::from(i + 1);
    }
    acc
}

/// z(z-1)...(z-j+1); the empty product is one.
pub fn falling(z: &RBig, j: u64) -> RBig {
    (0..j).fold(RBig::ONE, |acc, i| acc * (z - RBig::from(i)))
}

/// z(z+1)...(z+j-1); the empty product is one.
pub fn rising(z: &RBig, j: u64) -> RBig {
    (0..j).fold(RBig::ONE, |acc, i| acc * (z + RBig::from(i)))
}

/// n!/(2^{n/2} (n/2)!) for even n, i.e. (n-1)!!; zero for odd n.
pub fn gaussian_moment_factor(n: u64) -> UBig {
    if n % 2 == 1 {
        return UBig::ZERO;
    }
    let half = n / 2;
    factorial(n) / (factorial(half) << half as usize)
}

pub fn ratio(num: i64, den: u64) -> RBig {
    RBig::from_parts(IBig::from(num), UBig::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_match_pascal() {
        for n in 0..20u64 {
            for k in 1..n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
            assert_eq!(binomial(n, 0), UBig::ONE);
            assert_eq!(binomial(n, n + 1), UBig::ZERO);
        }
    }

    #[test]
    fn falling_and_rising() {
        let z = RBig::from(5u8);
        assert_eq!(falling(&z, 3), RBig::from(60u8));
        assert_eq!(rising(&z, 3), RBig::from(210u8));
        assert_eq!(falling(&z, 0), RBig::ONE);
        let half = ratio(1, 2);
        assert_eq!(rising(&half, 2), ratio(3, 4));
    }

    #[test]
    fn double_factorials() {
        let expected = [1u64, 0, 1, 0, 3, 0, 15, 0, 105, 0, 945];
        for (n, &e) in expected.iter().enumerate() {
            assert_eq!(gaussian_moment_factor(n as u64), UBig::from(e), "n = {n}");
        }
    }
}
