//! The Thue-Morse word and its two-sided extension.

use crate::error::{Error, Result};
use crate::numerics::PrecisionReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    /// The exchanged letter.
    pub fn bar(self) -> Letter {
        match self {
            Letter::A => Letter::B,
            Letter::B => Letter::A,
        }
    }

    /// +1 on `A`, -1 on `B`.
    pub fn weight(self) -> i32 {
        match self {
            Letter::A => 1,
            Letter::B => -1,
        }
    }
}

/// Letter at site `n`; sites `n <= 0` mirror site `1 - n`.
pub fn tm_letter(n: i64) -> Letter {
    let m = if n >= 1 { n } else { 1 - n };
    if (m - 1).count_ones() % 2 == 0 {
        Letter::A
    } else {
        Letter::B
    }
}

/// `±λ` according to the letter at site `n`.
pub fn tm_potential(n: i64, lambda: &PrecisionReal) -> Result<PrecisionReal> {
    if lambda.is_zero() {
        return Err(Error::ZeroCoupling);
    }
    Ok(match tm_letter(n) {
        Letter::A => lambda.clone(),
        Letter::B => -lambda,
    })
}

/// Applies the substitution `a -> ab, b -> ba` `k` times to `a`.
pub fn substitute(k: u32) -> Vec<Letter> {
    let mut w = vec![Letter::A];
    for _ in 0..k {
        w = w.iter().flat_map(|&l| [l, l.bar()]).collect();
    }
    w
}

/// Checks that the prefix of length `4^n` reads the same backwards and that
/// the block of sites `2^n + 1 ..= 2^(n+1)` is the barred prefix of length `2^n`.
pub fn check_palindrome(n: u32) -> bool {
    let long = 1i64 << (2 * n);
    let palin = (1..=long).all(|i| tm_letter(i) == tm_letter(long + 1 - i));
    let half = 1i64 << n;
    let barred = (1..=half).all(|i| tm_letter(half + i) == tm_letter(i).bar());
    palin && barred
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_letters() {
        use Letter::*;
        assert_eq!([1, 2, 3, 4].map(tm_letter), [A, B, B, A]);
        assert_eq!(tm_letter(0), A);
    }

    #[test]
    fn large_index_against_substitution() {
        let w = substitute(20);
        let n = 1usize << 20;
        assert_eq!(tm_letter(n as i64), w[n - 1]);
    }

    #[test]
    fn popcount_agrees_with_substitution_up_to_2_16() {
        let w = substitute(16);
        for (i, l) in w.iter().enumerate() {
            assert_eq!(tm_letter(i as i64 + 1), *l);
        }
    }

    #[test]
    fn potential_values() {
        let one = PrecisionReal::one(64);
        assert_eq!(tm_potential(1, &one).unwrap().to_f64(), 1.0);
        assert_eq!(tm_potential(2, &one).unwrap().to_f64(), -1.0);
        let half = PrecisionReal::from_f64(0.5, 64);
        assert!(tm_potential(-5, &half).unwrap() == tm_potential(6, &half).unwrap());
        assert_eq!(tm_potential(1, &PrecisionReal::zero(64)), Err(Error::ZeroCoupling));
    }

    #[test]
    fn palindromes() {
        for n in 1..=8 {
            assert!(check_palindrome(n), "n = {n}");
        }
    }

    proptest! {
        #[test]
        fn reflection(n in -(1i64 << 16)..=(1i64 << 16)) {
            prop_assert_eq!(tm_letter(n), tm_letter(1 - n));
        }

        #[test]
        fn bar_is_involution(a in any::<bool>()) {
            let l = if a { Letter::A } else { Letter::B };
            prop_assert_eq!(l.bar().bar(), l);
        }
    }
}
