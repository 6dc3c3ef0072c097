//! Integer-exact guarantee arithmetic. The solver retires at least a quarter
//! of the active terminals per round while two or more remain, giving
//! floor(log_{4/3} k) + 1 rounds and twice that many color switches in the
//! worst case. Bounds are asserted with exact rational comparisons, never
//! floating point; the real-valued 2*log_{4/3} k only appears in reports.

/// Four-limb unsigned integer, just enough for 4^t and k * 3^t at the
/// magnitudes the bound arithmetic needs (k <= 2^32, t < 100).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct U256([u64; 4]);

impl U256 {
    fn from_u64(v: u64) -> Self {
        U256([0, 0, 0, v])
    }

    fn mul_small(self, m: u64) -> Self {
        let mut out = [0u64; 4];
        let mut carry: u128 = 0;
        for i in (0..4).rev() {
            let prod = self.0[i] as u128 * m as u128 + carry;
            out[i] = prod as u64;
            carry = prod >> 64;
        }
        assert_eq!(carry, 0, "bound arithmetic overflowed 256 bits");
        U256(out)
    }
}

/// Largest t with (4/3)^t <= k, decided by the exact integer comparison
/// 4^t <= k * 3^t. Requires 1 <= k <= 2^32.
pub fn floor_log_four_thirds(k: u64) -> u32 {
    assert!(k >= 1, "log of zero");
    assert!(k <= u32::MAX as u64 + 1, "k out of supported range");
    let mut t = 0u32;
    let mut pow4 = U256::from_u64(4);
    let mut pow3 = U256::from_u64(3);
    while pow4 <= pow3.mul_small(k) {
        t += 1;
        pow4 = pow4.mul_small(4);
        pow3 = pow3.mul_small(3);
    }
    t
}

/// Round count the solver never exceeds: floor(log_{4/3} k) + 1 for k >= 1,
/// zero when there are no terminals.
pub fn iteration_bound(k: u64) -> u32 {
    if k == 0 {
        0
    } else {
        floor_log_four_thirds(k) + 1
    }
}

/// Worst-case switching guarantee in integer-safe form:
/// 2 * (floor(log_{4/3} k) + 1).
pub fn switching_bound(k: u64) -> u32 {
    2 * iteration_bound(k)
}

/// The real-valued 2 * log_{4/3} k, for display in summaries only.
pub fn switching_bound_real(k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        2.0 * (k as f64).ln() / (4.0f64 / 3.0).ln()
    }
}
