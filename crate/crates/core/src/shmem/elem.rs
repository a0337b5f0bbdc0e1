//! Element types accepted by the typed RMA, atomic and reduction routines.

use std::fmt::Debug;

/// Reduction operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Sum,
    Prod,
    Min,
    Max,
    And,
    Or,
    Xor,
}

impl ReduceOp {
    pub const ALL: [ReduceOp; 7] = [
        ReduceOp::Sum,
        ReduceOp::Prod,
        ReduceOp::Min,
        ReduceOp::Max,
        ReduceOp::And,
        ReduceOp::Or,
        ReduceOp::Xor,
    ];

    pub fn is_bitwise(self) -> bool {
        matches!(self, ReduceOp::And | ReduceOp::Or | ReduceOp::Xor)
    }

    pub fn name(self) -> &'static str {
        match self {
            ReduceOp::Sum => "sum",
            ReduceOp::Prod => "prod",
            ReduceOp::Min => "min",
            ReduceOp::Max => "max",
            ReduceOp::And => "and",
            ReduceOp::Or => "or",
            ReduceOp::Xor => "xor",
        }
    }
}

/// A fixed-width value stored little-endian in a local store.
pub trait Elem: Copy + PartialEq + PartialOrd + Debug + Default + 'static {
    const SIZE: usize;
    const IS_FLOAT: bool;

    fn to_bits(self) -> u64;
    fn from_bits(bits: u64) -> Self;

    /// Applies `op`; `None` for bitwise operators on floats. Integer
    /// arithmetic wraps.
    fn combine(op: ReduceOp, a: Self, b: Self) -> Option<Self>;

    fn one() -> Self;

    fn encode(values: &[Self]) -> Vec<u8> {
        let mut out = Vec::with_capacity(values.len() * Self::SIZE);
        for v in values {
            out.extend_from_slice(&v.to_bits().to_le_bytes()[..Self::SIZE]);
        }
        out
    }

    fn decode(bytes: &[u8]) -> Vec<Self> {
        bytes
            .chunks_exact(Self::SIZE)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..Self::SIZE].copy_from_slice(c);
                Self::from_bits(u64::from_le_bytes(buf))
            })
            .collect()
    }
}

/// Types with a dedicated lock word for the lock-based atomics.
pub trait AtomicElem: Elem {
    /// Index into the per-PE table of atomic locks.
    const LOCK_SLOT: usize;
}

macro_rules! int_elem {
    ($t:ty, $u:ty, $slot:expr) => {
        int_elem!($t, $u);

        impl AtomicElem for $t {
            const LOCK_SLOT: usize = $slot;
        }
    };
    ($t:ty, $u:ty) => {
        impl Elem for $t {
            const SIZE: usize = std::mem::size_of::<$t>();
            const IS_FLOAT: bool = false;

            fn to_bits(self) -> u64 {
                self as $u as u64
            }

            fn from_bits(bits: u64) -> Self {
                bits as $u as $t
            }

            fn combine(op: ReduceOp, a: Self, b: Self) -> Option<Self> {
                Some(match op {
                    ReduceOp::Sum => a.wrapping_add(b),
                    ReduceOp::Prod => a.wrapping_mul(b),
                    ReduceOp::Min => a.min(b),
                    ReduceOp::Max => a.max(b),
                    ReduceOp::And => a & b,
                    ReduceOp::Or => a | b,
                    ReduceOp::Xor => a ^ b,
                })
            }

            fn one() -> Self {
                1
            }
        }
    };
}

macro_rules! float_elem {
    ($t:ty, $u:ty, $slot:expr) => {
        impl Elem for $t {
            const SIZE: usize = std::mem::size_of::<$t>();
            const IS_FLOAT: bool = true;

            fn to_bits(self) -> u64 {
                <$t>::to_bits(self) as u64
            }

            fn from_bits(bits: u64) -> Self {
                <$t>::from_bits(bits as $u)
            }

            fn combine(op: ReduceOp, a: Self, b: Self) -> Option<Self> {
                match op {
                    ReduceOp::Sum => Some(a + b),
                    ReduceOp::Prod => Some(a * b),
                    ReduceOp::Min => Some(a.min(b)),
                    ReduceOp::Max => Some(a.max(b)),
                    _ => None,
                }
            }

            fn one() -> Self {
                1.0
            }
        }

        impl AtomicElem for $t {
            const LOCK_SLOT: usize = $slot;
        }
    };
}

// lock slots: 32-bit int, 64-bit int, 32-bit float, 64-bit float
int_elem!(i16, u16);
int_elem!(i32, u32, 0);
int_elem!(u32, u32, 0);
int_elem!(i64, u64, 1);
int_elem!(u64, u64, 1);
float_elem!(f32, u32, 2);
float_elem!(f64, u64, 3);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_roundtrip_signed() {
        assert_eq!(<i32 as Elem>::from_bits((-5i32).to_bits()), -5);
        assert_eq!((-1i32).to_bits(), 0xffff_ffff);
        assert_eq!(<i16 as Elem>::decode(&i16::encode(&[-2, 7])), vec![-2, 7]);
    }

    #[test]
    fn float_bitwise_rejected() {
        assert_eq!(f64::combine(ReduceOp::Xor, 1.0, 2.0), None);
        assert_eq!(f32::combine(ReduceOp::Max, 1.0, 2.0), Some(2.0));
        assert_eq!(i32::combine(ReduceOp::Sum, i32::MAX, 1), Some(i32::MIN));
    }

    #[test]
    fn lock_slots_separate_types() {
        assert_ne!(
            <i32 as AtomicElem>::LOCK_SLOT,
            <f32 as AtomicElem>::LOCK_SLOT
        );
        assert_ne!(
            <i64 as AtomicElem>::LOCK_SLOT,
            <f64 as AtomicElem>::LOCK_SLOT
        );
        assert_ne!(
            <i32 as AtomicElem>::LOCK_SLOT,
            <i64 as AtomicElem>::LOCK_SLOT
        );
    }
}
