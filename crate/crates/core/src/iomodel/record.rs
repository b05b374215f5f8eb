//! Fixed-width binary encodings for records stored on the block device.
//!
//! All integers are little-endian. A [`Record`] has a compile-time width; a
//! [`Codec`] generalizes this to widths chosen at runtime (for example the
//! `k + 1` labels of a trace).

use std::marker::PhantomData;

/// A record type with a fixed on-disk width.
pub trait Record: Sized {
    const WIDTH: usize;
    /// File magic used when a sequence of this record type is written to disk.
    const MAGIC: [u8; 5] = *b"EXSEQ";

    fn encode(&self, out: &mut [u8]);
    fn decode(buf: &[u8]) -> Self;
}

/// Encodes and decodes items of one runtime-determined width.
pub trait Codec: Clone {
    type Item;

    fn width(&self) -> usize;
    fn magic(&self) -> [u8; 5];
    fn encode(&self, item: &Self::Item, out: &mut [u8]);
    fn decode(&self, buf: &[u8]) -> Self::Item;
}

/// The codec of a [`Record`] type.
pub struct Fixed<T>(PhantomData<fn() -> T>);

impl<T> Fixed<T> {
    pub const fn new() -> Self {
        Fixed(PhantomData)
    }
}

impl<T> Default for Fixed<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> Clone for Fixed<T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for Fixed<T> {}

impl<T: Record> Codec for Fixed<T> {
    type Item = T;

    #[inline]
    fn width(&self) -> usize {
        T::WIDTH
    }

    fn magic(&self) -> [u8; 5] {
        T::MAGIC
    }

    #[inline]
    fn encode(&self, item: &T, out: &mut [u8]) {
        item.encode(out)
    }

    #[inline]
    fn decode(&self, buf: &[u8]) -> T {
        T::decode(buf)
    }
}

#[inline]
pub fn put_u64(out: &mut [u8], at: usize, v: u64) {
    out[at..at + 8].copy_from_slice(&v.to_le_bytes());
}

#[inline]
pub fn get_u64(buf: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(buf[at..at + 8].try_into().unwrap())
}

#[inline]
pub fn put_u32(out: &mut [u8], at: usize, v: u32) {
    out[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

#[inline]
pub fn get_u32(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(buf[at..at + 4].try_into().unwrap())
}

macro_rules! int_record {
    ($t:ty, $w:expr) => {
        impl Record for $t {
            const WIDTH: usize = $w;

            #[inline]
            fn encode(&self, out: &mut [u8]) {
                out[..$w].copy_from_slice(&self.to_le_bytes());
            }

            #[inline]
            fn decode(buf: &[u8]) -> Self {
                <$t>::from_le_bytes(buf[..$w].try_into().unwrap())
            }
        }
    };
}

int_record!(u8, 1);
int_record!(u32, 4);
int_record!(u64, 8);
int_record!(i64, 8);

impl<A: Record, B: Record> Record for (A, B) {
    const WIDTH: usize = A::WIDTH + B::WIDTH;

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        self.0.encode(&mut out[..A::WIDTH]);
        self.1.encode(&mut out[A::WIDTH..Self::WIDTH]);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        (A::decode(&buf[..A::WIDTH]), B::decode(&buf[A::WIDTH..Self::WIDTH]))
    }
}

impl<A: Record, B: Record, C: Record> Record for (A, B, C) {
    const WIDTH: usize = A::WIDTH + B::WIDTH + C::WIDTH;

    #[inline]
    fn encode(&self, out: &mut [u8]) {
        let (a, b) = (A::WIDTH, A::WIDTH + B::WIDTH);
        self.0.encode(&mut out[..a]);
        self.1.encode(&mut out[a..b]);
        self.2.encode(&mut out[b..Self::WIDTH]);
    }

    #[inline]
    fn decode(buf: &[u8]) -> Self {
        let (a, b) = (A::WIDTH, A::WIDTH + B::WIDTH);
        (A::decode(&buf[..a]), B::decode(&buf[a..b]), C::decode(&buf[b..Self::WIDTH]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_layout_is_field_order_little_endian() {
        let mut buf = [0u8; 12];
        (0x0102_0304_0506_0708u64, 0x0a0b_0c0du32).encode(&mut buf);
        assert_eq!(buf, [8, 7, 6, 5, 4, 3, 2, 1, 0x0d, 0x0c, 0x0b, 0x0a]);
        assert_eq!(<(u64, u32)>::decode(&buf), (0x0102_0304_0506_0708, 0x0a0b_0c0d));
    }

    #[test]
    fn negative_i64_round_trips() {
        let mut buf = [0u8; 8];
        (-1i64).encode(&mut buf);
        assert_eq!(i64::decode(&buf), -1);
    }
}
