//! Multi-limb fixed-point reals for convolution recursions on [−4, 4).
//!
//! A number with `L` limbs is `±M / 2^(64L−2)` with `M` an unsigned `64L`-bit
//! integer, so the absolute resolution is `2^-(64L-2)`. Dot products accumulate
//! every partial product exactly and round once.

/// A column of fixed-point numbers sharing one limb count.
#[derive(Clone, Debug)]
pub struct FixedVec {
    limbs: usize,
    mag: Vec<u64>,
    neg: Vec<bool>,
}

fn frac_bits(limbs: usize) -> i32 {
    64 * limbs as i32 - 2
}

impl FixedVec {
    pub fn zeros(limbs: usize, len: usize) -> Self {
        assert!(limbs >= 1);
        FixedVec { limbs, mag: vec![0; limbs * len], neg: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neg.is_empty()
    }

    pub fn limbs(&self) -> usize {
        self.limbs
    }

    pub fn bits(&self) -> u32 {
        64 * self.limbs as u32
    }

    fn slot(&self, i: usize) -> &[u64] {
        &self.mag[i * self.limbs..(i + 1) * self.limbs]
    }

    fn slot_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.mag[i * self.limbs..(i + 1) * self.limbs]
    }

    /// Store `x` rounded to the nearest representable value.
    pub fn set_f64(&mut self, i: usize, x: f64) {
        assert!(x.is_finite() && x.abs() < 4.0, "fixed-point range is (-4, 4)");
        let l = self.limbs;
        let out = self.slot_mut(i);
        out.iter_mut().for_each(|v| *v = 0);
        self.neg[i] = x < 0.0;
        if x == 0.0 {
            return;
        }
        let bits = x.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let (mant, e) = if exp == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
        };
        // value = mant · 2^e, integer M = mant · 2^(e + F)
        let shift = e + frac_bits(l);
        let out = self.slot_mut(i);
        if shift >= 0 {
            let s = shift as usize;
            let (q, r) = (s / 64, s % 64);
            let wide = (mant as u128) << r;
            if q < l {
                out[q] = wide as u64;
            }
            if q + 1 < l {
                out[q + 1] = (wide >> 64) as u64;
            }
        } else {
            let s = (-shift) as u32;
            if s <= 64 {
                let half = if s == 0 { 0 } else { 1u128 << (s - 1) };
                out[0] = (((mant as u128) + half) >> s) as u64;
            }
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        let m = self.slot(i);
        let top = match m.iter().rposition(|&v| v != 0) {
            Some(t) => t,
            None => return 0.0,
        };
        let v = if top == 0 {
            m[0] as f64 * pow2(-frac_bits(self.limbs))
        } else {
            let w = ((m[top] as u128) << 64) | m[top - 1] as u128;
            w as f64 * pow2(64 * (top as i32 - 1) - frac_bits(self.limbs))
        };
        if self.neg[i] {
            -v
        } else {
            v
        }
    }

    pub fn is_negative(&self, i: usize) -> bool {
        self.neg[i]
    }

    /// Exact `Σ_k a[ia_k] · b[ib_k]` over pairs `(ia_k, ib_k)` with a single rounding, stored at `self[dst]`.
    ///
    /// Products are binned by sign into two exact accumulators.
    pub fn dot_into<I: Iterator<Item = (usize, usize)>>(&mut self, dst: usize, a: &FixedVec, b: &FixedVec, pairs: I) {
        let mut acc = DotAcc::new(self.limbs);
        for (ia, ib) in pairs {
            acc.add(a.slot(ia), a.neg[ia], b.slot(ib), b.neg[ib]);
        }
        let (neg, m) = acc.finish();
        self.neg[dst] = neg;
        self.slot_mut(dst).copy_from_slice(&m);
    }

    /// As [`dot_into`](Self::dot_into) with `b = self`, for self-referential recursions.
    pub fn dot_self_into<I: Iterator<Item = (usize, usize)>>(&mut self, dst: usize, a: &FixedVec, pairs: I) {
        let mut acc = DotAcc::new(self.limbs);
        for (ia, ib) in pairs {
            acc.add(a.slot(ia), a.neg[ia], self.slot(ib), self.neg[ib]);
        }
        let (neg, m) = acc.finish();
        self.neg[dst] = neg;
        self.slot_mut(dst).copy_from_slice(&m);
    }

    /// `self[dst] = x[ix] − y[iy]`, exact.
    pub fn sub_into(&mut self, dst: usize, x: &FixedVec, ix: usize, y: &FixedVec, iy: usize) {
        let (xn, yn) = (x.neg[ix], !y.neg[iy]);
        let xs = x.slot(ix).to_vec();
        let ys = y.slot(iy).to_vec();
        let (neg, m) = signed_add(&xs, xn, &ys, yn);
        self.neg[dst] = neg;
        self.slot_mut(dst).copy_from_slice(&m);
    }

    /// `self[dst] = x[ix]²` rounded once.
    pub fn square_into(&mut self, dst: usize, x: &FixedVec, ix: usize) {
        let mut acc = DotAcc::new(self.limbs);
        acc.add(x.slot(ix), false, x.slot(ix), false);
        let (_, m) = acc.finish();
        self.neg[dst] = false;
        self.slot_mut(dst).copy_from_slice(&m);
    }

    pub fn copy_from(&mut self, dst: usize, x: &FixedVec, ix: usize) {
        assert_eq!(self.limbs, x.limbs);
        self.neg[dst] = x.neg[ix];
        let s = x.slot(ix).to_vec();
        self.slot_mut(dst).copy_from_slice(&s);
    }
}

fn pow2(e: i32) -> f64 {
    // exact for the exponent range used here, including subnormal results
    if e < -1000 {
        2f64.powi(-1000) * 2f64.powi(e + 1000)
    } else {
        2f64.powi(e)
    }
}

fn cmp_mag(a: &[u64], b: &[u64]) -> std::cmp::Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

fn add_mag(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0; a.len()];
    let mut carry = 0u128;
    for i in 0..a.len() {
        let s = a[i] as u128 + b[i] as u128 + carry;
        out[i] = s as u64;
        carry = s >> 64;
    }
    assert!(carry == 0, "fixed-point overflow");
    out
}

fn sub_mag(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0; a.len()];
    let mut borrow = 0i128;
    for i in 0..a.len() {
        let d = a[i] as i128 - b[i] as i128 - borrow;
        if d < 0 {
            out[i] = (d + (1i128 << 64)) as u64;
            borrow = 1;
        } else {
            out[i] = d as u64;
            borrow = 0;
        }
    }
    out
}

fn signed_add(a: &[u64], an: bool, b: &[u64], bn: bool) -> (bool, Vec<u64>) {
    if an == bn {
        return (an, add_mag(a, b));
    }
    match cmp_mag(a, b) {
        std::cmp::Ordering::Less => (bn, sub_mag(b, a)),
        _ => {
            let d = sub_mag(a, b);
            let zero = d.iter().all(|&v| v == 0);
            (an && !zero, d)
        }
    }
}

/// Exact accumulator of fixed-point products (scale `2^(2F)`), one column per limb position.
struct DotAcc {
    limbs: usize,
    pos: Vec<u128>,
    neg: Vec<u128>,
    any_neg: bool,
}

impl DotAcc {
    fn new(limbs: usize) -> Self {
        DotAcc { limbs, pos: vec![0; 2 * limbs + 2], neg: vec![0; 2 * limbs + 2], any_neg: false }
    }

    #[inline]
    fn add(&mut self, a: &[u64], an: bool, b: &[u64], bn: bool) {
        let cols = if an != bn {
            self.any_neg = true;
            &mut self.neg
        } else {
            &mut self.pos
        };
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let ai = ai as u128;
            for (j, &bj) in b.iter().enumerate() {
                let p = ai * bj as u128;
                cols[i + j] += p as u64 as u128;
                cols[i + j + 1] += p >> 64;
            }
        }
    }

    fn normalize(cols: &[u128]) -> Vec<u64> {
        let mut out = vec![0u64; cols.len() + 1];
        let mut carry = 0u128;
        for (i, &c) in cols.iter().enumerate() {
            // c < 2^127 and carry < 2^64, so no overflow
            let s = c + carry;
            out[i] = s as u64;
            carry = s >> 64;
        }
        out[cols.len()] = carry as u64;
        out
    }

    /// Round the signed sum back to `F` fractional bits.
    fn finish(self) -> (bool, Vec<u64>) {
        let p = Self::normalize(&self.pos);
        let (neg, m) = if self.any_neg {
            let n = Self::normalize(&self.neg);
            signed_add(&p, false, &n, true)
        } else {
            (false, p)
        };
        let l = self.limbs;
        // shift right by F = 64(l-1) + 62 with round-half-up
        let base = l - 1;
        let mut out = vec![0u64; l];
        let get = |k: usize| if k < m.len() { m[k] } else { 0 };
        for (k, o) in out.iter_mut().enumerate() {
            let lo = get(base + k) >> 62;
            let hi = get(base + k + 1) << 2;
            *o = lo | hi;
        }
        let high_rest = (base + l + 1..m.len()).any(|k| m[k] != 0) || (get(base + l) >> 62) != 0;
        assert!(!high_rest, "fixed-point overflow in dot product");
        let round = (get(base) >> 61) & 1;
        if round == 1 {
            let mut carry = 1u128;
            for o in out.iter_mut() {
                let s = *o as u128 + carry;
                *o = s as u64;
                carry = s >> 64;
                if carry == 0 {
                    break;
                }
            }
            assert!(carry == 0, "fixed-point overflow in rounding");
        }
        let zero = out.iter().all(|&v| v == 0);
        (neg && !zero, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        let mut v = FixedVec::zeros(3, 6);
        let xs = [0.25, -1.5, 3.999_999, 1e-30, -7.3e-20, 0.1];
        for (i, &x) in xs.iter().enumerate() {
            v.set_f64(i, x);
        }
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(v.get_f64(i), x, "index {i}");
        }
    }

    #[test]
    fn underflow_rounds_to_zero() {
        let mut v = FixedVec::zeros(2, 1);
        v.set_f64(0, 1e-60);
        assert_eq!(v.get_f64(0), 0.0);
        let mut w = FixedVec::zeros(8, 1);
        w.set_f64(0, 1e-60);
        assert_eq!(w.get_f64(0), 1e-60);
    }

    #[test]
    fn dot_is_exact_before_rounding() {
        // (1/3 rounded)·3 summed with cancellation
        let mut a = FixedVec::zeros(3, 4);
        a.set_f64(0, 0.75);
        a.set_f64(1, -0.5);
        a.set_f64(2, 1e-25);
        a.set_f64(3, 0.5);
        let mut out = FixedVec::zeros(3, 1);
        out.dot_into(0, &a, &a, [(0, 0), (1, 3), (2, 2)].into_iter());
        // 0.5625 - 0.25 + 1e-50
        let v = out.get_f64(0);
        assert!((v - 0.3125).abs() < 1e-16);
        let mut d = FixedVec::zeros(3, 1);
        let mut q = FixedVec::zeros(3, 1);
        q.set_f64(0, 0.3125);
        d.sub_into(0, &out, 0, &q, 0);
        let r = d.get_f64(0);
        assert!((r - 1e-50).abs() < 1e-57, "{r}");
    }

    #[test]
    fn negative_results() {
        let mut a = FixedVec::zeros(2, 2);
        a.set_f64(0, 0.5);
        a.set_f64(1, -0.75);
        let mut out = FixedVec::zeros(2, 1);
        out.dot_into(0, &a, &a, [(0, 0), (1, 0)].into_iter());
        assert_eq!(out.get_f64(0), -0.125);
        assert!(out.is_negative(0));
    }

    #[test]
    fn squares() {
        let mut a = FixedVec::zeros(4, 1);
        a.set_f64(0, 0.1);
        let mut s = FixedVec::zeros(4, 1);
        s.square_into(0, &a, 0);
        assert_eq!(s.get_f64(0), 0.1f64 * 0.1f64);
    }
}
