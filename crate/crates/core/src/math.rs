//! Float helpers that work without `std`.

#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - libm::floor(x);
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn log2_ceil_ratio(num: f64, den: f64) -> usize {
    let r = num / den;
    if r <= 1.0 {
        0
    } else {
        libm::ceil(libm::log2(r)) as usize
    }
}

#[inline]
pub fn pow2i(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}
