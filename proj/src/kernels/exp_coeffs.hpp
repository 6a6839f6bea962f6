#pragma once

// Shared constants for the vectorized exp used by the SIMD log-sum-exp
// kernels: range reduction x = k ln2 + r with |r| <= ln2/2, then a degree-13
// Taylor polynomial in r (truncation error below 1e-17 on that interval).

namespace dfemd::kernels::detail {

inline constexpr double kLog2e = 1.4426950408889634074;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
// Smallest argument whose exp is still a normal double; terms below are
// flushed to zero.
inline constexpr double kExpMin = -708.0;

inline constexpr double kExpTaylor[14] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
};

}  // namespace dfemd::kernels::detail
