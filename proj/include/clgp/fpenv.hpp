#pragma once

#if defined(__SSE2__)
#include <immintrin.h>
#endif

namespace clgp {

/// Flushes subnormal results and operands to zero on the calling thread for
/// the guard's lifetime. RBF entries between far-apart points underflow, and
/// subnormal arithmetic is 20-30x slower on x86. No-op on other targets.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#else
  FlushDenormals() = default;
#endif

 public:
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;
};

}  // namespace clgp
