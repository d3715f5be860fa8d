#ifndef EVFI_DETAIL_HPP
#define EVFI_DETAIL_HPP

#include <cmath>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evfi::detail {

/// True when already inside an OpenMP parallel region (used to suppress
/// nested parallelism in kernels that are both entry points and helpers).
inline bool in_parallel() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

inline void append_all(std::ostringstream&) {}

template <typename T, typename... Rest>
void append_all(std::ostringstream& os, const T& value, const Rest&... rest) {
    os << value;
    append_all(os, rest...);
}

/// Builds a diagnostic message from mixed parts.
template <typename... Parts>
std::string msg(const Parts&... parts) {
    std::ostringstream os;
    append_all(os, parts...);
    return os.str();
}

/// Rounds half away from zero to the nearest integer.
inline long long round_half_away(double v) { return std::llround(v); }

/// round(k * 1e6 * den / num) in exact integer arithmetic (half up).
inline long long frame_timestamp(long long k, long long num, long long den) {
    const long long numer = 2 * k * 1000000LL * den + num;
    return numer / (2 * num);
}

} // namespace evfi::detail

#endif
