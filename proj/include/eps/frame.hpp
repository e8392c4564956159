#ifndef EPS_FRAME_HPP
#define EPS_FRAME_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace eps {

using cplx = std::complex<double>;

/// One captured or simulated packet as complex baseband samples.
struct IQFrame {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    double center_freq_hz = 0.0;
    std::string device_id;
    double capture_time_s = 0.0; // time since device activation
    std::string domain_tag;
};

inline bool all_finite(const std::vector<double>& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(const std::vector<cplx>& x) {
    for (const cplx& v : x)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

inline void validate_frame(const IQFrame& f, std::size_t min_len = 2) {
    if (f.sample_rate_hz <= 0.0)
        throw std::invalid_argument("IQFrame: sample_rate_hz must be > 0");
    if (f.center_freq_hz < 0.0)
        throw std::invalid_argument("IQFrame: center_freq_hz must be >= 0");
    if (f.capture_time_s < 0.0)
        throw std::invalid_argument("IQFrame: capture_time_s must be >= 0");
    if (f.samples.size() < min_len)
        throw std::invalid_argument("IQFrame: frame shorter than required minimum of " +
                                    std::to_string(min_len) + " samples");
    if (!all_finite(f.samples))
        throw std::invalid_argument("IQFrame: non-finite sample value");
}

inline std::vector<double> real_part(const std::vector<cplx>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].real();
    return r;
}

inline std::vector<double> imag_part(const std::vector<cplx>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].imag();
    return r;
}

} // namespace eps

#endif
