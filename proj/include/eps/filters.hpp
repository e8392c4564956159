#ifndef EPS_FILTERS_HPP
#define EPS_FILTERS_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "eps/hilbert.hpp" // bessel_i0

namespace eps {

/**
 * Linear-phase windowed-sinc lowpass. cutoff_norm is the cutoff frequency as
 * a fraction of Nyquist, in (0, 1). Kaiser window, unity DC gain.
 */
inline std::vector<double> design_lowpass(std::size_t taps, double cutoff_norm,
                                          double beta = 8.0) {
    if (taps % 2 == 0 || taps < 3)
        throw std::invalid_argument("design_lowpass: taps must be odd and >= 3");
    if (cutoff_norm <= 0.0 || cutoff_norm >= 1.0)
        throw std::invalid_argument("design_lowpass: cutoff must be in (0, 1) of Nyquist");
    const double pi = 3.14159265358979323846;
    const long m = static_cast<long>(taps - 1) / 2;
    const double i0b = detail::bessel_i0(beta);
    std::vector<double> h(taps);
    double sum = 0.0;
    for (long n = 0; n < static_cast<long>(taps); ++n) {
        const long k = n - m;
        const double arg = pi * cutoff_norm * static_cast<double>(k);
        const double sinc = (k == 0) ? cutoff_norm : std::sin(arg) / (pi * static_cast<double>(k));
        const double r = static_cast<double>(k) / static_cast<double>(m);
        const double w = detail::bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[static_cast<std::size_t>(n)] = sinc * w;
        sum += h[static_cast<std::size_t>(n)];
    }
    for (double& v : h) v /= sum;
    return h;
}

/**
 * Group-delay-compensated FIR filtering with reflected edges, so the output
 * has the same length as the input and no time shift.
 */
inline std::vector<double> filter_same(const std::vector<double>& x,
                                       const std::vector<double>& h) {
    if (h.size() % 2 == 0)
        throw std::invalid_argument("filter_same: filter length must be odd");
    if (x.empty()) throw std::invalid_argument("filter_same: empty input");
    const long n = static_cast<long>(x.size());
    const long m = static_cast<long>(h.size() - 1) / 2;

    auto sample = [&](long i) -> double {
        // reflect at the boundaries: x[-1] -> x[1], x[n] -> x[n-2]
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return x[static_cast<std::size_t>(i)];
    };

    std::vector<double> y(x.size());
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long k = 0; k < static_cast<long>(h.size()); ++k)
            acc += h[static_cast<std::size_t>(k)] * sample(i + m - k);
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

/**
 * FIR filter + decimate in one pass, keeping only fully-supported (edge-free)
 * outputs. Output j corresponds to input sample m + j*factor, where
 * m = (h.size()-1)/2. Output length is floor((x.size() - h.size()) / factor) + 1.
 */
inline std::vector<double> decimate_filtered(const std::vector<double>& x,
                                             const std::vector<double>& h,
                                             std::size_t factor) {
    if (factor == 0) throw std::invalid_argument("decimate_filtered: factor must be >= 1");
    if (h.size() % 2 == 0)
        throw std::invalid_argument("decimate_filtered: filter length must be odd");
    if (x.size() < h.size())
        throw std::invalid_argument("decimate_filtered: input shorter than the filter");
    const long n = static_cast<long>(x.size());
    const long taps = static_cast<long>(h.size());
    const long m = (taps - 1) / 2;
    const long out_len = (n - taps) / static_cast<long>(factor) + 1;

    std::vector<double> y(static_cast<std::size_t>(out_len));
    for (long j = 0; j < out_len; ++j) {
        const long center = m + j * static_cast<long>(factor);
        double acc = 0.0;
        for (long k = 0; k < taps; ++k)
            acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(center + m - k)];
        y[static_cast<std::size_t>(j)] = acc;
    }
    return y;
}

} // namespace eps

#endif
