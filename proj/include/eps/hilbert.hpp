#ifndef EPS_HILBERT_HPP
#define EPS_HILBERT_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "eps/fft.hpp"
#include "eps/frame.hpp"

namespace eps {

/**
 * Analytic signal by the frequency-domain method: zero the negative
 * frequencies, double the positive ones, keep DC and Nyquist. Exact for
 * band-limited periodic inputs. real(z) == x, imag(z) == HT(x).
 */
inline std::vector<cplx> hilbert_analytic(const std::vector<double>& x) {
    if (x.size() < 64)
        throw std::invalid_argument("hilbert_analytic: input shorter than 64 samples");
    if (!all_finite(x))
        throw std::invalid_argument("hilbert_analytic: non-finite input value");

    const std::size_t n = x.size();
    std::vector<cplx> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = cplx(x[i], 0.0);
    std::vector<cplx> spec = fft(buf);

    if (n % 2 == 0) {
        for (std::size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = cplx(0.0, 0.0);
    } else {
        for (std::size_t k = 1; k <= n / 2; ++k) spec[k] *= 2.0;
        for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = cplx(0.0, 0.0);
    }
    return ifft(spec);
}

namespace detail {

/// Modified Bessel function of the first kind, order 0 (series form).
inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

} // namespace detail

/**
 * Kaiser-windowed type-III FIR Hilbert transformer coefficients.
 * taps must be odd; center coefficient is zero, antisymmetric.
 */
inline std::vector<double> design_fir_hilbert(std::size_t taps, double beta = 8.0) {
    if (taps % 2 == 0 || taps < 31 || taps > 511)
        throw std::invalid_argument("design_fir_hilbert: taps must be odd and in [31, 511]");
    const double pi = 3.14159265358979323846;
    const long m = static_cast<long>(taps - 1) / 2;
    const double i0b = detail::bessel_i0(beta);
    std::vector<double> h(taps, 0.0);
    for (long n = 0; n < static_cast<long>(taps); ++n) {
        const long k = n - m;
        if (k % 2 == 0) continue; // even offsets are zero for type III
        const double ideal = 2.0 / (pi * static_cast<double>(k));
        const double r = static_cast<double>(k) / static_cast<double>(m);
        const double w = detail::bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[static_cast<std::size_t>(n)] = ideal * w;
    }
    return h;
}

/**
 * Analytic signal via a windowed FIR Hilbert approximation. The real path is
 * delayed by (taps-1)/2 samples to align with the filtered imaginary path.
 * Output has the same length as the input; the first and last (taps-1)/2
 * samples are edge transients and must be excluded by callers.
 */
inline std::vector<cplx> fir_hilbert(const std::vector<double>& x, std::size_t taps) {
    if (taps % 2 == 0)
        throw std::invalid_argument("fir_hilbert: taps must be odd");
    if (x.size() <= taps)
        throw std::invalid_argument("fir_hilbert: frame shorter than the filter");
    if (!all_finite(x))
        throw std::invalid_argument("fir_hilbert: non-finite input value");

    const std::vector<double> h = design_fir_hilbert(taps);
    const long n = static_cast<long>(x.size());
    const long m = static_cast<long>(taps - 1) / 2;

    std::vector<cplx> z(x.size());
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        // y[i] = sum_k h[k] * x[i + m - k], aligned so the group delay cancels
        const long k_lo = std::max<long>(0, i + m - (n - 1));
        const long k_hi = std::min<long>(static_cast<long>(taps) - 1, i + m);
        for (long k = k_lo; k <= k_hi; k += 1) {
            if (h[static_cast<std::size_t>(k)] == 0.0) continue;
            acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i + m - k)];
        }
        z[static_cast<std::size_t>(i)] = cplx(x[static_cast<std::size_t>(i)], acc);
    }
    return z;
}

/// Number of edge samples at each end of a fir_hilbert output that are invalid.
inline std::size_t fir_hilbert_edge(std::size_t taps) { return (taps - 1) / 2; }

} // namespace eps

#endif
