#ifndef EPS_SPECTRUM_HPP
#define EPS_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "eps/fft.hpp"
#include "eps/frame.hpp"

namespace eps {

/// Hann window of length n.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

/**
 * Zero-frequency-centered power spectrum of a real sequence, truncated or
 * zero-padded to n_bins before the transform. Bin k maps to frequency
 * (k - n_bins/2) * fs / n_bins.
 *
 * Without normalization the bins sum to the mean square of the padded input
 * (Parseval). With normalization the bins sum to 1 unless the input has zero
 * total power, in which case the output is all zeros.
 */
inline std::vector<double> dft_power_double_sided(const std::vector<double>& x,
                                                  std::size_t n_bins,
                                                  bool normalize = true) {
    if (x.empty()) throw std::invalid_argument("dft_power_double_sided: empty input");
    if (n_bins < 2 || (n_bins % 2) != 0)
        throw std::invalid_argument("dft_power_double_sided: n_bins must be even and >= 2");
    if (!all_finite(x))
        throw std::invalid_argument("dft_power_double_sided: non-finite input value");

    std::vector<cplx> padded(n_bins, cplx(0.0, 0.0));
    const std::size_t m = std::min(x.size(), n_bins);
    for (std::size_t i = 0; i < m; ++i) padded[i] = cplx(x[i], 0.0);

    std::vector<cplx> spec = fft(padded);

    // |X[k]|^2 / N^2 so that the double-sided sum equals mean(x^2).
    const double scale = 1.0 / (static_cast<double>(n_bins) * static_cast<double>(n_bins));
    std::vector<double> power(n_bins);
    const std::size_t half = n_bins / 2;
    for (std::size_t k = 0; k < n_bins; ++k) {
        // fftshift: output bin k holds DFT bin (k + half) mod n_bins
        const std::size_t src = (k + half) % n_bins;
        power[k] = std::norm(spec[src]) * scale;
    }

    if (normalize) {
        const double total = std::accumulate(power.begin(), power.end(), 0.0);
        if (total > 0.0) {
            for (double& p : power) p /= total;
        } else {
            std::fill(power.begin(), power.end(), 0.0);
        }
    }
    return power;
}

/// Frequency of centered bin k at sample rate fs.
inline double bin_frequency_hz(std::size_t k, std::size_t n_bins, double fs) {
    return (static_cast<double>(k) - static_cast<double>(n_bins) / 2.0) * fs /
           static_cast<double>(n_bins);
}

/// Centered bin index closest to frequency f at sample rate fs.
inline std::size_t frequency_to_bin(double f, std::size_t n_bins, double fs) {
    const double k = f / fs * static_cast<double>(n_bins) + static_cast<double>(n_bins) / 2.0;
    long idx = std::lround(k);
    idx = std::clamp<long>(idx, 0, static_cast<long>(n_bins) - 1);
    return static_cast<std::size_t>(idx);
}

} // namespace eps

#endif
