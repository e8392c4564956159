#ifndef EPS_EPS_EXTRACT_HPP
#define EPS_EPS_EXTRACT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "eps/filters.hpp"
#include "eps/frame.hpp"
#include "eps/hilbert.hpp"
#include "eps/spectrum.hpp"
#include "eps/vecmath.hpp"

namespace eps {

enum class HilbertMode { FrequencyDomain, Fir };
enum class SpectralWindow { Hann, None };

struct EpsConfig {
    std::size_t decimation_factor = 15;
    double smoothing_cutoff_frac = 0.2; // fraction of post-decimation Nyquist
    std::size_t n_bins = 4096;
    HilbertMode hilbert_mode = HilbertMode::FrequencyDomain;
    std::size_t fir_taps = 101;
    SpectralWindow window = SpectralWindow::Hann;
    bool antialias = true; // lowpass before decimation
    std::size_t smoothing_taps = 65;
    std::size_t min_frame_len = 8192;
    // envelope with AC/DC ratio below this is all-DC (degenerate)
    double degenerate_cv = 1e-3;
};

inline void validate_eps_config(const EpsConfig& cfg) {
    if (cfg.decimation_factor == 0)
        throw std::invalid_argument("EpsConfig: decimation_factor must be >= 1");
    if (cfg.smoothing_cutoff_frac <= 0.0 || cfg.smoothing_cutoff_frac >= 0.5)
        throw std::invalid_argument("EpsConfig: smoothing_cutoff_frac must be in (0, 0.5)");
    if (cfg.n_bins < 2 || cfg.n_bins % 2 != 0)
        throw std::invalid_argument("EpsConfig: n_bins must be even and >= 2");
    if (cfg.fir_taps % 2 == 0)
        throw std::invalid_argument("EpsConfig: fir_taps must be odd");
    if (cfg.smoothing_taps % 2 == 0)
        throw std::invalid_argument("EpsConfig: smoothing_taps must be odd");
}

/// Anti-alias filter length scales with the decimation factor.
inline std::size_t antialias_taps(const EpsConfig& cfg) {
    return 12 * cfg.decimation_factor + 1;
}

/// Input samples consumed by edge trims before decimation.
inline std::size_t extraction_overhead(const EpsConfig& cfg) {
    std::size_t overhead = 0;
    if (cfg.hilbert_mode == HilbertMode::Fir) overhead += cfg.fir_taps - 1;
    if (cfg.antialias) overhead += antialias_taps(cfg) - 1;
    return overhead;
}

struct Envelope {
    std::vector<double> values; // >= 0
    double sample_rate_hz = 0.0;
};

/**
 * |analytic(x)| -> anti-alias lowpass at 0.45/decimation of Nyquist ->
 * decimate -> smoothing lowpass at smoothing_cutoff_frac of the new Nyquist.
 */
inline Envelope extract_envelope(const std::vector<double>& x, double fs, const EpsConfig& cfg) {
    validate_eps_config(cfg);
    if (fs <= 0.0) throw std::invalid_argument("extract_envelope: fs must be > 0");
    if (!all_finite(x)) throw std::invalid_argument("extract_envelope: non-finite input");

    const std::size_t min_input = extraction_overhead(cfg) + cfg.decimation_factor + 64;
    if (x.size() < min_input)
        throw std::invalid_argument("extract_envelope: input of " + std::to_string(x.size()) +
                                    " samples is too short; need at least " +
                                    std::to_string(min_input));

    std::vector<double> env;
    if (cfg.hilbert_mode == HilbertMode::FrequencyDomain) {
        const std::vector<cplx> z = hilbert_analytic(x);
        env.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) env[i] = std::abs(z[i]);
    } else {
        const std::vector<cplx> z = fir_hilbert(x, cfg.fir_taps);
        const std::size_t edge = fir_hilbert_edge(cfg.fir_taps);
        env.resize(z.size() - 2 * edge);
        for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::abs(z[i + edge]);
    }

    std::vector<double> decimated;
    if (cfg.antialias) {
        const std::vector<double> aa =
            design_lowpass(antialias_taps(cfg), 0.45 / static_cast<double>(cfg.decimation_factor));
        decimated = decimate_filtered(env, aa, cfg.decimation_factor);
    } else {
        for (std::size_t i = 0; i < env.size(); i += cfg.decimation_factor)
            decimated.push_back(env[i]);
    }
    if (decimated.empty())
        throw std::invalid_argument("extract_envelope: no samples left after decimation");

    const double fs_out = fs / static_cast<double>(cfg.decimation_factor);
    std::vector<double> smooth;
    if (decimated.size() > cfg.smoothing_taps) {
        const std::vector<double> lp = design_lowpass(cfg.smoothing_taps, cfg.smoothing_cutoff_frac);
        smooth = filter_same(decimated, lp);
    } else {
        smooth = decimated;
    }
    for (double& v : smooth) v = std::max(0.0, v);

    Envelope out;
    out.values = std::move(smooth);
    out.sample_rate_hz = fs_out;
    return out;
}

/**
 * Mean removal, spectral window, normalized double-sided power spectrum with
 * n_bins. A constant (all-DC) envelope maps to an all-zero spectrum flagged
 * degenerate rather than an error.
 */
inline std::vector<double> envelope_to_eps(const Envelope& env, const EpsConfig& cfg,
                                           bool* degenerate = nullptr) {
    validate_eps_config(cfg);
    if (env.values.empty()) throw std::invalid_argument("envelope_to_eps: empty envelope");
    for (double v : env.values)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("envelope_to_eps: envelope must be finite and >= 0");

    const std::size_t len = std::min(env.values.size(), cfg.n_bins);
    std::vector<double> seg(env.values.begin(), env.values.begin() + static_cast<long>(len));
    const double mu = mean(seg);
    const double sd = stddev(seg);

    if (degenerate) *degenerate = false;
    if (sd <= cfg.degenerate_cv * std::abs(mu)) {
        if (degenerate) *degenerate = true;
        return std::vector<double>(cfg.n_bins, 0.0);
    }

    for (double& v : seg) v -= mu;
    if (cfg.window == SpectralWindow::Hann) {
        const std::vector<double> w = hann_window(len);
        for (std::size_t i = 0; i < len; ++i) seg[i] *= w[i];
    }
    return dft_power_double_sided(seg, cfg.n_bins, true);
}

/// The 2 x n_bins EPS feature: I-row and Q-row spectra.
struct EpsFeature {
    std::vector<double> i_spectrum;
    std::vector<double> q_spectrum;
    double bin_resolution_hz = 0.0;
    bool i_degenerate = false;
    bool q_degenerate = false;
    std::string device_id;
    std::string domain_tag;

    std::vector<double> flattened() const {
        std::vector<double> row(i_spectrum);
        row.insert(row.end(), q_spectrum.begin(), q_spectrum.end());
        return row;
    }
};

/**
 * Full per-frame EPS extraction, I and Q processed independently. Frames
 * longer than needed are truncated to the first n_bins*decimation input
 * samples plus the edge-trim overhead.
 */
inline EpsFeature extract_eps(const IQFrame& frame, const EpsConfig& cfg) {
    validate_eps_config(cfg);
    validate_frame(frame, 2 * cfg.min_frame_len);

    const std::size_t needed = cfg.n_bins * cfg.decimation_factor + extraction_overhead(cfg);
    const std::size_t use = std::min(frame.samples.size(), needed);

    EpsFeature feat;
    feat.device_id = frame.device_id;
    feat.domain_tag = frame.domain_tag;
    feat.bin_resolution_hz =
        frame.sample_rate_hz / static_cast<double>(cfg.decimation_factor) /
        static_cast<double>(cfg.n_bins);

    auto run = [&](bool q_component) {
        std::vector<double> x(use);
        for (std::size_t i = 0; i < use; ++i)
            x[i] = q_component ? frame.samples[i].imag() : frame.samples[i].real();
        const char* which = q_component ? "Q" : "I";
        try {
            Envelope env = extract_envelope(x, frame.sample_rate_hz, cfg);
            if (env.values.size() < cfg.n_bins / 4)
                throw std::invalid_argument(
                    "decimated envelope of " + std::to_string(env.values.size()) +
                    " samples is shorter than n_bins/4 = " + std::to_string(cfg.n_bins / 4));
            bool degenerate = false;
            std::vector<double> spec = envelope_to_eps(env, cfg, &degenerate);
            if (q_component) {
                feat.q_spectrum = std::move(spec);
                feat.q_degenerate = degenerate;
            } else {
                feat.i_spectrum = std::move(spec);
                feat.i_degenerate = degenerate;
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("extract_eps[") + which + "]: " + e.what());
        }
    };
    run(false);
    run(true);
    return feat;
}

/**
 * Count envelope humps: contiguous regions above the mid level between the
 * envelope's min and max. A near-flat envelope has zero humps.
 */
inline std::size_t count_humps(const std::vector<double>& values, double flatness_cv = 0.05) {
    if (values.empty()) return 0;
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double mu = mean(values);
    if (mu <= 0.0 || (hi - lo) / mu < flatness_cv) return 0;

    const double level = lo + 0.5 * (hi - lo);
    std::size_t humps = 0;
    bool above = false;
    for (double v : values) {
        if (!above && v > level) {
            ++humps;
            above = true;
        } else if (above && v <= level) {
            above = false;
        }
    }
    return humps;
}

/// Index of the largest bin outside the center (DC) bin.
inline std::size_t dominant_non_dc_bin(const std::vector<double>& spectrum) {
    const std::size_t center = spectrum.size() / 2;
    std::size_t best = (center == 0) ? 1 : 0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        if (k == center) continue;
        if (spectrum[k] > spectrum[best] || best == center) best = k;
    }
    return best;
}

/**
 * Max non-DC bin over the median bin, both taken over the informative band
 * |f| <= smoothing cutoff (outside it the smoothing filter's stopband alone
 * sets the bin values). Bins within dc_guard_bins of the centre are excluded
 * from the peak search: slow envelope drift (oscillator phase wander) is
 * indistinguishable from DC over one frame and is not a sideband. Degenerate
 * all-zero spectra report ratio 0.
 */
inline double peak_to_floor_ratio(const std::vector<double>& spectrum, const EpsConfig& cfg,
                                  std::size_t dc_guard_bins = 1) {
    const std::size_t n = spectrum.size();
    const std::size_t center = n / 2;
    // band edge in bins: cutoff_frac * Nyquist = cutoff_frac * n/2 bins
    const std::size_t band = std::max<std::size_t>(
        4, static_cast<std::size_t>(cfg.smoothing_cutoff_frac * static_cast<double>(n) / 2.0));
    const std::size_t lo = center > band ? center - band : 0;
    const std::size_t hi = std::min(n - 1, center + band);

    std::vector<double> bins;
    double peak = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
        const std::size_t dist = k > center ? k - center : center - k;
        if (dist < std::max<std::size_t>(1, dc_guard_bins)) continue;
        bins.push_back(spectrum[k]);
        peak = std::max(peak, spectrum[k]);
    }
    if (bins.empty() || peak == 0.0) return 0.0;
    std::nth_element(bins.begin(), bins.begin() + static_cast<long>(bins.size() / 2), bins.end());
    const double med = bins[bins.size() / 2];
    if (med <= 0.0) return std::numeric_limits<double>::infinity();
    return peak / med;
}

} // namespace eps

#endif
