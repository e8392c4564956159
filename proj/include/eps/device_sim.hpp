#ifndef EPS_DEVICE_SIM_HPP
#define EPS_DEVICE_SIM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eps/frame.hpp"
#include "eps/rng.hpp"

namespace eps {

constexpr double kPi = 3.14159265358979323846;

/// Per-device oscillator and front-end impairment parameters.
struct DeviceProfile {
    std::string device_id;
    double cfo_stable_hz = 0.0;  // CFO after warm-up
    double cfo_initial_hz = 0.0; // CFO at power-on
    double warmup_tau_s = 156.3626;
    double phase_noise_std_rad = 0.0; // random-walk step std per sample
    double iq_gain_imbalance_db = 0.0;
    double iq_phase_skew_rad = 0.0;
    double dc_offset_i = 0.0;
    double dc_offset_q = 0.0;
};

/// Maximum |CFO| considered physical for a 2.4 GHz-class oscillator.
constexpr double kMaxCfoHz = 50e3;

/// Settling time constant giving < 1% residual drift at t = 720 s.
inline double default_warmup_tau_s() { return 720.0 / std::log(100.0); }

struct WaveformSpec {
    double bit_rate_bps = 1e5;
    unsigned spread_chips_per_bit = 11;
    unsigned frame_bits = 1400;
    double sample_rate_hz = 4.5e6;
    bool seeded_random_payload = false; // default: fixed zero payload
};

inline double chip_rate_hz(const WaveformSpec& s) {
    return s.bit_rate_bps * s.spread_chips_per_bit;
}

inline void validate_spec(const WaveformSpec& s) {
    if (s.bit_rate_bps <= 0.0)
        throw std::invalid_argument("WaveformSpec: bit_rate_bps must be > 0");
    if (s.spread_chips_per_bit == 0)
        throw std::invalid_argument("WaveformSpec: spread_chips_per_bit must be >= 1");
    if (s.frame_bits == 0)
        throw std::invalid_argument("WaveformSpec: frame_bits must be >= 1");
    if (s.sample_rate_hz < 4.0 * chip_rate_hz(s))
        throw std::invalid_argument("WaveformSpec: sample_rate_hz must be >= 4x chip rate");
}

/// 11-chip Barker sequence.
inline std::vector<int> barker11() {
    return {+1, +1, +1, -1, -1, -1, +1, -1, -1, +1, -1};
}

/// Root-raised-cosine pulse, unit peak, spanning span_chips chip periods.
inline std::vector<double> design_rrc(double samples_per_chip, double rolloff,
                                      unsigned span_chips = 8) {
    const long half = std::lround(0.5 * span_chips * samples_per_chip);
    std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
    const double b = rolloff;
    for (long n = -half; n <= half; ++n) {
        const double t = static_cast<double>(n) / samples_per_chip; // in chip periods
        double v;
        if (std::abs(t) < 1e-9) {
            v = 1.0 - b + 4.0 * b / kPi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            v = (b / std::sqrt(2.0)) *
                ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                 (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double num = std::sin(kPi * t * (1.0 - b)) +
                               4.0 * b * t * std::cos(kPi * t * (1.0 + b));
            const double den = kPi * t * (1.0 - 16.0 * b * b * t * t);
            v = num / den;
        }
        h[static_cast<std::size_t>(n + half)] = v;
    }
    const double peak = h[static_cast<std::size_t>(half)];
    for (double& v : h) v /= peak;
    return h;
}

/// Real DSSS baseband as amplitude and phase sequences (phase is 0 or pi).
struct Baseband {
    std::vector<double> amplitude; // a(t) >= 0, peak 1
    std::vector<double> phase;     // phi(t) in {0, pi}
};

inline std::vector<cplx> baseband_complex(const Baseband& b) {
    std::vector<cplx> s(b.amplitude.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = b.amplitude[i] * cplx(std::cos(b.phase[i]), std::sin(b.phase[i]));
    return s;
}

/**
 * DSSS baseband: payload bits spread by the 11-chip Barker code, BPSK-mapped,
 * root-raised-cosine shaped (roll-off 0.35). Output length is
 * round(frame_bits / bit_rate * fs); amplitude normalized to peak 1.
 */
inline Baseband generate_baseband(const WaveformSpec& spec, RngStream rng) {
    validate_spec(spec);
    if (spec.spread_chips_per_bit != 11)
        throw std::invalid_argument("generate_baseband: only 11-chip Barker spreading is supported");

    const double fs = spec.sample_rate_hz;
    const double chip_rate = chip_rate_hz(spec);
    const double sps_chip = fs / chip_rate;
    const std::size_t n_samples =
        static_cast<std::size_t>(std::llround(spec.frame_bits / spec.bit_rate_bps * fs));

    // payload bits -> BPSK chips
    const std::vector<int> code = barker11();
    const std::size_t n_chips = static_cast<std::size_t>(spec.frame_bits) * code.size();
    std::vector<double> chips(n_chips);
    for (std::size_t b = 0; b < spec.frame_bits; ++b) {
        const int bit = spec.seeded_random_payload ? static_cast<int>(rng.next_u64() & 1) : 0;
        const double sym = bit ? -1.0 : 1.0;
        for (std::size_t c = 0; c < code.size(); ++c)
            chips[b * code.size() + c] = sym * code[c];
    }

    // scatter each chip impulse through the RRC pulse
    const std::vector<double> pulse = design_rrc(sps_chip, 0.35);
    const long half = static_cast<long>(pulse.size() - 1) / 2;
    std::vector<double> wave(n_samples, 0.0);
    for (std::size_t c = 0; c < n_chips; ++c) {
        const long center = std::lround(static_cast<double>(c) * sps_chip);
        const long lo = std::max<long>(0, center - half);
        const long hi = std::min<long>(static_cast<long>(n_samples) - 1, center + half);
        for (long i = lo; i <= hi; ++i)
            wave[static_cast<std::size_t>(i)] +=
                chips[c] * pulse[static_cast<std::size_t>(i - center + half)];
    }

    double peak = 0.0;
    for (double v : wave) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : wave) v /= peak;

    Baseband out;
    out.amplitude.resize(n_samples);
    out.phase.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        out.amplitude[i] = std::abs(wave[i]);
        out.phase[i] = wave[i] < 0.0 ? kPi : 0.0;
    }
    return out;
}

/// CFO at time t since power-on: exponential settling between initial and stable.
inline double cfo_at(const DeviceProfile& p, double t_since_poweron_s) {
    if (t_since_poweron_s < 0.0)
        throw std::invalid_argument("cfo_at: negative time since power-on");
    if (p.warmup_tau_s <= 0.0)
        throw std::invalid_argument("cfo_at: warmup_tau_s must be > 0");
    return p.cfo_stable_hz +
           (p.cfo_initial_hz - p.cfo_stable_hz) * std::exp(-t_since_poweron_s / p.warmup_tau_s);
}

/**
 * Complex baseband frame as seen by an ideal receiver:
 * a(t) exp(j(2 pi df t + phi(t) + theta_n(t))), then IQ imbalance (gain on
 * the Q path, phase skew mixing), then DC offsets. The 2fc sum term of the
 * passband model never appears at complex baseband.
 */
inline IQFrame transmit_frame(const DeviceProfile& profile, const WaveformSpec& spec,
                              double t_since_poweron_s, RngStream rng) {
    validate_spec(spec);
    const double df = cfo_at(profile, t_since_poweron_s);

    RngStream payload_rng = rng.derive(1);
    RngStream noise_rng = rng.derive(2);
    const Baseband bb = generate_baseband(spec, payload_rng);

    const double fs = spec.sample_rate_hz;
    const double gain_q = std::pow(10.0, profile.iq_gain_imbalance_db / 20.0);
    const double skew = profile.iq_phase_skew_rad;

    IQFrame frame;
    frame.samples.resize(bb.amplitude.size());
    frame.sample_rate_hz = fs;
    frame.center_freq_hz = 2.412e9;
    frame.device_id = profile.device_id;
    frame.capture_time_s = t_since_poweron_s;

    double theta = 0.0;
    for (std::size_t i = 0; i < bb.amplitude.size(); ++i) {
        if (profile.phase_noise_std_rad > 0.0)
            theta += profile.phase_noise_std_rad * noise_rng.gaussian();
        const double t = static_cast<double>(i) / fs;
        const double ph = 2.0 * kPi * df * t + bb.phase[i] + theta;
        const double si = bb.amplitude[i] * std::cos(ph);
        const double sq = bb.amplitude[i] * std::sin(ph);
        const double oi = si + profile.dc_offset_i;
        const double oq = gain_q * (sq * std::cos(skew) + si * std::sin(skew)) + profile.dc_offset_q;
        frame.samples[i] = cplx(oi, oq);
    }
    return frame;
}

struct PopulationConfig {
    double cfo_min_hz = 2000.0;
    double phase_noise_std_max_rad = 2e-4;
    double iq_gain_imbalance_max_db = 1.0;
    double iq_phase_skew_max_rad = 0.03;
    double dc_offset_max = 0.02;
    // warm-up: initial CFO is a fraction of the stable value. The residual
    // offset scales with the stable CFO, so this range spreads per-device
    // residuals from a few Hz to a few kHz across the settling curve.
    double warmup_initial_frac_min = 0.5;
    double warmup_initial_frac_max = 0.999;
};

/**
 * n device profiles with stable CFOs on a jittered grid (pairwise separation
 * >= separation_hz) and secondary impairments sampled within bounds.
 * Deterministic given the rng stream.
 */
inline std::vector<DeviceProfile> make_population(std::size_t n, double separation_hz,
                                                  RngStream rng,
                                                  const PopulationConfig& cfg = {}) {
    if (n < 2) throw std::invalid_argument("make_population: need at least 2 devices");
    if (separation_hz <= 0.0)
        throw std::invalid_argument("make_population: separation_hz must be > 0");

    // grid step leaves room for jitter while preserving the separation floor
    const double jitter = 0.8 * separation_hz;
    const double step = separation_hz + jitter;
    const double top = cfg.cfo_min_hz + static_cast<double>(n - 1) * step + jitter;
    if (top > kMaxCfoHz)
        throw std::invalid_argument(
            "make_population: requested separation infeasible within the +/-50 kHz CFO bound");

    std::vector<DeviceProfile> pop(n);
    for (std::size_t i = 0; i < n; ++i) {
        DeviceProfile& p = pop[i];
        p.device_id = "dev" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
        p.cfo_stable_hz = cfg.cfo_min_hz + static_cast<double>(i) * step + rng.uniform(0.0, jitter);
        p.cfo_initial_hz =
            p.cfo_stable_hz * rng.uniform(cfg.warmup_initial_frac_min, cfg.warmup_initial_frac_max);
        p.warmup_tau_s = default_warmup_tau_s();
        p.phase_noise_std_rad = rng.uniform(0.0, cfg.phase_noise_std_max_rad);
        p.iq_gain_imbalance_db = rng.uniform(-cfg.iq_gain_imbalance_max_db, cfg.iq_gain_imbalance_max_db);
        p.iq_phase_skew_rad = rng.uniform(-cfg.iq_phase_skew_max_rad, cfg.iq_phase_skew_max_rad);
        p.dc_offset_i = rng.uniform(-cfg.dc_offset_max, cfg.dc_offset_max);
        p.dc_offset_q = rng.uniform(-cfg.dc_offset_max, cfg.dc_offset_max);
    }
    return pop;
}

} // namespace eps

#endif
