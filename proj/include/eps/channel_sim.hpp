#ifndef EPS_CHANNEL_SIM_HPP
#define EPS_CHANNEL_SIM_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "eps/device_sim.hpp"
#include "eps/frame.hpp"
#include "eps/rng.hpp"

namespace eps {

struct MultipathTap {
    long delay_samples = 0;
    cplx gain{1.0, 0.0};
};

/// Domain descriptor: noise, multipath, distance and per-frame randomness.
struct ChannelConfig {
    std::string name;
    double snr_db = 120.0; // effectively noiseless by default
    std::vector<MultipathTap> taps{{0, cplx(1.0, 0.0)}};
    double pathloss_exponent = 0.0;
    double distance_m = 1.0;
    // random-deployment domains re-draw the distance per frame in (0.5, max]
    double random_distance_max_m = 0.0; // 0 disables
    // model the receiver's arbitrary carrier phase per frame
    bool random_carrier_phase = false;
    bool add_noise = true;
    RngStream seed;
};

inline void validate_channel(const ChannelConfig& cfg) {
    if (cfg.taps.empty())
        throw std::invalid_argument("ChannelConfig: at least one multipath tap required");
    bool tap0 = false;
    for (const auto& t : cfg.taps) {
        if (t.delay_samples < 0)
            throw std::invalid_argument("ChannelConfig: non-causal multipath tap");
        if (t.delay_samples == 0 && std::abs(t.gain) > 0.0) tap0 = true;
    }
    if (!tap0)
        throw std::invalid_argument("ChannelConfig: tap 0 with nonzero gain required");
    if (cfg.distance_m <= 0.0)
        throw std::invalid_argument("ChannelConfig: distance must be > 0");
    if (cfg.pathloss_exponent < 0.0)
        throw std::invalid_argument("ChannelConfig: pathloss_exponent must be >= 0");
}

/**
 * Multipath convolution, distance^(-a/2) path-loss scaling, then complex
 * AWGN sized against the post-scaling signal power to hit cfg.snr_db.
 * Deterministic given cfg.seed.
 */
inline IQFrame apply_channel(const IQFrame& frame, const ChannelConfig& cfg) {
    validate_frame(frame);
    validate_channel(cfg);
    RngStream rng = cfg.seed;

    double distance = cfg.distance_m;
    if (cfg.random_distance_max_m > 0.0)
        distance = rng.uniform(0.5, cfg.random_distance_max_m);

    const double amp_scale = std::pow(distance, -cfg.pathloss_exponent / 2.0);
    const double phase0 = cfg.random_carrier_phase ? rng.uniform(0.0, 2.0 * kPi) : 0.0;
    const cplx rot = amp_scale * cplx(std::cos(phase0), std::sin(phase0));

    IQFrame out = frame;
    out.domain_tag = cfg.name.empty() ? frame.domain_tag : cfg.name;

    const std::size_t n = frame.samples.size();
    std::vector<cplx> y(n, cplx(0.0, 0.0));
    for (const auto& tap : cfg.taps) {
        if (std::abs(tap.gain) == 0.0) continue;
        const std::size_t d = static_cast<std::size_t>(tap.delay_samples);
        for (std::size_t i = d; i < n; ++i)
            y[i] += tap.gain * frame.samples[i - d];
    }
    for (auto& v : y) v *= rot;

    if (cfg.add_noise && cfg.snr_db < 200.0) {
        double sig_power = 0.0;
        for (const auto& v : y) sig_power += std::norm(v);
        sig_power /= static_cast<double>(n);
        const double noise_var = sig_power / std::pow(10.0, cfg.snr_db / 10.0);
        const double sigma = std::sqrt(noise_var / 2.0);
        for (auto& v : y)
            v += cplx(sigma * rng.gaussian(), sigma * rng.gaussian());
    }

    out.samples = std::move(y);
    return out;
}

enum class DomainPreset { Wired, Wireless1m, Wireless2m, Wireless3m, Random3m };

inline DomainPreset parse_preset(const std::string& s) {
    if (s == "wired") return DomainPreset::Wired;
    if (s == "wireless-1m") return DomainPreset::Wireless1m;
    if (s == "wireless-2m") return DomainPreset::Wireless2m;
    if (s == "wireless-3m") return DomainPreset::Wireless3m;
    if (s == "random-3m") return DomainPreset::Random3m;
    throw std::invalid_argument("unknown channel preset: " + s);
}

inline std::string preset_name(DomainPreset p) {
    switch (p) {
        case DomainPreset::Wired: return "wired";
        case DomainPreset::Wireless1m: return "wireless-1m";
        case DomainPreset::Wireless2m: return "wireless-2m";
        case DomainPreset::Wireless3m: return "wireless-3m";
        case DomainPreset::Random3m: return "random-3m";
    }
    throw std::invalid_argument("unknown channel preset");
}

/**
 * Named domain instance. Wired: no multipath, 30 dB SNR. Wireless presets:
 * fixed distance, 2-4 random sparse taps, per-preset SNR prior. Random-3m:
 * per-frame distance uniform in (0.5, 3] m. Tap sets are static within the
 * returned domain instance.
 */
inline ChannelConfig make_domain(const std::string& name, DomainPreset preset, RngStream seed) {
    ChannelConfig cfg;
    cfg.name = name;
    cfg.seed = seed;
    cfg.random_carrier_phase = true;
    cfg.pathloss_exponent = 2.0;

    RngStream rng = seed.derive(0xd0);
    auto sparse_taps = [&rng]() {
        std::vector<MultipathTap> taps{{0, cplx(1.0, 0.0)}};
        const std::size_t extra = 2 + rng.uniform_index(3); // 2..4 echoes
        for (std::size_t i = 0; i < extra; ++i) {
            MultipathTap t;
            t.delay_samples = 1 + static_cast<long>(rng.uniform_index(40));
            const double mag = rng.uniform(0.05, 0.35);
            const double ph = rng.uniform(0.0, 2.0 * kPi);
            t.gain = mag * cplx(std::cos(ph), std::sin(ph));
            taps.push_back(t);
        }
        return taps;
    };

    switch (preset) {
        case DomainPreset::Wired:
            cfg.snr_db = 30.0;
            cfg.distance_m = 1.0;
            cfg.pathloss_exponent = 0.0;
            break;
        case DomainPreset::Wireless1m:
            cfg.snr_db = 25.0 + rng.uniform(-1.0, 1.0);
            cfg.distance_m = 1.0;
            cfg.taps = sparse_taps();
            break;
        case DomainPreset::Wireless2m:
            cfg.snr_db = 20.0 + rng.uniform(-1.0, 1.0);
            cfg.distance_m = 2.0;
            cfg.taps = sparse_taps();
            break;
        case DomainPreset::Wireless3m:
            cfg.snr_db = 15.0 + rng.uniform(-1.0, 1.0);
            cfg.distance_m = 3.0;
            cfg.taps = sparse_taps();
            break;
        case DomainPreset::Random3m:
            cfg.snr_db = 15.0 + rng.uniform(-1.0, 1.0);
            cfg.distance_m = 3.0;
            cfg.random_distance_max_m = 3.0;
            cfg.taps = sparse_taps();
            break;
    }
    return cfg;
}

/// Same domain with a per-frame derived noise/phase/distance sub-stream.
inline ChannelConfig domain_for_frame(const ChannelConfig& domain, std::uint64_t frame_index) {
    ChannelConfig cfg = domain;
    cfg.seed = domain.seed.derive(0xf000 + frame_index);
    return cfg;
}

} // namespace eps

#endif
