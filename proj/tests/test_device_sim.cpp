#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "eps/channel_sim.hpp"
#include "eps/device_sim.hpp"
#include "eps/eps_extract.hpp"
#include "eps/rng.hpp"

using namespace eps;

namespace {

// Envelope of one component of a spread-spectrum frame transmitted with a
// fixed CFO, via the extraction pipeline, for hump counting. The offset only
// shows up in the envelope because the baseband is broadband and zero-mean;
// a bare tone would have a constant analytic envelope.
std::vector<double> cfo_envelope(double df_hz, double fs, double duration_s, bool quadrature) {
    WaveformSpec spec;
    spec.sample_rate_hz = fs;
    spec.bit_rate_bps = fs / 45.0; // keeps fs just above the 4x chip-rate floor
    spec.frame_bits = static_cast<unsigned>(std::ceil(duration_s * spec.bit_rate_bps)) + 1;
    DeviceProfile p;
    p.device_id = "cfo";
    p.cfo_stable_hz = df_hz;
    p.cfo_initial_hz = df_hz;
    IQFrame f = transmit_frame(p, spec, 720.0, RngStream(1, 0));
    f.samples.resize(static_cast<std::size_t>(duration_s * fs));
    const std::vector<double> x = quadrature ? imag_part(f.samples) : real_part(f.samples);
    EpsConfig cfg;
    return extract_envelope(x, fs, cfg).values;
}

} // namespace

TEST_CASE("baseband length equals frame duration times sample rate") {
    WaveformSpec spec;
    spec.bit_rate_bps = 1e6;
    spec.frame_bits = 1000;
    spec.sample_rate_hz = 45e6;
    const Baseband bb = generate_baseband(spec, RngStream(1, 0));
    CHECK(bb.amplitude.size() == 45000);
    CHECK(bb.phase.size() == 45000);
}

TEST_CASE("fixed-zeros payload is deterministic") {
    WaveformSpec spec;
    const Baseband a = generate_baseband(spec, RngStream(1, 0));
    const Baseband b = generate_baseband(spec, RngStream(99, 5)); // rng unused for zeros
    CHECK(a.amplitude == b.amplitude);
    CHECK(a.phase == b.phase);
}

TEST_CASE("amplitude is normalized to peak 1 and nonnegative") {
    WaveformSpec spec;
    const Baseband bb = generate_baseband(spec, RngStream(1, 0));
    double peak = 0.0;
    for (double v : bb.amplitude) {
        CHECK(v >= 0.0);
        peak = std::max(peak, v);
    }
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("11-chip Barker autocorrelation peak-to-sidelobe ratio is 11:1") {
    const auto code = barker11();
    REQUIRE(code.size() == 11);
    // brute-force aperiodic autocorrelation
    int peak = 0, worst = 0;
    for (int lag = 0; lag < 11; ++lag) {
        int acc = 0;
        for (int i = 0; i + lag < 11; ++i) acc += code[i] * code[i + lag];
        if (lag == 0)
            peak = acc;
        else
            worst = std::max(worst, std::abs(acc));
    }
    CHECK(peak == 11);
    CHECK(worst <= 1);
}

TEST_CASE("waveform spec validation") {
    WaveformSpec spec;
    spec.sample_rate_hz = 3.0 * chip_rate_hz(spec); // below 4x chip rate
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);
    spec = WaveformSpec{};
    spec.frame_bits = 0;
    CHECK_THROWS_AS(validate_spec(spec), std::invalid_argument);
}

TEST_CASE("cfo_at endpoints and settling") {
    DeviceProfile p;
    p.cfo_stable_hz = 12000.0;
    p.cfo_initial_hz = 4000.0;
    p.warmup_tau_s = default_warmup_tau_s();
    CHECK(cfo_at(p, 0.0) == doctest::Approx(4000.0).epsilon(1e-12));
    CHECK(cfo_at(p, 100.0 * p.warmup_tau_s) == doctest::Approx(12000.0).epsilon(1e-9));
    // < 1% residual of the initial gap for t >= 5 tau
    const double resid = std::abs(cfo_at(p, 5.0 * p.warmup_tau_s) - p.cfo_stable_hz);
    CHECK(resid < 0.01 * std::abs(p.cfo_initial_hz - p.cfo_stable_hz));
    // settles within 1% by 720 s with the default tau
    CHECK(std::abs(cfo_at(p, 720.0) - p.cfo_stable_hz) <=
          0.0100001 * std::abs(p.cfo_initial_hz - p.cfo_stable_hz));
    CHECK_THROWS_AS(cfo_at(p, -1.0), std::invalid_argument);
}

TEST_CASE("hump-count law: humps = round(2 df T) +/- 1") {
    struct Case { double df, fs, T; };
    for (const Case& c : {Case{200.0, 1e6, 0.01}, Case{100.0, 1e6, 0.01},
                          Case{9800.0, 45e6, 559e-6}, Case{1000.0, 4.5e6, 0.005}}) {
        const auto env = cfo_envelope(c.df, c.fs, c.T, false);
        const long want = std::lround(2.0 * c.df * c.T);
        const long got = static_cast<long>(count_humps(env));
        CHECK(std::abs(got - want) <= 1);
    }
}

TEST_CASE("I and Q envelopes are antiphase under pure CFO") {
    const double df = 500.0, fs = 1e6, T = 0.01;
    auto env_i = cfo_envelope(df, fs, T, false);
    auto env_q = cfo_envelope(df, fs, T, true);
    REQUIRE(env_i.size() == env_q.size());
    // normalize so the 0.8 maxima threshold is relative to the envelope peak
    const double peak_i = *std::max_element(env_i.begin(), env_i.end());
    for (double& v : env_i) v /= peak_i;
    const double peak_q = *std::max_element(env_q.begin(), env_q.end());
    for (double& v : env_q) v /= peak_q;
    // I-envelope maxima should align with Q-envelope minima: at an interior
    // I maximum, the Q envelope is near its own minimum level.
    const double fs_env = fs / 15.0;
    const double hump_period = fs_env / (2.0 * df); // samples per hump
    const std::size_t guard = static_cast<std::size_t>(hump_period);
    for (std::size_t i = guard; i + guard < env_i.size(); ++i) {
        if (env_i[i] > env_i[i - 1] && env_i[i] >= env_i[i + 1] && env_i[i] > 0.8) {
            // locate the nearest Q minimum; Q minima repeat once per hump, so
            // search only half a period each way to avoid the neighbours
            std::size_t best = i;
            for (std::size_t j = i - guard / 2; j <= i + guard / 2; ++j)
                if (env_q[j] < env_q[best]) best = j;
            CHECK(std::abs(static_cast<double>(best) - static_cast<double>(i)) <
                  0.05 * hump_period + 1.0);
        }
    }
}

TEST_CASE("zero-impairment transmit equals the bare baseband") {
    WaveformSpec spec;
    DeviceProfile p;
    p.device_id = "ideal";
    const IQFrame frame = transmit_frame(p, spec, 0.0, RngStream(7, 0));
    const Baseband bb = generate_baseband(spec, RngStream(7, 0).derive(1));
    const auto want = baseband_complex(bb);
    REQUIRE(frame.samples.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
        CHECK(std::abs(frame.samples[i] - want[i]) < 1e-12);
}

TEST_CASE("ideal profile yields a flat extracted envelope") {
    WaveformSpec spec;
    DeviceProfile p;
    const IQFrame frame = transmit_frame(p, spec, 0.0, RngStream(8, 0));
    EpsConfig cfg;
    const auto env = extract_envelope(real_part(frame.samples), spec.sample_rate_hz, cfg);
    // skip the ramp-up/down at frame edges
    const std::size_t skip = env.values.size() / 10;
    std::vector<double> interior(env.values.begin() + skip, env.values.end() - skip);
    const double cv = stddev(interior) / mean(interior);
    CHECK(cv < 0.05);
}

TEST_CASE("non-CFO impairments produce no dominant sideband") {
    DeviceProfile p;
    p.iq_gain_imbalance_db = 1.0;
    p.iq_phase_skew_rad = 0.03;
    p.dc_offset_i = 0.02;
    p.dc_offset_q = -0.015;
    p.phase_noise_std_rad = 5e-5;
    // Average the spectrum over noisy received frames with varying payloads:
    // a single periodogram's max/median ratio is ~ln(N)/ln(2) ~ 10 from order
    // statistics alone, so only the averaged spectrum can expose a sideband.
    EpsConfig cfg;
    std::vector<double> avg_i(cfg.n_bins, 0.0), avg_q(cfg.n_bins, 0.0);
    for (int f = 0; f < 10; ++f) {
        WaveformSpec spec;
        spec.seeded_random_payload = true;
        IQFrame frame = transmit_frame(p, spec, 0.0, RngStream(9, f).derive(1));
        ChannelConfig ch = make_domain("w", DomainPreset::Wired, RngStream(9, f).derive(2));
        ch.snr_db = 20.0;
        ch.seed = RngStream(9, f).derive(3);
        frame = apply_channel(frame, ch);
        const EpsFeature feat = extract_eps(frame, cfg);
        REQUIRE(!feat.i_degenerate);
        REQUIRE(!feat.q_degenerate);
        for (std::size_t k = 0; k < cfg.n_bins; ++k) {
            avg_i[k] += feat.i_spectrum[k];
            avg_q[k] += feat.q_spectrum[k];
        }
    }
    // guard of 8 bins (~0.6 kHz) around DC: oscillator phase wander is not a
    // sideband, and real offsets sit at |2 df| >= 4 kHz
    CHECK(peak_to_floor_ratio(avg_i, cfg, 8) < 5.0);
    CHECK(peak_to_floor_ratio(avg_q, cfg, 8) < 5.0);
}

TEST_CASE("make_population enforces separation and determinism") {
    const auto pop = make_population(15, 500.0, RngStream(3, 1));
    REQUIRE(pop.size() == 15);
    for (std::size_t i = 0; i < pop.size(); ++i)
        for (std::size_t j = i + 1; j < pop.size(); ++j)
            CHECK(std::abs(pop[i].cfo_stable_hz - pop[j].cfo_stable_hz) >= 500.0);
    for (const auto& p : pop) {
        CHECK(std::abs(p.cfo_stable_hz) <= kMaxCfoHz);
        CHECK(p.cfo_initial_hz != p.cfo_stable_hz);
    }

    const auto again = make_population(15, 500.0, RngStream(3, 1));
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(pop[i].cfo_stable_hz == again[i].cfo_stable_hz);
        CHECK(pop[i].phase_noise_std_rad == again[i].phase_noise_std_rad);
    }

    const auto two = make_population(2, 10000.0, RngStream(4, 0));
    CHECK(std::abs(two[0].cfo_stable_hz - two[1].cfo_stable_hz) >= 10000.0);

    CHECK_THROWS_AS(make_population(100, 5000.0, RngStream(5, 0)), std::invalid_argument);
    CHECK_THROWS_AS(make_population(1, 500.0, RngStream(5, 0)), std::invalid_argument);
}
