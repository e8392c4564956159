#ifndef EPS_SCENARIO_HPP
#define EPS_SCENARIO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps/channel_sim.hpp"
#include "eps/classifier.hpp"
#include "eps/dataset_io.hpp"
#include "eps/device_sim.hpp"
#include "eps/eps_extract.hpp"

namespace eps {

constexpr const char* kToolVersion = "1.0.0";

struct DomainSpec {
    std::string name;
    DomainPreset preset = DomainPreset::Wired;
    double capture_time_s = 720.0; // post-activation capture schedule
};

/// One experiment definition: population, waveform, domains, extraction and
/// classifier settings.
struct Scenario {
    std::size_t n_devices = 15;
    double separation_hz = 500.0;
    std::uint64_t seed = 1;
    PopulationConfig population;
    WaveformSpec waveform;
    std::vector<DomainSpec> domains;
    std::size_t frames_per_device_per_domain = 100;
    std::size_t k_folds = 5;
    EpsConfig eps;
    ModelKind classifier_kind = ModelKind::Centroid;
    Distance classifier_distance = Distance::Cosine;
    std::size_t knn_k = 5;
    SoftmaxHyper softmax;
    std::size_t raw_iq_window = 8192;
};

inline void validate_scenario(const Scenario& s) {
    if (s.n_devices < 2) throw std::invalid_argument("Scenario: need at least 2 devices");
    if (s.domains.empty()) throw std::invalid_argument("Scenario: at least one domain required");
    std::set<std::string> names;
    for (const auto& d : s.domains) {
        if (d.name.empty()) throw std::invalid_argument("Scenario: empty domain name");
        if (!names.insert(d.name).second)
            throw std::invalid_argument("Scenario: duplicate domain name '" + d.name + "'");
        if (d.capture_time_s < 0.0)
            throw std::invalid_argument("Scenario: negative capture time");
    }
    if (s.frames_per_device_per_domain < s.k_folds)
        throw std::invalid_argument("Scenario: frames_per_device_per_domain must be >= k_folds");
    validate_spec(s.waveform);
    validate_eps_config(s.eps);
}

// ------------------------------------------------------------------- JSON

inline nlohmann::json eps_config_to_json(const EpsConfig& c) {
    return {{"decimation_factor", c.decimation_factor},
            {"smoothing_cutoff_frac", c.smoothing_cutoff_frac},
            {"n_bins", c.n_bins},
            {"hilbert_mode", c.hilbert_mode == HilbertMode::FrequencyDomain ? "frequency-domain" : "fir"},
            {"fir_taps", c.fir_taps},
            {"window", c.window == SpectralWindow::Hann ? "hann" : "none"},
            {"antialias", c.antialias},
            {"smoothing_taps", c.smoothing_taps},
            {"min_frame_len", c.min_frame_len},
            {"degenerate_cv", c.degenerate_cv}};
}

inline EpsConfig eps_config_from_json(const nlohmann::json& j) {
    EpsConfig c;
    c.decimation_factor = j.value("decimation_factor", c.decimation_factor);
    c.smoothing_cutoff_frac = j.value("smoothing_cutoff_frac", c.smoothing_cutoff_frac);
    c.n_bins = j.value("n_bins", c.n_bins);
    const std::string mode = j.value("hilbert_mode", std::string("frequency-domain"));
    if (mode == "frequency-domain")
        c.hilbert_mode = HilbertMode::FrequencyDomain;
    else if (mode == "fir")
        c.hilbert_mode = HilbertMode::Fir;
    else
        throw std::invalid_argument("unknown hilbert_mode: " + mode);
    c.fir_taps = j.value("fir_taps", c.fir_taps);
    const std::string window = j.value("window", std::string("hann"));
    if (window == "hann")
        c.window = SpectralWindow::Hann;
    else if (window == "none")
        c.window = SpectralWindow::None;
    else
        throw std::invalid_argument("unknown window: " + window);
    c.antialias = j.value("antialias", c.antialias);
    c.smoothing_taps = j.value("smoothing_taps", c.smoothing_taps);
    c.min_frame_len = j.value("min_frame_len", c.min_frame_len);
    c.degenerate_cv = j.value("degenerate_cv", c.degenerate_cv);
    validate_eps_config(c);
    return c;
}

/// FNV-1a hash over the canonical config JSON; ties feature files to the
/// settings that produced them.
inline std::string eps_config_hash(const EpsConfig& c) {
    const std::string dump = eps_config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json domains = nlohmann::json::array();
    for (const auto& d : s.domains)
        domains.push_back({{"name", d.name},
                           {"preset", preset_name(d.preset)},
                           {"capture_time_s", d.capture_time_s}});
    return {{"format_version", kFormatVersion},
            {"population",
             {{"n_devices", s.n_devices},
              {"separation_hz", s.separation_hz},
              {"cfo_min_hz", s.population.cfo_min_hz},
              {"phase_noise_std_max_rad", s.population.phase_noise_std_max_rad},
              {"iq_gain_imbalance_max_db", s.population.iq_gain_imbalance_max_db},
              {"iq_phase_skew_max_rad", s.population.iq_phase_skew_max_rad},
              {"dc_offset_max", s.population.dc_offset_max},
              {"warmup_initial_frac_min", s.population.warmup_initial_frac_min},
              {"warmup_initial_frac_max", s.population.warmup_initial_frac_max}}},
            {"seed", s.seed},
            {"waveform",
             {{"bit_rate_bps", s.waveform.bit_rate_bps},
              {"spread_chips_per_bit", s.waveform.spread_chips_per_bit},
              {"frame_bits", s.waveform.frame_bits},
              {"sample_rate_hz", s.waveform.sample_rate_hz},
              {"payload_mode", s.waveform.seeded_random_payload ? "seeded-random" : "fixed-zeros"}}},
            {"domains", domains},
            {"frames_per_device_per_domain", s.frames_per_device_per_domain},
            {"k_folds", s.k_folds},
            {"eps", eps_config_to_json(s.eps)},
            {"classifier",
             {{"kind", model_kind_name(s.classifier_kind)},
              {"distance", s.classifier_distance == Distance::Cosine ? "cosine" : "euclidean"},
              {"knn_k", s.knn_k},
              {"softmax",
               {{"learning_rate", s.softmax.learning_rate},
                {"epochs", s.softmax.epochs},
                {"l2_weight", s.softmax.l2_weight},
                {"momentum", s.softmax.momentum},
                {"batch_size", s.softmax.batch_size}}}}},
            {"raw_iq_window", s.raw_iq_window}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    const auto& pop = j.at("population");
    s.n_devices = pop.at("n_devices").get<std::size_t>();
    s.separation_hz = pop.at("separation_hz").get<double>();
    s.population.cfo_min_hz = pop.value("cfo_min_hz", s.population.cfo_min_hz);
    s.population.phase_noise_std_max_rad =
        pop.value("phase_noise_std_max_rad", s.population.phase_noise_std_max_rad);
    s.population.iq_gain_imbalance_max_db =
        pop.value("iq_gain_imbalance_max_db", s.population.iq_gain_imbalance_max_db);
    s.population.iq_phase_skew_max_rad =
        pop.value("iq_phase_skew_max_rad", s.population.iq_phase_skew_max_rad);
    s.population.dc_offset_max = pop.value("dc_offset_max", s.population.dc_offset_max);
    s.population.warmup_initial_frac_min =
        pop.value("warmup_initial_frac_min", s.population.warmup_initial_frac_min);
    s.population.warmup_initial_frac_max =
        pop.value("warmup_initial_frac_max", s.population.warmup_initial_frac_max);
    s.seed = j.at("seed").get<std::uint64_t>();

    const auto& wf = j.at("waveform");
    s.waveform.bit_rate_bps = wf.at("bit_rate_bps").get<double>();
    s.waveform.spread_chips_per_bit = wf.at("spread_chips_per_bit").get<unsigned>();
    s.waveform.frame_bits = wf.at("frame_bits").get<unsigned>();
    s.waveform.sample_rate_hz = wf.at("sample_rate_hz").get<double>();
    const std::string payload = wf.value("payload_mode", std::string("fixed-zeros"));
    if (payload == "fixed-zeros")
        s.waveform.seeded_random_payload = false;
    else if (payload == "seeded-random")
        s.waveform.seeded_random_payload = true;
    else
        throw std::invalid_argument("unknown payload_mode: " + payload);

    for (const auto& d : j.at("domains")) {
        DomainSpec ds;
        ds.name = d.at("name").get<std::string>();
        ds.preset = parse_preset(d.at("preset").get<std::string>());
        ds.capture_time_s = d.value("capture_time_s", 720.0);
        s.domains.push_back(ds);
    }
    s.frames_per_device_per_domain = j.at("frames_per_device_per_domain").get<std::size_t>();
    s.k_folds = j.value("k_folds", s.k_folds);
    if (j.contains("eps")) s.eps = eps_config_from_json(j.at("eps"));

    if (j.contains("classifier")) {
        const auto& cl = j.at("classifier");
        s.classifier_kind = parse_model_kind(cl.value("kind", std::string("centroid")));
        const std::string dist = cl.value("distance", std::string("cosine"));
        s.classifier_distance = dist == "cosine" ? Distance::Cosine : Distance::Euclidean;
        s.knn_k = cl.value("knn_k", s.knn_k);
        if (cl.contains("softmax")) {
            const auto& sm = cl.at("softmax");
            s.softmax.learning_rate = sm.value("learning_rate", s.softmax.learning_rate);
            s.softmax.epochs = sm.value("epochs", s.softmax.epochs);
            s.softmax.l2_weight = sm.value("l2_weight", s.softmax.l2_weight);
            s.softmax.momentum = sm.value("momentum", s.softmax.momentum);
            s.softmax.batch_size = sm.value("batch_size", s.softmax.batch_size);
        }
    }
    s.raw_iq_window = j.value("raw_iq_window", s.raw_iq_window);
    validate_scenario(s);
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed scenario JSON: " + e.what());
    }
    return scenario_from_json(j);
}

} // namespace eps

#endif
