#ifndef EPS_DATASET_IO_HPP
#define EPS_DATASET_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eps/classifier.hpp"
#include "eps/frame.hpp"

namespace eps {

using nlohmann::json;

constexpr int kFormatVersion = 1;

namespace detail {

inline void write_f32(std::ostream& os, const std::vector<float>& data) {
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
}

inline std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(is.tellg());
    if (bytes != expected_count * sizeof(float))
        throw std::runtime_error(path.string() + ": expected " +
                                 std::to_string(expected_count * sizeof(float)) + " bytes, found " +
                                 std::to_string(bytes) + " (mismatch at byte offset " +
                                 std::to_string(std::min(bytes, expected_count * sizeof(float))) + ")");
    is.seekg(0);
    std::vector<float> data(expected_count);
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!is) throw std::runtime_error(path.string() + ": short read");
    return data;
}

inline json load_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed sidecar: " + e.what());
    }
    return j;
}

inline void store_json(const std::filesystem::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << "\n";
}

} // namespace detail

// ------------------------------------------------------- raw IQ recordings

/// Sidecar path for a recording or feature file.
inline std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    std::filesystem::path p = data_path;
    p += ".json";
    return p;
}

/**
 * Headerless interleaved little-endian float32 (I,Q,I,Q,...) plus a JSON
 * sidecar carrying the metadata. Round-trips bit-exactly.
 */
inline void write_recording(const IQFrame& frame, const std::filesystem::path& path) {
    validate_frame(frame);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::vector<float> inter(frame.samples.size() * 2);
    for (std::size_t i = 0; i < frame.samples.size(); ++i) {
        inter[2 * i] = static_cast<float>(frame.samples[i].real());
        inter[2 * i + 1] = static_cast<float>(frame.samples[i].imag());
    }
    detail::write_f32(os, inter);
    if (!os) throw std::runtime_error("write failed: " + path.string());

    json side{{"format_version", kFormatVersion},
              {"sample_rate_hz", frame.sample_rate_hz},
              {"center_freq_hz", frame.center_freq_hz},
              {"device_id", frame.device_id},
              {"domain_tag", frame.domain_tag},
              {"capture_time_s", frame.capture_time_s},
              {"sample_count", frame.samples.size()}};
    detail::store_json(sidecar_path(path), side);
}

inline IQFrame read_recording(const std::filesystem::path& path) {
    const json side = detail::load_json(sidecar_path(path));
    IQFrame frame;
    try {
        frame.sample_rate_hz = side.at("sample_rate_hz").get<double>();
        frame.center_freq_hz = side.at("center_freq_hz").get<double>();
        frame.device_id = side.at("device_id").get<std::string>();
        frame.domain_tag = side.at("domain_tag").get<std::string>();
        frame.capture_time_s = side.at("capture_time_s").get<double>();
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed sidecar: " + e.what());
    }
    if (frame.sample_rate_hz <= 0.0)
        throw std::runtime_error(path.string() + ": sidecar sample_rate_hz must be > 0");
    const auto count = side.at("sample_count").get<std::size_t>();

    const std::vector<float> inter = detail::read_f32(path, count * 2);
    frame.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float re = inter[2 * i], im = inter[2 * i + 1];
        if (!std::isfinite(re) || !std::isfinite(im))
            throw std::runtime_error(path.string() + ": non-finite sample at index " +
                                     std::to_string(i));
        frame.samples[i] = cplx(re, im);
    }
    return frame;
}

// -------------------------------------------------------- packet detection

struct PacketEntry {
    std::size_t start_sample = 0;
    std::size_t length_samples = 0;
    double peak_power = 0.0;
    double mean_power = 0.0;
};

struct PacketIndex {
    std::vector<PacketEntry> packets;
    bool degenerate_capture = false; // constant-power input, nothing detectable
};

/**
 * Energy detector: noise floor from the 10th percentile of 64-sample smoothed
 * power; packets are maximal runs above floor + threshold. Runs closer than
 * min_gap merge; runs shorter than min_len drop.
 */
inline PacketIndex detect_packets(const IQFrame& capture, double threshold_db_above_noise,
                                  std::size_t min_gap_samples, std::size_t min_len_samples,
                                  std::size_t smooth_window = 64) {
    validate_frame(capture);
    if (min_len_samples == 0)
        throw std::invalid_argument("detect_packets: min_len_samples must be >= 1");
    if (capture.samples.size() < 10 * min_len_samples)
        throw std::invalid_argument(
            "detect_packets: capture too short for noise-floor estimation (need >= 10x min_len)");

    const std::size_t n = capture.samples.size();
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) power[i] = std::norm(capture.samples[i]);

    // moving average
    std::vector<double> smooth(n);
    double acc = 0.0;
    const std::size_t w = std::max<std::size_t>(1, smooth_window);
    for (std::size_t i = 0; i < n; ++i) {
        acc += power[i];
        if (i >= w) acc -= power[i - w];
        smooth[i] = acc / static_cast<double>(std::min(i + 1, w));
    }

    std::vector<double> sorted(smooth);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 10), sorted.end());
    const double noise_floor = sorted[n / 10];

    PacketIndex index;
    const double lo = *std::min_element(smooth.begin(), smooth.end());
    const double hi = *std::max_element(smooth.begin(), smooth.end());
    if (hi <= 0.0 || (hi - lo) / hi < 1e-6) {
        index.degenerate_capture = true;
        return index;
    }

    const double threshold = noise_floor * std::pow(10.0, threshold_db_above_noise / 10.0);

    // maximal runs above threshold
    std::vector<std::pair<std::size_t, std::size_t>> runs; // [start, end)
    std::size_t start = 0;
    bool in_run = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_run && smooth[i] > threshold) {
            start = i;
            in_run = true;
        } else if (in_run && smooth[i] <= threshold) {
            runs.emplace_back(start, i);
            in_run = false;
        }
    }
    if (in_run) runs.emplace_back(start, n);

    // merge runs separated by less than min_gap
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first - merged.back().second < min_gap_samples)
            merged.back().second = r.second;
        else
            merged.push_back(r);
    }

    for (const auto& r : merged) {
        const std::size_t len = r.second - r.first;
        if (len < min_len_samples) continue;
        PacketEntry e;
        e.start_sample = r.first;
        e.length_samples = len;
        double peak = 0.0, sum = 0.0;
        for (std::size_t i = r.first; i < r.second; ++i) {
            peak = std::max(peak, power[i]);
            sum += power[i];
        }
        e.peak_power = peak;
        e.mean_power = sum / static_cast<double>(len);
        index.packets.push_back(e);
    }
    return index;
}

// ----------------------------------------------------------- feature sets

/**
 * Feature sets: row-major little-endian float32 matrix plus a JSON sidecar
 * with shape, labels, domain tags and the producing config hash.
 */
inline void write_feature_set(const FeatureMatrix& features, const std::filesystem::path& path,
                              const std::string& config_hash, bool append = false) {
    validate_features(features);
    if (append && std::filesystem::exists(path)) {
        const json side = detail::load_json(sidecar_path(path));
        if (side.at("config_hash").get<std::string>() != config_hash)
            throw std::runtime_error(path.string() +
                                     ": append rejected, config hash differs from existing file");
    }

    std::ofstream os(path, append ? (std::ios::binary | std::ios::app) : std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    std::vector<float> buf;
    for (const auto& row : features.rows) {
        buf.assign(row.begin(), row.end());
        detail::write_f32(os, buf);
    }
    os.close();

    json side;
    if (append && std::filesystem::exists(sidecar_path(path))) {
        side = detail::load_json(sidecar_path(path));
        side["rows"] = side.at("rows").get<std::size_t>() + features.size();
        for (const auto& l : features.labels) side["labels"].push_back(l);
        for (const auto& d : features.domain_tags) side["domain_tags"].push_back(d);
    } else {
        side = json{{"format_version", kFormatVersion},
                    {"rows", features.size()},
                    {"cols", features.dim()},
                    {"labels", features.labels},
                    {"domain_tags", features.domain_tags},
                    {"config_hash", config_hash}};
    }
    detail::store_json(sidecar_path(path), side);
}

struct FeatureSet {
    FeatureMatrix features;
    std::string config_hash;
};

inline FeatureSet read_feature_set(const std::filesystem::path& path) {
    const json side = detail::load_json(sidecar_path(path));
    FeatureSet set;
    std::size_t rows, cols;
    try {
        rows = side.at("rows").get<std::size_t>();
        cols = side.at("cols").get<std::size_t>();
        set.config_hash = side.at("config_hash").get<std::string>();
        set.features.labels = side.at("labels").get<std::vector<std::string>>();
        set.features.domain_tags = side.at("domain_tags").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed sidecar: " + e.what());
    }
    if (set.features.labels.size() != rows || set.features.domain_tags.size() != rows)
        throw std::runtime_error(path.string() + ": sidecar label/tag counts disagree with shape");

    const std::vector<float> flat = detail::read_f32(path, rows * cols);
    set.features.rows.assign(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            set.features.rows[r][c] = flat[r * cols + c];
    return set;
}

// ------------------------------------------------------------- model files

constexpr char kModelMagic[4] = {'E', 'P', 'S', 'M'};

/// Versioned binary model file: magic, version, kind, dims, 64-bit reals.
inline void save_model(const CentroidModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kModelMagic, 4);
    const std::uint32_t version = kFormatVersion;
    const std::uint8_t kind = 0; // centroid
    const std::uint8_t dist = model.distance == Distance::Cosine ? 0 : 1;
    const std::uint32_t n_classes = static_cast<std::uint32_t>(model.classes.size());
    const std::uint32_t dim = static_cast<std::uint32_t>(model.centroids.front().size());
    os.write(reinterpret_cast<const char*>(&version), 4);
    os.write(reinterpret_cast<const char*>(&kind), 1);
    os.write(reinterpret_cast<const char*>(&dist), 1);
    os.write(reinterpret_cast<const char*>(&n_classes), 4);
    os.write(reinterpret_cast<const char*>(&dim), 4);
    for (const auto& c : model.centroids)
        os.write(reinterpret_cast<const char*>(c.data()),
                 static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path.string());

    json side{{"format_version", kFormatVersion},
              {"kind", "centroid"},
              {"distance", model.distance == Distance::Cosine ? "cosine" : "euclidean"},
              {"classes", model.classes},
              {"dim", dim}};
    detail::store_json(sidecar_path(path), side);
}

inline CentroidModel load_centroid_model(const std::filesystem::path& path) {
    const json side = detail::load_json(sidecar_path(path));
    if (side.at("kind").get<std::string>() != "centroid")
        throw std::runtime_error(path.string() + ": not a centroid model");

    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    std::uint32_t version, n_classes, dim;
    std::uint8_t kind, dist;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&version), 4);
    is.read(reinterpret_cast<char*>(&kind), 1);
    is.read(reinterpret_cast<char*>(&dist), 1);
    is.read(reinterpret_cast<char*>(&n_classes), 4);
    is.read(reinterpret_cast<char*>(&dim), 4);
    if (!is || std::memcmp(magic, kModelMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": bad model magic");
    if (version != kFormatVersion)
        throw std::runtime_error(path.string() + ": unsupported model version " +
                                 std::to_string(version));
    if (kind != 0) throw std::runtime_error(path.string() + ": not a centroid model payload");

    CentroidModel model;
    model.distance = dist == 0 ? Distance::Cosine : Distance::Euclidean;
    model.classes = side.at("classes").get<std::vector<std::string>>();
    if (model.classes.size() != n_classes)
        throw std::runtime_error(path.string() + ": class count mismatch between file and sidecar");
    model.centroids.assign(n_classes, std::vector<double>(dim));
    for (auto& c : model.centroids) {
        is.read(reinterpret_cast<char*>(c.data()),
                static_cast<std::streamsize>(c.size() * sizeof(double)));
        for (double v : c)
            if (!std::isfinite(v))
                throw std::runtime_error(path.string() + ": non-finite model parameter");
    }
    if (!is) throw std::runtime_error(path.string() + ": truncated model file");
    return model;
}

} // namespace eps

#endif
