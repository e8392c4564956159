#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <vector>

#include "eps/dataset_io.hpp"
#include "eps/device_sim.hpp" // kPi
#include "eps/rng.hpp"

using namespace eps;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("eps_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

IQFrame random_frame(std::size_t n, eps::RngStream rng) {
    IQFrame f;
    f.sample_rate_hz = 4.5e6;
    f.center_freq_hz = 2.412e9;
    f.device_id = "dev01";
    f.domain_tag = "wired";
    f.capture_time_s = 720.0;
    f.samples.resize(n);
    for (auto& v : f.samples) {
        // dyadic rationals are exactly representable in float32, so the
        // float-on-disk round-trip is bit-exact
        const double re = static_cast<double>(rng.uniform_index(65536)) / 32768.0 - 1.0;
        const double im = static_cast<double>(rng.uniform_index(65536)) / 32768.0 - 1.0;
        v = cplx(re, im);
    }
    return f;
}

} // namespace

TEST_CASE("recording round-trip is bit-identical") {
    TempDir tmp;
    const IQFrame f = random_frame(10000, eps::RngStream(41, 0));
    const fs::path p = tmp.path / "rec.iq";
    write_recording(f, p);
    const IQFrame g = read_recording(p);
    CHECK(g.samples == f.samples);
    CHECK(g.sample_rate_hz == f.sample_rate_hz);
    CHECK(g.center_freq_hz == f.center_freq_hz);
    CHECK(g.device_id == f.device_id);
    CHECK(g.domain_tag == f.domain_tag);
    CHECK(g.capture_time_s == f.capture_time_s);
}

TEST_CASE("truncated recording is rejected with a byte-offset diagnostic") {
    TempDir tmp;
    const IQFrame f = random_frame(1000, eps::RngStream(42, 0));
    const fs::path p = tmp.path / "rec.iq";
    write_recording(f, p);
    fs::resize_file(p, fs::file_size(p) - 4);
    CHECK_THROWS_WITH_AS(read_recording(p), doctest::Contains("byte offset"), std::runtime_error);
}

TEST_CASE("sidecar sample_count disagreement is rejected") {
    TempDir tmp;
    const IQFrame f = random_frame(1000, eps::RngStream(43, 0));
    const fs::path p = tmp.path / "rec.iq";
    write_recording(f, p);
    auto side = detail::load_json(sidecar_path(p));
    side["sample_count"] = 999;
    detail::store_json(sidecar_path(p), side);
    CHECK_THROWS_AS(read_recording(p), std::runtime_error);
}

TEST_CASE("non-finite samples are reported with their index") {
    TempDir tmp;
    const IQFrame f = random_frame(100, eps::RngStream(44, 0));
    const fs::path p = tmp.path / "rec.iq";
    write_recording(f, p);
    // corrupt sample 17's I value with a NaN bit pattern
    std::fstream io(p, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(17 * 8);
    const float nan_val = std::nanf("");
    io.write(reinterpret_cast<const char*>(&nan_val), 4);
    io.close();
    CHECK_THROWS_WITH_AS(read_recording(p), doctest::Contains("index 17"), std::runtime_error);
}

TEST_CASE("packet detector finds five spaced frames within 50 samples") {
    eps::RngStream rng(45, 0);
    const std::size_t frame_len = 2000, gap = 1000;
    const double snr_db = 20.0;
    const double noise_sigma = std::sqrt(0.5 / std::pow(10.0, snr_db / 10.0));
    IQFrame capture;
    capture.sample_rate_hz = 1e6;
    capture.samples.assign(5 * frame_len + 6 * gap, cplx(0.0, 0.0));
    std::vector<std::size_t> truth;
    for (int k = 0; k < 5; ++k) {
        const std::size_t start = gap + static_cast<std::size_t>(k) * (frame_len + gap);
        truth.push_back(start);
        for (std::size_t i = 0; i < frame_len; ++i) {
            const double t = static_cast<double>(i) / 1e6;
            capture.samples[start + i] = cplx(std::cos(2.0 * kPi * 5e4 * t),
                                              std::sin(2.0 * kPi * 5e4 * t));
        }
    }
    for (auto& v : capture.samples)
        v += cplx(noise_sigma * rng.gaussian(), noise_sigma * rng.gaussian());

    const PacketIndex idx = detect_packets(capture, 10.0, 200, 500);
    CHECK_FALSE(idx.degenerate_capture);
    REQUIRE(idx.packets.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(std::abs(static_cast<long>(idx.packets[k].start_sample) -
                       static_cast<long>(truth[k])) <= 50);
        CHECK(std::abs(static_cast<long>(idx.packets[k].length_samples) -
                       static_cast<long>(frame_len)) <= 100);
    }
}

TEST_CASE("pure noise yields no packets") {
    eps::RngStream rng(46, 0);
    IQFrame capture;
    capture.sample_rate_hz = 1e6;
    capture.samples.resize(50000);
    for (auto& v : capture.samples) v = cplx(0.01 * rng.gaussian(), 0.01 * rng.gaussian());
    const PacketIndex idx = detect_packets(capture, 10.0, 200, 500);
    CHECK(idx.packets.empty());
}

TEST_CASE("constant-power capture is flagged degenerate") {
    IQFrame capture;
    capture.sample_rate_hz = 1e6;
    capture.samples.assign(50000, cplx(1.0, 0.0));
    const PacketIndex idx = detect_packets(capture, 10.0, 200, 500);
    CHECK(idx.degenerate_capture);
    CHECK(idx.packets.empty());
}

TEST_CASE("bursts closer than min_gap merge into one packet") {
    eps::RngStream rng(47, 0);
    IQFrame capture;
    capture.sample_rate_hz = 1e6;
    capture.samples.assign(40000, cplx(0.0, 0.0));
    for (std::size_t start : {10000ul, 12100ul}) { // 100-sample gap < min_gap 500
        for (std::size_t i = 0; i < 2000; ++i)
            capture.samples[start + i] = cplx(1.0, 0.0);
    }
    for (auto& v : capture.samples) v += cplx(0.01 * rng.gaussian(), 0.01 * rng.gaussian());
    const PacketIndex idx = detect_packets(capture, 10.0, 500, 500);
    CHECK(idx.packets.size() == 1);
}

TEST_CASE("detector precision and recall over 100 random captures") {
    std::size_t truth_total = 0, detected_total = 0, matched = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        eps::RngStream rng(100 + seed, 0);
        const std::size_t frame_len = 1500;
        const std::size_t min_gap = 300;
        const double noise_sigma = std::sqrt(0.5 / std::pow(10.0, 12.0 / 10.0)); // 12 dB
        const std::size_t n_frames = 2 + rng.uniform_index(4);
        IQFrame capture;
        capture.sample_rate_hz = 1e6;
        std::vector<std::size_t> starts;
        std::size_t pos = 800 + rng.uniform_index(500);
        for (std::size_t k = 0; k < n_frames; ++k) {
            starts.push_back(pos);
            pos += frame_len + 2 * min_gap + rng.uniform_index(1000);
        }
        capture.samples.assign(pos + 1000, cplx(0.0, 0.0));
        for (std::size_t s : starts)
            for (std::size_t i = 0; i < frame_len; ++i) {
                const double t = static_cast<double>(i) / 1e6;
                capture.samples[s + i] = cplx(std::cos(2.0 * kPi * 3e4 * t),
                                              std::sin(2.0 * kPi * 3e4 * t));
            }
        for (auto& v : capture.samples)
            v += cplx(noise_sigma * rng.gaussian(), noise_sigma * rng.gaussian());

        const PacketIndex idx = detect_packets(capture, 8.0, min_gap, 400);
        truth_total += starts.size();
        detected_total += idx.packets.size();
        for (std::size_t s : starts)
            for (const auto& p : idx.packets)
                if (std::llabs(static_cast<long long>(p.start_sample) -
                               static_cast<long long>(s)) < 200) {
                    ++matched;
                    break;
                }
    }
    const double recall = static_cast<double>(matched) / static_cast<double>(truth_total);
    const double precision = static_cast<double>(matched) / static_cast<double>(detected_total);
    CHECK(recall >= 0.99);
    CHECK(precision >= 0.99);
}

TEST_CASE("feature set round-trip is bit-identical") {
    TempDir tmp;
    eps::RngStream rng(48, 0);
    FeatureMatrix fm;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> row(64);
        for (double& v : row) v = static_cast<float>(rng.uniform(0.0, 1.0));
        fm.append(row, "dev" + std::to_string(i % 3), "domain" + std::to_string(i % 2));
    }
    const fs::path p = tmp.path / "set.features";
    write_feature_set(fm, p, "abc123");
    const FeatureSet got = read_feature_set(p);
    CHECK(got.config_hash == "abc123");
    CHECK(got.features.rows == fm.rows);
    CHECK(got.features.labels == fm.labels);
    CHECK(got.features.domain_tags == fm.domain_tags);
}

TEST_CASE("append with a different config hash is rejected") {
    TempDir tmp;
    FeatureMatrix fm;
    fm.append({1.0, 2.0}, "a", "d");
    const fs::path p = tmp.path / "set.features";
    write_feature_set(fm, p, "hash1");
    CHECK_THROWS_AS(write_feature_set(fm, p, "hash2", true), std::runtime_error);
    // matching hash appends fine
    write_feature_set(fm, p, "hash1", true);
    const FeatureSet got = read_feature_set(p);
    CHECK(got.features.size() == 2);
}

TEST_CASE("empty feature matrix round-trips as a zero-row file") {
    TempDir tmp;
    FeatureMatrix fm;
    const fs::path p = tmp.path / "empty.features";
    write_feature_set(fm, p, "h");
    const FeatureSet got = read_feature_set(p);
    CHECK(got.features.size() == 0);
}

TEST_CASE("centroid model save/load round-trip") {
    TempDir tmp;
    FeatureMatrix fm;
    fm.append({1.0, 0.25, -0.5}, "a", "d");
    fm.append({0.0, 1.0, 2.0}, "b", "d");
    const CentroidModel m = fit_centroid(fm, Distance::Euclidean);
    const fs::path p = tmp.path / "model.bin";
    save_model(m, p);
    const CentroidModel got = load_centroid_model(p);
    CHECK(got.classes == m.classes);
    CHECK(got.centroids == m.centroids);
    CHECK(got.distance == m.distance);
}

TEST_CASE("corrupted model magic is rejected") {
    TempDir tmp;
    FeatureMatrix fm;
    fm.append({1.0}, "a", "d");
    fm.append({2.0}, "b", "d");
    const fs::path p = tmp.path / "model.bin";
    save_model(fit_centroid(fm), p);
    std::fstream io(p, std::ios::binary | std::ios::in | std::ios::out);
    io.write("XXXX", 4);
    io.close();
    CHECK_THROWS_WITH_AS(load_centroid_model(p), doctest::Contains("magic"), std::runtime_error);
}
