#ifndef EPS_EVAL_HPP
#define EPS_EVAL_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "eps/channel_sim.hpp"
#include "eps/classifier.hpp"
#include "eps/dataset_io.hpp"
#include "eps/device_sim.hpp"
#include "eps/eps_extract.hpp"
#include "eps/scenario.hpp"

namespace eps {

namespace fs = std::filesystem;

/// Index-parallel loop; results must be written to preallocated slots so the
/// output is independent of the thread count.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// -------------------------------------------------------------- simulation

/// Scenario instantiated into concrete devices and channel instances.
struct SimContext {
    Scenario scenario;
    std::vector<DeviceProfile> population;
    std::vector<ChannelConfig> channels; // one per scenario domain
};

inline SimContext make_context(const Scenario& s) {
    validate_scenario(s);
    SimContext ctx;
    ctx.scenario = s;
    ctx.population = make_population(s.n_devices, s.separation_hz, RngStream(s.seed, 1), s.population);
    for (std::size_t d = 0; d < s.domains.size(); ++d)
        ctx.channels.push_back(
            make_domain(s.domains[d].name, s.domains[d].preset, RngStream(s.seed, 2).derive(d)));
    return ctx;
}

/// Deterministic per-frame stream id from the (device, domain, frame) triple.
inline std::uint64_t frame_stream_id(std::size_t dev, std::size_t dom, std::size_t frame) {
    return (static_cast<std::uint64_t>(dev) << 40) | (static_cast<std::uint64_t>(dom) << 28) |
           static_cast<std::uint64_t>(frame);
}

/// One impaired frame observed through its domain channel. capture_time < 0
/// uses the domain's scheduled capture time.
inline IQFrame simulate_frame(const SimContext& ctx, std::size_t dev, std::size_t dom,
                              std::size_t frame_idx, double capture_time_s = -1.0) {
    const Scenario& s = ctx.scenario;
    if (dev >= ctx.population.size() || dom >= ctx.channels.size())
        throw std::invalid_argument("simulate_frame: device or domain index out of range");
    const double t = capture_time_s >= 0.0 ? capture_time_s : s.domains[dom].capture_time_s;

    RngStream frame_rng = RngStream(s.seed, 3).derive(frame_stream_id(dev, dom, frame_idx));
    IQFrame clean = transmit_frame(ctx.population[dev], s.waveform, t, frame_rng.derive(1));

    ChannelConfig ch = ctx.channels[dom];
    ch.seed = frame_rng.derive(2);
    IQFrame out = apply_channel(clean, ch);
    out.domain_tag = s.domains[dom].name;
    return out;
}

// ------------------------------------------------------------ featurizers

enum class Representation { Eps, RawIq };

inline Representation parse_representation(const std::string& s) {
    if (s == "eps") return Representation::Eps;
    if (s == "raw-iq") return Representation::RawIq;
    throw std::invalid_argument("unknown representation: " + s);
}

inline std::string representation_name(Representation r) {
    return r == Representation::Eps ? "eps" : "raw-iq";
}

/// Flattened 2 x window raw-IQ row (first window samples of I then of Q),
/// amplitude-normalized per frame.
inline std::vector<double> raw_iq_row(const IQFrame& frame, std::size_t window) {
    if (frame.samples.size() < window)
        throw std::invalid_argument("raw_iq_row: frame of " + std::to_string(frame.samples.size()) +
                                    " samples is shorter than the " + std::to_string(window) +
                                    "-sample window");
    std::vector<double> row(2 * window);
    double power = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        row[i] = frame.samples[i].real();
        row[window + i] = frame.samples[i].imag();
        power += std::norm(frame.samples[i]);
    }
    const double rms = std::sqrt(power / static_cast<double>(window));
    if (rms > 0.0)
        for (double& v : row) v /= rms;
    return row;
}

inline std::vector<double> feature_row(const IQFrame& frame, const Scenario& s, Representation r) {
    if (r == Representation::Eps) return extract_eps(frame, s.eps).flattened();
    return raw_iq_row(frame, s.raw_iq_window);
}

/// Simulate + featurize one whole domain in memory.
inline FeatureMatrix build_domain_features(const SimContext& ctx, std::size_t dom,
                                           Representation repr, std::size_t threads = 1,
                                           std::size_t frames_per_device = 0,
                                           double capture_time_s = -1.0) {
    const Scenario& s = ctx.scenario;
    const std::size_t fpd = frames_per_device ? frames_per_device : s.frames_per_device_per_domain;
    const std::size_t total = s.n_devices * fpd;
    std::vector<std::vector<double>> rows(total);
    std::vector<std::string> labels(total);

    parallel_for(total, threads, [&](std::size_t i) {
        const std::size_t dev = i / fpd;
        const std::size_t frame_idx = i % fpd;
        const IQFrame frame = simulate_frame(ctx, dev, dom, frame_idx, capture_time_s);
        rows[i] = feature_row(frame, s, repr);
        labels[i] = ctx.population[dev].device_id;
    });

    FeatureMatrix fm;
    for (std::size_t i = 0; i < total; ++i)
        fm.append(std::move(rows[i]), std::move(labels[i]), s.domains[dom].name);
    return fm;
}

inline ClassifierOptions classifier_options(const Scenario& s) {
    ClassifierOptions opt;
    opt.kind = s.classifier_kind;
    opt.distance = s.classifier_distance;
    opt.knn_k = s.knn_k;
    opt.softmax = s.softmax;
    opt.rng = RngStream(s.seed, 5);
    return opt;
}

// ----------------------------------------------------------------- report

struct EvalReport {
    std::string train_domain;
    std::string test_domain;
    std::string model;
    std::string representation;
    bool same_domain = false;
    std::vector<double> fold_accuracies; // same-domain only
    double mean_accuracy = 0.0;
    ConfusionMatrix confusion;
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::string timestamp; // kept separate so reports compare equal across runs
};

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json per_device = nlohmann::json::object();
    const auto acc = r.confusion.per_class_accuracy();
    for (std::size_t c = 0; c < r.confusion.classes.size(); ++c)
        per_device[r.confusion.classes[c]] = acc[c];
    return {{"format_version", kFormatVersion},
            {"train_domain", r.train_domain},
            {"test_domain", r.test_domain},
            {"model", r.model},
            {"representation", r.representation},
            {"same_domain", r.same_domain},
            {"fold_accuracies", r.fold_accuracies},
            {"mean_accuracy", r.mean_accuracy},
            {"classes", r.confusion.classes},
            {"confusion", r.confusion.counts},
            {"per_device_accuracy", per_device},
            {"config_hash", r.config_hash},
            {"tool_version", r.tool_version},
            {"timestamp", r.timestamp}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.train_domain = j.at("train_domain").get<std::string>();
    r.test_domain = j.at("test_domain").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.representation = j.at("representation").get<std::string>();
    r.same_domain = j.at("same_domain").get<bool>();
    r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.confusion = ConfusionMatrix(j.at("classes").get<std::vector<std::string>>());
    r.confusion.counts = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.config_hash = j.value("config_hash", std::string());
    r.tool_version = j.value("tool_version", std::string());
    r.timestamp = j.value("timestamp", std::string());
    return r;
}

inline void write_confusion_csv(const ConfusionMatrix& cm, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "true\\pred";
    for (const auto& c : cm.classes) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < cm.classes.size(); ++r) {
        os << cm.classes[r];
        for (std::size_t c = 0; c < cm.classes.size(); ++c) os << "," << cm.counts[r][c];
        os << "\n";
    }
}

// ------------------------------------------------------------ evaluation

/// Same-domain evaluation: stratified k-fold cross-validation.
inline EvalReport evaluate_same_domain(const FeatureMatrix& features, const std::string& domain,
                                       const ClassifierOptions& opt, std::size_t k_folds,
                                       RngStream rng, const std::string& config_hash,
                                       const std::string& repr) {
    const CrossvalResult cv = crossval(features, k_folds, opt, rng);
    EvalReport r;
    r.train_domain = domain;
    r.test_domain = domain;
    r.model = model_kind_name(opt.kind);
    r.representation = repr;
    r.same_domain = true;
    r.fold_accuracies = cv.fold_accuracies;
    r.mean_accuracy = cv.mean_accuracy;
    r.confusion = cv.confusion;
    r.config_hash = config_hash;
    r.timestamp = iso_timestamp();
    return r;
}

/// Cross-domain evaluation: train on the full train set, test on the test set.
inline EvalReport evaluate_cross_domain(const FeatureMatrix& train, const FeatureMatrix& test,
                                        const std::string& train_domain,
                                        const std::string& test_domain,
                                        const ClassifierOptions& opt,
                                        const std::string& config_hash, const std::string& repr) {
    const auto train_classes = class_labels(train);
    const auto test_classes = class_labels(test);
    if (train_classes != test_classes)
        throw std::invalid_argument("evaluate: train and test label sets differ");
    if (train.dim() != test.dim())
        throw std::invalid_argument("evaluate: feature dimension mismatch");

    const Prediction pred = train_and_predict(train, test, opt);
    EvalReport r;
    r.train_domain = train_domain;
    r.test_domain = test_domain;
    r.model = model_kind_name(opt.kind);
    r.representation = repr;
    r.same_domain = false;
    r.confusion = ConfusionMatrix(train_classes);
    r.confusion.add(test.labels, pred.labels);
    r.mean_accuracy = r.confusion.accuracy();
    r.config_hash = config_hash;
    r.timestamp = iso_timestamp();
    return r;
}

// ------------------------------------------------------------ CLI commands

/// Generate all frames of a scenario into a dataset directory with a manifest.
inline fs::path cmd_simulate(const Scenario& s, const fs::path& out_dir, std::size_t threads = 1) {
    const SimContext ctx = make_context(s);
    fs::create_directories(out_dir);

    nlohmann::json recordings = nlohmann::json::array();
    for (std::size_t dom = 0; dom < s.domains.size(); ++dom) {
        fs::create_directories(out_dir / s.domains[dom].name);
        const std::size_t total = s.n_devices * s.frames_per_device_per_domain;
        std::vector<std::string> rel_paths(total);
        parallel_for(total, threads, [&](std::size_t i) {
            const std::size_t dev = i / s.frames_per_device_per_domain;
            const std::size_t frame_idx = i % s.frames_per_device_per_domain;
            const IQFrame frame = simulate_frame(ctx, dev, dom, frame_idx);
            const std::string rel = s.domains[dom].name + "/" + ctx.population[dev].device_id +
                                    "_f" + std::to_string(frame_idx) + ".iq";
            write_recording(frame, out_dir / rel);
            rel_paths[i] = rel;
        });
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t dev = i / s.frames_per_device_per_domain;
            recordings.push_back({{"path", rel_paths[i]},
                                  {"device_id", ctx.population[dev].device_id},
                                  {"domain", s.domains[dom].name}});
        }
    }

    nlohmann::json manifest{{"format_version", kFormatVersion},
                            {"scenario", scenario_to_json(s)},
                            {"recordings", recordings}};
    const fs::path manifest_path = out_dir / "manifest.json";
    detail::store_json(manifest_path, manifest);
    return manifest_path;
}

/// Feature extraction over a simulated dataset; one feature file per domain.
inline std::vector<fs::path> cmd_extract(const fs::path& dataset_dir, const Scenario& s,
                                         Representation repr, const fs::path& out_dir,
                                         std::size_t threads = 1) {
    const nlohmann::json manifest = detail::load_json(dataset_dir / "manifest.json");
    fs::create_directories(out_dir);
    const std::string hash =
        repr == Representation::Eps ? eps_config_hash(s.eps)
                                    : ("raw-iq-" + std::to_string(s.raw_iq_window));

    std::map<std::string, std::vector<nlohmann::json>> by_domain;
    for (const auto& rec : manifest.at("recordings"))
        by_domain[rec.at("domain").get<std::string>()].push_back(rec);

    std::vector<fs::path> outputs;
    for (const auto& [domain, recs] : by_domain) {
        const fs::path out_path = out_dir / (domain + "." + representation_name(repr) + ".features");
        if (fs::exists(sidecar_path(out_path))) {
            const nlohmann::json side = detail::load_json(sidecar_path(out_path));
            if (side.at("config_hash").get<std::string>() != hash)
                throw std::runtime_error(out_path.string() +
                                         ": existing feature file was built with a different config");
        }
        std::vector<std::vector<double>> rows(recs.size());
        std::vector<std::string> labels(recs.size());
        parallel_for(recs.size(), threads, [&](std::size_t i) {
            const IQFrame frame =
                read_recording(dataset_dir / recs[i].at("path").get<std::string>());
            rows[i] = feature_row(frame, s, repr);
            labels[i] = recs[i].at("device_id").get<std::string>();
        });
        FeatureMatrix fm;
        for (std::size_t i = 0; i < recs.size(); ++i)
            fm.append(std::move(rows[i]), std::move(labels[i]), domain);
        write_feature_set(fm, out_path, hash);
        outputs.push_back(out_path);
    }
    return outputs;
}

/// Evaluate train/test feature files; same path => k-fold same-domain CV.
inline std::vector<fs::path> cmd_evaluate(const fs::path& train_path,
                                          const std::vector<fs::path>& test_paths,
                                          const ClassifierOptions& opt, std::size_t k_folds,
                                          const fs::path& out_dir, RngStream rng) {
    const FeatureSet train = read_feature_set(train_path);
    fs::create_directories(out_dir);

    auto domain_of = [](const FeatureSet& set, const fs::path& p) {
        return set.features.domain_tags.empty() ? p.stem().string()
                                                : set.features.domain_tags.front();
    };
    auto repr_of = [](const fs::path& p) {
        const std::string stem = p.stem().string(); // "<domain>.<repr>"
        const auto dotpos = stem.rfind('.');
        return dotpos == std::string::npos ? std::string("eps") : stem.substr(dotpos + 1);
    };

    std::vector<fs::path> outputs;
    for (const auto& test_path : test_paths) {
        EvalReport report;
        if (fs::equivalent(train_path, test_path)) {
            report = evaluate_same_domain(train.features, domain_of(train, train_path), opt,
                                          k_folds, rng, train.config_hash, repr_of(train_path));
        } else {
            const FeatureSet test = read_feature_set(test_path);
            if (test.config_hash != train.config_hash)
                throw std::runtime_error("evaluate: train and test feature configs differ");
            report = evaluate_cross_domain(train.features, test.features,
                                           domain_of(train, train_path), domain_of(test, test_path),
                                           opt, train.config_hash, repr_of(train_path));
        }
        const std::string base = "report_" + report.train_domain + "_vs_" + report.test_domain +
                                 "_" + report.representation + "_" + report.model;
        const fs::path json_path = out_dir / (base + ".json");
        detail::store_json(json_path, report_to_json(report));
        write_confusion_csv(report.confusion, out_dir / (base + ".confusion.csv"));
        outputs.push_back(json_path);
    }
    return outputs;
}

struct WarmupPoint {
    double capture_time_s = 0.0;
    double accuracy = 0.0;
};

struct WarmupResult {
    std::vector<WarmupPoint> series; // one per requested capture time
    double baseline_accuracy = 0.0;  // same-domain CV at the training time
};

/**
 * Warm-up drift experiment: train at the last (stabilized) capture time,
 * test at each earlier time. Uses the scenario's first wired domain (or the
 * first domain if none is wired).
 */
inline WarmupResult run_warmup(const Scenario& s, const std::vector<double>& capture_times,
                               std::size_t threads = 1) {
    if (capture_times.size() < 2)
        throw std::invalid_argument("warmup: need at least 2 capture times");
    for (std::size_t i = 1; i < capture_times.size(); ++i)
        if (capture_times[i] <= capture_times[i - 1])
            throw std::invalid_argument("warmup: capture times must be strictly increasing");

    const SimContext ctx = make_context(s);
    std::size_t dom = 0;
    for (std::size_t d = 0; d < s.domains.size(); ++d)
        if (s.domains[d].preset == DomainPreset::Wired) {
            dom = d;
            break;
        }

    const double train_time = capture_times.back();
    const FeatureMatrix train = build_domain_features(ctx, dom, Representation::Eps, threads, 0,
                                                      train_time);
    const ClassifierOptions opt = classifier_options(s);

    // baseline: same-domain CV at the stabilized time
    const CrossvalResult cv = crossval(train, s.k_folds, opt, RngStream(s.seed, 6));
    WarmupResult result;
    result.baseline_accuracy = cv.mean_accuracy;

    for (double t : capture_times) {
        // test frames use distinct frame indices so noise differs from training
        SimContext test_ctx = ctx;
        FeatureMatrix test;
        {
            const std::size_t fpd = s.frames_per_device_per_domain;
            const std::size_t total = s.n_devices * fpd;
            std::vector<std::vector<double>> rows(total);
            std::vector<std::string> labels(total);
            parallel_for(total, threads, [&](std::size_t i) {
                const std::size_t dev = i / fpd;
                const std::size_t frame_idx = fpd + (i % fpd); // disjoint from train indices
                const IQFrame frame = simulate_frame(test_ctx, dev, dom, frame_idx, t);
                rows[i] = feature_row(frame, s, Representation::Eps);
                labels[i] = ctx.population[dev].device_id;
            });
            for (std::size_t i = 0; i < total; ++i)
                test.append(std::move(rows[i]), std::move(labels[i]), s.domains[dom].name);
        }
        const EvalReport r = evaluate_cross_domain(train, test, "stabilized", "t" + std::to_string(t),
                                                   opt, eps_config_hash(s.eps), "eps");
        result.series.push_back({t, r.mean_accuracy});
    }
    return result;
}

inline fs::path cmd_warmup(const Scenario& s, const std::vector<double>& capture_times,
                           const fs::path& out_dir, std::size_t threads = 1) {
    const WarmupResult result = run_warmup(s, capture_times, threads);
    fs::create_directories(out_dir);
    nlohmann::json series = nlohmann::json::array();
    for (const auto& p : result.series)
        series.push_back({{"capture_time_s", p.capture_time_s}, {"accuracy", p.accuracy}});
    nlohmann::json j{{"format_version", kFormatVersion},
                     {"baseline_accuracy", result.baseline_accuracy},
                     {"series", series},
                     {"tool_version", kToolVersion},
                     {"timestamp", iso_timestamp()}};
    const fs::path path = out_dir / "warmup_report.json";
    detail::store_json(path, j);
    return path;
}

/// Merge evaluation reports into one summary table; optionally emit mean EPS
/// per device per domain from feature files for external plotting.
inline std::vector<fs::path> cmd_report(const std::vector<fs::path>& report_paths,
                                        const std::vector<fs::path>& feature_paths,
                                        const fs::path& out_dir) {
    if (report_paths.empty()) throw std::invalid_argument("report: need at least one report file");
    fs::create_directories(out_dir);

    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::string> warnings;
    for (const auto& p : report_paths) {
        const EvalReport r = report_from_json(detail::load_json(p));
        if (r.tool_version != kToolVersion)
            warnings.push_back(p.string() + ": tool version " + r.tool_version +
                               " differs from " + kToolVersion);
        rows.push_back({{"train_domain", r.train_domain},
                        {"test_domain", r.test_domain},
                        {"model", r.model},
                        {"representation", r.representation},
                        {"same_domain", r.same_domain},
                        {"mean_accuracy", r.mean_accuracy}});
    }
    nlohmann::json summary{{"format_version", kFormatVersion},
                           {"rows", rows},
                           {"warnings", warnings},
                           {"tool_version", kToolVersion},
                           {"timestamp", iso_timestamp()}};
    std::vector<fs::path> outputs;
    const fs::path json_path = out_dir / "summary.json";
    detail::store_json(json_path, summary);
    outputs.push_back(json_path);

    {
        const fs::path csv_path = out_dir / "summary.csv";
        std::ofstream os(csv_path);
        os << "train_domain,test_domain,model,representation,same_domain,mean_accuracy\n";
        for (const auto& row : rows)
            os << row.at("train_domain").get<std::string>() << ","
               << row.at("test_domain").get<std::string>() << ","
               << row.at("model").get<std::string>() << ","
               << row.at("representation").get<std::string>() << ","
               << (row.at("same_domain").get<bool>() ? "true" : "false") << ","
               << row.at("mean_accuracy").get<double>() << "\n";
        outputs.push_back(csv_path);
    }

    if (!feature_paths.empty()) {
        const fs::path csv_path = out_dir / "mean_features.csv";
        std::ofstream os(csv_path);
        os << "domain,device";
        bool header_done = false;
        for (const auto& p : feature_paths) {
            const FeatureSet set = read_feature_set(p);
            if (!header_done) {
                for (std::size_t c = 0; c < set.features.dim(); ++c) os << ",f" << c;
                os << "\n";
                header_done = true;
            }
            std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
            for (std::size_t i = 0; i < set.features.size(); ++i) {
                auto& slot = sums[set.features.labels[i]];
                if (slot.first.empty()) slot.first.assign(set.features.dim(), 0.0);
                for (std::size_t c = 0; c < set.features.dim(); ++c)
                    slot.first[c] += set.features.rows[i][c];
                ++slot.second;
            }
            const std::string domain =
                set.features.domain_tags.empty() ? p.stem().string() : set.features.domain_tags[0];
            for (const auto& [device, slot] : sums) {
                os << domain << "," << device;
                for (double v : slot.first) os << "," << v / static_cast<double>(slot.second);
                os << "\n";
            }
        }
        outputs.push_back(csv_path);
    }
    return outputs;
}

} // namespace eps

#endif
