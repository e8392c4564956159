#ifndef EPS_CLASSIFIER_HPP
#define EPS_CLASSIFIER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "eps/rng.hpp"
#include "eps/vecmath.hpp"

namespace eps {

/// Rows of flattened feature vectors with device labels and domain tags.
struct FeatureMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    std::vector<std::string> domain_tags;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }

    void append(std::vector<double> row, std::string label, std::string domain_tag) {
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument("FeatureMatrix: inconsistent row length");
        rows.push_back(std::move(row));
        labels.push_back(std::move(label));
        domain_tags.push_back(std::move(domain_tag));
    }
};

inline void validate_features(const FeatureMatrix& f) {
    if (f.rows.size() != f.labels.size())
        throw std::invalid_argument("FeatureMatrix: label count differs from row count");
    for (const auto& r : f.rows)
        if (r.size() != f.dim())
            throw std::invalid_argument("FeatureMatrix: inconsistent row length");
}

/// Sorted distinct labels; classifiers use this order for tie-breaking.
inline std::vector<std::string> class_labels(const FeatureMatrix& f) {
    std::set<std::string> s(f.labels.begin(), f.labels.end());
    return std::vector<std::string>(s.begin(), s.end());
}

enum class Distance { Cosine, Euclidean };

struct Prediction {
    std::vector<std::string> labels;
    std::vector<double> scores;
};

// ---------------------------------------------------------------- centroid

struct CentroidModel {
    std::vector<std::string> classes;            // sorted
    std::vector<std::vector<double>> centroids;  // one per class
    Distance distance = Distance::Cosine;
};

inline CentroidModel fit_centroid(const FeatureMatrix& train, Distance distance = Distance::Cosine) {
    validate_features(train);
    CentroidModel model;
    model.distance = distance;
    model.classes = class_labels(train);
    if (model.classes.size() < 2)
        throw std::invalid_argument("fit_centroid: need at least 2 classes");

    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < model.classes.size(); ++c) index[model.classes[c]] = c;

    model.centroids.assign(model.classes.size(), std::vector<double>(train.dim(), 0.0));
    std::vector<std::size_t> counts(model.classes.size(), 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const std::size_t c = index.at(train.labels[i]);
        for (std::size_t j = 0; j < train.dim(); ++j) model.centroids[c][j] += train.rows[i][j];
        ++counts[c];
    }
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        if (counts[c] == 0)
            throw std::invalid_argument("fit_centroid: class without training rows");
        for (double& v : model.centroids[c]) v /= static_cast<double>(counts[c]);
    }
    return model;
}

inline Prediction predict(const CentroidModel& model, const FeatureMatrix& rows) {
    validate_features(rows);
    if (rows.dim() != model.centroids.front().size())
        throw std::invalid_argument("predict: feature dimension mismatch");
    Prediction out;
    for (const auto& row : rows.rows) {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < model.classes.size(); ++c) {
            const double score = model.distance == Distance::Cosine
                                     ? cosine_similarity(row, model.centroids[c])
                                     : -euclidean_distance(row, model.centroids[c]);
            // ties resolve to the lowest label order (classes are sorted)
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        out.labels.push_back(model.classes[best]);
        out.scores.push_back(best_score);
    }
    return out;
}

// -------------------------------------------------------------------- kNN

struct KnnModel {
    FeatureMatrix train;
    std::size_t k = 5;
};

inline KnnModel fit_knn(const FeatureMatrix& train, std::size_t k = 5) {
    validate_features(train);
    if (k == 0) throw std::invalid_argument("fit_knn: k must be >= 1");
    if (class_labels(train).size() < 2)
        throw std::invalid_argument("fit_knn: need at least 2 classes");
    return KnnModel{train, k};
}

inline Prediction predict(const KnnModel& model, const FeatureMatrix& rows) {
    validate_features(rows);
    if (rows.dim() != model.train.dim())
        throw std::invalid_argument("predict: feature dimension mismatch");
    Prediction out;
    const std::size_t k = std::min(model.k, model.train.size());
    for (const auto& row : rows.rows) {
        std::vector<std::pair<double, std::size_t>> sims(model.train.size());
        for (std::size_t i = 0; i < model.train.size(); ++i)
            sims[i] = {cosine_similarity(row, model.train.rows[i]), i};
        std::partial_sort(sims.begin(), sims.begin() + static_cast<long>(k), sims.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first; });
        // majority vote; ties broken by summed similarity, then label order
        std::map<std::string, std::pair<std::size_t, double>> votes;
        for (std::size_t j = 0; j < k; ++j) {
            auto& v = votes[model.train.labels[sims[j].second]];
            v.first += 1;
            v.second += sims[j].first;
        }
        std::string best;
        std::size_t best_count = 0;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (const auto& [label, v] : votes) {
            if (v.first > best_count || (v.first == best_count && v.second > best_sim)) {
                best = label;
                best_count = v.first;
                best_sim = v.second;
            }
        }
        out.labels.push_back(best);
        out.scores.push_back(best_sim / static_cast<double>(best_count));
    }
    return out;
}

// ---------------------------------------------------------------- softmax

struct SoftmaxHyper {
    double learning_rate = 0.1;
    std::size_t epochs = 100;
    double l2_weight = 1e-4;
    double momentum = 0.9;
    std::size_t batch_size = 64; // 0 = full batch
};

struct SoftmaxModel {
    std::vector<std::string> classes;
    std::vector<std::vector<double>> weights; // n_classes x dim
    std::vector<double> bias;                 // n_classes
};

/// Class probabilities for one row; each in [0,1], summing to 1.
inline std::vector<double> softmax_probabilities(const SoftmaxModel& m,
                                                 const std::vector<double>& row) {
    std::vector<double> logits(m.classes.size());
    for (std::size_t c = 0; c < m.classes.size(); ++c)
        logits[c] = dot(m.weights[c], row) + m.bias[c];
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : logits) v /= z;
    return logits;
}

namespace detail {

/// Cross-entropy loss with L2 penalty plus analytic gradient over a batch.
inline double softmax_loss_grad(const SoftmaxModel& m, const FeatureMatrix& data,
                                const std::vector<std::size_t>& batch,
                                const std::map<std::string, std::size_t>& index, double l2,
                                std::vector<std::vector<double>>& grad_w,
                                std::vector<double>& grad_b) {
    const std::size_t n_classes = m.classes.size();
    const std::size_t dim = data.dim();
    for (auto& g : grad_w) std::fill(g.begin(), g.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);

    double loss = 0.0;
    for (std::size_t i : batch) {
        const auto p = softmax_probabilities(m, data.rows[i]);
        const std::size_t y = index.at(data.labels[i]);
        loss -= std::log(std::max(p[y], 1e-300));
        for (std::size_t c = 0; c < n_classes; ++c) {
            const double err = p[c] - (c == y ? 1.0 : 0.0);
            for (std::size_t j = 0; j < dim; ++j) grad_w[c][j] += err * data.rows[i][j];
            grad_b[c] += err;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t j = 0; j < dim; ++j) {
            grad_w[c][j] = grad_w[c][j] * inv + l2 * m.weights[c][j];
            loss += 0.5 * l2 * m.weights[c][j] * m.weights[c][j];
        }
        grad_b[c] *= inv;
    }
    return loss;
}

} // namespace detail

/**
 * Mini-batch gradient descent with momentum on cross-entropy + L2.
 * Deterministic given the rng stream; aborts with a diagnostic if the loss
 * goes non-finite.
 */
inline SoftmaxModel fit_softmax(const FeatureMatrix& train, const SoftmaxHyper& hyper,
                                RngStream rng) {
    validate_features(train);
    SoftmaxModel model;
    model.classes = class_labels(train);
    if (model.classes.size() < 2)
        throw std::invalid_argument("fit_softmax: need at least 2 classes");
    const std::size_t n_classes = model.classes.size();
    const std::size_t dim = train.dim();
    model.weights.assign(n_classes, std::vector<double>(dim, 0.0));
    model.bias.assign(n_classes, 0.0);

    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < n_classes; ++c) index[model.classes[c]] = c;

    std::vector<std::vector<double>> vel_w(n_classes, std::vector<double>(dim, 0.0));
    std::vector<double> vel_b(n_classes, 0.0);
    std::vector<std::vector<double>> grad_w(n_classes, std::vector<double>(dim, 0.0));
    std::vector<double> grad_b(n_classes, 0.0);

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch_size = hyper.batch_size == 0 ? train.size() : hyper.batch_size;

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            std::vector<std::size_t> batch(order.begin() + static_cast<long>(start),
                                           order.begin() + static_cast<long>(end));
            const double loss =
                detail::softmax_loss_grad(model, train, batch, index, hyper.l2_weight, grad_w, grad_b);
            if (!std::isfinite(loss))
                throw std::runtime_error(
                    "fit_softmax: loss diverged (non-finite); try a smaller learning rate");
            for (std::size_t c = 0; c < n_classes; ++c) {
                for (std::size_t j = 0; j < dim; ++j) {
                    vel_w[c][j] = hyper.momentum * vel_w[c][j] - hyper.learning_rate * grad_w[c][j];
                    model.weights[c][j] += vel_w[c][j];
                }
                vel_b[c] = hyper.momentum * vel_b[c] - hyper.learning_rate * grad_b[c];
                model.bias[c] += vel_b[c];
            }
        }
    }
    return model;
}

inline Prediction predict(const SoftmaxModel& model, const FeatureMatrix& rows) {
    validate_features(rows);
    if (rows.dim() != model.weights.front().size())
        throw std::invalid_argument("predict: feature dimension mismatch");
    Prediction out;
    for (const auto& row : rows.rows) {
        const auto p = softmax_probabilities(model, row);
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
            if (p[c] > p[best]) best = c;
        out.labels.push_back(model.classes[best]);
        out.scores.push_back(p[best]);
    }
    return out;
}

// ------------------------------------------------------------ evaluation

enum class ModelKind { Centroid, Knn, Softmax };

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "centroid") return ModelKind::Centroid;
    if (s == "knn") return ModelKind::Knn;
    if (s == "softmax") return ModelKind::Softmax;
    throw std::invalid_argument("unknown model kind: " + s);
}

inline std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Centroid: return "centroid";
        case ModelKind::Knn: return "knn";
        case ModelKind::Softmax: return "softmax";
    }
    throw std::invalid_argument("unknown model kind");
}

struct ClassifierOptions {
    ModelKind kind = ModelKind::Centroid;
    Distance distance = Distance::Cosine;
    std::size_t knn_k = 5;
    SoftmaxHyper softmax;
    RngStream rng;
};

inline Prediction train_and_predict(const FeatureMatrix& train, const FeatureMatrix& test,
                                    const ClassifierOptions& opt) {
    switch (opt.kind) {
        case ModelKind::Centroid: return predict(fit_centroid(train, opt.distance), test);
        case ModelKind::Knn: return predict(fit_knn(train, opt.knn_k), test);
        case ModelKind::Softmax: return predict(fit_softmax(train, opt.softmax, opt.rng), test);
    }
    throw std::invalid_argument("unknown model kind");
}

/// Confusion matrix over a fixed sorted label set; counts[true][pred].
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;

    explicit ConfusionMatrix(std::vector<std::string> cls = {})
        : classes(std::move(cls)),
          counts(classes.size(), std::vector<std::size_t>(classes.size(), 0)) {}

    void add(const std::vector<std::string>& truth, const std::vector<std::string>& pred) {
        std::map<std::string, std::size_t> index;
        for (std::size_t c = 0; c < classes.size(); ++c) index[classes[c]] = c;
        for (std::size_t i = 0; i < truth.size(); ++i)
            ++counts[index.at(truth[i])][index.at(pred[i])];
    }

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts)
            for (std::size_t v : row) t += v;
        return t;
    }

    std::size_t trace() const {
        std::size_t t = 0;
        for (std::size_t c = 0; c < classes.size(); ++c) t += counts[c][c];
        return t;
    }

    double accuracy() const {
        const std::size_t t = total();
        return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
    }

    std::vector<double> per_class_accuracy() const {
        std::vector<double> acc(classes.size(), 0.0);
        for (std::size_t c = 0; c < classes.size(); ++c) {
            std::size_t row_total = 0;
            for (std::size_t v : counts[c]) row_total += v;
            acc[c] = row_total == 0 ? 0.0
                                    : static_cast<double>(counts[c][c]) / static_cast<double>(row_total);
        }
        return acc;
    }
};

struct CrossvalResult {
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
    ConfusionMatrix confusion;
};

/**
 * Stratified k-fold cross-validation: each class's rows are shuffled with the
 * deterministic stream and dealt round-robin into folds.
 */
inline CrossvalResult crossval(const FeatureMatrix& features, std::size_t k_folds,
                               const ClassifierOptions& opt, RngStream rng) {
    validate_features(features);
    if (k_folds < 2) throw std::invalid_argument("crossval: k_folds must be >= 2");

    const std::vector<std::string> classes = class_labels(features);
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < features.size(); ++i) by_class[features.labels[i]].push_back(i);
    for (const auto& [label, idx] : by_class)
        if (idx.size() < k_folds)
            throw std::invalid_argument("crossval: class '" + label + "' has fewer rows than folds");

    std::vector<std::size_t> fold_of(features.size(), 0);
    for (auto& [label, idx] : by_class) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        for (std::size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = i % k_folds;
    }

    CrossvalResult result;
    result.confusion = ConfusionMatrix(classes);
    for (std::size_t fold = 0; fold < k_folds; ++fold) {
        FeatureMatrix train, test;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (fold_of[i] == fold)
                test.append(features.rows[i], features.labels[i], features.domain_tags[i]);
            else
                train.append(features.rows[i], features.labels[i], features.domain_tags[i]);
        }
        const Prediction pred = train_and_predict(train, test, opt);
        ConfusionMatrix fold_cm(classes);
        fold_cm.add(test.labels, pred.labels);
        result.fold_accuracies.push_back(fold_cm.accuracy());
        result.confusion.add(test.labels, pred.labels);
    }
    result.mean_accuracy = mean(result.fold_accuracies);
    return result;
}

} // namespace eps

#endif
