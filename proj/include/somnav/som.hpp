#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace somnav {

/// Index of an output node on the map grid, row-major: node (r,c) = r*width + c.
using NodeId = std::int32_t;

/// A sensory vector with every component in [0,1]. Range is checked once,
/// at construction; everything downstream may assume it.
class InputVector {
public:
    InputVector() = default;

    explicit InputVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw std::invalid_argument("InputVector: empty vector");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument("InputVector: value out of [0,1] at index " +
                                            std::to_string(i));
            }
        }
    }

    int dim() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

    friend bool operator==(const InputVector& a, const InputVector& b) {
        return a.values_ == b.values_;
    }

private:
    std::vector<double> values_;
};

/// Euclidean distance between two equal-length vectors.
inline double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("distance: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double distance(const InputVector& a, const InputVector& b) {
    return distance(std::span<const double>(a.values()), std::span<const double>(b.values()));
}

struct SomConfig {
    int width = 10;   ///< grid columns
    int height = 10;  ///< grid rows
    int dim = 16;     ///< input vector length
    double alpha_winner = 0.9;
    double alpha_neighbor = 0.4;
    std::uint64_t seed = 0;

    int node_count() const { return width * height; }

    void validate() const {
        if (width < 1 || height < 1 || dim < 1) {
            throw std::invalid_argument("SomConfig: width, height and dim must be >= 1");
        }
        if (!(alpha_neighbor > 0.0 && alpha_winner <= 1.0 && alpha_neighbor <= alpha_winner)) {
            throw std::invalid_argument(
                "SomConfig: learning rates must satisfy 0 < alpha_neighbor <= alpha_winner <= 1");
        }
    }
};

/// The map itself: one "ideal input" vector per grid node, competitive
/// activation, and the constant-time training update.
///
/// Activation cost is always width*height distance evaluations, no matter
/// how long the map has been trained; the running evaluation counter makes
/// that measurable. A version counter ticks on every training step so that
/// consumers keyed to node identities can detect drift.
class SomMap {
public:
    explicit SomMap(SomConfig config) : cfg_(config) {
        cfg_.validate();
        weights_.resize(static_cast<std::size_t>(cfg_.node_count()) * cfg_.dim);
        // Deterministic uniform [0,1] init. The raw-bits mapping keeps the
        // stream identical across standard libraries.
        std::uint64_t state = cfg_.seed;
        for (double& w : weights_) {
            w = next_unit(state);
        }
    }

    /// Rebuild from stored weights (deserialization).
    SomMap(SomConfig config, std::vector<double> weights, std::uint64_t version)
        : cfg_(config), weights_(std::move(weights)), version_(version) {
        cfg_.validate();
        if (weights_.size() != static_cast<std::size_t>(cfg_.node_count()) * cfg_.dim) {
            throw std::invalid_argument("SomMap: weight buffer does not match width*height*dim");
        }
        for (double w : weights_) {
            if (!(w >= 0.0 && w <= 1.0)) {
                throw std::invalid_argument("SomMap: weight out of [0,1]");
            }
        }
    }

    const SomConfig& config() const { return cfg_; }
    int node_count() const { return cfg_.node_count(); }
    int dim() const { return cfg_.dim; }

    std::span<const double> weight(NodeId n) const {
        check_node(n);
        return {weights_.data() + static_cast<std::size_t>(n) * cfg_.dim,
                static_cast<std::size_t>(cfg_.dim)};
    }

    const std::vector<double>& raw_weights() const { return weights_; }

    /// The node whose ideal input is nearest to the input; ties go to the
    /// smaller index.
    NodeId activate(const InputVector& input) const {
        check_dim(input);
        NodeId best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (NodeId n = 0; n < node_count(); ++n) {
            const double d = distance(weight_unchecked(n),
                                      std::span<const double>(input.values()));
            if (d < best_dist) {
                best_dist = d;
                best = n;
            }
        }
        distance_evals_ += static_cast<std::uint64_t>(node_count());
        return best;
    }

    /// Existing up/down/left/right grid neighbors, ascending index. Borders
    /// are clamped, so corners get 2 and edges 3.
    std::vector<NodeId> cardinal_neighbors(NodeId n) const {
        check_node(n);
        const int r = n / cfg_.width;
        const int c = n % cfg_.width;
        std::vector<NodeId> out;
        out.reserve(4);
        if (r > 0) out.push_back(n - cfg_.width);
        if (c > 0) out.push_back(n - 1);
        if (c + 1 < cfg_.width) out.push_back(n + 1);
        if (r + 1 < cfg_.height) out.push_back(n + cfg_.width);
        return out;
    }

    /// One training presentation: the winner (found on pre-update weights)
    /// moves toward the input with alpha_winner, its cardinal neighbors with
    /// alpha_neighbor. Returns the winner.
    NodeId train_step(const InputVector& input) {
        const NodeId winner = activate(input);
        pull_toward(winner, input, cfg_.alpha_winner);
        for (NodeId nb : cardinal_neighbors(winner)) {
            pull_toward(nb, input, cfg_.alpha_neighbor);
        }
        ++version_;
        return winner;
    }

    /// Mean distance from each input to its winner's ideal input.
    double quantization_error(const std::vector<InputVector>& inputs) const {
        if (inputs.empty()) {
            throw std::invalid_argument("quantization_error: empty input set");
        }
        double total = 0.0;
        for (const InputVector& in : inputs) {
            const NodeId w = activate(in);
            total += distance(weight_unchecked(w), std::span<const double>(in.values()));
        }
        return total / static_cast<double>(inputs.size());
    }

    std::uint64_t version() const { return version_; }
    std::uint64_t distance_evaluations() const { return distance_evals_; }

private:
    std::span<const double> weight_unchecked(NodeId n) const {
        return {weights_.data() + static_cast<std::size_t>(n) * cfg_.dim,
                static_cast<std::size_t>(cfg_.dim)};
    }

    void pull_toward(NodeId n, const InputVector& input, double alpha) {
        double* w = weights_.data() + static_cast<std::size_t>(n) * cfg_.dim;
        for (int j = 0; j < cfg_.dim; ++j) {
            w[j] += alpha * (input[j] - w[j]);
        }
    }

    void check_node(NodeId n) const {
        if (n < 0 || n >= node_count()) {
            throw std::out_of_range("SomMap: node " + std::to_string(n) +
                                    " outside [0," + std::to_string(node_count()) + ")");
        }
    }

    void check_dim(const InputVector& input) const {
        if (input.dim() != cfg_.dim) {
            throw std::invalid_argument("SomMap: input dim " + std::to_string(input.dim()) +
                                        " != map dim " + std::to_string(cfg_.dim));
        }
    }

    // splitmix64 stepped into a 53-bit mantissa; stable across platforms.
    static double next_unit(std::uint64_t& state) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    SomConfig cfg_;
    std::vector<double> weights_;
    std::uint64_t version_ = 0;
    mutable std::uint64_t distance_evals_ = 0;
};

}  // namespace somnav
