// Organizing a feature map on synthetic data.
//
// Draws points from three planar clusters, trains an 8x8 map with one pass
// over the samples, and prints which cluster each node ends up serving. The
// quantization error is reported before and after so the improvement is
// visible; the program exits nonzero if training did not help.

#include <algorithm>
#include <cstdio>
#include <random>
#include <utility>
#include <vector>

#include <somnav/som.hpp>

namespace {

somnav::InputVector point(double x, double y) {
    auto clip = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return somnav::InputVector({clip(x), clip(y)});
}

}  // namespace

int main() {
    const std::vector<std::pair<double, double>> centers = {
        {0.2, 0.2}, {0.8, 0.3}, {0.5, 0.85}};

    std::mt19937 rng(7);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<somnav::InputVector> samples;
    samples.reserve(1500);
    for (int i = 0; i < 1500; ++i) {
        const auto& [cx, cy] = centers[static_cast<std::size_t>(i) % centers.size()];
        samples.push_back(point(cx + noise(rng), cy + noise(rng)));
    }

    somnav::SomConfig cfg;
    cfg.width = 8;
    cfg.height = 8;
    cfg.dim = 2;
    cfg.alpha_winner = 0.9;
    cfg.alpha_neighbor = 0.4;
    cfg.seed = 1;
    somnav::SomMap map(cfg);

    const double qe_before = map.quantization_error(samples);
    for (const somnav::InputVector& s : samples) {
        map.train_step(s);
    }
    const double qe_after = map.quantization_error(samples);

    std::printf("quantization error: %.4f untrained, %.4f after one pass\n",
                qe_before, qe_after);

    // Label each node with the cluster center nearest to its ideal input; an
    // organized map shows three contiguous patches.
    std::printf("\nnode ownership (a/b/c = cluster):\n");
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            std::span<const double> w = map.weight(r * cfg.width + c);
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double dx = w[0] - centers[k].first;
                const double dy = w[1] - centers[k].second;
                if (dx * dx + dy * dy < best_d) {
                    best_d = dx * dx + dy * dy;
                    best = static_cast<int>(k);
                }
            }
            std::putchar('a' + best);
        }
        std::putchar('\n');
    }

    const somnav::NodeId na = map.activate(point(0.2, 0.2));
    const somnav::NodeId nb = map.activate(point(0.8, 0.3));
    const somnav::NodeId nc = map.activate(point(0.5, 0.85));
    std::printf("\ncluster centers activate nodes %d, %d and %d\n", na, nb, nc);

    if (!(qe_after < qe_before) || na == nb || nb == nc || na == nc) {
        std::printf("map failed to organize\n");
        return 1;
    }
    return 0;
}
