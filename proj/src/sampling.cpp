#include "marom/sampling.hpp"

#include "marom/error.hpp"
#include "marom/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace marom {
namespace {

// Squared distances between cells in unit-cube units; only the strict upper
// triangle is kept current.
struct DistanceTable {
    Index n;
    std::vector<double> d2;

    double& at(Index i, Index j) { return d2[static_cast<std::size_t>(i * n + j)]; }

    // Minimum and its multiplicity.
    std::pair<double, Index> score() const {
        double best = std::numeric_limits<double>::infinity();
        Index count = 0;
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j) {
                const double v = d2[static_cast<std::size_t>(i * n + j)];
                if (v < best) {
                    best = v;
                    count = 1;
                } else if (v == best) {
                    ++count;
                }
            }
        return {best, count};
    }
};

double cell_sq_distance(const std::vector<std::vector<Index>>& cols, Index i, Index j, Index n) {
    double s = 0.0;
    for (const auto& c : cols) {
        const double d = static_cast<double>(c[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(j)]) /
                         static_cast<double>(n);
        s += d * d;
    }
    return s;
}

void refresh_rows(DistanceTable& t, const std::vector<std::vector<Index>>& cols, Index a, Index b) {
    for (Index r : {a, b})
        for (Index o = 0; o < t.n; ++o) {
            if (o == r) continue;
            const double v = cell_sq_distance(cols, r, o, t.n);
            if (r < o)
                t.at(r, o) = v;
            else
                t.at(o, r) = v;
        }
}

}  // namespace

std::vector<std::vector<Index>> lhs_bins(Index n, Index b, std::uint64_t seed, int optimize_iters, LhsTrace* trace) {
    if (n < 1) throw UsageError("LHS sample count must be at least 1");
    if (b < 1) throw UsageError("LHS needs at least one dimension");
    Rng rng(seed);

    // cols[dim][sample] = bin index; each column is a permutation of 0..n-1.
    std::vector<std::vector<Index>> cols(static_cast<std::size_t>(b), std::vector<Index>(static_cast<std::size_t>(n)));
    for (auto& c : cols) {
        std::iota(c.begin(), c.end(), Index{0});
        for (Index i = n - 1; i > 0; --i)
            std::swap(c[static_cast<std::size_t>(i)], c[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    if (n < 2) {
        if (trace) *trace = LhsTrace{};
        return cols;
    }

    DistanceTable table{n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0)};
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) table.at(i, j) = cell_sq_distance(cols, i, j, n);
    auto current = table.score();
    LhsTrace local;
    local.initial_min_distance = std::sqrt(current.first);

    for (int it = 0; it < optimize_iters; ++it) {
        auto& c = cols[rng.below(static_cast<std::uint64_t>(b))];
        const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
        if (j >= i) ++j;
        std::swap(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
        refresh_rows(table, cols, i, j);
        const auto candidate = table.score();
        // Larger minimum wins; at equal minimum, fewer pairs at that distance.
        const bool better = candidate.first > current.first ||
                            (candidate.first == current.first && candidate.second < current.second);
        if (better) {
            current = candidate;
            ++local.accepted_swaps;
            local.accepted_scores.push_back(std::sqrt(current.first));
        } else {
            std::swap(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
            refresh_rows(table, cols, i, j);
        }
    }
    local.final_min_distance = std::sqrt(current.first);
    if (trace) *trace = std::move(local);
    return cols;
}

DesignMatrix lhs_maximin(const LhsConfig& config, LhsTrace* trace) {
    const Index b = static_cast<Index>(config.bounds.size());
    for (const auto& bd : config.bounds)
        if (!(bd.lower < bd.upper)) throw UsageError("LHS bounds need lower < upper in every dimension");
    const auto cols = lhs_bins(config.n, b, config.seed, config.optimize_iters, trace);

    Eigen::MatrixXd values(b, config.n);
    for (Index d = 0; d < b; ++d) {
        const Bounds& bd = config.bounds[static_cast<std::size_t>(d)];
        for (Index j = 0; j < config.n; ++j) {
            const double u = (static_cast<double>(cols[static_cast<std::size_t>(d)][static_cast<std::size_t>(j)]) + 0.5) /
                             static_cast<double>(config.n);
            values(d, j) = bd.lower + u * bd.range();
        }
    }
    return DesignMatrix(std::move(values), config.names, config.bounds);
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < points.cols(); ++i)
        for (Index j = i + 1; j < points.cols(); ++j) best = std::min(best, (points.col(i) - points.col(j)).norm());
    return best;
}

}  // namespace marom
