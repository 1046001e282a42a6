#include "shdebias/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "shdebias/error.hpp"
#include "shdebias/rng.hpp"

namespace shdebias {

namespace {

void require_points(const std::vector<std::vector<double>>& points, const char* what) {
    if (points.empty()) throw PreconditionError(std::string(what) + ": no points");
    const std::size_t dim = points[0].size();
    if (dim == 0) throw PreconditionError(std::string(what) + ": zero-dimensional points");
    for (const auto& p : points) {
        if (p.size() != dim)
            throw PreconditionError(std::string(what) + ": inconsistent dimensions");
        for (double v : p)
            if (!std::isfinite(v))
                throw PreconditionError(std::string(what) + ": non-finite input");
    }
}

Eigen::MatrixXd squared_distances(const std::vector<std::vector<double>>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto dim = static_cast<Eigen::Index>(points[0].size());
    Eigen::MatrixXd x(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < dim; ++k) x(i, k) = points[i][k];
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (x.row(i) - x.row(j)).squaredNorm();
            d2(i, j) = d;
            d2(j, i) = d;
        }
    }
    return d2;
}

struct ConditionalAffinities {
    Eigen::MatrixXd p;               // row-conditional, zero diagonal, rows sum to 1
    std::vector<double> row_entropy;  // nats
};

// Per-row precision (beta = 1 / 2 sigma^2) bisection until the conditional
// entropy matches log(perplexity) within 1e-5, at most 50 steps.
ConditionalAffinities conditional_affinities(const Eigen::MatrixXd& d2, double perplexity) {
    const Eigen::Index n = d2.rows();
    const double log_u = std::log(perplexity);
    ConditionalAffinities out;
    out.p = Eigen::MatrixXd::Zero(n, n);
    out.row_entropy.assign(static_cast<std::size_t>(n), 0.0);

    Eigen::VectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0;
        double beta_min = -std::numeric_limits<double>::infinity();
        double beta_max = std::numeric_limits<double>::infinity();
        double entropy = 0.0;
        for (int step = 0; step < 50; ++step) {
            double sum_p = 0.0, sum_dp = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double v = (j == i) ? 0.0 : std::exp(-d2(i, j) * beta);
                row(j) = v;
                sum_p += v;
                sum_dp += d2(i, j) * v;
            }
            entropy = std::log(sum_p) + beta * sum_dp / sum_p;
            const double diff = entropy - log_u;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0.0) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
        }
        const double sum_p = row.sum();
        out.p.row(i) = row.transpose() / sum_p;
        out.row_entropy[static_cast<std::size_t>(i)] = entropy;
    }
    return out;
}

void require_tsne_input(const std::vector<std::vector<double>>& points, const TsneConfig& cfg) {
    require_points(points, "tsne");
    if (!(cfg.perplexity > 1.0))
        throw PreconditionError("tsne: perplexity must be > 1");
    if (cfg.iterations < 1 || cfg.learning_rate <= 0.0 || cfg.early_exaggeration < 1.0)
        throw PreconditionError("tsne: bad schedule configuration");
    if (static_cast<double>(points.size()) <= 3.0 * cfg.perplexity)
        throw PreconditionError("tsne: need more than 3 * perplexity points");
}

}  // namespace

Coords2 tsne(const std::vector<std::vector<double>>& points, const TsneConfig& cfg) {
    require_tsne_input(points, cfg);
    const std::size_t n = points.size();
    const Eigen::MatrixXd d2 = squared_distances(points);
    const ConditionalAffinities cond = conditional_affinities(d2, cfg.perplexity);

    // Symmetrize to a joint distribution summing to 1, floored at 1e-12.
    Eigen::MatrixXd p = (cond.p + cond.p.transpose()) / (2.0 * static_cast<double>(n));
    p = p.cwiseMax(1e-12);
    p.diagonal().setZero();
    p *= cfg.early_exaggeration;

    Rng rng(cfg.seed);
    std::vector<std::array<double, 2>> y(n), inc(n, {0.0, 0.0}), gain(n, {1.0, 1.0});
    for (std::size_t i = 0; i < n; ++i) {
        y[i][0] = rng.gaussian(0.0, 1e-4);
        y[i][1] = rng.gaussian(0.0, 1e-4);
    }

    Eigen::MatrixXd num(n, n);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (iter == cfg.exaggeration_iters) p /= cfg.early_exaggeration;

        double sum_num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = y[i][0] - y[j][0];
                const double dy = y[i][1] - y[j][1];
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num(i, j) = v;
                num(j, i) = v;
                sum_num += 2.0 * v;
            }
        }

        // Full gradient from the current snapshot, then one batched update.
        std::vector<std::array<double, 2>> grad(n, {0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double q = std::max(num(i, j) / sum_num, 1e-12);
                const double mult = 4.0 * (p(i, j) - q) * num(i, j);
                grad[i][0] += mult * (y[i][0] - y[j][0]);
                grad[i][1] += mult * (y[i][1] - y[j][1]);
            }
        }

        const double momentum =
            iter < cfg.exaggeration_iters ? cfg.momentum_initial : cfg.momentum_final;
        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < 2; ++k) {
                const double g = grad[i][k];
                gain[i][k] = (g > 0.0) != (inc[i][k] > 0.0) ? gain[i][k] + 0.2
                                                            : gain[i][k] * 0.8;
                gain[i][k] = std::max(gain[i][k], 0.01);
                inc[i][k] = momentum * inc[i][k] - cfg.learning_rate * gain[i][k] * g;
                y[i][k] += inc[i][k];
            }
            mean0 += y[i][0];
            mean1 += y[i][1];
        }
        mean0 /= static_cast<double>(n);
        mean1 /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i][0] -= mean0;
            y[i][1] -= mean1;
        }
    }
    return y;
}

std::vector<double> tsne_row_perplexities(const std::vector<std::vector<double>>& points,
                                          const TsneConfig& cfg) {
    require_tsne_input(points, cfg);
    const ConditionalAffinities cond =
        conditional_affinities(squared_distances(points), cfg.perplexity);
    std::vector<double> out(cond.row_entropy.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(cond.row_entropy[i]);
    return out;
}

Coords2 pca2(const std::vector<std::vector<double>>& points) {
    require_points(points, "pca2");
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 2) throw PreconditionError("pca2: need at least 2 points");
    const auto dim = static_cast<Eigen::Index>(points[0].size());
    Eigen::MatrixXd x(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < dim; ++k) x(i, k) = points[i][k];
    x.rowwise() -= x.colwise().mean();

    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error("pca2: eigendecomposition failed");

    Coords2 out(static_cast<std::size_t>(n), {0.0, 0.0});
    for (int comp = 0; comp < 2 && comp < dim; ++comp) {
        Eigen::VectorXd v = eig.eigenvectors().col(dim - 1 - comp);
        // Deterministic sign: the largest-magnitude loading is positive.
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < dim; ++k)
            if (std::abs(v(k)) > std::abs(v(arg))) arg = k;
        if (v(arg) < 0.0) v = -v;
        const Eigen::VectorXd proj = x * v;
        for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][comp] = proj(i);
    }
    return out;
}

Coords2 band0_scatter(const std::vector<double>& values, std::uint64_t seed) {
    if (values.empty()) throw PreconditionError("band0_scatter: no values");
    Rng rng(seed);
    Coords2 out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw PreconditionError("band0_scatter: non-finite value");
        out[i] = {values[i], rng.uniform()};
    }
    return out;
}

std::vector<std::size_t> analysis_protocol(const std::vector<SkinTone>& labels, int per_class,
                                           std::uint64_t seed) {
    if (per_class < 1) throw PreconditionError("analysis_protocol: per_class must be >= 1");
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(per_class) * kToneCount);
    for (SkinTone tone : all_tones()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == tone) idx.push_back(i);
        if (idx.size() < static_cast<std::size_t>(per_class))
            throw PreconditionError("analysis_protocol: class '" + tone_name(tone) +
                                    "' has fewer than per_class items");
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(tone)}));
        for (std::size_t j = 0; j < static_cast<std::size_t>(per_class); ++j) {
            const std::size_t pick = j + rng.below(idx.size() - j);
            std::swap(idx[j], idx[pick]);
        }
        idx.resize(static_cast<std::size_t>(per_class));
        std::sort(idx.begin(), idx.end());
        out.insert(out.end(), idx.begin(), idx.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace shdebias
