// Small neighbor-graph embedding in the UMAP style: fuzzy kNN graph, then
// SGD on attractive/repulsive forces. Exact kNN, so only for corpus-sized inputs.
#include "responsivity/clusterlab.hpp"

#include "responsivity/error.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace responsivity::clusterlab::detail {

std::pair<double, double> fit_umap_curve(double spread, double min_dist) {
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples);
    std::vector<double> ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        const double x = 3.0 * spread * i / (kSamples - 1);
        xs[static_cast<std::size_t>(i)] = x;
        ys[static_cast<std::size_t>(i)] = x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread);
    }
    // Levenberg-Marquardt on (a, b); x = 0 contributes nothing to the gradient.
    double a = 1.0;
    double b = 1.0;
    double mu = 1e-3;
    auto sse = [&](double pa, double pb) {
        double s = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            const double f = 1.0 / (1.0 + pa * std::pow(x, 2.0 * pb));
            s += (f - ys[static_cast<std::size_t>(i)]) * (f - ys[static_cast<std::size_t>(i)]);
        }
        return s;
    };
    double err = sse(a, b);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            if (x <= 0.0) continue;
            const double p = std::pow(x, 2.0 * b);
            const double denom = 1.0 + a * p;
            const double f = 1.0 / denom;
            const double r = f - ys[static_cast<std::size_t>(i)];
            Eigen::Vector2d g(-p / (denom * denom), -a * p * 2.0 * std::log(x) / (denom * denom));
            jtj += g * g.transpose();
            jtr += g * r;
        }
        bool improved = false;
        for (int tries = 0; tries < 20 && !improved; ++tries) {
            Eigen::Matrix2d damped = jtj;
            damped.diagonal() *= (1.0 + mu);
            const Eigen::Vector2d step = damped.ldlt().solve(-jtr);
            const double na = a + step(0);
            const double nb = b + step(1);
            if (na > 0 && nb > 0) {
                const double ne = sse(na, nb);
                if (ne < err) {
                    improved = true;
                    const bool converged = err - ne < 1e-14;
                    a = na;
                    b = nb;
                    err = ne;
                    mu *= 0.3;
                    if (converged) return {a, b};
                    break;
                }
            }
            mu *= 10.0;
        }
        if (!improved) break;
    }
    return {a, b};
}

namespace {

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

} // namespace

Eigen::MatrixXd umap_embed(const Eigen::MatrixXd& points, int dims, const UmapParams& params, std::uint64_t seed) {
    const int n = static_cast<int>(points.rows());
    if (n < 2) throw Error(ErrorKind::argument, "neighbor embedding needs at least 2 rows");
    const int k = std::min(params.n_neighbors, n - 1);

    // exact kNN, ties broken by index
    std::vector<std::vector<std::pair<double, int>>> knn(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> all;
        for (int j = 0; j < n; ++j) {
            if (j != i) all.emplace_back((points.row(i) - points.row(j)).norm(), j);
        }
        std::partial_sort(all.begin(), all.begin() + k, all.end());
        all.resize(static_cast<std::size_t>(k));
        knn[static_cast<std::size_t>(i)] = std::move(all);
    }

    // fuzzy membership strengths
    const double target = std::log2(static_cast<double>(k));
    std::map<std::pair<int, int>, double> directed;
    for (int i = 0; i < n; ++i) {
        const auto& nb = knn[static_cast<std::size_t>(i)];
        double rho = 0.0;
        for (const auto& [d, j] : nb) {
            if (d > 0.0) {
                rho = d;
                break;
            }
        }
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double sigma = 1.0;
        for (int it = 0; it < 64; ++it) {
            double s = 0.0;
            for (const auto& [d, j] : nb) s += std::exp(-std::max(0.0, d - rho) / sigma);
            if (std::abs(s - target) < 1e-5) break;
            if (s > target) {
                hi = sigma;
                sigma = (lo + hi) / 2.0;
            } else {
                lo = sigma;
                sigma = std::isinf(hi) ? sigma * 2.0 : (lo + hi) / 2.0;
            }
        }
        sigma = std::max(sigma, 1e-3 * (rho > 0 ? rho : 1.0));
        for (const auto& [d, j] : nb) {
            directed[{i, j}] = std::exp(-std::max(0.0, d - rho) / sigma);
        }
    }
    struct Edge {
        int head;
        int tail;
        double weight;
    };
    std::vector<Edge> edges;
    for (const auto& [key, w] : directed) {
        const auto [i, j] = key;
        auto back = directed.find({j, i});
        const double wb = back == directed.end() ? 0.0 : back->second;
        if (back != directed.end() && j < i) continue; // already added from the other side
        edges.push_back({i, j, w + wb - w * wb});
    }

    // Initial layout: leading principal axes scaled to [-10, 10], plus a
    // little seeded jitter so coincident points separate.
    responsivity::detail::Rng rng(seed);
    Eigen::MatrixXd y(n, dims);
    {
        const Eigen::RowVectorXd mean = points.colwise().mean();
        const Eigen::MatrixXd centered = points.rowwise() - mean;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered.transpose() * centered);
        Eigen::MatrixXd axes = solver.eigenvectors().rowwise().reverse();
        for (Eigen::Index c = 0; c < axes.cols(); ++c) {
            Eigen::Index arg = 0;
            axes.col(c).cwiseAbs().maxCoeff(&arg);
            if (axes(arg, c) < 0) axes.col(c) *= -1.0;
        }
        Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(n, dims);
        const int usable = std::min<int>(dims, static_cast<int>(axes.cols()));
        proj.leftCols(usable) = centered * axes.leftCols(usable);
        const double scale = proj.cwiseAbs().maxCoeff();
        if (scale > 0) proj *= 10.0 / scale;
        for (int i = 0; i < n; ++i) {
            for (int d = 0; d < dims; ++d) proj(i, d) += 1e-4 * (rng.uniform() - 0.5);
        }
        y = proj;
    }

    const auto [a, b] = fit_umap_curve(params.spread, params.min_dist);
    double max_w = 0.0;
    for (const Edge& e : edges) max_w = std::max(max_w, e.weight);
    const double epochs = params.n_epochs;
    std::vector<double> per_sample;
    std::vector<double> next_sample;
    std::vector<double> neg_per_sample;
    std::vector<double> next_neg;
    for (const Edge& e : edges) {
        const double eps = e.weight >= max_w / epochs ? max_w / e.weight : -1.0;
        per_sample.push_back(eps);
        next_sample.push_back(eps);
        neg_per_sample.push_back(eps / std::max(1, params.negative_sample_rate));
        next_neg.push_back(eps / std::max(1, params.negative_sample_rate));
    }

    std::vector<double> delta(static_cast<std::size_t>(dims));
    for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double alpha = 1.0 - static_cast<double>(epoch) / epochs;
        for (std::size_t ei = 0; ei < edges.size(); ++ei) {
            if (per_sample[ei] <= 0.0 || next_sample[ei] > epoch) continue;
            const int h = edges[ei].head;
            const int t = edges[ei].tail;
            double d2 = (y.row(h) - y.row(t)).squaredNorm();
            double coeff = 0.0;
            if (d2 > 0.0) {
                coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
            }
            for (int d = 0; d < dims; ++d) {
                const double g = clip(coeff * (y(h, d) - y(t, d)));
                y(h, d) += g * alpha;
                y(t, d) -= g * alpha;
            }
            next_sample[ei] += per_sample[ei];

            if (params.negative_sample_rate == 0) continue;
            const int negs = static_cast<int>((epoch - next_neg[ei]) / neg_per_sample[ei]);
            for (int s = 0; s < negs; ++s) {
                const int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                if (other == h) continue;
                d2 = (y.row(h) - y.row(other)).squaredNorm();
                coeff = d2 > 0.0 ? 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0)) : 0.0;
                for (int d = 0; d < dims; ++d) {
                    const double g = coeff > 0.0 ? clip(coeff * (y(h, d) - y(other, d))) : 4.0;
                    y(h, d) += g * alpha;
                }
            }
            next_neg[ei] += negs * neg_per_sample[ei];
        }
    }
    return y;
}

} // namespace responsivity::clusterlab::detail
