#include "responsivity/clusterlab.hpp"
#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"

#include "fixtures.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <random>

using namespace responsivity;
using namespace responsivity::clusterlab;
using nlohmann::json;

namespace {

const json& oracle() {
    static const json doc = read_json_file((testsupport::golden_dir() / "cluster_oracle.json").string());
    return doc;
}

Eigen::MatrixXd to_matrix(const json& rows) {
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

FeatureMatrix matrix_of(Eigen::MatrixXd values) {
    FeatureMatrix m;
    m.values = std::move(values);
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) m.row_ids.push_back("r" + std::to_string(r));
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) m.columns.push_back("c" + std::to_string(c));
    return m;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::state;
}

} // namespace

TEST(Standardize, Example) {
    Eigen::MatrixXd v(2, 2);
    v << 1, 5, 3, 5;
    const auto s = standardize(matrix_of(v));
    EXPECT_DOUBLE_EQ(s.values(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(s.values(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(s.values(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(s.values(1, 1), 0.0);
    ASSERT_EQ(s.warnings.size(), 1u);
    EXPECT_NE(s.warnings[0].find("c1"), std::string::npos);
    EXPECT_EQ(s.column_means, (std::vector<double>{2.0, 5.0}));
    EXPECT_EQ(kind_of([] { standardize(matrix_of(Eigen::MatrixXd::Ones(1, 3))); }), ErrorKind::argument);
}

TEST(Standardize, ZeroMeanUnitVariance) {
    const auto data = testsupport::gaussian_blobs(3, 3, 10, 7);
    const auto s = standardize(data.matrix);
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
        EXPECT_NEAR(s.values.col(c).mean(), 0.0, 1e-12);
        EXPECT_NEAR(s.values.col(c).squaredNorm() / static_cast<double>(s.rows()), 1.0, 1e-12);
    }
}

TEST(FeaturesCsv, ParseAndSelect) {
    const auto m = parse_features_csv("conversation_id,a,b,c\nx,1,2,3\ny,4,5.5,6\n");
    EXPECT_EQ(m.row_ids, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(m.columns, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_DOUBLE_EQ(m.values(1, 1), 5.5);
    const auto sel = select_columns(m, {"c", "a"});
    EXPECT_EQ(sel.columns, (std::vector<std::string>{"c", "a"}));
    EXPECT_DOUBLE_EQ(sel.values(1, 0), 6.0);
    EXPECT_EQ(kind_of([&] { select_columns(m, {"zzz"}); }), ErrorKind::argument);
    EXPECT_EQ(kind_of([] { parse_features_csv("id,a\nx,1\n"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { parse_features_csv("conversation_id,a\nx,1\nx,2\n"); }), ErrorKind::validation);
    EXPECT_NE(kind_of([] { parse_features_csv("conversation_id,a\nx,abc\n"); }), ErrorKind::state);
}

TEST(Pca, MatchesReferenceDecomposition) {
    const auto& ref = oracle()["pca"];
    const auto m = matrix_of(to_matrix(ref["points"]));
    const auto red = reduce(m, {3, ReductionMethod::principal_components});
    ASSERT_TRUE(red.variance);
    const auto& ratios = red.variance->explained_ratio;
    ASSERT_EQ(ratios.size(), ref["explained_ratio"].size());
    for (std::size_t i = 0; i < ratios.size(); ++i) EXPECT_NEAR(ratios[i], ref["explained_ratio"][i].get<double>(), 1e-9);
    const auto abs_ref = to_matrix(ref["embedding_abs"]);
    EXPECT_LT((red.embedding.values.cwiseAbs() - abs_ref).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(red.variance->cumulative.back(), 1.0, 1e-12);
}

TEST(Pca, RankTwoDataReconstructs) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 1);
    Eigen::MatrixXd latent(25, 2);
    Eigen::MatrixXd mix(2, 6);
    for (auto* m : {&latent, &mix})
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
    const Eigen::MatrixXd x = (latent * mix).rowwise() + Eigen::RowVectorXd::LinSpaced(6, -3, 3);
    const auto red = reduce(matrix_of(x), {2, ReductionMethod::principal_components});
    const Eigen::MatrixXd back = (red.embedding.values * red.components.transpose()).rowwise() + red.center;
    EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(red.variance->components_for(0.999999), 2);
}

TEST(Pca, CorrelatedFeaturesKeep95PercentIn10Dims) {
    // 23 columns driven by 6 latent factors plus small independent noise
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 1);
    Eigen::MatrixXd latent(120, 6);
    Eigen::MatrixXd load(6, 23);
    for (auto* m : {&latent, &load})
        for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
    Eigen::MatrixXd x = latent * load;
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += 0.15 * n(rng);
    const auto s = standardize(matrix_of(x));
    const auto red = reduce(s, {10, ReductionMethod::principal_components});
    EXPECT_GE(red.variance->cumulative[9], 0.95);
    EXPECT_LE(red.variance->components_for(0.95), 10);
    EXPECT_EQ(kind_of([&] { reduce(s, {23, ReductionMethod::principal_components}); }), ErrorKind::argument);
}

TEST(ReductionMethod, Parse) {
    EXPECT_EQ(parse_reduction_method("pca"), ReductionMethod::principal_components);
    EXPECT_EQ(parse_reduction_method("neighbor-embedding"), ReductionMethod::neighbor_embedding);
    EXPECT_EQ(parse_reduction_method("umap"), ReductionMethod::neighbor_embedding);
    EXPECT_THROW(parse_reduction_method("tsne"), Error);
}

TEST(Umap, CurveFitMatchesReference) {
    for (const auto& row : oracle()["umap_curve"]) {
        const auto [a, b] = detail::fit_umap_curve(row[0].get<double>(), row[1].get<double>());
        EXPECT_NEAR(a, row[2].get<double>(), 1e-4 * row[2].get<double>()) << row.dump();
        EXPECT_NEAR(b, row[3].get<double>(), 1e-4 * row[3].get<double>()) << row.dump();
    }
}

TEST(Umap, SeededAndSeparatesBlobs) {
    const auto data = testsupport::gaussian_blobs(5, 3, 20, 12);
    const auto s = standardize(data.matrix);
    ReductionConfig cfg{3, ReductionMethod::neighbor_embedding, 7};
    const auto a = reduce(s, cfg);
    const auto b = reduce(s, cfg);
    EXPECT_EQ(a.embedding.values, b.embedding.values);
    EXPECT_FALSE(a.variance);
    cfg.seed = 8;
    EXPECT_NE(reduce(s, cfg).embedding.values, a.embedding.values);
    const auto labels = detail::hdbscan(a.embedding.values, 5, 5);
    EXPECT_GE(adjusted_rand_index(labels, data.labels), 0.9);
}

// Smallest mutual-reachability distance from row i to any other row with label l.
double reach_to(const Eigen::MatrixXd& x, int k, const std::vector<int>& labels, std::size_t i, int l) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> core(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<double> d;
        for (std::size_t b = 0; b < n; ++b) d.push_back((x.row(a) - x.row(b)).norm());
        std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
        core[a] = d[k - 1];
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n; ++b) {
        if (b == i || labels[b] != l) continue;
        best = std::min(best, std::max({(x.row(i) - x.row(b)).norm(), core[i], core[b]}));
    }
    return best;
}

TEST(Hdbscan, MatchesReferenceLabels) {
    for (const auto& c : oracle()["hdbscan"]) {
        const auto x = to_matrix(c["points"]);
        const int k = c["min_samples"];
        const auto got = detail::hdbscan(x, c["min_cluster_size"], k);
        const auto want = c["labels"].get<std::vector<int>>();
        ASSERT_EQ(got.size(), want.size());
        EXPECT_EQ(*std::max_element(got.begin(), got.end()), *std::max_element(want.begin(), want.end()));
        // map our ids onto the reference ids by majority
        std::map<int, std::map<int, int>> votes;
        for (std::size_t i = 0; i < got.size(); ++i) ++votes[got[i]][want[i]];
        std::map<int, int> to_ref;
        for (const auto& [g, row] : votes) {
            to_ref[g] = std::max_element(row.begin(), row.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; })->first;
        }
        EXPECT_EQ(to_ref[-1], -1);
        for (std::size_t i = 0; i < got.size(); ++i) {
            const int mine = to_ref[got[i]];
            if (mine == want[i]) continue;
            // only a mutual-reachability tie between the two clusters may flip a point
            ASSERT_NE(mine, -1) << i;
            ASSERT_NE(want[i], -1) << i;
            EXPECT_DOUBLE_EQ(reach_to(x, k, want, i, mine), reach_to(x, k, want, i, want[i])) << i;
        }
    }
}

TEST(Cluster, EdgeCases) {
    const auto same = matrix_of(Eigen::MatrixXd::Constant(12, 3, 2.5));
    const auto one = cluster(same, {5});
    EXPECT_EQ(one.cluster_count(), 1);
    for (int l : one.label_vector()) EXPECT_EQ(l, 0);

    const auto few = cluster(matrix_of(Eigen::MatrixXd::Random(4, 3)), {5});
    EXPECT_EQ(few.cluster_count(), 0);
    for (int l : few.label_vector()) EXPECT_EQ(l, -1);

    EXPECT_EQ(kind_of([] { cluster(matrix_of(Eigen::MatrixXd(0, 3)), {5}); }), ErrorKind::argument);
}

TEST(Cluster, AssignmentCsvAndEmbedding) {
    const auto data = testsupport::gaussian_blobs(2, 2, 8, 4);
    const auto a = cluster(standardize(data.matrix), {4});
    EXPECT_EQ(a.row_ids, data.matrix.row_ids);
    const std::string csv = a.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "conversation_id,cluster_label,x,y");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
    EXPECT_EQ(a.embedding_2d.size(), 16u);
    EXPECT_EQ(a.config_echo["min_cluster_size"], 4);
}

TEST(Pipeline, RecoversThreeBlobs) {
    const auto data = testsupport::gaussian_blobs(42, 3, 20, 12);
    for (auto method : {ReductionMethod::principal_components, ReductionMethod::neighbor_embedding}) {
        PipelineConfig cfg;
        cfg.feature_subset = data.matrix.columns;
        cfg.reduction.dims = 3;
        cfg.reduction.method = method;
        const auto res = run_pipeline(data.matrix, cfg);
        EXPECT_EQ(res.assignment.cluster_count(), 3) << to_string(method);
        EXPECT_GE(adjusted_rand_index(res.assignment.label_vector(), data.labels), 0.9) << to_string(method);
        EXPECT_EQ(res.reduction.embedding.cols(), 3);
    }
}

TEST(Profile, RecomposesGlobalMeans) {
    const auto data = testsupport::gaussian_blobs(9, 3, 15, 5, 3.0, 1.5);
    PipelineConfig cfg;
    cfg.feature_subset = data.matrix.columns;
    const auto res = run_pipeline(data.matrix, cfg);
    const auto& p = res.profile;
    int total = 0;
    std::vector<double> sum(p.columns.size(), 0.0);
    for (const auto& [label, means] : p.means) {
        total += p.sizes.at(label);
        for (std::size_t c = 0; c < means.size(); ++c) sum[c] += means[c] * p.sizes.at(label);
    }
    EXPECT_EQ(total, 45);
    for (std::size_t c = 0; c < sum.size(); ++c) {
        EXPECT_NEAR(sum[c] / total, data.matrix.values.col(static_cast<Eigen::Index>(c)).mean(), 1e-9);
    }
}

TEST(Profile, SplitOnOneFeature) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(20, 3);
    for (int r = 0; r < 20; ++r) {
        v(r, 0) = r < 10 ? 0.0 : 100.0;
        v(r, 1) = 1.0 + (r % 10) * 0.01;
        v(r, 2) = 7.0 - (r % 10) * 0.02;
    }
    const auto m = matrix_of(v);
    const auto a = cluster(standardize(m), {5});
    ASSERT_EQ(a.cluster_count(), 2);
    const auto p = cluster_profile(m, a);
    EXPECT_EQ(p.means.count(-1), 0u);
    const auto& m0 = p.means.at(0);
    const auto& m1 = p.means.at(1);
    EXPECT_NE(m0[0], m1[0]);
    EXPECT_NEAR(m0[1], m1[1], 1e-12);
    EXPECT_NEAR(m0[2], m1[2], 1e-12);
    EXPECT_EQ(p.to_csv().substr(0, p.to_csv().find('\n')), "cluster_label,size,c0,c1,c2");
}

TEST(Ari, MatchesReferenceAndInvariants) {
    for (const auto& c : oracle()["ari"]) {
        const auto a = c["a"].get<std::vector<int>>();
        const auto b = c["b"].get<std::vector<int>>();
        EXPECT_NEAR(adjusted_rand_index(a, b), c["ari"].get<double>(), 1e-12);
        EXPECT_NEAR(adjusted_rand_index(b, a), c["ari"].get<double>(), 1e-12);
    }
    const std::vector<int> x{0, 0, 1, 1, 2, 2, 2};
    const std::vector<int> renamed{5, 5, 3, 3, 9, 9, 9};
    EXPECT_DOUBLE_EQ(adjusted_rand_index(x, renamed), 1.0);
    EXPECT_DOUBLE_EQ(adjusted_rand_index(std::vector<int>{1, 1, 1}, std::vector<int>{0, 0, 0}), 1.0);
}

TEST(Presets, Shapes) {
    const auto r = reduced_preset();
    EXPECT_EQ(r.feature_subset, metrics::feature_names(metrics::reduced_features()));
    EXPECT_EQ(r.reduction.dims, 3);
    const auto f = full_preset();
    EXPECT_EQ(f.feature_subset.size(), 23u);
    EXPECT_EQ(f.reduction.dims, 5);
    EXPECT_EQ(r.echo()["reduction"]["dims"], 3);
}
