#pragma once

#include "responsivity/convmetrics.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace responsivity::clusterlab {

struct FeatureMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> columns;
    Eigen::MatrixXd values;
    // Filled by standardize(); empty otherwise.
    std::vector<double> column_means;
    std::vector<double> column_stds;
    std::vector<std::string> warnings;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

FeatureMatrix from_features(const std::vector<metrics::FeatureVector>& rows,
                            std::span<const metrics::Feature> columns);
// Features CSV with a leading conversation_id column.
FeatureMatrix parse_features_csv(const std::string& text);
FeatureMatrix read_features_csv(const std::string& path);
// Keeps the named columns in the given order; unknown names are an argument error.
FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::string>& names);

// Column z-scores with the population standard deviation. Constant columns
// become zeros and add a warning. Needs at least two rows.
FeatureMatrix standardize(const FeatureMatrix& m);

enum class ReductionMethod { principal_components, neighbor_embedding };

ReductionMethod parse_reduction_method(const std::string& text);
const char* to_string(ReductionMethod method);

struct ReductionConfig {
    int dims = 3;
    ReductionMethod method = ReductionMethod::principal_components;
    std::uint64_t seed = 42;
    // Neighbor-embedding parameters.
    int n_neighbors = 15;
    double min_dist = 0.1;
    double spread = 1.0;
    int n_epochs = 500;
    int negative_sample_rate = 5;

    nlohmann::json echo() const;
};

struct VarianceReport {
    std::vector<double> explained_ratio;
    std::vector<double> cumulative;

    // Smallest number of components whose cumulative ratio reaches `fraction`.
    int components_for(double fraction) const;
    nlohmann::json to_json() const;
};

struct Reduction {
    FeatureMatrix embedding;
    // Principal components only: full-spectrum variance report, the centring
    // vector and the loadings (columns x dims).
    std::optional<VarianceReport> variance;
    Eigen::RowVectorXd center;
    Eigen::MatrixXd components;
};

Reduction reduce(const FeatureMatrix& m, const ReductionConfig& cfg);

struct ClusterConfig {
    int min_cluster_size = 5;
    // 0 means "same as min_cluster_size".
    int min_samples = 0;
    std::uint64_t seed = 42;

    nlohmann::json echo() const;
};

struct ClusterAssignment {
    std::vector<std::string> row_ids;
    // -1 marks noise.
    std::map<std::string, int> labels;
    std::map<std::string, std::pair<double, double>> embedding_2d;
    nlohmann::json config_echo;

    int cluster_count() const;
    std::vector<int> label_vector() const;
    // conversation_id,cluster_label,x,y
    std::string to_csv() const;
};

// Hierarchical density clustering (excess-of-mass selection) on the rows of m.
// Fewer rows than min_cluster_size leaves every row as noise.
ClusterAssignment cluster(const FeatureMatrix& m, const ClusterConfig& cfg);

struct ClusterProfile {
    std::vector<std::string> columns;
    std::map<int, std::vector<double>> means;
    std::map<int, int> sizes;

    // cluster_label,size,<feature columns>; noise (if any) is the -1 row.
    std::string to_csv() const;
};

ClusterProfile cluster_profile(const FeatureMatrix& features, const ClusterAssignment& assignment);

struct PipelineConfig {
    std::vector<std::string> feature_subset;
    ReductionConfig reduction;
    ClusterConfig clustering;

    nlohmann::json echo() const;
};

PipelineConfig reduced_preset();
PipelineConfig full_preset();

struct PipelineResult {
    FeatureMatrix selected;
    FeatureMatrix standardized;
    Reduction reduction;
    ClusterAssignment assignment;
    ClusterProfile profile;
};

// select -> standardize -> reduce -> cluster, plus a 2-D reduction of the
// standardized features for plotting.
PipelineResult run_pipeline(const FeatureMatrix& features, const PipelineConfig& cfg);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

namespace detail {
// Labels from density clustering over the rows of points.
std::vector<int> hdbscan(const Eigen::MatrixXd& points, int min_cluster_size, int min_samples);

struct UmapParams {
    int n_neighbors = 15;
    double min_dist = 0.1;
    double spread = 1.0;
    int n_epochs = 500;
    int negative_sample_rate = 5;
};
Eigen::MatrixXd umap_embed(const Eigen::MatrixXd& points, int dims, const UmapParams& params, std::uint64_t seed);
// (a, b) such that 1 / (1 + a d^{2b}) approximates the min_dist/spread target curve.
std::pair<double, double> fit_umap_curve(double spread, double min_dist);
} // namespace detail

} // namespace responsivity::clusterlab
