#include "responsivity/clusterlab.hpp"

#include "responsivity/error.hpp"
#include "responsivity/fileio.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace responsivity::clusterlab {

using nlohmann::json;

FeatureMatrix from_features(const std::vector<metrics::FeatureVector>& rows,
                            std::span<const metrics::Feature> columns) {
    FeatureMatrix m;
    m.columns = metrics::feature_names(columns);
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.row_ids.push_back(rows[r].conversation_id);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][columns[c]];
        }
    }
    return m;
}

FeatureMatrix parse_features_csv(const std::string& text) {
    auto table = responsivity::detail::parse_csv(text);
    if (table.empty()) throw Error(ErrorKind::parse, "features CSV is empty");
    const auto& header = table.front();
    if (header.size() < 2 || header[0] != "conversation_id") {
        throw Error(ErrorKind::parse, "features CSV must start with a conversation_id column");
    }
    FeatureMatrix m;
    m.columns.assign(header.begin() + 1, header.end());
    std::set<std::string> seen_cols(m.columns.begin(), m.columns.end());
    if (seen_cols.size() != m.columns.size()) throw Error(ErrorKind::parse, "duplicate column in features CSV");

    const auto n = static_cast<Eigen::Index>(table.size() - 1);
    m.values.resize(n, static_cast<Eigen::Index>(m.columns.size()));
    std::set<std::string> seen_rows;
    for (std::size_t r = 1; r < table.size(); ++r) {
        const auto& row = table[r];
        if (row.size() != header.size()) {
            throw Error(ErrorKind::parse, "features CSV row " + std::to_string(r) + " has " +
                                              std::to_string(row.size()) + " fields, expected " +
                                              std::to_string(header.size()));
        }
        if (!seen_rows.insert(row[0]).second) {
            throw Error(ErrorKind::validation, "duplicate conversation_id in features CSV: " + row[0]);
        }
        m.row_ids.push_back(row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(row[c], &used);
                if (used != row[c].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw Error(ErrorKind::parse, "features CSV row " + std::to_string(r) + ", column " + header[c] +
                                                  ": not a number: '" + row[c] + "'");
            }
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::validation, "missing or non-finite value in row " + row[0] + ", column " + header[c]);
            }
            m.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) = v;
        }
    }
    return m;
}

FeatureMatrix read_features_csv(const std::string& path) {
    return parse_features_csv(read_text_file(path));
}

FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<std::string>& names) {
    if (names.empty()) throw Error(ErrorKind::argument, "empty feature subset");
    FeatureMatrix out;
    out.row_ids = m.row_ids;
    out.columns = names;
    out.values.resize(m.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t c = 0; c < names.size(); ++c) {
        auto it = std::find(m.columns.begin(), m.columns.end(), names[c]);
        if (it == m.columns.end()) throw Error(ErrorKind::argument, "unknown feature column: " + names[c]);
        out.values.col(static_cast<Eigen::Index>(c)) = m.values.col(it - m.columns.begin());
    }
    return out;
}

FeatureMatrix standardize(const FeatureMatrix& m) {
    if (m.rows() < 2) throw Error(ErrorKind::argument, "standardize needs at least 2 rows");
    FeatureMatrix out = m;
    out.column_means.clear();
    out.column_stds.clear();
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double mean = m.values.col(c).sum() / n;
        const double var = (m.values.col(c).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        out.column_means.push_back(mean);
        out.column_stds.push_back(sd);
        // relative cutoff so float noise on a constant column doesn't blow up
        const double scale = std::max(1.0, m.values.col(c).cwiseAbs().maxCoeff());
        if (sd <= 1e-12 * scale) {
            out.values.col(c).setZero();
            out.warnings.push_back("column " + m.columns[static_cast<std::size_t>(c)] +
                                   " has zero variance; mapped to zeros");
        } else {
            out.values.col(c) = (m.values.col(c).array() - mean) / sd;
        }
    }
    return out;
}

ReductionMethod parse_reduction_method(const std::string& text) {
    if (text == "principal-components" || text == "pca") return ReductionMethod::principal_components;
    if (text == "neighbor-embedding" || text == "umap") return ReductionMethod::neighbor_embedding;
    throw Error(ErrorKind::argument, "unknown reduction method: " + text);
}

const char* to_string(ReductionMethod method) {
    return method == ReductionMethod::principal_components ? "principal-components" : "neighbor-embedding";
}

json ReductionConfig::echo() const {
    json j = {{"dims", dims}, {"method", to_string(method)}, {"seed", seed}};
    if (method == ReductionMethod::neighbor_embedding) {
        j["n_neighbors"] = n_neighbors;
        j["min_dist"] = min_dist;
        j["spread"] = spread;
        j["n_epochs"] = n_epochs;
        j["negative_sample_rate"] = negative_sample_rate;
    }
    return j;
}

int VarianceReport::components_for(double fraction) const {
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        if (cumulative[i] >= fraction - 1e-12) return static_cast<int>(i + 1);
    }
    return static_cast<int>(cumulative.size());
}

json VarianceReport::to_json() const {
    return {{"explained_variance_ratio", explained_ratio},
            {"cumulative", cumulative},
            {"components_for_95_percent", components_for(0.95)}};
}

namespace {

Reduction principal_components(const FeatureMatrix& m, int dims) {
    Reduction out;
    out.center = m.values.colwise().mean();
    const Eigen::MatrixXd centered = m.values.rowwise() - out.center;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::numeric, "eigen decomposition failed");

    const Eigen::Index p = m.cols();
    Eigen::VectorXd evals = solver.eigenvalues().reverse();
    Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index c = 0; c < p; ++c) {
        evals(c) = std::max(0.0, evals(c));
        // sign convention: largest-magnitude loading positive
        Eigen::Index arg = 0;
        evecs.col(c).cwiseAbs().maxCoeff(&arg);
        if (evecs(arg, c) < 0) evecs.col(c) *= -1.0;
    }

    VarianceReport report;
    const double total = evals.sum();
    double run = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) {
        const double r = total > 0 ? evals(c) / total : 0.0;
        run += r;
        report.explained_ratio.push_back(r);
        report.cumulative.push_back(std::min(1.0, run));
    }
    out.variance = report;
    out.components = evecs.leftCols(dims);

    out.embedding.row_ids = m.row_ids;
    out.embedding.values = centered * out.components;
    for (int d = 0; d < dims; ++d) out.embedding.columns.push_back("pc" + std::to_string(d + 1));
    return out;
}

std::pair<double, double> coords_2d(const Eigen::MatrixXd& e, Eigen::Index row) {
    const double x = e.cols() > 0 ? e(row, 0) : 0.0;
    const double y = e.cols() > 1 ? e(row, 1) : 0.0;
    return {x, y};
}

} // namespace

Reduction reduce(const FeatureMatrix& m, const ReductionConfig& cfg) {
    if (cfg.dims < 1) throw Error(ErrorKind::argument, "reduction dims must be positive");
    if (cfg.dims >= m.cols()) {
        throw Error(ErrorKind::argument, "reduction to " + std::to_string(cfg.dims) + " dims needs more than " +
                                             std::to_string(cfg.dims) + " columns, got " + std::to_string(m.cols()));
    }
    if (m.rows() < 2) throw Error(ErrorKind::argument, "reduction needs at least 2 rows");
    if (cfg.method == ReductionMethod::principal_components) return principal_components(m, cfg.dims);

    if (cfg.n_neighbors < 2) throw Error(ErrorKind::argument, "n_neighbors must be at least 2");
    if (!(cfg.min_dist >= 0.0) || !(cfg.spread > 0.0) || cfg.min_dist > cfg.spread) {
        throw Error(ErrorKind::argument, "need 0 <= min_dist <= spread and spread > 0");
    }
    if (cfg.n_epochs < 1 || cfg.negative_sample_rate < 0) throw Error(ErrorKind::argument, "bad epoch settings");
    detail::UmapParams params{cfg.n_neighbors, cfg.min_dist, cfg.spread, cfg.n_epochs, cfg.negative_sample_rate};
    Reduction out;
    out.embedding.row_ids = m.row_ids;
    out.embedding.values = detail::umap_embed(m.values, cfg.dims, params, cfg.seed);
    for (int d = 0; d < cfg.dims; ++d) out.embedding.columns.push_back("ne" + std::to_string(d + 1));
    return out;
}

json ClusterConfig::echo() const {
    return {{"method", "density"},
            {"min_cluster_size", min_cluster_size},
            {"min_samples", min_samples > 0 ? min_samples : min_cluster_size},
            {"seed", seed}};
}

int ClusterAssignment::cluster_count() const {
    std::set<int> ids;
    for (const auto& [id, label] : labels) {
        if (label >= 0) ids.insert(label);
    }
    return static_cast<int>(ids.size());
}

std::vector<int> ClusterAssignment::label_vector() const {
    std::vector<int> out;
    for (const auto& id : row_ids) out.push_back(labels.at(id));
    return out;
}

std::string ClusterAssignment::to_csv() const {
    std::string out = "conversation_id,cluster_label,x,y\n";
    for (const auto& id : row_ids) {
        const auto [x, y] = embedding_2d.at(id);
        out += responsivity::detail::csv_field(id) + "," + std::to_string(labels.at(id)) + "," + responsivity::detail::csv_number(x) + "," +
               responsivity::detail::csv_number(y) + "\n";
    }
    return out;
}

ClusterAssignment cluster(const FeatureMatrix& m, const ClusterConfig& cfg) {
    if (cfg.min_cluster_size < 2) throw Error(ErrorKind::argument, "min_cluster_size must be at least 2");
    if (cfg.min_samples < 0) throw Error(ErrorKind::argument, "min_samples must be nonnegative");
    if (m.rows() == 0) throw Error(ErrorKind::argument, "cannot cluster an empty matrix");
    if (m.cols() == 0) throw Error(ErrorKind::argument, "cannot cluster a matrix with no columns");

    ClusterAssignment out;
    out.row_ids = m.row_ids;
    out.config_echo = cfg.echo();
    std::vector<int> labels;
    if (m.rows() < cfg.min_cluster_size) {
        labels.assign(static_cast<std::size_t>(m.rows()), -1);
    } else {
        const int k = cfg.min_samples > 0 ? cfg.min_samples : cfg.min_cluster_size;
        labels = detail::hdbscan(m.values, cfg.min_cluster_size, k);
    }

    // Plot coordinates: the leading principal components of the clustered space.
    Eigen::MatrixXd plane = m.values;
    if (m.cols() > 2 && m.rows() >= 2) plane = principal_components(m, 2).embedding.values;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto& id = m.row_ids[static_cast<std::size_t>(r)];
        out.labels[id] = labels[static_cast<std::size_t>(r)];
        out.embedding_2d[id] = coords_2d(plane, r);
    }
    return out;
}

std::string ClusterProfile::to_csv() const {
    std::string out = "cluster_label,size";
    for (const auto& c : columns) out += "," + responsivity::detail::csv_field(c);
    out += "\n";
    for (const auto& [label, row] : means) {
        out += std::to_string(label) + "," + std::to_string(sizes.at(label));
        for (double v : row) out += "," + responsivity::detail::csv_number(v);
        out += "\n";
    }
    return out;
}

ClusterProfile cluster_profile(const FeatureMatrix& features, const ClusterAssignment& assignment) {
    ClusterProfile p;
    p.columns = features.columns;
    std::map<int, Eigen::RowVectorXd> sums;
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        const auto& id = features.row_ids[static_cast<std::size_t>(r)];
        auto it = assignment.labels.find(id);
        if (it == assignment.labels.end()) throw Error(ErrorKind::argument, "no cluster label for row " + id);
        auto [pos, fresh] = sums.try_emplace(it->second, Eigen::RowVectorXd::Zero(features.cols()));
        pos->second += features.values.row(r);
        ++p.sizes[it->second];
    }
    for (const auto& [label, sum] : sums) {
        const Eigen::RowVectorXd mean = sum / static_cast<double>(p.sizes[label]);
        p.means[label] = std::vector<double>(mean.data(), mean.data() + mean.size());
    }
    return p;
}

json PipelineConfig::echo() const {
    return {{"features", feature_subset},
            {"reduction", reduction.echo()},
            {"clustering", clustering.echo()},
            {"visualization", {{"dims", 2}, {"method", to_string(reduction.method)}, {"seed", reduction.seed}}}};
}

PipelineConfig reduced_preset() {
    PipelineConfig cfg;
    cfg.feature_subset = metrics::feature_names(metrics::reduced_features());
    cfg.reduction.dims = 3;
    return cfg;
}

PipelineConfig full_preset() {
    PipelineConfig cfg;
    cfg.feature_subset = metrics::feature_names(metrics::all_features());
    cfg.reduction.dims = 5;
    return cfg;
}

PipelineResult run_pipeline(const FeatureMatrix& features, const PipelineConfig& cfg) {
    PipelineResult out;
    out.selected = select_columns(features, cfg.feature_subset);
    out.standardized = standardize(out.selected);
    out.reduction = reduce(out.standardized, cfg.reduction);
    out.assignment = cluster(out.reduction.embedding, cfg.clustering);

    Eigen::MatrixXd plane = out.standardized.values;
    if (out.standardized.cols() > 2) {
        ReductionConfig vis = cfg.reduction;
        vis.dims = 2;
        plane = reduce(out.standardized, vis).embedding.values;
    }
    for (Eigen::Index r = 0; r < plane.rows(); ++r) {
        out.assignment.embedding_2d[out.standardized.row_ids[static_cast<std::size_t>(r)]] = coords_2d(plane, r);
    }
    out.assignment.config_echo = cfg.echo();
    out.profile = cluster_profile(out.selected, out.assignment);
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::argument, "label vectors differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows;
    std::map<int, double> cols;
    for (std::size_t i = 0; i < n; ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0;
    double sum_rows = 0.0;
    double sum_cols = 0.0;
    for (const auto& [k, v] : table) index += c2(v);
    for (const auto& [k, v] : rows) sum_rows += c2(v);
    for (const auto& [k, v] : cols) sum_cols += c2(v);
    const double expected = sum_rows * sum_cols / c2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0; // both partitions trivial
    return (index - expected) / (max_index - expected);
}

} // namespace responsivity::clusterlab
