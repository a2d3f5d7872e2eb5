#include "recdyn/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace recdyn {

namespace {

void ensure_parent(const std::filesystem::path& path) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::ofstream open_out(const std::filesystem::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary); // binary: identical bytes everywhere
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    return out;
}

nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat matrix_from_json(const nlohmann::json& rows) {
    if (!rows.is_array()) throw ConfigError("checkpoint matrix must be an array of rows");
    if (rows.empty()) return Mat(0, 0); // feed-forward nets have no recurrent block
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.at(0).size());
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != c)
            throw ConfigError("checkpoint matrix rows have uneven lengths");
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j));
    }
    return m;
}

nlohmann::json vector_to_json(const Vec& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vec vector_from_json(const nlohmann::json& arr) {
    Vec v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr.at(static_cast<std::size_t>(i));
    return v;
}

} // namespace

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    auto out = open_out(path);
    out << "t";
    for (Eigen::Index j = 0; j < traj.states.cols(); ++j) out << ",z" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
        out << format_double(static_cast<double>(i) * traj.sample_dt);
        for (Eigen::Index j = 0; j < traj.states.cols(); ++j)
            out << "," << format_double(traj.states(i, j));
        out << "\n";
    }
}

std::pair<std::vector<std::string>, Mat> read_csv_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path.string());

    auto split_line = [](const std::string& text) {
        std::vector<std::string> cells;
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    const std::vector<std::string> header = split_line(line);
    std::vector<double> values;
    Eigen::Index n_rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ConfigError("ragged CSV row in " + path.string());
        for (const auto& cell : cells) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ConfigError("non-numeric CSV cell '" + cell + "' in " + path.string());
            }
            if (used != cell.size())
                throw ConfigError("non-numeric CSV cell '" + cell + "' in " + path.string());
            values.push_back(v);
        }
        ++n_rows;
    }
    Mat m(n_rows, static_cast<Eigen::Index>(header.size()));
    for (Eigen::Index i = 0; i < n_rows; ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
    return {header, m};
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    auto out = open_out(path);
    out << "system,arch,train_size,d,h,horizon,replicate,seed,nrmse,best_epoch,selected_h,status\n";
    for (const ResultRow& r : rows)
        out << r.system << ',' << arch_name(r.arch) << ',' << r.train_size << ',' << r.d << ','
            << r.h << ',' << r.horizon << ',' << r.replicate << ',' << r.seed << ','
            << format_double(r.nrmse) << ',' << r.best_epoch << ',' << r.selected_h << ','
            << r.status << "\n";
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << "system,arch,train_size,d,h,horizon,mean_nrmse,stderr_nrmse,mean_selected_h,n_ok\n";
    for (const SummaryRow& r : rows)
        out << r.system << ',' << arch_name(r.arch) << ',' << r.train_size << ',' << r.d << ','
            << r.h << ',' << r.horizon << ',' << format_double(r.mean_nrmse) << ','
            << format_double(r.stderr_nrmse) << ',' << format_double(r.mean_selected_h) << ','
            << r.n_ok << "\n";
}

void write_oracle_csv(const std::filesystem::path& path, const std::string& system,
                      const std::vector<RecursionErrorReport>& reports) {
    auto out = open_out(path);
    out << "system,d,eps_rms,sigma_trace_mean,n_eval,estimator\n";
    for (const RecursionErrorReport& r : reports)
        out << system << ',' << r.d << ',' << format_double(r.eps_rms) << ','
            << format_double(r.sigma_trace_mean) << ',' << r.n_eval << ',' << r.estimator << "\n";
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRow>& rows) {
    auto out = open_out(path);
    out << "system,lyapunov,autocorr_dt,prev_value_nrmse\n";
    for (const DiagnosticsRow& r : rows)
        out << r.system << ',' << format_double(r.report.lyapunov) << ','
            << format_double(r.report.autocorr_dt) << ','
            << format_double(r.report.prev_value_nrmse) << "\n";
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

nlohmann::json system_to_json(const SystemSpec& spec) {
    return {{"kind", spec.kind_name()},
            {"params", spec.params},
            {"sample_dt", spec.sample_dt},
            {"substeps", spec.substeps},
            {"observed_indices", spec.observed_indices}};
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& params) {
    nlohmann::json doc{{"arch", arch_name(params.arch)},
                       {"n", params.n},
                       {"d", params.d},
                       {"h", params.h},
                       {"W_g", matrix_to_json(params.W_g)},
                       {"b_g", vector_to_json(params.b_g)},
                       {"W_f", matrix_to_json(params.W_f)},
                       {"b_f", vector_to_json(params.b_f)},
                       {"W_x", matrix_to_json(params.W_x)},
                       {"b_x", vector_to_json(params.b_x)},
                       {"g_init", vector_to_json(params.g_init)}};
    write_json_file(path, doc);
}

NetParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    NetParams p;
    p.arch = arch_from_name(doc.at("arch").get<std::string>());
    p.n = doc.at("n").get<int>();
    p.d = doc.at("d").get<int>();
    p.h = doc.at("h").get<int>();
    p.W_g = matrix_from_json(doc.at("W_g"));
    p.b_g = vector_from_json(doc.at("b_g"));
    p.W_f = matrix_from_json(doc.at("W_f"));
    p.b_f = vector_from_json(doc.at("b_f"));
    p.W_x = matrix_from_json(doc.at("W_x"));
    p.b_x = vector_from_json(doc.at("b_x"));
    p.g_init = vector_from_json(doc.at("g_init"));
    return p;
}

} // namespace recdyn
