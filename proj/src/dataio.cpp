#include "trefles/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "trefles/psd_linalg.hpp"

namespace trefles {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& cell, int line, int col) {
    const char* s = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0') {
        throw ParseError("line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": bad number '" + cell + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": non-finite value '" + cell +
                         "'");
    }
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_matrix(std::ostream& os, const std::string& tag,
                  const Eigen::MatrixXd& m) {
    os << "matrix " << tag << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) os << " ";
            os << fmt_double(m(r, c));
        }
        os << "\n";
    }
}

}  // namespace

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw ParseError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ParseError("rename failed for '" + path + "'");
    }
}

Dataset load_dataset(const std::string& path, bool require_labels) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw SchemaError("'" + path + "': empty file");
    const auto header = split(lines[0], ',');
    if (header.empty() || header[0] != "id") {
        throw SchemaError("'" + path + "': header must start with 'id'");
    }
    std::vector<int> feature_cols, label_cols;
    Dataset data;
    for (size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h.rfind("f:", 0) == 0) {
            if (!label_cols.empty()) {
                throw SchemaError("'" + path +
                                  "': feature column after label columns");
            }
            feature_cols.push_back(static_cast<int>(c));
            data.feature_names.push_back(h.substr(2));
        } else if (h.rfind("y:", 0) == 0) {
            label_cols.push_back(static_cast<int>(c));
            data.task_names.push_back(h.substr(2));
        } else {
            throw SchemaError("'" + path + "': column '" + h +
                              "' lacks f:/y: prefix");
        }
    }
    const auto n = static_cast<Eigen::Index>(lines.size() - 1);
    const auto m = static_cast<Eigen::Index>(feature_cols.size());
    const auto k = static_cast<Eigen::Index>(label_cols.size());
    data.features.resize(n, m);
    data.labels.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int lineno = static_cast<int>(i) + 2;
        const auto cells = split(lines[static_cast<size_t>(i) + 1], ',');
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        data.ids.push_back(cells[0]);
        for (Eigen::Index j = 0; j < m; ++j) {
            const int col = feature_cols[static_cast<size_t>(j)];
            data.features(i, j) =
                parse_double(cells[static_cast<size_t>(col)], lineno, col + 1);
        }
        for (Eigen::Index t = 0; t < k; ++t) {
            const int col = label_cols[static_cast<size_t>(t)];
            const std::string& cell = cells[static_cast<size_t>(col)];
            if (cell.empty()) {
                data.labels(i, t) = kLabelMissing;
            } else if (cell == "0" || cell == "1") {
                data.labels(i, t) = cell[0] - '0';
            } else {
                throw ParseError("line " + std::to_string(lineno) + ", column " +
                                 std::to_string(col + 1) + ": label '" + cell +
                                 "' not in {0, 1, empty}");
            }
        }
    }
    data.validate(require_labels && k > 0);
    return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
    std::ostringstream os;
    os << "id";
    for (const auto& f : data.feature_names) os << ",f:" << f;
    for (const auto& t : data.task_names) os << ",y:" << t;
    os << "\n";
    for (Eigen::Index i = 0; i < data.n_patients(); ++i) {
        os << data.ids[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < data.n_features(); ++j) {
            os << "," << fmt_double(data.features(i, j));
        }
        for (Eigen::Index t = 0; t < data.n_tasks(); ++t) {
            const int c = data.labels(i, t);
            os << ",";
            if (c != kLabelMissing) os << c;
        }
        os << "\n";
    }
    write_atomic(path, os.str());
}

FeatureGrouping load_groups(const std::string& path,
                            const std::vector<std::string>& feature_names) {
    const auto lines = read_lines(path);
    std::unordered_map<std::string, Eigen::Index> feature_index;
    for (size_t j = 0; j < feature_names.size(); ++j) {
        feature_index[feature_names[j]] = static_cast<Eigen::Index>(j);
    }
    std::vector<int> group_of(feature_names.size(), -1);
    std::unordered_map<std::string, int> group_index;
    std::vector<std::string> group_order;
    for (size_t li = 0; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto cells = split(lines[li], ',');
        if (cells.size() != 2) {
            throw ParseError("line " + std::to_string(li + 1) +
                             ": expected 'feature,group'");
        }
        if (li == 0 && cells[0] == "feature") continue;  // optional header
        const auto it = feature_index.find(cells[0]);
        if (it == feature_index.end()) {
            throw UnknownFeature("group map: unknown feature '" + cells[0] + "'");
        }
        if (group_of[static_cast<size_t>(it->second)] != -1) {
            throw DuplicateFeature("group map: feature '" + cells[0] +
                                   "' listed twice");
        }
        auto [git, inserted] =
            group_index.try_emplace(cells[1], static_cast<int>(group_order.size()));
        if (inserted) group_order.push_back(cells[1]);
        group_of[static_cast<size_t>(it->second)] = git->second;
    }
    for (size_t j = 0; j < group_of.size(); ++j) {
        if (group_of[j] == -1) {
            throw MissingFeature("group map: feature '" + feature_names[j] +
                                 "' not listed");
        }
    }
    return FeatureGrouping::from_group_of(std::move(group_of));
}

void save_groups(const FeatureGrouping& grouping,
                 const std::vector<std::string>& feature_names,
                 const std::vector<std::string>& group_labels,
                 const std::string& path) {
    std::ostringstream os;
    os << "feature,group\n";
    for (size_t j = 0; j < feature_names.size(); ++j) {
        const int g = grouping.group_of[j];
        const std::string label = group_labels.empty()
                                      ? "g" + std::to_string(g)
                                      : group_labels[static_cast<size_t>(g)];
        os << feature_names[j] << "," << label << "\n";
    }
    write_atomic(path, os.str());
}

Eigen::MatrixXd load_omega0(const std::string& path,
                            const std::vector<std::string>& task_names) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw SchemaError("'" + path + "': empty file");
    const auto header = split(lines[0], ',');
    const auto k = static_cast<Eigen::Index>(task_names.size());
    if (static_cast<Eigen::Index>(header.size()) != k + 1) {
        throw DimensionMismatch("omega0: expected " + std::to_string(k) +
                                " task columns, got " +
                                std::to_string(header.size() - 1));
    }
    // Position of each file column/row in the model's task order.
    std::vector<Eigen::Index> perm(static_cast<size_t>(k), -1);
    for (Eigen::Index c = 0; c < k; ++c) {
        const std::string& name = header[static_cast<size_t>(c) + 1];
        const auto it = std::find(task_names.begin(), task_names.end(), name);
        if (it == task_names.end()) {
            throw SchemaError("omega0: unknown task '" + name + "'");
        }
        perm[static_cast<size_t>(c)] = it - task_names.begin();
    }
    if (static_cast<Eigen::Index>(lines.size()) != k + 1) {
        throw DimensionMismatch("omega0: expected " + std::to_string(k) +
                                " rows, got " + std::to_string(lines.size() - 1));
    }
    Eigen::MatrixXd omega(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        const auto cells = split(lines[static_cast<size_t>(r) + 1], ',');
        if (static_cast<Eigen::Index>(cells.size()) != k + 1) {
            throw ParseError("omega0: line " + std::to_string(r + 2) +
                             ": wrong cell count");
        }
        const auto it = std::find(task_names.begin(), task_names.end(), cells[0]);
        if (it == task_names.end()) {
            throw SchemaError("omega0: unknown row task '" + cells[0] + "'");
        }
        const Eigen::Index row = it - task_names.begin();
        for (Eigen::Index c = 0; c < k; ++c) {
            omega(row, perm[static_cast<size_t>(c)]) =
                parse_double(cells[static_cast<size_t>(c) + 1],
                             static_cast<int>(r) + 2, static_cast<int>(c) + 2);
        }
    }
    if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
        throw AsymmetricMatrix("omega0: matrix is not symmetric within 1e-9");
    }
    const Eigen::MatrixXd sym = symmetrize(omega);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.eigenvalues()(0) < -1e-10 * std::abs(es.eigenvalues()(k - 1))) {
        throw NonPSD("omega0: eigenvalue " +
                     std::to_string(es.eigenvalues()(0)) + " negative");
    }
    return sym;
}

namespace {

constexpr int kModelFormatVersion = 1;

class LineReader {
  public:
    explicit LineReader(std::vector<std::string> lines)
        : lines_(std::move(lines)) {}

    const std::string& next() {
        if (pos_ >= lines_.size()) {
            throw ParseError("model archive: unexpected end of file at line " +
                             std::to_string(pos_ + 1));
        }
        return lines_[pos_++];
    }

    size_t line() const { return pos_; }

  private:
    std::vector<std::string> lines_;
    size_t pos_ = 0;
};

Eigen::MatrixXd read_matrix(LineReader& in, const std::string& tag) {
    const auto head = split(in.next(), ' ');
    if (head.size() != 4 || head[0] != "matrix" || head[1] != tag) {
        throw ParseError("model archive: expected 'matrix " + tag +
                         "' near line " + std::to_string(in.line()));
    }
    const auto rows = static_cast<Eigen::Index>(std::stoll(head[2]));
    const auto cols = static_cast<Eigen::Index>(std::stoll(head[3]));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto cells = split(in.next(), ' ');
        if (static_cast<Eigen::Index>(cells.size()) != cols) {
            throw ParseError("model archive: bad row width in matrix " + tag);
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = parse_double(cells[static_cast<size_t>(c)],
                                   static_cast<int>(in.line()),
                                   static_cast<int>(c) + 1);
        }
    }
    return m;
}

std::vector<std::string> read_names(LineReader& in, const std::string& tag) {
    const auto head = split(in.next(), ' ');
    if (head.size() != 3 || head[0] != "names" || head[1] != tag) {
        throw ParseError("model archive: expected 'names " + tag + "'");
    }
    const auto n = static_cast<size_t>(std::stoll(head[2]));
    std::vector<std::string> names;
    names.reserve(n);
    for (size_t i = 0; i < n; ++i) names.push_back(in.next());
    return names;
}

}  // namespace

void save_model(const FittedModel& model, const std::string& path) {
    std::ostringstream os;
    os << "trefles_model " << kModelFormatVersion << "\n";
    os << "tau " << fmt_double(model.params.tau) << "\n";
    os << "names feature " << model.feature_names.size() << "\n";
    for (const auto& f : model.feature_names) os << f << "\n";
    os << "names task " << model.task_names.size() << "\n";
    for (const auto& t : model.task_names) os << t << "\n";
    os << "group_of " << model.grouping.group_of.size() << "\n";
    for (size_t j = 0; j < model.grouping.group_of.size(); ++j) {
        if (j) os << " ";
        os << model.grouping.group_of[j];
    }
    os << "\n";
    write_matrix(os, "u", model.params.u);
    write_matrix(os, "omega", model.params.omega);
    write_matrix(os, "corr", model.corr);
    write_matrix(os, "beta", model.beta);
    write_matrix(os, "lambda", model.lambda);
    os << "blocks w " << model.params.w_blocks.size() << "\n";
    for (size_t z = 0; z < model.params.w_blocks.size(); ++z) {
        write_matrix(os, "w" + std::to_string(z), model.params.w_blocks[z]);
    }
    os << "blocks sigma " << model.params.sigma_blocks.size() << "\n";
    for (size_t z = 0; z < model.params.sigma_blocks.size(); ++z) {
        write_matrix(os, "sigma" + std::to_string(z),
                     model.params.sigma_blocks[z]);
    }
    os << "standardizer " << (model.standardizer.identity() ? 0 : 1) << "\n";
    if (!model.standardizer.identity()) {
        write_matrix(os, "mean", model.standardizer.mean);
        write_matrix(os, "scale", model.standardizer.scale);
    }
    os << "config " << model.config_echo.entries.size() << "\n";
    for (const auto& [key, value] : model.config_echo.entries) {
        os << key << " " << value << "\n";
    }
    os << "history " << model.history.size() << "\n";
    for (const auto& [epoch, obj] : model.history) {
        os << epoch << " " << fmt_double(obj) << "\n";
    }
    os << "end\n";
    write_atomic(path, os.str());
}

FittedModel load_model(const std::string& path) {
    LineReader in(read_lines(path));
    const auto magic = split(in.next(), ' ');
    if (magic.size() != 2 || magic[0] != "trefles_model") {
        throw ParseError("'" + path + "': not a model archive");
    }
    if (std::stoi(magic[1]) != kModelFormatVersion) {
        throw VersionMismatch("'" + path + "': format version " + magic[1] +
                              ", expected " +
                              std::to_string(kModelFormatVersion));
    }
    FittedModel model;
    const auto tau_line = split(in.next(), ' ');
    if (tau_line.size() != 2 || tau_line[0] != "tau") {
        throw ParseError("model archive: expected 'tau'");
    }
    model.params.tau = parse_double(tau_line[1], static_cast<int>(in.line()), 2);
    model.feature_names = read_names(in, "feature");
    model.task_names = read_names(in, "task");

    const auto ghead = split(in.next(), ' ');
    if (ghead.size() != 2 || ghead[0] != "group_of") {
        throw ParseError("model archive: expected 'group_of'");
    }
    const auto gcells = split(in.next(), ' ');
    if (gcells.size() != static_cast<size_t>(std::stoll(ghead[1]))) {
        throw ParseError("model archive: group_of length mismatch");
    }
    std::vector<int> group_of;
    for (const auto& c : gcells) group_of.push_back(std::stoi(c));
    model.grouping = FeatureGrouping::from_group_of(std::move(group_of));

    model.params.u = read_matrix(in, "u");
    model.params.omega = read_matrix(in, "omega");
    model.corr = read_matrix(in, "corr");
    model.beta = read_matrix(in, "beta");
    model.lambda = read_matrix(in, "lambda");
    model.omega = model.params.omega;

    for (const char* kind : {"w", "sigma"}) {
        const auto bhead = split(in.next(), ' ');
        if (bhead.size() != 3 || bhead[0] != "blocks" || bhead[1] != kind) {
            throw ParseError(std::string("model archive: expected 'blocks ") +
                             kind + "'");
        }
        const auto nz = static_cast<size_t>(std::stoll(bhead[2]));
        auto& target = std::string(kind) == "w" ? model.params.w_blocks
                                                : model.params.sigma_blocks;
        for (size_t z = 0; z < nz; ++z) {
            target.push_back(read_matrix(in, kind + std::to_string(z)));
        }
    }

    const auto shead = split(in.next(), ' ');
    if (shead.size() != 2 || shead[0] != "standardizer") {
        throw ParseError("model archive: expected 'standardizer'");
    }
    if (shead[1] == "1") {
        model.standardizer.mean = read_matrix(in, "mean");
        model.standardizer.scale = read_matrix(in, "scale");
    }

    const auto chead = split(in.next(), ' ');
    if (chead.size() != 2 || chead[0] != "config") {
        throw ParseError("model archive: expected 'config'");
    }
    for (long i = 0; i < std::stol(chead[1]); ++i) {
        const std::string& line = in.next();
        const auto sp = line.find(' ');
        model.config_echo.entries.emplace_back(
            line.substr(0, sp), sp == std::string::npos ? "" : line.substr(sp + 1));
    }

    const auto hhead = split(in.next(), ' ');
    if (hhead.size() != 2 || hhead[0] != "history") {
        throw ParseError("model archive: expected 'history'");
    }
    for (long i = 0; i < std::stol(hhead[1]); ++i) {
        const auto cells = split(in.next(), ' ');
        if (cells.size() != 2) throw ParseError("model archive: bad history row");
        model.history.emplace_back(
            std::stoi(cells[0]),
            parse_double(cells[1], static_cast<int>(in.line()), 2));
    }
    if (in.next() != "end") {
        throw ParseError("model archive: missing 'end' marker (truncated?)");
    }
    return model;
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
    std::ostringstream os;
    os << "trefles_truth 1\n";
    write_matrix(os, "beta_true", truth.beta_true);
    write_matrix(os, "omega_true", truth.omega_true);
    os << "matrix support " << truth.support.rows() << " "
       << truth.support.cols() << "\n";
    for (Eigen::Index r = 0; r < truth.support.rows(); ++r) {
        for (Eigen::Index c = 0; c < truth.support.cols(); ++c) {
            if (c) os << " ";
            os << (truth.support(r, c) ? 1 : 0);
        }
        os << "\n";
    }
    write_atomic(path, os.str());
}

}  // namespace trefles
