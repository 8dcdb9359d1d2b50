#include "mipll/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mipll::io {

using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) return "NaN";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += ch;
        }
    }
    return out;
}

void JsonWriter::comma() {
    if (after_key_) {
        after_key_ = false;
        return;
    }
    if (!need_comma_.empty()) {
        if (need_comma_.back()) out_ += ',';
        need_comma_.back() = true;
    }
}

JsonWriter& JsonWriter::begin_object() {
    comma();
    out_ += '{';
    need_comma_.push_back(false);
    return *this;
}
JsonWriter& JsonWriter::end_object() {
    out_ += '}';
    need_comma_.pop_back();
    return *this;
}
JsonWriter& JsonWriter::begin_array() {
    comma();
    out_ += '[';
    need_comma_.push_back(false);
    return *this;
}
JsonWriter& JsonWriter::end_array() {
    out_ += ']';
    need_comma_.pop_back();
    return *this;
}
JsonWriter& JsonWriter::key(const std::string& name) {
    comma();
    out_ += '"';
    out_ += escape_json(name);
    out_ += "\":";
    after_key_ = true;
    return *this;
}
JsonWriter& JsonWriter::value(double v) {
    comma();
    if (std::isnan(v))
        out_ += "null";
    else
        out_ += format_double(v);
    return *this;
}
JsonWriter& JsonWriter::value(long v) {
    comma();
    out_ += std::to_string(v);
    return *this;
}
JsonWriter& JsonWriter::value(const std::string& v) {
    comma();
    out_ += '"';
    out_ += escape_json(v);
    out_ += '"';
    return *this;
}
JsonWriter& JsonWriter::value(bool v) {
    comma();
    out_ += v ? "true" : "false";
    return *this;
}
JsonWriter& JsonWriter::value(const Vec& v) {
    begin_array();
    for (double x : v) value(x);
    end_array();
    return *this;
}
JsonWriter& JsonWriter::value(const Matrix& m) {
    begin_array();
    for (int r = 0; r < m.rows; ++r) {
        begin_array();
        for (int c = 0; c < m.cols; ++c) value(m(r, c));
        end_array();
    }
    end_array();
    return *this;
}
JsonWriter& JsonWriter::value(const PartialLabel& s) {
    if (std::holds_alternative<std::int64_t>(s))
        return value(static_cast<long>(std::get<std::int64_t>(s)));
    return value(std::get<std::string>(s));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::InvalidArgument, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    out << content;
}

namespace {

PartialLabel partial_from_json(const json& j) {
    if (j.is_number_integer()) return PartialLabel{j.get<std::int64_t>()};
    if (j.is_string()) return PartialLabel{j.get<std::string>()};
    fail(ErrorCode::InvalidArgument, "partial label must be an integer or a string");
}

json parse(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), ErrorCode::InvalidArgument, "malformed JSON in " + what);
    return j;
}

}  // namespace

TransitionSpec transition_from_json_text(const std::string& text) {
    json j = parse(text, "transition spec");
    require(j.contains("kind"), ErrorCode::InvalidArgument, "transition spec needs a 'kind'");
    std::string kind = j["kind"].get<std::string>();
    if (kind == "max" || kind == "sum") {
        require(j.contains("M") && j.contains("c"), ErrorCode::InvalidArgument,
                kind + " transition needs 'M' and 'c'");
        int m = j["M"].get<int>();
        int c = j["c"].get<int>();
        return kind == "max" ? TransitionSpec::max_of(m, c) : TransitionSpec::sum_of(m, c);
    }
    if (kind == "hierarchy") {
        require(j.contains("tree") && j["tree"].is_object(), ErrorCode::InvalidArgument,
                "hierarchy transition needs a 'tree' object");
        std::vector<std::pair<std::string, std::vector<std::string>>> edges;
        for (const auto& [parent, kids] : j["tree"].items()) {
            std::vector<std::string> names;
            for (const auto& kid : kids) names.push_back(kid.get<std::string>());
            edges.emplace_back(parent, std::move(names));
        }
        return TransitionSpec::hierarchy(HierarchyTree::from_edges(edges));
    }
    if (kind == "table") {
        require(j.contains("M") && j.contains("c") && j.contains("entries"),
                ErrorCode::InvalidArgument, "table transition needs 'M', 'c' and 'entries'");
        std::vector<std::pair<std::vector<int>, PartialLabel>> entries;
        for (const auto& e : j["entries"]) {
            std::vector<int> labels;
            for (const auto& y : e[0]) labels.push_back(y.get<int>());
            entries.emplace_back(std::move(labels), partial_from_json(e[1]));
        }
        return TransitionSpec::table(j["M"].get<int>(), j["c"].get<int>(), entries);
    }
    fail(ErrorCode::InvalidArgument, "unknown transition kind '" + kind + "'");
}

TransitionSpec load_transition(const std::string& path) {
    return transition_from_json_text(read_file(path));
}

std::string transition_to_json_text(const TransitionSpec& spec) {
    JsonWriter w;
    w.begin_object();
    switch (spec.kind()) {
        case TransitionKind::Max:
        case TransitionKind::Sum:
            w.key("kind").value(spec.kind() == TransitionKind::Max ? "max" : "sum");
            w.key("M").value(spec.arity());
            w.key("c").value(spec.num_classes());
            break;
        case TransitionKind::Hierarchy: {
            w.key("kind").value("hierarchy");
            w.key("tree").begin_object();
            const auto& tree = spec.tree();
            for (std::size_t n = 0; n < tree.names.size(); ++n) {
                if (tree.children[n].empty()) continue;
                w.key(tree.names[n]).begin_array();
                for (int ch : tree.children[n]) w.value(tree.names[ch]);
                w.end_array();
            }
            w.end_object();
            break;
        }
        case TransitionKind::Table: {
            w.key("kind").value("table");
            w.key("M").value(spec.arity());
            w.key("c").value(spec.num_classes());
            w.key("entries").begin_array();
            const auto& tab = spec.table_entries();
            const int c = spec.num_classes(), m = spec.arity();
            for (std::size_t flat = 0; flat < tab.size(); ++flat) {
                std::vector<int> y(m);
                std::size_t rem = flat;
                for (int i = m - 1; i >= 0; --i) {
                    y[i] = static_cast<int>(rem % c);
                    rem /= c;
                }
                w.begin_array();
                w.begin_array();
                for (int label : y) w.value(static_cast<long>(label));
                w.end_array();
                w.value(tab[flat]);
                w.end_array();
            }
            w.end_array();
            break;
        }
    }
    w.end_object();
    return w.str() + "\n";
}

Vec load_marginal(const std::string& path) {
    json j = parse(read_file(path), path);
    require(j.contains("r") && j["r"].is_array(), ErrorCode::InvalidArgument,
            "marginal file needs an 'r' array");
    Vec r;
    for (const auto& x : j["r"]) r.push_back(x.get<double>());
    return r;
}

void save_marginal(const std::string& path, const Vec& r) {
    JsonWriter w;
    w.begin_object().key("r").value(r).end_object();
    write_file(path, w.str() + "\n");
}

std::vector<PartialLabel> load_partial_labels(const std::string& path,
                                              const TransitionSpec& spec) {
    std::string text = read_file(path);
    std::vector<PartialLabel> labels;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        PartialLabel s;
        try {
            std::size_t used = 0;
            long v = std::stol(line, &used);
            if (used == line.size())
                s = PartialLabel{static_cast<std::int64_t>(v)};
            else
                s = PartialLabel{line};
        } catch (...) {
            s = PartialLabel{line};
        }
        spec.partial_index(s);  // validates
        labels.push_back(std::move(s));
    }
    require(!labels.empty(), ErrorCode::EmptyInput, "no partial labels in '" + path + "'");
    return labels;
}

namespace {
Matrix matrix_from_json(const json& j) {
    require(j.is_array() && !j.empty(), ErrorCode::InvalidArgument, "matrix must be a 2-D array");
    int rows = static_cast<int>(j.size());
    int cols = static_cast<int>(j[0].size());
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        require(static_cast<int>(j[r].size()) == cols, ErrorCode::InvalidArgument,
                "ragged matrix rows");
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}
}  // namespace

std::vector<Matrix> load_score_batches(const std::string& path) {
    json j = parse(read_file(path), path);
    require(j.contains("scores") && j["scores"].is_array(), ErrorCode::InvalidArgument,
            "score file needs a 'scores' array of matrices");
    std::vector<Matrix> out;
    for (const auto& mat : j["scores"]) out.push_back(matrix_from_json(mat));
    require(!out.empty(), ErrorCode::EmptyInput, "no score matrices in '" + path + "'");
    return out;
}

Matrix load_single_scores(const std::string& path) {
    auto batches = load_score_batches(path);
    require(batches.size() == 1, ErrorCode::ShapeError,
            "expected exactly one score matrix in '" + path + "'");
    return batches[0];
}

void save_matrix_json(const std::string& path, const std::string& key, const Matrix& m) {
    JsonWriter w;
    w.begin_object().key(key).value(m).end_object();
    write_file(path, w.str() + "\n");
}

std::vector<ValidationSample> load_validation_jsonl(const std::string& path,
                                                    const TransitionSpec& spec) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<ValidationSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse(line, path);
        ValidationSample sample;
        require(j.contains("scores") && j.contains("s"), ErrorCode::InvalidArgument,
                "validation line needs 'scores' and 's'");
        for (const auto& row : j["scores"]) {
            Vec r;
            for (const auto& x : row) r.push_back(x.get<double>());
            sample.scores.push_back(std::move(r));
        }
        sample.s = partial_from_json(j["s"]);
        spec.partial_index(sample.s);
        out.push_back(std::move(sample));
    }
    require(!out.empty(), ErrorCode::EmptyInput, "no validation samples in '" + path + "'");
    return out;
}

void save_dataset_train_jsonl(const std::string& path, const Dataset& data) {
    std::string out;
    for (const auto& sample : data.train) {
        JsonWriter w;
        w.begin_object();
        w.key("x").begin_array();
        for (const auto& x : sample.x) w.value(x);
        w.end_array();
        w.key("s").value(sample.s);
        w.end_object();
        out += w.str() + "\n";
    }
    write_file(path, out);
}

void save_dataset_test_jsonl(const std::string& path, const Dataset& data) {
    std::string out;
    for (const auto& point : data.test) {
        JsonWriter w;
        w.begin_object();
        w.key("x").value(point.x);
        w.key("y").value(static_cast<long>(point.y));
        w.end_object();
        out += w.str() + "\n";
    }
    write_file(path, out);
}

std::vector<PartialSample> load_train_jsonl(const std::string& path, const TransitionSpec& spec) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<PartialSample> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse(line, path);
        PartialSample sample;
        for (const auto& row : j["x"]) {
            Vec x;
            for (const auto& v : row) x.push_back(v.get<double>());
            sample.x.push_back(std::move(x));
        }
        sample.s = partial_from_json(j["s"]);
        spec.partial_index(sample.s);
        out.push_back(std::move(sample));
    }
    require(!out.empty(), ErrorCode::EmptyInput, "no training samples in '" + path + "'");
    return out;
}

std::vector<TestPoint> load_test_jsonl(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<TestPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = parse(line, path);
        TestPoint point;
        for (const auto& v : j["x"]) point.x.push_back(v.get<double>());
        point.y = j["y"].get<int>();
        out.push_back(std::move(point));
    }
    require(!out.empty(), ErrorCode::EmptyInput, "no test points in '" + path + "'");
    return out;
}

void save_model(const std::string& path, const LinearSoftmaxModel& model) {
    JsonWriter w;
    w.begin_object();
    w.key("W").value(model.weights);
    w.key("b").value(model.bias);
    w.end_object();
    write_file(path, w.str() + "\n");
}

LinearSoftmaxModel load_model(const std::string& path) {
    json j = parse(read_file(path), path);
    LinearSoftmaxModel model;
    model.weights = matrix_from_json(j["W"]);
    for (const auto& x : j["b"]) model.bias.push_back(x.get<double>());
    require(model.weights.cols == static_cast<int>(model.bias.size()), ErrorCode::ShapeError,
            "model weight/bias shapes disagree");
    return model;
}

void write_manifest(const std::string& primary_output_path, const Manifest& manifest) {
    JsonWriter w;
    w.begin_object();
    w.key("subcommand").value(manifest.subcommand);
    w.key("argv").begin_array();
    for (const auto& a : manifest.argv) w.value(a);
    w.end_array();
    w.key("config").value(manifest.resolved_config_json);
    w.key("seed").value(static_cast<long>(manifest.seed));
    w.key("version").value("0.1.0");
    w.key("inputs").begin_array();
    for (const auto& p : manifest.inputs) w.value(p);
    w.end_array();
    w.key("outputs").begin_array();
    for (const auto& p : manifest.outputs) w.value(p);
    w.end_array();
    w.key("wall_clock_seconds").value(manifest.wall_clock_seconds);
    w.end_object();
    write_file(primary_output_path + ".manifest.json", w.str() + "\n");
}

}  // namespace mipll::io
