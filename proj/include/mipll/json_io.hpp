#pragma once

#include <string>
#include <vector>

#include "mipll/harness.hpp"
#include "mipll/linalg.hpp"
#include "mipll/transition.hpp"

namespace mipll::io {

// All numeric output goes through one formatter (12 significant digits) so
// reruns with identical inputs are byte-identical.
std::string format_double(double value);

// Minimal JSON writer used for every file the toolkit emits; nlohmann::json
// handles parsing on the way in.
class JsonWriter {
public:
    std::string str() const { return out_; }

    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& name);
    JsonWriter& value(double v);
    JsonWriter& value(long v);
    JsonWriter& value(int v) { return value(static_cast<long>(v)); }
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& value(bool v);
    JsonWriter& value(const Vec& v);
    JsonWriter& value(const Matrix& m);
    JsonWriter& value(const PartialLabel& s);

private:
    void comma();
    std::string out_;
    std::vector<bool> need_comma_;
    bool after_key_ = false;
};

std::string escape_json(const std::string& s);

// --- files ---
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- transitions ---
TransitionSpec transition_from_json_text(const std::string& text);
TransitionSpec load_transition(const std::string& path);
std::string transition_to_json_text(const TransitionSpec& spec);

// --- vectors / marginals ---
Vec load_marginal(const std::string& path);      // {"r": [...]}
void save_marginal(const std::string& path, const Vec& r);

// --- partial labels, one per line ---
std::vector<PartialLabel> load_partial_labels(const std::string& path, const TransitionSpec& spec);

// --- score batches: {"scores": [matrix, ...]} ---
std::vector<Matrix> load_score_batches(const std::string& path);
Matrix load_single_scores(const std::string& path);
void save_matrix_json(const std::string& path, const std::string& key, const Matrix& m);

// --- validation samples: one {"scores": [[...], ...], "s": ...} per line ---
struct ValidationSample {
    std::vector<Vec> scores;  // M rows of length c
    PartialLabel s;
};
std::vector<ValidationSample> load_validation_jsonl(const std::string& path,
                                                    const TransitionSpec& spec);

// --- datasets ---
void save_dataset_train_jsonl(const std::string& path, const Dataset& data);
void save_dataset_test_jsonl(const std::string& path, const Dataset& data);
std::vector<PartialSample> load_train_jsonl(const std::string& path, const TransitionSpec& spec);
std::vector<TestPoint> load_test_jsonl(const std::string& path);

// --- models ---
void save_model(const std::string& path, const LinearSoftmaxModel& model);
LinearSoftmaxModel load_model(const std::string& path);

// --- run manifest, emitted alongside every output file ---
struct Manifest {
    std::string subcommand;
    std::vector<std::string> argv;
    std::string resolved_config_json;  // all defaults materialized
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;
};
void write_manifest(const std::string& primary_output_path, const Manifest& manifest);

}  // namespace mipll::io
