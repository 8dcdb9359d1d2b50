// mipll: multi-instance partial-label learning toolkit CLI.
//
// Subcommands: gen-data, estimate-marginal, bound, pseudo-label, adjust,
// tune, simulate, eval. Structured outputs are JSON/CSV with 12 significant
// digits; a manifest is written alongside every output file. Exit codes:
// 0 success, 2 validation error, 3 solver failure.

#include <chrono>
#include <cstdlib>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mipll/bounds.hpp"
#include "mipll/carot.hpp"
#include "mipll/harness.hpp"
#include "mipll/json_io.hpp"
#include "mipll/lp.hpp"
#include "mipll/marginal.hpp"

using namespace mipll;
namespace io = mipll::io;

namespace {

std::uint64_t resolve_seed(std::int64_t flag_seed, bool seed_given) {
    if (seed_given) return static_cast<std::uint64_t>(flag_seed);
    if (const char* env = std::getenv("MIPLL_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

struct ManifestClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void emit_manifests(const io::Manifest& base, const ManifestClock& clock) {
    io::Manifest manifest = base;
    manifest.wall_clock_seconds = clock.elapsed();
    for (const auto& out : manifest.outputs) io::write_manifest(out, manifest);
}

std::vector<std::string> collect_argv(int argc, char** argv) {
    std::vector<std::string> out;
    for (int i = 0; i < argc; ++i) out.emplace_back(argv[i]);
    return out;
}

Vec parse_grid(const std::string& text) {
    // start:stop:count, inclusive endpoints.
    Vec grid;
    double start = 0.0, stop = 0.0;
    int count = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &start, &stop, &count) != 3 || count < 1)
        fail(ErrorCode::InvalidArgument, "grid must be start:stop:count, e.g. 0:0.2:20");
    if (count == 1) return Vec{start};
    for (int k = 0; k < count; ++k) grid.push_back(start + (stop - start) * k / (count - 1));
    return grid;
}

Vec parse_list(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    require(!out.empty(), ErrorCode::InvalidArgument, "empty numeric list");
    return out;
}

PartialLabel parse_partial(const std::string& text) {
    try {
        std::size_t used = 0;
        long v = std::stol(text, &used);
        if (used == text.size()) return PartialLabel{static_cast<std::int64_t>(v)};
    } catch (...) {
    }
    return PartialLabel{text};
}

// ---- simulate config ----

struct SimulateSettings {
    TransitionSpec spec;
    SyntheticConfig synth;
    TrainConfig train_cfg;
    Adjustment adjustment = Adjustment::None;
    CarotParams carot_params;
    std::string resolved_json;
};

SimulateSettings parse_run_config(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(io::read_file(path));
    SimulateSettings s;
    require(j.contains("transition"), ErrorCode::InvalidArgument, "run config needs 'transition'");
    s.spec = io::transition_from_json_text(j["transition"].dump());

    s.synth.c = s.spec.num_classes();
    s.synth.m = s.spec.arity();
    s.synth.d = j.value("d", s.synth.c);
    s.synth.rho = j.value("rho", 0.0);
    s.synth.m_partial = j.value("m_partial", 500);
    s.synth.m_test = j.value("m_test", 1000);
    s.synth.mean_scale = j.value("mean_scale", 4.0);
    s.synth.noise_std = j.value("noise_std", 1.0);
    s.synth.seed = j.value("seed", 0ULL);

    std::string method = j.value("method", "sl");
    if (method == "sl")
        s.train_cfg.method = TrainMethod::SemanticLoss;
    else if (method == "ilp")
        s.train_cfg.method = TrainMethod::IlpPseudoLabel;
    else
        fail(ErrorCode::InvalidArgument, "method must be 'sl' or 'ilp'");

    std::string source = j.value("rhat_source", "gold");
    if (source == "gold")
        s.train_cfg.rhat_source = RhatSource::Gold;
    else if (source == "algorithm1")
        s.train_cfg.rhat_source = RhatSource::Algorithm1;
    else if (source == "supplied") {
        s.train_cfg.rhat_source = RhatSource::Supplied;
        require(j.contains("rhat"), ErrorCode::InvalidArgument,
                "rhat_source 'supplied' needs an 'rhat' array");
        for (const auto& x : j["rhat"]) s.train_cfg.supplied_rhat.push_back(x.get<double>());
    } else {
        fail(ErrorCode::InvalidArgument, "rhat_source must be gold|algorithm1|supplied");
    }

    s.train_cfg.epochs = j.value("epochs", 100);
    s.train_cfg.batch = j.value("batch", 16);
    s.train_cfg.learning_rate = j.value("lr", 0.1);
    s.train_cfg.eps_frac = j.value("eps_frac", 0.05);
    s.train_cfg.seed = j.value("train_seed", s.synth.seed);

    std::string adj = j.value("adjustment", "none");
    if (adj == "none")
        s.adjustment = Adjustment::None;
    else if (adj == "la")
        s.adjustment = Adjustment::LogitAdjust;
    else if (adj == "carot")
        s.adjustment = Adjustment::Carot;
    else
        fail(ErrorCode::InvalidArgument, "adjustment must be none|la|carot");
    s.carot_params.eta = j.value("eta", 0.05);
    s.carot_params.tau = j.value("tau", 10.0);
    s.carot_params.iterations = j.value("carot_iters", 500);

    // Materialize every default back out for the manifest.
    nlohmann::json resolved = j;
    resolved["d"] = s.synth.d;
    resolved["rho"] = s.synth.rho;
    resolved["m_partial"] = s.synth.m_partial;
    resolved["m_test"] = s.synth.m_test;
    resolved["mean_scale"] = s.synth.mean_scale;
    resolved["noise_std"] = s.synth.noise_std;
    resolved["seed"] = s.synth.seed;
    resolved["method"] = method;
    resolved["rhat_source"] = source;
    resolved["epochs"] = s.train_cfg.epochs;
    resolved["batch"] = s.train_cfg.batch;
    resolved["lr"] = s.train_cfg.learning_rate;
    resolved["eps_frac"] = s.train_cfg.eps_frac;
    resolved["train_seed"] = s.train_cfg.seed;
    resolved["adjustment"] = adj;
    resolved["eta"] = s.carot_params.eta;
    resolved["tau"] = s.carot_params.tau;
    resolved["carot_iters"] = s.carot_params.iterations;
    s.resolved_json = resolved.dump();
    return s;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history, int c) {
    std::string out = "epoch,partial_acc,test_acc";
    for (int j = 0; j < c; ++j) out += ",per_class_acc_" + std::to_string(j);
    out += "\n";
    for (const auto& m : history) {
        out += std::to_string(m.epoch) + "," + io::format_double(m.partial_acc) + "," +
               io::format_double(m.test_acc);
        for (int j = 0; j < c; ++j) out += "," + io::format_double(m.per_class_acc[j]);
        out += "\n";
    }
    return out;
}

std::string report_json(const EvalReport& report) {
    io::JsonWriter w;
    w.begin_object();
    w.key("accuracy").value(report.accuracy);
    w.key("per_class_acc").value(report.per_class_acc);
    w.key("support").begin_array();
    for (long s : report.support) w.value(s);
    w.end_array();
    w.key("confusion").value(report.confusion);
    w.end_object();
    return w.str() + "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"multi-instance partial-label learning toolkit"};
    app.require_subcommand(1);
    ManifestClock clock;
    const auto argv_copy = collect_argv(argc, argv);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic long-tail dataset");
    std::string gen_config, gen_out_train, gen_out_test, gen_out_marginal;
    gen->add_option("--config", gen_config, "generation config JSON")->required();
    gen->add_option("--out-train", gen_out_train, "training samples JSONL")->required();
    gen->add_option("--out-test", gen_out_test, "test points JSONL")->required();
    gen->add_option("--out-marginal", gen_out_marginal, "generating marginal JSON");
    gen->callback([&] {
        auto settings = parse_run_config(gen_config);
        Dataset data = gen_dataset(settings.synth, settings.spec);
        io::save_dataset_train_jsonl(gen_out_train, data);
        io::save_dataset_test_jsonl(gen_out_test, data);
        io::Manifest m{"gen-data", argv_copy, settings.resolved_json, settings.synth.seed,
                       {gen_config}, {gen_out_train, gen_out_test}, 0.0};
        if (!gen_out_marginal.empty()) {
            io::save_marginal(gen_out_marginal, data.marginal);
            m.outputs.push_back(gen_out_marginal);
        }
        emit_manifests(m, clock);
    });

    // ---- estimate-marginal ----
    auto* est = app.add_subcommand("estimate-marginal",
                                   "estimate the hidden-label marginal from partial labels");
    std::string est_transition, est_labels, est_out;
    double est_step = 0.5;
    int est_iters = 5000;
    std::int64_t est_seed = 0;
    bool est_seed_given = false;
    est->add_option("--transition", est_transition, "transition spec JSON")->required();
    est->add_option("--labels", est_labels, "partial labels, one per line")->required();
    est->add_option("--step", est_step, "gradient step size");
    est->add_option("--iters", est_iters, "iteration budget");
    est->add_option("--seed", est_seed, "seed")->each([&](const std::string&) { est_seed_given = true; });
    est->add_option("--out", est_out, "output marginal JSON")->required();
    est->callback([&] {
        TransitionSpec spec = io::load_transition(est_transition);
        auto labels = io::load_partial_labels(est_labels, spec);
        EstimatorConfig cfg;
        cfg.step = est_step;
        cfg.iterations = est_iters;
        cfg.seed = resolve_seed(est_seed, est_seed_given);
        auto result = estimate_marginal(empirical_partial_hist(labels, spec), spec, cfg);
        io::save_marginal(est_out, result.r);
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("step").value(cfg.step);
        cfg_json.key("iters").value(cfg.iterations);
        cfg_json.key("seed").value(static_cast<long>(cfg.seed));
        cfg_json.key("grad_tolerance").value(cfg.grad_tolerance);
        cfg_json.end_object();
        emit_manifests({"estimate-marginal", argv_copy, cfg_json.str(), cfg.seed,
                        {est_transition, est_labels}, {est_out}, 0.0},
                       clock);
    });

    // ---- bound ----
    auto* bound = app.add_subcommand("bound", "class-specific risk bound curve");
    std::string bound_transition, bound_marginal, bound_out, bound_grid = "0:0.2:20";
    std::string bound_variant = "equality";
    int bound_class = 0, bound_restarts = 10, bound_jobs = 1;
    std::int64_t bound_seed = 0;
    bool bound_seed_given = false;
    bound->add_option("--transition", bound_transition, "transition spec JSON")->required();
    bound->add_option("--marginal", bound_marginal, "hidden marginal JSON")->required();
    bound->add_option("--class", bound_class, "class index j")->required();
    bound->add_option("--grid", bound_grid, "partial-risk grid start:stop:count");
    bound->add_option("--restarts", bound_restarts, "solver restarts per point");
    bound->add_option("--variant", bound_variant, "equality | inequality");
    bound->add_option("--jobs", bound_jobs, "parallel grid points");
    bound->add_option("--seed", bound_seed, "seed")->each([&](const std::string&) { bound_seed_given = true; });
    bound->add_option("--out", bound_out, "output CSV")->required();
    bound->callback([&] {
        TransitionSpec spec = io::load_transition(bound_transition);
        Vec r = io::load_marginal(bound_marginal);
        Vec grid = parse_grid(bound_grid);
        BoundSolverConfig cfg;
        cfg.restarts = bound_restarts;
        cfg.seed = resolve_seed(bound_seed, bound_seed_given);
        bool equality = bound_variant == "equality";
        require(equality || bound_variant == "inequality", ErrorCode::InvalidArgument,
                "variant must be equality or inequality");

        SigmaMatrix sm = build_sigma(spec, r);
        std::vector<CurvePoint> curve(grid.size());
        auto solve_point = [&](std::size_t g) {
            BoundSolverConfig point_cfg = cfg;
            point_cfg.seed = Rng::derive(cfg.seed, 1000 + g);
            CurvePoint pt;
            pt.r_p = grid[g];
            try {
                BoundResult res = equality
                                      ? solve_class_bound(sm, bound_class, grid[g], point_cfg)
                                      : solve_class_bound_relaxed(sm, bound_class, grid[g], point_cfg);
                pt.phi = res.value;
                pt.valid_restarts = res.valid_restarts;
            } catch (const Error&) {
                pt.phi = std::numeric_limits<double>::quiet_NaN();
                pt.valid_restarts = 0;
            }
            curve[g] = pt;
        };
        const int jobs = std::max(1, bound_jobs);
        if (jobs == 1) {
            for (std::size_t g = 0; g < grid.size(); ++g) solve_point(g);
        } else {
            std::vector<std::future<void>> tasks;
            std::atomic<std::size_t> next{0};
            for (int t = 0; t < jobs; ++t)
                tasks.push_back(std::async(std::launch::async, [&] {
                    for (std::size_t g = next++; g < grid.size(); g = next++) solve_point(g);
                }));
            for (auto& task : tasks) task.get();
        }

        std::string csv = "r_p,phi,valid_restarts\n";
        for (const auto& pt : curve)
            csv += io::format_double(pt.r_p) + "," + io::format_double(pt.phi) + "," +
                   std::to_string(pt.valid_restarts) + "\n";
        io::write_file(bound_out, csv);
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("class").value(bound_class);
        cfg_json.key("grid").value(bound_grid);
        cfg_json.key("restarts").value(bound_restarts);
        cfg_json.key("variant").value(bound_variant);
        cfg_json.key("seed").value(static_cast<long>(cfg.seed));
        cfg_json.key("jobs").value(jobs);
        cfg_json.end_object();
        emit_manifests({"bound", argv_copy, cfg_json.str(), cfg.seed,
                        {bound_transition, bound_marginal}, {bound_out}, 0.0},
                       clock);
    });

    // ---- pseudo-label ----
    auto* pseudo = app.add_subcommand("pseudo-label", "LP pseudo-labels for a score batch");
    std::string pl_transition, pl_scores, pl_partials, pl_rhat, pl_out, pl_mode = "soft";
    double pl_eps = 0.05;
    pseudo->add_option("--transition", pl_transition, "transition spec JSON")->required();
    pseudo->add_option("--scores", pl_scores, "scores JSON: {\"scores\": [M matrices]}")->required();
    pseudo->add_option("--partials", pl_partials, "partial labels, one per line")->required();
    pseudo->add_option("--rhat", pl_rhat, "marginal estimate JSON")->required();
    pseudo->add_option("--eps", pl_eps, "marginal slack as a fraction of n");
    pseudo->add_option("--mode", pl_mode, "soft | hard");
    pseudo->add_option("--out", pl_out, "output JSON")->required();
    pseudo->callback([&] {
        TransitionSpec spec = io::load_transition(pl_transition);
        auto scores = io::load_score_batches(pl_scores);
        auto partials = io::load_partial_labels(pl_partials, spec);
        Vec r_hat = io::load_marginal(pl_rhat);
        require(pl_mode == "soft" || pl_mode == "hard", ErrorCode::InvalidArgument,
                "mode must be soft or hard");
        auto prob = build_lp(scores, partials, spec, r_hat, pl_eps);
        auto sol = lp::solve_lp(prob.lp);
        require(sol.status == lp::SolveStatus::Optimal, ErrorCode::SolverFailed,
                std::string("LP not solved: ") + lp::status_name(sol.status));
        auto labels = extract_pseudo_labels(
            sol, prob, pl_mode == "soft" ? PseudoLabelMode::Soft : PseudoLabelMode::Hard);

        io::JsonWriter w;
        w.begin_object();
        w.key("objective").value(sol.objective);
        w.key("mode").value(pl_mode);
        w.key("q").begin_array();
        for (const auto& q : labels.q) w.value(q);
        w.end_array();
        w.key("hard_violations").begin_array();
        for (int l : labels.hard_violations) w.value(static_cast<long>(l));
        w.end_array();
        w.end_object();
        io::write_file(pl_out, w.str() + "\n");
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("eps").value(pl_eps);
        cfg_json.key("mode").value(pl_mode);
        cfg_json.end_object();
        emit_manifests({"pseudo-label", argv_copy, cfg_json.str(), 0,
                        {pl_transition, pl_scores, pl_partials, pl_rhat}, {pl_out}, 0.0},
                       clock);
    });

    // ---- adjust ----
    auto* adjust = app.add_subcommand("adjust", "testing-time score adjustment");
    std::string adj_method, adj_scores, adj_rhat, adj_out;
    double adj_eta = 0.05, adj_tau = 10.0;
    int adj_iters = 500;
    adjust->add_option("--method", adj_method, "carot | la")->required();
    adjust->add_option("--scores", adj_scores, "scores JSON with one matrix")->required();
    adjust->add_option("--rhat", adj_rhat, "marginal estimate JSON")->required();
    adjust->add_option("--eta", adj_eta, "entropic regularization (carot)");
    adjust->add_option("--tau", adj_tau, "marginal regularization (carot)");
    adjust->add_option("--iters", adj_iters, "iterations (carot)");
    adjust->add_option("--out", adj_out, "output JSON")->required();
    adjust->callback([&] {
        Matrix scores = io::load_single_scores(adj_scores);
        Vec r_hat = io::load_marginal(adj_rhat);
        io::JsonWriter w;
        w.begin_object();
        if (adj_method == "carot") {
            auto res = carot_adjust(scores, r_hat, CarotParams{adj_eta, adj_tau, adj_iters});
            auto preds = row_argmax(res.b);
            w.key("adjusted").value(res.b);
            w.key("u").value(res.u);
            w.key("v").value(res.v);
            w.key("predictions").begin_array();
            for (int p : preds) w.value(static_cast<long>(p));
            w.end_array();
        } else if (adj_method == "la") {
            auto preds = logit_adjust(scores, r_hat);
            w.key("predictions").begin_array();
            for (int p : preds) w.value(static_cast<long>(p));
            w.end_array();
        } else {
            fail(ErrorCode::InvalidArgument, "method must be carot or la");
        }
        w.end_object();
        io::write_file(adj_out, w.str() + "\n");
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("method").value(adj_method);
        cfg_json.key("eta").value(adj_eta);
        cfg_json.key("tau").value(adj_tau);
        cfg_json.key("iters").value(adj_iters);
        cfg_json.end_object();
        emit_manifests({"adjust", argv_copy, cfg_json.str(), 0, {adj_scores, adj_rhat},
                        {adj_out}, 0.0},
                       clock);
    });

    // ---- tune ----
    auto* tune = app.add_subcommand("tune", "grid-search carot hyperparameters on partial labels");
    std::string tune_transition, tune_val, tune_rhat, tune_out;
    std::string tune_grid_eta = "0.01,0.05,0.1,0.5", tune_grid_tau = "0.1,1,10,100";
    int tune_iters = 500;
    tune->add_option("--transition", tune_transition, "transition spec JSON")->required();
    tune->add_option("--val", tune_val, "validation JSONL: {\"scores\": [...], \"s\": ...}")->required();
    tune->add_option("--grid-eta", tune_grid_eta, "comma-separated eta grid");
    tune->add_option("--grid-tau", tune_grid_tau, "comma-separated tau grid");
    tune->add_option("--rhat", tune_rhat, "marginal JSON (default: estimate from the validation labels)");
    tune->add_option("--iters", tune_iters, "carot iterations per grid point");
    tune->add_option("--out", tune_out, "output JSON")->required();
    tune->callback([&] {
        TransitionSpec spec = io::load_transition(tune_transition);
        auto samples = io::load_validation_jsonl(tune_val, spec);
        const int m = spec.arity();
        const int n = static_cast<int>(samples.size());
        std::vector<Matrix> val_scores(m, Matrix(n, spec.num_classes(), 0.0));
        std::vector<PartialLabel> partials;
        for (int l = 0; l < n; ++l) {
            require(static_cast<int>(samples[l].scores.size()) == m, ErrorCode::ShapeError,
                    "validation sample has the wrong number of score rows");
            for (int i = 0; i < m; ++i) val_scores[i].set_row(l, samples[l].scores[i]);
            partials.push_back(samples[l].s);
        }
        Vec r_hat;
        if (!tune_rhat.empty()) {
            r_hat = io::load_marginal(tune_rhat);
        } else {
            r_hat = estimate_marginal(empirical_partial_hist(partials, spec), spec).r;
        }
        auto res = tune_carot(val_scores, partials, spec, parse_list(tune_grid_eta),
                              parse_list(tune_grid_tau), r_hat, tune_iters);
        io::JsonWriter w;
        w.begin_object();
        w.key("eta").value(res.eta);
        w.key("tau").value(res.tau);
        w.key("partial_accuracy").value(res.partial_accuracy);
        w.end_object();
        io::write_file(tune_out, w.str() + "\n");
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("grid_eta").value(tune_grid_eta);
        cfg_json.key("grid_tau").value(tune_grid_tau);
        cfg_json.key("iters").value(tune_iters);
        cfg_json.key("rhat").value(tune_rhat.empty() ? "(estimated)" : tune_rhat);
        cfg_json.end_object();
        emit_manifests({"tune", argv_copy, cfg_json.str(), 0, {tune_transition, tune_val},
                        {tune_out}, 0.0},
                       clock);
    });

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "end-to-end synthetic training run");
    std::string sim_config, sim_out, sim_model_out;
    sim->add_option("--config", sim_config, "run config JSON")->required();
    sim->add_option("--out", sim_out, "metrics CSV")->required();
    sim->add_option("--model-out", sim_model_out, "trained model JSON");
    sim->callback([&] {
        auto settings = parse_run_config(sim_config);
        Dataset data = gen_dataset(settings.synth, settings.spec);
        TrainResult result = train(data, settings.spec, settings.train_cfg);
        io::write_file(sim_out, metrics_csv(result.history, settings.synth.c));
        io::Manifest m{"simulate", argv_copy, settings.resolved_json, settings.synth.seed,
                       {sim_config}, {sim_out}, 0.0};
        if (!sim_model_out.empty()) {
            io::save_model(sim_model_out, result.model);
            m.outputs.push_back(sim_model_out);
        }
        emit_manifests(m, clock);
    });

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a model on a test set");
    std::string ev_model, ev_test, ev_rhat, ev_out, ev_adjustment = "none";
    double ev_eta = 0.05, ev_tau = 10.0;
    int ev_iters = 500;
    ev->add_option("--model", ev_model, "model JSON")->required();
    ev->add_option("--test", ev_test, "test points JSONL")->required();
    ev->add_option("--adjustment", ev_adjustment, "none | la | carot");
    ev->add_option("--rhat", ev_rhat, "marginal JSON (required for la/carot)");
    ev->add_option("--eta", ev_eta, "carot eta");
    ev->add_option("--tau", ev_tau, "carot tau");
    ev->add_option("--iters", ev_iters, "carot iterations");
    ev->add_option("--out", ev_out, "report JSON")->required();
    ev->callback([&] {
        LinearSoftmaxModel model = io::load_model(ev_model);
        auto test = io::load_test_jsonl(ev_test);
        Adjustment adj = Adjustment::None;
        if (ev_adjustment == "la")
            adj = Adjustment::LogitAdjust;
        else if (ev_adjustment == "carot")
            adj = Adjustment::Carot;
        else
            require(ev_adjustment == "none", ErrorCode::InvalidArgument,
                    "adjustment must be none|la|carot");
        Vec r_hat;
        if (adj != Adjustment::None) {
            require(!ev_rhat.empty(), ErrorCode::InvalidArgument,
                    "la/carot adjustment needs --rhat");
            r_hat = io::load_marginal(ev_rhat);
        }
        auto report = evaluate(model, test, static_cast<int>(model.bias.size()), adj, r_hat,
                               CarotParams{ev_eta, ev_tau, ev_iters});
        io::write_file(ev_out, report_json(report));
        io::JsonWriter cfg_json;
        cfg_json.begin_object();
        cfg_json.key("adjustment").value(ev_adjustment);
        cfg_json.key("eta").value(ev_eta);
        cfg_json.key("tau").value(ev_tau);
        cfg_json.key("iters").value(ev_iters);
        cfg_json.end_object();
        io::Manifest m{"eval", argv_copy, cfg_json.str(), 0, {ev_model, ev_test}, {ev_out}, 0.0};
        if (!ev_rhat.empty()) m.inputs.push_back(ev_rhat);
        emit_manifests(m, clock);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "{\"error\":\"UsageError\",\"message\":\"" << io::escape_json(e.what())
                  << "\"}" << std::endl;
        std::cerr << app.help() << std::endl;
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "{\"error\":\"" << e.code_name() << "\",\"message\":\""
                  << io::escape_json(e.what()) << "\"}" << std::endl;
        return is_solver_failure(e.code()) ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"Unexpected\",\"message\":\"" << io::escape_json(e.what())
                  << "\"}" << std::endl;
        return 2;
    }
}
