#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nhde/baselines.hpp"
#include "nhde/config.hpp"
#include "nhde/inference.hpp"
#include "nhde/io.hpp"
#include "nhde/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nhde;

namespace {

constexpr char const* kVersion = "1.0.0";

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out_dir;
    std::string aug;
    std::string mpo_mode;
    std::string variant = "nhde-p";
};

// Artifacts are written into a staging directory and moved into place only
// when the command succeeds.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)), staging_(dir_ / ".staging")
    {
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    OutputDir(OutputDir const&) = delete;
    OutputDir& operator=(OutputDir const&) = delete;
    ~OutputDir()
    {
        std::error_code ec;
        fs::remove_all(staging_, ec);
        if (!committed_ && fs::exists(dir_, ec) && fs::is_empty(dir_, ec)) { fs::remove(dir_, ec); }
    }

    fs::path file(std::string const& name)
    {
        files_.push_back(name);
        auto p = staging_ / name;
        if (p.has_parent_path()) { fs::create_directories(p.parent_path()); }
        return p;
    }

    std::vector<std::string> const& files() const { return files_; }

    void commit()
    {
        for (auto const& name : files_) {
            auto dst = dir_ / name;
            if (dst.has_parent_path()) { fs::create_directories(dst.parent_path()); }
            fs::rename(staging_ / name, dst);
        }
        committed_ = true;
    }

private:
    fs::path dir_;
    fs::path staging_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

RunConfig resolve_config(CommonOptions const& opt, std::optional<std::string> kind = std::nullopt)
{
    RunConfig cfg = opt.config.empty() ? default_run_config(kind ? parse_kind(*kind) : ProblemKind::MOTSP, 2)
                                       : load_run_config(opt.config);
    if (opt.seed) { cfg.set_seed(*opt.seed); }
    if (!opt.aug.empty()) { cfg.solve.augment = parse_augment(opt.aug); }
    if (!opt.mpo_mode.empty()) { cfg.train.mpo.mode = cfg.solve.mpo.mode = parse_mpo_mode(opt.mpo_mode); }
    if (opt.variant != "nhde-p" && opt.variant != "nhde-m") {
        throw std::runtime_error("--variant must be nhde-p or nhde-m");
    }
    cfg.model.hypernetwork = opt.variant == "nhde-p";
    cfg.validate();
    return cfg;
}

void require_file(std::string const& path, char const* what)
{
    if (path.empty()) { throw std::runtime_error(std::string("missing ") + what + " path"); }
    if (!fs::exists(path)) { throw std::runtime_error(std::string(what) + " '" + path + "' does not exist"); }
}

json manifest(std::string const& command, std::vector<std::string> const& argv, RunConfig const& cfg,
              OutputDir const& out, json inputs = json::object())
{
    return {
        {"command", command},
        {"argv", argv},
        {"version", kVersion},
        {"compiler", __VERSION__},
        {"seed", cfg.seed()},
        {"config", to_json(cfg)},
        {"inputs", std::move(inputs)},
        {"outputs", out.files()},
    };
}

PreferenceSchedule inference_schedule(RunConfig const& cfg)
{
    auto weights = uniform_weight_set_of_size(cfg.M, cfg.N);
    return make_schedule(std::move(weights), cfg.seed(), cfg.shuffle);
}

std::vector<Instance> validation_set(RunConfig const& cfg)
{
    Rng rng = Rng::stream(cfg.seed(), "validation");
    std::vector<Instance> out;
    for (int i = 0; i < cfg.val_instances; ++i) { out.push_back(generate_instance(cfg.kind, cfg.n, cfg.M, rng.next())); }
    return out;
}

// Runs fn(i) for i in [0, count) on `threads` workers; results are indexed so
// the output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn fn)
{
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) { fn(i); }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) { error = std::current_exception(); }
                }
            }
        });
    }
    for (auto& th : pool) { th.join(); }
    if (error) { std::rethrow_exception(error); }
}

double mean_validation_hv(Model const& model, std::vector<Instance> const& val, RunConfig const& cfg)
{
    if (val.empty()) { return 0.0; }
    auto const sched = inference_schedule(cfg);
    auto const box = default_box(cfg.kind, cfg.n, cfg.M);
    double total = 0.0;
    for (auto const& inst : val) { total += metrics(solve_sequence(model, inst, sched, cfg.solve, box).archive, box).hv; }
    return total / static_cast<double>(val.size());
}

struct ModelSet {
    std::string variant;
    std::vector<Model> models; // one model (nhde-p) or one submodel per preference (nhde-m)
    PreferenceSchedule schedule;
};

ModelSet load_models(std::string const& path, RunConfig const& cfg)
{
    require_file(path, "model");
    ModelSet set;
    if (fs::is_directory(path)) {
        auto const idx = load_json(fs::path(path) / "submodels.json");
        set.variant = "nhde-m";
        set.schedule = load_weights(fs::path(path) / "weights.csv");
        for (auto const& name : idx.at("files")) { set.models.push_back(load_checkpoint(fs::path(path) / name.get<std::string>()).model); }
        if (set.models.size() != set.schedule.items.size()) { throw std::runtime_error("submodel count does not match the weight file"); }
    } else {
        auto ck = load_checkpoint(path);
        set.variant = ck.variant;
        if (ck.variant != "nhde-p") {
            throw std::runtime_error("checkpoint '" + path + "' holds a " + ck.variant + " model; fine-tune it first");
        }
        set.models.push_back(std::move(ck.model));
        set.schedule = inference_schedule(cfg);
    }
    for (auto const& m : set.models) {
        if (m.config.kind != cfg.kind || m.config.M != cfg.M) {
            throw std::runtime_error("model was trained for " + std::string(to_string(m.config.kind)) + " with M=" +
                                     std::to_string(m.config.M) + ", config asks for " + std::string(to_string(cfg.kind)) +
                                     " with M=" + std::to_string(cfg.M));
        }
    }
    return set;
}

std::vector<Instance> load_dataset(std::string const& path, RunConfig const& cfg)
{
    require_file(path, "dataset");
    auto instances = load_instances(path);
    if (instances.empty()) { throw std::runtime_error("dataset '" + path + "' is empty"); }
    for (auto const& inst : instances) {
        if (inst.kind != cfg.kind || inst.M != cfg.M) { throw std::runtime_error("dataset problem kind does not match the config"); }
    }
    return instances;
}

struct MethodResult {
    ParetoArchive archive;
    std::vector<ObjectiveVector> generated;
    std::vector<TraceRow> trace;
    double time_ms = 0.0;
};

MethodResult run_method(std::string const& method, Instance const& inst, RunConfig const& cfg, ModelSet const* models,
                        std::uint64_t seed)
{
    auto const box = default_box(inst.kind, inst.n, inst.M);
    auto const t0 = std::chrono::steady_clock::now();
    MethodResult r;
    auto add = [&](Solution s) {
        auto f = evaluate(inst, s);
        r.generated.push_back(f);
        r.archive.insert(std::move(f), std::move(s));
    };
    if (method == "nhde") {
        SolveConfig sc = cfg.solve;
        sc.seed = seed;
        auto res = models->models.size() == 1 ? solve_sequence(models->models.front(), inst, models->schedule, sc, box)
                                              : solve_sequence(models->models, inst, models->schedule, sc, box);
        r.archive = std::move(res.archive);
        r.generated = std::move(res.generated);
        r.trace = std::move(res.trace);
    } else if (method == "ws-dp") {
        if (inst.kind != ProblemKind::MOKP) { throw std::runtime_error("ws-dp applies to MOKP only"); }
        for (auto const& w : uniform_weight_set_of_size(inst.M, cfg.N)) { add(ws_dp_knapsack(inst, w).solution); }
    } else if (method == "greedy") {
        for (auto const& w : uniform_weight_set_of_size(inst.M, cfg.N)) { add(greedy_ws_construct(inst, w)); }
    } else if (method == "pls") {
        std::vector<Solution> seeds;
        for (auto const& w : uniform_weight_set_of_size(inst.M, cfg.N)) { seeds.push_back(greedy_ws_construct(inst, w)); }
        r.archive = pareto_local_search(inst, seeds, cfg.ls_iterations, seed);
        for (auto const& e : r.archive.entries()) { r.generated.push_back(e.f); }
    } else if (method == "random") {
        int const starts = cfg.solve.starts == 0 ? inst.n : cfg.solve.starts;
        for (auto& s : random_policy(inst, cfg.N * starts, seed)) { add(std::move(s)); }
    } else {
        throw std::runtime_error("unknown method '" + method + "'");
    }
    r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

json metrics_json(MethodResult const& r, ReferenceBox const& box)
{
    auto m = metrics(r.archive, box);
    return {{"hv", m.hv}, {"nds", m.nds}, {"ds", duplicates_count(r.generated)}, {"time_ms", r.time_ms}};
}

struct Summary {
    double hv = 0.0;
    double nds = 0.0;
    double ds = 0.0;
    double time_ms = 0.0;
};

Summary summarize(std::vector<json> const& per_instance)
{
    Summary s;
    for (auto const& m : per_instance) {
        s.hv += m["hv"].get<double>();
        s.nds += m["nds"].get<double>();
        s.ds += m["ds"].get<double>();
        s.time_ms += m["time_ms"].get<double>();
    }
    auto const n = static_cast<double>(per_instance.size());
    return {s.hv / n, s.nds / n, s.ds / n, s.time_ms};
}

json summary_json(Summary const& s)
{
    return {{"hv", s.hv}, {"nds", s.nds}, {"ds", s.ds}, {"time_ms", s.time_ms}};
}

// Solves every instance with one method and stages fronts, traces and metrics.
Summary solve_dataset(std::string const& method, std::vector<Instance> const& instances, RunConfig const& cfg,
                      ModelSet const* models, int threads, OutputDir* out, std::string const& prefix)
{
    std::vector<MethodResult> results(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t i) {
        results[i] = run_method(method, instances[i], cfg, models, splitmix64(cfg.seed() + i));
    });
    std::vector<json> per;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        auto const box = default_box(instances[i].kind, instances[i].n, instances[i].M);
        per.push_back(metrics_json(results[i], box));
        if (out != nullptr) {
            char name[32];
            std::snprintf(name, sizeof name, "%04zu", i);
            save_front(out->file(prefix + "front_" + name + ".csv"), instances[i].kind, results[i].archive.entries());
            if (!results[i].trace.empty()) { save_trace(out->file(prefix + "trace_" + name + ".csv"), results[i].trace); }
        }
    }
    auto s = summarize(per);
    if (out != nullptr) {
        save_json(out->file(prefix + "metrics.json"), {{"method", method}, {"mean", summary_json(s)}, {"instances", per}});
    }
    return s;
}

Checkpoint make_checkpoint(Model const& model, std::string variant, RunConfig const& cfg, std::vector<std::string> lineage)
{
    Checkpoint ck;
    ck.model = model;
    ck.variant = std::move(variant);
    ck.seed = cfg.seed();
    ck.lineage = std::move(lineage);
    ck.extra = {{"run_config", to_json(cfg)}};
    return ck;
}

TrainHooks training_hooks(RunConfig const& cfg, std::vector<Instance> const& val, std::string& csv, OutputDir& out,
                          std::string const& variant)
{
    TrainHooks hooks;
    hooks.log_every = cfg.log_every;
    hooks.on_log = [&cfg, &val, &csv](TrainLogRow const& row, Model const& model) {
        // Meta-models carry no per-preference decoder yet, so their validation uses the meta parameters directly.
        double const hv = mean_validation_hv(model, val, cfg);
        char line[160];
        std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g\n", row.step, row.mean_reward, row.loss, row.grad_norm, hv);
        csv += line;
        std::cerr << line;
    };
    hooks.checkpoint_every = cfg.checkpoint_every;
    hooks.on_checkpoint = [&cfg, &out, variant](Model const& model, int step) {
        char name[48];
        std::snprintf(name, sizeof name, "checkpoints/step_%06d.json", step);
        save_checkpoint(out.file(name), make_checkpoint(model, variant, cfg, {variant + " init seed " + std::to_string(cfg.seed()), "step " + std::to_string(step)}));
    };
    return hooks;
}

std::vector<std::string> g_argv;

int cmd_gen(CommonOptions const& opt, std::optional<std::string> const& kind, std::optional<int> n, std::optional<int> count)
{
    auto cfg = resolve_config(opt, kind);
    if (kind) {
        cfg.kind = parse_kind(*kind);
        cfg.sync();
    }
    if (n) {
        cfg.n = *n;
        cfg.sync();
    }
    if (count) { cfg.instances = *count; }
    cfg.validate();
    OutputDir out(opt.out_dir);
    Rng rng = Rng::stream(cfg.seed(), "dataset");
    std::vector<Instance> instances;
    for (int i = 0; i < cfg.instances; ++i) { instances.push_back(generate_instance(cfg.kind, cfg.n, cfg.M, rng.next())); }
    save_instances(out.file("instances.jsonl"), instances);
    save_json(out.file("manifest.json"), manifest("gen", g_argv, cfg, out));
    out.commit();
    std::cout << "wrote " << instances.size() << " instances\n";
    return 0;
}

int cmd_train(CommonOptions const& opt)
{
    auto cfg = resolve_config(opt);
    if (!cfg.model.hypernetwork) { throw std::runtime_error("train builds NHDE-P; use meta-train for nhde-m"); }
    OutputDir out(opt.out_dir);
    auto const val = validation_set(cfg);
    std::string csv = "step,mean_reward,loss,grad_norm,val_hv\n";
    auto hooks = training_hooks(cfg, val, csv, out, "nhde-p");
    auto model = train_nhde_p(cfg.train, cfg.model, hooks);
    save_checkpoint(out.file("model.json"),
                    make_checkpoint(model, "nhde-p", cfg, {"nhde-p init seed " + std::to_string(cfg.seed()), "trained E=" + std::to_string(cfg.train.E)}));
    write_atomic(out.file("metrics.csv"), csv);
    save_json(out.file("manifest.json"), manifest("train", g_argv, cfg, out));
    out.commit();
    return 0;
}

int cmd_meta_train(CommonOptions const& opt)
{
    auto opt_m = opt;
    opt_m.variant = "nhde-m";
    auto cfg = resolve_config(opt_m);
    OutputDir out(opt.out_dir);
    auto const val = validation_set(cfg);
    std::string csv = "step,mean_reward,loss,grad_norm,val_hv\n";
    auto hooks = training_hooks(cfg, val, csv, out, "nhde-m");
    MetaTrace trace;
    auto model = meta_train_nhde_m(cfg.meta, cfg.train, cfg.model, hooks, &trace);
    save_checkpoint(out.file("meta.json"),
                    make_checkpoint(model, "nhde-m", cfg, {"nhde-m init seed " + std::to_string(cfg.seed()), "meta-trained T_m=" + std::to_string(cfg.meta.T_m)}));
    write_atomic(out.file("metrics.csv"), csv);
    save_json(out.file("manifest.json"), manifest("meta-train", g_argv, cfg, out));
    out.commit();
    return 0;
}

int cmd_finetune(CommonOptions const& opt, std::string const& model_path)
{
    auto opt_m = opt;
    opt_m.variant = "nhde-m";
    auto cfg = resolve_config(opt_m);
    require_file(model_path, "meta model");
    auto ck = load_checkpoint(model_path);
    if (ck.variant != "nhde-m") { throw std::runtime_error("finetune needs a meta-trained (nhde-m) checkpoint"); }
    if (ck.model.config.kind != cfg.kind || ck.model.config.M != cfg.M) { throw std::runtime_error("meta model does not match the config's problem kind"); }
    OutputDir out(opt.out_dir);
    auto const schedule = inference_schedule(cfg);
    auto subs = finetune_nhde_m(ck.model, schedule.items, cfg.meta.E_f, cfg.train);
    json files = json::array();
    for (std::size_t i = 0; i < subs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sub_%04zu.json", i);
        auto lineage = ck.lineage;
        lineage.push_back("fine-tuned E_f=" + std::to_string(cfg.meta.E_f) + " for preference " + std::to_string(i));
        save_checkpoint(out.file(name), make_checkpoint(subs[i], "nhde-m-submodel", cfg, lineage));
        files.push_back(name);
    }
    save_weights(out.file("weights.csv"), schedule);
    save_json(out.file("submodels.json"), {{"files", files}});
    save_json(out.file("manifest.json"), manifest("finetune", g_argv, cfg, out, {{"model", model_path}}));
    out.commit();
    return 0;
}

void print_summary(std::string const& method, Summary const& s)
{
    std::printf("%-10s hv=%.4f nds=%.1f ds=%.1f time=%.1fms\n", method.c_str(), s.hv, s.nds, s.ds, s.time_ms);
}

int cmd_solve(CommonOptions const& opt, std::string const& model_path, std::string const& dataset)
{
    auto cfg = resolve_config(opt);
    auto instances = load_dataset(dataset, cfg);
    auto models = load_models(model_path, cfg);
    OutputDir out(opt.out_dir);
    auto s = solve_dataset("nhde", instances, cfg, &models, opt.threads, &out, "");
    save_weights(out.file("weights.csv"), models.schedule);
    save_json(out.file("manifest.json"), manifest("solve", g_argv, cfg, out, {{"model", model_path}, {"instances", dataset}}));
    out.commit();
    print_summary("nhde", s);
    return 0;
}

int cmd_baseline(CommonOptions const& opt, std::string const& method, std::string const& dataset)
{
    auto cfg = resolve_config(opt);
    auto instances = load_dataset(dataset, cfg);
    OutputDir out(opt.out_dir);
    auto s = solve_dataset(method, instances, cfg, nullptr, opt.threads, &out, "");
    save_json(out.file("manifest.json"), manifest("baseline", g_argv, cfg, out, {{"method", method}, {"instances", dataset}}));
    out.commit();
    print_summary(method, s);
    return 0;
}

int cmd_eval(CommonOptions const& opt, std::vector<std::string> const& methods, std::string const& model_path,
             std::string const& dataset)
{
    auto cfg = resolve_config(opt);
    auto instances = load_dataset(dataset, cfg);
    std::optional<ModelSet> models;
    if (std::find(methods.begin(), methods.end(), "nhde") != methods.end()) { models = load_models(model_path, cfg); }
    OutputDir out(opt.out_dir);
    std::vector<std::pair<std::string, Summary>> rows;
    for (auto const& m : methods) {
        rows.emplace_back(m, solve_dataset(m, instances, cfg, models ? &*models : nullptr, opt.threads, &out, m + "/"));
    }
    double best = 0.0;
    for (auto const& [m, s] : rows) { best = std::max(best, s.hv); }
    std::string csv = "method,hv,gap_percent,nds,ds,time_ms\n";
    json table = json::array();
    std::printf("%-10s %8s %8s %8s %8s %10s\n", "method", "HV", "gap%", "|NDS|", "|DS|", "time_ms");
    for (auto const& [m, s] : rows) {
        double const gap = best > 0.0 ? 100.0 * (best - s.hv) / best : 0.0;
        char line[200];
        std::snprintf(line, sizeof line, "%s,%.6f,%.4f,%.2f,%.2f,%.1f\n", m.c_str(), s.hv, gap, s.nds, s.ds, s.time_ms);
        csv += line;
        std::printf("%-10s %8.4f %8.2f %8.1f %8.1f %10.1f\n", m.c_str(), s.hv, gap, s.nds, s.ds, s.time_ms);
        table.push_back({{"method", m}, {"hv", s.hv}, {"gap_percent", gap}, {"nds", s.nds}, {"ds", s.ds}, {"time_ms", s.time_ms}});
    }
    write_atomic(out.file("table.csv"), csv);
    save_json(out.file("metrics.json"), {{"instances", instances.size()}, {"table", table}});
    save_json(out.file("manifest.json"), manifest("eval", g_argv, cfg, out, {{"model", model_path}, {"instances", dataset}, {"methods", methods}}));
    out.commit();
    return 0;
}

std::vector<double> parse_vector(std::string const& text)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(',', pos);
        auto cell = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) { throw std::runtime_error("malformed number list '" + text + "'"); }
        out.push_back(v);
        if (next == std::string::npos) { break; }
        pos = next + 1;
    }
    return out;
}

int cmd_hv(std::string const& front_path, std::optional<std::string> const& kind, std::optional<int> n,
           std::string const& ref, std::string const& ideal)
{
    require_file(front_path, "front");
    auto rows = load_front(front_path);
    ProblemKind k = kind ? parse_kind(*kind) : ProblemKind::MOTSP;
    std::size_t const M = rows.empty() ? 2 : rows.front().f.size();
    ReferenceBox box;
    if (!ref.empty() || !ideal.empty()) {
        if (ref.empty() || ideal.empty()) { throw std::runtime_error("--ref and --ideal must be given together"); }
        box.r = parse_vector(ref);
        box.z = parse_vector(ideal);
    } else {
        if (!kind || !n) { throw std::runtime_error("give either --ref/--ideal or --kind/--n"); }
        box = default_box(k, *n, static_cast<int>(M));
    }
    std::vector<ObjectiveVector> pts;
    for (auto const& r : rows) {
        // Front files hold reported values; knapsack profits are maximized.
        pts.push_back(k == ProblemKind::MOKP ? to_reported(k, r.f) : r.f);
    }
    if (k == ProblemKind::MOKP && (!ref.empty())) {
        for (auto& v : box.r) { v = -v; }
        for (auto& v : box.z) { v = -v; }
    }
    auto m = metrics(pts, box);
    std::printf("%.10g\n", m.hv);
    return 0;
}

int cmd_ablate(CommonOptions const& opt, std::vector<std::string> const& flags, std::string const& dataset)
{
    auto cfg = resolve_config(opt);
    if (!cfg.model.hypernetwork) { throw std::runtime_error("ablations are defined on NHDE-P"); }
    for (auto const& f : flags) {
        if (f == "no-indicator") {
            cfg.train.ablation.indicator = cfg.solve.ablation.indicator = false;
        } else if (f == "no-decomposition") {
            cfg.train.ablation.decomposition = cfg.solve.ablation.decomposition = false;
        } else if (f == "no-mpo") {
            cfg.train.ablation.mpo = cfg.solve.ablation.mpo = false;
        } else if (f == "no-p2n") {
            cfg.model.point_to_node = false;
        } else if (f == "no-n2p") {
            cfg.model.node_to_point = false;
        } else if (f == "with-p2p") {
            cfg.model.point_to_point = true;
        } else {
            throw std::runtime_error("unknown ablation '" + f + "'");
        }
    }
    cfg.validate();
    std::vector<Instance> instances;
    if (!dataset.empty()) {
        instances = load_dataset(dataset, cfg);
    } else {
        instances = validation_set(cfg);
        if (instances.empty()) { throw std::runtime_error("no evaluation instances (set val_instances or --instances)"); }
    }
    OutputDir out(opt.out_dir);
    auto model = train_nhde_p(cfg.train, cfg.model);
    ModelSet set{"nhde-p", {model}, inference_schedule(cfg)};
    save_checkpoint(out.file("model.json"), make_checkpoint(model, "nhde-p", cfg, {"ablation " + json(flags).dump()}));
    auto s = solve_dataset("nhde", instances, cfg, &set, opt.threads, &out, "");
    save_json(out.file("manifest.json"), manifest("ablate", g_argv, cfg, out, {{"ablations", flags}, {"instances", dataset}}));
    out.commit();
    print_summary("ablated", s);
    return 0;
}

void add_common(CLI::App* app, CommonOptions& opt, bool needs_out)
{
    app->add_option("--config", opt.config, "INI config file");
    app->add_option("--seed", opt.seed, "root seed (overrides the config)");
    app->add_option("--threads", opt.threads, "worker threads for per-instance work")->check(CLI::PositiveNumber);
    auto* o = app->add_option("--out-dir", opt.out_dir, "output directory");
    if (needs_out) { o->required(); }
    app->add_option("--aug", opt.aug, "instance augmentation")->check(CLI::IsMember({"none", "partial", "full"}));
    app->add_option("--mpo-mode", opt.mpo_mode, "archive update mode")->check(CLI::IsMember({"literal", "archive-preserving"}));
    app->add_option("--variant", opt.variant, "model family")->check(CLI::IsMember({"nhde-p", "nhde-m"}));
}

} // namespace

int main(int argc, char** argv)
{
    g_argv.assign(argv, argv + argc);
    CLI::App app{"Neural heuristic with diversity enhancement for multi-objective combinatorial optimization"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions opt;
    std::optional<std::string> kind;
    std::optional<int> n;
    std::optional<int> count;
    std::string model_path;
    std::string dataset;
    std::string method;
    std::vector<std::string> methods{"nhde"};
    std::string front_path;
    std::string ref;
    std::string ideal;
    std::vector<std::string> flags;

    auto* gen = app.add_subcommand("gen", "generate an instance dataset");
    add_common(gen, opt, true);
    gen->add_option("--kind", kind, "MOTSP, MOCVRP or MOKP");
    gen->add_option("--n", n, "instance size");
    gen->add_option("--count", count, "number of instances");

    auto* train = app.add_subcommand("train", "train NHDE-P");
    add_common(train, opt, true);

    auto* meta = app.add_subcommand("meta-train", "meta-train NHDE-M");
    add_common(meta, opt, true);

    auto* fine = app.add_subcommand("finetune", "fine-tune NHDE-M submodels");
    add_common(fine, opt, true);
    fine->add_option("--model", model_path, "meta model checkpoint")->required();

    auto* solve = app.add_subcommand("solve", "run the sequential subproblem pipeline");
    add_common(solve, opt, true);
    solve->add_option("--model", model_path, "NHDE-P checkpoint or fine-tuned submodel directory")->required();
    solve->add_option("--instances", dataset, "instance dataset (JSONL)")->required();

    auto* base = app.add_subcommand("baseline", "run a non-learned method");
    add_common(base, opt, true);
    base->add_option("--method", method, "ws-dp, pls, greedy or random")->required()->check(CLI::IsMember({"ws-dp", "pls", "greedy", "random"}));
    base->add_option("--instances", dataset, "instance dataset (JSONL)")->required();

    auto* eval = app.add_subcommand("eval", "HV, |NDS| and |DS| table over a dataset");
    add_common(eval, opt, true);
    eval->add_option("--methods", methods, "methods to compare (nhde, ws-dp, pls, greedy, random)");
    eval->add_option("--model", model_path, "model for the nhde method");
    eval->add_option("--instances", dataset, "instance dataset (JSONL)")->required();

    auto* hv = app.add_subcommand("hv", "score a front file");
    hv->add_option("front", front_path, "front CSV")->required();
    hv->add_option("--kind", kind, "problem kind (selects the default box)");
    hv->add_option("--n", n, "instance size (selects the default box)");
    hv->add_option("--ref", ref, "reference point, comma separated");
    hv->add_option("--ideal", ideal, "ideal point, comma separated");

    auto* ablate = app.add_subcommand("ablate", "train and evaluate an ablated NHDE-P");
    add_common(ablate, opt, true);
    ablate->add_option("--ablation", flags, "no-indicator, no-decomposition, no-mpo, no-p2n, no-n2p, with-p2p")->required();
    ablate->add_option("--instances", dataset, "instance dataset (JSONL); defaults to generated validation instances");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) { return cmd_gen(opt, kind, n, count); }
        if (train->parsed()) { return cmd_train(opt); }
        if (meta->parsed()) { return cmd_meta_train(opt); }
        if (fine->parsed()) { return cmd_finetune(opt, model_path); }
        if (solve->parsed()) { return cmd_solve(opt, model_path, dataset); }
        if (base->parsed()) { return cmd_baseline(opt, method, dataset); }
        if (eval->parsed()) { return cmd_eval(opt, methods, model_path, dataset); }
        if (hv->parsed()) { return cmd_hv(front_path, kind, n, ref, ideal); }
        if (ablate->parsed()) { return cmd_ablate(opt, flags, dataset); }
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
