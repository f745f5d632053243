#include "nhde/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "nhde/io.hpp"

namespace nhde {

void RunConfig::set_seed(std::uint64_t s)
{
    train.seed = s;
    solve.seed = s;
}

void RunConfig::sync()
{
    model.kind = kind;
    model.M = M;
    train.kind = kind;
    train.M = M;
    train.n = n;
}

void RunConfig::validate() const
{
    if (M < 2 || M > 3 || (kind != ProblemKind::MOTSP && M != 2)) { throw ConfigError("unsupported objective count for this problem"); }
    if (n < 2) { throw ConfigError("n must be at least 2"); }
    if (N < 1 || instances < 1 || val_instances < 0) { throw ConfigError("N and instances must be positive"); }
    if (solve.starts < 0 || solve.starts > n) { throw ConfigError("starts must lie in [0, n]"); }
    try {
        model.validate();
        train.validate();
        meta.validate();
    } catch (std::exception const& e) {
        throw ConfigError(e.what());
    }
}

RunConfig default_run_config(ProblemKind kind, int M)
{
    RunConfig cfg;
    cfg.kind = kind;
    cfg.M = M;
    cfg.model = ModelConfig::desk(kind, M);
    cfg.train.lr = 1e-3;
    cfg.meta.T_m = 10;
    cfg.meta.N_prime = 5;
    cfg.meta.E = 10;
    cfg.meta.E_f = 10;
    cfg.sync();
    return cfg;
}

namespace {

int to_int(std::string const& key, std::string const& v)
{
    int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) { throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'"); }
    return out;
}

std::uint64_t to_u64(std::string const& key, std::string const& v)
{
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) { throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'"); }
    return out;
}

double to_double(std::string const& key, std::string const& v)
{
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) { throw ConfigError("key '" + key + "': expected a number, got '" + v + "'"); }
    return out;
}

bool to_bool(std::string const& key, std::string const& v)
{
    if (v == "true" || v == "1" || v == "on" || v == "yes") { return true; }
    if (v == "false" || v == "0" || v == "off" || v == "no") { return false; }
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

} // namespace

void apply_setting(RunConfig& cfg, std::string const& key, std::string const& value)
{
    auto const& v = value;
    try {
        if (key == "kind") {
            cfg.kind = parse_kind(v);
        } else if (key == "M") {
            cfg.M = to_int(key, v);
        } else if (key == "n") {
            cfg.n = to_int(key, v);
        } else if (key == "N") {
            cfg.N = to_int(key, v);
        } else if (key == "instances") {
            cfg.instances = to_int(key, v);
        } else if (key == "shuffle") {
            cfg.shuffle = to_bool(key, v);
        } else if (key == "seed") {
            cfg.set_seed(to_u64(key, v));
        } else if (key == "d") {
            cfg.model.d = to_int(key, v);
        } else if (key == "L") {
            cfg.model.L = to_int(key, v);
        } else if (key == "Y") {
            cfg.model.Y = to_int(key, v);
        } else if (key == "C") {
            cfg.model.C = to_double(key, v);
        } else if (key == "ff_hidden") {
            cfg.model.ff_hidden = to_int(key, v);
        } else if (key == "hyper_hidden") {
            cfg.model.hyper_hidden = to_int(key, v);
        } else if (key == "batch_norm") {
            cfg.model.batch_norm = to_bool(key, v);
        } else if (key == "node_to_point") {
            cfg.model.node_to_point = to_bool(key, v);
        } else if (key == "point_to_node") {
            cfg.model.point_to_node = to_bool(key, v);
        } else if (key == "point_to_point") {
            cfg.model.point_to_point = to_bool(key, v);
        } else if (key == "B") {
            cfg.train.B = to_int(key, v);
        } else if (key == "N_prime") {
            cfg.train.N_prime = to_int(key, v);
        } else if (key == "E") {
            cfg.train.E = to_int(key, v);
        } else if (key == "starts") {
            cfg.train.starts = to_int(key, v);
            cfg.solve.starts = cfg.train.starts;
        } else if (key == "lr") {
            cfg.train.lr = to_double(key, v);
        } else if (key == "weight_decay") {
            cfg.train.weight_decay = to_double(key, v);
        } else if (key == "grad_clip") {
            cfg.train.grad_clip = to_double(key, v);
        } else if (key == "K") {
            cfg.train.mpo.K = cfg.solve.mpo.K = to_int(key, v);
        } else if (key == "J") {
            cfg.train.mpo.J = cfg.solve.mpo.J = to_int(key, v);
        } else if (key == "mpo_mode") {
            cfg.train.mpo.mode = cfg.solve.mpo.mode = parse_mpo_mode(v);
        } else if (key == "aug") {
            cfg.solve.augment = parse_augment(v);
        } else if (key == "rollout") {
            if (v == "greedy") {
                cfg.solve.mode = RolloutMode::Greedy;
            } else if (v == "sample") {
                cfg.solve.mode = RolloutMode::Sample;
            } else {
                throw ConfigError("key 'rollout': expected greedy or sample, got '" + v + "'");
            }
        } else if (key == "indicator") {
            cfg.train.ablation.indicator = cfg.solve.ablation.indicator = to_bool(key, v);
        } else if (key == "decomposition") {
            cfg.train.ablation.decomposition = cfg.solve.ablation.decomposition = to_bool(key, v);
        } else if (key == "mpo") {
            cfg.train.ablation.mpo = cfg.solve.ablation.mpo = to_bool(key, v);
        } else if (key == "T_m") {
            cfg.meta.T_m = to_int(key, v);
        } else if (key == "meta.N_prime") {
            cfg.meta.N_prime = to_int(key, v);
        } else if (key == "N_tilde") {
            cfg.meta.N_tilde = to_int(key, v);
        } else if (key == "meta.E") {
            cfg.meta.E = to_int(key, v);
        } else if (key == "E_f") {
            cfg.meta.E_f = to_int(key, v);
        } else if (key == "eps0") {
            cfg.meta.eps0 = to_double(key, v);
        } else if (key == "log_every") {
            cfg.log_every = to_int(key, v);
        } else if (key == "checkpoint_every") {
            cfg.checkpoint_every = to_int(key, v);
        } else if (key == "val_instances") {
            cfg.val_instances = to_int(key, v);
        } else if (key == "ls_iterations") {
            cfg.ls_iterations = to_int(key, v);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    } catch (ConfigError const&) {
        throw;
    } catch (std::exception const& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
    cfg.sync();
}

RunConfig parse_run_config(std::string const& text, std::string const& origin)
{
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (CLI::Error const& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    std::vector<std::pair<std::string, std::string>> settings;
    for (auto const& item : items) {
        if (item.name == "++" || item.name == "--") { continue; }
        if (item.inputs.size() != 1) { throw ConfigError(origin + ": key '" + item.name + "' needs exactly one value"); }
        std::string key = item.name;
        // Meta-training reuses the symbols N_prime and E inside its own section.
        bool const meta = !item.parents.empty() && item.parents.front() == "meta";
        if (meta && (key == "N_prime" || key == "E")) { key = "meta." + key; }
        settings.emplace_back(key, item.inputs.front());
    }
    RunConfig cfg;
    ProblemKind kind = ProblemKind::MOTSP;
    int M = 2;
    try {
        for (auto const& [k, v] : settings) {
            if (k == "kind") { kind = parse_kind(v); }
            if (k == "M") { M = to_int(k, v); }
        }
        cfg = default_run_config(kind, M);
        for (auto const& [k, v] : settings) { apply_setting(cfg, k, v); }
        cfg.validate();
    } catch (std::exception const& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return cfg;
}

RunConfig load_run_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot open config '" + path.string() + "'"); }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.string());
}

nlohmann::json to_json(RunConfig const& cfg)
{
    return {
        {"kind", std::string(to_string(cfg.kind))},
        {"M", cfg.M},
        {"n", cfg.n},
        {"N", cfg.N},
        {"instances", cfg.instances},
        {"shuffle", cfg.shuffle},
        {"seed", cfg.seed()},
        {"model", to_json(cfg.model)},
        {"train",
         {{"B", cfg.train.B},
          {"N_prime", cfg.train.N_prime},
          {"E", cfg.train.E},
          {"starts", cfg.train.starts},
          {"lr", cfg.train.lr},
          {"weight_decay", cfg.train.weight_decay},
          {"grad_clip", cfg.train.grad_clip}}},
        {"mpo", {{"K", cfg.solve.mpo.K}, {"J", cfg.solve.mpo.J}, {"mode", std::string(to_string(cfg.solve.mpo.mode))}}},
        {"ablation",
         {{"indicator", cfg.solve.ablation.indicator},
          {"decomposition", cfg.solve.ablation.decomposition},
          {"mpo", cfg.solve.ablation.mpo}}},
        {"meta",
         {{"T_m", cfg.meta.T_m},
          {"N_prime", cfg.meta.N_prime},
          {"N_tilde", cfg.meta.N_tilde},
          {"E", cfg.meta.E},
          {"E_f", cfg.meta.E_f},
          {"eps0", cfg.meta.eps0}}},
        {"solve",
         {{"aug", std::string(to_string(cfg.solve.augment))},
          {"rollout", cfg.solve.mode == RolloutMode::Greedy ? "greedy" : "sample"},
          {"starts", cfg.solve.starts}}},
        {"log_every", cfg.log_every},
        {"checkpoint_every", cfg.checkpoint_every},
        {"val_instances", cfg.val_instances},
        {"ls_iterations", cfg.ls_iterations},
    };
}

} // namespace nhde
