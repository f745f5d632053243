#include "nhde/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nhde {

using nlohmann::json;

namespace {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

double parse_double(std::string_view text, std::string const& where)
{
    double v = 0.0;
    auto const* begin = text.data();
    auto const* end = text.data() + text.size();
    while (begin < end && *begin == ' ') { ++begin; }
    while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) { --end; }
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw IoError(where + ": expected a finite number, got '" + std::string(text) + "'");
    }
    return v;
}

std::vector<std::string> split(std::string const& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) { out.push_back(cell); }
    if (!line.empty() && line.back() == sep) { out.emplace_back(); }
    return out;
}

std::string read_file(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw IoError("cannot open '" + path.string() + "'"); }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
T field(json const& j, char const* name, std::string const& where)
{
    if (!j.is_object() || !j.contains(name)) { throw IoError(where + ": missing field '" + name + "'"); }
    try {
        return j.at(name).get<T>();
    } catch (json::exception const&) {
        throw IoError(where + ": field '" + name + "' has the wrong type");
    }
}

json point(Point2 p)
{
    return json::array({p.x, p.y});
}

Point2 point_from(json const& j, std::string const& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw IoError(where + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

json to_json(Instance const& inst)
{
    json j;
    j["kind"] = std::string(to_string(inst.kind));
    j["n"] = inst.n;
    j["M"] = inst.M;
    j["seed"] = inst.seed;
    switch (inst.kind) {
    case ProblemKind::MOTSP: {
        json coords = json::array();
        for (auto const& node : inst.coords) {
            json per = json::array();
            for (auto const& p : node) { per.push_back(point(p)); }
            coords.push_back(per);
        }
        j["coords"] = coords;
        break;
    }
    case ProblemKind::MOCVRP: {
        j["depot"] = point(inst.depot);
        json coords = json::array();
        for (auto const& c : inst.coords) { coords.push_back(point(c[0])); }
        j["coords"] = coords;
        j["demands"] = inst.demands;
        j["capacity"] = inst.capacity;
        break;
    }
    case ProblemKind::MOKP: {
        j["weights"] = inst.weights;
        json values = json::array();
        for (auto const& v : inst.values) { values.push_back(json::array({v[0], v[1]})); }
        j["values"] = values;
        j["capacity"] = inst.capacity;
        break;
    }
    }
    return j;
}

Instance instance_from_json(json const& j)
{
    std::string const where = "instance";
    Instance inst;
    try {
        inst.kind = parse_kind(field<std::string>(j, "kind", where));
    } catch (ProblemError const& e) {
        throw IoError(where + ": field 'kind': " + e.what());
    }
    inst.n = field<int>(j, "n", where);
    inst.M = field<int>(j, "M", where);
    inst.seed = field<std::uint64_t>(j, "seed", where);
    if (inst.n < 1) { throw IoError(where + ": field 'n' must be positive"); }
    switch (inst.kind) {
    case ProblemKind::MOTSP: {
        auto const coords = field<json>(j, "coords", where);
        if (!coords.is_array()) { throw IoError(where + ": field 'coords' must be an array"); }
        for (std::size_t u = 0; u < coords.size(); ++u) {
            auto const w = where + ".coords[" + std::to_string(u) + "]";
            if (!coords[u].is_array()) { throw IoError(w + ": expected an array of points"); }
            std::vector<Point2> per;
            for (std::size_t m = 0; m < coords[u].size(); ++m) {
                per.push_back(point_from(coords[u][m], w + "[" + std::to_string(m) + "]"));
            }
            inst.coords.push_back(std::move(per));
        }
        break;
    }
    case ProblemKind::MOCVRP: {
        inst.depot = point_from(field<json>(j, "depot", where), where + ".depot");
        auto const coords = field<json>(j, "coords", where);
        if (!coords.is_array()) { throw IoError(where + ": field 'coords' must be an array"); }
        for (std::size_t u = 0; u < coords.size(); ++u) {
            inst.coords.push_back({point_from(coords[u], where + ".coords[" + std::to_string(u) + "]")});
        }
        inst.demands = field<std::vector<int>>(j, "demands", where);
        inst.capacity = field<double>(j, "capacity", where);
        break;
    }
    case ProblemKind::MOKP: {
        inst.weights = field<std::vector<double>>(j, "weights", where);
        auto const values = field<std::vector<std::vector<double>>>(j, "values", where);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i].size() != 2) { throw IoError(where + ".values[" + std::to_string(i) + "]: expected [v1, v2]"); }
            inst.values.push_back({values[i][0], values[i][1]});
        }
        inst.capacity = field<double>(j, "capacity", where);
        break;
    }
    }
    try {
        validate_instance(inst);
    } catch (ProblemError const& e) {
        throw IoError(where + ": " + e.what());
    }
    return inst;
}

void write_atomic(std::filesystem::path const& path, std::string const& content)
{
    if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
        out << content;
        if (!out) { throw IoError("write failed for '" + path.string() + "'"); }
    }
    std::filesystem::rename(tmp, path);
}

void save_instances(std::filesystem::path const& path, std::vector<Instance> const& instances)
{
    std::string out;
    for (auto const& inst : instances) { out += to_json(inst).dump() + "\n"; }
    write_atomic(path, out);
}

std::vector<Instance> load_instances(std::filesystem::path const& path)
{
    std::istringstream in(read_file(path));
    std::vector<Instance> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
        auto const where = path.string() + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (json::parse_error const& e) {
            throw IoError(where + ": malformed JSON (" + e.what() + ")");
        }
        try {
            out.push_back(instance_from_json(j));
        } catch (IoError const& e) {
            throw IoError(where + ": " + e.what());
        }
    }
    return out;
}

void save_front(std::filesystem::path const& path, std::vector<FrontRow> const& rows)
{
    std::size_t const M = rows.empty() ? 2 : rows.front().f.size();
    std::string out;
    for (std::size_t m = 0; m < M; ++m) { out += "f" + std::to_string(m + 1) + ","; }
    out += "solution\n";
    for (auto const& row : rows) {
        if (row.f.size() != M) { throw IoError("front rows differ in dimension"); }
        for (double v : row.f) { out += format_double(v) + ","; }
        out += row.solution + "\n";
    }
    write_atomic(path, out);
}

void save_front(std::filesystem::path const& path, ProblemKind kind, std::vector<ArchiveEntry> const& entries)
{
    std::vector<FrontRow> rows;
    for (auto const& e : entries) { rows.push_back({to_reported(kind, e.f), encode_solution(e.solution)}); }
    save_front(path, rows);
}

std::vector<FrontRow> load_front(std::filesystem::path const& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) { throw IoError(path.string() + ": empty front file"); }
    auto header = split(line, ',');
    if (!header.empty() && !header.back().empty() && header.back().back() == '\r') { header.back().pop_back(); }
    std::size_t M = 0;
    while (M < header.size() && header[M] == "f" + std::to_string(M + 1)) { ++M; }
    bool const with_solution = M < header.size() && header[M] == "solution";
    if (M < 1 || header.size() != M + (with_solution ? 1 : 0)) {
        throw IoError(path.string() + ":1: expected header f1,...,fM[,solution]");
    }
    std::vector<FrontRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
        auto cells = split(line, ',');
        auto const where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() != header.size()) {
            throw IoError(where + ": expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
        }
        FrontRow row;
        for (std::size_t m = 0; m < M; ++m) { row.f.push_back(parse_double(cells[m], where + " column f" + std::to_string(m + 1))); }
        if (with_solution) {
            row.solution = cells[M];
            if (!row.solution.empty() && row.solution.back() == '\r') { row.solution.pop_back(); }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void save_weights(std::filesystem::path const& path, PreferenceSchedule const& schedule)
{
    std::size_t const M = schedule.items.empty() ? 2 : schedule.items.front().lambda.size();
    std::string out;
    for (std::size_t m = 0; m < M; ++m) { out += "lambda" + std::to_string(m + 1) + ","; }
    out += "w1,w2\n";
    for (auto const& p : schedule.items) {
        for (double v : p.lambda) { out += format_double(v) + ","; }
        out += format_double(p.w.scalar) + "," + format_double(p.w.indicator) + "\n";
    }
    write_atomic(path, out);
}

PreferenceSchedule load_weights(std::filesystem::path const& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) { throw IoError(path.string() + ": empty weight file"); }
    auto header = split(line, ',');
    std::size_t M = 0;
    while (M < header.size() && header[M] == "lambda" + std::to_string(M + 1)) { ++M; }
    if (M < 2 || header.size() != M + 2) { throw IoError(path.string() + ":1: expected header lambda1,...,lambdaM,w1,w2"); }
    PreferenceSchedule s;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) { continue; }
        auto cells = split(line, ',');
        auto const where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() != M + 2) { throw IoError(where + ": wrong column count"); }
        Preference p;
        for (std::size_t m = 0; m < M; ++m) { p.lambda.push_back(parse_double(cells[m], where)); }
        p.w.scalar = parse_double(cells[M], where);
        p.w.indicator = parse_double(cells[M + 1], where);
        try {
            validate_weight(p.lambda);
        } catch (ScalarizationError const& e) {
            throw IoError(where + ": " + e.what());
        }
        s.items.push_back(std::move(p));
    }
    return s;
}

json to_json(ModelConfig const& cfg)
{
    return {
        {"kind", std::string(to_string(cfg.kind))},
        {"M", cfg.M},
        {"d", cfg.d},
        {"L", cfg.L},
        {"Y", cfg.Y},
        {"C", cfg.C},
        {"ff_hidden", cfg.ff_hidden},
        {"hyper_hidden", cfg.hyper_hidden},
        {"hypernetwork", cfg.hypernetwork},
        {"batch_norm", cfg.batch_norm},
        {"node_to_point", cfg.node_to_point},
        {"point_to_node", cfg.point_to_node},
        {"point_to_point", cfg.point_to_point},
    };
}

ModelConfig model_config_from_json(json const& j)
{
    std::string const where = "checkpoint.config";
    ModelConfig cfg;
    try {
        cfg.kind = parse_kind(field<std::string>(j, "kind", where));
    } catch (ProblemError const& e) {
        throw IoError(where + ": " + e.what());
    }
    cfg.M = field<int>(j, "M", where);
    cfg.d = field<int>(j, "d", where);
    cfg.L = field<int>(j, "L", where);
    cfg.Y = field<int>(j, "Y", where);
    cfg.C = field<double>(j, "C", where);
    cfg.ff_hidden = field<int>(j, "ff_hidden", where);
    cfg.hyper_hidden = field<int>(j, "hyper_hidden", where);
    cfg.hypernetwork = field<bool>(j, "hypernetwork", where);
    cfg.batch_norm = field<bool>(j, "batch_norm", where);
    cfg.node_to_point = field<bool>(j, "node_to_point", where);
    cfg.point_to_node = field<bool>(j, "point_to_node", where);
    cfg.point_to_point = field<bool>(j, "point_to_point", where);
    try {
        cfg.validate();
    } catch (ModelError const& e) {
        throw IoError(where + ": " + e.what());
    }
    return cfg;
}

void save_checkpoint(std::filesystem::path const& path, Checkpoint const& ckpt)
{
    json tensors = json::object();
    for (auto const& [name, m] : ckpt.model.params) {
        tensors[name] = {{"shape", {m.rows, m.cols}}, {"data", m.data}};
    }
    json j = {
        {"format", "nhde-checkpoint"},
        {"version", 1},
        {"variant", ckpt.variant},
        {"seed", ckpt.seed},
        {"lineage", ckpt.lineage},
        {"config", to_json(ckpt.model.config)},
        {"extra", ckpt.extra},
        {"tensors", tensors},
    };
    write_atomic(path, j.dump());
}

Checkpoint load_checkpoint(std::filesystem::path const& path)
{
    auto const where = path.string();
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (json::parse_error const& e) {
        throw IoError(where + ": malformed checkpoint (" + e.what() + ")");
    }
    if (field<std::string>(j, "format", where) != "nhde-checkpoint") { throw IoError(where + ": field 'format' is not nhde-checkpoint"); }
    if (field<int>(j, "version", where) != 1) { throw IoError(where + ": unsupported checkpoint version"); }
    Checkpoint ck;
    ck.variant = field<std::string>(j, "variant", where);
    ck.seed = field<std::uint64_t>(j, "seed", where);
    ck.lineage = field<std::vector<std::string>>(j, "lineage", where);
    ck.model.config = model_config_from_json(field<json>(j, "config", where));
    if (j.contains("extra")) { ck.extra = j["extra"]; }
    auto const tensors = field<json>(j, "tensors", where);
    if (!tensors.is_object()) { throw IoError(where + ": field 'tensors' must be an object"); }
    auto const shapes = parameter_shapes(ck.model.config);
    if (tensors.size() != shapes.size()) {
        throw IoError(where + ": expected " + std::to_string(shapes.size()) + " tensors, found " + std::to_string(tensors.size()));
    }
    for (auto const& [name, shape] : shapes) {
        auto const w = where + ": tensor '" + name + "'";
        if (!tensors.contains(name)) { throw IoError(w + " is missing"); }
        auto const& t = tensors[name];
        auto const dims = field<std::vector<std::size_t>>(t, "shape", w);
        if (dims.size() != 2 || dims[0] != shape.rows || dims[1] != shape.cols) { throw IoError(w + " has the wrong shape"); }
        ad::Matrix m(shape.rows, shape.cols);
        auto const data = field<std::vector<double>>(t, "data", w);
        if (data.size() != m.size()) { throw IoError(w + " has " + std::to_string(data.size()) + " values"); }
        for (double v : data) {
            if (!std::isfinite(v)) { throw IoError(w + " contains a non-finite value"); }
        }
        m.data = data;
        ck.model.params.emplace(name, std::move(m));
    }
    return ck;
}

void save_trace(std::filesystem::path const& path, std::vector<TraceRow> const& trace)
{
    std::string out = "i,hv,archive_size,candidates,comparisons\n";
    for (auto const& r : trace) {
        out += std::to_string(r.step) + "," + format_double(r.hv) + "," + std::to_string(r.archive_size) + "," +
               std::to_string(r.candidates) + "," + std::to_string(r.comparisons) + "\n";
    }
    write_atomic(path, out);
}

void save_json(std::filesystem::path const& path, json const& j)
{
    write_atomic(path, j.dump(2) + "\n");
}

json load_json(std::filesystem::path const& path)
{
    try {
        return json::parse(read_file(path));
    } catch (json::parse_error const& e) {
        throw IoError(path.string() + ": malformed JSON (" + e.what() + ")");
    }
}

} // namespace nhde
