#include "metanco/io.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metanco::io {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

/// "KEY : value" / "KEY: value" / bare section keyword.
bool split_key_value(const std::string& line, std::string& key, std::string& value) {
    const auto pos = line.find(':');
    if (pos == std::string::npos) {
        key = trim(line);
        value.clear();
        return false;
    }
    key = trim(line.substr(0, pos));
    value = trim(line.substr(pos + 1));
    return true;
}

struct CoordRow {
    int index;
    double x, y;
};

bool looks_numeric(const std::string& t) {
    return !t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-' ||
                          t[0] == '+' || t[0] == '.');
}

std::vector<CoordRow> read_coord_section(std::istream& in, int dimension, int& line_no) {
    std::vector<CoordRow> rows;
    std::string line;
    while (static_cast<int>(rows.size()) < dimension && std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        // A keyword line (EOF or the next section) ends the coordinate block
        // early; the caller reports the row-count mismatch.
        if (!looks_numeric(t)) break;
        CoordRow row;
        std::istringstream ls(t);
        if (!(ls >> row.index >> row.x >> row.y))
            throw std::invalid_argument("malformed coordinate line " + std::to_string(line_no) +
                                        ": \"" + t + "\"");
        std::string rest;
        if (ls >> rest)
            throw std::invalid_argument("malformed coordinate line " + std::to_string(line_no) +
                                        ": trailing data \"" + rest + "\"");
        rows.push_back(row);
    }
    return rows;
}

} // namespace

Instance parse_tsplib(std::istream& in) {
    std::string line;
    int dimension = -1;
    int line_no = 0;
    std::string type, edge_weight_type;
    std::vector<CoordRow> coords;
    bool saw_coords = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::string key, value;
        split_key_value(t, key, value);
        if (key == "EOF") break;
        if (key == "TYPE") {
            type = value;
        } else if (key == "DIMENSION") {
            dimension = std::stoi(value);
        } else if (key == "EDGE_WEIGHT_TYPE") {
            edge_weight_type = value;
        } else if (key == "NODE_COORD_SECTION") {
            if (dimension < 1)
                throw std::invalid_argument("NODE_COORD_SECTION before DIMENSION");
            if (edge_weight_type != "EUC_2D")
                throw std::invalid_argument("unsupported EDGE_WEIGHT_TYPE: " +
                                            (edge_weight_type.empty() ? std::string("(missing)")
                                                                      : edge_weight_type));
            coords = read_coord_section(in, dimension, line_no);
            saw_coords = true;
        }
        // NAME / COMMENT and unknown keys are ignored.
    }
    if (!type.empty() && type != "TSP" && type.rfind("TSP", 0) != 0)
        throw std::invalid_argument("unsupported TYPE: " + type);
    if (!saw_coords) throw std::invalid_argument("missing NODE_COORD_SECTION");
    if (static_cast<int>(coords.size()) != dimension)
        throw std::invalid_argument("DIMENSION mismatch: header says " + std::to_string(dimension) +
                                    ", parsed " + std::to_string(coords.size()) + " coordinates");

    Instance inst;
    inst.coords.resize(dimension);
    std::vector<bool> seen(dimension, false);
    for (const auto& row : coords) {
        if (row.index < 1 || row.index > dimension || seen[row.index - 1])
            throw std::invalid_argument("bad node index " + std::to_string(row.index) +
                                        " in NODE_COORD_SECTION");
        seen[row.index - 1] = true;
        inst.coords[row.index - 1] = {row.x, row.y};
    }
    inst.source_tag = "external";
    inst.validate();
    return inst;
}

Instance parse_tsplib_text(const std::string& text) {
    std::istringstream in(text);
    return parse_tsplib(in);
}

Instance parse_cvrplib(std::istream& in) {
    std::string line;
    int dimension = -1, capacity = -1;
    int line_no = 0;
    std::string type;
    std::vector<CoordRow> coords;
    std::vector<std::pair<int, int>> demands; // (node index, demand)
    int depot_index = -1;
    bool saw_coords = false, saw_demands = false, saw_depot = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::string key, value;
        split_key_value(t, key, value);
        if (key == "EOF") break;
        if (key == "TYPE") {
            type = value;
        } else if (key == "DIMENSION") {
            dimension = std::stoi(value);
        } else if (key == "CAPACITY") {
            capacity = std::stoi(value);
        } else if (key == "NODE_COORD_SECTION") {
            if (dimension < 1)
                throw std::invalid_argument("NODE_COORD_SECTION before DIMENSION");
            coords = read_coord_section(in, dimension, line_no);
            saw_coords = true;
        } else if (key == "DEMAND_SECTION") {
            if (dimension < 1) throw std::invalid_argument("DEMAND_SECTION before DIMENSION");
            for (int i = 0; i < dimension && std::getline(in, line); ++i) {
                ++line_no;
                std::istringstream ls(trim(line));
                int idx, dem;
                if (!(ls >> idx >> dem))
                    throw std::invalid_argument("malformed demand line " +
                                                std::to_string(line_no));
                demands.emplace_back(idx, dem);
            }
            saw_demands = true;
        } else if (key == "DEPOT_SECTION") {
            while (std::getline(in, line)) {
                ++line_no;
                const std::string dt = trim(line);
                if (dt.empty()) continue;
                const int idx = std::stoi(dt);
                if (idx == -1) break;
                if (depot_index != -1)
                    throw std::invalid_argument("multiple depots in DEPOT_SECTION");
                depot_index = idx;
            }
            saw_depot = true;
        }
    }
    if (!type.empty() && type != "CVRP")
        throw std::invalid_argument("unsupported TYPE: " + type);
    if (!saw_coords) throw std::invalid_argument("missing NODE_COORD_SECTION");
    if (!saw_demands) throw std::invalid_argument("missing DEMAND_SECTION");
    if (!saw_depot || depot_index == -1) throw std::invalid_argument("missing DEPOT_SECTION");
    if (capacity < 1) throw std::invalid_argument("missing CAPACITY");
    if (static_cast<int>(coords.size()) != dimension)
        throw std::invalid_argument("DIMENSION mismatch: header says " + std::to_string(dimension) +
                                    ", parsed " + std::to_string(coords.size()) + " coordinates");

    std::vector<Point> points(dimension);
    std::vector<int> demand_by_node(dimension, -1);
    for (const auto& row : coords) {
        if (row.index < 1 || row.index > dimension)
            throw std::invalid_argument("bad node index in NODE_COORD_SECTION");
        points[row.index - 1] = {row.x, row.y};
    }
    for (const auto& [idx, dem] : demands) {
        if (idx < 1 || idx > dimension)
            throw std::invalid_argument("bad node index in DEMAND_SECTION");
        demand_by_node[idx - 1] = dem;
    }
    if (depot_index < 1 || depot_index > dimension)
        throw std::invalid_argument("bad depot index " + std::to_string(depot_index));
    if (demand_by_node[depot_index - 1] != 0)
        throw std::invalid_argument("depot demand must be 0, got " +
                                    std::to_string(demand_by_node[depot_index - 1]));

    Instance inst;
    inst.is_cvrp = true;
    inst.capacity = capacity;
    inst.depot = points[depot_index - 1];
    for (int i = 0; i < dimension; ++i) {
        if (i == depot_index - 1) continue;
        if (demand_by_node[i] < 0)
            throw std::invalid_argument("missing demand for node " + std::to_string(i + 1));
        inst.coords.push_back(points[i]);
        inst.demands.push_back(demand_by_node[i]);
    }
    inst.source_tag = "external";
    inst.validate();
    return inst;
}

Instance parse_cvrplib_text(const std::string& text) {
    std::istringstream in(text);
    return parse_cvrplib(in);
}

Instance normalize_instance(const Instance& inst) {
    double min_x = inst.coords[0].x, max_x = min_x;
    double min_y = inst.coords[0].y, max_y = min_y;
    auto visit = [&](const Point& p) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    };
    for (const Point& p : inst.coords) visit(p);
    if (inst.is_cvrp) visit(inst.depot);

    const double extent = std::max(max_x - min_x, max_y - min_y);
    const double scale = extent > 0.0 ? 1.0 / extent : 1.0;
    Instance out = inst;
    auto map = [&](const Point& p) -> Point {
        return {(p.x - min_x) * scale, (p.y - min_y) * scale};
    };
    for (Point& p : out.coords) p = map(p);
    if (out.is_cvrp) out.depot = map(out.depot);
    return out;
}

json to_json(const TaskSpec& spec) {
    return json{{"problem", spec.problem == Problem::TSP ? "tsp" : "cvrp"},
                {"n_nodes", spec.n_nodes},
                {"n_modes", spec.n_modes},
                {"capacity", spec.capacity},
                {"scale", spec.scale},
                {"cluster_std", spec.cluster_std},
                {"seed", spec.seed}};
}

TaskSpec taskspec_from_json(const json& j) {
    TaskSpec spec;
    spec.problem = j.at("problem").get<std::string>() == "cvrp" ? Problem::CVRP : Problem::TSP;
    spec.n_nodes = j.at("n_nodes").get<int>();
    spec.n_modes = j.at("n_modes").get<int>();
    spec.capacity = j.at("capacity").get<int>();
    spec.scale = j.at("scale").get<double>();
    spec.cluster_std = j.at("cluster_std").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

json to_json(const Instance& inst) {
    json coords = json::array();
    for (const Point& p : inst.coords) coords.push_back(json::array({p.x, p.y}));
    json j{{"coords", std::move(coords)}, {"is_cvrp", inst.is_cvrp}};
    if (inst.is_cvrp) {
        j["depot"] = json::array({inst.depot.x, inst.depot.y});
        j["demands"] = inst.demands;
        j["capacity"] = inst.capacity;
    }
    if (inst.source_task) j["source_task"] = to_json(*inst.source_task);
    if (!inst.source_tag.empty()) j["source_tag"] = inst.source_tag;
    return j;
}

Instance instance_from_json(const json& j) {
    Instance inst;
    for (const auto& c : j.at("coords"))
        inst.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    inst.is_cvrp = j.at("is_cvrp").get<bool>();
    if (inst.is_cvrp) {
        inst.depot = {j.at("depot").at(0).get<double>(), j.at("depot").at(1).get<double>()};
        inst.demands = j.at("demands").get<std::vector<int>>();
        inst.capacity = j.at("capacity").get<int>();
    }
    if (j.contains("source_task")) inst.source_task = taskspec_from_json(j.at("source_task"));
    if (j.contains("source_tag")) inst.source_tag = j.at("source_tag").get<std::string>();
    inst.validate();
    return inst;
}

namespace {

constexpr int kDatasetVersion = 1;
constexpr int kCheckpointVersion = 1;

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json record_to_json(const DatasetRecord& rec) {
    json j{{"instance", to_json(rec.instance)}};
    if (rec.tour) j["tour"] = rec.tour->order;
    if (rec.plan) j["plan"] = rec.plan->routes;
    if (rec.labels) j["labels"] = json{{"n", rec.labels->n}, {"s", rec.labels->s}};
    return j;
}

DatasetRecord record_from_json(const json& j) {
    DatasetRecord rec;
    rec.instance = instance_from_json(j.at("instance"));
    if (j.contains("tour")) rec.tour = Tour{j.at("tour").get<std::vector<int>>()};
    if (j.contains("plan"))
        rec.plan = RoutePlan{j.at("plan").get<std::vector<std::vector<int>>>()};
    if (j.contains("labels")) {
        edgenet::EdgeLabels labels;
        labels.n = j.at("labels").at("n").get<int>();
        labels.s = j.at("labels").at("s").get<std::vector<double>>();
        rec.labels = std::move(labels);
    }
    return rec;
}

} // namespace

void write_dataset(const std::string& path, const std::vector<DatasetRecord>& records,
                   const std::optional<TaskSpec>& task) {
    json header{{"format", "metanco-dataset"},
                {"version", kDatasetVersion},
                {"count", records.size()}};
    if (task) header["task"] = to_json(*task);

    std::string body = header.dump() + "\n";
    for (const auto& rec : records) body += record_to_json(rec).dump() + "\n";
    const json footer{{"checksum", hex64(fnv1a(body))}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << body << footer.dump() << "\n";
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!trim(line).empty()) lines.push_back(line);
    if (lines.size() < 2) throw std::runtime_error("checksum failure: truncated file " + path);

    const json footer = json::parse(lines.back());
    if (!footer.contains("checksum"))
        throw std::runtime_error("checksum failure: missing checksum line in " + path);
    std::string body;
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) body += lines[i] + "\n";
    if (footer.at("checksum").get<std::string>() != hex64(fnv1a(body)))
        throw std::runtime_error("checksum failure in " + path);

    const json header = json::parse(lines.front());
    if (header.at("format").get<std::string>() != "metanco-dataset")
        throw std::runtime_error("not a dataset file: " + path);
    if (header.at("version").get<int>() != kDatasetVersion)
        throw std::runtime_error("version mismatch: dataset version " +
                                 header.at("version").dump() + " in " + path);

    Dataset ds;
    if (header.contains("task")) ds.task = taskspec_from_json(header.at("task"));
    for (std::size_t i = 1; i + 1 < lines.size(); ++i)
        ds.records.push_back(record_from_json(json::parse(lines[i])));
    if (ds.records.size() != header.at("count").get<std::size_t>())
        throw std::runtime_error("checksum failure: record count mismatch in " + path);
    return ds;
}

void save_checkpoint(const std::string& path, const ParameterSet& theta) {
    json params;
    for (const auto& [name, arr] : theta.values)
        params[name] = json{{"rows", arr.rows}, {"cols", arr.cols}, {"data", arr.data}};
    const json j{{"format", "metanco-checkpoint"},
                 {"version", kCheckpointVersion},
                 {"meta", theta.meta},
                 {"params", std::move(params)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

ParameterSet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "metanco-checkpoint")
        throw std::runtime_error("not a checkpoint file: " + path);
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("version mismatch: checkpoint version " +
                                 j.at("version").dump() + " in " + path);
    ParameterSet theta;
    theta.meta = j.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& [name, pj] : j.at("params").items()) {
        ad::Array arr(pj.at("rows").get<int>(), pj.at("cols").get<int>());
        arr.data = pj.at("data").get<std::vector<double>>();
        if (arr.data.size() != static_cast<std::size_t>(arr.rows) * arr.cols)
            throw std::runtime_error("corrupt checkpoint parameter " + name + " in " + path);
        theta.values.emplace(name, std::move(arr));
    }
    return theta;
}

std::string format_double(double v) { return json(v).dump(); }

namespace {

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace

void write_report(const std::string& path, const json& config,
                  const std::vector<std::string>& columns,
                  const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# " << json{{"timestamp", iso_timestamp()}}.dump() << "\n";
    out << "# " << config.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::invalid_argument("write_report: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

} // namespace

Report read_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    Report rep;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("malformed report header in " + path);
    rep.timestamp_header = json::parse(line.substr(2));
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("malformed report config in " + path);
    rep.config = json::parse(line.substr(2));
    if (!std::getline(in, line)) throw std::runtime_error("missing report columns in " + path);
    rep.columns = split_csv(line);
    while (std::getline(in, line))
        if (!trim(line).empty()) rep.rows.push_back(split_csv(line));
    return rep;
}

} // namespace metanco::io
