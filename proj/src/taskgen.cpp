#include "metanco/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metanco {

double dist(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

void TaskSpec::validate() const {
    if (n_nodes < 1) throw std::invalid_argument("TaskSpec: n_nodes must be >= 1");
    if (n_modes < 0) throw std::invalid_argument("TaskSpec: n_modes must be >= 0");
    if (n_modes > n_nodes) throw std::invalid_argument("TaskSpec: n_modes must be <= n_nodes");
    if (scale <= 0.0) throw std::invalid_argument("TaskSpec: scale must be > 0");
    if (cluster_std <= 0.0) throw std::invalid_argument("TaskSpec: cluster_std must be > 0");
    if (problem == Problem::CVRP) {
        if (capacity < 1) throw std::invalid_argument("TaskSpec: CVRP capacity must be >= 1");
    } else if (capacity != 0) {
        throw std::invalid_argument("TaskSpec: capacity only valid for CVRP");
    }
}

std::string TaskSpec::id() const {
    std::string s = problem == Problem::TSP ? "tsp" : "cvrp";
    s += "-n" + std::to_string(n_nodes);
    s += "-m" + std::to_string(n_modes);
    if (problem == Problem::CVRP) s += "-c" + std::to_string(capacity);
    if (scale != 1.0) s += "-l" + std::to_string(scale);
    return s;
}

bool TaskSpec::operator==(const TaskSpec& other) const {
    return problem == other.problem && n_nodes == other.n_nodes &&
           n_modes == other.n_modes && capacity == other.capacity &&
           scale == other.scale && cluster_std == other.cluster_std &&
           seed == other.seed;
}

void Instance::validate() const {
    if (coords.empty()) throw std::invalid_argument("Instance: empty coordinate list");
    if (is_cvrp) {
        if (capacity < 1) throw std::invalid_argument("Instance: CVRP capacity must be >= 1");
        if (demands.size() != coords.size())
            throw std::invalid_argument("Instance: demand count must equal customer count");
        for (int d : demands) {
            if (d < 1 || d > capacity)
                throw std::invalid_argument("Instance: demand outside [1, capacity]");
        }
    }
}

void TaskSet::validate() const {
    if (tasks.empty()) throw std::invalid_argument("TaskSet: empty");
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        tasks[i].validate();
        for (std::size_t j = i + 1; j < tasks.size(); ++j) {
            if (tasks[i] == tasks[j])
                throw std::invalid_argument("TaskSet: duplicate TaskSpec entries");
        }
    }
}

namespace taskgen {

double spread_floor(int m) {
    return 0.7 / std::sqrt(static_cast<double>(m));
}

std::vector<Point> sample_modes(int m, RandomStream& rng) {
    if (m < 1) throw std::invalid_argument("sample_modes: m must be >= 1");
    const double floor = spread_floor(m);
    constexpr int kMaxRetries = 200;
    std::vector<Point> modes;
    modes.reserve(m);
    for (int i = 0; i < m; ++i) {
        Point best{};
        double best_min = -1.0;
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
            Point cand{rng.next_double(), rng.next_double()};
            double min_d = 2.0;
            for (const Point& p : modes) min_d = std::min(min_d, dist(cand, p));
            if (min_d > best_min) {
                best_min = min_d;
                best = cand;
            }
            if (min_d >= floor) {
                accepted = true;
                break;
            }
        }
        (void)accepted; // retry cap degrades to the best candidate seen
        modes.push_back(best);
    }
    return modes;
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

Instance generate_instance(const TaskSpec& spec, RandomStream& rng) {
    spec.validate();
    Instance inst;
    inst.source_task = spec;
    inst.source_tag = spec.id();
    inst.is_cvrp = spec.problem == Problem::CVRP;

    std::vector<Point> modes;
    if (spec.n_modes > 0) modes = sample_modes(spec.n_modes, rng);

    inst.coords.reserve(spec.n_nodes);
    for (int i = 0; i < spec.n_nodes; ++i) {
        Point p;
        if (spec.n_modes > 0) {
            const auto k = rng.next_below(static_cast<std::uint64_t>(spec.n_modes));
            const Point& c = modes[k];
            p.x = clamp01(c.x + spec.cluster_std * rng.gaussian());
            p.y = clamp01(c.y + spec.cluster_std * rng.gaussian());
        } else {
            p.x = rng.next_double();
            p.y = rng.next_double();
        }
        p.x *= spec.scale;
        p.y *= spec.scale;
        inst.coords.push_back(p);
    }

    if (inst.is_cvrp) {
        inst.depot = Point{rng.next_double() * spec.scale, rng.next_double() * spec.scale};
        inst.capacity = spec.capacity;
        inst.demands.reserve(spec.n_nodes);
        for (int i = 0; i < spec.n_nodes; ++i) {
            inst.demands.push_back(rng.uniform_int(1, std::min(9, spec.capacity)));
        }
    }
    return inst;
}

Instance generate_instance(const TaskSpec& spec, std::uint64_t index) {
    RandomStream rng = RandomStream::substream(spec.seed, index);
    return generate_instance(spec, rng);
}

std::vector<Instance> generate_dataset(const TaskSpec& spec, int count,
                                       std::uint64_t index_offset) {
    std::vector<Instance> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        out.push_back(generate_instance(spec, index_offset + static_cast<std::uint64_t>(i)));
    }
    return out;
}

namespace {

TaskSpec tsp_spec(int n, int m, double l, std::uint64_t seed) {
    TaskSpec s;
    s.problem = Problem::TSP;
    s.n_nodes = n;
    s.n_modes = m;
    s.scale = l;
    s.seed = seed;
    return s;
}

TaskSpec cvrp_spec(int n, int m, int c, std::uint64_t seed) {
    TaskSpec s;
    s.problem = Problem::CVRP;
    s.n_nodes = n;
    s.n_modes = m;
    s.capacity = c;
    s.seed = seed;
    return s;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"tsp-var-size", "tsp-var-mode", "tsp-mixed-var", "tsp-var-scale",
            "cvrp-var-size", "cvrp-var-mode", "cvrp-var-capacity"};
}

TaskSet preset_taskset(const std::string& name, PresetScale scale) {
    TaskSet set;
    std::uint64_t idx = 0;
    auto add_tsp = [&](int n, int m, double l) { set.tasks.push_back(tsp_spec(n, m, l, idx++)); };
    auto add_cvrp = [&](int n, int m, int c) { set.tasks.push_back(cvrp_spec(n, m, c, idx++)); };

    const bool paper = scale == PresetScale::Paper;
    if (name == "tsp-var-size") {
        if (paper) {
            for (int n : {10, 20, 30, 50}) add_tsp(n, 0, 1.0);
        } else {
            for (int n : {6, 10, 14}) add_tsp(n, 0, 1.0);
        }
    } else if (name == "tsp-var-mode") {
        if (paper) {
            for (int m : {1, 2, 5}) add_tsp(40, m, 1.0);
        } else {
            for (int m : {1, 2, 5}) add_tsp(10, m, 1.0);
        }
    } else if (name == "tsp-mixed-var") {
        if (paper) {
            for (int n : {20, 30, 50})
                for (int m : {1, 2, 4}) add_tsp(n, m, 1.0);
        } else {
            for (int n : {6, 10})
                for (int m : {1, 2}) add_tsp(n, m, 1.0);
        }
    } else if (name == "tsp-var-scale") {
        if (paper) {
            for (double l : {1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 10.0}) add_tsp(50, 0, l);
        } else {
            for (double l : {1.0, 2.0, 5.0}) add_tsp(10, 0, l);
        }
    } else if (name == "cvrp-var-size") {
        if (paper) {
            add_cvrp(10, 0, 20);
            add_cvrp(20, 0, 30);
            add_cvrp(30, 0, 35);
            add_cvrp(50, 0, 40);
            add_cvrp(100, 0, 50);
        } else {
            add_cvrp(5, 0, 15);
            add_cvrp(6, 0, 20);
            add_cvrp(8, 0, 25);
        }
    } else if (name == "cvrp-var-mode") {
        if (paper) {
            for (int m : {1, 2, 5}) add_cvrp(50, m, 40);
        } else {
            for (int m : {1, 2, 3}) add_cvrp(7, m, 20);
        }
    } else if (name == "cvrp-var-capacity") {
        if (paper) {
            for (int c : {10, 30, 40}) add_cvrp(50, 0, c);
        } else {
            for (int c : {10, 20, 30}) add_cvrp(7, 0, c);
        }
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    set.validate();
    return set;
}

} // namespace taskgen
} // namespace metanco
