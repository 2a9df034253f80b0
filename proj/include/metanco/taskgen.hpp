#pragma once

#include "metanco/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace metanco {

enum class Problem { TSP, CVRP };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double dist(const Point& a, const Point& b);

/// Parameters of one instance distribution: problem kind, node count N,
/// mode count M, vehicle capacity C (CVRP only) and coordinate scale L.
struct TaskSpec {
    Problem problem = Problem::TSP;
    int n_nodes = 1;            // N
    int n_modes = 0;            // M; 0 means uniform placement
    int capacity = 0;           // C; CVRP only
    double scale = 1.0;         // L
    double cluster_std = 0.05;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;

    /// Stable human-readable identifier (used in logs and reports).
    std::string id() const;

    bool operator==(const TaskSpec& other) const;
};

struct Instance {
    std::vector<Point> coords;      // customers for CVRP, all nodes for TSP
    Point depot;                    // CVRP only
    std::vector<int> demands;       // CVRP only, one per customer
    int capacity = 0;               // CVRP only
    bool is_cvrp = false;
    std::optional<TaskSpec> source_task;
    std::string source_tag;         // "external" when not generated

    int n() const { return static_cast<int>(coords.size()); }
    void validate() const;
};

struct TaskSet {
    std::vector<TaskSpec> tasks;
    // Sampling over the set is uniform.

    void validate() const;
};

namespace taskgen {

/// Minimum pairwise distance target for m modes in the unit square.
double spread_floor(int m);

/// Maximin rejection sampling of m mode centers in [0,1]^2. Candidates are
/// drawn uniformly and accepted when at least spread_floor(m) away from all
/// accepted modes; after 200 failed retries the best candidate so far is
/// taken, so the call never fails.
std::vector<Point> sample_modes(int m, RandomStream& rng);

Instance generate_instance(const TaskSpec& spec, RandomStream& rng);

/// Instance `index` of the dataset defined by (spec, spec.seed): each index
/// gets its own substream, so datasets are order-independent.
Instance generate_instance(const TaskSpec& spec, std::uint64_t index);

std::vector<Instance> generate_dataset(const TaskSpec& spec, int count,
                                       std::uint64_t index_offset = 0);

enum class PresetScale { Paper, Desk };

/// Named task collections. Paper scale carries the published parameter
/// lists; desk scale the reduced suites sized for exact-oracle evaluation.
TaskSet preset_taskset(const std::string& name, PresetScale scale);

std::vector<std::string> preset_names();

} // namespace taskgen
} // namespace metanco
