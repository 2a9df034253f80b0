#pragma once

#include "metanco/edgenet.hpp"

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace metanco::io {

using json = nlohmann::ordered_json;

/// TSPLIB95 parser, EUC_2D subset: TYPE TSP, NODE_COORD_SECTION with 1-based
/// indices. Coordinates are stored raw; normalization is a separate pass.
Instance parse_tsplib(std::istream& in);
Instance parse_tsplib_text(const std::string& text);

/// CVRPLIB parser: TYPE CVRP with NODE_COORD_SECTION, DEMAND_SECTION,
/// DEPOT_SECTION and CAPACITY. The depot's demand entry must be 0.
Instance parse_cvrplib(std::istream& in);
Instance parse_cvrplib_text(const std::string& text);

/// Divides every coordinate by the maximum axis extent, translating the
/// bounding box to the origin first; applied before model inference when
/// --normalize is on.
Instance normalize_instance(const Instance& inst);

struct DatasetRecord {
    Instance instance;
    std::optional<Tour> tour;
    std::optional<RoutePlan> plan;
    std::optional<edgenet::EdgeLabels> labels;
};

/// Line-delimited JSON with a versioned header line and a trailing checksum
/// line (FNV-1a over the preceding bytes). Round-trips doubles bit-exactly.
void write_dataset(const std::string& path, const std::vector<DatasetRecord>& records,
                   const std::optional<TaskSpec>& task = std::nullopt);

struct Dataset {
    std::vector<DatasetRecord> records;
    std::optional<TaskSpec> task;
};

Dataset read_dataset(const std::string& path);

void save_checkpoint(const std::string& path, const ParameterSet& theta);
ParameterSet load_checkpoint(const std::string& path);

/// CSV report with two JSON header lines: the first carries only the
/// timestamp, the second the full reproducibility config, so reruns are
/// byte-identical outside the timestamp line.
void write_report(const std::string& path, const json& config,
                  const std::vector<std::string>& columns,
                  const std::vector<std::vector<std::string>>& rows);

struct Report {
    json timestamp_header;
    json config;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

Report read_report(const std::string& path);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

// JSON conversions for the dataset/checkpoint formats.
json to_json(const TaskSpec& spec);
TaskSpec taskspec_from_json(const json& j);
json to_json(const Instance& inst);
Instance instance_from_json(const json& j);

} // namespace metanco::io
