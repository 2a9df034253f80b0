#include "metanco/io.hpp"

#include "helpers.hpp"
#include "metanco/oracles.hpp"
#include "metanco/policy.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace metanco;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("metanco-io-test-" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

/// Independent FNV-1a implementation used to audit the dataset checksum.
std::uint64_t audit_fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string audit_hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

const char* kMinimalTsp =
    "NAME : tiny3\n"
    "TYPE : TSP\n"
    "DIMENSION : 3\n"
    "EDGE_WEIGHT_TYPE : EUC_2D\n"
    "NODE_COORD_SECTION\n"
    "1 0.0 0.0\n"
    "2 3.0 0.0\n"
    "3 0.0 4.0\n"
    "EOF\n";

const char* kMinimalCvrp =
    "NAME : tinyvrp\n"
    "TYPE : CVRP\n"
    "DIMENSION : 4\n"
    "EDGE_WEIGHT_TYPE : EUC_2D\n"
    "CAPACITY : 10\n"
    "NODE_COORD_SECTION\n"
    "1 0 0\n"
    "2 1 0\n"
    "3 0 1\n"
    "4 1 1\n"
    "DEMAND_SECTION\n"
    "1 0\n"
    "2 4\n"
    "3 5\n"
    "4 6\n"
    "DEPOT_SECTION\n"
    "1\n"
    "-1\n"
    "EOF\n";

} // namespace

TEST_CASE("minimal EUC_2D file parses with 1-based indices mapped down") {
    const Instance inst = io::parse_tsplib_text(kMinimalTsp);
    REQUIRE(inst.n() == 3);
    CHECK(!inst.is_cvrp);
    CHECK(inst.coords[0].x == 0.0);
    CHECK(inst.coords[1].x == 3.0);
    CHECK(inst.coords[2].y == 4.0);
    // 3-4-5 right triangle: perimeter 12.
    CHECK(oracles::brute_force_tsp(inst).cost == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("out-of-order node indices land in the right slots") {
    const Instance inst = io::parse_tsplib_text(
        "TYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n"
        "3 30 30\n1 10 10\n2 20 20\nEOF\n");
    CHECK(inst.coords[0].x == 10.0);
    CHECK(inst.coords[1].x == 20.0);
    CHECK(inst.coords[2].x == 30.0);
}

TEST_CASE("non-Euclidean edge weights are rejected by name") {
    const std::string text =
        "TYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EXPLICIT\nNODE_COORD_SECTION\n"
        "1 0 0\n2 1 0\n3 0 1\nEOF\n";
    CHECK_THROWS_WITH_AS(io::parse_tsplib_text(text),
                         doctest::Contains("unsupported EDGE_WEIGHT_TYPE: EXPLICIT"),
                         std::invalid_argument);
}

TEST_CASE("dimension mismatch is reported with both counts") {
    const std::string text =
        "TYPE : TSP\nDIMENSION : 5\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n"
        "1 0 0\n2 1 0\n3 0 1\nEOF\n";
    CHECK_THROWS_WITH_AS(io::parse_tsplib_text(text), doctest::Contains("DIMENSION mismatch"),
                         std::invalid_argument);
}

TEST_CASE("malformed coordinate lines carry the line number") {
    const std::string text =
        "TYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n"
        "1 0 0\n2 oops 0\n3 0 1\nEOF\n";
    CHECK_THROWS_WITH_AS(io::parse_tsplib_text(text),
                         doctest::Contains("malformed coordinate line 6"), std::invalid_argument);
}

TEST_CASE("duplicate node indices are rejected") {
    const std::string text =
        "TYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n"
        "1 0 0\n1 1 0\n3 0 1\nEOF\n";
    CHECK_THROWS_WITH_AS(io::parse_tsplib_text(text), doctest::Contains("bad node index"),
                         std::invalid_argument);
}

TEST_CASE("CVRP file parses into depot plus customers") {
    const Instance inst = io::parse_cvrplib_text(kMinimalCvrp);
    CHECK(inst.is_cvrp);
    CHECK(inst.capacity == 10);
    CHECK(inst.n() == 3); // customers only; depot held separately
    CHECK(inst.depot.x == 0.0);
    CHECK(inst.depot.y == 0.0);
    CHECK(inst.demands == std::vector<int>{4, 5, 6});
}

TEST_CASE("CVRP files with missing sections are rejected") {
    std::string text = kMinimalCvrp;
    SUBCASE("missing CAPACITY") {
        const auto pos = text.find("CAPACITY : 10\n");
        text.erase(pos, std::string("CAPACITY : 10\n").size());
        CHECK_THROWS_WITH_AS(io::parse_cvrplib_text(text), doctest::Contains("missing CAPACITY"),
                             std::invalid_argument);
    }
    SUBCASE("nonzero depot demand") {
        const auto pos = text.find("1 0\n2 4");
        text.replace(pos, 3, "1 7");
        CHECK_THROWS_WITH_AS(io::parse_cvrplib_text(text),
                             doctest::Contains("depot demand must be 0, got 7"),
                             std::invalid_argument);
    }
    SUBCASE("missing DEPOT_SECTION") {
        const auto pos = text.find("DEPOT_SECTION");
        text.erase(pos, std::string("DEPOT_SECTION\n1\n-1\n").size());
        CHECK_THROWS_WITH_AS(io::parse_cvrplib_text(text),
                             doctest::Contains("missing DEPOT_SECTION"), std::invalid_argument);
    }
}

TEST_CASE("bundled benchmark fixtures all parse") {
    const std::filesystem::path dir = METANCO_FIXTURE_DIR;
    int parsed = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".tsp") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        const Instance inst = io::parse_tsplib(in);
        CHECK(inst.n() >= 3);
        CHECK(inst.n() <= 200);
        ++parsed;
    }
    CHECK(parsed == 7);

    std::ifstream in(dir / "synthA-n8.vrp", std::ios::binary);
    const Instance vrp = io::parse_cvrplib(in);
    CHECK(vrp.is_cvrp);
    CHECK(vrp.n() == 7);
    CHECK(vrp.capacity == 30);
}

TEST_CASE("normalization maps the bounding box into the unit square") {
    const Instance raw = io::parse_tsplib_text(kMinimalTsp);
    const Instance norm = io::normalize_instance(raw);
    for (const Point& p : norm.coords) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 1.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y <= 1.0);
    }
    // Extent 4 along y: the (0,4) corner maps to (0,1), (3,0) to (0.75,0).
    CHECK(norm.coords[2].y == doctest::Approx(1.0));
    CHECK(norm.coords[1].x == doctest::Approx(0.75));
    // Tour lengths scale by exactly 1/extent.
    CHECK(oracles::brute_force_tsp(norm).cost ==
          doctest::Approx(oracles::brute_force_tsp(raw).cost / 4.0).epsilon(1e-12));
}

TEST_CASE("normalization is a no-op on degenerate single-point instances") {
    const Instance inst = testutil::tsp_instance({{5.0, 7.0}});
    const Instance norm = io::normalize_instance(inst);
    CHECK(norm.coords[0].x == 0.0);
    CHECK(norm.coords[0].y == 0.0);
}

TEST_CASE("dataset round-trip is bit-exact and solutions recompute") {
    TaskSpec spec;
    spec.n_nodes = 7;
    spec.seed = 321;
    std::vector<io::DatasetRecord> records;
    for (std::uint64_t i = 0; i < 5; ++i) {
        io::DatasetRecord rec;
        rec.instance = taskgen::generate_instance(spec, i);
        rec.tour = oracles::held_karp(rec.instance).tour;
        records.push_back(std::move(rec));
    }
    const std::string path = tmp_path("roundtrip.jsonl");
    io::write_dataset(path, records, spec);

    const io::Dataset ds = io::read_dataset(path);
    REQUIRE(ds.records.size() == 5);
    REQUIRE(ds.task.has_value());
    CHECK(ds.task->id() == spec.id());
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& orig = records[i];
        const auto& got = ds.records[i];
        for (int k = 0; k < orig.instance.n(); ++k) {
            CHECK(got.instance.coords[k].x == orig.instance.coords[k].x);
            CHECK(got.instance.coords[k].y == orig.instance.coords[k].y);
        }
        REQUIRE(got.tour.has_value());
        CHECK(got.tour->order == orig.tour->order);
        CHECK(std::fabs(solutions::tour_length(got.instance, *got.tour) -
                        oracles::held_karp(got.instance).cost) < 1e-9);
    }

    SUBCASE("rewriting the same records yields identical bytes") {
        const std::string path2 = tmp_path("roundtrip2.jsonl");
        io::write_dataset(path2, records, spec);
        CHECK(slurp(path) == slurp(path2));
    }
    SUBCASE("the trailing checksum matches an independent FNV-1a") {
        const std::string text = slurp(path);
        const auto last_nl = text.rfind('\n', text.size() - 2);
        const std::string body = text.substr(0, last_nl + 1);
        const std::string footer = text.substr(last_nl + 1);
        CHECK(footer.find(audit_hex64(audit_fnv1a(body))) != std::string::npos);
    }
}

TEST_CASE("labeled CVRP records survive the round trip") {
    io::DatasetRecord rec;
    rec.instance = testutil::random_cvrp(5, 12, 654);
    const auto sol = oracles::brute_force_cvrp(rec.instance);
    rec.plan = sol.plan;
    rec.labels = edgenet::labels_from_plan(sol.plan, 5);
    const std::string path = tmp_path("cvrp.jsonl");
    io::write_dataset(path, {rec});
    const io::Dataset ds = io::read_dataset(path);
    REQUIRE(ds.records.size() == 1);
    CHECK(!ds.task.has_value());
    REQUIRE(ds.records[0].plan.has_value());
    CHECK(ds.records[0].plan->routes == sol.plan.routes);
    REQUIRE(ds.records[0].labels.has_value());
    CHECK(ds.records[0].labels->s == rec.labels->s);
    CHECK(std::fabs(solutions::plan_cost(ds.records[0].instance, *ds.records[0].plan) - sol.cost) <
          1e-9);
}

TEST_CASE("corrupted datasets are rejected") {
    TaskSpec spec;
    spec.n_nodes = 4;
    spec.seed = 77;
    io::DatasetRecord rec;
    rec.instance = taskgen::generate_instance(spec, 0);
    const std::string path = tmp_path("corrupt.jsonl");
    io::write_dataset(path, {rec, rec});
    const std::string text = slurp(path);

    SUBCASE("truncation drops a record") {
        // Remove the second record line; checksum no longer matches.
        std::vector<std::string> lines;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        REQUIRE(lines.size() == 4);
        spit(path, lines[0] + "\n" + lines[1] + "\n" + lines[3] + "\n");
        CHECK_THROWS_WITH_AS(io::read_dataset(path), doctest::Contains("checksum failure"),
                             std::runtime_error);
    }
    SUBCASE("a single flipped byte breaks the checksum") {
        std::string tampered = text;
        const auto pos = tampered.find("coords");
        tampered[pos] = 'C';
        spit(path, tampered);
        CHECK_THROWS_WITH_AS(io::read_dataset(path), doctest::Contains("checksum failure"),
                             std::runtime_error);
    }
    SUBCASE("future versions are rejected even with a valid checksum") {
        std::string tampered = text;
        const auto pos = tampered.find("\"version\":1");
        tampered.replace(pos, std::string("\"version\":1").size(), "\"version\":9");
        const auto last_nl = tampered.rfind('\n', tampered.size() - 2);
        std::string body = tampered.substr(0, last_nl + 1);
        spit(path, body + "{\"checksum\":\"" + audit_hex64(audit_fnv1a(body)) + "\"}\n");
        CHECK_THROWS_WITH_AS(io::read_dataset(path), doctest::Contains("version mismatch"),
                             std::runtime_error);
    }
    SUBCASE("missing file") { CHECK_THROWS(io::read_dataset(tmp_path("does-not-exist.jsonl"))); }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    policy::PolicyArch arch;
    arch.embed_dim = 8;
    arch.layers = 1;
    ParameterSet theta = policy::init_params(arch, 31);
    theta.meta["note"] = "unit";
    const std::string path = tmp_path("theta.json");
    io::save_checkpoint(path, theta);
    const ParameterSet loaded = io::load_checkpoint(path);
    REQUIRE(loaded.values.size() == theta.values.size());
    for (const auto& [name, arr] : theta.values) {
        const auto& got = loaded.values.at(name);
        CHECK(got.rows == arr.rows);
        CHECK(got.cols == arr.cols);
        CHECK(got.data == arr.data); // bitwise, not approximate
    }
    CHECK(loaded.meta.at("note") == "unit");

    SUBCASE("a dataset file is not a checkpoint") {
        const std::string ds_path = tmp_path("notacheckpoint.jsonl");
        TaskSpec spec;
        spec.n_nodes = 4;
        spec.seed = 1;
        io::DatasetRecord rec;
        rec.instance = taskgen::generate_instance(spec, 0);
        io::write_dataset(ds_path, {rec});
        CHECK_THROWS(io::load_checkpoint(ds_path));
    }
}

TEST_CASE("format_double survives the parse round trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 12345.678901234567}) {
        CHECK(std::stod(io::format_double(v)) == v);
    }
}

TEST_CASE("report files round-trip and differ only in the timestamp line") {
    const io::json config{{"seed", 7}, {"eval_size", 4}};
    const std::vector<std::string> columns{"k", "gap"};
    const std::vector<std::vector<std::string>> rows{{"0", "12.5"}, {"50", "3.25"}};
    const std::string a = tmp_path("report-a.csv");
    const std::string b = tmp_path("report-b.csv");
    io::write_report(a, config, columns, rows);
    io::write_report(b, config, columns, rows);

    const io::Report rep = io::read_report(a);
    CHECK(rep.columns == columns);
    CHECK(rep.rows == rows);
    CHECK(rep.config == config);
    CHECK(rep.timestamp_header.contains("timestamp"));

    auto tail = [](const std::string& text) { return text.substr(text.find('\n') + 1); };
    CHECK(tail(slurp(a)) == tail(slurp(b)));

    SUBCASE("row width mismatch is rejected") {
        CHECK_THROWS_WITH_AS(io::write_report(a, config, columns, {{"only-one"}}),
                             doctest::Contains("row width mismatch"), std::invalid_argument);
    }
}
