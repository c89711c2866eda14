#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "singstep/indicator.hpp"
#include "singstep/solver.hpp"

namespace singstep::output {

using Json = nlohmann::ordered_json;

/// Reproducibility header written into every output.
struct RunManifest {
    std::string command;
    std::string problem;
    std::vector<std::pair<std::string, std::string>> config;
    std::string output_path;
    std::optional<std::uint64_t> seed;

    Json to_json() const;
};

/// printf("%.17g"): enough digits for an exact round trip.
std::string format_double(double value);

using CsvCell = std::variant<std::monostate, double, std::string>;

struct CsvTable {
    std::vector<std::string> comments;  // text after "# ", one per leading line
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;
};

std::string write_csv(const CsvTable& table);
/// Cells that parse completely as a number become doubles. Throws ParseError.
CsvTable read_csv(std::string_view text);

std::string write_jsonl(const std::vector<Json>& lines);
/// Throws ParseError with the offending line number.
std::vector<Json> read_jsonl(std::string_view text);

Json record_to_json(const solver::IterationRecord& record);

/// One line per step taken, then a summary line carrying the status, the
/// terminal iterate and the manifest.
std::vector<Json> trajectory_lines(const solver::TerminationReport& report,
                                   const RunManifest& manifest);

CsvTable grid_table(const std::vector<solver::GridSummary>& cells, const RunManifest& manifest);
CsvTable field_table(const std::vector<indicator::FieldCell>& cells, const RunManifest& manifest);

}  // namespace singstep::output
