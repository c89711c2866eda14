#include "output.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

namespace singstep::output {

Json RunManifest::to_json() const
{
    Json j;
    j["command"] = command;
    j["problem"] = problem;
    Json cfg = Json::object();
    for (const auto& [key, value] : config) cfg[key] = value;
    j["config"] = cfg;
    j["output"] = output_path.empty() ? Json(nullptr) : Json(output_path);
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    return j;
}

std::string format_double(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

bool needs_quotes(const std::string& s)
{
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::optional<double> as_number(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::string cell_text(const CsvCell& cell)
{
    if (std::holds_alternative<double>(cell)) return format_double(std::get<double>(cell));
    if (std::holds_alternative<std::string>(cell)) {
        const std::string& s = std::get<std::string>(cell);
        // Quoting keeps numeric-looking and empty text from reading back as a number or a blank.
        return needs_quotes(s) || s.empty() || as_number(s) ? quote(s) : s;
    }
    return {};
}

// Splits one CSV record; quoted fields may contain commas and doubled quotes.
std::vector<std::pair<std::string, bool>> split_record(std::string_view line, int line_no)
{
    std::vector<std::pair<std::string, bool>> fields;
    std::string cur;
    bool quoted = false;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty() && !quoted) {
            in_quotes = quoted = true;
        } else if (c == ',') {
            fields.emplace_back(std::move(cur), quoted);
            cur.clear();
            quoted = false;
        } else {
            cur += c;
        }
    }
    if (in_quotes) throw ParseError(line_no, "unterminated quoted field");
    fields.emplace_back(std::move(cur), quoted);
    return fields;
}

}  // namespace

std::string write_csv(const CsvTable& table)
{
    std::string out;
    for (const std::string& c : table.comments) out += "# " + c + "\n";
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += needs_quotes(table.header[i]) ? quote(table.header[i]) : table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += cell_text(row[i]);
        }
        out += '\n';
    }
    return out;
}

CsvTable read_csv(std::string_view text)
{
    CsvTable table;
    bool have_header = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!have_header && line.starts_with("#")) {
            line.remove_prefix(line.starts_with("# ") ? 2 : 1);
            table.comments.emplace_back(line);
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_record(line, line_no);
        if (!have_header) {
            for (auto& [f, q] : fields) table.header.push_back(std::move(f));
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError(line_no, "expected " + std::to_string(table.header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
        std::vector<CsvCell> row;
        for (auto& [f, q] : fields) {
            if (f.empty() && !q) {
                row.emplace_back(std::monostate{});
            } else if (auto v = q ? std::nullopt : as_number(f)) {
                row.emplace_back(*v);
            } else {
                row.emplace_back(std::move(f));
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError(line_no, "missing header row");
    return table;
}

std::string write_jsonl(const std::vector<Json>& lines)
{
    std::string out;
    for (const Json& j : lines) out += j.dump() + "\n";
    return out;
}

std::vector<Json> read_jsonl(std::string_view text)
{
    std::vector<Json> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

namespace {

Json vector_json(const Vector& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

Json record_to_json(const solver::IterationRecord& r)
{
    Json j;
    j["k"] = r.k;
    j["x"] = vector_json(r.x);
    j["f_norm"] = r.f_norm;
    if (r.g_value) j["g_value"] = *r.g_value;
    if (r.case_tag) j["case_tag"] = std::string(indicator::to_string(*r.case_tag));
    if (r.sigma_min_ratio) j["sigma_min_ratio"] = *r.sigma_min_ratio;
    if (r.step) {
        const solver::StepRecord& s = *r.step;
        j["lambda"] = s.lambda;
        j["rule_tag"] = std::string(stepsize::to_string(s.rule_tag));
        if (s.es_inner) j["es_inner"] = *s.es_inner;
        if (s.as_norm) j["as_norm"] = *s.as_norm;
        if (s.lambda_es) j["lambda_es"] = *s.lambda_es;
        if (s.lambda_as) j["lambda_as"] = *s.lambda_as;
    }
    return j;
}

std::vector<Json> trajectory_lines(const solver::TerminationReport& report,
                                   const RunManifest& manifest)
{
    std::vector<Json> lines;
    for (const solver::IterationRecord& r : report.records)
        if (r.step) lines.push_back(record_to_json(r));

    Json s;
    s["summary"] = true;
    s["status"] = std::string(solver::to_string(report.status));
    s["iterations"] = report.iterations();
    s["final_x"] = vector_json(report.final_x);
    if (!report.records.empty() && !report.records.back().step)
        s["terminal"] = record_to_json(report.records.back());
    s["quadratic_tail_ratio"] =
        report.quadratic_tail_ratio ? Json(*report.quadratic_tail_ratio) : Json(nullptr);
    if (!report.message.empty()) s["message"] = report.message;
    s["manifest"] = manifest.to_json();
    lines.push_back(std::move(s));
    return lines;
}

CsvTable grid_table(const std::vector<solver::GridSummary>& cells, const RunManifest& manifest)
{
    CsvTable t;
    t.comments.push_back("manifest: " + manifest.to_json().dump());
    t.header = {"x0_1", "x0_2", "status", "iters", "final_1", "final_2", "dist_to_singular_line"};
    for (const solver::GridSummary& c : cells) {
        std::vector<CsvCell> row;
        row.emplace_back(c.x0(0));
        row.emplace_back(c.x0(1));
        row.emplace_back(std::string(solver::to_string(c.status)));
        row.emplace_back(static_cast<double>(c.iterations));
        row.emplace_back(c.final_x(0));
        row.emplace_back(c.final_x(1));
        if (c.dist_to_singular)
            row.emplace_back(*c.dist_to_singular);
        else
            row.emplace_back(std::monostate{});
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable field_table(const std::vector<indicator::FieldCell>& cells, const RunManifest& manifest)
{
    CsvTable t;
    t.comments.push_back("manifest: " + manifest.to_json().dump());
    t.header = {"x1", "x2", "g_value_or_tag", "sigma_min_ratio"};
    for (const indicator::FieldCell& c : cells) {
        std::vector<CsvCell> row;
        row.emplace_back(c.x(0));
        row.emplace_back(c.x(1));
        if (c.g_value)
            row.emplace_back(*c.g_value);
        else
            row.emplace_back(std::string(indicator::to_string(c.status)));
        if (c.sigma_min_ratio)
            row.emplace_back(*c.sigma_min_ratio);
        else
            row.emplace_back(std::monostate{});
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace singstep::output
