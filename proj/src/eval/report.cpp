#include "mgd/eval/report.hpp"

#include "mgd/core/manifest.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace mgd::eval {

namespace {

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument(fmt::format("report csv line {}: bad number '{}'", line, text));
    }
    return value;
}

} // namespace

double compression_ratio(const models::ModelCost& reference, const models::ModelCost& student)
{
    if (student.params == 0) throw std::invalid_argument("compression ratio of a model without parameters");
    return static_cast<double>(reference.params) / static_cast<double>(student.params);
}

ComparisonTable report_table(std::vector<RunResult> runs, std::optional<std::string> reference)
{
    if (runs.empty()) throw std::invalid_argument("report table needs at least one run");
    ComparisonTable table;
    for (const auto& [label, value] : runs.front().miou) table.partitions.push_back(label);
    for (const auto& run : runs) {
        std::vector<std::string> labels;
        for (const auto& [label, value] : run.miou) labels.push_back(label);
        if (labels != table.partitions) {
            throw std::invalid_argument(fmt::format("run '{}' has partition columns [{}], expected [{}]", run.name,
                                                    fmt::join(labels, ", "), fmt::join(table.partitions, ", ")));
        }
        if (run.name.find_first_of(",\n") != std::string::npos) {
            throw std::invalid_argument("run name '" + run.name + "' contains a delimiter");
        }
    }
    if (reference) {
        const bool known = std::any_of(runs.begin(), runs.end(), [&](const RunResult& r) { return r.name == *reference; });
        if (!known) throw std::invalid_argument("reference run '" + *reference + "' is not in the table");
    }
    table.runs = std::move(runs);
    table.reference = std::move(reference);
    return table;
}

std::string ComparisonTable::text() const
{
    const RunResult* ref = nullptr;
    if (reference) {
        for (const auto& r : runs) {
            if (r.name == *reference) ref = &r;
        }
    }
    std::vector<std::string> header{"Method", "Params(M)", "FLOPs(G)"};
    if (ref) header.push_back("Ratio");
    header.insert(header.end(), partitions.begin(), partitions.end());

    std::vector<std::vector<std::string>> rows{header};
    for (const auto& run : runs) {
        std::vector<std::string> row{run.name, fmt::format("{:.4g}", run.cost.params / 1e6),
                                     fmt::format("{:.4g}", run.cost.flops / 1e9)};
        if (ref) {
            row.push_back(&run == ref || run.cost.params == 0
                              ? std::string("-")
                              : fmt::format("{:.2f}x", compression_ratio(ref->cost, run.cost)));
        }
        for (const auto& [label, value] : run.miou) row.push_back(fmt::format("{:.2f}", value * 100.0));
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            if (c) out << "  ";
            if (c == 0) {
                out << fmt::format("{:<{}}", rows[r][c], widths[c]);
            } else {
                out << fmt::format("{:>{}}", rows[r][c], widths[c]);
            }
        }
        out << '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (const auto w : widths) total += w;
            out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
        }
    }
    return out.str();
}

std::string ComparisonTable::csv() const
{
    std::string out = "run,partition,miou,params,flops\n";
    for (const auto& run : runs) {
        for (const auto& [label, value] : run.miou) {
            out += fmt::format("{},{},{},{},{}\n", run.name, label, format_double(value), run.cost.params,
                               run.cost.flops);
        }
    }
    return out;
}

ComparisonTable parse_report_csv(std::string_view csv, std::optional<std::string> reference)
{
    std::vector<RunResult> runs;
    std::size_t line_no = 0;
    std::istringstream in{std::string(csv)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "run,partition,miou,params,flops") {
                throw std::invalid_argument("report csv header mismatch: '" + line + "'");
            }
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 5) throw std::invalid_argument(fmt::format("report csv line {}: expected 5 fields", line_no));
        const models::ModelCost cost{parse_number<std::uint64_t>(f[3], line_no), parse_number<std::uint64_t>(f[4], line_no)};
        auto it = std::find_if(runs.begin(), runs.end(), [&](const RunResult& r) { return r.name == f[0]; });
        if (it == runs.end()) {
            runs.push_back({f[0], cost, {}});
            it = runs.end() - 1;
        } else if (!(it->cost == cost)) {
            throw std::invalid_argument(fmt::format("report csv line {}: cost of run '{}' changes", line_no, f[0]));
        }
        it->miou.emplace_back(f[1], parse_number<double>(f[2], line_no));
    }
    if (line_no == 0) throw std::invalid_argument("empty report csv");
    return report_table(std::move(runs), std::move(reference));
}

} // namespace mgd::eval
