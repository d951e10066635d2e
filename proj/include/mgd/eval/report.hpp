#pragma once

#include "mgd/models/cost.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mgd::eval {

struct RunResult {
    std::string name;
    models::ModelCost cost;
    /// (partition label, mIoU in [0, 1]) in column order.
    std::vector<std::pair<std::string, double>> miou;

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Comparison table with one row per run and one mIoU column per partition.
struct ComparisonTable {
    std::vector<std::string> partitions;
    std::vector<RunResult> runs;
    /// Run whose parameter count is the numerator of every compression ratio.
    std::optional<std::string> reference;

    /// Aligned text; mIoU in percent, params in millions, FLOPs in giga-MACs.
    std::string text() const;
    /// `run,partition,miou,params,flops`, one line per (run, partition).
    std::string csv() const;

    friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

/// reference.params / student.params. Throws if the student has no parameters.
double compression_ratio(const models::ModelCost& reference, const models::ModelCost& student);

/// Throws std::invalid_argument when runs disagree on partition columns or the reference is unknown.
ComparisonTable report_table(std::vector<RunResult> runs, std::optional<std::string> reference = std::nullopt);

/// Inverse of ComparisonTable::csv.
ComparisonTable parse_report_csv(std::string_view csv, std::optional<std::string> reference = std::nullopt);

} // namespace mgd::eval
