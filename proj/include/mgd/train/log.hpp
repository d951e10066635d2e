#pragma once

#include "mgd/train/distill.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mgd::train {

/// Tab-separated column names of the step log.
inline constexpr const char* kStepLogHeader = "step\tlr\twall_time\tsup\tpixel_labeled\tpixel_unlabeled\timage\tregion\ttotal";

/// One tab-separated line without the trailing newline; floats use shortest round-trip text.
std::string format_step_record(const StepRecord& record);
StepRecord parse_step_record(const std::string& line);

void write_step_log(const std::filesystem::path& path, const std::vector<StepRecord>& records);
std::vector<StepRecord> read_step_log(const std::filesystem::path& path);

} // namespace mgd::train
