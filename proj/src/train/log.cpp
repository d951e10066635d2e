#include "mgd/train/log.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mgd::train {

std::string format_step_record(const StepRecord& r)
{
    const auto& l = r.losses;
    std::string out = std::to_string(r.step);
    for (const double v : {r.lr, r.wall_time, l.sup, l.pixel_labeled, l.pixel_unlabeled, l.image_level, l.region_level,
                           l.total}) {
        out += '\t';
        out += format_double(v);
    }
    return out;
}

StepRecord parse_step_record(const std::string& line)
{
    std::vector<std::string> fields;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, '\t');) fields.push_back(f);
    if (fields.size() != 9) {
        throw std::invalid_argument("step log line has " + std::to_string(fields.size()) + " fields, expected 9: '" +
                                    line + "'");
    }
    StepRecord r;
    try {
        r.step = std::stoull(fields[0]);
        r.lr = std::stod(fields[1]);
        r.wall_time = std::stod(fields[2]);
        r.losses.sup = std::stod(fields[3]);
        r.losses.pixel_labeled = std::stod(fields[4]);
        r.losses.pixel_unlabeled = std::stod(fields[5]);
        r.losses.image_level = std::stod(fields[6]);
        r.losses.region_level = std::stod(fields[7]);
        r.losses.total = std::stod(fields[8]);
    } catch (const std::logic_error&) {
        throw std::invalid_argument("malformed step log line: '" + line + "'");
    }
    return r;
}

void write_step_log(const std::filesystem::path& path, const std::vector<StepRecord>& records)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kStepLogHeader << '\n';
    for (const auto& r : records) out << format_step_record(r) << '\n';
}

std::vector<StepRecord> read_step_log(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kStepLogHeader) {
        throw std::invalid_argument(path.string() + " is not a step log");
    }
    std::vector<StepRecord> records;
    while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(parse_step_record(line));
    }
    return records;
}

} // namespace mgd::train
