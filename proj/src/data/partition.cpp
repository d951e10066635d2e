#include "mgd/data/partition.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

namespace mgd::data {

Fraction Fraction::parse(const std::string& text)
{
    const auto slash = text.find('/');
    if (slash == std::string::npos) throw PartitionError("fraction must look like 1/8, got '" + text + "'");
    Fraction f;
    const char* b = text.data();
    const auto r1 = std::from_chars(b, b + slash, f.numerator);
    const auto r2 = std::from_chars(b + slash + 1, b + text.size(), f.denominator);
    if (r1.ec != std::errc{} || r1.ptr != b + slash || r2.ec != std::errc{} || r2.ptr != b + text.size()) {
        throw PartitionError("fraction must look like 1/8, got '" + text + "'");
    }
    if (f.numerator == 0 || f.denominator == 0 || f.numerator >= f.denominator) {
        throw PartitionError("fraction must lie strictly between 0 and 1, got '" + text + "'");
    }
    return f;
}

std::string Fraction::to_string() const
{
    return std::to_string(numerator) + "/" + std::to_string(denominator);
}

std::string Fraction::file_token() const
{
    return std::to_string(numerator) + "_" + std::to_string(denominator);
}

std::size_t Fraction::labeled_count(std::size_t total) const
{
    return static_cast<std::size_t>((numerator * total + denominator - 1) / denominator);
}

namespace {

PartitionProtocol split(std::vector<std::string> ids, std::size_t labeled, std::uint64_t seed)
{
    if (ids.empty()) throw PartitionError("cannot partition an empty id list");
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw PartitionError("id list contains duplicates");
    }
    if (labeled == 0) throw PartitionError("partition yields zero labeled samples");
    if (labeled >= ids.size()) {
        throw PartitionError("partition of " + std::to_string(ids.size()) + " ids into " + std::to_string(labeled) +
                             " labeled samples leaves no unlabeled samples");
    }
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    PartitionProtocol p;
    p.seed = seed;
    p.labeled_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(labeled));
    p.unlabeled_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(labeled), ids.end());
    return p;
}

} // namespace

PartitionProtocol partition(std::vector<std::string> ids, Fraction fraction, std::uint64_t seed)
{
    if (fraction.numerator == 0 || fraction.denominator == 0 || fraction.numerator >= fraction.denominator) {
        throw PartitionError("fraction must lie strictly between 0 and 1");
    }
    const std::size_t labeled = fraction.labeled_count(ids.size());
    auto p = split(std::move(ids), labeled, seed);
    p.fraction = fraction;
    return p;
}

PartitionProtocol partition_count(std::vector<std::string> ids, std::size_t labeled_count, std::uint64_t seed)
{
    auto p = split(std::move(ids), labeled_count, seed);
    p.requested_count = labeled_count;
    return p;
}

void write_id_list(const std::string& path, const std::vector<std::string>& ids)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write id list " + path);
    for (const auto& id : ids) out << id << '\n';
    if (!out) throw std::runtime_error("failed writing id list " + path);
}

std::vector<std::string> read_id_list(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read id list " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

} // namespace mgd::data
