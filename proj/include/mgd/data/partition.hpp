#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgd::data {

/// Rational labeled fraction such as 1/8.
struct Fraction {
    std::uint64_t numerator = 1;
    std::uint64_t denominator = 8;

    /// Parses "1/8"; the fraction must lie strictly between 0 and 1.
    static Fraction parse(const std::string& text);
    std::string to_string() const;   ///< "1/8"
    std::string file_token() const;  ///< "1_8"
    /// ceil(numerator * total / denominator).
    std::size_t labeled_count(std::size_t total) const;

    friend bool operator==(const Fraction&, const Fraction&) = default;
};

struct PartitionProtocol {
    std::optional<Fraction> fraction; ///< absent when an explicit count was requested
    std::size_t requested_count = 0;  ///< used when fraction is absent
    std::uint64_t seed = 0;
    std::vector<std::string> labeled_ids;
    std::vector<std::string> unlabeled_ids;
};

class PartitionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sorts ids, shuffles them with `seed`, and takes the first ceil(fraction * n) as labeled.
/// Smaller fractions therefore yield subsets of larger ones under the same seed.
PartitionProtocol partition(std::vector<std::string> ids, Fraction fraction, std::uint64_t seed);

/// Same as above with an explicit labeled count.
PartitionProtocol partition_count(std::vector<std::string> ids, std::size_t labeled_count, std::uint64_t seed);

/// One id per line.
void write_id_list(const std::string& path, const std::vector<std::string>& ids);
std::vector<std::string> read_id_list(const std::string& path);

} // namespace mgd::data
