#include "mgd/core/manifest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mgd {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string format_double(double value)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void Manifest::set(const std::string& key, std::string value)
{
    if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
        throw std::invalid_argument("manifest keys and values must be single-line and keys must not contain '='");
    }
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(key, std::move(value));
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }
void Manifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Manifest::set(const std::string& key, unsigned long long value) { set(key, std::to_string(value)); }

std::optional<std::string> Manifest::find(const std::string& key) const
{
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

const std::string& Manifest::get(const std::string& key) const
{
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    throw std::runtime_error("manifest is missing key '" + key + "'");
}

double Manifest::get_double(const std::string& key) const
{
    const auto& v = get(key);
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw std::runtime_error("manifest key '" + key + "' is not a number: " + v);
    }
    return out;
}

long long Manifest::get_int(const std::string& key) const
{
    const auto& v = get(key);
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw std::runtime_error("manifest key '" + key + "' is not an integer: " + v);
    }
    return out;
}

bool Manifest::get_bool(const std::string& key) const
{
    const auto& v = get(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::runtime_error("manifest key '" + key + "' is not a boolean: " + v);
}

std::string Manifest::to_string() const
{
    std::ostringstream os;
    for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
    return os.str();
}

Manifest Manifest::parse(const std::string& text)
{
    Manifest m;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("manifest line " + std::to_string(lineno) + " has no '=': " + t);
        }
        m.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return m;
}

void Manifest::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << to_string();
    if (!out) throw std::runtime_error("failed writing manifest " + path.string());
}

Manifest Manifest::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read manifest " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

} // namespace mgd
