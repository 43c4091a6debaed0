#include "poregrad/kvconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "poregrad/error.hpp"

namespace poregrad {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin)
{
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
        cfg.values_.emplace(std::move(key), std::move(value));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParameterError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size())
            throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ParameterError(origin_ + ": " + key + " is not a number: " + *v);
    }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    try {
        std::size_t used = 0;
        const long n = std::stol(*v, &used);
        if (used != v->size())
            throw std::invalid_argument(*v);
        return n;
    } catch (const std::exception&) {
        throw ParameterError(origin_ + ": " + key + " is not an integer: " + *v);
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "1" || *v == "on" || *v == "yes")
        return true;
    if (*v == "false" || *v == "0" || *v == "off" || *v == "no")
        return false;
    throw ParameterError(origin_ + ": " + key + " is not a boolean: " + *v);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                std::vector<double> fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    try {
        return parse_double_list(*v);
    } catch (const ParameterError& e) {
        throw ParameterError(origin_ + ": " + key + ": " + e.what());
    }
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const
{
    for (const auto& [key, value] : values_)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ParameterError(origin_ + ": unknown key " + key);
}

std::string KeyValueConfig::to_string() const
{
    std::ostringstream out;
    for (const auto& [key, value] : values_)
        out << key << " = " << value << '\n';
    return out.str();
}

std::vector<double> parse_double_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParameterError("not a number: " + item);
        }
    }
    return out;
}

}  // namespace poregrad
