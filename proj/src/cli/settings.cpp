#include "spontts/cli/settings.hpp"

#include <charconv>
#include <sstream>

#include "spontts/corpus/io.hpp"
#include "spontts/error.hpp"

namespace spontts {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& v, const std::string& where) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    require(v.empty() || (v.front() != '"' && v.back() != '"'), ErrorKind::Config, where + ": unbalanced quote");
    return v;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* type) {
    fail(ErrorKind::Config, "setting " + key + " = '" + value + "' is not a valid " + type);
}

}  // namespace

Settings::Settings(std::vector<SettingSpec> specs) : specs_(std::move(specs)) {
    for (const auto& s : specs_) {
        require(!values_.contains(s.key), ErrorKind::Contract, "duplicate setting " + s.key);
        values_[s.key] = s.default_value;
    }
}

void Settings::load_file(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorKind::Io, "config file " + path.string() + " not found");
    load_text(read_text_file(path), path.string());
}

void Settings::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string where = origin + ":" + std::to_string(number);
        std::string body = line;
        if (const auto hash = body.find('#'); hash != std::string::npos) {
            const auto quote = body.find('"');
            if (quote == std::string::npos || hash < quote) body.resize(hash);
        }
        body = trim(body);
        if (body.empty()) continue;
        if (body.front() == '[') {
            require(body.back() == ']' && body.size() > 2, ErrorKind::Config, where + ": malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        require(eq != std::string::npos, ErrorKind::Config, where + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        require(!key.empty(), ErrorKind::Config, where + ": empty key");
        set(section.empty() ? key : section + "." + key, unquote(trim(body.substr(eq + 1)), where), where);
    }
}

void Settings::assign(const std::string& assignment, const std::string& origin) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos, ErrorKind::Config, origin + ": expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1)), origin), origin);
}

void Settings::set(const std::string& key, const std::string& value, const std::string& origin) {
    auto it = values_.find(key);
    require(it != values_.end(), ErrorKind::Config, origin + ": unknown setting '" + key + "'");
    it->second = value;
}

const std::string& Settings::get(const std::string& key) const {
    auto it = values_.find(key);
    require(it != values_.end(), ErrorKind::Contract, "setting " + key + " is not declared for this command");
    return it->second;
}

int Settings::get_int(const std::string& key) const {
    const auto& v = get(key);
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "integer");
    return out;
}

std::uint64_t Settings::get_u64(const std::string& key) const {
    const auto& v = get(key);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "unsigned integer");
    return out;
}

double Settings::get_double(const std::string& key) const {
    const auto& v = get(key);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "number");
    return out;
}

bool Settings::get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "boolean");
}

std::vector<std::string> Settings::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> Settings::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        double d = 0.0;
        const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), d);
        if (ec != std::errc() || p != item.data() + item.size()) bad_value(key, item, "number list entry");
        out.push_back(d);
    }
    return out;
}

std::string Settings::resolved_text() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        const bool quote = v.empty() || v.find_first_of("#\" ") != std::string::npos;
        out += k + " = " + (quote ? "\"" + v + "\"" : v) + "\n";
    }
    return out;
}

}  // namespace spontts
