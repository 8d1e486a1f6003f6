#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace spontts {

struct SettingSpec {
    std::string key;
    std::string default_value;
    std::string help;
};

// Typed key=value settings with a closed key set. Sources apply in call
// order (defaults, then file, then overrides); unknown keys are Config
// errors naming their origin.
class Settings {
public:
    explicit Settings(std::vector<SettingSpec> specs);

    // TOML-style subset: `key = value` lines, `[section]` headers that
    // prefix following keys with "section.", `#` comments, optional double
    // quotes around values.
    void load_file(const std::filesystem::path& path);
    void load_text(const std::string& text, const std::string& origin);
    void assign(const std::string& assignment, const std::string& origin = "override");  // "key=value"
    void set(const std::string& key, const std::string& value, const std::string& origin = "override");

    bool knows(const std::string& key) const { return values_.contains(key); }
    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated, empty items dropped
    std::vector<double> get_doubles(const std::string& key) const;

    // "key = value" lines sorted by key; loads back to the same settings.
    std::string resolved_text() const;
    const std::vector<SettingSpec>& specs() const { return specs_; }

private:
    std::vector<SettingSpec> specs_;
    std::map<std::string, std::string> values_;
};

}  // namespace spontts
