#include <plap/config.hpp>

#include <plap/errors.hpp>
#include <plap/prior.hpp>

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace plap {

std::vector<double> default_p_grid()
{
    std::vector<double> grid;
    for (int i = 0; i < 16; ++i) {
        grid.push_back(1.5 + 0.1 * i);
    }
    return grid;
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& expected)
{
    throw ConfigError("field '" + key + "': cannot use '" + value + "', expected " + expected);
}

double to_double(const std::string& key, const std::string& value)
{
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        bad(key, value, "a number");
    }
    return v;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& value)
{
    Int v{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        bad(key, value, "a non-negative integer");
    }
    return v;
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    bad(key, value, "true or false");
}

Parametrization to_param(const std::string& key, const std::string& value)
{
    const auto param = parse_parametrization(value);
    if (!param) {
        bad(key, value, "one of std, inv, nat, exp");
    }
    return *param;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"mesh_n", [](RunConfig& c, const auto& k, const auto& v) { c.mesh_n = to_integer<int>(k, v); }},
        {"cells", [](RunConfig& c, const auto& k, const auto& v) { c.cells = to_integer<int>(k, v); }},
        {"rings", [](RunConfig& c, const auto& k, const auto& v) { c.rings = to_integer<int>(k, v); }},
        {"j_max", [](RunConfig& c, const auto& k, const auto& v) { c.j_max = to_integer<int>(k, v); }},
        {"mesh_seed", [](RunConfig& c, const auto& k, const auto& v) { c.mesh_seed = to_integer<std::uint64_t>(k, v); }},
        {"perturb_data_mesh", [](RunConfig& c, const auto& k, const auto& v) { c.perturb_data_mesh = to_bool(k, v); }},
        {"p", [](RunConfig& c, const auto& k, const auto& v) { c.p = to_double(k, v); }},
        {"tau", [](RunConfig& c, const auto& k, const auto& v) { c.tau = to_double(k, v); }},
        {"current", [](RunConfig& c, const auto&, const auto& v) { c.current = v; }},
        {"sample", [](RunConfig& c, const auto&, const auto& v) { c.sample = v; }},
        {"param", [](RunConfig& c, const auto& k, const auto& v) { c.param = to_param(k, v); }},
        {"study", [](RunConfig& c, const auto& k, const auto& v) {
             if (v != "linerr" && v != "invert" && v != "both") {
                 bad(k, v, "linerr, invert or both");
             }
             c.study = v;
         }},
        {"p_grid", [](RunConfig& c, const auto& k, const auto& v) {
             c.p_grid.clear();
             for (const auto& item : split_list(v)) {
                 c.p_grid.push_back(to_double(k, item));
             }
         }},
        {"tau_grid", [](RunConfig& c, const auto& k, const auto& v) {
             c.tau_grid.clear();
             for (const auto& item : split_list(v)) {
                 c.tau_grid.push_back(to_double(k, item));
             }
         }},
        {"samples", [](RunConfig& c, const auto&, const auto& v) { c.samples = split_list(v); }},
        {"params", [](RunConfig& c, const auto& k, const auto& v) {
             c.params.clear();
             for (const auto& item : split_list(v)) {
                 c.params.push_back(to_param(k, item));
             }
         }},
        {"lambda", [](RunConfig& c, const auto& k, const auto& v) { c.lambda = to_double(k, v); }},
        {"penalty", [](RunConfig& c, const auto& k, const auto& v) { c.penalty = to_double(k, v); }},
        {"misspecified", [](RunConfig& c, const auto& k, const auto& v) { c.misspecified = to_bool(k, v); }},
        {"members", [](RunConfig& c, const auto& k, const auto& v) { c.members = to_integer<std::size_t>(k, v); }},
        {"n", [](RunConfig& c, const auto& k, const auto& v) { c.members = to_integer<std::size_t>(k, v); }},
        {"snapshots", [](RunConfig& c, const auto& k, const auto& v) { c.snapshots = to_integer<std::size_t>(k, v); }},
        {"max_skip_fraction", [](RunConfig& c, const auto& k, const auto& v) { c.max_skip_fraction = to_double(k, v); }},
        {"proptest_samples", [](RunConfig& c, const auto& k, const auto& v) { c.proptest_samples = to_integer<std::size_t>(k, v); }},
        {"proptest_p_min", [](RunConfig& c, const auto& k, const auto& v) { c.proptest_p_min = to_double(k, v); }},
        {"proptest_p_max", [](RunConfig& c, const auto& k, const auto& v) { c.proptest_p_max = to_double(k, v); }},
        {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_integer<std::uint64_t>(k, v); }},
        {"noise_seed", [](RunConfig& c, const auto& k, const auto& v) { c.noise_seed = to_integer<std::uint64_t>(k, v); }},
        {"threads", [](RunConfig& c, const auto& k, const auto& v) { c.threads = to_integer<unsigned>(k, v); }},
        {"out", [](RunConfig& c, const auto&, const auto& v) { c.out = v; }},
    };
    return table;
}

} // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value)
{
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError("unknown field '" + key + "'");
    }
    it->second(config, key, value);
}

RunConfig parse_config(std::istream& is, const std::string& source)
{
    RunConfig config;
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value', got '" + body + "'");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        try {
            apply_setting(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(number) + ": " + e.detail());
        }
    }
    return config;
}

namespace {

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& s : items) {
        out += (out.empty() ? "" : ",") + s;
    }
    return out;
}

} // namespace

std::string config_to_json(const RunConfig& c)
{
    nlohmann::json params = nlohmann::json::array();
    for (auto param : c.params) {
        params.push_back(std::string(to_string(param)));
    }
    const nlohmann::json j = {
        {"schema", "plap-config-v1"},
        {"mesh_n", c.mesh_n},
        {"cells", c.cells},
        {"rings", c.rings},
        {"j_max", c.j_max},
        {"mesh_seed", c.mesh_seed},
        {"perturb_data_mesh", c.perturb_data_mesh},
        {"p", c.p},
        {"tau", c.tau},
        {"current", c.current},
        {"sample", c.sample},
        {"param", std::string(to_string(c.param))},
        {"study", c.study},
        {"p_grid", c.p_grid.empty() ? default_p_grid() : c.p_grid},
        {"tau_grid", c.tau_grid},
        {"samples", c.samples},
        {"params", params},
        {"lambda", c.lambda},
        {"penalty", c.penalty},
        {"misspecified", c.misspecified},
        {"members", c.members},
        {"snapshots", c.snapshots},
        {"max_skip_fraction", c.max_skip_fraction},
        {"proptest_samples", c.proptest_samples},
        {"proptest_p_min", c.proptest_p_min},
        {"proptest_p_max", c.proptest_p_max},
        {"seed", c.seed},
        {"noise_seed", c.noise_seed},
        {"threads", c.threads},
        {"out", c.out},
    };
    return j.dump(2);
}

RunConfig config_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("manifest must be a JSON object");
    }
    RunConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "schema" || key == "command") {
            continue;
        }
        std::string text_value;
        if (value.is_array()) {
            std::vector<std::string> items;
            for (const auto& item : value) {
                items.push_back(item.is_string() ? item.get<std::string>() : item.dump());
            }
            text_value = join(items);
        } else if (value.is_string()) {
            text_value = value.get<std::string>();
        } else {
            text_value = value.dump();
        }
        apply_setting(config, key, text_value);
    }
    return config;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return config_from_json(text);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ": " + e.detail());
        }
    }
    std::istringstream is(text);
    return parse_config(is, path);
}

void validate(const RunConfig& c)
{
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("field '" + field + "': " + why);
    };
    if (c.mesh_n < 16) {
        fail("mesh_n", "needs at least 16 boundary nodes");
    }
    if (c.cells < 1) {
        fail("cells", "must be >= 1");
    }
    if (c.rings < 0) {
        fail("rings", "must be >= 0");
    }
    if (c.j_max < 1 || 8 * c.j_max > c.mesh_n) {
        fail("j_max", "needs 1 <= j_max and 8 j_max <= mesh_n");
    }
    if (!(c.p > 1.0)) {
        fail("p", "must be > 1");
    }
    if (!(c.tau >= 0.0)) {
        fail("tau", "must be >= 0");
    }
    for (double p : c.p_grid) {
        if (!(p > 1.0)) {
            fail("p_grid", "every exponent must be > 1");
        }
    }
    if (!std::is_sorted(c.p_grid.begin(), c.p_grid.end())) {
        fail("p_grid", "must be increasing");
    }
    if (c.tau_grid.empty()) {
        fail("tau_grid", "must not be empty");
    }
    for (double t : c.tau_grid) {
        if (!(t >= 0.0)) {
            fail("tau_grid", "every tau must be >= 0");
        }
    }
    try {
        (void)sample_config(c.sample);
        for (const auto& s : c.samples) {
            (void)sample_config(s);
        }
    } catch (const InvalidArgument& e) {
        fail("samples", e.detail());
    }
    if (c.params.empty()) {
        fail("params", "must not be empty");
    }
    if (c.lambda < 0.0) {
        fail("lambda", "must be >= 0");
    }
    if (!(c.penalty > 0.0)) {
        fail("penalty", "must be > 0");
    }
    if (c.members < 1) {
        fail("members", "must be >= 1");
    }
    if (!(c.max_skip_fraction >= 0.0 && c.max_skip_fraction <= 1.0)) {
        fail("max_skip_fraction", "must lie in [0, 1]");
    }
    if (!(c.proptest_p_min > 1.0 && c.proptest_p_max >= c.proptest_p_min)) {
        fail("proptest_p_min", "needs 1 < proptest_p_min <= proptest_p_max");
    }
}

} // namespace plap
