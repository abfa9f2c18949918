#include "expem/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace expem {

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::converge: return "converge";
        case ExperimentKind::stability: return "stability";
        case ExperimentKind::moments: return "moments";
        case ExperimentKind::check: return "check";
    }
    return "unknown";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& what) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& source, int line, const std::string& key,
                  const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(source, line, "field '" + key + "': cannot parse real value '" + value + "'");
    }
}

long long parse_int(const std::string& source, int line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(source, line, "field '" + key + "': cannot parse integer value '" + value + "'");
    }
}

bool parse_bool(const std::string& source, int line, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    fail(source, line, "field '" + key + "': cannot parse boolean value '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// "6..12" or "6,7,8".
std::vector<int> parse_q_list(const std::string& source, int line, const std::string& value) {
    std::vector<int> qs;
    const auto dots = value.find("..");
    if (dots != std::string::npos) {
        const int lo = static_cast<int>(parse_int(source, line, "q_list", trim(value.substr(0, dots))));
        const int hi =
            static_cast<int>(parse_int(source, line, "q_list", trim(value.substr(dots + 2))));
        if (hi < lo) fail(source, line, "q_list: empty range");
        for (int q = lo; q <= hi; ++q) qs.push_back(q);
        return qs;
    }
    for (const std::string& item : split_list(value))
        qs.push_back(static_cast<int>(parse_int(source, line, "q_list", item)));
    if (qs.empty()) fail(source, line, "q_list: no entries");
    return qs;
}

ModelKind parse_kind(const std::string& source, int line, const std::string& value) {
    if (value == "polynomial") return ModelKind::polynomial;
    if (value == "piecewise-polynomial") return ModelKind::piecewise_polynomial;
    if (value == "modulated-polynomial") return ModelKind::modulated_polynomial;
    if (value == "gbm") return ModelKind::gbm;
    if (value == "lotka-volterra") return ModelKind::lotka_volterra;
    fail(source, line, "unknown model kind '" + value + "'");
}

} // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    ExperimentConfig cfg;
    std::string section;
    std::string raw;
    int line = 0;
    bool saw_kind = false;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find_first_of("#;");
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(source, line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "experiment" && section != "model" && section != "grid" &&
                section != "mc" && section != "output")
                fail(source, line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(source, line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) fail(source, line, "empty key or value");
        if (section.empty()) fail(source, line, "key '" + key + "' outside any section");

        if (section == "experiment") {
            if (key == "kind") {
                saw_kind = true;
                if (value == "converge") cfg.kind = ExperimentKind::converge;
                else if (value == "stability") cfg.kind = ExperimentKind::stability;
                else if (value == "moments") cfg.kind = ExperimentKind::moments;
                else if (value == "check") cfg.kind = ExperimentKind::check;
                else fail(source, line, "unknown experiment kind '" + value + "'");
            } else {
                fail(source, line, "unknown key '" + key + "' in [experiment]");
            }
        } else if (section == "model") {
            if (key == "preset") {
                if (!is_preset_name(value)) fail(source, line, "unknown model preset '" + value + "'");
                cfg.model = preset(value);
                cfg.model_preset = value;
            } else if (key == "kind") cfg.model.kind = parse_kind(source, line, value);
            else if (key == "b0") cfg.model.b0 = parse_real(source, line, key, value);
            else if (key == "B1") cfg.model.B1 = parse_real(source, line, key, value);
            else if (key == "B2") cfg.model.B2 = parse_real(source, line, key, value);
            else if (key == "beta") cfg.model.beta = parse_real(source, line, key, value);
            else if (key == "alpha") cfg.model.alpha = parse_real(source, line, key, value);
            else if (key == "Sigma") cfg.model.Sigma = parse_real(source, line, key, value);
            else if (key == "SigmaPrime") cfg.model.SigmaPrime = parse_real(source, line, key, value);
            else if (key == "LG") cfg.model.growth_const = parse_real(source, line, key, value);
            else if (key == "Lbloc") cfg.model.onesided_const = parse_real(source, line, key, value);
            else if (key == "zeta") cfg.model.zeta = parse_real(source, line, key, value);
            else if (key == "B1prime") cfg.model.B1prime = parse_real(source, line, key, value);
            else if (key == "x0") cfg.model.x0 = parse_real(source, line, key, value);
            else if (key == "chi") {
                cfg.model.discontinuities.clear();
                for (const std::string& item : split_list(value))
                    cfg.model.discontinuities.push_back(parse_real(source, line, key, item));
            } else if (key == "interval_B2") {
                cfg.model.interval_B2.clear();
                for (const std::string& item : split_list(value))
                    cfg.model.interval_B2.push_back(parse_real(source, line, key, item));
            } else {
                fail(source, line, "unknown key '" + key + "' in [model]");
            }
        } else if (section == "grid") {
            if (key == "T") cfg.T = parse_real(source, line, key, value);
            else if (key == "q_list") cfg.q_list = parse_q_list(source, line, value);
            else if (key == "q_ref") cfg.q_ref = static_cast<int>(parse_int(source, line, key, value));
            else if (key == "dt") cfg.dt = parse_real(source, line, key, value);
            else fail(source, line, "unknown key '" + key + "' in [grid]");
        } else if (section == "mc") {
            if (key == "n_traj") cfg.n_traj = static_cast<std::size_t>(parse_int(source, line, key, value));
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(source, line, key, value));
            else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_int(source, line, key, value));
            else if (key == "p") cfg.p = static_cast<int>(parse_int(source, line, key, value));
            else if (key == "eps") cfg.eps = parse_real(source, line, key, value);
            else if (key == "mu") cfg.mu = parse_real(source, line, key, value);
            else if (key == "kappa") cfg.neg_power = parse_real(source, line, key, value);
            else if (key == "band_radius") cfg.band_radius = parse_real(source, line, key, value);
            else fail(source, line, "unknown key '" + key + "' in [mc]");
        } else { // output
            if (key == "dir") cfg.out_dir = value;
            else if (key == "formats") {
                cfg.emit_csv = false;
                cfg.emit_json = false;
                for (const std::string& item : split_list(value)) {
                    if (item == "csv") cfg.emit_csv = true;
                    else if (item == "json") cfg.emit_json = true;
                    else fail(source, line, "unknown output format '" + item + "'");
                }
            } else if (key == "emit_trajectories") {
                cfg.emit_trajectories = parse_bool(source, line, key, value);
            } else {
                fail(source, line, "unknown key '" + key + "' in [output]");
            }
        }
    }
    if (!saw_kind) throw ConfigError(source + ": missing [experiment] kind");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in, path);
}

void validate_config(const ExperimentConfig& cfg) {
    try {
        cfg.model.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (cfg.n_traj == 0) throw ConfigError("mc: n_traj must be >= 1");
    if (cfg.p < 1) throw ConfigError("mc: p must be >= 1");
    if (cfg.threads == 0) throw ConfigError("mc: threads must be >= 1");
    if (cfg.kind == ExperimentKind::converge || cfg.kind == ExperimentKind::moments) {
        if (!(cfg.T > 0.0)) throw ConfigError("grid: T must be > 0");
        if (cfg.q_list.empty()) throw ConfigError("grid: q_list must not be empty");
        for (int q : cfg.q_list)
            if (q < 0 || q > 30) throw ConfigError("grid: q outside [0, 30]");
    }
    if (cfg.kind == ExperimentKind::converge) {
        const int q_max = *std::max_element(cfg.q_list.begin(), cfg.q_list.end());
        if (cfg.q_ref <= q_max)
            throw ConfigError("grid: q_ref must exceed every entry of q_list");
        if (cfg.q_ref > 26) throw ConfigError("grid: q_ref outside (max q, 26]");
    }
    if (cfg.kind == ExperimentKind::stability) {
        if (!(cfg.T >= 0.0)) throw ConfigError("grid: T must be >= 0");
        if (!(cfg.dt > 0.0)) throw ConfigError("grid: dt must be > 0");
    }
    if (cfg.kind == ExperimentKind::check) {
        if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw ConfigError("mc: eps must lie in (0, 1/2)");
    }
}

} // namespace expem
