#include "superrad/cli_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

namespace superrad {

const char* command_name(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::analytic: return "analytic";
        case Command::critical_lambda: return "critical-lambda";
        case Command::exponent: return "exponent";
        case Command::reabsorption: return "reabsorption";
        case Command::eternal_nm: return "eternal-nm";
        default: return "sweep";
    }
}

OutputFormat RunConfig::effective_format() const {
    if (format) return *format;
    if (command == Command::eternal_nm) return OutputFormat::json;
    if (command == Command::critical_lambda && n_list.empty()) return OutputFormat::json;
    return OutputFormat::csv;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
    std::replace(k.begin(), k.end(), '_', '-');
    return k;
}

[[noreturn]] void bad_value(const ConfigEntry& e, const std::string& expected) {
    std::ostringstream os;
    os << "type mismatch for '" << e.key << "'";
    if (e.line > 0) os << " on line " << e.line;
    os << ": expected " << expected << ", got '" << e.value << "'";
    throw ConfigError(e.key, e.line, os.str());
}

double to_double(const ConfigEntry& e, const std::string& text) {
    double v = 0.0;
    const char* b = text.data();
    const char* end = b + text.size();
    const auto r = std::from_chars(b, end, v);
    if (text.empty() || r.ec != std::errc() || r.ptr != end) bad_value(e, "a number");
    return v;
}

long long to_integer(const ConfigEntry& e, const std::string& text) {
    long long v = 0;
    const char* b = text.data();
    const char* end = b + text.size();
    const auto r = std::from_chars(b, end, v);
    if (text.empty() || r.ec != std::errc() || r.ptr != end) bad_value(e, "an integer");
    return v;
}

double as_double(const ConfigEntry& e) { return to_double(e, e.value); }
long long as_integer(const ConfigEntry& e) { return to_integer(e, e.value); }

std::size_t as_count(const ConfigEntry& e) {
    const long long v = as_integer(e);
    if (v < 0) bad_value(e, "a non-negative integer");
    return static_cast<std::size_t>(v);
}

bool as_bool(const ConfigEntry& e) {
    std::string v = e.value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(e, "a boolean");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    return out;
}

template <class T>
T as_choice(const ConfigEntry& e, const std::vector<std::pair<std::string, T>>& choices) {
    for (const auto& [name, v] : choices)
        if (e.value == name) return v;
    std::string exp = "one of";
    for (const auto& c : choices) exp += " " + c.first;
    bad_value(e, exp);
}

// Lambda given as a ratio or as an absolute value; the later layer wins.
struct LambdaSpec {
    std::optional<double> ratio;
    std::optional<double> absolute;
};

struct Builder {
    RunConfig cfg;
    LambdaSpec lam;
    bool have_command = false;
};

using Handler = std::function<void(Builder&, const ConfigEntry&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"command",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.command = as_choice<Command>(e, {{"simulate", Command::simulate},
                                                    {"analytic", Command::analytic},
                                                    {"critical-lambda", Command::critical_lambda},
                                                    {"exponent", Command::exponent},
                                                    {"reabsorption", Command::reabsorption},
                                                    {"eternal-nm", Command::eternal_nm},
                                                    {"sweep", Command::sweep}});
             b.have_command = true;
         }},
        {"n",
         [](Builder& b, const ConfigEntry& e) {
             const long long v = as_integer(e);
             if (v > 1000000) bad_value(e, "an atom count below 10^6");
             b.cfg.params.n_atoms = static_cast<int>(v);
         }},
        {"gamma0", [](Builder& b, const ConfigEntry& e) { b.cfg.params.gamma0 = as_double(e); }},
        {"omega0", [](Builder& b, const ConfigEntry& e) { b.cfg.params.omega0 = as_double(e); }},
        {"lambda-over-gamma0",
         [](Builder& b, const ConfigEntry& e) {
             b.lam.ratio = as_double(e);
             b.lam.absolute.reset();
         }},
        {"lambda",
         [](Builder& b, const ConfigEntry& e) {
             b.lam.absolute = as_double(e);
             b.lam.ratio.reset();
         }},
        {"abs-tol", [](Builder& b, const ConfigEntry& e) { b.cfg.params.abs_tol = as_double(e); }},
        {"rel-tol", [](Builder& b, const ConfigEntry& e) { b.cfg.params.rel_tol = as_double(e); }},
        {"t-start", [](Builder& b, const ConfigEntry& e) { b.cfg.grid.t_start = as_double(e); }},
        {"t-end", [](Builder& b, const ConfigEntry& e) { b.cfg.grid.t_end = as_double(e); }},
        {"n-samples", [](Builder& b, const ConfigEntry& e) { b.cfg.grid.n_samples = as_count(e); }},
        {"n-list",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.n_list.clear();
             for (const auto& s : split_list(e.value)) b.cfg.n_list.push_back(static_cast<int>(to_integer(e, s)));
         }},
        {"lambda-list",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.lambda_list.clear();
             for (const auto& s : split_list(e.value)) b.cfg.lambda_list.push_back(to_double(e, s));
         }},
        {"output", [](Builder& b, const ConfigEntry& e) { b.cfg.output = e.value; }},
        {"format",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.format = as_choice<OutputFormat>(e, {{"csv", OutputFormat::csv}, {"json", OutputFormat::json}});
         }},
        {"rates",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.rates = as_choice<RateKind>(
                 e, {{"none", RateKind::none}, {"canonical", RateKind::canonical}, {"noncanonical", RateKind::noncanonical}});
         }},
        {"precision",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.precision =
                 as_choice<Precision>(e, {{"extended", Precision::extended}, {"quad", Precision::quad}});
         }},
        {"degenerate",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.degenerate = as_choice<DegeneratePolicy>(
                 e, {{"confluent", DegeneratePolicy::confluent}, {"strict", DegeneratePolicy::strict}});
         }},
        {"engine",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.engine = as_choice<Engine>(
                 e, {{"automatic", Engine::automatic}, {"dense", Engine::dense}, {"reduced", Engine::reduced}});
         }},
        {"stop-at-horizon", [](Builder& b, const ConfigEntry& e) { b.cfg.stop_at_horizon = as_bool(e); }},
        {"threads", [](Builder& b, const ConfigEntry& e) { b.cfg.threads = as_count(e); }},
        {"memory-budget-gib",
         [](Builder& b, const ConfigEntry& e) {
             const double g = as_double(e);
             if (!(g > 0.0) || !std::isfinite(g)) bad_value(e, "a positive size in GiB");
             b.cfg.memory_budget_bytes = static_cast<std::size_t>(g * 1073741824.0);
         }},
        {"eps-intensity", [](Builder& b, const ConfigEntry& e) { b.cfg.eps_intensity = as_double(e); }},
        {"bracket-lo", [](Builder& b, const ConfigEntry& e) { b.cfg.bracket.lo_over_gamma0 = as_double(e); }},
        {"bracket-hi", [](Builder& b, const ConfigEntry& e) { b.cfg.bracket.hi_over_gamma0 = as_double(e); }},
        {"rel-width", [](Builder& b, const ConfigEntry& e) { b.cfg.rel_width = as_double(e); }},
        {"exponent-source",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.exponent_source = as_choice<ExponentSource>(
                 e, {{"pseudomode", ExponentSource::pseudomode}, {"cascade", ExponentSource::markovian_cascade}});
         }},
        {"analysis-source",
         [](Builder& b, const ConfigEntry& e) {
             b.cfg.analysis_source = as_choice<TraceSource>(e, {{"automatic", TraceSource::automatic},
                                                                {"analytic", TraceSource::analytic},
                                                                {"pseudomode", TraceSource::pseudomode}});
         }},
    };
    return h;
}

void apply(Builder& b, const std::vector<ConfigEntry>& entries) {
    const auto& h = handlers();
    bool ratio_here = false, abs_here = false;
    for (const auto& raw : entries) {
        ConfigEntry e = raw;
        e.key = normalize_key(e.key);
        const auto it = h.find(e.key);
        if (it == h.end()) {
            std::ostringstream os;
            os << "unknown key '" << e.key << "'";
            if (e.line > 0) os << " on line " << e.line;
            throw ConfigError(e.key, e.line, os.str());
        }
        if (e.key == "lambda-over-gamma0") ratio_here = true;
        if (e.key == "lambda") abs_here = true;
        it->second(b, e);
    }
    if (ratio_here && abs_here)
        throw ConfigError("lambda", entries.empty() ? 0 : entries.back().line,
                          "give lambda either as lambda-over-gamma0 or as lambda, not both");
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : handlers()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::vector<ConfigEntry> read_config_text(const std::string& text) {
    std::vector<ConfigEntry> out;
    std::istringstream is(text);
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", no, "line " + std::to_string(no) + ": expected 'key = value'");
        }
        ConfigEntry e{normalize_key(trim(s.substr(0, eq))), trim(s.substr(eq + 1)), no};
        if (e.key.empty()) throw ConfigError("", no, "line " + std::to_string(no) + ": empty key");
        out.push_back(std::move(e));
    }
    return out;
}

RunConfig build_config(const std::vector<ConfigEntry>& file_entries, const std::vector<ConfigEntry>& flag_entries) {
    Builder b;
    apply(b, file_entries);
    apply(b, flag_entries);
    if (!b.have_command) throw ConfigError("command", 0, "missing command");

    SystemParams& p = b.cfg.params;
    if (b.lam.ratio) p.lambda = *b.lam.ratio * p.gamma0;
    else if (b.lam.absolute) p.lambda = *b.lam.absolute;
    // Rescaling to omega0 = 1 happens here so every artifact reports the
    // parameters the solvers actually used.
    p = validate_params(p);

    if (b.cfg.grid.n_samples < 2) throw ConfigError("n-samples", 0, "n-samples must be at least 2");
    for (int n : b.cfg.n_list)
        if (n < 1) throw ConfigError("n-list", 0, "n-list entries must be positive integers");
    for (double l : b.cfg.lambda_list)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda-list", 0, "lambda-list entries must be finite and >= 0");
    return b.cfg;
}

ParsedCommandLine parse_command_line(int argc, const char* const* argv) {
    CLI::App app{"Collective emission of N two-level atoms in a lossy cavity"};
    app.set_version_flag("--version", std::string(SUPERRAD_VERSION));
    std::string command;
    std::string config_path;
    app.add_option("command", command,
                   "simulate | analytic | critical-lambda | exponent | reabsorption | eternal-nm | sweep");
    app.add_option("--config", config_path, "key = value file; flags override its values");
    std::map<std::string, std::string> values;
    for (const auto& key : config_keys()) {
        if (key == "command") continue;
        app.add_option("--" + key, values[key])->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
        return {std::nullopt, std::string(SUPERRAD_VERSION) + "\n"};
    } catch (const CLI::CallForHelp&) {
        return {std::nullopt, app.help()};
    } catch (const CLI::CallForAllHelp&) {
        return {std::nullopt, app.help()};
    } catch (const CLI::ParseError& e) {
        throw ConfigError("", 0, e.what());
    }

    std::vector<ConfigEntry> file_entries;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("config", 0, "cannot read config file " + config_path);
        std::stringstream ss;
        ss << f.rdbuf();
        file_entries = read_config_text(ss.str());
    }
    std::vector<ConfigEntry> flags;
    if (!command.empty()) flags.push_back({"command", command, 0});
    // Keep the order flags were given in so a later flag wins over an earlier one.
    for (const auto* opt : app.parse_order()) {
        const std::string name = opt->get_name(false, true);
        if (name.rfind("--", 0) != 0 || name == "--config" || name == "--version") continue;
        const std::string key = name.substr(2);
        const auto it = values.find(key);
        if (it == values.end()) continue;
        flags.push_back({key, it->second, 0});
    }
    // parse_order lists an option once per occurrence; keep the last of each.
    std::vector<ConfigEntry> dedup;
    for (auto it = flags.rbegin(); it != flags.rend(); ++it) {
        const bool seen = std::any_of(dedup.begin(), dedup.end(), [&](const ConfigEntry& d) { return d.key == it->key; });
        if (!seen) dedup.push_back(*it);
    }
    std::reverse(dedup.begin(), dedup.end());
    return {build_config(file_entries, dedup), ""};
}

}  // namespace superrad
