#pragma once

// Run configuration for the command-line front end. Values come from an
// optional `key = value` file and from flags; flags win over the file.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "superrad/analysis.hpp"
#include "superrad/analytic.hpp"
#include "superrad/model.hpp"
#include "superrad/precision.hpp"
#include "superrad/pseudomode.hpp"

namespace superrad {

enum class Command { simulate, analytic, critical_lambda, exponent, reabsorption, eternal_nm, sweep };
enum class OutputFormat { csv, json };
enum class RateKind { none, canonical, noncanonical };

const char* command_name(Command c);

struct GridSpec {
    double t_start = 0.0;
    std::optional<double> t_end;  // unset: the horizon cap (simulate, analytic)
    std::size_t n_samples = 2001;
};

struct RunConfig {
    Command command = Command::simulate;
    SystemParams params;  // lambda already absolute
    GridSpec grid;
    std::vector<int> n_list;
    std::vector<double> lambda_list;  // in units of gamma0
    std::string output = "-";         // "-" is stdout
    std::optional<OutputFormat> format;
    RateKind rates = RateKind::none;
    Precision precision = Precision::extended;
    DegeneratePolicy degenerate = DegeneratePolicy::confluent;
    Engine engine = Engine::automatic;
    bool stop_at_horizon = true;
    std::size_t threads = 0;
    std::size_t memory_budget_bytes = kDefaultMemoryBudget;
    std::optional<double> eps_intensity;
    Bracket bracket;
    double rel_width = 1e-3;
    ExponentSource exponent_source = ExponentSource::pseudomode;
    TraceSource analysis_source = TraceSource::automatic;

    OutputFormat effective_format() const;
};

// One `key = value` assignment; line is 0 for command-line flags.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

// Splits config text into entries. Blank lines and lines starting with '#'
// are skipped; '-' and '_' are interchangeable in keys.
std::vector<ConfigEntry> read_config_text(const std::string& text);

// Applies file entries, then flag entries, over the defaults and validates
// the result. Throws ConfigError for unknown keys, bad values or a missing
// command, and ParamError when the parameters fail validation.
RunConfig build_config(const std::vector<ConfigEntry>& file_entries, const std::vector<ConfigEntry>& flag_entries);

// Keys accepted in files and as `--key` flags.
const std::vector<std::string>& config_keys();

struct ParsedCommandLine {
    std::optional<RunConfig> config;  // empty when only help/version was requested
    std::string message;              // help or version text
};

// Full front-end parsing: positional command, flags, and `--config FILE`.
ParsedCommandLine parse_command_line(int argc, const char* const* argv);

// Executes the configured pipeline and writes its artifact. Returns 0.
int run(const RunConfig& config);

}  // namespace superrad
