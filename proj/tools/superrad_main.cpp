#include <iostream>

#include <json.hpp>

#include "superrad/cli_config.hpp"

namespace {

// Errors go to stderr as one JSON object so wrappers can parse them.
int report(const std::string& kind, const std::string& message, const std::string& field = "", int line = 0) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    if (!field.empty()) j["field"] = field;
    if (line > 0) j["line"] = line;
    std::cerr << j.dump() << "\n";
    return kind == "config" || kind == "invalid_parameter" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace superrad;
    try {
        const auto parsed = parse_command_line(argc, argv);
        if (!parsed.config) {
            std::cout << parsed.message;
            return 0;
        }
        return run(*parsed.config);
    } catch (const ConfigError& e) {
        return report(e.kind(), e.what(), e.field(), e.line());
    } catch (const ParamError& e) {
        return report(e.kind(), e.what(), e.field());
    } catch (const Error& e) {
        return report(e.kind(), e.what());
    } catch (const std::exception& e) {
        return report("internal", e.what());
    }
}
