#include "superrad/output.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

namespace superrad {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // no "-0"
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> r;
    r.reserve(values.size());
    for (double v : values) r.push_back(format_number(v));
    rows.push_back(std::move(r));
}

std::string render_csv(const CsvTable& t) {
    std::string out;
    for (const auto& c : t.comments) out += "# " + c + "\n";
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
        if (k) out += ',';
        out += t.columns[k];
    }
    out += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) out += ',';
            out += r[k];
        }
        out += '\n';
    }
    return out;
}

std::string render_json(const JsonRecord& rec) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, v] : rec) {
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, double>) {
                    // JSON has no inf/nan; keep them readable as strings.
                    if (std::isfinite(x)) j[key] = x;
                    else j[key] = format_number(x);
                } else {
                    j[key] = x;
                }
            },
            v);
    }
    return j.dump(2) + "\n";
}

std::vector<std::pair<std::string, std::string>> provenance(const std::string& command, const SystemParams& p,
                                                            const std::string& solver) {
    std::vector<std::pair<std::string, std::string>> out = {
        {"superrad_version", SUPERRAD_VERSION},
        {"command", command},
        {"solver", solver},
        {"n_atoms", std::to_string(p.n_atoms)},
        {"gamma0_omega0", format_number(p.gamma0)},
        {"lambda_omega0", format_number(p.lambda)},
        {"lambda_over_gamma0", format_number(p.gamma0 > 0 ? p.lambda / p.gamma0 : 0.0)},
        {"omega0", format_number(p.omega0)},
        {"abs_tol", format_number(effective_abs_tol(p))},
        {"rel_tol", format_number(effective_rel_tol(p))},
    };
    return out;
}

void write_artifact(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("io", "cannot open " + tmp.string() + " for writing: " + std::strerror(errno));
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            f.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("io", "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("io", "cannot rename onto " + target.string() + ": " + ec.message());
    }
}

}  // namespace superrad
