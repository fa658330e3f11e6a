#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace dbarrier {

enum class Status { pass, fail, inconclusive };

inline const char* status_name(Status s) {
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

/// One numeric check. `claim` is a plain statement of the property under test.
struct Check {
    std::string name;
    std::string claim;
    Status status = Status::inconclusive;
    double measured = 0.0;
    double tolerance = 0.0;
    double stderr = 0.0;
};

/// Plot-ready table written to curves/<name>.csv.
struct Curve {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Report {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<Check> checks;
    std::vector<Curve> curves;
    std::vector<std::string> notes;

    void add(Check c) { checks.push_back(std::move(c)); }

    /// measured <= tolerance passes.
    void upper(std::string name, std::string claim, double measured, double tolerance, double se = 0.0) {
        add({std::move(name), std::move(claim), measured <= tolerance ? Status::pass : Status::fail, measured, tolerance, se});
    }

    std::size_t count(Status s) const {
        std::size_t n = 0;
        for (const auto& c : checks) n += c.status == s;
        return n;
    }
    bool failed() const { return count(Status::fail) > 0; }

    void merge(Report other) {
        for (auto& c : other.checks) checks.push_back(std::move(c));
        for (auto& c : other.curves) curves.push_back(std::move(c));
        for (auto& n : other.notes) notes.push_back(std::move(n));
    }

    const Check* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Fixed 17-significant-digit scientific notation; "nan"/"inf" stay textual so output stays byte-stable.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace detail {
inline nlohmann::ordered_json number_json(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}
}  // namespace detail

inline std::string report_json(const Report& r) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["experiment"] = r.experiment;
    j["seed"] = r.seed;
    j["summary"] = {{"checks", r.checks.size()},
                    {"pass", r.count(Status::pass)},
                    {"fail", r.count(Status::fail)},
                    {"inconclusive", r.count(Status::inconclusive)}};
    oj checks = oj::array();
    for (const auto& c : r.checks) {
        oj e;
        e["name"] = c.name;
        e["claim"] = c.claim;
        e["status"] = status_name(c.status);
        e["measured"] = detail::number_json(c.measured);
        e["tolerance"] = detail::number_json(c.tolerance);
        e["stderr"] = detail::number_json(c.stderr);
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    oj curves = oj::array();
    for (const auto& c : r.curves) curves.push_back("curves/" + c.name + ".csv");
    j["curves"] = std::move(curves);
    j["notes"] = r.notes;
    // Doubles are printed as shortest round-trip literals, which is a function of the bits alone.
    return j.dump(2) + "\n";
}

inline std::string curve_csv(const Curve& c) {
    std::string s;
    for (std::size_t k = 0; k < c.columns.size(); ++k) s += (k ? "," : "") + c.columns[k];
    s += "\n";
    for (const auto& row : c.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + format_number(row[k]);
        s += "\n";
    }
    return s;
}

inline std::string checks_csv(const Report& r) {
    std::string s = "name,status,measured,tolerance,stderr,claim\n";
    for (const auto& c : r.checks) {
        std::string claim = c.claim;
        for (auto& ch : claim)
            if (ch == '"') ch = '\'';
        s += c.name + "," + status_name(c.status) + "," + format_number(c.measured) + "," + format_number(c.tolerance) +
             "," + format_number(c.stderr) + ",\"" + claim + "\"\n";
    }
    return s;
}

/// Writes report.json (or report.csv) and curves/*.csv under dir.
inline void write_report(const Report& r, const std::filesystem::path& dir, bool csv) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "curves");
    auto put = [](const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        out << text;
    };
    put(dir / "report.json", report_json(r));
    if (csv) put(dir / "report.csv", checks_csv(r));
    for (const auto& c : r.curves) put(dir / "curves" / (c.name + ".csv"), curve_csv(c));
}

}  // namespace dbarrier
