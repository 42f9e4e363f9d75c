#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "linimed/errors.hpp"
#include "linimed/harness.hpp"
#include "linimed/movielens.hpp"

namespace linimed {

inline constexpr std::string_view kCurvesHeader = "round,policy,mean,std,n";
inline constexpr std::string_view kSweepHeader = "policy,alpha,final_mean,final_std,n,best";

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string curves_to_csv(const std::vector<AggregateCurve>& curves) {
    std::string out(kCurvesHeader);
    out += '\n';
    for (const auto& c : curves) {
        for (std::size_t t = 0; t < c.mean.size(); ++t) {
            out += std::to_string(t + 1);
            out += ',';
            out += c.label;
            out += ',';
            out += format_double(c.mean[t]);
            out += ',';
            out += format_double(c.std[t]);
            out += ',';
            out += std::to_string(c.n);
            out += '\n';
        }
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline void emit_csv(const std::vector<AggregateCurve>& curves, const std::filesystem::path& path) {
    if (curves.empty()) throw UsageError("emit_csv: no curves");
    write_text(path, curves_to_csv(curves));
}

/// Parses a curves file back; policies keep their first-appearance order.
inline std::vector<AggregateCurve> read_curves_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kCurvesHeader)
        throw IngestionError("line 1: expected header '" + std::string(kCurvesHeader) + "'");
    std::vector<AggregateCurve> curves;
    std::map<std::string, std::size_t> where;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty()) continue;
        const auto f = detail::split(view, ",");
        std::size_t round = 0, n = 0;
        double mean = 0.0, sd = 0.0;
        if (f.size() != 5 || !detail::parse_number(f[0], round) || !detail::parse_number(f[2], mean) ||
            !detail::parse_number(f[3], sd) || !detail::parse_number(f[4], n))
            throw IngestionError("line " + std::to_string(lineno) + ": malformed curves row");
        const std::string label(f[1]);
        auto [it, inserted] = where.try_emplace(label, curves.size());
        if (inserted) curves.push_back(AggregateCurve{label, {}, {}, n});
        auto& c = curves[it->second];
        if (round != c.mean.size() + 1)
            throw IngestionError("line " + std::to_string(lineno) + ": rounds must be consecutive from 1");
        c.mean.push_back(mean);
        c.std.push_back(sd);
    }
    return curves;
}

inline std::string sweep_to_csv(const SweepResult& sweep) {
    std::string out(kSweepHeader);
    out += '\n';
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const auto& r = sweep.rows[i];
        const bool best = std::find(sweep.best.begin(), sweep.best.end(), i) != sweep.best.end();
        out += r.label + ',' + format_double(r.alpha) + ',' + format_double(r.final_mean) + ',' +
               format_double(r.final_std) + ',' + std::to_string(r.finals.size()) + ',' + (best ? "1" : "0") + '\n';
    }
    return out;
}

}  // namespace linimed
