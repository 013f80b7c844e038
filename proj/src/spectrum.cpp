#include "spinraman/spectrum.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "spinraman/errors.hpp"

namespace spinraman {

void Spectrum::validate() const {
    if (grid.size() != values.size()) throw PhysicsError("spectrum grid/value size mismatch");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw PhysicsError("spectrum grid must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v) || v < 0.0) throw PhysicsError("spectrum values must be finite and >= 0");
}

std::size_t Spectrum::peak_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

double Spectrum::integral() const {
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return sum;
}

bool CorrelationTrace::uniform_grid(double* step) const {
    if (tau_ps.size() < 2) return false;
    const double h = tau_ps[1] - tau_ps[0];
    if (h <= 0.0) return false;
    for (std::size_t i = 1; i < tau_ps.size(); ++i) {
        const double d = tau_ps[i] - tau_ps[i - 1];
        if (std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(h))) return false;
    }
    if (step) *step = h;
    return true;
}

void CorrelationTrace::validate() const {
    if (tau_ps.size() != g2.size()) throw PhysicsError("correlation trace size mismatch");
    for (double v : g2)
        if (!std::isfinite(v) || v < 0.0) throw PhysicsError("g2 values must be finite and >= 0");
}

std::vector<double> linspace(double first, double last, std::size_t n) {
    if (n < 2) throw ConfigError("linspace needs at least 2 samples");
    std::vector<double> out(n);
    const double step = (last - first) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = first + step * static_cast<double>(i);
    out.back() = last;
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw ConfigError("cannot open output file: " + path);
    for (const auto& c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << columns[i] << (i + 1 < columns.size() ? "," : "");
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
        out << "\n";
    }
    if (!out) throw ConfigError("write failed: " + path);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::vector<std::string>& comments) {
    std::vector<std::vector<double>> rows;
    rows.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) rows.push_back({s.grid[i], s.values[i]});
    write_csv(path, comments, {"energy_ueV", "intensity"}, rows);
}

void write_trace_csv(const std::string& path, const CorrelationTrace& t,
                     const std::vector<std::string>& comments) {
    std::vector<std::vector<double>> rows;
    rows.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) rows.push_back({t.tau_ps[i], t.g2[i]});
    write_csv(path, comments, {"tau_ps", "g2"}, rows);
}

} // namespace spinraman
