#pragma once

#include <string>
#include <vector>

namespace spinraman {

// Sampled (energy, intensity) curve. Grid is strictly increasing;
// grid_spacing is 0 for non-uniform grids.
struct Spectrum {
    std::vector<double> grid;    // ueV
    std::vector<double> values;  // relative intensity, >= 0
    double grid_spacing = 0.0;   // ueV

    std::size_t size() const { return grid.size(); }
    void validate() const;       // throws PhysicsError on violated invariants
    std::size_t peak_index() const;
    double integral() const;     // trapezoid
};

// Sampled g2(tau) with the normalization (steady-state photon flux) used.
struct CorrelationTrace {
    std::vector<double> tau_ps;
    std::vector<double> g2;
    double normalization_flux = 0.0;  // kappa*<a'a>_ss, ueV units

    std::size_t size() const { return tau_ps.size(); }
    bool uniform_grid(double* step = nullptr) const;
    void validate() const;
};

// Uniform grid helper: n samples from first to last inclusive (n >= 2).
std::vector<double> linspace(double first, double last, std::size_t n);

// CSV output: header row, '.' decimal separator, LF endings, shortest
// round-trip float formatting. Optional comment lines are written first,
// each prefixed with "# ".
void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::vector<std::string>& comments = {});
void write_trace_csv(const std::string& path, const CorrelationTrace& t,
                     const std::vector<std::string>& comments = {});

std::string format_double(double v);

} // namespace spinraman
