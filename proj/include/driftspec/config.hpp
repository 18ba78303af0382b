#pragma once

#include "driftspec/model.hpp"

namespace driftspec {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resolved experiment description. See README for the config-file schema
/// (flat `key = value` lines with dotted sections).
struct ExperimentConfig {
    std::string mode = "solve";
    double eps = 0.0;  // required
    double drift_a0 = 0.0;
    std::vector<double> drift_coeffs;

    std::string preset = "zero";
    double pot_c0 = 0.0;
    std::vector<double> pot_gradient, pot_hessian, pot_x0, pot_scales;
    double pot_scale = 1.0;
    double pot_degree = 2.0;
    std::string pot_kind = "radial";
    std::string pot_table;

    std::vector<double> alpha_ladder;  // single entry in solve mode
    int grid_points = 257;
    std::vector<double> box_lo, box_hi;   // default [-1, 1]^N
    double rescaled_radius = 0.0;         // 0 -> 8 * max_j sigma_j
    std::string frame = "auto";           // auto | physical | rescaled
    double solver_tol = 1e-9;
    int solver_max_matvecs = 10000;
    int solver_levels = 1;                // Richardson levels (1 = single grid)
    std::string expansion = "auto";       // auto | smooth | homogeneous
    int corrections_degree = 0;           // 0 -> 40 (80 for non-polynomial h0)
    double pohozaev_radius = 0.0;         // 0 -> R/2
    std::string out_csv, out_json;
    bool strict = false;

    int dim() const { return static_cast<int>(drift_coeffs.size()); }
    DriftSpec make_drift() const;
    PotentialSpec make_potential() const;
    BoxDomain make_box() const;
    /// Rescaled-frame half-width: configured value or 8 * max_j sqrt(eps/4|a_j|).
    double resolved_radius() const;
    /// Key-value echo of every resolved field, for reports.
    std::vector<std::pair<std::string, std::string>> resolved_items() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

}  // namespace driftspec
