#pragma once

#include <cstdint>
#include <iosfwd>

#include "driftspec/asymptotics.hpp"
#include "driftspec/config.hpp"

namespace driftspec {

/// FNV-1a 64-bit content hash; applied to the resolved config for the
/// reproducibility stamp in reports.
std::uint64_t fnv1a64(std::string_view s);

/// Fixed formatting used in every report: 12 significant digits, shortest
/// round-trip form, locale independent.
std::string format_number(double v);

/// CSV with the stable column schema
///   alpha,lambda_numeric,S1,S2,S3,S4,sup_error,scaled_max_drift,max_count,
///   tail_mass,pohozaev
void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records);

/// Versioned JSON report (schema_version 1): resolved config with content
/// hash, per-alpha records, and the fitted residual slopes.
std::string sweep_report_json(const ExperimentConfig& cfg,
                              std::span<const SweepRecord> records,
                              std::span<const std::pair<int, OrderFit>> fits);

}  // namespace driftspec
