// JSON configuration documents for sweeps.
#pragma once

#include <optional>
#include <string>

#include "beamforge/convergence.hpp"

namespace beamforge {

// Strict parse: unknown keys and type errors raise ValidationError naming the
// key path. Missing keys take the defaults of `fallback` (or of the document's
// problem); the result is fully resolved and validated.
SweepConfig parse_config(const std::string& text, std::optional<Problem> fallback = std::nullopt);

// Resolved config as a JSON document (eta null when the per-order rule applies).
std::string serialize_config(const SweepConfig& cfg);

bool same_config(const SweepConfig& a, const SweepConfig& b);

}  // namespace beamforge
