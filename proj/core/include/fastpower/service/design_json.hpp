#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fastpower/oracle.hpp"
#include "fastpower/powercurve.hpp"

namespace fastpower::service {

using json = nlohmann::json;

struct ParseDefaults {
  std::size_t m = 1024;
};

/**
 * Reads a DesignSpec from JSON. Every problem is reported as InvalidDesign
 * with a dotted field path (e.g. "analysis.gamma", "priors.group2[1].b").
 * Infinite interval bounds are written as null (or the strings "inf"/"-inf").
 */
DesignSpec design_from_json(const json& j, const ParseDefaults& defaults = {});
json design_to_json(const DesignSpec& spec);

/** Curve summary with a fixed-size grid of (n, power) pairs for plotting. */
json curve_to_json(const DesignSpec& spec, const PowerCurve& curve, std::size_t grid_points = 200);
json oracle_to_json(const std::vector<OracleReport>& reports);

/** Throws UnattainableDesign when the design comparison lies outside the interval. */
void check_attainable(const DesignSpec& spec);

}  // namespace fastpower::service
