#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "robustnn/bounds.hpp"
#include "robustnn/tuner.hpp"

namespace robustnn::cli {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json(const MetricsReport& r);
Json to_json(const BoundCheck& row);
Json to_json(const PiecewiseConstantFn& f);
Json to_json(const BatchThreshold& b);

/// Header "tau,e_adv,d_nat,g". The first row is the value at lo; the row
/// for a breakpoint b holds the value just after b.
std::string curves_csv(const TauCurves& curves);
/// Header "tau_left,tau_right,value", one row per piece.
std::string pieces_csv(const PiecewiseConstantFn& f);

/// Wraps a payload with the version string and the resolved configuration.
Json envelope(const std::string& command, const Json& config, Json payload);

void write_text(const std::string& path, const std::string& text);

}  // namespace robustnn::cli
