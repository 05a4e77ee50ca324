#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "modeshift/causal_forest.hpp"
#include "modeshift/diagnostics.hpp"
#include "modeshift/effect.hpp"
#include "modeshift/logit.hpp"
#include "modeshift/survey_data.hpp"

namespace modeshift {

using Json = nlohmann::ordered_json;

// Bumped whenever a report field is renamed, removed or changes meaning.
inline constexpr int kReportSchemaVersion = 1;

Json to_json(const EffectEstimate& estimate, std::string_view variant);
Json to_json(const TreatmentSummary& summary);
Json to_json(const LogitModel& model);
Json to_json(const std::vector<BalanceRow>& rows);
Json to_json(const OverlapReport& report);
Json to_json(const StabilityResult& result);

// Input size, per-rule drops and the analysis size; input_rows always
// equals analysis_rows plus the dropped total.
Json drop_log_json(const Dataset& analysis, std::size_t input_rows);

// Two-space indented, trailing newline.
std::string dump(const Json& value);

}  // namespace modeshift
