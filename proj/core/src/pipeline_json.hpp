#pragma once

// Internal: pipeline <-> nlohmann::json conversion shared by the pipeline
// text functions and the knowledge-base / model serializers.

#include <json.hpp>

#include "rankml/pipeline.hpp"

namespace rankml::detail {

nlohmann::json pipeline_to_json(const PipelineGraph& g);

// `where` prefixes error messages, e.g. "pipeline" or "kb line 12".
PipelineGraph pipeline_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace rankml::detail
