#pragma once

#include <string>

#include "mvfuse/scene.hpp"
#include "mvfuse/tta.hpp"

namespace mvfuse {

// MVFUSE-SCENE-v1: the full capture in one checksummed little-endian file.
// Embeds the body model, the per-view cameras, detections and prior tokens,
// and the ground-truth block when present (see docs/formats.md).
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

enum class ExportFormat { kRecords, kSummary };

ExportFormat parse_export_format(const std::string& name);  // throws ValidationError
std::string export_format_name(ExportFormat format);

// records: one JSON line per trace row (steps + 1 lines). summary: a single
// JSON object with the final output-body metrics (keys named after the
// MetricReport fields) plus the final parameters, enough to re-score the
// run against a scene that carries ground truth.
void export_result(const TTAResult& result, const std::string& path, ExportFormat format);

}  // namespace mvfuse
