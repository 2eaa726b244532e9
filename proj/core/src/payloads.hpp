#pragma once

#include <string>

#include "binio.hpp"
#include "mvfuse/bodymodel.hpp"

// Model payload serialization shared between the standalone MODEL format
// and the SCENE format, which embeds the model.

namespace mvfuse::detail {

void write_model_payload(binio::Writer& w, const BodyModel& model);
BodyModel read_model_payload(binio::Reader& r, const std::string& path);

}  // namespace mvfuse::detail
