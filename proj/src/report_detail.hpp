#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "lineamorph/morphometry.hpp"

namespace lineamorph::detail {

nlohmann::json landmark_widths_json(const LandmarkWidths& lw);
nlohmann::json metrics_record_json(const MetricsRecord& m);
std::string xml_escape(std::string_view s);

}  // namespace lineamorph::detail
