#pragma once

#include <vector>

#include "json.hpp"

#include "mmwce/anm.hpp"
#include "mmwce/channel.hpp"
#include "mmwce/omp.hpp"
#include "mmwce/precoding.hpp"
#include "mmwce/sensing.hpp"

namespace mmwce {

// Complex numbers are [re, im]; vectors are arrays of those; matrices are
// {"rows", "cols", "data"} with data in row-major order. Doubles are written
// with round-trip precision.

nlohmann::json to_json(const CVector& v);
nlohmann::json to_json(const CMatrix& m);
nlohmann::json to_json(const RMatrix& m);
CVector cvector_from_json(const nlohmann::json& j);
CMatrix cmatrix_from_json(const nlohmann::json& j);
RMatrix rmatrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ChannelRealization& ch);
ChannelRealization channel_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SensingPlan& plan);
SensingPlan plan_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Measurement& m);
Measurement measurement_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PrecodingSolution& s);
PrecodingSolution solution_from_json(const nlohmann::json& j);

nlohmann::json to_json(const std::vector<AdmmIterate>& trace);
nlohmann::json to_json(const AnmResult& r);
nlohmann::json to_json(const OmpResult& r);

}  // namespace mmwce
