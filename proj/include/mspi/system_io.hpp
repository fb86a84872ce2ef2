#pragma once

// JSON system definitions.
//
//   {
//     "modes": [ {"A": [[...], ...], "B": [[...], ...]}, ... ],
//     "noise": {"kind": "constant-plus-ellipsoid", "v_moment": [[0.2, 0], [0, 0.5]]}
//            | {"kind": "gaussian", "mean": [...], "cov": [[...]]}
//            | {"kind": "custom-table", "values": [[...], ...], "probabilities": [...]},
//     "W": [[...]]            // optional; must equal the noise second moment
//   }
//
// or {"preset": "satellite"}.

#include "json.hpp"

#include "mspi/msdyn.hpp"

namespace mspi {

Matrix matrix_from_json(const nlohmann::json& j, const char* what);
Vector vector_from_json(const nlohmann::json& j, const char* what);
nlohmann::json matrix_to_json(const Matrix& m);

MsSystem system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const MsSystem& sys);

}  // namespace mspi
