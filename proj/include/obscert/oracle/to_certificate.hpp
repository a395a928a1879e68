#pragma once

#include "obscert/certify/checks.hpp"
#include "obscert/oracle/grid.hpp"

namespace obscert::oracle {

/// Table-backed certificate V = max(u_t - delta, 0) with alpha = 1 and beta the
/// worst recursion residual (capped at 0) measured on the validation grid.
certify::Certificate table_to_certificate(const ValueTable& table, const product::VerificationStructure& vs,
                                          double delta, const certify::CheckSettings& validation);

/// Validation settings that land exactly on the table's nodes and reuse the
/// grid's quadrature and candidates.
certify::CheckSettings node_settings(const ValueTable& table, const GridSpec& grid);

}  // namespace obscert::oracle
