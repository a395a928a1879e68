#include "obscert/oracle/to_certificate.hpp"

#include <cmath>
#include <memory>

namespace obscert::oracle {

certify::Certificate table_to_certificate(const ValueTable& table, const product::VerificationStructure& vs,
                                          double delta, const certify::CheckSettings& validation) {
    if (!(delta >= 0.0)) throw Error("table certificate: margin must be nonnegative");
    certify::Certificate c = certify::blank_certificate(vs, certify::Backing::Table);
    const bool inf = c.mode == certify::CertMode::Universal;
    if (inf != (table.mode() == Mode::Inf)) throw Error("table certificate: table mode does not match the quantifier");
    c.table = std::make_shared<const ValueTable>(table);
    c.margin = delta;
    certify::CheckSettings s = validation;
    s.t_lo = 1;
    s.t_hi = -1;
    const auto m = certify::check_recursion(c, vs, s);
    c.beta = m.checked > 0 ? std::min(0.0, m.worst) : 0.0;
    return c;
}

certify::CheckSettings node_settings(const ValueTable& table, const GridSpec& grid) {
    certify::CheckSettings s;
    s.per_dim = table.resolution();
    s.quadrature = true;
    const double dw = grid.candidates.empty() ? 1.0 : static_cast<double>(grid.candidates.front().size());
    s.quad_points = static_cast<int>(std::lround(std::pow(static_cast<double>(grid.quadrature.nodes.size()), 1.0 / dw)));
    s.candidates_per_dim = static_cast<int>(std::lround(std::pow(static_cast<double>(grid.candidates.size()), 1.0 / dw)));
    return s;
}

}  // namespace obscert::oracle
