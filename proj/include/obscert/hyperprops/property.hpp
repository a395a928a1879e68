#pragma once

#include <memory>

#include "obscert/ltlf/formula.hpp"
#include "obscert/poss/poss.hpp"

namespace obscert::hyperprops {

enum class PropertyKind { InitialDetect, CurrentDetect, InitialOpacity, CurrentOpacity, Custom };

struct PropertySpec {
    PropertyKind kind = PropertyKind::CurrentDetect;
    double eps = 0.0;
    double lam = 0.0;
    double p = 1.0;
    std::shared_ptr<const Region> secret;  // opacity kinds
    ltlf::HyperFormula custom;             // Custom only

    static PropertySpec initial_detect(double eps, double lam, double p);
    static PropertySpec current_detect(double eps, double lam, double p);
    static PropertySpec initial_opacity(double eps, double p, std::shared_ptr<const Region> secret);
    static PropertySpec current_opacity(double eps, double p, std::shared_ptr<const Region> secret);
    static PropertySpec custom_formula(ltlf::HyperFormula h, double p);

    void validate() const;
};

const char* to_string(PropertyKind k);

/// The two-trace formula encoding the property, with secret atoms bound.
ltlf::HyperFormula to_formula(const PropertySpec& spec);

/// max_i ||Ω(s)[i] - Ω(s')[i]||_2 <= eps.
bool indistinguishable(const poss::Poss& model, const poss::Trajectory& s, const poss::Trajectory& s2, double eps);

}  // namespace obscert::hyperprops
