#pragma once

#include <memory>
#include <string>

#include "obscert/oracle/grid.hpp"
#include "obscert/trainer/mlp.hpp"

namespace obscert::certify {

enum class CertMode { Universal, Existential };
enum class Backing { Table, Mlp };

const char* to_string(CertMode m);
const char* to_string(Backing b);

/// Terminal-reach barrier certificate V(v, t) with constants alpha and beta.
///
/// Off-sink values: TABLE gives max(u_t(v) - margin, 0) by multilinear
/// interpolation (the exact accepting indicator at t = T); MLP gives the
/// network output. Both then subtract `offset`. A sink that left with
/// automaton state q evaluates to c_t with c_T = sink_value(q) and
/// c_{t-1} = alpha (c_t - beta), so it meets the recursion with equality.
struct Certificate {
    Backing backing = Backing::Table;
    CertMode mode = CertMode::Universal;
    double alpha = 1.0;
    double beta = 0.0;
    double offset = 0.0;
    double margin = 0.0;  // TABLE only
    int state_dim = 1;
    int num_q = 1;
    int horizon = 1;
    std::string dfa_hash;
    Box domain;
    std::shared_ptr<const oracle::ValueTable> table;
    std::shared_ptr<const trainer::Mlp> mlp;

    void validate() const;
};

CertMode mode_for(ltlf::Quantifier q);

/// Structure-compatible empty certificate header (no backing).
Certificate blank_certificate(const product::VerificationStructure& vs, Backing backing);

Certificate constant_certificate(const product::VerificationStructure& vs, double value);

/// Throws when the certificate does not fit the structure.
void check_compatible(const Certificate& cert, const product::VerificationStructure& vs);

double sink_certificate_value(const Certificate& cert, double terminal, int t);

/// Automaton index fed to the network for (x1, x2, q).
int network_q(const trainer::MlpLayout& layout, const product::VerificationStructure& vs, const State& x1,
              const State& x2, int q);

double eval_certificate(const Certificate& cert, const product::VerificationStructure& vs,
                        const product::ProductState& v, int t);

/// eval_certificate over many states at a common time; one network pass for MLP backings.
std::vector<double> eval_certificate_batch(const Certificate& cert, const product::VerificationStructure& vs,
                                           const std::vector<product::ProductState>& vs_states, int t);

/// Versioned JSON; a TABLE backing is written next to it as <path>.table.bin.
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

}  // namespace obscert::certify
