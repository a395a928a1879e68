#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "obscert/common.hpp"

namespace obscert::trainer {

/// Parameter and gradient storage. A fixed base alignment keeps the
/// vectorized kernels on the same code path from run to run.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Input layout: normalized x1, normalized x2, one-hot q, t/T. With
/// successor_q the one-hot holds δ(q, L(x1, x2)) instead of q.
struct MlpLayout {
    int state_dim = 1;
    int num_q = 1;
    std::vector<int> hidden{64, 64, 32};
    double slope = 0.01;  // LeakyReLU negative slope
    bool successor_q = false;

    int input_dim() const { return 2 * state_dim + num_q + 1; }
    bool operator==(const MlpLayout&) const = default;
};

/// Scalar-output multilayer perceptron with flat parameter storage. Per layer
/// the weight matrix (out x in, column-major) is followed by the bias.
class Mlp {
public:
    using Matrix = Eigen::MatrixXd;
    using Row = Eigen::RowVectorXd;

    struct Tape {
        std::vector<Matrix> pre;  // pre-activations per layer
        std::vector<Matrix> act;  // act[0] is the input
    };

    Mlp() = default;
    explicit Mlp(MlpLayout layout);

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero biases.
    static Mlp xavier(MlpLayout layout, std::uint64_t seed);

    const MlpLayout& layout() const { return layout_; }
    std::size_t num_params() const { return params_.size(); }
    ParamVector& params() { return params_; }
    const ParamVector& params() const { return params_; }
    int num_layers() const { return static_cast<int>(shapes_.size()); }

    /// Weight and bias views of layer k (output layer last).
    Eigen::Map<const Matrix> weight(int k) const;
    Eigen::Map<const Eigen::VectorXd> bias(int k) const;
    Eigen::Map<Matrix> weight(int k);
    Eigen::Map<Eigen::VectorXd> bias(int k);

    /// Writes the input column for (x1, x2, q, t).
    void encode(const Box& domain, int horizon, const State& x1, const State& x2, int q, int t,
                double* out) const;

    double forward(const double* input) const;
    Row forward(const Matrix& inputs) const;  // one column per sample
    Row forward(const Matrix& inputs, Tape& tape) const;

    /// Adds d(sum_j gout_j * out_j)/d params to grad.
    void backward(const Tape& tape, const Row& gout, ParamVector& grad) const;

    /// Throws NumericError when any parameter is non-finite.
    void check_finite() const;

private:
    struct Shape {
        int in, out;
        std::size_t w, b;  // offsets
    };
    MlpLayout layout_;
    std::vector<Shape> shapes_;
    ParamVector params_;
};

}  // namespace obscert::trainer
