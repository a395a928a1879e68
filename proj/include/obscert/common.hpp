#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace obscert {

using State = std::vector<double>;
using Rng = std::mt19937_64;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Axis-aligned box [lo, hi] in R^d. Degenerate sides (lo == hi) are allowed.
struct Box {
    State lo;
    State hi;

    Box() = default;
    Box(State lo_, State hi_);

    std::size_t dim() const { return lo.size(); }
    bool contains(const State& x) const;
    State center() const;
    double diagonal() const;
};

/// Finite union of axis-aligned boxes. Membership is exact.
struct Region {
    std::vector<Box> boxes;

    Region() = default;
    explicit Region(std::vector<Box> b);

    bool empty() const { return boxes.empty(); }
    std::size_t dim() const;
    bool contains(const State& x) const;
    bool within(const Box& outer) const;
};

double distance(const State& a, const State& b);

/// Independent stream seed for (seed, index); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// 64-bit FNV-1a, used for provenance hashes of configs and artifacts.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Evenly spaced points; a single point maps to the midpoint.
std::vector<double> linspace(double lo, double hi, int n);

/// Tensor grid of points over a box with `per_dim` points on each non-degenerate side.
std::vector<State> box_grid(const Box& box, int per_dim);

/// Runs fn(i) for i in [0, n). Each index writes only its own output, so the
/// result is independent of the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Process-wide default used by parallel maps when callers pass threads <= 0.
void set_default_threads(int threads);
int default_threads();

}  // namespace obscert
