#include "obscert/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace obscert {

ParseError::ParseError(const std::string& what, std::size_t position)
    : Error(what + " (at position " + std::to_string(position) + ")"), position_(position) {}

Box::Box(State lo_, State hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw Error("box bounds have different dimensions");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i])) throw Error("box lower bound exceeds upper bound");
}

bool Box::contains(const State& x) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

State Box::center() const {
    State c(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
}

double Box::diagonal() const { return distance(lo, hi); }

Region::Region(std::vector<Box> b) : boxes(std::move(b)) {
    for (const auto& box : boxes)
        if (box.dim() != boxes.front().dim()) throw Error("region boxes have different dimensions");
}

std::size_t Region::dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }

bool Region::contains(const State& x) const {
    return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(x); });
}

bool Region::within(const Box& outer) const {
    for (const auto& b : boxes)
        if (!outer.contains(b.lo) || !outer.contains(b.hi)) return false;
    return true;
}

double distance(const State& a, const State& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over a combination of both inputs
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n <= 0) throw Error("linspace needs at least one point");
    if (n == 1 || lo == hi) return {0.5 * (lo + hi)};
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return out;
}

std::vector<State> box_grid(const Box& box, int per_dim) {
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < box.dim(); ++i) axes.push_back(linspace(box.lo[i], box.hi[i], per_dim));
    std::vector<State> out{State{}};
    for (const auto& axis : axes) {
        std::vector<State> next;
        next.reserve(out.size() * axis.size());
        for (const auto& prefix : out)
            for (double v : axis) {
                State s = prefix;
                s.push_back(v);
                next.push_back(std::move(s));
            }
        out = std::move(next);
    }
    return out;
}

namespace {
std::atomic<int> g_threads{1};
}

void set_default_threads(int threads) { g_threads = std::max(1, threads); }
int default_threads() { return g_threads; }

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) threads = default_threads();
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (int k = 0; k < threads; ++k)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace obscert
