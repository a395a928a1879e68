#include "ltlf/bdd.hpp"

#include <algorithm>
#include <climits>

namespace obscert::ltlf::detail {

Bdd::Bdd() {
    nodes_.push_back({INT_MAX, 0, 0});
    nodes_.push_back({INT_MAX, 1, 1});
}

int Bdd::make(int var, int lo, int hi) {
    if (lo == hi) return lo;
    const Triple key{var, lo, hi};
    if (auto it = unique_.find(key); it != unique_.end()) return it->second;
    nodes_.push_back({var, lo, hi});
    const int id = static_cast<int>(nodes_.size() - 1);
    unique_.emplace(key, id);
    return id;
}

int Bdd::var(int index) { return make(index, kFalse, kTrue); }

int Bdd::cofactor(int f, int var, bool high) const {
    if (top_var(f) != var) return f;
    return high ? nodes_[f].hi : nodes_[f].lo;
}

int Bdd::ite(int f, int g, int h) {
    if (f == kTrue) return g;
    if (f == kFalse) return h;
    if (g == h) return g;
    if (g == kTrue && h == kFalse) return f;
    const Triple key{f, g, h};
    if (auto it = ite_cache_.find(key); it != ite_cache_.end()) return it->second;
    const int v = std::min({top_var(f), top_var(g), top_var(h)});
    const int hi = ite(cofactor(f, v, true), cofactor(g, v, true), cofactor(h, v, true));
    const int lo = ite(cofactor(f, v, false), cofactor(g, v, false), cofactor(h, v, false));
    const int r = make(v, lo, hi);
    ite_cache_.emplace(key, r);
    return r;
}

bool Bdd::eval(int f, const std::vector<char>& assignment) const {
    while (f > kTrue) f = assignment.at(nodes_[f].var) ? nodes_[f].hi : nodes_[f].lo;
    return f == kTrue;
}

}  // namespace obscert::ltlf::detail
