#pragma once

// Test-only reference model for the anti-replay window: an explicit set of
// used indexes plus the window start. Mirrors the update rules directly so
// the packed cyclic implementation can be checked against it.
#include <cstdint>
#include <set>

namespace smacs::testing {

struct NaiveWindow {
    std::uint64_t n;
    std::uint64_t start = 0;
    std::set<std::uint64_t> used;

    explicit NaiveWindow(std::uint64_t bits) : n(bits) {}

    std::uint64_t end() const { return start + n - 1; }

    bool check_and_mark(std::uint64_t i) {
        if (i < start) return false;
        if (i <= end()) {
            if (used.count(i)) return false;
            used.insert(i);
            return true;
        }
        if (i <= end() + n) {
            // Slide: the window ends at i; indexes behind it are forgotten.
            start = i - n + 1;
            used.erase(used.begin(), used.lower_bound(start));
            used.insert(i);
            return true;
        }
        // Far ahead: reset with the window starting at i.
        start = i;
        used.clear();
        used.insert(i);
        return true;
    }

    bool operator<(const NaiveWindow& o) const {
        if (n != o.n) return n < o.n;
        if (start != o.start) return start < o.start;
        return used < o.used;
    }
};

}  // namespace smacs::testing
