#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "util.hpp"

namespace smacs {

/// Cyclic anti-replay window over one-time token indexes. The n cells track
/// the used/unused status of indexes start..end (end = start + n - 1); the
/// cell of index i is (start_ptr + i - start) mod n. Accepting an index ahead
/// of the window slides it forward, clearing exactly the cells whose indexes
/// fall behind; an index more than n ahead of the window resets the map.
class Bitmap {
public:
    explicit Bitmap(std::size_t bit_count);  // InvalidSize when 0

    /// Bits needed to never reject an unused, unexpired token:
    /// ceil(token_lifetime * max_tx_per_second).
    static std::uint64_t required_bits(double token_lifetime_s, double max_tx_per_s);

    /// Accepts the index at most once. Returns false for indexes behind the
    /// window (token miss) or already marked; otherwise marks and returns
    /// true, sliding or resetting the window as needed. Total for all i.
    bool check_and_mark(std::uint64_t index);

    /// Cell where the window start lands after accepting index i
    /// (end < i <= end + n): the position at cyclic distance i - end from
    /// start_ptr. Empty when i - end = n, meaning every tracked index leaves
    /// the window and the caller resets.
    std::optional<std::size_t> seek(std::uint64_t i) const;

    std::uint64_t start() const { return start_; }
    std::uint64_t end() const { return end_; }
    std::size_t start_ptr() const { return start_ptr_; }
    std::size_t end_ptr() const { return end_ptr_; }
    std::size_t size() const { return size_; }
    bool bit(std::size_t pos) const;

    /// Packed cell array, cell 0 in the high bit of the first hex byte.
    std::string bits_hex() const;
    static Bitmap restore(std::size_t bit_count, const std::string& bits_hex,
                          std::uint64_t start, std::size_t start_ptr);

    bool operator==(const Bitmap&) const = default;

private:
    void set_bit(std::size_t pos, bool value);

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
    std::uint64_t start_ = 0;
    std::uint64_t end_ = 0;
    std::size_t start_ptr_ = 0;
    std::size_t end_ptr_ = 0;
};

}  // namespace smacs
