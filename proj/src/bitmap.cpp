#include "bitmap.hpp"

#include <cmath>

namespace smacs {

Bitmap::Bitmap(std::size_t bit_count) : size_(bit_count) {
    if (bit_count == 0) throw Error("InvalidSize", "bitmap needs at least one bit");
    words_.assign((bit_count + 63) / 64, 0);
    start_ = 0;
    end_ = bit_count - 1;
    start_ptr_ = 0;
    end_ptr_ = bit_count - 1;
}

std::uint64_t Bitmap::required_bits(double token_lifetime_s, double max_tx_per_s) {
    if (token_lifetime_s <= 0 || max_tx_per_s <= 0)
        throw Error("InvalidSize", "lifetime and rate must be positive");
    double product = token_lifetime_s * max_tx_per_s;
    double nearest = std::round(product);
    // Guard against binary representation drift on decimal inputs.
    if (std::abs(product - nearest) < 1e-6) return static_cast<std::uint64_t>(nearest);
    return static_cast<std::uint64_t>(std::ceil(product));
}

bool Bitmap::bit(std::size_t pos) const { return (words_[pos / 64] >> (pos % 64)) & 1; }

void Bitmap::set_bit(std::size_t pos, bool value) {
    std::uint64_t mask = std::uint64_t{1} << (pos % 64);
    if (value)
        words_[pos / 64] |= mask;
    else
        words_[pos / 64] &= ~mask;
}

std::optional<std::size_t> Bitmap::seek(std::uint64_t i) const {
    std::uint64_t distance = i - end_;  // pre: end < i <= end + n
    if (distance >= size_) return std::nullopt;
    return (start_ptr_ + static_cast<std::size_t>(distance)) % size_;
}

bool Bitmap::check_and_mark(std::uint64_t index) {
    if (index < start_) return false;  // behind the window: miss or long used

    if (index <= end_) {
        std::size_t pos = (start_ptr_ + static_cast<std::size_t>(index - start_)) % size_;
        if (bit(pos)) return false;
        set_bit(pos, true);
        return true;
    }

    if (index <= end_ + size_) {
        std::optional<std::size_t> landing = seek(index);
        if (!landing) {
            // Full rotation: no tracked index survives.
            words_.assign(words_.size(), 0);
            start_ptr_ = 0;
        } else {
            // Clear the traversed cells; their indexes leave the window.
            for (std::size_t p = start_ptr_; p != *landing; p = (p + 1) % size_)
                set_bit(p, false);
            start_ptr_ = *landing;
        }
        end_ptr_ = (start_ptr_ + size_ - 1) % size_;
        end_ = index;
        start_ = end_ - size_ + 1;
        set_bit(end_ptr_, true);
        return true;
    }

    // Reset when the index is far ahead of the window.
    words_.assign(words_.size(), 0);
    start_ptr_ = 0;
    end_ptr_ = size_ - 1;
    start_ = index;
    end_ = index + size_ - 1;
    set_bit(start_ptr_, true);
    return true;
}

std::string Bitmap::bits_hex() const {
    bytes packed((size_ + 7) / 8, 0);
    for (std::size_t p = 0; p < size_; ++p)
        if (bit(p)) packed[p / 8] |= static_cast<byte>(0x80 >> (p % 8));
    return to_hex(packed);
}

Bitmap Bitmap::restore(std::size_t bit_count, const std::string& bits_hex,
                       std::uint64_t start, std::size_t start_ptr) {
    Bitmap b(bit_count);
    bytes packed = from_hex(bits_hex);
    if (packed.size() != (bit_count + 7) / 8)
        throw Error("Malformed", "bitmap hex length does not match bit count");
    for (std::size_t p = 0; p < bit_count; ++p)
        b.set_bit(p, (packed[p / 8] >> (7 - p % 8)) & 1);
    if (start_ptr >= bit_count) throw Error("Malformed", "start_ptr outside the bitmap");
    b.start_ = start;
    b.end_ = start + bit_count - 1;
    b.start_ptr_ = start_ptr;
    b.end_ptr_ = (start_ptr + bit_count - 1) % bit_count;
    return b;
}

}  // namespace smacs
