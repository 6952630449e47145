#include "t2sim/memory/cache.hpp"

#include <bit>

namespace t2sim::memory {

Cache::Cache(CacheConfig config) : config_(config) {
    if (config_.line_count == 0 || !std::has_single_bit(config_.line_count)) {
        throw ConfigError("cache line_count must be a power of two");
    }
    lines_.assign(config_.line_count, CacheLine{});
}

bool Cache::holds(Address addr) const {
    if (lines_.empty()) return false;
    const auto& l = lines_[index_of(addr)];
    return l.valid && l.tag == tag_of(addr);
}

void Cache::fill(unsigned index, std::uint32_t tag, const std::array<Word, kLineWords>& data) {
    auto& l = lines_[index];
    l.valid = true;
    l.tag = tag;
    l.data = data;
    l.tag_parity = false;
    l.word_parity = 0;
}

void Cache::invalidate_all() {
    for (auto& l : lines_) l = CacheLine{};
}

std::vector<unsigned> Cache::valid_lines() const {
    std::vector<unsigned> out;
    for (unsigned i = 0; i < lines_.size(); ++i) {
        if (lines_[i].valid) out.push_back(i);
    }
    return out;
}

} // namespace t2sim::memory
