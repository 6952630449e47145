#include "t2sim/memory/fpb.hpp"

#include <string>

namespace t2sim::memory {

void FlashPatchUnit::configure(unsigned entry, const FpbEntry& config) {
    if (entry >= kFpbEntries) {
        throw ConfigError("FPB entry " + std::to_string(entry) + " out of range; the unit has " +
                          std::to_string(kFpbEntries) + " comparators");
    }
    if (config.match_address % 4 != 0) throw ConfigError("FPB match address must be word aligned");
    for (unsigned i = 0; i < kFpbEntries; ++i) {
        if (i != entry && entries_[i] && entries_[i]->match_address == config.match_address) {
            throw ConfigError("FPB match address already used by entry " + std::to_string(i));
        }
    }
    entries_[entry] = config;
}

void FlashPatchUnit::clear(unsigned entry) {
    if (entry >= kFpbEntries) throw ConfigError("FPB entry out of range");
    entries_[entry].reset();
}

unsigned FlashPatchUnit::enabled_count() const {
    unsigned n = 0;
    for (const auto& e : entries_) n += e ? 1 : 0;
    return n;
}

const FpbEntry* FlashPatchUnit::lookup(Address addr) const {
    const Address word = addr & ~Address{3};
    for (const auto& e : entries_) {
        if (e && e->match_address == word) return &*e;
    }
    return nullptr;
}

bool FlashPatchUnit::breakpoint_at(Address insn_addr) const {
    for (const auto& e : entries_) {
        if (e && e->mode == FpbMode::Breakpoint && e->match_address == insn_addr) return true;
    }
    return false;
}

} // namespace t2sim::memory
