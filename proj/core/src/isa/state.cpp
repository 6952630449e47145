#include "t2sim/isa/state.hpp"

namespace t2sim::isa {

CondCode ItState::current_cond() const {
    return current_slot() == ItSlot::Then ? base_cond : invert(base_cond);
}

void ItState::advance() {
    if (!active) return;
    if (remaining > 0) --remaining;
    if (remaining == 0) *this = ItState{};
}

Word pack_status(const Flags& f, const ItState& it) {
    Word w = 0;
    w |= (f.n ? 1u : 0u) << 31;
    w |= (f.z ? 1u : 0u) << 30;
    w |= (f.c ? 1u : 0u) << 29;
    w |= (f.v ? 1u : 0u) << 28;
    if (it.active) {
        w |= (static_cast<Word>(it.base_cond) & 0xFu) << 24;
        w |= (static_cast<Word>(it.else_bits) & 0xFu) << 20;
        w |= (static_cast<Word>(it.count) & 0x7u) << 17;
        w |= (static_cast<Word>(it.remaining) & 0x7u) << 14;
    }
    return w;
}

void unpack_status(Word w, Flags& f, ItState& it) {
    f.n = (w >> 31) & 1u;
    f.z = (w >> 30) & 1u;
    f.c = (w >> 29) & 1u;
    f.v = (w >> 28) & 1u;
    it = ItState{};
    const auto remaining = static_cast<std::uint8_t>((w >> 14) & 0x7u);
    if (remaining != 0) {
        it.active = true;
        it.base_cond = static_cast<CondCode>((w >> 24) & 0xFu);
        it.else_bits = static_cast<std::uint8_t>((w >> 20) & 0xFu);
        it.count = static_cast<std::uint8_t>((w >> 17) & 0x7u);
        it.remaining = remaining;
    }
}

} // namespace t2sim::isa
