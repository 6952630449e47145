#include "t2sim/memory/flash.hpp"

namespace t2sim::memory {

FlashStream::FlashStream(FlashTiming timing) : timing_(timing) {
    if (timing_.sequential_cycles < 1) throw ConfigError("flash sequential_cycles must be >= 1");
    if (timing_.nonsequential_cycles < timing_.sequential_cycles) {
        throw ConfigError("flash nonsequential_cycles must be >= sequential_cycles");
    }
    if (timing_.fetch_width == 0 || timing_.fetch_width % 2 != 0) {
        throw ConfigError("flash fetch_width must be a positive even number of bytes");
    }
}

FlashStream::Access FlashStream::stream_access(Address addr, unsigned bytes) {
    const unsigned beats = (bytes + timing_.fetch_width - 1) / timing_.fetch_width;
    Access a;
    a.nonsequential = !stream_pos_ || *stream_pos_ != addr;
    a.cycles = (a.nonsequential ? timing_.nonsequential_cycles : timing_.sequential_cycles) +
               Cycles{beats - 1} * timing_.sequential_cycles;
    stream_pos_ = addr + bytes;
    return a;
}

FlashStream::Access FlashStream::fetch(Address addr, unsigned bytes) {
    return stream_access(addr, bytes);
}

FlashStream::Access FlashStream::data_read(Address addr, unsigned bytes) {
    if (!timing_.split_data_port) return stream_access(addr, bytes);
    const unsigned beats = (bytes + timing_.fetch_width - 1) / timing_.fetch_width;
    return {timing_.nonsequential_cycles + Cycles{beats - 1} * timing_.sequential_cycles, true};
}

} // namespace t2sim::memory
