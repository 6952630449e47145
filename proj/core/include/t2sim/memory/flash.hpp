#pragma once

#include <optional>

#include "t2sim/common.hpp"

namespace t2sim::memory {

struct FlashTiming {
    Cycles sequential_cycles = 1;
    Cycles nonsequential_cycles = 4;
    unsigned fetch_width = 4;     // bytes delivered per flash access
    bool split_data_port = false; // data reads use their own port and never break the fetch stream
};

// Streaming flash interface shared by instruction fetch and (unless the data
// port is split) data reads. An access starting at the stream position costs
// sequential_cycles per beat; any other address restarts the stream.
class FlashStream {
public:
    FlashStream() = default;
    explicit FlashStream(FlashTiming timing);

    struct Access {
        Cycles cycles = 0;
        bool nonsequential = false;
    };

    Access fetch(Address addr, unsigned bytes);
    Access data_read(Address addr, unsigned bytes);

    void reset() { stream_pos_.reset(); }
    std::optional<Address> stream_pos() const { return stream_pos_; }
    const FlashTiming& timing() const { return timing_; }

private:
    Access stream_access(Address addr, unsigned bytes);

    FlashTiming timing_{};
    std::optional<Address> stream_pos_;
};

} // namespace t2sim::memory
