#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "t2sim/common.hpp"

namespace t2sim::memory {

enum class SoftErrorTarget : std::uint8_t { IcacheData, IcacheTag, DcacheData, DcacheTag, Tcm };

std::string_view to_string(SoftErrorTarget t);
std::optional<SoftErrorTarget> parse_soft_error_target(std::string_view text);

// One bit flip. For cache targets `line` selects the line; when it is unset
// the line is chosen as valid_lines[pick % valid_lines.size()] at injection
// time, which is how seeded campaigns land on live data. For TCM, `word` is
// the word index inside `tcm_region` (the first TCM region when empty).
struct SoftErrorInjection {
    SoftErrorTarget target = SoftErrorTarget::IcacheData;
    std::optional<unsigned> line;
    unsigned word = 0;
    unsigned bit = 0;
    std::uint32_t pick = 0;
    std::string tcm_region;
};

struct InjectOutcome {
    bool applied = false;
    unsigned line = 0;      // resolved line (cache targets)
    Address address = 0;    // address of the flipped word (data/TCM targets)
    std::string warning;    // set when nothing was flipped
};

// Seeded generator for campaigns. Uses std::mt19937_64 with a plain modulo
// reduction so a seed replays bit-identically on any build of this code.
class CampaignRng {
public:
    explicit CampaignRng(std::uint64_t seed) : engine_(seed) {}
    std::uint32_t below(std::uint32_t bound) {
        return bound == 0 ? 0 : static_cast<std::uint32_t>(engine_() % bound);
    }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Draws `count` injections against `target`: random pick/word/bit, with TCM
// word indices limited to [0, tcm_words).
std::vector<SoftErrorInjection> generate_campaign(std::uint64_t seed, unsigned count, SoftErrorTarget target,
                                                  unsigned tcm_words = 0);

} // namespace t2sim::memory
