#include "t2sim/memory/soft_error.hpp"

#include <array>

#include "t2sim/memory/cache.hpp"

namespace t2sim::memory {

namespace {
constexpr std::array<std::string_view, 5> kNames = {"icache_data", "icache_tag", "dcache_data", "dcache_tag", "tcm"};
} // namespace

std::string_view to_string(SoftErrorTarget t) {
    return kNames[static_cast<unsigned>(t)];
}

std::optional<SoftErrorTarget> parse_soft_error_target(std::string_view text) {
    for (unsigned i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == text) return static_cast<SoftErrorTarget>(i);
    }
    return std::nullopt;
}

std::vector<SoftErrorInjection> generate_campaign(std::uint64_t seed, unsigned count, SoftErrorTarget target,
                                                  unsigned tcm_words) {
    CampaignRng rng(seed);
    std::vector<SoftErrorInjection> out;
    out.reserve(count);
    for (unsigned i = 0; i < count; ++i) {
        SoftErrorInjection inj;
        inj.target = target;
        inj.pick = static_cast<std::uint32_t>(rng.next() >> 32);
        inj.word = target == SoftErrorTarget::Tcm ? rng.below(tcm_words) : rng.below(kLineWords);
        inj.bit = rng.below(32);
        out.push_back(inj);
    }
    return out;
}

} // namespace t2sim::memory
