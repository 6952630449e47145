#include "t2sim/mpu/mpu.hpp"

#include <bit>
#include <string>

namespace t2sim::mpu {

CheckResult check_access(const MpuConfig& config, Address addr, unsigned size, AccessKind kind, bool privileged) {
    (void)size; // accesses never cross a word boundary, and regions are at least 32 B aligned
    if (!config.enabled) return {Decision::Allow, std::nullopt};
    for (unsigned i = kRegionCount; i-- > 0;) {
        const auto& r = config.regions[i];
        if (!r.enabled || !r.contains(addr)) continue;
        const Perms& p = privileged ? r.privileged : r.unprivileged;
        return {p.allows(kind) ? Decision::Allow : Decision::PermDenied, i};
    }
    if (privileged && config.background_privileged_allowed) return {Decision::Allow, std::nullopt};
    return {Decision::NoRegion, std::nullopt};
}

void validate_region(const MpuRegion& region) {
    if (region.size < kMinRegionSize || region.size > kMaxRegionSize || !std::has_single_bit(region.size)) {
        throw ConfigError("MPU region size " + std::to_string(region.size) +
                          " must be a power of two between 32 bytes and 4 GiB");
    }
    if (region.base % region.size != 0) {
        throw ConfigError("MPU region base is not aligned to its size");
    }
}

ConfigureOutcome configure_region(MpuConfig& config, unsigned index, const MpuRegion& region, bool privileged_caller) {
    if (index >= kRegionCount) {
        throw ConfigError("MPU region index " + std::to_string(index) + " out of range; there are 8 slots");
    }
    if (!privileged_caller) return ConfigureOutcome::PermDenied;
    validate_region(region);
    config.regions[index] = region;
    return ConfigureOutcome::Ok;
}

} // namespace t2sim::mpu
